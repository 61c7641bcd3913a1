//! Dry-run accounting of a full pipeline: how many generation slots and
//! harvest output sets and calls a configuration implies, without calling
//! any backend.

use crate::survey::TOPIC_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunShape {
    pub per_topic: usize,
    pub topics: usize,
    pub cultures: usize,
}

impl RunShape {
    /// All survey topics.
    pub fn new(per_topic: usize, cultures: usize) -> Self {
        Self { per_topic, topics: usize::from(TOPIC_COUNT), cultures }
    }

    /// Questions to generate across all topics.
    pub fn generation_slots(&self) -> usize {
        self.per_topic * self.topics
    }

    /// One unaware output set plus one aware set per culture.
    pub fn harvest_output_sets(&self) -> usize {
        1 + self.cultures
    }

    /// Answer requests before parse retries.
    pub fn harvest_calls(&self) -> usize {
        self.generation_slots() * self.harvest_output_sets()
    }

    /// Upper bound on generation calls (4 per target question).
    pub fn max_generation_calls(&self) -> usize {
        crate::forge::ITERATION_CAP_FACTOR * self.generation_slots()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_scale() {
        let s = RunShape::new(10, 4);
        assert_eq!(s.generation_slots(), 130);
        assert_eq!(s.harvest_output_sets(), 5);
        assert_eq!(s.harvest_calls(), 650);
        assert_eq!(s.max_generation_calls(), 520);
    }
}
