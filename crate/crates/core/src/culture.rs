//! Culture identities and the related-culture table used by cross-culture
//! thinking prompts.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CultureError {
    InvalidCode(String),
    SelfReference(CultureCode),
    Overlap { culture: CultureCode, other: CultureCode },
    Duplicate(CultureCode),
    Unresolved { culture: CultureCode, missing: CultureCode },
    Unknown(String),
}

impl fmt::Display for CultureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidCode(s) => write!(f, "invalid culture code {s:?}: expected three ASCII capitals"),
            Self::SelfReference(c) => write!(f, "culture {c} lists itself as a related culture"),
            Self::Overlap { culture, other } => {
                write!(f, "culture {culture} lists {other} as both similar and different")
            }
            Self::Duplicate(c) => write!(f, "duplicate culture profile {c}"),
            Self::Unresolved { culture, missing } => {
                write!(f, "culture {culture} references unknown culture {missing}")
            }
            Self::Unknown(c) => write!(f, "unknown culture code {c:?}"),
        }
    }
}

impl core::error::Error for CultureError {}

/// ISO 3166-1 alpha-3 country code.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CultureCode([u8; 3]);

impl CultureCode {
    pub fn new(s: &str) -> Result<Self, CultureError> {
        let b = s.as_bytes();
        if b.len() != 3 || !b.iter().all(u8::is_ascii_uppercase) {
            return Err(CultureError::InvalidCode(s.to_string()));
        }
        Ok(Self([b[0], b[1], b[2]]))
    }

    pub fn as_str(&self) -> &str {
        // constructor guarantees ASCII
        core::str::from_utf8(&self.0).unwrap_or("???")
    }
}

impl FromStr for CultureCode {
    type Err = CultureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for CultureCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CultureCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CultureCode({})", self.as_str())
    }
}

impl Serialize for CultureCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CultureCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::new(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Continent {
    America,
    Europe,
    Asia,
    Africa,
    Oceania,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct CultureProfile {
    pub code: CultureCode,
    /// Adjective used in prompts, e.g. "American".
    pub demonym: String,
    pub continent: Continent,
    pub cct_similar: [CultureCode; 3],
    pub cct_different: [CultureCode; 3],
}

#[derive(Deserialize)]
struct RawProfile {
    code: CultureCode,
    demonym: String,
    continent: Continent,
    cct_similar: [CultureCode; 3],
    cct_different: [CultureCode; 3],
}

impl TryFrom<RawProfile> for CultureProfile {
    type Error = CultureError;
    fn try_from(r: RawProfile) -> Result<Self, Self::Error> {
        CultureProfile::new(r.code, r.demonym, r.continent, r.cct_similar, r.cct_different)
    }
}

impl CultureProfile {
    pub fn new(
        code: CultureCode,
        demonym: String,
        continent: Continent,
        cct_similar: [CultureCode; 3],
        cct_different: [CultureCode; 3],
    ) -> Result<Self, CultureError> {
        for c in cct_similar.iter().chain(cct_different.iter()) {
            if *c == code {
                return Err(CultureError::SelfReference(code));
            }
        }
        if let Some(other) = cct_similar.iter().find(|c| cct_different.contains(c)) {
            return Err(CultureError::Overlap { culture: code, other: *other });
        }
        Ok(Self { code, demonym, continent, cct_similar, cct_different })
    }

    /// Indefinite article for the demonym ("an American", "a Ukrainian").
    pub fn article(&self) -> &'static str {
        indefinite_article(&self.demonym)
    }
}

pub fn indefinite_article(word: &str) -> &'static str {
    // vowel letters that are pronounced with a leading "y"/"w" sound
    const CONSONANT_SOUND: [&str; 5] = ["Uk", "Eu", "Uni", "Uru", "Uz"];
    let first = word.chars().next().map(|c| c.to_ascii_uppercase());
    match first {
        Some('A' | 'E' | 'I' | 'O' | 'U') if !CONSONANT_SOUND.iter().any(|p| word.starts_with(p)) => "an",
        _ => "a",
    }
}

/// (code, demonym, continent, similar, different)
type Row = (&'static str, &'static str, Continent, [&'static str; 3], [&'static str; 3]);

/// The 18 cultures used throughout the pipeline, in reporting order, with
/// their similar/different cultures for cross-culture thinking.
const BUILTIN: [Row; 18] = [
    ("USA", "American", Continent::America, ["CAN", "GBR", "NZL"], ["ZWE", "NGA", "IND"]),
    ("CAN", "Canadian", Continent::America, ["NLD", "AUS", "GBR"], ["NGA", "ZWE", "KEN"]),
    ("BOL", "Bolivian", Continent::America, ["ZWE", "IND", "UKR"], ["NZL", "AUS", "GBR"]),
    ("BRA", "Brazilian", Continent::America, ["USA", "UKR", "KEN"], ["IND", "ZWE", "NGA"]),
    ("GBR", "British", Continent::Europe, ["CAN", "NLD", "AUS"], ["ZWE", "NGA", "ETH"]),
    ("NLD", "Dutch", Continent::Europe, ["CAN", "AUS", "GBR"], ["NGA", "ZWE", "KEN"]),
    ("DEU", "German", Continent::Europe, ["AUS", "NZL", "NLD"], ["ZWE", "NGA", "KEN"]),
    ("UKR", "Ukrainian", Continent::Europe, ["RUS", "ETH", "CHN"], ["NZL", "NLD", "AUS"]),
    ("CHN", "Chinese", Continent::Asia, ["RUS", "UKR", "ETH"], ["BRA", "NZL", "GBR"]),
    ("RUS", "Russian", Continent::Asia, ["UKR", "CHN", "ETH"], ["NZL", "NLD", "AUS"]),
    ("IND", "Indian", Continent::Asia, ["UKR", "BOL", "CHN"], ["GBR", "NZL", "NLD"]),
    ("THA", "Thai", Continent::Asia, ["UKR", "CHN", "BOL"], ["AUS", "NLD", "NZL"]),
    ("KEN", "Kenyan", Continent::Africa, ["UKR", "ETH", "NGA"], ["NZL", "NLD", "AUS"]),
    ("NGA", "Nigerian", Continent::Africa, ["ZWE", "ETH", "KEN"], ["NZL", "NLD", "AUS"]),
    ("ETH", "Ethiopian", Continent::Africa, ["UKR", "CHN", "ZWE"], ["NZL", "NLD", "AUS"]),
    ("ZWE", "Zimbabwean", Continent::Africa, ["BOL", "NGA", "ETH"], ["NZL", "NLD", "AUS"]),
    ("AUS", "Australian", Continent::Oceania, ["NZL", "NLD", "CAN"], ["ZWE", "NGA", "KEN"]),
    ("NZL", "New Zealand", Continent::Oceania, ["AUS", "NLD", "CAN"], ["ZWE", "NGA", "ETH"]),
];

/// An ordered, validated set of culture profiles in which every related
/// culture resolves to a member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CultureRegistry {
    profiles: Vec<CultureProfile>,
}

impl CultureRegistry {
    pub fn new(profiles: Vec<CultureProfile>) -> Result<Self, CultureError> {
        for (i, p) in profiles.iter().enumerate() {
            if profiles[..i].iter().any(|q| q.code == p.code) {
                return Err(CultureError::Duplicate(p.code));
            }
        }
        for p in &profiles {
            for c in p.cct_similar.iter().chain(p.cct_different.iter()) {
                if !profiles.iter().any(|q| q.code == *c) {
                    return Err(CultureError::Unresolved { culture: p.code, missing: *c });
                }
            }
        }
        Ok(Self { profiles })
    }

    pub fn builtin() -> Self {
        let code = |s: &str| CultureCode::new(s).expect("builtin code");
        let profiles = BUILTIN
            .iter()
            .map(|(c, demonym, continent, sim, diff)| {
                CultureProfile::new(code(c), demonym.to_string(), *continent, sim.map(code), diff.map(code))
                    .expect("builtin profile")
            })
            .collect();
        Self::new(profiles).expect("builtin registry")
    }

    pub fn get(&self, code: CultureCode) -> Option<&CultureProfile> {
        self.profiles.iter().find(|p| p.code == code)
    }

    pub fn lookup(&self, code: &str) -> Result<&CultureProfile, CultureError> {
        CultureCode::new(code).ok().and_then(|c| self.get(c)).ok_or_else(|| CultureError::Unknown(code.to_string()))
    }

    pub fn profiles(&self) -> &[CultureProfile] {
        &self.profiles
    }

    pub fn codes(&self) -> impl Iterator<Item = CultureCode> + '_ {
        self.profiles.iter().map(|p| p.code)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Demonyms of the similar and different cultures of `code`.
    pub fn related_demonyms(&self, code: CultureCode) -> Option<([&str; 3], [&str; 3])> {
        let p = self.get(code)?;
        let name = |c: &CultureCode| self.get(*c).map(|q| q.demonym.as_str());
        let sim = [name(&p.cct_similar[0])?, name(&p.cct_similar[1])?, name(&p.cct_similar[2])?];
        let diff = [name(&p.cct_different[0])?, name(&p.cct_different[1])?, name(&p.cct_different[2])?];
        Some((sim, diff))
    }
}
