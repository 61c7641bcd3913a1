#[path = "support/prompts.rs"]
mod fixtures;

use cultalign_core::prompt::{render, render_generation};
use cultalign_core::{CultureRegistry, PromptStrategy, StrategyKind};
use fixtures::{expected_p2_systems, generation_examples, golden, q46, rendered};

#[test]
fn unaware_matches_golden() {
    assert_eq!(rendered(StrategyKind::Unaware, None), golden("unaware_q46.txt"));
}

#[test]
fn p1_matches_golden() {
    assert_eq!(rendered(StrategyKind::P1, Some("CHN")), golden("p1_chn_q46.txt"));
}

#[test]
fn p2_matches_golden() {
    assert_eq!(rendered(StrategyKind::P2, Some("USA")), golden("p2_usa_q46.txt"));
}

#[test]
fn p3_matches_golden() {
    assert_eq!(rendered(StrategyKind::P3, Some("USA")), golden("p3_q46.txt"));
}

#[test]
fn p1p3_matches_golden() {
    assert_eq!(rendered(StrategyKind::P1P3, Some("IND")), golden("p1p3_ind_q46.txt"));
}

#[test]
fn p2p3_matches_golden() {
    assert_eq!(rendered(StrategyKind::P2P3, Some("KEN")), golden("p2p3_ken_q46.txt"));
}

#[test]
fn generation_matches_golden() {
    let examples = generation_examples();
    let got = render_generation("Happiness and Well-being", &examples).unwrap().to_sectioned();
    assert_eq!(got, golden("generate_topic2.txt"));
}

#[test]
fn related_culture_substitutions_for_all_cultures() {
    let rows = expected_p2_systems();
    assert_eq!(rows.len(), 18);
    let reg = CultureRegistry::builtin();
    for (code, expected) in rows {
        let strategy = PromptStrategy::new(StrategyKind::P2, Some(reg.lookup(&code).unwrap()), &reg, None).unwrap();
        assert_eq!(render(&strategy, &q46()).unwrap().system_prompt, expected, "{code}");
    }
}

#[test]
fn usa_spot_check() {
    let reg = CultureRegistry::builtin();
    let usa = reg.lookup("USA").unwrap();
    let codes = |v: &[cultalign_core::CultureCode; 3]| v.iter().map(|c| c.as_str().to_string()).collect::<Vec<_>>();
    assert_eq!(codes(&usa.cct_similar), ["CAN", "GBR", "NZL"]);
    assert_eq!(codes(&usa.cct_different), ["ZWE", "NGA", "IND"]);
}
