//! Filter outcomes of the documented generated-question exemplars.

#[path = "support/filter.rs"]
mod rows;

use cultalign_core::forge::{FilterVerdict, RejectReason};
use rows::{inconsistent_format_row, option_mismatch_row, retained_rows, verdict};

#[test]
fn retained_rows_accepted() {
    for (topic, q, opts) in retained_rows() {
        assert_eq!(verdict(topic, q, &opts), FilterVerdict::Accept, "{q}");
    }
}

#[test]
fn mismatched_options_rejected() {
    let (t, q, o) = option_mismatch_row();
    assert_eq!(verdict(t, q, &o), FilterVerdict::Reject(RejectReason::OptionMismatch));
}

#[test]
fn inconsistent_option_format_rejected() {
    let (t, q, o) = inconsistent_format_row();
    assert_eq!(verdict(t, q, &o), FilterVerdict::Reject(RejectReason::OptionFormatInconsistent));
}
