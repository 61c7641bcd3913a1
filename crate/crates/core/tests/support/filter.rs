//! Generated-question exemplars with their documented filter outcome.

#![allow(dead_code)]

use cultalign_core::forge::{filter_question, parse_question_json, FilterVerdict, QuestionPool};
use serde_json::json;

pub fn verdict(topic: u8, question: &str, options: &serde_json::Value) -> FilterVerdict {
    let raw = json!({ "Question": question, "Options": options }).to_string();
    let q = parse_question_json(&raw).unwrap().into_question("X", topic).unwrap();
    filter_question(&q, &QuestionPool::default())
}

/// Rows the filter keeps.
pub fn retained_rows() -> Vec<(u8, &'static str, serde_json::Value)> {
    vec![
        (1, "When encountering someone from a different cultural background, how willing are you to try to learn about and understand their customs and traditions?",
            json!(["1.Very willing", "2.Somewhat willing", "3.Not very willing", "4.Not at all willing"])),
        (2, "When you think about the things that bring you joy and fulfillment, how often do you prioritize these aspects of your life over more practical considerations, such as work or financial security?",
            json!(["1.Almost never", "2.Rarely", "3.Sometimes", "4.Often", "5.Almost always"])),
        (3, "How often do you trust that the decisions made by the organizations you are a member of align with your own values and goals?",
            json!(["1.Always", "2.Mostly", "3.Sometimes ", "4.Rarely ", "5.Never"])),
        (4, "When considering the benefits and drawbacks of technological advancements in the workplace, how important is it to you that these changes lead to increased income inequality?",
            json!(["1.Not important at all", "2.Somewhat unimportant", "3.Neutral", "4.Somewhat important", "5.Very important", "6.Extremely important"])),
        (5, "When dealing with public services, to what extent do you agree with the idea that it's common for officials to use their position for personal gain, on a scale from 1 (strongly disagree) to 5 (strongly agree)?",
            json!([1, 2, 3, 4, 5])),
        (6, "Should governments prioritize the integration of migrant workers into the local culture and society, or prioritize their ability to maintain their own cultural identity?",
            json!(["1.The former ", "2.The latter ", "3.Both equally important"])),
        (7, "To what extent do you agree with the statement: 'The government should invest more in cybersecurity to protect citizens' personal data and online security'?",
            json!(["1.Strongly agree", "2.Somewhat agree", "3.Neither agree nor disagree", "4.Somewhat disagree", "5.Strongly disagree"])),
        (10, "When faced with moral dilemmas, do you primarily rely on your own moral compass, religious teachings, or the values and beliefs of your community?",
            json!(["1.My own moral compass", "2.Religious teachings ", "3.Values and beliefs of my community"])),
        (11, "Do you think that individuals have a moral obligation to reduce their carbon footprint, even if it means significant changes to their lifestyle, or not?",
            json!(["Strongly disagree", "1.Somewhat disagree", "2.Neither agree nor disagree", "3.Somewhat agree", "4.Strongly agree"])),
        (12, "How satisfied are you with the opportunities available for citizens to participate in the political decision-making process in your country?",
            json!(["1.Very satisfied", "2.Fairly satisfied", "3.Not very satisfied", "4.Not at all satisfied"])),
    ]
}

/// Bare numeric options that do not match the question: error 1.
pub fn option_mismatch_row() -> (u8, &'static str, serde_json::Value) {
    (
        11,
        "Do you think that companies prioritizing profits over social responsibility can always be justified?",
        json!([1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
    )
}

/// Mixed labeled and bare options: error 2.
pub fn inconsistent_format_row() -> (u8, &'static str, serde_json::Value) {
    (
        11,
        "How much do you think people should be able to hold public officials accountable for their actions?",
        json!(["1 - Not at all important", "2 ", "3", "4", "5 - Very important ", "6 - Extremely important"]),
    )
}
