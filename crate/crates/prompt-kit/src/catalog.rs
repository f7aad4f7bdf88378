//! The embedded template catalog.
//!
//! Each file under `templates/` is one prompt block. Files are normalized at
//! load: CRLF collapsed to LF, trailing whitespace stripped, so rendered
//! bytes are identical across platforms.

use crate::PromptError;
use std::collections::BTreeMap;
use std::sync::LazyLock;

macro_rules! catalog_entries {
    ($($name:literal),+ $(,)?) => {
        [$(($name, include_str!(concat!("../templates/", $name, ".txt")))),+]
    };
}

const RAW: [(&str, &str); 51] = catalog_entries![
    "environment_plain",
    "environment_emotion_affect",
    "environment_emotion_prior",
    "final_instruction",
    "general_basic",
    "general_emotion_after_rules",
    "round_question_1",
    "round_question_2",
    "memory_update",
    "emotion_update",
    "emotion_probe",
    "outer_emotion_update",
    "outer_emotion_probe",
    "opponent_emotion_update",
    "rules_prisoners_dilemma",
    "rules_battle_of_sexes",
    "rules_dictator",
    "rules_dictator_emotion",
    "summary_dictator",
    "rules_ultimatum_proposer",
    "rules_ultimatum_proposer_emotion",
    "summary_ultimatum_proposer",
    "rules_ultimatum_responder",
    "rules_ultimatum_responder_emotion",
    "summary_ultimatum_responder",
    "offer_message",
    "scratchpad",
    "scratchpad_bargain",
    "emotions/anger_simple",
    "emotions/anger_coplayer",
    "emotions/anger_external",
    "emotions/disgust_simple",
    "emotions/disgust_coplayer",
    "emotions/disgust_external",
    "emotions/fear_simple",
    "emotions/fear_coplayer",
    "emotions/fear_external",
    "emotions/happiness_simple",
    "emotions/happiness_coplayer",
    "emotions/happiness_external",
    "emotions/sadness_simple",
    "emotions/sadness_coplayer",
    "emotions/sadness_external",
    "emotions/surprise_simple",
    "emotions/surprise_coplayer",
    "emotions/surprise_external",
    "emotions/other_anger",
    "emotions/other_fear",
    "emotions/other_guilt",
    "emotions/other_happiness",
    "emotions/other_sadness",
];

static CATALOG: LazyLock<BTreeMap<&'static str, String>> = LazyLock::new(|| {
    RAW.iter()
        .map(|(name, raw)| (*name, raw.replace("\r\n", "\n").trim_end().to_string()))
        .collect()
});

/// Look up a template block by catalog name.
pub fn template(name: &str) -> Result<&'static str, PromptError> {
    CATALOG
        .get(name)
        .map(|s| s.as_str())
        .ok_or_else(|| PromptError::MissingTemplate(name.to_string()))
}

/// Every catalog name, sorted.
pub fn template_names() -> Vec<&'static str> {
    CATALOG.keys().copied().collect()
}
