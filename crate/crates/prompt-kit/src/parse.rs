//! Tolerant parsing of model replies into moves, splits, decisions, and
//! emotion words.
//!
//! Parsing never guesses: a reply that does not name a move label (as a
//! standalone one-letter token) is a typed error, never a silent move.

use crate::{PromptError, PROBE_EMOTIONS};
use game_core::Decision;
use regex::Regex;
use std::sync::LazyLock;

static SPLIT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(-?\d+)\s*,\s*(-?\d+)").expect("valid regex"));

fn word_tokens(reply: &str) -> impl Iterator<Item = &str> {
    reply
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
}

/// Extract the chosen move label from a reply.
///
/// The first standalone one-letter token matching either label wins,
/// case-insensitively; leading "Option" tokens are tolerated because the
/// round question's answer stem is "A: Option". Returns the canonical label
/// character as configured.
pub fn parse_move(reply: &str, labels: (char, char)) -> Result<char, PromptError> {
    for token in word_tokens(reply) {
        if token.len() != 1 {
            continue;
        }
        let c = token.chars().next().expect("one char");
        if c.eq_ignore_ascii_case(&labels.0) {
            return Ok(labels.0);
        }
        if c.eq_ignore_ascii_case(&labels.1) {
            return Ok(labels.1);
        }
    }
    Err(PromptError::UnparseableMove(reply.to_string()))
}

/// Extract a `(keep, give)` split from a reply and validate it against the
/// budget. The first two comma-separated integers are taken, so prefixes
/// like "Split:" and interior whitespace are tolerated.
pub fn parse_split(reply: &str, total_sum: i64) -> Result<(i64, i64), PromptError> {
    let caps = SPLIT_RE
        .captures(reply)
        .ok_or_else(|| PromptError::UnparseableSplit(reply.to_string()))?;
    let keep: i64 = caps[1]
        .parse()
        .map_err(|_| PromptError::UnparseableSplit(reply.to_string()))?;
    let give: i64 = caps[2]
        .parse()
        .map_err(|_| PromptError::UnparseableSplit(reply.to_string()))?;
    if keep < 0 || give < 0 || keep + give != total_sum {
        return Err(PromptError::InvalidSplit {
            keep,
            give,
            total: total_sum,
        });
    }
    Ok((keep, give))
}

/// Extract the ACCEPT/REJECT decision. Exactly one of the two tokens must
/// occur (case-insensitively); replies naming both or neither are errors.
pub fn parse_accept(reply: &str) -> Result<Decision, PromptError> {
    let mut accept = false;
    let mut reject = false;
    for token in word_tokens(reply) {
        if token.eq_ignore_ascii_case("accept") {
            accept = true;
        } else if token.eq_ignore_ascii_case("reject") {
            reject = true;
        }
    }
    match (accept, reject) {
        (true, false) => Ok(Decision::Accepted),
        (false, true) => Ok(Decision::Rejected),
        _ => Err(PromptError::UnparseableDecision(reply.to_string())),
    }
}

/// An emotion word extracted from a probe reply. `flagged` marks replies
/// outside the allowed vocabulary, which degrade to "neutral" rather than
/// aborting the match (probes are telemetry, not control flow).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionWord {
    pub word: String,
    pub flagged: bool,
}

/// First allowed word found in the reply, case-insensitively; anything else
/// maps to neutral with the flag set.
pub fn parse_emotion(reply: &str, allowed: &[&str]) -> EmotionWord {
    for token in word_tokens(reply) {
        if let Some(word) = allowed.iter().find(|w| token.eq_ignore_ascii_case(w)) {
            return EmotionWord {
                word: (*word).to_string(),
                flagged: false,
            };
        }
    }
    EmotionWord {
        word: "neutral".to_string(),
        flagged: true,
    }
}

/// Convenience wrapper over [`parse_emotion`] with the internal probe's
/// option list.
pub fn parse_probe_emotion(reply: &str) -> EmotionWord {
    parse_emotion(reply, &PROBE_EMOTIONS)
}

/// First word of an unconstrained probe reply ("Answer with one word."),
/// lowercased; echoes of the probe stems are stripped first and empty
/// replies degrade to flagged neutral.
pub fn parse_free_emotion(reply: &str) -> EmotionWord {
    let lower = reply.trim().to_ascii_lowercase();
    let stripped = ["i will show that i am", "i feel", "i am"]
        .iter()
        .find_map(|stem| lower.strip_prefix(stem))
        .unwrap_or(lower.as_str());
    let word = word_tokens(stripped)
        .find(|t| t.chars().all(|c| c.is_alphabetic()))
        .map(|t| t.to_ascii_lowercase());
    match word {
        Some(word) => EmotionWord {
            word,
            flagged: false,
        },
        None => EmotionWord {
            word: "neutral".to_string(),
            flagged: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const JF: (char, char) = ('J', 'F');

    #[test]
    fn parse_move_accepts_the_documented_shapes() {
        assert_eq!(parse_move(" J", JF), Ok('J'));
        assert_eq!(parse_move("Option F", JF), Ok('F'));
        assert_eq!(parse_move("f.", JF), Ok('F'));
        assert_eq!(parse_move("A: Option J", JF), Ok('J'));
        assert_eq!(parse_move("\"Option J\"", JF), Ok('J'));
    }

    #[test]
    fn parse_move_rejects_replies_without_a_label_token() {
        // "refuse" contains an 'f' but not as a standalone token.
        assert!(matches!(
            parse_move("I refuse to answer", JF),
            Err(PromptError::UnparseableMove(_))
        ));
        assert!(parse_move("", JF).is_err());
        assert!(parse_move("JF", JF).is_err());
    }

    #[test]
    fn parse_move_takes_the_first_label_token() {
        assert_eq!(parse_move("J or F", JF), Ok('J'));
        assert_eq!(parse_move("not sure... F! or J?", JF), Ok('F'));
    }

    #[test]
    fn parse_split_accepts_the_documented_shapes() {
        assert_eq!(parse_split("65,35", 100), Ok((65, 35)));
        assert_eq!(parse_split("Split: 450, 550", 1000), Ok((450, 550)));
        assert_eq!(
            parse_split("I will keep 900 , give 100: 900,100", 1000),
            Ok((900, 100))
        );
    }

    #[test]
    fn parse_split_flags_conservation_and_negatives() {
        assert_eq!(
            parse_split("60,60", 100),
            Err(PromptError::InvalidSplit {
                keep: 60,
                give: 60,
                total: 100
            })
        );
        assert!(matches!(
            parse_split("-5,105", 100),
            Err(PromptError::InvalidSplit { .. })
        ));
        assert!(matches!(
            parse_split("just 65", 100),
            Err(PromptError::UnparseableSplit(_))
        ));
    }

    #[test]
    fn parse_accept_requires_exactly_one_token_kind() {
        assert_eq!(parse_accept("The answer is ACCEPT"), Ok(Decision::Accepted));
        assert_eq!(parse_accept("reject"), Ok(Decision::Rejected));
        assert!(parse_accept("accept, no wait, REJECT").is_err());
        assert!(parse_accept("maybe").is_err());
        // Repeats of a single kind stay parseable.
        assert_eq!(parse_accept("ACCEPT. I accept."), Ok(Decision::Accepted));
    }

    #[test]
    fn parse_free_emotion_strips_stem_echoes() {
        assert_eq!(parse_free_emotion("happy").word, "happy");
        assert_eq!(
            parse_free_emotion("I will show that I am happy").word,
            "happy"
        );
        assert_eq!(parse_free_emotion("I feel calm today").word, "calm");
        let empty = parse_free_emotion("...");
        assert_eq!(empty.word, "neutral");
        assert!(empty.flagged);
    }

    #[test]
    fn parse_emotion_falls_back_to_flagged_neutral() {
        assert_eq!(
            parse_probe_emotion("angry"),
            EmotionWord {
                word: "angry".to_string(),
                flagged: false
            }
        );
        assert_eq!(
            parse_probe_emotion("I feel happy"),
            EmotionWord {
                word: "happy".to_string(),
                flagged: false
            }
        );
        assert_eq!(
            parse_probe_emotion("ecstatic"),
            EmotionWord {
                word: "neutral".to_string(),
                flagged: true
            }
        );
    }

    proptest! {
        #[test]
        fn split_round_trips_for_all_budgets(
            budget in proptest::sample::select(&[100i64, 1000, 1_000_000]),
            frac in 0.0f64..=1.0,
        ) {
            let give = (frac * budget as f64).floor() as i64;
            let keep = budget - give;
            let formatted = format!("{keep},{give}");
            prop_assert_eq!(parse_split(&formatted, budget), Ok((keep, give)));
        }

        #[test]
        fn junk_without_label_letters_always_errors(
            reply in "[^JjFf]{0,80}"
        ) {
            prop_assert!(parse_move(&reply, JF).is_err());
        }

        #[test]
        fn move_parse_is_question_order_invariant(first_variant in any::<bool>()) {
            // Whichever variant asked the question, the echoed answer parses
            // to the same label.
            let _ = first_variant;
            for label in ['J', 'F'] {
                prop_assert_eq!(parse_move(&format!("Option {label}"), JF), Ok(label));
                prop_assert_eq!(parse_move(&label.to_string(), JF), Ok(label));
            }
        }
    }
}
