use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::model::{Answer, AnswerSpace, TaskInstance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnswerError {
    #[error("empty answer")]
    Empty,
    #[error("unmapped answer: {raw:?} is not in the answer space")]
    Unmapped { raw: String },
    #[error("expected {expected} numbers, found {}: {raw:?}", values.len())]
    Length {
        expected: usize,
        values: Vec<f64>,
        raw: String,
    },
}

static PREFIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:final\s+answer|calibrated\s+answer|answer)\s*\**\s*[:=]\s*\**").expect("valid regex")
});
static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?").expect("valid regex"));
static PAREN_LETTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\(\s*([A-Za-z])\s*\)").expect("valid regex"));
static OPTION_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\boption\s+([A-Za-z])\b").expect("valid regex"));
static CAPITAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([A-Z])\b").expect("valid regex"));

/// Text after the last answer prefix, without markdown emphasis.
pub fn strip_answer_prefix(line: &str) -> String {
    let after = match PREFIX.find_iter(line).last() {
        Some(m) => &line[m.end()..],
        None => line,
    };
    after.trim().trim_matches(['*', '`', '"', '\'']).trim().to_string()
}

fn clean(s: &str) -> String {
    let mut t = s.trim().trim_end_matches(['.', '!', ';']).trim().to_string();
    if (t.starts_with('[') && t.ends_with(']')) || (t.starts_with('<') && t.ends_with('>')) {
        t = t[1..t.len() - 1].trim().to_string();
    }
    t
}

fn word_contains(haystack: &str, needle: &str) -> bool {
    let pat = format!(r"(?i)(?:^|[^\w]){}(?:$|[^\w])", regex::escape(needle));
    Regex::new(&pat).is_ok_and(|r| r.is_match(haystack))
}

/// Maps one answer line into the instance's answer space.
pub fn extract_answer(line: &str, instance: &TaskInstance) -> Result<Answer, AnswerError> {
    let body = strip_answer_prefix(line);
    if body.is_empty() {
        return Err(AnswerError::Empty);
    }
    let unmapped = || AnswerError::Unmapped { raw: line.trim().to_string() };
    match &instance.answer_space {
        AnswerSpace::Labels { labels } => {
            let c = clean(&body);
            if let Some(l) = labels.iter().find(|l| l.eq_ignore_ascii_case(&c)) {
                return Ok(Answer::Label(l.clone()));
            }
            let mut by_len: Vec<&String> = labels.iter().collect();
            by_len.sort_by_key(|l| std::cmp::Reverse(l.chars().count()));
            by_len
                .into_iter()
                .find(|l| word_contains(&body, l))
                .map(|l| Answer::Label(l.clone()))
                .ok_or_else(unmapped)
        }
        AnswerSpace::Options { options } => {
            let c = clean(&body);
            let pick = |letter: &str| options.iter().find(|o| o.eq_ignore_ascii_case(letter)).cloned();
            let trimmed = c.trim_matches(['(', ')', '.', ':', ' ']);
            if let Some(o) = pick(trimmed) {
                return Ok(Answer::Option(o));
            }
            let candidates = PAREN_LETTER
                .captures_iter(&body)
                .chain(OPTION_WORD.captures_iter(&body))
                .chain(CAPITAL.captures_iter(&body))
                .map(|m| m[1].to_string());
            for letter in candidates {
                if let Some(o) = pick(&letter) {
                    return Ok(Answer::Option(o));
                }
            }
            options
                .iter()
                .find(|o| o.chars().count() > 1 && word_contains(&body, o))
                .map(|o| Answer::Option(o.clone()))
                .ok_or_else(unmapped)
        }
        AnswerSpace::Numeric { horizon } => {
            let values: Vec<f64> = NUMBER
                .find_iter(&body)
                .filter_map(|m| m.as_str().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .collect();
            if values.is_empty() {
                return Err(unmapped());
            }
            if values.len() != *horizon {
                return Err(AnswerError::Length {
                    expected: *horizon,
                    values,
                    raw: line.trim().to_string(),
                });
            }
            Ok(Answer::NumericVector(values))
        }
        AnswerSpace::Boolean => {
            const YES: [&str; 6] = ["true", "yes", "y", "correct", "present", "1"];
            const NO: [&str; 6] = ["false", "no", "n", "incorrect", "absent", "0"];
            let c = clean(&body).to_lowercase();
            if YES.contains(&c.as_str()) {
                return Ok(Answer::Boolean(true));
            }
            if NO.contains(&c.as_str()) {
                return Ok(Answer::Boolean(false));
            }
            let yes = YES[..5].iter().any(|w| word_contains(&c, w));
            let no = NO[..5].iter().any(|w| word_contains(&c, w));
            match (yes, no) {
                (true, false) => Ok(Answer::Boolean(true)),
                (false, true) => Ok(Answer::Boolean(false)),
                _ => Err(unmapped()),
            }
        }
        AnswerSpace::FreeText => Ok(Answer::FreeText(body.trim().to_string())),
    }
}
