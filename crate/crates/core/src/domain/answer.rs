use std::fmt;

use serde::{Deserialize, Serialize};

/// How raw answers are normalized before comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerMode {
    /// Trim, case-fold, drop trailing periods.
    #[default]
    Text,
    /// As `Text`, then re-render decimal numbers minimally ("3.0" -> "3").
    Numeric,
}

/// An answer as produced by an agent, plus its canonical comparison key.
///
/// Two answers are equal iff their canonical strings are equal; `raw` is
/// carried only for auditing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Answer {
    pub canonical: String,
    pub raw: String,
}

impl Answer {
    pub fn new(raw: impl Into<String>, mode: AnswerMode) -> Self {
        let raw = raw.into();
        let canonical = canonicalize(&raw, mode);
        Self { canonical, raw }
    }

    pub fn text(raw: impl Into<String>) -> Self {
        Self::new(raw, AnswerMode::Text)
    }

    pub fn as_str(&self) -> &str {
        &self.canonical
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }
}

impl PartialEq for Answer {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for Answer {}

impl std::hash::Hash for Answer {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

pub fn canonicalize_answer(raw: &str, mode: AnswerMode) -> Answer {
    Answer::new(raw, mode)
}

/// Canonical comparison key for a raw answer string.
///
/// Trailing periods are stripped together with any whitespace between them
/// so that the function stays idempotent on inputs such as `"a. ."`.
pub fn canonicalize(raw: &str, mode: AnswerMode) -> String {
    let folded = raw.to_lowercase();
    let text = folded
        .trim()
        .trim_end_matches(|c: char| c == '.' || c.is_whitespace());
    match mode {
        AnswerMode::Text => text.to_string(),
        AnswerMode::Numeric => render_numeric(text).unwrap_or_else(|| text.to_string()),
    }
}

fn render_numeric(text: &str) -> Option<String> {
    let looks_decimal = !text.is_empty()
        && text.chars().any(|c| c.is_ascii_digit())
        && text
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e'));
    if !looks_decimal {
        return None;
    }
    let value: f64 = text.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    // `{}` on f64 is the shortest string that round-trips.
    let value = if value == 0.0 { 0.0 } else { value };
    Some(format!("{value}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pipeline() {
        assert_eq!(canonicalize(" Paris.", AnswerMode::Text), "paris");
        assert_eq!(canonicalize("paris", AnswerMode::Text), "paris");
        assert_eq!(canonicalize("", AnswerMode::Text), "");
        assert_eq!(canonicalize("  \t ", AnswerMode::Text), "");
    }

    #[test]
    fn numeric_mode_only_when_enabled() {
        assert_eq!(canonicalize("3.0", AnswerMode::Numeric), "3");
        assert_eq!(canonicalize("3.0", AnswerMode::Text), "3.0");
        assert_eq!(canonicalize("0.50", AnswerMode::Numeric), "0.5");
        assert_eq!(canonicalize("-0.0", AnswerMode::Numeric), "0");
        assert_eq!(canonicalize("1e3", AnswerMode::Numeric), "1000");
        assert_eq!(canonicalize("42.", AnswerMode::Numeric), "42");
    }

    #[test]
    fn numeric_mode_leaves_words_alone() {
        assert_eq!(canonicalize("inf", AnswerMode::Numeric), "inf");
        assert_eq!(canonicalize("nan", AnswerMode::Numeric), "nan");
        assert_eq!(canonicalize("e", AnswerMode::Numeric), "e");
        assert_eq!(canonicalize("(b)", AnswerMode::Numeric), "(b)");
        assert_eq!(canonicalize("1-2", AnswerMode::Numeric), "1-2");
    }

    #[test]
    fn idempotent_on_tricky_suffixes() {
        for raw in ["a. .", "paris..", "X . ", "...", "3.0.", "Ünïcode."] {
            for mode in [AnswerMode::Text, AnswerMode::Numeric] {
                let once = canonicalize(raw, mode);
                assert_eq!(canonicalize(&once, mode), once, "{raw:?}");
            }
        }
    }

    #[test]
    fn equality_uses_canonical_form() {
        assert_eq!(Answer::text("Paris."), Answer::text("paris"));
        assert_ne!(Answer::text("Paris"), Answer::text("London"));
    }
}
