//! Label normalization shared by the keyword index, entity keys and queries.

use unicode_normalization::UnicodeNormalization;

/// Splits a label into normalized tokens: NFC, lowercased, cut on every run
/// of non-alphanumeric characters.
pub fn tokens(label: &str) -> Vec<String> {
    let folded: String = label.nfc().flat_map(char::to_lowercase).collect();
    folded
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Normalizes a single query keyword. Returns `None` when the keyword has no
/// alphanumeric content or spans several tokens.
pub fn keyword(raw: &str) -> Option<String> {
    let mut toks = tokens(raw);
    if toks.len() == 1 {
        toks.pop()
    } else {
        None
    }
}

/// Canonical key of a label: its tokens joined by single spaces.
pub fn normalized_key(label: &str) -> String {
    tokens(label).join(" ")
}

/// Case-folded form used for similarity comparisons.
pub fn fold(label: &str) -> String {
    label.nfc().flat_map(char::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_lowercases() {
        assert_eq!(tokens("HealthStar Inc."), vec!["healthstar", "inc"]);
        assert_eq!(tokens("PubMed-Article_2020"), vec!["pubmed", "article", "2020"]);
        assert!(tokens("  --  ").is_empty());
    }

    #[test]
    fn nfc_composes_before_matching() {
        // "é" as e + combining acute accent
        assert_eq!(tokens("Cafe\u{301}"), tokens("Café"));
    }

    #[test]
    fn keyword_requires_single_token() {
        assert_eq!(keyword("Alice").as_deref(), Some("alice"));
        assert_eq!(keyword("kwd0").as_deref(), Some("kwd0"));
        assert_eq!(keyword("two words"), None);
        assert_eq!(keyword("!!"), None);
    }

    #[test]
    fn key_joins_tokens() {
        assert_eq!(normalized_key("  ABC   Pharma, Inc "), "abc pharma inc");
    }
}
