//! Narrative normalization: case folding, punctuation stripping, stop-word
//! removal, and guarded suffix lemmatization.

use std::collections::{HashMap, HashSet};

/// Replacement token for purely numeric tokens, applied by
/// [`replace_numeric`] before vocabulary building.
pub const NUM_TOKEN: &str = "<num>";

/// One suffix-stripping rule. Rules are tried in declaration order and at
/// most one fires per token.
#[derive(Debug, Clone)]
pub struct SuffixRule {
    pub suffix: String,
    pub replacement: String,
    /// Minimum length of the prefix left after removing `suffix`.
    pub min_stem: usize,
    /// The rule does not fire on tokens ending with this (e.g. the plural-`s`
    /// rule skips tokens ending in `ss`).
    pub skip_if_ends: Option<String>,
}

impl SuffixRule {
    pub fn new(suffix: &str, replacement: &str) -> Self {
        SuffixRule {
            suffix: suffix.to_string(),
            replacement: replacement.to_string(),
            min_stem: 1,
            skip_if_ends: None,
        }
    }

    pub fn with_min_stem(mut self, min_stem: usize) -> Self {
        self.min_stem = min_stem;
        self
    }

    pub fn skip_if_ends(mut self, ending: &str) -> Self {
        self.skip_if_ends = Some(ending.to_string());
        self
    }

    fn apply(&self, token: &str) -> Option<String> {
        if !token.ends_with(self.suffix.as_str()) {
            return None;
        }
        if let Some(ending) = &self.skip_if_ends {
            if token.ends_with(ending.as_str()) {
                return None;
            }
        }
        let stem = &token[..token.len() - self.suffix.len()];
        if stem.len() < self.min_stem {
            return None;
        }
        Some(format!("{stem}{}", self.replacement))
    }
}

/// Complete normalization rule set. Versioned so corpora and vocabularies
/// record which rules produced them.
#[derive(Debug, Clone)]
pub struct NormalizationRules {
    pub version: String,
    pub stop_words: HashSet<String>,
    pub suffix_rules: Vec<SuffixRule>,
    /// Irregular forms, consulted before the suffix rules.
    pub lemma_exceptions: HashMap<String, String>,
    pub min_token_len: usize,
}

impl NormalizationRules {
    /// A bare rule set with no stop words, no rules, and a length filter.
    pub fn empty(min_token_len: usize) -> Self {
        NormalizationRules {
            version: "custom".to_string(),
            stop_words: HashSet::new(),
            suffix_rules: Vec::new(),
            lemma_exceptions: HashMap::new(),
            min_token_len,
        }
    }

    fn lemmatize(&self, token: &str) -> String {
        if let Some(lemma) = self.lemma_exceptions.get(token) {
            return lemma.clone();
        }
        for rule in &self.suffix_rules {
            if let Some(out) = rule.apply(token) {
                // A rule is vetoed when its output would itself match a rule
                // ("collapsed" → "collaps" → "collap"); single-pass stripping
                // must be idempotent.
                if self.suffix_rules.iter().any(|r| r.apply(&out).is_some()) {
                    return token.to_string();
                }
                return out;
            }
        }
        token.to_string()
    }
}

/// Normalize a narrative into tokens. The pipeline is fixed: case-fold,
/// replace every non-alphanumeric character with a space, split on
/// whitespace, drop tokens shorter than `min_token_len`, drop stop words,
/// then lemmatize each survivor.
pub fn normalize(text: &str, rules: &NormalizationRules) -> Vec<String> {
    let folded = text.to_lowercase();
    let cleaned: String = folded
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| t.chars().count() >= rules.min_token_len)
        .filter(|t| !rules.stop_words.contains(*t))
        .map(|t| rules.lemmatize(t))
        .collect()
}

/// Map purely numeric tokens (altimeter readings, runway numbers, years) to
/// the shared [`NUM_TOKEN`]. Applied between [`normalize`] and vocabulary
/// building or encoding.
pub fn replace_numeric(tokens: &mut [String]) {
    for t in tokens.iter_mut() {
        if !t.is_empty() && t.chars().all(|c| c.is_ascii_digit()) {
            *t = NUM_TOKEN.to_string();
        }
    }
}

/// Identifier of the rule set returned by [`default_rules`].
pub const DEFAULT_RULES_VERSION: &str = "v1";

const STOP_WORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "also",
    "am",
    "among",
    "an",
    "and",
    "any",
    "are",
    "around",
    "as",
    "at",
    "away",
    "back",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "cannot",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "even",
    "ever",
    "every",
    "few",
    "for",
    "from",
    "further",
    "get",
    "got",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "may",
    "me",
    "might",
    "more",
    "most",
    "must",
    "my",
    "myself",
    "never",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "onto",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "per",
    "same",
    "shall",
    "she",
    "should",
    "since",
    "so",
    "some",
    "still",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "upon",
    "us",
    "very",
    "via",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "yet",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

const LEMMA_EXCEPTIONS: &[(&str, &str)] = &[
    ("began", "begin"),
    ("begun", "begin"),
    ("broke", "break"),
    ("broken", "break"),
    ("brought", "bring"),
    ("came", "come"),
    ("children", "child"),
    ("chose", "choose"),
    ("chosen", "choose"),
    ("fell", "fall"),
    ("fallen", "fall"),
    ("feet", "foot"),
    ("felt", "feel"),
    ("flew", "fly"),
    ("flown", "fly"),
    ("found", "find"),
    ("gave", "give"),
    ("given", "give"),
    ("gone", "go"),
    ("kept", "keep"),
    ("knew", "know"),
    ("known", "know"),
    ("left", "leave"),
    ("lost", "lose"),
    ("made", "make"),
    ("men", "man"),
    ("met", "meet"),
    ("paid", "pay"),
    ("people", "person"),
    ("ran", "run"),
    ("said", "say"),
    ("saw", "see"),
    ("seen", "see"),
    ("sent", "send"),
    ("spoke", "speak"),
    ("spoken", "speak"),
    ("stood", "stand"),
    ("struck", "strike"),
    ("taken", "take"),
    ("taught", "teach"),
    ("thought", "think"),
    ("told", "tell"),
    ("took", "take"),
    ("understood", "understand"),
    ("went", "go"),
    ("women", "woman"),
    ("wore", "wear"),
    ("worn", "wear"),
    ("wrote", "write"),
    ("written", "write"),
];

/// The shipped rule set, version `v1`: an English stop-word list, guarded
/// suffix rules applied in order, an irregular-lemma table, and a
/// two-character minimum token length.
///
/// The `ings` rule and the `eed` guard keep normalization idempotent:
/// without them `landings` would strip to `landing` on the first pass and
/// `land` on the second, and `speeds` to `speed` then `spe`.
pub fn default_rules() -> NormalizationRules {
    NormalizationRules {
        version: DEFAULT_RULES_VERSION.to_string(),
        stop_words: STOP_WORDS.iter().map(|s| s.to_string()).collect(),
        suffix_rules: vec![
            SuffixRule::new("ies", "y").with_min_stem(2),
            SuffixRule::new("sses", "ss").with_min_stem(2),
            SuffixRule::new("ings", "").with_min_stem(3),
            SuffixRule::new("ing", "").with_min_stem(3),
            SuffixRule::new("ed", "")
                .with_min_stem(3)
                .skip_if_ends("eed"),
            SuffixRule::new("s", "").with_min_stem(3).skip_if_ends("ss"),
        ],
        lemma_exceptions: LEMMA_EXCEPTIONS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        min_token_len: 2,
    }
}

/// Look up a shipped rule set by its recorded version string.
pub fn rules_by_version(version: &str) -> Option<NormalizationRules> {
    match version {
        DEFAULT_RULES_VERSION => Some(default_rules()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_applies_stated_pipeline() {
        let mut rules = NormalizationRules::empty(1);
        rules.stop_words.insert("the".to_string());
        rules.suffix_rules.push(SuffixRule::new("ed", ""));
        let tokens = normalize("The aircraft landed, hard!", &rules);
        assert_eq!(tokens, vec!["aircraft", "land", "hard"]);
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        assert!(normalize("", &default_rules()).is_empty());
    }

    #[test]
    fn lemma_exceptions_take_precedence() {
        let mut rules = NormalizationRules::empty(1);
        rules
            .lemma_exceptions
            .insert("went".to_string(), "go".to_string());
        assert_eq!(normalize("went went", &rules), vec!["go", "go"]);
    }

    #[test]
    fn default_rules_strip_ing() {
        assert_eq!(normalize("flying", &default_rules()), vec!["fly"]);
    }

    #[test]
    fn plural_rule_skips_double_s() {
        let rules = default_rules();
        assert_eq!(normalize("glass", &rules), vec!["glass"]);
        assert_eq!(normalize("glasses", &rules), vec!["glass"]);
    }

    #[test]
    fn single_letter_tokens_dropped() {
        assert!(normalize("a", &default_rules()).is_empty());
    }

    #[test]
    fn short_stems_are_protected() {
        let rules = default_rules();
        // "wing" would strip to a one-letter stem; the rule must not fire.
        assert_eq!(normalize("wing", &rules), vec!["wing"]);
        assert_eq!(normalize("ring", &rules), vec!["ring"]);
    }

    #[test]
    fn first_matching_rule_wins() {
        let rules = default_rules();
        assert_eq!(normalize("landings", &rules), vec!["land"]);
        // Stem too short for the ings rule; the plain s rule fires instead.
        assert_eq!(normalize("icings", &rules), vec!["icing"]);
        // The eed guard keeps "speed"-like tokens stable across passes.
        assert_eq!(normalize("speeds", &rules), vec!["speed"]);
        assert_eq!(normalize("speed", &rules), vec!["speed"]);
    }

    #[test]
    fn punctuation_and_case_are_stripped() {
        let rules = NormalizationRules::empty(1);
        assert_eq!(
            normalize("Mayday!! engine--failure @3,000ft", &rules),
            vec!["mayday", "engine", "failure", "3", "000ft"]
        );
    }

    #[test]
    fn replace_numeric_maps_pure_digit_tokens() {
        let mut tokens = vec![
            "runway".to_string(),
            "27".to_string(),
            "3000".to_string(),
            "000ft".to_string(),
        ];
        replace_numeric(&mut tokens);
        assert_eq!(tokens, vec!["runway", NUM_TOKEN, NUM_TOKEN, "000ft"]);
    }

    #[test]
    fn normalize_is_idempotent_on_realistic_text() {
        let rules = default_rules();
        let samples = [
            "The aircraft landed hard on runway 27 and the gear collapsed.",
            "Pilot reported losing engine power while maneuvering at low altitude.",
            "During takeoff roll the flaps were misconfigured; the crew rejected the takeoff.",
            "Glasses of ice formed on the wings during the approach phase.",
            "The student went around after two bounced landings at high speeds.",
            "Witnesses saw the aeroplane taxiing toward the apron before the collision.",
            "Crossings of the active runway require clearances from the tower.",
        ];
        for text in samples {
            let once = normalize(text, &rules);
            let rejoined = once.join(" ");
            let twice = normalize(&rejoined, &rules);
            assert_eq!(once, twice, "not idempotent for {text:?}");
        }
    }

    #[test]
    fn shipped_lemmas_survive_renormalization() {
        // No exception lemma may be a stop word or sub-minimum-length token,
        // otherwise normalize would not be idempotent on its own output.
        let rules = default_rules();
        for (_, lemma) in LEMMA_EXCEPTIONS {
            assert!(!rules.stop_words.contains(*lemma), "{lemma} is a stop word");
            assert!(lemma.chars().count() >= rules.min_token_len);
        }
    }

    #[test]
    fn stop_word_list_has_documented_size() {
        let n = STOP_WORDS.len();
        assert!((130..=170).contains(&n), "stop list has {n} entries");
        // No duplicates.
        let set: std::collections::HashSet<_> = STOP_WORDS.iter().collect();
        assert_eq!(set.len(), n);
    }
}
