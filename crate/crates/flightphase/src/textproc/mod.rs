//! Text processing: normalization into tokens, vocabulary construction, and
//! fixed-length integer encoding of narratives.

mod rules;
mod vocab;

use std::error::Error;
use std::fmt;

pub use rules::{
    default_rules, normalize, replace_numeric, rules_by_version, NormalizationRules, SuffixRule,
    DEFAULT_RULES_VERSION, NUM_TOKEN,
};
pub use vocab::{
    decode, encode, encode_with, TokenSequence, TruncationSide, Vocabulary, OOV_INDEX, OOV_TOKEN,
    PAD_INDEX, PAD_TOKEN,
};

/// Errors from vocabulary construction, encoding, and the vocabulary file
/// format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextError {
    /// The corpus contains no tokens at all.
    EmptyCorpus,
    /// A sequence id does not exist in the vocabulary.
    IndexOutOfRange { id: u32, size: usize },
    /// A token sequence violates its padding invariant.
    InvalidSequence { reason: String },
    /// A vocabulary file failed to parse.
    MalformedVocabFile { line: usize, reason: String },
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextError::EmptyCorpus => write!(f, "corpus contains no tokens"),
            TextError::IndexOutOfRange { id, size } => {
                write!(
                    f,
                    "token id {id} out of range for vocabulary of size {size}"
                )
            }
            TextError::InvalidSequence { reason } => write!(f, "invalid token sequence: {reason}"),
            TextError::MalformedVocabFile { line, reason } => {
                write!(f, "malformed vocabulary file at line {line}: {reason}")
            }
        }
    }
}

impl Error for TextError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_then_encode_is_stable() {
        let rules = default_rules();
        let texts = [
            "The aircraft landed hard on the runway.",
            "Engine failure during climb out; pilot returned to the field.",
        ];
        let mut corpus: Vec<Vec<String>> = texts.iter().map(|t| normalize(t, &rules)).collect();
        for doc in &mut corpus {
            replace_numeric(doc);
        }
        let vocab = Vocabulary::build(&corpus, 100).unwrap();
        let a = encode(&corpus[0], &vocab, 16);
        let b = encode(&corpus[0], &vocab, 16);
        assert_eq!(a, b);
        assert_eq!(decode(&a, &vocab).unwrap(), corpus[0]);
    }
}
