//! Frequency-ranked vocabulary and fixed-length integer encoding.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::util::fnv1a64;

use super::TextError;

pub const PAD_INDEX: u32 = 0;
pub const OOV_INDEX: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";

/// Token → index map. Index 0 is reserved for padding, index 1 for
/// out-of-vocabulary tokens; real tokens start at 2, assigned in descending
/// frequency order with ties broken by first corpus occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_index: HashMap<String, u32>,
    index_to_token: Vec<String>,
    frequencies: Vec<u64>,
    max_size: usize,
}

impl Vocabulary {
    /// Count frequencies over the corpus and retain the `max_size` most
    /// frequent tokens.
    pub fn build(corpus: &[Vec<String>], max_size: usize) -> Result<Vocabulary, TextError> {
        assert!(max_size >= 1, "max_size must be at least 1");
        let mut counts: HashMap<&str, (u64, usize)> = HashMap::new();
        let mut position = 0usize;
        for doc in corpus {
            for token in doc {
                let entry = counts.entry(token.as_str()).or_insert((0, position));
                entry.0 += 1;
                position += 1;
            }
        }
        if position == 0 {
            return Err(TextError::EmptyCorpus);
        }

        let mut ranked: Vec<(&str, u64, usize)> = counts
            .into_iter()
            .map(|(tok, (count, first))| (tok, count, first))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked.truncate(max_size);

        let mut index_to_token = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
        let mut frequencies = vec![0u64, 0u64];
        let mut token_to_index = HashMap::with_capacity(ranked.len());
        for (tok, count, _) in ranked {
            token_to_index.insert(tok.to_string(), index_to_token.len() as u32);
            index_to_token.push(tok.to_string());
            frequencies.push(count);
        }

        Ok(Vocabulary {
            token_to_index,
            index_to_token,
            frequencies,
            max_size,
        })
    }

    /// Total number of indices, reserved ones included.
    pub fn size(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.token_to_index.get(token).copied()
    }

    pub fn token_at(&self, index: u32) -> Option<&str> {
        self.index_to_token.get(index as usize).map(|s| s.as_str())
    }

    pub fn frequency_at(&self, index: u32) -> Option<u64> {
        self.frequencies.get(index as usize).copied()
    }

    /// Stable fingerprint of the retained tokens, their frequencies, and the
    /// capacity. Encoded datasets and model artifacts carry this value so
    /// mismatched vocabularies are caught instead of silently misdecoding.
    pub fn content_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(self.max_size as u64).to_le_bytes());
        for i in 2..self.index_to_token.len() {
            bytes.extend_from_slice(self.index_to_token[i].as_bytes());
            bytes.push(b'\t');
            bytes.extend_from_slice(&self.frequencies[i].to_le_bytes());
            bytes.push(b'\n');
        }
        fnv1a64(&bytes)
    }

    /// Write the line-oriented vocabulary file: a header recording the rule
    /// set version, capacity, and corpus hash, then one
    /// `index<TAB>token<TAB>frequency` line per index in ascending order.
    pub fn write_to(
        &self,
        rules_version: &str,
        corpus_hash: u64,
        out: &mut impl Write,
    ) -> std::io::Result<()> {
        writeln!(
            out,
            "# rules_version={rules_version} max_size={} corpus_hash={corpus_hash:016x}",
            self.max_size
        )?;
        for (i, token) in self.index_to_token.iter().enumerate() {
            writeln!(out, "{i}\t{token}\t{}", self.frequencies[i])?;
        }
        Ok(())
    }

    /// Parse a vocabulary file written by [`Vocabulary::write_to`]. Returns
    /// the vocabulary plus the recorded rule-set version and corpus hash.
    pub fn read_from(input: &mut impl BufRead) -> Result<(Vocabulary, String, u64), TextError> {
        let malformed = |line: usize, reason: &str| TextError::MalformedVocabFile {
            line,
            reason: reason.to_string(),
        };

        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, Ok(h))) => h,
            Some((_, Err(e))) => return Err(malformed(1, &e.to_string())),
            None => return Err(malformed(1, "empty file")),
        };
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| malformed(1, "missing header"))?;
        let mut rules_version = None;
        let mut max_size = None;
        let mut corpus_hash = None;
        for field in header.split_whitespace() {
            if let Some(v) = field.strip_prefix("rules_version=") {
                rules_version = Some(v.to_string());
            } else if let Some(v) = field.strip_prefix("max_size=") {
                max_size = v.parse::<usize>().ok();
            } else if let Some(v) = field.strip_prefix("corpus_hash=") {
                corpus_hash = u64::from_str_radix(v, 16).ok();
            }
        }
        let rules_version = rules_version.ok_or_else(|| malformed(1, "missing rules_version"))?;
        let max_size = max_size.ok_or_else(|| malformed(1, "missing or invalid max_size"))?;
        let corpus_hash =
            corpus_hash.ok_or_else(|| malformed(1, "missing or invalid corpus_hash"))?;

        let mut index_to_token = Vec::new();
        let mut frequencies = Vec::new();
        let mut token_to_index = HashMap::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| malformed(lineno + 1, &e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let idx: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(lineno + 1, "bad index"))?;
            let token = parts
                .next()
                .ok_or_else(|| malformed(lineno + 1, "missing token"))?;
            let freq: u64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(lineno + 1, "bad frequency"))?;
            if idx != index_to_token.len() {
                return Err(malformed(lineno + 1, "indices must be dense and ascending"));
            }
            if idx >= 2
                && token_to_index
                    .insert(token.to_string(), idx as u32)
                    .is_some()
            {
                return Err(malformed(lineno + 1, "duplicate token"));
            }
            index_to_token.push(token.to_string());
            frequencies.push(freq);
        }
        if index_to_token.len() < 2
            || index_to_token[0] != PAD_TOKEN
            || index_to_token[1] != OOV_TOKEN
        {
            return Err(malformed(2, "reserved pad/oov entries missing"));
        }
        Ok((
            Vocabulary {
                token_to_index,
                index_to_token,
                frequencies,
                max_size,
            },
            rules_version,
            corpus_hash,
        ))
    }
}

/// Fixed-length integer encoding of one narrative. Positions past
/// `min(true_len, max_len)` are PAD (0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    ids: Vec<u32>,
    true_len: u32,
}

impl TokenSequence {
    /// Build from raw parts, enforcing the padding invariant.
    pub fn from_parts(ids: Vec<u32>, true_len: u32) -> Result<TokenSequence, TextError> {
        let active = (true_len as usize).min(ids.len());
        if ids[active..].iter().any(|&id| id != PAD_INDEX) {
            return Err(TextError::InvalidSequence {
                reason: "non-pad entry after the active prefix".to_string(),
            });
        }
        Ok(TokenSequence { ids, true_len })
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    pub fn true_len(&self) -> u32 {
        self.true_len
    }

    /// Number of non-PAD positions: `min(true_len, max_len)`.
    pub fn active_len(&self) -> usize {
        (self.true_len as usize).min(self.ids.len())
    }

    /// The non-PAD prefix.
    pub fn active_ids(&self) -> &[u32] {
        &self.ids[..self.active_len()]
    }
}

/// Which end of an over-long token list survives encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationSide {
    /// Keep the first `max_len` tokens (narrative heads state the context).
    #[default]
    Head,
    /// Keep the last `max_len` tokens.
    Tail,
}

/// Map tokens to indices (OOV when absent), keep the first `max_len`, and
/// pad with zeros up to `max_len`.
pub fn encode(tokens: &[String], vocab: &Vocabulary, max_len: usize) -> TokenSequence {
    encode_with(tokens, vocab, max_len, TruncationSide::Head)
}

/// [`encode`] with a configurable truncation side.
pub fn encode_with(
    tokens: &[String],
    vocab: &Vocabulary,
    max_len: usize,
    side: TruncationSide,
) -> TokenSequence {
    assert!(max_len >= 1, "max_len must be at least 1");
    let kept: Box<dyn Iterator<Item = &String>> = match side {
        TruncationSide::Head => Box::new(tokens.iter().take(max_len)),
        TruncationSide::Tail => Box::new(tokens.iter().skip(tokens.len().saturating_sub(max_len))),
    };
    let mut ids: Vec<u32> = kept
        .map(|t| vocab.index_of(t).unwrap_or(OOV_INDEX))
        .collect();
    ids.resize(max_len, PAD_INDEX);
    TokenSequence {
        ids,
        true_len: tokens.len() as u32,
    }
}

/// Map a sequence back to tokens. PAD positions are omitted and OOV renders
/// as the literal [`OOV_TOKEN`].
pub fn decode(seq: &TokenSequence, vocab: &Vocabulary) -> Result<Vec<String>, TextError> {
    let mut out = Vec::with_capacity(seq.active_len());
    for &id in seq.ids() {
        if id == PAD_INDEX {
            continue;
        }
        match vocab.token_at(id) {
            Some(token) => out.push(token.to_string()),
            None => {
                return Err(TextError::IndexOutOfRange {
                    id,
                    size: vocab.size(),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn frequency_ranking_with_hand_counts() {
        // a appears 3 times, b twice.
        let corpus = vec![toks(&["a", "b", "a"]), toks(&["b", "a"])];
        let vocab = Vocabulary::build(&corpus, 10).unwrap();
        assert_eq!(vocab.index_of("a"), Some(2));
        assert_eq!(vocab.index_of("b"), Some(3));
        assert_eq!(vocab.frequency_at(2), Some(3));
        assert_eq!(vocab.frequency_at(3), Some(2));
    }

    #[test]
    fn capacity_one_keeps_first_occurring_tie() {
        let corpus = vec![toks(&["a", "b"]), toks(&["c"])];
        let vocab = Vocabulary::build(&corpus, 1).unwrap();
        assert_eq!(vocab.index_of("a"), Some(2));
        assert_eq!(vocab.index_of("b"), None);
        assert_eq!(vocab.index_of("c"), None);
        assert_eq!(vocab.size(), 3);
    }

    #[test]
    fn reserved_indices_always_present() {
        let corpus = vec![toks(&["x"])];
        let vocab = Vocabulary::build(&corpus, 5).unwrap();
        assert_eq!(vocab.token_at(PAD_INDEX), Some(PAD_TOKEN));
        assert_eq!(vocab.token_at(OOV_INDEX), Some(OOV_TOKEN));
        assert_eq!(vocab.index_of(PAD_TOKEN), None);
        assert_eq!(vocab.index_of("x"), Some(2));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus: Vec<Vec<String>> = vec![vec![], vec![]];
        assert_eq!(
            Vocabulary::build(&corpus, 5).unwrap_err(),
            TextError::EmptyCorpus
        );
    }

    #[test]
    fn indices_are_dense_and_frequencies_non_increasing() {
        let corpus = vec![
            toks(&["x", "y", "x", "z", "x", "y", "w"]),
            toks(&["z", "x", "q", "q", "q", "q"]),
        ];
        let vocab = Vocabulary::build(&corpus, 100).unwrap();
        for i in 2..vocab.size() as u32 {
            let tok = vocab.token_at(i).unwrap().to_string();
            assert_eq!(vocab.index_of(&tok), Some(i));
            if i > 2 {
                assert!(vocab.frequency_at(i).unwrap() <= vocab.frequency_at(i - 1).unwrap());
            }
        }
    }

    #[test]
    fn retained_frequency_never_exceeds_corpus_total() {
        let corpus = vec![toks(&["a", "b", "c", "a"]), toks(&["d", "e", "a", "b"])];
        let total = 8u64;
        let vocab = Vocabulary::build(&corpus, 3).unwrap();
        let retained: u64 = (2..vocab.size() as u32)
            .map(|i| vocab.frequency_at(i).unwrap())
            .sum();
        assert!(retained <= total);
    }

    #[test]
    fn encode_pads_to_exact_length() {
        // Eight distinct tokens in first-occurrence order take indices 2..=9.
        let corpus = vec![toks(&["t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"])];
        let vocab = Vocabulary::build(&corpus, 100).unwrap();
        // t3 → 5, t7 → 9.
        let seq = encode(&toks(&["t3", "t7"]), &vocab, 6);
        assert_eq!(seq.ids(), &[5, 9, 0, 0, 0, 0]);
        assert_eq!(seq.true_len(), 2);
    }

    #[test]
    fn over_long_input_keeps_head() {
        let corpus = vec![toks(&["w"])];
        let vocab = Vocabulary::build(&corpus, 10).unwrap();
        let tokens: Vec<String> = (0..2500).map(|_| "w".to_string()).collect();
        let seq = encode(&tokens, &vocab, 2000);
        assert_eq!(seq.max_len(), 2000);
        assert_eq!(seq.true_len(), 2500);
        assert!(seq.ids().iter().all(|&id| id == 2));
    }

    #[test]
    fn tail_truncation_keeps_last_tokens() {
        let corpus = vec![toks(&["a", "b", "c"])];
        let vocab = Vocabulary::build(&corpus, 10).unwrap();
        let seq = encode_with(&toks(&["a", "b", "c"]), &vocab, 2, TruncationSide::Tail);
        assert_eq!(seq.ids(), &[3, 4]);
    }

    #[test]
    fn unknown_token_maps_to_oov() {
        let corpus = vec![toks(&["known"])];
        let vocab = Vocabulary::build(&corpus, 10).unwrap();
        let seq = encode(&toks(&["mystery"]), &vocab, 3);
        assert_eq!(seq.ids(), &[OOV_INDEX, 0, 0]);
    }

    #[test]
    fn decode_round_trips_in_vocab_tokens() {
        let corpus = vec![toks(&["alpha", "beta", "gamma"])];
        let vocab = Vocabulary::build(&corpus, 10).unwrap();
        let tokens = toks(&["gamma", "alpha"]);
        let seq = encode(&tokens, &vocab, 5);
        assert_eq!(decode(&seq, &vocab).unwrap(), tokens);
    }

    #[test]
    fn decode_renders_oov_and_skips_pad() {
        let corpus = vec![toks(&["x"])];
        let vocab = Vocabulary::build(&corpus, 10).unwrap();
        let seq = TokenSequence::from_parts(vec![1, 0, 0], 1).unwrap();
        assert_eq!(decode(&seq, &vocab).unwrap(), vec![OOV_TOKEN.to_string()]);
    }

    #[test]
    fn decode_checks_bounds() {
        let corpus = vec![toks(&["x"])];
        let vocab = Vocabulary::build(&corpus, 10).unwrap();
        let seq = TokenSequence::from_parts(vec![vocab.size() as u32, 0], 1).unwrap();
        assert!(matches!(
            decode(&seq, &vocab),
            Err(TextError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn sequence_invariant_rejects_stray_ids() {
        assert!(TokenSequence::from_parts(vec![2, 0, 3], 1).is_err());
    }

    #[test]
    fn vocab_file_round_trip() {
        let corpus = vec![toks(&["land", "hard", "land", "runway"])];
        let vocab = Vocabulary::build(&corpus, 50).unwrap();
        let mut buf = Vec::new();
        vocab.write_to("v1", 0xdeadbeef, &mut buf).unwrap();
        let (parsed, version, corpus_hash) = Vocabulary::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(parsed, vocab);
        assert_eq!(version, "v1");
        assert_eq!(corpus_hash, 0xdeadbeef);
        assert_eq!(parsed.content_hash(), vocab.content_hash());
    }

    #[test]
    fn vocab_file_rejects_garbage() {
        let mut bad = b"not a header\n".as_slice();
        assert!(matches!(
            Vocabulary::read_from(&mut bad),
            Err(TextError::MalformedVocabFile { .. })
        ));
    }
}
