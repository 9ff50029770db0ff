//! Seeded synthetic corpora for desk-scale testing.
//!
//! Real investigation exports cannot be redistributed, so tests and demos
//! run on generated narratives whose class signal is fully controlled:
//! either keyword *presence* (each class owns disjoint signature keywords)
//! or keyword *order* (classes share a keyword pair and only its order
//! differs, which defeats any order-invariant model by construction).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::nncore::Rng;

use super::{canonical_phase, IngestError, LabelMap, LabeledNarrative};

/// One synthetic class: its phase label and signature keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub label: String,
    pub keywords: Vec<String>,
}

/// Generator parameters. `order_sensitive = false` produces a corpus that is
/// perfectly separable by keyword presence; `order_sensitive = true` encodes
/// the class in the order of the first two keywords, which all classes share
/// as a set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: Vec<ClassSpec>,
    pub docs_per_class: usize,
    pub filler_vocab_size: usize,
    pub doc_length_range: (usize, usize),
    pub order_sensitive: bool,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The shipped seven-class presence corpus. The label set mirrors common
    /// phase-of-flight taxonomies; it is a stand-in, not an authoritative
    /// enumeration of any agency's categories.
    pub fn default_seven(seed: u64) -> SyntheticSpec {
        let class = |label: &str, keywords: &[&str]| ClassSpec {
            label: label.to_string(),
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
        };
        SyntheticSpec {
            classes: vec![
                class("Taxi", &["taxiway", "apron", "pushback", "tug"]),
                class("Take-off", &["liftoff", "rotation", "throttle"]),
                class("Initial-climb", &["climbout", "obstacle", "retract"]),
                class("Enroute", &["cruise", "altitude", "airway"]),
                class("Maneuvering", &["aerobatic", "steep", "chandelle"]),
                class("Approach", &["glideslope", "localizer", "final"]),
                class("Landing", &["touchdown", "flare", "touch", "runway"]),
            ],
            docs_per_class: 100,
            filler_vocab_size: 300,
            doc_length_range: (10, 30),
            order_sensitive: false,
            seed,
        }
    }

    /// A two-class corpus where both classes contain the same two keywords
    /// and only their order differs.
    pub fn default_order_pair(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            classes: vec![
                ClassSpec {
                    label: "upwind-first".to_string(),
                    keywords: vec!["zulu".to_string(), "tango".to_string()],
                },
                ClassSpec {
                    label: "downwind-first".to_string(),
                    keywords: vec!["tango".to_string(), "zulu".to_string()],
                },
            ],
            docs_per_class: 150,
            filler_vocab_size: 40,
            doc_length_range: (6, 14),
            order_sensitive: true,
            seed,
        }
    }

    fn validate(&self) -> Result<(), IngestError> {
        let invalid = |reason: &str| IngestError::InvalidSpec {
            reason: reason.to_string(),
        };
        if self.classes.len() < 2 {
            return Err(invalid("at least two classes required"));
        }
        if self.docs_per_class == 0 {
            return Err(invalid("docs_per_class must be positive"));
        }
        if self.filler_vocab_size == 0 {
            return Err(invalid("filler_vocab_size must be positive"));
        }
        let (min, max) = self.doc_length_range;
        if min == 0 || min > max {
            return Err(invalid("doc_length_range must satisfy 0 < min <= max"));
        }
        let mut labels = HashSet::new();
        for class in &self.classes {
            if class.keywords.is_empty() {
                return Err(invalid("every class needs at least one signature keyword"));
            }
            if !labels.insert(canonical_phase(&class.label)) {
                return Err(invalid("class labels must be distinct"));
            }
        }
        if self.order_sensitive {
            if min < 2 {
                return Err(invalid("order-sensitive docs need at least two tokens"));
            }
            for class in &self.classes {
                if class.keywords.len() < 2 {
                    return Err(invalid(
                        "order-sensitive classes need an ordered keyword pair",
                    ));
                }
            }
        } else {
            let mut seen: HashSet<&str> = HashSet::new();
            for class in &self.classes {
                for kw in &class.keywords {
                    if !seen.insert(kw.as_str()) {
                        return Err(invalid(
                            "signature keywords must be disjoint across classes",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Generate the corpus described by `spec`. Deterministic for a fixed seed.
pub fn generate_synthetic_corpus(
    spec: &SyntheticSpec,
) -> Result<(Vec<LabeledNarrative>, LabelMap), IngestError> {
    spec.validate()?;

    let map = LabelMap::new(
        spec.classes
            .iter()
            .map(|c| canonical_phase(&c.label))
            .collect(),
    )?;

    let fillers: Vec<String> = (0..spec.filler_vocab_size)
        .map(|i| format!("word{i:03}"))
        .collect();
    for class in &spec.classes {
        for kw in &class.keywords {
            if fillers.iter().any(|f| f == kw) {
                return Err(IngestError::InvalidSpec {
                    reason: format!("keyword {kw:?} collides with the filler vocabulary"),
                });
            }
        }
    }

    let (min_len, max_len) = spec.doc_length_range;
    let mut rng = Rng::new(spec.seed);
    let mut records = Vec::with_capacity(spec.classes.len() * spec.docs_per_class);

    for (phase_id, class) in spec.classes.iter().enumerate() {
        for _ in 0..spec.docs_per_class {
            let len = min_len + rng.next_below((max_len - min_len + 1) as u64) as usize;
            let mut tokens: Vec<&str> = (0..len)
                .map(|_| fillers[rng.next_below(fillers.len() as u64) as usize].as_str())
                .collect();

            if spec.order_sensitive {
                // Place the shared pair at positions i < j in this class's
                // declared order.
                let i = rng.next_below((len - 1) as u64) as usize;
                let j = i + 1 + rng.next_below((len - 1 - i) as u64) as usize;
                tokens[i] = class.keywords[0].as_str();
                tokens[j] = class.keywords[1].as_str();
            } else {
                // Keyword density scales with length so the class signal
                // stays visible after mean pooling and across the
                // recurrence, roughly one keyword every six tokens.
                let inserts = (len / 6).max(1) + rng.next_below(2) as usize;
                for _ in 0..inserts {
                    let kw = &class.keywords[rng.next_below(class.keywords.len() as u64) as usize];
                    let pos = rng.next_below(len as u64) as usize;
                    tokens[pos] = kw.as_str();
                }
            }

            records.push(LabeledNarrative {
                text: tokens.join(" "),
                phase: map.label(phase_id).unwrap().to_string(),
                phase_id,
            });
        }
    }

    Ok((records, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_reproduces_the_corpus() {
        let spec = SyntheticSpec::default_seven(42);
        let (a, map_a) = generate_synthetic_corpus(&spec).unwrap();
        let (b, map_b) = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(map_a, map_b);
        assert_eq!(a.len(), 700);
    }

    #[test]
    fn presence_corpus_is_keyword_separable() {
        let spec = SyntheticSpec::default_seven(7);
        let (records, map) = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(map.len(), 7);
        for record in &records {
            let tokens: HashSet<&str> = record.text.split(' ').collect();
            for (class_id, class) in spec.classes.iter().enumerate() {
                let hits = class
                    .keywords
                    .iter()
                    .filter(|k| tokens.contains(k.as_str()))
                    .count();
                if class_id == record.phase_id {
                    assert!(hits >= 1, "own-class keyword missing in {:?}", record.text);
                } else {
                    assert_eq!(hits, 0, "foreign keyword present in {:?}", record.text);
                }
            }
        }
        // Bag-of-words oracle: classify by which class's keywords appear.
        let correct = records
            .iter()
            .filter(|r| {
                let tokens: HashSet<&str> = r.text.split(' ').collect();
                let predicted = spec
                    .classes
                    .iter()
                    .position(|c| c.keywords.iter().any(|k| tokens.contains(k.as_str())));
                predicted == Some(r.phase_id)
            })
            .count();
        assert_eq!(correct, records.len());
    }

    #[test]
    fn class_sizes_are_exact() {
        let mut spec = SyntheticSpec::default_seven(3);
        spec.docs_per_class = 17;
        let (records, map) = generate_synthetic_corpus(&spec).unwrap();
        for class_id in 0..map.len() {
            assert_eq!(
                records.iter().filter(|r| r.phase_id == class_id).count(),
                17
            );
        }
    }

    #[test]
    fn order_corpus_shares_the_pair_and_differs_in_order() {
        let spec = SyntheticSpec::default_order_pair(11);
        let (records, _) = generate_synthetic_corpus(&spec).unwrap();
        for record in &records {
            let tokens: Vec<&str> = record.text.split(' ').collect();
            let zulu = tokens.iter().position(|&t| t == "zulu").unwrap();
            let tango = tokens.iter().position(|&t| t == "tango").unwrap();
            if record.phase_id == 0 {
                assert!(zulu < tango);
            } else {
                assert!(tango < zulu);
            }
        }
    }

    #[test]
    fn zero_docs_per_class_is_invalid() {
        let mut spec = SyntheticSpec::default_seven(1);
        spec.docs_per_class = 0;
        assert!(matches!(
            generate_synthetic_corpus(&spec),
            Err(IngestError::InvalidSpec { .. })
        ));
    }

    #[test]
    fn overlapping_keywords_invalid_for_presence_corpus() {
        let mut spec = SyntheticSpec::default_seven(1);
        spec.classes[0].keywords.push("cruise".to_string());
        assert!(matches!(
            generate_synthetic_corpus(&spec),
            Err(IngestError::InvalidSpec { .. })
        ));
    }

    #[test]
    fn default_keywords_are_stable_under_default_rules() {
        // The end-to-end pipeline normalizes text before training; separability
        // must survive normalization, so the shipped keywords have to be fixed
        // points of the shipped rules.
        let rules = crate::textproc::default_rules();
        for spec in [
            SyntheticSpec::default_seven(0),
            SyntheticSpec::default_order_pair(0),
        ] {
            for class in &spec.classes {
                for kw in &class.keywords {
                    let normalized = crate::textproc::normalize(kw, &rules);
                    assert_eq!(normalized, vec![kw.clone()], "keyword {kw} is not stable");
                }
            }
        }
    }
}
