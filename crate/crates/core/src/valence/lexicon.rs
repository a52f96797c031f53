use std::collections::{BTreeMap, HashMap};

use super::{taxonomy, EmotionPrediction, EmotionScorer, ValenceError};
use crate::text::tokens;

const BUNDLED: &[(&str, &[&str])] = &[
    (
        "admiration",
        &[
            "admire",
            "admired",
            "awe",
            "marvel",
            "magnificent",
            "splendid",
            "inspiring",
        ],
    ),
    (
        "amusement",
        &[
            "laugh", "laughter", "amused", "funny", "jest", "giggle", "playful",
        ],
    ),
    (
        "approval",
        &[
            "approve", "approved", "agree", "endorse", "praise", "praised", "worthy",
        ],
    ),
    (
        "caring",
        &[
            "care", "caring", "tender", "gentle", "comfort", "nurture", "kindness",
        ],
    ),
    ("desire", &["desire", "longing", "yearn", "crave", "wish"]),
    (
        "excitement",
        &[
            "excited",
            "thrill",
            "thrilled",
            "eager",
            "exhilarating",
            "adventure",
        ],
    ),
    (
        "gratitude",
        &["grateful", "thankful", "thanks", "gratitude", "blessed"],
    ),
    (
        "joy",
        &[
            "joy", "joyful", "happy", "delight", "cheer", "glad", "jubilant", "radiant",
        ],
    ),
    (
        "love",
        &[
            "love",
            "beloved",
            "adore",
            "cherish",
            "affection",
            "embrace",
        ],
    ),
    (
        "optimism",
        &[
            "hope",
            "hopeful",
            "optimistic",
            "promise",
            "uplifting",
            "brighter",
            "progress",
        ],
    ),
    (
        "pride",
        &[
            "proud",
            "pride",
            "triumph",
            "honor",
            "victorious",
            "accomplished",
        ],
    ),
    (
        "relief",
        &["relief", "relieved", "safe", "respite", "ease", "calm"],
    ),
    (
        "anger",
        &["anger", "angry", "rage", "fury", "furious", "wrath"],
    ),
    (
        "annoyance",
        &["annoyed", "irritated", "bother", "nuisance", "grumble"],
    ),
    (
        "disappointment",
        &[
            "disappointed",
            "letdown",
            "failure",
            "failed",
            "futile",
            "dashed",
        ],
    ),
    (
        "disapproval",
        &["disapprove", "condemn", "reject", "blame", "scorn"],
    ),
    (
        "disgust",
        &["disgust", "foul", "rotten", "vile", "repulsive", "filth"],
    ),
    (
        "embarrassment",
        &["embarrassed", "shame", "ashamed", "humiliated", "awkward"],
    ),
    (
        "fear",
        &["fear", "afraid", "terror", "dread", "frightened", "peril"],
    ),
    ("grief", &["grief", "mourn", "mourning", "loss", "bereaved"]),
    (
        "nervousness",
        &[
            "nervous",
            "anxious",
            "uneasy",
            "worry",
            "tense",
            "trembling",
        ],
    ),
    (
        "remorse",
        &["remorse", "regret", "guilt", "sorry", "penance"],
    ),
    (
        "sadness",
        &[
            "sad", "sorrow", "gloom", "tears", "somber", "despair", "bleak", "setback",
        ],
    ),
    (
        "confusion",
        &["confused", "puzzled", "bewildered", "perplexed", "baffled"],
    ),
    (
        "curiosity",
        &["curious", "intrigued", "inquisitive", "wonder"],
    ),
    (
        "realization",
        &["realize", "realized", "understand", "recognition"],
    ),
    (
        "surprise",
        &["surprise", "surprised", "astonished", "unexpected", "shock"],
    ),
    ("neutral", &["ordinary", "usual", "routine", "plain"]),
];

/// Multi-label keyword scorer: a label's probability is its share of all
/// lexicon hits in the text.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    words: HashMap<String, &'static str>,
    lists: BTreeMap<&'static str, Vec<String>>,
}

impl Default for LexiconScorer {
    fn default() -> Self {
        let lists = BUNDLED
            .iter()
            .map(|(label, ws)| (*label, ws.iter().map(|w| w.to_string()).collect()))
            .collect();
        Self::from_lists(lists)
    }
}

impl LexiconScorer {
    /// Custom word lists keyed by taxonomy label. A word listed under more
    /// than one label counts for the first label in taxonomy order.
    pub fn new(lists: BTreeMap<String, Vec<String>>) -> Result<Self, ValenceError> {
        let mut checked = BTreeMap::new();
        for (label, words) in lists {
            let known = taxonomy()
                .find(|l| *l == label)
                .ok_or(ValenceError::UnknownLabel(label))?;
            checked.insert(known, words.iter().map(|w| w.to_lowercase()).collect());
        }
        Ok(Self::from_lists(checked))
    }

    fn from_lists(lists: BTreeMap<&'static str, Vec<String>>) -> Self {
        let mut words = HashMap::new();
        for label in taxonomy() {
            for w in lists.get(label).into_iter().flatten() {
                words.entry(w.clone()).or_insert(label);
            }
        }
        Self { words, lists }
    }

    pub fn label_of(&self, word: &str) -> Option<&'static str> {
        self.words.get(&word.to_lowercase()).copied()
    }

    pub fn words_for(&self, label: &str) -> &[String] {
        self.lists.get(label).map_or(&[], Vec::as_slice)
    }
}

impl EmotionScorer for LexiconScorer {
    fn name(&self) -> &str {
        "lexicon"
    }

    fn score(&self, text: &str) -> Result<Vec<EmotionPrediction>, String> {
        let mut hits: BTreeMap<&'static str, usize> = BTreeMap::new();
        let mut total = 0usize;
        for t in tokens(text) {
            if let Some(label) = self.words.get(&t) {
                *hits.entry(label).or_default() += 1;
                total += 1;
            }
        }
        Ok(hits
            .into_iter()
            .map(|(label, n)| EmotionPrediction::new(label, n as f64 / total as f64))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valence::{node_valence, ValenceMap};
    use std::collections::BTreeSet;

    #[test]
    fn bundled_lists_are_disjoint_and_cover_taxonomy() {
        let mut seen = BTreeSet::new();
        for (label, words) in BUNDLED {
            assert!(taxonomy().any(|l| l == *label), "{label}");
            assert!(!words.is_empty());
            for w in *words {
                assert!(seen.insert(*w), "`{w}` listed twice");
            }
        }
        assert_eq!(BUNDLED.len(), taxonomy().count());
    }

    #[test]
    fn hit_fractions() {
        let s = LexiconScorer::default();
        let preds = s.score("Joy! Such joy, yet a hint of fear.").unwrap();
        assert_eq!(
            preds,
            vec![
                EmotionPrediction::new("fear", 1.0 / 3.0),
                EmotionPrediction::new("joy", 2.0 / 3.0),
            ]
        );
        let v = node_valence(&preds, &ValenceMap::default(), 0.1).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        assert!(s.score("the cart rolls down the lane").unwrap().is_empty());
    }

    #[test]
    fn custom_lists() {
        let mut lists = BTreeMap::new();
        lists.insert("joy".to_string(), vec!["Sunny".to_string()]);
        let s = LexiconScorer::new(lists).unwrap();
        assert_eq!(
            s.score("sunny").unwrap(),
            vec![EmotionPrediction::new("joy", 1.0)]
        );
        assert_eq!(s.label_of("SUNNY"), Some("joy"));

        let mut bad = BTreeMap::new();
        bad.insert("smug".to_string(), vec![]);
        assert!(LexiconScorer::new(bad).is_err());
    }
}
