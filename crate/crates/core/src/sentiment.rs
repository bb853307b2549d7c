//! Sentiment score mappings, the deterministic lexicon scorer used in tests
//! and offline runs, and evaluation against hand-assigned labels.

use std::collections::HashMap;
use std::io::{self, BufRead};
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::{real, Real};

/// Class probabilities for one comment; non-negative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbabilities<T> {
    pos: T,
    neu: T,
    neg: T,
}

impl<T: Real> ClassProbabilities<T> {
    pub fn new(pos: T, neu: T, neg: T) -> Result<Self> {
        let in_unit = |v: T| v >= T::zero() && v <= T::one();
        if !(in_unit(pos) && in_unit(neu) && in_unit(neg)) {
            return Err(Error::InvalidProbabilities(format!(
                "components must lie in [0, 1], got ({pos}, {neu}, {neg})"
            )));
        }
        let sum = pos + neu + neg;
        if (sum - T::one()).abs() > real(1e-6) {
            return Err(Error::InvalidProbabilities(format!(
                "components must sum to 1, got {sum}"
            )));
        }
        Ok(ClassProbabilities { pos, neu, neg })
    }

    pub fn pos(&self) -> T {
        self.pos
    }

    pub fn neu(&self) -> T {
        self.neu
    }

    pub fn neg(&self) -> T {
        self.neg
    }
}

/// Maps class probabilities onto [-0.5, 0.5]: positive weight plus half of
/// the neutral weight, recentered.
pub fn composite_score<T: Real>(p: &ClassProbabilities<T>) -> T {
    p.pos + real::<T>(0.5) * p.neu - real::<T>(0.5)
}

/// Three-way direction call for a stock mentioned in a comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionalLabel {
    Up,
    Neutral,
    Down,
}

pub fn directional_to_signed(label: DirectionalLabel) -> i32 {
    match label {
        DirectionalLabel::Up => 1,
        DirectionalLabel::Neutral => 0,
        DirectionalLabel::Down => -1,
    }
}

/// Which score family a raw value comes from when normalizing onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSource {
    /// Signed direction values in {-1, 0, 1}.
    Directional,
    /// Composite scores in [-0.5, 0.5].
    Composite,
}

/// Rescales either score family onto the shared [0, 1] comparison range.
pub fn normalize_for_comparison<T: Real>(source: ScoreSource, raw: T) -> Result<T> {
    match source {
        ScoreSource::Directional => {
            if raw != -T::one() && raw != T::zero() && raw != T::one() {
                return Err(Error::RawOutOfRange {
                    family: "directional",
                    value: raw.to_f64().unwrap_or(f64::NAN),
                });
            }
            Ok((raw + T::one()) / real(2.0))
        }
        ScoreSource::Composite => {
            let half = real::<T>(0.5);
            if raw < -half || raw > half {
                return Err(Error::RawOutOfRange {
                    family: "composite",
                    value: raw.to_f64().unwrap_or(f64::NAN),
                });
            }
            Ok(raw + half)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Pos,
    Neg,
}

/// Word list mapping lowercase words to a polarity.
#[derive(Debug, Clone)]
pub struct Lexicon {
    words: HashMap<String, Polarity>,
}

/// Neutral probability mass the lexicon scorer always reserves.
pub const DEFAULT_NEUTRAL_FLOOR: f64 = 0.1;

impl Lexicon {
    pub fn new(pairs: impl IntoIterator<Item = (String, Polarity)>) -> Result<Self> {
        let words: HashMap<String, Polarity> = pairs
            .into_iter()
            .map(|(w, p)| (w.to_lowercase(), p))
            .collect();
        if words.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        Ok(Lexicon { words })
    }

    /// Parses `word,polarity` lines with polarity `pos` or `neg`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut pairs = Vec::new();
        for (idx, line) in io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::ParseRow {
                path: path.to_path_buf(),
                line: idx as u64 + 1,
                msg,
            };
            let (word, polarity) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected \"word,polarity\"".to_string()))?;
            let polarity = match polarity.trim() {
                "pos" => Polarity::Pos,
                "neg" => Polarity::Neg,
                other => return Err(parse_err(format!("unknown polarity {other:?}"))),
            };
            pairs.push((word.trim().to_string(), polarity));
        }
        Lexicon::new(pairs)
    }

    pub fn polarity(&self, word: &str) -> Option<Polarity> {
        self.words.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Deterministic scorer: splits `body` into lowercase words, counts lexicon
/// hits and spreads the non-neutral mass by the pos/neg ratio.
pub fn lexicon_score<T: Real>(body: &str, lexicon: &Lexicon) -> ClassProbabilities<T> {
    lexicon_score_with_floor(body, lexicon, real(DEFAULT_NEUTRAL_FLOOR))
}

pub fn lexicon_score_with_floor<T: Real>(
    body: &str,
    lexicon: &Lexicon,
    neutral_floor: T,
) -> ClassProbabilities<T> {
    let mut pos_hits = 0usize;
    let mut neg_hits = 0usize;
    for token in body.split(|c: char| !c.is_alphanumeric()) {
        if token.is_empty() {
            continue;
        }
        match lexicon.polarity(&token.to_lowercase()) {
            Some(Polarity::Pos) => pos_hits += 1,
            Some(Polarity::Neg) => neg_hits += 1,
            None => {}
        }
    }
    let total = pos_hits + neg_hits;
    if total == 0 {
        return ClassProbabilities::new(T::zero(), T::one(), T::zero())
            .expect("pure neutral is valid");
    }
    let spread = T::one() - neutral_floor;
    let total_t = T::from_usize(total).expect("count fits scalar");
    let pos = T::from_usize(pos_hits).expect("count fits scalar") / total_t * spread;
    let neg = T::from_usize(neg_hits).expect("count fits scalar") / total_t * spread;
    ClassProbabilities {
        pos,
        neu: neutral_floor,
        neg,
    }
}

/// Hand-assigned ground-truth label for a comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HumanLabel {
    Positive,
    Neutral,
    Negative,
}

impl HumanLabel {
    pub const ALL: [HumanLabel; 3] = [HumanLabel::Positive, HumanLabel::Neutral, HumanLabel::Negative];

    pub fn index(self) -> usize {
        match self {
            HumanLabel::Positive => 0,
            HumanLabel::Neutral => 1,
            HumanLabel::Negative => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HumanLabel::Positive => "positive",
            HumanLabel::Neutral => "neutral",
            HumanLabel::Negative => "negative",
        }
    }
}

/// Buckets a continuous score into a 3-way label using a symmetric band
/// around zero.
pub fn score_to_label<T: Real>(score: T, neutral_band: T) -> HumanLabel {
    if score > neutral_band {
        HumanLabel::Positive
    } else if score < -neutral_band {
        HumanLabel::Negative
    } else {
        HumanLabel::Neutral
    }
}

/// Agreement between model scores and human labels.
///
/// `confusion[truth][predicted]` with label order positive, neutral,
/// negative.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport<T> {
    pub total: usize,
    pub matches: usize,
    pub accuracy: T,
    pub confusion: [[usize; 3]; 3],
}

pub fn evaluate_against_labels<T: Real>(
    pairs: &[(T, HumanLabel)],
    neutral_band: T,
) -> Result<AccuracyReport<T>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no score/label pairs"));
    }
    if neutral_band <= T::zero() {
        return Err(Error::InvalidParameter(format!(
            "neutral band must be positive, got {neutral_band}"
        )));
    }
    let mut confusion = [[0usize; 3]; 3];
    let mut matches = 0usize;
    for &(score, truth) in pairs {
        let predicted = score_to_label(score, neutral_band);
        confusion[truth.index()][predicted.index()] += 1;
        if predicted == truth {
            matches += 1;
        }
    }
    let accuracy = T::from_usize(matches).expect("count fits scalar")
        / T::from_usize(pairs.len()).expect("count fits scalar");
    Ok(AccuracyReport {
        total: pairs.len(),
        matches,
        accuracy,
        confusion,
    })
}
