//! Attachment scores for parses of raw text.
//!
//! Gold and system tokenizations may differ. Tokens are matched by the
//! character span they cover in the whitespace-free sentence string, and
//! UAS/LAS are reported as precision, recall and F1 over those matches.

use thiserror::Error;

use crate::conllu::{Sentence, Treebank};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("sentence {sentence}: gold and system text diverge at character {offset}")]
    RawTextMismatch { sentence: usize, offset: usize },
    #[error("gold has {gold} sentences, system has {system}")]
    SentenceCount { gold: usize, system: usize },
}

/// One-to-one, offset-monotone matching between gold and system tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenAlignment {
    /// `(gold index, system index)`, 0-based.
    pub pairs: Vec<(usize, usize)>,
    pub unaligned_gold: usize,
    pub unaligned_system: usize,
}

fn spans(s: &Sentence) -> (String, Vec<(usize, usize)>) {
    let mut text = String::new();
    let mut out = Vec::with_capacity(s.tokens.len());
    let mut offset = 0;
    for t in &s.tokens {
        let start = offset;
        for c in t.form.chars().filter(|c| !c.is_whitespace()) {
            text.push(c);
            offset += 1;
        }
        out.push((start, offset));
    }
    (text, out)
}

/// Aligns tokens covering identical character intervals. Partially
/// overlapping tokens stay unaligned.
pub fn align_tokens(gold: &Sentence, sys: &Sentence) -> Result<TokenAlignment, EvalError> {
    align_indexed(gold, sys, 0)
}

fn align_indexed(
    gold: &Sentence,
    sys: &Sentence,
    sentence: usize,
) -> Result<TokenAlignment, EvalError> {
    let (gtext, gspans) = spans(gold);
    let (stext, sspans) = spans(sys);
    if gtext != stext {
        let offset = gtext
            .chars()
            .zip(stext.chars())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| gtext.chars().count().min(stext.chars().count()));
        return Err(EvalError::RawTextMismatch { sentence, offset });
    }

    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < gspans.len() && j < sspans.len() {
        let (g, s) = (gspans[i], sspans[j]);
        if g == s {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if g.1 < s.1 || (g.1 == s.1 && g.0 > s.0) {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(TokenAlignment {
        unaligned_gold: gspans.len() - pairs.len(),
        unaligned_system: sspans.len() - pairs.len(),
        pairs,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Percentages from a correct count and the two token totals.
    pub fn from_counts(correct: usize, system: usize, gold: usize) -> Self {
        let pct = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        let precision = pct(correct, system);
        let recall = pct(correct, gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttachmentScore {
    pub uas: Prf,
    pub las: Prf,
    pub uas_correct: usize,
    pub las_correct: usize,
    pub gold_tokens: usize,
    pub system_tokens: usize,
}

#[derive(Default)]
struct Counts {
    uas: usize,
    las: usize,
    gold: usize,
    system: usize,
}

fn count_sentence(
    gold: &Sentence,
    sys: &Sentence,
    index: usize,
    acc: &mut Counts,
) -> Result<(), EvalError> {
    let al = align_indexed(gold, sys, index)?;
    // system index -> gold index
    let mut to_gold = vec![None; sys.tokens.len()];
    for &(g, s) in &al.pairs {
        to_gold[s] = Some(g);
    }
    for &(g, s) in &al.pairs {
        let gt = &gold.tokens[g];
        let st = &sys.tokens[s];
        let head_ok = match (st.head, gt.head) {
            (0, 0) => true,
            (0, _) | (_, 0) => false,
            (sh, gh) => st_head_gold(&to_gold, sh) == Some(gh - 1),
        };
        if head_ok {
            acc.uas += 1;
            if st.deprel == gt.deprel {
                acc.las += 1;
            }
        }
    }
    acc.gold += gold.tokens.len();
    acc.system += sys.tokens.len();
    Ok(())
}

fn st_head_gold(to_gold: &[Option<usize>], sys_head: usize) -> Option<usize> {
    to_gold.get(sys_head - 1).copied().flatten()
}

/// Scores a system treebank against gold, sentence by sentence in order.
pub fn score(gold: &Treebank, sys: &Treebank) -> Result<AttachmentScore, EvalError> {
    if gold.sentences.len() != sys.sentences.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.sentences.len(),
            system: sys.sentences.len(),
        });
    }
    let mut acc = Counts::default();
    for (i, (g, s)) in gold.sentences.iter().zip(&sys.sentences).enumerate() {
        count_sentence(g, s, i, &mut acc)?;
    }
    Ok(AttachmentScore {
        uas: Prf::from_counts(acc.uas, acc.system, acc.gold),
        las: Prf::from_counts(acc.las, acc.system, acc.gold),
        uas_correct: acc.uas,
        las_correct: acc.las,
        gold_tokens: acc.gold,
        system_tokens: acc.system,
    })
}
