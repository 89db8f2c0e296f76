//! Adversarial treebanks: historical spellings and OCR-style character
//! noise. Only token forms change; ids, heads and relations are untouched.

use std::collections::HashMap;
use std::str::FromStr;

use log::{debug, warn};
use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::conllu::Treebank;
use crate::derived_rng;

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: &'static str },
    #[error("character fraction {0} outside (0, 1]")]
    Fraction(f64),
    #[error("tokens per sentence must be at least 1")]
    TokenCount,
    #[error("replacement alphabet is empty")]
    EmptyAlphabet,
    #[error("unknown alphabet profile '{0}'")]
    Profile(String),
}

/// Modern form to historical form, matched case-sensitively on whole tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpellingLexicon {
    map: HashMap<String, String>,
}

impl SpellingLexicon {
    /// Parses `modern<TAB>historical` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, AttackError> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |reason| AttackError::Lexicon {
                line: i + 1,
                reason,
            };
            let (modern, historical) = line
                .split_once('\t')
                .ok_or_else(|| err("expected modern<TAB>historical"))?;
            let (modern, historical) = (modern.trim(), historical.trim());
            if modern.is_empty() || historical.is_empty() {
                return Err(err("empty form"));
            }
            if modern == historical {
                return Err(err("identity mapping"));
            }
            map.insert(modern.to_owned(), historical.to_owned());
        }
        Ok(SpellingLexicon { map })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        SpellingLexicon {
            map: pairs
                .into_iter()
                .filter(|(m, h)| !m.is_empty() && m != h)
                .map(|(m, h)| (m.to_owned(), h.to_owned()))
                .collect(),
        }
    }

    pub fn get(&self, form: &str) -> Option<&str> {
        self.map.get(form).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Replaces every lexicon key by its historical form. Returns the attacked
/// treebank and the number of sentences with at least one replacement.
pub fn historical_attack(tb: &Treebank, lex: &SpellingLexicon) -> (Treebank, usize) {
    let mut out = tb.clone();
    let mut affected = 0;
    for s in &mut out.sentences {
        let mut hit = false;
        for t in &mut s.tokens {
            if let Some(h) = lex.get(&t.form) {
                t.form = h.to_owned();
                hit = true;
            }
        }
        affected += usize::from(hit);
    }
    (out, affected)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphabetProfile {
    English,
    German,
}

impl AlphabetProfile {
    pub fn chars(self) -> Vec<char> {
        let mut v: Vec<char> = ('a'..='z').collect();
        if self == AlphabetProfile::German {
            v.extend(['ä', 'ö', 'ü', 'ß']);
        }
        v
    }
}

impl FromStr for AlphabetProfile {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "english" | "en" => Ok(AlphabetProfile::English),
            "german" | "de" => Ok(AlphabetProfile::German),
            _ => Err(AttackError::Profile(s.to_owned())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    pub char_fraction: f64,
    pub tokens_per_sentence: usize,
    pub alphabet: Vec<char>,
    pub seed: u64,
}

impl AttackConfig {
    pub fn validate(&self) -> Result<(), AttackError> {
        if !(self.char_fraction > 0.0 && self.char_fraction <= 1.0) {
            return Err(AttackError::Fraction(self.char_fraction));
        }
        if self.tokens_per_sentence == 0 {
            return Err(AttackError::TokenCount);
        }
        if self.alphabet.is_empty() {
            return Err(AttackError::EmptyAlphabet);
        }
        Ok(())
    }

    /// Characters to replace in a token of `len` characters: the fraction
    /// rounded half up, at least one.
    pub fn chars_to_replace(&self, len: usize) -> usize {
        // the epsilon keeps products like 0.3 * 5 on the upper side of .5
        let k = (self.char_fraction * len as f64 + 0.5 + 1e-9).floor() as usize;
        k.clamp(1, len.max(1))
    }
}

/// Per sentence, picks `tokens_per_sentence` distinct non-punctuation tokens
/// and overwrites `chars_to_replace(len)` distinct character positions in
/// each with a different character from the alphabet.
///
/// Randomness is drawn from a generator keyed on the seed and sentence id,
/// so the output for a sentence does not depend on its neighbours.
pub fn ocr_attack(tb: &Treebank, cfg: &AttackConfig) -> Result<Treebank, AttackError> {
    cfg.validate()?;
    let mut out = tb.clone();
    for (idx, s) in out.sentences.iter_mut().enumerate() {
        let key = tb.sentence_key(idx);
        let mut rng = derived_rng(cfg.seed, &key);
        let candidates: Vec<usize> = s
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_punct() && !t.form.is_empty())
            .map(|(i, _)| i)
            .collect();
        let take = cfg.tokens_per_sentence.min(candidates.len());
        if take < cfg.tokens_per_sentence {
            debug!(
                "sentence {}: only {} of {} tokens can be attacked",
                key, take, cfg.tokens_per_sentence
            );
        }
        let mut chosen: Vec<usize> = sample(&mut rng, candidates.len(), take)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
        chosen.sort_unstable();
        for ti in chosen {
            let token = &mut s.tokens[ti];
            let mut chars: Vec<char> = token.form.chars().collect();
            let k = cfg.chars_to_replace(chars.len());
            let mut positions = sample(&mut rng, chars.len(), k).into_vec();
            positions.sort_unstable();
            for p in positions {
                match replacement(&mut rng, &cfg.alphabet, chars[p]) {
                    Some(c) => chars[p] = c,
                    None => warn!(
                        "sentence {}: no replacement for '{}' in the alphabet, position skipped",
                        key, chars[p]
                    ),
                }
            }
            token.form = chars.into_iter().collect();
        }
    }
    Ok(out)
}

/// Replacement characters follow the case of the character they overwrite.
fn replacement<R: Rng + ?Sized>(rng: &mut R, alphabet: &[char], original: char) -> Option<char> {
    let pool: Vec<char> = alphabet
        .iter()
        .map(|&c| match_case(c, original))
        .filter(|&c| c != original)
        .collect();
    if pool.is_empty() {
        return None;
    }
    Some(pool[rng.gen_range(0..pool.len())])
}

fn match_case(c: char, like: char) -> char {
    if like.is_uppercase() {
        let mut up = c.to_uppercase();
        if let (Some(u), None) = (up.next(), up.next()) {
            return u;
        }
    }
    c
}
