//! Validated dependency trees.

use std::fmt;

use thiserror::Error;

use crate::conllu::Sentence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DefectKind {
    NoRoot,
    MultipleRoots,
    HeadOutOfRange,
    Cycle,
}

impl DefectKind {
    pub fn name(self) -> &'static str {
        match self {
            DefectKind::NoRoot => "no_root",
            DefectKind::MultipleRoots => "multiple_roots",
            DefectKind::HeadOutOfRange => "head_out_of_range",
            DefectKind::Cycle => "cycle",
        }
    }
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why a head assignment is not a single-rooted tree. `positions` lists the
/// offending 1-based token positions.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{kind} at positions {positions:?}")]
pub struct TreeDefect {
    pub kind: DefectKind,
    pub positions: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("position {pos} is outside 1..={len}")]
pub struct PositionError {
    pub pos: usize,
    pub len: usize,
}

/// A single-rooted dependency tree over positions `1..=n`.
///
/// Punctuation (UPOS `PUNCT`) stays part of the structure; metric code
/// consults [`DepTree::is_punct`] to drop it where required.
#[derive(Clone, Debug, PartialEq)]
pub struct DepTree {
    forms: Vec<String>,
    heads: Vec<usize>,
    punct: Vec<bool>,
    root: usize,
    // index 0 is the pseudo root
    children: Vec<Vec<usize>>,
    depths: Vec<usize>,
}

impl DepTree {
    /// Builds a tree from 1-based head indices (`heads[i]` is the head of
    /// position `i + 1`). Defects are checked in the order NoRoot,
    /// MultipleRoots, HeadOutOfRange, Cycle.
    pub fn new(heads: &[usize], punct: &[bool], forms: Vec<String>) -> Result<Self, TreeDefect> {
        assert_eq!(heads.len(), punct.len());
        assert_eq!(heads.len(), forms.len());
        let n = heads.len();

        let roots: Vec<usize> = (1..=n).filter(|&p| heads[p - 1] == 0).collect();
        if roots.is_empty() {
            return Err(TreeDefect {
                kind: DefectKind::NoRoot,
                positions: vec![],
            });
        }
        if roots.len() > 1 {
            return Err(TreeDefect {
                kind: DefectKind::MultipleRoots,
                positions: roots,
            });
        }
        let out_of_range: Vec<usize> = (1..=n).filter(|&p| heads[p - 1] > n).collect();
        if !out_of_range.is_empty() {
            return Err(TreeDefect {
                kind: DefectKind::HeadOutOfRange,
                positions: out_of_range,
            });
        }

        // depth by walking to the root; a walk longer than n steps is a cycle
        let mut depths = vec![usize::MAX; n + 1];
        depths[0] = 0;
        let mut cyclic = Vec::new();
        for start in 1..=n {
            let mut path = Vec::new();
            let mut cur = start;
            while depths[cur] == usize::MAX && path.len() <= n {
                path.push(cur);
                cur = heads[cur - 1];
            }
            if depths[cur] == usize::MAX {
                cyclic.push(start);
                continue;
            }
            let mut d = depths[cur];
            for &p in path.iter().rev() {
                d += 1;
                depths[p] = d;
            }
        }
        if !cyclic.is_empty() {
            return Err(TreeDefect {
                kind: DefectKind::Cycle,
                positions: cyclic,
            });
        }

        let mut children = vec![Vec::new(); n + 1];
        for p in 1..=n {
            children[heads[p - 1]].push(p);
        }
        // stored depth counts the pseudo-root edge; shift so the root word is 0
        let depths = depths[1..].iter().map(|d| d - 1).collect();

        Ok(DepTree {
            forms,
            heads: heads.to_vec(),
            punct: punct.to_vec(),
            root: roots[0],
            children,
            depths,
        })
    }

    /// A tree without punctuation and with placeholder forms.
    pub fn from_heads(heads: &[usize]) -> Result<Self, TreeDefect> {
        let forms = (1..=heads.len()).map(|i| format!("w{i}")).collect();
        Self::new(heads, &vec![false; heads.len()], forms)
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// 1-based position of the word attached to the pseudo root.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn head(&self, pos: usize) -> usize {
        self.heads[pos - 1]
    }

    pub fn is_punct(&self, pos: usize) -> bool {
        self.punct[pos - 1]
    }

    pub fn form(&self, pos: usize) -> &str {
        &self.forms[pos - 1]
    }

    pub fn forms(&self) -> &[String] {
        &self.forms
    }

    /// Dependents of `pos` in ascending position order; `children(0)` is
    /// the root word.
    pub fn children(&self, pos: usize) -> &[usize] {
        &self.children[pos]
    }

    /// Non-punctuation dependents of `pos`.
    pub fn content_children(&self, pos: usize) -> impl Iterator<Item = usize> + '_ {
        self.children[pos]
            .iter()
            .copied()
            .filter(|&c| !self.is_punct(c))
    }

    /// Positions of all non-punctuation tokens.
    pub fn content_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.len()).filter(|&p| !self.is_punct(p))
    }

    pub fn content_length(&self) -> usize {
        self.punct.iter().filter(|p| !**p).count()
    }

    /// Dependent–head pairs, excluding the root edge and every edge whose
    /// dependent is punctuation.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.content_nodes()
            .filter(|&p| p != self.root)
            .map(|p| (p, self.head(p)))
            .collect()
    }

    /// Number of edges from `pos` up to the root word (root word = 0).
    pub fn depth_of(&self, pos: usize) -> Result<usize, PositionError> {
        if pos == 0 || pos > self.len() {
            return Err(PositionError {
                pos,
                len: self.len(),
            });
        }
        Ok(self.depths[pos - 1])
    }

    pub(crate) fn depth(&self, pos: usize) -> usize {
        self.depths[pos - 1]
    }
}

/// Builds a [`DepTree`] from a parsed sentence.
pub fn build_tree(s: &Sentence) -> Result<DepTree, TreeDefect> {
    let heads: Vec<usize> = s.tokens.iter().map(|t| t.head).collect();
    let punct: Vec<bool> = s.tokens.iter().map(|t| t.is_punct()).collect();
    let forms = s.tokens.iter().map(|t| t.form.clone()).collect();
    DepTree::new(&heads, &punct, forms)
}
