//! Per-sentence dependency-tree metrics.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::distances::{
    head_final_linearize, levenshtein, random_tree, tree_edit_distance, OrderedTree,
};
use crate::tree::DepTree;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("{0} is not defined for this tree")]
    NotDefined(Metric),
}

/// The fifteen metrics, in canonical reporting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Mdd,
    Ndd,
    RootDistance,
    Crossings,
    TreeHeight,
    DepthMean,
    DepthVar,
    TreeDegree,
    DegreeMean,
    DegreeVar,
    Leaves,
    HeadFinalRatio,
    HeadFinalDistance,
    LongestPathDistance,
    RandomTreeDistance,
}

impl Metric {
    pub const ALL: [Metric; 15] = [
        Metric::Mdd,
        Metric::Ndd,
        Metric::RootDistance,
        Metric::Crossings,
        Metric::TreeHeight,
        Metric::DepthMean,
        Metric::DepthVar,
        Metric::TreeDegree,
        Metric::DegreeMean,
        Metric::DegreeVar,
        Metric::Leaves,
        Metric::HeadFinalRatio,
        Metric::HeadFinalDistance,
        Metric::LongestPathDistance,
        Metric::RandomTreeDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mdd => "mdd",
            Metric::Ndd => "ndd",
            Metric::RootDistance => "root_distance",
            Metric::Crossings => "crossings",
            Metric::TreeHeight => "tree_height",
            Metric::DepthMean => "depth_mean",
            Metric::DepthVar => "depth_var",
            Metric::TreeDegree => "tree_degree",
            Metric::DegreeMean => "degree_mean",
            Metric::DegreeVar => "degree_var",
            Metric::Leaves => "leaves",
            Metric::HeadFinalRatio => "head_final_ratio",
            Metric::HeadFinalDistance => "head_final_distance",
            Metric::LongestPathDistance => "longest_path_distance",
            Metric::RandomTreeDistance => "random_tree_distance",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Counts and distances; the rest are ratios, means or variances.
    pub fn is_integer(self) -> bool {
        !matches!(
            self,
            Metric::Mdd
                | Metric::Ndd
                | Metric::DepthMean
                | Metric::DepthVar
                | Metric::DegreeMean
                | Metric::DegreeVar
                | Metric::HeadFinalRatio
        )
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric '{s}'"))
    }
}

/// All metric values for one sentence. Undefined values are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricVector {
    pub values: [Option<f64>; 15],
    /// Token count including punctuation.
    pub sentence_length: usize,
    pub content_length: usize,
}

impl MetricVector {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values[m.index()]
    }
}

pub fn mdd(t: &DepTree) -> Result<f64, MetricError> {
    let pairs = t.pairs();
    if pairs.is_empty() {
        return Err(MetricError::NotDefined(Metric::Mdd));
    }
    let total: usize = pairs.iter().map(|&(i, j)| i.abs_diff(j)).sum();
    Ok(total as f64 / pairs.len() as f64)
}

/// `|ln(mdd / sqrt(root_distance * content_length))|`
pub fn ndd(t: &DepTree) -> Result<f64, MetricError> {
    let m = mdd(t).map_err(|_| MetricError::NotDefined(Metric::Ndd))?;
    let scale = (root_distance(t) as f64 * t.content_length() as f64).sqrt();
    Ok((m / scale).ln().abs())
}

/// Raw position of the root word, punctuation included.
pub fn root_distance(t: &DepTree) -> usize {
    t.root()
}

/// Number of crossing pairs among non-punctuation, non-root edges.
pub fn crossings(t: &DepTree) -> usize {
    let arcs: Vec<(usize, usize)> = t
        .pairs()
        .into_iter()
        .map(|(d, h)| (d.min(h), d.max(h)))
        .collect();
    let mut count = 0;
    for (k, &(a, b)) in arcs.iter().enumerate() {
        for &(c, d) in &arcs[k + 1..] {
            if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                count += 1;
            }
        }
    }
    count
}

/// Edges on the longest path from the pseudo root down to a content word.
pub fn tree_height(t: &DepTree) -> usize {
    t.content_nodes().map(|p| t.depth(p) + 1).max().unwrap_or(0)
}

fn mean_var(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let values: Vec<f64> = values.collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Population mean and variance of content-word depths (root word = 0).
pub fn depth_stats(t: &DepTree) -> (f64, f64) {
    mean_var(t.content_nodes().map(|p| t.depth(p) as f64))
}

fn degree(t: &DepTree, pos: usize) -> usize {
    t.content_children(pos).count()
}

/// Maximum, population mean and population variance of content-word
/// out-degrees.
pub fn degree_stats(t: &DepTree) -> (usize, f64, f64) {
    let max = t.content_nodes().map(|p| degree(t, p)).max().unwrap_or(0);
    let (mean, var) = mean_var(t.content_nodes().map(|p| degree(t, p) as f64));
    (max, mean, var)
}

pub fn leaves(t: &DepTree) -> usize {
    t.content_nodes().filter(|&p| degree(t, p) == 0).count()
}

/// Mean over heads of the share of their dependents that precede them.
pub fn head_final_ratio(t: &DepTree) -> Result<f64, MetricError> {
    let ratios: Vec<f64> = t
        .content_nodes()
        .filter_map(|h| {
            let total = degree(t, h);
            (total > 0)
                .then(|| t.content_children(h).filter(|&c| c < h).count() as f64 / total as f64)
        })
        .collect();
    if ratios.is_empty() {
        return Err(MetricError::NotDefined(Metric::HeadFinalRatio));
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Token-level edit distance between the sentence and its head-final
/// reordering.
pub fn head_final_distance(t: &DepTree) -> usize {
    let original: Vec<&str> = (1..=t.len()).map(|p| t.form(p)).collect();
    let reordered: Vec<&str> = head_final_linearize(t)
        .into_iter()
        .map(|p| t.form(p))
        .collect();
    levenshtein(&original, &reordered)
}

/// Heaviest path from the pseudo root to a content word, each edge weighted
/// by its dependency distance and the pseudo-root edge by the root position.
pub fn longest_path_distance(t: &DepTree) -> usize {
    let mut weight = vec![0usize; t.len() + 1];
    let mut stack = vec![t.root()];
    weight[t.root()] = t.root();
    let mut best = 0;
    while let Some(p) = stack.pop() {
        if !t.is_punct(p) {
            best = best.max(weight[p]);
        }
        for &c in t.children(p) {
            weight[c] = weight[p] + c.abs_diff(p);
            stack.push(c);
        }
    }
    best
}

/// Tree edit distance between the content skeleton of `t` and a random
/// recursive tree with the same number of nodes.
pub fn random_tree_distance<R: Rng + ?Sized>(t: &DepTree, rng: &mut R) -> usize {
    let original = OrderedTree::from_dep_tree(t);
    let random = random_tree(original.len(), rng).expect("content tree is non-empty");
    tree_edit_distance(&original, &random)
}

/// Computes every metric. Metrics that are undefined for the tree are
/// recorded as `None`.
pub fn compute_all<R: Rng + ?Sized>(t: &DepTree, rng: &mut R) -> MetricVector {
    let mut values = [None; 15];
    let mut set = |m: Metric, v: f64| values[m.index()] = Some(v);
    if let Ok(v) = mdd(t) {
        set(Metric::Mdd, v);
    }
    if let Ok(v) = ndd(t) {
        set(Metric::Ndd, v);
    }
    set(Metric::RootDistance, root_distance(t) as f64);
    set(Metric::Crossings, crossings(t) as f64);
    if t.content_length() > 0 {
        set(Metric::TreeHeight, tree_height(t) as f64);
        let (dmean, dvar) = depth_stats(t);
        set(Metric::DepthMean, dmean);
        set(Metric::DepthVar, dvar);
        let (deg, gmean, gvar) = degree_stats(t);
        set(Metric::TreeDegree, deg as f64);
        set(Metric::DegreeMean, gmean);
        set(Metric::DegreeVar, gvar);
        set(Metric::Leaves, leaves(t) as f64);
        set(Metric::LongestPathDistance, longest_path_distance(t) as f64);
        set(
            Metric::RandomTreeDistance,
            random_tree_distance(t, rng) as f64,
        );
    }
    if let Ok(v) = head_final_ratio(t) {
        set(Metric::HeadFinalRatio, v);
    }
    set(Metric::HeadFinalDistance, head_final_distance(t) as f64);
    MetricVector {
        values,
        sentence_length: t.len(),
        content_length: t.content_length(),
    }
}
