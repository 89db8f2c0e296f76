//! Edit distances over token sequences and ordered trees, plus the
//! head-final linearization and the random-tree generator used by the
//! metrics.

use rand::Rng;
use thiserror::Error;

use crate::tree::DepTree;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistanceError {
    #[error("a random tree needs at least one node")]
    EmptyTree,
}

/// Unit-cost Levenshtein distance between two sequences.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Head-final reordering of a tree: each head is emitted after the layouts
/// of all its dependents, which keep their relative order. Punctuation is
/// included. Returns 1-based positions.
pub fn head_final_linearize(t: &DepTree) -> Vec<usize> {
    let mut out = Vec::with_capacity(t.len());
    // explicit stack: (node, next child index)
    let mut stack = vec![(t.root(), 0usize)];
    while let Some((node, next)) = stack.pop() {
        let kids = t.children(node);
        if next < kids.len() {
            stack.push((node, next + 1));
            stack.push((kids[next], 0));
        } else {
            out.push(node);
        }
    }
    out
}

/// Ordered labeled tree. Nodes are indexed `0..len`; children are kept in
/// ascending node index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedTree<L> {
    labels: Vec<L>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeShapeError {
    #[error("tree has {0} roots")]
    Roots(usize),
    #[error("parent index {0} out of range")]
    ParentOutOfRange(usize),
    #[error("parent relation is cyclic")]
    Cycle,
}

impl<L> OrderedTree<L> {
    pub fn new(labels: Vec<L>, parent: Vec<Option<usize>>) -> Result<Self, TreeShapeError> {
        assert_eq!(labels.len(), parent.len());
        let n = labels.len();
        let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(TreeShapeError::Roots(roots.len()));
        }
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(TreeShapeError::ParentOutOfRange(p));
                }
                children[p].push(i);
            }
        }
        let tree = OrderedTree {
            labels,
            parent,
            children,
            root: roots[0],
        };
        if tree.postorder().len() != n {
            return Err(TreeShapeError::Cycle);
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn label(&self, node: usize) -> &L {
        &self.labels[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, 0usize)];
        while let Some((node, next)) = stack.pop() {
            if out.len() > self.len() {
                break;
            }
            let kids = &self.children[node];
            if next < kids.len() {
                stack.push((node, next + 1));
                stack.push((kids[next], 0));
            } else {
                out.push(node);
            }
        }
        out
    }
}

impl OrderedTree<usize> {
    /// The non-punctuation skeleton of a dependency tree. Nodes are labeled
    /// with their rank `1..=m` among content tokens; punctuation nodes are
    /// removed and their dependents attached to the nearest kept ancestor.
    /// A punctuation root word is kept so the result stays connected.
    pub fn from_dep_tree(t: &DepTree) -> Self {
        let keep: Vec<usize> = (1..=t.len())
            .filter(|&p| !t.is_punct(p) || p == t.root())
            .collect();
        let mut index = vec![usize::MAX; t.len() + 1];
        for (i, &p) in keep.iter().enumerate() {
            index[p] = i;
        }
        let parent = keep
            .iter()
            .map(|&p| {
                let mut h = t.head(p);
                while h != 0 && index[h] == usize::MAX {
                    h = t.head(h);
                }
                (h != 0).then(|| index[h])
            })
            .collect();
        let labels = (1..=keep.len()).collect();
        OrderedTree::new(labels, parent).expect("a dependency tree maps to a rooted tree")
    }
}

/// Random recursive tree on `n` nodes: node `k` (label `k + 1`) attaches to
/// a parent drawn uniformly from nodes `0..k`.
pub fn random_tree<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<OrderedTree<usize>, DistanceError> {
    if n == 0 {
        return Err(DistanceError::EmptyTree);
    }
    let mut parent = Vec::with_capacity(n);
    parent.push(None);
    for k in 1..n {
        parent.push(Some(rng.gen_range(0..k)));
    }
    Ok(OrderedTree::new((1..=n).collect(), parent).expect("uniform attachment yields a tree"))
}

/// Zhang–Shasha ordered tree edit distance with unit insertion and deletion
/// costs and a relabel cost of 0 for equal labels, 1 otherwise.
pub fn tree_edit_distance<L: PartialEq>(a: &OrderedTree<L>, b: &OrderedTree<L>) -> usize {
    let pa = Postorder::new(a);
    let pb = Postorder::new(b);
    let (n, m) = (pa.nodes.len(), pb.nodes.len());

    let mut tree_dist = vec![vec![0usize; m]; n];
    // forest distance buffer, reused across keyroot pairs
    let mut fd = vec![vec![0usize; m + 1]; n + 1];

    for &i in &pa.keyroots {
        for &j in &pb.keyroots {
            let li = pa.leftmost[i];
            let lj = pb.leftmost[j];
            // fd[x][y] covers postorder ranges li..li+x and lj..lj+y
            fd[0][0] = 0;
            for x in 1..=(i - li + 1) {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..=(j - lj + 1) {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..=(i - li + 1) {
                let ni = li + x - 1;
                for y in 1..=(j - lj + 1) {
                    let nj = lj + y - 1;
                    let del = fd[x - 1][y] + 1;
                    let ins = fd[x][y - 1] + 1;
                    if pa.leftmost[ni] == li && pb.leftmost[nj] == lj {
                        let relabel = usize::from(a.label(pa.nodes[ni]) != b.label(pb.nodes[nj]));
                        let d = del.min(ins).min(fd[x - 1][y - 1] + relabel);
                        fd[x][y] = d;
                        tree_dist[ni][nj] = d;
                    } else {
                        let px = pa.leftmost[ni] - li;
                        let py = pb.leftmost[nj] - lj;
                        fd[x][y] = del.min(ins).min(fd[px][py] + tree_dist[ni][nj]);
                    }
                }
            }
        }
    }
    tree_dist[n - 1][m - 1]
}

struct Postorder {
    // postorder index -> node id
    nodes: Vec<usize>,
    // postorder index -> postorder index of its leftmost leaf
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl Postorder {
    fn new<L>(t: &OrderedTree<L>) -> Self {
        let nodes = t.postorder();
        let mut rank = vec![0; t.len()];
        for (i, &node) in nodes.iter().enumerate() {
            rank[node] = i;
        }
        let mut leftmost = vec![0; nodes.len()];
        for (i, &node) in nodes.iter().enumerate() {
            leftmost[i] = match t.children(node).first() {
                // children precede their parent in postorder
                Some(&first) => leftmost[rank[first]],
                None => i,
            };
        }
        // keyroots: highest postorder node for each distinct leftmost leaf
        let mut seen = vec![false; nodes.len()];
        let mut keyroots = Vec::new();
        for i in (0..nodes.len()).rev() {
            if !seen[leftmost[i]] {
                seen[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.sort_unstable();
        Postorder {
            nodes,
            leftmost,
            keyroots,
        }
    }
}
