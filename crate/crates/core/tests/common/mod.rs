//! Fixtures and naive reference implementations shared by the integration
//! tests. The oracles deliberately avoid the library's own helpers.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use depdrift::conllu::{parse_conllu, Sentence, Treebank};

pub const WORKED_EXAMPLE: &str = "\
# sent_id = w1
# decade = 1990
# text = Das hat alles sehr gut geklappt!
1\tDas\tder\tPRON\t_\t_\t6\tnsubj\t_\t_
2\that\thaben\tAUX\t_\t_\t6\taux\t_\t_
3\talles\talle\tPRON\t_\t_\t1\tdet\t_\t_
4\tsehr\tsehr\tADV\t_\t_\t5\tadvmod\t_\t_
5\tgut\tgut\tADJ\t_\t_\t6\tadvmod\t_\t_
6\tgeklappt\tklappen\tVERB\t_\t_\t0\troot\t_\tSpaceAfter=No
7\t!\t!\tPUNCT\t_\t_\t6\tpunct\t_\t_

";

pub fn worked_example() -> Sentence {
    parse_conllu(WORKED_EXAMPLE).unwrap().sentences.remove(0)
}

/// CoNLL-U for one sentence from forms, UPOS tags, heads and labels.
pub fn conllu_sentence(id: &str, year: Option<i32>, rows: &[(&str, &str, usize, &str)]) -> String {
    let mut s = format!("# sent_id = {id}\n");
    if let Some(y) = year {
        s.push_str(&format!("# decade = {y}\n"));
    }
    for (i, (form, upos, head, rel)) in rows.iter().enumerate() {
        s.push_str(&format!(
            "{}\t{form}\t_\t{upos}\t_\t_\t{head}\t{rel}\t_\t_\n",
            i + 1
        ));
    }
    s.push('\n');
    s
}

pub fn treebank(text: &str) -> Treebank {
    parse_conllu(text).unwrap()
}

/// Every head vector over `n` tokens (each head in `0..=n`).
pub fn head_vectors(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=n).map(move |h| {
                    let mut w = v.clone();
                    w.push(h);
                    w
                })
            })
            .collect();
    }
    out
}

/// Exactly one root and every token reaches it.
pub fn is_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    (1..=n).all(|start| {
        let mut p = start;
        for _ in 0..=n {
            if p == 0 {
                return true;
            }
            p = heads[p - 1];
        }
        false
    })
}

/// Reference values for one tree given its heads and punctuation mask.
pub struct Naive<'a> {
    pub heads: &'a [usize],
    pub punct: &'a [bool],
}

impl Naive<'_> {
    fn n(&self) -> usize {
        self.heads.len()
    }

    fn head(&self, p: usize) -> usize {
        self.heads[p - 1]
    }

    fn content(&self) -> Vec<usize> {
        (1..=self.n()).filter(|&p| !self.punct[p - 1]).collect()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.content()
            .into_iter()
            .filter(|&p| self.head(p) != 0)
            .map(|p| (p, self.head(p)))
            .collect()
    }

    pub fn mdd(&self) -> Option<f64> {
        let e = self.edges();
        if e.is_empty() {
            return None;
        }
        let sum: i64 = e.iter().map(|&(d, h)| (d as i64 - h as i64).abs()).sum();
        Some(sum as f64 / e.len() as f64)
    }

    pub fn crossings(&self) -> usize {
        let e = self.edges();
        let mut c = 0;
        for x in 0..e.len() {
            for y in 0..e.len() {
                if x == y {
                    continue;
                }
                let (a, b) = (e[x].0.min(e[x].1), e[x].0.max(e[x].1));
                let (c2, d) = (e[y].0.min(e[y].1), e[y].0.max(e[y].1));
                if a < c2 && c2 < b && b < d {
                    c += 1;
                }
            }
        }
        c
    }

    pub fn depth(&self, p: usize) -> usize {
        let mut d = 0;
        let mut q = p;
        while self.head(q) != 0 {
            q = self.head(q);
            d += 1;
        }
        d
    }

    fn out_degree(&self, p: usize) -> usize {
        self.content()
            .into_iter()
            .filter(|&c| self.head(c) == p)
            .count()
    }

    pub fn leaves(&self) -> usize {
        self.content()
            .into_iter()
            .filter(|&p| self.out_degree(p) == 0)
            .count()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mut mean = 0.0;
        for x in xs {
            mean += x;
        }
        mean /= n;
        let mut var = 0.0;
        for x in xs {
            var += (x - mean).powi(2);
        }
        (mean, var / n)
    }

    pub fn depth_stats(&self) -> (f64, f64) {
        let d: Vec<f64> = self
            .content()
            .into_iter()
            .map(|p| self.depth(p) as f64)
            .collect();
        Self::mean_var(&d)
    }

    pub fn degree_stats(&self) -> (usize, f64, f64) {
        let d: Vec<usize> = self
            .content()
            .into_iter()
            .map(|p| self.out_degree(p))
            .collect();
        let f: Vec<f64> = d.iter().map(|&x| x as f64).collect();
        let (m, v) = Self::mean_var(&f);
        (*d.iter().max().unwrap(), m, v)
    }

    /// Height counted in edges from the pseudo root.
    pub fn height(&self) -> usize {
        self.content()
            .into_iter()
            .map(|p| self.depth(p) + 1)
            .max()
            .unwrap()
    }

    pub fn head_final_ratio(&self) -> Option<f64> {
        let mut ratios = Vec::new();
        for h in self.content() {
            let deps: Vec<usize> = self
                .content()
                .into_iter()
                .filter(|&c| self.head(c) == h)
                .collect();
            if deps.is_empty() {
                continue;
            }
            let left = deps.iter().filter(|&&d| d < h).count();
            ratios.push(left as f64 / deps.len() as f64);
        }
        if ratios.is_empty() {
            None
        } else {
            Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
        }
    }

    /// Maximum weight over all pseudo-root-to-content-word paths.
    pub fn longest_path(&self) -> usize {
        self.content()
            .into_iter()
            .map(|p| {
                let mut w = 0;
                let mut q = p;
                loop {
                    let h = self.head(q);
                    if h == 0 {
                        w += q;
                        break;
                    }
                    w += q.abs_diff(h);
                    q = h;
                }
                w
            })
            .max()
            .unwrap()
    }

    /// Head-final order by recursion: dependents' blocks left to right,
    /// then the head.
    pub fn head_final_order(&self) -> Vec<usize> {
        fn emit(n: &Naive, node: usize, out: &mut Vec<usize>) {
            for c in 1..=n.n() {
                if n.head(c) == node {
                    emit(n, c, out);
                }
            }
            out.push(node);
        }
        let root = (1..=self.n()).find(|&p| self.head(p) == 0).unwrap();
        let mut out = Vec::new();
        emit(self, root, &mut out);
        out
    }
}

/// Edit distance by memoized recursion on suffixes.
pub fn edit_distance_rec<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Every string over `alphabet` of length at most `max_len`.
pub fn all_strings(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Shortest sequence of single-symbol insertions, deletions and
/// substitutions from `start` to every string of the space, by breadth-first
/// search. Intermediate strings never need to be longer than `max_len` or
/// use symbols outside the alphabet.
pub fn edit_bfs(start: &[u8], alphabet: &[u8], max_len: usize) -> HashMap<Vec<u8>, usize> {
    let mut dist = HashMap::new();
    dist.insert(start.to_vec(), 0);
    let mut queue = VecDeque::from([start.to_vec()]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        let mut next = Vec::new();
        for i in 0..s.len() {
            let mut t = s.clone();
            t.remove(i);
            next.push(t);
            for &c in alphabet {
                if c != s[i] {
                    let mut t = s.clone();
                    t[i] = c;
                    next.push(t);
                }
            }
        }
        if s.len() < max_len {
            for i in 0..=s.len() {
                for &c in alphabet {
                    let mut t = s.clone();
                    t.insert(i, c);
                    next.push(t);
                }
            }
        }
        for t in next {
            if !dist.contains_key(&t) {
                dist.insert(t.clone(), d + 1);
                queue.push_back(t);
            }
        }
    }
    dist
}

/// Ordered tree given by parent pointers in preorder (node 0 is the root).
#[derive(Clone, Debug)]
pub struct Shape {
    pub parent: Vec<Option<usize>>,
    pub labels: Vec<u8>,
}

/// All ordered tree shapes on `n` nodes, numbered in preorder.
pub fn ordered_shapes(n: usize) -> Vec<Vec<Option<usize>>> {
    fn extend(parent: Vec<Option<usize>>, n: usize, out: &mut Vec<Vec<Option<usize>>>) {
        if parent.len() == n {
            out.push(parent);
            return;
        }
        // a new node in preorder attaches to a node on the rightmost path
        let mut path = vec![parent.len() - 1];
        while let Some(p) = parent[*path.last().unwrap()] {
            path.push(p);
        }
        for &p in &path {
            let mut next = parent.clone();
            next.push(Some(p));
            extend(next, n, out);
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        extend(vec![None], n, &mut out);
    }
    out
}

impl Shape {
    fn is_ancestor(&self, a: usize, mut b: usize) -> bool {
        while let Some(p) = self.parent[b] {
            if p == a {
                return true;
            }
            b = p;
        }
        false
    }

    // preorder numbering: a precedes b and is not its ancestor
    fn is_left_of(&self, a: usize, b: usize) -> bool {
        a < b && !self.is_ancestor(a, b)
    }
}

/// Tree edit distance as the cheapest valid mapping, found by enumerating
/// every partial one-to-one mapping between the node sets.
pub fn ted_by_mappings(a: &Shape, b: &Shape) -> usize {
    let (n, m) = (a.parent.len(), b.parent.len());
    let mut best = n + m;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; m];

    fn rec(
        a: &Shape,
        b: &Shape,
        i: usize,
        pairs: &mut Vec<(usize, usize)>,
        used: &mut [bool],
        best: &mut usize,
    ) {
        let (n, m) = (a.parent.len(), b.parent.len());
        if i == n {
            let relabel = pairs
                .iter()
                .filter(|&&(x, y)| a.labels[x] != b.labels[y])
                .count();
            let cost = relabel + (n - pairs.len()) + (m - pairs.len());
            *best = (*best).min(cost);
            return;
        }
        rec(a, b, i + 1, pairs, used, best);
        for j in 0..m {
            if used[j] {
                continue;
            }
            let ok = pairs.iter().all(|&(x, y)| {
                a.is_ancestor(x, i) == b.is_ancestor(y, j)
                    && a.is_ancestor(i, x) == b.is_ancestor(j, y)
                    && a.is_left_of(x, i) == b.is_left_of(y, j)
                    && a.is_left_of(i, x) == b.is_left_of(j, y)
            });
            if ok {
                used[j] = true;
                pairs.push((i, j));
                rec(a, b, i + 1, pairs, used, best);
                pairs.pop();
                used[j] = false;
            }
        }
    }
    rec(a, b, 0, &mut pairs, &mut used, &mut best);
    best
}

// ---------------------------------------------------------------------------
// Exhaustive comparisons, returning the number of cases checked

use depdrift::distances::{head_final_linearize, levenshtein, tree_edit_distance, OrderedTree};
use depdrift::metrics;
use depdrift::tree::DepTree;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn check_tree(heads: &[usize], punct: &[bool]) -> Result<(), String> {
    let forms: Vec<String> = (1..=heads.len()).map(|i| format!("w{i}")).collect();
    let t = DepTree::new(heads, punct, forms.clone()).map_err(|e| format!("{heads:?}: {e}"))?;
    let o = Naive { heads, punct };
    let fail = |what: &str| {
        Err(format!(
            "{what} differs for heads {heads:?} punct {punct:?}"
        ))
    };

    match (metrics::mdd(&t).ok(), o.mdd()) {
        (Some(a), Some(b)) if close(a, b) => {}
        (None, None) => {}
        _ => return fail("mdd"),
    }
    if metrics::crossings(&t) != o.crossings() {
        return fail("crossings");
    }
    if metrics::leaves(&t) != o.leaves() {
        return fail("leaves");
    }
    if metrics::tree_height(&t) != o.height() {
        return fail("tree_height");
    }
    let (dm, dv) = metrics::depth_stats(&t);
    let (om, ov) = o.depth_stats();
    if !close(dm, om) || !close(dv, ov) {
        return fail("depth_stats");
    }
    let (g, gm, gv) = metrics::degree_stats(&t);
    let (og, ogm, ogv) = o.degree_stats();
    if g != og || !close(gm, ogm) || !close(gv, ogv) {
        return fail("degree_stats");
    }
    match (metrics::head_final_ratio(&t).ok(), o.head_final_ratio()) {
        (Some(a), Some(b)) if close(a, b) => {}
        (None, None) => {}
        _ => return fail("head_final_ratio"),
    }
    if metrics::longest_path_distance(&t) != o.longest_path() {
        return fail("longest_path_distance");
    }
    let order = o.head_final_order();
    if head_final_linearize(&t) != order {
        return fail("head_final_linearize");
    }
    let reordered: Vec<&String> = order.iter().map(|&p| &forms[p - 1]).collect();
    let original: Vec<&String> = forms.iter().collect();
    if metrics::head_final_distance(&t) != edit_distance_rec(&original, &reordered) {
        return fail("head_final_distance");
    }
    Ok(())
}

/// All trees on up to `max_content` tokens without punctuation, plus every
/// punctuation mask leaving at least one content token on up to
/// `max_with_punct` tokens. Also checks that exactly the trees are accepted.
pub fn exhaustive_tree_metrics(max_content: usize, max_with_punct: usize) -> Result<usize, String> {
    let mut checked = 0;
    for n in 1..=max_content.max(max_with_punct) {
        for heads in head_vectors(n) {
            let accepted = DepTree::from_heads(&heads).is_ok();
            if accepted != is_tree(&heads) {
                return Err(format!("tree validation disagrees on {heads:?}"));
            }
            if !accepted {
                continue;
            }
            if n <= max_content {
                check_tree(&heads, &vec![false; n])?;
                checked += 1;
            }
            if n <= max_with_punct {
                for mask in 1..(1u32 << n) - 1 {
                    let punct: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                    check_tree(&heads, &punct)?;
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

/// Levenshtein against breadth-first search over all strings up to
/// `max_len` on a small alphabet.
pub fn exhaustive_levenshtein(alphabet: &[u8], max_len: usize) -> Result<usize, String> {
    let all = all_strings(alphabet, max_len);
    let mut checked = 0;
    for a in &all {
        let dist = edit_bfs(a, alphabet, max_len);
        for b in &all {
            let want = dist[b];
            if levenshtein(a, b) != want {
                return Err(format!("levenshtein({a:?}, {b:?}) != {want}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn to_ordered(s: &Shape) -> OrderedTree<u8> {
    OrderedTree::new(s.labels.clone(), s.parent.clone()).unwrap()
}

/// Zhang–Shasha against mapping enumeration over every pair of ordered
/// shapes up to `max_nodes`, under several labelings.
pub fn exhaustive_tree_edit(max_nodes: usize) -> Result<usize, String> {
    let mut trees = Vec::new();
    for n in 1..=max_nodes {
        for parent in ordered_shapes(n) {
            // unique labels, all equal, and alternating two labels
            for scheme in 0..3u8 {
                let labels = (0..n as u8)
                    .map(|i| match scheme {
                        0 => i,
                        1 => 0,
                        _ => i % 2,
                    })
                    .collect();
                trees.push(Shape {
                    parent: parent.clone(),
                    labels,
                });
            }
        }
    }
    let mut checked = 0;
    for a in &trees {
        for b in &trees {
            let want = ted_by_mappings(a, b);
            let got = tree_edit_distance(&to_ordered(a), &to_ordered(b));
            if got != want {
                return Err(format!(
                    "tree edit distance {got} != {want} for {a:?} vs {b:?}"
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
