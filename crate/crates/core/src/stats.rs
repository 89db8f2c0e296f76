//! Trend tests, rank correlation and chance-corrected agreement.

use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erfc;
use thiserror::Error;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const MIN_SERIES_LEN: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series of length {len} is shorter than the minimum {min}")]
    TooShort { len: usize, min: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("covariate has zero Mann-Kendall variance")]
    DegenerateCovariate,
    #[error("series is collinear with the covariate; conditional variance vanishes")]
    Collinear,
    #[error("statistic not defined: {0}")]
    NotDefined(&'static str),
    #[error("case ids differ at index {index}: '{left}' vs '{right}'")]
    CaseMismatch {
        index: usize,
        left: String,
        right: String,
    },
    #[error("item {item} has {found} ratings, expected {expected}")]
    RaterCount {
        item: usize,
        found: usize,
        expected: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Increasing,
    Decreasing,
    NoTrend,
}

impl Direction {
    pub const ALL: [Direction; 3] = [
        Direction::Increasing,
        Direction::Decreasing,
        Direction::NoTrend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Increasing => "increasing",
            Direction::Decreasing => "decreasing",
            Direction::NoTrend => "no_trend",
        }
    }

    pub fn sign(self) -> &'static str {
        match self {
            Direction::Increasing => "+",
            Direction::Decreasing => "-",
            Direction::NoTrend => "",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Direction::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown trend direction '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendResult {
    pub direction: Direction,
    /// Mann–Kendall score; fractional only for the partial test.
    pub s: f64,
    pub var_s: f64,
    pub z: f64,
    pub p: f64,
    pub n: usize,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn mk_score(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..xs.len() {
        for l in k + 1..xs.len() {
            s += sign(xs[l] - xs[k]);
        }
    }
    s
}

/// Sizes of groups of exactly equal values.
fn tie_groups(xs: &[f64]) -> Vec<usize> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut groups = Vec::new();
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            groups.push(run);
            run = 1;
        }
    }
    if !sorted.is_empty() {
        groups.push(run);
    }
    groups
}

fn mk_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let ties: f64 = tie_groups(xs)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * (t - 1.0) * (2.0 * t + 5.0)
        })
        .sum();
    (n * (n - 1.0) * (2.0 * n + 5.0) - ties) / 18.0
}

/// z with the ±1 continuity correction.
fn continuity_z(s: f64, var_s: f64) -> f64 {
    if s > 0.0 {
        (s - 1.0).max(0.0) / var_s.sqrt()
    } else if s < 0.0 {
        (s + 1.0).min(0.0) / var_s.sqrt()
    } else {
        0.0
    }
}

fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

fn decide(z: f64, p: f64, alpha: f64) -> Direction {
    if p < alpha && z > 0.0 {
        Direction::Increasing
    } else if p < alpha && z < 0.0 {
        Direction::Decreasing
    } else {
        Direction::NoTrend
    }
}

/// Two-sided Mann–Kendall test with tie-corrected variance.
pub fn mann_kendall(series: &[f64], alpha: f64) -> Result<TrendResult, StatsError> {
    mann_kendall_min(series, alpha, MIN_SERIES_LEN)
}

pub fn mann_kendall_min(
    series: &[f64],
    alpha: f64,
    min_len: usize,
) -> Result<TrendResult, StatsError> {
    if series.len() < min_len.max(2) {
        return Err(StatsError::TooShort {
            len: series.len(),
            min: min_len.max(2),
        });
    }
    check_finite(series)?;
    let s = mk_score(series);
    let var_s = mk_variance(series);
    if var_s <= 0.0 {
        return Ok(TrendResult {
            direction: Direction::NoTrend,
            s,
            var_s: 0.0,
            z: 0.0,
            p: 1.0,
            n: series.len(),
        });
    }
    let z = continuity_z(s, var_s);
    let p = two_sided_p(z);
    Ok(TrendResult {
        direction: decide(z, p, alpha),
        s,
        var_s,
        z,
        p,
        n: series.len(),
    })
}

/// Mid-ranks written as `(n + 1 + Σ_j sign(x_i − x_j)) / 2`.
fn sign_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    xs.iter()
        .map(|&xi| (n + 1.0 + xs.iter().map(|&xj| sign(xi - xj)).sum::<f64>()) / 2.0)
        .collect()
}

/// Partial Mann–Kendall test of `series` conditioned on `covariate`.
///
/// The covariance of the two MK scores is
/// `(K + 4 Σ R_x R_y − n (n + 1)²) / 3` with `K = Σ_{i<j} sign((x_j − x_i)(y_j − y_i))`
/// and sign-based mid-ranks `R`. The adjusted score
/// `S_x − (σ_xy / σ_y²) S_y` has variance `σ_x² − σ_xy² / σ_y²`; z receives the
/// same continuity correction as the plain test.
pub fn partial_mann_kendall(
    series: &[f64],
    covariate: &[f64],
    alpha: f64,
) -> Result<TrendResult, StatsError> {
    if series.len() != covariate.len() {
        return Err(StatsError::LengthMismatch(series.len(), covariate.len()));
    }
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(StatsError::TooShort {
            len: n,
            min: MIN_SERIES_LEN,
        });
    }
    check_finite(series)?;
    check_finite(covariate)?;

    let sx = mk_score(series);
    let sy = mk_score(covariate);
    let vx = mk_variance(series);
    let vy = mk_variance(covariate);
    if vy <= 0.0 {
        return Err(StatsError::DegenerateCovariate);
    }

    let mut k = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            k += sign((series[j] - series[i]) * (covariate[j] - covariate[i]));
        }
    }
    let rx = sign_ranks(series);
    let ry = sign_ranks(covariate);
    let rr: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let nf = n as f64;
    let cov = (k + 4.0 * rr - nf * (nf + 1.0) * (nf + 1.0)) / 3.0;

    let s = sx - cov / vy * sy;
    let var_s = vx - cov * cov / vy;
    if var_s <= 1e-9 * vx.max(1.0) {
        if vx <= 0.0 {
            // constant series: nothing to test
            return Ok(TrendResult {
                direction: Direction::NoTrend,
                s,
                var_s: 0.0,
                z: 0.0,
                p: 1.0,
                n,
            });
        }
        return Err(StatsError::Collinear);
    }
    let z = continuity_z(s, var_s);
    let p = two_sided_p(z);
    Ok(TrendResult {
        direction: decide(z, p, alpha),
        s,
        var_s,
        z,
        p,
        n,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn mid_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of mid-ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            len: x.len(),
            min: 2,
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    let rx = mid_ranks(x);
    let ry = mid_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::NotDefined(
            "spearman rho with a constant argument",
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Trend labels for an ordered list of cases. `None` marks a case the rater
/// could not label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSeries {
    pub ids: Vec<String>,
    pub labels: Vec<Option<Direction>>,
}

impl LabelSeries {
    pub fn new(ids: Vec<String>, labels: Vec<Option<Direction>>) -> Self {
        assert_eq!(ids.len(), labels.len());
        LabelSeries { ids, labels }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn check_aligned(&self, other: &LabelSeries) -> Result<(), StatsError> {
        if self.len() != other.len() {
            return Err(StatsError::LengthMismatch(self.len(), other.len()));
        }
        match self.ids.iter().zip(&other.ids).position(|(a, b)| a != b) {
            Some(index) => Err(StatsError::CaseMismatch {
                index,
                left: self.ids[index].clone(),
                right: other.ids[index].clone(),
            }),
            None => Ok(()),
        }
    }
}

/// Cohen's κ over the cases both raters labeled.
pub fn cohen_kappa(a: &LabelSeries, b: &LabelSeries) -> Result<f64, StatsError> {
    a.check_aligned(b)?;
    let pairs: Vec<(Direction, Direction)> = a
        .labels
        .iter()
        .zip(&b.labels)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    kappa_from_pairs(&pairs)
}

pub fn kappa_from_pairs(pairs: &[(Direction, Direction)]) -> Result<f64, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::NotDefined("cohen kappa without common cases"));
    }
    let n = pairs.len() as f64;
    let mut ma = [0.0; 3];
    let mut mb = [0.0; 3];
    let mut agree = 0.0;
    for &(x, y) in pairs {
        ma[x.index()] += 1.0;
        mb[y.index()] += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let po = agree / n;
    let pe: f64 = (0..3).map(|k| ma[k] / n * mb[k] / n).sum();
    if pe >= 1.0 {
        return if po >= 1.0 {
            Ok(1.0)
        } else {
            Err(StatsError::NotDefined(
                "cohen kappa with degenerate marginals",
            ))
        };
    }
    Ok((po - pe) / (1.0 - pe))
}

/// Fleiss' κ for `counts[item][category]` with a fixed number of raters
/// per item.
pub fn fleiss_kappa(counts: &[Vec<usize>], raters_per_item: usize) -> Result<f64, StatsError> {
    if raters_per_item < 2 {
        return Err(StatsError::NotDefined(
            "fleiss kappa needs at least two raters",
        ));
    }
    if counts.is_empty() {
        return Err(StatsError::NotDefined("fleiss kappa without items"));
    }
    let categories = counts[0].len();
    for (item, row) in counts.iter().enumerate() {
        let found: usize = row.iter().sum();
        if found != raters_per_item || row.len() != categories {
            return Err(StatsError::RaterCount {
                item,
                found,
                expected: raters_per_item,
            });
        }
    }
    let items = counts.len() as f64;
    let r = raters_per_item as f64;
    let mut totals = vec![0.0; categories];
    let mut p_bar = 0.0;
    for row in counts {
        let mut agree = 0.0;
        for (k, &c) in row.iter().enumerate() {
            let c = c as f64;
            totals[k] += c;
            agree += c * (c - 1.0);
        }
        p_bar += agree / (r * (r - 1.0));
    }
    p_bar /= items;
    let p_e: f64 = totals.iter().map(|t| (t / (items * r)).powi(2)).sum();
    if (1.0 - p_e).abs() < 1e-12 {
        // every rating falls in one category
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(labels: &[Direction]) -> LabelSeries {
        LabelSeries::new(
            (0..labels.len()).map(|i| i.to_string()).collect(),
            labels.iter().map(|&d| Some(d)).collect(),
        )
    }

    #[test]
    fn mk_increasing_eight() {
        let xs: Vec<f64> = (1..=8).map(f64::from).collect();
        let r = mann_kendall(&xs, 0.05).unwrap();
        assert_eq!(r.s, 28.0);
        assert!((r.var_s - 65.333_333).abs() < 1e-5);
        assert!((r.z - 27.0 / (196.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r.z - 3.34).abs() < 0.01);
        assert_eq!(r.direction, Direction::Increasing);

        let rev: Vec<f64> = xs.iter().rev().copied().collect();
        let d = mann_kendall(&rev, 0.05).unwrap();
        assert_eq!(d.direction, Direction::Decreasing);
        assert_eq!(d.z, -r.z);
        assert_eq!(d.p, r.p);
    }

    #[test]
    fn mk_constant_and_short() {
        let r = mann_kendall(&[2.0; 6], 0.05).unwrap();
        assert_eq!(
            (r.direction, r.s, r.z, r.p),
            (Direction::NoTrend, 0.0, 0.0, 1.0)
        );
        assert!(matches!(
            mann_kendall(&[1.0, 2.0], 0.05),
            Err(StatsError::TooShort { .. })
        ));
        assert_eq!(
            mann_kendall(&[1.0, f64::NAN, 3.0], 0.05),
            Err(StatsError::NonFinite)
        );
    }

    #[test]
    fn mk_tie_correction() {
        // ties {2,2} and {5,5,5}: var = (8*7*21 - 2*1*9 - 3*2*11) / 18
        let xs = [1.0, 2.0, 2.0, 5.0, 5.0, 5.0, 7.0, 8.0];
        let r = mann_kendall(&xs, 0.05).unwrap();
        assert!((r.var_s - (1176.0 - 18.0 - 66.0) / 18.0).abs() < 1e-12);
        assert_eq!(r.s, 24.0);
    }

    #[test]
    fn pmk_collinear_and_degenerate() {
        let xs = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0];
        assert_eq!(
            partial_mann_kendall(&xs, &xs, 0.05),
            Err(StatsError::Collinear)
        );
        assert_eq!(
            partial_mann_kendall(&xs, &[1.0; 6], 0.05),
            Err(StatsError::DegenerateCovariate)
        );
        assert!(matches!(
            partial_mann_kendall(&xs, &[1.0, 2.0], 0.05),
            Err(StatsError::LengthMismatch(6, 2))
        ));
    }

    #[test]
    fn spearman_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman_rho(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman_rho(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        let r = spearman_rho(&[1.0, 2.0, 2.0, 3.0], &[10.0, 20.0, 20.0, 40.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(spearman_rho(&x, &[1.0; 4]).is_err());
        assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn cohen_cases() {
        use Direction::*;
        let a = ls(&[Increasing, NoTrend, Decreasing, NoTrend]);
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);
        let up = ls(&[Increasing; 4]);
        let down = ls(&[Decreasing; 4]);
        assert_eq!(cohen_kappa(&up, &down).unwrap(), 0.0);
        assert_eq!(cohen_kappa(&up, &up).unwrap(), 1.0);

        // 2x: po = 0.5; marginals a {I:2, N:2}, b {I:1, N:3}: pe = .5*.25 + .5*.75 = .5
        let a = ls(&[Increasing, Increasing, NoTrend, NoTrend]);
        let b = ls(&[Increasing, NoTrend, NoTrend, NoTrend]);
        // agreements: 1st and 3rd and 4th => po = 0.75
        assert!((cohen_kappa(&a, &b).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(cohen_kappa(&a, &b).unwrap(), cohen_kappa(&b, &a).unwrap());

        let mut other = a.clone();
        other.ids[2] = "x".into();
        assert!(matches!(
            cohen_kappa(&a, &other),
            Err(StatsError::CaseMismatch { index: 2, .. })
        ));
    }

    #[test]
    fn fleiss_cases() {
        assert_eq!(
            fleiss_kappa(&[vec![5, 0, 0], vec![0, 5, 0]], 5).unwrap(),
            1.0
        );
        assert_eq!(
            fleiss_kappa(&[vec![0, 0, 5], vec![0, 0, 5]], 5).unwrap(),
            1.0
        );
        assert!((fleiss_kappa(&[vec![1, 1, 0], vec![1, 1, 0]], 2).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            fleiss_kappa(&[vec![1, 1, 0], vec![1, 0, 0]], 2),
            Err(StatsError::RaterCount { item: 1, .. })
        ));
    }
}
