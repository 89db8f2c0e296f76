//! Per-parser trend analysis over length bins and period groups, and the
//! cross-parser summaries built on top of it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{Grouping, PeriodGroup};
use crate::metrics::Metric;
use crate::stats::{
    cohen_kappa, fleiss_kappa, mann_kendall, partial_mann_kendall, spearman_rho, Direction,
    LabelSeries, StatsError, TrendResult,
};
use crate::table::{Table, TableError};

#[derive(Debug, Error)]
pub enum TrendError {
    #[error(
        "parser '{parser}', {metric} at length {anchor}: period {period} has no defined values"
    )]
    EmptyPeriod {
        parser: String,
        metric: Metric,
        anchor: usize,
        period: PeriodGroup,
    },
    #[error("parser '{parser}': no observations for cells {cells}")]
    MissingCells { parser: String, cells: String },
    #[error("parser '{parser}' has no observations")]
    UnknownParser { parser: String },
    #[error("sentence '{sent_id}' of parser '{parser}' has no period")]
    NoPeriod { parser: String, sent_id: String },
    #[error("duplicate observation ({parser}, {sent_id})")]
    Duplicate { parser: String, sent_id: String },
    #[error("parser '{parser}', {metric} at length {anchor}: {source}")]
    Test {
        parser: String,
        metric: Metric,
        anchor: usize,
        source: StatsError,
    },
    #[error("need at least {needed} label tables, got {got}")]
    TooFewTables { needed: usize, got: usize },
    #[error("label tables are not aligned: {0}")]
    Misaligned(StatsError),
    #[error("observation keys differ: {only_original} only in original, {only_corrected} only in corrected")]
    KeyMismatch {
        only_original: String,
        only_corrected: String,
    },
    #[error("invalid table: {0}")]
    Table(#[from] TableError),
}

/// One parsed sentence of one parser.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub parser: String,
    pub sent_id: String,
    /// Year, when known.
    pub year: Option<i32>,
    /// Token count including punctuation.
    pub length: usize,
    pub values: [Option<f64>; 15],
}

impl Observation {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values[m.index()]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservationTable {
    pub rows: Vec<Observation>,
}

pub const METRIC_TABLE_KEYS: [&str; 4] = ["sent_id", "parser", "period", "length"];

impl ObservationTable {
    pub fn new(rows: Vec<Observation>) -> Result<Self, TrendError> {
        let mut seen = BTreeSet::new();
        for r in &rows {
            if !seen.insert((r.parser.as_str(), r.sent_id.as_str())) {
                return Err(TrendError::Duplicate {
                    parser: r.parser.clone(),
                    sent_id: r.sent_id.clone(),
                });
            }
        }
        Ok(ObservationTable { rows })
    }

    /// Reads a metric table (`sent_id, parser, period, length` followed by
    /// one column per metric).
    pub fn from_table(t: &Table) -> Result<Self, TrendError> {
        let key_cols: Vec<usize> = METRIC_TABLE_KEYS
            .iter()
            .map(|k| t.column(k))
            .collect::<Result<_, _>>()?;
        let metric_cols: Vec<usize> = Metric::ALL
            .iter()
            .map(|m| t.column(m.name()))
            .collect::<Result<_, _>>()?;
        let bad = |row: usize, col: usize| {
            TrendError::Table(TableError::Value {
                row: row + 1,
                column: t.header[col].clone(),
                value: t.rows[row][col].clone(),
            })
        };
        let mut rows = Vec::with_capacity(t.rows.len());
        for (i, r) in t.rows.iter().enumerate() {
            let period = &r[key_cols[2]];
            let year = if period.is_empty() {
                None
            } else {
                Some(period.parse().map_err(|_| bad(i, key_cols[2]))?)
            };
            let mut values = [None; 15];
            for (k, &c) in metric_cols.iter().enumerate() {
                if !r[c].is_empty() {
                    values[k] = Some(r[c].parse().map_err(|_| bad(i, c))?);
                }
            }
            rows.push(Observation {
                sent_id: r[key_cols[0]].clone(),
                parser: r[key_cols[1]].clone(),
                year,
                length: r[key_cols[3]].parse().map_err(|_| bad(i, key_cols[3]))?,
                values,
            });
        }
        ObservationTable::new(rows)
    }

    /// Parser names in order of first appearance.
    pub fn parsers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.parser) {
                out.push(r.parser.clone());
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SeriesMode {
    /// One mean per period group.
    #[default]
    PeriodMean,
    /// Every sentence value, ordered by period group.
    Pooled,
}

impl FromStr for SeriesMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "period-mean" | "mean" => Ok(SeriesMode::PeriodMean),
            "pooled" => Ok(SeriesMode::Pooled),
            _ => Err(format!("unknown series mode '{s}'")),
        }
    }
}

/// A time series with its sentence-length covariate.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub periods: Vec<PeriodGroup>,
    pub values: Vec<f64>,
    pub lengths: Vec<f64>,
}

/// Series of one metric for one parser and length bin. Sentences outside
/// every period group or length bin are ignored.
pub fn build_series(
    tbl: &ObservationTable,
    parser: &str,
    metric: Metric,
    anchor: usize,
    grouping: &Grouping,
    mode: SeriesMode,
) -> Result<Series, TrendError> {
    let mut by_period: BTreeMap<PeriodGroup, Vec<(f64, f64)>> =
        grouping.periods.iter().map(|&g| (g, Vec::new())).collect();
    for r in tbl.rows.iter().filter(|r| r.parser == parser) {
        let year = r.year.ok_or_else(|| TrendError::NoPeriod {
            parser: r.parser.clone(),
            sent_id: r.sent_id.clone(),
        })?;
        if grouping.anchor_for(r.length) != Some(anchor) {
            continue;
        }
        let (Some(group), Some(v)) = (grouping.period_for(year), r.get(metric)) else {
            continue;
        };
        by_period
            .entry(group)
            .or_default()
            .push((v, r.length as f64));
    }

    let mut series = Series {
        periods: Vec::new(),
        values: Vec::new(),
        lengths: Vec::new(),
    };
    for (group, obs) in by_period {
        if obs.is_empty() {
            return Err(TrendError::EmptyPeriod {
                parser: parser.to_owned(),
                metric,
                anchor,
                period: group,
            });
        }
        match mode {
            SeriesMode::PeriodMean => {
                let n = obs.len() as f64;
                series.periods.push(group);
                series
                    .values
                    .push(round_significant(obs.iter().map(|o| o.0).sum::<f64>() / n));
                series
                    .lengths
                    .push(obs.iter().map(|o| o.1).sum::<f64>() / n);
            }
            SeriesMode::Pooled => {
                for (v, l) in obs {
                    series.periods.push(group);
                    series.values.push(v);
                    series.lengths.push(l);
                }
            }
        }
    }
    Ok(series)
}

/// Rounds to 12 significant digits, so that period means which agree up to
/// summation error compare as ties in the rank-based tests.
fn round_significant(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// Identifier of a (metric, length bin) case, e.g. `mdd@10`.
pub fn case_id(metric: Metric, anchor: usize) -> String {
    format!("{}@{}", metric.name(), anchor)
}

pub fn parse_case_id(id: &str) -> Option<(Metric, usize)> {
    let (m, a) = id.split_once('@')?;
    Some((m.parse().ok()?, a.parse().ok()?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendCase {
    pub metric: Metric,
    pub anchor: usize,
    /// `None` when the parser provides no values for the metric at all.
    pub result: Option<TrendResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendTable {
    pub parser: String,
    /// Metric-major, anchors ascending.
    pub cases: Vec<TrendCase>,
}

impl TrendTable {
    pub fn labels(&self) -> LabelSeries {
        LabelSeries::new(
            self.cases
                .iter()
                .map(|c| case_id(c.metric, c.anchor))
                .collect(),
            self.cases
                .iter()
                .map(|c| c.result.as_ref().map(|r| r.direction))
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrendOptions {
    pub alpha: f64,
    pub mode: SeriesMode,
    /// Condition on sentence length with the partial test.
    pub partial: bool,
}

impl Default for TrendOptions {
    fn default() -> Self {
        TrendOptions {
            alpha: crate::stats::DEFAULT_ALPHA,
            mode: SeriesMode::PeriodMean,
            partial: false,
        }
    }
}

/// Runs one trend test per (metric, length bin) for `parser`.
pub fn trend_table(
    tbl: &ObservationTable,
    parser: &str,
    grouping: &Grouping,
    opts: TrendOptions,
) -> Result<TrendTable, TrendError> {
    let rows: Vec<&Observation> = tbl.rows.iter().filter(|r| r.parser == parser).collect();
    if rows.is_empty() {
        return Err(TrendError::UnknownParser {
            parser: parser.to_owned(),
        });
    }
    let anchors: BTreeSet<usize> = rows
        .iter()
        .filter_map(|r| grouping.anchor_for(r.length))
        .collect();
    let missing: Vec<String> = grouping
        .anchors
        .iter()
        .filter(|a| !anchors.contains(a))
        .flat_map(|&a| Metric::ALL.map(|m| case_id(m, a)))
        .collect();
    if !missing.is_empty() {
        return Err(TrendError::MissingCells {
            parser: parser.to_owned(),
            cells: missing.join(", "),
        });
    }

    let mut cases = Vec::with_capacity(Metric::ALL.len() * grouping.anchors.len());
    for metric in Metric::ALL {
        let provided = rows.iter().any(|r| r.get(metric).is_some());
        for &anchor in &grouping.anchors {
            if !provided {
                cases.push(TrendCase {
                    metric,
                    anchor,
                    result: None,
                });
                continue;
            }
            let series = build_series(tbl, parser, metric, anchor, grouping, opts.mode)?;
            let result = if opts.partial {
                partial_mann_kendall(&series.values, &series.lengths, opts.alpha)
            } else {
                mann_kendall(&series.values, opts.alpha)
            }
            .map_err(|source| TrendError::Test {
                parser: parser.to_owned(),
                metric,
                anchor,
                source,
            })?;
            cases.push(TrendCase {
                metric,
                anchor,
                result: Some(result),
            });
        }
    }
    Ok(TrendTable {
        parser: parser.to_owned(),
        cases,
    })
}

/// Minimum number of agreeing parsers for a trend to count as stable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VoteThresholds {
    pub default: usize,
    pub crossings: usize,
}

impl Default for VoteThresholds {
    fn default() -> Self {
        VoteThresholds {
            default: 3,
            crossings: 2,
        }
    }
}

impl VoteThresholds {
    pub fn for_metric(&self, m: Metric) -> usize {
        if m == Metric::Crossings {
            self.crossings
        } else {
            self.default
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableEntry {
    pub case: String,
    pub direction: Option<Direction>,
    /// Parsers supporting `direction` (0 when none).
    pub count: usize,
}

impl StableEntry {
    /// `+3`, `-5`, or empty.
    pub fn notation(&self) -> String {
        match self.direction {
            Some(d) => format!("{}{}", d.sign(), self.count),
            None => String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableTrendTable {
    pub entries: Vec<StableEntry>,
}

fn check_tables(tables: &[LabelSeries]) -> Result<(), TrendError> {
    if tables.len() < 2 {
        return Err(TrendError::TooFewTables {
            needed: 2,
            got: tables.len(),
        });
    }
    for t in &tables[1..] {
        tables[0].check_aligned(t).map_err(TrendError::Misaligned)?;
    }
    Ok(())
}

/// A direction is stable when at least the metric's threshold of parsers
/// report it and it has strictly more support than the opposite direction.
pub fn majority_vote(
    tables: &[LabelSeries],
    thresholds: VoteThresholds,
) -> Result<StableTrendTable, TrendError> {
    check_tables(tables)?;
    let entries = tables[0]
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let threshold =
                parse_case_id(id).map_or(thresholds.default, |(m, _)| thresholds.for_metric(m));
            let count = |d| tables.iter().filter(|t| t.labels[i] == Some(d)).count();
            let up = count(Direction::Increasing);
            let down = count(Direction::Decreasing);
            let (direction, count) = if up >= threshold && up > down {
                (Some(Direction::Increasing), up)
            } else if down >= threshold && down > up {
                (Some(Direction::Decreasing), down)
            } else {
                (None, 0)
            };
            StableEntry {
                case: id.clone(),
                direction,
                count,
            }
        })
        .collect();
    Ok(StableTrendTable { entries })
}

/// Pairwise Cohen's κ between parsers plus each parser's mean over its
/// pairs. `None` marks an undefined κ.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreementReport {
    pub parsers: Vec<String>,
    pub matrix: Vec<Vec<Option<f64>>>,
    pub averages: Vec<Option<f64>>,
}

pub fn parser_agreement(
    parsers: &[String],
    tables: &[LabelSeries],
) -> Result<AgreementReport, TrendError> {
    assert_eq!(parsers.len(), tables.len());
    check_tables(tables)?;
    let n = tables.len();
    let mut matrix = vec![vec![None; n]; n];
    for i in 0..n {
        matrix[i][i] = Some(1.0);
        for j in i + 1..n {
            let k = cohen_kappa(&tables[i], &tables[j]).ok();
            matrix[i][j] = k;
            matrix[j][i] = k;
        }
    }
    let averages = (0..n)
        .map(|i| {
            let vals: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .filter_map(|j| matrix[i][j])
                .collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    Ok(AgreementReport {
        parsers: parsers.to_vec(),
        matrix,
        averages,
    })
}

/// Fleiss' κ per metric, treating each length bin as an item and each
/// parser with labels for the metric as a rater.
pub fn per_metric_fleiss(tables: &[LabelSeries]) -> Result<Vec<(Metric, Option<f64>)>, TrendError> {
    check_tables(tables)?;
    let mut items: BTreeMap<Metric, Vec<usize>> = BTreeMap::new();
    for (i, id) in tables[0].ids.iter().enumerate() {
        if let Some((m, _)) = parse_case_id(id) {
            items.entry(m).or_default().push(i);
        }
    }
    Ok(items
        .into_iter()
        .map(|(metric, idx)| {
            let raters: Vec<&LabelSeries> = tables
                .iter()
                .filter(|t| idx.iter().all(|&i| t.labels[i].is_some()))
                .collect();
            let counts: Vec<Vec<usize>> = idx
                .iter()
                .map(|&i| {
                    Direction::ALL
                        .iter()
                        .map(|d| raters.iter().filter(|t| t.labels[i] == Some(*d)).count())
                        .collect()
                })
                .collect();
            (metric, fleiss_kappa(&counts, raters.len()).ok())
        })
        .collect())
}

/// Spearman's ρ between original and corrected metric values, per metric
/// and parser, with averages.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub parsers: Vec<String>,
    pub metrics: Vec<Metric>,
    /// `rho[metric][parser]`
    pub rho: Vec<Vec<Option<f64>>>,
    /// Per metric, mean over parsers.
    pub metric_means: Vec<Option<f64>>,
    /// Per parser, mean over metrics.
    pub parser_means: Vec<Option<f64>>,
    /// Mean over metrics of `metric_means`.
    pub overall: Option<f64>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn sensitivity_report(
    original: &ObservationTable,
    corrected: &ObservationTable,
) -> Result<SensitivityReport, TrendError> {
    let key = |r: &Observation| (r.parser.clone(), r.sent_id.clone());
    let orig: HashMap<(String, String), &Observation> =
        original.rows.iter().map(|r| (key(r), r)).collect();
    let corr: HashMap<(String, String), &Observation> =
        corrected.rows.iter().map(|r| (key(r), r)).collect();
    let fmt_keys = |keys: Vec<&(String, String)>| {
        let mut k: Vec<String> = keys.into_iter().map(|(p, s)| format!("{p}/{s}")).collect();
        k.sort();
        if k.is_empty() {
            "none".to_owned()
        } else {
            k.join(", ")
        }
    };
    let only_o: Vec<_> = orig.keys().filter(|k| !corr.contains_key(*k)).collect();
    let only_c: Vec<_> = corr.keys().filter(|k| !orig.contains_key(*k)).collect();
    if !only_o.is_empty() || !only_c.is_empty() {
        return Err(TrendError::KeyMismatch {
            only_original: fmt_keys(only_o),
            only_corrected: fmt_keys(only_c),
        });
    }

    let parsers = original.parsers();
    let metrics = Metric::ALL.to_vec();
    let rho: Vec<Vec<Option<f64>>> = metrics
        .iter()
        .map(|&m| {
            parsers
                .iter()
                .map(|p| {
                    let (xs, ys): (Vec<f64>, Vec<f64>) = original
                        .rows
                        .iter()
                        .filter(|r| &r.parser == p)
                        .filter_map(|r| Some((r.get(m)?, corr[&key(r)].get(m)?)))
                        .unzip();
                    spearman_rho(&xs, &ys).ok()
                })
                .collect()
        })
        .collect();
    let metric_means: Vec<Option<f64>> = rho.iter().map(|row| mean(row.iter().copied())).collect();
    let parser_means = (0..parsers.len())
        .map(|j| mean(rho.iter().map(|row| row[j])))
        .collect();
    let overall = mean(metric_means.iter().copied());
    Ok(SensitivityReport {
        parsers,
        metrics,
        rho,
        metric_means,
        parser_means,
        overall,
    })
}

impl fmt::Display for StableTrendTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{}\t{}", e.case, e.notation())?;
        }
        Ok(())
    }
}
