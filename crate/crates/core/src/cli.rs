//! Command-line front end. Each command is split into a pure function from
//! parsed inputs to output tables and a thin layer doing file I/O.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use thiserror::Error;

use crate::attack::{
    historical_attack, ocr_attack, AlphabetProfile, AttackConfig, AttackError, SpellingLexicon,
};
use crate::conllu::{parse_conllu, serialize_conllu, ConlluError, Treebank};
use crate::corpus::{
    assign_cells, balanced_sample, default_periods, filter_sentence, parse_anchors, parse_periods,
    Grouping, IndexRecord, ManifestRow, PlanError, SamplingPlan, DEFAULT_ANCHORS, DEFAULT_OFFSET,
    DEFAULT_PER_CELL,
};
use crate::derived_rng;
use crate::eval::{score, AttachmentScore, EvalError};
use crate::metrics::{compute_all, Metric};
use crate::stats::{Direction, LabelSeries, DEFAULT_ALPHA};
use crate::table::{fmt_opt, fmt_real, Format, Provenance, Table, TableError};
use crate::tree::build_tree;
use crate::trend::{
    build_series, case_id, majority_vote, parser_agreement, per_metric_fleiss, sensitivity_report,
    trend_table, ObservationTable, SensitivityReport, SeriesMode, TrendError, TrendOptions,
    VoteThresholds, METRIC_TABLE_KEYS,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    /// 1 for domain errors, 2 for usage and I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            _ => 2,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        match e {
            TableError::Io { path, source } => CliError::Io { path, source },
            other => usage(other),
        }
    }
}

impl From<TrendError> for CliError {
    fn from(e: TrendError) -> Self {
        match e {
            TrendError::EmptyPeriod { .. }
            | TrendError::MissingCells { .. }
            | TrendError::Test { .. } => domain(e),
            TrendError::Table(t) => t.into(),
            other => usage(other),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Underfull { .. } => domain(e),
            other => usage(other),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::SentenceCount { .. } => usage(e),
            EvalError::RawTextMismatch { .. } => domain(e),
        }
    }
}

impl From<AttackError> for CliError {
    fn from(e: AttackError) -> Self {
        usage(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "depdrift",
    version,
    about = "Dependency-tree metrics and trend analysis for diachronic corpora"
)]
pub struct Cli {
    /// Seed for randomized commands.
    #[arg(long, global = true, env = "DEPDRIFT_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Output table format; defaults to the output file extension, else csv.
    #[arg(long, global = true)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the 15 tree metrics for every sentence.
    Metrics(MetricsArgs),
    /// Mann-Kendall trend tests per parser, metric and length bin.
    Trend(TrendArgs),
    /// Cross-parser agreement and stable trends from trend tables.
    Agree(AgreeArgs),
    /// Spearman correlation between original and corrected metric tables.
    Sensitivity(SensitivityArgs),
    /// UAS/LAS of a system parse against gold over raw text.
    Eval(EvalArgs),
    /// Write an adversarially perturbed copy of a treebank.
    Attack(AttackArgs),
    /// Drop sentences failing the quality rules.
    Filter(FilterArgs),
    /// Draw a length- and period-balanced sample from a sentence index.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Parser name for all inputs; defaults to each file's stem.
    #[arg(long)]
    pub parser: Option<String>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Exit 0 even when some sentences are not trees.
    #[arg(long)]
    pub allow_defects: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GroupingArgs {
    /// Comma-separated length bin starts.
    #[arg(long)]
    pub anchors: Option<String>,
    /// Width of each length bin beyond its start.
    #[arg(long, default_value_t = DEFAULT_OFFSET)]
    pub offset: usize,
    /// Comma-separated period groups such as 1860-1879.
    #[arg(long)]
    pub periods: Option<String>,
}

impl GroupingArgs {
    pub fn grouping(&self) -> Result<Grouping, PlanError> {
        let g = Grouping {
            anchors: match &self.anchors {
                Some(a) => parse_anchors(a)?,
                None => DEFAULT_ANCHORS.to_vec(),
            },
            offset: self.offset,
            periods: match &self.periods {
                Some(p) => parse_periods(p)?,
                None => default_periods(),
            },
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Covariate {
    Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PeriodMean,
    Pooled,
}

impl From<ModeArg> for SeriesMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PeriodMean => SeriesMode::PeriodMean,
            ModeArg::Pooled => SeriesMode::Pooled,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    /// Metric table written by `metrics`.
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::PeriodMean)]
    pub mode: ModeArg,
    /// Run the partial test conditioned on this covariate.
    #[arg(long, value_enum)]
    pub partial: Option<Covariate>,
    #[command(flatten)]
    pub grouping: GroupingArgs,
    /// Also write the tested series in long format.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    /// Trend tables written by `trend`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Parsers needed for a stable trend.
    #[arg(long, default_value_t = 3)]
    pub threshold: usize,
    /// Parsers needed for a stable crossings trend.
    #[arg(long, default_value_t = 2)]
    pub crossings_threshold: usize,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    pub original: PathBuf,
    pub corrected: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub gold: PathBuf,
    pub system: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    Historical,
    Ocr,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: AttackKind,
    /// Tab-separated `modern<TAB>historical` spellings.
    #[arg(long, required_if_eq("kind", "historical"))]
    pub lexicon: Option<PathBuf>,
    /// Share of characters replaced per attacked token.
    #[arg(long, default_value_t = 0.1)]
    pub fraction: f64,
    /// Tokens attacked per sentence.
    #[arg(long, default_value_t = 1)]
    pub tokens: usize,
    #[arg(long, default_value = "german")]
    pub alphabet: AlphabetProfile,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    pub input: PathBuf,
    /// Kept sentences as CoNLL-U.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// One row per rejected sentence with the rules it failed.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Index of kept sentences (`sent_id,length,year`) for `sample`.
    #[arg(long)]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Index table with `sent_id,length,year` columns.
    pub index: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PER_CELL)]
    pub per_cell: usize,
    #[command(flatten)]
    pub grouping: GroupingArgs,
    /// Fail when a cell has fewer sentences than requested.
    #[arg(long)]
    pub strict: bool,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Pure command bodies

pub const DEFECT_COLUMNS: [&str; 4] = ["sent_id", "parser", "defect", "positions"];

fn metric_header() -> Vec<String> {
    METRIC_TABLE_KEYS
        .iter()
        .map(|s| s.to_string())
        .chain(Metric::ALL.iter().map(|m| m.name().to_owned()))
        .collect()
}

/// Metric rows for every well-formed sentence and a defect row for every
/// other one, in input order.
pub fn metrics_tables(inputs: &[(String, Treebank)], seed: u64) -> (Table, Table) {
    let mut metrics = Table::new(metric_header());
    let mut defects = Table::new(DEFECT_COLUMNS);
    for (parser, tb) in inputs {
        for (i, s) in tb.sentences.iter().enumerate() {
            let key = tb.sentence_key(i);
            let tree = match build_tree(s) {
                Ok(t) => t,
                Err(d) => {
                    let pos: Vec<String> = d.positions.iter().map(|p| p.to_string()).collect();
                    defects.push(vec![
                        key,
                        parser.clone(),
                        d.kind.name().to_owned(),
                        pos.join(" "),
                    ]);
                    continue;
                }
            };
            let mut rng = derived_rng(seed, &key);
            let v = compute_all(&tree, &mut rng);
            let mut row = vec![
                key,
                parser.clone(),
                s.year().map(|y| y.to_string()).unwrap_or_default(),
                v.sentence_length.to_string(),
            ];
            row.extend(Metric::ALL.iter().map(|&m| match v.get(m) {
                Some(x) if m.is_integer() => format!("{x:.0}"),
                other => fmt_opt(other),
            }));
            metrics.push(row);
        }
    }
    (metrics, defects)
}

pub const TREND_COLUMNS: [&str; 9] = [
    "parser",
    "metric",
    "anchor",
    "direction",
    "s",
    "var_s",
    "z",
    "p",
    "n",
];
pub const PLOT_COLUMNS: [&str; 6] = ["parser", "metric", "anchor", "period", "value", "length"];

/// Trend rows for every parser in the table, and the tested series in long
/// format.
pub fn trend_tables(
    obs: &ObservationTable,
    grouping: &Grouping,
    opts: TrendOptions,
) -> Result<(Table, Table), TrendError> {
    let mut out = Table::new(TREND_COLUMNS);
    let mut plot = Table::new(PLOT_COLUMNS);
    for parser in obs.parsers() {
        let tt = trend_table(obs, &parser, grouping, opts)?;
        for case in &tt.cases {
            let mut row = vec![
                parser.clone(),
                case.metric.name().to_owned(),
                case.anchor.to_string(),
            ];
            match &case.result {
                Some(r) => row.extend([
                    r.direction.name().to_owned(),
                    fmt_real(r.s),
                    fmt_real(r.var_s),
                    fmt_real(r.z),
                    fmt_real(r.p),
                    r.n.to_string(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 6)),
            }
            out.push(row);
            if case.result.is_none() {
                continue;
            }
            let series = build_series(obs, &parser, case.metric, case.anchor, grouping, opts.mode)?;
            for ((g, v), l) in series
                .periods
                .iter()
                .zip(&series.values)
                .zip(&series.lengths)
            {
                plot.push(vec![
                    parser.clone(),
                    case.metric.name().to_owned(),
                    case.anchor.to_string(),
                    g.to_string(),
                    fmt_real(*v),
                    fmt_real(*l),
                ]);
            }
        }
    }
    Ok((out, plot))
}

/// Label series per parser from trend tables, in order of first appearance.
pub fn label_series(tables: &[Table]) -> Result<(Vec<String>, Vec<LabelSeries>), CliError> {
    let mut order: Vec<String> = Vec::new();
    let mut by_parser: BTreeMap<String, (Vec<String>, Vec<Option<Direction>>)> = BTreeMap::new();
    for t in tables {
        let [p, m, a, d] = ["parser", "metric", "anchor", "direction"].map(|c| t.column(c));
        let (p, m, a, d) = (p?, m?, a?, d?);
        let mut in_this: Vec<String> = Vec::new();
        for (i, r) in t.rows.iter().enumerate() {
            let parser = &r[p];
            if !in_this.contains(parser) {
                if by_parser.contains_key(parser) {
                    return Err(usage(format!(
                        "parser '{parser}' appears in more than one trend table"
                    )));
                }
                in_this.push(parser.clone());
            }
            let bad = |col: usize| {
                CliError::from(TableError::Value {
                    row: i + 1,
                    column: t.header[col].clone(),
                    value: r[col].clone(),
                })
            };
            let metric: Metric = r[m].parse().map_err(|_| bad(m))?;
            let anchor: usize = r[a].parse().map_err(|_| bad(a))?;
            let direction = if r[d].is_empty() {
                None
            } else {
                Some(r[d].parse::<Direction>().map_err(|_| bad(d))?)
            };
            let entry = by_parser.entry(parser.clone()).or_default();
            entry.0.push(case_id(metric, anchor));
            entry.1.push(direction);
        }
        order.extend(in_this);
    }
    let series = order
        .iter()
        .map(|p| {
            let (ids, labels) = by_parser.remove(p).expect("collected above");
            LabelSeries::new(ids, labels)
        })
        .collect();
    Ok((order, series))
}

pub struct AgreementTables {
    pub kappa: Table,
    pub fleiss: Table,
    pub stable: Table,
}

pub fn agreement_tables(
    parsers: &[String],
    series: &[LabelSeries],
    thresholds: VoteThresholds,
) -> Result<AgreementTables, TrendError> {
    let report = parser_agreement(parsers, series)?;
    let mut kappa = Table::new(
        std::iter::once("parser".to_owned())
            .chain(parsers.iter().cloned())
            .chain(std::iter::once("average".to_owned())),
    );
    for (i, p) in parsers.iter().enumerate() {
        let mut row = vec![p.clone()];
        row.extend(report.matrix[i].iter().map(|&k| fmt_opt(k)));
        row.push(fmt_opt(report.averages[i]));
        kappa.push(row);
    }

    let mut fleiss = Table::new(["metric", "fleiss_kappa"]);
    for (m, k) in per_metric_fleiss(series)? {
        fleiss.push(vec![m.name().to_owned(), fmt_opt(k)]);
    }

    let mut stable = Table::new(["metric", "anchor", "direction", "count", "notation"]);
    for e in majority_vote(series, thresholds)?.entries {
        let (metric, anchor) = e.case.split_once('@').unwrap_or((&e.case, ""));
        stable.push(vec![
            metric.to_owned(),
            anchor.to_owned(),
            e.direction.map(|d| d.name().to_owned()).unwrap_or_default(),
            e.count.to_string(),
            e.notation(),
        ]);
    }
    Ok(AgreementTables {
        kappa,
        fleiss,
        stable,
    })
}

pub fn sensitivity_table(r: &SensitivityReport) -> Table {
    let mut t = Table::new(
        std::iter::once("metric".to_owned())
            .chain(r.parsers.iter().cloned())
            .chain(std::iter::once("average".to_owned())),
    );
    for (i, m) in r.metrics.iter().enumerate() {
        let mut row = vec![m.name().to_owned()];
        row.extend(r.rho[i].iter().map(|&v| fmt_opt(v)));
        row.push(fmt_opt(r.metric_means[i]));
        t.push(row);
    }
    let mut last = vec!["average".to_owned()];
    last.extend(r.parser_means.iter().map(|&v| fmt_opt(v)));
    last.push(fmt_opt(r.overall));
    t.push(last);
    t
}

pub const EVAL_COLUMNS: [&str; 10] = [
    "uas_precision",
    "uas_recall",
    "uas_f1",
    "las_precision",
    "las_recall",
    "las_f1",
    "uas_correct",
    "las_correct",
    "gold_tokens",
    "system_tokens",
];

pub fn eval_table(s: &AttachmentScore) -> Table {
    let mut t = Table::new(EVAL_COLUMNS);
    t.push(vec![
        fmt_real(s.uas.precision),
        fmt_real(s.uas.recall),
        fmt_real(s.uas.f1),
        fmt_real(s.las.precision),
        fmt_real(s.las.recall),
        fmt_real(s.las.f1),
        s.uas_correct.to_string(),
        s.las_correct.to_string(),
        s.gold_tokens.to_string(),
        s.system_tokens.to_string(),
    ]);
    t
}

pub struct FilterOutput {
    pub kept: Treebank,
    /// `sent_id, failed` with rule names separated by `;`.
    pub report: Table,
    /// `sent_id, length, year` of kept sentences with a known year.
    pub index: Table,
}

pub fn filter_treebank(tb: &Treebank) -> FilterOutput {
    let mut kept = Vec::new();
    let mut report = Table::new(["sent_id", "failed"]);
    let mut index = Table::new(["sent_id", "length", "year"]);
    for (i, s) in tb.sentences.iter().enumerate() {
        let key = tb.sentence_key(i);
        let verdict = filter_sentence(s);
        if !verdict.keep() {
            let names: Vec<&str> = verdict.failed.iter().map(|r| r.name()).collect();
            report.push(vec![key, names.join(";")]);
            continue;
        }
        match s.year() {
            Some(y) => index.push(vec![key, s.len().to_string(), y.to_string()]),
            None => warn!("sentence {key} has no year and is left out of the index"),
        }
        kept.push(s.clone());
    }
    FilterOutput {
        kept: Treebank::new(kept),
        report,
        index,
    }
}

pub fn read_index(t: &Table) -> Result<Vec<IndexRecord>, TableError> {
    let (id, len, year) = (t.column("sent_id")?, t.column("length")?, t.column("year")?);
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = |col: usize| TableError::Value {
                row: i + 1,
                column: t.header[col].clone(),
                value: r[col].clone(),
            };
            Ok(IndexRecord {
                sent_id: r[id].clone(),
                length: r[len].parse().map_err(|_| bad(len))?,
                year: r[year].parse().map_err(|_| bad(year))?,
            })
        })
        .collect()
}

pub fn manifest_table(rows: &[ManifestRow]) -> Table {
    let mut t = Table::new(["anchor", "period_start", "sent_id"]);
    for r in rows {
        t.push(vec![
            r.cell.anchor.to_string(),
            r.cell.period_start.to_string(),
            r.sent_id.clone(),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// I/O layer

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_treebank(path: &Path) -> Result<Treebank, CliError> {
    let mut tb = parse_conllu(&read_text(path)?)
        .map_err(|e: ConlluError| usage(format!("{}: {e}", path.display())))?;
    tb.source = path.display().to_string();
    Ok(tb)
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    Table::read(path).map_err(|e| match e {
        TableError::Io { .. } => e.into(),
        other => usage(format!("{}: {other}", path.display())),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

struct Ctx {
    seed: u64,
    format: Option<Format>,
}

impl Ctx {
    fn format_for(&self, out: Option<&Path>) -> Format {
        self.format
            .or_else(|| out.map(Format::for_path))
            .unwrap_or_default()
    }

    fn write_table(
        &self,
        t: &Table,
        out: Option<&Path>,
        prov: &Provenance,
    ) -> Result<(), CliError> {
        emit(out, &t.render(self.format_for(out), prov))
    }
}

fn write_treebank(tb: &Treebank, out: Option<&Path>, prov: &Provenance) -> Result<(), CliError> {
    let mut tb = tb.clone();
    if let Some(first) = tb.sentences.first_mut() {
        first.set_meta("generator", &prov.line());
    }
    emit(out, &serialize_conllu(&tb))
}

/// Sidecar path for defect records: `<out>.defects.csv`.
pub fn defects_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".defects.csv");
    PathBuf::from(s)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        seed: cli.seed,
        format: cli.format,
    };
    match cli.command {
        Command::Metrics(a) => run_metrics(&ctx, a),
        Command::Trend(a) => run_trend(&ctx, a),
        Command::Agree(a) => run_agree(&ctx, a),
        Command::Sensitivity(a) => run_sensitivity(&ctx, a),
        Command::Eval(a) => run_eval(&ctx, a),
        Command::Attack(a) => run_attack(&ctx, a),
        Command::Filter(a) => run_filter(&ctx, a),
        Command::Sample(a) => run_sample(&ctx, a),
    }
}

fn run_metrics(ctx: &Ctx, a: MetricsArgs) -> Result<(), CliError> {
    let mut inputs = Vec::new();
    for path in &a.inputs {
        let name = match &a.parser {
            Some(p) => p.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        inputs.push((name, read_treebank(path)?));
    }
    let (metrics, defects) = metrics_tables(&inputs, ctx.seed);
    let prov = Provenance::new(Some(ctx.seed), "metrics");
    ctx.write_table(&metrics, a.out.as_deref(), &prov)?;
    if defects.rows.is_empty() {
        return Ok(());
    }
    match &a.out {
        Some(out) => defects.write(&defects_path(out), Format::Csv, &prov)?,
        None => {
            for r in &defects.rows {
                warn!("{} ({}): {} at {}", r[0], r[1], r[2], r[3]);
            }
        }
    }
    if a.allow_defects {
        Ok(())
    } else {
        Err(domain(format!(
            "{} sentence(s) are not well-formed trees",
            defects.rows.len()
        )))
    }
}

fn run_trend(ctx: &Ctx, a: TrendArgs) -> Result<(), CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let grouping = a.grouping.grouping()?;
    let obs = ObservationTable::from_table(&read_table(&a.input)?)?;
    let opts = TrendOptions {
        alpha: a.alpha,
        mode: a.mode.into(),
        partial: a.partial.is_some(),
    };
    let (table, plot) = trend_tables(&obs, &grouping, opts)?;
    let prov = Provenance::new(None, format!("trend {opts:?} {grouping:?}"));
    ctx.write_table(&table, a.out.as_deref(), &prov)?;
    if let Some(p) = &a.plot_data {
        ctx.write_table(&plot, Some(p), &prov)?;
    }
    Ok(())
}

fn run_agree(ctx: &Ctx, a: AgreeArgs) -> Result<(), CliError> {
    let tables = a
        .inputs
        .iter()
        .map(|p| read_table(p))
        .collect::<Result<Vec<_>, _>>()?;
    let (parsers, series) = label_series(&tables)?;
    let thresholds = VoteThresholds {
        default: a.threshold,
        crossings: a.crossings_threshold,
    };
    let out = agreement_tables(&parsers, &series, thresholds)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|source| CliError::Io {
        path: a.out_dir.display().to_string(),
        source,
    })?;
    let format = ctx.format.unwrap_or_default();
    let ext = match format {
        Format::Csv => "csv",
        Format::JsonLines => "jsonl",
    };
    let prov = Provenance::new(None, format!("agree {thresholds:?}"));
    for (name, t) in [
        ("kappa", &out.kappa),
        ("fleiss", &out.fleiss),
        ("stable", &out.stable),
    ] {
        t.write(&a.out_dir.join(format!("{name}.{ext}")), format, &prov)?;
    }
    info!(
        "agreement over {} parsers written to {}",
        parsers.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn run_sensitivity(ctx: &Ctx, a: SensitivityArgs) -> Result<(), CliError> {
    let orig = ObservationTable::from_table(&read_table(&a.original)?)?;
    let corr = ObservationTable::from_table(&read_table(&a.corrected)?)?;
    let report = sensitivity_report(&orig, &corr)?;
    ctx.write_table(
        &sensitivity_table(&report),
        a.out.as_deref(),
        &Provenance::new(None, "sensitivity"),
    )
}

fn run_eval(ctx: &Ctx, a: EvalArgs) -> Result<(), CliError> {
    let gold = read_treebank(&a.gold)?;
    let sys = read_treebank(&a.system)?;
    let s = score(&gold, &sys)?;
    ctx.write_table(
        &eval_table(&s),
        a.out.as_deref(),
        &Provenance::new(None, "eval"),
    )
}

fn run_attack(ctx: &Ctx, a: AttackArgs) -> Result<(), CliError> {
    let tb = read_treebank(&a.input)?;
    let (out, prov) = match a.kind {
        AttackKind::Historical => {
            let path = a
                .lexicon
                .as_deref()
                .ok_or_else(|| usage("--lexicon is required"))?;
            let lex = SpellingLexicon::parse(&read_text(path)?)?;
            let (out, n) = historical_attack(&tb, &lex);
            info!("replaced {n} token(s)");
            (
                out,
                Provenance::new(None, format!("attack historical {}", lex.len())),
            )
        }
        AttackKind::Ocr => {
            let cfg = AttackConfig {
                char_fraction: a.fraction,
                tokens_per_sentence: a.tokens,
                alphabet: a.alphabet.chars(),
                seed: ctx.seed,
            };
            let out = ocr_attack(&tb, &cfg)?;
            let prov = Provenance::new(
                Some(ctx.seed),
                format!("attack ocr {} {} {:?}", a.fraction, a.tokens, a.alphabet),
            );
            (out, prov)
        }
    };
    write_treebank(&out, a.out.as_deref(), &prov)
}

fn run_filter(ctx: &Ctx, a: FilterArgs) -> Result<(), CliError> {
    let tb = read_treebank(&a.input)?;
    let out = filter_treebank(&tb);
    info!(
        "kept {} of {} sentences",
        out.kept.sentences.len(),
        tb.sentences.len()
    );
    let prov = Provenance::new(None, "filter");
    write_treebank(&out.kept, a.out.as_deref(), &prov)?;
    if let Some(p) = &a.report {
        ctx.write_table(&out.report, Some(p), &prov)?;
    }
    if let Some(p) = &a.index {
        ctx.write_table(&out.index, Some(p), &prov)?;
    }
    Ok(())
}

fn run_sample(ctx: &Ctx, a: SampleArgs) -> Result<(), CliError> {
    let plan = SamplingPlan {
        grouping: a.grouping.grouping()?,
        per_cell: a.per_cell,
        seed: ctx.seed,
    };
    let records = read_index(&read_table(&a.index)?)?;
    let cells = assign_cells(&records, &plan)?;
    if cells.unassigned > 0 {
        info!("{} sentence(s) fall outside every cell", cells.unassigned);
    }
    let (rows, shortfalls) = balanced_sample(&cells, &plan, a.strict)?;
    if !shortfalls.is_empty() {
        warn!("{} cell(s) are underfull", shortfalls.len());
    }
    let prov = Provenance::new(
        Some(ctx.seed),
        format!("sample {} {:?}", plan.per_cell, plan.grouping),
    );
    ctx.write_table(&manifest_table(&rows), a.out.as_deref(), &prov)
}
