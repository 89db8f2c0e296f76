//! Sentence filtering and length/period-balanced sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::warn;
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::conllu::Sentence;
use crate::derived_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterRule {
    Capitalization,
    TerminalPunct,
    HasVerb,
    QuoteParity,
    BracketBalance,
}

impl FilterRule {
    pub const ALL: [FilterRule; 5] = [
        FilterRule::Capitalization,
        FilterRule::TerminalPunct,
        FilterRule::HasVerb,
        FilterRule::QuoteParity,
        FilterRule::BracketBalance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterRule::Capitalization => "capitalization",
            FilterRule::TerminalPunct => "terminal_punct",
            FilterRule::HasVerb => "has_verb",
            FilterRule::QuoteParity => "quote_parity",
            FilterRule::BracketBalance => "bracket_balance",
        }
    }

    /// Whether `s` satisfies this rule.
    pub fn passes(self, s: &Sentence) -> bool {
        let tokens = &s.tokens;
        match self {
            FilterRule::Capitalization => tokens
                .first()
                .and_then(|t| t.form.chars().next())
                .is_some_and(char::is_uppercase),
            FilterRule::TerminalPunct => tokens
                .last()
                .is_some_and(|t| matches!(t.form.as_str(), "." | "?" | "!")),
            FilterRule::HasVerb => tokens.iter().any(|t| t.upos == "VERB" || t.upos == "AUX"),
            FilterRule::QuoteParity => {
                !tokens.is_empty() && count_chars(s, |c| QUOTES.contains(&c)) % 2 == 0
            }
            FilterRule::BracketBalance => {
                !tokens.is_empty()
                    && BRACKETS
                        .iter()
                        .all(|&(l, r)| count_chars(s, |c| c == l) == count_chars(s, |c| c == r))
            }
        }
    }
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const QUOTES: [char; 6] = ['"', '“', '”', '„', '«', '»'];
const BRACKETS: [(char, char); 3] = [('(', ')'), ('[', ']'), ('{', '}')];

fn count_chars(s: &Sentence, pred: impl Fn(char) -> bool) -> usize {
    s.tokens
        .iter()
        .flat_map(|t| t.form.chars())
        .filter(|&c| pred(c))
        .count()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterVerdict {
    pub failed: Vec<FilterRule>,
}

impl FilterVerdict {
    pub fn keep(&self) -> bool {
        self.failed.is_empty()
    }
}

pub fn filter_sentence(s: &Sentence) -> FilterVerdict {
    FilterVerdict {
        failed: FilterRule::ALL
            .into_iter()
            .filter(|r| !r.passes(s))
            .collect(),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("length anchors must be strictly increasing with non-overlapping bins")]
    Anchors,
    #[error("period groups {0:?} and {1:?} overlap")]
    OverlappingPeriods((i32, i32), (i32, i32)),
    #[error("period group {0:?} ends before it starts")]
    InvertedPeriod((i32, i32)),
    #[error("per-cell count must be at least 1")]
    CellCount,
    #[error("cell (anchor {anchor}, period {period_start}) has {available} sentences, {deficit} short of {wanted}")]
    Underfull {
        anchor: usize,
        period_start: i32,
        available: usize,
        wanted: usize,
        deficit: usize,
    },
    #[error("cannot parse {what} from '{text}'")]
    Syntax { what: &'static str, text: String },
}

/// A closed range of years.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeriodGroup {
    pub start: i32,
    pub end: i32,
}

impl PeriodGroup {
    pub fn contains(&self, year: i32) -> bool {
        self.start <= year && year <= self.end
    }
}

impl fmt::Display for PeriodGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

pub const DEFAULT_ANCHORS: [usize; 9] = [5, 10, 15, 20, 30, 40, 50, 60, 70];
pub const DEFAULT_OFFSET: usize = 2;
pub const DEFAULT_PER_CELL: usize = 450;

/// Two-decade groups from 1860, the last one spanning the 2000s to 2020s.
pub fn default_periods() -> Vec<PeriodGroup> {
    let mut groups: Vec<PeriodGroup> = (0..7)
        .map(|k| PeriodGroup {
            start: 1860 + 20 * k,
            end: 1879 + 20 * k,
        })
        .collect();
    groups.push(PeriodGroup {
        start: 2000,
        end: 2029,
    });
    groups
}

/// Parses `1860-1879,1880-1899,...`.
pub fn parse_periods(text: &str) -> Result<Vec<PeriodGroup>, PlanError> {
    text.split(',')
        .map(|part| {
            let bad = || PlanError::Syntax {
                what: "period group",
                text: part.to_owned(),
            };
            let (a, b) = part.trim().split_once('-').ok_or_else(bad)?;
            Ok(PeriodGroup {
                start: a.trim().parse().map_err(|_| bad())?,
                end: b.trim().parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn parse_anchors(text: &str) -> Result<Vec<usize>, PlanError> {
    text.split(',')
        .map(|p| {
            p.trim().parse().map_err(|_| PlanError::Syntax {
                what: "length anchor",
                text: p.to_owned(),
            })
        })
        .collect()
}

/// Length bins and period groups shared by sampling and trend analysis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouping {
    /// Strictly increasing bin starts.
    pub anchors: Vec<usize>,
    /// Anchor `L` covers lengths `L..=L + offset`.
    pub offset: usize,
    pub periods: Vec<PeriodGroup>,
}

impl Default for Grouping {
    fn default() -> Self {
        Grouping {
            anchors: DEFAULT_ANCHORS.to_vec(),
            offset: DEFAULT_OFFSET,
            periods: default_periods(),
        }
    }
}

impl Grouping {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.anchors.is_empty() || self.anchors.windows(2).any(|w| w[0] + self.offset >= w[1]) {
            return Err(PlanError::Anchors);
        }
        for g in &self.periods {
            if g.end < g.start {
                return Err(PlanError::InvertedPeriod((g.start, g.end)));
            }
        }
        let mut sorted = self.periods.clone();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[1].start <= w[0].end {
                return Err(PlanError::OverlappingPeriods(
                    (w[0].start, w[0].end),
                    (w[1].start, w[1].end),
                ));
            }
        }
        Ok(())
    }

    /// Anchor whose bin contains `length`.
    pub fn anchor_for(&self, length: usize) -> Option<usize> {
        self.anchors
            .iter()
            .copied()
            .find(|&a| a <= length && length <= a + self.offset)
    }

    pub fn period_for(&self, year: i32) -> Option<PeriodGroup> {
        self.periods.iter().copied().find(|g| g.contains(year))
    }

    /// Period groups in chronological order.
    pub fn chronological(&self) -> Vec<PeriodGroup> {
        let mut p = self.periods.clone();
        p.sort();
        p
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingPlan {
    pub grouping: Grouping,
    pub per_cell: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            grouping: Grouping::default(),
            per_cell: DEFAULT_PER_CELL,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), PlanError> {
        self.grouping.validate()?;
        if self.per_cell == 0 {
            return Err(PlanError::CellCount);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexRecord {
    pub sent_id: String,
    pub length: usize,
    pub year: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub anchor: usize,
    pub period_start: i32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellMap {
    /// Sentence ids per cell, sorted and deduplicated.
    pub cells: BTreeMap<Cell, BTreeSet<String>>,
    pub unassigned: usize,
}

impl CellMap {
    pub fn counts(&self) -> BTreeMap<Cell, usize> {
        self.cells.iter().map(|(c, ids)| (*c, ids.len())).collect()
    }
}

pub fn assign_cells(records: &[IndexRecord], plan: &SamplingPlan) -> Result<CellMap, PlanError> {
    plan.validate()?;
    let mut map = CellMap::default();
    for r in records {
        match (
            plan.grouping.anchor_for(r.length),
            plan.grouping.period_for(r.year),
        ) {
            (Some(anchor), Some(group)) => {
                map.cells
                    .entry(Cell {
                        anchor,
                        period_start: group.start,
                    })
                    .or_default()
                    .insert(r.sent_id.clone());
            }
            _ => map.unassigned += 1,
        }
    }
    Ok(map)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ManifestRow {
    pub cell: Cell,
    pub sent_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shortfall {
    pub cell: Cell,
    pub available: usize,
    pub wanted: usize,
}

/// Draws `plan.per_cell` ids per cell without replacement. Every cell of
/// the plan's grid is checked, including ones with no members at all.
///
/// In strict mode the first underfull cell is an error; otherwise underfull
/// cells contribute everything they have and are reported as shortfalls.
pub fn balanced_sample(
    cells: &CellMap,
    plan: &SamplingPlan,
    strict: bool,
) -> Result<(Vec<ManifestRow>, Vec<Shortfall>), PlanError> {
    plan.validate()?;
    let empty = BTreeSet::new();
    let mut rows = Vec::new();
    let mut shortfalls = Vec::new();
    for &anchor in &plan.grouping.anchors {
        for group in &plan.grouping.chronological() {
            let cell = Cell {
                anchor,
                period_start: group.start,
            };
            let members = cells.cells.get(&cell).unwrap_or(&empty);
            if members.len() < plan.per_cell {
                if strict {
                    return Err(PlanError::Underfull {
                        anchor,
                        period_start: group.start,
                        available: members.len(),
                        wanted: plan.per_cell,
                        deficit: plan.per_cell - members.len(),
                    });
                }
                warn!(
                    "cell (anchor {}, period {}) has only {} of {} sentences",
                    anchor,
                    group,
                    members.len(),
                    plan.per_cell
                );
                shortfalls.push(Shortfall {
                    cell,
                    available: members.len(),
                    wanted: plan.per_cell,
                });
            }
            let mut ids: Vec<&String> = members.iter().collect();
            let mut rng = derived_rng(plan.seed, &format!("{}:{}", anchor, group.start));
            ids.shuffle(&mut rng);
            rows.extend(ids.into_iter().take(plan.per_cell).map(|id| ManifestRow {
                cell,
                sent_id: id.clone(),
            }));
        }
    }
    rows.sort();
    Ok((rows, shortfalls))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::Token;

    fn sent(rows: &[(&str, &str)]) -> Sentence {
        Sentence::from_tokens(
            rows.iter()
                .enumerate()
                .map(|(i, (f, u))| Token::new(i + 1, f, u, if i == 0 { 0 } else { 1 }, "dep"))
                .collect(),
        )
    }

    #[test]
    fn filter_examples() {
        let good = sent(&[
            ("But", "CCONJ"),
            ("there", "PRON"),
            ("is", "AUX"),
            ("no", "DET"),
            ("proof", "NOUN"),
            (".", "PUNCT"),
        ]);
        assert!(filter_sentence(&good).keep());

        let frag = sent(&[("the", "DET"), ("methods", "NOUN"), ("used", "ADJ")]);
        assert_eq!(
            filter_sentence(&frag).failed,
            vec![
                FilterRule::Capitalization,
                FilterRule::TerminalPunct,
                FilterRule::HasVerb
            ]
        );

        let paren = sent(&[
            ("Er", "PRON"),
            ("(", "PUNCT"),
            ("kam", "VERB"),
            (".", "PUNCT"),
        ]);
        assert_eq!(
            filter_sentence(&paren).failed,
            vec![FilterRule::BracketBalance]
        );

        let quote = sent(&[
            ("„", "PUNCT"),
            ("Ja", "INTJ"),
            ("sagt", "VERB"),
            ("er", "PRON"),
            (".", "PUNCT"),
        ]);
        // first char is a quote mark, not an uppercase letter
        assert_eq!(
            filter_sentence(&quote).failed,
            vec![FilterRule::Capitalization, FilterRule::QuoteParity]
        );

        let empty = Sentence::default();
        assert_eq!(filter_sentence(&empty).failed, FilterRule::ALL.to_vec());
    }

    #[test]
    fn unicode_uppercase() {
        let s = sent(&[("Über", "ADP"), ("geht", "VERB"), ("!", "PUNCT")]);
        assert!(filter_sentence(&s).keep());
    }

    #[test]
    fn plan_bins() {
        let plan = Grouping::default();
        plan.validate().unwrap();
        assert_eq!(plan.anchor_for(11), Some(10));
        assert_eq!(plan.anchor_for(12), Some(10));
        assert_eq!(plan.anchor_for(13), None);
        assert_eq!(plan.anchor_for(72), Some(70));
        assert_eq!(plan.period_for(2015).unwrap().start, 2000);
        assert_eq!(plan.period_for(1859), None);
        assert_eq!(plan.periods.len(), 8);
    }

    #[test]
    fn plan_validation() {
        let mut plan = SamplingPlan::default();
        plan.grouping.periods = parse_periods("1900-1950,1940-1990").unwrap();
        assert!(matches!(
            plan.validate(),
            Err(PlanError::OverlappingPeriods(..))
        ));
        plan.grouping.periods = default_periods();
        plan.grouping.anchors = vec![5, 7];
        assert_eq!(plan.validate(), Err(PlanError::Anchors));
        plan.grouping.anchors = vec![5, 8];
        plan.per_cell = 0;
        assert_eq!(plan.validate(), Err(PlanError::CellCount));
        assert!(parse_periods("1900").is_err());
    }

    fn plan_with(
        anchors: Vec<usize>,
        periods: Vec<PeriodGroup>,
        per_cell: usize,
        seed: u64,
    ) -> SamplingPlan {
        SamplingPlan {
            grouping: Grouping {
                anchors,
                periods,
                ..Default::default()
            },
            per_cell,
            seed,
        }
    }

    fn records(n_per_cell: usize, plan: &SamplingPlan) -> Vec<IndexRecord> {
        let mut out = Vec::new();
        for &a in &plan.grouping.anchors {
            for g in &plan.grouping.periods {
                for k in 0..n_per_cell {
                    out.push(IndexRecord {
                        sent_id: format!("{a}-{}-{k}", g.start),
                        length: a + k % (plan.grouping.offset + 1),
                        year: g.start + (k as i32 % (g.end - g.start + 1)),
                    });
                }
            }
        }
        out
    }

    #[test]
    fn exact_cells_select_everything() {
        let plan = plan_with(
            vec![5],
            vec![PeriodGroup {
                start: 1900,
                end: 1919,
            }],
            4,
            0,
        );
        let recs = records(4, &plan);
        let map = assign_cells(&recs, &plan).unwrap();
        let (rows, short) = balanced_sample(&map, &plan, true).unwrap();
        assert!(short.is_empty());
        assert_eq!(rows.len(), 4);
    }

    #[test]
    fn strict_underfull_names_cell() {
        let plan = plan_with(
            vec![5, 10],
            vec![PeriodGroup {
                start: 1900,
                end: 1919,
            }],
            3,
            0,
        );
        let mut recs = records(3, &plan);
        recs.retain(|r| !(r.length >= 10 && r.sent_id.ends_with("-2")));
        let map = assign_cells(&recs, &plan).unwrap();
        assert_eq!(
            balanced_sample(&map, &plan, true),
            Err(PlanError::Underfull {
                anchor: 10,
                period_start: 1900,
                available: 2,
                wanted: 3,
                deficit: 1
            })
        );
        let (rows, short) = balanced_sample(&map, &plan, false).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(short.len(), 1);
    }

    #[test]
    fn sampling_ignores_input_order() {
        let plan = plan_with(
            vec![5, 10],
            vec![
                PeriodGroup {
                    start: 1900,
                    end: 1919,
                },
                PeriodGroup {
                    start: 1920,
                    end: 1939,
                },
            ],
            3,
            9,
        );
        let mut recs = records(10, &plan);
        let a = balanced_sample(&assign_cells(&recs, &plan).unwrap(), &plan, true).unwrap();
        recs.reverse();
        let b = balanced_sample(&assign_cells(&recs, &plan).unwrap(), &plan, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.len(), 12);
        let other = SamplingPlan {
            seed: 10,
            ..plan.clone()
        };
        let c = balanced_sample(&assign_cells(&recs, &other).unwrap(), &other, true).unwrap();
        assert_ne!(a.0, c.0);
    }
}
