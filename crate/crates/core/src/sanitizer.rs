//! Hiding sensitive periodic high-utility itemsets by direct database edits.
//!
//! Every sensitive itemset gets a ledger ([`Sisl`]) of its per-transaction
//! utilities, support and largest period, and a per-item view ([`SilRow`])
//! of its occurrences. Itemsets are processed longest first. While an itemset
//! still satisfies `u >= minutil`, `maxPer <= maxPer threshold` and
//! `sp >= |D|/maxAvg - 1`, the transaction where it has the highest utility
//! is edited: the member item with the largest (MU-MAP) or smallest (MU-MIP)
//! item maximum period is deleted if its utility fits within the utility
//! surplus, otherwise its quantity is reduced just enough to push the
//! itemset below `minutil`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::meets_support_bound;
use crate::model::{
    max_period, period_summary, utility_in, Dataset, Item, Itemset, Rational, Thresholds,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "mu-map")]
    MuMap,
    #[serde(rename = "mu-mip")]
    MuMip,
    #[serde(rename = "smau")]
    Smau,
    #[serde(rename = "smiu")]
    Smiu,
    #[serde(rename = "smse")]
    Smse,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::MuMap,
        Algorithm::MuMip,
        Algorithm::Smau,
        Algorithm::Smiu,
        Algorithm::Smse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::MuMap => "mu-map",
            Algorithm::MuMip => "mu-mip",
            Algorithm::Smau => "smau",
            Algorithm::Smiu => "smiu",
            Algorithm::Smse => "smse",
        }
    }

    /// MU-MAP and MU-MIP guarantee that no sensitive itemset survives.
    pub fn is_period_aware(self) -> bool {
        matches!(self, Algorithm::MuMap | Algorithm::MuMip)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VictimPolicy {
    /// Prefer the member item with the largest maximum period (MU-MAP).
    MaxPeriod,
    /// Prefer the member item with the smallest maximum period (MU-MIP).
    MinPeriod,
}

/// Sensitive itemset ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sisl {
    pub itemset: Itemset,
    pub total_utility: u64,
    /// Ascending by tid.
    pub tid_utilities: Vec<(usize, u64)>,
    pub largest_period: usize,
    pub support: usize,
}

/// One `(transaction, member item)` row of a sensitive item list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SilRow {
    pub tid: usize,
    pub item: Item,
    pub utility: u64,
    pub count: u64,
    /// Maximum period of the single item over the current dataset.
    pub max_period: usize,
}

/// Which loop condition stopped holding for a sensitive itemset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HidingCondition {
    /// Utility fell below minutil.
    Utility,
    /// Maximum period rose above the maxPer threshold.
    MaxPeriod,
    /// Support fell below `|D|/maxAvg - 1`.
    Support,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EditAction {
    Delete,
    Reduce { units: u64 },
}

/// One database edit and the state of the targeted itemset right after it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub itemset: Itemset,
    pub tid: usize,
    pub item: Item,
    pub action: EditAction,
    /// Utility surplus `u(X) - minutil` before the edit.
    pub deficit: i64,
    /// Utility of the victim item in the victim transaction before the edit.
    pub victim_utility: u64,
    /// Utility removed from the database by this edit.
    pub removed_utility: u64,
    pub utility_after: u64,
    pub support_after: usize,
    pub largest_period_after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SanitizeReport {
    pub algorithm: Algorithm,
    /// `|D|/maxAvg - 1`; `None` for the utility-only baselines.
    pub min_support: Option<Rational>,
    pub steps: Vec<Edit>,
    /// In the order itemsets were hidden.
    pub hidden_by: Vec<(Itemset, HidingCondition)>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LogLine {
    Header {
        algorithm: Algorithm,
        min_support: Option<String>,
    },
    Edit(Edit),
    Hidden {
        itemset: Itemset,
        condition: HidingCondition,
    },
}

impl SanitizeReport {
    pub(crate) fn new(algorithm: Algorithm, min_support: Option<Rational>) -> Self {
        Self {
            algorithm,
            min_support,
            steps: Vec::new(),
            hidden_by: Vec::new(),
        }
    }

    /// Total utility removed from the database.
    pub fn removed_utility(&self) -> u64 {
        self.steps.iter().map(|e| e.removed_utility).sum()
    }

    pub fn condition_for(&self, itemset: &Itemset) -> Option<HidingCondition> {
        self.hidden_by
            .iter()
            .find(|(x, _)| x == itemset)
            .map(|&(_, c)| c)
    }

    /// One JSON object per line: a header, every edit, then every hidden itemset.
    pub fn to_jsonl(&self) -> String {
        let mut lines = vec![LogLine::Header {
            algorithm: self.algorithm,
            min_support: self.min_support.map(|r| r.to_string()),
        }];
        lines.extend(self.steps.iter().cloned().map(LogLine::Edit));
        lines.extend(self.hidden_by.iter().map(|(x, c)| LogLine::Hidden {
            itemset: x.clone(),
            condition: *c,
        }));
        let mut out = String::new();
        for line in lines {
            out.push_str(&serde_json::to_string(&line).expect("log lines serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut report: Option<SanitizeReport> = None;
        for (idx, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: LogLine =
                serde_json::from_str(raw).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
            match (line, report.as_mut()) {
                (
                    LogLine::Header {
                        algorithm,
                        min_support,
                    },
                    None,
                ) => {
                    let min_support = min_support
                        .map(|s| s.parse::<Rational>())
                        .transpose()
                        .map_err(|_| Error::parse(idx + 1, "malformed min_support"))?;
                    report = Some(SanitizeReport::new(algorithm, min_support));
                }
                (LogLine::Edit(edit), Some(r)) => r.steps.push(edit),
                (LogLine::Hidden { itemset, condition }, Some(r)) => {
                    r.hidden_by.push((itemset, condition))
                }
                _ => {
                    return Err(Error::parse(
                        idx + 1,
                        "header must come first, exactly once",
                    ))
                }
            }
        }
        report.ok_or_else(|| Error::parse(0, "empty report"))
    }
}

/// Re-applies the edits of a report to the original dataset.
pub fn replay(dataset: &Dataset, report: &SanitizeReport) -> Result<Dataset> {
    let mut db = dataset.clone();
    for edit in &report.steps {
        match edit.action {
            EditAction::Delete => {
                db.delete_item(edit.tid, edit.item)?;
            }
            EditAction::Reduce { units } => {
                db.reduce_quantity(edit.tid, edit.item, units)?;
            }
        }
    }
    Ok(db)
}

pub fn build_sisl(dataset: &Dataset, itemset: &Itemset) -> Result<Sisl> {
    let tid_utilities: Vec<(usize, u64)> = dataset
        .iter()
        .filter_map(|(tid, t)| utility_in(dataset, t, itemset).map(|u| (tid, u)))
        .collect();
    if tid_utilities.is_empty() {
        return Err(Error::EmptySupport(itemset.clone()));
    }
    let tids: Vec<usize> = tid_utilities.iter().map(|&(t, _)| t).collect();
    Ok(Sisl {
        itemset: itemset.clone(),
        total_utility: tid_utilities.iter().map(|&(_, u)| u).sum(),
        largest_period: max_period(&tids, dataset.len()),
        support: tid_utilities.len(),
        tid_utilities,
    })
}

pub fn build_sil(dataset: &Dataset, itemset: &Itemset) -> Result<Vec<SilRow>> {
    let mut periods = HashMap::new();
    for &item in itemset.items() {
        let single = Itemset::from_sorted_unchecked(vec![item]);
        periods.insert(item, period_summary(dataset, &single).max_per);
    }
    let mut rows = Vec::new();
    for (tid, t) in dataset.iter() {
        if !t.contains_all(itemset) {
            continue;
        }
        for &item in itemset.items() {
            let count = t.quantity(item).expect("contained item");
            rows.push(SilRow {
                tid,
                item,
                utility: count * dataset.external_utility(item)?,
                count,
                max_period: periods[&item],
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptySupport(itemset.clone()));
    }
    Ok(rows)
}

/// `|D| / maxAvg - 1`, exactly.
pub fn min_support_bound(db_len: usize, max_avg: Rational) -> Result<Rational> {
    if max_avg <= Rational::from_integer(0) {
        return Err(Error::InvalidThresholds("maxAvg must be positive".into()));
    }
    Ok(Rational::from_integer(db_len as i64) / max_avg - Rational::from_integer(1))
}

/// Transaction where the itemset has its highest utility; ties go to the smaller tid.
pub fn select_victim_transaction(sisl: &Sisl) -> Option<usize> {
    pick_max_utility(&sisl.tid_utilities)
}

fn pick_max_utility(tid_utilities: &[(usize, u64)]) -> Option<usize> {
    tid_utilities
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|&(tid, _)| tid)
}

/// Victim item among the rows of one transaction: extreme maximum period per
/// policy, then larger utility, then smaller id.
pub fn select_victim_item(rows: &[SilRow], policy: VictimPolicy) -> Option<Item> {
    rows.iter()
        .max_by(|a, b| {
            let period = match policy {
                VictimPolicy::MaxPeriod => a.max_period.cmp(&b.max_period),
                VictimPolicy::MinPeriod => b.max_period.cmp(&a.max_period),
            };
            period
                .then(a.utility.cmp(&b.utility))
                .then(b.item.cmp(&a.item))
        })
        .map(|r| r.item)
}

/// Smallest `dq` with `dq * eu > du`, so the reduced itemset lands strictly
/// below minutil.
pub fn required_reduction_units(du: u64, eu: u64) -> u64 {
    assert!(eu >= 1, "external utility must be positive");
    du / eu + 1
}

#[derive(Debug, Clone, Copy)]
pub struct SanitizeOptions {
    /// Recompute every touched ledger from scratch after each edit and fail
    /// on any drift.
    pub verify: bool,
}

impl Default for SanitizeOptions {
    fn default() -> Self {
        Self {
            verify: cfg!(debug_assertions),
        }
    }
}

/// Live ledger of one sensitive itemset inside the hiding loop.
#[derive(Debug)]
pub(crate) struct Ledger {
    pub itemset: Itemset,
    pub tid_utilities: BTreeMap<usize, u64>,
    pub hidden: Option<HidingCondition>,
}

impl Ledger {
    pub fn utility(&self) -> u64 {
        self.tid_utilities.values().sum()
    }

    pub fn support(&self) -> usize {
        self.tid_utilities.len()
    }

    pub fn largest_period(&self, db_len: usize) -> usize {
        let tids: Vec<usize> = self.tid_utilities.keys().copied().collect();
        max_period(&tids, db_len)
    }

    fn as_sisl(&self, db_len: usize) -> Sisl {
        Sisl {
            itemset: self.itemset.clone(),
            total_utility: self.utility(),
            tid_utilities: self.tid_utilities.iter().map(|(&t, &u)| (t, u)).collect(),
            largest_period: self.largest_period(db_len),
            support: self.support(),
        }
    }
}

/// Shared state for every hiding algorithm: the dataset being edited, the
/// ledgers of all sensitive itemsets and per-item occurrence sets.
pub(crate) struct HidingState {
    pub db: Dataset,
    pub ledgers: Vec<Ledger>,
    by_item: HashMap<Item, Vec<usize>>,
    item_tids: HashMap<Item, BTreeSet<usize>>,
    pub report: SanitizeReport,
    verify: bool,
}

impl HidingState {
    pub fn new(
        db: Dataset,
        sensitive: &[Itemset],
        algorithm: Algorithm,
        min_support: Option<Rational>,
        verify: bool,
    ) -> Result<Self> {
        let mut unique: Vec<Itemset> = Vec::with_capacity(sensitive.len());
        for x in sensitive {
            if !unique.contains(x) {
                unique.push(x.clone());
            }
        }
        let mut ledgers = Vec::with_capacity(unique.len());
        for x in unique {
            let sisl = build_sisl(&db, &x)?;
            ledgers.push(Ledger {
                itemset: x,
                tid_utilities: sisl.tid_utilities.into_iter().collect(),
                hidden: None,
            });
        }
        // longest first, then higher utility, then lexicographic
        ledgers.sort_by(|a, b| {
            b.itemset
                .len()
                .cmp(&a.itemset.len())
                .then(b.utility().cmp(&a.utility()))
                .then(a.itemset.cmp(&b.itemset))
        });

        let mut by_item: HashMap<Item, Vec<usize>> = HashMap::new();
        for (idx, l) in ledgers.iter().enumerate() {
            for &item in l.itemset.items() {
                by_item.entry(item).or_default().push(idx);
            }
        }
        let mut item_tids: HashMap<Item, BTreeSet<usize>> =
            by_item.keys().map(|&i| (i, BTreeSet::new())).collect();
        for (tid, t) in db.iter() {
            for item in t.items() {
                if let Some(set) = item_tids.get_mut(&item) {
                    set.insert(tid);
                }
            }
        }
        Ok(Self {
            db,
            ledgers,
            by_item,
            item_tids,
            report: SanitizeReport::new(algorithm, min_support),
            verify,
        })
    }

    pub fn item_max_period(&self, item: Item) -> usize {
        let tids: Vec<usize> = self.item_tids[&item].iter().copied().collect();
        max_period(&tids, self.db.len())
    }

    pub fn sil_rows(&self, ledger: usize, tid: usize) -> Result<Vec<SilRow>> {
        let t = self.db.transaction(tid)?;
        self.ledgers[ledger]
            .itemset
            .items()
            .iter()
            .map(|&item| {
                let count = t.quantity(item).ok_or(Error::AbsentItem { item, tid })?;
                Ok(SilRow {
                    tid,
                    item,
                    utility: count * self.db.external_utility(item)?,
                    count,
                    max_period: self.item_max_period(item),
                })
            })
            .collect()
    }

    pub fn mark_hidden(&mut self, ledger: usize, condition: HidingCondition) {
        let l = &mut self.ledgers[ledger];
        debug_assert!(l.hidden.is_none());
        l.hidden = Some(condition);
        self.report.hidden_by.push((l.itemset.clone(), condition));
    }

    /// Deletes or reduces `item` in `tid` and updates every ledger that
    /// contains it there. Returns the indices of the live ledgers touched.
    pub fn apply(
        &mut self,
        target: usize,
        tid: usize,
        item: Item,
        action: EditAction,
        deficit: i64,
    ) -> Result<Vec<usize>> {
        let eu = self.db.external_utility(item)?;
        let quantity = self
            .db
            .transaction(tid)?
            .quantity(item)
            .ok_or(Error::AbsentItem { item, tid })?;
        let removed = match action {
            EditAction::Delete => {
                self.db.delete_item(tid, item)?;
                if let Some(set) = self.item_tids.get_mut(&item) {
                    set.remove(&tid);
                }
                quantity * eu
            }
            EditAction::Reduce { units } => {
                self.db.reduce_quantity(tid, item, units)?;
                units * eu
            }
        };

        let mut touched = Vec::new();
        for &idx in &self.by_item[&item] {
            let ledger = &mut self.ledgers[idx];
            if ledger.hidden.is_some() {
                continue;
            }
            let Some(u) = ledger.tid_utilities.get_mut(&tid) else {
                continue;
            };
            match action {
                EditAction::Delete => {
                    ledger.tid_utilities.remove(&tid);
                }
                EditAction::Reduce { .. } => *u -= removed,
            }
            touched.push(idx);
        }

        let db_len = self.db.len();
        let t = &self.ledgers[target];
        self.report.steps.push(Edit {
            itemset: t.itemset.clone(),
            tid,
            item,
            action,
            deficit,
            victim_utility: quantity * eu,
            removed_utility: removed,
            utility_after: t.utility(),
            support_after: t.support(),
            largest_period_after: t.largest_period(db_len),
        });

        if self.verify {
            self.check_coherence(&touched, item)?;
        }
        Ok(touched)
    }

    fn check_coherence(&self, touched: &[usize], item: Item) -> Result<()> {
        let db_len = self.db.len();
        for &idx in touched {
            let ledger = &self.ledgers[idx];
            let live = ledger.as_sisl(db_len);
            let fresh = match build_sisl(&self.db, &ledger.itemset) {
                Ok(s) => Some(s),
                Err(Error::EmptySupport(_)) => None,
                Err(e) => return Err(e),
            };
            let consistent = match fresh {
                Some(fresh) => fresh == live,
                None => live.support == 0,
            };
            if !consistent {
                return Err(Error::Invariant(format!(
                    "ledger of {} drifted from the dataset",
                    ledger.itemset
                )));
            }
        }
        let single = Itemset::from_sorted_unchecked(vec![item]);
        if period_summary(&self.db, &single).max_per != self.item_max_period(item) {
            return Err(Error::Invariant(format!(
                "cached maximum period of item {item} drifted"
            )));
        }
        Ok(())
    }
}

/// The condition that currently blocks mining `ledger`, if any. Support is
/// reported first, then maximum period, then utility.
fn blocking_condition(
    ledger: &Ledger,
    thresholds: &Thresholds,
    db_len: usize,
) -> Option<HidingCondition> {
    let support = ledger.support();
    if support == 0 || !meets_support_bound(support, db_len, thresholds.max_avg) {
        Some(HidingCondition::Support)
    } else if ledger.largest_period(db_len) > thresholds.max_per {
        Some(HidingCondition::MaxPeriod)
    } else if ledger.utility() < thresholds.min_util {
        Some(HidingCondition::Utility)
    } else {
        None
    }
}

pub fn sanitize(
    dataset: Dataset,
    sensitive: &[Itemset],
    thresholds: &Thresholds,
    policy: VictimPolicy,
) -> Result<(Dataset, SanitizeReport)> {
    sanitize_with(
        dataset,
        sensitive,
        thresholds,
        policy,
        SanitizeOptions::default(),
    )
}

pub fn sanitize_with(
    dataset: Dataset,
    sensitive: &[Itemset],
    thresholds: &Thresholds,
    policy: VictimPolicy,
    options: SanitizeOptions,
) -> Result<(Dataset, SanitizeReport)> {
    thresholds.validate()?;
    let algorithm = match policy {
        VictimPolicy::MaxPeriod => Algorithm::MuMap,
        VictimPolicy::MinPeriod => Algorithm::MuMip,
    };
    let min_support = min_support_bound(dataset.len(), thresholds.max_avg)?;
    let mut state = HidingState::new(
        dataset,
        sensitive,
        algorithm,
        Some(min_support),
        options.verify,
    )?;
    let db_len = state.db.len();

    for k in 0..state.ledgers.len() {
        loop {
            if state.ledgers[k].hidden.is_some() {
                break;
            }
            if let Some(cond) = blocking_condition(&state.ledgers[k], thresholds, db_len) {
                state.mark_hidden(k, cond);
                break;
            }
            let ledger = &state.ledgers[k];
            let deficit = ledger.utility() - thresholds.min_util;
            let tid_utilities: Vec<(usize, u64)> =
                ledger.tid_utilities.iter().map(|(&t, &u)| (t, u)).collect();
            let tid = pick_max_utility(&tid_utilities).expect("live ledger has occurrences");
            let rows = state.sil_rows(k, tid)?;
            let item = select_victim_item(&rows, policy).expect("itemsets are non-empty");
            let row = rows.iter().find(|r| r.item == item).expect("victim row");

            let action = if row.utility <= deficit {
                EditAction::Delete
            } else {
                let dq = required_reduction_units(deficit, state.db.external_utility(item)?);
                if dq >= row.count {
                    EditAction::Delete
                } else {
                    EditAction::Reduce { units: dq }
                }
            };
            let touched = state.apply(k, tid, item, action, deficit as i64)?;
            for idx in touched {
                if idx == k {
                    continue;
                }
                if let Some(cond) = blocking_condition(&state.ledgers[idx], thresholds, db_len) {
                    state.mark_hidden(idx, cond);
                }
            }
        }
    }
    Ok((state.db, state.report))
}
