//! Periodic high-utility itemset mining.
//!
//! [`mine_phuis`] is a depth-first utility-list search over items ordered by
//! ascending TWU. A subtree is discarded only when
//!
//! * its utility upper bound (TWU or prefix utility plus remaining utility)
//!   is below `minutil`,
//! * the prefix support is below `|D|/maxAvg - 1`, or
//! * the prefix maximum period exceeds `maxPer`.
//!
//! Support and maximum period are monotone under extension because
//! occurrence lists only shrink, so the last two prunes are safe. The lower
//! bounds `minPer` and `minAvg` are checked at output only.
//!
//! [`mine_phuis_bruteforce`] enumerates the power set and is the test oracle.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    itemset_utility, max_period, period_summary, Dataset, Item, Itemset, PeriodSummary, PhuiRecord,
    Rational, Thresholds,
};

/// Largest item universe the brute-force oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TwuTable(BTreeMap<Item, u64>);

impl TwuTable {
    /// TWU of an item; 0 when it occurs nowhere.
    pub fn get(&self, item: Item) -> u64 {
        self.0.get(&item).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Item, u64)> + '_ {
        self.0.iter().map(|(&i, &u)| (i, u))
    }
}

pub fn compute_twu(dataset: &Dataset) -> TwuTable {
    let mut twu = BTreeMap::new();
    for (_, t) in dataset.iter() {
        let tu = dataset.tu_of(t);
        for item in t.items() {
            *twu.entry(item).or_insert(0) += tu;
        }
    }
    TwuTable(twu)
}

/// `sp >= |D|/maxAvg - 1`, i.e. `avgPer <= maxAvg`, in exact arithmetic.
pub(crate) fn meets_support_bound(support: usize, db_len: usize, max_avg: Rational) -> bool {
    Rational::from_integer(support as i64 + 1) * max_avg >= Rational::from_integer(db_len as i64)
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    tid: usize,
    iutil: u64,
    rutil: u64,
}

#[derive(Debug, Clone)]
struct UtilityList {
    /// Items of the itemset in search (rank) order.
    items: Vec<Item>,
    entries: Vec<Entry>,
}

impl UtilityList {
    fn tids(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.tid).collect()
    }

    fn utility(&self) -> u64 {
        self.entries.iter().map(|e| e.iutil).sum()
    }

    fn upper_bound(&self) -> u64 {
        self.entries.iter().map(|e| e.iutil + e.rutil).sum()
    }
}

/// Why a subtree was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneReason {
    /// Item TWU below minutil; the item is dropped from the search.
    Twu,
    /// Prefix utility plus remaining utility below minutil; extensions skipped.
    UtilityBound,
    /// Prefix support below `|D|/maxAvg - 1`; prefix and extensions skipped.
    Support,
    /// Prefix maximum period above maxPer; prefix and extensions skipped.
    MaxPeriod,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneEvent {
    pub itemset: Itemset,
    pub reason: PruneReason,
}

struct Search<'a> {
    db_len: usize,
    thresholds: &'a Thresholds,
}

impl Search<'_> {
    fn explore(
        &self,
        prefix: Option<&UtilityList>,
        candidates: &[UtilityList],
        out: &mut Vec<PhuiRecord>,
        mut trace: Option<&mut Vec<PruneEvent>>,
    ) {
        for idx in 0..candidates.len() {
            self.subtree(prefix, candidates, idx, out, trace.as_deref_mut());
        }
    }

    /// Visits `candidates[idx]` and everything it extends to.
    fn subtree(
        &self,
        prefix: Option<&UtilityList>,
        candidates: &[UtilityList],
        idx: usize,
        out: &mut Vec<PhuiRecord>,
        mut trace: Option<&mut Vec<PruneEvent>>,
    ) {
        let x = &candidates[idx];
        if !self.visit(x, out, trace.as_deref_mut()) {
            return;
        }
        let children: Vec<UtilityList> = candidates[idx + 1..]
            .iter()
            .map(|y| join(prefix, x, y))
            .filter(|ul| !ul.entries.is_empty())
            .collect();
        if !children.is_empty() {
            self.explore(Some(x), &children, out, trace);
        }
    }

    /// Emits `x` if it qualifies; returns whether its extensions are worth visiting.
    fn visit(
        &self,
        x: &UtilityList,
        out: &mut Vec<PhuiRecord>,
        trace: Option<&mut Vec<PruneEvent>>,
    ) -> bool {
        let t = self.thresholds;
        let support = x.entries.len();
        let tids = x.tids();
        let reason = if !meets_support_bound(support, self.db_len, t.max_avg) {
            Some(PruneReason::Support)
        } else if max_period(&tids, self.db_len) > t.max_per {
            Some(PruneReason::MaxPeriod)
        } else {
            None
        };
        if let Some(reason) = reason {
            if let Some(trace) = trace {
                trace.push(PruneEvent {
                    itemset: to_itemset(&x.items),
                    reason,
                });
            }
            return false;
        }

        let utility = x.utility();
        if utility >= t.min_util {
            let summary = PeriodSummary::from_occurrences(tids, self.db_len);
            if t.period_ok(&summary) {
                out.push(PhuiRecord {
                    itemset: to_itemset(&x.items),
                    utility,
                    summary,
                });
            }
        }
        if x.upper_bound() < t.min_util {
            if let Some(trace) = trace {
                trace.push(PruneEvent {
                    itemset: to_itemset(&x.items),
                    reason: PruneReason::UtilityBound,
                });
            }
            return false;
        }
        true
    }
}

fn to_itemset(items: &[Item]) -> Itemset {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    Itemset::from_sorted_unchecked(sorted)
}

/// Utility list of `prefix ∪ {x, y}` from those of `prefix+x` and `prefix+y`.
fn join(prefix: Option<&UtilityList>, x: &UtilityList, y: &UtilityList) -> UtilityList {
    let mut entries = Vec::new();
    let mut yi = 0;
    let mut pi = 0;
    for ex in &x.entries {
        while yi < y.entries.len() && y.entries[yi].tid < ex.tid {
            yi += 1;
        }
        if yi == y.entries.len() {
            break;
        }
        let ey = y.entries[yi];
        if ey.tid != ex.tid {
            continue;
        }
        let shared = match prefix {
            Some(p) => {
                while p.entries[pi].tid < ex.tid {
                    pi += 1;
                }
                p.entries[pi].iutil
            }
            None => 0,
        };
        entries.push(Entry {
            tid: ex.tid,
            iutil: ex.iutil + ey.iutil - shared,
            rutil: ey.rutil,
        });
    }
    let mut items = x.items.clone();
    items.push(
        *y.items
            .last()
            .expect("utility lists name at least one item"),
    );
    UtilityList { items, entries }
}

/// Single-item utility lists for the promising items, in search order.
fn initial_lists(
    dataset: &Dataset,
    thresholds: &Thresholds,
    trace: Option<&mut Vec<PruneEvent>>,
) -> Vec<UtilityList> {
    let twu = compute_twu(dataset);
    let mut order: Vec<(Item, u64)> = twu.iter().collect();
    if let Some(trace) = trace {
        for &(item, w) in &order {
            if w < thresholds.min_util {
                trace.push(PruneEvent {
                    itemset: Itemset::from_sorted_unchecked(vec![item]),
                    reason: PruneReason::Twu,
                });
            }
        }
    }
    order.retain(|&(_, w)| w >= thresholds.min_util);
    order.sort_unstable_by_key(|&(item, w)| (w, item));

    let rank: BTreeMap<Item, usize> = order
        .iter()
        .enumerate()
        .map(|(r, &(i, _))| (i, r))
        .collect();
    let mut lists: Vec<UtilityList> = order
        .iter()
        .map(|&(item, _)| UtilityList {
            items: vec![item],
            entries: Vec::new(),
        })
        .collect();

    let mut row: Vec<(usize, u64)> = Vec::new();
    for (tid, t) in dataset.iter() {
        row.clear();
        for &(item, q) in t.entries() {
            if let Some(&r) = rank.get(&item) {
                let eu = dataset.utilities().get(item).unwrap_or(0);
                row.push((r, q * eu));
            }
        }
        row.sort_unstable_by_key(|&(r, _)| r);
        let mut remaining: u64 = row.iter().map(|&(_, u)| u).sum();
        for &(r, u) in &row {
            remaining -= u;
            lists[r].entries.push(Entry {
                tid,
                iutil: u,
                rutil: remaining,
            });
        }
    }
    lists
}

fn sort_records(records: &mut [PhuiRecord]) {
    records.sort_unstable_by(|a, b| a.itemset.cmp(&b.itemset));
}

/// All PHUIs of `dataset`, sorted lexicographically by itemset.
pub fn mine_phuis(dataset: &Dataset, thresholds: &Thresholds) -> Result<Vec<PhuiRecord>> {
    thresholds.validate()?;
    let lists = initial_lists(dataset, thresholds, None);
    let search = Search {
        db_len: dataset.len(),
        thresholds,
    };
    // first-level subtrees are independent
    let mut records: Vec<PhuiRecord> = (0..lists.len())
        .into_par_iter()
        .flat_map_iter(|idx| {
            let mut out = Vec::new();
            search.subtree(None, &lists, idx, &mut out, None);
            out
        })
        .collect();
    sort_records(&mut records);
    Ok(records)
}

/// Sequential mining that also reports every pruned subtree.
pub fn mine_phuis_traced(
    dataset: &Dataset,
    thresholds: &Thresholds,
) -> Result<(Vec<PhuiRecord>, Vec<PruneEvent>)> {
    thresholds.validate()?;
    let mut trace = Vec::new();
    let lists = initial_lists(dataset, thresholds, Some(&mut trace));
    let search = Search {
        db_len: dataset.len(),
        thresholds,
    };
    let mut out = Vec::new();
    search.explore(None, &lists, &mut out, Some(&mut trace));
    sort_records(&mut out);
    Ok((out, trace))
}

/// Power-set enumeration with the same filter and ordering as [`mine_phuis`].
pub fn mine_phuis_bruteforce(
    dataset: &Dataset,
    thresholds: &Thresholds,
) -> Result<Vec<PhuiRecord>> {
    thresholds.validate()?;
    let universe = dataset.item_universe();
    if universe.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::UniverseTooLarge {
            size: universe.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << universe.len()) {
        let items: Vec<Item> = universe
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &i)| i)
            .collect();
        let itemset = Itemset::from_sorted_unchecked(items);
        let summary = period_summary(dataset, &itemset);
        let utility = itemset_utility(dataset, &itemset);
        if thresholds.accepts(utility, &summary) {
            out.push(PhuiRecord {
                itemset,
                utility,
                summary,
            });
        }
    }
    sort_records(&mut out);
    Ok(out)
}
