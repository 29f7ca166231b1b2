//! Periodicity-blind hiding in the style of SMAU, SMIU and SMSE.
//!
//! These sanitizers only drive each sensitive itemset below `minutil`; they
//! never look at periods. The victim transaction is the one supporting the
//! fewest non-sensitive PHUIs (ties: higher itemset utility, then smaller
//! tid). The victim item is the member with the highest utility (SMAU), the
//! lowest utility (SMIU), or the fewest non-sensitive PHUIs containing it
//! (SMSE, ties to lower utility). Remaining ties go to the smaller item id.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Dataset, Item, Itemset, PhuiRecord, Transaction};
use crate::sanitizer::{
    required_reduction_units, Algorithm, EditAction, HidingCondition, HidingState, SanitizeOptions,
    SanitizeReport, SilRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineVariant {
    Smau,
    Smiu,
    Smse,
}

impl BaselineVariant {
    pub fn algorithm(self) -> Algorithm {
        match self {
            BaselineVariant::Smau => Algorithm::Smau,
            BaselineVariant::Smiu => Algorithm::Smiu,
            BaselineVariant::Smse => Algorithm::Smse,
        }
    }
}

fn supported_count(t: &Transaction, non_sensitive: &[Itemset]) -> usize {
    non_sensitive.iter().filter(|x| t.contains_all(x)).count()
}

pub fn sanitize_baseline(
    dataset: Dataset,
    sensitive: &[Itemset],
    min_util: u64,
    non_sensitive: &[PhuiRecord],
    variant: BaselineVariant,
) -> Result<(Dataset, SanitizeReport)> {
    let verify = SanitizeOptions::default().verify;
    let mut state = HidingState::new(dataset, sensitive, variant.algorithm(), None, verify)?;
    let non_sensitive: Vec<Itemset> = non_sensitive
        .iter()
        .map(|r| r.itemset.clone())
        .filter(|x| !sensitive.contains(x))
        .collect();
    let containing = |item: Item| non_sensitive.iter().filter(|x| x.contains(item)).count();
    // only the edited transaction changes between steps
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();

    for k in 0..state.ledgers.len() {
        loop {
            let ledger = &state.ledgers[k];
            if ledger.hidden.is_some() {
                break;
            }
            if ledger.support() == 0 {
                state.mark_hidden(k, HidingCondition::Support);
                break;
            }
            let utility = ledger.utility();
            if utility < min_util {
                state.mark_hidden(k, HidingCondition::Utility);
                break;
            }
            let deficit = utility - min_util;

            let mut best: Option<(usize, u64, usize)> = None;
            for (&tid, &u) in &ledger.tid_utilities {
                let count = match counts.get(&tid) {
                    Some(&c) => c,
                    None => {
                        let c = supported_count(state.db.transaction(tid)?, &non_sensitive);
                        counts.insert(tid, c);
                        c
                    }
                };
                let better = match best {
                    None => true,
                    Some((c, bu, _)) => count < c || (count == c && u > bu),
                };
                if better {
                    best = Some((count, u, tid));
                }
            }
            let (_, _, tid) = best.expect("live ledger has occurrences");

            let rows = state.sil_rows(k, tid)?;
            let row = *rows
                .iter()
                .max_by(|a, b| prefer(variant, a, b, &containing))
                .expect("itemsets are non-empty");

            let action = if row.utility <= deficit {
                EditAction::Delete
            } else {
                let dq = required_reduction_units(deficit, state.db.external_utility(row.item)?);
                if dq >= row.count {
                    EditAction::Delete
                } else {
                    EditAction::Reduce { units: dq }
                }
            };
            let touched = state.apply(k, tid, row.item, action, deficit as i64)?;
            counts.remove(&tid);
            for idx in touched {
                let l = &state.ledgers[idx];
                if idx != k && (l.support() == 0 || l.utility() < min_util) {
                    let cond = if l.support() == 0 {
                        HidingCondition::Support
                    } else {
                        HidingCondition::Utility
                    };
                    state.mark_hidden(idx, cond);
                }
            }
        }
    }
    Ok((state.db, state.report))
}

/// `Greater` means `a` is the better victim.
fn prefer(
    variant: BaselineVariant,
    a: &SilRow,
    b: &SilRow,
    containing: &impl Fn(Item) -> usize,
) -> Ordering {
    let primary = match variant {
        BaselineVariant::Smau => a.utility.cmp(&b.utility),
        BaselineVariant::Smiu => b.utility.cmp(&a.utility),
        BaselineVariant::Smse => containing(b.item)
            .cmp(&containing(a.item))
            .then(b.utility.cmp(&a.utility)),
    };
    primary.then(b.item.cmp(&a.item))
}
