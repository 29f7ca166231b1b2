//! Domain types for quantitative transaction databases and the elementary
//! utility and period arithmetic shared by every other module.
//!
//! Transaction ids are 1-based slots. A slot may hold an empty transaction,
//! which keeps `|D|` and every period list stable across sanitization.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational used for average periods and their thresholds.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Item(pub u32);

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// External utility (per-unit profit) of every item.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UtilityTable {
    entries: BTreeMap<Item, u64>,
}

impl UtilityTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an entry, rejecting zero utilities and duplicates.
    pub fn insert(&mut self, item: Item, external_utility: u64) -> Result<()> {
        if external_utility == 0 {
            return Err(Error::InvalidDataset(format!(
                "external utility of item {item} must be at least 1"
            )));
        }
        if self.entries.insert(item, external_utility).is_some() {
            return Err(Error::InvalidDataset(format!(
                "duplicate utility-table entry for item {item}"
            )));
        }
        Ok(())
    }

    pub fn get(&self, item: Item) -> Option<u64> {
        self.entries.get(&item).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Item, u64)> + '_ {
        self.entries.iter().map(|(&i, &u)| (i, u))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(Item, u64)> for UtilityTable {
    /// Later duplicates overwrite earlier ones; use [`UtilityTable::insert`] for
    /// validated construction.
    fn from_iter<T: IntoIterator<Item = (Item, u64)>>(iter: T) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

/// One transaction: distinct items sorted by id, each with a positive quantity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transaction {
    entries: Vec<(Item, u64)>,
}

impl Transaction {
    /// Builds a transaction from `(item, quantity)` pairs in any order.
    pub fn new(mut entries: Vec<(Item, u64)>) -> Result<Self> {
        entries.sort_unstable_by_key(|&(item, _)| item);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidDataset(format!(
                    "item {} listed twice in one transaction",
                    pair[0].0
                )));
            }
        }
        if let Some(&(item, _)) = entries.iter().find(|&&(_, q)| q == 0) {
            return Err(Error::InvalidDataset(format!(
                "item {item} has zero quantity"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(Item, u64)] {
        &self.entries
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn quantity(&self, item: Item) -> Option<u64> {
        self.entries
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|idx| self.entries[idx].1)
    }

    pub fn contains(&self, item: Item) -> bool {
        self.quantity(item).is_some()
    }

    /// True when every item of `itemset` is present.
    pub fn contains_all(&self, itemset: &Itemset) -> bool {
        // both sides are sorted, so a merge walk suffices
        let mut entries = self.entries.iter();
        'outer: for &wanted in itemset.items() {
            for &(item, _) in entries.by_ref() {
                if item == wanted {
                    continue 'outer;
                }
                if item > wanted {
                    return false;
                }
            }
            return false;
        }
        true
    }

    fn remove(&mut self, item: Item) -> Option<u64> {
        let idx = self.entries.binary_search_by_key(&item, |&(i, _)| i).ok()?;
        Some(self.entries.remove(idx).1)
    }

    fn quantity_mut(&mut self, item: Item) -> Option<&mut u64> {
        let idx = self.entries.binary_search_by_key(&item, |&(i, _)| i).ok()?;
        Some(&mut self.entries[idx].1)
    }
}

/// Ordered transaction slots plus the external-utility table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    transactions: Vec<Transaction>,
    utilities: UtilityTable,
}

impl Dataset {
    /// Validates that the dataset is non-empty and every occurring item has
    /// an external utility.
    pub fn new(transactions: Vec<Transaction>, utilities: UtilityTable) -> Result<Self> {
        if transactions.is_empty() {
            return Err(Error::InvalidDataset(
                "a dataset needs at least one transaction slot".into(),
            ));
        }
        for (idx, t) in transactions.iter().enumerate() {
            for item in t.items() {
                if utilities.get(item).is_none() {
                    return Err(Error::InvalidDataset(format!(
                        "item {item} in transaction {} has no external utility",
                        idx + 1
                    )));
                }
            }
        }
        Ok(Self {
            transactions,
            utilities,
        })
    }

    /// `|D|`, counting empty slots.
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn utilities(&self) -> &UtilityTable {
        &self.utilities
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    /// Iterates `(tid, transaction)` with 1-based tids.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Transaction)> + '_ {
        self.transactions
            .iter()
            .enumerate()
            .map(|(i, t)| (i + 1, t))
    }

    pub fn transaction(&self, tid: usize) -> Result<&Transaction> {
        if tid == 0 || tid > self.transactions.len() {
            return Err(Error::TidOutOfRange {
                tid,
                len: self.transactions.len(),
            });
        }
        Ok(&self.transactions[tid - 1])
    }

    /// External utility of an item that is known to the table.
    pub fn external_utility(&self, item: Item) -> Result<u64> {
        self.utilities
            .get(item)
            .ok_or_else(|| Error::InvalidDataset(format!("item {item} has no external utility")))
    }

    /// Distinct items occurring in at least one transaction, ascending.
    pub fn item_universe(&self) -> Vec<Item> {
        let mut items: Vec<Item> = self.transactions.iter().flat_map(|t| t.items()).collect();
        items.sort_unstable();
        items.dedup();
        items
    }

    /// Transaction utility `TU(T_tid)`.
    pub fn transaction_utility(&self, tid: usize) -> Result<u64> {
        let t = self.transaction(tid)?;
        Ok(self.tu_of(t))
    }

    pub(crate) fn tu_of(&self, t: &Transaction) -> u64 {
        t.entries()
            .iter()
            .map(|&(item, q)| q * self.utilities.get(item).unwrap_or(0))
            .sum()
    }

    /// Sum of all transaction utilities.
    pub fn total_utility(&self) -> u64 {
        self.transactions.iter().map(|t| self.tu_of(t)).sum()
    }

    /// Keeps only the first `n` slots (at least one).
    pub fn truncated(&self, n: usize) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidDataset("prefix size must be positive".into()));
        }
        Ok(Dataset {
            transactions: self.transactions.iter().take(n).cloned().collect(),
            utilities: self.utilities.clone(),
        })
    }

    /// Deletes `item` from transaction `tid`, returning its former quantity.
    pub(crate) fn delete_item(&mut self, tid: usize, item: Item) -> Result<u64> {
        self.transaction(tid)?;
        self.transactions[tid - 1]
            .remove(item)
            .ok_or(Error::AbsentItem { item, tid })
    }

    /// Lowers the quantity of `item` in `tid` by `by` units; the result must
    /// stay positive.
    pub(crate) fn reduce_quantity(&mut self, tid: usize, item: Item, by: u64) -> Result<u64> {
        self.transaction(tid)?;
        let q = self.transactions[tid - 1]
            .quantity_mut(item)
            .ok_or(Error::AbsentItem { item, tid })?;
        if by == 0 || by >= *q {
            return Err(Error::Invariant(format!(
                "cannot reduce item {item} in transaction {tid} by {by} from quantity {q}"
            )));
        }
        *q -= by;
        Ok(*q)
    }
}

/// A non-empty set of distinct items, kept in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Item>", into = "Vec<Item>")]
pub struct Itemset(Vec<Item>);

impl Itemset {
    pub fn new(mut items: Vec<Item>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidItemset(
                "an itemset needs at least one item".into(),
            ));
        }
        items.sort_unstable();
        let before = items.len();
        items.dedup();
        if items.len() != before {
            return Err(Error::InvalidItemset("duplicate item in itemset".into()));
        }
        Ok(Self(items))
    }

    pub fn from_ids(ids: &[u32]) -> Result<Self> {
        Self::new(ids.iter().map(|&i| Item(i)).collect())
    }

    pub fn items(&self) -> &[Item] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; itemsets are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: Item) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn is_subset_of(&self, other: &Itemset) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub(crate) fn from_sorted_unchecked(items: Vec<Item>) -> Self {
        debug_assert!(!items.is_empty() && items.windows(2).all(|w| w[0] < w[1]));
        Self(items)
    }
}

impl TryFrom<Vec<Item>> for Itemset {
    type Error = Error;

    fn try_from(items: Vec<Item>) -> Result<Self> {
        Itemset::new(items)
    }
}

impl From<Itemset> for Vec<Item> {
    fn from(set: Itemset) -> Self {
        set.0
    }
}

impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (idx, item) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str("}")
    }
}

/// Mining thresholds. Average-period bounds are exact rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    pub min_util: u64,
    pub min_per: usize,
    pub max_per: usize,
    pub min_avg: Rational,
    pub max_avg: Rational,
}

impl Thresholds {
    pub fn new(
        min_util: u64,
        min_per: usize,
        max_per: usize,
        min_avg: Rational,
        max_avg: Rational,
    ) -> Result<Self> {
        let t = Self {
            min_util,
            min_per,
            max_per,
            min_avg,
            max_avg,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_per == 0 {
            return Err(Error::InvalidThresholds("maxPer must be positive".into()));
        }
        if self.min_per > self.max_per {
            return Err(Error::InvalidThresholds(format!(
                "minPer {} exceeds maxPer {}",
                self.min_per, self.max_per
            )));
        }
        if self.max_avg <= Rational::from_integer(0) {
            return Err(Error::InvalidThresholds("maxAvg must be positive".into()));
        }
        if self.min_avg < Rational::from_integer(0) {
            return Err(Error::InvalidThresholds(
                "minAvg must not be negative".into(),
            ));
        }
        if self.min_avg > self.max_avg {
            return Err(Error::InvalidThresholds(format!(
                "minAvg {} exceeds maxAvg {}",
                self.min_avg, self.max_avg
            )));
        }
        Ok(())
    }

    /// Whether a period summary meets all four period constraints.
    pub fn period_ok(&self, summary: &PeriodSummary) -> bool {
        summary.min_per >= self.min_per
            && summary.max_per <= self.max_per
            && summary.avg_per >= self.min_avg
            && summary.avg_per <= self.max_avg
    }

    /// Whether an itemset with this utility and summary is a PHUI.
    pub fn accepts(&self, utility: u64, summary: &PeriodSummary) -> bool {
        summary.support > 0 && utility >= self.min_util && self.period_ok(summary)
    }
}

/// Parses `7`, `1.25` or `5/3` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Config(format!("not a non-negative number: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den <= 0 || num < 0 {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac.len() > 12 {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let num: i64 = digits.parse().map_err(|_| bad())?;
    let den = 10i64.pow(frac.len() as u32);
    Ok(Rational::new(num, den))
}

/// Occurrence list and the period statistics derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodSummary {
    pub occurrences: Vec<usize>,
    pub periods: Vec<usize>,
    pub min_per: usize,
    pub max_per: usize,
    pub avg_per: Rational,
    pub support: usize,
}

impl PeriodSummary {
    /// Builds the summary from an ascending tid list over a dataset of
    /// `db_len` slots.
    pub fn from_occurrences(occurrences: Vec<usize>, db_len: usize) -> Self {
        let periods = periods(&occurrences, db_len);
        let max_per = *periods.iter().max().expect("period list is never empty");
        // interior gaps only; with sp <= 1 there are none and minPer falls back to maxPer
        let min_per = if periods.len() < 3 {
            max_per
        } else {
            *periods[1..periods.len() - 1].iter().min().unwrap()
        };
        let support = occurrences.len();
        Self {
            avg_per: average_period(db_len, support),
            occurrences,
            periods,
            min_per,
            max_per,
            support,
        }
    }
}

/// Gap list with virtual boundaries at tid 0 and tid `db_len`.
pub fn periods(occurrences: &[usize], db_len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(occurrences.len() + 1);
    let mut prev = 0;
    for &tid in occurrences {
        out.push(tid - prev);
        prev = tid;
    }
    out.push(db_len - prev);
    out
}

/// `max(P(X))` without materializing the gap list.
pub fn max_period(occurrences: &[usize], db_len: usize) -> usize {
    let mut prev = 0;
    let mut best = 0;
    for &tid in occurrences {
        best = best.max(tid - prev);
        prev = tid;
    }
    best.max(db_len - prev)
}

/// `|D| / (sp + 1)`.
pub fn average_period(db_len: usize, support: usize) -> Rational {
    Rational::new(db_len as i64, support as i64 + 1)
}

/// Mined periodic high-utility itemset with its statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhuiRecord {
    pub itemset: Itemset,
    pub utility: u64,
    pub summary: PeriodSummary,
}

/// `U(item, T_tid) = iu × eu`.
pub fn item_utility(dataset: &Dataset, item: Item, tid: usize) -> Result<u64> {
    let t = dataset.transaction(tid)?;
    let q = t.quantity(item).ok_or(Error::AbsentItem { item, tid })?;
    Ok(q * dataset.external_utility(item)?)
}

/// `U(X, T_tid)`, or `None` when the itemset is not contained in the transaction.
pub fn itemset_utility_in_transaction(
    dataset: &Dataset,
    itemset: &Itemset,
    tid: usize,
) -> Result<Option<u64>> {
    let t = dataset.transaction(tid)?;
    Ok(utility_in(dataset, t, itemset))
}

pub(crate) fn utility_in(dataset: &Dataset, t: &Transaction, itemset: &Itemset) -> Option<u64> {
    let mut total = 0;
    for &item in itemset.items() {
        let q = t.quantity(item)?;
        total += q * dataset.utilities().get(item)?;
    }
    Some(total)
}

/// `U(X)` over the whole dataset; 0 when X never occurs.
pub fn itemset_utility(dataset: &Dataset, itemset: &Itemset) -> u64 {
    dataset
        .transactions()
        .iter()
        .filter_map(|t| utility_in(dataset, t, itemset))
        .sum()
}

/// Ascending tids of the transactions containing `itemset`.
pub fn occurrences(dataset: &Dataset, itemset: &Itemset) -> Vec<usize> {
    dataset
        .iter()
        .filter(|(_, t)| t.contains_all(itemset))
        .map(|(tid, _)| tid)
        .collect()
}

pub fn period_summary(dataset: &Dataset, itemset: &Itemset) -> PeriodSummary {
    PeriodSummary::from_occurrences(occurrences(dataset, itemset), dataset.len())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::io::{parse_quantity_format, write_quantity_format};

    /// Item ids for the letters a..i of the running example.
    pub fn letter(c: char) -> Item {
        Item(c as u32 - 'a' as u32 + 1)
    }

    pub fn set(letters: &str) -> Itemset {
        Itemset::new(letters.chars().map(letter).collect()).unwrap()
    }

    pub const RUNNING_TRANSACTIONS: &str = "\
1:6 2:5 5:5 7:6 8:9 9:2
3:2 4:2 5:3 6:9 7:3
2:8 3:5 6:3
1:9 2:6 4:5 5:1 6:2 8:7
1:8 4:1 7:4 9:9
1:3 2:1 3:5 4:1 5:6 6:2 7:6 9:2
1:5 7:5 8:5
1:7 2:9 3:6 4:1 6:6 7:5 9:2
3:5 4:7 5:8
1:1 2:2 3:8 8:1 9:9
";

    pub const RUNNING_UTILITIES: &str = "1 8\n2 7\n3 3\n4 7\n5 4\n6 3\n7 2\n8 4\n9 10\n";

    pub fn running_example() -> Dataset {
        parse_quantity_format(RUNNING_TRANSACTIONS, RUNNING_UTILITIES).unwrap()
    }

    #[test]
    fn fixture_round_trips() {
        assert_eq!(
            write_quantity_format(&running_example()),
            RUNNING_TRANSACTIONS
        );
    }
}
