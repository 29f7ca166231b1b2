#![allow(dead_code)]

use phuiguard::io::parse_quantity_format;
use phuiguard::miner::mine_phuis;
use phuiguard::model::UtilityTable;
use phuiguard::synthetic::{generate_synthetic, SyntheticParams};
use phuiguard::{Dataset, Item, Itemset, PhuiRecord, Rational, Thresholds, Transaction};
use rand::Rng;

pub const RUNNING_TRANSACTIONS: &str =
    include_str!("../../../../data/running_example/transactions.txt");
pub const RUNNING_UTILITIES: &str = include_str!("../../../../data/running_example/utility.txt");

pub fn running_example() -> Dataset {
    parse_quantity_format(RUNNING_TRANSACTIONS, RUNNING_UTILITIES).unwrap()
}

pub fn example_thresholds() -> Thresholds {
    Thresholds::new(
        260,
        1,
        6,
        Rational::from_integer(1),
        Rational::from_integer(2),
    )
    .unwrap()
}

/// Letters a..i map to items 1..9.
pub fn set(letters: &str) -> Itemset {
    Itemset::new(
        letters
            .chars()
            .map(|c| Item(c as u32 - 'a' as u32 + 1))
            .collect(),
    )
    .unwrap()
}

/// Dataset with up to `max_items` items and between 1 and `max_tx` transactions.
pub fn random_dataset(rng: &mut impl Rng, max_items: u32, max_tx: usize) -> Dataset {
    let items = rng.gen_range(1..=max_items);
    let len = rng.gen_range(1..=max_tx);
    let density = rng.gen_range(0.2..0.8);
    let mut table = UtilityTable::new();
    for id in 1..=items {
        table.insert(Item(id), rng.gen_range(1..=9)).unwrap();
    }
    let transactions = (0..len)
        .map(|_| {
            let mut entries = Vec::new();
            for id in 1..=items {
                if rng.gen_bool(density) {
                    entries.push((Item(id), rng.gen_range(1..=6)));
                }
            }
            Transaction::new(entries).unwrap()
        })
        .collect();
    Dataset::new(transactions, table).unwrap()
}

/// Thresholds spread so that some instances have PHUIs and some do not.
pub fn random_thresholds(rng: &mut impl Rng, db: &Dataset) -> Thresholds {
    let n = db.len();
    let total = db.total_utility().max(1);
    let min_util = rng.gen_range(1..=total / 3 + 1);
    let max_per = rng.gen_range(1..=n);
    let min_per = rng.gen_range(0..=max_per.min(3));
    let max_avg = Rational::new(rng.gen_range(1..=2 * n as i64), 2);
    let min_avg = if rng.gen_bool(0.5) {
        Rational::from_integer(0)
    } else {
        Rational::new(rng.gen_range(0..=*max_avg.numer()), *max_avg.denom())
    };
    Thresholds::new(min_util, min_per, max_per, min_avg, max_avg).unwrap()
}

/// Sparse synthetic data and paper-style thresholds (minPer = minAvg = 1)
/// with at least one PHUI. `None` if the instance has no periodic itemsets.
pub fn pipeline_instance(seed: u64) -> Option<(Dataset, Thresholds)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(30..=90);
    let mut params = SyntheticParams::new(
        seed,
        n,
        rng.gen_range(8..=16),
        rng.gen_range(2..=4),
        rng.gen_range(3..=10),
        rng.gen_range(3..=12),
        rng.gen_range(0.3..0.9),
    );
    params.skew = rng.gen_range(0.0..1.2);
    params.stride = rng.gen_range(2..=4);
    let db = generate_synthetic(&params).unwrap();

    let max_per = rng.gen_range(n / 4..=n / 2);
    let max_avg = Rational::new(n as i64, rng.gen_range(3..=8));
    let loose = Thresholds::new(1, 1, max_per, Rational::from_integer(1), max_avg).unwrap();
    let mut utilities: Vec<u64> = mine_phuis(&db, &loose)
        .unwrap()
        .iter()
        .map(|r| r.utility)
        .collect();
    if utilities.is_empty() {
        return None;
    }
    utilities.sort_unstable_by(|a, b| b.cmp(a));
    let rank = rng.gen_range(2..=25).min(utilities.len());
    let t = Thresholds {
        min_util: utilities[rank - 1],
        ..loose
    };
    Some((db, t))
}

pub fn itemsets(records: &[PhuiRecord]) -> Vec<Itemset> {
    records.iter().map(|r| r.itemset.clone()).collect()
}

/// Every non-empty subset of the item universe.
pub fn all_itemsets(db: &Dataset) -> Vec<Itemset> {
    let universe = db.item_universe();
    (1u32..(1 << universe.len()))
        .map(|mask| {
            let items = universe
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &i)| i)
                .collect();
            Itemset::new(items).unwrap()
        })
        .collect()
}

/// Tiny dense instance at minPer = minAvg = 1 with a non-empty PI; these can
/// contain itemsets present in every transaction.
pub fn dense_instance(seed: u64) -> Option<(Dataset, Thresholds, f64)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let db = random_dataset(&mut rng, 6, 12);
    let n = db.len();
    let max_per = rng.gen_range(1..=n);
    let max_avg = Rational::new(rng.gen_range(2..=2 * n as i64), 2);
    let loose = Thresholds::new(1, 1, max_per, Rational::from_integer(1), max_avg).unwrap();
    let mut utilities: Vec<u64> = mine_phuis(&db, &loose)
        .unwrap()
        .iter()
        .map(|r| r.utility)
        .collect();
    if utilities.is_empty() {
        return None;
    }
    utilities.sort_unstable_by(|a, b| b.cmp(a));
    let t = Thresholds {
        min_util: utilities[rng.gen_range(0..utilities.len())],
        ..loose
    };
    Some((db, t, rng.gen_range(0.05..=1.0)))
}
