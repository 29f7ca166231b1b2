//! Shared inputs for the criterion benches.

use phuiguard::synthetic::{generate_synthetic, SyntheticParams};
use phuiguard::{Dataset, Rational, Thresholds};

/// Sparse retail-like database with a skewed item popularity.
pub fn retail_like(transactions: usize, seed: u64) -> Dataset {
    let mut params = SyntheticParams::new(seed, transactions, 60, 4, 10, 10, 0.5);
    params.skew = 1.0;
    generate_synthetic(&params).expect("valid generator parameters")
}

/// Thresholds scaled to the database size, mirroring the loose period
/// settings used for real retail data.
pub fn thresholds_for(db: &Dataset) -> Thresholds {
    let len = db.len();
    let min_util = db.total_utility() / 50;
    Thresholds::new(
        min_util,
        1,
        len / 4,
        Rational::from_integer(1),
        Rational::new(len as i64, 8),
    )
    .expect("valid thresholds")
}
