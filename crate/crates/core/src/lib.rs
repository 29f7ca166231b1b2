//! Periodic high-utility itemset mining and privacy-preserving sanitization.
//!
//! The pipeline is: mine the periodic high-utility itemsets (PHUIs) of a
//! quantitative transaction database, pick the sensitive ones, then edit the
//! database (item deletions and quantity reductions) until none of the
//! sensitive itemsets can be mined again. Side effects on the remaining
//! patterns are measured by [`metrics`].
//!
//! ```
//! use phuiguard::io::parse_quantity_format;
//! use phuiguard::miner::mine_phuis;
//! use phuiguard::model::{Rational, Thresholds};
//!
//! let db = parse_quantity_format("1:2 2:1\n1:1\n2:3\n", "1 5\n2 2\n").unwrap();
//! let t = Thresholds::new(13, 1, 3, Rational::from_integer(0), Rational::from_integer(3)).unwrap();
//! let phuis = mine_phuis(&db, &t).unwrap();
//! assert_eq!(phuis.len(), 1);
//! assert_eq!(phuis[0].utility, 15);
//! ```

pub mod baselines;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod miner;
pub mod model;
pub mod sanitizer;
pub mod synthetic;

pub use error::{Error, Result};
pub use model::{
    Dataset, Item, Itemset, PeriodSummary, PhuiRecord, Rational, Thresholds, Transaction,
    UtilityTable,
};
