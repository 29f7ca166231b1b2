//! Side effects of sanitization and similarity between the original and
//! sanitized databases.
//!
//! Percentages use these denominators, which every report records:
//! HF over `|SPI|`, MC over `|PI - SPI|`, AC over `|PI|`. An empty
//! denominator yields 0.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Item, Itemset, PhuiRecord};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideEffects {
    pub hiding_failure: Vec<Itemset>,
    pub missing_cost: Vec<Itemset>,
    pub artificial_cost: Vec<Itemset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentages {
    pub hf_pct: f64,
    pub mc_pct: f64,
    pub ac_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Denominators {
    pub sensitive: usize,
    pub non_sensitive: usize,
    pub original: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hf_set: Vec<Itemset>,
    pub mc_set: Vec<Itemset>,
    pub ac_set: Vec<Itemset>,
    pub hf_pct: f64,
    pub mc_pct: f64,
    pub ac_pct: f64,
    pub ius: f64,
    pub dus: f64,
    pub dss: f64,
    pub denominators: Denominators,
}

pub const CSV_HEADER: &str =
    "hf_pct,mc_pct,ac_pct,ius,dus,dss,spi_count,non_sensitive_count,pi_count";

impl MetricsReport {
    /// Values in [`CSV_HEADER`] order.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            self.hf_pct,
            self.mc_pct,
            self.ac_pct,
            self.ius,
            self.dus,
            self.dss,
            self.denominators.sensitive,
            self.denominators.non_sensitive,
            self.denominators.original
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}\n", self.csv_row())
    }
}

/// HF, MC and AC as sets, compared by itemset identity.
pub fn side_effect_sets(
    original: &[PhuiRecord],
    sensitive: &[Itemset],
    sanitized: &[PhuiRecord],
) -> Result<SideEffects> {
    let pi: BTreeSet<&Itemset> = original.iter().map(|r| &r.itemset).collect();
    let spi: BTreeSet<&Itemset> = sensitive.iter().collect();
    let pi_after: BTreeSet<&Itemset> = sanitized.iter().map(|r| &r.itemset).collect();
    if let Some(x) = spi.iter().find(|x| !pi.contains(*x)) {
        return Err(Error::NotSubset((*x).clone()));
    }
    Ok(SideEffects {
        hiding_failure: spi.intersection(&pi_after).map(|x| (*x).clone()).collect(),
        missing_cost: pi
            .iter()
            .filter(|x| !spi.contains(*x) && !pi_after.contains(*x))
            .map(|x| (*x).clone())
            .collect(),
        artificial_cost: pi_after.difference(&pi).map(|x| (*x).clone()).collect(),
    })
}

fn pct(count: usize, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        count as f64 / of as f64 * 100.0
    }
}

pub fn side_effect_percentages(
    sets: &SideEffects,
    original: &[PhuiRecord],
    sensitive: &[Itemset],
) -> (Percentages, Denominators) {
    let spi: BTreeSet<&Itemset> = sensitive.iter().collect();
    let denominators = Denominators {
        sensitive: spi.len(),
        non_sensitive: original
            .iter()
            .filter(|r| !spi.contains(&r.itemset))
            .count(),
        original: original.len(),
    };
    let p = Percentages {
        hf_pct: pct(sets.hiding_failure.len(), denominators.sensitive),
        mc_pct: pct(sets.missing_cost.len(), denominators.non_sensitive),
        ac_pct: pct(sets.artificial_cost.len(), denominators.original),
    };
    (p, denominators)
}

/// Itemset utility similarity: summed PHUI utility after over before.
pub fn ius(original: &[PhuiRecord], sanitized: &[PhuiRecord]) -> Result<f64> {
    let before: u64 = original.iter().map(|r| r.utility).sum();
    if before == 0 {
        return Err(Error::UndefinedMetric("IUS"));
    }
    let after: u64 = sanitized.iter().map(|r| r.utility).sum();
    Ok(after as f64 / before as f64)
}

/// Database utility similarity: total utility after over before.
pub fn dus(original: &Dataset, sanitized: &Dataset) -> Result<f64> {
    let before = original.total_utility();
    if before == 0 {
        return Err(Error::UndefinedMetric("DUS"));
    }
    Ok(sanitized.total_utility() as f64 / before as f64)
}

/// DUS computed from the utility an edit log removed.
pub fn dus_from_removed(original: &Dataset, removed: u64) -> Result<f64> {
    let before = original.total_utility();
    if before == 0 {
        return Err(Error::UndefinedMetric("DUS"));
    }
    Ok((before - removed) as f64 / before as f64)
}

fn signatures(db: &Dataset) -> Vec<Vec<Item>> {
    db.transactions()
        .iter()
        .map(|t| t.items().collect())
        .collect()
}

fn frequencies(sigs: &[Vec<Item>]) -> Vec<u64> {
    let mut counts: HashMap<&[Item], u64> = HashMap::new();
    for s in sigs {
        *counts.entry(s.as_slice()).or_default() += 1;
    }
    sigs.iter().map(|s| counts[s.as_slice()]).collect()
}

/// Database structure similarity over item-presence signatures.
///
/// Slot `k` contributes `f_D(k) * f_D'(k)` to the numerator only when the two
/// slots carry the same signature, where `f_X(k)` counts the transactions of
/// `X` sharing slot `k`'s signature. Quantities are ignored.
pub fn dss(original: &Dataset, sanitized: &Dataset) -> Result<f64> {
    if original.len() != sanitized.len() {
        return Err(Error::InvalidDataset(format!(
            "DSS needs equal sizes, got {} and {}",
            original.len(),
            sanitized.len()
        )));
    }
    let all_empty = |db: &Dataset| db.transactions().iter().all(|t| t.is_empty());
    if all_empty(original) && all_empty(sanitized) {
        return Err(Error::UndefinedMetric("DSS"));
    }
    let (a, b) = (signatures(original), signatures(sanitized));
    let (fa, fb) = (frequencies(&a), frequencies(&b));
    let dot: u128 = (0..a.len())
        .filter(|&k| a[k] == b[k])
        .map(|k| u128::from(fa[k] * fb[k]))
        .sum();
    let squared = |f: &[u64]| {
        f.iter()
            .map(|&x| u128::from(x) * u128::from(x))
            .sum::<u128>()
    };
    let denom = squared(&fa) * squared(&fb);
    if dot * dot == denom {
        return Ok(1.0);
    }
    Ok(dot as f64 / (denom as f64).sqrt())
}

/// Everything at once; IUS falls back to 1 when neither side has PHUIs.
pub fn evaluate(
    original_db: &Dataset,
    sanitized_db: &Dataset,
    original: &[PhuiRecord],
    sensitive: &[Itemset],
    sanitized: &[PhuiRecord],
) -> Result<MetricsReport> {
    let sets = side_effect_sets(original, sensitive, sanitized)?;
    let (p, denominators) = side_effect_percentages(&sets, original, sensitive);
    let ius = match ius(original, sanitized) {
        Err(Error::UndefinedMetric(_)) if sanitized.is_empty() => 1.0,
        other => other?,
    };
    Ok(MetricsReport {
        hf_set: sets.hiding_failure,
        mc_set: sets.missing_cost,
        ac_set: sets.artificial_cost,
        hf_pct: p.hf_pct,
        mc_pct: p.mc_pct,
        ac_pct: p.ac_pct,
        ius,
        dus: dus(original_db, sanitized_db)?,
        dss: dss(original_db, sanitized_db)?,
        denominators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_quantity_format;
    use crate::model::{PeriodSummary, Rational};

    fn record(ids: &[u32], utility: u64) -> PhuiRecord {
        PhuiRecord {
            itemset: Itemset::from_ids(ids).unwrap(),
            utility,
            summary: PeriodSummary {
                occurrences: vec![1],
                periods: vec![1, 0],
                min_per: 1,
                max_per: 1,
                avg_per: Rational::new(1, 2),
                support: 1,
            },
        }
    }

    fn ids(ids: &[u32]) -> Itemset {
        Itemset::from_ids(ids).unwrap()
    }

    #[test]
    fn set_algebra() {
        let pi = [record(&[1], 10), record(&[2], 10), record(&[1, 2], 10)];
        let same = side_effect_sets(&pi, &[], &pi).unwrap();
        assert_eq!(same, SideEffects::default());

        let effects =
            side_effect_sets(&[record(&[1], 5)], &[ids(&[1])], &[record(&[2], 5)]).unwrap();
        assert!(effects.hiding_failure.is_empty());
        assert!(effects.missing_cost.is_empty());
        assert_eq!(effects.artificial_cost, [ids(&[2])]);

        let after = [record(&[1], 10)];
        let effects = side_effect_sets(&pi, &[ids(&[1])], &after).unwrap();
        assert_eq!(effects.hiding_failure, [ids(&[1])]);
        assert_eq!(effects.missing_cost, [ids(&[1, 2]), ids(&[2])]);

        assert!(matches!(
            side_effect_sets(&pi, &[ids(&[3])], &pi),
            Err(Error::NotSubset(_))
        ));
    }

    #[test]
    fn percentages_and_denominators() {
        let pi: Vec<PhuiRecord> = (1..=172).map(|i| record(&[i], 1)).collect();
        let sets = SideEffects {
            artificial_cost: vec![ids(&[500])],
            ..Default::default()
        };
        let (p, d) = side_effect_percentages(&sets, &pi, &[ids(&[1])]);
        assert_eq!((p.ac_pct * 100.0).round() / 100.0, 0.58);
        assert_eq!(p.hf_pct, 0.0);
        assert_eq!(
            d,
            Denominators {
                sensitive: 1,
                non_sensitive: 171,
                original: 172
            }
        );

        let pi: Vec<PhuiRecord> = (1..=6).map(|i| record(&[i], 1)).collect();
        let sets = SideEffects {
            missing_cost: vec![ids(&[3]), ids(&[4])],
            ..Default::default()
        };
        let (p, _) = side_effect_percentages(&sets, &pi, &[ids(&[1]), ids(&[2])]);
        assert_eq!(p.mc_pct, 50.0);

        let (p, _) = side_effect_percentages(&SideEffects::default(), &[], &[]);
        assert_eq!((p.hf_pct, p.mc_pct, p.ac_pct), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ius_ratios() {
        let pi = [record(&[1], 300)];
        assert_eq!(ius(&pi, &pi).unwrap(), 1.0);
        assert!((ius(&pi, &[record(&[1], 200)]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(ius(&pi, &[record(&[1], 300), record(&[2], 10)]).unwrap() > 1.0);
        assert!(matches!(ius(&[], &pi), Err(Error::UndefinedMetric("IUS"))));
    }

    #[test]
    fn dus_ratios() {
        let db = parse_quantity_format("1:2\n2:1\n", "1 3\n2 4\n").unwrap();
        assert_eq!(dus(&db, &db).unwrap(), 1.0);
        let cut = parse_quantity_format("1:1\n2:1\n", "1 3\n2 4\n").unwrap();
        assert_eq!(dus(&db, &cut).unwrap(), 0.7);
        assert_eq!(dus_from_removed(&db, 3).unwrap(), 0.7);
        let zero = parse_quantity_format("\n", "").unwrap();
        assert!(dus(&zero, &zero).is_err());
    }

    #[test]
    fn dss_two_transaction_cases() {
        let table = "1 1\n2 1\n";
        let db = parse_quantity_format("1:1 2:1\n1:1 2:1\n", table).unwrap();
        assert_eq!(dss(&db, &db).unwrap(), 1.0);

        // f = (2,2) vs (1,1); only slot 1 keeps its signature: 2 / (sqrt 8 * sqrt 2)
        let lost = parse_quantity_format("1:1 2:1\n1:1\n", table).unwrap();
        assert!((dss(&db, &lost).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(dss(&db, &lost).unwrap(), dss(&lost, &db).unwrap());

        // f = (1,1) vs (1,1) with every slot mismatched
        let a = parse_quantity_format("1:1\n2:1\n", table).unwrap();
        let b = parse_quantity_format("2:1\n1:1\n", table).unwrap();
        assert_eq!(dss(&a, &b).unwrap(), 0.0);

        let fewer = parse_quantity_format("1:5 2:9\n1:1 2:3\n", table).unwrap();
        assert_eq!(dss(&db, &fewer).unwrap(), 1.0);
    }

    #[test]
    fn dss_errors() {
        let table = "1 1\n";
        let one = parse_quantity_format("1:1\n", table).unwrap();
        let two = parse_quantity_format("1:1\n1:1\n", table).unwrap();
        assert!(matches!(dss(&one, &two), Err(Error::InvalidDataset(_))));
        let empty = parse_quantity_format("\n\n", "").unwrap();
        assert!(matches!(
            dss(&empty, &empty),
            Err(Error::UndefinedMetric("DSS"))
        ));
    }

    #[test]
    fn csv_has_fixed_columns() {
        let db = parse_quantity_format("1:1\n", "1 1\n").unwrap();
        let pi = [record(&[1], 1)];
        let report = evaluate(&db, &db, &pi, &[], &pi).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "0.000000,0.000000,0.000000,1.000000,1.000000,1.000000,0,1,1"
        );
    }
}
