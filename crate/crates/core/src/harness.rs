//! End-to-end runs: mine, select sensitive itemsets, sanitize, re-mine and
//! evaluate, plus parameter sweeps that emit one CSV row per run.
//!
//! `sep` is the fraction of ALL mined PHUIs that is marked sensitive; the
//! count is `max(1, round(sep * |PI|))`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{sanitize_baseline, BaselineVariant};
use crate::error::{Error, Result};
use crate::io::{
    parse_quantity_format, parse_spmf_utility_format, write_dataset, write_utility_table,
    FormatKind,
};
use crate::metrics::{evaluate, MetricsReport};
use crate::miner::mine_phuis;
use crate::model::{Dataset, Item, Itemset, PhuiRecord, Thresholds};
use crate::sanitizer::{sanitize, Algorithm, SanitizeReport, VictimPolicy};

pub const SEP_CONVENTION: &str = "fraction of all mined PHUIs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// Uniform sample without replacement.
    Random,
    /// Prefix of one seeded permutation, so larger `sep` extends smaller ones.
    Incremental,
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SelectionMode::Random),
            "incremental" => Ok(SelectionMode::Incremental),
            other => Err(Error::Config(format!("unknown selection mode {other:?}"))),
        }
    }
}

fn check_sep(sep: f64) -> Result<()> {
    if sep > 0.0 && sep <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("sep must lie in (0, 1], got {sep}")))
    }
}

pub fn select_sensitive(
    phuis: &[PhuiRecord],
    sep: f64,
    seed: u64,
    mode: SelectionMode,
) -> Result<Vec<Itemset>> {
    check_sep(sep)?;
    if phuis.is_empty() {
        return Err(Error::Config("no PHUIs to select from".into()));
    }
    let k = ((sep * phuis.len() as f64).round() as usize).clamp(1, phuis.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<usize> = match mode {
        SelectionMode::Random => rand::seq::index::sample(&mut rng, phuis.len(), k).into_vec(),
        SelectionMode::Incremental => {
            let mut order: Vec<usize> = (0..phuis.len()).collect();
            order.shuffle(&mut rng);
            order.truncate(k);
            order
        }
    };
    Ok(chosen
        .into_iter()
        .map(|i| phuis[i].itemset.clone())
        .collect())
}

/// Everything a run needs besides the dataset itself.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub thresholds: Thresholds,
    pub sep: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub mode: SelectionMode,
    /// Pinned sensitive itemsets; bypasses selection when set.
    pub sensitive: Option<Vec<Itemset>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub mine_ms: f64,
    pub select_ms: f64,
    pub sanitize_ms: f64,
    pub remine_ms: f64,
    pub evaluate_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub original_phuis: Vec<PhuiRecord>,
    pub sensitive: Vec<Itemset>,
    pub sanitized: Dataset,
    pub report: SanitizeReport,
    pub sanitized_phuis: Vec<PhuiRecord>,
    pub metrics: MetricsReport,
    pub timings: Timings,
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

/// Sanitizes with any of the five algorithms.
pub fn hide(
    dataset: Dataset,
    sensitive: &[Itemset],
    thresholds: &Thresholds,
    algorithm: Algorithm,
    original_phuis: &[PhuiRecord],
) -> Result<(Dataset, SanitizeReport)> {
    let baseline = |variant| {
        sanitize_baseline(
            dataset.clone(),
            sensitive,
            thresholds.min_util,
            original_phuis,
            variant,
        )
    };
    match algorithm {
        Algorithm::MuMap => sanitize(dataset, sensitive, thresholds, VictimPolicy::MaxPeriod),
        Algorithm::MuMip => sanitize(dataset, sensitive, thresholds, VictimPolicy::MinPeriod),
        Algorithm::Smau => baseline(BaselineVariant::Smau),
        Algorithm::Smiu => baseline(BaselineVariant::Smiu),
        Algorithm::Smse => baseline(BaselineVariant::Smse),
    }
}

/// Runs the whole pipeline in memory.
pub fn run_on_dataset(dataset: &Dataset, settings: &RunSettings) -> Result<RunOutcome> {
    let t = &settings.thresholds;
    let start = Instant::now();
    let original_phuis = mine_phuis(dataset, t).map_err(|e| e.at_stage("mine"))?;
    let mine_ms = millis(start);

    let start = Instant::now();
    let sensitive = match &settings.sensitive {
        Some(pinned) => {
            if let Some(x) = pinned
                .iter()
                .find(|x| !original_phuis.iter().any(|r| &r.itemset == *x))
            {
                return Err(Error::NotSubset(x.clone()).at_stage("select"));
            }
            pinned.clone()
        }
        None if original_phuis.is_empty() => {
            check_sep(settings.sep).map_err(|e| e.at_stage("select"))?;
            Vec::new()
        }
        None => select_sensitive(&original_phuis, settings.sep, settings.seed, settings.mode)
            .map_err(|e| e.at_stage("select"))?,
    };
    let select_ms = millis(start);

    let start = Instant::now();
    let (sanitized, report) = hide(
        dataset.clone(),
        &sensitive,
        t,
        settings.algorithm,
        &original_phuis,
    )
    .map_err(|e| e.at_stage("sanitize"))?;
    let sanitize_ms = millis(start);

    let start = Instant::now();
    let sanitized_phuis = mine_phuis(&sanitized, t).map_err(|e| e.at_stage("re-mine"))?;
    let remine_ms = millis(start);

    let start = Instant::now();
    let metrics = evaluate(
        dataset,
        &sanitized,
        &original_phuis,
        &sensitive,
        &sanitized_phuis,
    )
    .map_err(|e| e.at_stage("evaluate"))?;
    let evaluate_ms = millis(start);

    if settings.algorithm.is_period_aware() && !metrics.hf_set.is_empty() {
        let listed: Vec<String> = metrics.hf_set.iter().map(|x| x.to_string()).collect();
        return Err(Error::Invariant(format!(
            "sensitive itemsets still minable after {}: {}",
            settings.algorithm,
            listed.join(" ")
        ))
        .at_stage("verify"));
    }

    Ok(RunOutcome {
        original_phuis,
        sensitive,
        sanitized,
        report,
        sanitized_phuis,
        metrics,
        timings: Timings {
            mine_ms,
            select_ms,
            sanitize_ms,
            remine_ms,
            evaluate_ms,
        },
    })
}

/// Where a dataset lives on disk.
#[derive(Debug, Clone)]
pub struct InputSpec {
    pub path: PathBuf,
    pub format: FormatKind,
    /// Utility table; required for the quantity format.
    pub utility_table: Option<PathBuf>,
}

impl InputSpec {
    pub fn load(&self) -> Result<Dataset> {
        let text = fs::read_to_string(&self.path)?;
        match self.format {
            FormatKind::Spmf => parse_spmf_utility_format(&text),
            FormatKind::Quantity => {
                let table_path = self.utility_table.as_ref().ok_or_else(|| {
                    Error::Config("the quantity format needs a utility table".into())
                })?;
                let table = fs::read_to_string(table_path)?;
                parse_quantity_format(&text, &table)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: InputSpec,
    pub settings: RunSettings,
    pub out_dir: PathBuf,
}

/// Paths of everything a run wrote.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub sanitized_dataset: PathBuf,
    pub sanitized_utility_table: Option<PathBuf>,
    pub report_log: PathBuf,
    pub metrics_json: PathBuf,
    pub metrics_csv: PathBuf,
    pub original_phuis: PathBuf,
    pub sanitized_phuis: PathBuf,
    pub sensitive: PathBuf,
    pub run_info: PathBuf,
    /// Wall-clock timings; the only artifact that differs between identical runs.
    pub timings: PathBuf,
    pub outcome: RunOutcome,
}

/// SPMF-style lines: `items #UTIL: u #SUP: s #MINPER: a #MAXPER: b #AVGPER: p/q`.
pub fn format_phuis(records: &[PhuiRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let items: Vec<String> = r.itemset.items().iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            out,
            "{} #UTIL: {} #SUP: {} #MINPER: {} #MAXPER: {} #AVGPER: {}",
            items.join(" "),
            r.utility,
            r.summary.support,
            r.summary.min_per,
            r.summary.max_per,
            r.summary.avg_per
        );
    }
    out
}

/// One itemset per line, items separated by spaces.
pub fn format_itemsets(itemsets: &[Itemset]) -> String {
    let mut out = String::new();
    for x in itemsets {
        let items: Vec<String> = x.items().iter().map(|i| i.to_string()).collect();
        out.push_str(&items.join(" "));
        out.push('\n');
    }
    out
}

/// Reads [`format_itemsets`] output; also accepts [`format_phuis`] lines and
/// skips blank lines and `#` comments.
pub fn parse_itemsets(text: &str) -> Result<Vec<Itemset>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let items = body
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map(Item)
                    .map_err(|_| Error::parse(idx + 1, format!("malformed item {t:?}")))
            })
            .collect::<Result<Vec<Item>>>()?;
        out.push(Itemset::new(items).map_err(|e| Error::parse(idx + 1, e.to_string()))?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct RunInfo<'a> {
    algorithm: Algorithm,
    sep: f64,
    sep_convention: &'static str,
    seed: u64,
    mode: SelectionMode,
    pinned_sensitive: bool,
    min_util: u64,
    min_per: usize,
    max_per: usize,
    min_avg: String,
    max_avg: String,
    transactions: usize,
    input_format: FormatKind,
    input: &'a str,
}

pub fn run_pipeline(config: &RunConfig) -> Result<RunArtifacts> {
    let dataset = config.input.load().map_err(|e| e.at_stage("read"))?;
    let outcome = run_on_dataset(&dataset, &config.settings)?;
    write_artifacts(config, &dataset, outcome).map_err(|e| e.at_stage("write"))
}

fn write_artifacts(
    config: &RunConfig,
    dataset: &Dataset,
    outcome: RunOutcome,
) -> Result<RunArtifacts> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir)?;
    let path = |name: &str| dir.join(name);
    let write = |p: &Path, text: &str| fs::write(p, text);

    let format = config.input.format;
    let sanitized_dataset = path("sanitized.txt");
    write(
        &sanitized_dataset,
        &write_dataset(&outcome.sanitized, format),
    )?;
    let sanitized_utility_table = match format {
        FormatKind::Quantity => {
            let p = path("sanitized_utility.txt");
            write(&p, &write_utility_table(outcome.sanitized.utilities()))?;
            Some(p)
        }
        FormatKind::Spmf => None,
    };

    let report_log = path("report.jsonl");
    write(&report_log, &outcome.report.to_jsonl())?;
    let metrics_json = path("metrics.json");
    write(
        &metrics_json,
        &(serde_json::to_string_pretty(&outcome.metrics)? + "\n"),
    )?;
    let metrics_csv = path("metrics.csv");
    write(&metrics_csv, &outcome.metrics.to_csv())?;
    let original_phuis = path("phuis_original.txt");
    write(&original_phuis, &format_phuis(&outcome.original_phuis))?;
    let sanitized_phuis = path("phuis_sanitized.txt");
    write(&sanitized_phuis, &format_phuis(&outcome.sanitized_phuis))?;
    let sensitive = path("sensitive.txt");
    write(&sensitive, &format_itemsets(&outcome.sensitive))?;

    let s = &config.settings;
    let t = &s.thresholds;
    let info = RunInfo {
        algorithm: s.algorithm,
        sep: s.sep,
        sep_convention: SEP_CONVENTION,
        seed: s.seed,
        mode: s.mode,
        pinned_sensitive: s.sensitive.is_some(),
        min_util: t.min_util,
        min_per: t.min_per,
        max_per: t.max_per,
        min_avg: t.min_avg.to_string(),
        max_avg: t.max_avg.to_string(),
        transactions: dataset.len(),
        input_format: format,
        input: &config.input.path.to_string_lossy(),
    };
    let run_info = path("run.json");
    write(&run_info, &(serde_json::to_string_pretty(&info)? + "\n"))?;
    let timings = path("timings.json");
    write(
        &timings,
        &(serde_json::to_string_pretty(&outcome.timings)? + "\n"),
    )?;

    Ok(RunArtifacts {
        sanitized_dataset,
        sanitized_utility_table,
        report_log,
        metrics_json,
        metrics_csv,
        original_phuis,
        sanitized_phuis,
        sensitive,
        run_info,
        timings,
        outcome,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Sep,
    Minutil,
    MaxPer,
    PrefixSize,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Sep => "sep",
            SweepAxis::Minutil => "minutil",
            SweepAxis::MaxPer => "maxper",
            SweepAxis::PrefixSize => "prefix",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sep" => Ok(SweepAxis::Sep),
            "minutil" => Ok(SweepAxis::Minutil),
            "maxper" => Ok(SweepAxis::MaxPer),
            "prefix" => Ok(SweepAxis::PrefixSize),
            other => Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        }
    }
}

pub const SWEEP_HEADER: &str = "axis,value,algorithm,status,transactions,pi_count,spi_count,\
edits,sanitize_ms,hf_pct,mc_pct,ac_pct,ius,dus,dss,error";

fn csv_escape(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\"").replace('\n', " "))
    } else {
        text.to_string()
    }
}

fn apply_axis(
    dataset: &Dataset,
    template: &RunSettings,
    axis: SweepAxis,
    value: f64,
) -> Result<(Dataset, RunSettings)> {
    let mut settings = template.clone();
    let whole = |v: f64| -> Result<u64> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as u64)
        } else {
            Err(Error::Config(format!(
                "{} needs a whole number, got {v}",
                axis.as_str()
            )))
        }
    };
    let db = match axis {
        SweepAxis::Sep => {
            settings.sep = value;
            dataset.clone()
        }
        SweepAxis::Minutil => {
            settings.thresholds.min_util = whole(value)?;
            dataset.clone()
        }
        SweepAxis::MaxPer => {
            settings.thresholds.max_per = whole(value)? as usize;
            settings.thresholds.validate()?;
            dataset.clone()
        }
        SweepAxis::PrefixSize => dataset.truncated(whole(value)? as usize)?,
    };
    Ok((db, settings))
}

/// Runs every `(value, algorithm)` pair and returns the CSV. Failed runs
/// become rows with `status = error`; the sweep carries on.
pub fn sweep(
    dataset: &Dataset,
    template: &RunSettings,
    axis: SweepAxis,
    values: &[f64],
    algorithms: &[Algorithm],
) -> Result<String> {
    if values.is_empty() || algorithms.is_empty() {
        return Err(Error::Config("a sweep needs values and algorithms".into()));
    }
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for &value in values {
        for &algorithm in algorithms {
            let mut template = template.clone();
            template.algorithm = algorithm;
            let result = apply_axis(dataset, &template, axis, value)
                .and_then(|(db, settings)| run_on_dataset(&db, &settings).map(|o| (db.len(), o)));
            let _ = match result {
                Ok((len, o)) => writeln!(
                    out,
                    "{},{},{},ok,{},{},{},{},{:.3},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},",
                    axis.as_str(),
                    value,
                    algorithm,
                    len,
                    o.original_phuis.len(),
                    o.sensitive.len(),
                    o.report.steps.len(),
                    o.timings.sanitize_ms,
                    o.metrics.hf_pct,
                    o.metrics.mc_pct,
                    o.metrics.ac_pct,
                    o.metrics.ius,
                    o.metrics.dus,
                    o.metrics.dss
                ),
                Err(e) => writeln!(
                    out,
                    "{},{},{},error,,,,,,,,,,,,{}",
                    axis.as_str(),
                    value,
                    algorithm,
                    csv_escape(&e.to_string())
                ),
            };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::mine_phuis;
    use crate::model::fixtures::*;
    use crate::model::Rational;

    fn example_thresholds() -> Thresholds {
        Thresholds::new(
            260,
            1,
            6,
            Rational::from_integer(1),
            Rational::from_integer(2),
        )
        .unwrap()
    }

    fn settings(algorithm: Algorithm) -> RunSettings {
        RunSettings {
            thresholds: example_thresholds(),
            sep: 0.375,
            seed: 1,
            algorithm,
            mode: SelectionMode::Random,
            sensitive: None,
        }
    }

    #[test]
    fn selection_sizes_and_determinism() {
        let phuis = mine_phuis(&running_example(), &example_thresholds()).unwrap();
        let a = select_sensitive(&phuis, 0.375, 1, SelectionMode::Random).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(
            a,
            select_sensitive(&phuis, 0.375, 1, SelectionMode::Random).unwrap()
        );
        let mut distinct = a.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 3);

        let mut all = select_sensitive(&phuis, 1.0, 99, SelectionMode::Random).unwrap();
        all.sort();
        let mut expected: Vec<Itemset> = phuis.iter().map(|r| r.itemset.clone()).collect();
        expected.sort();
        assert_eq!(all, expected);

        assert_eq!(
            select_sensitive(&phuis, 0.01, 5, SelectionMode::Random)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn incremental_selection_is_prefix_stable() {
        let phuis = mine_phuis(&running_example(), &example_thresholds()).unwrap();
        let small = select_sensitive(&phuis, 0.25, 11, SelectionMode::Incremental).unwrap();
        let large = select_sensitive(&phuis, 0.5, 11, SelectionMode::Incremental).unwrap();
        assert_eq!(small.len(), 2);
        assert_eq!(large.len(), 4);
        assert_eq!(&large[..2], &small[..]);
    }

    #[test]
    fn selection_errors() {
        let phuis = mine_phuis(&running_example(), &example_thresholds()).unwrap();
        assert!(select_sensitive(&phuis, 0.0, 1, SelectionMode::Random).is_err());
        assert!(select_sensitive(&phuis, 1.5, 1, SelectionMode::Random).is_err());
        assert!(select_sensitive(&[], 0.5, 1, SelectionMode::Random).is_err());
    }

    #[test]
    fn pinned_run_reproduces_the_worked_example() {
        let mut s = settings(Algorithm::MuMap);
        s.sensitive = Some(vec![set("abi"), set("ai"), set("bi")]);
        let o = run_on_dataset(&running_example(), &s).unwrap();
        assert_eq!(o.report.steps.len(), 2);
        assert!(o.metrics.hf_set.is_empty());
        assert!(o.metrics.ac_set.is_empty());
        let remaining: Vec<&Itemset> = o.sanitized_phuis.iter().map(|r| &r.itemset).collect();
        for x in &remaining {
            assert!(!["abi", "ai", "bi"].iter().any(|s| &set(s) == *x));
        }
    }

    #[test]
    fn pinned_itemsets_must_be_phuis() {
        let mut s = settings(Algorithm::MuMap);
        s.sensitive = Some(vec![set("ceh")]);
        let err = run_on_dataset(&running_example(), &s).unwrap_err();
        assert!(matches!(err.root(), Error::NotSubset(_)));
    }

    #[test]
    fn no_phuis_gives_a_degenerate_run() {
        let mut s = settings(Algorithm::MuMip);
        s.thresholds.min_util = 1_000_000;
        let o = run_on_dataset(&running_example(), &s).unwrap();
        assert!(o.sensitive.is_empty());
        assert_eq!(
            (o.metrics.ius, o.metrics.dus, o.metrics.dss),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn itemset_text_round_trip() {
        let sets = vec![set("abi"), set("c")];
        assert_eq!(parse_itemsets(&format_itemsets(&sets)).unwrap(), sets);
        let phuis = mine_phuis(&running_example(), &example_thresholds()).unwrap();
        let parsed = parse_itemsets(&format_phuis(&phuis)).unwrap();
        assert_eq!(parsed.len(), 8);
        assert!(parse_itemsets("1 x\n").is_err());
        assert!(parse_itemsets("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn phui_lines_are_exact() {
        let phuis = mine_phuis(&running_example(), &example_thresholds()).unwrap();
        let text = format_phuis(&phuis);
        assert!(text.contains("1 9 #UTIL: 440 #SUP: 5 #MINPER: 1 #MAXPER: 4 #AVGPER: 5/3\n"));
    }

    #[test]
    fn sweep_shape_and_error_rows() {
        let db = running_example();
        let csv = sweep(
            &db,
            &settings(Algorithm::MuMap),
            SweepAxis::Sep,
            &[0.01, 0.02, 0.03, 0.04, 0.05, 0.06],
            &Algorithm::ALL,
        )
        .unwrap();
        assert_eq!(csv.lines().count(), 1 + 6 * 5);
        assert!(csv.lines().skip(1).all(|l| l.contains(",ok,")));

        let csv = sweep(
            &db,
            &settings(Algorithm::MuMap),
            SweepAxis::MaxPer,
            &[0.5, 3.0],
            &[Algorithm::MuMap],
        )
        .unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert!(rows[0].contains(",error,"));
        assert!(rows[1].contains(",ok,"));
        assert!(sweep(
            &db,
            &settings(Algorithm::MuMap),
            SweepAxis::Sep,
            &[],
            &Algorithm::ALL
        )
        .is_err());
    }

    #[test]
    fn prefix_sweep_truncates() {
        let db = running_example();
        let csv = sweep(
            &db,
            &settings(Algorithm::MuMap),
            SweepAxis::PrefixSize,
            &[5.0, 10.0],
            &[Algorithm::MuMap],
        )
        .unwrap();
        let rows: Vec<Vec<&str>> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').collect())
            .collect();
        assert_eq!(rows[0][4], "5");
        assert_eq!(rows[1][4], "10");
    }
}
