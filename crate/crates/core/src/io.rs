//! Text formats for transaction-utility databases.
//!
//! * `quantity`: one transaction per line as space-separated `item:qty`
//!   pairs, plus a separate utility table with `item utility` lines. A blank
//!   line is an empty transaction.
//! * `spmf`: the SPMF utility layout `i1 i2 .. ik:TU:u1 u2 .. uk`. Each
//!   utility is loaded as a quantity with external utility 1. An emptied
//!   transaction is written as `:0:`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Item, Transaction, UtilityTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatKind {
    Quantity,
    Spmf,
}

impl FromStr for FormatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantity" => Ok(FormatKind::Quantity),
            "spmf" => Ok(FormatKind::Spmf),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Splits on LF; a trailing newline does not open another line.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let empty = text.is_empty();
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(move |_| !empty)
}

fn parse_num<T: FromStr>(token: &str, line: usize, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("malformed {what} {token:?}")))
}

pub fn parse_utility_table(text: &str) -> Result<UtilityTable> {
    let mut table = UtilityTable::new();
    for (line, raw) in lines(text) {
        let mut tokens = raw.split_whitespace();
        let Some(item) = tokens.next() else { continue };
        let utility = tokens
            .next()
            .ok_or_else(|| Error::parse(line, "expected `item utility`"))?;
        if tokens.next().is_some() {
            return Err(Error::parse(line, "trailing tokens after `item utility`"));
        }
        let item = Item(parse_num(item, line, "item")?);
        let utility: u64 = parse_num(utility, line, "utility")?;
        table
            .insert(item, utility)
            .map_err(|e| Error::parse(line, e.to_string()))?;
    }
    Ok(table)
}

pub fn parse_quantity_format(transactions: &str, utility_table: &str) -> Result<Dataset> {
    let table = parse_utility_table(utility_table)?;
    let mut parsed = Vec::new();
    for (line, raw) in lines(transactions) {
        let mut entries = Vec::new();
        for token in raw.split_whitespace() {
            let (item, qty) = token
                .split_once(':')
                .ok_or_else(|| Error::parse(line, format!("expected `item:qty`, got {token:?}")))?;
            let item = Item(parse_num(item, line, "item")?);
            let qty: u64 = parse_num(qty, line, "quantity")?;
            if qty == 0 {
                return Err(Error::parse(line, format!("item {item} has quantity 0")));
            }
            if table.get(item).is_none() {
                return Err(Error::parse(
                    line,
                    format!("item {item} is missing from the utility table"),
                ));
            }
            entries.push((item, qty));
        }
        parsed.push(Transaction::new(entries).map_err(|e| Error::parse(line, e.to_string()))?);
    }
    if parsed.is_empty() {
        return Err(Error::parse(0, "no transactions"));
    }
    Dataset::new(parsed, table)
}

pub fn parse_spmf_utility_format(text: &str) -> Result<Dataset> {
    let mut parsed = Vec::new();
    let mut table = UtilityTable::new();
    for (line, raw) in lines(text) {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with(['#', '%', '@']) {
            continue;
        }
        let mut fields = trimmed.split(':');
        let (Some(items), Some(tu), Some(utils), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(line, "expected `items:TU:utilities`"));
        };
        let items: Vec<u32> = items
            .split_whitespace()
            .map(|t| parse_num(t, line, "item"))
            .collect::<Result<_>>()?;
        let utils: Vec<u64> = utils
            .split_whitespace()
            .map(|t| parse_num(t, line, "utility"))
            .collect::<Result<_>>()?;
        let declared: u64 = parse_num(tu.trim(), line, "transaction utility")?;
        if items.len() != utils.len() {
            return Err(Error::parse(
                line,
                format!("{} items but {} utilities", items.len(), utils.len()),
            ));
        }
        let sum: u64 = utils.iter().sum();
        if sum != declared {
            return Err(Error::parse(
                line,
                format!("declared TU {declared} but utilities sum to {sum}"),
            ));
        }
        let mut entries = Vec::with_capacity(items.len());
        for (&id, &u) in items.iter().zip(&utils) {
            if u == 0 {
                return Err(Error::parse(line, format!("item {id} has utility 0")));
            }
            entries.push((Item(id), u));
        }
        let t = Transaction::new(entries).map_err(|e| Error::parse(line, e.to_string()))?;
        for item in t.items() {
            if table.get(item).is_none() {
                table.insert(item, 1)?;
            }
        }
        parsed.push(t);
    }
    if parsed.is_empty() {
        return Err(Error::parse(0, "no transactions"));
    }
    Dataset::new(parsed, table)
}

/// Renders the transaction lines of the quantity format.
pub fn write_quantity_format(dataset: &Dataset) -> String {
    let mut out = String::new();
    for t in dataset.transactions() {
        for (idx, (item, qty)) in t.entries().iter().enumerate() {
            if idx > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{item}:{qty}");
        }
        out.push('\n');
    }
    out
}

pub fn write_utility_table(table: &UtilityTable) -> String {
    let mut out = String::new();
    for (item, u) in table.iter() {
        let _ = writeln!(out, "{item} {u}");
    }
    out
}

/// Renders the SPMF utility layout, with utilities computed as `qty × eu`.
pub fn write_spmf_format(dataset: &Dataset) -> String {
    let mut out = String::new();
    for t in dataset.transactions() {
        let utils: Vec<u64> = t
            .entries()
            .iter()
            .map(|&(item, q)| q * dataset.utilities().get(item).unwrap_or(0))
            .collect();
        let items: Vec<String> = t.items().map(|i| i.to_string()).collect();
        let utils_text: Vec<String> = utils.iter().map(u64::to_string).collect();
        let _ = writeln!(
            out,
            "{}:{}:{}",
            items.join(" "),
            utils.iter().sum::<u64>(),
            utils_text.join(" ")
        );
    }
    out
}

/// Transaction text in the given format. The quantity format's utility
/// table is written separately with [`write_utility_table`].
pub fn write_dataset(dataset: &Dataset, kind: FormatKind) -> String {
    match kind {
        FormatKind::Quantity => write_quantity_format(dataset),
        FormatKind::Spmf => write_spmf_format(dataset),
    }
}
