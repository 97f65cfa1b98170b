//! Curve files and intraday price records.
//!
//! Curves are stored wide, one row per day under the header
//! `day,t_1,...,t_T`. Prices are stored long as `day,slot,price` with slots
//! `0..=P`; slot 0 is the opening reference price, so a complete day yields
//! `P` log returns.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{Curve, Grid};

/// Intraday prices of one day at equally spaced clock times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDay {
    pub day: String,
    /// `P + 1` prices, the first being the opening reference.
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedDay {
    pub day: String,
    pub reason: String,
}

fn parse_err(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column,
        message: message.into(),
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input)
}

/// Reads a wide curve file, returning the day labels and the curves.
///
/// Rows and columns in errors are 1-based and count the header as row 1.
pub fn read_curves<R: Read>(input: R) -> Result<(Vec<String>, Vec<Curve>)> {
    let mut rdr = csv_reader(input);
    let header = rdr.headers()?.clone();
    if header.is_empty() || &header[0] != "day" {
        return Err(parse_err(1, 1, "first header cell must be 'day'"));
    }
    let t = header.len() - 1;
    for (k, name) in header.iter().enumerate().skip(1) {
        if name != format!("t_{k}") {
            return Err(parse_err(1, k + 1, format!("expected header 't_{k}', found '{name}'")));
        }
    }
    let mut days = Vec::new();
    let mut curves = Vec::new();
    let mut grid = None;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != t + 1 {
            return Err(parse_err(row, rec.len().min(t + 1) + 1, format!("expected {} cells, found {}", t + 1, rec.len())));
        }
        let grid = match grid {
            Some(g) => g,
            None => *grid.insert(Grid::new(t).map_err(|_| parse_err(1, 2, "no grid columns"))?),
        };
        let values = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(row, c + 1, format!("'{cell}' is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        days.push(rec[0].to_string());
        curves.push(Curve::new(grid, values)?);
    }
    Ok((days, curves))
}

/// Writes curves under day labels `1..=n` with round-trip exact numbers.
pub fn write_curves<W: Write>(sample: &[Curve], output: W) -> Result<()> {
    let Some(first) = sample.first() else {
        return Err(Error::Argument("cannot infer the grid of an empty sample; use write_curves_on".into()));
    };
    write_curves_on(first.grid(), sample, output)
}

/// As [`write_curves`] with an explicit grid, so empty samples keep their
/// header.
pub fn write_curves_on<W: Write>(grid: Grid, sample: &[Curve], output: W) -> Result<()> {
    let days: Vec<String> = (1..=sample.len()).map(|i| i.to_string()).collect();
    write_labeled_curves(grid, &days, sample, output)
}

/// Writes curves under caller-supplied day labels.
pub fn write_labeled_curves<W: Write>(grid: Grid, days: &[String], sample: &[Curve], output: W) -> Result<()> {
    if days.len() != sample.len() {
        return Err(Error::Dimension(format!("{} labels for {} curves", days.len(), sample.len())));
    }
    let mut w = csv::Writer::from_writer(output);
    let mut header = vec!["day".to_string()];
    header.extend((1..=grid.len()).map(|k| format!("t_{k}")));
    w.write_record(&header)?;
    for (i, c) in sample.iter().enumerate() {
        if c.grid() != grid {
            return Err(Error::Dimension(format!("curve {i} is not on the file grid")));
        }
        let mut rec = vec![days[i].clone()];
        // Display for f64 prints the shortest string that parses back exactly
        rec.extend(c.values().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<Vec<Curve>> {
    Ok(read_curves(File::open(path)?)?.1)
}

pub fn write_curves_csv(sample: &[Curve], path: impl AsRef<Path>) -> Result<()> {
    write_curves(sample, File::create(path)?)
}

/// Reads a long price file. Days keep their order of first appearance.
///
/// Days with duplicated or missing slots are dropped whole; their reasons
/// are returned alongside the complete days.
pub fn read_prices<R: Read>(input: R) -> Result<(Vec<PriceDay>, Vec<DroppedDay>)> {
    let mut rdr = csv_reader(input);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["day", "slot", "price"] {
        return Err(parse_err(1, 1, "header must be 'day,slot,price'"));
    }
    let mut order: Vec<String> = Vec::new();
    let mut slots: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    let mut duplicated: BTreeMap<String, usize> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(parse_err(row, rec.len().min(3) + 1, format!("expected 3 cells, found {}", rec.len())));
        }
        let day = rec[0].to_string();
        let slot: usize = rec[1]
            .parse()
            .map_err(|_| parse_err(row, 2, format!("'{}' is not a slot number", &rec[1])))?;
        let price: f64 = rec[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(row, 3, format!("'{}' is not a finite number", &rec[2])))?;
        let entry = slots.entry(day.clone()).or_insert_with(|| {
            order.push(day.clone());
            BTreeMap::new()
        });
        if entry.insert(slot, price).is_some() {
            duplicated.entry(day).or_insert(slot);
        }
    }
    let mut days = Vec::new();
    let mut dropped = Vec::new();
    for day in order {
        let s = slots.remove(&day).expect("recorded day");
        if let Some(slot) = duplicated.get(&day) {
            dropped.push(DroppedDay { reason: format!("slot {slot} appears more than once"), day });
        } else if let Some(gap) = (0..s.len()).find(|k| !s.contains_key(k)) {
            dropped.push(DroppedDay { reason: format!("slot {gap} is missing"), day });
        } else {
            days.push(PriceDay { day, prices: s.into_values().collect() });
        }
    }
    Ok((days, dropped))
}

pub fn read_prices_csv(path: impl AsRef<Path>) -> Result<(Vec<PriceDay>, Vec<DroppedDay>)> {
    read_prices(File::open(path)?)
}

/// Keeps days with exactly `expected_len` prices, preserving order.
pub fn filter_days(days: Vec<PriceDay>, expected_len: usize) -> (Vec<PriceDay>, Vec<DroppedDay>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for d in days {
        if d.prices.len() == expected_len {
            kept.push(d);
        } else {
            dropped.push(DroppedDay {
                reason: format!("{} prices, expected {expected_len}", d.prices.len()),
                day: d.day,
            });
        }
    }
    (kept, dropped)
}

/// Log returns `log p(j) − log p(j − 1)` for `j = 1..=P`, one curve per day
/// on the grid `j/P`. All days must have the same number of prices.
pub fn prices_to_log_returns(days: &[PriceDay]) -> Result<Vec<Curve>> {
    let Some(first) = days.first() else {
        return Ok(Vec::new());
    };
    if first.prices.len() < 2 {
        return Err(Error::Data(format!("day {} has fewer than two prices", first.day)));
    }
    let grid = Grid::new(first.prices.len() - 1)?;
    days.iter()
        .map(|d| {
            if d.prices.len() != grid.len() + 1 {
                return Err(Error::Dimension(format!(
                    "day {} has {} prices, expected {}",
                    d.day,
                    d.prices.len(),
                    grid.len() + 1
                )));
            }
            if let Some(j) = d.prices.iter().position(|p| !(*p > 0.0)) {
                return Err(Error::Data(format!(
                    "day {} has nonpositive price {} at slot {j}",
                    d.day, d.prices[j]
                )));
            }
            let logs: Vec<f64> = d.prices.iter().map(|p| p.ln()).collect();
            Curve::new(grid, logs.windows(2).map(|w| w[1] - w[0]).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(sample: &[Curve]) -> Vec<Curve> {
        let mut buf = Vec::new();
        write_curves(sample, &mut buf).unwrap();
        read_curves(buf.as_slice()).unwrap().1
    }

    #[test]
    fn empty_body_is_empty_sample() {
        let (days, curves) = read_curves("day,t_1,t_2\n".as_bytes()).unwrap();
        assert!(days.is_empty() && curves.is_empty());
        let mut buf = Vec::new();
        write_curves_on(Grid::new(2).unwrap(), &[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "day,t_1,t_2\n");
    }

    #[test]
    fn single_row() {
        let (days, curves) = read_curves("day,t_1,t_2,t_3\n2024-01-02,0.5,-1e-3,3\n".as_bytes()).unwrap();
        assert_eq!(days, ["2024-01-02"]);
        assert_eq!(curves[0].values(), &[0.5, -1e-3, 3.0]);
    }

    #[test]
    fn ragged_and_non_numeric_rows() {
        let e = read_curves("day,t_1,t_2\n1,0.1,0.2\n2,0.3\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 3, column: 3, .. }), "{e}");
        let e = read_curves("day,t_1,t_2\n1,0.1,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 2, column: 3, .. }), "{e}");
        let e = read_curves("day,t_1,t_3\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 1, column: 3, .. }), "{e}");
    }

    #[test]
    fn write_then_read_is_bit_identical() {
        let g = Grid::new(5).unwrap();
        let c = Curve::new(g, vec![0.1 + 0.2, 1.0 / 3.0, -5e-324, 1.7976931348623157e308, 0.0]).unwrap();
        assert_eq!(roundtrip(&[c.clone(), c.clone()]), vec![c.clone(), c]);
    }

    #[test]
    fn read_then_write_is_identity_on_canonical_files() {
        let text = "day,t_1,t_2\n1,0.25,-3\n2,1e-7,0.30000000000000004\n";
        let (_, curves) = read_curves(text.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_curves(&curves, &mut buf).unwrap();
        let again = read_curves(buf.as_slice()).unwrap().1;
        assert_eq!(curves, again);
        let mut buf2 = Vec::new();
        write_curves(&again, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    proptest! {
        #[test]
        fn roundtrip_any_finite_values(vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..40)) {
            let g = Grid::new(vals.len()).unwrap();
            let c = Curve::new(g, vals).unwrap();
            prop_assert_eq!(roundtrip(std::slice::from_ref(&c)), vec![c]);
        }
    }

    fn day(name: &str, prices: Vec<f64>) -> PriceDay {
        PriceDay { day: name.into(), prices }
    }

    #[test]
    fn constant_prices_give_zero_curve() {
        let c = prices_to_log_returns(&[day("a", vec![100.0; 79])]).unwrap();
        assert_eq!(c[0].grid().len(), 78);
        assert!(c[0].values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn exponential_prices_give_constant_returns() {
        let p: Vec<f64> = (0..79).map(|j| (j as f64 * 0.001).exp()).collect();
        let c = prices_to_log_returns(&[day("a", p)]).unwrap();
        assert!(c[0].values().iter().all(|v| (v - 0.001).abs() < 1e-15));
    }

    #[test]
    fn nonpositive_price_names_the_day() {
        let mut p = vec![10.0; 79];
        p[40] = 0.0;
        let e = prices_to_log_returns(&[day("ok", vec![10.0; 79]), day("2020-03-16", p)]).unwrap_err();
        assert!(matches!(&e, Error::Data(m) if m.contains("2020-03-16") && m.contains("slot 40")));
    }

    #[test]
    fn filter_days_cases() {
        let full = || day("f", vec![1.0; 79]);
        let half = || day("h", vec![1.0; 40]);
        let (k, d) = filter_days(vec![full(), full()], 79);
        assert_eq!((k.len(), d.len()), (2, 0));
        let (k, d) = filter_days(vec![half(), half()], 79);
        assert_eq!((k.len(), d.len()), (0, 2));
        let calendar: Vec<PriceDay> = (0..250).map(|i| if i % 31 == 0 { half() } else { full() }).collect();
        let (k, d) = filter_days(calendar, 79);
        assert_eq!(k.len() + d.len(), 250);
        assert_eq!(d.len(), 9);
        assert!(d[0].reason.contains("40 prices"));
        let curves = prices_to_log_returns(&k).unwrap();
        assert_eq!(curves.len() * 78, k.len() * 78);
    }

    #[test]
    fn long_prices_with_gaps_and_duplicates() {
        let mut text = String::from("day,slot,price\n");
        for d in ["d1", "d2", "d3"] {
            for s in 0..=78 {
                if d == "d2" && s == 17 {
                    continue;
                }
                text += &format!("{d},{s},{}\n", 100.0 + s as f64);
                if d == "d3" && s == 5 {
                    text += "d3,5,101\n";
                }
            }
        }
        text += "d0,0,99\nd0,1,100\n";
        let (days, dropped) = read_prices(text.as_bytes()).unwrap();
        assert_eq!(days.iter().map(|d| d.day.as_str()).collect::<Vec<_>>(), ["d1", "d0"]);
        assert_eq!(dropped.len(), 2);
        assert!(dropped[0].reason.contains("slot 17 is missing"));
        assert!(dropped[1].reason.contains("more than once"));
        let (kept, short) = filter_days(days, 79);
        assert_eq!(kept.len(), 1);
        assert_eq!(short[0].day, "d0");
        let c = prices_to_log_returns(&kept).unwrap();
        assert!((c[0].values()[0] - (101f64.ln() - 100f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn bad_price_cells() {
        let e = read_prices("day,slot,price\nd,x,1\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 2, column: 2, .. }));
        let e = read_prices("day,slot,price\nd,0,nan\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 2, column: 3, .. }));
        assert!(read_prices("day,price\n".as_bytes()).is_err());
    }
}
