use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub seed: u64,
    pub iterate_norm: f64,
    pub loss: f64,
    pub grad_norm: f64,
    pub clipped: bool,
    /// Cumulative regret against each comparator, in comparator order.
    pub regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<TraceRow>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> Option<&[f64]> {
        self.rows.last().map(|r| r.regret.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

/// Seventeen significant digits; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn regret_column(i: usize) -> String {
    format!("regret_u{i}")
}

pub fn header(comparators: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "seed", "iterate_norm", "loss", "grad_norm", "clipped"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..comparators).map(regret_column));
    h
}

pub fn write_csv<W: Write>(out: W, comparators: usize, traces: &[RegretTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(comparators))?;
    for row in traces.iter().flat_map(|t| &t.rows) {
        if row.regret.len() != comparators {
            return Err(Error::DimensionMismatch {
                expected: comparators,
                got: row.regret.len(),
            });
        }
        let mut rec = vec![
            row.t.to_string(),
            row.seed.to_string(),
            fmt_f64(row.iterate_norm),
            fmt_f64(row.loss),
            fmt_f64(row.grad_norm),
            u8::from(row.clipped).to_string(),
        ];
        rec.extend(row.regret.iter().map(|x| fmt_f64(*x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let comparators = headers
        .len()
        .checked_sub(6)
        .ok_or_else(|| Error::Format("short header".into()))?;
    if headers.iter().collect::<Vec<_>>() != header(comparators) {
        return Err(Error::Format(format!("unexpected header {headers:?}")));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Format(format!("{s:?}: {e}")))
    };
    let int = |s: &str| {
        s.parse::<u64>()
            .map_err(|e| Error::Format(format!("{s:?}: {e}")))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(TraceRow {
            t: int(&rec[0])?,
            seed: int(&rec[1])?,
            iterate_norm: num(&rec[2])?,
            loss: num(&rec[3])?,
            grad_norm: num(&rec[4])?,
            clipped: match &rec[5] {
                "0" => false,
                "1" => true,
                other => return Err(Error::Format(format!("clipped flag {other:?}"))),
            },
            regret: rec.iter().skip(6).map(num).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

fn json_f64(x: f64) -> Result<String> {
    if x.is_finite() {
        Ok(fmt_f64(x))
    } else {
        Err(Error::Format(format!(
            "non-finite value {x} cannot be written as JSON"
        )))
    }
}

pub fn write_jsonl<W: Write>(mut out: W, traces: &[RegretTrace]) -> Result<()> {
    let mut line = String::new();
    for row in traces.iter().flat_map(|t| &t.rows) {
        line.clear();
        write!(
            line,
            "{{\"t\":{},\"seed\":{},\"iterate_norm\":{},\"loss\":{},\"grad_norm\":{},\"clipped\":{},\"regret\":[",
            row.t,
            row.seed,
            json_f64(row.iterate_norm)?,
            json_f64(row.loss)?,
            json_f64(row.grad_norm)?,
            row.clipped
        )
        .expect("write to string");
        for (i, x) in row.regret.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&json_f64(*x)?);
        }
        line.push_str("]}\n");
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(seed: u64, n: u64) -> RegretTrace {
        RegretTrace {
            seed,
            config_hash: "x".into(),
            rows: (1..=n)
                .map(|t| TraceRow {
                    t,
                    seed,
                    iterate_norm: 0.1 * t as f64,
                    loss: 1.0 / 3.0,
                    grad_norm: 2.5,
                    clipped: t % 2 == 0,
                    regret: vec![t as f64, -1e-300],
                })
                .collect(),
        }
    }

    #[test]
    fn empty_csv_has_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, 2, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,seed,iterate_norm,loss,grad_norm,clipped,regret_u0,regret_u1\n"
        );
    }

    #[test]
    fn three_rounds_give_three_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, 2, &[trace(0, 3)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[trace(0, 3)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn both_formats_round_trip() {
        let traces = vec![trace(4, 5), trace(9, 2)];
        let rows: Vec<TraceRow> = traces.iter().flat_map(|t| t.rows.clone()).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, 2, &traces).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &traces).unwrap();
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), rows);
    }
}
