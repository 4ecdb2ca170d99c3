//! CSV and JSON rendering. CSV numbers carry 17 significant digits so every
//! `f64` reads back bit for bit.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use privmkt::{Certificate, SpneReport, Trace};
use serde::Serialize;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Header of solve and sweep tables: the swept parameters, then per-SP
/// columns, then run status.
pub fn outcome_header(axes: &[String], m: usize) -> Vec<String> {
    let mut h: Vec<String> = axes.to_vec();
    for prefix in ["eps", "v", "n", "pi"] {
        h.extend((1..=m).map(|i| format!("{prefix}_{i}")));
    }
    h.extend(["method", "converged", "feasible", "certified", "error"].map(String::from));
    h
}

/// One table row. Missing values are empty fields.
pub fn outcome_row(
    point: &[f64],
    m: usize,
    report: &Result<SpneReport<f64>, String>,
    certified: Option<bool>,
) -> Vec<String> {
    let mut row: Vec<String> = point.iter().map(|&x| num(x)).collect();
    let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
    match report {
        Ok(rep) => {
            let o = &rep.outcome;
            for column in [o.profile.eps(), o.profile.qos(), o.shares.clone(), o.profits.clone()] {
                row.extend(column.iter().map(|&x| num(x)));
            }
            row.push(o.method.to_string());
            row.push(o.converged.to_string());
            row.push(flag(rep.feasibility.map(|f| f.all_feasible)));
            row.push(flag(certified));
            row.push(String::new());
        }
        Err(msg) => {
            row.extend(std::iter::repeat_n(String::new(), 4 * m + 4));
            row.push(msg.clone());
        }
    }
    row
}

pub fn write_table(out: &mut dyn Write, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const TRACE_HEADER: [&str; 5] = ["iteration", "sp", "eps", "v", "profit"];

/// Rows `iteration, sp, eps, v, profit` (both 1-based), then a `#` footer
/// with the termination status.
pub fn write_trace_csv(out: &mut dyn Write, trace: &Trace) -> Result<()> {
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut *out);
        w.write_record(TRACE_HEADER)?;
        for (k, round) in trace.rounds.iter().enumerate() {
            for i in 0..round.eps.len() {
                w.write_record([
                    (k + 1).to_string(),
                    (i + 1).to_string(),
                    num(round.eps[i]),
                    num(round.v[i]),
                    num(round.profits[i]),
                ])?;
            }
        }
        w.flush()?;
    }
    let cycle = trace.cycle_length().map(|c| c.to_string()).unwrap_or_default();
    writeln!(
        out,
        "# termination={} cycle_length={} rounds={}",
        trace.termination.label(),
        cycle,
        trace.rounds.len()
    )?;
    Ok(())
}

pub const CERT_HEADER: [&str; 4] = ["sp", "qos_gain", "risk_gain", "max_gain"];

pub fn write_certificate_csv(out: &mut dyn Write, cert: &Certificate<f64>) -> Result<()> {
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut *out);
        w.write_record(CERT_HEADER)?;
        for (i, g) in cert.gains.iter().enumerate() {
            w.write_record([(i + 1).to_string(), num(g.qos), num(g.risk), num(g.max())])?;
        }
        w.flush()?;
    }
    writeln!(
        out,
        "# certified={} cert_tol={} grid={}x{}",
        cert.certified,
        num(cert.cert_tol),
        cert.eps_points,
        cert.v_points
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.866515718791933e-7, 4.68452380952381, -0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(0.7), "6.9999999999999996e-1");
    }

    #[test]
    fn header_layout() {
        let h = outcome_header(&["t".into()], 2);
        assert_eq!(
            h.join(","),
            "t,eps_1,eps_2,v_1,v_2,n_1,n_2,pi_1,pi_2,method,converged,feasible,certified,error"
        );
    }

    #[test]
    fn error_rows_keep_width() {
        let row = outcome_row(&[0.5], 3, &Err("boom".into()), None);
        assert_eq!(row.len(), outcome_header(&["t".into()], 3).len());
        assert_eq!(row.last().unwrap(), "boom");
    }
}
