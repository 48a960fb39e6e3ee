//! CSV tables with fixed headers.

use std::io::Write;

use super::gaps::GapTable;
use super::sweep::SweepTable;
use super::traces::TraceRow;
use crate::error::{Error, Result};

pub const SWEEP_HEADER: [&str; 16] = [
    "ptot_db",
    "D",
    "D1",
    "D2",
    "D3",
    "se_D",
    "se_D1",
    "se_D2",
    "CRB",
    "se_CRB",
    "trials",
    "failures",
    "violations",
    "bound_violations",
    "median_iterations",
    "split_iterations",
];

pub const TRACE_HEADER: [&str; 9] = [
    "ptot_db",
    "cluster",
    "psi_db",
    "V_db",
    "P_db",
    "head_db",
    "ch_db",
    "sensor_db",
    "active",
];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        k => Error::Numerical(format!("csv: {k:?}")),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_rows<W: Write>(out: W, header: &[String], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn owned(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

pub fn write_sweep<W: Write>(out: W, table: &SweepTable) -> Result<()> {
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.ptot_db),
                num(r.d),
                num(r.d1),
                num(r.d2),
                num(r.d3),
                num(r.se_d),
                num(r.se_d1),
                num(r.se_d2),
                opt(r.crb),
                opt(r.se_crb),
                r.trials.to_string(),
                r.failures.to_string(),
                r.violations.to_string(),
                r.bound_violations.to_string(),
                num(r.median_iterations),
                r.split_iterations.to_string(),
            ]
        })
        .collect();
    write_rows(out, &owned(&SWEEP_HEADER), rows)
}

/// Column name for a training share: `0.05` becomes `g_t_05`.
pub fn training_column(fraction: f64) -> String {
    format!("g_t_{:02}", (100.0 * fraction).round() as u32)
}

pub fn gap_header(fractions: &[f64]) -> Vec<String> {
    let mut h = vec!["ptot_db".to_string()];
    h.extend(fractions.iter().map(|&f| training_column(f)));
    h.extend(["g_c".to_string(), "g_d".to_string()]);
    h
}

pub fn write_gaps<W: Write>(out: W, table: &GapTable) -> Result<()> {
    let rows = table
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![num(r.ptot_db)];
            v.extend(r.g_t.iter().copied().map(num));
            v.extend([num(r.g_c), num(r.g_d)]);
            v
        })
        .collect();
    write_rows(out, &gap_header(&table.training_fractions), rows)
}

pub fn write_traces<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                num(r.ptot_db),
                r.cluster.to_string(),
                num(r.psi_db),
                num(r.v_db),
                num(r.p_db),
                num(r.head_db),
                num(r.ch_db),
                num(r.sensor_db),
                u8::from(r.active).to_string(),
            ]
        })
        .collect();
    write_rows(out, &owned(&TRACE_HEADER), rows)
}

/// Objective per iteration of a solve.
pub fn write_objective_trace<W: Write>(out: W, trace: &[f64]) -> Result<()> {
    let rows = trace
        .iter()
        .enumerate()
        .map(|(i, &f)| vec![i.to_string(), num(f)])
        .collect();
    write_rows(out, &owned(&["iteration", "objective"]), rows)
}

/// `(P_tot, G⁻¹)` pairs.
pub fn write_crb<W: Write>(out: W, rows: &[(f64, f64, f64)]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|&(db, g, se)| vec![num(db), num(g), num(se)])
        .collect();
    write_rows(out, &owned(&["ptot_db", "CRB", "se_CRB"]), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_header_names_the_shares() {
        assert_eq!(
            gap_header(&[0.05, 0.25, 0.6]).join(","),
            "ptot_db,g_t_05,g_t_25,g_t_60,g_c,g_d"
        );
    }

    #[test]
    fn trace_csv_round_trips() {
        let mut buf = Vec::new();
        write_objective_trace(&mut buf, &[1.0, 1.5]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,objective\n0,1\n1,1.5\n"
        );
    }
}
