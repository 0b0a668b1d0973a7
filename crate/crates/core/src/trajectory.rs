//! Per-step trajectory diagnostics and their CSV encoding.

use std::io::{self, Write};

use nalgebra::DVector;

/// One diagnostics row of a simulated trajectory.
///
/// For discrete runs, `v` is the discrete velocity `(q_{k+1} − q_k)/h` and
/// `energy` is the scheme-consistent total-energy sample of the step window;
/// for the RK4 reference, `v` and `energy` are the continuous quantities.
/// `rel_energy_err = |E_k − E_0| / |E_0|` with `E_0` taken from the first row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub t: f64,
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub s: f64,
    pub temperature: f64,
    pub internal_energy: f64,
    pub energy: f64,
    pub rel_energy_err: f64,
}

/// Column order of the trajectory CSV schema.
pub const CSV_HEADER: &str = "k,t,q,v,S,T,U,E,rel_energy_err";

/// Formats a float with 17 significant digits, enough to round-trip `f64`
/// and make golden-file comparisons meaningful.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the `k,t,q,v,S,T,U,E,rel_energy_err` CSV table.
///
/// The schema carries one scalar position column, so only one-dimensional
/// trajectories are encodable.
pub fn write_csv<W: Write>(records: &[TrajectoryRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        if r.q.len() != 1 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("CSV schema is one-dimensional, got dimension {}", r.q.len()),
            ));
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            fmt_full(r.t),
            fmt_full(r.q[0]),
            fmt_full(r.v[0]),
            fmt_full(r.s),
            fmt_full(r.temperature),
            fmt_full(r.internal_energy),
            fmt_full(r.energy),
            fmt_full(r.rel_energy_err)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize, x: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            step: k,
            t: k as f64 * 1e-3,
            q: DVector::from_element(1, x),
            v: DVector::from_element(1, 0.0),
            s: 0.0,
            temperature: 300.0,
            internal_energy: 3741.5,
            energy: 3741.7,
            rel_energy_err: 0.0,
        }
    }

    #[test]
    fn header_and_row_count() {
        let rows: Vec<_> = (0..5).map(|k| record(k, 0.3)).collect();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn full_precision_round_trips() {
        let x = 0.1 + 0.2; // 0.30000000000000004
        let s = fmt_full(x);
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn multidimensional_rows_are_rejected() {
        let row = TrajectoryRecord {
            q: DVector::zeros(2),
            v: DVector::zeros(2),
            ..record(0, 0.0)
        };
        let mut buf = Vec::new();
        assert!(write_csv(&[row], &mut buf).is_err());
    }
}
