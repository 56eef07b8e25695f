//! Text snapshot format for flow states.
//!
//! One header line `<formulation> n k alpha r h t tau` followed by one value
//! per line (row-major with NaN for out-of-mask cells on ball grids). All
//! floats are printed with 17 significant digits, so emit -> parse -> emit is
//! bitwise stable.

use crate::error::CoreError;
use crate::flow::{FieldData, FlowState, Formulation};
use crate::grid::{BallField2D, BallGrid, RadialField};
use crate::params::SpeedParams;
use std::fmt::Write as _;

/// 17-significant-digit float formatting (round-trips f64 exactly).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_snapshot(state: &FlowState) -> String {
    let p = &state.params;
    let (r, h, values): (f64, f64, &[f64]) = match &state.field {
        FieldData::Radial(f) => (f.rmax, f.h, &f.values),
        FieldData::Ball(f) => (f.grid.r, f.grid.h, &f.values),
    };
    let mut out = String::with_capacity(values.len() * 25 + 96);
    let _ = writeln!(
        out,
        "{} {} {} {} {} {} {} {}",
        state.formulation.tag(),
        p.n,
        p.k,
        fmt_f64(p.alpha),
        fmt_f64(r),
        fmt_f64(h),
        fmt_f64(state.t),
        fmt_f64(state.tau)
    );
    for v in values {
        let _ = writeln!(out, "{}", fmt_f64(*v));
    }
    out
}

pub fn read_snapshot(text: &str) -> Result<FlowState, CoreError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CoreError::Parse("empty snapshot".into()))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 8 {
        return Err(CoreError::Parse(format!("bad header ({} fields)", tok.len())));
    }
    let formulation = Formulation::from_tag(tok[0])?;
    let n: usize = tok[1].parse().map_err(|e| CoreError::Parse(format!("n: {e}")))?;
    let k: usize = tok[2].parse().map_err(|e| CoreError::Parse(format!("k: {e}")))?;
    let parse_f = |s: &str, name: &str| -> Result<f64, CoreError> {
        s.parse::<f64>().map_err(|e| CoreError::Parse(format!("{name}: {e}")))
    };
    let alpha = parse_f(tok[3], "alpha")?;
    let r = parse_f(tok[4], "r")?;
    let h = parse_f(tok[5], "h")?;
    let t = parse_f(tok[6], "t")?;
    let tau = parse_f(tok[7], "tau")?;
    let params = SpeedParams::new(n, k, alpha)?;
    let mut values = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(parse_f(line, "value")?);
    }
    let radial_count = (r / h).round() as usize + 1;
    let ball_side = 2 * (r / h).floor() as usize + 1;
    let field = if values.len() == radial_count {
        FieldData::Radial(RadialField { rmax: r, h, values })
    } else if values.len() == ball_side * ball_side {
        let grid = BallGrid::new(r, h)?;
        FieldData::Ball(BallField2D { grid, values })
    } else {
        return Err(CoreError::Parse(format!(
            "value count {} matches neither a radial grid ({radial_count}) nor a ball grid ({})",
            values.len(),
            ball_side * ball_side
        )));
    };
    Ok(FlowState { t, tau, field, formulation, params })
}

/// Two-column CSV (time, value).
pub fn series_csv(times: &[f64], values: &[f64]) -> String {
    let mut out = String::from("time,value\n");
    for (t, v) in times.iter().zip(values) {
        let _ = writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_round_trip_bitwise() {
        let p = SpeedParams::new(3, 2, 1.5).unwrap();
        let f = RadialField::from_fn(7.0, 64, |r| (1.7 + r * r).sqrt() + 1.0 / 3.0);
        let state = FlowState {
            t: 0.125,
            tau: p.time_change(0.125),
            field: FieldData::Radial(f),
            formulation: Formulation::PrimalRadial,
            params: p,
        };
        let text = write_snapshot(&state);
        let back = read_snapshot(&text).unwrap();
        let text2 = write_snapshot(&back);
        assert_eq!(text, text2);
        match (&state.field, &back.field) {
            (FieldData::Radial(a), FieldData::Radial(b)) => assert_eq!(a.values, b.values),
            _ => panic!("field kind changed"),
        }
    }

    #[test]
    fn ball_round_trip_bitwise() {
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        let grid = crate::grid::BallGrid::new(0.9, 1.0 / 16.0).unwrap();
        let f = BallField2D::from_fn(grid, |x, y| -(1.0 - x * x - y * y).sqrt() - 0.1 * x * y);
        let state = FlowState {
            t: 1.0,
            tau: p.time_change(1.0),
            field: FieldData::Ball(f),
            formulation: Formulation::Dual,
            params: p,
        };
        let text = write_snapshot(&state);
        let back = read_snapshot(&text).unwrap();
        assert_eq!(text, write_snapshot(&back));
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_snapshot("").is_err());
        assert!(read_snapshot("dual 2 1 1.0 0.9").is_err());
        assert!(read_snapshot("sideways 2 1 1.0 0.9 0.1 0.0 0.0\n1.0\n").is_err());
    }
}
