//! CSV field export and the JSON report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use moutard_core::grid::GridField;
use moutard_core::verifier::Order;
use serde::Serialize;

use crate::run::CliError;

/// `x,y,re,im`, y outer, 17 significant digits, LF endings.
pub fn field_csv(f: &GridField) -> String {
    let d = f.domain();
    let mut out = String::with_capacity(80 * d.len() + 16);
    out.push_str("x,y,re,im\n");
    for (ix, iy, z) in d.nodes() {
        let v = f.get(ix, iy);
        writeln!(out, "{},{},{},{}", num(z.re), num(z.im), num(v.re), num(v.im)).expect("writing to a String");
    }
    out
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `Some(x)` for finite `x`; non-finite values serialize as `null`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// `a·x + b·y + c = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoleLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum OrderOut {
    Exact(&'static str),
    Fitted(f64),
    Undefined(Option<f64>),
}

impl From<Order> for OrderOut {
    fn from(o: Order) -> Self {
        match o {
            Order::Exact => OrderOut::Exact("exact"),
            Order::Fitted(p) if p.is_finite() => OrderOut::Fitted(p),
            Order::Fitted(_) => OrderOut::Undefined(None),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub level: &'static str,
    pub domain: [f64; 4],
    /// Grid of the single transform run, if any.
    pub grid: Option<[usize; 2]>,
    pub convergence_grids: Vec<[usize; 2]>,
    pub n: usize,
    pub basepoint: [f64; 2],
    pub eps_sing: f64,
    /// Max-norms of the single run, or of the finest grid of a convergence
    /// study when one was run.
    pub residuals: BTreeMap<String, Option<f64>>,
    pub residual_orders: BTreeMap<String, OrderOut>,
    pub det_min: Option<f64>,
    pub masked_fraction: f64,
    pub contour_points: usize,
    pub contour_radius: Option<f64>,
    pub pole_line: Option<PoleLine>,
    pub pole_line_y: Option<f64>,
    pub sigma: Option<f64>,
    pub pole_radius: Option<f64>,
    pub decay_constant: Option<f64>,
    pub oracle: Option<&'static str>,
    pub oracle_max_error: Option<f64>,
    pub files: Vec<String>,
    pub runtime_ms: u64,
}

impl Report {
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        write_file(&path, &text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use moutard_core::grid::Domain;
    use moutard_core::Complex64;

    #[test]
    fn csv_layout() {
        let d = Domain::new(0.0, 1.0, 0.0, 2.0, 3, 3).unwrap();
        let f = GridField::from_fn(d, |z| z * Complex64::new(0.0, 1.0));
        let text = field_csv(&f);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[0], "x,y,re,im");
        // y outer: the second row steps x
        assert!(lines[2].starts_with("5.0000000000000000e-1,0.0000000000000000e0,"));
        assert!(lines[4].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
        assert!(!text.contains('\r') && text.ends_with('\n'));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn orders_serialize() {
        let s = serde_json::to_string(&[OrderOut::from(Order::Exact), Order::Fitted(2.0).into(), Order::Fitted(f64::NAN).into()]).unwrap();
        assert_eq!(s, "[\"exact\",2.0,null]");
    }
}
