//! CSV writers. Every number is written in scientific notation with a
//! fixed count of digits after the point, so identical runs give
//! identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use prandtl_core::compat::CompatReport;
use prandtl_core::energy::EnergyReport;
use prandtl_core::inequality::InequalityReport;
use prandtl_core::steady::{PicardDiagnostics, SteadyState};
use prandtl_core::unsteady::UnsteadyState;
use prandtl_core::YAxis;

use crate::error::{LabError, Result};

pub const ENERGY_HEADER: [&str; 10] =
    ["t", "E_total", "E_w", "E_rho", "E_gu", "E_linf", "D_total", "min_w_sigma", "rho_min", "rho_max"];
pub const STEADY_HEADER: [&str; 6] = ["x", "X_total", "Y_total", "dyu_wall", "r0_residual", "phi_last"];
pub const INEQUALITY_HEADER: [&str; 6] = ["kind", "sample_id", "lhs", "rhs", "holds", "empirical_constant"];
pub const PICARD_HEADER: [&str; 3] = ["theta", "k", "phi"];
pub const PROFILE_HEADER: [&str; 4] = ["y", "rho", "u", "w"];
pub const COMPAT_HEADER: [&str; 4] = ["name", "value", "threshold", "pass"];
pub const IDENTITY_HEADER: [&str; 3] = ["identity", "grid_h", "residual"];
pub const CONVERGENCE_HEADER: [&str; 4] = ["level", "param", "error", "observed_order"];

/// Number formatter with `precision` digits after the point.
#[derive(Clone, Copy, Debug)]
pub struct Fmt {
    pub precision: usize,
}

impl Fmt {
    pub fn num(&self, v: f64) -> String {
        format!("{:.*e}", self.precision, v)
    }
}

/// One row of `steady.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyRow {
    pub x: f64,
    pub x_total: f64,
    pub y_total: f64,
    pub dyu_wall: f64,
    pub r0_residual: f64,
    pub phi_last: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub param: f64,
    /// Distance to the oracle or to the previous level; NaN when undefined.
    pub error: f64,
    pub observed_order: f64,
}

pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io = |e: std::io::Error| LabError::Io { path: path.to_path_buf(), source: e };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let csv_err = |e: csv::Error| io(e.into());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(path.to_path_buf())
}

pub fn write_energy(path: &Path, series: &[EnergyReport], f: Fmt) -> Result<PathBuf> {
    let rows = series.iter().map(|r| {
        [r.t, r.e_total, r.e_w, r.e_rho, r.e_gu, r.e_linf, r.d_total, r.min_w_sigma, r.rho_min, r.rho_max]
            .iter()
            .map(|&v| f.num(v))
            .collect()
    });
    write_table(path, &ENERGY_HEADER, rows)
}

pub fn write_steady(path: &Path, rows: &[SteadyRow], f: Fmt) -> Result<PathBuf> {
    let rows = rows.iter().map(|r| {
        [r.x, r.x_total, r.y_total, r.dyu_wall, r.r0_residual, r.phi_last].iter().map(|&v| f.num(v)).collect()
    });
    write_table(path, &STEADY_HEADER, rows)
}

pub fn write_inequalities(path: &Path, reports: &[(usize, InequalityReport)], f: Fmt) -> Result<PathBuf> {
    let rows = reports.iter().map(|(id, r)| {
        vec![
            r.kind.name().to_string(),
            id.to_string(),
            f.num(r.lhs),
            f.num(r.rhs),
            r.holds.to_string(),
            f.num(r.empirical_constant),
        ]
    });
    write_table(path, &INEQUALITY_HEADER, rows)
}

pub fn write_picard(path: &Path, diags: &[PicardDiagnostics], f: Fmt) -> Result<PathBuf> {
    let rows = diags
        .iter()
        .flat_map(|d| d.phi_series.iter().enumerate().map(move |(k, &phi)| vec![f.num(d.theta), (k + 1).to_string(), f.num(phi)]));
    write_table(path, &PICARD_HEADER, rows)
}

/// Wall-normal profile of the first column of an unsteady snapshot.
pub fn write_unsteady_profile(path: &Path, s: &UnsteadyState, f: Fmt) -> Result<PathBuf> {
    let y = s.grid().y_nodes();
    let (rho, u, w) = (s.rho.column(0), s.u.column(0), s.w.column(0));
    let rows = (0..y.len()).map(|i| vec![f.num(y[i]), f.num(rho[i]), f.num(u[i]), f.num(w[i])]);
    write_table(path, &PROFILE_HEADER, rows)
}

/// Profile of one steady station, with `w = d_y u` and the extra column `q`.
pub fn write_steady_profile(path: &Path, y: &YAxis, s: &SteadyState, f: Fmt) -> Result<PathBuf> {
    let w = y.deriv(&s.u, 1);
    let nodes = y.nodes();
    let rows = (0..nodes.len()).map(|i| vec![f.num(nodes[i]), f.num(s.rho[i]), f.num(s.u[i]), f.num(w[i]), f.num(s.q[i])]);
    write_table(path, &["y", "rho", "u", "w", "q"], rows)
}

pub fn write_compat(path: &Path, r: &CompatReport, f: Fmt) -> Result<PathBuf> {
    let rows = r.entries.iter().map(|e| vec![e.name.clone(), f.num(e.value), f.num(e.threshold), e.pass.to_string()]);
    write_table(path, &COMPAT_HEADER, rows)
}

/// Human-readable table of a compatibility report.
pub fn compat_table(r: &CompatReport) -> String {
    let width = r.entries.iter().map(|e| e.name.chars().count()).max().unwrap_or(4).max(4);
    let mut s = format!("{:<width$}  {:>12}  {:>12}  pass\n", "name", "value", "threshold");
    for e in &r.entries {
        s.push_str(&format!("{:<width$}  {:>12.4e}  {:>12.4e}  {}\n", e.name, e.value, e.threshold, if e.pass { "yes" } else { "NO" }));
    }
    s.push_str(&format!("compatible through order {}\n", r.overall_order_m));
    s
}

pub fn write_identities(path: &Path, rows: &[(String, f64, f64)], f: Fmt) -> Result<PathBuf> {
    let rows = rows.iter().map(|(n, h, r)| vec![n.clone(), f.num(*h), f.num(*r)]);
    write_table(path, &IDENTITY_HEADER, rows)
}

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow], f: Fmt) -> Result<PathBuf> {
    let rows = rows.iter().map(|r| vec![r.level.to_string(), f.num(r.param), f.num(r.error), f.num(r.observed_order)]);
    write_table(path, &CONVERGENCE_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        let f = Fmt { precision: 16 };
        assert_eq!(f.num(1.0), "1.0000000000000000e0");
        assert_eq!(f.num(-0.1), "-1.0000000000000001e-1");
        assert_eq!(f.num(f64::NAN), "NaN");
    }

    #[test]
    fn empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_energy(&dir.path().join("energy.csv"), &[], Fmt { precision: 16 }).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), format!("{}\n", ENERGY_HEADER.join(",")));
        let p = write_steady(&dir.path().join("sub/steady.csv"), &[], Fmt { precision: 16 }).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "x,X_total,Y_total,dyu_wall,r0_residual,phi_last\n");
    }

    #[test]
    fn rows_are_newline_terminated() {
        let dir = tempfile::tempdir().unwrap();
        let rows = [ConvergenceRow { level: 0, param: 0.5, error: f64::NAN, observed_order: f64::NAN }];
        let p = write_convergence(&dir.path().join("c.csv"), &rows, Fmt { precision: 3 }).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "level,param,error,observed_order\n0,5.000e-1,NaN,NaN\n");
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("f");
        fs::write(&file, "x").unwrap();
        let e = write_energy(&file.join("energy.csv"), &[], Fmt { precision: 16 }).unwrap_err();
        assert!(matches!(e, LabError::Io { .. }));
        assert_eq!(e.exit_code(), 4);
    }
}
