//! CSV and text emission. Floats in CSV use the shortest round-trip
//! exponent form, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::optics::PermittivityMode;
use crate::sphere_plate::{Averaging, FrequencyShiftCurve};
use crate::stats::Chi2Report;
use crate::units::METERS_PER_UM;

use super::CliError;

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_eps_csv(path: &Path, rows: &[(f64, f64)]) -> Result<(), CliError> {
    write_rows(
        path,
        &["xi_ev", "eps"],
        rows.iter().map(|&(xi, e)| vec![num(xi), num(e)]),
    )
}

/// Columns `z_um,delta_f_hz,z_delta_f_hz_um`.
pub fn write_curve_csv(path: &Path, curve: &FrequencyShiftCurve) -> Result<(), CliError> {
    write_rows(
        path,
        &["z_um", "delta_f_hz", "z_delta_f_hz_um"],
        curve.points.iter().map(|p| {
            vec![
                num(p.z / METERS_PER_UM),
                num(p.delta_f),
                num(p.z_delta_f / METERS_PER_UM),
            ]
        }),
    )
}

/// Read a curve written by [`write_curve_csv`]; only `z_um` and
/// `delta_f_hz` are used.
pub fn read_curve_csv(
    path: &Path,
    tag: Option<PermittivityMode>,
) -> Result<FrequencyShiftCurve, CliError> {
    let input = |m: String| CliError::Input(format!("theory curve {}: {m}", path.display()));
    if !path.is_file() {
        return Err(input("file not found".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(e.to_string()))?;
    let headers = reader.headers().map_err(|e| input(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| input(format!("missing column `{name}`")))
    };
    let (iz, idf) = (column("z_um")?, column("delta_f_hz")?);
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| input(e.to_string()))?;
        let field = |i: usize| -> Result<f64, CliError> {
            let raw = record.get(i).unwrap_or("");
            raw.parse()
                .map_err(|_| input(format!("cannot parse `{raw}`")))
        };
        points.push((field(iz)? * METERS_PER_UM, field(idf)?));
    }
    // The averaging of an external curve is unknown; it is reported as such.
    FrequencyShiftCurve::from_points(points, tag, Averaging::Exact)
        .map_err(|e| input(e.to_string()))
}

pub fn write_chi2_csv(path: &Path, report: &Chi2Report) -> Result<(), CliError> {
    write_rows(
        path,
        &[
            "z_um",
            "delta_f_hz",
            "theory_hz",
            "sigma_eff_hz",
            "contribution",
        ],
        report.residuals.iter().map(|r| {
            vec![
                num(r.z / METERS_PER_UM),
                num(r.measured),
                num(r.theory),
                num(r.sigma_eff),
                num(r.contribution),
            ]
        }),
    )
}

/// Percentage with three significant digits, e.g. `35.9`, `0.730`, `4.80e-45`.
pub fn percent_3sig(probability: f64) -> String {
    let p = 100.0 * probability;
    if p == 0.0 {
        return "0".into();
    }
    if p < 1e-3 {
        return format!("{p:.2e}");
    }
    let magnitude = p.log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    let s = format!("{p:.decimals$}");
    // Rounding can carry into the next decade (99.96 → 100.0).
    if decimals > 0
        && s.parse::<f64>()
            .is_ok_and(|v| v >= 10f64.powi(magnitude + 1))
    {
        return format!("{p:.prec$}", prec = decimals - 1);
    }
    s
}

pub struct Chi2Summary<'a> {
    pub label: &'a str,
    pub dataset: &'a str,
    pub averaging: Option<Averaging>,
    pub n_fit_params: usize,
    pub threshold_sigma: f64,
    pub reference: Option<f64>,
    pub report: &'a Chi2Report,
}

impl Chi2Summary<'_> {
    pub fn render(&self) -> String {
        let r = self.report;
        let mut s = String::new();
        let _ = writeln!(s, "[{}]", self.label);
        let _ = writeln!(s, "dataset: {}", self.dataset);
        let _ = writeln!(
            s,
            "averaging: {}",
            self.averaging
                .map_or("unknown (external curve)", Averaging::as_str)
        );
        let _ = writeln!(s, "sigma_mode: {}", r.sigma_mode);
        let _ = writeln!(s, "points: {}", r.per_point.len());
        let _ = writeln!(s, "n_fit_params: {}", self.n_fit_params);
        let _ = writeln!(s, "dof: {}", r.dof);
        let _ = writeln!(s, "chi2: {}", r.chi2);
        if let Some(q) = r.probability {
            let _ = writeln!(s, "probability: {} %", percent_3sig(q));
        }
        let _ = writeln!(s, "exclusion_threshold_sigma: {}", self.threshold_sigma);
        if let Some(sub) = r.subset_bound {
            let _ = writeln!(s, "exclusion_count: {}", sub.count);
            let _ = writeln!(s, "exclusion_partial_chi2: {}", sub.partial_chi2);
            if let Some(reference) = self.reference {
                let _ = writeln!(s, "reference_partial_chi2: {reference}");
                let _ = writeln!(s, "exceeds_reference: {}", sub.partial_chi2 > reference);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_formatting() {
        assert_eq!(percent_3sig(1.0), "100");
        assert_eq!(percent_3sig(0.35998), "36.0");
        assert_eq!(percent_3sig(0.0072955), "0.730");
        assert_eq!(percent_3sig(0.9996), "100");
        assert_eq!(percent_3sig(4.8e-47), "4.80e-45");
        assert_eq!(percent_3sig(0.0), "0");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.118, -50.04, 1.0 / 3.0, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
