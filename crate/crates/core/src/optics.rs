//! Tabulated optical data and the dielectric permittivity on the imaginary
//! frequency axis.
//!
//! All energies in this module are photon energies ħω in eV. The tabulated
//! modes evaluate the dispersion relation
//!
//! ```text
//! ε(iξ) = 1 + (2/π) ∫₀^∞ ω Im ε(ω) / (ω² + ξ²) dω
//! ```
//!
//! with `Im ε` taken from the table inside its range, the Drude form below
//! it and a power-law tail above it. The plasma variant replaces the
//! free-electron part by `ω_p²/ξ²` and keeps only the core-electron absorption
//! above `core_cutoff_ev`.

use std::f64::consts::FRAC_2_PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::quadrature::{Adaptive, QuadratureError};

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("optical table is empty")]
    EmptyTable,
    #[error("photon energies must be strictly increasing (duplicate or unordered energy {energy_ev} eV)")]
    NonMonotonicEnergy { energy_ev: f64 },
    #[error("photon energy must be positive, got {energy_ev} eV")]
    NonpositiveEnergy { energy_ev: f64 },
    #[error("Im ε must be nonnegative, got {im_eps} at {energy_ev} eV")]
    NegativeImEps { energy_ev: f64, im_eps: f64 },
    #[error("non-finite value in optical row at {energy_ev} eV")]
    NonFiniteValue { energy_ev: f64 },
    #[error("frequency must be positive, got {0} eV")]
    NonpositiveFrequency(f64),
    #[error("imaginary frequency ξ must be positive, got {0} eV")]
    NonpositiveXi(f64),
    #[error("invalid permittivity parameters: {0}")]
    InvalidSpec(String),
    #[error("Kramers-Kronig quadrature at ξ = {xi_ev} eV: {source}")]
    QuadratureNonConvergent {
        xi_ev: f64,
        #[source]
        source: QuadratureError,
    },
    #[error("optical table {path}: {message}")]
    Parse { path: String, message: String },
}

/// One row of an optical table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalPoint {
    pub omega_ev: f64,
    pub im_eps: f64,
}

/// Raw rows as they come out of a data file.
#[derive(Debug, Clone, PartialEq)]
pub enum RawOpticalRows {
    /// (energy eV, n, k)
    RefractiveIndex(Vec<(f64, f64, f64)>),
    /// (energy eV, Im ε)
    ImEps(Vec<(f64, f64)>),
}

/// Validated table of Im ε(ω), sorted by photon energy.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalTable {
    points: Vec<OpticalPoint>,
    source_label: String,
}

impl OpticalTable {
    pub fn points(&self) -> &[OpticalPoint] {
        &self.points
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn omega_min(&self) -> f64 {
        self.points[0].omega_ev
    }

    pub fn omega_max(&self) -> f64 {
        self.points[self.points.len() - 1].omega_ev
    }

    pub fn contains(&self, omega_ev: f64) -> bool {
        omega_ev >= self.omega_min() && omega_ev <= self.omega_max()
    }

    /// Interpolated Im ε inside the table range: linear in log ω / log Im ε,
    /// falling back to linear interpolation on segments touching Im ε = 0.
    pub fn interpolate(&self, omega_ev: f64) -> Option<f64> {
        if !self.contains(omega_ev) {
            return None;
        }
        let idx = self.points.partition_point(|p| p.omega_ev < omega_ev);
        if idx < self.points.len() && self.points[idx].omega_ev == omega_ev {
            return Some(self.points[idx].im_eps);
        }
        let lo = self.points[idx - 1];
        let hi = self.points[idx];
        Some(interpolate_segment(lo, hi, omega_ev))
    }
}

fn interpolate_segment(lo: OpticalPoint, hi: OpticalPoint, omega_ev: f64) -> f64 {
    if lo.im_eps > 0.0 && hi.im_eps > 0.0 {
        let s = (omega_ev / lo.omega_ev).ln() / (hi.omega_ev / lo.omega_ev).ln();
        (lo.im_eps.ln() + s * (hi.im_eps / lo.im_eps).ln()).exp()
    } else {
        let s = (omega_ev - lo.omega_ev) / (hi.omega_ev - lo.omega_ev);
        lo.im_eps + s * (hi.im_eps - lo.im_eps)
    }
}

/// Build a validated table. `(n, k)` rows are converted with Im ε = 2nk.
/// Rows may arrive in any order; equal energies are rejected.
pub fn load_optical_table(
    rows: RawOpticalRows,
    source_label: impl Into<String>,
) -> Result<OpticalTable, OpticsError> {
    let mut points: Vec<OpticalPoint> = match rows {
        RawOpticalRows::RefractiveIndex(rows) => rows
            .into_iter()
            .map(|(omega_ev, n, k)| OpticalPoint {
                omega_ev,
                im_eps: 2.0 * n * k,
            })
            .collect(),
        RawOpticalRows::ImEps(rows) => rows
            .into_iter()
            .map(|(omega_ev, im_eps)| OpticalPoint { omega_ev, im_eps })
            .collect(),
    };
    if points.is_empty() {
        return Err(OpticsError::EmptyTable);
    }
    for p in &points {
        if !(p.omega_ev.is_finite() && p.im_eps.is_finite()) {
            return Err(OpticsError::NonFiniteValue {
                energy_ev: p.omega_ev,
            });
        }
        if p.omega_ev <= 0.0 {
            return Err(OpticsError::NonpositiveEnergy {
                energy_ev: p.omega_ev,
            });
        }
        if p.im_eps < 0.0 {
            return Err(OpticsError::NegativeImEps {
                energy_ev: p.omega_ev,
                im_eps: p.im_eps,
            });
        }
    }
    points.sort_by(|a, b| a.omega_ev.total_cmp(&b.omega_ev));
    if let Some(w) = points.windows(2).find(|w| w[1].omega_ev <= w[0].omega_ev) {
        return Err(OpticsError::NonMonotonicEnergy {
            energy_ev: w[1].omega_ev,
        });
    }
    Ok(OpticalTable {
        points,
        source_label: source_label.into(),
    })
}

/// Parse a delimited optical table. The header names either
/// `energy_ev,n,k` or `energy_ev,im_eps`; lines starting with `#` are ignored.
pub fn parse_optical_table(text: &str, label: &str) -> Result<OpticalTable, OpticsError> {
    let parse_err = |message: String| OpticsError::Parse {
        path: label.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let nk = match header_refs.as_slice() {
        ["energy_ev", "n", "k"] => true,
        ["energy_ev", "im_eps"] => false,
        other => {
            return Err(parse_err(format!(
                "header must be `energy_ev,n,k` or `energy_ev,im_eps`, found `{}`",
                other.join(",")
            )))
        }
    };

    let mut nk_rows = Vec::new();
    let mut im_rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let values = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("row {}: cannot parse `{field}`", i + 1)))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match (nk, values.as_slice()) {
            (true, [e, n, k]) => nk_rows.push((*e, *n, *k)),
            (false, [e, im]) => im_rows.push((*e, *im)),
            _ => return Err(parse_err(format!("row {}: wrong number of columns", i + 1))),
        }
    }
    let rows = if nk {
        RawOpticalRows::RefractiveIndex(nk_rows)
    } else {
        RawOpticalRows::ImEps(im_rows)
    };
    load_optical_table(rows, label)
}

pub fn read_optical_table(path: &Path) -> Result<OpticalTable, OpticsError> {
    let text = std::fs::read_to_string(path).map_err(|e| OpticsError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_optical_table(&text, &path.display().to_string())
}

const GOLD_JOHNSON_CHRISTY: &str = include_str!("../data/au_johnson_christy.csv");

/// Built-in gold table: Johnson & Christy (1972) n, k from 1.39 to 6.6 eV.
pub fn gold_optical_table() -> OpticalTable {
    parse_optical_table(GOLD_JOHNSON_CHRISTY, "Au (Johnson & Christy 1972)")
        .expect("embedded gold table is valid")
}

/// Drude plasma frequency and relaxation parameter, both in eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    pub omega_p: f64,
    pub gamma: f64,
}

impl DrudeParams {
    /// Gold parameters that best fit the tabulated optical data.
    pub const GOLD: DrudeParams = DrudeParams {
        omega_p: 7.54,
        gamma: 0.051,
    };

    pub fn new(omega_p: f64, gamma: f64) -> Result<Self, OpticsError> {
        let p = DrudeParams { omega_p, gamma };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), OpticsError> {
        if !(self.omega_p.is_finite() && self.omega_p > 0.0) {
            return Err(OpticsError::InvalidSpec(format!(
                "omega_p must be positive, got {}",
                self.omega_p
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(OpticsError::InvalidSpec(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

impl Default for DrudeParams {
    fn default() -> Self {
        Self::GOLD
    }
}

/// Im ε(ω) = ω_p²γ / (ω(ω² + γ²)).
pub fn drude_im_eps(omega_ev: f64, p: DrudeParams) -> Result<f64, OpticsError> {
    if !(omega_ev > 0.0) {
        return Err(OpticsError::NonpositiveFrequency(omega_ev));
    }
    Ok(drude_im_eps_unchecked(omega_ev, p))
}

fn drude_im_eps_unchecked(omega_ev: f64, p: DrudeParams) -> f64 {
    p.omega_p * p.omega_p * p.gamma / (omega_ev * (omega_ev * omega_ev + p.gamma * p.gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PermittivityMode {
    TabulatedDrude,
    TabulatedPlasma,
    PureDrude,
    PurePlasma,
}

impl PermittivityMode {
    pub const ALL: [PermittivityMode; 4] = [
        PermittivityMode::TabulatedDrude,
        PermittivityMode::TabulatedPlasma,
        PermittivityMode::PureDrude,
        PermittivityMode::PurePlasma,
    ];

    pub fn is_tabulated(self) -> bool {
        matches!(self, Self::TabulatedDrude | Self::TabulatedPlasma)
    }

    /// Drude-type modes have a vanishing zero-frequency TE reflection.
    pub fn is_drude_like(self) -> bool {
        matches!(self, Self::TabulatedDrude | Self::PureDrude)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::TabulatedDrude => "tabulated_drude",
            Self::TabulatedPlasma => "tabulated_plasma",
            Self::PureDrude => "pure_drude",
            Self::PurePlasma => "pure_plasma",
        }
    }
}

impl fmt::Display for PermittivityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PermittivityMode {
    type Err = OpticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == normalized)
            .ok_or_else(|| OpticsError::InvalidSpec(format!("unknown permittivity mode `{s}`")))
    }
}

/// Behaviour of the dielectric response as ξ → 0, which fixes the
/// zero-frequency Matsubara term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroFrequencyLimit {
    /// ε ξ² → 0 (dissipative free electrons)
    Dissipative,
    /// ε ξ² → ω_p²
    Plasma { omega_p_ev: f64 },
}

pub const DEFAULT_CORE_CUTOFF_EV: f64 = 2.0;
pub const DEFAULT_TAIL_EXPONENT: f64 = 3.0;
pub const DEFAULT_KK_TOLERANCE: f64 = 1e-6;

/// Source of ε(iξ): one of the four modes plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivitySpec {
    mode: PermittivityMode,
    drude: DrudeParams,
    table: Option<OpticalTable>,
    core_cutoff_ev: f64,
    tail_exponent: f64,
    quad_tolerance: f64,
}

impl PermittivitySpec {
    pub fn pure_drude(drude: DrudeParams) -> Result<Self, OpticsError> {
        Self::new(PermittivityMode::PureDrude, drude, None)
    }

    pub fn pure_plasma(drude: DrudeParams) -> Result<Self, OpticsError> {
        Self::new(PermittivityMode::PurePlasma, drude, None)
    }

    pub fn tabulated_drude(drude: DrudeParams, table: OpticalTable) -> Result<Self, OpticsError> {
        Self::new(PermittivityMode::TabulatedDrude, drude, Some(table))
    }

    pub fn tabulated_plasma(drude: DrudeParams, table: OpticalTable) -> Result<Self, OpticsError> {
        Self::new(PermittivityMode::TabulatedPlasma, drude, Some(table))
    }

    /// Spec with default cutoff, tail exponent and quadrature tolerance.
    pub fn new(
        mode: PermittivityMode,
        drude: DrudeParams,
        table: Option<OpticalTable>,
    ) -> Result<Self, OpticsError> {
        Self::with_options(
            mode,
            drude,
            table,
            DEFAULT_CORE_CUTOFF_EV,
            DEFAULT_TAIL_EXPONENT,
            DEFAULT_KK_TOLERANCE,
        )
    }

    pub fn with_options(
        mode: PermittivityMode,
        drude: DrudeParams,
        table: Option<OpticalTable>,
        core_cutoff_ev: f64,
        tail_exponent: f64,
        quad_tolerance: f64,
    ) -> Result<Self, OpticsError> {
        drude.validate()?;
        if mode.is_tabulated() != table.is_some() {
            return Err(OpticsError::InvalidSpec(format!(
                "mode {mode} {} an optical table",
                if mode.is_tabulated() {
                    "requires"
                } else {
                    "does not take"
                }
            )));
        }
        if !(tail_exponent.is_finite() && tail_exponent > 0.0) {
            return Err(OpticsError::InvalidSpec(format!(
                "tail exponent must be positive, got {tail_exponent}"
            )));
        }
        if !(quad_tolerance > 0.0 && quad_tolerance <= 1e-2) {
            return Err(OpticsError::InvalidSpec(format!(
                "quadrature tolerance must lie in (0, 1e-2], got {quad_tolerance}"
            )));
        }
        if mode == PermittivityMode::TabulatedPlasma {
            let t = table.as_ref().expect("checked above");
            if !t.contains(core_cutoff_ev) {
                return Err(OpticsError::InvalidSpec(format!(
                    "core cutoff {core_cutoff_ev} eV outside table range [{}, {}] eV",
                    t.omega_min(),
                    t.omega_max()
                )));
            }
        }
        Ok(Self {
            mode,
            drude,
            table,
            core_cutoff_ev,
            tail_exponent,
            quad_tolerance,
        })
    }

    pub fn mode(&self) -> PermittivityMode {
        self.mode
    }

    pub fn drude(&self) -> DrudeParams {
        self.drude
    }

    pub fn table(&self) -> Option<&OpticalTable> {
        self.table.as_ref()
    }

    pub fn core_cutoff_ev(&self) -> f64 {
        self.core_cutoff_ev
    }

    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    pub fn quad_tolerance(&self) -> f64 {
        self.quad_tolerance
    }

    /// Same spec with a different Kramers-Kronig tolerance.
    pub fn with_quad_tolerance(&self, quad_tolerance: f64) -> Result<Self, OpticsError> {
        Self::with_options(
            self.mode,
            self.drude,
            self.table.clone(),
            self.core_cutoff_ev,
            self.tail_exponent,
            quad_tolerance,
        )
    }

    /// Same parameters and table under another mode. Switching to a pure
    /// mode drops the table.
    pub fn with_mode(&self, mode: PermittivityMode) -> Result<Self, OpticsError> {
        let table = if mode.is_tabulated() {
            self.table.clone()
        } else {
            None
        };
        Self::with_options(
            mode,
            self.drude,
            table,
            self.core_cutoff_ev,
            self.tail_exponent,
            self.quad_tolerance,
        )
    }

    pub fn zero_frequency_limit(&self) -> ZeroFrequencyLimit {
        if self.mode.is_drude_like() {
            ZeroFrequencyLimit::Dissipative
        } else {
            ZeroFrequencyLimit::Plasma {
                omega_p_ev: self.drude.omega_p,
            }
        }
    }

    /// Im ε used in the dispersion integral: Drude below the table, the
    /// interpolated table inside it, and `Im(ω_max)·(ω_max/ω)^p` above it.
    /// `None` for the pure modes.
    pub fn effective_im_eps(&self, omega_ev: f64) -> Option<f64> {
        let table = self.table.as_ref()?;
        if omega_ev < table.omega_min() {
            Some(drude_im_eps_unchecked(omega_ev, self.drude))
        } else if omega_ev > table.omega_max() {
            let top = table.points[table.points.len() - 1];
            Some(top.im_eps * (top.omega_ev / omega_ev).powf(self.tail_exponent))
        } else {
            table.interpolate(omega_ev)
        }
    }

    /// ε(iξ) for ξ > 0 (eV).
    pub fn eps(&self, xi_ev: f64) -> Result<f64, OpticsError> {
        eps_imag_axis(xi_ev, self)
    }
}

/// Dielectric permittivity at imaginary frequency ξ (eV).
pub fn eps_imag_axis(xi_ev: f64, spec: &PermittivitySpec) -> Result<f64, OpticsError> {
    if !(xi_ev > 0.0 && xi_ev.is_finite()) {
        return Err(OpticsError::NonpositiveXi(xi_ev));
    }
    let p = spec.drude;
    match spec.mode {
        PermittivityMode::PureDrude => {
            Ok(1.0 + p.omega_p * p.omega_p / (xi_ev * (xi_ev + p.gamma)))
        }
        PermittivityMode::PurePlasma => Ok(1.0 + (p.omega_p / xi_ev).powi(2)),
        PermittivityMode::TabulatedDrude => {
            let integral = dispersion_integral(spec, xi_ev, 0.0)?;
            Ok(1.0 + FRAC_2_PI * integral)
        }
        PermittivityMode::TabulatedPlasma => {
            let integral = dispersion_integral(spec, xi_ev, spec.core_cutoff_ev)?;
            Ok(1.0 + (p.omega_p / xi_ev).powi(2) + FRAC_2_PI * integral)
        }
    }
}

/// ∫_{lower}^∞ ω ImEff(ω)/(ω²+ξ²) dω, split into the Drude region, the table
/// range (one initial panel per table interval) and the tail mapped onto
/// t = ω_max/ω ∈ (0, 1].
fn dispersion_integral(spec: &PermittivitySpec, xi: f64, lower: f64) -> Result<f64, OpticsError> {
    let table = spec.table.as_ref().expect("tabulated mode has a table");
    let quad = Adaptive::with_rel_tol(spec.quad_tolerance);
    let wrap = |source| OpticsError::QuadratureNonConvergent { xi_ev: xi, source };
    let xi2 = xi * xi;
    let w_min = table.omega_min();
    let w_max = table.omega_max();

    let mut total = crate::quadrature::CompensatedSum::new();

    if lower < w_min {
        let p = spec.drude;
        // ω·Im ε_Drude = ω_p²γ/(ω²+γ²), finite at ω = 0.
        let wp2g = p.omega_p * p.omega_p * p.gamma;
        let integrand = |w: f64| wp2g / ((w * w + p.gamma * p.gamma) * (w * w + xi2));
        let mut breaks = vec![lower];
        for scale in [p.gamma, xi] {
            for m in [0.1, 1.0, 10.0] {
                let b = scale * m;
                if b > lower && b < w_min {
                    breaks.push(b);
                }
            }
        }
        breaks.push(w_min);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        if wp2g > 0.0 {
            total.add(quad.integrate(integrand, &breaks).map_err(wrap)?.value);
        }
    }

    if table.points.len() > 1 {
        let start = lower.max(w_min);
        let mut breaks: Vec<f64> = std::iter::once(start)
            .chain(
                table
                    .points
                    .iter()
                    .map(|p| p.omega_ev)
                    .filter(|&w| w > start),
            )
            .collect();
        breaks.dedup();
        if breaks.len() > 1 {
            let pts = &table.points;
            let integrand = |w: f64| {
                let idx = pts
                    .partition_point(|p| p.omega_ev < w)
                    .clamp(1, pts.len() - 1);
                w * interpolate_segment(pts[idx - 1], pts[idx], w) / (w * w + xi2)
            };
            total.add(quad.integrate(integrand, &breaks).map_err(wrap)?.value);
        }
    }

    let top = table.points[table.points.len() - 1];
    if top.im_eps > 0.0 {
        let p_exp = spec.tail_exponent;
        let wm2 = w_max * w_max;
        let integrand = |t: f64| top.im_eps * wm2 * t.powf(p_exp - 1.0) / (wm2 + xi2 * t * t);
        let mut breaks = vec![0.0];
        let knee = w_max / xi;
        for b in [0.1 * knee, knee] {
            if b > 0.0 && b < 1.0 {
                breaks.push(b);
            }
        }
        breaks.push(1.0);
        total.add(quad.integrate(integrand, &breaks).map_err(wrap)?.value);
    }

    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Synthetic table sampling the analytic Drude Im ε on a log grid.
    fn drude_table(lo: f64, hi: f64, n: usize) -> OpticalTable {
        let p = DrudeParams::GOLD;
        let rows = (0..n)
            .map(|i| {
                let w = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
                let im = p.omega_p * p.omega_p * p.gamma / (w * (w * w + p.gamma * p.gamma));
                (w, im)
            })
            .collect();
        load_optical_table(RawOpticalRows::ImEps(rows), "synthetic drude").unwrap()
    }

    #[test]
    fn nk_rows_convert_to_im_eps() {
        let t = load_optical_table(RawOpticalRows::RefractiveIndex(vec![(1.0, 0.2, 5.0)]), "x")
            .unwrap();
        assert_eq!(t.points().len(), 1);
        assert_relative_eq!(t.points()[0].im_eps, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn duplicate_energy_rejected() {
        let err = load_optical_table(
            RawOpticalRows::ImEps(vec![(1.0, 1.0), (2.0, 0.5), (2.0, 0.4)]),
            "dup",
        )
        .unwrap_err();
        assert!(matches!(err, OpticsError::NonMonotonicEnergy { energy_ev } if energy_ev == 2.0));
    }

    #[test]
    fn invalid_rows_rejected() {
        assert!(matches!(
            load_optical_table(RawOpticalRows::ImEps(vec![]), "e"),
            Err(OpticsError::EmptyTable)
        ));
        assert!(matches!(
            load_optical_table(RawOpticalRows::ImEps(vec![(1.0, -0.1)]), "e"),
            Err(OpticsError::NegativeImEps { .. })
        ));
        assert!(matches!(
            load_optical_table(RawOpticalRows::ImEps(vec![(0.0, 1.0)]), "e"),
            Err(OpticsError::NonpositiveEnergy { .. })
        ));
        assert!(matches!(
            load_optical_table(
                RawOpticalRows::RefractiveIndex(vec![(1.0, f64::NAN, 1.0)]),
                "e"
            ),
            Err(OpticsError::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let t = load_optical_table(
            RawOpticalRows::ImEps(vec![(3.0, 1.0), (1.0, 2.0), (2.0, 0.0)]),
            "u",
        )
        .unwrap();
        let e: Vec<f64> = t.points().iter().map(|p| p.omega_ev).collect();
        assert_eq!(e, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn synthetic_drude_table_passes_invariants() {
        let p = DrudeParams::GOLD;
        let t = drude_table(1e-4, 1e4, 200);
        assert_eq!(t.points().len(), 200);
        for w in t.points().windows(2) {
            assert!(w[1].omega_ev > w[0].omega_ev);
        }
        for pt in t.points() {
            let direct = p.omega_p * p.omega_p * p.gamma
                / (pt.omega_ev * (pt.omega_ev.powi(2) + p.gamma.powi(2)));
            assert_eq!(pt.im_eps, direct);
            assert!(pt.im_eps >= 0.0);
        }
    }

    #[test]
    fn log_log_interpolation_is_exact_for_power_laws() {
        let rows = vec![(1.0, 4.0), (10.0, 0.04)];
        let t = load_optical_table(RawOpticalRows::ImEps(rows), "pow").unwrap();
        // Im = 4 ω^-2
        assert_relative_eq!(t.interpolate(3.0).unwrap(), 4.0 / 9.0, max_relative = 1e-13);
        assert_eq!(t.interpolate(0.5), None);
    }

    #[test]
    fn zero_im_eps_segment_interpolates_linearly() {
        let t =
            load_optical_table(RawOpticalRows::ImEps(vec![(1.0, 0.0), (3.0, 2.0)]), "z").unwrap();
        assert_relative_eq!(t.interpolate(2.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn drude_im_eps_values() {
        let p = DrudeParams::GOLD;
        let wp2 = 7.54f64 * 7.54;
        assert_relative_eq!(
            drude_im_eps(0.051, p).unwrap(),
            wp2 / (2.0 * 0.051 * 0.051),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            drude_im_eps(0.051, p).unwrap(),
            10929.7,
            max_relative = 1e-4
        );
        assert_relative_eq!(
            drude_im_eps(1.0, p).unwrap(),
            wp2 * 0.051 / (1.0 + 0.051 * 0.051),
            max_relative = 1e-14
        );
        assert_relative_eq!(drude_im_eps(1.0, p).unwrap(), 2.8918, max_relative = 1e-4);
        assert!(matches!(
            drude_im_eps(0.0, p),
            Err(OpticsError::NonpositiveFrequency(_))
        ));
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let v = drude_im_eps(10f64.powf(-2.0 + 0.2 * i as f64), p).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-10);
    }

    #[test]
    fn pure_mode_values() {
        let drude = PermittivitySpec::pure_drude(DrudeParams::GOLD).unwrap();
        let expected = 1.0 + 7.54f64.powi(2) / (0.1624 * (0.1624 + 0.051));
        assert_relative_eq!(drude.eps(0.1624).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(drude.eps(0.1624).unwrap(), 1641.4, max_relative = 1e-4);
        let plasma = PermittivitySpec::pure_plasma(DrudeParams::GOLD).unwrap();
        assert_eq!(plasma.eps(7.54).unwrap(), 2.0);
        assert!(matches!(
            plasma.eps(0.0),
            Err(OpticsError::NonpositiveXi(_))
        ));
        assert!(matches!(
            plasma.eps(-1.0),
            Err(OpticsError::NonpositiveXi(_))
        ));
    }

    #[test]
    fn kramers_kronig_round_trip_at_one_ev() {
        let spec =
            PermittivitySpec::tabulated_drude(DrudeParams::GOLD, drude_table(1e-4, 1e4, 200))
                .unwrap();
        let eps = spec.eps(1.0).unwrap();
        let exact = 1.0 + 7.54f64.powi(2) / 1.051;
        assert_relative_eq!(exact, 55.09, max_relative = 1e-4);
        assert!(
            (eps / exact - 1.0).abs() < 5e-3,
            "eps = {eps}, exact = {exact}"
        );
    }

    #[test]
    fn spec_invariants_enforced() {
        let t = drude_table(0.5, 10.0, 20);
        assert!(
            PermittivitySpec::new(PermittivityMode::TabulatedDrude, DrudeParams::GOLD, None)
                .is_err()
        );
        assert!(PermittivitySpec::new(
            PermittivityMode::PureDrude,
            DrudeParams::GOLD,
            Some(t.clone())
        )
        .is_err());
        assert!(PermittivitySpec::with_options(
            PermittivityMode::TabulatedPlasma,
            DrudeParams::GOLD,
            Some(t.clone()),
            20.0,
            3.0,
            1e-6
        )
        .is_err());
        assert!(PermittivitySpec::with_options(
            PermittivityMode::TabulatedPlasma,
            DrudeParams::GOLD,
            Some(t.clone()),
            2.0,
            0.0,
            1e-6
        )
        .is_err());
        assert!(PermittivitySpec::with_options(
            PermittivityMode::TabulatedDrude,
            DrudeParams::GOLD,
            Some(t),
            2.0,
            3.0,
            0.1
        )
        .is_err());
        assert!(DrudeParams::new(0.0, 0.1).is_err());
        assert!(DrudeParams::new(1.0, -0.1).is_err());
    }

    #[test]
    fn tail_is_continuous_at_table_top() {
        let t = drude_table(0.5, 10.0, 20);
        let top = t.points()[19];
        let spec = PermittivitySpec::tabulated_drude(DrudeParams::GOLD, t).unwrap();
        let below = spec.effective_im_eps(top.omega_ev).unwrap();
        let above = spec.effective_im_eps(top.omega_ev * (1.0 + 1e-12)).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-10);
        assert_relative_eq!(
            spec.effective_im_eps(2.0 * top.omega_ev).unwrap(),
            top.im_eps / 8.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn parse_both_header_forms() {
        let nk = "# gold\nenergy_ev,n,k\n2.0, 0.3, 3.0\n1.0,0.2,5.0\n";
        let t = parse_optical_table(nk, "nk").unwrap();
        assert_eq!(t.points()[0].omega_ev, 1.0);
        assert_relative_eq!(t.points()[1].im_eps, 1.8, epsilon = 1e-15);
        let im = "energy_ev,im_eps\n# comment\n1.0,2.0\n";
        assert_eq!(
            parse_optical_table(im, "im").unwrap().points()[0].im_eps,
            2.0
        );
        assert!(matches!(
            parse_optical_table("e,n\n1,2\n", "bad"),
            Err(OpticsError::Parse { .. })
        ));
        assert!(matches!(
            parse_optical_table("energy_ev,im_eps\n1,x\n", "bad"),
            Err(OpticsError::Parse { .. })
        ));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in PermittivityMode::ALL {
            assert_eq!(m.as_str().parse::<PermittivityMode>().unwrap(), m);
        }
        assert!("drude".parse::<PermittivityMode>().is_err());
    }
}
