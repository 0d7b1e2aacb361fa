//! From plate-plate Lifshitz results to the sphere-membrane frequency shift.
//!
//! The proximity force approximation gives the sphere force
//! `F_sp(z) = 2πR F_pp(z)` and its gradient `G(z) = dF_sp/dz = −2πR P_pp(z)`.
//! The oscillator frequency shift is `Δf = −(f0/2κ)·⟨G⟩`, where `⟨·⟩` averages
//! over surface-height offsets and, in exact mode, over one period of the
//! vibration `z + √2·A_rms·cos θ`.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use thiserror::Error;

use crate::lifshitz::{LifshitzError, LifshitzSettings, PlateSolver};
use crate::optics::{PermittivityMode, PermittivitySpec};
use crate::quadrature::compensated_sum;

#[derive(Debug, Error)]
pub enum ShiftError {
    #[error("separation must be positive, got {0:e} m")]
    SeparationNonpositive(f64),
    #[error(
        "vibration amplitude and roughness reach the surface: z = {z:e} m needs z > {limit:e} m"
    )]
    AmplitudeExceedsSeparation { z: f64, limit: f64 },
    #[error("invalid oscillator geometry: {0}")]
    InvalidGeometry(String),
    #[error("separation grid must be strictly increasing (at {0:e} m)")]
    InvalidGrid(f64),
    #[error("oscillation average at z = {z:e} m did not reach tolerance {tolerance:e} with {nodes} nodes")]
    AveragingNonConvergent {
        z: f64,
        tolerance: f64,
        nodes: usize,
    },
    #[error("unknown {kind} `{value}`")]
    UnknownOption { kind: &'static str, value: String },
    #[error(transparent)]
    Lifshitz(#[from] LifshitzError),
}

/// One bin of a surface-height distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughnessBin {
    /// Height offset added to the separation (m).
    pub height: f64,
    pub weight: f64,
}

/// Discrete distribution of separation offsets. Empty means smooth surfaces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Roughness {
    bins: Vec<RoughnessBin>,
}

impl Roughness {
    pub fn smooth() -> Self {
        Self::default()
    }

    pub fn new(bins: Vec<RoughnessBin>) -> Result<Self, ShiftError> {
        if bins.is_empty() {
            return Ok(Self::smooth());
        }
        for b in &bins {
            if !b.height.is_finite() || !b.weight.is_finite() || b.weight < 0.0 {
                return Err(ShiftError::InvalidGeometry(format!(
                    "roughness bin (h = {:e} m, w = {}) is not a valid weight",
                    b.height, b.weight
                )));
            }
        }
        let total = compensated_sum(bins.iter().map(|b| b.weight));
        if (total - 1.0).abs() > 1e-12 {
            return Err(ShiftError::InvalidGeometry(format!(
                "roughness weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { bins })
    }

    /// Equal-weight two-level distribution ±h.
    pub fn symmetric_pair(h: f64) -> Result<Self, ShiftError> {
        Self::new(vec![
            RoughnessBin {
                height: -h,
                weight: 0.5,
            },
            RoughnessBin {
                height: h,
                weight: 0.5,
            },
        ])
    }

    pub fn bins(&self) -> &[RoughnessBin] {
        &self.bins
    }

    pub fn is_smooth(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn max_abs_height(&self) -> f64 {
        self.bins.iter().map(|b| b.height.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorGeometry {
    /// Sphere radius R (m).
    pub sphere_radius: f64,
    /// Resonance frequency f0 (Hz).
    pub resonance_frequency: f64,
    /// Effective spring constant κ (N/m).
    pub spring_constant: f64,
    /// r.m.s. vibration amplitude (m).
    pub a_rms: f64,
    pub roughness: Roughness,
}

impl OscillatorGeometry {
    pub fn new(
        sphere_radius: f64,
        resonance_frequency: f64,
        spring_constant: f64,
        a_rms: f64,
        roughness: Roughness,
    ) -> Result<Self, ShiftError> {
        let g = Self {
            sphere_radius,
            resonance_frequency,
            spring_constant,
            a_rms,
            roughness,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ShiftError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ShiftError::InvalidGeometry(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("sphere radius", self.sphere_radius)?;
        positive("resonance frequency", self.resonance_frequency)?;
        positive("spring constant", self.spring_constant)?;
        if !(self.a_rms.is_finite() && self.a_rms >= 0.0) {
            return Err(ShiftError::InvalidGeometry(format!(
                "a_rms must be nonnegative, got {}",
                self.a_rms
            )));
        }
        Ok(())
    }

    /// Peak vibration amplitude √2·A_rms.
    pub fn peak_amplitude(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.a_rms
    }

    /// Separations at or below this value let the surfaces touch.
    pub fn min_valid_separation(&self) -> f64 {
        self.peak_amplitude() + self.roughness.max_abs_height()
    }

    /// −f0/(2κ), converting a force gradient (N/m) into a frequency shift (Hz).
    pub fn shift_per_gradient(&self) -> f64 {
        -self.resonance_frequency / (2.0 * self.spring_constant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Averaging {
    /// Full average over one vibration period.
    Exact,
    /// Gradient at the mean separation only.
    FirstTerm,
}

impl Averaging {
    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::Exact => "exact",
            Averaging::FirstTerm => "first_term",
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Averaging {
    type Err = ShiftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "exact" => Ok(Averaging::Exact),
            "first_term" => Ok(Averaging::FirstTerm),
            _ => Err(ShiftError::UnknownOption {
                kind: "averaging",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VibrationFactor {
    /// √(1 + A²/z²)
    Eta,
    /// √(1 + 3A²/(2z²))
    EtaCorr,
}

impl VibrationFactor {
    fn coefficient(self) -> f64 {
        match self {
            VibrationFactor::Eta => 1.0,
            VibrationFactor::EtaCorr => 1.5,
        }
    }
}

impl FromStr for VibrationFactor {
    type Err = ShiftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eta" => Ok(VibrationFactor::Eta),
            "eta_corr" => Ok(VibrationFactor::EtaCorr),
            _ => Err(ShiftError::UnknownOption {
                kind: "vibration factor",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionDirection {
    Multiply,
    Divide,
}

impl FromStr for CorrectionDirection {
    type Err = ShiftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "multiply" => Ok(CorrectionDirection::Multiply),
            "divide" => Ok(CorrectionDirection::Divide),
            _ => Err(ShiftError::UnknownOption {
                kind: "correction direction",
                value: s.to_string(),
            }),
        }
    }
}

fn check_separation(z: f64) -> Result<(), ShiftError> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(ShiftError::SeparationNonpositive(z))
    }
}

fn check_pfa(z: f64, radius: f64) -> Result<(), ShiftError> {
    check_separation(z)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ShiftError::InvalidGeometry(format!(
            "sphere radius must be positive, got {radius}"
        )));
    }
    if radius / z <= 100.0 {
        warn!("PFA used outside R ≫ z: R/z = {:.1}", radius / z);
    }
    Ok(())
}

/// Sphere-plate force `2πR·F_pp(z)` (N).
pub fn pfa_force<F>(z: f64, plate_free_energy: F, radius: f64) -> Result<f64, ShiftError>
where
    F: Fn(f64) -> Result<f64, ShiftError>,
{
    check_pfa(z, radius)?;
    Ok(2.0 * std::f64::consts::PI * radius * plate_free_energy(z)?)
}

/// Sphere-plate force gradient `dF_sp/dz = −2πR·P_pp(z)` (N/m); positive for
/// an attractive pressure.
pub fn pfa_gradient<F>(z: f64, plate_pressure: F, radius: f64) -> Result<f64, ShiftError>
where
    F: Fn(f64) -> Result<f64, ShiftError>,
{
    check_pfa(z, radius)?;
    Ok(-2.0 * std::f64::consts::PI * radius * plate_pressure(z)?)
}

pub fn eta(z: f64, a_rms: f64) -> Result<f64, ShiftError> {
    vibration_factor(z, a_rms, VibrationFactor::Eta)
}

pub fn eta_corr(z: f64, a_rms: f64) -> Result<f64, ShiftError> {
    vibration_factor(z, a_rms, VibrationFactor::EtaCorr)
}

pub fn vibration_factor(z: f64, a_rms: f64, which: VibrationFactor) -> Result<f64, ShiftError> {
    check_separation(z)?;
    let r = a_rms / z;
    Ok((1.0 + which.coefficient() * r * r).sqrt())
}

/// Separation correction by η or η_corr.
///
/// `Multiply` returns `z·factor(z)`. `Divide` is its exact inverse: the
/// separation `s` with `s·factor(s) = z`, i.e. `√(z² − cA²)`.
pub fn apply_separation_correction(
    z_raw: f64,
    a_rms: f64,
    which: VibrationFactor,
    direction: CorrectionDirection,
) -> Result<f64, ShiftError> {
    check_separation(z_raw)?;
    let c = which.coefficient() * a_rms * a_rms;
    match direction {
        CorrectionDirection::Multiply => Ok(z_raw * vibration_factor(z_raw, a_rms, which)?),
        CorrectionDirection::Divide => {
            let s2 = z_raw * z_raw - c;
            if s2 <= 0.0 {
                return Err(ShiftError::AmplitudeExceedsSeparation {
                    z: z_raw,
                    limit: c.sqrt(),
                });
            }
            Ok(s2.sqrt())
        }
    }
}

/// Σ wᵢ f(z + hᵢ); the unmodified `f(z)` for smooth surfaces.
pub fn rough_average<F>(f: F, z: f64, roughness: &Roughness) -> Result<f64, ShiftError>
where
    F: Fn(f64) -> Result<f64, ShiftError>,
{
    if roughness.is_smooth() {
        check_separation(z)?;
        return f(z);
    }
    let mut values = Vec::with_capacity(roughness.bins.len());
    for b in &roughness.bins {
        let zi = z + b.height;
        check_separation(zi)?;
        values.push(b.weight * f(zi)?);
    }
    Ok(compensated_sum(values))
}

pub const OSCILLATION_TOLERANCE: f64 = 1e-6;
const MAX_OSCILLATION_INTERVALS: usize = 1 << 12;

/// (1/2π)∫₀^{2π} g(z + A cos θ) dθ by the trapezoid rule on [0, π], doubling
/// the node count until successive estimates agree to `rel_tol`.
pub fn oscillation_average<F>(g: F, z: f64, amplitude: f64, rel_tol: f64) -> Result<f64, ShiftError>
where
    F: Fn(f64) -> Result<f64, ShiftError>,
{
    if amplitude == 0.0 {
        return g(z);
    }
    let node =
        |j: usize, n: usize| z + amplitude * (std::f64::consts::PI * j as f64 / n as f64).cos();

    let mut n = 4;
    let ends = 0.5 * (g(node(0, n))? + g(node(n, n))?);
    let mut interior: Vec<f64> = (1..n).map(|j| g(node(j, n))).collect::<Result<_, _>>()?;
    let mut estimate = (ends + compensated_sum(interior.iter().copied())) / n as f64;
    while n < MAX_OSCILLATION_INTERVALS {
        let m = 2 * n;
        for j in (1..m).step_by(2) {
            interior.push(g(node(j, m))?);
        }
        n = m;
        let next = (ends + compensated_sum(interior.iter().copied())) / n as f64;
        let converged = (next - estimate).abs() <= rel_tol * next.abs();
        estimate = next;
        if converged && n >= 16 {
            return Ok(estimate);
        }
    }
    Err(ShiftError::AveragingNonConvergent {
        z,
        tolerance: rel_tol,
        nodes: n + 1,
    })
}

/// Δf = −(f0/2κ)·⟨G⟩ with G rough-averaged and, in exact mode, averaged over
/// the vibration.
pub fn frequency_shift<F>(
    z: f64,
    force_gradient: F,
    geom: &OscillatorGeometry,
    averaging: Averaging,
) -> Result<f64, ShiftError>
where
    F: Fn(f64) -> Result<f64, ShiftError>,
{
    check_separation(z)?;
    let limit = geom.min_valid_separation();
    if z <= limit {
        return Err(ShiftError::AmplitudeExceedsSeparation { z, limit });
    }
    let rough = |s: f64| rough_average(&force_gradient, s, &geom.roughness);
    let mean_gradient = match averaging {
        Averaging::FirstTerm => rough(z)?,
        Averaging::Exact => {
            oscillation_average(rough, z, geom.peak_amplitude(), OSCILLATION_TOLERANCE)?
        }
    };
    Ok(geom.shift_per_gradient() * mean_gradient)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyShiftPoint {
    /// Separation (m).
    pub z: f64,
    /// Frequency shift (Hz).
    pub delta_f: f64,
    /// z·Δf (Hz·m).
    pub z_delta_f: f64,
}

impl FrequencyShiftPoint {
    pub fn new(z: f64, delta_f: f64) -> Self {
        Self {
            z,
            delta_f,
            z_delta_f: z * delta_f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyShiftCurve {
    pub points: Vec<FrequencyShiftPoint>,
    pub model_tag: Option<PermittivityMode>,
    pub averaging: Averaging,
}

impl FrequencyShiftCurve {
    /// Build a curve from (z, Δf) pairs with z strictly increasing.
    pub fn from_points(
        points: Vec<(f64, f64)>,
        model_tag: Option<PermittivityMode>,
        averaging: Averaging,
    ) -> Result<Self, ShiftError> {
        if let Some(w) = points.windows(2).find(|w| !(w[1].0 > w[0].0)) {
            return Err(ShiftError::InvalidGrid(w[1].0));
        }
        Ok(Self {
            points: points
                .into_iter()
                .map(|(z, df)| FrequencyShiftPoint::new(z, df))
                .collect(),
            model_tag,
            averaging,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Plate solver plus oscillator: the full chain from ε(iξ) to Δf(z).
#[derive(Debug, Clone)]
pub struct ShiftModel {
    solver: PlateSolver,
    geometry: OscillatorGeometry,
}

impl ShiftModel {
    pub fn new(
        spec: PermittivitySpec,
        settings: LifshitzSettings,
        geometry: OscillatorGeometry,
    ) -> Result<Self, ShiftError> {
        geometry.validate()?;
        Ok(Self {
            solver: PlateSolver::new(spec, settings)?,
            geometry,
        })
    }

    pub fn solver(&self) -> &PlateSolver {
        &self.solver
    }

    pub fn geometry(&self) -> &OscillatorGeometry {
        &self.geometry
    }

    /// Smooth-surface PFA gradient at separation z (N/m).
    pub fn force_gradient(&self, z: f64) -> Result<f64, ShiftError> {
        pfa_gradient(
            z,
            |a| Ok(self.solver.pressure(a)?),
            self.geometry.sphere_radius,
        )
    }

    pub fn frequency_shift(&self, z: f64, averaging: Averaging) -> Result<f64, ShiftError> {
        frequency_shift(z, |s| self.force_gradient(s), &self.geometry, averaging)
    }

    /// Δf on a strictly increasing grid; points are evaluated in parallel and
    /// collected in grid order.
    pub fn curve(
        &self,
        z_grid: &[f64],
        averaging: Averaging,
    ) -> Result<FrequencyShiftCurve, ShiftError> {
        if let Some(w) = z_grid.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(ShiftError::InvalidGrid(w[1]));
        }
        let limit = self.geometry.min_valid_separation();
        if let Some(&z) = z_grid.iter().find(|&&z| z <= limit) {
            check_separation(z)?;
            return Err(ShiftError::AmplitudeExceedsSeparation { z, limit });
        }
        let shifts: Vec<f64> = z_grid
            .par_iter()
            .map(|&z| self.frequency_shift(z, averaging))
            .collect::<Result<_, _>>()?;
        Ok(FrequencyShiftCurve {
            points: z_grid
                .iter()
                .zip(shifts)
                .map(|(&z, df)| FrequencyShiftPoint::new(z, df))
                .collect(),
            model_tag: Some(self.solver.spec().mode()),
            averaging,
        })
    }
}

/// Frequency-shift curve for one permittivity model.
pub fn theory_curve(
    z_grid: &[f64],
    spec: &PermittivitySpec,
    settings: &LifshitzSettings,
    geom: &OscillatorGeometry,
    averaging: Averaging,
) -> Result<FrequencyShiftCurve, ShiftError> {
    ShiftModel::new(spec.clone(), *settings, geom.clone())?.curve(z_grid, averaging)
}
