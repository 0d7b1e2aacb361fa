//! χ² comparison of a theory curve against measured frequency shifts.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::quadrature::compensated_sum;
use crate::sphere_plate::FrequencyShiftCurve;
use crate::units::METERS_PER_UM;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("degrees of freedom must be at least 1 (got {0})")]
    InvalidDof(i64),
    #[error("chi-squared must be finite and nonnegative, got {0}")]
    InvalidChi2(f64),
    #[error("incomplete gamma arguments out of domain: a = {a}, x = {x}")]
    Domain { a: f64, x: f64 },
    #[error("incomplete gamma did not converge for a = {a}, x = {x}")]
    NonConvergent { a: f64, x: f64 },
    #[error("theory curve does not cover z = {z:e} m (curve range [{min:e}, {max:e}] m)")]
    CurveRangeMismatch { z: f64, min: f64, max: f64 },
    #[error("combined sigma mode needs sigma_z for every point (missing at z = {z:e} m)")]
    MissingSigmaZ { z: f64 },
    #[error("combined sigma mode needs at least two theory points for the slope")]
    CurveTooShort,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("dataset {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unknown sigma mode `{0}`")]
    UnknownSigmaMode(String),
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const MAX_ITER: usize = 1000;

/// Regularized lower and upper incomplete gamma (P, Q). The smaller of the
/// two is computed directly (series for x < a + 1, Lentz continued fraction
/// otherwise) and the other as its complement.
pub fn incomplete_gamma_pq(a: f64, x: f64) -> Result<(f64, f64), StatsError> {
    if !(a > 0.0 && a.is_finite()) || !(x >= 0.0) || x.is_nan() {
        return Err(StatsError::Domain { a, x });
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * f64::EPSILON {
                let p = (log_prefactor.exp() * sum).min(1.0);
                return Ok((p, 1.0 - p));
            }
        }
        Err(StatsError::NonConvergent { a, x })
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < f64::EPSILON {
                let q = (log_prefactor.exp() * h).min(1.0);
                return Ok((1.0 - q, q));
            }
        }
        Err(StatsError::NonConvergent { a, x })
    }
}

pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64, StatsError> {
    Ok(incomplete_gamma_pq(a, x)?.0)
}

pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64, StatsError> {
    Ok(incomplete_gamma_pq(a, x)?.1)
}

/// Probability that a χ² variable with `dof` degrees of freedom exceeds `chi2`.
pub fn chi2_survival(chi2: f64, dof: usize) -> Result<f64, StatsError> {
    if dof < 1 {
        return Err(StatsError::InvalidDof(dof as i64));
    }
    if !(chi2 >= 0.0 && chi2.is_finite()) {
        return Err(StatsError::InvalidChi2(chi2));
    }
    regularized_gamma_q(0.5 * dof as f64, 0.5 * chi2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// σ_eff = σ_f
    FOnly,
    /// σ_eff² = σ_f² + (dΔf/dz)² σ_z²
    Combined,
}

impl SigmaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SigmaMode::FOnly => "f_only",
            SigmaMode::Combined => "combined",
        }
    }
}

impl fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SigmaMode {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f_only" => Ok(SigmaMode::FOnly),
            "combined" => Ok(SigmaMode::Combined),
            _ => Err(StatsError::UnknownSigmaMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPoint {
    /// Separation (m).
    pub z: f64,
    /// Measured frequency shift (Hz).
    pub delta_f: f64,
    /// Frequency-shift error (Hz).
    pub sigma_f: f64,
    /// Separation error (m).
    pub sigma_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDataset {
    points: Vec<MeasurementPoint>,
    label: String,
}

impl MeasurementDataset {
    pub fn new(
        points: Vec<MeasurementPoint>,
        label: impl Into<String>,
    ) -> Result<Self, StatsError> {
        for p in &points {
            if !(p.z.is_finite() && p.z > 0.0) {
                return Err(StatsError::InvalidDataset(format!(
                    "z must be positive, got {:e} m",
                    p.z
                )));
            }
            if !p.delta_f.is_finite() {
                return Err(StatsError::InvalidDataset(format!(
                    "non-finite Δf at z = {:e} m",
                    p.z
                )));
            }
            if !(p.sigma_f.is_finite() && p.sigma_f > 0.0) {
                return Err(StatsError::InvalidDataset(format!(
                    "sigma_f must be positive, got {} at z = {:e} m",
                    p.sigma_f, p.z
                )));
            }
            if let Some(sz) = p.sigma_z {
                if !(sz.is_finite() && sz >= 0.0) {
                    return Err(StatsError::InvalidDataset(format!(
                        "invalid sigma_z {sz} at z = {:e} m",
                        p.z
                    )));
                }
            }
        }
        if let Some(w) = points.windows(2).find(|w| !(w[1].z > w[0].z)) {
            return Err(StatsError::InvalidDataset(format!(
                "z must be strictly increasing (at {:e} m)",
                w[1].z
            )));
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[MeasurementPoint] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same dataset with every separation mapped through `f`.
    pub fn map_separations<E>(&self, f: impl Fn(f64) -> Result<f64, E>) -> Result<Self, E>
    where
        E: From<StatsError>,
    {
        let points = self
            .points
            .iter()
            .map(|p| Ok(MeasurementPoint { z: f(p.z)?, ..*p }))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(Self::new(points, self.label.clone())?)
    }
}

/// Parse `z_um,delta_f_hz,sigma_f_hz[,sigma_z_um]` rows; `#` lines are comments.
pub fn parse_dataset(text: &str, label: &str) -> Result<MeasurementDataset, StatsError> {
    let parse_err = |message: String| StatsError::Parse {
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
    let with_sigma_z = match headers
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["z_um", "delta_f_hz", "sigma_f_hz"] => false,
        ["z_um", "delta_f_hz", "sigma_f_hz", "sigma_z_um"] => true,
        other => {
            return Err(parse_err(format!(
                "header must be `z_um,delta_f_hz,sigma_f_hz[,sigma_z_um]`, found `{}`",
                other.join(",")
            )))
        }
    };
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let v = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(format!("row {}: cannot parse `{f}`", i + 1)))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let point = match (with_sigma_z, v.as_slice()) {
            (false, [z, df, sf]) => MeasurementPoint {
                z: z * METERS_PER_UM,
                delta_f: *df,
                sigma_f: *sf,
                sigma_z: None,
            },
            (true, [z, df, sf, sz]) => MeasurementPoint {
                z: z * METERS_PER_UM,
                delta_f: *df,
                sigma_f: *sf,
                sigma_z: Some(sz * METERS_PER_UM),
            },
            _ => return Err(parse_err(format!("row {}: wrong number of columns", i + 1))),
        };
        points.push(point);
    }
    MeasurementDataset::new(points, label).map_err(|e| parse_err(e.to_string()))
}

pub fn read_dataset(path: &Path) -> Result<MeasurementDataset, StatsError> {
    let text = std::fs::read_to_string(path).map_err(|e| StatsError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_dataset(&text, &path.display().to_string())
}

/// Per-point comparison detail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub z: f64,
    pub measured: f64,
    pub theory: f64,
    pub sigma_eff: f64,
    /// ((measured − theory)/σ_eff)²
    pub contribution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionSubset {
    pub count: usize,
    pub partial_chi2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Report {
    pub chi2: f64,
    /// Number of points until [`Chi2Report::with_fit_params`] subtracts the
    /// fitted parameters.
    pub dof: usize,
    pub probability: Option<f64>,
    pub per_point: Vec<f64>,
    pub residuals: Vec<Residual>,
    pub sigma_mode: SigmaMode,
    pub subset_bound: Option<ExclusionSubset>,
}

impl Chi2Report {
    /// dof = N_points − n_fit_params and the survival probability.
    pub fn with_fit_params(mut self, n_fit_params: usize) -> Result<Self, StatsError> {
        let dof = self.per_point.len() as i64 - n_fit_params as i64;
        if dof < 1 {
            return Err(StatsError::InvalidDof(dof));
        }
        self.dof = dof as usize;
        self.probability = Some(chi2_survival(self.chi2, self.dof)?);
        Ok(self)
    }

    pub fn with_exclusion(mut self, threshold_sigma: f64) -> Self {
        self.subset_bound = Some(exclusion_subset(&self, threshold_sigma));
        self
    }
}

/// Theory value and slope at `z`: exact grid hit or linear interpolation.
fn theory_at(curve: &FrequencyShiftCurve, z: f64) -> Result<(f64, Option<f64>), StatsError> {
    let pts = &curve.points;
    let out_of_range = || StatsError::CurveRangeMismatch {
        z,
        min: pts.first().map_or(f64::NAN, |p| p.z),
        max: pts.last().map_or(f64::NAN, |p| p.z),
    };
    if pts.is_empty() || z < pts[0].z || z > pts[pts.len() - 1].z {
        return Err(out_of_range());
    }
    let slope = |i: usize, j: usize| (pts[j].delta_f - pts[i].delta_f) / (pts[j].z - pts[i].z);
    let idx = pts.partition_point(|p| p.z < z);
    if pts[idx].z == z {
        let s = match (idx, pts.len()) {
            (_, 1) => None,
            (0, _) => Some(slope(0, 1)),
            (i, n) if i == n - 1 => Some(slope(i - 1, i)),
            (i, _) => Some(0.5 * (slope(i - 1, i) + slope(i, i + 1))),
        };
        return Ok((pts[idx].delta_f, s));
    }
    let (lo, hi) = (&pts[idx - 1], &pts[idx]);
    let t = (z - lo.z) / (hi.z - lo.z);
    Ok((
        lo.delta_f + t * (hi.delta_f - lo.delta_f),
        Some(slope(idx - 1, idx)),
    ))
}

/// χ² of `data` against `theory`. The report carries dof = N and no
/// probability; see [`Chi2Report::with_fit_params`].
pub fn chi2(
    data: &MeasurementDataset,
    theory: &FrequencyShiftCurve,
    sigma_mode: SigmaMode,
) -> Result<Chi2Report, StatsError> {
    let mut residuals = Vec::with_capacity(data.len());
    for p in data.points() {
        let (t, slope) = theory_at(theory, p.z)?;
        let sigma_eff = match sigma_mode {
            SigmaMode::FOnly => p.sigma_f,
            SigmaMode::Combined => {
                let sz = p.sigma_z.ok_or(StatsError::MissingSigmaZ { z: p.z })?;
                let s = slope.ok_or(StatsError::CurveTooShort)?;
                (p.sigma_f * p.sigma_f + s * s * sz * sz).sqrt()
            }
        };
        let r = (p.delta_f - t) / sigma_eff;
        residuals.push(Residual {
            z: p.z,
            measured: p.delta_f,
            theory: t,
            sigma_eff,
            contribution: r * r,
        });
    }
    let per_point: Vec<f64> = residuals.iter().map(|r| r.contribution).collect();
    Ok(Chi2Report {
        chi2: compensated_sum(per_point.iter().copied()),
        dof: per_point.len(),
        probability: None,
        per_point,
        residuals,
        sigma_mode,
        subset_bound: None,
    })
}

/// Points whose residual is at least `threshold_sigma` standard deviations,
/// with their summed contribution.
pub fn exclusion_subset(report: &Chi2Report, threshold_sigma: f64) -> ExclusionSubset {
    let cut = threshold_sigma * threshold_sigma;
    let selected: Vec<f64> = report
        .per_point
        .iter()
        .copied()
        .filter(|&c| c >= cut)
        .collect();
    ExclusionSubset {
        count: selected.len(),
        partial_chi2: compensated_sum(selected),
    }
}
