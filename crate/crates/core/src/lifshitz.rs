//! Finite-temperature Lifshitz free energy and pressure between two identical
//! half-spaces.
//!
//! With y = 2aq (q = √(k² + ξ²/c²)) and ζ_l = 2aξ_l/c, the Matsubara
//! representation becomes
//!
//! ```text
//! F(a,T) =  (k_B T / 8πa²) Σ'_l ∫_{ζ_l}^∞ y  Σ_α ln(1 − r_α² e^{−y}) dy
//! P(a,T) = −(k_B T / 8πa³) Σ'_l ∫_{ζ_l}^∞ y² Σ_α r_α² e^{−y} / (1 − r_α² e^{−y}) dy
//! ```
//!
//! where the prime halves the l = 0 term. The pressure is the analytic
//! derivative −∂F/∂a of the same integrand. Zero-temperature mode replaces
//! k_B T Σ'_l by (ħc/4πa) ∫₀^∞ dζ.

use std::f64::consts::PI;
use std::sync::Mutex;

use thiserror::Error;

use crate::optics::{OpticsError, PermittivitySpec, ZeroFrequencyLimit};
use crate::quadrature::{Adaptive, CompensatedSum, QuadratureError};
use crate::units::{ev_to_inverse_meters, BOLTZMANN_EV_PER_K, BOLTZMANN_J_PER_K, HBAR_C_J_M};

#[derive(Debug, Error)]
pub enum LifshitzError {
    #[error("separation must be positive, got {0} m")]
    SeparationNonpositive(f64),
    #[error("invalid Lifshitz settings: {0}")]
    InvalidSettings(String),
    #[error(
        "Matsubara sum not converged after {terms} terms at a = {separation:e} m \
         (last relative term {last_relative:e}, tolerance {tolerance:e})"
    )]
    TruncationNotConverged {
        separation: f64,
        terms: usize,
        last_relative: f64,
        tolerance: f64,
    },
    #[error("momentum quadrature at a = {separation:e} m, l = {l}: {source}")]
    QuadratureNonConvergent {
        separation: f64,
        l: usize,
        #[source]
        source: QuadratureError,
    },
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// Upper end of the Matsubara sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatsubaraCutoff {
    /// Stop once the terms have decayed below `term_tolerance`.
    Auto,
    /// Sum l = 0..=n exactly; fails if the last terms are still above tolerance.
    Fixed(usize),
}

pub const DEFAULT_MAX_TERMS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifshitzSettings {
    pub temperature_k: f64,
    pub l_max: MatsubaraCutoff,
    /// Hard cap on the number of terms in `Auto` mode.
    pub max_terms: usize,
    pub term_tolerance: f64,
    pub k_quad_tolerance: f64,
    pub zero_t_mode: bool,
}

impl Default for LifshitzSettings {
    fn default() -> Self {
        Self {
            temperature_k: 300.0,
            l_max: MatsubaraCutoff::Auto,
            max_terms: DEFAULT_MAX_TERMS,
            term_tolerance: 1e-6,
            k_quad_tolerance: 1e-7,
            zero_t_mode: false,
        }
    }
}

impl LifshitzSettings {
    pub fn at_temperature(temperature_k: f64) -> Self {
        Self {
            temperature_k,
            ..Self::default()
        }
    }

    pub fn zero_temperature() -> Self {
        Self {
            zero_t_mode: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LifshitzError> {
        let bad = |m: String| Err(LifshitzError::InvalidSettings(m));
        if !self.zero_t_mode && !(self.temperature_k.is_finite() && self.temperature_k > 0.0) {
            return bad(format!(
                "temperature must be positive, got {} K",
                self.temperature_k
            ));
        }
        for (name, tol) in [
            ("term_tolerance", self.term_tolerance),
            ("k_quad_tolerance", self.k_quad_tolerance),
        ] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return bad(format!("{name} must lie in (0, 1e-2], got {tol}"));
            }
        }
        if self.max_terms < 4 {
            return bad(format!(
                "max_terms must be at least 4, got {}",
                self.max_terms
            ));
        }
        Ok(())
    }
}

/// Plate-plate result at one separation, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateResult {
    pub separation: f64,
    pub free_energy_per_area: f64,
    pub pressure: f64,
    pub terms_used: usize,
    pub est_error: f64,
}

/// TM and TE parts of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarized {
    pub tm: f64,
    pub te: f64,
}

impl Polarized {
    pub fn total(&self) -> f64 {
        self.tm + self.te
    }
}

/// Contribution of a single Matsubara index (including the l = 0 halving).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatsubaraTerm {
    pub l: usize,
    pub xi_ev: f64,
    pub free_energy: Polarized,
    pub pressure: Polarized,
}

/// ξ_l = 2π k_B T l / ħ, returned as the energy ħξ_l in eV.
pub fn matsubara_frequency(l: usize, temperature_k: f64) -> f64 {
    2.0 * PI * BOLTZMANN_EV_PER_K * temperature_k * l as f64
}

/// Reflection coefficients (r_TM, r_TE) at imaginary frequency ξ (eV),
/// transverse wavenumber k (1/m) and permittivity ε(iξ).
pub fn fresnel_imaginary(xi_ev: f64, k: f64, eps: f64) -> (f64, f64) {
    let xc = ev_to_inverse_meters(xi_ev);
    let q = (k * k + xc * xc).sqrt();
    let k_eps = (k * k + eps * xc * xc).sqrt();
    let r_tm = (eps * q - k_eps) / (eps * q + k_eps);
    let r_te = -(eps - 1.0) * xc * xc / (q + k_eps).powi(2);
    (r_tm, r_te)
}

/// Reflection coefficients in separation-scaled variables: y = 2aq, ζ = 2aξ/c.
fn reflection(y: f64, zeta: f64, eps: f64) -> (f64, f64) {
    let d = (eps - 1.0) * zeta * zeta;
    let s = (y * y + d).sqrt();
    let r_tm = (eps * y - s) / (eps * y + s);
    let r_te = -d / (y + s).powi(2);
    (r_tm, r_te)
}

/// Reflection coefficients at ξ = 0 as functions of y.
#[derive(Debug, Clone, Copy)]
enum Reflector {
    Finite {
        zeta: f64,
        eps: f64,
    },
    /// r_TM = 1, r_TE = 0
    ZeroDissipative,
    /// r_TM = 1, r_TE = −Ω²/(y + √(y²+Ω²))² with Ω = 2aω_p/c
    ZeroPlasma {
        omega_scaled: f64,
    },
}

impl Reflector {
    fn at(&self, y: f64) -> (f64, f64) {
        match *self {
            Reflector::Finite { zeta, eps } => reflection(y, zeta, eps),
            Reflector::ZeroDissipative => (1.0, 0.0),
            Reflector::ZeroPlasma { omega_scaled } => {
                let w2 = omega_scaled * omega_scaled;
                (1.0, -w2 / (y + (y * y + w2).sqrt()).powi(2))
            }
        }
    }

    fn lower(&self) -> f64 {
        match *self {
            Reflector::Finite { zeta, .. } => zeta,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    FreeEnergy,
    Pressure,
}

#[derive(Debug, Clone, Copy)]
enum Pol {
    Tm,
    Te,
    Both,
}

fn log_term(r: f64, y: f64) -> f64 {
    (-r * r * (-y).exp()).ln_1p()
}

fn pressure_term(r: f64, y: f64) -> f64 {
    let x = r * r * (-y).exp();
    x / (1.0 - x)
}

// y - ζ beyond this contributes below e^-60 relative to the panel sum.
const Y_SPAN: f64 = 60.0;
const Y_BREAKS: [f64; 9] = [0.0, 0.25, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, Y_SPAN];

/// ∫_{ζ}^{ζ+60} of the dimensionless integrand.
fn momentum_integral(
    refl: Reflector,
    quantity: Quantity,
    pol: Pol,
    rel_tol: f64,
) -> Result<crate::quadrature::Integral, QuadratureError> {
    let lo = refl.lower();
    let breaks: Vec<f64> = Y_BREAKS.iter().map(|t| lo + t).collect();
    let quad = Adaptive::with_rel_tol(rel_tol);
    quad.integrate(
        |y| {
            let (tm, te) = refl.at(y);
            let (tm, te) = match quantity {
                Quantity::FreeEnergy => (y * log_term(tm, y), y * log_term(te, y)),
                Quantity::Pressure => (y * y * pressure_term(tm, y), y * y * pressure_term(te, y)),
            };
            match pol {
                Pol::Tm => tm,
                Pol::Te => te,
                Pol::Both => tm + te,
            }
        },
        &breaks,
    )
}

#[derive(Debug, Clone, Copy)]
struct Summed {
    value: f64,
    terms: usize,
    rel_error: f64,
}

/// Evaluates plate-plate quantities for one permittivity model and one set
/// of numerical controls. ε(iξ_l) values are cached per Matsubara index and
/// shared across separations; cached values depend only on l.
#[derive(Debug)]
pub struct PlateSolver {
    spec: PermittivitySpec,
    settings: LifshitzSettings,
    eps_cache: Mutex<Vec<f64>>,
}

impl Clone for PlateSolver {
    fn clone(&self) -> Self {
        let cache = self.eps_cache.lock().expect("eps cache poisoned").clone();
        Self {
            spec: self.spec.clone(),
            settings: self.settings,
            eps_cache: Mutex::new(cache),
        }
    }
}

impl PlateSolver {
    pub fn new(spec: PermittivitySpec, settings: LifshitzSettings) -> Result<Self, LifshitzError> {
        settings.validate()?;
        Ok(Self {
            spec,
            settings,
            eps_cache: Mutex::new(vec![f64::NAN]),
        })
    }

    pub fn spec(&self) -> &PermittivitySpec {
        &self.spec
    }

    pub fn settings(&self) -> &LifshitzSettings {
        &self.settings
    }

    /// ε(iξ_l) for l ≥ 1.
    pub fn matsubara_eps(&self, l: usize) -> Result<f64, LifshitzError> {
        debug_assert!(l >= 1);
        let mut cache = self.eps_cache.lock().expect("eps cache poisoned");
        while cache.len() <= l {
            let xi = matsubara_frequency(cache.len(), self.settings.temperature_k);
            cache.push(self.spec.eps(xi)?);
        }
        Ok(cache[l])
    }

    fn reflector(&self, l: usize, a: f64) -> Result<Reflector, LifshitzError> {
        if l == 0 {
            return Ok(match self.spec.zero_frequency_limit() {
                ZeroFrequencyLimit::Dissipative => Reflector::ZeroDissipative,
                ZeroFrequencyLimit::Plasma { omega_p_ev } => Reflector::ZeroPlasma {
                    omega_scaled: 2.0 * a * ev_to_inverse_meters(omega_p_ev),
                },
            });
        }
        let xi = matsubara_frequency(l, self.settings.temperature_k);
        Ok(Reflector::Finite {
            zeta: 2.0 * a * ev_to_inverse_meters(xi),
            eps: self.matsubara_eps(l)?,
        })
    }

    fn prefactor(&self, quantity: Quantity, a: f64) -> f64 {
        let kt = BOLTZMANN_J_PER_K * self.settings.temperature_k;
        match quantity {
            Quantity::FreeEnergy => kt / (8.0 * PI * a * a),
            Quantity::Pressure => -kt / (8.0 * PI * a * a * a),
        }
    }

    fn term(
        &self,
        l: usize,
        a: f64,
        quantity: Quantity,
        pol: Pol,
    ) -> Result<(f64, f64), LifshitzError> {
        let refl = self.reflector(l, a)?;
        let integral = momentum_integral(refl, quantity, pol, self.settings.k_quad_tolerance)
            .map_err(|source| LifshitzError::QuadratureNonConvergent {
                separation: a,
                l,
                source,
            })?;
        let weight = if l == 0 { 0.5 } else { 1.0 };
        let scale = weight * self.prefactor(quantity, a);
        Ok((scale * integral.value, (scale * integral.abs_error).abs()))
    }

    /// TM/TE contributions of Matsubara index `l` to F and P at separation `a`.
    pub fn matsubara_term(&self, l: usize, a: f64) -> Result<MatsubaraTerm, LifshitzError> {
        check_separation(a)?;
        if self.settings.zero_t_mode {
            return Err(LifshitzError::InvalidSettings(
                "Matsubara terms are undefined in zero-temperature mode".into(),
            ));
        }
        let f_tm = self.term(l, a, Quantity::FreeEnergy, Pol::Tm)?.0;
        let f_te = self.term(l, a, Quantity::FreeEnergy, Pol::Te)?.0;
        let p_tm = self.term(l, a, Quantity::Pressure, Pol::Tm)?.0;
        let p_te = self.term(l, a, Quantity::Pressure, Pol::Te)?.0;
        Ok(MatsubaraTerm {
            l,
            xi_ev: matsubara_frequency(l, self.settings.temperature_k),
            free_energy: Polarized { tm: f_tm, te: f_te },
            pressure: Polarized { tm: p_tm, te: p_te },
        })
    }

    fn matsubara_sum(&self, a: f64, quantity: Quantity) -> Result<Summed, LifshitzError> {
        let tol = self.settings.term_tolerance;
        let (limit, fixed) = match self.settings.l_max {
            MatsubaraCutoff::Auto => (self.settings.max_terms, false),
            MatsubaraCutoff::Fixed(n) => (n + 1, true),
        };
        let mut sum = CompensatedSum::new();
        let mut quad_error = CompensatedSum::new();
        let mut history: Vec<f64> = Vec::with_capacity(64);

        let converged = |history: &[f64], total: f64| -> Option<f64> {
            let n = history.len();
            if n < 4 {
                return None;
            }
            let scale = tol * total.abs();
            let last3 = &history[n - 3..];
            if last3.iter().any(|t| t.abs() >= scale) {
                return None;
            }
            let (prev, last) = (history[n - 2], history[n - 1]);
            let ratio = if prev != 0.0 { last / prev } else { 0.0 };
            if !(0.0..1.0).contains(&ratio) {
                return None;
            }
            // Geometric estimate of the omitted tail.
            let tail = last.abs() * ratio / (1.0 - ratio);
            (tail < scale).then_some(tail)
        };

        for l in 0..limit {
            let (value, err) = self.term(l, a, quantity, Pol::Both)?;
            sum.add(value);
            quad_error.add(err);
            history.push(value);
            if !fixed {
                if let Some(tail) = converged(&history, sum.value()) {
                    return Ok(self.summed(sum, quad_error, tail, l + 1));
                }
            }
        }
        if fixed {
            if let Some(tail) = converged(&history, sum.value()) {
                return Ok(self.summed(sum, quad_error, tail, limit));
            }
        }
        let total = sum.value();
        let last = history.last().copied().unwrap_or(0.0);
        Err(LifshitzError::TruncationNotConverged {
            separation: a,
            terms: limit,
            last_relative: if total != 0.0 {
                (last / total).abs()
            } else {
                f64::INFINITY
            },
            tolerance: tol,
        })
    }

    fn summed(
        &self,
        sum: CompensatedSum,
        quad_error: CompensatedSum,
        tail: f64,
        terms: usize,
    ) -> Summed {
        let value = sum.value();
        let rel = |x: f64| if value != 0.0 { (x / value).abs() } else { 0.0 };
        Summed {
            value,
            terms,
            rel_error: rel(quad_error.value()).max(rel(tail)),
        }
    }

    fn zero_temperature_integral(
        &self,
        a: f64,
        quantity: Quantity,
    ) -> Result<Summed, LifshitzError> {
        let a_scale = 2.0 * a * ev_to_inverse_meters(1.0);
        let inner_tol = 0.1 * self.settings.k_quad_tolerance;
        let failure = std::cell::RefCell::new(None);
        let integrand = |zeta: f64| {
            let xi_ev = zeta / a_scale;
            let eps = match self.spec.eps(xi_ev) {
                Ok(e) => e,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(LifshitzError::from(e));
                    return f64::NAN;
                }
            };
            match momentum_integral(
                Reflector::Finite { zeta, eps },
                quantity,
                Pol::Both,
                inner_tol,
            ) {
                Ok(i) => i.value,
                Err(source) => {
                    failure
                        .borrow_mut()
                        .get_or_insert(LifshitzError::QuadratureNonConvergent {
                            separation: a,
                            l: 0,
                            source,
                        });
                    f64::NAN
                }
            }
        };
        let outer =
            Adaptive::with_rel_tol(self.settings.k_quad_tolerance).integrate(integrand, &Y_BREAKS);
        if let Some(err) = failure.into_inner() {
            return Err(err);
        }
        let outer = outer.map_err(|source| LifshitzError::QuadratureNonConvergent {
            separation: a,
            l: 0,
            source,
        })?;
        let prefactor = match quantity {
            Quantity::FreeEnergy => HBAR_C_J_M / (32.0 * PI * PI * a.powi(3)),
            Quantity::Pressure => -HBAR_C_J_M / (32.0 * PI * PI * a.powi(4)),
        };
        Ok(Summed {
            value: prefactor * outer.value,
            terms: outer.panels,
            rel_error: outer.rel_error(),
        })
    }

    fn quantity(&self, a: f64, quantity: Quantity) -> Result<Summed, LifshitzError> {
        check_separation(a)?;
        if self.settings.zero_t_mode {
            self.zero_temperature_integral(a, quantity)
        } else {
            self.matsubara_sum(a, quantity)
        }
    }

    /// Free energy per unit area (J/m²) and pressure (Pa) at separation `a` (m).
    pub fn evaluate(&self, a: f64) -> Result<PlateResult, LifshitzError> {
        let f = self.quantity(a, Quantity::FreeEnergy)?;
        let p = self.quantity(a, Quantity::Pressure)?;
        Ok(PlateResult {
            separation: a,
            free_energy_per_area: f.value,
            pressure: p.value,
            terms_used: f.terms.max(p.terms),
            est_error: f.rel_error.max(p.rel_error),
        })
    }

    pub fn free_energy(&self, a: f64) -> Result<f64, LifshitzError> {
        Ok(self.quantity(a, Quantity::FreeEnergy)?.value)
    }

    pub fn pressure(&self, a: f64) -> Result<f64, LifshitzError> {
        Ok(self.quantity(a, Quantity::Pressure)?.value)
    }

    /// Pressure with the number of Matsubara terms it needed.
    pub fn pressure_with_terms(&self, a: f64) -> Result<(f64, usize), LifshitzError> {
        let s = self.quantity(a, Quantity::Pressure)?;
        Ok((s.value, s.terms))
    }
}

fn check_separation(a: f64) -> Result<(), LifshitzError> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(LifshitzError::SeparationNonpositive(a))
    }
}

/// One-shot evaluation of [`PlateResult`] at separation `a`.
pub fn free_energy_per_area(
    a: f64,
    spec: &PermittivitySpec,
    settings: &LifshitzSettings,
) -> Result<PlateResult, LifshitzError> {
    PlateSolver::new(spec.clone(), *settings)?.evaluate(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{DrudeParams, PermittivityMode};
    use approx::assert_relative_eq;

    fn solver(mode: PermittivityMode, t: f64) -> PlateSolver {
        let spec = PermittivitySpec::new(mode, DrudeParams::GOLD, None).unwrap();
        PlateSolver::new(spec, LifshitzSettings::at_temperature(t)).unwrap()
    }

    #[test]
    fn matsubara_frequencies() {
        assert_eq!(matsubara_frequency(0, 300.0), 0.0);
        // Oracle: 2π k_B T with CODATA k_B.
        let k_b_t = 8.617_333_262e-5 * 300.0;
        assert_relative_eq!(k_b_t, 0.025852, max_relative = 1e-4);
        assert_relative_eq!(
            matsubara_frequency(1, 300.0),
            2.0 * PI * k_b_t,
            max_relative = 1e-15
        );
        assert_relative_eq!(matsubara_frequency(1, 300.0), 0.16244, max_relative = 1e-4);
        assert_relative_eq!(matsubara_frequency(10, 300.0), 1.6244, max_relative = 1e-4);
        assert_relative_eq!(
            matsubara_frequency(10, 300.0),
            10.0 * matsubara_frequency(1, 300.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn fresnel_limits() {
        assert_eq!(fresnel_imaginary(0.3, 1e7, 1.0), (0.0, 0.0));
        let (tm, te) = fresnel_imaginary(0.3, 1e7, 1e30);
        assert_relative_eq!(tm, 1.0, epsilon = 1e-9);
        assert_relative_eq!(te, -1.0, epsilon = 1e-9);
        // Drude as ξ → 0⁺: ε ξ² → 0.
        let drude = PermittivitySpec::pure_drude(DrudeParams::GOLD).unwrap();
        let xi = 1e-9;
        let (tm, te) = fresnel_imaginary(xi, 1e7, drude.eps(xi).unwrap());
        assert!(tm > 1.0 - 1e-6, "{tm}");
        assert!(te.abs() < 1e-6, "{te}");
    }

    #[test]
    fn fresnel_signs_and_bounds() {
        for &eps in &[1.0, 1.5, 10.0, 1e3, 1e8] {
            for &k in &[1e3, 1e6, 1e8] {
                for &xi in &[1e-3, 0.16, 3.0] {
                    let (tm, te) = fresnel_imaginary(xi, k, eps);
                    assert!((0.0..=1.0).contains(&tm));
                    assert!((-1.0..=0.0).contains(&te));
                }
            }
        }
    }

    #[test]
    fn scaled_reflection_matches_si_form() {
        let (a, xi, k, eps) = (1.5e-7, 0.4, 3e6, 25.0);
        let xc = ev_to_inverse_meters(xi);
        let y = 2.0 * a * (k * k + xc * xc).sqrt();
        let (tm, te) = reflection(y, 2.0 * a * xc, eps);
        let (tm2, te2) = fresnel_imaginary(xi, k, eps);
        assert_relative_eq!(tm, tm2, max_relative = 1e-12);
        assert_relative_eq!(te, te2, max_relative = 1e-12);
    }

    #[test]
    fn zero_frequency_te_discriminates_models() {
        let a = 150e-9;
        let d = solver(PermittivityMode::PureDrude, 300.0)
            .matsubara_term(0, a)
            .unwrap();
        let p = solver(PermittivityMode::PurePlasma, 300.0)
            .matsubara_term(0, a)
            .unwrap();
        assert_eq!(d.free_energy.te, 0.0);
        assert_eq!(d.pressure.te, 0.0);
        assert!(p.free_energy.te < 0.0);
        assert!(p.pressure.te < 0.0);
        // TM at l = 0 is universal: −ζ(3) k_B T / (16π a²).
        let zeta3 = 1.202_056_903_159_594_3;
        let expected = -zeta3 * BOLTZMANN_J_PER_K * 300.0 / (16.0 * PI * a * a);
        assert_relative_eq!(d.free_energy.tm, expected, max_relative = 1e-6);
        assert_relative_eq!(p.free_energy.tm, expected, max_relative = 1e-6);
    }

    #[test]
    fn attraction_and_monotonicity() {
        for mode in [PermittivityMode::PureDrude, PermittivityMode::PurePlasma] {
            let s = solver(mode, 300.0);
            let mut prev = f64::INFINITY;
            for i in 0..10 {
                let a = 50e-9 * (10f64).powf(i as f64 / 9.0);
                let r = s.evaluate(a).unwrap();
                assert!(r.free_energy_per_area < 0.0 && r.pressure < 0.0);
                assert!(r.pressure.abs() < prev);
                assert!(r.est_error <= 1e-6, "{r:?}");
                prev = r.pressure.abs();
            }
        }
    }

    #[test]
    fn fixed_cutoff_that_is_too_small_errors() {
        let spec = PermittivitySpec::pure_drude(DrudeParams::GOLD).unwrap();
        let s = LifshitzSettings {
            l_max: MatsubaraCutoff::Fixed(3),
            ..LifshitzSettings::default()
        };
        let err = PlateSolver::new(spec, s)
            .unwrap()
            .pressure(100e-9)
            .unwrap_err();
        assert!(matches!(err, LifshitzError::TruncationNotConverged { .. }));
    }

    #[test]
    fn auto_cap_errors_at_low_temperature() {
        let spec = PermittivitySpec::pure_plasma(DrudeParams::GOLD).unwrap();
        let err = PlateSolver::new(spec, LifshitzSettings::at_temperature(1.0))
            .unwrap()
            .pressure(100e-9)
            .unwrap_err();
        assert!(matches!(
            err,
            LifshitzError::TruncationNotConverged { terms: 5000, .. }
        ));
    }

    #[test]
    fn invalid_inputs() {
        let s = solver(PermittivityMode::PureDrude, 300.0);
        assert!(matches!(
            s.pressure(0.0),
            Err(LifshitzError::SeparationNonpositive(_))
        ));
        assert!(matches!(
            s.pressure(-1e-7),
            Err(LifshitzError::SeparationNonpositive(_))
        ));
        let bad = LifshitzSettings {
            term_tolerance: 0.5,
            ..LifshitzSettings::default()
        };
        assert!(bad.validate().is_err());
        assert!(LifshitzSettings::at_temperature(0.0).validate().is_err());
        assert!(LifshitzSettings {
            temperature_k: 0.0,
            ..LifshitzSettings::zero_temperature()
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn clone_keeps_results_bitwise() {
        let s = solver(PermittivityMode::PureDrude, 300.0);
        let p1 = s.pressure(120e-9).unwrap();
        let p2 = s.clone().pressure(120e-9).unwrap();
        let p3 = solver(PermittivityMode::PureDrude, 300.0)
            .pressure(120e-9)
            .unwrap();
        assert_eq!(p1.to_bits(), p2.to_bits());
        assert_eq!(p1.to_bits(), p3.to_bits());
    }
}
