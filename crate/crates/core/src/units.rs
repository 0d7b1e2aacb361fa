//! Physical constants (CODATA 2018) and unit conversions.

/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617_333_262e-5;

/// Boltzmann constant in J/K.
pub const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;

/// ħc in eV·m.
pub const HBAR_C_EV_M: f64 = 1.973_269_804e-7;

/// ħc in J·m.
pub const HBAR_C_J_M: f64 = HBAR_C_EV_M * ELEMENTARY_CHARGE;

/// Joules per electronvolt.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

pub const METERS_PER_NM: f64 = 1e-9;
pub const METERS_PER_UM: f64 = 1e-6;

/// Convert a photon energy ħξ in eV to the wavenumber ξ/c in 1/m.
pub fn ev_to_inverse_meters(energy_ev: f64) -> f64 {
    energy_ev / HBAR_C_EV_M
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_c_consistent_with_boltzmann_pair() {
        // k_B[J] / k_B[eV] is the electronvolt.
        let ratio = BOLTZMANN_J_PER_K / BOLTZMANN_EV_PER_K;
        assert!((ratio / ELEMENTARY_CHARGE - 1.0).abs() < 1e-9);
    }
}
