//! Physical constants and unit conversions.

/// Reduced Planck constant in eV·fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;

/// One wavenumber (cm⁻¹) in eV.
pub const CM_INV_TO_EV: f64 = 1.239_841_984e-4;

/// Converts a wavenumber in cm⁻¹ to eV.
pub fn cm_inv_to_ev(wavenumber: f64) -> f64 {
    wavenumber * CM_INV_TO_EV
}
