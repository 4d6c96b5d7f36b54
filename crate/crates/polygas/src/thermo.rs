//! Equation of state and coordinate changes for the polytropic gas.
//!
//! The pressure law is `p(rho, S) = kappa e^{(gamma-1)S/K} rho^gamma` with
//! `kappa = (gamma-1)^2/(4 gamma)`. With this normalisation the sound speed is
//! `theta e^{theta S/K} rho^theta`, `theta = (gamma-1)/2`, and the Riemann
//! invariants of the isentropic sub-system take the plain form
//! `w = u + e^{theta S/K} rho^theta`, `z = u - e^{theta S/K} rho^theta`.

use crate::error::{Error, Result};

/// Thermodynamic parameter set: the adiabatic exponent, the entropy scale,
/// and the constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasConstants {
    /// Adiabatic exponent, > 1.
    pub gamma: f64,
    /// Entropy scale (the constant dividing S in every exponential), > 0.
    pub gas_const: f64,
    /// Pressure coefficient, (gamma-1)^2 / (4 gamma).
    pub kappa: f64,
    /// Exponent (gamma-1)/2.
    pub theta: f64,
    /// Kinetic exponent (3-gamma)/(2(gamma-1)); positive only for gamma < 3.
    pub lambda_exp: f64,
}

impl GasConstants {
    pub fn new(gamma: f64, gas_const: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidState(format!(
                "adiabatic exponent must be finite and > 1, got {gamma}"
            )));
        }
        if !(gas_const > 0.0) || !gas_const.is_finite() {
            return Err(Error::InvalidState(format!(
                "entropy scale must be finite and > 0, got {gas_const}"
            )));
        }
        Ok(GasConstants {
            gamma,
            gas_const,
            kappa: (gamma - 1.0) * (gamma - 1.0) / (4.0 * gamma),
            theta: 0.5 * (gamma - 1.0),
            lambda_exp: (3.0 - gamma) / (2.0 * (gamma - 1.0)),
        })
    }

    /// e^{theta S / K}, the entropy factor entering sound speed and invariants.
    pub fn theta_exp(&self, s: f64) -> f64 {
        (self.theta * s / self.gas_const).exp()
    }

    /// e^{(gamma-1) S / K}, the entropy factor of the pressure law.
    pub fn pressure_exp(&self, s: f64) -> f64 {
        ((self.gamma - 1.0) * s / self.gas_const).exp()
    }
}

/// Point state in primitive variables. At vacuum (`rho == 0`) the velocity is
/// auxiliary data; it never enters a flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub s: f64,
}

impl PrimitiveState {
    pub fn new(rho: f64, u: f64, s: f64) -> Self {
        PrimitiveState { rho, u, s }
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho == 0.0
    }

    pub fn to_conserved(&self) -> ConservedState {
        ConservedState {
            rho: self.rho,
            m: self.rho * self.u,
            rho_s: self.rho * self.s,
        }
    }
}

/// Conserved variables (rho, m, rho S). Vacuum carries (0, 0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedState {
    pub rho: f64,
    pub m: f64,
    pub rho_s: f64,
}

/// p(rho, S); zero at vacuum.
pub fn pressure(state: &PrimitiveState, k: &GasConstants) -> f64 {
    debug_assert!(state.rho >= 0.0);
    if state.rho == 0.0 {
        return 0.0;
    }
    k.kappa * k.pressure_exp(state.s) * state.rho.powf(k.gamma)
}

/// sqrt(p_rho) = theta e^{theta S/K} rho^theta; zero at vacuum.
pub fn sound_speed(state: &PrimitiveState, k: &GasConstants) -> f64 {
    debug_assert!(state.rho >= 0.0);
    if state.rho == 0.0 {
        return 0.0;
    }
    k.theta * k.theta_exp(state.s) * state.rho.powf(k.theta)
}

/// Riemann invariants (w, z) of the isentropic sub-system. Always w >= z,
/// with equality exactly on the vacuum line.
pub fn riemann_invariants(state: &PrimitiveState, k: &GasConstants) -> (f64, f64) {
    debug_assert!(state.rho >= 0.0);
    let a = if state.rho == 0.0 {
        0.0
    } else {
        k.theta_exp(state.s) * state.rho.powf(k.theta)
    };
    (state.u + a, state.u - a)
}

/// Inverse of [`riemann_invariants`] at a given entropy. Rejects w < z.
pub fn state_from_invariants(w: f64, z: f64, s: f64, k: &GasConstants) -> Result<PrimitiveState> {
    if w < z {
        return Err(Error::InvalidState(format!(
            "invariants out of order: w = {w} < z = {z}"
        )));
    }
    let u = 0.5 * (w + z);
    let a = 0.5 * (w - z); // = e^{theta S/K} rho^theta
    let rho = if a == 0.0 {
        0.0
    } else {
        (a / k.theta_exp(s)).powf(1.0 / k.theta)
    };
    Ok(PrimitiveState { rho, u, s })
}

/// rho(p, S) = (p/kappa)^{1/gamma} e^{-(gamma-1)S/(gamma K)}. Rejects p < 0.
pub fn density_from_pressure(p: f64, s: f64, k: &GasConstants) -> Result<f64> {
    if p < 0.0 {
        return Err(Error::InvalidState(format!("negative pressure {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok((p / k.kappa).powf(1.0 / k.gamma)
        * (-(k.gamma - 1.0) * s / (k.gamma * k.gas_const)).exp())
}
