//! Forward and backward wave curves of the isentropic sub-system,
//! parameterised by density. Entropy is constant along 1- and 3-waves, so
//! each curve carries the entropy of its reference state.
//!
//! With `kappa = (gamma-1)^2/(4 gamma)` the rarefaction branch is
//! `u_ref -/+ e^{theta S/K}(rho^theta - rho_ref^theta)` and the shock branch
//! `u_ref -/+ sqrt(kappa) e^{theta S/K} sqrt((rho^g - rho_ref^g)(rho - rho_ref)/(rho rho_ref))`;
//! the two branches meet C^1 at the reference density.

use crate::error::{Error, Result};
use crate::thermo::{GasConstants, PrimitiveState};

/// Relative window around the reference density inside which the shock
/// radicand is abandoned for the rarefaction expression (the curves are C^1
/// there and the radicand cancels catastrophically).
const BRANCH_TIE_EPS: f64 = 1e-8;

/// Velocity along the slow (1-family) wave curve through `left`, at density
/// `rho`. Strictly decreasing in rho; equals `left.u` at `rho = left.rho`
/// and the vacuum-edge velocity w(left) at `rho = 0`.
pub fn slow_wave_u(rho: f64, left: &PrimitiveState, k: &GasConstants) -> Result<f64> {
    curve_u(rho, left, k, -1.0)
}

/// Velocity along the backward fast (3-family) wave curve through `right`:
/// the states that connect to `right` from the left. Strictly increasing in
/// rho; equals `right.u` at `rho = right.rho` and z(right) at `rho = 0`.
pub fn fast_wave_backward_u(rho: f64, right: &PrimitiveState, k: &GasConstants) -> Result<f64> {
    curve_u(rho, right, k, 1.0)
}

fn curve_u(rho: f64, reference: &PrimitiveState, k: &GasConstants, sign: f64) -> Result<f64> {
    if rho < 0.0 {
        return Err(Error::InvalidState(format!("negative density {rho}")));
    }
    if !(reference.rho > 0.0) {
        return Err(Error::InvalidState(
            "wave curve reference state must have positive density".into(),
        ));
    }
    let e = k.theta_exp(reference.s);
    let rho_ref = reference.rho;
    if rho <= rho_ref || (rho / rho_ref - 1.0).abs() < BRANCH_TIE_EPS {
        // Rarefaction branch; also used in the tie window around rho_ref.
        Ok(reference.u + sign * e * (rho.powf(k.theta) - rho_ref.powf(k.theta)))
    } else {
        Ok(reference.u + sign * k.kappa.sqrt() * e * hugoniot_radical(rho, rho_ref, k.gamma))
    }
}

/// d u / d rho along the same curves, used by the Newton contact solve.
pub(crate) fn curve_du_drho(
    rho: f64,
    reference: &PrimitiveState,
    k: &GasConstants,
    sign: f64,
) -> f64 {
    let e = k.theta_exp(reference.s);
    let rho_ref = reference.rho;
    if rho <= rho_ref || (rho / rho_ref - 1.0).abs() < BRANCH_TIE_EPS {
        sign * e * k.theta * rho.powf(k.theta - 1.0)
    } else {
        let g = hugoniot_radical(rho, rho_ref, k.gamma);
        let dg = hugoniot_radicand_slope(rho, rho_ref, k.gamma) / (2.0 * g);
        sign * k.kappa.sqrt() * e * dg
    }
}

fn hugoniot_radical(rho: f64, rho_ref: f64, gamma: f64) -> f64 {
    let radicand =
        (rho.powf(gamma) - rho_ref.powf(gamma)) * (rho - rho_ref) / (rho * rho_ref);
    radicand.max(0.0).sqrt()
}

fn hugoniot_radicand_slope(rho: f64, rho_ref: f64, gamma: f64) -> f64 {
    let dp = rho.powf(gamma) - rho_ref.powf(gamma);
    let dr = rho - rho_ref;
    (gamma * rho.powf(gamma - 1.0) * dr + dp) / (rho * rho_ref) - dp * dr / (rho * rho * rho_ref)
}

/// Speed of the 1-family Hugoniot jump from `left` to the density
/// `right_rho`, from conservation of mass: s = (m_r - m_l) / (rho_r - rho_l).
pub fn shock_speed(left: &PrimitiveState, right_rho: f64, k: &GasConstants) -> Result<f64> {
    if !(right_rho > 0.0) {
        return Err(Error::InvalidState(format!(
            "shock density must be positive, got {right_rho}"
        )));
    }
    if !(left.rho > 0.0) {
        return Err(Error::InvalidState(
            "shock left state must have positive density".into(),
        ));
    }
    let d_rho = right_rho - left.rho;
    if d_rho == 0.0 {
        return Err(Error::InvalidState(
            "degenerate jump: densities coincide".into(),
        ));
    }
    let e = k.theta_exp(left.s);
    let u_right = left.u - k.kappa.sqrt() * e * hugoniot_radical(right_rho, left.rho, k.gamma);
    Ok((right_rho * u_right - left.rho * left.u) / d_rho)
}
