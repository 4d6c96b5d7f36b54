//! Exact solver for the Riemann problem of the full system: a slow wave at
//! the entropy of the left state, a contact discontinuity across which
//! pressure and velocity are continuous, and a fast wave at the entropy of
//! the right state. Vacuum appears when the wave curves fail to intersect at
//! positive pressure, i.e. exactly when w(left) <= z(right).

use crate::error::{Error, Result};
use crate::thermo::{
    density_from_pressure, pressure, riemann_invariants, sound_speed, GasConstants,
    PrimitiveState,
};
use crate::wave_curves::{curve_du_drho, fast_wave_backward_u, slow_wave_u};

const MAX_ITERATIONS: usize = 100;
/// Relative density window treated as a zero-strength wave.
const CLASSIFY_TIE_EPS: f64 = 1e-14;

/// One extreme wave of the fan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wave {
    Shock { speed: f64 },
    /// `head` is the outer edge (adjacent to the data), `tail` the inner
    /// (star-side) edge. A zero-strength wave has `head == tail`.
    Rarefaction { head: f64, tail: f64 },
    /// The wave does not exist (its side of the data is vacuum).
    None,
}

impl Wave {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Wave::Shock { .. } => "shock",
            Wave::Rarefaction { .. } => "rarefaction",
            Wave::None => "none",
        }
    }

    fn speeds(&self) -> Vec<f64> {
        match *self {
            Wave::Shock { speed } => vec![speed],
            Wave::Rarefaction { head, tail } => {
                let mut v = vec![head, tail];
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v
            }
            Wave::None => vec![],
        }
    }
}

/// The constant region between the extreme waves, split by the contact.
#[derive(Debug, Clone, Copy)]
pub struct StarRegion {
    pub pressure: f64,
    pub velocity: f64,
    pub rho_left: f64,
    pub rho_right: f64,
}

/// Full wave structure of one Riemann problem.
#[derive(Debug, Clone)]
pub struct RiemannFan {
    pub left: PrimitiveState,
    pub right: PrimitiveState,
    pub wave1: Wave,
    pub wave3: Wave,
    /// `None` exactly for vacuum fans.
    pub star: Option<StarRegion>,
    /// Similarity interval occupied by interior vacuum, when present.
    /// Half-infinite for one-sided vacuum data.
    pub vacuum_span: Option<(f64, f64)>,
}

impl RiemannFan {
    pub fn is_vacuum(&self) -> bool {
        self.star.is_none()
    }

    /// Wave speeds ordered left to right: 1-wave head/tail (or shock speed),
    /// contact speed, 3-wave tail/head (or shock speed).
    pub fn wave_speeds(&self) -> Vec<f64> {
        let mut speeds = self.wave1.speeds();
        if let Some(star) = &self.star {
            speeds.push(star.velocity);
        }
        speeds.extend(self.wave3.speeds());
        speeds
    }
}

/// Solves the Riemann problem for data `(left, right)`.
pub fn solve(left: &PrimitiveState, right: &PrimitiveState, k: &GasConstants) -> Result<RiemannFan> {
    validate(left)?;
    validate(right)?;

    match (left.rho > 0.0, right.rho > 0.0) {
        (false, false) => Ok(all_vacuum_fan(left, right)),
        (false, true) => Ok(left_vacuum_fan(left, right, k)),
        (true, false) => Ok(right_vacuum_fan(left, right, k)),
        (true, true) => {
            let (w_l, _) = riemann_invariants(left, k);
            let (_, z_r) = riemann_invariants(right, k);
            if w_l <= z_r {
                Ok(two_rarefaction_vacuum_fan(left, right, k))
            } else {
                let star = solve_star(left, right, k)?;
                Ok(fan_from_star(left, right, star, k))
            }
        }
    }
}

fn validate(state: &PrimitiveState) -> Result<()> {
    if state.rho < 0.0 || !state.rho.is_finite() {
        return Err(Error::InvalidState(format!(
            "density must be finite and nonnegative, got {}",
            state.rho
        )));
    }
    if !state.u.is_finite() || !state.s.is_finite() {
        return Err(Error::InvalidState("velocity and entropy must be finite".into()));
    }
    Ok(())
}

/// Newton iteration with a maintained bisection bracket on the star
/// pressure. The velocity mismatch is strictly decreasing in p, so a sign
/// change brackets the unique root.
fn solve_star(left: &PrimitiveState, right: &PrimitiveState, k: &GasConstants) -> Result<StarRegion> {
    let mismatch = |p: f64| -> Result<(f64, f64, f64)> {
        let rho_l = density_from_pressure(p, left.s, k)?;
        let rho_r = density_from_pressure(p, right.s, k)?;
        let diff = slow_wave_u(rho_l, left, k)? - fast_wave_backward_u(rho_r, right, k)?;
        Ok((diff, rho_l, rho_r))
    };
    let (w_l, z_l) = riemann_invariants(left, k);
    let (w_r, z_r) = riemann_invariants(right, k);
    let scale_u = 1.0_f64
        .max(w_l.abs())
        .max(z_l.abs())
        .max(w_r.abs())
        .max(z_r.abs());

    let mut p_lo = 1e-300;
    let mut p_hi = pressure(left, k).max(pressure(right, k)).max(1e-12);
    let mut grow = 0;
    while mismatch(p_hi)?.0 > 0.0 {
        p_lo = p_hi;
        p_hi *= 10.0;
        grow += 1;
        if grow > 400 {
            return Err(Error::NoConvergence(grow));
        }
    }

    let mut p = 0.5 * (p_lo + p_hi);
    let mut result = None;
    for _ in 0..MAX_ITERATIONS {
        let (f, rho_l, rho_r) = mismatch(p)?;
        if f > 0.0 {
            p_lo = p;
        } else {
            p_hi = p;
        }
        if f.abs() <= 1e-14 * scale_u {
            result = Some((p, rho_l, rho_r));
            break;
        }
        let df = (curve_du_drho(rho_l, left, k, -1.0) * rho_l
            - curve_du_drho(rho_r, right, k, 1.0) * rho_r)
            / (k.gamma * p);
        let newton = p - f / df;
        let next = if df.is_finite() && df != 0.0 && newton > p_lo && newton < p_hi {
            newton
        } else {
            0.5 * (p_lo + p_hi)
        };
        if next == p || p_hi - p_lo <= 4.0 * f64::EPSILON * p {
            // Bracket exhausted at machine precision.
            result = Some((p, rho_l, rho_r));
            break;
        }
        p = next;
    }

    let (p_star, rho_left, rho_right) = match result {
        Some(r) => r,
        None => {
            let (f, rho_l, rho_r) = mismatch(p)?;
            if f.abs() <= 1e-12 * scale_u {
                (p, rho_l, rho_r)
            } else {
                return Err(Error::NoConvergence(MAX_ITERATIONS));
            }
        }
    };
    let velocity = 0.5
        * (slow_wave_u(rho_left, left, k)? + fast_wave_backward_u(rho_right, right, k)?);
    Ok(StarRegion {
        pressure: p_star,
        velocity,
        rho_left,
        rho_right,
    })
}

fn fan_from_star(
    left: &PrimitiveState,
    right: &PrimitiveState,
    star: StarRegion,
    k: &GasConstants,
) -> RiemannFan {
    let u_star = star.velocity;
    let wave1 = if star.rho_left > left.rho * (1.0 + CLASSIFY_TIE_EPS) {
        Wave::Shock {
            speed: (star.rho_left * u_star - left.rho * left.u) / (star.rho_left - left.rho),
        }
    } else {
        let head = left.u - sound_speed(left, k);
        let tail = if star.rho_left < left.rho * (1.0 - CLASSIFY_TIE_EPS) {
            u_star - sound_speed(&PrimitiveState::new(star.rho_left, u_star, left.s), k)
        } else {
            head
        };
        Wave::Rarefaction { head, tail }
    };
    let wave3 = if star.rho_right > right.rho * (1.0 + CLASSIFY_TIE_EPS) {
        Wave::Shock {
            speed: (right.rho * right.u - star.rho_right * u_star) / (right.rho - star.rho_right),
        }
    } else {
        let head = right.u + sound_speed(right, k);
        let tail = if star.rho_right < right.rho * (1.0 - CLASSIFY_TIE_EPS) {
            u_star + sound_speed(&PrimitiveState::new(star.rho_right, u_star, right.s), k)
        } else {
            head
        };
        Wave::Rarefaction { head, tail }
    };
    RiemannFan {
        left: *left,
        right: *right,
        wave1,
        wave3,
        star: Some(star),
        vacuum_span: None,
    }
}

fn two_rarefaction_vacuum_fan(
    left: &PrimitiveState,
    right: &PrimitiveState,
    k: &GasConstants,
) -> RiemannFan {
    let (w_l, _) = riemann_invariants(left, k);
    let (_, z_r) = riemann_invariants(right, k);
    RiemannFan {
        left: *left,
        right: *right,
        wave1: Wave::Rarefaction {
            head: left.u - sound_speed(left, k),
            tail: w_l,
        },
        wave3: Wave::Rarefaction {
            tail: z_r,
            head: right.u + sound_speed(right, k),
        },
        star: None,
        vacuum_span: Some((w_l, z_r)),
    }
}

fn left_vacuum_fan(left: &PrimitiveState, right: &PrimitiveState, k: &GasConstants) -> RiemannFan {
    let (_, z_r) = riemann_invariants(right, k);
    RiemannFan {
        left: *left,
        right: *right,
        wave1: Wave::None,
        wave3: Wave::Rarefaction {
            tail: z_r,
            head: right.u + sound_speed(right, k),
        },
        star: None,
        vacuum_span: Some((f64::NEG_INFINITY, z_r)),
    }
}

fn right_vacuum_fan(left: &PrimitiveState, right: &PrimitiveState, k: &GasConstants) -> RiemannFan {
    let (w_l, _) = riemann_invariants(left, k);
    RiemannFan {
        left: *left,
        right: *right,
        wave1: Wave::Rarefaction {
            head: left.u - sound_speed(left, k),
            tail: w_l,
        },
        wave3: Wave::None,
        star: None,
        vacuum_span: Some((w_l, f64::INFINITY)),
    }
}

fn all_vacuum_fan(left: &PrimitiveState, right: &PrimitiveState) -> RiemannFan {
    RiemannFan {
        left: *left,
        right: *right,
        wave1: Wave::None,
        wave3: Wave::None,
        star: None,
        vacuum_span: Some((f64::NEG_INFINITY, f64::INFINITY)),
    }
}

/// State of the self-similar solution on the ray `xi = x/t`.
///
/// Inside rarefactions the opposite invariant and the entropy are constant
/// and the ray condition `xi = u -/+ c` closes the system. Inside interior
/// vacuum the density is zero and the auxiliary velocity interpolates
/// linearly between the edge velocities.
pub fn sample(fan: &RiemannFan, xi: f64, k: &GasConstants) -> PrimitiveState {
    match &fan.star {
        Some(star) => sample_star_fan(fan, star, xi, k),
        None => sample_vacuum_fan(fan, xi, k),
    }
}

fn sample_star_fan(
    fan: &RiemannFan,
    star: &StarRegion,
    xi: f64,
    k: &GasConstants,
) -> PrimitiveState {
    match fan.wave1 {
        Wave::Shock { speed } => {
            if xi < speed {
                return fan.left;
            }
        }
        Wave::Rarefaction { head, tail } => {
            if xi < head {
                return fan.left;
            }
            if xi < tail {
                return rarefaction_interior(xi, &fan.left, k, -1.0);
            }
        }
        Wave::None => unreachable!("star fan has a 1-wave"),
    }
    if xi < star.velocity {
        return PrimitiveState::new(star.rho_left, star.velocity, fan.left.s);
    }
    match fan.wave3 {
        Wave::Shock { speed } => {
            if xi < speed {
                return PrimitiveState::new(star.rho_right, star.velocity, fan.right.s);
            }
        }
        Wave::Rarefaction { head, tail } => {
            if xi < tail {
                return PrimitiveState::new(star.rho_right, star.velocity, fan.right.s);
            }
            if xi < head {
                return rarefaction_interior(xi, &fan.right, k, 1.0);
            }
        }
        Wave::None => unreachable!("star fan has a 3-wave"),
    }
    fan.right
}

/// Interior of a rarefaction attached to `edge`; `sign` is -1 for the slow
/// family (ray xi = u - c) and +1 for the fast family (xi = u + c).
fn rarefaction_interior(
    xi: f64,
    edge: &PrimitiveState,
    k: &GasConstants,
    sign: f64,
) -> PrimitiveState {
    let e = k.theta_exp(edge.s);
    let (w, z) = riemann_invariants(edge, k);
    // e rho^theta = |invariant - xi| / (1 + theta)
    let gap = if sign < 0.0 { w - xi } else { xi - z };
    let gap = gap.max(0.0) / (1.0 + k.theta);
    let rho = (gap / e).powf(1.0 / k.theta);
    let u = xi - sign * k.theta * gap;
    PrimitiveState::new(rho, u, edge.s)
}

fn sample_vacuum_fan(fan: &RiemannFan, xi: f64, k: &GasConstants) -> PrimitiveState {
    let (lo, hi) = fan.vacuum_span.expect("vacuum fan carries a span");
    match (fan.left.rho > 0.0, fan.right.rho > 0.0) {
        (true, true) => {
            let Wave::Rarefaction { head: h1, .. } = fan.wave1 else {
                unreachable!()
            };
            let Wave::Rarefaction { head: h3, .. } = fan.wave3 else {
                unreachable!()
            };
            if xi < h1 {
                fan.left
            } else if xi < lo {
                rarefaction_interior(xi, &fan.left, k, -1.0)
            } else if xi <= hi {
                // Edge velocities are w(left) = lo and z(right) = hi.
                PrimitiveState::new(0.0, xi, fan.left.s)
            } else if xi < h3 {
                rarefaction_interior(xi, &fan.right, k, 1.0)
            } else {
                fan.right
            }
        }
        (false, true) => {
            let Wave::Rarefaction { head, tail } = fan.wave3 else {
                unreachable!()
            };
            if xi < tail {
                fan.left
            } else if xi < head {
                rarefaction_interior(xi, &fan.right, k, 1.0)
            } else {
                fan.right
            }
        }
        (true, false) => {
            let Wave::Rarefaction { head, tail } = fan.wave1 else {
                unreachable!()
            };
            if xi < head {
                fan.left
            } else if xi < tail {
                rarefaction_interior(xi, &fan.left, k, -1.0)
            } else {
                fan.right
            }
        }
        (false, false) => {
            // Both data vacuum: auxiliary velocity interpolated between the
            // data velocities over their spanned interval.
            let (ul, ur) = (fan.left.u, fan.right.u);
            let (lo, hi) = (ul.min(ur), ul.max(ur));
            let u = if xi <= lo {
                if ul <= ur {
                    ul
                } else {
                    ur
                }
            } else if xi >= hi {
                if ul <= ur {
                    ur
                } else {
                    ul
                }
            } else {
                ul + (ur - ul) * (xi - lo) / (hi - lo)
            };
            PrimitiveState::new(0.0, u, 0.5 * (fan.left.s + fan.right.s))
        }
    }
}

/// Largest absolute characteristic speed over the fan; at least |u*|.
pub fn max_wave_speed(fan: &RiemannFan) -> f64 {
    let mut m: f64 = 0.0;
    for s in fan.wave_speeds() {
        m = m.max(s.abs());
    }
    if let Some((lo, hi)) = fan.vacuum_span {
        if lo.is_finite() {
            m = m.max(lo.abs());
        }
        if hi.is_finite() {
            m = m.max(hi.abs());
        }
    }
    m
}

/// The Riemann invariants on both sides of the contact:
/// (w, z) left of the contact followed by (w, z) right of it.
/// w + z = 2 u* on both sides; w - z scales by
/// e^{theta (S_l - S_r) / (gamma K)} from right to left.
pub fn contact_jump_invariants(
    fan: &RiemannFan,
    k: &GasConstants,
) -> Result<(f64, f64, f64, f64)> {
    let star = fan
        .star
        .as_ref()
        .ok_or_else(|| Error::InvalidState("vacuum fan has no contact".into()))?;
    let (wl, zl) = riemann_invariants(
        &PrimitiveState::new(star.rho_left, star.velocity, fan.left.s),
        k,
    );
    let (wr, zr) = riemann_invariants(
        &PrimitiveState::new(star.rho_right, star.velocity, fan.right.s),
        k,
    );
    Ok((wl, zl, wr, zr))
}
