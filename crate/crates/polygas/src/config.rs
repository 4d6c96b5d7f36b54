//! Run configuration: flat key-value text with sections, parsed as TOML.
//! All physical parameters are explicit; gamma and the entropy scale have no
//! defaults.

use std::path::Path;

use serde::Deserialize;

use crate::entropy_transport::EntropyProfile;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scheme::{Boundary, SchemeKind};
use crate::thermo::GasConstants;

/// Named initial-data generators. Velocities are auxiliary where the
/// density vanishes.
#[derive(Debug, Clone)]
pub enum InitialData {
    Uniform {
        rho: f64,
        u: f64,
    },
    RiemannStep {
        rho_left: f64,
        u_left: f64,
        rho_right: f64,
        u_right: f64,
        x_split: f64,
    },
    PeriodicSine {
        rho_mean: f64,
        rho_amp: f64,
        u_mean: f64,
        u_amp: f64,
        mode: usize,
    },
    VacuumPatch {
        rho: f64,
        u: f64,
        patch_lo: f64,
        patch_hi: f64,
    },
    Sod,
}

impl InitialData {
    /// Exact cell averages of (rho, m) over [a, b]. Step-type data are
    /// integrated piecewise; the sine momentum uses quadrature.
    pub fn averages(&self, a: f64, b: f64, domain: (f64, f64)) -> (f64, f64) {
        let len = b - a;
        match *self {
            InitialData::Uniform { rho, u } => (rho, rho * u),
            InitialData::Sod => step_averages(a, b, 1.0, 0.0, 0.125, 0.0, 0.0),
            InitialData::RiemannStep {
                rho_left,
                u_left,
                rho_right,
                u_right,
                x_split,
            } => step_averages(a, b, rho_left, u_left, rho_right, u_right, x_split),
            InitialData::VacuumPatch {
                rho,
                u,
                patch_lo,
                patch_hi,
            } => {
                let inside = (b.min(patch_hi) - a.max(patch_lo)).max(0.0);
                let outside = len - inside;
                (rho * outside / len, rho * u * outside / len)
            }
            InitialData::PeriodicSine {
                rho_mean,
                rho_amp,
                u_mean,
                u_amp,
                mode,
            } => {
                let (x0, x1) = domain;
                let kx = 2.0 * std::f64::consts::PI * mode as f64 / (x1 - x0);
                let rho = |x: f64| rho_mean + rho_amp * (kx * (x - x0)).sin();
                let u = |x: f64| u_mean + u_amp * (kx * (x - x0)).sin();
                // Antiderivative of the sine gives the exact density average.
                let rho_avg = rho_mean
                    - rho_amp / (kx * len) * ((kx * (b - x0)).cos() - (kx * (a - x0)).cos());
                let rule = GaussLegendre::new(20);
                let m_avg = rule.average(a, b, |x| rho(x) * u(x));
                (rho_avg, m_avg)
            }
        }
    }
}

fn step_averages(
    a: f64,
    b: f64,
    rho_l: f64,
    u_l: f64,
    rho_r: f64,
    u_r: f64,
    x_split: f64,
) -> (f64, f64) {
    let len = b - a;
    let left = (b.min(x_split) - a).clamp(0.0, len);
    let right = len - left;
    (
        (rho_l * left + rho_r * right) / len,
        (rho_l * u_l * left + rho_r * u_r * right) / len,
    )
}

/// Diagnostic toggles for a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiagnosticsToggles {
    /// Collect pre-average slab samples and the per-step jump quadratic sum.
    pub jump_sum: bool,
    /// Track the L1 distance to the means (requires the periodic decay
    /// setup, y0(L) a multiple of 2 pi).
    pub decay: bool,
    /// Check the per-step entropy-jump estimate and count violations.
    pub entropy_jump_monitor: bool,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub constants: GasConstants,
    pub profile: EntropyProfile,
    pub initial: InitialData,
    pub n_cells: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub boundary: Boundary,
    pub scheme_kind: SchemeKind,
    pub cfl_number: f64,
    pub t_end: f64,
    pub vacuum_floor: f64,
    /// Snapshot cadence in steps; 0 emits only the initial and final states.
    pub snapshot_every: usize,
    /// Gauss-Legendre order for the entropy cell averages.
    pub entropy_quadrature: usize,
    pub diagnostics: DiagnosticsToggles,
}

impl RunConfig {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        raw.build()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    gas: RawGas,
    grid: RawGrid,
    scheme: RawScheme,
    profile: RawProfile,
    initial: RawInitial,
    diagnostics: Option<RawDiagnostics>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGas {
    gamma: f64,
    gas_const: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n_cells: usize,
    x_min: f64,
    x_max: f64,
    boundary: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    kind: String,
    cfl: f64,
    t_end: f64,
    vacuum_floor: Option<f64>,
    snapshot_every: Option<usize>,
    entropy_quadrature: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    kind: String,
    mean: Option<f64>,
    amplitude: Option<f64>,
    mode: Option<usize>,
    phase: Option<f64>,
    smoothing: Option<f64>,
    max_mode: Option<usize>,
    modes: Option<Vec<(usize, f64, f64)>>,
    coeffs: Option<Vec<(f64, f64)>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    kind: String,
    rho: Option<f64>,
    u: Option<f64>,
    rho_left: Option<f64>,
    u_left: Option<f64>,
    rho_right: Option<f64>,
    u_right: Option<f64>,
    x_split: Option<f64>,
    rho_mean: Option<f64>,
    rho_amp: Option<f64>,
    u_mean: Option<f64>,
    u_amp: Option<f64>,
    mode: Option<usize>,
    patch_lo: Option<f64>,
    patch_hi: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    jump_sum: Option<bool>,
    decay: Option<bool>,
    entropy_jump_monitor: Option<bool>,
}

impl RawConfig {
    fn build(self) -> Result<RunConfig> {
        let constants = GasConstants::new(self.gas.gamma, self.gas.gas_const)
            .map_err(|e| Error::Config(e.to_string()))?;

        if self.grid.n_cells < 2 {
            return Err(Error::Config("grid needs at least 2 cells".into()));
        }
        if !(self.grid.x_max > self.grid.x_min) {
            return Err(Error::Config("x_max must exceed x_min".into()));
        }
        let boundary = match self.grid.boundary.as_str() {
            "periodic" => Boundary::Periodic,
            "constant" | "constant-extension" => Boundary::ConstantExtension,
            other => {
                return Err(Error::Config(format!(
                    "unknown boundary '{other}' (periodic | constant)"
                )))
            }
        };

        let scheme_kind = match self.scheme.kind.as_str() {
            "godunov" => SchemeKind::Godunov,
            "lax-friedrichs" | "lax_friedrichs" => SchemeKind::LaxFriedrichs,
            other => {
                return Err(Error::Config(format!(
                    "unknown scheme '{other}' (godunov | lax-friedrichs)"
                )))
            }
        };
        let cfl = self.scheme.cfl;
        if !(cfl > 0.0 && cfl <= 0.5) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 0.5], got {cfl}"
            )));
        }
        if !(self.scheme.t_end >= 0.0) {
            return Err(Error::Config("t_end must be nonnegative".into()));
        }

        let profile = build_profile(&self.profile)?;
        let initial = build_initial(&self.initial)?;

        let diagnostics = match self.diagnostics {
            Some(d) => DiagnosticsToggles {
                jump_sum: d.jump_sum.unwrap_or(false),
                decay: d.decay.unwrap_or(false),
                entropy_jump_monitor: d.entropy_jump_monitor.unwrap_or(false),
            },
            None => DiagnosticsToggles::default(),
        };

        Ok(RunConfig {
            constants,
            profile,
            initial,
            n_cells: self.grid.n_cells,
            x_min: self.grid.x_min,
            x_max: self.grid.x_max,
            boundary,
            scheme_kind,
            cfl_number: cfl,
            t_end: self.scheme.t_end,
            vacuum_floor: self.scheme.vacuum_floor.unwrap_or(1e-12),
            snapshot_every: self.scheme.snapshot_every.unwrap_or(0),
            entropy_quadrature: self.scheme.entropy_quadrature.unwrap_or(4),
            diagnostics,
        })
    }
}

fn build_profile(raw: &RawProfile) -> Result<EntropyProfile> {
    let mean = raw.mean.unwrap_or(0.0);
    match raw.kind.as_str() {
        "const" => Ok(EntropyProfile::constant(mean)),
        "cos" => Ok(EntropyProfile::cosine(
            mean,
            raw.amplitude
                .ok_or_else(|| Error::Config("cos profile needs 'amplitude'".into()))?,
            raw.mode.unwrap_or(1),
            raw.phase.unwrap_or(0.0),
        )),
        "square" => Ok(EntropyProfile::smoothed_square(
            mean,
            raw.amplitude
                .ok_or_else(|| Error::Config("square profile needs 'amplitude'".into()))?,
            raw.smoothing.unwrap_or(0.01),
            raw.max_mode.unwrap_or(64),
        )),
        "modes" => {
            let modes = raw
                .modes
                .as_ref()
                .ok_or_else(|| Error::Config("modes profile needs 'modes'".into()))?;
            Ok(EntropyProfile::modes(mean, modes))
        }
        "coeffs" => {
            let coeffs = raw
                .coeffs
                .as_ref()
                .ok_or_else(|| Error::Config("coeffs profile needs 'coeffs'".into()))?
                .iter()
                .map(|&(re, im)| num_complex::Complex64::new(re, im))
                .collect();
            Ok(EntropyProfile::from_coeffs(coeffs))
        }
        other => Err(Error::Config(format!(
            "unknown profile '{other}' (const | cos | square | modes | coeffs)"
        ))),
    }
}

fn build_initial(raw: &RawInitial) -> Result<InitialData> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Config(format!("initial '{}' needs '{name}'", raw.kind)))
    };
    let data = match raw.kind.as_str() {
        "uniform" => InitialData::Uniform {
            rho: need(raw.rho, "rho")?,
            u: need(raw.u, "u")?,
        },
        "riemann-step" => InitialData::RiemannStep {
            rho_left: need(raw.rho_left, "rho_left")?,
            u_left: need(raw.u_left, "u_left")?,
            rho_right: need(raw.rho_right, "rho_right")?,
            u_right: need(raw.u_right, "u_right")?,
            x_split: need(raw.x_split, "x_split")?,
        },
        "periodic-sine" => InitialData::PeriodicSine {
            rho_mean: need(raw.rho_mean, "rho_mean")?,
            rho_amp: need(raw.rho_amp, "rho_amp")?,
            u_mean: need(raw.u_mean, "u_mean")?,
            u_amp: need(raw.u_amp, "u_amp")?,
            mode: raw.mode.unwrap_or(1),
        },
        "vacuum-patch" => InitialData::VacuumPatch {
            rho: need(raw.rho, "rho")?,
            u: need(raw.u, "u")?,
            patch_lo: need(raw.patch_lo, "patch_lo")?,
            patch_hi: need(raw.patch_hi, "patch_hi")?,
        },
        "sod" => InitialData::Sod,
        other => {
            return Err(Error::Config(format!(
                "unknown initial data '{other}' \
                 (uniform | riemann-step | periodic-sine | vacuum-patch | sod)"
            )))
        }
    };
    // Nonnegative density everywhere.
    let ok = match data {
        InitialData::Uniform { rho, .. } => rho >= 0.0,
        InitialData::RiemannStep {
            rho_left,
            rho_right,
            ..
        } => rho_left >= 0.0 && rho_right >= 0.0,
        InitialData::PeriodicSine {
            rho_mean, rho_amp, ..
        } => rho_amp.abs() <= rho_mean,
        InitialData::VacuumPatch { rho, .. } => rho >= 0.0,
        InitialData::Sod => true,
    };
    if !ok {
        return Err(Error::Config("initial density must be nonnegative".into()));
    }
    Ok(data)
}
