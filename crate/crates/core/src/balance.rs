//! Bright and dark modes of the balanced bridge, balance detection from the
//! mode-2 signal, and estimation of J_x by sweeping the known coupling J₃.

use rayon::prelude::*;

use crate::dynamics;
use crate::error::{BridgeError, Result};
use crate::linalg::C64;
use crate::network::BridgeConfig;
use crate::reduction::{self, BALANCE_TOL};

/// Default detection threshold, relative to the balanced signal magnitude.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// `A₊ = J₁a₂ + J₂a₃` and `A₋ = J₂a₂ − J₁a₃` (unnormalized), with the
/// frequencies `λ±` of the quadratic form `λ₊A₊†A₊ + λ₋A₋†A₋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkBrightModes {
    pub bright: (f64, f64),
    pub dark: (f64, f64),
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl DarkBrightModes {
    /// Dark amplitude `J₂⟨a₂⟩ − J₁⟨a₃⟩`.
    pub fn dark_amplitude(&self, a2: C64, a3: C64) -> C64 {
        a2 * self.dark.0 + a3 * self.dark.1
    }

    pub fn bright_amplitude(&self, a2: C64, a3: C64) -> C64 {
        a2 * self.bright.0 + a3 * self.bright.1
    }
}

/// Rewrite the mode-2/3 Hamiltonian in bright/dark form.
///
/// Requires `ω₃ − ω₂ = J₀(J₂/J₁ − J₁/J₂)`. For J₁ = J₂ the 2×2 system for λ±
/// is singular and the sum of the frequency equations is combined with
/// `λ₊ − λ₋ = J₀/(J₁J₂)` instead.
pub fn dark_bright_decompose(config: &BridgeConfig) -> Result<DarkBrightModes> {
    let BridgeConfig { j1, j2, j0, .. } = *config;
    let (w2, w3) = (config.omega[1], config.omega[2]);
    if j1 == 0.0 || j2 == 0.0 {
        return Err(BridgeError::NoDarkMode("J1 and J2 must be non-zero".into()));
    }
    let scale = w2.abs().max(w3.abs()).max(1.0);
    let residual = config.detuning_residual();
    if residual.abs() > BALANCE_TOL * scale {
        return Err(BridgeError::NoDarkMode(format!(
            "omega3 - omega2 = {} but J0 (J2/J1 - J1/J2) = {}",
            w3 - w2,
            j0 * (j2 / j1 - j1 / j2)
        )));
    }
    let (a, b) = (j1 * j1, j2 * j2);
    let (lambda_plus, lambda_minus) = if reduction::is_symmetric(config) {
        let sum = (w2 + w3) / (a + b);
        let diff = j0 / (j1 * j2);
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    } else {
        let det = a * a - b * b;
        ((w2 * a - w3 * b) / det, (w3 * a - w2 * b) / det)
    };
    Ok(DarkBrightModes {
        bright: (j1, j2),
        dark: (j2, -j1),
        lambda_plus,
        lambda_minus,
    })
}

/// Number of time samples used by [`check_dark_invariance`].
pub const INVARIANCE_SAMPLES: usize = 200;

/// Largest relative change of `|J₂⟨a₂⟩ − J₁⟨a₃⟩|` over `[0, horizon]` under the
/// full model, starting from unit-amplitude coherent light in mode 2.
///
/// A vanishing initial dark amplitude reports 0.
pub fn check_dark_invariance(config: &BridgeConfig, horizon: f64) -> Result<f64> {
    if !horizon.is_finite() {
        return Err(BridgeError::NonFinite("horizon"));
    }
    if horizon < 0.0 {
        return Err(BridgeError::NegativeTime(horizon));
    }
    let (j1, j2) = (config.j1, config.j2);
    let dark = |a2: C64, a3: C64| (a2 * j2 - a3 * j1).norm();
    let model = crate::network::build_drift(config)?;
    let mean0 = dynamics::initial_state(1.0).mean;
    let start = dark(mean0[1], mean0[2]);
    if start == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for k in 1..=INVARIANCE_SAMPLES {
        let t = horizon * k as f64 / INVARIANCE_SAMPLES as f64;
        let m = dynamics::evolve_mean(&model, &mean0, t)?;
        worst = worst.max((dark(m[1], m[2]) - start).abs() / start);
    }
    Ok(worst)
}

/// True when the signal exceeds `epsilon·alpha`.
pub fn detect_balance(signal: C64, alpha: f64, epsilon: f64) -> bool {
    signal.norm() > epsilon * alpha
}

/// Long-time mode-2 magnitude at balance, `J₂²α/(J₁²+J₂²)`.
pub fn balanced_magnitude(config: &BridgeConfig, alpha: f64) -> f64 {
    let (a, b) = (config.j1 * config.j1, config.j2 * config.j2);
    b * alpha / (a + b)
}

/// [`detect_balance`] with the threshold scaled to the expected balanced signal.
pub fn detect_balance_relative(
    config: &BridgeConfig,
    signal: C64,
    alpha: f64,
    epsilon: f64,
) -> bool {
    signal.norm() > epsilon * balanced_magnitude(config, alpha)
}

/// Relative distance from the balanced envelope below which a grid maximum counts as the balance point.
pub const ON_GRID_TOL: f64 = 1e-9;

/// Result of a J₃ sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct JxEstimate {
    /// `J₂J₃*/J₁`.
    pub jx: f64,
    /// Refined J₃ at the envelope maximum.
    pub j3_peak: f64,
    /// Index of the largest grid sample.
    pub peak_index: usize,
    /// `(J₃, |⟨a₂(t)⟩|)` per grid point.
    pub profile: Vec<(f64, f64)>,
}

/// Estimate the hidden J_x of `device` by sweeping J₃ over `tune_grid`.
///
/// Each grid point evolves `|α⟩₂` to time `t` under the full model. The
/// envelope `|⟨a₂⟩|` peaks where the bridge balances; the peak is refined by a
/// parabola through the log-envelope at the three samples around the maximum,
/// which is exact when the off-balance decay rate is quadratic in the offset.
/// A grid maximum that already carries the balanced envelope `J₂²α/(J₁²+J₂²)`
/// is taken as is.
pub fn estimate_jx(
    device: &BridgeConfig,
    tune_grid: &[f64],
    alpha: f64,
    t: f64,
) -> Result<JxEstimate> {
    if tune_grid.len() < 3 {
        return Err(BridgeError::InvalidParameter {
            name: "tune_grid",
            reason: "needs at least 3 points".into(),
        });
    }
    if tune_grid.iter().any(|x| !x.is_finite()) {
        return Err(BridgeError::NonFinite("tune_grid"));
    }
    if tune_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BridgeError::InvalidParameter {
            name: "tune_grid",
            reason: "must be strictly increasing".into(),
        });
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(BridgeError::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive, got {alpha}"),
        });
    }
    if device.j1 == 0.0 {
        return Err(BridgeError::DivisionByZero("J1"));
    }

    let magnitudes: Vec<f64> = tune_grid
        .par_iter()
        .map(|&j3| dynamics::oracle_means(&device.with_j3(j3), alpha, t).map(|(a2, _)| a2.norm()))
        .collect::<Result<_>>()?;

    let peak_index = magnitudes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    if peak_index == 0 || peak_index == tune_grid.len() - 1 {
        return Err(BridgeError::InconclusiveSweep(tune_grid[peak_index]));
    }

    let log = |m: f64| m.max(f64::MIN_POSITIVE).ln();
    let i = peak_index;
    let target = balanced_magnitude(device, alpha);
    let on_grid = (magnitudes[i] - target).abs() <= ON_GRID_TOL * target;
    let j3_peak = if on_grid {
        tune_grid[i]
    } else {
        parabola_vertex(
            (tune_grid[i - 1], log(magnitudes[i - 1])),
            (tune_grid[i], log(magnitudes[i])),
            (tune_grid[i + 1], log(magnitudes[i + 1])),
        )
    };
    Ok(JxEstimate {
        jx: device.j2 * j3_peak / device.j1,
        j3_peak,
        peak_index,
        profile: tune_grid.iter().copied().zip(magnitudes).collect(),
    })
}

/// Abscissa of the vertex of the parabola through three points; falls back to
/// the middle point when they are collinear.
fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 || !den.is_finite() {
        return x1;
    }
    let v = x1 - 0.5 * num / den;
    v.clamp(x0, x2)
}
