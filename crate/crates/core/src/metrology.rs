//! Precision of J_x estimation: homodyne error propagation, the Gaussian
//! quantum Fisher information and its Cramér-Rao bound.
//!
//! Quadratures are `X_φ = a e^{iφ} + a† e^{−iφ}`, so a vacuum has unit variance
//! and `d⟨X_φ⟩ = 2 Re(e^{iφ} d⟨a⟩)`.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::dynamics;
use crate::error::{BridgeError, Result};
use crate::linalg::C64;
use crate::network::BridgeConfig;
use crate::reduction::{self, EnvelopeExpansion};

/// Signals whose derivative is below this fraction of its magnitude carry no
/// information at the chosen phase.
pub const VANISHING_DERIVATIVE: f64 = 1e-12;

/// Relative finite-difference step `h = FD_STEP·J₃`.
pub const FD_STEP: f64 = 1e-4;

/// Thermal excess noise of the long-time state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationParams {
    /// Bright-mode occupation `(J₁²N₁κ₄ + J₃²N₄κ₁)/(J₁²κ₄ + J₃²κ₁)`.
    pub f: f64,
    /// Excess variance of `q₂`, `2J₁²f/(J₁²+J₂²)`.
    pub f_c: f64,
    /// `f_c + κ₁κ₂κ₄/(2(J₁²κ₄ + J₃²κ₁))`, the gain-compensated bridge.
    pub f_c_prime: f64,
    /// `2f/(J₁²+J₂²)`, the dimensionful variant missing the `J₁²` factor.
    pub f_c_printed: f64,
}

impl FluctuationParams {
    /// The value that enters the precision bounds: `f′_c` when modes 2 and 3
    /// have intrinsic loss, `f_c` otherwise.
    pub fn effective(&self, config: &BridgeConfig) -> f64 {
        if config.has_intrinsic_loss() {
            self.f_c_prime
        } else {
            self.f_c
        }
    }
}

pub fn quantum_fluctuations(config: &BridgeConfig) -> Result<FluctuationParams> {
    config.validate()?;
    let (n1, n4) = config.occupations()?;
    let BridgeConfig {
        j1,
        j2,
        j3,
        kappa1: k1,
        kappa4: k4,
        ..
    } = *config;
    let weight = j1 * j1 * k4 + j3 * j3 * k1;
    if weight == 0.0 {
        return Err(BridgeError::DivisionByZero("J1^2 kappa4 + J3^2 kappa1"));
    }
    let norm = j1 * j1 + j2 * j2;
    if norm == 0.0 {
        return Err(BridgeError::DivisionByZero("J1^2 + J2^2"));
    }
    let f = (j1 * j1 * n1 * k4 + j3 * j3 * n4 * k1) / weight;
    let f_c = 2.0 * j1 * j1 * f / norm;
    Ok(FluctuationParams {
        f,
        f_c,
        f_c_prime: f_c + k1 * config.kappa2 * k4 / (2.0 * weight),
        f_c_printed: 2.0 * f / norm,
    })
}

/// Fluctuation entering the bounds; rejects unequal intrinsic losses, for
/// which no single `f′_c` exists.
fn effective_fluctuation(config: &BridgeConfig) -> Result<f64> {
    if config.has_intrinsic_loss() && config.kappa2 != config.kappa3 {
        return Err(BridgeError::InvalidParameter {
            name: "kappa3",
            reason: format!(
                "the lossy bound needs kappa2 = kappa3, got {} and {}",
                config.kappa2, config.kappa3
            ),
        });
    }
    Ok(quantum_fluctuations(config)?.effective(config))
}

/// `μ = (J₁²+J₂²)²(J₃²κ₁ + J₁²κ₄ + iJ₀J₁κ₁κ₄/J₂)`.
pub fn mu(config: &BridgeConfig) -> C64 {
    reduction::mu(config)
}

/// `δ°J_x = √(1+f)|J₃²κ₁ + J₂²κ₄ + iJ₀κ₁κ₄|/(J₃κ₁α)` for J₁ = J₂.
pub fn optimal_precision_symmetric(config: &BridgeConfig, alpha: f64, f: f64) -> f64 {
    let BridgeConfig {
        j2,
        j3,
        j0,
        kappa1: k1,
        kappa4: k4,
        ..
    } = *config;
    let den = C64::new(j3 * j3 * k1 + j2 * j2 * k4, j0 * k1 * k4);
    (1.0 + f).sqrt() * den.norm() / (j3 * k1 * alpha)
}

/// `δ°J_x = √(1+f_c)|μ|/(4J₁³J₂J₃κ₁α)`.
pub fn optimal_precision_general(config: &BridgeConfig, alpha: f64, f_c: f64) -> f64 {
    let BridgeConfig {
        j1,
        j2,
        j3,
        kappa1: k1,
        ..
    } = *config;
    (1.0 + f_c).sqrt() * mu(config).norm() / (4.0 * j1.powi(3) * j2 * j3 * k1 * alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() {
        return Err(BridgeError::NonFinite("alpha"));
    }
    if alpha <= 0.0 {
        return Err(BridgeError::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive, got {alpha}"),
        });
    }
    Ok(())
}

/// Phase-optimized homodyne precision at balance for `|α⟩₂|0⟩₃`.
pub fn optimal_homodyne_precision(config: &BridgeConfig, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    reduction::require_balanced(config)?;
    let f = effective_fluctuation(config)?;
    if reduction::is_symmetric(config) {
        Ok(optimal_precision_symmetric(config, alpha, f))
    } else {
        Ok(optimal_precision_general(config, alpha, f))
    }
}

/// `δJ_x = √Var/|2 Re(e^{iφ}D)|`, or infinity when the projected derivative vanishes.
fn error_propagation(variance: f64, derivative: C64, phi: f64) -> f64 {
    let projected = (C64::from_polar(1.0, phi) * derivative).re;
    if projected.abs() <= VANISHING_DERIVATIVE * derivative.norm() || projected == 0.0 {
        return f64::INFINITY;
    }
    variance.sqrt() / (2.0 * projected.abs())
}

/// Analytic long-time derivative `d⟨a₂⟩/dJ_x` for `|α⟩₂|0⟩₃`.
///
/// At `y = 0` both branches use the closed-form derivative at balance; for
/// `y ≠ 0` the symmetric bridge uses the second-order expansion in `y`,
/// evaluated for the balanced reference `config` (J_x = J₃).
pub fn analytic_derivative(config: &BridgeConfig, t: f64, alpha: f64, y: f64) -> Result<C64> {
    reduction::require_balanced(config)?;
    let a0 = C64::new(alpha, 0.0);
    let zero = C64::new(0.0, 0.0);
    if y == 0.0 {
        return Ok(reduction::longtime_derivative(config, a0, zero, t)?.0);
    }
    reduction::check_symmetric_regime(config, y)?;
    let e = EnvelopeExpansion::new(config, y);
    let dark = C64::new(0.0, config.j0 - config.omega[2]);
    let one = C64::new(1.0, 0.0);
    let slope = e.lambda_coeff - e.gamma_coeff * (2.0 * y * t) * (one + e.lambda_coeff * y);
    Ok(slope * (dark * t - e.gamma_coeff * (y * y * t)).exp() * (alpha / 2.0))
}

/// Homodyne precision of `X_φ₂` on mode 2 at time `t` and offset `y = J_x − J₂J₃/J₁`.
///
/// `config` is the balanced reference. The variance is the long-time
/// `1 + f_c` (equal to `1 + f` when J₁ = J₂). Returns `f64::INFINITY` when
/// the quadrature is blind to J_x.
pub fn homodyne_precision(
    config: &BridgeConfig,
    phi2: f64,
    t: f64,
    alpha: f64,
    y: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    if !phi2.is_finite() || !t.is_finite() || !y.is_finite() {
        return Err(BridgeError::NonFinite("phase, time or offset"));
    }
    let tau = reduction::relaxation_time(config);
    if t <= tau {
        return Err(BridgeError::OutOfRegime(format!(
            "t = {t} must exceed the relaxation time {tau}"
        )));
    }
    if y != 0.0 && !reduction::is_symmetric(config) {
        return Err(BridgeError::OutOfRegime(
            "off-balance precision needs J1 = J2".into(),
        ));
    }
    let f = effective_fluctuation(config)?;
    let d = analytic_derivative(config, t, alpha, y)?;
    Ok(error_propagation(1.0 + f, d, phi2))
}

/// Phase `φ₂` in `(−π, π]` that maximizes `|Re(e^{iφ₂} d⟨a₂⟩/dJ_x)|` at balance;
/// it advances with the dark-mode frequency, so it depends on `t`.
pub fn optimal_phase(config: &BridgeConfig, t: f64) -> Result<f64> {
    Ok(-analytic_derivative(config, t, 1.0, 0.0)?.arg())
}

/// Full-model signal derivative and mode-2 covariance at the configured J_x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericSignal {
    pub a2: C64,
    /// Central difference `d⟨a₂⟩/dJ_x`.
    pub derivative: C64,
    /// Covariance of `(q₂, p₂)`.
    pub cov: Matrix2<f64>,
}

pub fn numeric_signal(config: &BridgeConfig, alpha: f64, t: f64) -> Result<NumericSignal> {
    check_alpha(alpha)?;
    let h = FD_STEP * config.j3.abs().max(config.jx.abs()).max(1e-3);
    let (up, _) = dynamics::oracle_means(&config.with_jx(config.jx + h), alpha, t)?;
    let (down, _) = dynamics::oracle_means(&config.with_jx(config.jx - h), alpha, t)?;
    let centre = dynamics::oracle_signal(config, alpha, t)?;
    let c = centre.cov;
    Ok(NumericSignal {
        a2: centre.a2,
        derivative: (up - down) / (2.0 * h),
        cov: Matrix2::new(c[(0, 0)], c[(0, 2)], c[(2, 0)], c[(2, 2)]),
    })
}

/// Homodyne precision of `X_φ₂` from the full model, with the derivative by
/// central differences and the variance from the evolved covariance.
pub fn homodyne_precision_numeric(
    config: &BridgeConfig,
    phi2: f64,
    t: f64,
    alpha: f64,
) -> Result<f64> {
    let s = numeric_signal(config, alpha, t)?;
    let (c, sn) = (phi2.cos(), phi2.sin());
    let variance = c * c * s.cov[(0, 0)] - 2.0 * c * sn * s.cov[(0, 1)] + sn * sn * s.cov[(1, 1)];
    Ok(error_propagation(variance, s.derivative, phi2))
}

/// Best mode-2 quadrature precision from the full model, `1/√(dᵀC⁻¹d)`.
pub fn numeric_optimal_precision(config: &BridgeConfig, alpha: f64, t: f64) -> Result<f64> {
    let s = numeric_signal(config, alpha, t)?;
    let d = Vector2::new(2.0 * s.derivative.re, 2.0 * s.derivative.im);
    let inv = s
        .cov
        .try_inverse()
        .ok_or_else(|| BridgeError::Numerical("singular mode-2 covariance".into()))?;
    let info = (d.transpose() * inv * d)[(0, 0)];
    Ok(if info > 0.0 {
        1.0 / info.sqrt()
    } else {
        f64::INFINITY
    })
}

/// Long-time covariance of `(q₂, q₃, p₂, p₃)` at balance with excess noise `f_c`.
pub fn balanced_covariance(config: &BridgeConfig, f_c: f64) -> Matrix4<f64> {
    let r = config.j2 / config.j1;
    let block = Matrix2::new(1.0 + f_c, f_c * r, f_c * r, 1.0 + f_c * r * r);
    let mut c = Matrix4::zeros();
    c.fixed_view_mut::<2, 2>(0, 0).copy_from(&block);
    c.fixed_view_mut::<2, 2>(2, 2).copy_from(&block);
    c
}

/// Derivative of the long-time quadrature means `(q₂, q₃, p₂, p₃)` with respect to J_x.
///
/// Its length is phase-independent, so the phase is fixed at 0.
pub fn balanced_mean_derivative(config: &BridgeConfig, alpha: f64) -> Vector4<f64> {
    let BridgeConfig {
        j1,
        j2,
        j3,
        kappa1: k1,
        ..
    } = *config;
    let scale = alpha * j1 * j1 * j3 * k1 / mu(config).norm();
    Vector4::new(
        4.0 * j1 * j2 * scale,
        2.0 * (j2 * j2 - j1 * j1) * scale,
        0.0,
        0.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiMode {
    /// Mean-derivative term only.
    Dominant,
    /// Adds the covariance-derivative and purity terms.
    Full,
}

/// Quantum Fisher information of a Gaussian state with covariance `cov`,
/// covariance derivative `dcov` and mean derivative `dmean`.
///
/// Purity is `P = 1/√det C`, unity for the vacuum with unit-variance quadratures.
pub fn gaussian_qfi_from_moments(
    cov: &Matrix4<f64>,
    dcov: &Matrix4<f64>,
    dmean: &Vector4<f64>,
    mode: QfiMode,
) -> Result<f64> {
    let inv = cov
        .try_inverse()
        .ok_or_else(|| BridgeError::Numerical("singular covariance".into()))?;
    let dominant = (dmean.transpose() * inv * dmean)[(0, 0)];
    if mode == QfiMode::Dominant {
        return Ok(dominant);
    }
    let det = cov.determinant();
    let purity = 1.0 / det.sqrt();
    let x = inv * dcov;
    let trace_term = (x * x).trace() / (2.0 * (1.0 + purity * purity));
    // dP/dθ = −P/2 · Tr(C⁻¹C′)
    let dpurity = -0.5 * purity * x.trace();
    let purity_term = if dpurity == 0.0 {
        0.0
    } else {
        2.0 * dpurity * dpurity / (1.0 - purity.powi(4))
    };
    Ok(dominant + trace_term + purity_term)
}

/// `F[J_x]` of the balanced long-time state of modes 2 and 3.
pub fn gaussian_qfi(config: &BridgeConfig, alpha: f64, mode: QfiMode) -> Result<f64> {
    check_alpha(alpha)?;
    reduction::require_balanced(config)?;
    let f_c = effective_fluctuation(config)?;
    let cov = balanced_covariance(config, f_c);
    // f_c depends on J₁, J₃ and the baths but not on J_x
    let dcov = Matrix4::zeros();
    gaussian_qfi_from_moments(&cov, &dcov, &balanced_mean_derivative(config, alpha), mode)
}

/// `g = 2J₂√((1+f_c)J₁² + f_cJ₂²)/((J₁²+J₂²)(1+f_c))`, the ratio of the
/// Cramér-Rao bound to the optimal homodyne precision.
pub fn optimality_gap(j1: f64, j2: f64, f_c: f64) -> f64 {
    let (a, b) = (j1 * j1, j2 * j2);
    2.0 * j2.abs() * ((1.0 + f_c) * a + f_c * b).sqrt() / ((a + b) * (1.0 + f_c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbBound {
    pub bound: f64,
    pub g: f64,
    /// Fluctuation used, `f_c` or `f′_c`.
    pub f_c: f64,
}

/// Quantum Cramér-Rao bound `g√(1+f_c)|μ|/(4J₁³J₂J₃κ₁α)` at balance.
pub fn crb_bound(config: &BridgeConfig, alpha: f64) -> Result<CrbBound> {
    check_alpha(alpha)?;
    reduction::require_balanced(config)?;
    let f_c = effective_fluctuation(config)?;
    let g = optimality_gap(config.j1, config.j2, f_c);
    Ok(CrbBound {
        bound: g * optimal_precision_general(config, alpha, f_c),
        g,
        f_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionReport {
    pub delta_homodyne: f64,
    pub delta_homodyne_optimal: f64,
    pub qfi: f64,
    pub crb: f64,
    pub g: f64,
    /// Phase at which `delta_homodyne` was evaluated.
    pub phi2: f64,
    pub fluctuations: FluctuationParams,
}

/// All precision figures at balance; `phi2 = None` selects the optimal phase at `t`.
pub fn precision_report(
    config: &BridgeConfig,
    alpha: f64,
    t: f64,
    phi2: Option<f64>,
) -> Result<PrecisionReport> {
    let phi2 = match phi2 {
        Some(p) => p,
        None => optimal_phase(config, t)?,
    };
    let qfi = gaussian_qfi(config, alpha, QfiMode::Dominant)?;
    let crb = crb_bound(config, alpha)?;
    Ok(PrecisionReport {
        delta_homodyne: homodyne_precision(config, phi2, t, alpha, 0.0)?,
        delta_homodyne_optimal: optimal_homodyne_precision(config, alpha)?,
        qfi,
        crb: 1.0 / qfi.sqrt(),
        g: crb.g,
        phi2,
        fluctuations: quantum_fluctuations(config)?,
    })
}
