//! Effective two-mode model for modes 2 and 3 after eliminating the strongly
//! damped end modes 1 and 4.
//!
//! The elimination is taken in the resonant limit κ ≫ |ω_i − ω_j|: the
//! detuning-dependent denominators `κ − iΔ` are replaced by `κ`. The full
//! four-mode oracle in [`crate::dynamics`] covers the regime where that
//! approximation is poor.

use nalgebra::DMatrix;

use crate::dynamics::{self, DriftModel, NoiseInjection};
use crate::error::{BridgeError, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::network::BridgeConfig;

/// Relative tolerance for treating J₁ and J₂ as equal.
pub const SYMMETRIC_TOL: f64 = 1e-12;
/// Relative tolerance of the algebraic balance test.
pub const BALANCE_TOL: f64 = 1e-9;
/// At or below this `κ_min / max|Δ|` the resonant elimination is flagged.
pub const VALIDITY_THRESHOLD: f64 = 10.0;

/// Which input a reduced noise term comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    Bath1,
    Bath4,
    Loss2,
    Gain2,
    Loss3,
    Gain3,
}

/// Coefficients of one input noise in `(A₂,in, A₃,in)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseTerm {
    pub source: NoiseSource,
    pub into_mode2: C64,
    pub into_mode3: C64,
    /// The input enters as a creation operator (gain noise `d†`).
    pub conjugate: bool,
    pub occupation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    /// `min(κ₁, κ₄) / max|ω_i − ω_j|`; infinite when all modes are degenerate.
    pub ratio: f64,
    pub adiabatic: bool,
}

/// Eliminated-mode model of modes 2 and 3.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub m2: CMatrix,
    pub noise_map: Vec<NoiseTerm>,
    pub validity: Validity,
}

impl ReducedModel {
    /// Two-mode drift and diffusion in `(q₂, q₃, p₂, p₃)` ordering.
    pub fn drift_model(&self) -> Result<DriftModel> {
        let injections: Vec<NoiseInjection> = self
            .noise_map
            .iter()
            .map(|t| NoiseInjection {
                coefficients: CVector::from_vec(vec![t.into_mode2, t.into_mode3]),
                conjugate: t.conjugate,
                occupation: t.occupation,
            })
            .collect();
        DriftModel::new(self.m2.clone(), &injections)
    }

    pub fn diffusion(&self) -> Result<DMatrix<f64>> {
        Ok(self.drift_model()?.diffusion)
    }
}

fn validity(config: &BridgeConfig) -> Validity {
    let w = &config.omega;
    let mut max_detuning: f64 = 0.0;
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            max_detuning = max_detuning.max((w[i] - w[j]).abs());
        }
    }
    let ratio = config.kappa1.min(config.kappa4) / max_detuning;
    Validity {
        ratio,
        adiabatic: ratio > VALIDITY_THRESHOLD,
    }
}

/// Eliminate modes 1 and 4.
///
/// Net loss `κ_j − γ_j` of modes 2 and 3 is added to the diagonal; with
/// `κ_j = γ_j` the drift equals the lossless one and only the noise map grows.
pub fn adiabatic_reduce(config: &BridgeConfig) -> Result<ReducedModel> {
    config.validate()?;
    let (n1, n4) = config.occupations()?;
    let BridgeConfig {
        j1,
        j2,
        j3,
        jx,
        j0,
        kappa1: k1,
        kappa4: k4,
        ..
    } = *config;
    let w = &config.omega;

    let d22 = C64::new(
        -j1 * j1 / k1 - j3 * j3 / k4 - config.kappa2 + config.gamma2,
        -w[1],
    );
    let d33 = C64::new(
        -j2 * j2 / k1 - jx * jx / k4 - config.kappa3 + config.gamma3,
        -w[2],
    );
    let off = C64::new(-j1 * j2 / k1 - j3 * jx / k4, -j0);
    let m2 = CMatrix::from_row_slice(2, 2, &[d22, off, off, d33]);

    let minus_i_sqrt2 = C64::new(0.0, -std::f64::consts::SQRT_2);
    let mut noise_map = vec![
        NoiseTerm {
            source: NoiseSource::Bath1,
            into_mode2: minus_i_sqrt2 * (j1 / k1.sqrt()),
            into_mode3: minus_i_sqrt2 * (j2 / k1.sqrt()),
            conjugate: false,
            occupation: n1,
        },
        NoiseTerm {
            source: NoiseSource::Bath4,
            into_mode2: minus_i_sqrt2 * (j3 / k4.sqrt()),
            into_mode3: minus_i_sqrt2 * (jx / k4.sqrt()),
            conjugate: false,
            occupation: n4,
        },
    ];
    let zero = C64::new(0.0, 0.0);
    let mut local = |source, rate: f64, on_mode2: bool, conjugate: bool| {
        if rate > 0.0 {
            let amp = (2.0 * rate).sqrt() * if conjugate { -1.0 } else { 1.0 };
            let c = C64::new(amp, 0.0);
            let (into_mode2, into_mode3) = if on_mode2 { (c, zero) } else { (zero, c) };
            noise_map.push(NoiseTerm {
                source,
                into_mode2,
                into_mode3,
                conjugate,
                occupation: 0.0,
            });
        }
    };
    local(NoiseSource::Loss2, config.kappa2, true, false);
    local(NoiseSource::Gain2, config.gamma2, true, true);
    local(NoiseSource::Loss3, config.kappa3, false, false);
    local(NoiseSource::Gain3, config.gamma3, false, true);

    Ok(ReducedModel {
        m2,
        noise_map,
        validity: validity(config),
    })
}

/// `τ = 1/(2J₁²/κ₁ + 2J₃²/κ₄)`, the relaxation scale of the bright mode.
pub fn relaxation_time(config: &BridgeConfig) -> f64 {
    1.0 / (2.0 * config.j1 * config.j1 / config.kappa1
        + 2.0 * config.j3 * config.j3 / config.kappa4)
}

pub fn is_symmetric(config: &BridgeConfig) -> bool {
    (config.j1 - config.j2).abs() <= SYMMETRIC_TOL * config.j1.abs().max(config.j2.abs())
}

pub fn require_balanced(config: &BridgeConfig) -> Result<()> {
    if config.j1 == 0.0 || config.j2 == 0.0 {
        return Err(BridgeError::NotBalanced(
            "J1 and J2 must be non-zero".into(),
        ));
    }
    if !config.is_gain_compensated() {
        return Err(BridgeError::NotBalanced(format!(
            "net loss on the inner modes (kappa2 - gamma2 = {}, kappa3 - gamma3 = {}) damps the dark mode",
            config.kappa2 - config.gamma2,
            config.kappa3 - config.gamma3
        )));
    }
    if !config.is_balanced(BALANCE_TOL) {
        return Err(BridgeError::NotBalanced(format!(
            "Jx - J2 J3/J1 = {:.3e}, detuning residual = {:.3e}",
            config.balance_offset(),
            config.detuning_residual()
        )));
    }
    Ok(())
}

/// Eigenvalues of the reduced drift at balance, numeric and closed-form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedSpectrum {
    /// Undamped eigenvalue (numerical).
    pub dark: C64,
    /// Damped eigenvalue (numerical).
    pub damped: C64,
    /// Closed-form dark eigenvalue `−i(J₁²ω₂ − J₂²ω₃)/(J₁² − J₂²)`, or `i(J₀ − ω₃)` when J₁ = J₂.
    pub printed_dark: C64,
    /// Closed-form damped eigenvalue, same branch.
    pub printed_damped: C64,
    /// The closed forms disagree with the numerical eigenvalues.
    pub discrepancy: bool,
}

fn printed_eigenvalues(config: &BridgeConfig) -> (C64, C64) {
    let BridgeConfig {
        j1,
        j2,
        j3,
        j0,
        kappa1: k1,
        kappa4: k4,
        ..
    } = *config;
    let (w2, w3) = (config.omega[1], config.omega[2]);
    if is_symmetric(config) {
        let e1 = C64::new(0.0, j0 - w3);
        (e1, e1 - 2.0 * j1 * j1 / k1 - 2.0 * j3 * j3 / k4)
    } else {
        let e1 = C64::new(0.0, -(j1 * j1 * w2 - j2 * j2 * w3) / (j1 * j1 - j2 * j2));
        let rate = (j1 * j1 + j2 * j2) * (j3 * j3 * k1 + j1 * j1 * k4) / (j1 * j1 * k1 * k4);
        (e1, e1 - rate)
    }
}

/// Split the spectrum of M₂ into its dark (undamped) and damped eigenvalues.
///
/// The dark eigenvalue is the one with the smallest |Re|; ties go to the larger |Im|.
pub fn balanced_eigenvalues(config: &BridgeConfig) -> Result<BalancedSpectrum> {
    let reduced = adiabatic_reduce(config)?;
    let values = linalg::eigenvalues(&reduced.m2)?;
    let (a, b) = (values[0], values[1]);
    let a_first = match a.re.abs().total_cmp(&b.re.abs()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.im.abs() >= b.im.abs(),
    };
    let (dark, damped) = if a_first { (a, b) } else { (b, a) };
    let tol = 1e-9 * reduced.m2.norm().max(1.0);
    if dark.re.abs() > tol {
        return Err(BridgeError::NotBalanced(format!(
            "no undamped eigenvalue: slowest rate is {:.3e}",
            -dark.re
        )));
    }
    let (printed_dark, printed_damped) = printed_eigenvalues(config);
    let close = |x: C64, y: C64| (x - y).norm() <= 1e-9 * y.norm().max(1.0);
    let discrepancy = !(close(printed_dark, dark) && close(printed_damped, damped));
    Ok(BalancedSpectrum {
        dark,
        damped,
        printed_dark,
        printed_damped,
        discrepancy,
    })
}

/// Long-time means of modes 2 and 3 at balance: the projection onto the dark mode
/// `A₋ = J₂a₂ − J₁a₃`, rotating with the numerical dark eigenvalue.
pub fn longtime_mean(
    config: &BridgeConfig,
    mean0_2: C64,
    mean0_3: C64,
    t: f64,
) -> Result<(C64, C64)> {
    require_balanced(config)?;
    let spectrum = balanced_eigenvalues(config)?;
    let (j1, j2) = (config.j1, config.j2);
    let phase = (spectrum.dark * t).exp();
    let norm = j1 * j1 + j2 * j2;
    let dark0 = mean0_2 * j2 - mean0_3 * j1;
    Ok((phase * dark0 * (j2 / norm), -phase * dark0 * (j1 / norm)))
}

/// Asymptotic means from the slowest eigenmode of M₂, defined on and off balance.
///
/// At balance this coincides with [`longtime_mean`]; off balance the slow mode
/// carries the residual decay `Re λ < 0`.
pub fn slow_mode_mean(
    config: &BridgeConfig,
    mean0_2: C64,
    mean0_3: C64,
    t: f64,
) -> Result<(C64, C64)> {
    let m = adiabatic_reduce(config)?.m2;
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    // closed form for the symmetric 2×2 drift: λ± = s ± r, P± = (M − λ∓)/(±2r)
    let s = (a + d) * 0.5;
    let r = ((a - d) * (a - d) * 0.25 + b * b).sqrt();
    if r == C64::new(0.0, 0.0) {
        if b != C64::new(0.0, 0.0) {
            return Err(BridgeError::Numerical("defective reduced drift".into()));
        }
        let phase = (s * t).exp();
        return Ok((mean0_2 * phase, mean0_3 * phase));
    }
    let (slow, fast) = if (s + r).re >= (s - r).re {
        (s + r, s - r)
    } else {
        (s - r, s + r)
    };
    let gap = slow - fast;
    let phase = (slow * t).exp() / gap;
    Ok((
        ((a - fast) * mean0_2 + b * mean0_3) * phase,
        (b * mean0_2 + (d - fast) * mean0_3) * phase,
    ))
}

/// Exact reduced-model means `exp(M₂t)·(a₂(0), a₃(0))`.
pub fn reduced_mean(
    config: &BridgeConfig,
    mean0_2: C64,
    mean0_3: C64,
    t: f64,
) -> Result<(C64, C64)> {
    let model = adiabatic_reduce(config)?.drift_model()?;
    let out = dynamics::evolve_mean(&model, &CVector::from_vec(vec![mean0_2, mean0_3]), t)?;
    Ok((out[0], out[1]))
}

/// Closed-form derivative `d⟨a⟩/dJ_x` of the long-time means at balance.
///
/// J₁ = J₂ uses the symmetric expressions (`Λ/2`), otherwise the general ones
/// with `μ = (J₁²+J₂²)²(J₃²κ₁ + J₁²κ₄ + iJ₀J₁κ₁κ₄/J₂)`.
pub fn longtime_derivative(
    config: &BridgeConfig,
    mean0_2: C64,
    mean0_3: C64,
    t: f64,
) -> Result<(C64, C64)> {
    require_balanced(config)?;
    let spectrum = balanced_eigenvalues(config)?;
    let phase = (spectrum.dark * t).exp();
    let BridgeConfig {
        j1,
        j2,
        j3,
        j0,
        kappa1: k1,
        kappa4: k4,
        ..
    } = *config;
    if is_symmetric(config) {
        let den = C64::new(j3 * j3 * k1 + j2 * j2 * k4, j0 * k1 * k4) * 2.0;
        let c = C64::new(j3 * k1, 0.0) / den;
        Ok((phase * c * mean0_2, -phase * c * mean0_3))
    } else {
        let mu = mu(config);
        let diag = 2.0 * j1.powi(3) * j2 * j3 * k1;
        let cross = (j1 * j1 - j2 * j2) * j1 * j1 * j3 * k1;
        Ok((
            phase * (mean0_2 * diag - mean0_3 * cross) / mu,
            phase * (-mean0_3 * diag - mean0_2 * cross) / mu,
        ))
    }
}

/// `μ = (J₁²+J₂²)²(J₃²κ₁ + J₁²κ₄ + iJ₀J₁κ₁κ₄/J₂)`.
pub fn mu(config: &BridgeConfig) -> C64 {
    let BridgeConfig {
        j1,
        j2,
        j3,
        j0,
        kappa1: k1,
        kappa4: k4,
        ..
    } = *config;
    let s = j1 * j1 + j2 * j2;
    C64::new(j3 * j3 * k1 + j1 * j1 * k4, j0 * j1 * k1 * k4 / j2) * (s * s)
}

/// Coefficients of the second-order expansion in the balance offset `y = J_x − J₃`
/// of the symmetric bridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeExpansion {
    pub gamma_coeff: C64,
    pub lambda_coeff: C64,
    pub y: f64,
}

impl EnvelopeExpansion {
    pub fn new(config: &BridgeConfig, y: f64) -> Self {
        let BridgeConfig {
            j2,
            j3,
            j0,
            kappa1: k1,
            kappa4: k4,
            ..
        } = *config;
        let den = C64::new(j3 * j3 * k1 + j2 * j2 * k4, j0 * k1 * k4);
        Self {
            gamma_coeff: C64::new(j2 * j2, j0 * k1) / (den * 2.0),
            lambda_coeff: C64::new(j3 * k1, 0.0) / den,
            y,
        }
    }
}

/// Means of modes 2 and 3 to second order in `y` for the symmetric bridge
/// (J₁ = J₂, ω₂ = ω₃), valid for `t > τ` and `|y| < 1`.
pub fn envelope_expansion(
    config: &BridgeConfig,
    y: f64,
    t: f64,
    mean0: (C64, C64),
) -> Result<(C64, C64)> {
    check_symmetric_regime(config, y)?;
    let e = EnvelopeExpansion::new(config, y);
    let dark = C64::new(0.0, config.j0 - config.omega[2]);
    let envelope = (dark * t - e.gamma_coeff * (y * y * t)).exp() * 0.5;
    let (a2, a3) = mean0;
    let one = C64::new(1.0, 0.0);
    let m2 = envelope * ((one + e.lambda_coeff * y) * a2 - a3);
    let m3 = -envelope * (a2 - (one - e.lambda_coeff * y) * a3);
    Ok((m2, m3))
}

pub(crate) fn check_symmetric_regime(config: &BridgeConfig, y: f64) -> Result<()> {
    if !is_symmetric(config) {
        return Err(BridgeError::OutOfRegime(
            "the y-expansion needs J1 = J2".into(),
        ));
    }
    let fscale = config.omega[1].abs().max(1.0);
    if (config.omega[1] - config.omega[2]).abs() > SYMMETRIC_TOL * fscale {
        return Err(BridgeError::OutOfRegime(
            "the y-expansion needs omega2 = omega3".into(),
        ));
    }
    if !(y.abs() < 1.0) {
        return Err(BridgeError::OutOfRegime(format!(
            "|y| = {} must be < 1",
            y.abs()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn reference_reduced_drift() {
        let r = adiabatic_reduce(&BridgeConfig::reference()).unwrap();
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(-20.0, -100.0),
                c(-30.0, -1.2),
                c(-30.0, -1.2),
                c(-45.0, -101.0),
            ],
        );
        assert!((r.m2 - expect).norm() < 1e-12);
        assert!(!r.validity.adiabatic);
        assert!((r.validity.ratio - 10.0).abs() < 1e-12);
    }

    #[test]
    fn decoupled_reduced_drift() {
        let mut cfg = BridgeConfig::reference();
        cfg.j1 = 0.0;
        cfg.j2 = 0.0;
        cfg.j3 = 0.0;
        cfg.jx = 0.0;
        cfg.j0 = 0.0;
        let r = adiabatic_reduce(&cfg).unwrap();
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, -100.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -101.0)],
        );
        assert_eq!(r.m2, expect);
    }

    #[test]
    fn compensated_gain_leaves_drift_unchanged() {
        let base = adiabatic_reduce(&BridgeConfig::reference()).unwrap();
        let lossy =
            adiabatic_reduce(&BridgeConfig::reference().with_gain_compensation(1.0, 1.0)).unwrap();
        assert_eq!(base.m2, lossy.m2);
        assert_eq!(lossy.noise_map.len(), 6);
        assert!(lossy.diffusion().unwrap()[(0, 0)] > base.diffusion().unwrap()[(0, 0)]);
    }

    #[test]
    fn reference_spectrum_and_printed_discrepancy() {
        let s = balanced_eigenvalues(&BridgeConfig::reference()).unwrap();
        assert!(s.dark.re.abs() < 1e-9);
        assert!((s.dark - c(0.0, -99.2)).norm() < 1e-9);
        assert!((s.damped - c(-65.0, -101.8)).norm() < 1e-9);
        // the closed form lands on the damped mode's frequency instead
        assert!((s.printed_dark - c(0.0, -101.8)).norm() < 1e-9);
        assert!(s.discrepancy);
    }

    #[test]
    fn symmetric_spectrum() {
        let cfg = BridgeConfig::symmetric(10.0, 10.0, 0.0, 10.0, 100.0);
        let s = balanced_eigenvalues(&cfg).unwrap();
        assert!((s.dark - c(0.0, -100.0)).norm() < 1e-9);
        assert!((s.damped - c(-40.0, -100.0)).norm() < 1e-9);
        assert!(!s.discrepancy);
    }

    #[test]
    fn unbalanced_has_no_dark_eigenvalue() {
        let err = balanced_eigenvalues(&BridgeConfig::reference().with_jx(12.0)).unwrap_err();
        assert!(matches!(err, BridgeError::NotBalanced(_)));
    }

    #[test]
    fn dark_projection() {
        let cfg = BridgeConfig::symmetric(4.0, 6.0, 0.3, 50.0, 80.0);
        let alpha = c(7.0, 0.0);
        let (m2, m3) = longtime_mean(&cfg, alpha, c(0.0, 0.0), 3.0).unwrap();
        assert!((m2.norm() - 3.5).abs() < 1e-12);
        assert!((m3.norm() - 3.5).abs() < 1e-12);

        let fig = BridgeConfig::reference();
        let (m2, m3) = longtime_mean(&fig, c(1e4, 0.0), c(0.0, 0.0), 0.25).unwrap();
        assert!((m2.norm() - 1e4 * 225.0 / 325.0).abs() < 1e-8);
        assert!((m3.norm() - 1e4 * 150.0 / 325.0).abs() < 1e-8);

        // bright-mode initial state is annihilated
        let (m2, m3) = longtime_mean(&fig, c(10.0 * 2.0, 0.0), c(15.0 * 2.0, 0.0), 1.0).unwrap();
        assert!(m2.norm() < 1e-12 && m3.norm() < 1e-12);
        assert!(longtime_mean(&fig.with_jx(14.0), c(1.0, 0.0), c(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn slow_mode_matches_longtime_mean_at_balance() {
        let cfg = BridgeConfig::reference();
        let (a, b) = slow_mode_mean(&cfg, c(1.0, 0.2), c(-0.3, 0.5), 0.7).unwrap();
        let (x, y) = longtime_mean(&cfg, c(1.0, 0.2), c(-0.3, 0.5), 0.7).unwrap();
        assert!((a - x).norm() < 1e-12 && (b - y).norm() < 1e-12);
    }

    #[test]
    fn expansion_anchor_and_real_coefficients() {
        let cfg = BridgeConfig::symmetric(10.0, 10.0, 0.0, 10.0, 100.0);
        let a0 = (c(5.0, 0.0), c(0.0, 0.0));
        let t = 0.9;
        let (e2, e3) = envelope_expansion(&cfg, 0.0, t, a0).unwrap();
        let (l2, l3) = longtime_mean(&cfg, a0.0, a0.1, t).unwrap();
        assert!((e2 - l2).norm() < 1e-12 && (e3 - l3).norm() < 1e-12);
        let e = EnvelopeExpansion::new(&cfg, 0.2);
        assert_eq!(e.gamma_coeff.im, 0.0);
        assert_eq!(e.lambda_coeff.im, 0.0);
        assert!(matches!(
            envelope_expansion(&cfg, 1.0, t, a0),
            Err(BridgeError::OutOfRegime(_))
        ));
        assert!(envelope_expansion(&BridgeConfig::reference(), 0.1, t, a0).is_err());
    }

    #[test]
    fn relaxation_time_of_reference_bridge() {
        assert!((relaxation_time(&BridgeConfig::reference()) - 0.025).abs() < 1e-15);
    }
}
