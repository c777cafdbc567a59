//! Exact first- and second-moment propagation of linear Langevin dynamics.
//!
//! For a linear network with Gaussian white noise the moment equations close,
//! so no sample paths are drawn. Quadratures follow `q = a + a†`,
//! `p = (a − a†)/i`, ordered `(q₁…qₙ, p₁…pₙ)`; the vacuum covariance is the
//! identity and a bath of occupation `N` relaxes a lone mode to `(2N+1)·I`.

use nalgebra::{DMatrix, Matrix4};

use crate::error::{BridgeError, Result};
use crate::linalg::{self, CMatrix, CVector, EigenDecomposition, C64};
use crate::network::{build_drift, BridgeConfig, MODES};

/// One white-noise input `Σ_j c_j b` (or `c_j b†` when `conjugate`) with
/// `⟨b†b⟩ = occupation`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseInjection {
    pub coefficients: CVector,
    pub conjugate: bool,
    pub occupation: f64,
}

/// Quadrature diffusion `D = Σ_k (2N_k + 1) B_k B_kᵀ` where `B_k` maps the
/// input's own quadratures onto the system quadratures.
pub fn diffusion_from_injections(injections: &[NoiseInjection], modes: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(2 * modes, 2 * modes);
    for inj in injections {
        let mut b = DMatrix::<f64>::zeros(2 * modes, 2);
        for (j, c) in inj.coefficients.iter().enumerate() {
            // annihilation input b = (Q + iP)/2, creation input b† = (Q − iP)/2
            let sign = if inj.conjugate { -1.0 } else { 1.0 };
            b[(j, 0)] = c.re;
            b[(j, 1)] = -sign * c.im;
            b[(modes + j, 0)] = c.im;
            b[(modes + j, 1)] = sign * c.re;
        }
        d += (&b * b.transpose()) * (2.0 * inj.occupation + 1.0);
    }
    linalg::symmetrize(&d)
}

/// Real `2n × 2n` drift acting on `(q, p)` for the complex drift `m`.
pub fn quadrature_drift(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            a[(i, j)] = z.re;
            a[(i, n + j)] = -z.im;
            a[(n + i, j)] = z.im;
            a[(n + i, n + j)] = z.re;
        }
    }
    a
}

/// Linear drift with matching quadrature drift and diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftModel {
    pub m_complex: CMatrix,
    pub m_quad: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
}

impl DriftModel {
    pub fn new(m_complex: CMatrix, injections: &[NoiseInjection]) -> Result<Self> {
        let n = m_complex.nrows();
        if n != m_complex.ncols() {
            return Err(BridgeError::Numerical("drift must be square".into()));
        }
        if m_complex
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(BridgeError::NonFinite("drift entries"));
        }
        Ok(Self {
            m_quad: quadrature_drift(&m_complex),
            diffusion: diffusion_from_injections(injections, n),
            m_complex,
        })
    }

    pub fn modes(&self) -> usize {
        self.m_complex.nrows()
    }
}

/// First moments and symmetric quadrature covariance of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: CVector,
    pub cov: DMatrix<f64>,
}

impl GaussianMoments {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            mean: CVector::zeros(modes),
            cov: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    /// Product of coherent states with the given amplitudes.
    pub fn coherent(amplitudes: CVector) -> Self {
        let n = amplitudes.len();
        Self {
            mean: amplitudes,
            cov: DMatrix::identity(2 * n, 2 * n),
        }
    }

    pub fn modes(&self) -> usize {
        self.mean.len()
    }

    /// Quadrature means `(⟨q⟩, ⟨p⟩) = (2 Re⟨a⟩, 2 Im⟨a⟩)`.
    pub fn quadrature_mean(&self) -> Vec<f64> {
        let n = self.modes();
        let mut out = vec![0.0; 2 * n];
        for (j, a) in self.mean.iter().enumerate() {
            out[j] = 2.0 * a.re;
            out[n + j] = 2.0 * a.im;
        }
        out
    }

    /// Minimum eigenvalue of `C + iΩ`; non-negative for a physical state.
    pub fn uncertainty_margin(&self) -> f64 {
        linalg::min_uncertainty_eigenvalue(&self.cov)
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        let asym = (&self.cov - self.cov.transpose()).amax();
        asym <= tol && self.uncertainty_margin() >= -tol
    }

    /// Covariance restricted to the given modes, keeping `(q…, p…)` ordering.
    pub fn sub_covariance(&self, modes: &[usize]) -> DMatrix<f64> {
        let n = self.modes();
        let idx: Vec<usize> = modes
            .iter()
            .copied()
            .chain(modes.iter().map(|m| m + n))
            .collect();
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])])
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(BridgeError::NonFinite("time"));
    }
    if t < 0.0 {
        return Err(BridgeError::NegativeTime(t));
    }
    Ok(())
}

/// `exp(M t)·mean0`.
///
/// Uses the eigendecomposition of `M`, so every mode's factor `e^{λt}` keeps
/// full relative precision at long times; falls back to the Padé exponential
/// when the eigenbasis is ill-conditioned.
pub fn evolve_mean(model: &DriftModel, mean0: &CVector, t: f64) -> Result<CVector> {
    check_time(t)?;
    if mean0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(BridgeError::NonFinite("initial mean"));
    }
    if t == 0.0 {
        return Ok(mean0.clone());
    }
    match linalg::eigen_decompose(&model.m_complex) {
        Ok(eig) if eig.condition() < 1e8 => Ok(propagate_with(&eig, mean0, t)),
        _ => Ok(linalg::expm_scaled(&model.m_complex, t) * mean0),
    }
}

pub(crate) fn propagate_with(eig: &EigenDecomposition, mean0: &CVector, t: f64) -> CVector {
    eig.apply_fn(mean0, |l| (l * t).exp())
}

/// Solve `dC/dt = A C + C Aᵀ + D` from `cov0`.
pub fn evolve_covariance(model: &DriftModel, cov0: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    check_time(t)?;
    let dim = model.m_quad.nrows();
    if cov0.nrows() != dim || cov0.ncols() != dim {
        return Err(BridgeError::Numerical(format!(
            "covariance must be {dim}x{dim}"
        )));
    }
    Ok(linalg::propagate_covariance(
        &model.m_quad,
        &model.diffusion,
        cov0,
        t,
    ))
}

pub fn evolve(model: &DriftModel, state: &GaussianMoments, t: f64) -> Result<GaussianMoments> {
    Ok(GaussianMoments {
        mean: evolve_mean(model, &state.mean, t)?,
        cov: evolve_covariance(model, &state.cov, t)?,
    })
}

/// Full-model moments of modes 2 and 3.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSignal {
    pub a2: C64,
    pub a3: C64,
    /// Covariance of `(q₂, q₃, p₂, p₃)`.
    pub cov: Matrix4<f64>,
    pub state: GaussianMoments,
}

/// Initial state `|0⟩₁|α⟩₂|0⟩₃|0⟩₄`.
pub fn initial_state(alpha: f64) -> GaussianMoments {
    let mut mean = CVector::zeros(MODES);
    mean[1] = C64::new(alpha, 0.0);
    GaussianMoments::coherent(mean)
}

/// Evolve `|0⟩|α⟩|0⟩|0⟩` under the full four-mode model to time `t`.
pub fn oracle_signal(config: &BridgeConfig, alpha: f64, t: f64) -> Result<OracleSignal> {
    check_time(t)?;
    if !alpha.is_finite() {
        return Err(BridgeError::NonFinite("alpha"));
    }
    let model = build_drift(config)?;
    let state = evolve(&model, &initial_state(alpha), t)?;
    let sub = state.sub_covariance(&[1, 2]);
    Ok(OracleSignal {
        a2: state.mean[1],
        a3: state.mean[2],
        cov: Matrix4::from_fn(|i, j| sub[(i, j)]),
        state,
    })
}

/// First moments of modes 2 and 3 only; skips the covariance solve.
pub fn oracle_means(config: &BridgeConfig, alpha: f64, t: f64) -> Result<(C64, C64)> {
    let model = build_drift(config)?;
    let mean = evolve_mean(&model, &initial_state(alpha).mean, t)?;
    Ok((mean[1], mean[2]))
}

/// Time after which every full-model mode except the slowest has decayed by
/// `tol` in amplitude.
///
/// The reduced relaxation time assumes κ ≫ J; when the end modes hybridize
/// with the bright mode the full model relaxes more slowly, and this
/// horizon tracks that.
pub fn settling_time(config: &BridgeConfig, tol: f64) -> Result<f64> {
    let model = build_drift(config)?;
    let values = linalg::eigenvalues(&model.m_complex)?;
    let mut rates: Vec<f64> = values.iter().map(|z| -z.re).collect();
    rates.sort_by(f64::total_cmp);
    let gap = rates
        .get(1)
        .copied()
        .filter(|g| *g > 0.0)
        .ok_or_else(|| BridgeError::Numerical("full drift has no damped transient".into()))?;
    Ok(-tol.ln() / gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::drift_matrix;

    fn decoupled() -> BridgeConfig {
        let mut c = BridgeConfig::reference();
        c.j1 = 0.0;
        c.j2 = 0.0;
        c.j3 = 0.0;
        c.jx = 0.0;
        c.j0 = 0.0;
        c
    }

    #[test]
    fn quadrature_drift_matches_complex_action() {
        let m = drift_matrix(&BridgeConfig::reference().with_jx(12.5));
        let a = quadrature_drift(&m);
        let x = CVector::from_vec(vec![
            C64::new(0.3, -1.1),
            C64::new(2.0, 0.4),
            C64::new(-0.7, 0.0),
            C64::new(0.1, 0.9),
        ]);
        let y = &m * &x;
        let xq = GaussianMoments::coherent(x).quadrature_mean();
        let yq = &a * nalgebra::DVector::from_vec(xq);
        let expect = GaussianMoments::coherent(y).quadrature_mean();
        for (u, v) in yq.iter().zip(expect.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let model = build_drift(&BridgeConfig::reference()).unwrap();
        let x = initial_state(3.0).mean;
        assert_eq!(evolve_mean(&model, &x, 0.0).unwrap(), x);
        assert!(evolve_mean(&model, &x, -1.0).is_err());
        let bad = CVector::from_element(4, C64::new(f64::NAN, 0.0));
        assert!(matches!(
            evolve_mean(&model, &bad, 1.0),
            Err(BridgeError::NonFinite(_))
        ));
    }

    #[test]
    fn free_evolution_rotates_phase() {
        let model = build_drift(&decoupled()).unwrap();
        let alpha = 2.5;
        for t in [0.01, 0.3, 1.7] {
            let out = evolve_mean(&model, &initial_state(alpha).mean, t).unwrap();
            let expect = C64::new(0.0, -100.0 * t).exp() * alpha;
            assert!((out[1] - expect).norm() < 1e-11);
        }
    }

    #[test]
    fn semigroup_property() {
        let model = build_drift(&BridgeConfig::reference().with_jx(13.0)).unwrap();
        let x = initial_state(1.0).mean;
        let (t1, t2) = (0.21, 0.43);
        let direct = evolve_mean(&model, &x, t1 + t2).unwrap();
        let staged = evolve_mean(&model, &evolve_mean(&model, &x, t1).unwrap(), t2).unwrap();
        assert!((direct - staged).norm() < 1e-10);
    }

    #[test]
    fn rotation_preserves_identity_covariance() {
        // pure rotation: skew-symmetric A, no diffusion
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(0.0, -3.0),
            C64::new(0.0, 1.5),
        ]));
        let model = DriftModel::new(m, &[]).unwrap();
        let c = evolve_covariance(&model, &DMatrix::identity(4, 4), 2.3).unwrap();
        assert!((c - DMatrix::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn lone_thermal_mode_relaxes_to_2n_plus_1() {
        let c = decoupled().with_occupations(2.0, 0.0);
        let model = build_drift(&c).unwrap();
        let cov = evolve_covariance(&model, &DMatrix::identity(8, 8), 5.0).unwrap();
        assert!((cov[(0, 0)] - 5.0).abs() < 1e-9);
        assert!((cov[(4, 4)] - 5.0).abs() < 1e-9);
        assert!(cov[(0, 4)].abs() < 1e-9);
        // undamped modes keep their vacuum noise
        assert!((cov[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_channel_diffusion() {
        // loss and gain on mode 2 each contribute 2·rate (zero-occupation inputs)
        let c = decoupled().with_gain_compensation(0.7, 0.0);
        let d = build_drift(&c).unwrap().diffusion;
        assert!((d[(1, 1)] - 2.0 * 0.7 * 2.0).abs() < 1e-12);
        assert!((d[(5, 5)] - 2.0 * 0.7 * 2.0).abs() < 1e-12);
        assert!(d[(1, 5)].abs() < 1e-15);
    }

    #[test]
    fn zero_temperature_balanced_bridge_stays_coherent() {
        let sig = oracle_signal(&BridgeConfig::reference(), 1e4, 0.25).unwrap();
        assert!((sig.cov - Matrix4::identity()).amax() < 1e-6);
        assert!(sig.state.is_physical(1e-9));
    }

    #[test]
    fn vacuum_stays_centred() {
        for t in [0.0, 0.1, 1.0] {
            let s = oracle_signal(&BridgeConfig::reference().with_jx(12.0), 0.0, t).unwrap();
            assert_eq!(s.a2, C64::new(0.0, 0.0));
            assert_eq!(s.a3, C64::new(0.0, 0.0));
        }
        assert!(matches!(
            oracle_signal(&BridgeConfig::reference(), 1.0, -0.1),
            Err(BridgeError::NegativeTime(_))
        ));
    }

    #[test]
    fn settling_time_uses_second_slowest_mode() {
        let t = settling_time(&BridgeConfig::reference(), 1e-8).unwrap();
        // bright polaritons decay at ~4.87 for the reference bridge
        assert!(t > 3.0 && t < 5.0, "{t}");
    }

    #[test]
    fn reference_balanced_envelope_at_ten_tau() {
        let cfg = BridgeConfig::reference();
        let t = 10.0 * crate::reduction::relaxation_time(&cfg);
        let (a2, _) = oracle_means(&cfg, 1e4, t).unwrap();
        let target = 1e4 * 225.0 / 325.0;
        assert!((a2.norm() / target - 1.0).abs() < 0.02, "{}", a2.norm());
    }
}
