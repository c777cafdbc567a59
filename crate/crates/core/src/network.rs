//! Physical configuration of the four-mode bridge.
//!
//! Units are dimensionless with ħ = k_B = 1, so frequencies, rates, couplings
//! and temperatures all share one unit.
//!
//! Mode layout (1-based, as in the physical picture):
//!
//! ```text
//!   bath 1 ~ [1] --J1-- [2] --J3-- [4] ~ bath 4
//!             \         |J0       /
//!              `--J2-- [3] --Jx--'
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DriftModel, NoiseInjection};
use crate::error::{BridgeError, Result};
use crate::linalg::{CMatrix, CVector, C64};

pub const MODES: usize = 4;

/// All physical parameters of the bridge.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeConfig {
    pub omega: [f64; MODES],
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub jx: f64,
    pub j0: f64,
    pub kappa1: f64,
    pub kappa4: f64,
    /// Bath temperatures; ignored for a bath whose occupation is given explicitly.
    pub t1: f64,
    pub t4: f64,
    pub n1: Option<f64>,
    pub n4: Option<f64>,
    pub kappa2: f64,
    pub kappa3: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl BridgeConfig {
    /// The balanced reference bridge: ω₂ = 100, ω₃ = 101, κ₁ = κ₄ = 10,
    /// J₁ = 10, J₂ = 15, J₃ = 10, J₀ = 1.2, J_x = 15, zero-temperature baths.
    pub fn reference() -> Self {
        Self {
            omega: [100.0, 100.0, 101.0, 101.0],
            j1: 10.0,
            j2: 15.0,
            j3: 10.0,
            jx: 15.0,
            j0: 1.2,
            kappa1: 10.0,
            kappa4: 10.0,
            t1: 0.0,
            t4: 0.0,
            n1: None,
            n4: None,
            kappa2: 0.0,
            kappa3: 0.0,
            gamma2: 0.0,
            gamma3: 0.0,
        }
    }

    /// Symmetric bridge J₁ = J₂ = `j`, ω₂ = ω₃ = `omega`, balanced at J_x = `j3`.
    pub fn symmetric(j: f64, j3: f64, j0: f64, kappa: f64, omega: f64) -> Self {
        Self {
            omega: [omega; MODES],
            j1: j,
            j2: j,
            j3,
            jx: j3,
            j0,
            kappa1: kappa,
            kappa4: kappa,
            ..Self::reference()
        }
    }

    pub fn with_jx(&self, jx: f64) -> Self {
        Self { jx, ..self.clone() }
    }

    pub fn with_j3(&self, j3: f64) -> Self {
        Self { j3, ..self.clone() }
    }

    pub fn with_occupations(&self, n1: f64, n4: f64) -> Self {
        Self {
            n1: Some(n1),
            n4: Some(n4),
            ..self.clone()
        }
    }

    pub fn with_gain_compensation(&self, kappa2: f64, kappa3: f64) -> Self {
        Self {
            kappa2,
            kappa3,
            gamma2: kappa2,
            gamma3: kappa3,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega1", self.omega[0]),
            ("omega2", self.omega[1]),
            ("omega3", self.omega[2]),
            ("omega4", self.omega[3]),
            ("j1", self.j1),
            ("j2", self.j2),
            ("j3", self.j3),
            ("jx", self.jx),
            ("j0", self.j0),
            ("kappa1", self.kappa1),
            ("kappa4", self.kappa4),
            ("t1", self.t1),
            ("t4", self.t4),
            ("kappa2", self.kappa2),
            ("kappa3", self.kappa3),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(BridgeError::InvalidParameter {
                    name,
                    reason: format!("{v} is not finite"),
                });
            }
        }
        for (name, v) in [("kappa1", self.kappa1), ("kappa4", self.kappa4)] {
            if v <= 0.0 {
                return Err(BridgeError::InvalidParameter {
                    name,
                    reason: format!("bath rate must be > 0, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("t1", self.t1),
            ("t4", self.t4),
            ("kappa2", self.kappa2),
            ("kappa3", self.kappa3),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
        ] {
            if v < 0.0 {
                return Err(BridgeError::InvalidParameter {
                    name,
                    reason: format!("must be >= 0, got {v}"),
                });
            }
        }
        for (name, n) in [("n1", self.n1), ("n4", self.n4)] {
            if let Some(n) = n {
                if !n.is_finite() || n < 0.0 {
                    return Err(BridgeError::InvalidParameter {
                        name,
                        reason: format!("occupation must be finite and >= 0, got {n}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Thermal occupations (N₁, N₄); explicit values take precedence over temperatures.
    pub fn occupations(&self) -> Result<(f64, f64)> {
        let n1 = match self.n1 {
            Some(n) => n,
            None => thermal_occupation(self.omega[0], self.t1)?,
        };
        let n4 = match self.n4 {
            Some(n) => n,
            None => thermal_occupation(self.omega[3], self.t4)?,
        };
        Ok((n1, n4))
    }

    /// `J_x − J₂J₃/J₁`, zero at balance.
    pub fn balance_offset(&self) -> f64 {
        self.jx - self.j2 * self.j3 / self.j1
    }

    /// Residual of the detuning condition `ω₃ − ω₂ = J₀(J₂/J₁ − J₁/J₂)`.
    pub fn detuning_residual(&self) -> f64 {
        (self.omega[2] - self.omega[1]) - self.j0 * (self.j2 / self.j1 - self.j1 / self.j2)
    }

    /// Both balance conditions hold to relative tolerance `tol`.
    pub fn is_balanced(&self, tol: f64) -> bool {
        let coupling_scale = self.jx.abs().max(1.0);
        let freq_scale = self.omega[1].abs().max(self.omega[2].abs()).max(1.0);
        self.j1 != 0.0
            && self.j2 != 0.0
            && self.balance_offset().abs() <= tol * coupling_scale
            && self.detuning_residual().abs() <= tol * freq_scale
            && self.kappa2 == self.gamma2
            && self.kappa3 == self.gamma3
    }

    pub fn is_gain_compensated(&self) -> bool {
        self.kappa2 == self.gamma2 && self.kappa3 == self.gamma3
    }

    pub fn has_intrinsic_loss(&self) -> bool {
        self.kappa2 > 0.0 || self.kappa3 > 0.0 || self.gamma2 > 0.0 || self.gamma3 > 0.0
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        NoiseSpec::from_config(self)
    }

    /// Parse the flat key-value config format.
    pub fn from_toml_str(text: &str) -> Result<(Self, Option<f64>)> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| BridgeError::Config(e.to_string()))?;
        file.into_config()
    }

    /// Serialize to the flat key-value config format, with an optional probe amplitude.
    pub fn to_toml_string(&self, alpha: Option<f64>) -> String {
        toml::to_string(&ConfigFile::from_config(self, alpha))
            .expect("flat config always serializes")
    }
}

/// On-disk representation: one flat table, unknown keys rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    omega1: Option<f64>,
    omega2: f64,
    omega3: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega4: Option<f64>,
    j1: f64,
    j2: f64,
    j3: f64,
    jx: f64,
    #[serde(default)]
    j0: f64,
    kappa1: f64,
    kappa4: f64,
    #[serde(default)]
    t1: f64,
    #[serde(default)]
    t4: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    n1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n4: Option<f64>,
    #[serde(default)]
    kappa2: f64,
    #[serde(default)]
    kappa3: f64,
    #[serde(default)]
    gamma2: f64,
    #[serde(default)]
    gamma3: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

impl ConfigFile {
    fn into_config(self) -> Result<(BridgeConfig, Option<f64>)> {
        // end modes default onto their neighbours: omega1 = omega2, omega4 = omega3
        let config = BridgeConfig {
            omega: [
                self.omega1.unwrap_or(self.omega2),
                self.omega2,
                self.omega3,
                self.omega4.unwrap_or(self.omega3),
            ],
            j1: self.j1,
            j2: self.j2,
            j3: self.j3,
            jx: self.jx,
            j0: self.j0,
            kappa1: self.kappa1,
            kappa4: self.kappa4,
            t1: self.t1,
            t4: self.t4,
            n1: self.n1,
            n4: self.n4,
            kappa2: self.kappa2,
            kappa3: self.kappa3,
            gamma2: self.gamma2,
            gamma3: self.gamma3,
        };
        config.validate()?;
        if let Some(a) = self.alpha {
            if !a.is_finite() || a <= 0.0 {
                return Err(BridgeError::InvalidParameter {
                    name: "alpha",
                    reason: format!("must be > 0, got {a}"),
                });
            }
        }
        Ok((config, self.alpha))
    }

    fn from_config(c: &BridgeConfig, alpha: Option<f64>) -> Self {
        Self {
            omega1: Some(c.omega[0]),
            omega2: c.omega[1],
            omega3: c.omega[2],
            omega4: Some(c.omega[3]),
            j1: c.j1,
            j2: c.j2,
            j3: c.j3,
            jx: c.jx,
            j0: c.j0,
            kappa1: c.kappa1,
            kappa4: c.kappa4,
            t1: c.t1,
            t4: c.t4,
            n1: c.n1,
            n4: c.n4,
            kappa2: c.kappa2,
            kappa3: c.kappa3,
            gamma2: c.gamma2,
            gamma3: c.gamma3,
            alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Damping into a bath, noise enters as `√(2κ) a_in`.
    Loss,
    /// Amplification, noise enters as `−√(2γ) d_in†` with `⟨d_in d_in†⟩ = δ`.
    Gain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    /// 0-based mode index.
    pub mode: usize,
    pub rate: f64,
    pub occupation: f64,
    pub kind: ChannelKind,
}

/// Input-noise statistics of the full bridge.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub n1: f64,
    pub n4: f64,
    pub channels: Vec<NoiseChannel>,
}

impl NoiseSpec {
    pub fn from_config(config: &BridgeConfig) -> Result<Self> {
        config.validate()?;
        let (n1, n4) = config.occupations()?;
        let mut channels = vec![
            NoiseChannel {
                mode: 0,
                rate: config.kappa1,
                occupation: n1,
                kind: ChannelKind::Loss,
            },
            NoiseChannel {
                mode: 3,
                rate: config.kappa4,
                occupation: n4,
                kind: ChannelKind::Loss,
            },
        ];
        for (mode, loss, gain) in [
            (1, config.kappa2, config.gamma2),
            (2, config.kappa3, config.gamma3),
        ] {
            if loss > 0.0 {
                channels.push(NoiseChannel {
                    mode,
                    rate: loss,
                    occupation: 0.0,
                    kind: ChannelKind::Loss,
                });
            }
            if gain > 0.0 {
                channels.push(NoiseChannel {
                    mode,
                    rate: gain,
                    occupation: 0.0,
                    kind: ChannelKind::Gain,
                });
            }
        }
        Ok(Self { n1, n4, channels })
    }

    pub fn injections(&self, modes: usize) -> Vec<NoiseInjection> {
        self.channels
            .iter()
            .map(|ch| {
                let mut coefficients = CVector::zeros(modes);
                let amp = (2.0 * ch.rate).sqrt();
                match ch.kind {
                    ChannelKind::Loss => {
                        coefficients[ch.mode] = C64::new(amp, 0.0);
                        NoiseInjection {
                            coefficients,
                            conjugate: false,
                            occupation: ch.occupation,
                        }
                    }
                    ChannelKind::Gain => {
                        coefficients[ch.mode] = C64::new(-amp, 0.0);
                        NoiseInjection {
                            coefficients,
                            conjugate: true,
                            occupation: ch.occupation,
                        }
                    }
                }
            })
            .collect()
    }
}

/// Bose-Einstein occupation `1/(exp(ω/T) − 1)`; zero at `T = 0`.
pub fn thermal_occupation(omega: f64, t: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(BridgeError::NonPositiveFrequency(omega));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(BridgeError::InvalidParameter {
            name: "temperature",
            reason: format!("must be finite and >= 0, got {t}"),
        });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / t).exp_m1())
}

/// The 4×4 complex drift of the Langevin equation `ȧ = M a + a_in`.
pub fn drift_matrix(config: &BridgeConfig) -> CMatrix {
    let i = |x: f64| C64::new(0.0, -x);
    let w = &config.omega;
    let d2 = config.gamma2 - config.kappa2;
    let d3 = config.gamma3 - config.kappa3;
    #[rustfmt::skip]
    let m = CMatrix::from_row_slice(MODES, MODES, &[
        C64::new(-config.kappa1, -w[0]), i(config.j1), i(config.j2), C64::new(0.0, 0.0),
        i(config.j1), C64::new(d2, -w[1]), i(config.j0), i(config.j3),
        i(config.j2), i(config.j0), C64::new(d3, -w[2]), i(config.jx),
        C64::new(0.0, 0.0), i(config.j3), i(config.jx), C64::new(-config.kappa4, -w[3]),
    ]);
    m
}

/// Full 4-mode drift with its quadrature representation and diffusion.
pub fn build_drift(config: &BridgeConfig) -> Result<DriftModel> {
    let noise = NoiseSpec::from_config(config)?;
    DriftModel::new(drift_matrix(config), &noise.injections(MODES))
}

/// Quadrature diffusion of the full bridge, `(q₁…q₄, p₁…p₄)` ordering.
pub fn diffusion_matrix(config: &BridgeConfig) -> Result<DMatrix<f64>> {
    Ok(build_drift(config)?.diffusion)
}

/// Unknown coupling at balance, `J_x = J₂J₃/J₁`.
pub fn balance_coupling(j1: f64, j2: f64, j3: f64) -> Result<f64> {
    if j1 == 0.0 {
        return Err(BridgeError::DivisionByZero("J1 = 0 in balance coupling"));
    }
    Ok(j2 * j3 / j1)
}

/// The J₀ a balanced bridge needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum J0Requirement {
    Value(f64),
    /// J₁ = J₂ with ω₂ = ω₃: any J₀ balances.
    Unconstrained,
}

/// Solve `ω₃ − ω₂ = J₀(J₂/J₁ − J₁/J₂)` for J₀.
pub fn required_j0(omega2: f64, omega3: f64, j1: f64, j2: f64) -> Result<J0Requirement> {
    if j1 == 0.0 || j2 == 0.0 {
        return Err(BridgeError::DivisionByZero("J1 and J2 must be non-zero"));
    }
    let denom = j2 * j2 - j1 * j1;
    let scale = (j1 * j1).max(j2 * j2);
    if denom.abs() <= 1e-12 * scale {
        let fscale = omega2.abs().max(omega3.abs()).max(1.0);
        if (omega3 - omega2).abs() <= 1e-12 * fscale {
            return Ok(J0Requirement::Unconstrained);
        }
        return Err(BridgeError::NoBalancePossible { omega2, omega3 });
    }
    Ok(J0Requirement::Value((omega3 - omega2) * j1 * j2 / denom))
}

/// Linearized optomechanical coupling `J = G β`.
pub fn effective_coupling(g: f64, beta: f64) -> f64 {
    g * beta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_limits() {
        assert_eq!(thermal_occupation(1.0, 0.0).unwrap(), 0.0);
        let w = 3.7;
        assert!((thermal_occupation(w, w / 2f64.ln()).unwrap() - 1.0).abs() < 1e-12);
        // 1/(e - 1)
        assert!(
            (thermal_occupation(100.0, 100.0).unwrap() - 0.581_976_706_869_326_4).abs() < 1e-12
        );
        assert!(matches!(
            thermal_occupation(0.0, 1.0),
            Err(BridgeError::NonPositiveFrequency(_))
        ));
        assert!(thermal_occupation(-1.0, 0.0).is_err());
    }

    #[test]
    fn decoupled_drift_is_diagonal() {
        let mut c = BridgeConfig::reference();
        c.j1 = 0.0;
        c.j2 = 0.0;
        c.j3 = 0.0;
        c.jx = 0.0;
        c.j0 = 0.0;
        let m = drift_matrix(&c);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(m[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(m[(0, 0)], C64::new(-10.0, -100.0));
        assert_eq!(m[(1, 1)], C64::new(0.0, -100.0));
        assert_eq!(m[(2, 2)], C64::new(0.0, -101.0));
        assert_eq!(m[(3, 3)], C64::new(-10.0, -101.0));
    }

    #[test]
    fn reference_drift_entries() {
        let m = drift_matrix(&BridgeConfig::reference());
        // 0-based: (1,3) is J3 between modes 2 and 4, (2,3) is Jx between modes 3 and 4
        assert_eq!(m[(1, 3)], C64::new(0.0, -10.0));
        assert_eq!(m[(2, 3)], C64::new(0.0, -15.0));
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(m[(i, j)].re, 0.0);
                    assert_eq!(m[(i, j)], m[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn gain_and_loss_enter_the_diagonal() {
        let c = BridgeConfig::reference().with_gain_compensation(1.0, 1.0);
        let m = drift_matrix(&c);
        assert_eq!(m, drift_matrix(&BridgeConfig::reference()));
        let mut lossy = BridgeConfig::reference();
        lossy.kappa2 = 0.5;
        lossy.gamma3 = 0.25;
        let m = drift_matrix(&lossy);
        assert_eq!(m[(1, 1)].re, -0.5);
        assert_eq!(m[(2, 2)].re, 0.25);
    }

    #[test]
    fn balance_arithmetic() {
        assert_eq!(balance_coupling(10.0, 15.0, 10.0).unwrap(), 15.0);
        assert_eq!(balance_coupling(4.0, 4.0, 7.5).unwrap(), 7.5);
        assert_eq!(balance_coupling(2.0, 3.0, 7.0).unwrap(), 10.5);
        assert!(matches!(
            balance_coupling(0.0, 1.0, 1.0),
            Err(BridgeError::DivisionByZero(_))
        ));

        match required_j0(100.0, 101.0, 10.0, 15.0).unwrap() {
            J0Requirement::Value(v) => assert!((v - 1.2).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            required_j0(50.0, 50.0, 3.0, 3.0).unwrap(),
            J0Requirement::Unconstrained
        );
        assert_eq!(
            required_j0(100.0, 100.0, 10.0, 15.0).unwrap(),
            J0Requirement::Value(0.0)
        );
        assert!(matches!(
            required_j0(100.0, 101.0, 10.0, 10.0),
            Err(BridgeError::NoBalancePossible { .. })
        ));
    }

    #[test]
    fn optomechanical_coupling() {
        assert_eq!(effective_coupling(0.0, 3.0), 0.0);
        assert_eq!(effective_coupling(1.0, 10.0), 10.0);
        assert_eq!(effective_coupling(0.5, 20.0), 10.0);
    }

    #[test]
    fn validation_rejects_bad_rates() {
        let mut c = BridgeConfig::reference();
        c.kappa1 = 0.0;
        assert!(c.validate().is_err());
        let mut c = BridgeConfig::reference();
        c.t4 = -1.0;
        assert!(c.validate().is_err());
        let mut c = BridgeConfig::reference();
        c.gamma2 = -0.1;
        assert!(c.validate().is_err());
        let mut c = BridgeConfig::reference();
        c.j3 = f64::NAN;
        assert!(c.validate().is_err());
        assert!(BridgeConfig::reference().validate().is_ok());
    }

    #[test]
    fn explicit_occupation_wins_over_temperature() {
        let mut c = BridgeConfig::reference();
        c.t1 = 50.0;
        c.n1 = Some(2.0);
        let (n1, n4) = c.occupations().unwrap();
        assert_eq!(n1, 2.0);
        assert_eq!(n4, 0.0);
        c.n1 = None;
        let (n1, _) = c.occupations().unwrap();
        assert!((n1 - thermal_occupation(100.0, 50.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn config_file_parsing() {
        let text = "omega2 = 100\nomega3 = 101\nj1 = 10\nj2 = 15\nj3 = 10\njx = 15\nj0 = 1.2\n\
                    kappa1 = 10\nkappa4 = 10\nalpha = 1e4\n";
        let (c, alpha) = BridgeConfig::from_toml_str(text).unwrap();
        assert_eq!(c, BridgeConfig::reference());
        assert_eq!(alpha, Some(1e4));

        let bad = format!("{text}bogus = 1\n");
        assert!(matches!(
            BridgeConfig::from_toml_str(&bad),
            Err(BridgeError::Config(_))
        ));
        let neg = text.replace("kappa1 = 10", "kappa1 = -1");
        assert!(BridgeConfig::from_toml_str(&neg).is_err());
    }

    #[test]
    fn noise_channels() {
        let c = BridgeConfig::reference()
            .with_gain_compensation(1.0, 0.0)
            .with_occupations(2.0, 0.5);
        let spec = c.noise_spec().unwrap();
        assert_eq!(spec.channels.len(), 4);
        assert_eq!(spec.channels[0].occupation, 2.0);
        assert_eq!(spec.channels[3].kind, ChannelKind::Gain);
        assert_eq!(spec.channels[3].occupation, 0.0);
    }
}
