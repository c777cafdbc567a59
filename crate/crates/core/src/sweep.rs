//! Precision of J_x across a grid of J_x values at fixed probing time.

use rayon::prelude::*;

use crate::error::{BridgeError, Result};
use crate::metrology;
use crate::network::{balance_coupling, BridgeConfig};
use crate::reduction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Columns {
    #[default]
    Both,
    NumericOnly,
    AnalyticOnly,
}

impl Columns {
    fn numeric(self) -> bool {
        self != Columns::AnalyticOnly
    }

    fn analytic(self) -> bool {
        self != Columns::NumericOnly
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub jx_min: f64,
    pub jx_max: f64,
    pub steps: usize,
    pub alpha: f64,
    /// Probing time in units of the relaxation time τ.
    pub horizon_mult: f64,
    pub columns: Columns,
}

impl SweepOptions {
    /// The reference sweep: J_x ∈ [5, 25] in 201 points, α = 10⁴, t = 10τ.
    pub fn reference() -> Self {
        Self {
            jx_min: 5.0,
            jx_max: 25.0,
            steps: 201,
            alpha: 1e4,
            horizon_mult: 10.0,
            columns: Columns::Both,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let span = self.jx_max - self.jx_min;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.jx_min + span * i as f64 / last)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.steps < 3 {
            return Err(BridgeError::InvalidParameter {
                name: "steps",
                reason: format!("need at least 3, got {}", self.steps),
            });
        }
        if !self.jx_min.is_finite()
            || !self.jx_max.is_finite()
            || !self.alpha.is_finite()
            || !self.horizon_mult.is_finite()
        {
            return Err(BridgeError::NonFinite("sweep options"));
        }
        if self.jx_max <= self.jx_min {
            return Err(BridgeError::InvalidParameter {
                name: "jx_max",
                reason: "must exceed jx_min".into(),
            });
        }
        if self.alpha <= 0.0 {
            return Err(BridgeError::InvalidParameter {
                name: "alpha",
                reason: "must be positive".into(),
            });
        }
        if self.horizon_mult <= 0.0 {
            return Err(BridgeError::InvalidParameter {
                name: "horizon_mult",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub jx: f64,
    /// Closed-form precision; `None` outside its validity regime.
    pub delta_analytic: Option<f64>,
    /// Full-model precision, best quadrature of mode 2.
    pub delta_numeric: Option<f64>,
    /// `log10` of the numeric column, or of the analytic one when only that is computed.
    pub log10_delta: f64,
    pub balanced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `J₂J₃/J₁`.
    pub balance_jx: f64,
    /// Probing time.
    pub t: f64,
}

impl SweepResult {
    /// Row with the smallest `log10_delta`.
    pub fn minimum(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.log10_delta.is_finite())
            .min_by(|a, b| a.log10_delta.total_cmp(&b.log10_delta))
    }

    pub fn balanced_row(&self) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.balanced)
    }
}

/// Closed-form precision at J_x for the balanced reference bridge, where defined:
/// anywhere with `|y| < 1` on the symmetric bridge, only at balance otherwise.
fn analytic_delta(
    reference: &BridgeConfig,
    jx: f64,
    t: f64,
    alpha: f64,
    phi: Option<f64>,
) -> Option<f64> {
    let phi = phi?;
    let y = jx - reference.jx;
    let at_balance = y.abs() <= reduction::BALANCE_TOL * reference.jx.abs().max(1.0);
    let y = if at_balance { 0.0 } else { y };
    if y != 0.0 && reduction::check_symmetric_regime(reference, y).is_err() {
        return None;
    }
    metrology::homodyne_precision(reference, phi, t, alpha, y).ok()
}

/// Evaluate the precision of J_x on the grid of `opts` with the other
/// parameters taken from `config`. Rows are computed in parallel and returned
/// in grid order.
pub fn run_sweep(config: &BridgeConfig, opts: &SweepOptions) -> Result<SweepResult> {
    opts.validate()?;
    config.validate()?;
    let balance_jx = balance_coupling(config.j1, config.j2, config.j3)?;
    let t = opts.horizon_mult * reduction::relaxation_time(config);
    let reference = config.with_jx(balance_jx);
    let phi = metrology::optimal_phase(&reference, t).ok();
    let grid = opts.grid();

    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&jx| -> Result<SweepRow> {
            let delta_numeric = if opts.columns.numeric() {
                Some(metrology::numeric_optimal_precision(
                    &config.with_jx(jx),
                    opts.alpha,
                    t,
                )?)
            } else {
                None
            };
            let delta_analytic = if opts.columns.analytic() {
                analytic_delta(&reference, jx, t, opts.alpha, phi)
            } else {
                None
            };
            let log10_delta = delta_numeric
                .or(delta_analytic)
                .map_or(f64::NAN, f64::log10);
            Ok(SweepRow {
                jx,
                delta_analytic,
                delta_numeric,
                log10_delta,
                balanced: false,
            })
        })
        .collect::<Result<_>>()?;

    let mut result = SweepResult {
        rows,
        balance_jx,
        t,
    };
    let half_step = 0.5 * (opts.jx_max - opts.jx_min) / (opts.steps - 1) as f64;
    if let Some((i, d)) = grid
        .iter()
        .map(|jx| (jx - balance_jx).abs())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
    {
        if d <= half_step {
            result.rows[i].balanced = true;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_endpoints_and_balance() {
        let g = SweepOptions::reference().grid();
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 5.0);
        assert_eq!(g[100], 15.0);
        assert_eq!(g[200], 25.0);
    }

    #[test]
    fn three_point_sweep_marks_middle_row() {
        let opts = SweepOptions {
            jx_min: 14.0,
            jx_max: 16.0,
            steps: 3,
            ..SweepOptions::reference()
        };
        let r = run_sweep(&BridgeConfig::reference(), &opts).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.rows.iter().filter(|r| r.balanced).count(), 1);
        assert!(r.rows[1].balanced);
        // the closed form exists only at balance when J₁ ≠ J₂
        assert!(r.rows[0].delta_analytic.is_none());
        assert!(r.rows[1].delta_analytic.is_some());
    }

    #[test]
    fn grid_missing_balance_marks_nothing() {
        let opts = SweepOptions {
            jx_min: 20.0,
            jx_max: 25.0,
            steps: 6,
            columns: Columns::AnalyticOnly,
            ..SweepOptions::reference()
        };
        let r = run_sweep(&BridgeConfig::reference(), &opts).unwrap();
        assert!(r.balanced_row().is_none());
        assert!(r
            .rows
            .iter()
            .all(|r| r.delta_numeric.is_none() && r.log10_delta.is_nan()));
    }

    #[test]
    fn rejects_short_grids() {
        let opts = SweepOptions {
            steps: 2,
            ..SweepOptions::reference()
        };
        assert!(run_sweep(&BridgeConfig::reference(), &opts).is_err());
    }
}
