//! Side-by-side comparison of closed-form results against the full-model oracle.

use crate::dynamics;
use crate::error::Result;
use crate::linalg::{self, C64};
use crate::metrology;
use crate::network::{build_drift, BridgeConfig};
use crate::reduction;

/// Settling tolerance for long-time comparisons.
pub const SETTLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub quantity: String,
    /// Oracle or numerical value.
    pub numeric: f64,
    /// Closed-form value.
    pub analytic: f64,
    /// `|numeric − analytic| / |analytic|`; absolute when the analytic value is 0.
    pub deviation: f64,
    pub note: String,
}

impl CompareRow {
    fn new(
        quantity: impl Into<String>,
        numeric: f64,
        analytic: f64,
        note: impl Into<String>,
    ) -> Self {
        let diff = (numeric - analytic).abs();
        let deviation = if analytic == 0.0 {
            diff
        } else {
            diff / analytic.abs()
        };
        Self {
            quantity: quantity.into(),
            numeric,
            analytic,
            deviation,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// Time at which long-time quantities are compared.
    pub t: f64,
    pub balanced: bool,
    pub rows: Vec<CompareRow>,
}

/// Compare time for long-time quantities: the later of 10τ and the full-model settling time.
pub fn settled_horizon(config: &BridgeConfig) -> Result<f64> {
    let tau = reduction::relaxation_time(config);
    let base = if tau.is_finite() { 10.0 * tau } else { 1.0 };
    let settle = dynamics::settling_time(config, SETTLE_TOL).unwrap_or(0.0);
    Ok(base.max(settle))
}

fn push_complex(rows: &mut Vec<CompareRow>, name: &str, numeric: C64, analytic: C64, note: &str) {
    rows.push(CompareRow::new(
        format!("{name}.re"),
        numeric.re,
        analytic.re,
        note,
    ));
    rows.push(CompareRow::new(
        format!("{name}.im"),
        numeric.im,
        analytic.im,
        note,
    ));
}

/// Build the comparison table for `config` with probe amplitude `alpha`.
///
/// Rows that need a balanced bridge are omitted when it is not balanced.
pub fn run_compare(config: &BridgeConfig, alpha: f64) -> Result<CompareReport> {
    config.validate()?;
    let t = settled_horizon(config)?;
    let mut rows = Vec::new();

    // the two slowest full-model eigenvalues against the reduced spectrum
    let reduced = reduction::adiabatic_reduce(config)?;
    let mut full: Vec<C64> = linalg::eigenvalues(&build_drift(config)?.m_complex)?
        .iter()
        .copied()
        .collect();
    full.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let mut red: Vec<C64> = linalg::eigenvalues(&reduced.m2)?.iter().copied().collect();
    red.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let validity = format!("kappa/detuning = {:.3}", reduced.validity.ratio);
    for (k, (f, r)) in full.iter().zip(&red).enumerate() {
        push_complex(
            &mut rows,
            &format!("slow_eigenvalue_{k}"),
            *f,
            *r,
            &validity,
        );
    }

    let a0 = C64::new(alpha, 0.0);
    let zero = C64::new(0.0, 0.0);
    let (o2, o3) = dynamics::oracle_means(config, alpha, t)?;
    let (r2, r3) = reduction::reduced_mean(config, a0, zero, t)?;
    rows.push(CompareRow::new(
        "reduced_mean_a2.abs",
        o2.norm(),
        r2.norm(),
        "",
    ));
    rows.push(CompareRow::new(
        "reduced_mean_a3.abs",
        o3.norm(),
        r3.norm(),
        "",
    ));

    let balanced = reduction::require_balanced(config).is_ok();
    if balanced {
        let s = reduction::balanced_eigenvalues(config)?;
        let flag = if s.discrepancy {
            "closed form disagrees with numerics"
        } else {
            ""
        };
        push_complex(&mut rows, "dark_eigenvalue", s.dark, s.printed_dark, flag);
        push_complex(
            &mut rows,
            "damped_eigenvalue",
            s.damped,
            s.printed_damped,
            flag,
        );

        let (l2, l3) = reduction::longtime_mean(config, a0, zero, t)?;
        rows.push(CompareRow::new("longtime_a2.abs", o2.norm(), l2.norm(), ""));
        rows.push(CompareRow::new("longtime_a3.abs", o3.norm(), l3.norm(), ""));

        let sig = metrology::numeric_signal(config, alpha, t)?;
        let (d2, _) = reduction::longtime_derivative(config, a0, zero, t)?;
        push_complex(
            &mut rows,
            "derivative_a2",
            sig.derivative,
            d2,
            "central difference vs closed form",
        );

        let numeric = metrology::numeric_optimal_precision(config, alpha, t)?;
        let analytic = metrology::optimal_homodyne_precision(config, alpha)?;
        rows.push(CompareRow::new(
            "optimal_homodyne_delta",
            numeric,
            analytic,
            "",
        ));

        let qfi = metrology::gaussian_qfi(config, alpha, metrology::QfiMode::Dominant)?;
        let crb = metrology::crb_bound(config, alpha)?;
        rows.push(CompareRow::new(
            "crb",
            1.0 / qfi.sqrt(),
            crb.bound,
            format!("g = {:.12}", crb.g),
        ));
    }
    Ok(CompareReport { t, balanced, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_config_is_trivial() {
        let mut cfg = BridgeConfig::reference();
        cfg.j1 = 0.0;
        cfg.j2 = 0.0;
        cfg.j3 = 0.0;
        cfg.jx = 0.0;
        cfg.j0 = 0.0;
        let r = run_compare(&cfg, 1.0).unwrap();
        assert!(!r.balanced);
        assert!(!r.rows.is_empty());
        assert!(
            r.rows.iter().all(|row| row.deviation < 1e-12),
            "{:#?}",
            r.rows
        );
    }

    #[test]
    fn reference_flags_eigenvalue_discrepancy() {
        let r = run_compare(&BridgeConfig::reference(), 1e4).unwrap();
        let dark = r
            .rows
            .iter()
            .find(|row| row.quantity == "dark_eigenvalue.im")
            .unwrap();
        assert!((dark.numeric + 99.2).abs() < 1e-9);
        assert!((dark.analytic + 101.8).abs() < 1e-9);
        assert!(!dark.note.is_empty());
    }
}
