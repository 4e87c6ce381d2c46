//! Iteratively reweighted adaptive lasso for autoregressive time series with
//! conditionally heteroscedastic errors.
//!
//! The estimator alternates two fits until the volatility estimate settles:
//!
//! 1. a weighted ℓ₁-penalized least-squares fit of a sparse autoregressive
//!    mean equation ([`wlasso`]), and
//! 2. a non-negative least-squares fit of a power-ARCH recursion on the
//!    residuals ([`volatility`]), whose fitted conditional scales become the
//!    inverse row weights of the next mean fit.
//!
//! [`driver`] runs the loop, [`selection`] picks the penalty level by
//! information criteria, [`simulate`] generates sparse-AR/power-ARCH test
//! processes, and [`experiments`] wraps the Monte Carlo studies used to
//! benchmark the estimator. Everything is generic over the scalar type
//! ([`scalar::Scalar`], implemented for `f32` and `f64`); the `*64` aliases
//! below pin the common `f64` instantiations.

pub mod design;
pub mod driver;
pub mod error;
pub mod experiments;
mod linalg;
pub mod nnls;
pub mod panel;
pub mod scalar;
pub mod selection;
pub mod simulate;
pub mod volatility;
pub mod wlasso;

pub use design::{default_lag_horizon, ColumnId, Design, LagIndexSets};
pub use driver::{
    irwal_fit, irwal_fit_univariate, multivariate_fit, BetaInit, IrwalConfig, IrwalIteration,
    IrwalResult, LambdaPolicy, StopNorm, StopReason,
};
pub use error::{Error, Result};
pub use experiments::{
    matched_vol_spec, run_consistency_trend, run_inclusion_study, run_mae_study, McReport, McRow,
};
pub use nnls::{nnls, nnls_with, NnlsSolution};
pub use panel::SeriesPanel;
pub use scalar::Scalar;
pub use selection::{evaluate_gic, select_lambda, selection_report, Criterion, Selected, SelectionReport};
pub use simulate::{simulate_path, DgpSpec, SimulatedPath, SupportRule, VolKind};
pub use volatility::{
    build_arch_design, fit_volatility, forecast_sigma, ArchDesign, ResidualSeries, VolColumn,
    VolatilityFit, VolatilitySpec,
};
pub use wlasso::{
    check_kkt, default_lambda_grid, lambda_grid, lasso_path, solve_weighted_lasso, PenaltySpec,
    SolveOptions, WeightedLassoFit,
};

/// `f64` series panel.
pub type Panel64 = SeriesPanel<f64>;
/// `f64` regression design.
pub type Design64 = Design<f64>;
/// `f64` reweighted-fit configuration.
pub type IrwalConfig64 = IrwalConfig<f64>;
/// `f64` reweighted-fit trace.
pub type IrwalResult64 = IrwalResult<f64>;

/// Renders a value with 17 significant digits, enough for `f64` round trips;
/// all numeric text output in this workspace goes through here.
pub fn format_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips_f64() {
        for v in [
            0.0,
            1.0,
            -1.0,
            std::f64::consts::PI,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            1e300,
            -2.2250738585072014e-308,
        ] {
            let s = format_sig17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s} -> {back}");
        }
    }
}
