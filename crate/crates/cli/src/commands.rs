//! The five subcommands and their artifacts.
//!
//! Every command resolves its inputs from one [`RunConfig`], writes its
//! artifacts into the configured output directory, and succeeds only if all
//! of them were written. Each run also leaves a `manifest.toml` whose
//! `[config]` table replays the run bit-for-bit: nothing here draws entropy
//! outside the seeded generators, and all numeric text is written with 17
//! significant digits.
//!
//! Artifact layout per command:
//! - `fit`: `coefficients_<series>.csv`, `volatility_<series>.csv`,
//!   `sigma_<series>.csv` per target series, plus `summary.json`.
//! - `simulate`: `series.csv` (the observable path, fit-ready) and
//!   `latent.csv` (innovations and true scales).
//! - `bench-*`: one tidy `<study>.csv` in the shared
//!   `lambda,k,n,metric,value,n_reps` schema.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use irwal::{
    default_lag_horizon, format_sig17, multivariate_fit, run_consistency_trend,
    run_inclusion_study, run_mae_study, simulate_path, ColumnId, Criterion, Design, IrwalResult,
    LagIndexSets, McReport, SeriesPanel, StopReason, VolColumn,
};

use crate::config::RunConfig;
use crate::csv::read_panel;

/// Resolves and creates the output directory.
fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let Some(out) = &cfg.out else {
        bail!("no output directory; set the `out` key or pass --out");
    };
    let dir = PathBuf::from(out);
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `prefix_<series>.csv` with anything filesystem-hostile replaced.
fn artifact_name(prefix: &str, series: &str) -> String {
    let safe: String = series
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    format!("{prefix}_{safe}.csv")
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_requested: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_failed: Option<usize>,
    /// Study-configuration echo from the report, when the command ran one.
    #[serde(skip_serializing_if = "Option::is_none")]
    study: Option<&'a str>,
    config: &'a RunConfig,
}

/// Writes `manifest.toml`: command, version, and the full resolved config,
/// which [`RunConfig::from_manifest_str`] reads back for replay.
fn write_manifest(
    dir: &Path,
    command: &str,
    report: Option<&McReport<f64>>,
    cfg: &RunConfig,
) -> Result<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        n_requested: report.map(|r| r.n_requested),
        n_failed: report.map(|r| r.n_failed),
        study: report.map(|r| r.config.as_str()),
        config: cfg,
    };
    let text = toml::to_string(&manifest).context("serializing manifest")?;
    write_text(&dir.join("manifest.toml"), &text)
}

// --- fit -----------------------------------------------------------------

#[derive(Serialize)]
struct IcTriple {
    aic: f64,
    hqc: f64,
    bic: f64,
}

#[derive(Serialize)]
struct RoundSummary {
    round: usize,
    lambda: f64,
    lambda_effective: f64,
    n_active: usize,
    objective: f64,
    kkt_max_violation: f64,
    solver_converged: bool,
    sigma_diff: f64,
    /// Criterion scores of the kept fit, when λ was grid-selected.
    #[serde(skip_serializing_if = "Option::is_none")]
    ic: Option<IcTriple>,
}

#[derive(Serialize)]
struct SeriesSummary {
    series: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    iterations: Vec<RoundSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop_reason: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    volatility_norm_constant: Option<f64>,
}

#[derive(Serialize)]
struct FitSummary {
    input: String,
    n_series: usize,
    n_obs: usize,
    mean_lag_max: usize,
    series: Vec<SeriesSummary>,
}

fn stop_reason_str(reason: StopReason) -> &'static str {
    match reason {
        StopReason::EpsilonMet => "epsilon_met",
        StopReason::KMaxReached => "k_max_reached",
    }
}

fn series_summary(name: &str, criterion: Criterion, res: &IrwalResult<f64>) -> SeriesSummary {
    let iterations = res
        .iterations
        .iter()
        .enumerate()
        .map(|(k, it)| RoundSummary {
            round: k + 1,
            lambda: it.lambda,
            lambda_effective: it.lambda_effective,
            n_active: it.n_active,
            objective: it.objective,
            kkt_max_violation: it.kkt_max_violation,
            solver_converged: it.solver_converged,
            sigma_diff: it.sigma_diff,
            ic: it.selection.as_ref().map(|sel| {
                let scores = sel.scores[sel.winner(criterion).index];
                IcTriple {
                    aic: scores[0],
                    hqc: scores[1],
                    bic: scores[2],
                }
            }),
        })
        .collect();
    let vol = &res.last().vol;
    SeriesSummary {
        series: name.to_string(),
        error: None,
        iterations,
        stop_reason: Some(stop_reason_str(res.stop_reason)),
        stop_epsilon: Some(res.stop_epsilon),
        gamma_hat: Some(vol.gamma_hat),
        sigma_floor: Some(vol.sigma_floor),
        volatility_norm_constant: Some(vol.norm_constant),
    }
}

fn write_coefficient_csv(
    dir: &Path,
    name: &str,
    panel: &SeriesPanel<f64>,
    design: &Design<f64>,
    res: &IrwalResult<f64>,
) -> Result<()> {
    let mut text = String::from("series,lag,coefficient,included\n");
    for (j, col) in design.columns.iter().enumerate() {
        let b = res.final_beta[j];
        let (series, lag) = match col {
            ColumnId::Intercept => ("intercept".to_string(), 0),
            ColumnId::Lag { series, lag } => (panel.names()[*series].clone(), *lag),
            ColumnId::Covariate(i) => (format!("x{i}"), 0),
        };
        let _ = writeln!(text, "{series},{lag},{},{}", format_sig17(b), u8::from(b != 0.0));
    }
    write_text(&dir.join(artifact_name("coefficients", name)), &text)
}

fn write_volatility_csv(
    dir: &Path,
    name: &str,
    panel: &SeriesPanel<f64>,
    res: &IrwalResult<f64>,
) -> Result<()> {
    let vol = &res.last().vol;
    let mut text = String::from("term,coefficient\n");
    for (col, &a) in vol.columns.iter().zip(vol.alpha_tilde.iter()) {
        let term = match col {
            VolColumn::Intercept => "intercept".to_string(),
            VolColumn::Abs { series, lag } => format!("{}.abs.lag{lag}", panel.names()[*series]),
            VolColumn::Gated { series, lag } => format!("{}.neg.lag{lag}", panel.names()[*series]),
        };
        let _ = writeln!(text, "{term},{}", format_sig17(a));
    }
    write_text(&dir.join(artifact_name("volatility", name)), &text)
}

fn write_sigma_csv(dir: &Path, name: &str, res: &IrwalResult<f64>) -> Result<()> {
    let vol = &res.last().vol;
    let mut text = String::from("t,sigma\n");
    for (i, &s) in vol.fitted_sigma.iter().enumerate() {
        let _ = writeln!(text, "{},{}", vol.start + i, format_sig17(s));
    }
    write_text(&dir.join(artifact_name("sigma", name)), &text)
}

/// Fits every series of the input CSV as a target over a shared lag pool
/// and writes the per-series artifacts plus `summary.json`. A failed series
/// does not stop the others, but it does fail the command.
pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let input = cfg
        .input
        .as_deref()
        .context("fit needs an input CSV; set the `input` key")?;
    let panel = read_panel(Path::new(input))?;
    let d = panel.n_series();
    let t_len = panel.len();
    let horizon = if cfg.mean_lag_max == 0 {
        default_lag_horizon(t_len)
    } else {
        cfg.mean_lag_max
    };
    let mean_lags = LagIndexSets::uniform(d, horizon)?;
    let criterion = cfg.criterion()?;
    let estimator = cfg.estimator(d)?;

    let results = multivariate_fit(&panel, &mean_lags, &vec![estimator; d])?;

    let mut summaries = Vec::with_capacity(d);
    let mut failures = Vec::new();
    for (i, outcome) in results.iter().enumerate() {
        let name = panel.names()[i].clone();
        match outcome {
            Ok(res) => {
                let design = Design::build_ar_design(&panel, i, &mean_lags)?;
                write_coefficient_csv(&dir, &name, &panel, &design, res)?;
                write_volatility_csv(&dir, &name, &panel, res)?;
                write_sigma_csv(&dir, &name, res)?;
                summaries.push(series_summary(&name, criterion, res));
                println!(
                    "fit {name}: {} rounds, {} active, stop: {}",
                    res.stopped_at(),
                    res.last().n_active,
                    stop_reason_str(res.stop_reason)
                );
            }
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                summaries.push(SeriesSummary {
                    series: name,
                    error: Some(e.to_string()),
                    iterations: Vec::new(),
                    stop_reason: None,
                    stop_epsilon: None,
                    gamma_hat: None,
                    sigma_floor: None,
                    volatility_norm_constant: None,
                });
            }
        }
    }

    let summary = FitSummary {
        input: input.to_string(),
        n_series: d,
        n_obs: t_len,
        mean_lag_max: horizon,
        series: summaries,
    };
    let mut json = serde_json::to_string_pretty(&summary).context("serializing summary")?;
    json.push('\n');
    write_text(&dir.join("summary.json"), &json)?;
    write_manifest(&dir, "fit", None, cfg)?;

    if !failures.is_empty() {
        bail!(
            "fit failed for {} of {d} series: {}",
            failures.len(),
            failures.join("; ")
        );
    }
    Ok(())
}

// --- simulate --------------------------------------------------------------

/// Draws one path of the configured process. `series.csv` holds the
/// observable series under the name `y`, ready to feed back into `fit`;
/// `latent.csv` holds the innovations and the true scales.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let spec = cfg.dgp()?;
    let path = simulate_path(&spec)?;

    let mut series = String::from("y\n");
    for &v in &path.y {
        let _ = writeln!(series, "{}", format_sig17(v));
    }
    write_text(&dir.join("series.csv"), &series)?;

    let mut latent = String::from("eps,sigma\n");
    for (&e, &s) in path.eps.iter().zip(&path.sigma) {
        let _ = writeln!(latent, "{},{}", format_sig17(e), format_sig17(s));
    }
    write_text(&dir.join("latent.csv"), &latent)?;

    write_manifest(&dir, "simulate", None, cfg)?;
    println!("simulated {} observations into {}", path.y.len(), dir.display());
    Ok(())
}

// --- benchmark studies -----------------------------------------------------

fn write_report(dir: &Path, command: &str, stem: &str, report: &McReport<f64>, cfg: &RunConfig) -> Result<()> {
    let mut csv = Vec::new();
    report
        .write_csv(&mut csv)
        .with_context(|| format!("rendering {stem}.csv"))?;
    let path = dir.join(format!("{stem}.csv"));
    fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    write_manifest(dir, command, Some(report), cfg)?;
    println!(
        "{stem}: {} rows, {} failed replications -> {}",
        report.rows.len(),
        report.n_failed,
        path.display()
    );
    Ok(())
}

/// Inclusion-proportion study over the λ grid (`inclusion.csv`).
pub fn cmd_bench_inclusion(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let report = run_inclusion_study(
        &cfg.dgp()?,
        &cfg.n_values,
        &cfg.lambda_levels()?,
        cfg.n_reps,
        &cfg.k_list,
    )?;
    write_report(&dir, "bench-inclusion", "inclusion", &report, cfg)
}

/// One-step-ahead forecast-error study at sample size `n` (`mae.csv`).
pub fn cmd_bench_mae(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let report = run_mae_study(
        &cfg.dgp()?,
        cfg.n,
        &cfg.lambda_levels()?,
        cfg.n_reps,
        &cfg.k_list,
        cfg.oracle,
    )?;
    write_report(&dir, "bench-mae", "mae", &report, cfg)
}

/// Sign-recovery trend over ascending sample sizes (`trend.csv`).
pub fn cmd_bench_trend(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let k = *cfg.k_list.first().context("k_list must not be empty")?;
    let report = run_consistency_trend(
        &cfg.dgp()?,
        &cfg.n_values,
        &cfg.lambda_levels()?,
        cfg.criterion()?,
        cfg.n_reps,
        k,
    )?;
    write_report(&dir, "bench-trend", "trend", &report, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_names_survive_hostile_series_names() {
        assert_eq!(artifact_name("coefficients", "price"), "coefficients_price.csv");
        assert_eq!(artifact_name("sigma", "load/7 (raw)"), "sigma_load_7__raw_.csv");
    }

    #[test]
    fn manifests_replay_into_the_same_config() {
        let cfg = RunConfig {
            out: Some("somewhere".into()),
            stop_epsilon: Some(1e-8),
            ..RunConfig::default()
        };
        let manifest = Manifest {
            command: "fit",
            version: "0.0.0",
            n_requested: None,
            n_failed: None,
            study: None,
            config: &cfg,
        };
        let text = toml::to_string(&manifest).unwrap();
        assert_eq!(RunConfig::from_manifest_str(&text).unwrap(), cfg);
    }
}
