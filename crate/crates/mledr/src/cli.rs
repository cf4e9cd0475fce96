//! Command-line front end: `simulate`, `rates`, `divergence` and `bounds`.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
//! failures while running.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mledr_core::bounds::{absolute_moment_norm, gl_bound, gl_natural_psi, rosenthal_bound, StieltjesTable, TailFunction};
use mledr_core::distributions::{tilt_constant, DensityModel};
use mledr_core::divergences::{hellinger, kl_level, lower_bound_rate, RateFunctions, RateOptions};
use mledr_core::estimation::{FamilySpec, ParamPoint};
use serde::Serialize;

use crate::config::{load_config, ExperimentConfig, LoadedConfig};
use crate::error::{Error, Result};
use crate::io::{read_csv_meta, read_qn_csv, seed_meta, OutputDir, RunManifest};
use crate::montecarlo::{estimate_qn, estimate_wn, fit_rate, QnEstimate, RateModel, SELECTION_MARGIN};
use crate::svg::{Chart, Series};

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "MLEDR_OUT";

#[derive(Debug, Parser)]
#[command(name = "mledr", version, about = "Misclassification probability of the discrete MLE component: simulation, rates, divergences and bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (the MLEDR_OUT environment variable takes precedence).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of Q_n (and W_n when configured).
    Simulate,
    /// Fit decay models to a qn.csv.
    Rates {
        /// The qn.csv to fit.
        #[arg(long)]
        input: PathBuf,
    },
    /// Divergence tables and rate functions for the configured family.
    Divergence,
    /// Bound curves over the configured n grid.
    Bounds {
        /// A qn.csv to compare against the bounds.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
}

/// Parses the process arguments, runs the command and returns the exit
/// code, printing any error to stderr.
pub fn main_exit_code() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(k) = cli.common.workers {
            if k == 0 {
                return Err(Error::Usage("--workers must be at least 1".into()));
            }
            b = b.num_threads(k);
        }
        b.build().map_err(|e| Error::Runtime(e.to_string()))?
    };
    pool.install(|| match &cli.command {
        Command::Simulate => simulate(&cli.common),
        Command::Rates { input } => rates(&cli.common, input),
        Command::Divergence => divergence(&cli.common),
        Command::Bounds { overlay } => bounds(&cli.common, overlay.as_deref()),
    })
}

fn out_dir(common: &Common, fallback: Option<&Path>) -> PathBuf {
    if let Some(v) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(v);
    }
    common
        .out
        .clone()
        .or_else(|| fallback.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("mledr-out"))
}

/// Loads the configuration and applies `--seed`.
fn load(common: &Common) -> Result<LoadedConfig> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Error::Usage("--config is required for this command".into()))?;
    let mut cfg = load_config(path)?;
    if let Some(seed) = common.seed {
        cfg.file.experiment.master_seed = seed;
        cfg.experiment.settings.master_seed = seed;
    }
    Ok(cfg)
}

fn start(common: &Common, command: &str, cfg: &LoadedConfig) -> Result<(OutputDir, RunManifest)> {
    let root = out_dir(common, cfg.file.output.dir.as_deref());
    let out = OutputDir::create(&root)?;
    let mut manifest = RunManifest::new(command, &root);
    manifest.config_path = Some(cfg.path.clone());
    manifest.config = serde_json::to_value(&cfg.file).ok();
    Ok((out, manifest))
}

fn experiment_meta(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let s = &cfg.settings;
    let mut meta = seed_meta(s.master_seed);
    meta.push(("family", serde_json::to_string(&cfg.family).unwrap_or_default()));
    meta.push(("n_max", cfg.space.n_max().to_string()));
    meta.push(("replications", s.replications.to_string()));
    if let Some(a) = s.adaptive {
        meta.push((
            "adaptive",
            format!("double until {} hits, at most {} replications", a.min_hits, a.max_replications),
        ));
    }
    meta.push(("confidence_level", s.confidence_level.to_string()));
    meta
}

fn want_svg(common: &Common, cfg: Option<&LoadedConfig>) -> bool {
    common.svg || cfg.is_some_and(|c| c.file.output.svg)
}

/// SVG output is best effort: failures are reported but never fatal.
fn try_svg(out: &mut OutputDir, name: &str, chart: &Chart) {
    if let Some(text) = chart.render() {
        if let Err(e) = out.write_text(name, &text) {
            eprintln!("warning: {name} not written: {e}");
        }
    }
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let (mut out, mut manifest) = start(common, "simulate", &cfg)?;
    let exp = &cfg.experiment;
    let qn = manifest.time("estimate_qn", || estimate_qn(exp))?;
    let meta = experiment_meta(exp);
    out.write_csv("qn.csv", &meta, &qn)?;
    if let Some(u) = exp.settings.wn_u {
        let wn = manifest.time("estimate_wn", || estimate_wn(exp, u))?;
        let mut meta = meta.clone();
        meta.push(("u", u.to_string()));
        out.write_csv("wn.csv", &meta, &wn)?;
    }
    if want_svg(common, Some(&cfg)) {
        let chart = Chart {
            title: "Monte Carlo Q_n".into(),
            x_label: "n".into(),
            y_label: "Q_n".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series {
                    label: "estimate".into(),
                    points: qn.iter().map(|e| (e.n as f64, e.p_hat)).collect(),
                },
                Series {
                    label: "Wilson high".into(),
                    points: qn.iter().map(|e| (e.n as f64, e.wilson_high)).collect(),
                },
            ],
        };
        try_svg(&mut out, "qn.svg", &chart);
    }
    for e in &qn {
        println!(
            "n={} hits={} reps={} q={:.6e} [{:.6e}, {:.6e}]",
            e.n, e.hits, e.reps, e.p_hat, e.wilson_low, e.wilson_high
        );
    }
    out.write_manifest(&mut manifest)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RateRow {
    model: &'static str,
    intercept: f64,
    slope: f64,
    rate_parameter: f64,
    r_squared: f64,
    points: usize,
    selected: bool,
}

#[derive(Debug, Serialize)]
struct PlotRow {
    model: &'static str,
    n: u64,
    x: f64,
    y: f64,
    fitted: f64,
}

fn rates(common: &Common, input: &Path) -> Result<()> {
    let qn = read_qn_csv(input)?;
    let root = out_dir(common, input.parent().filter(|p| !p.as_os_str().is_empty()));
    let mut out = OutputDir::create(&root)?;
    let mut manifest = RunManifest::new("rates", &root);
    manifest.config_path = Some(input.to_path_buf());
    let report = manifest.time("fit_rate", || fit_rate(&qn))?;
    let mut meta: Vec<(&str, String)> = read_csv_meta(input)?
        .into_iter()
        .filter(|(k, _)| k == "master_seed")
        .map(|(_, v)| ("master_seed", v))
        .collect();
    meta.push((
        "selection",
        format!("highest r_squared in transformed coordinates; simplest model within {SELECTION_MARGIN} wins (exponential < polynomial < stretched < logarithmic)"),
    ));
    meta.push(("excluded_n", format!("{:?}", report.excluded)));
    let rows: Vec<RateRow> = report
        .fits
        .iter()
        .map(|f| RateRow {
            model: f.model.name(),
            intercept: f.intercept,
            slope: f.slope,
            rate_parameter: f.rate_parameter(),
            r_squared: f.r_squared,
            points: f.points,
            selected: f.selected,
        })
        .collect();
    out.write_csv("rates.csv", &meta, &rows)?;
    let used: Vec<&QnEstimate> = qn.iter().filter(|e| report.used.contains(&e.n)).collect();
    let mut plot = Vec::new();
    for f in &report.fits {
        for e in &used {
            if let Some((x, y)) = f.model.coordinates(e.n, e.p_hat) {
                plot.push(PlotRow {
                    model: f.model.name(),
                    n: e.n,
                    x,
                    y,
                    fitted: f.predict(x),
                });
            }
        }
    }
    out.write_csv("plotdata.csv", &meta, &plot)?;
    if want_svg(common, None) {
        let sel = report.selected();
        let series = vec![
            Series {
                label: "estimate".into(),
                points: used.iter().map(|e| (e.n as f64, e.p_hat)).collect(),
            },
            Series {
                label: format!("{} fit", sel.model.name()),
                points: used
                    .iter()
                    .filter_map(|e| {
                        let (x, _) = sel.model.coordinates(e.n, e.p_hat)?;
                        let y = sel.predict(x);
                        let q = match sel.model {
                            RateModel::Exponential | RateModel::Polynomial => y.exp(),
                            RateModel::Stretched => (-y.exp()).exp(),
                            RateModel::Logarithmic => y,
                        };
                        Some((e.n as f64, q))
                    })
                    .collect(),
            },
        ];
        let chart = Chart {
            title: "Fitted decay of Q_n".into(),
            x_label: "n".into(),
            y_label: "Q_n".into(),
            log_x: true,
            log_y: true,
            series,
        };
        try_svg(&mut out, "rates.svg", &chart);
    }
    let sel = report.selected();
    println!(
        "selected {} (rate parameter {:.6}, r_squared {:.6}) from {} cells",
        sel.model.name(),
        sel.rate_parameter(),
        sel.r_squared,
        report.used.len()
    );
    out.write_manifest(&mut manifest)?;
    Ok(())
}

fn fmt_beta(beta: &[f64]) -> String {
    beta.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn divergence(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let (mut out, mut manifest) = start(common, "divergence", &cfg)?;
    let exp = &cfg.experiment;
    let set = &cfg.file.divergence;
    let space = &exp.space;
    let theta0 = &exp.theta0;
    let f0 = space.model(theta0)?;

    let mut header: Vec<String> = vec!["m".into(), "beta".into(), "kl".into(), "kl_abs_error".into()];
    header.extend(set.hellinger_orders.iter().map(|l| format!("hellinger_{l}")));
    let mut rows = Vec::new();
    manifest.time("divergence_table", || -> Result<()> {
        for m in 1..=space.n_max() {
            for beta in space.beta_grid(set.beta_points) {
                let theta = ParamPoint::new(m, beta);
                let f = space.model(&theta)?;
                let kl = kl_level(&theta, theta0, space)?;
                let mut row = vec![m.to_string(), fmt_beta(&theta.beta), kl.value.to_string(), kl.abs_error.to_string()];
                for &l in &set.hellinger_orders {
                    row.push(match hellinger(l, &f, &f0) {
                        Ok(h) => h.value.to_string(),
                        Err(_) => "inf".into(),
                    });
                }
                rows.push(row);
            }
        }
        Ok(())
    })?;
    let meta = vec![
        ("master_seed", exp.master_seed().to_string()),
        ("family", serde_json::to_string(&exp.family).unwrap_or_default()),
        ("theta0", format!("m={} beta={}", theta0.m, fmt_beta(&theta0.beta))),
        ("kl", "H(theta) = integral of f0 ln(f0/f_theta)".into()),
        ("hellinger", "integral of f_theta^l f0^(1-l)".into()),
    ];
    out.write_table("divergence.csv", &meta, &header, &rows)?;

    if space.n_max() >= 1 {
        let lower = manifest.time("lower_bound_rate", || lower_bound_rate(space, theta0, set.beta_points))?;
        let opts = RateOptions {
            beta_points: set.beta_points,
            ..RateOptions::default()
        };
        let rf = manifest.time("rate_functions", || RateFunctions::build(space, theta0, &opts))?;
        let mut meta = meta[..3].to_vec();
        meta.push(("lower_bound_rate", lower.to_string()));
        meta.push(("h_r_lower", rf.h_r_lower().to_string()));
        meta.push(("lambda0", rf.lambda0().to_string()));
        let nu = rf.nu_tabulation();
        let tab = |t: &mledr_core::divergences::Tabulation| -> Vec<Vec<String>> {
            t.argument
                .iter()
                .zip(&t.value)
                .zip(&t.error)
                .map(|((a, v), e)| vec![a.to_string(), v.to_string(), e.to_string()])
                .collect()
        };
        let head = |a: &str, v: &str| vec![a.to_string(), v.to_string(), "error".to_string()];
        out.write_table("nu.csv", &meta, &head("lambda", "nu"), &tab(&nu))?;
        out.write_table("g.csv", &meta, &head("delta", "g"), &tab(&rf.g_tabulation()?))?;
        out.write_table("m.csv", &meta, &head("u", "m"), &tab(&rf.m_tabulation(&set.m_arguments)?))?;
        let k = rf.thetas().len();
        let drows: Vec<Vec<String>> = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (a, b) = (&rf.thetas()[i], &rf.thetas()[j]);
                vec![
                    a.m.to_string(),
                    fmt_beta(&a.beta),
                    b.m.to_string(),
                    fmt_beta(&b.beta),
                    rf.theta_distance(i, j).to_string(),
                ]
            })
            .collect();
        let dh: Vec<String> = ["m1", "beta1", "m2", "beta2", "d"].iter().map(|s| s.to_string()).collect();
        out.write_table("distance.csv", &meta, &dh, &drows)?;
        println!("lower bound rate inf Lambda*(0) = {lower}");
    }
    println!("{} parameter points tabulated", rows.len());
    out.write_manifest(&mut manifest)?;
    Ok(())
}

/// `E|ξ| − ln C` for a tilted pair on `base`: the gap `d` in
/// `Q_n = P(Σ(|ξ_k| − E|ξ|) < −n·d)`.
pub fn tilted_gap(base: &DensityModel) -> Result<f64> {
    let mean_abs = absolute_moment_norm(base, 1.0)?;
    Ok(mean_abs - tilt_constant(base)?.ln())
}

/// Direction of a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub bound: &'static str,
    pub side: Side,
    pub n: u64,
    pub value: f64,
    /// The raw expression exceeded 1 (or the exponent was not positive).
    pub clamped: bool,
}

/// Every bound curve available for the configuration, over the `n` grid.
pub fn bound_curves(cfg: &LoadedConfig) -> Result<Vec<BoundRow>> {
    let exp = &cfg.experiment;
    let set = &cfg.file.bounds;
    let ns = &exp.settings.n_grid;
    let mut rows = Vec::new();
    if exp.space.n_max() >= 1 {
        let lower = lower_bound_rate(&exp.space, &exp.theta0, cfg.file.divergence.beta_points)?;
        for &n in ns {
            rows.push(BoundRow {
                bound: "rate_lower",
                side: Side::Lower,
                n,
                value: (-1.5 * n as f64 * lower).exp(),
                clamped: false,
            });
        }
        if set.rate_bound {
            let opts = RateOptions {
                beta_points: cfg.file.divergence.beta_points,
                ..RateOptions::default()
            };
            let rf = RateFunctions::build(&exp.space, &exp.theta0, &opts)?;
            for &n in ns {
                let b = rf.upper_bound_qn(n)?;
                rows.push(BoundRow {
                    bound: "rate_upper",
                    side: Side::Upper,
                    n,
                    value: b.value,
                    clamped: b.trivial,
                });
            }
        }
    }
    if let FamilySpec::TiltedPair { base } = &exp.family {
        let base = DensityModel::try_from(base.clone())?;
        // With E|ξ| = ∞ (Cauchy) the gap is infinite and none of the moment
        // bounds apply.
        let d = match tilted_gap(&base) {
            Ok(d) => d,
            Err(Error::Core(mledr_core::Error::DivergentIntegral { .. })) => return Ok(rows),
            Err(e) => return Err(e),
        };
        if let Ok(norm) = absolute_moment_norm(&base, set.rosenthal_p) {
            for &n in ns {
                let b = rosenthal_bound(set.rosenthal_p, norm, d, n)?;
                rows.push(BoundRow {
                    bound: "rosenthal",
                    side: Side::Upper,
                    n,
                    value: b.value,
                    clamped: b.clamped,
                });
            }
        }
        if let Ok(psi) = gl_natural_psi(&base, &set.psi_grid) {
            for &n in ns {
                let b = gl_bound(&psi, 1.0, d, n)?;
                rows.push(BoundRow {
                    bound: "grand_lebesgue",
                    side: Side::Upper,
                    n,
                    value: b.value,
                    clamped: b.clamped,
                });
            }
        }
        if let Some(t) = set.tail {
            let table = StieltjesTable::new(&TailFunction::stretched(t.q, t.k)?)?;
            for &n in ns {
                let w = table.w(d * (n as f64).sqrt())?;
                rows.push(BoundRow {
                    bound: "tail_transform",
                    side: Side::Upper,
                    n,
                    value: w.value,
                    clamped: w.clamped,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlayRow {
    pub bound: &'static str,
    pub n: u64,
    pub value: f64,
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub violated: bool,
}

/// An upper bound is violated when it falls below `Q̂_n`; a lower bound
/// when it exceeds the Wilson upper limit.
pub fn overlay(bounds: &[BoundRow], qn: &[QnEstimate]) -> Vec<OverlayRow> {
    bounds
        .iter()
        .filter_map(|b| {
            let e = qn.iter().find(|e| e.n == b.n)?;
            let violated = match b.side {
                Side::Upper => e.p_hat > b.value,
                Side::Lower => b.value > e.wilson_high,
            };
            Some(OverlayRow {
                bound: b.bound,
                n: b.n,
                value: b.value,
                p_hat: e.p_hat,
                wilson_low: e.wilson_low,
                wilson_high: e.wilson_high,
                violated,
            })
        })
        .collect()
}

fn bounds(common: &Common, overlay_path: Option<&Path>) -> Result<()> {
    let cfg = load(common)?;
    let qn = overlay_path.map(read_qn_csv).transpose()?;
    let (mut out, mut manifest) = start(common, "bounds", &cfg)?;
    let rows = manifest.time("bounds", || bound_curves(&cfg))?;
    let mut meta = seed_meta(cfg.experiment.master_seed());
    meta.push(("family", serde_json::to_string(&cfg.experiment.family).unwrap_or_default()));
    out.write_csv("bounds.csv", &meta, &rows)?;
    if let Some(qn) = &qn {
        let ov = overlay(&rows, qn);
        let mut names: Vec<&str> = ov.iter().map(|r| r.bound).collect();
        names.dedup();
        for name in names {
            let v = ov.iter().filter(|r| r.bound == name && r.violated).count();
            println!("{name}: violations = {v}");
            meta.push(("violations", format!("{name}={v}")));
        }
        out.write_csv("overlay.csv", &meta, &ov)?;
    }
    if want_svg(common, Some(&cfg)) {
        let mut names: Vec<&str> = rows.iter().map(|r| r.bound).collect();
        names.dedup();
        let mut series: Vec<Series> = names
            .iter()
            .map(|&name| Series {
                label: name.into(),
                points: rows.iter().filter(|r| r.bound == name).map(|r| (r.n as f64, r.value)).collect(),
            })
            .collect();
        if let Some(qn) = &qn {
            series.push(Series {
                label: "Monte Carlo".into(),
                points: qn.iter().map(|e| (e.n as f64, e.p_hat)).collect(),
            });
        }
        let chart = Chart {
            title: "Bounds on Q_n".into(),
            x_label: "n".into(),
            y_label: "Q_n".into(),
            log_x: true,
            log_y: true,
            series,
        };
        try_svg(&mut out, "bounds.svg", &chart);
    }
    out.write_manifest(&mut manifest)?;
    Ok(())
}
