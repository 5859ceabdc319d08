//! Command-line driver: operator accuracy checks, training runs, method
//! comparisons, and report emission.
//!
//! Every artifact lands under the `--out` directory, including a fully
//! resolved copy of the run configuration. CSV outputs are byte-identical
//! across reruns with the same config and seeds; wall-clock timing is
//! segregated into `summary.json`.
//!
//! Exit codes: 0 success, 1 tolerance failure, 2 usage or config error,
//! 3 numerical abort.

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use fracpinn::benchmarks::{benchmark, CompositeLap, BENCHMARK_NAMES};
use fracpinn::fraclap::{imc_plan, mc_plan, qe_plan, FracLapConfig, OperatorPlan, ScalarField};
use fracpinn::geometry::{sample_sphere, UnitBall};
use fracpinn::rng::stream;
use fracpinn::trainer::{compare_methods, train_from, Method, RunRecord, TrainConfig};
use fracpinn::trialspace::TrialSpace;
use ndarray::Array2;
use rand::Rng;

#[derive(Parser)]
#[command(name = "fracpinn", version, about = "Fractional PDE solvers on the unit ball: operator checks, PINN training, method comparisons")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Config file (TOML) overriding defaults; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the run seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for test-set prediction (results are identical
    /// for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a discretization against the closed form at random
    /// interior points, averaged over seeds.
    OperatorCheck,
    /// Train one run and write its record, checkpoint, and error curve.
    Train {
        /// Resume from a checkpoint written by a previous run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Train one run per method with shared initialization and
    /// collocation seeds, then tabulate final errors.
    Compare,
    /// Print the benchmark registry.
    ListBenchmarks,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OperatorCheckConfig {
    benchmark: String,
    method: Method,
    dim: usize,
    alpha: f64,
    /// Interior evaluation points.
    n_points: usize,
    /// Seeds averaged for the estimate and used for the spread.
    n_seeds: usize,
    /// Gate on the mean relative error.
    tolerance: f64,
    /// Points are drawn with ‖x‖ below this radius; the angular Monte
    /// Carlo variance of the near-field term grows without bound as the
    /// boundary is approached, so accuracy gates use a capped radius.
    radius_cap: f64,
    seed: u64,
    /// Seed of the benchmark coefficient stream.
    case_seed: u64,
    fraclap: FracLapConfig,
}

impl Default for OperatorCheckConfig {
    fn default() -> Self {
        OperatorCheckConfig {
            benchmark: "fpe/table1-row1".into(),
            dim: 3,
            alpha: 1.0,
            method: Method::Qe,
            n_points: 100,
            n_seeds: 64,
            tolerance: 0.02,
            radius_cap: 0.9,
            seed: 0,
            case_seed: 0,
            fraclap: FracLapConfig::new(1.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CompareConfig {
    /// Methods to run, in table order.
    methods: Vec<String>,
    train: TrainConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            methods: vec!["qe".into(), "mc".into(), "imc".into()],
            train: TrainConfig::default(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.cmd {
        Cmd::ListBenchmarks => {
            for name in BENCHMARK_NAMES {
                println!("{name}");
            }
            Ok(0)
        }
        Cmd::OperatorCheck => cmd_operator_check(cli),
        Cmd::Train { resume } => cmd_train(cli, resume.as_deref()),
        Cmd::Compare => cmd_compare(cli),
    }
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read config file {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))
        }
    }
}

fn write_resolved<T: Serialize>(out: &Path, cfg: &T) -> anyhow::Result<()> {
    let text = toml::to_string_pretty(cfg).context("serializing resolved config")?;
    fs::write(out.join("resolved_config.toml"), text)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let file = fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)?;
    Ok(())
}

fn cmd_operator_check(cli: &Cli) -> anyhow::Result<u8> {
    let mut cfg: OperatorCheckConfig = load_config(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.fraclap.alpha = cfg.alpha;
    cfg.fraclap.validate()?;
    if !(cfg.n_points > 0 && cfg.n_seeds > 0) {
        bail!("n_points and n_seeds must be at least 1");
    }
    if !(cfg.radius_cap > 0.0 && cfg.radius_cap < 1.0) {
        bail!("radius_cap must lie in (0, 1)");
    }
    fs::create_dir_all(&cli.out)?;
    write_resolved(&cli.out, &cfg)?;

    let case = benchmark(&cfg.benchmark, cfg.dim, cfg.alpha, cfg.case_seed)?;
    let domain = UnitBall::new(cfg.dim);
    let exact_field = CompositeLap(case.spatial.clone());

    // interior points with a capped radius
    let (d, n) = (cfg.dim, cfg.n_points);
    let mut rng = stream(cfg.seed, "check-points", &[]);
    let dirs = sample_sphere(d, n, &mut rng);
    let mut pts = Array2::zeros((n, d));
    for i in 0..n {
        let r: f64 = cfg.radius_cap * rng.gen_range(0.0f64..1.0).powf(1.0 / d as f64);
        for j in 0..d {
            pts[[i, j]] = r * dirs[[i, j]];
        }
    }
    let mut exact = vec![0.0; n];
    exact_field.eval(pts.view(), None, &mut exact);

    let start = Instant::now();
    let mut mean = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for s in 0..cfg.n_seeds {
        let plan = build_plan(cfg.method, &cfg.fraclap, &domain, &pts, cfg.seed, s as u64)?;
        let est = plan.apply(&case.spatial, None);
        for i in 0..n {
            mean[i] += est[i] / cfg.n_seeds as f64;
            sq[i] += est[i] * est[i] / cfg.n_seeds as f64;
        }
    }

    let rel = |i: usize| {
        let err = (mean[i] - exact[i]).abs();
        if exact[i] == 0.0 { err } else { err / exact[i].abs() }
    };
    let mut csv = Vec::new();
    writeln!(csv, "point,estimate,exact,relative_error")?;
    for i in 0..n {
        let coords: Vec<String> = pts.row(i).iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(
            csv,
            "{},{:.17e},{:.17e},{:.17e}",
            coords.join(";"),
            mean[i],
            exact[i],
            rel(i)
        )?;
    }
    fs::write(cli.out.join("points.csv"), csv)?;

    let rels: Vec<f64> = (0..n).map(rel).collect();
    let mean_rel = rels.iter().sum::<f64>() / n as f64;
    let max_rel = rels.iter().cloned().fold(0.0, f64::max);
    // mean over points of the across-seed standard deviation of a
    // single-seed estimate
    let seed_std = (0..n)
        .map(|i| (sq[i] - mean[i] * mean[i]).max(0.0).sqrt())
        .sum::<f64>()
        / n as f64;
    let pass = mean_rel <= cfg.tolerance;

    #[derive(Serialize)]
    struct Summary<'a> {
        benchmark: &'a str,
        method: &'a str,
        dim: usize,
        alpha: f64,
        n_points: usize,
        n_seeds: usize,
        mean_relative_error: f64,
        max_relative_error: f64,
        seed_std: f64,
        tolerance: f64,
        pass: bool,
        wall_seconds: f64,
    }
    write_json(
        &cli.out.join("summary.json"),
        &Summary {
            benchmark: &cfg.benchmark,
            method: cfg.method.label(),
            dim: cfg.dim,
            alpha: cfg.alpha,
            n_points: n,
            n_seeds: cfg.n_seeds,
            mean_relative_error: mean_rel,
            max_relative_error: max_rel,
            seed_std,
            tolerance: cfg.tolerance,
            pass,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    )?;

    if !cli.quiet {
        println!(
            "{} [{}] d={} alpha={}: mean rel {:.3e}, max rel {:.3e}, seed std {:.3e} -> {}",
            cfg.benchmark,
            cfg.method.label(),
            cfg.dim,
            cfg.alpha,
            mean_rel,
            max_rel,
            seed_std,
            if pass { "pass" } else { "FAIL" }
        );
    }
    Ok(if pass { 0 } else { 1 })
}

fn build_plan(
    method: Method,
    fl: &FracLapConfig,
    domain: &UnitBall,
    pts: &Array2<f64>,
    seed: u64,
    draw: u64,
) -> fracpinn::Result<OperatorPlan> {
    let purpose = format!("{}-dirs", method.label());
    let mut rng = stream(seed, &purpose, &[draw]);
    match method {
        Method::Qe => qe_plan(fl, domain, pts.view(), &mut rng),
        Method::Mc => mc_plan(fl, domain, pts.view(), &mut rng),
        Method::Imc => imc_plan(fl, domain, pts.view(), &mut rng),
    }
}

fn cmd_train(cli: &Cli, resume: Option<&Path>) -> anyhow::Result<u8> {
    let mut cfg: TrainConfig = load_config(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    let initial = match resume {
        Some(p) => {
            if !p.is_file() {
                bail!("--resume checkpoint {} does not exist", p.display());
            }
            Some(TrialSpace::load_checkpoint(p)?)
        }
        None => None,
    };
    let (resolved, _) = cfg.prepare()?;
    fs::create_dir_all(&cli.out)?;
    write_resolved(&cli.out, &resolved)?;

    let (record, trial) = train_from(&cfg, initial)?;
    write_run_artifacts(&cli.out, record.method.label(), &record)?;
    trial.save_checkpoint(&cli.out.join("checkpoint.json"))?;
    write_json(&cli.out.join("summary.json"), &record_summary(&record))?;

    if !cli.quiet {
        print_record_line(&record);
    }
    Ok(if record.aborted.is_some() { 3 } else { 0 })
}

fn cmd_compare(cli: &Cli) -> anyhow::Result<u8> {
    let mut cfg: CompareConfig = load_config(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.train.threads = t;
    }
    let methods: Vec<Method> = cfg
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<fracpinn::Result<_>>()?;
    if methods.is_empty() {
        bail!("methods must not be empty");
    }
    let (resolved, _) = cfg.train.prepare()?;
    fs::create_dir_all(&cli.out)?;
    write_resolved(&cli.out, &CompareConfig { methods: cfg.methods.clone(), train: resolved })?;

    let rows = compare_methods(&cfg.train, &methods);

    let mut csv = Vec::new();
    let mut txt = Vec::new();
    writeln!(csv, "method,benchmark,final_e_test,epochs_run,status")?;
    writeln!(txt, "{:<8}{:<20}{:>14}  {:>8}  status", "method", "benchmark", "e_test", "epochs")?;
    let mut summaries = Vec::new();
    let mut worst = 0u8;
    for (m, res) in &rows {
        match res {
            Ok(rec) => {
                write_run_artifacts(&cli.out, m.label(), rec)?;
                let status = match &rec.aborted {
                    Some(msg) => {
                        worst = worst.max(3);
                        format!("aborted: {msg}")
                    }
                    None => "ok".into(),
                };
                writeln!(
                    csv,
                    "{},{},{:.17e},{},{}",
                    m.label(),
                    rec.benchmark,
                    rec.final_e_test,
                    rec.epochs_run,
                    status
                )?;
                writeln!(
                    txt,
                    "{:<8}{:<20}{:>14.6e}  {:>8}  {}",
                    m.label(),
                    rec.benchmark,
                    rec.final_e_test,
                    rec.epochs_run,
                    status
                )?;
                if !cli.quiet {
                    print_record_line(rec);
                }
                summaries.push(record_summary(rec));
            }
            Err(e) => {
                worst = worst.max(3);
                writeln!(csv, "{},{},,,failed: {e}", m.label(), cfg.train.benchmark)?;
                writeln!(txt, "{:<8}{:<20}{:>14}  {:>8}  failed: {e}", m.label(), cfg.train.benchmark, "-", "-")?;
                if !cli.quiet {
                    eprintln!("{}: failed: {e}", m.label());
                }
            }
        }
    }
    fs::write(cli.out.join("comparison.csv"), csv)?;
    fs::write(cli.out.join("comparison.txt"), &txt)?;
    write_json(&cli.out.join("summary.json"), &summaries)?;
    if !cli.quiet {
        print!("{}", String::from_utf8_lossy(&txt));
    }
    Ok(worst)
}

#[derive(Serialize)]
struct RunSummary {
    benchmark: String,
    method: &'static str,
    seed: u64,
    epochs_run: usize,
    final_e_test: f64,
    wall_seconds: f64,
    aborted: Option<String>,
}

fn record_summary(rec: &RunRecord) -> RunSummary {
    RunSummary {
        benchmark: rec.benchmark.clone(),
        method: rec.method.label(),
        seed: rec.seed,
        epochs_run: rec.epochs_run,
        final_e_test: rec.final_e_test,
        wall_seconds: rec.wall_seconds,
        aborted: rec.aborted.clone(),
    }
}

fn print_record_line(rec: &RunRecord) {
    println!(
        "{} [{}] seed {}: e_test {:.3e} after {} epochs ({:.1}s){}",
        rec.benchmark,
        rec.method.label(),
        rec.seed,
        rec.final_e_test,
        rec.epochs_run,
        rec.wall_seconds,
        rec.aborted.as_deref().map(|m| format!(" [aborted: {m}]")).unwrap_or_default()
    );
}

fn write_run_artifacts(out: &Path, label: &str, rec: &RunRecord) -> anyhow::Result<()> {
    let mut csv = Vec::new();
    rec.write_csv(&mut csv)?;
    fs::write(out.join(format!("{label}.csv")), csv)?;
    fs::write(out.join(format!("{label}_curve.svg")), curve_svg(rec))?;
    Ok(())
}

/// A minimal SVG line chart of the run: log10 loss per epoch (gray) and
/// log10 e_test at the metric cadence (solid). Suitable as-is or as a
/// template for external plotting of the CSV.
fn curve_svg(rec: &RunRecord) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const ML: f64 = 60.0;
    const MR: f64 = 15.0;
    const MT: f64 = 15.0;
    const MB: f64 = 45.0;

    let loss: Vec<(f64, f64)> = rec
        .losses
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > 0.0)
        .map(|(i, l)| ((i + 1) as f64, l.log10()))
        .collect();
    let etest: Vec<(f64, f64)> = rec
        .e_tests
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(ep, e)| (ep as f64, e.log10()))
        .collect();
    let all = loss.iter().chain(&etest);
    let xmax = all.clone().map(|p| p.0).fold(1.0, f64::max);
    let ymin = all.clone().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = all.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (ymin, ymax) = if ymin.is_finite() && ymax > ymin {
        (ymin, ymax)
    } else if ymin.is_finite() {
        (ymin - 1.0, ymin + 1.0)
    } else {
        (-1.0, 1.0)
    };
    let px = |x: f64| ML + (W - ML - MR) * x / xmax;
    let py = |y: f64| MT + (H - MT - MB) * (ymax - y) / (ymax - ymin);
    let poly = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.0}\" height=\"{:.0}\" fill=\"none\" stroke=\"#999\"/>\n",
        W - ML - MR,
        H - MT - MB
    ));
    if loss.len() > 1 {
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#bbb\" stroke-width=\"1\"/>\n",
            poly(&loss)
        ));
    }
    if etest.len() > 1 {
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
            poly(&etest)
        ));
    }
    for &(ep, v) in &etest {
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.2\" fill=\"#1f77b4\"/>\n",
            px(ep),
            py(v)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\" text-anchor=\"middle\">epoch (0 to {:.0})</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 12.0,
        xmax
    ));
    s.push_str(&format!(
        "<text x=\"14\" y=\"{:.0}\" font-size=\"12\" transform=\"rotate(-90 14 {:.0})\" text-anchor=\"middle\">log10 error, log10 loss ({:.1} to {:.1})</text>\n",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0,
        ymin,
        ymax
    ));
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\">{} [{}]</text>\n",
        ML + 8.0,
        MT + 16.0,
        rec.benchmark,
        rec.method.label()
    ));
    s.push_str("</svg>\n");
    s
}
