//! Residual-loss assembly and the training loop.
//!
//! Each epoch draws collocation points and operator directions from named
//! streams keyed by the epoch index, assembles the discretized residual
//!
//!   L Ψ = [∂_t^γ Ψ] + c·(−Δ)^{α/2}Ψ + [v·∇ₓΨ] − f
//!
//! (time terms only for time-dependent cases), backpropagates the mean
//! squared residual through the trial space, and takes one Adam step.
//! Everything is deterministic given the seeds; runs with identical
//! configs produce bit-identical records.

use crate::adam::{Adam, AdamConfig};
use crate::benchmarks::{benchmark, e_test, test_points, BenchmarkCase};
use crate::caputo::CaputoStencil;
use crate::fraclap::{imc_plan, mc_plan, qe_plan, FracLapConfig, OperatorPlan};
use crate::geometry::{sample_sphere, Domain, UnitBall};
use crate::rng::stream;
use crate::trialspace::{TrialConfig, TrialSpace};
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

/// Operator discretization used for the fractional term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qe,
    Mc,
    Imc,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Qe => "qe",
            Method::Mc => "mc",
            Method::Imc => "imc",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qe" => Ok(Method::Qe),
            "mc" => Ok(Method::Mc),
            "imc" => Ok(Method::Imc),
            _ => Err(Error::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    /// Benchmark registry name.
    pub benchmark: String,
    pub dim: usize,
    pub alpha: f64,
    pub epochs: usize,
    /// Collocation points per epoch.
    pub n_res: usize,
    /// Held-out test points for e_test.
    pub n_test: usize,
    /// Metric cadence in epochs.
    pub eval_every: usize,
    /// Redraw collocation points and operator directions every epoch.
    pub resample_each_epoch: bool,
    pub seed: u64,
    /// Seed of the benchmark coefficient stream.
    pub case_seed: u64,
    /// Caputo rule size (time-dependent cases).
    pub n_tau: usize,
    /// Worker threads for test-set prediction. Output is bit-identical
    /// for any value.
    pub threads: usize,
    pub fraclap: FracLapConfig,
    pub trial: TrialConfig,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            method: Method::Qe,
            benchmark: "fpe/table1-row2".into(),
            dim: 3,
            alpha: 1.5,
            epochs: 20_000,
            n_res: 100,
            n_test: 20_000,
            eval_every: 500,
            resample_each_epoch: true,
            seed: 0,
            case_seed: 0,
            n_tau: 8,
            threads: 1,
            fraclap: FracLapConfig::new(1.5),
            trial: TrialConfig::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Propagate the top-level α (and the case's temporal structure) into
    /// the sub-configs and construct the benchmark case.
    pub fn prepare(&self) -> Result<(TrainConfig, BenchmarkCase)> {
        if self.epochs > 0 && self.n_res == 0 {
            return Err(Error::InvalidParameter("n_res must be at least 1".into()));
        }
        let case = benchmark(&self.benchmark, self.dim, self.alpha, self.case_seed)?;
        let mut cfg = self.clone();
        cfg.fraclap.alpha = self.alpha;
        cfg.trial.alpha = self.alpha;
        cfg.trial.time_dependent = case.time_dependent;
        if let Some(g) = case.gamma {
            cfg.trial.gamma = g;
        }
        cfg.fraclap.validate()?;
        Ok((cfg, case))
    }
}

/// One training run's record. `e_tests` holds (epoch, error) pairs at the
/// metric cadence, always including epoch 0 and the final epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub benchmark: String,
    pub method: Method,
    pub seed: u64,
    pub epochs_run: usize,
    pub losses: Vec<f64>,
    pub e_tests: Vec<(usize, f64)>,
    pub final_e_test: f64,
    pub wall_seconds: f64,
    /// Set when the run stopped early on a non-finite loss.
    pub aborted: Option<String>,
}

impl RunRecord {
    /// Per-epoch CSV: epoch, loss, e_test (blank between evaluations).
    /// Deliberately excludes wall-clock so reruns are byte-identical;
    /// timing lives in the metadata summary.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,loss,e_test")?;
        let mut evals = self.e_tests.iter().peekable();
        // epoch 0 row: initial error, no loss yet
        if let Some((0, e)) = evals.peek() {
            writeln!(w, "0,,{e:.17e}")?;
            evals.next();
        }
        for (i, loss) in self.losses.iter().enumerate() {
            let epoch = i + 1;
            let etest = match evals.peek() {
                Some(&&(ep, e)) if ep == epoch => {
                    evals.next();
                    format!("{e:.17e}")
                }
                _ => String::new(),
            };
            writeln!(w, "{epoch},{loss:.17e},{etest}")?;
        }
        Ok(())
    }
}

fn non_finite(term: &str, idx: usize, value: f64) -> Error {
    Error::NonFinite(format!("{term} at collocation point {idx} is {value}"))
}

/// The discretized residual loss and, optionally, its exact parameter
/// gradient. `times` carries the collocation times for time-dependent
/// cases; the plan must have been built on the same points.
pub fn residual_loss(
    trial: &TrialSpace,
    domain: &dyn Domain,
    case: &BenchmarkCase,
    plan: &OperatorPlan,
    times: Option<&[f64]>,
    n_tau: usize,
    mut grad: Option<&mut [f64]>,
) -> Result<(f64, Vec<f64>)> {
    let n = plan.n_points();
    let d = case.dim;
    assert_eq!(case.time_dependent, times.is_some());

    let times_arr = times.map(|ts| Array1::from_iter(ts.iter().copied()));
    let colloc_tangents: Vec<(Vec<f64>, f64)> = if case.time_dependent {
        vec![(case.velocity.clone(), 0.0)]
    } else {
        Vec::new()
    };
    let colloc = trial.batch(
        domain,
        plan.points.view(),
        times_arr.as_ref().map(|a| a.view()),
        &colloc_tangents,
        true,
    );
    let psi_self = colloc.values();
    let adv: Option<Array1<f64>> = case.time_dependent.then(|| colloc.jvp_values(0));

    // field values at the plan's evaluation rows, at the owning point's time
    let row_times: Option<Array1<f64>> = times.map(|ts| {
        let mut out = Array1::zeros(plan.n_rows());
        for i in 0..n {
            for r in plan.offsets[i]..plan.offsets[i + 1] {
                out[r] = ts[i];
            }
        }
        out
    });
    let rows = trial.batch(
        domain,
        plan.eval_points.view(),
        row_times.as_ref().map(|a| a.view()),
        &[],
        true,
    );
    let row_vals = rows.values();
    let op = plan.reduce(psi_self.as_slice().unwrap(), row_vals.as_slice().unwrap());

    // Caputo term on the t^γ-stripped head combination
    let mut caputo = vec![0.0; n];
    let mut stencils: Vec<CaputoStencil> = Vec::new();
    let mut cap_batch = None;
    if let Some(ts) = times {
        let gamma = case.gamma.unwrap();
        let mut cap_pts = Array2::zeros((n * n_tau, d));
        let mut cap_times = Array1::zeros(n * n_tau);
        for i in 0..n {
            let st = CaputoStencil::new(ts[i], gamma, n_tau)?;
            for k in 0..n_tau {
                cap_pts.row_mut(i * n_tau + k).assign(&plan.points.row(i));
                cap_times[i * n_tau + k] = st.times[k];
            }
            stencils.push(st);
        }
        let batch = trial.batch(
            domain,
            cap_pts.view(),
            Some(cap_times.view()),
            &[(vec![0.0; d], 1.0)],
            false,
        );
        let phi = batch.values();
        let dphi = batch.jvp_values(0);
        for i in 0..n {
            let st = &stencils[i];
            let mut acc = 0.0;
            for k in 0..n_tau {
                acc += st.value_coeffs[k] * phi[i * n_tau + k]
                    + st.deriv_coeffs[k] * dphi[i * n_tau + k];
            }
            caputo[i] = st.scale * acc;
        }
        cap_batch = Some(batch);
    }

    // residuals and loss
    let mut residuals = vec![0.0; n];
    for i in 0..n {
        let x = plan.points.row(i);
        let x = x.as_slice().unwrap();
        let t = times.map_or(0.0, |ts| ts[i]);
        let mut r = case.diffusivity * op[i] - case.f(x, t);
        if case.time_dependent {
            r += caputo[i] + adv.as_ref().unwrap()[i];
        }
        if !r.is_finite() {
            for (term, v) in [
                ("operator", op[i]),
                ("caputo", caputo[i]),
                ("advection", adv.as_ref().map_or(0.0, |a| a[i])),
                ("rhs", case.f(x, t)),
            ] {
                if !v.is_finite() {
                    return Err(non_finite(term, i, v));
                }
            }
            return Err(non_finite("residual", i, r));
        }
        residuals[i] = r;
    }
    let loss = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;

    if let Some(grad) = grad.as_deref_mut() {
        let w: Vec<f64> = residuals.iter().map(|r| 2.0 * r / n as f64).collect();

        // collocation batch: the plan's self term plus the advection JVP
        let colloc_cot: Vec<f64> = (0..n)
            .map(|i| w[i] * case.diffusivity * plan.scale * plan.self_coeff[i])
            .collect();
        if case.time_dependent {
            trial.backward(&colloc, &colloc_cot, &[&w], grad);
        } else {
            trial.backward(&colloc, &colloc_cot, &[], grad);
        }

        // evaluation rows
        let mut row_cot = vec![0.0; plan.n_rows()];
        for i in 0..n {
            for r in plan.offsets[i]..plan.offsets[i + 1] {
                row_cot[r] = w[i] * case.diffusivity * plan.scale * plan.coeffs[r];
            }
        }
        trial.backward(&rows, &row_cot, &[], grad);

        // Caputo batch
        if let Some(batch) = &cap_batch {
            let mut val_cot = vec![0.0; n * n_tau];
            let mut jvp_cot = vec![0.0; n * n_tau];
            for i in 0..n {
                let st = &stencils[i];
                for k in 0..n_tau {
                    val_cot[i * n_tau + k] = w[i] * st.scale * st.value_coeffs[k];
                    jvp_cot[i * n_tau + k] = w[i] * st.scale * st.deriv_coeffs[k];
                }
            }
            trial.backward(batch, &val_cot, &[jvp_cot.as_slice()], grad);
        }
    }

    Ok((loss, residuals))
}

/// Collocation draw: uniform in the ball (radius capped so b stays
/// positive) and, for time cases, t uniform in (0, T].
pub fn sample_collocation(
    case: &BenchmarkCase,
    n: usize,
    seed: u64,
    epoch: u64,
) -> (Array2<f64>, Option<Vec<f64>>) {
    let d = case.dim;
    let mut rng = stream(seed, "colloc", &[epoch]);
    let dirs = sample_sphere(d, n, &mut rng);
    let mut pts = Array2::zeros((n, d));
    let rmax = (1.0f64 - 1e-12).sqrt();
    for i in 0..n {
        let r: f64 = rmax * rng.gen_range(0.0f64..1.0).powf(1.0 / d as f64);
        for j in 0..d {
            pts[[i, j]] = r * dirs[[i, j]];
        }
    }
    let times = case.time_dependent.then(|| {
        (0..n)
            .map(|_| case.horizon * (1.0 - rng.gen_range(0.0f64..1.0)))
            .collect()
    });
    (pts, times)
}

fn build_plan(
    cfg: &TrainConfig,
    domain: &dyn Domain,
    pts: &Array2<f64>,
    epoch: u64,
) -> Result<OperatorPlan> {
    match cfg.method {
        Method::Qe => {
            let mut rng = stream(cfg.seed, "qe-dirs", &[epoch]);
            qe_plan(&cfg.fraclap, domain, pts.view(), &mut rng)
        }
        Method::Mc => {
            let mut rng = stream(cfg.seed, "mc-dirs", &[epoch]);
            mc_plan(&cfg.fraclap, domain, pts.view(), &mut rng)
        }
        Method::Imc => {
            let mut rng = stream(cfg.seed, "imc-dirs", &[epoch]);
            imc_plan(&cfg.fraclap, domain, pts.view(), &mut rng)
        }
    }
}

/// Trial values over a fixed test set.
///
/// The points are processed in fixed 4096-row chunks; each chunk's result
/// depends only on its own rows, so distributing chunks over worker
/// threads leaves the output bit-identical for any thread count.
pub fn predict(
    trial: &TrialSpace,
    domain: &dyn Domain,
    pts: &Array2<f64>,
    times: Option<&[f64]>,
    threads: usize,
) -> Vec<f64> {
    const CHUNK: usize = 4096;
    let total = pts.nrows();
    let mut out = vec![0.0; total];
    let eval_chunk = |lo: usize, dst: &mut [f64]| {
        let hi = lo + dst.len();
        let t_arr: Option<Array1<f64>> =
            times.map(|ts| Array1::from_iter(ts[lo..hi].iter().copied()));
        let batch = trial.batch(
            domain,
            pts.slice(ndarray::s![lo..hi, ..]),
            t_arr.as_ref().map(|a| a.view()),
            &[],
            true,
        );
        dst.copy_from_slice(batch.values().as_slice().unwrap());
    };
    if threads <= 1 {
        for (i, dst) in out.chunks_mut(CHUNK).enumerate() {
            eval_chunk(i * CHUNK, dst);
        }
    } else {
        let mut parts: Vec<Vec<(usize, &mut [f64])>> = (0..threads).map(|_| Vec::new()).collect();
        for (i, dst) in out.chunks_mut(CHUNK).enumerate() {
            parts[i % threads].push((i * CHUNK, dst));
        }
        let eval_chunk = &eval_chunk;
        std::thread::scope(|s| {
            for part in parts {
                s.spawn(move || {
                    for (lo, dst) in part {
                        eval_chunk(lo, dst);
                    }
                });
            }
        });
    }
    out
}

fn test_error(
    trial: &TrialSpace,
    domain: &dyn Domain,
    case: &BenchmarkCase,
    pts: &Array2<f64>,
    times: &[f64],
    exact: &[f64],
    threads: usize,
) -> Result<f64> {
    let t = case.time_dependent.then_some(times);
    let pred = predict(trial, domain, pts, t, threads);
    e_test(&pred, exact)
}

/// Run the full training loop. Returns the record and the trained trial;
/// a non-finite loss aborts early with the partial record marked.
pub fn train(cfg: &TrainConfig) -> Result<(RunRecord, TrialSpace)> {
    train_from(cfg, None)
}

/// Like `train`, but optionally starting from an existing trial space
/// (for resuming from a checkpoint). The optimizer state starts fresh.
pub fn train_from(cfg: &TrainConfig, initial: Option<TrialSpace>) -> Result<(RunRecord, TrialSpace)> {
    let (cfg, case) = cfg.prepare()?;
    let domain = UnitBall::new(cfg.dim);
    let mut trial = match initial {
        Some(t) => {
            if t.dim() != cfg.dim {
                return Err(Error::ShapeMismatch(format!(
                    "checkpoint is for dimension {}, config requests {}",
                    t.dim(),
                    cfg.dim
                )));
            }
            t
        }
        None => TrialSpace::new(cfg.trial.clone(), cfg.dim, cfg.seed)?,
    };
    let mut opt = Adam::new(cfg.adam.clone(), trial.net.layout.n_params())?;

    let (test_pts, test_times) = test_points(&case, cfg.n_test, cfg.seed);
    let exact: Vec<f64> = (0..cfg.n_test)
        .map(|k| {
            let t = if case.time_dependent { test_times[k] } else { 0.0 };
            case.u(test_pts.row(k).as_slice().unwrap(), t)
        })
        .collect();

    let start = Instant::now();
    let mut record = RunRecord {
        benchmark: case.name.clone(),
        method: cfg.method,
        seed: cfg.seed,
        epochs_run: 0,
        losses: Vec::with_capacity(cfg.epochs),
        e_tests: Vec::new(),
        final_e_test: f64::NAN,
        wall_seconds: 0.0,
        aborted: None,
    };
    let initial = test_error(&trial, &domain, &case, &test_pts, &test_times, &exact, cfg.threads)?;
    record.e_tests.push((0, initial));
    record.final_e_test = initial;

    let mut grad = vec![0.0; trial.net.layout.n_params()];
    for epoch in 1..=cfg.epochs {
        let draw = if cfg.resample_each_epoch { epoch as u64 } else { 0 };
        let (pts, times) = sample_collocation(&case, cfg.n_res, cfg.seed, draw);
        let plan = build_plan(&cfg, &domain, &pts, draw)?;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let loss_res = residual_loss(
            &trial,
            &domain,
            &case,
            &plan,
            times.as_deref(),
            cfg.n_tau,
            Some(&mut grad),
        );
        let loss = match loss_res {
            Ok((loss, _)) => loss,
            Err(Error::NonFinite(msg)) => {
                record.aborted = Some(format!("epoch {epoch}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        };
        opt.step(&mut trial.net.params, &grad);
        record.losses.push(loss);
        record.epochs_run = epoch;
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let err =
                test_error(&trial, &domain, &case, &test_pts, &test_times, &exact, cfg.threads)?;
            record.e_tests.push((epoch, err));
            record.final_e_test = err;
        }
    }
    record.wall_seconds = start.elapsed().as_secs_f64();
    Ok((record, trial))
}

/// Train one run per method with shared initialization and collocation
/// streams (both keyed only by `seed`), method-specific direction streams.
pub fn compare_methods(cfg_base: &TrainConfig, methods: &[Method]) -> Vec<(Method, Result<RunRecord>)> {
    methods
        .iter()
        .map(|&m| {
            let cfg = TrainConfig { method: m, ..cfg_base.clone() };
            (m, train(&cfg).map(|(rec, _)| rec))
        })
        .collect()
}
