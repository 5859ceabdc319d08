//! The feature-enhanced neural trial function
//!
//!   Ψ(x,t;θ) = u₀(x) + Σ_j t^γ · b(x)^{μ_j} · φ_j(x,t;θ)
//!
//! (stationary problems omit u₀ and the temporal factor). The heads φ_j are
//! the outputs of one shared tanh MLP; the boundary feature b enforces the
//! exterior condition exactly and the factor t^γ the initial condition.
//! The exponents μ_j interpolate from α/2 to μ_p so that the leading
//! boundary singularity b^{α/2} is representable.
//!
//! Batched evaluation keeps the parameter-independent feature factors
//! separate from the network outputs, which reduces every parameter
//! gradient of a residual functional to cotangent matrices on the network
//! outputs and JVP outputs, handled by one reverse pass per batch.

use crate::caputo::TimeField;
use crate::geometry::Domain;
use crate::mlp::{Cache, Jvp, Mlp};
use crate::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Optional initial-condition field u₀ with its gradient.
pub trait InitialCondition: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64], out: &mut [f64]);
}

/// μ_j = α/2 + (j−1)·(μ_p − α/2)/(p−1): a strictly increasing exponent
/// schedule from the boundary exponent α/2 up to μ_p.
pub fn mu_schedule(alpha: f64, p: usize, mu_p: f64) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("head count p must be >= 2, got {p}")));
    }
    let mu1 = 0.5 * alpha;
    if !(mu_p > mu1) {
        return Err(Error::InvalidParameter(format!(
            "mu_p must exceed alpha/2 = {mu1}, got {mu_p}"
        )));
    }
    let step = (mu_p - mu1) / (p - 1) as f64;
    Ok((0..p).map(|j| mu1 + j as f64 * step).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    /// Head count.
    pub p: usize,
    pub alpha: f64,
    /// Temporal exponent, used only when `time_dependent`.
    pub gamma: f64,
    /// Largest boundary exponent; `None` means μ₁ + 1.
    pub mu_p: Option<f64>,
    pub time_dependent: bool,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            p: 16,
            alpha: 1.5,
            gamma: 0.5,
            mu_p: None,
            time_dependent: false,
            hidden: vec![128, 128, 128, 128],
        }
    }
}

impl TrialConfig {
    pub fn resolved_mu_p(&self) -> f64 {
        self.mu_p.unwrap_or(0.5 * self.alpha + 1.0)
    }
}

/// The trial function: config, exponent schedule, shared network, and an
/// optional initial condition.
#[derive(Clone)]
pub struct TrialSpace {
    pub cfg: TrialConfig,
    pub mu: Vec<f64>,
    pub net: Mlp,
    pub u0: Option<Arc<dyn InitialCondition>>,
}

impl TrialSpace {
    pub fn new(cfg: TrialConfig, dim: usize, seed: u64) -> Result<Self> {
        if !(cfg.alpha > 0.0 && cfg.alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0,2), got {}", cfg.alpha)));
        }
        if cfg.time_dependent && !(cfg.gamma > 0.0 && cfg.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0,1), got {}", cfg.gamma)));
        }
        let mu = mu_schedule(cfg.alpha, cfg.p, cfg.resolved_mu_p())?;
        let mut widths = vec![dim + cfg.time_dependent as usize];
        widths.extend_from_slice(&cfg.hidden);
        widths.push(cfg.p);
        let net = Mlp::init(&widths, seed, "trial-init")?;
        Ok(TrialSpace { cfg, mu, net, u0: None })
    }

    pub fn with_u0(mut self, u0: Arc<dyn InitialCondition>) -> Self {
        self.u0 = Some(u0);
        self
    }

    pub fn dim(&self) -> usize {
        self.net.in_dim() - self.cfg.time_dependent as usize
    }

    fn input_row(&self, x: &[f64], t: f64, out: &mut [f64]) {
        out[..x.len()].copy_from_slice(x);
        if self.cfg.time_dependent {
            out[x.len()] = t;
        }
    }

    /// Feature factors w_j = t^γ b^{μ_j} (or b^{μ_j} stationary).
    pub fn features(&self, b: f64, t: f64, out: &mut [f64]) {
        let tf = if self.cfg.time_dependent { t.powf(self.cfg.gamma) } else { 1.0 };
        for (w, &mu) in out.iter_mut().zip(&self.mu) {
            *w = tf * b.powf(mu);
        }
    }

    /// Ψ(x,t). Exterior points return u₀ (or 0); t = 0 returns u₀ exactly.
    pub fn eval(&self, domain: &dyn Domain, x: &[f64], t: f64) -> f64 {
        let b = domain.boundary_feature(x);
        let u0v = self.u0.as_ref().map_or(0.0, |u| u.value(x));
        if b <= 0.0 {
            return if self.cfg.time_dependent { u0v } else { 0.0 };
        }
        let xin = self.input_vec(x, t);
        let cache = self.net.forward(ArrayView2::from_shape((1, xin.len()), &xin).unwrap());
        let mut w = vec![0.0; self.cfg.p];
        self.features(b, t, &mut w);
        let head_sum: f64 = w.iter().zip(cache.out.row(0)).map(|(wv, &y)| wv * y).sum();
        if self.cfg.time_dependent { u0v + head_sum } else { head_sum }
    }

    fn input_vec(&self, x: &[f64], t: f64) -> Vec<f64> {
        let n = x.len() + self.cfg.time_dependent as usize;
        let mut v = vec![0.0; n];
        self.input_row(x, t, &mut v);
        v
    }

    /// ∇ₓΨ at a strictly interior point, exact via the product rule with
    /// ∇ₓφ_j from one JVP per coordinate.
    pub fn grad_x(&self, domain: &dyn Domain, x: &[f64], t: f64) -> Vec<f64> {
        let d = x.len();
        let b = domain.boundary_feature(x);
        assert!(b > 0.0, "grad_x requires a strictly interior point");
        let mut db = vec![0.0; d];
        domain.boundary_feature_grad(x, &mut db);
        let xin = self.input_vec(x, t);
        let nin = xin.len();
        let cache = self.net.forward(ArrayView2::from_shape((1, nin), &xin).unwrap());
        let mut w = vec![0.0; self.cfg.p];
        self.features(b, t, &mut w);
        let tf = if self.cfg.time_dependent { t.powf(self.cfg.gamma) } else { 1.0 };
        let mut out = vec![0.0; d];
        for i in 0..d {
            let mut dx = vec![0.0; nin];
            dx[i] = 1.0;
            let jv = self.net.jvp(&cache, ArrayView2::from_shape((1, nin), &dx).unwrap());
            let mut acc = 0.0;
            for j in 0..self.cfg.p {
                acc += tf * self.mu[j] * b.powf(self.mu[j] - 1.0) * db[i] * cache.out[[0, j]]
                    + w[j] * jv.out[[0, j]];
            }
            out[i] = acc;
        }
        if let Some(u0) = &self.u0 {
            let mut g = vec![0.0; d];
            u0.grad(x, &mut g);
            for i in 0..d {
                out[i] += g[i];
            }
        }
        out
    }

    /// ∂_tΨ for diagnostics (time-dependent trials only).
    pub fn dt(&self, domain: &dyn Domain, x: &[f64], t: f64) -> f64 {
        assert!(self.cfg.time_dependent);
        let b = domain.boundary_feature(x);
        if b <= 0.0 {
            return 0.0;
        }
        let gamma = self.cfg.gamma;
        let xin = self.input_vec(x, t);
        let nin = xin.len();
        let cache = self.net.forward(ArrayView2::from_shape((1, nin), &xin).unwrap());
        let mut dx = vec![0.0; nin];
        dx[nin - 1] = 1.0;
        let jv = self.net.jvp(&cache, ArrayView2::from_shape((1, nin), &dx).unwrap());
        let tf = t.powf(gamma);
        let dtf = gamma * t.powf(gamma - 1.0);
        (0..self.cfg.p)
            .map(|j| {
                let bm = b.powf(self.mu[j]);
                dtf * bm * cache.out[[0, j]] + tf * bm * jv.out[[0, j]]
            })
            .sum()
    }

    /// The raw head φ_j as a TimeField (time-dependent trials).
    pub fn head_field(&self, j: usize) -> HeadField<'_> {
        assert!(self.cfg.time_dependent && j < self.cfg.p);
        HeadField { trial: self, j }
    }

    /// Evaluate a batch of points with optional tangent directions.
    ///
    /// `points` are spatial rows, `times` per-row (required when
    /// time-dependent). Each tangent is a constant (spatial direction,
    /// time component) pair applied to every row. `time_factor` selects
    /// the full features t^γ b^{μ_j} versus the spatial-only b^{μ_j}
    /// (the form the Caputo discretization consumes).
    pub fn batch(
        &self,
        domain: &dyn Domain,
        points: ArrayView2<'_, f64>,
        times: Option<ArrayView1<'_, f64>>,
        tangents: &[(Vec<f64>, f64)],
        time_factor: bool,
    ) -> TrialBatch {
        let d = points.ncols();
        let b_rows = points.nrows();
        assert_eq!(d, self.dim());
        assert_eq!(self.cfg.time_dependent, times.is_some());
        let nin = self.net.in_dim();
        let p = self.cfg.p;

        let mut inputs = Array2::zeros((b_rows, nin));
        let mut feats = Array2::zeros((b_rows, p));
        let mut bvals = vec![0.0; b_rows];
        let mut dbs = Array2::zeros((b_rows, d));
        for n in 0..b_rows {
            let x = points.row(n);
            let xs = x.as_slice().unwrap();
            let t = times.map_or(0.0, |ts| ts[n]);
            self.input_row(xs, t, inputs.row_mut(n).as_slice_mut().unwrap());
            let b = domain.boundary_feature(xs);
            bvals[n] = b;
            domain.boundary_feature_grad(xs, dbs.row_mut(n).as_slice_mut().unwrap());
            let tf = if time_factor && self.cfg.time_dependent {
                t.powf(self.cfg.gamma)
            } else {
                1.0
            };
            for j in 0..p {
                feats[[n, j]] = tf * bvals[n].max(0.0).powf(self.mu[j]);
            }
        }

        let cache = self.net.forward(inputs.view());
        let mut jvps = Vec::with_capacity(tangents.len());
        let mut feat_dirs = Vec::with_capacity(tangents.len());
        for (vx, vt) in tangents {
            assert_eq!(vx.len(), d);
            let mut dxin = Array2::zeros((b_rows, nin));
            for n in 0..b_rows {
                let mut row = dxin.row_mut(n);
                for i in 0..d {
                    row[i] = vx[i];
                }
                if self.cfg.time_dependent {
                    row[nin - 1] = *vt;
                }
            }
            let jv = self.net.jvp(&cache, dxin.view());
            // directional derivative of the feature factors
            let mut dw = Array2::zeros((b_rows, p));
            for n in 0..b_rows {
                let b = bvals[n];
                if b <= 0.0 {
                    continue;
                }
                let t = times.map_or(0.0, |ts| ts[n]);
                let dbv: f64 = (0..d).map(|i| dbs[[n, i]] * vx[i]).sum();
                let (tf, dtf) = if time_factor && self.cfg.time_dependent {
                    (t.powf(self.cfg.gamma), self.cfg.gamma * t.powf(self.cfg.gamma - 1.0) * vt)
                } else {
                    (1.0, 0.0)
                };
                for j in 0..p {
                    let bm = b.powf(self.mu[j]);
                    let dbm = self.mu[j] * b.powf(self.mu[j] - 1.0) * dbv;
                    dw[[n, j]] = dtf * bm + tf * dbm;
                }
            }
            jvps.push(jv);
            feat_dirs.push(dw);
        }

        let mut u0_vals = Array1::zeros(b_rows);
        let mut du0_dirs = vec![Array1::zeros(b_rows); tangents.len()];
        if time_factor && self.cfg.time_dependent {
            if let Some(u0) = &self.u0 {
                let mut g = vec![0.0; d];
                for n in 0..b_rows {
                    let xs = points.row(n);
                    let xs = xs.as_slice().unwrap();
                    u0_vals[n] = u0.value(xs);
                    u0.grad(xs, &mut g);
                    for (i, (vx, _)) in tangents.iter().enumerate() {
                        du0_dirs[i][n] = g.iter().zip(vx).map(|(a, b)| a * b).sum();
                    }
                }
            }
        }

        TrialBatch { cache, jvps, feats, feat_dirs, u0_vals, du0_dirs }
    }

    /// Parameter-gradient of a functional with the given cotangents on a
    /// batch's values and JVP values; accumulates into `grad`.
    pub fn backward(
        &self,
        batch: &TrialBatch,
        value_cot: &[f64],
        jvp_cots: &[&[f64]],
        grad: &mut [f64],
    ) {
        let (b_rows, p) = batch.feats.dim();
        assert_eq!(value_cot.len(), b_rows);
        assert_eq!(jvp_cots.len(), batch.jvps.len());
        let mut gy = Array2::zeros((b_rows, p));
        for n in 0..b_rows {
            for j in 0..p {
                gy[[n, j]] = value_cot[n] * batch.feats[[n, j]];
            }
        }
        let mut gdys = Vec::with_capacity(jvp_cots.len());
        for (i, cd) in jvp_cots.iter().enumerate() {
            assert_eq!(cd.len(), b_rows);
            let dw = &batch.feat_dirs[i];
            let mut gdy = Array2::zeros((b_rows, p));
            for n in 0..b_rows {
                for j in 0..p {
                    gy[[n, j]] += cd[n] * dw[[n, j]];
                    gdy[[n, j]] = cd[n] * batch.feats[[n, j]];
                }
            }
            gdys.push(gdy);
        }
        let pairs: Vec<(&Jvp, ArrayView2<'_, f64>)> = batch
            .jvps
            .iter()
            .zip(&gdys)
            .map(|(jv, g)| (jv, g.view()))
            .collect();
        self.net.backward(&batch.cache, &pairs, gy.view(), grad);
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let dump = CheckpointDump {
            version: 1,
            cfg: self.cfg.clone(),
            widths: self.net.layout.widths.clone(),
            params: self.net.params.clone(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &dump)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let dump: CheckpointDump = serde_json::from_reader(std::io::BufReader::new(file))?;
        if dump.version != 1 {
            return Err(Error::InvalidParameter(format!(
                "unsupported checkpoint version {}",
                dump.version
            )));
        }
        let layout = crate::mlp::Layout::new(&dump.widths)?;
        if dump.params.len() != layout.n_params() {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has {} parameters, layout wants {}",
                dump.params.len(),
                layout.n_params()
            )));
        }
        let mu = mu_schedule(dump.cfg.alpha, dump.cfg.p, dump.cfg.resolved_mu_p())?;
        Ok(TrialSpace {
            cfg: dump.cfg,
            mu,
            net: Mlp { layout, params: dump.params },
            u0: None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointDump {
    version: u32,
    cfg: TrialConfig,
    widths: Vec<usize>,
    params: Vec<f64>,
}

/// A batch evaluation of the trial function: network cache plus the
/// parameter-independent feature factors and their tangent derivatives.
pub struct TrialBatch {
    pub cache: Cache,
    pub jvps: Vec<Jvp>,
    pub feats: Array2<f64>,
    pub feat_dirs: Vec<Array2<f64>>,
    pub u0_vals: Array1<f64>,
    pub du0_dirs: Vec<Array1<f64>>,
}

impl TrialBatch {
    /// Ψ at every row.
    pub fn values(&self) -> Array1<f64> {
        let mut out = self.u0_vals.clone();
        for (n, mut acc) in out.iter_mut().enumerate() {
            let _ = &mut acc;
            *acc += self
                .feats
                .row(n)
                .iter()
                .zip(self.cache.out.row(n))
                .map(|(w, &y)| w * y)
                .sum::<f64>();
        }
        out
    }

    /// Directional derivative of Ψ along tangent i at every row.
    pub fn jvp_values(&self, i: usize) -> Array1<f64> {
        let mut out = self.du0_dirs[i].clone();
        let jv = &self.jvps[i];
        let dw = &self.feat_dirs[i];
        for n in 0..self.feats.nrows() {
            let mut acc = 0.0;
            for j in 0..self.feats.ncols() {
                acc += dw[[n, j]] * self.cache.out[[n, j]] + self.feats[[n, j]] * jv.out[[n, j]];
            }
            out[n] += acc;
        }
        out
    }
}

/// φ_j(x,t) and its exact time derivative, satisfying the TimeField
/// contract consumed by the Caputo module.
pub struct HeadField<'a> {
    trial: &'a TrialSpace,
    j: usize,
}

impl TimeField for HeadField<'_> {
    fn evaluate(&self, x: &[f64], t: f64) -> f64 {
        let xin = self.trial.input_vec(x, t);
        let cache = self
            .trial
            .net
            .forward(ArrayView2::from_shape((1, xin.len()), &xin).unwrap());
        cache.out[[0, self.j]]
    }

    fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        let xin = self.trial.input_vec(x, t);
        let nin = xin.len();
        let cache = self
            .trial
            .net
            .forward(ArrayView2::from_shape((1, nin), &xin).unwrap());
        let mut dx = vec![0.0; nin];
        dx[nin - 1] = 1.0;
        let jv = self
            .trial
            .net
            .jvp(&cache, ArrayView2::from_shape((1, nin), &dx).unwrap());
        jv.out[[0, self.j]]
    }
}
