//! A tanh multilayer perceptron over flat parameter storage, with
//! forward-mode directional derivatives (JVPs) in the inputs and a hand
//! written reverse pass that differentiates scalar functionals of both the
//! outputs and the JVP outputs with respect to the parameters.
//!
//! Parameters live in a single `Vec<f64>` so the optimizer and checkpoints
//! can treat the network as one flat vector; weight matrices are row-major
//! views into that buffer, shaped (fan_in, fan_out).

use crate::linalg::{matmul, matmul_nt, matmul_tn_acc, tanh_inplace};
use crate::rng::stream;
use crate::{Error, Result};
use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::Rng;

/// Layer widths plus the flat offsets of each weight matrix and bias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub widths: Vec<usize>,
    w_off: Vec<usize>,
    b_off: Vec<usize>,
    total: usize,
}

impl Layout {
    pub fn new(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidParameter(format!(
                "invalid layer widths {widths:?}"
            )));
        }
        let mut w_off = Vec::new();
        let mut b_off = Vec::new();
        let mut off = 0;
        for l in 0..widths.len() - 1 {
            w_off.push(off);
            off += widths[l] * widths[l + 1];
            b_off.push(off);
            off += widths[l + 1];
        }
        Ok(Layout { widths: widths.to_vec(), w_off, b_off, total: off })
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.total
    }

    pub fn weight<'a>(&self, data: &'a [f64], l: usize) -> ArrayView2<'a, f64> {
        let (r, c) = (self.widths[l], self.widths[l + 1]);
        ArrayView2::from_shape((r, c), &data[self.w_off[l]..self.w_off[l] + r * c]).unwrap()
    }

    pub fn weight_mut<'a>(&self, data: &'a mut [f64], l: usize) -> ArrayViewMut2<'a, f64> {
        let (r, c) = (self.widths[l], self.widths[l + 1]);
        ArrayViewMut2::from_shape((r, c), &mut data[self.w_off[l]..self.w_off[l] + r * c])
            .unwrap()
    }

    pub fn bias<'a>(&self, data: &'a [f64], l: usize) -> ArrayView1<'a, f64> {
        let c = self.widths[l + 1];
        ArrayView1::from_shape(c, &data[self.b_off[l]..self.b_off[l] + c]).unwrap()
    }

    pub fn bias_mut<'a>(&self, data: &'a mut [f64], l: usize) -> ArrayViewMut1<'a, f64> {
        let c = self.widths[l + 1];
        ArrayViewMut1::from_shape(c, &mut data[self.b_off[l]..self.b_off[l] + c]).unwrap()
    }
}

/// The network: a layout plus its flat parameter vector.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layout: Layout,
    pub params: Vec<f64>,
}

impl Mlp {
    /// Fan-in uniform initialization, weights in ±1/√fan_in, zero biases,
    /// drawn from the named stream so runs are reproducible.
    pub fn init(widths: &[usize], seed: u64, purpose: &str) -> Result<Self> {
        let layout = Layout::new(widths)?;
        let mut params = vec![0.0; layout.n_params()];
        let mut rng = stream(seed, purpose, &[]);
        for l in 0..layout.n_layers() {
            let bound = 1.0 / (widths[l] as f64).sqrt();
            for w in layout.weight_mut(&mut params, l).iter_mut() {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(Mlp { layout, params })
    }

    pub fn in_dim(&self) -> usize {
        self.layout.widths[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.layout.widths.last().unwrap()
    }

    /// Forward pass over a batch (rows are points). Returns the cache of
    /// post-activation values needed by `jvp` and `backward`.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Cache {
        assert_eq!(x.ncols(), self.in_dim());
        let lay = &self.layout;
        let nl = lay.n_layers();
        let b = x.nrows();
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(nl);
        acts.push(x.to_owned());
        let mut out = Array2::zeros((0, 0));
        for l in 0..nl {
            let mut z = Array2::zeros((b, lay.widths[l + 1]));
            matmul(z.view_mut(), acts[l].view(), lay.weight(&self.params, l));
            z += &lay.bias(&self.params, l);
            if l + 1 < nl {
                tanh_inplace(z.as_slice_mut().unwrap());
                acts.push(z);
            } else {
                out = z;
            }
        }
        Cache { acts, out }
    }

    /// Forward-mode directional derivative along the input tangent dx,
    /// reusing the activations of a previous `forward` on the same batch.
    pub fn jvp(&self, cache: &Cache, dx: ArrayView2<'_, f64>) -> Jvp {
        let lay = &self.layout;
        let nl = lay.n_layers();
        assert_eq!(dx.dim(), cache.acts[0].dim());
        let b = dx.nrows();
        let mut tangents: Vec<Array2<f64>> = Vec::with_capacity(nl);
        let mut dz_pre: Vec<Array2<f64>> = Vec::with_capacity(nl - 1);
        tangents.push(dx.to_owned());
        let mut out = Array2::zeros((0, 0));
        for l in 0..nl {
            let mut dz = Array2::zeros((b, lay.widths[l + 1]));
            matmul(dz.view_mut(), tangents[l].view(), lay.weight(&self.params, l));
            if l + 1 < nl {
                // da = dz ∘ (1 − a²)
                let a = &cache.acts[l + 1];
                let mut da = dz.clone();
                da.zip_mut_with(a, |d, &av| *d *= 1.0 - av * av);
                dz_pre.push(dz);
                tangents.push(da);
            } else {
                out = dz;
            }
        }
        Jvp { tangents, dz_pre, out }
    }

    /// Reverse pass: accumulate into `grad` the parameter gradient of a
    /// scalar functional whose cotangents with respect to the outputs are
    /// `gy` and, for each attached JVP, `gdy` with respect to that JVP's
    /// outputs. Implements reverse differentiation of the combined
    /// forward-plus-JVP computation, so nested derivatives (parameter
    /// gradients of input-derivative expressions) are exact.
    pub fn backward(
        &self,
        cache: &Cache,
        jvps: &[(&Jvp, ArrayView2<'_, f64>)],
        gy: ArrayView2<'_, f64>,
        grad: &mut [f64],
    ) {
        let lay = &self.layout;
        let nl = lay.n_layers();
        assert_eq!(grad.len(), lay.n_params());
        assert_eq!(gy.dim(), cache.out.dim());
        let b = gy.nrows();

        // top linear layer
        let top = nl - 1;
        matmul_tn_acc(lay.weight_mut(grad, top), cache.acts[top].view(), gy);
        for (jv, gdy) in jvps {
            matmul_tn_acc(lay.weight_mut(grad, top), jv.tangents[top].view(), *gdy);
        }
        {
            let mut gb = lay.bias_mut(grad, top);
            for row in gy.rows() {
                for (g, &v) in gb.iter_mut().zip(row) {
                    *g += v;
                }
            }
        }
        let mut ga = Array2::zeros((b, lay.widths[top]));
        matmul_nt(ga.view_mut(), gy, lay.weight(&self.params, top));
        let mut gdas: Vec<Array2<f64>> = jvps
            .iter()
            .map(|(_, gdy)| {
                let mut g = Array2::zeros((b, lay.widths[top]));
                matmul_nt(g.view_mut(), *gdy, lay.weight(&self.params, top));
                g
            })
            .collect();

        for l in (0..nl - 1).rev() {
            let a = &cache.acts[l + 1];
            // gz = ga ∘ u + Σ_i gda_i ∘ dz_i ∘ (−2a) ∘ u, u = 1 − a²
            let mut gz = ga;
            gz.zip_mut_with(a, |g, &av| *g *= 1.0 - av * av);
            let mut gdzs: Vec<Array2<f64>> = Vec::with_capacity(jvps.len());
            for (i, (jv, _)) in jvps.iter().enumerate() {
                let gda = &gdas[i];
                let dz = &jv.dz_pre[l];
                ndarray::Zip::from(&mut gz)
                    .and(gda)
                    .and(dz)
                    .and(a)
                    .for_each(|g, &gd, &d, &av| {
                        *g += gd * d * (-2.0 * av) * (1.0 - av * av);
                    });
                let mut gdz = gda.clone();
                gdz.zip_mut_with(a, |g, &av| *g *= 1.0 - av * av);
                gdzs.push(gdz);
            }

            matmul_tn_acc(lay.weight_mut(grad, l), cache.acts[l].view(), gz.view());
            for (i, (jv, _)) in jvps.iter().enumerate() {
                matmul_tn_acc(lay.weight_mut(grad, l), jv.tangents[l].view(), gdzs[i].view());
            }
            {
                let mut gb = lay.bias_mut(grad, l);
                for row in gz.rows() {
                    for (g, &v) in gb.iter_mut().zip(row) {
                        *g += v;
                    }
                }
            }

            if l > 0 {
                let mut next_ga = Array2::zeros((b, lay.widths[l]));
                matmul_nt(next_ga.view_mut(), gz.view(), lay.weight(&self.params, l));
                ga = next_ga;
                for (i, gdz) in gdzs.iter().enumerate() {
                    let mut g = Array2::zeros((b, lay.widths[l]));
                    matmul_nt(g.view_mut(), gdz.view(), lay.weight(&self.params, l));
                    gdas[i] = g;
                }
            } else {
                ga = gz;
            }
        }
    }
}

/// Activations retained by `forward`: acts[0] is the input batch, acts[l]
/// the l-th hidden layer after tanh; `out` is the final linear output.
#[derive(Debug, Clone)]
pub struct Cache {
    pub acts: Vec<Array2<f64>>,
    pub out: Array2<f64>,
}

/// Tangent state retained by `jvp`: tangents[l] mirrors acts[l]; dz_pre[l]
/// is the pre-activation tangent of hidden layer l+1; `out` is the JVP of
/// the network output.
#[derive(Debug, Clone)]
pub struct Jvp {
    pub tangents: Vec<Array2<f64>>,
    pub dz_pre: Vec<Array2<f64>>,
    pub out: Array2<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array1;

    fn test_net(widths: &[usize], seed: u64) -> Mlp {
        Mlp::init(widths, seed, "mlp-test").unwrap()
    }

    fn rand_batch(rows: usize, cols: usize, seed: u64, tag: &str) -> Array2<f64> {
        let mut rng = stream(seed, tag, &[]);
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn forward_matches_naive_evaluation() {
        let net = test_net(&[3, 5, 4, 2], 1);
        let x = rand_batch(7, 3, 2, "x");
        let cache = net.forward(x.view());
        // naive per-point evaluation with std tanh
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut a: Vec<f64> = row.to_vec();
            for l in 0..net.layout.n_layers() {
                let w = net.layout.weight(&net.params, l);
                let bias = net.layout.bias(&net.params, l);
                let mut z: Vec<f64> = bias.to_vec();
                for (j, &av) in a.iter().enumerate() {
                    for k in 0..w.ncols() {
                        z[k] += av * w[[j, k]];
                    }
                }
                if l + 1 < net.layout.n_layers() {
                    for v in z.iter_mut() {
                        *v = v.tanh();
                    }
                }
                a = z;
            }
            for (k, &v) in a.iter().enumerate() {
                assert_relative_eq!(cache.out[[i, k]], v, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn jvp_matches_central_differences() {
        let net = test_net(&[4, 8, 8, 3], 3);
        let x = rand_batch(5, 4, 4, "x");
        let dx = rand_batch(5, 4, 5, "dx");
        let cache = net.forward(x.view());
        let jv = net.jvp(&cache, dx.view());
        let h = 1e-6;
        let plus = net.forward((&x + &(h * &dx)).view());
        let minus = net.forward((&x - &(h * &dx)).view());
        let fd = (&plus.out - &minus.out) / (2.0 * h);
        for (got, want) in jv.out.iter().zip(fd.iter()) {
            assert_relative_eq!(got, want, epsilon = 1e-8, max_relative = 1e-7);
        }
    }

    #[test]
    fn jvp_is_linear_in_the_tangent() {
        let net = test_net(&[2, 6, 2], 7);
        let x = rand_batch(3, 2, 8, "x");
        let dx1 = rand_batch(3, 2, 9, "d1");
        let dx2 = rand_batch(3, 2, 10, "d2");
        let cache = net.forward(x.view());
        let a = net.jvp(&cache, dx1.view());
        let b = net.jvp(&cache, dx2.view());
        let c = net.jvp(&cache, (&dx1 + &dx2).view());
        let diff = &a.out + &b.out - &c.out;
        assert!(diff.iter().all(|v| v.abs() < 1e-13));
    }

    /// Scalar functional F(θ) = Σ c∘y + Σ e∘dy with fixed cotangent
    /// matrices c, e; its parameter gradient reduces to one backward call.
    fn functional(net: &Mlp, x: &Array2<f64>, dx: &Array2<f64>, c: &Array2<f64>, e: &Array2<f64>) -> f64 {
        let cache = net.forward(x.view());
        let jv = net.jvp(&cache, dx.view());
        (c * &cache.out).sum() + (e * &jv.out).sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let net = test_net(&[3, 6, 5, 2], 11);
        let x = rand_batch(4, 3, 12, "x");
        let dx = rand_batch(4, 3, 13, "dx");
        let c = rand_batch(4, 2, 14, "c");
        let e = rand_batch(4, 2, 15, "e");

        let cache = net.forward(x.view());
        let jv = net.jvp(&cache, dx.view());
        let mut grad = vec![0.0; net.layout.n_params()];
        net.backward(&cache, &[(&jv, e.view())], c.view(), &mut grad);

        // 20 random parameter directions, central differences
        let mut rng = stream(16, "dirs", &[]);
        let n = net.layout.n_params();
        let h = 1e-5;
        for _ in 0..20 {
            let dir: Array1<f64> = Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0));
            let mut plus = net.clone();
            let mut minus = net.clone();
            for i in 0..n {
                plus.params[i] += h * dir[i];
                minus.params[i] -= h * dir[i];
            }
            let fd = (functional(&plus, &x, &dx, &c, &e) - functional(&minus, &x, &dx, &c, &e))
                / (2.0 * h);
            let an: f64 = grad.iter().zip(dir.iter()).map(|(g, d)| g * d).sum();
            assert_relative_eq!(an, fd, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn backward_value_only_matches_finite_differences() {
        let net = test_net(&[2, 7, 3], 21);
        let x = rand_batch(6, 2, 22, "x");
        let c = rand_batch(6, 3, 23, "c");
        let cache = net.forward(x.view());
        let mut grad = vec![0.0; net.layout.n_params()];
        net.backward(&cache, &[], c.view(), &mut grad);

        let f = |m: &Mlp| (c.clone() * &m.forward(x.view()).out).sum();
        let mut rng = stream(24, "dirs", &[]);
        let h = 1e-6;
        for _ in 0..10 {
            let dir: Vec<f64> = (0..net.layout.n_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut plus = net.clone();
            let mut minus = net.clone();
            for i in 0..dir.len() {
                plus.params[i] += h * dir[i];
                minus.params[i] -= h * dir[i];
            }
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            let an: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            assert_relative_eq!(an, fd, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn backward_with_two_tangents() {
        let net = test_net(&[3, 5, 5, 2], 31);
        let x = rand_batch(4, 3, 32, "x");
        let dx1 = rand_batch(4, 3, 33, "d1");
        let dx2 = rand_batch(4, 3, 34, "d2");
        let c = rand_batch(4, 2, 35, "c");
        let e1 = rand_batch(4, 2, 36, "e1");
        let e2 = rand_batch(4, 2, 37, "e2");

        let cache = net.forward(x.view());
        let j1 = net.jvp(&cache, dx1.view());
        let j2 = net.jvp(&cache, dx2.view());
        let mut grad = vec![0.0; net.layout.n_params()];
        net.backward(&cache, &[(&j1, e1.view()), (&j2, e2.view())], c.view(), &mut grad);

        let f = |m: &Mlp| {
            let cache = m.forward(x.view());
            let j1 = m.jvp(&cache, dx1.view());
            let j2 = m.jvp(&cache, dx2.view());
            (c.clone() * &cache.out).sum() + (e1.clone() * &j1.out).sum() + (e2.clone() * &j2.out).sum()
        };
        let mut rng = stream(38, "dirs", &[]);
        let h = 1e-5;
        for _ in 0..10 {
            let dir: Vec<f64> = (0..net.layout.n_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut plus = net.clone();
            let mut minus = net.clone();
            for i in 0..dir.len() {
                plus.params[i] += h * dir[i];
                minus.params[i] -= h * dir[i];
            }
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            let an: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            assert_relative_eq!(an, fd, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_t_column_means_zero_time_jvp() {
        // kill the last input column of the first weight matrix; the JVP
        // along e_t must vanish identically
        let mut net = test_net(&[3, 4, 2], 41);
        let tcol = 2;
        {
            let mut w0 = net.layout.weight_mut(&mut net.params, 0);
            for k in 0..w0.ncols() {
                w0[[tcol, k]] = 0.0;
            }
        }
        let x = rand_batch(5, 3, 42, "x");
        let mut dx = Array2::zeros((5, 3));
        dx.column_mut(tcol).fill(1.0);
        let cache = net.forward(x.view());
        let jv = net.jvp(&cache, dx.view());
        assert!(jv.out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_is_reproducible_and_bounded() {
        let a = test_net(&[4, 128, 128, 16], 5);
        let b = test_net(&[4, 128, 128, 16], 5);
        assert_eq!(a.params, b.params);
        let c = test_net(&[4, 128, 128, 16], 6);
        assert_ne!(a.params, c.params);
        let bound = 1.0 / (128f64).sqrt();
        let w1 = a.layout.weight(&a.params, 1);
        assert!(w1.iter().all(|v| v.abs() <= bound));
        assert!(a.layout.bias(&a.params, 0).iter().all(|&v| v == 0.0));
    }
}
