//! Dense kernels used by the network and the estimators: a faer-backed
//! matrix multiply over row-major `ndarray` buffers and a vectorizable
//! tanh. Both are single-threaded and bit-deterministic for fixed inputs.

use faer::linalg::matmul::matmul as faer_matmul;
use faer::{Accum, MatMut, MatRef, Par};
use ndarray::{ArrayView2, ArrayViewMut2};

fn as_faer<'a>(a: ArrayView2<'a, f64>) -> MatRef<'a, f64> {
    let (r, c) = a.dim();
    MatRef::from_row_major_slice(a.to_slice().expect("standard layout"), r, c)
}

fn as_faer_mut(a: ArrayViewMut2<'_, f64>) -> MatMut<'_, f64> {
    let (r, c) = a.dim();
    MatMut::from_row_major_slice_mut(a.into_slice().expect("standard layout"), r, c)
}

/// out = a · b (replacing), all matrices row-major.
pub fn matmul(out: ArrayViewMut2<'_, f64>, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(out.dim(), (a.nrows(), b.ncols()));
    faer_matmul(as_faer_mut(out), Accum::Replace, as_faer(a), as_faer(b), 1.0, Par::Seq);
}

/// out += a · b.
pub fn matmul_acc(out: ArrayViewMut2<'_, f64>, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(out.dim(), (a.nrows(), b.ncols()));
    faer_matmul(as_faer_mut(out), Accum::Add, as_faer(a), as_faer(b), 1.0, Par::Seq);
}

/// out = aᵀ · b, with a and b row-major.
pub fn matmul_tn(out: ArrayViewMut2<'_, f64>, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) {
    debug_assert_eq!(a.nrows(), b.nrows());
    debug_assert_eq!(out.dim(), (a.ncols(), b.ncols()));
    faer_matmul(
        as_faer_mut(out),
        Accum::Replace,
        as_faer(a).transpose(),
        as_faer(b),
        1.0,
        Par::Seq,
    );
}

/// out += aᵀ · b.
pub fn matmul_tn_acc(out: ArrayViewMut2<'_, f64>, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) {
    debug_assert_eq!(a.nrows(), b.nrows());
    debug_assert_eq!(out.dim(), (a.ncols(), b.ncols()));
    faer_matmul(
        as_faer_mut(out),
        Accum::Add,
        as_faer(a).transpose(),
        as_faer(b),
        1.0,
        Par::Seq,
    );
}

/// out = a · bᵀ.
pub fn matmul_nt(out: ArrayViewMut2<'_, f64>, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) {
    debug_assert_eq!(a.ncols(), b.ncols());
    debug_assert_eq!(out.dim(), (a.nrows(), b.nrows()));
    faer_matmul(
        as_faer_mut(out),
        Accum::Replace,
        as_faer(a),
        as_faer(b).transpose(),
        1.0,
        Par::Seq,
    );
}

const LOG2_E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;

/// exp(-y) for y in [0, 45], branch-free, ~1 ulp.
#[inline(always)]
fn exp_neg(y: f64) -> f64 {
    let k = (y * LOG2_E).round();
    let r = -(y - k * LN2_HI) + k * LN2_LO;
    let p = 1.0
        + r * (1.0
            + r * (0.5
                + r * (1.0 / 6.0
                    + r * (1.0 / 24.0
                        + r * (1.0 / 120.0
                            + r * (1.0 / 720.0
                                + r * (1.0 / 5040.0
                                    + r * (1.0 / 40320.0
                                        + r * (1.0 / 362_880.0
                                            + r * (1.0 / 3_628_800.0
                                                + r * (1.0 / 39_916_800.0)))))))))));
    let bits = ((1023.0 - k) as i64) << 52;
    p * f64::from_bits(bits as u64)
}

/// tanh accurate to ~5e-15 absolute, written so the compiler can vectorize it.
#[inline(always)]
pub fn fast_tanh(x: f64) -> f64 {
    let ax = x.abs().min(22.0);
    let e = exp_neg(2.0 * ax);
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

/// Apply tanh elementwise in place.
pub fn tanh_inplace(xs: &mut [f64]) {
    for x in xs.iter_mut() {
        *x = fast_tanh(*x);
    }
}
