//! Batched forward and reverse kernels for every recorded primitive.
//!
//! Rows are samples. Complex per-sample quantities use the split layout
//! shared with the input feature: a stack of `K` length-`M` vectors occupies
//! `2MK` columns, real parts of user `k` at `k*M..(k+1)*M`, imaginary parts at
//! `MK + k*M..`. An `M x M` matrix occupies `2M^2` columns, real part
//! row-major first.
//!
//! Complex adjoints use the split convention: the adjoint of `z` is
//! `dL/dRe z + i dL/dIm z`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hdot_parts, rank_one_update, Cholesky};

const LN_2: f64 = std::f64::consts::LN_2;

fn check(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

// ---------------------------------------------------------------- affine

pub fn affine(x: ArrayView2<f64>, w: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    check("affine input width", w.ncols(), x.ncols())?;
    check("affine bias rows", 1, b.nrows())?;
    check("affine bias width", w.nrows(), b.ncols())?;
    let mut y = if x.nrows() == 1 {
        // gemm repacks w on every call; a single row is cheaper as gemv
        w.dot(&x.row(0)).insert_axis(Axis(0))
    } else {
        x.dot(&w.t())
    };
    y += &b;
    Ok(y)
}

pub fn affine_backward(
    gy: ArrayView2<f64>,
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let gx = gy.dot(&w);
    let gw = gy.t().dot(&x);
    let gb = gy.sum_axis(Axis(0)).insert_axis(Axis(0));
    (gx, gw, gb)
}

// ---------------------------------------------------------------- batch norm

/// Saved intermediates of a batch-normalization application.
#[derive(Clone, Debug)]
pub struct NormCache {
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
}

/// Per-feature batch statistics (biased variance).
#[derive(Clone, Debug)]
pub struct BatchStats {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

fn check_norm_shapes(x: &ArrayView2<f64>, gamma: &ArrayView2<f64>, beta: &ArrayView2<f64>) -> Result<()> {
    check("batch-norm gain", x.ncols(), gamma.ncols())?;
    check("batch-norm shift", x.ncols(), beta.ncols())?;
    check("batch-norm gain rows", 1, gamma.nrows())?;
    check("batch-norm shift rows", 1, beta.nrows())
}

fn normalize_with(
    x: ArrayView2<f64>,
    gamma: ArrayView2<f64>,
    beta: ArrayView2<f64>,
    mean: &Array1<f64>,
    inv_std: Array1<f64>,
) -> (Array2<f64>, NormCache) {
    let xhat = (&x - &mean.view().insert_axis(Axis(0))) * &inv_std.view().insert_axis(Axis(0));
    let y = &xhat * &gamma + &beta;
    (y, NormCache { xhat, inv_std })
}

pub fn batch_norm_train(
    x: ArrayView2<f64>,
    gamma: ArrayView2<f64>,
    beta: ArrayView2<f64>,
    eps: f64,
) -> Result<(Array2<f64>, NormCache, BatchStats)> {
    check_norm_shapes(&x, &gamma, &beta)?;
    if x.nrows() < 2 {
        return Err(Error::BatchTooSmall(x.nrows()));
    }
    let mean = x.mean_axis(Axis(0)).expect("nonempty batch");
    let centered = &x - &mean.view().insert_axis(Axis(0));
    let var = (&centered * &centered).mean_axis(Axis(0)).expect("nonempty batch");
    let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
    let (y, cache) = normalize_with(x, gamma, beta, &mean, inv_std);
    Ok((y, cache, BatchStats { mean, var }))
}

pub fn batch_norm_train_backward(
    gy: ArrayView2<f64>,
    cache: &NormCache,
    gamma: ArrayView2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let n = gy.nrows() as f64;
    let ggamma = (&gy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    let gbeta = gy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let gxhat = &gy * &gamma;
    let sum_g = gxhat.sum_axis(Axis(0)).insert_axis(Axis(0));
    let sum_gx = (&gxhat * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    let scale = cache.inv_std.view().insert_axis(Axis(0)).mapv(|s| s / n);
    let gx = (gxhat * n - &sum_g - &cache.xhat * &sum_gx) * &scale;
    (gx, ggamma, gbeta)
}

pub fn batch_norm_eval(
    x: ArrayView2<f64>,
    gamma: ArrayView2<f64>,
    beta: ArrayView2<f64>,
    running_mean: &Array1<f64>,
    running_var: &Array1<f64>,
    eps: f64,
) -> Result<(Array2<f64>, NormCache)> {
    check_norm_shapes(&x, &gamma, &beta)?;
    check("batch-norm running mean", x.ncols(), running_mean.len())?;
    check("batch-norm running variance", x.ncols(), running_var.len())?;
    let inv_std = running_var.mapv(|v| 1.0 / (v + eps).sqrt());
    Ok(normalize_with(x, gamma, beta, running_mean, inv_std))
}

pub fn batch_norm_eval_backward(
    gy: ArrayView2<f64>,
    cache: &NormCache,
    gamma: ArrayView2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let ggamma = (&gy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    let gbeta = gy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let gx = &gy * &gamma * &cache.inv_std.view().insert_axis(Axis(0));
    (gx, ggamma, gbeta)
}

// ---------------------------------------------------------------- elementwise

pub fn relu(x: ArrayView2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Subgradient 0 at the kink.
pub fn relu_backward(gy: ArrayView2<f64>, x: ArrayView2<f64>) -> Array2<f64> {
    let mut gx = gy.to_owned();
    gx.zip_mut_with(&x, |g, &v| {
        if v <= 0.0 {
            *g = 0.0
        }
    });
    gx
}

// ---------------------------------------------------------------- softmax

/// Row-wise `P * softmax(z)` with the row's budget `P`.
pub fn scaled_softmax(z: ArrayView2<f64>, budgets: &[f64]) -> Result<Array2<f64>> {
    check("scaled softmax budgets", z.nrows(), budgets.len())?;
    let mut y = z.to_owned();
    for (mut row, &p) in y.rows_mut().into_iter().zip(budgets) {
        softmax_in_place(row.as_slice_mut().expect("owned row"), p);
    }
    Ok(y)
}

pub(crate) fn softmax_in_place(z: &mut [f64], budget: f64) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    let scale = budget / total;
    for v in z.iter_mut() {
        *v *= scale;
    }
}

pub fn scaled_softmax_backward(gy: ArrayView2<f64>, y: ArrayView2<f64>, budgets: &[f64]) -> Array2<f64> {
    let mut gz = Array2::zeros(y.raw_dim());
    for (b, &p) in budgets.iter().enumerate() {
        let (yr, gr) = (y.row(b), gy.row(b));
        let inner: f64 = yr.iter().zip(gr.iter()).map(|(a, g)| a * g).sum::<f64>() / p;
        for i in 0..yr.len() {
            gz[[b, i]] = yr[i] * (gr[i] - inner);
        }
    }
    gz
}

// ---------------------------------------------------------------- structural

pub fn slice_cols(x: ArrayView2<f64>, start: usize, len: usize) -> Result<Array2<f64>> {
    if start + len > x.ncols() {
        return Err(Error::DimensionMismatch {
            context: "column slice",
            expected: start + len,
            found: x.ncols(),
        });
    }
    Ok(x.slice(ndarray::s![.., start..start + len]).to_owned())
}

pub fn slice_cols_backward(gy: ArrayView2<f64>, ncols: usize, start: usize) -> Array2<f64> {
    let mut gx = Array2::zeros((gy.nrows(), ncols));
    gx.slice_mut(ndarray::s![.., start..start + gy.ncols()]).assign(&gy);
    gx
}

// ---------------------------------------------------------------- complex block helpers

/// Row view of one user's vector in the split stacked layout.
#[inline]
fn block<'r>(row: &'r [f64], m: usize, k_total: usize, k: usize) -> (&'r [f64], &'r [f64]) {
    let half = m * k_total;
    (&row[k * m..(k + 1) * m], &row[half + k * m..half + (k + 1) * m])
}

fn users_of(cols: usize, m: usize) -> Result<usize> {
    if m == 0 || cols % (2 * m) != 0 {
        return Err(Error::DimensionMismatch {
            context: "stacked complex layout",
            expected: 2 * m,
            found: cols,
        });
    }
    Ok(cols / (2 * m))
}

// ---------------------------------------------------------------- Gram matrix

/// Per row: `sigma2 I + sum_j q_j h_j h_j^H`, with `h` constant.
pub fn gram(q: ArrayView2<f64>, h: ArrayView2<f64>, m: usize, sigma2: f64) -> Result<Array2<f64>> {
    let k = users_of(h.ncols(), m)?;
    check("gram weights", k, q.ncols())?;
    check("gram batch", h.nrows(), q.nrows())?;
    let h = h.as_standard_layout();
    let mut out = Array2::zeros((q.nrows(), 2 * m * m));
    for b in 0..q.nrows() {
        let hr = h.row(b);
        let hrow = hr.as_slice().expect("standard layout");
        let mut orow = out.row_mut(b);
        let (re, im) = orow.as_slice_mut().expect("owned row").split_at_mut(m * m);
        for i in 0..m {
            re[i * m + i] = sigma2;
        }
        for j in 0..k {
            let qj = q[[b, j]];
            if qj < 0.0 {
                return Err(Error::NegativeWeight { index: j, value: qj });
            }
            let (xr, xi) = block(hrow, m, k, j);
            rank_one_update(m, re, im, qj, xr, xi);
        }
    }
    Ok(out)
}

/// `dL/dq_j = Re(h_j^H Abar h_j)`.
pub fn gram_backward(ga: ArrayView2<f64>, h: ArrayView2<f64>, m: usize) -> Array2<f64> {
    let k = h.ncols() / (2 * m);
    let h = h.as_standard_layout();
    let ga = ga.as_standard_layout();
    let mut gq = Array2::zeros((h.nrows(), k));
    for b in 0..h.nrows() {
        let hr = h.row(b);
        let hrow = hr.as_slice().expect("standard layout");
        let gr = ga.row(b);
        let (are, aim) = gr.as_slice().expect("standard layout").split_at(m * m);
        for j in 0..k {
            let (xr, xi) = block(hrow, m, k, j);
            let mut acc = 0.0;
            for r in 0..m {
                // (Abar x)_r
                let (mut sr, mut si) = (0.0, 0.0);
                for c in 0..m {
                    let (ar, ai) = (are[r * m + c], aim[r * m + c]);
                    sr += ar * xr[c] - ai * xi[c];
                    si += ar * xi[c] + ai * xr[c];
                }
                acc += xr[r] * sr + xi[r] * si;
            }
            gq[[b, j]] = acc;
        }
    }
    gq
}

// ---------------------------------------------------------------- HPD solve

/// Per row: factor `A` and solve `A x_k = b_k` for every stacked right-hand side.
pub fn hpd_solve(a: ArrayView2<f64>, rhs: ArrayView2<f64>, m: usize) -> Result<(Array2<f64>, Vec<Cholesky>)> {
    check("hpd_solve matrix width", 2 * m * m, a.ncols())?;
    check("hpd_solve batch", a.nrows(), rhs.nrows())?;
    let k = users_of(rhs.ncols(), m)?;
    let a = a.as_standard_layout();
    let rhs = rhs.as_standard_layout();
    let mut x = Array2::zeros(rhs.raw_dim());
    let mut factors = Vec::with_capacity(a.nrows());
    let half = m * k;
    for b in 0..a.nrows() {
        let ar = a.row(b);
        let (re, im) = ar.as_slice().expect("standard layout").split_at(m * m);
        let chol = Cholesky::from_parts(m, re, im)?;
        let rr = rhs.row(b);
        let rrow = rr.as_slice().expect("standard layout");
        let mut xrow = x.row_mut(b);
        let xs = xrow.as_slice_mut().expect("owned row");
        let (xre, xim) = xs.split_at_mut(half);
        for u in 0..k {
            let (br, bi) = block(rrow, m, k, u);
            chol.solve_into(br, bi, &mut xre[u * m..(u + 1) * m], &mut xim[u * m..(u + 1) * m]);
        }
        factors.push(chol);
    }
    Ok((x, factors))
}

/// Implicit-function adjoint: `bbar = A^{-1} xbar`, `Abar = -bbar x^H`,
/// returned Hermitian-symmetrized.
pub fn hpd_solve_backward(
    gx: ArrayView2<f64>,
    x: ArrayView2<f64>,
    factors: &[Cholesky],
    m: usize,
) -> (Array2<f64>, Array2<f64>) {
    let k = x.ncols() / (2 * m);
    let half = m * k;
    let gx = gx.as_standard_layout();
    let mut gb = Array2::zeros(x.raw_dim());
    let mut ga = Array2::zeros((x.nrows(), 2 * m * m));
    for (b, chol) in factors.iter().enumerate() {
        let gr = gx.row(b);
        let grow = gr.as_slice().expect("standard layout");
        let xr_ = x.row(b);
        let xrow: Vec<f64> = xr_.iter().copied().collect();
        let mut gbrow = gb.row_mut(b);
        let gbs = gbrow.as_slice_mut().expect("owned row");
        let (gbre, gbim) = gbs.split_at_mut(half);
        let mut garow = ga.row_mut(b);
        let gas = garow.as_slice_mut().expect("owned row");
        let (gare, gaim) = gas.split_at_mut(m * m);
        for u in 0..k {
            let (yr, yi) = block(grow, m, k, u);
            let (br, bi) = (&mut gbre[u * m..(u + 1) * m], &mut gbim[u * m..(u + 1) * m]);
            chol.solve_into(yr, yi, br, bi);
            let (xr, xi) = block(&xrow, m, k, u);
            // -(bbar x^H), accumulated then symmetrized below
            for r in 0..m {
                for c in 0..m {
                    gare[r * m + c] -= br[r] * xr[c] + bi[r] * xi[c];
                    gaim[r * m + c] -= bi[r] * xr[c] - br[r] * xi[c];
                }
            }
        }
        for r in 0..m {
            for c in r..m {
                let (i, j) = (r * m + c, c * m + r);
                let sr: f64 = 0.5 * (gare[i] + gare[j]);
                let si: f64 = 0.5 * (gaim[i] - gaim[j]);
                gare[i] = sr;
                gare[j] = sr;
                gaim[i] = si;
                gaim[j] = -si;
            }
        }
    }
    (ga, gb)
}

// ---------------------------------------------------------------- per-user normalization

/// Normalizes every user block to unit norm. Returns the norms (`B x K`).
pub fn normalize_blocks(x: ArrayView2<f64>, m: usize) -> Result<(Array2<f64>, Array2<f64>)> {
    let k = users_of(x.ncols(), m)?;
    let half = m * k;
    let mut d = x.to_owned();
    let mut norms = Array2::zeros((x.nrows(), k));
    for (b, mut row) in d.rows_mut().into_iter().enumerate() {
        let s = row.as_slice_mut().expect("owned row");
        for u in 0..k {
            let mut n2 = 0.0;
            for i in 0..m {
                n2 += s[u * m + i].powi(2) + s[half + u * m + i].powi(2);
            }
            if !(n2 > 0.0) {
                return Err(Error::ZeroChannel { user: u });
            }
            let n = n2.sqrt();
            for i in 0..m {
                s[u * m + i] /= n;
                s[half + u * m + i] /= n;
            }
            norms[[b, u]] = n;
        }
    }
    Ok((d, norms))
}

pub fn normalize_blocks_backward(
    gd: ArrayView2<f64>,
    d: ArrayView2<f64>,
    norms: &Array2<f64>,
    m: usize,
) -> Array2<f64> {
    let k = norms.ncols();
    let half = m * k;
    let mut gx = gd.to_owned();
    for b in 0..d.nrows() {
        for u in 0..k {
            let idx = |i: usize| [u * m + i, half + u * m + i];
            let mut inner = 0.0;
            for i in 0..m {
                for c in idx(i) {
                    inner += d[[b, c]] * gd[[b, c]];
                }
            }
            let n = norms[[b, u]];
            for i in 0..m {
                for c in idx(i) {
                    gx[[b, c]] = (gd[[b, c]] - d[[b, c]] * inner) / n;
                }
            }
        }
    }
    gx
}

/// `v_k = sqrt(p_k) d_k`.
pub fn scale_blocks(d: ArrayView2<f64>, p: ArrayView2<f64>, m: usize) -> Result<Array2<f64>> {
    let k = users_of(d.ncols(), m)?;
    check("block scale powers", k, p.ncols())?;
    check("block scale batch", d.nrows(), p.nrows())?;
    let half = m * k;
    let mut v = d.to_owned();
    for b in 0..d.nrows() {
        for u in 0..k {
            let s = p[[b, u]].sqrt();
            for i in 0..m {
                v[[b, u * m + i]] *= s;
                v[[b, half + u * m + i]] *= s;
            }
        }
    }
    Ok(v)
}

pub fn scale_blocks_backward(
    gv: ArrayView2<f64>,
    d: ArrayView2<f64>,
    p: ArrayView2<f64>,
    m: usize,
) -> (Array2<f64>, Array2<f64>) {
    let k = p.ncols();
    let half = m * k;
    let mut gd = gv.to_owned();
    let mut gp = Array2::zeros(p.raw_dim());
    for b in 0..d.nrows() {
        for u in 0..k {
            let s = p[[b, u]].sqrt();
            let mut inner = 0.0;
            for i in 0..m {
                for c in [u * m + i, half + u * m + i] {
                    inner += d[[b, c]] * gv[[b, c]];
                    gd[[b, c]] *= s;
                }
            }
            gp[[b, u]] = if s > 0.0 { 0.5 * inner / s } else { 0.0 };
        }
    }
    (gd, gp)
}

/// `v = sqrt(P / ||u||^2) u` per row.
pub fn dbl_normalize(u: ArrayView2<f64>, budgets: &[f64]) -> Result<Array2<f64>> {
    check("power normalization budgets", u.nrows(), budgets.len())?;
    let mut v = u.to_owned();
    for (mut row, &p) in v.rows_mut().into_iter().zip(budgets) {
        let s: f64 = row.iter().map(|x| x * x).sum();
        if !(s > 0.0) {
            return Err(Error::DegenerateDirection);
        }
        row *= (p / s).sqrt();
    }
    Ok(v)
}

pub fn dbl_normalize_backward(gv: ArrayView2<f64>, u: ArrayView2<f64>, budgets: &[f64]) -> Array2<f64> {
    let mut gu = gv.to_owned();
    for (b, &p) in budgets.iter().enumerate() {
        let (ur, gr) = (u.row(b), gv.row(b));
        let s: f64 = ur.iter().map(|x| x * x).sum();
        let inner: f64 = ur.iter().zip(gr.iter()).map(|(a, g)| a * g).sum();
        let c = (p / s).sqrt();
        for i in 0..ur.len() {
            gu[[b, i]] = c * (gr[i] - ur[i] * inner / s);
        }
    }
    gu
}

// ---------------------------------------------------------------- gains and rates

/// `G[b, k*K + j] = |h_k^H v_j|^2`.
pub fn cross_gains(v: ArrayView2<f64>, h: ArrayView2<f64>, m: usize) -> Result<Array2<f64>> {
    check("cross gains width", h.ncols(), v.ncols())?;
    check("cross gains batch", h.nrows(), v.nrows())?;
    let k = users_of(h.ncols(), m)?;
    let (h, v) = (h.as_standard_layout(), v.as_standard_layout());
    let mut g = Array2::zeros((h.nrows(), k * k));
    for b in 0..h.nrows() {
        let (hr, vr) = (h.row(b), v.row(b));
        let (hs, vs) = (hr.as_slice().unwrap(), vr.as_slice().unwrap());
        for ku in 0..k {
            let (ar, ai) = block(hs, m, k, ku);
            for j in 0..k {
                let (br, bi) = block(vs, m, k, j);
                g[[b, ku * k + j]] = hdot_parts(ar, ai, br, bi).norm_sqr();
            }
        }
    }
    Ok(g)
}

pub fn cross_gains_backward(gg: ArrayView2<f64>, v: ArrayView2<f64>, h: ArrayView2<f64>, m: usize) -> Array2<f64> {
    let k = h.ncols() / (2 * m);
    let half = m * k;
    let (h, v) = (h.as_standard_layout(), v.as_standard_layout());
    let mut gv = Array2::zeros(v.raw_dim());
    for b in 0..h.nrows() {
        let (hr, vr) = (h.row(b), v.row(b));
        let (hs, vs) = (hr.as_slice().unwrap(), vr.as_slice().unwrap());
        for ku in 0..k {
            let (ar, ai) = block(hs, m, k, ku);
            for j in 0..k {
                let w = gg[[b, ku * k + j]];
                if w == 0.0 {
                    continue;
                }
                let (br, bi) = block(vs, m, k, j);
                let c: Complex64 = hdot_parts(ar, ai, br, bi);
                // vbar_j += 2 w c h_k
                for i in 0..m {
                    gv[[b, j * m + i]] += 2.0 * w * (c.re * ar[i] - c.im * ai[i]);
                    gv[[b, half + j * m + i]] += 2.0 * w * (c.re * ai[i] + c.im * ar[i]);
                }
            }
        }
    }
    gv
}

/// Row sum of `log2(1 + G_kk / (sum_{j != k} G_kj + sigma2))`.
pub fn sum_rate(g: ArrayView2<f64>, k: usize, sigma2: f64) -> Result<Array2<f64>> {
    check("sum rate gains", k * k, g.ncols())?;
    let mut out = Array2::zeros((g.nrows(), 1));
    for b in 0..g.nrows() {
        let mut total = 0.0;
        for u in 0..k {
            let row_sum: f64 = (0..k).map(|j| g[[b, u * k + j]]).sum();
            let interference = row_sum - g[[b, u * k + u]] + sigma2;
            total += (1.0 + g[[b, u * k + u]] / interference).log2();
        }
        out[[b, 0]] = total;
    }
    Ok(out)
}

pub fn sum_rate_backward(gy: ArrayView2<f64>, g: ArrayView2<f64>, k: usize, sigma2: f64) -> Array2<f64> {
    let mut gg = Array2::zeros(g.raw_dim());
    for b in 0..g.nrows() {
        let w = gy[[b, 0]];
        for u in 0..k {
            let row_sum: f64 = (0..k).map(|j| g[[b, u * k + j]]).sum();
            let total = row_sum + sigma2;
            let interference = total - g[[b, u * k + u]];
            for j in 0..k {
                gg[[b, u * k + j]] = if j == u {
                    w / (LN_2 * total)
                } else {
                    w * (1.0 / total - 1.0 / interference) / LN_2
                };
            }
        }
    }
    gg
}

// ---------------------------------------------------------------- reductions

pub fn mean_rows(x: ArrayView2<f64>) -> Array2<f64> {
    x.mean_axis(Axis(0)).expect("nonempty batch").insert_axis(Axis(0))
}

pub fn mean_rows_backward(gy: ArrayView2<f64>, rows: usize) -> Array2<f64> {
    let scaled = gy.mapv(|g| g / rows as f64);
    scaled.broadcast((rows, gy.ncols())).unwrap().to_owned()
}

pub fn norm2_rows(x: ArrayView2<f64>) -> Array2<f64> {
    x.map_axis(Axis(1), |r| r.iter().map(|v| v * v).sum::<f64>())
        .insert_axis(Axis(1))
}

pub fn norm2_rows_backward(gy: ArrayView2<f64>, x: ArrayView2<f64>) -> Array2<f64> {
    &x * &gy * 2.0
}

pub fn log2_1p(x: ArrayView2<f64>) -> Array2<f64> {
    x.mapv(|v| (1.0 + v).log2())
}

pub fn log2_1p_backward(gy: ArrayView2<f64>, x: ArrayView2<f64>) -> Array2<f64> {
    let mut gx = gy.to_owned();
    gx.zip_mut_with(&x, |g, &v| *g /= (1.0 + v) * LN_2);
    gx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_affine_matches_batched() {
        let w = Array2::from_shape_fn((7, 5), |(i, j)| (i as f64 - 2.0 * j as f64).sin());
        let b = Array2::from_shape_fn((1, 7), |(_, j)| 0.1 * j as f64);
        let x = Array2::from_shape_fn((3, 5), |(i, j)| (i * 5 + j) as f64 * 0.3 - 2.0);
        let all = affine(x.view(), w.view(), b.view()).unwrap();
        for r in 0..3 {
            let one = affine(x.slice(ndarray::s![r..r + 1, ..]), w.view(), b.view()).unwrap();
            for (a, e) in one.iter().zip(all.row(r)) {
                assert!((a - e).abs() <= 1e-12 * (1.0 + e.abs()));
            }
        }
    }
}
