//! Complex vectors and matrices stored as split real/imaginary arrays.
//!
//! Everything downstream (the learning stack, the heads, the baselines) works
//! on real arrays, so complex quantities are kept as a pair of `f64` buffers
//! rather than `Complex64` slices. Scalars are returned as [`Complex64`].
//!
//! The Hermitian positive-definite solve goes through [`Cholesky`], whose
//! factor is kept around so the reverse pass of the beam recovery can reuse it.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                context: "CVec re/im",
                expected: re.len(),
                found: im.len(),
            });
        }
        Ok(Self { re, im })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Self {
        debug_assert_eq!(re.len(), im.len());
        Self {
            re: re.to_vec(),
            im: im.to_vec(),
        }
    }

    pub fn from_complex(values: &[Complex64]) -> Self {
        Self {
            re: values.iter().map(|z| z.re).collect(),
            im: values.iter().map(|z| z.im).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|x| x.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            re: self.re.iter().map(|x| x * s).collect(),
            im: self.im.iter().map(|x| x * s).collect(),
        }
    }

    /// Multiplies by a complex scalar.
    pub fn scale_complex(&self, s: Complex64) -> Self {
        let (re, im) = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&a, &b)| (a * s.re - b * s.im, a * s.im + b * s.re))
            .unzip();
        Self { re, im }
    }

    pub fn norm(&self) -> f64 {
        norm2(self).sqrt()
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            re: vec![0.0; n * n],
            im: vec![0.0; n * n],
        }
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.re[i * n + i] = s;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn from_parts(n: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        for part in [&re, &im] {
            if part.len() != n * n {
                return Err(Error::DimensionMismatch {
                    context: "CMat storage",
                    expected: n * n,
                    found: part.len(),
                });
            }
        }
        Ok(Self { n, re, im })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let idx = i * self.n + j;
        Complex64::new(self.re[idx], self.im[idx])
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        let idx = i * self.n + j;
        self.re[idx] = z.re;
        self.im[idx] = z.im;
    }

    /// `A += w * x x^H`.
    pub fn add_rank_one(&mut self, w: f64, x: &CVec) {
        rank_one_update(self.n, &mut self.re, &mut self.im, w, &x.re, &x.im);
    }

    pub fn mul_vec(&self, x: &CVec) -> CVec {
        let n = self.n;
        let mut out = CVec::zeros(n);
        for i in 0..n {
            let (mut sr, mut si) = (0.0, 0.0);
            for j in 0..n {
                let (ar, ai) = (self.re[i * n + j], self.im[i * n + j]);
                sr += ar * x.re[j] - ai * x.im[j];
                si += ar * x.im[j] + ai * x.re[j];
            }
            out.re[i] = sr;
            out.im[i] = si;
        }
        out
    }

    /// Largest `|A - A^H|` entry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.get(i, j);
                let b = self.get(j, i).conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }
}

/// `a^H b`, conjugate-linear in `a`.
pub fn hdot(a: &CVec, b: &CVec) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "hdot",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(hdot_parts(&a.re, &a.im, &b.re, &b.im))
}

#[inline]
pub(crate) fn hdot_parts(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..ar.len() {
        re += ar[i] * br[i] + ai[i] * bi[i];
        im += ar[i] * bi[i] - ai[i] * br[i];
    }
    Complex64::new(re, im)
}

/// Squared Euclidean norm.
pub fn norm2(a: &CVec) -> f64 {
    a.re.iter().chain(&a.im).map(|x| x * x).sum()
}

#[inline]
pub(crate) fn rank_one_update(n: usize, re: &mut [f64], im: &mut [f64], w: f64, xr: &[f64], xi: &[f64]) {
    // (x x^H)_{ij} = x_i conj(x_j)
    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            re[idx] += w * (xr[i] * xr[j] + xi[i] * xi[j]);
            im[idx] += w * (xi[i] * xr[j] - xr[i] * xi[j]);
        }
    }
}

/// `sigma2 * I + sum_j q_j h_j h_j^H`.
pub fn gram_matrix(h: &[CVec], q: &[f64], sigma2: f64) -> Result<CMat> {
    if h.len() != q.len() {
        return Err(Error::DimensionMismatch {
            context: "gram_matrix weights",
            expected: h.len(),
            found: q.len(),
        });
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise power must be positive, got {sigma2}"
        )));
    }
    let n = h.first().map_or(0, CVec::len);
    let mut a = CMat::scaled_identity(n, sigma2);
    for (index, (hj, &qj)) in h.iter().zip(q).enumerate() {
        if qj < 0.0 {
            return Err(Error::NegativeWeight { index, value: qj });
        }
        if hj.len() != n {
            return Err(Error::DimensionMismatch {
                context: "gram_matrix channel",
                expected: n,
                found: hj.len(),
            });
        }
        a.add_rank_one(qj, hj);
    }
    Ok(a)
}

/// Lower-triangular factor `L` with `A = L L^H` and a real positive diagonal.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l_re: Vec<f64>,
    l_im: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &CMat) -> Result<Self> {
        Self::from_parts(a.n, &a.re, &a.im)
    }

    /// Factors the Hermitian matrix given by its row-major parts. Only the
    /// lower triangle is read.
    pub fn from_parts(n: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        let mut l_re = vec![0.0; n * n];
        let mut l_im = vec![0.0; n * n];
        for j in 0..n {
            let mut d = re[j * n + j];
            for k in 0..j {
                let (lr, li) = (l_re[j * n + k], l_im[j * n + k]);
                d -= lr * lr + li * li;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            l_re[j * n + j] = ljj;
            for i in (j + 1)..n {
                let (mut sr, mut si) = (re[i * n + j], im[i * n + j]);
                for k in 0..j {
                    // L_ik * conj(L_jk)
                    let (ar, ai) = (l_re[i * n + k], l_im[i * n + k]);
                    let (br, bi) = (l_re[j * n + k], l_im[j * n + k]);
                    sr -= ar * br + ai * bi;
                    si -= ai * br - ar * bi;
                }
                l_re[i * n + j] = sr / ljj;
                l_im[i * n + j] = si / ljj;
            }
        }
        Ok(Self { n, l_re, l_im })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &CVec) -> Result<CVec> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "hpd_solve rhs",
                expected: self.n,
                found: b.len(),
            });
        }
        let mut x = CVec::zeros(self.n);
        self.solve_into(&b.re, &b.im, &mut x.re, &mut x.im);
        Ok(x)
    }

    /// Solves `A x = b` writing into `x`; lengths must equal `dim()`.
    pub fn solve_into(&self, br: &[f64], bi: &[f64], xr: &mut [f64], xi: &mut [f64]) {
        let n = self.n;
        let (l_re, l_im) = (&self.l_re, &self.l_im);
        // L y = b
        for i in 0..n {
            let (mut sr, mut si) = (br[i], bi[i]);
            for k in 0..i {
                let (ar, ai) = (l_re[i * n + k], l_im[i * n + k]);
                sr -= ar * xr[k] - ai * xi[k];
                si -= ar * xi[k] + ai * xr[k];
            }
            let d = l_re[i * n + i];
            xr[i] = sr / d;
            xi[i] = si / d;
        }
        // L^H x = y
        for i in (0..n).rev() {
            let (mut sr, mut si) = (xr[i], xi[i]);
            for k in (i + 1)..n {
                // conj(L_ki) * x_k
                let (ar, ai) = (l_re[k * n + i], -l_im[k * n + i]);
                sr -= ar * xr[k] - ai * xi[k];
                si -= ar * xi[k] + ai * xr[k];
            }
            let d = l_re[i * n + i];
            xr[i] = sr / d;
            xi[i] = si / d;
        }
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn hpd_solve(a: &CMat, b: &CVec) -> Result<CVec> {
    Cholesky::new(a)?.solve(b)
}
