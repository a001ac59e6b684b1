//! Pointwise operator calculus for a Hermitian pair `(g, X)`.
//!
//! Everything here works on a single point: generalized eigenvalues of `X`
//! with respect to the metric `g`, elementary symmetric functions of the
//! reciprocal eigenvalues, the concave operator
//! `F(X) = -sum_a (c_a / C(n,a)) S_a(1/lambda)`, its derivative `F^{ij}`
//! with respect to the entries of `X`, the pointwise density and the minor
//! cone margin.
//!
//! Matrices are stored row-major. The hot paths used by the grid code work
//! on stack buffers of size [`MAX_DIM`]² to avoid per-point allocation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest supported complex dimension.
pub const MAX_DIM: usize = 8;
const BUF: usize = MAX_DIM * MAX_DIM;

/// `lambda_min > ADMISSIBLE_RATIO * lambda_max` is the numeric form of `X > 0`.
pub const ADMISSIBLE_RATIO: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;
const METRIC_RATIO: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl HermitianMatrix {
    /// Checks Hermitian symmetry to `1e-12` (relative to the largest entry,
    /// floored at one) and symmetrizes.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Shape(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        if !scale.is_finite() {
            return Err(Error::NotHermitian {
                deviation: f64::INFINITY,
            });
        }
        let mut deviation = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                deviation = deviation.max(d);
            }
        }
        if deviation > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { deviation });
        }
        let mut m = HermitianMatrix { dim, entries };
        m.symmetrize();
        Ok(m)
    }

    pub(crate) fn from_raw(dim: usize, entries: &[C64]) -> Self {
        let mut m = HermitianMatrix {
            dim,
            entries: entries[..dim * dim].to_vec(),
        };
        m.symmetrize();
        m
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.entries[i * n + i] = C64::new(self.entries[i * n + i].re, 0.0);
            for j in (i + 1)..n {
                let avg = 0.5 * (self.entries[i * n + j] + self.entries[j * n + i].conj());
                self.entries[i * n + j] = avg;
                self.entries[j * n + i] = avg.conj();
            }
        }
    }

    /// Real symmetric matrix from row-major entries.
    pub fn from_real(dim: usize, rows: &[f64]) -> Result<Self> {
        Self::new(dim, rows.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * n + i] = C64::new(d, 0.0);
        }
        HermitianMatrix { dim: n, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        Self::diagonal(&vec![s; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            dim,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<Self> {
        self.combine(other, 1.0, 1.0)
    }

    /// `a * self + b * other`
    pub fn combine(&self, other: &HermitianMatrix, a: f64, b: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!(
                "cannot combine {}x{} with {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Ok(HermitianMatrix {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    /// `U^H A U` for a square row-major `U`.
    pub fn congruence(&self, u: &[C64]) -> Result<Self> {
        let n = self.dim;
        if u.len() != n * n {
            return Err(Error::Shape("congruence factor has wrong size".into()));
        }
        let mut au = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                au[i * n + j] = (0..n).map(|k| self.entries[i * n + k] * u[k * n + j]).sum();
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| u[k * n + i].conj() * au[k * n + j]).sum();
            }
        }
        Ok(Self::from_raw(n, &out))
    }
}

/// Nonnegative constants `c_1..c_n` with a positive sum, plus the binomials
/// `C(n, a)` for `a = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    n: usize,
    c: Vec<f64>,
    binom: Vec<f64>,
}

impl CoefficientSet {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        let n = c.len();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::InvalidCoefficients(format!(
                "need between 2 and {MAX_DIM} coefficients, got {n}"
            )));
        }
        if let Some(bad) = c.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "coefficients must be finite and nonnegative, found {bad}"
            )));
        }
        if c.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidCoefficients(
                "coefficients must have a positive sum".into(),
            ));
        }
        let mut binom = vec![1.0_f64; n + 1];
        for a in 1..=n {
            binom[a] = binom[a - 1] * (n + 1 - a) as f64 / a as f64;
        }
        for b in binom.iter_mut() {
            *b = b.round();
        }
        Ok(CoefficientSet { n, c, binom })
    }

    /// `c = (1, 0, ..., 0)`.
    pub fn donaldson(n: usize) -> Result<Self> {
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        Self::new(c)
    }

    /// `c = (0, ..., 0, 1)`.
    pub fn monge_ampere(n: usize) -> Result<Self> {
        let mut c = vec![0.0; n];
        c[n - 1] = 1.0;
        Self::new(c)
    }

    pub fn all_ones(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    /// `c_alpha`, 1-based.
    pub fn coefficient(&self, alpha: usize) -> f64 {
        self.c[alpha - 1]
    }

    pub fn binomial(&self, alpha: usize) -> f64 {
        self.binom[alpha]
    }

    /// `c_alpha / C(n, alpha)`, 1-based.
    pub fn weight(&self, alpha: usize) -> f64 {
        self.c[alpha - 1] / self.binom[alpha]
    }
}

/// Generalized eigen-decomposition of `X` with respect to `g`.
///
/// `basis` is row-major: `basis[i * n + k]` is component `i` of the `k`-th
/// eigenvector. Columns are `g`-orthonormal and ordered like `lambda`
/// (descending).
#[derive(Clone, Debug, PartialEq)]
pub struct EigenData {
    pub lambda: Vec<f64>,
    pub lambda_inv: Vec<f64>,
    pub basis: Vec<C64>,
}

impl EigenData {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.dim();
        (0..n).map(|i| self.basis[i * n + k]).collect()
    }
}

/// Cholesky factorization of a constant metric, reused across grid points.
#[derive(Clone, Debug)]
pub struct Metric {
    g: HermitianMatrix,
    identity: bool,
    l_inv: [C64; BUF],
    inverse: [C64; BUF],
}

impl Metric {
    pub fn new(g: &HermitianMatrix) -> Result<Self> {
        let n = g.dim();
        let mut a = [C64::new(0.0, 0.0); BUF];
        a[..n * n].copy_from_slice(g.entries());
        jacobi_eigen(&mut a, n, None);
        let mut smallest = f64::INFINITY;
        let mut largest = f64::NEG_INFINITY;
        for i in 0..n {
            smallest = smallest.min(a[i * n + i].re);
            largest = largest.max(a[i * n + i].re);
        }
        if !(largest > 0.0) || !(smallest > METRIC_RATIO * largest) {
            return Err(Error::NonPositiveMetric {
                eigenvalue: smallest,
            });
        }

        let identity = g == &HermitianMatrix::identity(n);
        // g = L L^H, L lower triangular
        let mut l = [C64::new(0.0, 0.0); BUF];
        for j in 0..n {
            let mut d = g.get(j, j).re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            let d = d.sqrt();
            l[j * n + j] = C64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = g.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        let mut l_inv = [C64::new(0.0, 0.0); BUF];
        for j in 0..n {
            l_inv[j * n + j] = C64::new(1.0, 0.0) / l[j * n + j];
            for i in (j + 1)..n {
                let mut s = C64::new(0.0, 0.0);
                for k in j..i {
                    s -= l[i * n + k] * l_inv[k * n + j];
                }
                l_inv[i * n + j] = s / l[i * n + i];
            }
        }
        // g^{-1} = L^{-H} L^{-1}
        let mut inverse = [C64::new(0.0, 0.0); BUF];
        for i in 0..n {
            for j in 0..n {
                inverse[i * n + j] = (0..n)
                    .map(|k| l_inv[k * n + i].conj() * l_inv[k * n + j])
                    .sum();
            }
        }
        Ok(Metric {
            g: g.clone(),
            identity,
            l_inv,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.g
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// Row-major `g^{-1}`.
    pub fn inverse(&self) -> &[C64] {
        &self.inverse[..self.dim() * self.dim()]
    }

    /// `tr(g^{-1} X)`, the sum of the generalized eigenvalues.
    pub(crate) fn trace_of(&self, x: &[C64]) -> f64 {
        let n = self.dim();
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                t += (self.inverse[i * n + j] * x[j * n + i]).re;
            }
        }
        t
    }
}

/// Stack-allocated eigen-decomposition used on the hot path.
#[derive(Clone, Copy)]
pub(crate) struct Spectrum {
    pub n: usize,
    pub lambda: [f64; MAX_DIM],
    pub basis: [C64; BUF],
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.lambda[self.n - 1]
    }

    pub fn max(&self) -> f64 {
        self.lambda[0]
    }

    pub fn is_admissible(&self) -> bool {
        self.max() > 0.0 && self.min() > ADMISSIBLE_RATIO * self.max()
    }

    pub fn check_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::NotAdmissible {
                point: None,
                min_eigenvalue: self.min(),
            })
        }
    }

    pub fn reciprocals(&self) -> [f64; MAX_DIM] {
        let mut mu = [0.0; MAX_DIM];
        for i in 0..self.n {
            mu[i] = 1.0 / self.lambda[i];
        }
        mu
    }
}

/// Cyclic Jacobi for a Hermitian matrix held in `a` (row-major, `n x n`).
/// On return the diagonal of `a` holds the eigenvalues; if `v` is given it
/// accumulates the unitary so that `A_in = V diag V^H`.
pub(crate) fn jacobi_eigen(a: &mut [C64; BUF], n: usize, mut v: Option<&mut [C64; BUF]>) {
    if let Some(v) = v.as_deref_mut() {
        v.fill(C64::new(0.0, 0.0));
        for i in 0..n {
            v[i * n + i] = C64::new(1.0, 0.0);
        }
    }
    for i in 0..n {
        a[i * n + i].im = 0.0;
    }
    let frob2: f64 = a[..n * n].iter().map(|z| z.norm_sqr()).sum();
    if frob2 == 0.0 {
        return;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if off <= 1e-34 * frob2 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[p * n + q];
                let babs = b.norm();
                if babs <= 1e-300 || babs * babs <= 1e-40 * frob2 {
                    continue;
                }
                let phase = b / babs;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = 0.5 * (2.0 * babs).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // J = D R with D = diag(1, conj(phase)) on (p, q)
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * jpp + akq * jqp;
                    a[k * n + q] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[q * n + k] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[p * n + q] = C64::new(0.0, 0.0);
                a[q * n + p] = C64::new(0.0, 0.0);
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * jpp + vkq * jqp;
                        v[k * n + q] = vkp * jpq + vkq * jqq;
                    }
                }
            }
        }
    }
}

/// Generalized spectrum of `x` (row-major, `n x n`) with respect to `metric`.
/// With `vectors` the basis is phase-fixed and ties are broken
/// lexicographically; without it only `lambda` is meaningful.
pub(crate) fn spectrum(x: &[C64], metric: &Metric, vectors: bool) -> Spectrum {
    let n = metric.dim();
    let mut a = [C64::new(0.0, 0.0); BUF];
    if metric.identity {
        a[..n * n].copy_from_slice(&x[..n * n]);
    } else {
        // A = L^{-1} X L^{-H}
        let li = &metric.l_inv;
        let mut t = [C64::new(0.0, 0.0); BUF];
        for i in 0..n {
            for j in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..=i {
                    s += li[i * n + k] * x[k * n + j];
                }
                t[i * n + j] = s;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..=j {
                    s += t[i * n + k] * li[j * n + k].conj();
                }
                a[i * n + j] = s;
            }
        }
    }

    let mut q = [C64::new(0.0, 0.0); BUF];
    jacobi_eigen(&mut a, n, if vectors { Some(&mut q) } else { None });

    let mut raw = [0.0; MAX_DIM];
    for i in 0..n {
        raw[i] = a[i * n + i].re;
    }

    let mut basis = [C64::new(0.0, 0.0); BUF];
    if vectors {
        // P = L^{-H} Q
        if metric.identity {
            basis = q;
        } else {
            let li = &metric.l_inv;
            for i in 0..n {
                for k in 0..n {
                    let mut s = C64::new(0.0, 0.0);
                    for m in i..n {
                        s += li[m * n + i].conj() * q[m * n + k];
                    }
                    basis[i * n + k] = s;
                }
            }
        }
        for k in 0..n {
            let mut best = 0;
            let mut best_abs = -1.0;
            for i in 0..n {
                let m = basis[i * n + k].norm();
                if m > best_abs * (1.0 + 1e-12) {
                    best = i;
                    best_abs = m;
                }
            }
            if best_abs > 0.0 {
                let rot = basis[best * n + k].conj() / best_abs;
                for i in 0..n {
                    basis[i * n + k] *= rot;
                }
                basis[best * n + k] = C64::new(best_abs, 0.0);
            }
        }
    }

    // insertion sort: descending eigenvalue, ties by eigenvector lexicographic order
    let scale = raw[..n].iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mut order = [0usize; MAX_DIM];
    for (i, o) in order.iter_mut().enumerate().take(n) {
        *o = i;
    }
    let precedes = |i: usize, j: usize| -> bool {
        let d = raw[i] - raw[j];
        if d.abs() > TIE_TOL * scale {
            return d > 0.0;
        }
        if !vectors {
            return false;
        }
        for r in 0..n {
            let (zi, zj) = (basis[r * n + i], basis[r * n + j]);
            if zi.re != zj.re {
                return zi.re < zj.re;
            }
            if zi.im != zj.im {
                return zi.im < zj.im;
            }
        }
        false
    };
    for i in 1..n {
        let mut j = i;
        while j > 0 && precedes(order[j], order[j - 1]) {
            order.swap(j, j - 1);
            j -= 1;
        }
    }

    let mut sp = Spectrum {
        n,
        lambda: [0.0; MAX_DIM],
        basis: [C64::new(0.0, 0.0); BUF],
    };
    for (k, &src) in order.iter().enumerate().take(n) {
        sp.lambda[k] = raw[src];
        if vectors {
            for i in 0..n {
                sp.basis[i * n + k] = basis[i * n + src];
            }
        }
    }
    sp
}

/// Coefficients of `prod (t + v_i)`: `out[k] = S_k(v)` for `k = 0..=len`.
pub(crate) fn esf_all(values: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    for k in 1..=values.len() {
        out[k] = 0.0;
    }
    for (j, &v) in values.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            out[k] += v * out[k - 1];
        }
    }
}

/// Same as [`esf_all`] with entry `skip` treated as zero; `out[len] = 0`.
pub(crate) fn esf_all_skip(values: &[f64], skip: usize, out: &mut [f64]) {
    let n = values.len();
    out[0] = 1.0;
    for k in 1..=n {
        out[k] = 0.0;
    }
    let mut used = 0;
    for (j, &v) in values.iter().enumerate() {
        if j == skip {
            continue;
        }
        used += 1;
        for k in (1..=used).rev() {
            out[k] += v * out[k - 1];
        }
    }
}

/// `S_alpha(lambda)`; `S_0 = 1`.
pub fn elementary_symmetric(lambda: &[f64], alpha: usize) -> Result<f64> {
    let n = lambda.len();
    if alpha > n {
        return Err(Error::Index {
            index: alpha,
            bound: n,
        });
    }
    let mut s = vec![0.0; n + 1];
    esf_all(lambda, &mut s);
    Ok(s[alpha])
}

/// `S_{alpha;i}(lambda)`: `S_alpha` with `lambda_i` set to zero.
pub fn elementary_symmetric_reduced(lambda: &[f64], alpha: usize, i: usize) -> Result<f64> {
    let n = lambda.len();
    if i >= n {
        return Err(Error::Index { index: i, bound: n });
    }
    if alpha + 1 > n {
        return Err(Error::Index {
            index: alpha,
            bound: n.saturating_sub(1),
        });
    }
    let mut s = vec![0.0; n + 1];
    esf_all_skip(lambda, i, &mut s);
    Ok(s[alpha])
}

/// The pointwise operator for a fixed metric and coefficient set.
#[derive(Clone, Debug)]
pub struct OperatorCalculus {
    metric: Metric,
    coeffs: CoefficientSet,
}

impl OperatorCalculus {
    pub fn new(g: &HermitianMatrix, coeffs: &CoefficientSet) -> Result<Self> {
        Self::with_metric(Metric::new(g)?, coeffs)
    }

    pub fn with_metric(metric: Metric, coeffs: &CoefficientSet) -> Result<Self> {
        if metric.dim() != coeffs.n() {
            return Err(Error::Shape(format!(
                "metric has dimension {} but coefficient set has n = {}",
                metric.dim(),
                coeffs.n()
            )));
        }
        Ok(OperatorCalculus {
            metric,
            coeffs: coeffs.clone(),
        })
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn n(&self) -> usize {
        self.coeffs.n()
    }

    fn check_dim(&self, x: &HermitianMatrix) -> Result<()> {
        if x.dim() != self.n() {
            return Err(Error::Shape(format!(
                "matrix has dimension {} but operator has n = {}",
                x.dim(),
                self.n()
            )));
        }
        Ok(())
    }

    pub fn eigen(&self, x: &HermitianMatrix) -> Result<EigenData> {
        self.check_dim(x)?;
        let n = self.n();
        let sp = spectrum(x.entries(), &self.metric, true);
        Ok(EigenData {
            lambda: sp.lambda[..n].to_vec(),
            lambda_inv: sp.lambda[..n].iter().map(|l| 1.0 / l).collect(),
            basis: sp.basis[..n * n].to_vec(),
        })
    }

    pub fn evaluate_f(&self, x: &HermitianMatrix) -> Result<f64> {
        self.check_dim(x)?;
        let sp = spectrum(x.entries(), &self.metric, false);
        sp.check_admissible()?;
        Ok(self.f_of(&sp))
    }

    pub fn density_ratio(&self, x: &HermitianMatrix) -> Result<f64> {
        self.check_dim(x)?;
        let sp = spectrum(x.entries(), &self.metric, false);
        sp.check_admissible()?;
        Ok(self.density_of(&sp))
    }

    pub fn linearization_coeffs(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_dim(x)?;
        let n = self.n();
        let sp = spectrum(x.entries(), &self.metric, true);
        sp.check_admissible()?;
        let mut f = [0.0; MAX_DIM];
        self.linearization_weights(&sp, &mut f);
        let mut out = [C64::new(0.0, 0.0); BUF];
        linearization_matrix(&sp, &f, &mut out);
        Ok(HermitianMatrix::from_raw(n, &out))
    }

    /// Diagonal weights `f_i = sum_a (c_a/C(n,a)) S_{a-1;i}(mu) mu_i^2` in the
    /// eigenbasis, `mu = 1/lambda`.
    pub fn linearization_diagonal(&self, x: &HermitianMatrix) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let sp = spectrum(x.entries(), &self.metric, false);
        sp.check_admissible()?;
        let mut f = [0.0; MAX_DIM];
        self.linearization_weights(&sp, &mut f);
        Ok(f[..self.n()].to_vec())
    }

    pub fn cone_margin(&self, chi: &HermitianMatrix, psi: f64) -> Result<f64> {
        self.check_dim(chi)?;
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(Error::NonPositiveDensity {
                point: 0,
                value: psi,
            });
        }
        let sp = spectrum(chi.entries(), &self.metric, false);
        sp.check_admissible()?;
        Ok(self.cone_margin_of(&sp, psi))
    }

    pub(crate) fn f_of(&self, sp: &Spectrum) -> f64 {
        let n = sp.n;
        let mu = sp.reciprocals();
        let mut s = [0.0; MAX_DIM + 1];
        esf_all(&mu[..n], &mut s);
        -(1..=n).map(|a| self.coeffs.weight(a) * s[a]).sum::<f64>()
    }

    /// `S_n(lambda) / sum_a c_a S_{n-a}(lambda) / C(n,a)`, evaluated from the
    /// eigenvalues themselves rather than their reciprocals.
    pub(crate) fn density_of(&self, sp: &Spectrum) -> f64 {
        let n = sp.n;
        let mut s = [0.0; MAX_DIM + 1];
        esf_all(&sp.lambda[..n], &mut s);
        let denom: f64 = (1..=n).map(|a| self.coeffs.weight(a) * s[n - a]).sum();
        s[n] / denom
    }

    pub(crate) fn linearization_weights(&self, sp: &Spectrum, f: &mut [f64; MAX_DIM]) {
        let n = sp.n;
        let mu = sp.reciprocals();
        let mut s = [0.0; MAX_DIM + 1];
        for i in 0..n {
            esf_all_skip(&mu[..n], i, &mut s);
            let w: f64 = (1..=n).map(|a| self.coeffs.weight(a) * s[a - 1]).sum();
            f[i] = w * mu[i] * mu[i];
        }
    }

    pub(crate) fn cone_margin_of(&self, sp: &Spectrum, psi: f64) -> f64 {
        let n = sp.n;
        let mu = sp.reciprocals();
        let mut s = [0.0; MAX_DIM + 1];
        let mut worst = f64::INFINITY;
        for k in 0..n {
            esf_all_skip(&mu[..n], k, &mut s);
            // the alpha = n term vanishes on an (n-1)-dimensional minor
            let sum: f64 = (1..n).map(|a| self.coeffs.weight(a) * s[a]).sum();
            worst = worst.min(1.0 / psi - sum);
        }
        worst
    }
}

/// `F^{ij} = conj(P diag(f) P^H)`, so that `dF = sum_ij F^{ij} dX_ij`.
pub(crate) fn linearization_matrix(sp: &Spectrum, f: &[f64; MAX_DIM], out: &mut [C64; BUF]) {
    let n = sp.n;
    let p = &sp.basis;
    for i in 0..n {
        for j in i..n {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..n {
                s += p[i * n + k] * p[j * n + k].conj() * f[k];
            }
            out[i * n + j] = s.conj();
            out[j * n + i] = s;
        }
        out[i * n + i].im = 0.0;
    }
}

pub fn generalized_eigenvalues(x: &HermitianMatrix, g: &HermitianMatrix) -> Result<EigenData> {
    let metric = Metric::new(g)?;
    if x.dim() != metric.dim() {
        return Err(Error::Shape("X and g differ in dimension".into()));
    }
    let n = x.dim();
    let sp = spectrum(x.entries(), &metric, true);
    Ok(EigenData {
        lambda: sp.lambda[..n].to_vec(),
        lambda_inv: sp.lambda[..n].iter().map(|l| 1.0 / l).collect(),
        basis: sp.basis[..n * n].to_vec(),
    })
}

pub fn evaluate_f(x: &HermitianMatrix, g: &HermitianMatrix, coeffs: &CoefficientSet) -> Result<f64> {
    OperatorCalculus::new(g, coeffs)?.evaluate_f(x)
}

pub fn linearization_coeffs(
    x: &HermitianMatrix,
    g: &HermitianMatrix,
    coeffs: &CoefficientSet,
) -> Result<HermitianMatrix> {
    OperatorCalculus::new(g, coeffs)?.linearization_coeffs(x)
}

pub fn density_ratio(x: &HermitianMatrix, g: &HermitianMatrix, coeffs: &CoefficientSet) -> Result<f64> {
    OperatorCalculus::new(g, coeffs)?.density_ratio(x)
}

pub fn cone_margin(
    chi: &HermitianMatrix,
    g: &HermitianMatrix,
    psi: f64,
    coeffs: &CoefficientSet,
) -> Result<f64> {
    OperatorCalculus::new(g, coeffs)?.cone_margin(chi, psi)
}
