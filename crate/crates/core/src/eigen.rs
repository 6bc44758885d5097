//! Lowest eigenpairs of sparse symmetric matrices.
//!
//! Three back ends: Sturm bisection with inverse iteration for tridiagonal
//! matrices, a dense symmetric solver for small problems, and Chebyshev
//! filtered subspace iteration for everything else.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::discretization::SparseSymmetric;
use crate::error::{Error, Result};

/// Largest dimension handed to the dense solver.
pub const DENSE_LIMIT: usize = 2000;
/// Accepted residual `||H v - lam v|| <= RESIDUAL_TOL * max(1, |lam|)`.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Tridiagonal,
    Dense,
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Residual norms of the unit eigenvectors.
    pub residuals: Vec<f64>,
    pub method: Method,
}

impl EigenResult {
    fn check(self) -> Result<Self> {
        for (l, r) in self.values.iter().zip(&self.residuals) {
            if !(*r <= RESIDUAL_TOL * l.abs().max(1.0)) {
                return Err(Error::ConvergenceFailure(format!(
                    "{:?}: residual {r:.3e} at eigenvalue {l:.6e}",
                    self.method
                )));
            }
        }
        Ok(self)
    }
}

/// The `k` smallest eigenvalues of `a`, each certified by its residual.
pub fn lowest(a: &SparseSymmetric, k: usize) -> Result<EigenResult> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameters(format!(
            "requested {k} eigenvalues of a {n}x{n} matrix"
        )));
    }
    if let Some((d, e)) = a.as_tridiagonal() {
        tridiagonal_lowest(&d, &e, k)
    } else if n <= DENSE_LIMIT {
        dense_lowest(a, k)
    } else {
        chebyshev_lowest(a, k, &ChebyshevOptions::default())
    }
}

/// Number of eigenvalues of the tridiagonal `(d, e)` strictly below `x`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bisection for the `k` smallest eigenvalues, inverse iteration for vectors.
pub fn tridiagonal_lowest(d: &[f64], e: &[f64], k: usize) -> Result<EigenResult> {
    let n = d.len();
    if k == 0 || k > n || e.len() + 1 != n {
        return Err(Error::InvalidParameters(format!(
            "tridiagonal of size {n} with {} off-diagonals, k = {k}",
            e.len()
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * scale);
    let values: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|j| {
            let (mut a, mut b) = (lo - f64::EPSILON * scale, hi + f64::EPSILON * scale);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b || b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
                    break;
                }
                if sturm_count(d, e, mid, pivmin) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect();
    let residuals = values
        .par_iter()
        .map(|&lam| {
            let v = inverse_iteration(d, e, lam, scale);
            tridiagonal_residual(d, e, &v, lam)
        })
        .collect();
    EigenResult {
        values,
        residuals,
        method: Method::Tridiagonal,
    }
    .check()
}

fn inverse_iteration(d: &[f64], e: &[f64], lam: f64, scale: f64) -> Vec<f64> {
    let n = d.len();
    // deterministic start with components in every eigendirection
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract())
        .collect();
    for _ in 0..3 {
        v = shifted_solve(d, e, lam, &v, scale);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            break;
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Solves `(T - mu) x = b` by Gaussian elimination with partial pivoting.
fn shifted_solve(d: &[f64], e: &[f64], mu: f64, b: &[f64], scale: f64) -> Vec<f64> {
    let n = d.len();
    let tiny = f64::EPSILON * scale;
    let mut dd: Vec<f64> = d.iter().map(|x| x - mu).collect();
    let mut du = e.to_vec();
    let mut dl = e.to_vec();
    let mut x = b.to_vec();
    if n == 1 {
        let p = if dd[0].abs() < tiny { tiny } else { dd[0] };
        return vec![x[0] / p];
    }
    for i in 0..n - 1 {
        if dd[i].abs() >= dl[i].abs() {
            if dd[i] == 0.0 {
                dd[i] = tiny;
            }
            let fact = dl[i] / dd[i];
            dd[i + 1] -= fact * du[i];
            x[i + 1] -= fact * x[i];
            dl[i] = 0.0;
        } else {
            let fact = dd[i] / dl[i];
            dd[i] = dl[i];
            let t = dd[i + 1];
            dd[i + 1] = du[i] - fact * t;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = t;
            let t = x[i];
            x[i] = x[i + 1];
            x[i + 1] = t - fact * x[i + 1];
        }
    }
    if dd[n - 1] == 0.0 {
        dd[n - 1] = tiny;
    }
    x[n - 1] /= dd[n - 1];
    x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / dd[i];
    }
    x
}

fn tridiagonal_residual(d: &[f64], e: &[f64], v: &[f64], lam: f64) -> f64 {
    let n = d.len();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut r2 = 0.0;
    for i in 0..n {
        let mut y = (d[i] - lam) * v[i];
        if i > 0 {
            y += e[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            y += e[i] * v[i + 1];
        }
        r2 += y * y;
    }
    r2.sqrt() / norm
}

pub fn dense_lowest(a: &SparseSymmetric, k: usize) -> Result<EigenResult> {
    let m = a.to_dense();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..a.dim()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut hv = vec![0.0; a.dim()];
    for &i in order.iter().take(k) {
        let lam = eig.eigenvalues[i];
        let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        a.matvec(&v, &mut hv);
        let r = hv
            .iter()
            .zip(&v)
            .map(|(h, x)| (h - lam * x).powi(2))
            .sum::<f64>()
            .sqrt();
        values.push(lam);
        residuals.push(r);
    }
    EigenResult {
        values,
        residuals,
        method: Method::Dense,
    }
    .check()
}

#[derive(Debug, Clone, Copy)]
pub struct ChebyshevOptions {
    /// Polynomial degree per filtering pass.
    pub degree: usize,
    pub max_iterations: usize,
    /// Minimum number of basis vectors beyond the requested count.
    pub guard: usize,
    pub seed: u64,
}

impl Default for ChebyshevOptions {
    fn default() -> Self {
        ChebyshevOptions {
            degree: 40,
            max_iterations: 100,
            guard: 16,
            seed: 0x0C4E_B15E,
        }
    }
}

/// Dense `rows x cols` block stored row by row, so that a sparse row
/// combines contiguous slices.
#[derive(Clone)]
struct Block {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Block {
    fn zeros(rows: usize, cols: usize) -> Self {
        Block {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn column_norm(&self, j: usize) -> f64 {
        self.data
            .iter()
            .skip(j)
            .step_by(self.cols)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// `y = A x`.
fn spmm(a: &SparseSymmetric, x: &Block, y: &mut Block) {
    let p = x.cols;
    y.data
        .par_chunks_mut(p)
        .with_min_len(256)
        .enumerate()
        .for_each(|(i, yr)| {
            yr.fill(0.0);
            for (j, v) in a.row(i) {
                for (yv, xv) in yr.iter_mut().zip(&x.data[j * p..(j + 1) * p]) {
                    *yv += v * xv;
                }
            }
        });
}

/// `x^T y` as a `cols x cols` matrix.
fn gram(x: &Block, y: &Block) -> DMatrix<f64> {
    let (n, p, q) = (x.rows, x.cols, y.cols);
    let mut c = DMatrix::zeros(p, q);
    // SAFETY: the strides describe the row-major inputs and the column-major
    // output exactly; all buffers have the advertised sizes.
    unsafe {
        matrixmultiply::dgemm(
            p,
            n,
            q,
            1.0,
            x.data.as_ptr(),
            1,
            p as isize,
            y.data.as_ptr(),
            q as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            1,
            p as isize,
        );
    }
    c
}

/// `x m` for a small column-major `m`.
fn times(x: &Block, m: &DMatrix<f64>) -> Block {
    let (n, p, q) = (x.rows, x.cols, m.ncols());
    assert_eq!(m.nrows(), p);
    let mut out = Block::zeros(n, q);
    // SAFETY: as in `gram`.
    unsafe {
        matrixmultiply::dgemm(
            n,
            p,
            q,
            1.0,
            x.data.as_ptr(),
            p as isize,
            1,
            m.as_ptr(),
            1,
            p as isize,
            0.0,
            out.data.as_mut_ptr(),
            q as isize,
            1,
        );
    }
    out
}

/// Scaled Chebyshev filter damping `[cut, upper]` relative to `lowest`.
fn chebyshev_filter(
    a: &SparseSymmetric,
    x: &Block,
    degree: usize,
    cut: f64,
    upper: f64,
    lowest: f64,
) -> Block {
    let e = 0.5 * (upper - cut);
    let c = 0.5 * (upper + cut);
    let mut sigma = e / (lowest - c);
    let sigma1 = sigma;
    let mut prev = x.clone();
    let mut cur = Block::zeros(x.rows, x.cols);
    spmm(a, x, &mut cur);
    let s = sigma1 / e;
    cur.data
        .par_iter_mut()
        .zip(prev.data.par_iter())
        .for_each(|(y, xv)| *y = (*y - c * xv) * s);
    let mut next = Block::zeros(x.rows, x.cols);
    for _ in 1..degree {
        let sigma2 = 1.0 / (2.0 / sigma1 - sigma);
        spmm(a, &cur, &mut next);
        let f = 2.0 * sigma2 / e;
        let g = sigma * sigma2;
        next.data
            .par_iter_mut()
            .zip(cur.data.par_iter().zip(prev.data.par_iter()))
            .for_each(|(nv, (cv, pv))| *nv = f * (*nv - c * cv) - g * pv);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        sigma = sigma2;
    }
    cur
}

/// Chebyshev filtered subspace iteration for the `k` lowest eigenpairs.
pub fn chebyshev_lowest(
    a: &SparseSymmetric,
    k: usize,
    opts: &ChebyshevOptions,
) -> Result<EigenResult> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameters(format!(
            "requested {k} eigenvalues of dimension {n}"
        )));
    }
    let p = (k + opts.guard.max(k / 3)).min(n);
    let (g_lo, upper) = a.gershgorin();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = Block::zeros(n, p);
    x.data
        .iter_mut()
        .for_each(|v| *v = StandardNormal.sample(&mut rng));
    let mut ax = Block::zeros(n, p);
    spmm(a, &x, &mut ax);
    let mut theta;
    (theta, x, _) = rayleigh_ritz(&x, &ax, k)?;
    let mut lowest = theta[0].max(g_lo);
    let mut cut = theta[theta.len() - 1].min(0.5 * (theta[0] + upper));
    for _ in 0..opts.max_iterations {
        let y = chebyshev_filter(a, &x, opts.degree, cut, upper, lowest);
        let mut hy = Block::zeros(n, y.cols);
        spmm(a, &y, &mut hy);
        let hx;
        (theta, x, hx) = rayleigh_ritz(&y, &hy, k)?;
        let residuals: Vec<f64> = (0..k)
            .map(|j| {
                let mut r2 = 0.0;
                for (xr, hr) in x.data.chunks(x.cols).zip(hx.data.chunks(hx.cols)) {
                    let d = hr[j] - theta[j] * xr[j];
                    r2 += d * d;
                }
                r2.sqrt() / x.column_norm(j)
            })
            .collect();
        if residuals
            .iter()
            .zip(&theta)
            .all(|(r, l)| *r <= 0.1 * RESIDUAL_TOL * l.abs().max(1.0))
        {
            return EigenResult {
                values: theta[..k].to_vec(),
                residuals,
                method: Method::Chebyshev,
            }
            .check();
        }
        lowest = theta[0].max(g_lo);
        cut = theta[theta.len() - 1];
        if !(cut > lowest && cut < upper) {
            return Err(Error::ConvergenceFailure(format!(
                "filter window degenerated: [{lowest:.6e}, {cut:.6e}] against upper bound {upper:.6e}"
            )));
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "Chebyshev iteration did not converge in {} passes",
        opts.max_iterations
    )))
}

/// Rayleigh-Ritz on the span of `y` (not necessarily orthonormal), given
/// `hy = A y`. Returns ascending Ritz values, Ritz vectors and `A` applied to
/// them; numerically dependent directions of `y` are dropped.
fn rayleigh_ritz(y: &Block, hy: &Block, k: usize) -> Result<(Vec<f64>, Block, Block)> {
    let p = y.cols;
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    let a = sym(gram(y, hy));
    let b = sym(gram(y, y));
    let d: Vec<f64> = (0..p).map(|i| 1.0 / b[(i, i)].sqrt()).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure("basis vector vanished".into()));
    }
    let scale = |m: &DMatrix<f64>| DMatrix::from_fn(p, p, |i, j| d[i] * m[(i, j)] * d[j]);
    let (a, b) = (scale(&a), scale(&b));
    let eb = SymmetricEigen::new(b);
    let top = eb.eigenvalues.max();
    let keep: Vec<usize> = (0..p)
        .filter(|&i| eb.eigenvalues[i] > 1e-12 * top)
        .collect();
    if keep.len() <= k {
        return Err(Error::ConvergenceFailure(format!(
            "subspace collapsed to {} directions",
            keep.len()
        )));
    }
    let s = DMatrix::from_fn(p, keep.len(), |i, j| {
        eb.eigenvectors[(i, keep[j])] / eb.eigenvalues[keep[j]].sqrt()
    });
    let reduced = sym(s.transpose() * &a * &s);
    let ea = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&i, &j| ea.eigenvalues[i].total_cmp(&ea.eigenvalues[j]));
    let theta = order.iter().map(|&i| ea.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(keep.len(), keep.len(), |r, c| {
        ea.eigenvectors[(r, order[c])]
    });
    let mut m = s * w;
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= d[i];
    }
    Ok((theta, times(y, &m), times(hy, &m)))
}
