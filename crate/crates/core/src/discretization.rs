//! Finite-difference Hamiltonians `hbar^2 Delta_h + V` on truncated boxes.
//!
//! `Delta = -sum d^2/dx_k^2` is the positive Laplacian, discretized by the
//! second-order central stencil on the interior points of `[-L, L]^dim`
//! with homogeneous Dirichlet data (boundary neighbours are dropped).

use crate::error::{Error, Result};
use crate::potentials::Potential;

/// Points per axis below which a grid is rejected.
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points_per_axis < MIN_POINTS {
            return Err(Error::GridTooCoarse {
                points: points_per_axis,
            });
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "grid half width must be positive (got {half_width})"
            )));
        }
        Ok(GridSpec {
            dim,
            half_width,
            points_per_axis,
        })
    }

    /// `h = 2L / (N + 1)`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis + 1) as f64
    }

    /// Coordinate of interior point `i` (0-based) along an axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.spacing()
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same box with twice the spacing: `N' + 1 = (N + 1) / 2`.
    pub fn coarsened(&self) -> Result<Self> {
        let n = self.points_per_axis.div_ceil(2) - 1;
        GridSpec::new(self.dim, self.half_width, n)
    }

    /// Same box with half the spacing.
    pub fn refined(&self) -> Self {
        GridSpec {
            points_per_axis: 2 * self.points_per_axis + 1,
            ..*self
        }
    }
}

/// Symmetric sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(j, _)| j == i).map_or(0.0, |e| e.1))
            .collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let back = self.row(j).find(|&(c, _)| c == i).map_or(0.0, |e| e.1);
                worst = worst.max((v - back).abs());
            }
        }
        worst
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut d = 0.0;
            let mut off = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    d += v;
                } else {
                    off += v.abs();
                }
            }
            lo = lo.min(d - off);
            hi = hi.max(d + off);
        }
        (lo, hi)
    }

    /// Adds `shift[i]` to the diagonal.
    pub fn add_diagonal(&mut self, shift: &[f64]) {
        for (i, s) in shift.iter().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    self.vals[k] += s;
                }
            }
        }
    }

    /// Tridiagonal view `(diag, offdiag)` when the bandwidth is one.
    pub fn as_tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut off = vec![0.0; self.n.saturating_sub(1)];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j == i + 1 {
                    off[j - 1] = v;
                } else if j != i && j + 1 != i {
                    return None;
                }
            }
        }
        Some((self.diagonal(), off))
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    pub grid: GridSpec,
    pub hbar: f64,
    pub matrix: SparseSymmetric,
    pub potential: Potential,
    pub potential_label: String,
    pub lambda_trust: Option<f64>,
    /// Smallest potential value on the grid.
    pub min_potential: f64,
}

/// Assembles `hbar^2 Delta_h + V` on `grid`.
pub fn build(v: &Potential, grid: GridSpec, hbar: f64) -> Result<DiscreteHamiltonian> {
    let grid = GridSpec::new(grid.dim, grid.half_width, grid.points_per_axis)?;
    if v.dim != grid.dim {
        return Err(Error::InvalidParameters(format!(
            "potential dimension {} does not match grid dimension {}",
            v.dim, grid.dim
        )));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "hbar must be positive ({hbar})"
        )));
    }
    let n = grid.points_per_axis;
    let h = grid.spacing();
    let kinetic = hbar * hbar / (h * h);
    let total = grid.len();
    let mut row_ptr = Vec::with_capacity(total + 1);
    let mut cols = Vec::with_capacity(total * (2 * grid.dim + 1));
    let mut vals = Vec::with_capacity(total * (2 * grid.dim + 1));
    let mut min_potential = f64::INFINITY;
    row_ptr.push(0);
    for idx in 0..total {
        let (i, j) = (idx % n, idx / n);
        let x = if grid.dim == 1 {
            vec![grid.coord(i)]
        } else {
            vec![grid.coord(i), grid.coord(j)]
        };
        let vx = v.eval(&x);
        min_potential = min_potential.min(vx);
        let diag = 2.0 * grid.dim as f64 * kinetic + vx;
        // columns in increasing order
        if grid.dim == 2 && j > 0 {
            cols.push(idx - n);
            vals.push(-kinetic);
        }
        if i > 0 {
            cols.push(idx - 1);
            vals.push(-kinetic);
        }
        cols.push(idx);
        vals.push(diag);
        if i + 1 < n {
            cols.push(idx + 1);
            vals.push(-kinetic);
        }
        if grid.dim == 2 && j + 1 < n {
            cols.push(idx + n);
            vals.push(-kinetic);
        }
        row_ptr.push(cols.len());
    }
    Ok(DiscreteHamiltonian {
        grid,
        hbar,
        matrix: SparseSymmetric {
            n: total,
            row_ptr,
            cols,
            vals,
        },
        potential: v.clone(),
        potential_label: v.label.clone(),
        lambda_trust: None,
        min_potential,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdequacyReport {
    pub lam_target: f64,
    /// Smallest `V` on the boundary of the box.
    pub boundary_potential: f64,
    /// `min V|boundary - 3 lam_target`.
    pub boundary_margin: f64,
    /// `h^2 lam_target`.
    pub resolution: f64,
    /// `0.05 - h^2 lam_target`.
    pub resolution_margin: f64,
    pub pass: bool,
    /// Smallest half width whose boundary would clear `3 lam_target`.
    pub suggested_half_width: Option<f64>,
}

/// Truncation and resolution heuristics for eigenvalues up to `lam_target`.
pub fn adequacy_check(h: &DiscreteHamiltonian, lam_target: f64) -> AdequacyReport {
    let g = h.grid;
    let l = g.half_width;
    let boundary_potential = if g.dim == 1 {
        h.potential.eval(&[-l]).min(h.potential.eval(&[l]))
    } else {
        let mut m = f64::INFINITY;
        for i in 0..g.points_per_axis {
            let c = g.coord(i);
            for p in [[c, -l], [c, l], [-l, c], [l, c]] {
                m = m.min(h.potential.eval(&p));
            }
        }
        m
    };
    let boundary_margin = boundary_potential - 3.0 * lam_target;
    let resolution = g.spacing().powi(2) * lam_target;
    let resolution_margin = 0.05 - resolution;
    let pass = lam_target <= 0.0 || (boundary_margin >= 0.0 && resolution_margin >= 0.0);
    let suggested_half_width = if boundary_margin < 0.0 {
        h.potential.radius_for(3.0 * lam_target).ok()
    } else {
        None
    };
    AdequacyReport {
        lam_target,
        boundary_potential,
        boundary_margin,
        resolution,
        resolution_margin,
        pass,
        suggested_half_width,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_power, Potential};

    fn zero(dim: usize) -> Potential {
        Potential::custom(dim, |_| 0.0, |r| r, 0.0, "zero")
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(
            GridSpec::new(1, 1.0, 15),
            Err(Error::GridTooCoarse { points: 15 })
        ));
        assert!(matches!(
            GridSpec::new(3, 1.0, 20),
            Err(Error::UnsupportedDimension(3))
        ));
        let g = GridSpec::new(1, 12.0, 2000).unwrap();
        assert!((g.spacing() - 24.0 / 2001.0).abs() < 1e-15);
        assert!((g.coord(0) + 12.0 - g.spacing()).abs() < 1e-12);
        assert_eq!(g.coarsened().unwrap().points_per_axis, 999);
        assert_eq!(g.refined().points_per_axis, 4001);
    }

    #[test]
    fn stencil_is_exactly_symmetric() {
        let v = make_power(2, 2.0).unwrap();
        let h = build(&v, GridSpec::new(2, 3.0, 20).unwrap(), 0.7).unwrap();
        assert_eq!(h.matrix.asymmetry(), 0.0);
        assert_eq!(h.matrix.dim(), 400);
        // interior rows carry 5 entries, corners 3
        assert_eq!(h.matrix.nnz(), 5 * 400 - 4 * 20);
        let dense = h.matrix.to_dense();
        assert_eq!(dense.clone(), dense.transpose());
        let diag = h.matrix.diagonal();
        assert!(diag.iter().all(|&d| d >= h.min_potential));
    }

    #[test]
    fn one_dimensional_rows() {
        let h = build(&zero(1), GridSpec::new(1, 1.0, 16).unwrap(), 1.0).unwrap();
        let (d, e) = h.matrix.as_tridiagonal().unwrap();
        let k = 1.0 / h.grid.spacing().powi(2);
        assert!(d.iter().all(|&x| (x - 2.0 * k).abs() < 1e-12));
        assert!(e.iter().all(|&x| (x + k).abs() < 1e-12));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let v = make_power(2, 2.0).unwrap();
        assert!(build(&v, GridSpec::new(1, 3.0, 20).unwrap(), 1.0).is_err());
    }

    #[test]
    fn adequacy_examples() {
        let v = make_power(1, 2.0).unwrap();
        let h12 = build(&v, GridSpec::new(1, 12.0, 2000).unwrap(), 1.0).unwrap();
        let r = adequacy_check(&h12, 60.0);
        assert!(!r.pass);
        assert!((r.boundary_potential - 144.0).abs() < 1e-9);
        assert!((r.suggested_half_width.unwrap() - 180f64.sqrt()).abs() < 1e-6);
        let h15 = build(&v, GridSpec::new(1, 15.0, 3000).unwrap(), 1.0).unwrap();
        let r = adequacy_check(&h15, 60.0);
        assert!(r.pass, "{r:?}");
        assert!(r.boundary_margin >= 45.0 - 1e-9);
        assert!(adequacy_check(&h12, 0.0).pass);
    }
}
