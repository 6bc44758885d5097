//! Validated low spectra: counting functions, heat traces with a certified
//! tail, and conversion to Stieltjes measures.

use std::io::{BufRead, Write};

use statrs::function::gamma::{gamma, gamma_ur};

use crate::discretization::{build, DiscreteHamiltonian, GridSpec};
use crate::eigen;
use crate::error::{Error, Result};
use crate::measures::StieltjesMeasure;
use crate::potentials::{unit_ball_volume, Potential};

/// Relative fine/coarse disagreement below which an eigenvalue is trusted.
pub const TRUST_THRESHOLD: f64 = 1e-2;
/// A heat trace is certified when its tail bound is below this fraction of the sum.
pub const TAIL_FRACTION: f64 = 1e-3;

/// Power-law model `N(lam) ~ c lam^gamma` for eigenvalues beyond the computed window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    pub coefficient: f64,
    pub exponent: f64,
}

impl TailModel {
    pub fn power(coefficient: f64, exponent: f64) -> Self {
        TailModel {
            coefficient,
            exponent,
        }
    }

    /// Weyl prediction `(2 pi hbar)^{-n} omega_n int (lam - V)_+^{n/2}`
    /// fitted as a power law on `[lam, 2 lam]`.
    pub fn from_weyl(v: &Potential, hbar: f64, lam: f64) -> Result<Self> {
        let n = v.dim as i32;
        let scale = unit_ball_volume(v.dim) / (2.0 * std::f64::consts::PI * hbar).powi(n);
        let w1 = scale * v.weyl_integral(lam)?;
        let w2 = scale * v.weyl_integral(2.0 * lam)?;
        if !(w1 > 0.0 && w2 > w1) {
            return Err(Error::InvalidParameters(format!(
                "Weyl tail proxy is flat near {lam} ({w1}, {w2})"
            )));
        }
        let exponent = (w2 / w1).log2();
        Ok(TailModel {
            coefficient: w1 / lam.powf(exponent),
            exponent,
        })
    }

    /// `int_lam^inf e^{-t r} dN(r) = c Gamma(gamma + 1) t^{-gamma} Q(gamma, t lam)`.
    pub fn tail_bound(&self, t: f64, lam: f64) -> f64 {
        let g = self.exponent;
        self.coefficient * gamma(g + 1.0) * t.powf(-g) * gamma_ur(g, t * lam)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending; entries above `lambda_trust` are kept but untrusted.
    pub eigenvalues: Vec<f64>,
    pub hbar: f64,
    pub lambda_trust: f64,
    /// `(grid, companion grid)` used for the two-grid comparison.
    pub grid_provenance: Option<(GridSpec, GridSpec)>,
    pub tail_model: Option<TailModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatTrace {
    pub value: f64,
    pub tail_bound: f64,
    pub certified: bool,
}

/// The `k` lowest eigenvalues of `h`, trusted where a grid with twice the
/// spacing agrees to `TRUST_THRESHOLD`.
pub fn eigen_lowest(h: &DiscreteHamiltonian, k: usize) -> Result<Spectrum> {
    let dim = h.matrix.dim();
    if k == 0 || k > dim / 4 {
        return Err(Error::InvalidParameters(format!(
            "k = {k} must lie in [1, dimension / 4] = [1, {}]",
            dim / 4
        )));
    }
    let coarse_grid = h.grid.coarsened().map_err(|_| Error::TrustWindowEmpty)?;
    let coarse = build(&h.potential, coarse_grid, h.hbar)?;
    let k_coarse = k.min(coarse.matrix.dim());
    let (fine, coarse) = rayon::join(
        || eigen::lowest(&h.matrix, k),
        || eigen::lowest(&coarse.matrix, k_coarse),
    );
    let (fine, coarse) = (fine?, coarse?);
    let trusted = fine
        .values
        .iter()
        .zip(&coarse.values)
        .take_while(|(f, c)| (*f - *c).abs() < TRUST_THRESHOLD * f.abs().max(f64::MIN_POSITIVE))
        .count();
    if trusted == 0 {
        return Err(Error::TrustWindowEmpty);
    }
    let lambda_trust = fine.values[trusted - 1];
    let tail_model = TailModel::from_weyl(&h.potential, h.hbar, lambda_trust).ok();
    Ok(Spectrum {
        eigenvalues: fine.values,
        hbar: h.hbar,
        lambda_trust: h
            .lambda_trust
            .map_or(lambda_trust, |cap| cap.min(lambda_trust)),
        grid_provenance: Some((h.grid, coarse_grid)),
        tail_model,
    })
}

impl DiscreteHamiltonian {
    /// Runs `eigen_lowest` and records the trust bound on the operator.
    pub fn solve(&mut self, k: usize) -> Result<Spectrum> {
        let s = eigen_lowest(self, k)?;
        self.lambda_trust = Some(s.lambda_trust);
        Ok(s)
    }
}

impl Spectrum {
    /// Spectrum known in closed form; every value is trusted.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, hbar: f64) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameters(
                "spectrum needs finite eigenvalues".into(),
            ));
        }
        eigenvalues.sort_by(f64::total_cmp);
        let lambda_trust = *eigenvalues.last().unwrap();
        Ok(Spectrum {
            eigenvalues,
            hbar,
            lambda_trust,
            grid_provenance: None,
            tail_model: None,
        })
    }

    /// Spectrum `hbar (2k + 1)` of `hbar^2 Delta + x^2` in 1D, up to `lam_max`.
    pub fn harmonic_1d(hbar: f64, lam_max: f64) -> Result<Self> {
        let count = ((lam_max / hbar - 1.0) / 2.0).floor().max(0.0) as usize + 1;
        let s = Self::from_eigenvalues(
            (0..count).map(|k| hbar * (2 * k + 1) as f64).collect(),
            hbar,
        )?;
        Ok(s.with_tail_model(TailModel::power(0.5 / hbar, 1.0)))
    }

    pub fn with_tail_model(mut self, model: TailModel) -> Self {
        self.tail_model = Some(model);
        self
    }

    pub fn trusted(&self) -> &[f64] {
        let n = self
            .eigenvalues
            .partition_point(|&x| x <= self.lambda_trust);
        &self.eigenvalues[..n]
    }

    /// `#{lam_k < lam}`.
    pub fn counting(&self, lam: f64) -> Result<usize> {
        if lam > self.lambda_trust {
            return Err(Error::UntrustedRange {
                lam,
                trust: self.lambda_trust,
            });
        }
        Ok(self.eigenvalues.partition_point(|&x| x < lam))
    }

    /// `#{lam_k in (a, b)}`.
    pub fn counting_interval(&self, a: f64, b: f64) -> Result<usize> {
        if !(a < b) {
            return Err(Error::InvalidParameters(format!(
                "empty interval ({a}, {b})"
            )));
        }
        let below_b = self.counting(b)?;
        let up_to_a = self.eigenvalues.partition_point(|&x| x <= a);
        Ok(below_b.saturating_sub(up_to_a))
    }

    /// `(sum_{lam_k <= lambda_trust} e^{-t lam_k}, tail certified)`.
    pub fn heat_trace(&self, t: f64) -> Result<(f64, bool)> {
        let h = self.heat_trace_detail(t)?;
        Ok((h.value, h.certified))
    }

    pub fn heat_trace_detail(&self, t: f64) -> Result<HeatTrace> {
        let value = self.spectrum_measure()?.laplace(t)?;
        let tail_bound = match self.tail_model {
            Some(m) => m.tail_bound(t, self.lambda_trust),
            None => f64::INFINITY,
        };
        Ok(HeatTrace {
            value,
            tail_bound,
            certified: tail_bound < TAIL_FRACTION * value,
        })
    }

    /// Unit atoms at the trusted eigenvalues (merged by multiplicity).
    pub fn spectrum_measure(&self) -> Result<StieltjesMeasure> {
        StieltjesMeasure::from_points(
            self.trusted().iter().map(|&x| (x, 1.0)),
            format!("spectrum (hbar={})", self.hbar),
        )
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "index,eigenvalue,trusted")?;
        for (i, x) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{i},{x:e},{}", u8::from(*x <= self.lambda_trust))?;
        }
        Ok(())
    }

    /// Reads the CSV format of `write_csv`; the trust bound is the largest
    /// trusted eigenvalue.
    pub fn read_csv(r: impl BufRead, hbar: f64) -> Result<Self> {
        let mut values = Vec::new();
        let mut trust = f64::NEG_INFINITY;
        for (no, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("index") || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                line: no + 1,
                message: m.to_string(),
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(bad("expected index,eigenvalue,trusted"));
            }
            let x: f64 = fields[1]
                .parse()
                .map_err(|_| bad("eigenvalue is not a number"))?;
            match fields[2] {
                "1" => trust = trust.max(x),
                "0" => {}
                _ => return Err(bad("trusted must be 0 or 1")),
            }
            values.push(x);
        }
        let mut s = Self::from_eigenvalues(values, hbar)?;
        if trust == f64::NEG_INFINITY {
            return Err(Error::TrustWindowEmpty);
        }
        s.lambda_trust = trust;
        Ok(s)
    }
}
