//! Confining potentials `V: R^n -> [0, inf)` and the quantities built from
//! their sublevel sets `Omega_lambda = {V <= lambda}`: the volume function
//! `sigma`, Weyl and heat integrals, Liouville volumes of energy shells,
//! and Monte-Carlo probes of the oscillation of `V` on small spheres.
//!
//! Integrals in dimension one and two use adaptive Gauss-Kronrod on a box
//! sized by the growth envelope; higher dimensions, and potentials with a
//! custom sampling cover, fall back to seeded Monte-Carlo.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grids;
use crate::mc::{MonteCarloConfig, WeightedAccumulator};
use crate::measures::{FractionalIndex, StieltjesMeasure};
use crate::quadrature::{self, QuadOptions};

pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Cover = Arc<dyn Fn(f64) -> Vec<Region> + Send + Sync>;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0 + 1.0)
}

/// Surface area of the sphere of radius `r` in `R^n` (`n = 1`: two points).
pub fn sphere_area(n: usize, r: f64) -> f64 {
    n as f64 * unit_ball_volume(n) * r.powi(n as i32 - 1)
}

/// Acceptance rates below this make a sublevel estimate meaningless.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// `e^{-tV} < 1e-12` outside the exp-integral truncation box.
const EXP_CUTOFF: f64 = 27.631_021_115_928_547;

/// Sampling region used to cover a sublevel set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Cube `[-half_width, half_width]^n`.
    Cube { half_width: f64 },
    /// `{(x', s) : 1 < s < s_max, |x'| < s^{-theta}}` with `x' in R^{n-1}`.
    Horn { theta: f64, s_max: f64 },
}

impl Region {
    pub fn volume(&self, dim: usize) -> f64 {
        match *self {
            Region::Cube { half_width } => (2.0 * half_width).powi(dim as i32),
            Region::Horn { theta, s_max } => {
                let g = 1.0 - theta * (dim - 1) as f64;
                unit_ball_volume(dim - 1) * (s_max.powf(g) - 1.0) / g
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match *self {
            Region::Cube { half_width } => x.iter().all(|c| c.abs() <= half_width),
            Region::Horn { theta, s_max } => {
                let n = x.len();
                let s = x[n - 1];
                s > 1.0 && s < s_max && norm(&x[..n - 1]) < s.powf(-theta)
            }
        }
    }

    pub fn sample(&self, rng: &mut impl Rng, x: &mut [f64]) {
        match *self {
            Region::Cube { half_width } => {
                for c in x.iter_mut() {
                    *c = rng.random_range(-half_width..=half_width);
                }
            }
            Region::Horn { theta, s_max } => {
                let n = x.len();
                let g = 1.0 - theta * (n - 1) as f64;
                // inverse CDF of the density s^{-theta (n-1)} on (1, s_max)
                let u: f64 = rng.random();
                let s = (1.0 + u * (s_max.powf(g) - 1.0)).powf(1.0 / g);
                let radius = s.powf(-theta);
                sample_ball(rng, radius, &mut x[..n - 1]);
                x[n - 1] = s;
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Uniform point on the unit sphere of `R^n` (a random sign when `n = 1`).
fn sample_direction(rng: &mut impl Rng, u: &mut [f64]) {
    if u.len() == 1 {
        u[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        for c in u.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let r = norm(u);
        if r > 1e-12 {
            u.iter_mut().for_each(|c| *c /= r);
            return;
        }
    }
}

fn sample_ball(rng: &mut impl Rng, radius: f64, x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    sample_direction(rng, x);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / x.len() as f64);
    x.iter_mut().for_each(|c| *c *= r);
}

/// Value with a Monte-Carlo standard error (zero for deterministic paths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
        }
    }
}

/// One cell of an oscillation scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationSample {
    pub lam: f64,
    pub r: f64,
    pub beta: f64,
    pub q_value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Parameters of a named built-in potential.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Power {
        kappa: f64,
    },
    Rozenbljum {
        theta: f64,
        kappa1: f64,
        kappa2: f64,
    },
    Exponential,
    Custom,
}

#[derive(Clone)]
pub struct Potential {
    pub dim: usize,
    pub label: String,
    pub kind: PotentialKind,
    evaluator: Field,
    growth_envelope: Envelope,
    analytic_sigma: Option<Envelope>,
    cover: Option<Cover>,
    inf: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("kind", &self.kind)
            .finish()
    }
}

/// `V(x) = |x|^kappa`, with `sigma(lambda) = omega_n lambda^{n/kappa}`.
pub fn make_power(dim: usize, kappa: f64) -> Result<Potential> {
    if !(kappa > 0.0) || dim == 0 {
        return Err(Error::InvalidParameters(format!(
            "power potential needs dim >= 1 and kappa > 0 (got {dim}, {kappa})"
        )));
    }
    let omega = unit_ball_volume(dim);
    let exponent = dim as f64 / kappa;
    Ok(Potential {
        dim,
        label: format!("|x|^{kappa} (n={dim})"),
        kind: PotentialKind::Power { kappa },
        evaluator: Arc::new(move |x| norm(x).powf(kappa)),
        growth_envelope: Arc::new(move |rho| rho.max(0.0).powf(kappa)),
        analytic_sigma: Some(Arc::new(move |lam| omega * lam.max(0.0).powf(exponent))),
        cover: None,
        inf: 0.0,
    })
}

/// Two-regime potential: `|x|^kappa2` inside the thin horn
/// `U = {(x', s) : s > 1, |x'| < s^{-theta}}` and `|x|^kappa1` elsewhere.
pub fn make_rozenbljum(theta: f64, kappa1: f64, kappa2: f64, dim: usize) -> Result<Potential> {
    if dim < 2 {
        return Err(Error::InvalidParameters(format!(
            "needs n >= 2 (got {dim})"
        )));
    }
    if !(kappa1 > 0.0 && kappa2 > 0.0) {
        return Err(Error::InvalidParameters(
            "kappa1, kappa2 must be positive".into(),
        ));
    }
    let m = (dim - 1) as f64;
    if !(1.0 / m > theta) {
        return Err(Error::InvalidParameters(format!(
            "1/(n-1) > theta fails: 1/{m} <= {theta}"
        )));
    }
    if !(theta > kappa1 / 2.0) {
        return Err(Error::InvalidParameters(format!(
            "theta > kappa1/2 fails: {theta} <= {}",
            kappa1 / 2.0
        )));
    }
    if !((1.0 - theta * m) / kappa2 > dim as f64 / kappa1) {
        return Err(Error::InvalidParameters(format!(
            "(1 - theta(n-1))/kappa2 > n/kappa1 fails: {} <= {}",
            (1.0 - theta * m) / kappa2,
            dim as f64 / kappa1
        )));
    }
    if !(kappa1 < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "kappa1 < 1 fails: {kappa1}"
        )));
    }
    let evaluator: Field = Arc::new(move |x: &[f64]| {
        let n = x.len();
        let s = x[n - 1];
        let inside = s > 1.0 && norm(&x[..n - 1]) < s.powf(-theta);
        norm(x).powf(if inside { kappa2 } else { kappa1 })
    });
    Ok(Potential {
        dim,
        label: format!("rozenbljum(theta={theta}, k1={kappa1}, k2={kappa2}, n={dim})"),
        kind: PotentialKind::Rozenbljum {
            theta,
            kappa1,
            kappa2,
        },
        evaluator,
        growth_envelope: Arc::new(move |rho| {
            let rho = rho.max(0.0);
            rho.powf(kappa1).min(rho.powf(kappa2))
        }),
        analytic_sigma: None,
        cover: Some(Arc::new(move |lam: f64| {
            let lam = lam.max(1.0);
            vec![
                Region::Cube {
                    half_width: lam.powf(1.0 / kappa1),
                },
                Region::Horn {
                    theta,
                    s_max: lam.powf(1.0 / kappa2),
                },
            ]
        })),
        inf: 0.0,
    })
}

/// `V(x) = e^{|x|}`, built from its evaluator only (sigma is sampled).
pub fn make_exponential(dim: usize) -> Potential {
    Potential::custom(
        dim,
        |x| norm(x).exp(),
        |rho| rho.max(0.0).exp(),
        1.0,
        format!("e^|x| (n={dim})"),
    )
    .with_kind(PotentialKind::Exponential)
}

impl Potential {
    /// Potential from an evaluator, a growth envelope (lower bound of `V` on
    /// `|x| >= rho`), and `inf V`.
    pub fn custom(
        dim: usize,
        evaluator: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        growth_envelope: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inf: f64,
        label: impl Into<String>,
    ) -> Self {
        Potential {
            dim,
            label: label.into(),
            kind: PotentialKind::Custom,
            evaluator: Arc::new(evaluator),
            growth_envelope: Arc::new(growth_envelope),
            analytic_sigma: None,
            cover: None,
            inf,
        }
    }

    fn with_kind(mut self, kind: PotentialKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_analytic_sigma(
        mut self,
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.analytic_sigma = Some(Arc::new(sigma));
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    pub fn infimum(&self) -> f64 {
        self.inf
    }

    pub fn envelope(&self, rho: f64) -> f64 {
        (self.growth_envelope)(rho)
    }

    pub fn has_analytic_sigma(&self) -> bool {
        self.analytic_sigma.is_some()
    }

    /// Smallest `rho` with `envelope(rho) >= level` (bisection after doubling).
    pub fn radius_for(&self, level: f64) -> Result<f64> {
        if self.envelope(0.0) >= level {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while self.envelope(hi) < level {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::InvalidParameters(format!(
                    "growth envelope of {} never reaches {level}",
                    self.label
                )));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.envelope(mid) >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Regions whose union contains `Omega_lambda`.
    pub fn cover(&self, lam: f64) -> Result<Vec<Region>> {
        match &self.cover {
            Some(c) => Ok(c(lam)),
            None => Ok(vec![Region::Cube {
                half_width: 2.0 * self.radius_for(lam)?.max(1e-12),
            }]),
        }
    }

    fn uses_quadrature(&self) -> bool {
        self.dim <= 2 && self.cover.is_none()
    }

    /// Draws `mc.samples` points from the cover of `Omega_lambda` and feeds
    /// `(overlap weight, x)` for every point to `visit`. Returns the total
    /// cover volume.
    fn sample_cover(
        &self,
        lam: f64,
        mc: &MonteCarloConfig,
        mut visit: impl FnMut(&mut rand_chacha::ChaCha8Rng, f64, &[f64]),
    ) -> Result<f64> {
        let regions = self.cover(lam)?;
        let vols: Vec<f64> = regions.iter().map(|r| r.volume(self.dim)).collect();
        let total: f64 = vols.iter().sum();
        let mut rng = mc.rng();
        let mut x = vec![0.0; self.dim];
        for _ in 0..mc.samples {
            let mut u = rng.random::<f64>() * total;
            let mut pick = regions.len() - 1;
            for (i, v) in vols.iter().enumerate() {
                if u < *v {
                    pick = i;
                    break;
                }
                u -= v;
            }
            regions[pick].sample(&mut rng, &mut x);
            let overlap = regions.iter().filter(|r| r.contains(&x)).count().max(1);
            visit(&mut rng, 1.0 / overlap as f64, &x);
        }
        Ok(total)
    }

    /// Volume of `{V <= lam}`.
    pub fn sigma(&self, lam: f64, mc: &MonteCarloConfig) -> Result<Estimate> {
        if let Some(s) = &self.analytic_sigma {
            return Ok(Estimate::exact(s(lam)));
        }
        if lam <= self.inf {
            return Ok(Estimate::exact(0.0));
        }
        let mut acc = WeightedAccumulator::default();
        let mut hits = 0usize;
        let total = self.sample_cover(lam, mc, |_, w, x| {
            let inside = self.eval(x) <= lam;
            hits += inside as usize;
            acc.push(if inside { w } else { 0.0 }, 0.0);
        })?;
        let rate = hits as f64 / mc.samples.max(1) as f64;
        if rate < MIN_ACCEPTANCE {
            return Err(Error::DegenerateAcceptance { rate });
        }
        let (m, se) = acc.mean_weight();
        Ok(Estimate {
            value: total * m,
            std_error: total * se,
        })
    }

    /// `sigma` tabulated on `lam_grid` as a sampled CDF; Monte-Carlo noise is
    /// clipped to a nondecreasing sequence.
    pub fn sigma_measure(
        &self,
        lam_grid: &[f64],
        mc: &MonteCarloConfig,
    ) -> Result<StieltjesMeasure> {
        let values = lam_grid
            .par_iter()
            .enumerate()
            .map(|(i, &lam)| self.sigma(lam, &mc.cell(i, 0)).map(|e| e.value))
            .collect::<Result<Vec<_>>>()?;
        let mut running = 0.0f64;
        let clipped = values
            .into_iter()
            .map(|v| {
                running = running.max(v);
                running
            })
            .collect();
        StieltjesMeasure::sampled_cdf(lam_grid.to_vec(), clipped, format!("sigma[{}]", self.label))
    }

    fn quad_opts() -> QuadOptions {
        QuadOptions {
            rel_tol: 1e-7,
            abs_tol: 1e-300,
            max_panels: 4000,
            initial_panels: 8,
        }
    }

    /// Integral of `f(V(x))` over a box of half width `radius`.
    fn integrate_of_v(&self, radius: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let opts = Self::quad_opts();
        match self.dim {
            1 => quadrature::integrate(|x| f(self.eval(&[x])), -radius, radius, opts).map(|r| r.0),
            2 => quadrature::integrate_square(|x, y| f(self.eval(&[x, y])), radius, opts)
                .map(|r| r.0),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// Monte-Carlo integral of `f(V(x))` over `Omega_lam`.
    fn mc_of_v(&self, lam: f64, mc: &MonteCarloConfig, f: impl Fn(f64) -> f64) -> Result<Estimate> {
        let mut acc = WeightedAccumulator::default();
        let total = self.sample_cover(lam, mc, |_, w, x| {
            let v = self.eval(x);
            acc.push(if v <= lam { w * f(v) } else { 0.0 }, 0.0);
        })?;
        let (m, se) = acc.mean_weight();
        Ok(Estimate {
            value: total * m,
            std_error: total * se,
        })
    }

    /// `int_{R^n} e^{-tV(x)} dx`.
    pub fn exp_integral(&self, t: f64) -> Result<f64> {
        self.exp_integral_mc(t, &MonteCarloConfig::default())
            .map(|e| e.value)
    }

    pub fn exp_integral_mc(&self, t: f64, mc: &MonteCarloConfig) -> Result<Estimate> {
        if !(t > 0.0) {
            return Err(Error::NonIntegrable { t });
        }
        let level = self.inf + EXP_CUTOFF / t;
        if self.uses_quadrature() {
            let radius = self.radius_for(level)?;
            return self
                .integrate_of_v(radius, |v| (-t * v).exp())
                .map(Estimate::exact);
        }
        self.mc_of_v(level, mc, |v| (-t * v).exp())
    }

    /// `int (lam - V)_+^{n/2} dx`.
    pub fn weyl_integral(&self, lam: f64) -> Result<f64> {
        self.weyl_integral_mc(lam, &MonteCarloConfig::default())
            .map(|e| e.value)
    }

    pub fn weyl_integral_mc(&self, lam: f64, mc: &MonteCarloConfig) -> Result<Estimate> {
        if lam <= self.inf {
            return Ok(Estimate::exact(0.0));
        }
        let p = self.dim as f64 / 2.0;
        if self.uses_quadrature() {
            let radius = self.radius_for(lam)?;
            return self
                .integrate_of_v(radius, |v| (lam - v).max(0.0).powf(p))
                .map(Estimate::exact);
        }
        self.mc_of_v(lam, mc, |v| (lam - v).max(0.0).powf(p))
    }

    /// Liouville volume of `{(x, xi) : |xi|^2 + V(x) in (a, b)}`.
    pub fn phase_space_volume(&self, a: f64, b: f64) -> Result<f64> {
        self.phase_space_volume_mc(a, b, &MonteCarloConfig::default())
            .map(|e| e.value)
    }

    pub fn phase_space_volume_mc(&self, a: f64, b: f64, mc: &MonteCarloConfig) -> Result<Estimate> {
        let a = a.max(0.0);
        if b <= a || b <= self.inf {
            return Ok(Estimate::exact(0.0));
        }
        let p = self.dim as f64 / 2.0;
        let omega = unit_ball_volume(self.dim);
        let shell = move |v: f64| (b - v).max(0.0).powf(p) - (a - v).max(0.0).powf(p);
        let est = if self.uses_quadrature() {
            let radius = self.radius_for(b)?;
            Estimate::exact(self.integrate_of_v(radius, shell)?)
        } else {
            self.mc_of_v(b, mc, shell)?
        };
        Ok(Estimate {
            value: omega * est.value,
            std_error: omega * est.std_error,
        })
    }

    /// Normalized sphere-oscillation functional
    /// `int_{Omega} int_{S_r(x)} |V(x) - V(y)| / (r^{n+2beta-1} lam^{1+beta} sigma(lam))`.
    pub fn oscillation_functional(
        &self,
        lam: f64,
        r: f64,
        beta: f64,
        mc: &MonteCarloConfig,
    ) -> Result<OscillationSample> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "probe radius must be positive ({r})"
            )));
        }
        if !(0.0..=0.5).contains(&beta) {
            return Err(Error::InvalidParameters(format!(
                "beta must lie in [0, 1/2] ({beta})"
            )));
        }
        let n = self.dim;
        let mut acc = WeightedAccumulator::default();
        let mut hits = 0usize;
        let mut u = vec![0.0; n];
        let mut y = vec![0.0; n];
        self.sample_cover(lam, mc, |rng, w, x| {
            let vx = self.eval(x);
            if vx > lam {
                acc.push(0.0, 0.0);
                return;
            }
            hits += 1;
            sample_direction(rng, &mut u);
            for k in 0..n {
                y[k] = x[k] + r * u[k];
            }
            acc.push(w, (vx - self.eval(&y)).abs());
        })?;
        let rate = hits as f64 / mc.samples.max(1) as f64;
        if rate < MIN_ACCEPTANCE {
            return Err(Error::DegenerateAcceptance { rate });
        }
        // sigma cancels: q = |S_r| mean_Omega |dV| / (r^{n+2beta-1} lam^{1+beta})
        let (mean, se) = acc.ratio();
        let scale =
            sphere_area(n, r) / (r.powf(n as f64 + 2.0 * beta - 1.0) * lam.powf(1.0 + beta));
        Ok(OscillationSample {
            lam,
            r,
            beta,
            q_value: scale * mean,
            std_error: scale * se,
            n_samples: mc.samples,
        })
    }

    /// Oscillation functional over a `(lambda, r)` grid, one seed per cell.
    pub fn oscillation_scan(
        &self,
        cells: &[(f64, f64)],
        beta: f64,
        mc: &MonteCarloConfig,
    ) -> Result<Vec<OscillationSample>> {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, &(lam, r))| self.oscillation_functional(lam, r, beta, &mc.cell(i, 1)))
            .collect()
    }

    /// `sup sigma(2 lam) / sigma(lam)` over `[lam0, lam_max / 2]`.
    pub fn doubling_check(&self, lam0: f64, lam_max: f64, mc: &MonteCarloConfig) -> Result<f64> {
        const PPD: usize = 16;
        let grid = grids::geometric(lam0, lam_max, PPD);
        self.sigma_measure(&grid, mc)?
            .doubling_estimate(lam0, lam_max, PPD)
    }

    /// Smallest admissible Hoelder-type modulus at each level: the largest
    /// `|V(x) - V(y)| / (d^{2beta} max(V(x), 1)^{1+beta})` seen for `x` in
    /// the band `lam/2 <= V <= lam` and `|x - y| = d < 1`.
    pub fn holder_envelope(
        &self,
        beta: f64,
        lam_grid: &[f64],
        mc: &MonteCarloConfig,
    ) -> Result<Vec<(f64, f64)>> {
        if !(0.0..=0.5).contains(&beta) {
            return Err(Error::InvalidParameters(format!(
                "beta must lie in [0, 1/2] ({beta})"
            )));
        }
        lam_grid
            .par_iter()
            .enumerate()
            .map(|(i, &lam)| {
                let n = self.dim;
                let mut best = 0.0f64;
                let mut hits = 0usize;
                let mut u = vec![0.0; n];
                let mut y = vec![0.0; n];
                self.sample_cover(lam, &mc.cell(i, 2), |rng, _, x| {
                    let vx = self.eval(x);
                    if !(vx >= lam / 2.0 && vx <= lam) {
                        return;
                    }
                    hits += 1;
                    sample_direction(rng, &mut u);
                    let d: f64 = rng.random_range(1e-9..1.0);
                    for k in 0..n {
                        y[k] = x[k] + d * u[k];
                    }
                    let ratio = (vx - self.eval(&y)).abs()
                        / (d.powf(2.0 * beta) * vx.max(1.0).powf(1.0 + beta));
                    best = best.max(ratio);
                })?;
                let rate = hits as f64 / mc.samples.max(1) as f64;
                if rate < MIN_ACCEPTANCE {
                    return Err(Error::DegenerateAcceptance { rate });
                }
                Ok((lam, best))
            })
            .collect()
    }

    /// Default probe radius `min(1, lam^{-1/2} mu(lam))` with `mu = lam^{1/6}`.
    pub fn default_probe_radius(lam: f64) -> f64 {
        (lam.powf(-0.5) * lam.powf(1.0 / 6.0)).min(1.0)
    }

    /// `int_0^lam (lam - r)^{n/2} d sigma(r)` from a sampled sigma.
    pub fn weyl_integral_from_sigma(&self, sigma: &StieltjesMeasure, lam: f64) -> Result<f64> {
        let alpha = FractionalIndex::weyl(self.dim);
        Ok(gamma(alpha.value() + 1.0) * sigma.fractional_avg(alpha, lam)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mc(samples: usize) -> MonteCarloConfig {
        MonteCarloConfig::new(samples, 42)
    }

    #[test]
    fn power_sigma_closed_forms() {
        let m = MonteCarloConfig::default();
        assert_relative_eq!(
            make_power(1, 2.0).unwrap().sigma(4.0, &m).unwrap().value,
            4.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            make_power(2, 2.0).unwrap().sigma(3.0, &m).unwrap().value,
            3.0 * PI,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            make_power(1, 1.0).unwrap().sigma(9.0, &m).unwrap().value,
            18.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn monte_carlo_disk_area() {
        let v = Potential::custom(2, |x| x[0] * x[0] + x[1] * x[1], |r| r * r, 0.0, "disk");
        let est = v.sigma(1.0, &mc(1_000_000)).unwrap();
        assert!((est.value - PI).abs() < 3.0 * est.std_error, "{est:?}");
        assert!(est.std_error > 0.0 && est.std_error < 0.01);
    }

    #[test]
    fn rozenbljum_parameter_checks() {
        assert!(make_rozenbljum(0.3, 0.5, 0.1, 2).is_ok());
        match make_rozenbljum(0.1, 0.5, 0.1, 2) {
            Err(Error::InvalidParameters(msg)) => assert!(msg.contains("kappa1/2"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(make_rozenbljum(0.3, 0.5, 0.3, 2).is_err());
        assert!(make_rozenbljum(0.45, 1.2, 0.01, 2).is_err());
        assert!(make_rozenbljum(1.2, 0.5, 0.1, 2).is_err());
        let v = make_rozenbljum(0.3, 0.5, 0.1, 2).unwrap();
        assert_relative_eq!(v.eval(&[0.0, 2.0]), 2f64.powf(0.1));
        assert_relative_eq!(v.eval(&[0.0, -2.0]), 2f64.powf(0.5));
    }

    #[test]
    fn horn_volume_matches_sampling() {
        let h = Region::Horn {
            theta: 0.3,
            s_max: 50.0,
        };
        let exact = 2.0 * (50f64.powf(0.7) - 1.0) / 0.7;
        assert_relative_eq!(h.volume(2), exact, max_relative = 1e-12);
        let mut rng = mc(1).rng();
        let mut x = [0.0; 2];
        for _ in 0..1000 {
            h.sample(&mut rng, &mut x);
            assert!(h.contains(&x) || x[1] >= 50.0 - 1e-9);
        }
    }

    #[test]
    fn exp_integral_gaussians() {
        let v = make_power(1, 2.0).unwrap();
        assert_relative_eq!(v.exp_integral(1.0).unwrap(), PI.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(
            v.exp_integral(4.0).unwrap(),
            (PI / 4.0).sqrt(),
            max_relative = 1e-6
        );
        let v2 = make_power(2, 2.0).unwrap();
        assert_relative_eq!(v2.exp_integral(0.5).unwrap(), 2.0 * PI, max_relative = 1e-6);
    }

    #[test]
    fn weyl_integral_closed_forms() {
        let v = make_power(1, 2.0).unwrap();
        assert_relative_eq!(v.weyl_integral(4.0).unwrap(), 2.0 * PI, max_relative = 1e-6);
        assert_eq!(v.weyl_integral(0.0).unwrap(), 0.0);
        assert_eq!(v.weyl_integral(-1.0).unwrap(), 0.0);
        let lin = make_power(1, 1.0).unwrap();
        assert_relative_eq!(
            lin.weyl_integral(40.0).unwrap(),
            4.0 / 3.0 * 40f64.powf(1.5),
            max_relative = 1e-6
        );
    }

    #[test]
    fn phase_space_volumes() {
        let v = make_power(1, 2.0).unwrap();
        assert_relative_eq!(
            v.phase_space_volume(1.0, 2.0).unwrap(),
            PI,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            v.phase_space_volume(0.0, 3.0).unwrap(),
            3.0 * PI,
            max_relative = 1e-6
        );
        assert_eq!(v.phase_space_volume(2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn oscillation_of_square_in_1d() {
        let v = make_power(1, 2.0).unwrap();
        let s = v
            .oscillation_functional(100.0, 0.1, 0.25, &mc(200_000))
            .unwrap();
        // 2 r^{1-2beta} lam^{-beta-1/2} (plus the r^2 correction)
        let expect = 2.0 * 0.1f64.powf(0.5) * 100f64.powf(-0.75);
        assert!(
            (s.q_value - expect).abs() < 3.0 * s.std_error + 1e-4,
            "{s:?} vs {expect}"
        );
        let c = Potential::custom(2, |_| 3.0, |r| if r > 5.0 { 1e9 } else { 3.0 }, 3.0, "flat");
        let s = c.oscillation_functional(5.0, 0.2, 0.25, &mc(1000)).unwrap();
        assert_eq!(s.q_value, 0.0);
    }

    #[test]
    fn degenerate_acceptance_is_reported() {
        // cover far larger than the sublevel set
        let v = Potential::custom(2, |x| norm(x).powi(2), |r| (r / 1e4).powi(2), 0.0, "loose");
        assert!(matches!(
            v.sigma(1.0, &mc(20_000)),
            Err(Error::DegenerateAcceptance { .. })
        ));
    }

    #[test]
    fn doubling_of_powers_and_exponential() {
        let v = make_power(2, 1.0).unwrap();
        let c = v.doubling_check(2.0, 1000.0, &mc(10)).unwrap();
        assert_relative_eq!(c, 4.0, max_relative = 0.05);
        let e = make_exponential(1);
        let c = e.doubling_check(2.0, 1e4, &mc(20_000)).unwrap();
        assert!(c > 1.0 && c <= 2.0 + 0.05, "{c}");
    }

    #[test]
    fn holder_envelope_trends() {
        let v = make_power(1, 2.0).unwrap();
        let grid = [10.0, 100.0, 1000.0];
        let env = v.holder_envelope(0.5, &grid, &mc(20_000)).unwrap();
        assert!(env[0].1 > env[1].1 && env[1].1 > env[2].1, "{env:?}");
        let flat = Potential::custom(1, |_| 2.0, |r| if r > 3.0 { 1e9 } else { 2.0 }, 2.0, "flat");
        let env = flat.holder_envelope(0.25, &[3.0], &mc(1000)).unwrap();
        assert_eq!(env[0].1, 0.0);
    }

    #[test]
    fn probe_radius_rule() {
        assert_relative_eq!(
            Potential::default_probe_radius(64.0),
            0.25,
            max_relative = 1e-12
        );
        assert_eq!(Potential::default_probe_radius(0.5), 1.0);
    }
}
