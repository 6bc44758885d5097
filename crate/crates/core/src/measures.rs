//! Nonnegative Stieltjes measures on `[0, inf)`.
//!
//! A measure is stored either as a finite list of atoms or as a sampled
//! cumulative distribution with linear interpolation between samples (a
//! piecewise-constant density, plus an atom at the first abscissa carrying
//! the initial cumulative value). Every integral against either form is
//! evaluated in closed form per atom or per cell.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grids;

/// Largest fractional index accepted by the fractional averages.
pub const MAX_ALPHA: f64 = 50.0;

/// Default resolution for materialized fractional averages.
pub const DEFAULT_POINTS_PER_DECADE: usize = 64;

/// Default doubling floor.
pub const DEFAULT_DOUBLING_FLOOR: f64 = 2.0;

/// Relative size of the Laplace tail that may be dropped.
const LAPLACE_TRUNCATION: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// `(position, weight)` pairs, positions strictly increasing.
    Atoms(Vec<(f64, f64)>),
    /// Strictly increasing abscissae with a nondecreasing cumulative mass.
    SampledCdf {
        abscissae: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesMeasure {
    repr: Representation,
    pub label: String,
}

/// Fractional index of a Riemann-Liouville average.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalIndex(f64);

impl FractionalIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= MAX_ALPHA {
            Ok(FractionalIndex(alpha))
        } else {
            Err(Error::GammaRangeError { alpha })
        }
    }

    /// The classical Weyl index `n / 2`.
    pub fn weyl(dim: usize) -> Self {
        FractionalIndex(dim as f64 / 2.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `a^p - b^p` for `a >= b >= 0`, `p > 0`, without cancellation when `a ~ b`.
fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    if b <= 0.0 {
        return a.powf(p);
    }
    if a <= b {
        return 0.0;
    }
    -a.powf(p) * (p * (-(a - b) / a).ln_1p()).exp_m1()
}

/// `(e^{-t a} - e^{-t b}) / t` for `a <= b`.
fn exp_cell(t: f64, a: f64, b: f64) -> f64 {
    -(-t * a).exp() * (-t * (b - a)).exp_m1() / t
}

impl StieltjesMeasure {
    /// Atomic measure from `(position, weight)` pairs; positions must be
    /// nonnegative and strictly increasing, weights positive and finite.
    pub fn atoms(atoms: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self> {
        for (i, &(p, w)) in atoms.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i}: position {p} not in [0, inf)"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i}: weight {w} not positive"
                )));
            }
            if i > 0 && p <= atoms[i - 1].0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i}: positions must be strictly increasing"
                )));
            }
        }
        Ok(StieltjesMeasure {
            repr: Representation::Atoms(atoms),
            label: label.into(),
        })
    }

    /// Atomic measure from unsorted points, merging equal positions.
    pub fn from_points(
        points: impl IntoIterator<Item = (f64, f64)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (p, w) in pts {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += w,
                _ => merged.push((p, w)),
            }
        }
        Self::atoms(merged, label)
    }

    pub fn sampled_cdf(
        abscissae: Vec<f64>,
        cumulative: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if abscissae.is_empty() || abscissae.len() != cumulative.len() {
            return Err(Error::InvalidMeasure(
                "abscissae and cumulative must be nonempty and of equal length".into(),
            ));
        }
        if !(abscissae[0].is_finite() && abscissae[0] >= 0.0) {
            return Err(Error::InvalidMeasure(
                "first abscissa must be nonnegative".into(),
            ));
        }
        if abscissae
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidMeasure(
                "abscissae must be strictly increasing".into(),
            ));
        }
        if cumulative[0] < 0.0 || !cumulative[0].is_finite() {
            return Err(Error::InvalidMeasure(
                "cumulative mass must be nonnegative".into(),
            ));
        }
        if cumulative
            .windows(2)
            .any(|w| !(w[1] >= w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidMeasure(
                "cumulative mass must be nondecreasing".into(),
            ));
        }
        Ok(StieltjesMeasure {
            repr: Representation::SampledCdf {
                abscissae,
                cumulative,
            },
            label: label.into(),
        })
    }

    /// Sampled CDF built by evaluating `f` on `grid`.
    pub fn tabulate(
        grid: &[f64],
        f: impl Fn(f64) -> f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::sampled_cdf(grid.to_vec(), values, label)
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.repr, Representation::Atoms(_))
    }

    /// Same measure with every mass multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64, label: impl Into<String>) -> Self {
        assert!(factor > 0.0 && factor.is_finite());
        let repr = match &self.repr {
            Representation::Atoms(a) => {
                Representation::Atoms(a.iter().map(|&(p, w)| (p, w * factor)).collect())
            }
            Representation::SampledCdf {
                abscissae,
                cumulative,
            } => Representation::SampledCdf {
                abscissae: abscissae.clone(),
                cumulative: cumulative.iter().map(|c| c * factor).collect(),
            },
        };
        StieltjesMeasure {
            repr,
            label: label.into(),
        }
    }

    /// Smallest point carrying mass, if any.
    pub fn support_min(&self) -> Option<f64> {
        match &self.repr {
            Representation::Atoms(a) => a.first().map(|x| x.0),
            Representation::SampledCdf {
                abscissae,
                cumulative,
            } => {
                if cumulative[0] > 0.0 {
                    return Some(abscissae[0]);
                }
                let i = cumulative.iter().position(|&c| c > 0.0)?;
                Some(abscissae[i - 1])
            }
        }
    }

    /// Largest point of the stored support.
    pub fn support_max(&self) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => a.last().map_or(0.0, |x| x.0),
            Representation::SampledCdf { abscissae, .. } => *abscissae.last().unwrap(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => a.iter().map(|x| x.1).sum(),
            Representation::SampledCdf { cumulative, .. } => *cumulative.last().unwrap(),
        }
    }

    /// Mass of `[0, lam]`.
    pub fn cumulative(&self, lam: f64) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => {
                let k = a.partition_point(|x| x.0 <= lam);
                a[..k].iter().map(|x| x.1).sum()
            }
            Representation::SampledCdf {
                abscissae,
                cumulative,
            } => {
                if lam < abscissae[0] {
                    return 0.0;
                }
                let k = abscissae.partition_point(|&x| x <= lam);
                if k >= abscissae.len() {
                    return *cumulative.last().unwrap();
                }
                let (x0, x1) = (abscissae[k - 1], abscissae[k]);
                let (c0, c1) = (cumulative[k - 1], cumulative[k]);
                c0 + (c1 - c0) * (lam - x0) / (x1 - x0)
            }
        }
    }

    /// Laplace-Stieltjes transform `int e^{-tr} dm(r)`.
    pub fn laplace(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::NonIntegrable { t });
        }
        Ok(self.laplace_on(t, 0.0, f64::INFINITY))
    }

    /// `int e^{-tr} dm(r)` over `[lo, hi]`; the atom or cell content at a
    /// point belongs to the closed interval.
    fn laplace_on(&self, t: f64, lo: f64, hi: f64) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => a
                .iter()
                .filter(|x| x.0 >= lo && x.0 <= hi)
                .map(|&(p, w)| w * (-t * p).exp())
                .sum(),
            Representation::SampledCdf {
                abscissae,
                cumulative,
            } => {
                let total = *cumulative.last().unwrap();
                let mut sum = 0.0;
                if abscissae[0] >= lo && abscissae[0] <= hi {
                    sum += cumulative[0] * (-t * abscissae[0]).exp();
                }
                for i in 0..abscissae.len() - 1 {
                    let (a, b) = (abscissae[i].max(lo), abscissae[i + 1].min(hi));
                    if b <= a {
                        if abscissae[i] >= hi {
                            break;
                        }
                        continue;
                    }
                    let dm = cumulative[i + 1] - cumulative[i];
                    if dm > 0.0 {
                        let density = dm / (abscissae[i + 1] - abscissae[i]);
                        sum += density * exp_cell(t, a, b);
                    }
                    let remaining = total - cumulative[i + 1];
                    if remaining * (-t * b).exp() <= LAPLACE_TRUNCATION * sum {
                        break;
                    }
                }
                sum
            }
        }
    }

    /// `nu^alpha(s) = (1/Gamma(alpha+1)) int_0^s (s - r)^alpha dm(r)`.
    pub fn fractional_avg(&self, alpha: FractionalIndex, s: f64) -> Result<f64> {
        let a = FractionalIndex::new(alpha.value())?.value();
        if !(s >= 0.0) {
            return Ok(0.0);
        }
        Ok(self.raw_power_moment(a, s) / gamma(a + 1.0))
    }

    /// `int_0^s (s - r)^p dm(r)` for `p > 0`.
    fn raw_power_moment(&self, p: f64, s: f64) -> f64 {
        match &self.repr {
            Representation::Atoms(atoms) => atoms
                .iter()
                .take_while(|x| x.0 < s)
                .map(|&(r, w)| w * (s - r).powf(p))
                .sum(),
            Representation::SampledCdf {
                abscissae,
                cumulative,
            } => {
                if s <= abscissae[0] {
                    return 0.0;
                }
                let mut sum = cumulative[0] * (s - abscissae[0]).powf(p);
                for i in 0..abscissae.len() - 1 {
                    let a = abscissae[i];
                    if a >= s {
                        break;
                    }
                    let dm = cumulative[i + 1] - cumulative[i];
                    if dm <= 0.0 {
                        continue;
                    }
                    let b = abscissae[i + 1].min(s);
                    let density = dm / (abscissae[i + 1] - a);
                    sum += density * pow_diff(s - a, s - b, p + 1.0) / (p + 1.0);
                }
                sum
            }
        }
    }

    /// Mass that the fractional average `nu^alpha` gives the interval
    /// `(a, b)`, i.e. `(1/Gamma(alpha)) int_a^b int_0^r (r - s)^{alpha-1} dm(s) dr`.
    pub fn fractional_interval(&self, alpha: FractionalIndex, a: f64, b: f64) -> Result<f64> {
        let al = FractionalIndex::new(alpha.value())?.value();
        let a = a.max(0.0);
        if b <= a {
            return Ok(0.0);
        }
        let raw = match &self.repr {
            Representation::Atoms(atoms) => atoms
                .iter()
                .take_while(|x| x.0 < b)
                .map(|&(r, w)| w * pow_diff(b - r, (a - r).max(0.0), al))
                .sum(),
            Representation::SampledCdf { .. } => {
                self.raw_power_moment(al, b) - self.raw_power_moment(al, a)
            }
        };
        Ok(raw / gamma(al + 1.0))
    }

    /// Largest `cumulative(2s) / cumulative(s)` over a geometric grid of
    /// `s` in `[s0, s_max / 2]`.
    pub fn doubling_estimate(&self, s0: f64, s_max: f64, points_per_decade: usize) -> Result<f64> {
        if !(s0 > 0.0 && s0 < s_max) {
            return Err(Error::InvalidMeasure(format!(
                "doubling window needs 0 < s0 < s_max (got {s0}, {s_max})"
            )));
        }
        if self.cumulative(s0) <= 0.0 {
            return Err(Error::EmptyMeasure { s0 });
        }
        let hi = (s_max / 2.0).max(s0);
        Ok(grids::geometric(s0, hi, points_per_decade)
            .into_iter()
            .map(|s| self.cumulative(2.0 * s) / self.cumulative(s))
            .fold(1.0, f64::max))
    }

    /// Tail-to-head ratio of the Laplace mass split at `b / t`.
    pub fn tail_ratio(&self, b: f64, t: f64) -> Result<f64> {
        if !(t > 0.0 && b > 0.0) {
            return Err(Error::NonIntegrable { t });
        }
        let split = b / t;
        let head = self.laplace_on(t, 0.0, split);
        if head <= 0.0 {
            return Err(Error::EmptyHead { split });
        }
        let tail = match &self.repr {
            Representation::Atoms(a) => a
                .iter()
                .filter(|x| x.0 > split)
                .map(|&(p, w)| w * (-t * p).exp())
                .sum(),
            Representation::SampledCdf { .. } => {
                // cell content at the split point itself has zero mass
                self.laplace_on(t, split, f64::INFINITY) - self.point_mass(split) * (-b).exp()
            }
        };
        Ok(tail.max(0.0) / head)
    }

    /// Mass of the open interval `(a, b)`.
    pub fn open_interval_mass(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        (self.cumulative(b) - self.point_mass(b) - self.cumulative(a)).max(0.0)
    }

    /// Atom carried by the single point `x`.
    pub fn point_mass(&self, x: f64) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => a.iter().filter(|p| p.0 == x).map(|p| p.1).sum(),
            Representation::SampledCdf {
                abscissae,
                cumulative,
            } => {
                if abscissae[0] == x {
                    cumulative[0]
                } else {
                    0.0
                }
            }
        }
    }

    /// Materializes `nu^alpha` as a sampled CDF on a geometric grid of
    /// `[lo, hi]` (plus the origin), refined geometrically right after every
    /// atom where `(s - r)^alpha` is singular.
    pub fn fractional_measure(
        &self,
        alpha: FractionalIndex,
        lo: f64,
        hi: f64,
        points_per_decade: usize,
    ) -> Result<StieltjesMeasure> {
        FractionalIndex::new(alpha.value())?;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidMeasure(format!(
                "fractional grid needs 0 < lo < hi (got {lo}, {hi})"
            )));
        }
        let mut knots = vec![0.0];
        knots.extend(grids::geometric(lo, hi, points_per_decade));
        let singular: Vec<f64> = match &self.repr {
            Representation::Atoms(a) => a.iter().map(|x| x.0).collect(),
            Representation::SampledCdf {
                abscissae,
                cumulative,
            } if cumulative[0] > 0.0 => vec![abscissae[0]],
            Representation::SampledCdf { .. } => vec![],
        };
        let cell_ratio = 10f64.powf(1.0 / points_per_decade.max(1) as f64) - 1.0;
        for r in singular.into_iter().filter(|&r| r > 0.0 && r < hi) {
            knots.push(r);
            let scale = r.max(lo);
            let mut offset = 1e-8 * scale;
            // keep refining until the local step matches the base grid
            while offset < scale {
                if r + offset < hi {
                    knots.push(r + offset);
                }
                offset *= 1.0 + cell_ratio;
            }
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let values = knots
            .iter()
            .map(|&s| self.fractional_avg(alpha, s))
            .collect::<Result<Vec<_>>>()?;
        // roundoff can break monotonicity by an ulp
        let mut running = 0.0f64;
        let values = values
            .into_iter()
            .map(|v| {
                running = running.max(v);
                running
            })
            .collect();
        Self::sampled_cdf(knots, values, format!("{}^{}", self.label, alpha.value()))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    /// Text form: header `atoms` or `cdf`, then `position,value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.repr {
            Representation::Atoms(a) => {
                out.push_str("atoms\n");
                for (p, w) in a {
                    let _ = writeln!(out, "{p},{w}");
                }
            }
            Representation::SampledCdf {
                abscissae,
                cumulative,
            } => {
                out.push_str("cdf\n");
                for (x, c) in abscissae.iter().zip(cumulative) {
                    let _ = writeln!(out, "{x},{c}");
                }
            }
        }
        out
    }

    pub fn read_from(r: impl BufRead, label: impl Into<String>) -> Result<Self> {
        let mut header: Option<String> = None;
        let mut rows = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if header.is_none() {
                if line != "atoms" && line != "cdf" {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected `atoms` or `cdf`, found `{line}`"),
                    });
                }
                header = Some(line.to_string());
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected `position,value`".into(),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            };
            rows.push((parse(a)?, parse(b)?));
        }
        match header.as_deref() {
            Some("atoms") => Self::atoms(rows, label),
            Some(_) => {
                let (x, c) = rows.into_iter().unzip();
                Self::sampled_cdf(x, c, label)
            }
            None => Err(Error::Parse {
                line: 0,
                message: "empty measure file".into(),
            }),
        }
    }
}

/// Level of the staircase function on `(2^{k-1}, 2^k]`.
fn staircase_level(k: i32) -> f64 {
    let base = 2f64.powi(k - 1);
    if k % 2 == 0 {
        base
    } else {
        std::f64::consts::SQRT_2 * base
    }
}

/// Doubling but not regularly varying: zero below 1/2, then
/// `2^{k-1}` (k even) or `sqrt(2) 2^{k-1}` (k odd) on `(2^{k-1}, 2^k]`,
/// truncated at `2^levels`. Jumps sit at `2^{k-1}`, so values agree with
/// the step function away from the jump points.
pub fn staircase_nu(levels: u32) -> Result<StieltjesMeasure> {
    if levels < 2 {
        return Err(Error::InvalidMeasure(
            "staircase needs at least 2 levels".into(),
        ));
    }
    let mut atoms = vec![(0.5, staircase_level(0))];
    for k in 1..=levels as i32 {
        atoms.push((
            2f64.powi(k - 1),
            staircase_level(k) - staircase_level(k - 1),
        ));
    }
    StieltjesMeasure::atoms(atoms, format!("staircase(K={levels})"))
}
