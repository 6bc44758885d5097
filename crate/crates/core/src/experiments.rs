//! Ratio reports for the asymptotic statements: Weyl laws, heat traces,
//! Tauberian premises and conclusions, and the sublevel-volume identities.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::discretization::{adequacy_check, build, AdequacyReport, GridSpec};
use crate::error::{Error, Result};
use crate::grids;
use crate::mc::MonteCarloConfig;
use crate::measures::{staircase_nu, FractionalIndex, StieltjesMeasure};
use crate::potentials::{unit_ball_volume, Potential};
use crate::spectral::{eigen_lowest, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub parameter: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; NaN on degenerate rows.
    pub ratio: f64,
    /// One standard error (or certified bound) in ratio units.
    pub uncertainty: f64,
    /// `rhs == 0`: the row carries no ratio information.
    pub degenerate: bool,
}

impl Row {
    pub fn new(parameter: f64, lhs: f64, rhs: f64, rhs_error: f64) -> Self {
        let degenerate = !(rhs > 0.0);
        let ratio = if degenerate { f64::NAN } else { lhs / rhs };
        let uncertainty = if degenerate {
            f64::NAN
        } else {
            ratio.abs() * rhs_error / rhs
        };
        Row {
            parameter,
            lhs,
            rhs,
            ratio,
            uncertainty,
            degenerate,
        }
    }
}

/// End of the parameter range where the asymptotic statement lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Limit {
    Small,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub experiment_id: String,
    /// Mean ratio over the quarter of rows closest to the limit.
    pub final_ratio: f64,
    /// Least-squares slope of the ratio against `ln(parameter)`.
    pub drift_slope: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub experiment_id: String,
    pub parameter_name: String,
    pub limit: Limit,
    /// Allowed `|final_ratio - 1|`.
    pub tolerance: f64,
    /// Sorted by parameter.
    pub rows: Vec<Row>,
    pub verdict: Verdict,
}

impl AsymptoticReport {
    pub fn new(
        experiment_id: impl Into<String>,
        parameter_name: impl Into<String>,
        limit: Limit,
        tolerance: f64,
        mut rows: Vec<Row>,
    ) -> Self {
        rows.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
        let experiment_id = experiment_id.into();
        let live: Vec<&Row> = rows.iter().filter(|r| !r.degenerate).collect();
        let (final_ratio, drift_slope, trend_ok) = if live.is_empty() {
            (f64::NAN, f64::NAN, false)
        } else {
            let q = (live.len() / 4).max(1);
            let near: Vec<&&Row> = match limit {
                Limit::Small => live.iter().take(q).collect(),
                Limit::Large => live.iter().rev().take(q).collect(),
            };
            let final_ratio = near.iter().map(|r| r.ratio).sum::<f64>() / q as f64;
            let xs: Vec<f64> = live.iter().map(|r| r.parameter.ln()).collect();
            let ys: Vec<f64> = live.iter().map(|r| r.ratio).collect();
            let drift = if live.len() >= 2 {
                grids::ls_slope(&xs, &ys)
            } else {
                0.0
            };
            let (first, last) = match limit {
                Limit::Small => (live[live.len() - 1], live[0]),
                Limit::Large => (live[0], live[live.len() - 1]),
            };
            // flat ratios may wobble by a tenth of the tolerance
            let trend_ok = (last.ratio - 1.0).abs() <= (first.ratio - 1.0).abs() + 0.1 * tolerance;
            (final_ratio, drift, trend_ok)
        };
        let pass = final_ratio.is_finite() && (final_ratio - 1.0).abs() <= tolerance && trend_ok;
        let mut metrics = BTreeMap::new();
        metrics.insert("tolerance".to_string(), tolerance);
        metrics.insert(
            "degenerate_rows".to_string(),
            (rows.len() - live.len()) as f64,
        );
        AsymptoticReport {
            verdict: Verdict {
                experiment_id: experiment_id.clone(),
                final_ratio,
                drift_slope,
                pass,
                metrics,
            },
            experiment_id,
            parameter_name: parameter_name.into(),
            limit,
            tolerance,
            rows,
        }
    }

    pub fn with_metric(mut self, key: &str, value: f64) -> Self {
        self.verdict.metrics.insert(key.to_string(), value);
        self
    }

    /// Row closest to the limit that is not degenerate.
    pub fn final_row(&self) -> Option<&Row> {
        let mut live = self.rows.iter().filter(|r| !r.degenerate);
        match self.limit {
            Limit::Small => live.next(),
            Limit::Large => live.next_back(),
        }
    }

    pub fn row_at(&self, parameter: f64) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| (r.parameter - parameter).abs() <= 1e-12 * parameter.abs().max(1.0))
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(
            w,
            "{},lhs,rhs,ratio,uncertainty,degenerate",
            self.parameter_name
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.parameter,
                r.lhs,
                r.rhs,
                r.ratio,
                r.uncertainty,
                u8::from(r.degenerate)
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn verdict_json(&self) -> String {
        serde_json::to_string_pretty(&self.verdict).expect("verdict serializes")
    }
}

/// `(2 pi hbar)^{-n}`.
fn phase_space_unit(dim: usize, hbar: f64) -> f64 {
    (2.0 * PI * hbar).powi(dim as i32).recip()
}

/// `N(lam)` against `(2 pi)^{-n} omega_n int (lam - V)_+^{n/2}` (scaled by
/// `hbar^{-n}` when the spectrum is semiclassical).
pub fn classical_weyl_report(
    v: &Potential,
    spectrum: &Spectrum,
    lam_grid: &[f64],
    tolerance: f64,
    mc: &MonteCarloConfig,
) -> Result<AsymptoticReport> {
    let unit = phase_space_unit(v.dim, spectrum.hbar) * unit_ball_volume(v.dim);
    let rows = lam_grid
        .par_iter()
        .enumerate()
        .map(|(i, &lam)| {
            if !(lam > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "lambda must be positive ({lam})"
                )));
            }
            let lhs = spectrum.counting(lam)? as f64;
            let w = v.weyl_integral_mc(lam, &mc.cell(i, 0))?;
            Ok(Row::new(lam, lhs, unit * w.value, unit * w.std_error))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticReport::new(
        "weyl-classical",
        "lambda",
        Limit::Large,
        tolerance,
        rows,
    ))
}

/// `hbar^n N_hbar(I)` against `(2 pi)^{-n} |{|xi|^2 + V in I}|`, one row per spectrum.
pub fn semiclassical_weyl_report(
    v: &Potential,
    interval: (f64, f64),
    spectra: &[Spectrum],
    tolerance: f64,
    mc: &MonteCarloConfig,
) -> Result<AsymptoticReport> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::InvalidParameters(format!(
            "interval ({a}, {b}) is empty"
        )));
    }
    let volume = v.phase_space_volume_mc(a, b, mc)?;
    let unit = phase_space_unit(v.dim, 1.0);
    let rows = spectra
        .iter()
        .map(|s| {
            let lhs = s.hbar.powi(v.dim as i32) * s.counting_interval(a, b)? as f64;
            Ok(Row::new(
                s.hbar,
                lhs,
                unit * volume.value,
                unit * volume.std_error,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticReport::new(
        "weyl-semiclassical",
        "hbar",
        Limit::Small,
        tolerance,
        rows,
    ))
}

/// One `(hbar, grid, k)` discretization cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveCell {
    pub hbar: f64,
    pub grid: GridSpec,
    pub k: usize,
    /// Eigenvalue level the cell is expected to resolve.
    pub lam_target: f64,
}

/// Builds and solves every cell in parallel; each spectrum comes with the
/// adequacy report of its grid at `lam_target`.
pub fn solve_cells(v: &Potential, cells: &[SolveCell]) -> Result<Vec<(Spectrum, AdequacyReport)>> {
    cells
        .par_iter()
        .map(|c| {
            let h = build(v, c.grid, c.hbar)?;
            let report = adequacy_check(&h, c.lam_target);
            Ok((eigen_lowest(&h, c.k)?, report))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatMode {
    /// `hbar = 1`, rows over `t`.
    Classical,
    /// Fixed `t`, rows over `hbar`.
    Semiclassical { t: f64 },
}

/// Heat trace against `(4 pi t hbar^2)^{-n/2} int e^{-tV}`.
pub fn heat_trace_report(
    v: &Potential,
    spectra: &[Spectrum],
    t_grid: &[f64],
    mode: HeatMode,
    tolerance: f64,
    mc: &MonteCarloConfig,
) -> Result<AsymptoticReport> {
    let n = v.dim as f64;
    let row = |s: &Spectrum, t: f64, i: usize| -> Result<Row> {
        let h = s.heat_trace_detail(t)?;
        if !h.certified {
            return Err(Error::TailNotCertified { t, hbar: s.hbar });
        }
        let e = v.exp_integral_mc(t, &mc.cell(i, 0))?;
        let pref = (4.0 * PI * t * s.hbar * s.hbar).powf(-n / 2.0);
        let mut r = Row::new(
            if matches!(mode, HeatMode::Classical) {
                t
            } else {
                s.hbar
            },
            h.value,
            pref * e.value,
            pref * e.std_error,
        );
        r.uncertainty += h.tail_bound / r.rhs;
        Ok(r)
    };
    match mode {
        HeatMode::Classical => {
            let s = spectra
                .first()
                .ok_or_else(|| Error::InvalidParameters("no spectrum supplied".into()))?;
            let rows = t_grid
                .par_iter()
                .enumerate()
                .map(|(i, &t)| row(s, t, i))
                .collect::<Result<Vec<_>>>()?;
            Ok(AsymptoticReport::new(
                "heat-trace",
                "t",
                Limit::Small,
                tolerance,
                rows,
            ))
        }
        HeatMode::Semiclassical { t } => {
            let rows = spectra
                .iter()
                .enumerate()
                .map(|(i, s)| row(s, t, i))
                .collect::<Result<Vec<_>>>()?;
            Ok(AsymptoticReport::new(
                "heat-trace-semiclassical",
                "hbar",
                Limit::Small,
                tolerance,
                rows,
            )
            .with_metric("t", t))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauberianPair {
    pub premise: AsymptoticReport,
    pub conclusion: AsymptoticReport,
}

/// Premise `L_mu(t) / (t^{-alpha} L_nu(t))` over `t` and conclusion
/// `mu[0, lam] / nu^alpha(lam)` over `lam`.
pub fn tauberian_classical(
    mu: &StieltjesMeasure,
    nu: &StieltjesMeasure,
    alpha: FractionalIndex,
    t_grid: &[f64],
    lam_grid: &[f64],
    tolerance: f64,
) -> Result<TauberianPair> {
    let a = alpha.value();
    let premise = t_grid
        .par_iter()
        .map(|&t| {
            Ok(Row::new(
                t,
                mu.laplace(t)?,
                t.powf(-a) * nu.laplace(t)?,
                0.0,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let conclusion = lam_grid
        .par_iter()
        .map(|&lam| {
            Ok(Row::new(
                lam,
                mu.cumulative(lam),
                nu.fractional_avg(alpha, lam)?,
                0.0,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TauberianPair {
        premise: AsymptoticReport::new("tauberian-premise", "t", Limit::Small, tolerance, premise),
        conclusion: AsymptoticReport::new(
            "tauberian",
            "lambda",
            Limit::Large,
            tolerance,
            conclusion,
        ),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiclassicalTauberian {
    pub report: AsymptoticReport,
    /// `(hbar, L_mu(t) / ((t hbar^2)^{-alpha} L_nu(t)))` at the probe time.
    pub premise_at_probe: Vec<(f64, f64)>,
}

/// `hbar^{2 alpha} mu_hbar(I)` against `nu^alpha(b) - nu^alpha(a)`.
pub fn tauberian_semiclassical(
    family: &[(f64, StieltjesMeasure)],
    nu: &StieltjesMeasure,
    alpha: FractionalIndex,
    t_probe: f64,
    interval: (f64, f64),
    tolerance: f64,
) -> Result<SemiclassicalTauberian> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::InvalidParameters(format!(
            "interval ({a}, {b}) is empty"
        )));
    }
    let al = alpha.value();
    let rhs = nu.fractional_interval(alpha, a, b)?;
    let nu_probe = nu.laplace(t_probe)?;
    let mut rows = Vec::with_capacity(family.len());
    let mut premise_at_probe = Vec::with_capacity(family.len());
    for (hbar, mu) in family {
        let lhs = hbar.powf(2.0 * al) * mu.open_interval_mass(a, b);
        rows.push(Row::new(*hbar, lhs, rhs, 0.0));
        let p = mu.laplace(t_probe)? / ((t_probe * hbar * hbar).powf(-al) * nu_probe);
        premise_at_probe.push((*hbar, p));
    }
    premise_at_probe.sort_by(|x, y| x.0.total_cmp(&y.0));
    let report = AsymptoticReport::new("tauberian-semi", "hbar", Limit::Small, tolerance, rows)
        .with_metric("t_probe", t_probe);
    Ok(SemiclassicalTauberian {
        report,
        premise_at_probe,
    })
}

/// Premise `L_mu_hbar(t) / ((t hbar^2)^{-alpha} L_nu(t))` at the smallest `hbar`
/// over a `t` grid. The hypothesis is stated both for `t >= t0` and for every
/// `t > 0`, so two reports come back: the full grid ("tauberian-semi-premise")
/// and its `t >= t0` part ("tauberian-semi-premise-restricted"). Each passes
/// when every row is within `tolerance` of one.
pub fn semiclassical_premise(
    family: &[(f64, StieltjesMeasure)],
    nu: &StieltjesMeasure,
    alpha: FractionalIndex,
    t_grid: &[f64],
    t0: f64,
    tolerance: f64,
) -> Result<(AsymptoticReport, AsymptoticReport)> {
    let (hbar, mu) = family
        .iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .ok_or_else(|| Error::InvalidParameters("empty hbar family".into()))?;
    let al = alpha.value();
    let rows = t_grid
        .iter()
        .map(|&t| {
            let rhs = (t * hbar * hbar).powf(-al) * nu.laplace(t)?;
            Ok(Row::new(t, mu.laplace(t)?, rhs, 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let uniform = |id: &str, rows: Vec<Row>| {
        let worst = rows
            .iter()
            .map(|r| (r.ratio - 1.0).abs())
            .fold(
                0.0,
                |m: f64, d| if d.is_nan() { f64::INFINITY } else { m.max(d) },
            );
        let mut r = AsymptoticReport::new(id, "t", Limit::Small, tolerance, rows)
            .with_metric("hbar", *hbar)
            .with_metric("max_deviation", worst)
            .with_metric("t0", t0);
        r.verdict.pass = !r.rows.is_empty() && worst <= tolerance;
        r
    };
    let restricted: Vec<Row> = rows.iter().filter(|r| r.parameter >= t0).cloned().collect();
    Ok((
        uniform("tauberian-semi-premise", rows),
        uniform("tauberian-semi-premise-restricted", restricted),
    ))
}

/// Number of smallest-`t` dyadic ratios inspected by the non-convergence witness.
pub const WITNESS_POINTS: usize = 8;
/// Required spread of the witness ratios.
pub const WITNESS_SPREAD: f64 = 0.1;

/// Laplace transform of the staircase measure and its dyadic ratios
/// `L(t/2) / L(t)`; passes when the ratios keep a spread above
/// `WITNESS_SPREAD` while the measure stays doubling with constant `2 sqrt 2`.
pub fn nonregular_demo(levels: u32, t_grid: &[f64]) -> Result<AsymptoticReport> {
    if levels < 12 {
        return Err(Error::InvalidParameters(format!(
            "staircase needs at least 12 levels (got {levels})"
        )));
    }
    let nu = staircase_nu(levels)?;
    let rows = t_grid
        .iter()
        .map(|&t| Ok(Row::new(t, nu.laplace(t / 2.0)?, nu.laplace(t)?, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let mut report =
        AsymptoticReport::new("nonregular-demo", "t", Limit::Small, f64::INFINITY, rows);
    let witness: Vec<f64> = report
        .rows
        .iter()
        .take(WITNESS_POINTS)
        .map(|r| r.ratio)
        .collect();
    let spread = witness.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - witness.iter().cloned().fold(f64::INFINITY, f64::min);
    let doubling = nu.doubling_estimate(1.0, 2f64.powi(levels as i32 - 1), 64)?;
    let bound = 2.0 * std::f64::consts::SQRT_2 + 0.01;
    report.verdict.pass = spread > WITNESS_SPREAD && doubling <= bound;
    report.tolerance = f64::NAN;
    report.verdict.metrics.remove("tolerance");
    Ok(report
        .with_metric("ratio_spread", spread)
        .with_metric("doubling_estimate", doubling)
        .with_metric("doubling_bound", bound))
}

/// Whether a fitted slope is judged against a value or only its sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeTarget {
    Around { slope: f64, tolerance: f64 },
    Negative,
}

impl SlopeTarget {
    fn accepts(&self, s: f64) -> bool {
        match *self {
            SlopeTarget::Around { slope, tolerance } => (s - slope).abs() <= tolerance,
            SlopeTarget::Negative => s < 0.0,
        }
    }
}

/// Rows of measured values against their fitted power law `c lam^s`.
fn power_law_report(
    id: &str,
    lams: &[f64],
    values: &[f64],
    errors: &[f64],
    target: SlopeTarget,
) -> AsymptoticReport {
    let slope = grids::loglog_slope(lams, values);
    let logs: Vec<f64> = lams
        .iter()
        .zip(values)
        .map(|(l, v)| v.ln() - slope * l.ln())
        .collect();
    let c = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
    let rows = lams
        .iter()
        .zip(values.iter().zip(errors))
        .map(|(&l, (&v, &e))| {
            let mut r = Row::new(l, v, c * l.powf(slope), 0.0);
            r.uncertainty = e / r.rhs;
            r
        })
        .collect();
    let mut report = AsymptoticReport::new(id, "lambda", Limit::Large, f64::INFINITY, rows);
    report.verdict.drift_slope = slope;
    report.verdict.pass = target.accepts(slope);
    report.tolerance = f64::NAN;
    report.verdict.metrics.remove("tolerance");
    let report = report.with_metric("fitted_slope", slope);
    match target {
        SlopeTarget::Around { slope, tolerance } => report
            .with_metric("expected_slope", slope)
            .with_metric("slope_tolerance", tolerance),
        SlopeTarget::Negative => report,
    }
}

/// `sigma(lam)` on a grid with its fitted growth exponent.
pub fn sigma_scan(
    v: &Potential,
    lams: &[f64],
    target: SlopeTarget,
    mc: &MonteCarloConfig,
) -> Result<AsymptoticReport> {
    let est = lams
        .par_iter()
        .enumerate()
        .map(|(i, &l)| v.sigma(l, &mc.cell(i, 0)))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = est.iter().map(|e| e.value).collect();
    let errors: Vec<f64> = est.iter().map(|e| e.std_error).collect();
    let doubling = v.doubling_check(lams[0], lams[lams.len() - 1], mc)?;
    Ok(
        power_law_report("sigma-scan", lams, &values, &errors, target)
            .with_metric("doubling_constant", doubling),
    )
}

/// Oscillation functional at `r = lam^{-r_exponent}` with its fitted exponent.
pub fn oscillation_scan(
    v: &Potential,
    lams: &[f64],
    r_exponent: f64,
    beta: f64,
    target: SlopeTarget,
    mc: &MonteCarloConfig,
) -> Result<AsymptoticReport> {
    let cells: Vec<(f64, f64)> = lams.iter().map(|&l| (l, l.powf(-r_exponent))).collect();
    let samples = v.oscillation_scan(&cells, beta, mc)?;
    let values: Vec<f64> = samples.iter().map(|s| s.q_value).collect();
    let errors: Vec<f64> = samples.iter().map(|s| s.std_error).collect();
    Ok(
        power_law_report("oscillation-scan", lams, &values, &errors, target)
            .with_metric("beta", beta),
    )
}

/// Sampled `sigma` on `[lo, hi]` that ends where `e^{-t r}` is negligible for
/// the smallest `t` of interest.
pub fn sigma_measure_for(
    v: &Potential,
    lo: f64,
    hi: f64,
    mc: &MonteCarloConfig,
) -> Result<StieltjesMeasure> {
    let grid = grids::geometric(lo, hi, 64);
    v.sigma_measure(&grid, mc)
}

/// `int e^{-tV} dx` (direct) against `int e^{-tr} d sigma(r)` (from the sampled sigma).
pub fn laplace_identity_report(
    v: &Potential,
    sigma: &StieltjesMeasure,
    t_grid: &[f64],
    tolerance: f64,
    mc: &MonteCarloConfig,
) -> Result<AsymptoticReport> {
    let rows = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let direct = v.exp_integral_mc(t, &mc.cell(i, 0))?;
            let mut r = Row::new(t, sigma.laplace(t)?, direct.value, direct.std_error);
            r.uncertainty = r.ratio.abs() * direct.std_error / direct.value;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticReport::new(
        "identity-laplace",
        "t",
        Limit::Small,
        tolerance,
        rows,
    ))
}

/// `int (lam - V)_+^{n/2} dx` against `int_0^lam (lam - r)^{n/2} d sigma(r)`.
pub fn weyl_identity_report(
    v: &Potential,
    sigma: &StieltjesMeasure,
    lam_grid: &[f64],
    tolerance: f64,
    mc: &MonteCarloConfig,
) -> Result<AsymptoticReport> {
    let rows = lam_grid
        .par_iter()
        .enumerate()
        .map(|(i, &lam)| {
            let direct = v.weyl_integral_mc(lam, &mc.cell(i, 0))?;
            Ok(Row::new(
                lam,
                v.weyl_integral_from_sigma(sigma, lam)?,
                direct.value,
                direct.std_error,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticReport::new(
        "identity-weyl",
        "lambda",
        Limit::Large,
        tolerance,
        rows,
    ))
}

/// Phase-space volume of `{|xi|^2 + V in (a, b)}` rebuilt from sigma:
/// `omega_n (n/2) int_a^b (r_+^{n/2-1} * d sigma)(r) dr
///  = omega_n Gamma(n/2 + 1) (sigma^{n/2}(b) - sigma^{n/2}(a))`.
pub fn phase_space_from_sigma(
    sigma: &StieltjesMeasure,
    dim: usize,
    interval: (f64, f64),
) -> Result<f64> {
    let half = dim as f64 / 2.0;
    let alpha = FractionalIndex::new(half)?;
    Ok(unit_ball_volume(dim)
        * gamma(half + 1.0)
        * sigma.fractional_interval(alpha, interval.0, interval.1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::make_power;

    fn mc() -> MonteCarloConfig {
        MonteCarloConfig::default()
    }

    #[test]
    fn verdict_uses_rows_near_the_limit() {
        let rows = (1..=8)
            .map(|i| Row::new(i as f64, 1.0 + 0.1 / i as f64, 1.0, 0.0))
            .collect();
        let r = AsymptoticReport::new("x", "lambda", Limit::Large, 0.05, rows);
        assert!((r.verdict.final_ratio - (1.0 + 0.1 / 8.0 + 1.0 + 0.1 / 7.0) / 2.0).abs() < 1e-12);
        assert!(r.verdict.pass);
        assert!(r.verdict.drift_slope < 0.0);
        // diverging trend fails even inside the tolerance
        let rows = (1..=8)
            .map(|i| Row::new(i as f64, 1.0 + 0.001 * i as f64, 1.0, 0.0))
            .collect();
        assert!(
            !AsymptoticReport::new("x", "lambda", Limit::Large, 0.05, rows)
                .verdict
                .pass
        );
    }

    #[test]
    fn degenerate_rows_are_kept_and_flagged() {
        let rows = vec![Row::new(1.0, 0.0, 0.0, 0.0), Row::new(2.0, 1.0, 1.0, 0.0)];
        let r = AsymptoticReport::new("x", "hbar", Limit::Small, 0.1, rows);
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows[0].degenerate);
        assert_eq!(r.verdict.final_ratio, 1.0);
        assert_eq!(r.verdict.metrics["degenerate_rows"], 1.0);
        assert!(r.to_csv().lines().nth(1).unwrap().ends_with(",1"));
    }

    #[test]
    fn classical_weyl_exact_spectrum() {
        let v = make_power(1, 2.0).unwrap();
        let s = Spectrum::harmonic_1d(1.0, 200.0).unwrap();
        let r = classical_weyl_report(&v, &s, &[20.0, 40.0, 60.0], 0.05, &mc()).unwrap();
        for row in &r.rows {
            assert!((row.rhs - row.parameter / 2.0).abs() < 1e-6 * row.rhs);
            assert!((row.ratio - 1.0).abs() < 1e-6);
        }
        assert!(r.verdict.pass);
        let linear = make_power(1, 1.0).unwrap();
        let r = classical_weyl_report(&linear, &s, &[40.0], 1.0, &mc()).unwrap();
        assert!((r.rows[0].rhs - 4.0 * 40f64.powf(1.5) / (3.0 * PI)).abs() < 1e-5);
    }

    #[test]
    fn semiclassical_exact_model() {
        let v = make_power(1, 2.0).unwrap();
        let spectra: Vec<Spectrum> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&h| Spectrum::harmonic_1d(h, 3.0).unwrap())
            .collect();
        let r = semiclassical_weyl_report(&v, (1.0, 2.0), &spectra, 0.1, &mc()).unwrap();
        let first = r.final_row().unwrap();
        assert_eq!(first.parameter, 0.01);
        assert!((first.lhs - 0.5).abs() < 1e-12);
        assert!((first.rhs - 0.5).abs() < 1e-7);
        let below = semiclassical_weyl_report(&v, (-2.0, -1.0), &spectra, 0.1, &mc()).unwrap();
        assert!(below.rows.iter().all(|r| r.degenerate && r.lhs == 0.0));
        assert!(!below.verdict.pass);
    }

    #[test]
    fn heat_trace_ratio_matches_t_over_sinh() {
        let v = make_power(1, 2.0).unwrap();
        let s = Spectrum::harmonic_1d(1.0, 1000.0).unwrap();
        let r =
            heat_trace_report(&v, &[s], &[0.1, 0.05], HeatMode::Classical, 1e-2, &mc()).unwrap();
        for row in &r.rows {
            let t = row.parameter;
            assert!((row.ratio - t / t.sinh()).abs() < 1e-7);
        }
        let short = Spectrum::harmonic_1d(1.0, 20.0).unwrap();
        assert!(matches!(
            heat_trace_report(&v, &[short], &[0.1], HeatMode::Classical, 1e-2, &mc()),
            Err(Error::TailNotCertified { .. })
        ));
    }

    #[test]
    fn semiclassical_heat_trace_exact_model() {
        let v = make_power(1, 2.0).unwrap();
        let spectra: Vec<Spectrum> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&h| Spectrum::harmonic_1d(h, 40.0).unwrap())
            .collect();
        let r = heat_trace_report(
            &v,
            &spectra,
            &[],
            HeatMode::Semiclassical { t: 1.0 },
            1e-2,
            &mc(),
        )
        .unwrap();
        for row in &r.rows {
            let x = row.parameter;
            // sum e^{-h(2k+1)} / (1 / 2h) = h / sinh h
            assert!((row.ratio - x / x.sinh()).abs() < 1e-7);
        }
        assert!(r.verdict.pass);
    }

    #[test]
    fn nonregular_witness() {
        let t: Vec<f64> = (8..=16).map(|k| 2f64.powi(-k)).collect();
        let r = nonregular_demo(24, &t).unwrap();
        assert!(r.verdict.metrics["doubling_estimate"] <= r.verdict.metrics["doubling_bound"]);
        assert!(nonregular_demo(11, &t).is_err());
    }

    #[test]
    fn phase_space_identity_oscillator() {
        let v = make_power(1, 2.0).unwrap();
        let sigma = sigma_measure_for(&v, 1e-8, 10.0, &mc()).unwrap();
        let from_sigma = phase_space_from_sigma(&sigma, 1, (1.0, 2.0)).unwrap();
        let direct = v.phase_space_volume(1.0, 2.0).unwrap();
        assert!((direct - PI).abs() < 1e-6);
        assert!((from_sigma / direct - 1.0).abs() < 1e-3);
    }

    #[test]
    fn semiclassical_premise_on_the_exact_model() {
        // L_mu(t) = 1 / (2 sinh(t hbar)) and the rhs is 1 / (2 t hbar)
        let nu = StieltjesMeasure::tabulate(
            &grids::geometric(1e-8, 1e5, 64),
            |l| 2.0 * l.sqrt() / (4.0 * PI).sqrt(),
            "nu",
        )
        .unwrap();
        let family: Vec<(f64, StieltjesMeasure)> = [0.05, 0.1]
            .iter()
            .map(|&h| {
                (
                    h,
                    Spectrum::harmonic_1d(h, 1e4)
                        .unwrap()
                        .spectrum_measure()
                        .unwrap(),
                )
            })
            .collect();
        let half = FractionalIndex::new(0.5).unwrap();
        let (full, restricted) =
            semiclassical_premise(&family, &nu, half, &[0.5, 1.0, 8.0], 1.0, 0.05).unwrap();
        for r in &full.rows {
            let x = r.parameter * 0.05;
            assert!((r.ratio - x / x.sinh()).abs() < 1e-3, "{r:?}");
        }
        assert_eq!(restricted.rows.len(), 2);
        // t = 8 gives 0.4 / sinh 0.4 = 0.974, inside 0.05
        assert!(full.verdict.pass && restricted.verdict.pass);
        let (full, _) = semiclassical_premise(&family, &nu, half, &[1.0, 40.0], 1.0, 0.05).unwrap();
        assert!(!full.verdict.pass);
    }

    #[test]
    fn verdict_json_is_stable() {
        let rows = vec![Row::new(1.0, 1.0, 1.0, 0.0)];
        let a = AsymptoticReport::new("x", "t", Limit::Small, 0.1, rows.clone()).verdict_json();
        let b = AsymptoticReport::new("x", "t", Limit::Small, 0.1, rows).verdict_json();
        assert_eq!(a, b);
        assert!(a.contains("\"final_ratio\": 1.0"));
    }
}
