//! Globally adaptive Gauss-Kronrod (7, 15) quadrature on finite intervals.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_9,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// One GK15 panel: (Kronrod estimate, |Kronrod - Gauss|).
fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-300,
            max_panels: 4000,
            initial_panels: 8,
        }
    }
}

/// Integrates `f` over `[a, b]`, returning `(value, error estimate)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Result<(f64, f64)> {
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let n0 = opts.initial_panels.max(1);
    let step = (b - a) / n0 as f64;
    let mut panels: Vec<(f64, f64, f64, f64)> = (0..n0)
        .map(|i| {
            let lo = a + step * i as f64;
            let hi = if i + 1 == n0 { b } else { lo + step };
            let (v, e) = panel(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::QuadratureFailure(format!(
                "{} panels on [{a}, {b}]: estimate {total:.6e} with error {err:.3e}",
                panels.len()
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval exhausted at machine resolution
            return Ok((total, err));
        }
        let (v1, e1) = panel(&f, lo, mid);
        let (v2, e2) = panel(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Iterated integral over the square `[-r, r]^2`.
pub fn integrate_square(
    f: impl Fn(f64, f64) -> f64,
    r: f64,
    opts: QuadOptions,
) -> Result<(f64, f64)> {
    let inner_opts = QuadOptions {
        rel_tol: opts.rel_tol * 1e-2,
        ..opts
    };
    let failed = std::cell::Cell::new(None);
    let outer = |x: f64| match integrate(|y| f(x, y), -r, r, inner_opts) {
        Ok((v, _)) => v,
        Err(e) => {
            failed.set(Some(e));
            0.0
        }
    };
    let res = integrate(outer, -r, r, opts)?;
    match failed.take() {
        Some(e) => Err(e),
        None => Ok(res),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_integral() {
        let (v, _) = integrate(|x| (-x * x).exp(), -10.0, 10.0, QuadOptions::default()).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sqrt_edge_singularity() {
        // half disk area of radius 2
        let (v, _) = integrate(
            |x| (4.0 - x * x).max(0.0).sqrt(),
            -3.0,
            3.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-7);
    }

    #[test]
    fn disk_area_2d() {
        let opts = QuadOptions {
            rel_tol: 1e-7,
            ..Default::default()
        };
        let (v, _) = integrate_square(|x, y| (1.0 - x * x - y * y).max(0.0), 1.5, opts).unwrap();
        // int_{disk} (1 - r^2) = pi / 2
        assert!((v - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn failure_is_reported() {
        let opts = QuadOptions {
            max_panels: 10,
            rel_tol: 1e-14,
            ..Default::default()
        };
        assert!(integrate(|x| (1.0 / x.abs().max(1e-300)).sqrt(), -1.0, 1.0, opts).is_err());
    }
}
