//! Parameter grids shared by the measure, potential and report code.

/// Geometric grid from `lo` to `hi` (both included) with `points_per_decade`
/// points per factor of ten.
pub fn geometric(lo: f64, hi: f64, points_per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "geometric grid needs 0 < lo <= hi");
    let ppd = points_per_decade.max(1) as f64;
    let decades = (hi / lo).log10();
    let steps = (decades * ppd).ceil().max(1.0) as usize;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = lo;
    for _ in 0..steps {
        out.push(x);
        x *= ratio;
    }
    out.push(hi);
    out.dedup();
    out
}

/// Evenly spaced grid with `n >= 2` points including both ends.
pub fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// `2^{-k}` for k in `k_lo..=k_hi`, in descending order of t.
pub fn dyadic_t(k_lo: i32, k_hi: i32) -> Vec<f64> {
    (k_lo..=k_hi).map(|k| 2f64.powi(-k)).collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Slope of `ln y` against `ln x`, skipping nonpositive entries.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    ls_slope(&lx, &ly)
}
