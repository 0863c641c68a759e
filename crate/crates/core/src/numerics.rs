//! Scalar numerical kernels: adaptive Gauss–Kronrod quadrature, bracketed
//! root finding and golden-section maximization.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel on [a, b]; returns (estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
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

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol {
            abs: 1e-14,
            rel: 1e-12,
            max_panels: 2000,
        }
    }
}

impl QuadTol {
    pub fn rel(rel: f64) -> Self {
        QuadTol {
            abs: 0.0,
            rel,
            ..Default::default()
        }
    }
}

/// Globally adaptive Gauss–Kronrod quadrature over the listed breakpoints.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate meets `max(abs, rel·|I|)` or the panel budget runs out; the
/// best estimate is returned either way.
pub fn integrate_pts<F: Fn(f64) -> f64>(f: F, pts: &[f64], tol: QuadTol) -> f64 {
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&f, w[0], w[1]);
            panels.push((w[0], w[1], v, e));
        }
    }
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol.abs.max(tol.rel * total.abs()) || panels.len() >= tol.max_panels {
            return total;
        }
        let (k, _) =
            panels.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc },
            );
        let (a, b, _, _) = panels.swap_remove(k);
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            return total;
        }
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        panels.push((a, m, v1, e1));
        panels.push((m, b, v2, e2));
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: QuadTol) -> f64 {
    integrate_pts(f, &[a, b], tol)
}

/// ∫_a^∞ f, through the map r = a + s/(1 − s).
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: QuadTol) -> f64 {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let d = 1.0 - s;
            f(a + s / d) / (d * d)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Root of a continuous function on a sign-changing bracket by the
/// Illinois variant of regula falsi, falling back to bisection when the
/// secant step stalls. Stops when the bracket is below `xtol` (relative).
pub fn bracketed_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numeric(format!(
            "root not bracketed on [{lo}, {hi}]"
        )));
    }
    let mut side = 0i32;
    for it in 0..max_iter {
        if (hi - lo).abs() <= xtol * lo.abs().max(hi.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if it % 4 == 3 || !(x > lo.min(hi) && x < lo.max(hi)) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fhi.signum() {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        } else {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Numeric(format!(
        "root finder exhausted {max_iter} iterations"
    )))
}

/// Maximizer of a unimodal function on [a, b] by golden-section search.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol * (a.abs() + b.abs()).max(1e-300) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Ordinary least squares for a small dense system; returns coefficients.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = rows.first().map_or(0, |r| r.len());
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for (row, &y) in rows.iter().zip(rhs) {
        for i in 0..m {
            b[i] += row[i] * y;
            for j in 0..m {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    solve_dense(a, b)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap_or(k);
        if a[p][k].abs() < 1e-300 {
            return Err(Error::Numeric("singular normal equations".into()));
        }
        a.swap(k, p);
        b.swap(k, p);
        let (head, tail) = a.split_at_mut(k + 1);
        let pivot = &head[k];
        let bk = b[k];
        for (row, bi) in tail.iter_mut().zip(&mut b[k + 1..]) {
            let m = row[k] / pivot[k];
            for (x, p) in row[k..].iter_mut().zip(&pivot[k..]) {
                *x -= m * p;
            }
            *bi -= m * bk;
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}
