//! Radially reduced Riesz kernel |x − y|^{−μ}, the potential it generates,
//! the nonlocal double integral, and integrals against translated fields.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{config_err, Error, Result};
use crate::grid::{sphere_area, RadialGrid};
use crate::numerics::{integrate, integrate_pts, QuadTol};

const CACHE_MAGIC: &[u8; 8] = b"CHQKERN1";

/// W(r,s) = |S^{N−2}|·∫₀^π (r² + s² − 2rs·cosθ)^{−μ/2} sin^{N−2}θ dθ.
///
/// The squared distance is written as (r−s)² + 4rs·sin²(θ/2) to avoid
/// cancellation, and the range is split where the integrand stops being
/// peaked. The peaked piece uses θ = θ_c·x^k so the weak singularity at
/// r = s becomes integrable polynomial growth.
pub fn kernel_weight(n: usize, mu: f64, r: f64, s: f64) -> f64 {
    let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
    if lo == 0.0 {
        return sphere_area(n) * hi.powf(-mu);
    }
    sphere_area(n - 1) * angular_integral(n, mu, r, s)
}

fn angular_integral(n: usize, mu: f64, r: f64, s: f64) -> f64 {
    let pw = n as i32 - 2;
    let dr = (r - s) * (r - s);
    let rs4 = 4.0 * r * s;
    let half_mu = 0.5 * mu;
    let integrand = |th: f64| {
        let sh = (0.5 * th).sin();
        let d2 = dr + rs4 * sh * sh;
        let k = if mu == 2.0 {
            1.0 / d2
        } else if mu == 1.0 {
            1.0 / d2.sqrt()
        } else {
            d2.powf(-half_mu)
        };
        k * th.sin().powi(pw)
    };
    let tol = QuadTol {
        abs: 0.0,
        rel: 1e-8,
        max_panels: 400,
    };
    let pi = std::f64::consts::PI;
    let a = n as f64 - 2.0 - mu;
    let k = (2.0 / (a + 1.0).max(0.25)).clamp(2.0, 8.0);
    let graded = |tc: f64| {
        integrate(
            |x: f64| {
                if x <= 0.0 {
                    return 0.0;
                }
                let xk1 = if k == 2.0 { x } else { x.powf(k - 1.0) };
                integrand(tc * xk1 * x) * tc * k * xk1
            },
            0.0,
            1.0,
            tol,
        )
    };
    let theta_c = (8.0 * (r - s).abs() / (r * s).sqrt()).min(pi);
    if theta_c == 0.0 {
        return graded(pi);
    }
    let far = if theta_c < pi {
        integrate_pts(integrand, &[theta_c, 0.5 * (theta_c + pi), pi], tol)
    } else {
        0.0
    };
    graded(theta_c) + far
}

/// Dense symmetric table of kernel weights on the nodes of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    dimension: usize,
    mu: f64,
    n: usize,
    grid_hash: u64,
    entries: Vec<f64>,
}

impl KernelTable {
    /// Builds the table row by row in parallel.
    ///
    /// When μ ≥ N−1 the diagonal diverges and is replaced by the average of
    /// W(r_i, ·) over the node's trapezoid cell.
    pub fn build(grid: &RadialGrid, mu: f64) -> Result<Self> {
        let n = grid.dimension();
        let nf = n as f64;
        if !(mu > 0.0 && mu < nf.min(4.0)) {
            return config_err(format!(
                "kernel exponent mu = {mu} must lie in (0, min(N, 4))"
            ));
        }
        let r = grid.nodes();
        let m = r.len();
        let singular_diag = mu >= nf - 1.0;
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (i..m)
                    .map(|j| {
                        if i == j && singular_diag {
                            cell_average(grid, mu, i)
                        } else {
                            kernel_weight(n, mu, r[i], r[j])
                        }
                    })
                    .collect()
            })
            .collect();
        let mut entries = vec![0.0; m * m];
        for (i, row) in rows.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                let j = i + k;
                entries[i * m + j] = v;
                entries[j * m + i] = v;
            }
        }
        if let Some(bad) = entries.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Numeric(format!(
                "kernel entry {bad} is not finite and positive"
            )));
        }
        Ok(KernelTable {
            dimension: n,
            mu,
            n: m,
            grid_hash: grid.hash(),
            entries,
        })
    }

    /// Loads a cached table if the header matches, otherwise builds and
    /// writes one.
    pub fn build_cached(grid: &RadialGrid, mu: f64, cache: Option<&Path>) -> Result<Self> {
        if let Some(path) = cache {
            if path.exists() {
                if let Ok(t) = Self::load(path, grid, mu) {
                    return Ok(t);
                }
            }
            let t = Self::build(grid, mu)?;
            t.save(path)?;
            return Ok(t);
        }
        Self::build(grid, mu)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn check(&self, grid: &RadialGrid, mu: f64) -> Result<()> {
        if self.grid_hash != grid.hash() || self.dimension != grid.dimension() {
            return config_err("kernel table was built for a different grid");
        }
        if self.mu != mu {
            return config_err(format!(
                "kernel table has mu = {}, problem has {mu}",
                self.mu
            ));
        }
        Ok(())
    }

    /// Φ(r_i) = Σ_j W_ij·w_j·ρ_j for a density ρ given at the nodes.
    pub fn potential(&self, grid: &RadialGrid, density: &[f64]) -> Vec<f64> {
        let wd: Vec<f64> = grid
            .weights()
            .iter()
            .zip(density)
            .map(|(w, d)| w * d)
            .collect();
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).iter().zip(&wd).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&(self.dimension as u64).to_le_bytes())?;
        w.write_all(&self.mu.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.grid_hash.to_le_bytes())?;
        for v in &self.entries {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, grid: &RadialGrid, mu: f64) -> Result<Self> {
        let mut rd = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        rd.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return config_err("not a kernel cache file");
        }
        let mut b = [0u8; 8];
        let mut next = |rd: &mut BufReader<File>| -> Result<[u8; 8]> {
            rd.read_exact(&mut b)?;
            Ok(b)
        };
        let dimension = u64::from_le_bytes(next(&mut rd)?) as usize;
        let cmu = f64::from_le_bytes(next(&mut rd)?);
        let n = u64::from_le_bytes(next(&mut rd)?) as usize;
        let hash = u64::from_le_bytes(next(&mut rd)?);
        if dimension != grid.dimension() || cmu != mu || n != grid.len() || hash != grid.hash() {
            return config_err("kernel cache header does not match grid and mu");
        }
        let mut raw = vec![0u8; n * n * 8];
        rd.read_exact(&mut raw)?;
        let entries = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(KernelTable {
            dimension,
            mu,
            n,
            grid_hash: hash,
            entries,
        })
    }
}

fn cell_average(grid: &RadialGrid, mu: f64, i: usize) -> f64 {
    let r = grid.nodes();
    let n = grid.dimension();
    let a = if i == 0 {
        0.5 * r[0]
    } else {
        0.5 * (r[i - 1] + r[i])
    };
    let b = if i + 1 < r.len() {
        0.5 * (r[i] + r[i + 1])
    } else {
        r[i]
    };
    let ri = r[i];
    let tol = QuadTol {
        abs: 0.0,
        rel: 1e-9,
        max_panels: 200,
    };
    // s = r_i ∓ d·x², grading toward the singular point x = 0
    let side = |d: f64, sign: f64| {
        if d <= 0.0 {
            return 0.0;
        }
        integrate(
            |x: f64| {
                if x <= 0.0 {
                    return 0.0;
                }
                kernel_weight(n, mu, ri, ri + sign * d * x * x) * 2.0 * d * x
            },
            0.0,
            1.0,
            tol,
        )
    };
    (side(ri - a, -1.0) + side(b - ri, 1.0)) / (b - a)
}

/// Φ for the density |u|^p.
pub fn riesz_convolve(table: &KernelTable, grid: &RadialGrid, u: &[f64], p: f64) -> Vec<f64> {
    let rho: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
    table.potential(grid, &rho)
}

/// D_p(u) = ∬ |u(x)|^p |u(y)|^p |x−y|^{−μ} dx dy.
pub fn double_integral(table: &KernelTable, grid: &RadialGrid, u: &[f64], p: f64) -> f64 {
    let rho: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
    let phi = table.potential(grid, &rho);
    grid.integrate(&rho.iter().zip(&phi).map(|(a, b)| a * b).collect::<Vec<_>>())
}

/// Radial weight f(|x|) for [`pair_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Unit,
    Ball { radius: f64 },
    Exponential { rate: f64 },
}

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Profile::Unit => 1.0,
            Profile::Ball { radius } => {
                if r <= radius {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Exponential { rate } => (-rate * r).exp(),
        }
    }

    fn support(&self) -> f64 {
        match *self {
            Profile::Ball { radius } => radius,
            _ => f64::INFINITY,
        }
    }
}

/// Mean of f(|x|) over the sphere |x − R·e| = d.
pub fn spherical_mean(n: usize, profile: Profile, offset: f64, d: f64) -> f64 {
    let (near, far) = ((offset - d).abs(), offset + d);
    let scale = match profile {
        Profile::Unit => return 1.0,
        Profile::Ball { radius } => {
            if radius <= near {
                return 0.0;
            }
            if radius >= far {
                return 1.0;
            }
            radius
        }
        Profile::Exponential { rate } => 1.0 / rate,
    };
    if offset == 0.0 || d == 0.0 {
        return profile.eval(far);
    }
    let c = 4.0 * offset * d;
    let near2 = near * near;
    let angle = |dist: f64| 2.0 * ((dist * dist - near2) / c).clamp(0.0, 1.0).sqrt().asin();
    // Panel edges where the distance from the origin grows by multiples of
    // the profile's length scale, plus the ball edge.
    let pi = std::f64::consts::PI;
    let mut pts = vec![0.0];
    let mut step = 0.125 * scale;
    while near + step < far {
        pts.push(angle(near + step));
        step *= 2.0;
    }
    if let Profile::Ball { radius } = profile {
        pts.push(angle(radius));
    }
    pts.push(pi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let pw = n as i32 - 2;
    let integrand = |th: f64| {
        let sh = (0.5 * th).sin();
        profile.eval((near2 + c * sh * sh).sqrt()) * th.sin().powi(pw)
    };
    let total = integrate_pts(
        integrand,
        &pts,
        QuadTol {
            abs: 0.0,
            rel: 1e-10,
            max_panels: 400,
        },
    );
    total * sphere_area(n - 1) / sphere_area(n)
}

/// Node weights W_j with ∫ f(|x|)·φ(|x − R·e|) dx ≈ Σ_j W_j·φ(r_j) for a
/// radial φ that vanishes beyond `r_max`: the grid weight of r_j times the
/// spherical mean of f at distance r_j from R·e.
pub fn translated_weights(grid: &RadialGrid, profile: Profile, offset: f64) -> Result<Vec<f64>> {
    if !(offset >= 0.0 && offset.is_finite()) {
        return config_err(format!("offset R = {offset} must be non-negative"));
    }
    let n = grid.dimension();
    let area = grid.sphere_area();
    Ok(grid
        .nodes()
        .par_iter()
        .zip(grid.weights())
        .map(|(&d, &w)| area * w * spherical_mean(n, profile, offset, d))
        .collect())
}

/// ∫ f(|x|)·Ψ(g(|x − R·e|)) dx for a unit vector e, with g given at the
/// nodes and taken as 0 beyond `r_max`.
///
/// Integrating first over spheres centred at R·e turns the integral into the
/// grid rule for Ψ(g) weighted by [`spherical_mean`]; R = 0 is the grid rule
/// itself.
pub fn pair_integral(
    grid: &RadialGrid,
    profile: Profile,
    g_values: &[f64],
    psi: impl Fn(f64) -> f64 + Sync,
    offset: f64,
) -> Result<f64> {
    if g_values.len() != grid.len() {
        return config_err("field length does not match grid");
    }
    let weights = translated_weights(grid, profile, offset)?;
    Ok(apply_translated(
        &weights,
        profile,
        grid.dimension(),
        g_values,
        psi,
    ))
}

/// Σ_j W_j·(Ψ(g_j) − Ψ(0)) plus Ψ(0)·∫f, for weights from [`translated_weights`].
pub fn apply_translated(
    weights: &[f64],
    profile: Profile,
    n: usize,
    g_values: &[f64],
    psi: impl Fn(f64) -> f64,
) -> f64 {
    let psi0 = psi(0.0);
    let sum: f64 = weights
        .iter()
        .zip(g_values)
        .map(|(w, &g)| w * (psi(g) - psi0))
        .sum();
    // Ψ(0) may be nonzero; its contribution is f integrated over the whole space.
    let base = if psi0 != 0.0 {
        let lim = profile.support().min(1e3);
        psi0 * sphere_area(n)
            * integrate(
                |r| profile.eval(r) * r.powi(n as i32 - 1),
                0.0,
                lim,
                QuadTol::rel(1e-12),
            )
    } else {
        0.0
    };
    sum + base
}
