//! Radial discretization of ℝ^N.
//!
//! Nodes are strictly positive with the last node at `r_max`; the origin is
//! implicit. Quadrature is the composite trapezoid rule on `f(r)·r^{N−1}`.
//! The kinetic form is the exact Dirichlet integral of the piecewise-linear
//! interpolant, constant on [0, r₀]. With this choice no grid function has a
//! discrete Sobolev quotient below the continuum constant, so critical
//! nonlinearities cannot collapse onto the innermost cell.
//!
//! Two Laplacians are provided: a pointwise finite-difference one and the
//! variational −M⁻¹K, which the energy residual uses.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_err, Error, Result};
use crate::numerics::bracketed_root;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Grading {
    Uniform,
    /// Spacing grows geometrically from `first_spacing` at the origin.
    Geometric {
        first_spacing: f64,
    },
}

/// Surface area of the unit sphere S^{d−1} in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dimension: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    stiffness: Vec<f64>,
    sphere_area: f64,
    hash: u64,
}

impl RadialGrid {
    pub fn new(dimension: usize, r_max: f64, n_nodes: usize, grading: Grading) -> Result<Self> {
        if dimension < 3 {
            return config_err(format!("grid dimension {dimension} must be at least 3"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return config_err(format!("r_max = {r_max} must be positive"));
        }
        if n_nodes < 16 {
            return config_err(format!("n_nodes = {n_nodes} must be at least 16"));
        }
        let nodes = match grading {
            Grading::Uniform => (1..=n_nodes)
                .map(|i| r_max * i as f64 / n_nodes as f64)
                .collect(),
            Grading::Geometric { first_spacing } => geometric_nodes(r_max, n_nodes, first_spacing)?,
        };
        Self::from_nodes(dimension, nodes)
    }

    /// Builds a grid on arbitrary ascending positive nodes.
    pub fn from_nodes(dimension: usize, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || !(nodes[0] > 0.0) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return config_err("grid nodes must be positive and strictly increasing");
        }
        let n = nodes.len();
        let d = dimension as f64;
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let left = if i == 0 {
                nodes[0]
            } else {
                nodes[i] - nodes[i - 1]
            };
            let right = if i + 1 < n {
                nodes[i + 1] - nodes[i]
            } else {
                0.0
            };
            weights[i] = 0.5 * (left + right) * nodes[i].powi(dimension as i32 - 1);
        }
        let stiffness = nodes
            .windows(2)
            .map(|w| {
                // (b^N − a^N)/(b − a) summed termwise to avoid cancellation
                let (a, b) = (w[0], w[1]);
                let quotient: f64 = (0..dimension)
                    .map(|j| a.powi(j as i32) * b.powi((dimension - 1 - j) as i32))
                    .sum();
                quotient / (d * (b - a))
            })
            .collect();
        let mut hasher = Sha256::new();
        hasher.update((dimension as u64).to_le_bytes());
        for r in &nodes {
            hasher.update(r.to_bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        Ok(RadialGrid {
            dimension,
            nodes,
            weights,
            stiffness,
            sphere_area: sphere_area(dimension),
            hash: u64::from_le_bytes(head),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    /// Trapezoid weights for ∫₀^{r_max} f(r)·r^{N−1} dr.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// Face coefficients k_{i+½}: kinetic energy is ½|S^{N−1}|·Σ k (u_{i+1} − u_i)².
    pub fn stiffness(&self) -> &[f64] {
        &self.stiffness
    }
    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }
    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("grid is never empty")
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn hash(&self) -> u64 {
        self.hash
    }
    pub fn min_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(self.nodes[0], f64::min)
    }

    /// ∫_{ℝ^N} f(|x|) dx for nodal values f.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.sphere_area
            * self
                .weights
                .iter()
                .zip(values)
                .map(|(w, f)| w * f)
                .sum::<f64>()
    }

    /// ∫ f(|x|) dx for a function of the radius.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.sphere_area
            * self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&r, w)| w * f(r))
                .sum::<f64>()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> RadialField {
        RadialField {
            grid_hash: self.hash,
            values: self.nodes.iter().map(|&r| f(r)).collect(),
        }
    }

    pub fn zeros(&self) -> RadialField {
        RadialField {
            grid_hash: self.hash,
            values: vec![0.0; self.len()],
        }
    }

    /// K·u without the sphere-area factor (K is positive semidefinite, so
    /// this is −Δu weighted by the nodal mass).
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (i, k) in self.stiffness.iter().enumerate() {
            let flux = k * (u[i + 1] - u[i]);
            out[i] -= flux;
            out[i + 1] += flux;
        }
        out
    }

    /// ½∫|∇u|² for nodal values.
    pub fn kinetic(&self, u: &[f64]) -> f64 {
        0.5 * self.sphere_area
            * self
                .stiffness
                .iter()
                .enumerate()
                .map(|(i, k)| k * (u[i + 1] - u[i]).powi(2))
                .sum::<f64>()
    }

    pub fn norms(&self, field: &RadialField, q: f64) -> Norms {
        let u = &field.values;
        let l2 = self
            .integrate(&u.iter().map(|v| v * v).collect::<Vec<_>>())
            .sqrt();
        let lq = self
            .integrate(&u.iter().map(|v| v.abs().powf(q)).collect::<Vec<_>>())
            .powf(1.0 / q);
        let grad_l2 = (2.0 * self.kinetic(u)).sqrt();
        Norms {
            l2,
            lq,
            grad_l2,
            h1: (l2 * l2 + grad_l2 * grad_l2).sqrt(),
        }
    }

    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        let l2sq = self.integrate(&u.iter().map(|v| v * v).collect::<Vec<_>>());
        (l2sq + 2.0 * self.kinetic(u)).sqrt()
    }

    /// u″ + (N−1)u′/r by three-point finite differences on the graded
    /// nodes. The origin uses the even reflection u(−r₀) = u(r₀) and the last
    /// node the one-sided quadratic through the final three nodes. The
    /// stencils are exact on quadratics.
    pub fn laplacian(&self, field: &RadialField) -> RadialField {
        let r = &self.nodes;
        let u = &field.values;
        let n = r.len();
        let d = self.dimension as f64 - 1.0;
        let stencil = |i: usize, (xl, ul): (f64, f64), (xr, ur): (f64, f64)| {
            let (hl, hr) = (r[i] - xl, xr - r[i]);
            let first = (-hr / (hl * (hl + hr))) * ul
                + (hr - hl) / (hl * hr) * u[i]
                + hl / (hr * (hl + hr)) * ur;
            let second = 2.0 * (ul / (hl * (hl + hr)) - u[i] / (hl * hr) + ur / (hr * (hl + hr)));
            second + d * first / r[i]
        };
        let mut values = Vec::with_capacity(n);
        values.push(stencil(0, (-r[0], u[0]), (r[1], u[1])));
        for i in 1..n - 1 {
            values.push(stencil(i, (r[i - 1], u[i - 1]), (r[i + 1], u[i + 1])));
        }
        // Quadratic through the last three nodes, differentiated at r_{n−1}.
        let (a, b, c) = (r[n - 3], r[n - 2], r[n - 1]);
        let (ua, ub, uc) = (u[n - 3], u[n - 2], u[n - 1]);
        let second =
            2.0 * (ua / ((a - b) * (a - c)) + ub / ((b - a) * (b - c)) + uc / ((c - a) * (c - b)));
        let first = ua * (c - b) / ((a - b) * (a - c))
            + ub * (c - a) / ((b - a) * (b - c))
            + uc * (2.0 * c - a - b) / ((c - a) * (c - b));
        values.push(second + d * first / c);
        RadialField {
            grid_hash: self.hash,
            values,
        }
    }

    /// −M⁻¹K u: the Laplacian whose pairing with test fields reproduces the
    /// discrete Dirichlet form exactly. The last node has no outer flux.
    pub fn variational_laplacian(&self, field: &RadialField) -> RadialField {
        let ku = self.apply_stiffness(&field.values);
        RadialField {
            grid_hash: self.hash,
            values: ku.iter().zip(&self.weights).map(|(k, w)| -k / w).collect(),
        }
    }

    /// Monotone cubic interpolant of nodal values, evenly extended to r = 0
    /// and zero beyond `r_max`.
    pub fn interpolant<'a>(&'a self, values: &'a [f64]) -> Interpolant<'a> {
        let r = &self.nodes;
        let n = r.len();
        let secant: Vec<f64> = (0..n - 1)
            .map(|i| (values[i + 1] - values[i]) / (r[i + 1] - r[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        for i in 1..n - 1 {
            let (a, b) = (secant[i - 1], secant[i]);
            if a * b > 0.0 {
                let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        slopes[0] = secant[0];
        slopes[n - 1] = secant[n - 2];
        Interpolant {
            grid: self,
            values,
            slopes,
        }
    }
}

fn geometric_nodes(r_max: f64, n: usize, first: f64) -> Result<Vec<f64>> {
    if !(first > 0.0) || first * n as f64 >= r_max {
        return config_err(format!(
            "geometric grading needs 0 < first_spacing < r_max/n (got {first})"
        ));
    }
    let nf = n as f64;
    let target = (r_max / first).ln();
    // ln Σ_{k<n} q^k − ln(r_max/first), increasing in q > 1
    let f = |q: f64| {
        let lq = q.ln();
        (nf * lq).exp_m1().ln() - (q - 1.0).ln() - target
    };
    let hi = (r_max / first).powf(1.0 / (nf - 1.0)).max(1.0 + 1e-12);
    let lo = 1.0 + 1e-14;
    let q = bracketed_root(f, lo, hi, 1e-15, 400)
        .map_err(|e| Error::Config(format!("geometric grading: {e}")))?;
    let mut nodes = Vec::with_capacity(n);
    let mut r = 0.0;
    let mut h = first;
    for _ in 0..n {
        r += h;
        nodes.push(r);
        h *= q;
    }
    let scale = r_max / r;
    for v in nodes.iter_mut() {
        *v *= scale;
    }
    nodes[n - 1] = r_max;
    Ok(nodes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub lq: f64,
    pub grad_l2: f64,
    pub h1: f64,
}

/// Values of a radial function at the nodes of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid_hash: u64,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: &RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return config_err(format!(
                "field has {} values, grid has {}",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return config_err(format!("non-finite field value at node {i}"));
        }
        Ok(RadialField {
            grid_hash: grid.hash,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid_hash(&self) -> u64 {
        self.grid_hash
    }

    pub fn check(&self, grid: &RadialGrid) -> Result<()> {
        if self.grid_hash != grid.hash {
            return config_err("field does not belong to this grid");
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> RadialField {
        RadialField {
            grid_hash: self.grid_hash,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RadialField {
        RadialField {
            grid_hash: self.grid_hash,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn write_csv(&self, grid: &RadialGrid, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["radius", "value"])?;
        for (r, v) in grid.nodes().iter().zip(&self.values) {
            w.write_record([format!("{r:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a two-column CSV whose radii must coincide with the grid nodes.
    pub fn read_csv(grid: &RadialGrid, path: &Path) -> Result<RadialField> {
        let mut rd = csv::Reader::from_path(path)?;
        let mut values = Vec::with_capacity(grid.len());
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("bad CSV row {}", i + 2)))
            };
            let (r, v) = (parse(0)?, parse(1)?);
            let node = *grid
                .nodes()
                .get(i)
                .ok_or_else(|| Error::Config("CSV has more rows than the grid".into()))?;
            if (r - node).abs() > 1e-12 * node.max(1.0) {
                return config_err(format!("CSV radius {r} does not match grid node {node}"));
            }
            values.push(v);
        }
        RadialField::new(grid, values)
    }
}

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes.
pub struct Interpolant<'a> {
    grid: &'a RadialGrid,
    values: &'a [f64],
    slopes: Vec<f64>,
}

impl Interpolant<'_> {
    pub fn eval(&self, r: f64) -> f64 {
        let x = &self.grid.nodes;
        let y = self.values;
        let n = x.len();
        if r > x[n - 1] {
            return 0.0;
        }
        if r <= x[0] {
            // even quadratic through the first two nodes
            let (a, b) = (x[0] * x[0], x[1] * x[1]);
            return y[0] + (y[1] - y[0]) * (r * r - a) / (b - a);
        }
        let i = x.partition_point(|&v| v < r).clamp(1, n - 1) - 1;
        let h = x[i + 1] - x[i];
        let t = (r - x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        y[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + h * self.slopes[i] * (t3 - 2.0 * t2 + t)
            + y[i + 1] * (3.0 * t2 - 2.0 * t3)
            + h * self.slopes[i + 1] * (t3 - t2)
    }
}
