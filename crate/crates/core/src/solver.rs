//! Ground states of the limit problem by Nehari-constrained descent, decay
//! profile fits, and the translated-competitor experiments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{scale, Functional, FunctionalKind};
use crate::error::{config_err, Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::models::{AFamily, CoefficientModel, HFamily, ProblemParams};
use crate::numerics::{golden_max, least_squares};
use crate::riesz::{apply_translated, pair_integral, translated_weights, KernelTable, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// First trial step of the line search.
    pub step0: f64,
    pub armijo_c: f64,
    /// Stop when the weak residual falls below this value.
    pub grad_tol: f64,
    /// Rescale onto the Nehari manifold every this many iterations.
    pub nehari_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            step0: 1.0,
            armijo_c: 1e-4,
            grad_tol: 1e-6,
            nehari_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.nehari_every == 0 {
            return config_err("max_iters and nehari_every must be positive");
        }
        if !(self.step0 > 0.0 && self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return config_err("step0 must be positive and armijo_c in (0, 1)");
        }
        if !(self.grad_tol >= 1e-10) {
            return config_err(format!(
                "grad_tol = {} must be at least 1e-10",
                self.grad_tol
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub nodes_used: usize,
    pub intercept: f64,
    /// σ in log v ≈ c − σr − κ·log(1 + r).
    pub slope: f64,
    /// κ in the same model.
    pub algebraic_exp: f64,
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateResult {
    pub field: RadialField,
    pub energy_level: f64,
    pub residual: f64,
    pub nehari_value: f64,
    pub decay: Option<DecayFit>,
    pub iterations: usize,
    pub converged: bool,
    pub log: Vec<IterationRecord>,
}

/// L² norm of the strong-form residual of the limit equation, divided by
/// ‖v‖_{H¹}. The Dirichlet node is excluded.
pub fn weak_residual(f: &Functional, v: &[f64]) -> Result<f64> {
    let norm = f.grid.h1_norm(v);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let res = f.residual_field(v)?;
    Ok(f.grid
        .integrate(&res.iter().map(|x| x * x).collect::<Vec<_>>())
        .sqrt()
        / norm)
}

/// Solves (K + M)d = g/|S^{N−1}| with d = 0 at the Dirichlet node, giving
/// the H¹ representative of the discrete derivative g.
fn h1_representative(grid: &RadialGrid, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let m = n - 1;
    let k = grid.stiffness();
    let w = grid.weights();
    let s = grid.sphere_area();
    let mut diag: Vec<f64> = (0..m)
        .map(|i| w[i] + k[i] + if i > 0 { k[i - 1] } else { 0.0 })
        .collect();
    let mut rhs: Vec<f64> = g[..m].iter().map(|x| x / s).collect();
    // Thomas algorithm; off-diagonals are −k[i].
    for i in 1..m {
        let f = -k[i - 1] / diag[i - 1];
        diag[i] -= f * -k[i - 1];
        rhs[i] -= f * rhs[i - 1];
    }
    let mut d = vec![0.0; n];
    d[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        d[i] = (rhs[i] + k[i] * d[i + 1]) / diag[i];
    }
    d
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const LBFGS_MEMORY: usize = 12;

/// Limited-memory BFGS inverse-Hessian action with the H¹ solve as the
/// initial operator.
struct Lbfgs {
    capacity: usize,
    pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl Lbfgs {
    fn new(capacity: usize) -> Self {
        Lbfgs {
            capacity,
            pairs: std::collections::VecDeque::new(),
        }
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if !(sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt()) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    fn direction(&self, grid: &RadialGrid, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let mut r = h1_representative(grid, &q);
        if let Some((s, y, _)) = self.pairs.back() {
            let hy = h1_representative(grid, y);
            let gamma = dot(s, y) / dot(y, &hy);
            if gamma.is_finite() && gamma > 0.0 {
                r.iter_mut().for_each(|x| *x *= gamma);
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &r);
            for (ri, si) in r.iter_mut().zip(s) {
                *ri += (a - b) * si;
            }
        }
        r
    }
}

fn positive_part(v: &mut [f64]) {
    let last = v.len() - 1;
    v[last] = 0.0;
    for x in v.iter_mut() {
        *x = x.max(0.0);
    }
}

/// Default decay window [r_max/6, 2r_max/3].
pub fn default_decay_window(grid: &RadialGrid) -> (f64, f64) {
    (grid.r_max() / 6.0, 2.0 * grid.r_max() / 3.0)
}

/// Minimizes J^∞ on the Nehari manifold, starting from e^{−r²}.
pub fn find_ground_state(
    model: &CoefficientModel,
    params: &ProblemParams,
    table: &KernelTable,
    grid: &RadialGrid,
    config: &SolverConfig,
) -> Result<GroundStateResult> {
    let start = grid.sample(|r| (-r * r).exp()).into_values();
    find_ground_state_from(model, params, table, grid, config, &start)
}

pub fn find_ground_state_from(
    model: &CoefficientModel,
    params: &ProblemParams,
    table: &KernelTable,
    grid: &RadialGrid,
    config: &SolverConfig,
    start: &[f64],
) -> Result<GroundStateResult> {
    config.validate()?;
    let f = Functional::new(FunctionalKind::Limit, model, params, grid, table)?;
    let mut v = start.to_vec();
    if v.len() != grid.len() {
        return config_err("start field does not match the grid");
    }
    positive_part(&mut v);
    if !v.iter().any(|&x| x > 0.0) {
        return Err(Error::Degenerate("start field has no positive part".into()));
    }
    let t0 = f.nehari_scale(&v)?;
    v = scale(&v, t0);
    let (mut e, mut g) = f.energy_and_gradient(&v)?;
    let mut step = config.step0;
    let mut log = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = weak_residual(&f, &v)?;
    let mut memory = Lbfgs::new(LBFGS_MEMORY);
    for iter in 0..config.max_iters {
        iterations = iter;
        let nehari_value = dot(&g, &v);
        log.push(IterationRecord {
            iter,
            energy: e.total,
            residual,
            step,
        });
        if residual < config.grad_tol && nehari_value.abs() < 10.0 * config.grad_tol {
            converged = true;
            break;
        }
        let mut d = memory.direction(grid, &g);
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            memory.clear();
            d = h1_representative(grid, &g);
            slope = dot(&g, &d);
        }
        let mut trial_step = config.step0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut w: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a - trial_step * b).collect();
            positive_part(&mut w);
            if !w.iter().any(|&x| x > 0.0) {
                trial_step *= 0.5;
                continue;
            }
            if (iter + 1) % config.nehari_every == 0 {
                match f.nehari_scale_from(&w, 1.0, 1.1) {
                    Ok(t) => w = scale(&w, t),
                    Err(Error::Degenerate(_)) => {
                        trial_step *= 0.5;
                        continue;
                    }
                    Err(err) => return Err(err),
                }
            }
            let (ew, gw) = f.energy_and_gradient(&w)?;
            if ew.total <= e.total - config.armijo_c * trial_step * slope {
                accepted = Some((w, ew, gw));
                break;
            }
            trial_step *= 0.5;
        }
        let Some((w, ew, gw)) = accepted else {
            // No decrease is measurable any more.
            break;
        };
        let s_vec: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a - b).collect();
        let y_vec: Vec<f64> = gw.iter().zip(&g).map(|(a, b)| a - b).collect();
        memory.push(s_vec, y_vec);
        v = w;
        e = ew;
        g = gw;
        step = trial_step;
        residual = weak_residual(&f, &v)?;
        iterations = iter + 1;
    }
    if v.iter().all(|&x| x <= 0.0) {
        return Err(Error::Degenerate("iterate collapsed to zero".into()));
    }
    let nehari_value = dot(&g, &v);
    // A stalled line search still counts when the tolerances are already met.
    converged |= residual < config.grad_tol && nehari_value.abs() < 10.0 * config.grad_tol;
    let field = RadialField::new(grid, v)?;
    let decay = decay_fit(grid, &field, default_decay_window(grid)).ok();
    Ok(GroundStateResult {
        field,
        energy_level: e.total,
        residual,
        nehari_value,
        decay,
        iterations,
        converged,
        log,
    })
}

pub fn write_iterations_csv(path: &Path, log: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "energy", "residual", "step"])?;
    for r in log {
        w.write_record([
            r.iter.to_string(),
            format!("{:e}", r.energy),
            format!("{:e}", r.residual),
            format!("{:e}", r.step),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares fit of log v = c − σr − κ·log(1 + r) over the nodes in
/// the window.
pub fn decay_fit(grid: &RadialGrid, field: &RadialField, window: (f64, f64)) -> Result<DecayFit> {
    field.check(grid)?;
    let (lo, hi) = window;
    if !(lo < hi) || hi > 0.8 * grid.r_max() {
        return config_err(format!(
            "decay window [{lo}, {hi}] must satisfy lo < hi ≤ 0.8·r_max"
        ));
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (&r, &v) in grid.nodes().iter().zip(field.values()) {
        if r < lo || r > hi {
            continue;
        }
        if !(v > 0.0) {
            return config_err(format!(
                "field is not positive at r = {r} inside the decay window"
            ));
        }
        rows.push(vec![1.0, -r, -(1.0 + r).ln()]);
        rhs.push(v.ln());
    }
    if rows.len() < 20 {
        return config_err(format!(
            "decay window holds {} nodes, need at least 20",
            rows.len()
        ));
    }
    let c = least_squares(&rows, &rhs)?;
    let fit_residual = rows
        .iter()
        .zip(&rhs)
        .map(|(row, y)| (row.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() - y).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(DecayFit {
        window,
        nodes_used: rows.len(),
        intercept: c[0],
        slope: c[1],
        algebraic_exp: c[2],
        fit_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma45Row {
    pub offset: f64,
    /// ∫_{|x|≤1} w_R²
    pub ball_l2: f64,
    /// ∫ e^{−μ̂|x|} w_R²
    pub weighted_l2: f64,
    /// ∫ e^{−μ̂|x|} w_R^{p+1}
    pub weighted_power: f64,
    pub ratio_ball: f64,
    pub ratio_weighted: f64,
    pub ratio_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma45Table {
    pub mu_hat: f64,
    pub p: f64,
    pub rows: Vec<Lemma45Row>,
}

impl Lemma45Table {
    /// Smallest ratio of the ball integral relative to the first row.
    pub fn ball_floor(&self) -> f64 {
        let base = self.rows[0].ratio_ball;
        self.rows
            .iter()
            .map(|r| r.ratio_ball / base)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest weighted ratios relative to the first row.
    pub fn weighted_ceiling(&self) -> (f64, f64) {
        let (b2, b3) = (self.rows[0].ratio_weighted, self.rows[0].ratio_power);
        self.rows.iter().fold((0.0f64, 0.0f64), |(a, b), r| {
            (a.max(r.ratio_weighted / b2), b.max(r.ratio_power / b3))
        })
    }
}

/// Localized integrals of the translated field w(· − R·e), normalized by
/// R^{−(N−1)}e^{−2R} and e^{−min(μ̂, p+1)R}.
pub fn lemma45_check(
    grid: &RadialGrid,
    w: &RadialField,
    params: &ProblemParams,
    offsets: &[f64],
    mu_hat: f64,
) -> Result<Lemma45Table> {
    w.check(grid)?;
    if w.values().iter().any(|&x| x < 0.0) {
        return config_err("translated field must be nonnegative");
    }
    if !(mu_hat > 0.0) {
        return config_err("μ̂ must be positive");
    }
    let p = params.p_growth;
    let d = params.n();
    let mut rows = Vec::with_capacity(offsets.len());
    for &big_r in offsets {
        if !(1.0..=0.5 * grid.r_max()).contains(&big_r) {
            return config_err(format!("offset R = {big_r} must lie in [1, r_max/2]"));
        }
        let ball_l2 = pair_integral(
            grid,
            Profile::Ball { radius: 1.0 },
            w.values(),
            |g| g * g,
            big_r,
        )?;
        let weighted_l2 = pair_integral(
            grid,
            Profile::Exponential { rate: mu_hat },
            w.values(),
            |g| g * g,
            big_r,
        )?;
        let weighted_power = pair_integral(
            grid,
            Profile::Exponential { rate: mu_hat },
            w.values(),
            |g| g.powf(p + 1.0),
            big_r,
        )?;
        let algebraic = big_r.powf(-(d - 1.0)) * (-2.0 * big_r).exp();
        let exponential = (-(mu_hat.min(p + 1.0)) * big_r).exp();
        rows.push(Lemma45Row {
            offset: big_r,
            ball_l2,
            weighted_l2,
            weighted_power,
            ratio_ball: ball_l2 / algebraic,
            ratio_weighted: weighted_l2 / algebraic,
            ratio_power: weighted_power / exponential,
        });
    }
    if rows.is_empty() {
        return config_err("no offsets given");
    }
    Ok(Lemma45Table { mu_hat, p, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma52Row {
    pub offset: f64,
    pub t_hat: f64,
    pub sup_j: f64,
    /// J(t̂·w_R) − J^∞(t̂·w)
    pub correction: f64,
    pub j_inf: f64,
    pub margin: f64,
}

/// J(t·w_R) − J^∞(t·w) = ∫e^{−ν_h|x|}H̄(G⁻¹(t·w_R)) − ½k∫e^{−ν_a|x|}G⁻¹(t·w_R)²
/// for the exponential-well potential and the exponentially weighted h.
pub fn translation_correction(
    model: &CoefficientModel,
    grid: &RadialGrid,
    w: &[f64],
    t: f64,
    offset: f64,
) -> Result<f64> {
    CorrectionRule::new(model, grid, offset)?.eval(model, w, t)
}

/// Translated quadrature weights for the a- and h-profiles at one offset.
struct CorrectionRule {
    n: usize,
    k: f64,
    a_profile: Profile,
    h_profile: Profile,
    a_weights: Vec<f64>,
    /// `None` when both profiles decay at the same rate.
    h_weights: Option<Vec<f64>>,
}

impl CorrectionRule {
    fn new(model: &CoefficientModel, grid: &RadialGrid, offset: f64) -> Result<Self> {
        let AFamily::ExpWell { k, nu: nu_a } = model.a_family;
        let HFamily::ExpWeightedPower { nu: nu_h, .. } = model.h_family;
        let a_profile = Profile::Exponential { rate: nu_a };
        let h_profile = Profile::Exponential { rate: nu_h };
        let a_weights = translated_weights(grid, a_profile, offset)?;
        let h_weights = if nu_a == nu_h {
            None
        } else {
            Some(translated_weights(grid, h_profile, offset)?)
        };
        Ok(CorrectionRule {
            n: grid.dimension(),
            k,
            a_profile,
            h_profile,
            a_weights,
            h_weights,
        })
    }

    fn eval(&self, model: &CoefficientModel, w: &[f64], t: f64) -> Result<f64> {
        if w.len() != self.a_weights.len() {
            return config_err("field length does not match grid");
        }
        let k = self.k;
        let ginv = |g: f64| {
            if g <= 0.0 {
                0.0
            } else {
                model.g_inverse(t * g).unwrap_or(f64::NAN)
            }
        };
        let f_part = |g: f64| model.hbar_eval(ginv(g)).1;
        let a_part = |g: f64| 0.5 * k * ginv(g).powi(2);
        let value = match &self.h_weights {
            None => apply_translated(&self.a_weights, self.a_profile, self.n, w, |g| {
                f_part(g) - a_part(g)
            }),
            Some(hw) => {
                apply_translated(hw, self.h_profile, self.n, w, f_part)
                    - apply_translated(&self.a_weights, self.a_profile, self.n, w, a_part)
            }
        };
        if !value.is_finite() {
            return Err(Error::Numeric(
                "translation correction is not finite".into(),
            ));
        }
        Ok(value)
    }
}

/// sup_t J(t·w_R) against J^∞(w) for each offset R.
pub fn lemma52_experiment(
    model: &CoefficientModel,
    params: &ProblemParams,
    table: &KernelTable,
    grid: &RadialGrid,
    w: &RadialField,
    offsets: &[f64],
) -> Result<Vec<Lemma52Row>> {
    w.check(grid)?;
    let f = Functional::new(FunctionalKind::Limit, model, params, grid, table)?;
    let wv = w.values();
    let ray = f.ray_max(wv, &[])?;
    let j_inf = ray.sup_value;
    let mut rows = Vec::with_capacity(offsets.len());
    for &big_r in offsets {
        if !(big_r >= 0.0 && big_r <= 0.5 * grid.r_max()) {
            return config_err(format!("offset R = {big_r} exceeds half the grid radius"));
        }
        let rule = CorrectionRule::new(model, grid, big_r)?;
        let mut err = None;
        let mut phi = |t: f64| -> f64 {
            let r = f
                .energy(&scale(wv, t))
                .and_then(|e| Ok(e.total + rule.eval(model, wv, t)?));
            r.unwrap_or_else(|e| {
                err.get_or_insert(e);
                f64::NEG_INFINITY
            })
        };
        let c = ray.t_star;
        let (t_hat, sup_j) = golden_max(&mut phi, 0.9 * c, 1.1 * c, 1e-9);
        if let Some(e) = err {
            return Err(e);
        }
        let correction = rule.eval(model, wv, t_hat)?;
        let base = f.energy(&scale(wv, t_hat))?.total;
        rows.push(Lemma52Row {
            offset: big_r,
            t_hat,
            sup_j,
            correction,
            j_inf,
            margin: (j_inf - base) - correction,
        });
    }
    Ok(rows)
}
