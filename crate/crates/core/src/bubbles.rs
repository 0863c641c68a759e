//! Talenti bubbles, their cut-off versions, the Sobolev/HLS constants and
//! the threshold experiment for the limit functional.
//!
//! The bubble is normalized so that −ΔU = U^{2*−1} and
//! ‖∇U‖² = ‖U‖^{2*}_{2*} = S^{N/2}. With β̂ = 1 its core radius is
//! λ = ε·√S.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::energy::{Functional, FunctionalKind};
use crate::error::{config_err, Error, Result};
use crate::grid::{Grading, RadialField, RadialGrid};
use crate::models::{CoefficientModel, ProblemParams};
use crate::numerics::{golden_max, integrate_to_inf, least_squares, QuadTol};
use crate::riesz::{double_integral, KernelTable};

/// Scale constant of the bubble profile (α̂(β̂² + |x|²)^{−(N−2)/2}).
pub const BETA_HAT: f64 = 1.0;

/// Sharp Sobolev constant of H¹ ⊂ L^{2*}.
pub fn sobolev_constant(n: usize) -> f64 {
    let d = n as f64;
    std::f64::consts::PI * d * (d - 2.0) * (gamma(0.5 * d) / gamma(d)).powf(2.0 / d)
}

/// Sharp Hardy–Littlewood–Sobolev constant for f = g, exponent 2N/(2N−μ).
pub fn hls_constant(n: usize, mu: f64) -> f64 {
    let d = n as f64;
    std::f64::consts::PI.powf(0.5 * mu) * gamma(0.5 * d - 0.5 * mu) / gamma(d - 0.5 * mu)
        * (gamma(0.5 * d) / gamma(d)).powf(-1.0 + mu / d)
}

/// Core radius λ of U_ε.
pub fn bubble_scale(n: usize, epsilon: f64) -> f64 {
    epsilon * BETA_HAT * sobolev_constant(n).sqrt()
}

fn bubble_amplitude(n: usize) -> f64 {
    let d = n as f64;
    (d * (d - 2.0)).powf(0.25 * (d - 2.0))
}

/// U(r) = (N(N−2))^{(N−2)/4}·(λ/(λ² + r²))^{(N−2)/2}.
pub fn bubble_value(n: usize, lambda: f64, r: f64) -> f64 {
    let d = n as f64;
    bubble_amplitude(n) * (lambda / (lambda * lambda + r * r)).powf(0.5 * (d - 2.0))
}

pub fn bubble_derivative(n: usize, lambda: f64, r: f64) -> f64 {
    let d = n as f64;
    -bubble_amplitude(n)
        * (d - 2.0)
        * lambda.powf(0.5 * (d - 2.0))
        * r
        * (lambda * lambda + r * r).powf(-0.5 * d)
}

pub fn talenti_bubble(grid: &RadialGrid, epsilon: f64) -> Result<RadialField> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return config_err(format!("bubble scale ε = {epsilon} must be positive"));
    }
    let n = grid.dimension();
    let lambda = bubble_scale(n, epsilon);
    Ok(grid.sample(|r| bubble_value(n, lambda, r)))
}

/// Radius of the inner ball where the cutoff equals 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cutoff {
    /// ρ = ε^τ with τ ∈ (1/2, 1).
    Scaled { tau: f64 },
    /// ρ independent of ε.
    Fixed { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleSpec {
    pub epsilon: f64,
    pub cutoff: Cutoff,
}

impl BubbleSpec {
    pub fn scaled(epsilon: f64, tau: f64) -> Self {
        BubbleSpec {
            epsilon,
            cutoff: Cutoff::Scaled { tau },
        }
    }

    pub fn fixed(epsilon: f64, radius: f64) -> Self {
        BubbleSpec {
            epsilon,
            cutoff: Cutoff::Fixed { radius },
        }
    }

    pub fn rho(&self) -> f64 {
        match self.cutoff {
            Cutoff::Scaled { tau } => self.epsilon.powf(tau),
            Cutoff::Fixed { radius } => radius,
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self.cutoff {
            Cutoff::Scaled { tau } => Some(tau),
            Cutoff::Fixed { .. } => None,
        }
    }

    pub fn validate(&self, grid: &RadialGrid) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return config_err(format!("ε = {} must be positive", self.epsilon));
        }
        match self.cutoff {
            Cutoff::Scaled { tau } if !(tau > 0.5 && tau < 1.0) => {
                return config_err(format!("τ = {tau} must lie in (1/2, 1)"));
            }
            Cutoff::Fixed { radius } if !(radius > 0.0) => {
                return config_err(format!("cutoff radius {radius} must be positive"));
            }
            _ => {}
        }
        let support = 2.0 * self.rho();
        if support > grid.r_max() {
            return config_err(format!(
                "cutoff support {support} exceeds r_max = {}",
                grid.r_max()
            ));
        }
        let floor = 10.0 * grid.min_spacing();
        if self.epsilon < floor {
            return config_err(format!(
                "ε = {} is below the resolution floor {floor:e}",
                self.epsilon
            ));
        }
        Ok(())
    }
}

/// C² quintic blend: 1 on [0, ρ], 0 on [2ρ, ∞).
pub fn cutoff_eta(r: f64, rho: f64) -> f64 {
    let x = ((r - rho) / rho).clamp(0.0, 1.0);
    1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

pub fn cutoff_eta_derivative(r: f64, rho: f64) -> f64 {
    let x = (r - rho) / rho;
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -30.0 * x * x * (1.0 - x) * (1.0 - x) / rho
}

/// u_ε = η·U_ε.
pub fn cutoff_bubble(grid: &RadialGrid, spec: &BubbleSpec) -> Result<RadialField> {
    spec.validate(grid)?;
    let n = grid.dimension();
    let lambda = bubble_scale(n, spec.epsilon);
    let rho = spec.rho();
    Ok(grid.sample(|r| cutoff_eta(r, rho) * bubble_value(n, lambda, r)))
}

/// ‖∇u‖²/‖u‖²_{2*}.
pub fn sobolev_quotient(grid: &RadialGrid, u: &[f64]) -> f64 {
    let ts = 2.0 * grid.dimension() as f64 / (grid.dimension() as f64 - 2.0);
    let lq = grid.integrate(&u.iter().map(|v| v.abs().powf(ts)).collect::<Vec<_>>());
    2.0 * grid.kinetic(u) / lq.powf(2.0 / ts)
}

/// ‖∇u‖²/D_{2*_μ}(u)^{1/2*_μ}.
pub fn hls_quotient(table: &KernelTable, grid: &RadialGrid, u: &[f64]) -> f64 {
    let d = grid.dimension() as f64;
    let tsm = (2.0 * d - table.mu()) / (d - 2.0);
    2.0 * grid.kinetic(u) / double_integral(table, grid, u, tsm).powf(1.0 / tsm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedValue {
    pub value: f64,
    pub method: String,
}

impl TaggedValue {
    fn new(value: f64, method: &str) -> Self {
        TaggedValue {
            value,
            method: method.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub s: TaggedValue,
    pub s_closed_form: TaggedValue,
    pub c_n_mu: TaggedValue,
    pub c_n_mu_closed_form: TaggedValue,
    pub s_h: TaggedValue,
    pub s_h_direct: TaggedValue,
    pub c_star_inf: TaggedValue,
    pub warnings: Vec<String>,
}

impl ConstantsReport {
    /// |S_H(relation) − S_H(direct)|/S_H(direct).
    pub fn s_h_discrepancy(&self) -> f64 {
        (self.s_h.value - self.s_h_direct.value).abs() / self.s_h_direct.value
    }
}

/// c*_∞ = (1/α)(½ − 1/(2·2*_μ))(β²S_H/α)^{2*_μ/(2*_μ−1)}.
pub fn threshold_level(params: &ProblemParams, s_h: f64) -> f64 {
    let tsm = params.two_star_mu();
    let (a, b) = (params.alpha, params.beta);
    (0.5 - 0.5 / tsm) / a * (b * b * s_h / a).powf(tsm / (tsm - 1.0))
}

/// Evaluates S, C(N, μ), S_H and c*_∞ on a unit-core bubble (λ = 1).
/// Contributions of the bubble beyond r_max are added analytically.
pub fn constants(
    params: &ProblemParams,
    grid: &RadialGrid,
    table: &KernelTable,
) -> Result<ConstantsReport> {
    table.check(grid, params.mu)?;
    let n = grid.dimension();
    if n != params.dimension {
        return config_err("grid dimension differs from problem dimension");
    }
    let d = n as f64;
    let mu = params.mu;
    let ts = params.two_star();
    let tsm = params.two_star_mu();
    let mut warnings = Vec::new();
    if grid.len() < 2048 {
        warnings.push(format!(
            "grid has {} nodes; constants need at least 2048 for 1e-5 accuracy",
            grid.len()
        ));
    }
    let r_max = grid.r_max();
    if r_max < 20.0 {
        warnings.push(format!(
            "r_max = {r_max} is small compared with the unit bubble core"
        ));
    }
    let area = grid.sphere_area();
    let u = grid.sample(|r| bubble_value(n, 1.0, r)).into_values();
    let tol = QuadTol::rel(1e-12);
    let grad_tail = area
        * integrate_to_inf(
            |r| bubble_derivative(n, 1.0, r).powi(2) * r.powi(n as i32 - 1),
            r_max,
            tol,
        );
    let lq_tail = area
        * integrate_to_inf(
            |r| bubble_value(n, 1.0, r).powf(ts) * r.powi(n as i32 - 1),
            r_max,
            tol,
        );
    let grad = 2.0 * grid.kinetic(&u) + grad_tail;
    let lq = grid.integrate(&u.iter().map(|v| v.powf(ts)).collect::<Vec<_>>()) + lq_tail;
    // Far field of the potential is M·r^{−μ} with M the total mass of U^{2*_μ}.
    let mass = grid.integrate(&u.iter().map(|v| v.powf(tsm)).collect::<Vec<_>>());
    let d_tail = 2.0
        * area
        * mass
        * integrate_to_inf(
            |r| bubble_value(n, 1.0, r).powf(tsm) * r.powf(d - 1.0 - mu),
            r_max,
            tol,
        );
    let dd = double_integral(table, grid, &u, tsm) + d_tail;
    let s = grad / lq.powf(2.0 / ts);
    let c = dd / lq.powf(2.0 * tsm / ts);
    let s_h = s / c.powf(1.0 / tsm);
    let s_h_direct = grad / dd.powf(1.0 / tsm);
    let s_closed = sobolev_constant(n);
    let c_closed = hls_constant(n, mu);
    let rel = (s - s_closed).abs() / s_closed;
    if rel > 1e-4 {
        warnings.push(format!(
            "numerical S differs from the closed form by {rel:.2e}"
        ));
    }
    Ok(ConstantsReport {
        s: TaggedValue::new(s, "Rayleigh quotient of the bubble"),
        s_closed_form: TaggedValue::new(s_closed, "closed form πN(N−2)(Γ(N/2)/Γ(N))^{2/N}"),
        c_n_mu: TaggedValue::new(c, "D(U)/‖U‖^{2·2*_μ}_{2*} on the bubble"),
        c_n_mu_closed_form: TaggedValue::new(c_closed, "sharp HLS constant (diagonal case)"),
        s_h: TaggedValue::new(s_h, "S/C(N,μ)^{1/2*_μ}"),
        s_h_direct: TaggedValue::new(s_h_direct, "‖∇U‖²/D(U)^{1/2*_μ}"),
        c_star_inf: TaggedValue::new(
            threshold_level(params, s_h_direct),
            "closed form in α, β, S_H",
        ),
        warnings,
    })
}

/// Exponent regime of ∫|u_ε|^t relative to N/(N−2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TRegime {
    Above,
    Critical,
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub expected: f64,
    pub slope: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TExponentFit {
    pub t: f64,
    pub regime: TRegime,
    pub plain: SlopeFit,
    /// Fit of ∫|u_ε|^t/|ln ε|; populated for the critical exponent.
    pub log_corrected: Option<SlopeFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop22Row {
    pub epsilon: f64,
    pub gradient_deficit: f64,
    pub lstar_deficit: f64,
    pub t_integrals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop22Table {
    pub cutoff: Cutoff,
    pub rows: Vec<Prop22Row>,
    pub gradient: SlopeFit,
    pub lstar: SlopeFit,
    pub t_fits: Vec<TExponentFit>,
}

impl Prop22Table {
    /// One row per ε: the two deficits followed by ∫|u_ε|^t for each t.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec![
            "epsilon".to_string(),
            "gradient_deficit".into(),
            "lstar_deficit".into(),
        ];
        header.extend(self.t_fits.iter().map(|f| format!("t_{}", f.t)));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut record = vec![
                format!("{:e}", r.epsilon),
                format!("{:e}", r.gradient_deficit),
                format!("{:e}", r.lstar_deficit),
            ];
            record.extend(r.t_integrals.iter().map(|v| format!("{v:e}")));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn loglog_fit(eps: &[f64], values: &[f64], expected: f64) -> Result<SlopeFit> {
    let rows: Vec<Vec<f64>> = eps.iter().map(|e| vec![1.0, e.ln()]).collect();
    let rhs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("zero value in a log–log fit".into()));
    }
    let c = least_squares(&rows, &rhs)?;
    let residual = rows
        .iter()
        .zip(&rhs)
        .map(|(row, y)| (c[0] + c[1] * row[1] - y).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(SlopeFit {
        expected,
        slope: c[1],
        residual,
    })
}

/// ε-asymptotics of the cut-off bubble: gradient and L^{2*} deficits
/// relative to S^{N/2}, and ∫|u_ε|^t for each requested t.
///
/// Deficits are evaluated as differences against the uncut bubble on the
/// same grid (nodes inside B_ρ cancel exactly) minus the bubble's own
/// contribution beyond r_max.
pub fn prop22_table(
    grid: &RadialGrid,
    cutoff: Cutoff,
    eps_list: &[f64],
    t_exponents: &[f64],
) -> Result<Prop22Table> {
    if eps_list.len() < 2 {
        return config_err("at least two ε values are needed for a slope");
    }
    let n = grid.dimension();
    let d = n as f64;
    let ts = 2.0 * d / (d - 2.0);
    let area = grid.sphere_area();
    let tol = QuadTol::rel(1e-12);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &epsilon in eps_list {
        let spec = BubbleSpec { epsilon, cutoff };
        let u = cutoff_bubble(grid, &spec)?.into_values();
        let lambda = bubble_scale(n, epsilon);
        let big = grid.sample(|r| bubble_value(n, lambda, r)).into_values();
        let k = grid.stiffness();
        let grad_grid: f64 = area
            * (0..k.len())
                .map(|i| k[i] * ((u[i + 1] - u[i]).powi(2) - (big[i + 1] - big[i]).powi(2)))
                .sum::<f64>();
        let r_max = grid.r_max();
        let grad_tail = area
            * integrate_to_inf(
                |r| bubble_derivative(n, lambda, r).powi(2) * r.powf(d - 1.0),
                r_max,
                tol,
            );
        let lq_grid = grid.integrate(
            &u.iter()
                .zip(&big)
                .map(|(a, b)| a.abs().powf(ts) - b.abs().powf(ts))
                .collect::<Vec<_>>(),
        );
        let lq_tail = area
            * integrate_to_inf(
                |r| bubble_value(n, lambda, r).powf(ts) * r.powf(d - 1.0),
                r_max,
                tol,
            );
        let t_integrals = t_exponents
            .iter()
            .map(|&t| grid.integrate(&u.iter().map(|v| v.abs().powf(t)).collect::<Vec<_>>()))
            .collect();
        rows.push(Prop22Row {
            epsilon,
            gradient_deficit: grad_grid - grad_tail,
            lstar_deficit: lq_grid - lq_tail,
            t_integrals,
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let gradient = loglog_fit(
        &eps,
        &rows.iter().map(|r| r.gradient_deficit).collect::<Vec<_>>(),
        d - 2.0,
    )?;
    let lstar = loglog_fit(
        &eps,
        &rows.iter().map(|r| r.lstar_deficit).collect::<Vec<_>>(),
        d,
    )?;
    let critical = d / (d - 2.0);
    let mut t_fits = Vec::with_capacity(t_exponents.len());
    for (j, &t) in t_exponents.iter().enumerate() {
        let values: Vec<f64> = rows.iter().map(|r| r.t_integrals[j]).collect();
        let half = 0.5 * t * (d - 2.0);
        let (regime, expected) = if (t - critical).abs() < 1e-12 {
            (TRegime::Critical, half)
        } else if t > critical {
            (TRegime::Above, d - half)
        } else {
            (TRegime::Below, half)
        };
        let plain = loglog_fit(&eps, &values, expected)?;
        let log_corrected = if regime == TRegime::Critical {
            let scaled: Vec<f64> = values
                .iter()
                .zip(&eps)
                .map(|(v, e)| v / e.ln().abs())
                .collect();
            Some(loglog_fit(&eps, &scaled, expected)?)
        } else {
            None
        };
        t_fits.push(TExponentFit {
            t,
            regime,
            plain,
            log_corrected,
        });
    }
    Ok(Prop22Table {
        cutoff,
        rows,
        gradient,
        lstar,
        t_fits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlsBoundRow {
    pub epsilon: f64,
    /// D_{2*_μ}(u_ε)
    pub value: f64,
    /// D_{2*_μ}(U_ε) − D_{2*_μ}(u_ε)
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlsBoundFit {
    pub limit: f64,
    pub rows: Vec<HlsBoundRow>,
    pub fit: SlopeFit,
}

/// Compares D_{2*_μ}(u_ε) with its ε-independent limit C(N,μ)^{N/2}S_H^{(2N−μ)/2}
/// and fits the deficit exponent.
pub fn hls_lower_bound_fit(
    params: &ProblemParams,
    grid: &RadialGrid,
    table: &KernelTable,
    cutoff: Cutoff,
    eps_list: &[f64],
) -> Result<HlsBoundFit> {
    table.check(grid, params.mu)?;
    let n = grid.dimension();
    let d = n as f64;
    let tsm = params.two_star_mu();
    let area = grid.sphere_area();
    let c = hls_constant(n, params.mu);
    let s_h = sobolev_constant(n) / c.powf(1.0 / tsm);
    let limit = c.powf(0.5 * d) * s_h.powf(0.5 * (2.0 * d - params.mu));
    let mut rows = Vec::new();
    for &epsilon in eps_list {
        let u = cutoff_bubble(grid, &BubbleSpec { epsilon, cutoff })?.into_values();
        let lambda = bubble_scale(n, epsilon);
        let big = grid.sample(|r| bubble_value(n, lambda, r)).into_values();
        let value = double_integral(table, grid, &u, tsm);
        let mass = grid.integrate(&big.iter().map(|v| v.powf(tsm)).collect::<Vec<_>>());
        let tail = 2.0
            * area
            * mass
            * integrate_to_inf(
                |r| bubble_value(n, lambda, r).powf(tsm) * r.powf(d - 1.0 - params.mu),
                grid.r_max(),
                QuadTol::rel(1e-12),
            );
        let deficit = double_integral(table, grid, &big, tsm) + tail - value;
        rows.push(HlsBoundRow {
            epsilon,
            value,
            deficit,
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let fit = loglog_fit(&eps, &rows.iter().map(|r| r.deficit).collect::<Vec<_>>(), d)?;
    Ok(HlsBoundFit { limit, rows, fit })
}

/// Which dimension case of the existence theorem (1–4) the parameters fall
/// into, if any.
pub fn existence_case(params: &ProblemParams) -> Option<u8> {
    let n = params.dimension;
    let mt = params.mu_tilde;
    let a = params.alpha;
    let gp = params.gamma_plus();
    match n {
        3 if mt > 5.0 + gp / a => Some(4),
        4 if mt > 3.0 + gp / a => Some(3),
        5 if mt > 7.0 / 3.0 + gp / a => Some(2),
        _ if n >= 6 && mt > 2.0 => {
            let denom = a * (mt - 1.0) - gp;
            (denom > 0.0 && n as f64 >= (2.0 + 4.0 * a / denom).max(6.0)).then_some(1)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeGate {
    /// N − (N−2)μ̃/2, the exponent every remainder must beat.
    pub target: f64,
    /// Open interval of admissible τ, if nonempty.
    pub tau_interval: Option<(f64, f64)>,
}

impl RegimeGate {
    pub fn admits(&self, tau: f64) -> bool {
        self.tau_interval
            .is_some_and(|(lo, hi)| tau > lo && tau < hi)
    }

    /// Midpoint of the admissible interval.
    pub fn choose_tau(&self) -> Option<f64> {
        self.tau_interval.map(|(lo, hi)| 0.5 * (lo + hi))
    }
}

/// Solves min{N−2, (N−2)δ/2, (2N−μ)(1−τ), (2N−μ)(1−τ)/2} > N − (N−2)μ̃/2
/// for τ ∈ (1/2, 1).
pub fn regime_gate(params: &ProblemParams) -> RegimeGate {
    let d = params.n();
    let target = d - 0.5 * (d - 2.0) * params.mu_tilde;
    let fixed_ok = d - 2.0 > target && 0.5 * (d - 2.0) * params.delta() > target;
    // The τ-terms are decreasing in τ; the binding one is the halved term
    // when the target is positive.
    let span = 2.0 * d - params.mu;
    let hi = if target < 0.0 {
        1.0
    } else {
        (1.0 - 2.0 * target / span).min(1.0)
    };
    let tau_interval = (fixed_ok && hi > 0.5).then_some((0.5, hi));
    RegimeGate {
        target,
        tau_interval,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub epsilon: f64,
    pub tau: Option<f64>,
    pub rho: f64,
    pub sup_j_inf: f64,
    pub t_at_max: f64,
    pub c_star_inf: f64,
    pub margin: f64,
    /// Closed-form maximizer of the pure-K part.
    pub t_max_pred: f64,
    /// Numerical maximizer of the pure-K part.
    pub k_argmax: f64,
    /// K(t_max) from the closed form.
    pub k_max: f64,
    pub regime_case: Option<u8>,
    pub regime_ok: bool,
    pub warnings: Vec<String>,
}

/// K(t) = t²/2·‖∇u‖² − t^{2·2*_μ}(α/β)^{2·2*_μ}D_{2*_μ}(u)/(2α·2*_μ).
pub fn pure_k(params: &ProblemParams, grad_sq: f64, dd: f64, t: f64) -> f64 {
    let tsm = params.two_star_mu();
    let (a, b) = (params.alpha, params.beta);
    0.5 * t * t * grad_sq - t.powf(2.0 * tsm) * (a / b).powf(2.0 * tsm) * dd / (2.0 * a * tsm)
}

/// Maximizer and maximum of [`pure_k`] in closed form.
pub fn pure_k_max(params: &ProblemParams, grad_sq: f64, dd: f64) -> (f64, f64) {
    let tsm = params.two_star_mu();
    let (a, b) = (params.alpha, params.beta);
    let t =
        (b.powf(2.0 * tsm) / a.powf(2.0 * tsm - 1.0) * grad_sq / dd).powf(1.0 / (2.0 * tsm - 2.0));
    let k = (b * b / a).powf(tsm / (tsm - 1.0)) / a
        * (0.5 - 0.5 / tsm)
        * (grad_sq / dd.powf(1.0 / tsm)).powf(tsm / (tsm - 1.0));
    (t, k)
}

/// sup_t J^∞(t·u_ε) against c*_∞.
pub fn threshold_experiment(
    model: &CoefficientModel,
    params: &ProblemParams,
    table: &KernelTable,
    grid: &RadialGrid,
    spec: &BubbleSpec,
    c_star_inf: f64,
) -> Result<ThresholdReport> {
    let u = cutoff_bubble(grid, spec)?.into_values();
    let functional = Functional::new(FunctionalKind::Limit, model, params, grid, table)?;
    let mut warnings = Vec::new();
    let regime_case = existence_case(params);
    let gate = regime_gate(params);
    let regime_ok = regime_case.is_some() && spec.tau().is_none_or(|t| gate.admits(t));
    if !regime_ok {
        warnings.push("parameters or τ lie outside the existence regime".to_string());
    }
    let t_star = functional.nehari_scale(&u)?;
    let t_grid: Vec<f64> = (0..=64)
        .map(|i| t_star * 2f64.powf((i as f64 - 32.0) / 16.0))
        .collect();
    let ray = functional.ray_max(&u, &t_grid)?;
    let grad_sq = 2.0 * grid.kinetic(&u);
    let dd = double_integral(table, grid, &u, params.two_star_mu());
    let (t_max_pred, k_max) = pure_k_max(params, grad_sq, dd);
    let (k_argmax, _) = golden_max(
        |t| pure_k(params, grad_sq, dd, t),
        0.0,
        4.0 * t_max_pred,
        1e-12 * t_max_pred,
    );
    Ok(ThresholdReport {
        epsilon: spec.epsilon,
        tau: spec.tau(),
        rho: spec.rho(),
        sup_j_inf: ray.sup_value,
        t_at_max: ray.t_at_max,
        c_star_inf,
        margin: c_star_inf - ray.sup_value,
        t_max_pred,
        k_argmax,
        k_max,
        regime_case,
        regime_ok,
        warnings,
    })
}

/// Threshold experiment on a grid adapted to ε, compared against c*_∞
/// computed from the same grid rescaled to the unit bubble.
///
/// The grid spans [0, 2.02ρ] with `n_nodes` geometric nodes and first
/// spacing ε·10⁻³. Because the discrete Sobolev quotient is invariant
/// under rescaling of the grid, the two computations share their leading
/// discretization error and the margin is resolved far below it.
pub fn adapted_threshold(
    model: &CoefficientModel,
    params: &ProblemParams,
    spec: &BubbleSpec,
    n_nodes: usize,
) -> Result<(ThresholdReport, ConstantsReport)> {
    let n = params.dimension;
    let grid = RadialGrid::new(
        n,
        2.02 * spec.rho(),
        n_nodes,
        Grading::Geometric {
            first_spacing: spec.epsilon * 1e-3,
        },
    )?;
    let table = KernelTable::build(&grid, params.mu)?;
    let lambda = bubble_scale(n, spec.epsilon);
    let unit = RadialGrid::from_nodes(n, grid.nodes().iter().map(|r| r / lambda).collect())?;
    let unit_table = KernelTable::build(&unit, params.mu)?;
    let consts = constants(params, &unit, &unit_table)?;
    let report = threshold_experiment(model, params, &table, &grid, spec, consts.c_star_inf.value)?;
    Ok((report, consts))
}
