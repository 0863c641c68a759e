use std::fs;
use std::path::{Path, PathBuf};

use choquard_core::bubbles::{
    bubble_scale, hls_constant, sobolev_constant, threshold_level, Prop22Table,
};
use choquard_core::energy::write_curve_csv;
use choquard_core::solver::write_iterations_csv;
use choquard_core::{
    adapted_threshold, axiom_suite, constants, decay_fit, find_ground_state, lemma45_check,
    lemma52_experiment, prop22_table, random_bumps, regime_gate, threshold_experiment, BubbleSpec,
    CoefficientModel, Cutoff, Error, Functional, FunctionalKind, KernelTable, ProblemParams,
    RadialField, RadialGrid, Result,
};
use serde::Serialize;

use crate::config::{Direction, FunctionalChoice, RunConfig};

pub const FORMAT_VERSION: u32 = 1;

/// How a command ended when no error was raised.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    Failed(Vec<String>),
    NotConverged(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: String,
}

impl Check {
    fn new(name: &str, pass: bool, value: f64, bound: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            pass,
            value,
            bound: bound.into(),
        }
    }
}

fn outcome(checks: &[Check]) -> Outcome {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.clone())
        .collect();
    if failed.is_empty() {
        Outcome::Success
    } else {
        Outcome::Failed(failed)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format_version: u32,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    result: &'a T,
}

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: u64,
    model: CoefficientModel,
    params: ProblemParams,
}

impl Context {
    pub fn new(mut config: RunConfig, out: PathBuf, seed: u64) -> Result<Self> {
        config.out = Some(out.clone());
        config.seed = seed;
        let (model, params) = config.model.build()?;
        fs::create_dir_all(&out)?;
        Ok(Context {
            config,
            out,
            seed,
            model,
            params,
        })
    }

    fn write_json<T: Serialize>(&self, name: &str, command: &str, result: &T) -> Result<()> {
        let env = Envelope {
            format_version: FORMAT_VERSION,
            command,
            seed: self.seed,
            config: &self.config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        fs::write(self.out.join(name), text)?;
        Ok(())
    }

    fn table(&self, grid: &RadialGrid) -> Result<KernelTable> {
        let mu = self.params.mu;
        match &self.config.kernel_cache {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let file = dir.join(format!("kernel-{:016x}-{}.bin", grid.hash(), mu.to_bits()));
                KernelTable::build_cached(grid, mu, Some(&file))
            }
            None => KernelTable::build(grid, mu),
        }
    }

    fn main_grid(&self) -> Result<RadialGrid> {
        self.config.grid.build(self.params.dimension)
    }

    /// c*_∞ from the closed-form Sobolev and HLS constants.
    fn c_star_closed_form(&self) -> f64 {
        let n = self.params.dimension;
        let s_h = sobolev_constant(n)
            / hls_constant(n, self.params.mu).powf(1.0 / self.params.two_star_mu());
        threshold_level(&self.params, s_h)
    }

    fn ground_state_input(&self, explicit: Option<&Path>) -> PathBuf {
        explicit
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.out.join("ground_state.csv"))
    }

    fn read_field(&self, grid: &RadialGrid, path: &Path) -> Result<RadialField> {
        if !path.exists() {
            return Err(Error::Config(format!(
                "{} not found; run ground-state first or set its path",
                path.display()
            )));
        }
        RadialField::read_csv(grid, path)
    }
}

pub fn verify(ctx: &Context) -> Result<Outcome> {
    let report = axiom_suite(&ctx.model, &ctx.params, &ctx.config.experiments.samples);
    ctx.write_json("axioms.json", "verify", &report)?;
    let failing = report.failing();
    Ok(if failing.is_empty() {
        Outcome::Success
    } else {
        Outcome::Failed(failing.iter().map(|s| s.to_string()).collect())
    })
}

#[derive(Serialize)]
struct ConstantsResult {
    constants: choquard_core::ConstantsReport,
    s_h_discrepancy: f64,
    prop22: Prop22Table,
    checks: Vec<Check>,
}

pub fn constants_cmd(ctx: &Context) -> Result<Outcome> {
    let grid = ctx.config.constants_grid.build(ctx.params.dimension)?;
    let table = ctx.table(&grid)?;
    let report = constants(&ctx.params, &grid, &table)?;
    let d = report.s_h_discrepancy();
    let mut checks = vec![Check::new(
        "S_H relation vs direct quotient",
        d < 1e-5,
        d,
        "< 1e-5",
    )];
    let x = &ctx.config.experiments;
    let bubble_grid = ctx.config.prop22_grid.build(ctx.params.dimension)?;
    let radius = bubble_scale(ctx.params.dimension, 1.0);
    let prop22 = prop22_table(
        &bubble_grid,
        Cutoff::Fixed { radius },
        &x.prop22_eps,
        &x.prop22_t,
    )?;
    prop22.write_csv(&ctx.out.join("prop22.csv"))?;
    let mut fits = vec![
        ("gradient deficit exponent", &prop22.gradient),
        ("L^2* deficit exponent", &prop22.lstar),
    ];
    let labels: Vec<String> = prop22
        .t_fits
        .iter()
        .map(|f| format!("exponent of the t = {} integral", f.t))
        .collect();
    for (f, label) in prop22.t_fits.iter().zip(&labels) {
        fits.push((label, f.log_corrected.as_ref().unwrap_or(&f.plain)));
    }
    for (name, fit) in fits {
        let rel = (fit.slope / fit.expected - 1.0).abs();
        checks.push(Check::new(
            name,
            rel < 0.15,
            fit.slope,
            format!("{} ± 15%", fit.expected),
        ));
    }
    let out = outcome(&checks);
    ctx.write_json(
        "constants.json",
        "constants",
        &ConstantsResult {
            constants: report,
            s_h_discrepancy: d,
            prop22,
            checks,
        },
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct ThresholdResult {
    tau: f64,
    c_star_inf: f64,
    rows: Vec<choquard_core::ThresholdReport>,
    adapted: Vec<AdaptedRow>,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct AdaptedRow {
    epsilon: f64,
    c_star_same_grid: f64,
    sup_j_inf: f64,
    margin: f64,
}

pub fn threshold(ctx: &Context) -> Result<Outcome> {
    let x = &ctx.config.experiments;
    let tau = match x.tau {
        Some(t) => t,
        None => regime_gate(&ctx.params).choose_tau().ok_or_else(|| {
            Error::Config("no admissible cutoff exponent for these parameters".into())
        })?,
    };
    let grid = ctx.config.bubble_grid.build(ctx.params.dimension)?;
    let table = ctx.table(&grid)?;
    let c_star = ctx.c_star_closed_form();
    let mut eps = x.eps_list.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        rows.push(threshold_experiment(
            &ctx.model,
            &ctx.params,
            &table,
            &grid,
            &BubbleSpec::scaled(e, tau),
            c_star,
        )?);
    }
    let mut adapted = Vec::new();
    for &e in &x.adapted_eps {
        let (r, c) = adapted_threshold(
            &ctx.model,
            &ctx.params,
            &BubbleSpec::scaled(e, tau),
            x.adapted_nodes,
        )?;
        adapted.push(AdaptedRow {
            epsilon: e,
            c_star_same_grid: c.c_star_inf.value,
            sup_j_inf: r.sup_j_inf,
            margin: r.margin,
        });
    }
    let mut checks: Vec<Check> = rows
        .iter()
        .map(|r| {
            Check::new(
                &format!("margin at eps = {}", r.epsilon),
                r.margin > 0.0,
                r.margin,
                "> 0",
            )
        })
        .collect();
    for w in rows.windows(2) {
        checks.push(Check::new(
            &format!(
                "margin increases from eps = {} to {}",
                w[0].epsilon, w[1].epsilon
            ),
            w[1].margin > w[0].margin,
            w[1].margin - w[0].margin,
            "> 0",
        ));
    }
    for r in &rows {
        let rel = (r.k_argmax / r.t_max_pred - 1.0).abs();
        checks.push(Check::new(
            &format!("t_max closed form at eps = {}", r.epsilon),
            rel < 0.05,
            rel,
            "< 0.05",
        ));
    }
    let out = outcome(&checks);
    ctx.write_json(
        "threshold.json",
        "threshold",
        &ThresholdResult {
            tau,
            c_star_inf: c_star,
            rows,
            adapted,
            checks,
        },
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct GroundStateSummary {
    energy_level: f64,
    residual: f64,
    nehari_value: f64,
    iterations: usize,
    converged: bool,
    c_star_inf: f64,
}

#[derive(Serialize)]
struct DecayResult {
    fit: choquard_core::DecayFit,
    expected_sigma: f64,
    expected_kappa: f64,
    ground_state: GroundStateSummary,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct Lemma45Result {
    table: choquard_core::solver::Lemma45Table,
    ball_floor: f64,
    weighted_ceiling: (f64, f64),
    checks: Vec<Check>,
}

pub fn ground_state(ctx: &Context) -> Result<Outcome> {
    let grid = ctx.main_grid()?;
    let table = ctx.table(&grid)?;
    let result = find_ground_state(&ctx.model, &ctx.params, &table, &grid, &ctx.config.solver)?;
    result
        .field
        .write_csv(&grid, &ctx.out.join("ground_state.csv"))?;
    write_iterations_csv(&ctx.out.join("iterations.csv"), &result.log)?;
    let c_star = ctx.c_star_closed_form();
    let x = &ctx.config.experiments;
    let fit = decay_fit(&grid, &result.field, x.decay_window)?;
    let kappa0 = 0.5 * (ctx.params.n() - 1.0);
    let mut checks = vec![
        Check::new(
            "converged",
            result.converged,
            result.residual,
            format!("< {}", ctx.config.solver.grad_tol),
        ),
        Check::new(
            "energy level in (0, c*)",
            result.energy_level > 0.0 && result.energy_level < c_star,
            result.energy_level,
            format!("(0, {c_star})"),
        ),
        Check::new(
            "decay rate",
            (0.85..=1.15).contains(&fit.slope),
            fit.slope,
            "[0.85, 1.15]",
        ),
        Check::new(
            "algebraic decay exponent",
            (0.7 * kappa0..=1.3 * kappa0).contains(&fit.algebraic_exp),
            fit.algebraic_exp,
            format!("[{}, {}]", 0.7 * kappa0, 1.3 * kappa0),
        ),
    ];
    let summary = GroundStateSummary {
        energy_level: result.energy_level,
        residual: result.residual,
        nehari_value: result.nehari_value,
        iterations: result.iterations,
        converged: result.converged,
        c_star_inf: c_star,
    };
    let l45 = lemma45_check(
        &grid,
        &result.field,
        &ctx.params,
        &x.lemma45_offsets,
        x.mu_hat,
    )?;
    let floor = l45.ball_floor();
    let ceiling = l45.weighted_ceiling();
    let l45_checks = vec![
        Check::new("ball ratio floor", floor >= 0.2, floor, ">= 0.2"),
        Check::new(
            "weighted L2 ratio ceiling",
            ceiling.0 <= 5.0,
            ceiling.0,
            "<= 5",
        ),
        Check::new(
            "weighted power ratio ceiling",
            ceiling.1 <= 5.0,
            ceiling.1,
            "<= 5",
        ),
    ];
    ctx.write_json(
        "lemma45.json",
        "ground-state",
        &Lemma45Result {
            table: l45,
            ball_floor: floor,
            weighted_ceiling: ceiling,
            checks: l45_checks.clone(),
        },
    )?;
    let decay = DecayResult {
        fit,
        expected_sigma: 1.0,
        expected_kappa: kappa0,
        ground_state: summary,
        checks: checks.clone(),
    };
    ctx.write_json("decay.json", "ground-state", &decay)?;
    if !result.converged {
        return Ok(Outcome::NotConverged(format!(
            "residual {:e} after {} iterations",
            result.residual, result.iterations
        )));
    }
    checks.extend(l45_checks);
    Ok(outcome(&checks))
}

#[derive(Serialize)]
struct Lemma52Result {
    source: String,
    rows: Vec<choquard_core::solver::Lemma52Row>,
    checks: Vec<Check>,
}

pub fn translate(ctx: &Context) -> Result<Outcome> {
    let grid = ctx.main_grid()?;
    let x = &ctx.config.experiments;
    let path = ctx.ground_state_input(x.ground_state_path.as_deref());
    let w = ctx.read_field(&grid, &path)?;
    let table = ctx.table(&grid)?;
    let rows = lemma52_experiment(&ctx.model, &ctx.params, &table, &grid, &w, &x.r_list)?;
    let checks: Vec<Check> = rows
        .iter()
        .map(|r| {
            Check::new(
                &format!("margin at R = {}", r.offset),
                r.margin > 0.0,
                r.margin,
                "> 0",
            )
        })
        .collect();
    let out = outcome(&checks);
    let source = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    ctx.write_json(
        "lemma52.json",
        "translate",
        &Lemma52Result {
            source,
            rows,
            checks,
        },
    )?;
    Ok(out)
}

pub fn energy_curve(ctx: &Context) -> Result<Outcome> {
    let grid = ctx.main_grid()?;
    let c = &ctx.config.experiments.curve;
    let u = match &c.direction {
        Direction::Gaussian { amplitude, width } => {
            if !(*width > 0.0) {
                return Err(Error::Config("gaussian width must be positive".into()));
            }
            grid.sample(|r| amplitude * (-(r / width).powi(2)).exp())
        }
        Direction::RandomBump => random_bumps(&grid, 1, ctx.seed).remove(0),
        Direction::GroundState { path } => {
            ctx.read_field(&grid, &ctx.ground_state_input(path.as_deref()))?
        }
    };
    if !u.values().iter().any(|&v| v > 0.0) {
        return Err(Error::Degenerate(
            "curve direction has no positive part".into(),
        ));
    }
    let table = ctx.table(&grid)?;
    let kind = match c.functional {
        FunctionalChoice::Limit => FunctionalKind::Limit,
        FunctionalChoice::Full => FunctionalKind::Full,
    };
    let f = Functional::new(kind, &ctx.model, &ctx.params, &grid, &table)?;
    let ratio = (c.t_max / c.t_min).ln();
    let ts: Vec<f64> = (0..c.points)
        .map(|i| c.t_min * (ratio * i as f64 / (c.points - 1) as f64).exp())
        .collect();
    let rows = f.energy_curve(u.values(), &ts)?;
    write_curve_csv(&ctx.out.join("curve.csv"), &rows)?;
    Ok(Outcome::Success)
}
