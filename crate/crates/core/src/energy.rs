//! The functionals J (with a and h) and J^∞ (a ≡ 1, h̄) on a radial grid,
//! their exact discrete derivatives, Nehari scaling along rays and the
//! mountain-pass geometry check.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::models::{axiom_suite, CoefficientModel, ProblemParams, SampleSpec};
use crate::numerics::{bracketed_root, golden_max};
use crate::riesz::KernelTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    /// Uses a(x) and h(x,·).
    Full,
    /// a ≡ 1 and h replaced by its limit h̄.
    Limit,
}

/// Itemized value of a functional. `f_term` and `choquard` are the
/// magnitudes that get subtracted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub f_term: f64,
    pub choquard: f64,
    pub total: f64,
}

/// A functional bound to its model, grid and kernel table.
pub struct Functional<'a> {
    pub kind: FunctionalKind,
    pub model: &'a CoefficientModel,
    pub params: &'a ProblemParams,
    pub grid: &'a RadialGrid,
    pub table: &'a KernelTable,
    ray_hypotheses: std::result::Result<(), String>,
}

struct Pointwise {
    potential: Vec<f64>,
    f_density: Vec<f64>,
    /// (a·u − h)/g(u) at each node
    local_force: Vec<f64>,
    /// G⁻¹(v⁺)^p
    rho: Vec<f64>,
    /// G⁻¹(v⁺)^{p−1}/g(G⁻¹(v⁺))
    rho_force: Vec<f64>,
}

impl<'a> Functional<'a> {
    pub fn new(
        kind: FunctionalKind,
        model: &'a CoefficientModel,
        params: &'a ProblemParams,
        grid: &'a RadialGrid,
        table: &'a KernelTable,
    ) -> Result<Self> {
        table.check(grid, params.mu)?;
        if grid.dimension() != params.dimension {
            return config_err("grid dimension differs from problem dimension");
        }
        // The single-crossing argument for ν(t) uses (g1)(a) and the growth ratios.
        let report = axiom_suite(model, params, &SampleSpec::default());
        let needed = ["(g1)(a)", "growth ratios"];
        let failed: Vec<&str> = needed
            .iter()
            .copied()
            .filter(|n| report.clause(n).is_none_or(|c| !c.pass))
            .collect();
        let ray_hypotheses = if failed.is_empty() {
            Ok(())
        } else {
            Err(format!("clauses {failed:?} failed"))
        };
        Ok(Functional {
            kind,
            model,
            params,
            grid,
            table,
            ray_hypotheses,
        })
    }

    pub fn limit(
        model: &'a CoefficientModel,
        params: &'a ProblemParams,
        grid: &'a RadialGrid,
        table: &'a KernelTable,
    ) -> Result<Self> {
        Self::new(FunctionalKind::Limit, model, params, grid, table)
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.grid.len() {
            return config_err(format!(
                "field has {} values, grid has {}",
                v.len(),
                self.grid.len()
            ));
        }
        Ok(())
    }

    fn pointwise(&self, v: &[f64]) -> Result<Pointwise> {
        let p = self.params.choquard_power();
        let n = v.len();
        let mut pw = Pointwise {
            potential: Vec::with_capacity(n),
            f_density: Vec::with_capacity(n),
            local_force: Vec::with_capacity(n),
            rho: Vec::with_capacity(n),
            rho_force: Vec::with_capacity(n),
        };
        for (&r, &vi) in self.grid.nodes().iter().zip(v) {
            let u = self.model.g_inverse(vi)?;
            let g = self.model.g(u);
            let (a, (h, hh)) = match self.kind {
                FunctionalKind::Full => (self.model.a_eval(r), self.model.h_eval(r, u)),
                FunctionalKind::Limit => (1.0, self.model.hbar_eval(u)),
            };
            pw.potential.push(0.5 * a * u * u);
            pw.f_density.push(hh);
            pw.local_force.push((a * u - h) / g);
            if u > 0.0 {
                let up = u.powf(p - 1.0);
                pw.rho.push(up * u);
                pw.rho_force.push(up / g);
            } else {
                pw.rho.push(0.0);
                pw.rho_force.push(0.0);
            }
        }
        Ok(pw)
    }

    pub fn energy(&self, v: &[f64]) -> Result<EnergyBreakdown> {
        Ok(self.energy_and_gradient_impl(v, false)?.0)
    }

    /// Exact derivative of the discrete energy with respect to nodal values.
    pub fn gradient(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.energy_and_gradient_impl(v, true)?.1)
    }

    pub fn energy_and_gradient(&self, v: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
        self.energy_and_gradient_impl(v, true)
    }

    fn energy_and_gradient_impl(
        &self,
        v: &[f64],
        want_grad: bool,
    ) -> Result<(EnergyBreakdown, Vec<f64>)> {
        self.check_len(v)?;
        let grid = self.grid;
        let pw = self.pointwise(v)?;
        let phi = self.table.potential(grid, &pw.rho);
        let p = self.params.choquard_power();
        let kinetic = grid.kinetic(v);
        let potential = grid.integrate(&pw.potential);
        let f_term = grid.integrate(&pw.f_density);
        let d = grid.integrate(
            &pw.rho
                .iter()
                .zip(&phi)
                .map(|(a, b)| a * b)
                .collect::<Vec<_>>(),
        );
        let choquard = d / (2.0 * p);
        let total = kinetic + potential - f_term - choquard;
        let e = EnergyBreakdown {
            kinetic,
            potential,
            f_term,
            choquard,
            total,
        };
        if !want_grad {
            return Ok((e, Vec::new()));
        }
        let s = grid.sphere_area();
        let kv = grid.apply_stiffness(v);
        let grad = (0..v.len())
            .map(|i| {
                s * (kv[i] + grid.weights()[i] * (pw.local_force[i] - phi[i] * pw.rho_force[i]))
            })
            .collect();
        Ok((e, grad))
    }

    /// ⟨J′(v), φ⟩.
    pub fn gateaux(&self, v: &[f64], phi: &[f64]) -> Result<f64> {
        self.check_len(phi)?;
        Ok(self.gradient(v)?.iter().zip(phi).map(|(a, b)| a * b).sum())
    }

    /// Strong-form residual −Δv + (a·u − h)/g − Φ·U^{p−1}/g at every node
    /// except the Dirichlet node at r_max, where it is set to 0.
    pub fn residual_field(&self, v: &[f64]) -> Result<Vec<f64>> {
        let g = self.gradient(v)?;
        let s = self.grid.sphere_area();
        let n = v.len();
        Ok(g.iter()
            .zip(self.grid.weights())
            .enumerate()
            .map(|(i, (gi, w))| if i + 1 == n { 0.0 } else { gi / (s * w) })
            .collect())
    }

    /// d/dt J(t·u).
    pub fn ray_derivative(&self, u: &[f64], t: f64) -> Result<f64> {
        let tu: Vec<f64> = u.iter().map(|x| t * x).collect();
        self.gateaux(&tu, u)
    }

    /// ν(t) = (d/dt J(t·u))/t, the quantity with a single positive zero.
    pub fn nu_factor(&self, u: &[f64], t: f64) -> Result<f64> {
        Ok(self.ray_derivative(u, t)? / t)
    }

    fn require_ray_hypotheses(&self) -> Result<()> {
        self.ray_hypotheses.clone().map_err(Error::Unverified)
    }

    /// The unique t* > 0 with d/dt J(t·u) = 0.
    pub fn nehari_scale(&self, u: &[f64]) -> Result<f64> {
        self.nehari_scale_from(u, 1.0, 2.0)
    }

    /// [`Self::nehari_scale`] with the bracket search starting at `t0` and
    /// expanding by `factor`.
    pub fn nehari_scale_from(&self, u: &[f64], t0: f64, factor: f64) -> Result<f64> {
        self.require_ray_hypotheses()?;
        self.check_len(u)?;
        if !u.iter().any(|&x| x > 0.0) {
            return Err(Error::Degenerate("direction has no positive part".into()));
        }
        let nu = |t: f64| self.nu_factor(u, t);
        let (mut lo, mut hi) = (t0, t0);
        if nu(t0)? > 0.0 {
            loop {
                hi *= factor;
                if hi > 1e8 {
                    return Err(Error::Degenerate(
                        "no sign change of ν(t) up to t = 1e8".into(),
                    ));
                }
                if nu(hi)? < 0.0 {
                    break;
                }
                lo = hi;
            }
        } else {
            loop {
                lo /= factor;
                if lo < 1e-12 {
                    return Err(Error::Degenerate("ν(t) is not positive near t = 0".into()));
                }
                if nu(lo)? > 0.0 {
                    break;
                }
                hi = lo;
            }
        }
        let mut err = None;
        let root = bracketed_root(
            |t| match nu(t) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            1e-13,
            300,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(root),
        }
    }

    /// sup_{t ≥ 0} J(t·u), located at the Nehari scale and confirmed by a
    /// scan of `t_grid` plus golden-section refinement.
    pub fn ray_max(&self, u: &[f64], t_grid: &[f64]) -> Result<RayMax> {
        let t_star = self.nehari_scale(u)?;
        let at = |t: f64| -> Result<f64> { Ok(self.energy(&scale(u, t))?.total) };
        let mut best = (t_star, at(t_star)?);
        for &t in t_grid {
            let e = at(t)?;
            if e > best.1 {
                best = (t, e);
            }
        }
        let c = best.0;
        let (tg, eg) = golden_max(
            |t| at(t).unwrap_or(f64::NEG_INFINITY),
            0.98 * c,
            1.02 * c,
            1e-10,
        );
        if eg > best.1 {
            best = (tg, eg);
        }
        Ok(RayMax {
            t_star,
            t_at_max: best.0,
            sup_value: best.1,
        })
    }

    /// (t, J(t·u)) rows for an energy curve.
    pub fn energy_curve(&self, u: &[f64], ts: &[f64]) -> Result<Vec<(f64, EnergyBreakdown)>> {
        ts.iter()
            .map(|&t| Ok((t, self.energy(&scale(u, t))?)))
            .collect()
    }
}

pub(crate) fn scale(u: &[f64], t: f64) -> Vec<f64> {
    u.iter().map(|x| t * x).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayMax {
    pub t_star: f64,
    pub t_at_max: f64,
    pub sup_value: f64,
}

pub fn write_curve_csv(path: &Path, rows: &[(f64, EnergyBreakdown)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "total", "kinetic", "potential", "f_term", "choquard"])?;
    for (t, e) in rows {
        w.write_record(
            [*t, e.total, e.kinetic, e.potential, e.f_term, e.choquard].map(|x| format!("{x:e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpRow {
    pub rho: f64,
    pub inf_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpReport {
    pub rows: Vec<MpRow>,
    /// (𝔞, ρ) with the largest positive infimum found.
    pub best: Option<(f64, f64)>,
    /// For each direction, some t with J(t·dir/‖dir‖) < 0.
    pub negative_t: Vec<Option<f64>>,
}

/// Samples J on spheres ‖v‖_{H¹} = ρ spanned by the given directions.
pub fn mp_geometry_check(
    f: &Functional,
    directions: &[RadialField],
    rho_grid: &[f64],
) -> Result<MpReport> {
    if directions.is_empty() {
        return config_err("mountain-pass check needs at least one direction");
    }
    let mut units = Vec::with_capacity(directions.len());
    for d in directions {
        d.check(f.grid)?;
        let norm = f.grid.h1_norm(d.values());
        if !(norm > 0.0) {
            return Err(Error::Degenerate("zero direction".into()));
        }
        units.push(scale(d.values(), 1.0 / norm));
    }
    let mut rows = vec![MpRow {
        rho: 0.0,
        inf_energy: 0.0,
    }];
    for &rho in rho_grid.iter().filter(|&&r| r > 0.0) {
        let mut inf = f64::INFINITY;
        for u in &units {
            inf = inf.min(f.energy(&scale(u, rho))?.total);
        }
        rows.push(MpRow {
            rho,
            inf_energy: inf,
        });
    }
    let best = rows
        .iter()
        .filter(|r| r.rho > 0.0 && r.inf_energy > 0.0)
        .max_by(|a, b| a.inf_energy.total_cmp(&b.inf_energy))
        .map(|r| (r.inf_energy, r.rho));
    let mut negative_t = Vec::with_capacity(units.len());
    for u in &units {
        let mut t = 1.0;
        let mut found = None;
        while t <= 1e8 {
            if f.energy(&scale(u, t))?.total < 0.0 {
                found = Some(t);
                break;
            }
            t *= 2.0;
        }
        negative_t.push(found);
    }
    Ok(MpReport {
        rows,
        best,
        negative_t,
    })
}

/// Seeded positive test fields: each is a sum of one to three Gaussian
/// bumps with centres in [0, r_max/3], widths in [0.2, 2] and amplitudes in
/// [0.5, 2]. The Dirichlet node is set to zero.
pub fn random_bumps(grid: &RadialGrid, count: usize, seed: u64) -> Vec<RadialField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_max = grid.r_max();
    (0..count)
        .map(|_| {
            let bumps: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=3))
                .map(|_| {
                    (
                        rng.random_range(0.0..r_max / 3.0),
                        rng.random_range(0.2..2.0),
                        rng.random_range(0.5..2.0),
                    )
                })
                .collect();
            let mut values = grid
                .sample(|r| {
                    bumps
                        .iter()
                        .map(|&(c, w, a)| a * (-((r - c) / w).powi(2)).exp())
                        .sum()
                })
                .into_values();
            *values.last_mut().unwrap() = 0.0;
            RadialField::new(grid, values).expect("sampled on the same grid")
        })
        .collect()
}
