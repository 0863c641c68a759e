//! Coefficient families, the change of variables G and all pointwise
//! nonlinearity algebra built on top of it.

mod axioms;

pub use axioms::{axiom_suite, AxiomReport, ClauseReport, SampleSpec};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::numerics::{integrate, QuadTol};

/// Dimension, kernel exponent and every structural exponent of the problem.
///
/// Derived exponents are recomputed from the stored inputs on each call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dimension: usize,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu_tilde: f64,
    pub nu_decay: f64,
    pub p_growth: f64,
}

impl ProblemParams {
    pub fn validate(&self) -> Result<()> {
        let n = self.dimension as f64;
        if self.dimension < 3 {
            return config_err(format!("dimension {} must be at least 3", self.dimension));
        }
        if !(self.mu > 0.0 && self.mu < n.min(4.0)) {
            return config_err(format!("mu = {} must lie in (0, min(N, 4))", self.mu));
        }
        if !(self.alpha >= 1.0) || !(self.beta > 0.0) {
            return config_err("alpha must be >= 1 and beta > 0");
        }
        if !(self.gamma < self.alpha) {
            return config_err(format!("gamma = {} must be below alpha", self.gamma));
        }
        if !(self.mu_tilde > 2.0 && self.mu_tilde < self.two_star()) {
            return config_err(format!(
                "mu_tilde = {} must lie in (2, {})",
                self.mu_tilde,
                self.two_star()
            ));
        }
        if !(self.nu_decay > 2.0) {
            return config_err(format!("decay rate nu = {} must exceed 2", self.nu_decay));
        }
        if !(self.p_growth > 1.0 && self.p_growth < self.two_star() - 1.0) {
            return config_err(format!(
                "p = {} must lie in (1, {})",
                self.p_growth,
                self.two_star() - 1.0
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.dimension as f64
    }

    pub fn two_star(&self) -> f64 {
        2.0 * self.n() / (self.n() - 2.0)
    }

    pub fn two_star_mu(&self) -> f64 {
        (2.0 * self.n() - self.mu) / (self.n() - 2.0)
    }

    pub fn gamma_plus(&self) -> f64 {
        self.gamma.max(0.0)
    }

    pub fn delta(&self) -> f64 {
        1.0 - self.gamma_plus() / self.alpha
    }

    /// Power carried by G⁻¹(v) inside the nonlocal term: α·2*_μ.
    pub fn choquard_power(&self) -> f64 {
        self.alpha * self.two_star_mu()
    }
}

/// Family for the quasilinear coefficient g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GFamily {
    /// g(t) = √(1 + ((q+1)²/2)·t^{2q}).
    SqrtPower {
        q: f64,
        /// Test hook: flips the sign of g′ to produce a hypothesis violation.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        negate_derivative: bool,
    },
    /// g(t) = (1 + t²)^{(α−1)/2}.
    PlainPower {
        alpha: f64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        negate_derivative: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HFamily {
    /// h(x,t) = (1 − e^{−ν|x|})·t^{α·q_h+α−1} for t > 0, zero otherwise.
    ExpWeightedPower { q_h: f64, nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AFamily {
    /// a(x) = 1 − k·e^{−ν|x|}.
    ExpWell { k: f64, nu: f64 },
}

/// The structured model document accepted by the tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub dimension: usize,
    pub mu: f64,
    pub g_family: GFamily,
    pub h_family: HFamily,
    pub a_family: AFamily,
    pub mu_tilde: f64,
    pub p: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl ModelDoc {
    /// N=6, μ=2, g = √(1+2t²), h with q_h=1.5 and ν=3, a with k=0.5 and ν=3.
    pub fn exemplar() -> Self {
        ModelDoc {
            dimension: 6,
            mu: 2.0,
            g_family: GFamily::SqrtPower {
                q: 1.0,
                negate_derivative: false,
            },
            h_family: HFamily::ExpWeightedPower { q_h: 1.5, nu: 3.0 },
            a_family: AFamily::ExpWell { k: 0.5, nu: 3.0 },
            mu_tilde: 2.5,
            p: 1.8,
            gamma: 0.0,
        }
    }

    pub fn build(&self) -> Result<(CoefficientModel, ProblemParams)> {
        let model = CoefficientModel::new(self.g_family, self.h_family, self.a_family)?;
        let HFamily::ExpWeightedPower { nu: nu_h, .. } = self.h_family;
        let AFamily::ExpWell { nu: nu_a, .. } = self.a_family;
        if !(nu_a > 2.0) {
            return config_err(format!("a-family decay rate {nu_a} must exceed 2"));
        }
        let params = ProblemParams {
            dimension: self.dimension,
            mu: self.mu,
            alpha: model.alpha,
            beta: model.beta,
            gamma: self.gamma,
            mu_tilde: self.mu_tilde,
            nu_decay: nu_h,
            p_growth: self.p,
        };
        params.validate()?;
        Ok((model, params))
    }
}

/// Concrete g/h/a families with α, β derived from the g family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientModel {
    pub g_family: GFamily,
    pub h_family: HFamily,
    pub a_family: AFamily,
    pub alpha: f64,
    pub beta: f64,
    h_power: f64,
}

impl CoefficientModel {
    pub fn new(g_family: GFamily, h_family: HFamily, a_family: AFamily) -> Result<Self> {
        let (alpha, beta) = match g_family {
            GFamily::SqrtPower { q, .. } => {
                if !(q > 0.5) {
                    return config_err(format!("SqrtPower needs q > 1/2, got {q}"));
                }
                (q + 1.0, (q + 1.0) / 2f64.sqrt())
            }
            GFamily::PlainPower { alpha, .. } => {
                if !(alpha >= 1.0) {
                    return config_err(format!("PlainPower needs alpha >= 1, got {alpha}"));
                }
                (alpha, 1.0)
            }
        };
        let HFamily::ExpWeightedPower { q_h, nu } = h_family;
        if !(q_h > 0.0) || !(nu > 0.0) {
            return config_err("h family needs q_h > 0 and nu > 0");
        }
        let AFamily::ExpWell { k, nu } = a_family;
        if !(k > 0.0 && k < 1.0) || !(nu > 0.0) {
            return config_err(format!("a family needs k in (0,1) and nu > 0, got k = {k}"));
        }
        Ok(CoefficientModel {
            g_family,
            h_family,
            a_family,
            alpha,
            beta,
            h_power: alpha * q_h + alpha - 1.0,
        })
    }

    /// Exponent m in h̄(t) = t^m.
    pub fn h_power(&self) -> f64 {
        self.h_power
    }

    /// (g(t), g′(t)); g is even, g′ odd.
    pub fn g_eval(&self, t: f64) -> (f64, f64) {
        let a = t.abs();
        let (g, dg, neg) = match self.g_family {
            GFamily::SqrtPower {
                q,
                negate_derivative,
            } => {
                let c = 0.5 * (q + 1.0) * (q + 1.0);
                let g = (1.0 + c * a.powf(2.0 * q)).sqrt();
                let dg = if a == 0.0 {
                    0.0
                } else {
                    c * q * a.powf(2.0 * q - 1.0) / g
                };
                (g, dg, negate_derivative)
            }
            GFamily::PlainPower {
                alpha,
                negate_derivative,
            } => {
                let base = 1.0 + a * a;
                let g = base.powf(0.5 * (alpha - 1.0));
                let dg = (alpha - 1.0) * a * base.powf(0.5 * (alpha - 3.0));
                (g, dg, negate_derivative)
            }
        };
        let dg = if neg { -dg } else { dg };
        (g, if t < 0.0 { -dg } else { dg })
    }

    pub fn g(&self, t: f64) -> f64 {
        self.g_eval(t).0
    }

    /// G(t) = ∫₀ᵗ g.
    pub fn big_g(&self, t: f64) -> f64 {
        let a = t.abs();
        let v = match self.g_family {
            GFamily::SqrtPower { q: 1.0, .. } => {
                let s2 = 2f64.sqrt();
                0.5 * a * (1.0 + 2.0 * a * a).sqrt() + (s2 * a).asinh() / (2.0 * s2)
            }
            GFamily::PlainPower { alpha: 1.0, .. } => a,
            GFamily::PlainPower { alpha: 2.0, .. } => 0.5 * (a * (1.0 + a * a).sqrt() + a.asinh()),
            GFamily::PlainPower { alpha: 3.0, .. } => a + a * a * a / 3.0,
            _ => self.big_g_quadrature(a),
        };
        v.copysign(t)
    }

    /// G by adaptive quadrature, used for families without a closed form.
    pub fn big_g_quadrature(&self, t: f64) -> f64 {
        let a = t.abs();
        if a == 0.0 {
            return 0.0;
        }
        let v = integrate(
            |x| self.g(x),
            0.0,
            a,
            QuadTol {
                abs: 0.0,
                rel: 1e-13,
                max_panels: 400,
            },
        );
        v.copysign(t)
    }

    /// G⁻¹(s) by safeguarded Newton iteration inside a monotone bracket.
    pub fn g_inverse(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        if !s.is_finite() {
            return Err(Error::Numeric(format!("G inverse of non-finite value {s}")));
        }
        let target = s.abs();
        let tol = 1e-12 * target.max(1.0);
        let mut lo = 0.0;
        let mut hi = (target * self.alpha / self.beta)
            .max(1.0)
            .powf(1.0 / self.alpha)
            + target;
        // G is convex on [0,∞), so Newton started from an upper bound decreases monotonically.
        let power_bound = (self.alpha * target / self.beta).powf(1.0 / self.alpha);
        let g0 = self.g(0.0);
        let mut t = hi.min(target / g0).min(power_bound.max(0.0));
        if !(t > 0.0) {
            t = hi;
        }
        for _ in 0..200 {
            let r = self.big_g(t) - target;
            if r.abs() <= tol {
                return Ok(t.copysign(s));
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let next = t - r / self.g(t);
            t = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                let r = self.big_g(t) - target;
                if r.abs() <= 1e3 * tol {
                    return Ok(t.copysign(s));
                }
                break;
            }
        }
        Err(Error::Numeric(format!(
            "G inverse did not converge at s = {s}"
        )))
    }

    /// (h(x,t), H(x,t)) at radius x.
    pub fn h_eval(&self, x: f64, t: f64) -> (f64, f64) {
        let HFamily::ExpWeightedPower { nu, .. } = self.h_family;
        let w = -(-nu * x.abs()).exp_m1();
        let (hb, hh) = self.hbar_eval(t);
        (w * hb, w * hh)
    }

    /// ∂h/∂t at (x,t).
    pub fn h_t(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let HFamily::ExpWeightedPower { nu, .. } = self.h_family;
        let m = self.h_power;
        -(-nu * x.abs()).exp_m1() * m * t.powf(m - 1.0)
    }

    /// (h̄(t), H̄(t)), the |x| → ∞ limit.
    pub fn hbar_eval(&self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        let m = self.h_power;
        let p = t.powf(m);
        (p, p * t / (m + 1.0))
    }

    pub fn a_eval(&self, x: f64) -> f64 {
        let AFamily::ExpWell { k, nu } = self.a_family;
        1.0 - k * (-nu * x.abs()).exp()
    }

    /// 1 − a(x).
    pub fn a_deficit(&self, x: f64) -> f64 {
        let AFamily::ExpWell { k, nu } = self.a_family;
        k * (-nu * x.abs()).exp()
    }

    /// (f(x,s), F(x,s)) of the transformed equation; zero for s ≤ 0.
    pub fn reduced_f_eval(&self, x: f64, s: f64) -> Result<(f64, f64)> {
        if s <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let u = self.g_inverse(s)?;
        let g = self.g(u);
        let a = self.a_eval(x);
        let (h, hh) = self.h_eval(x, u);
        let f = a * (s - u / g) + h / g;
        let ff = 0.5 * a * (s - u) * (s + u) + hh;
        Ok((f, ff))
    }

    /// (f̄(s), F̄(s)) with a ≡ 1 and h = h̄.
    pub fn reduced_fbar_eval(&self, s: f64) -> Result<(f64, f64)> {
        if s <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let u = self.g_inverse(s)?;
        let g = self.g(u);
        let (h, hh) = self.hbar_eval(u);
        Ok((s - u / g + h / g, 0.5 * (s - u) * (s + u) + hh))
    }

    /// k(t) = t² − G⁻¹(t)² + h̄(G⁻¹(t))·G⁻¹(t).
    pub fn limit_k_eval(&self, t: f64) -> Result<f64> {
        let u = self.g_inverse(t)?;
        let (h, _) = self.hbar_eval(u);
        Ok((t - u) * (t + u) + h * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exemplar() -> (CoefficientModel, ProblemParams) {
        ModelDoc::exemplar().build().unwrap()
    }

    #[test]
    fn g_values() {
        let (m, _) = exemplar();
        assert_eq!(m.g(0.0), 1.0);
        assert!((m.g(1.0) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.g(-1.0), m.g(1.0));
        let (_, d1) = m.g_eval(1.0);
        let (_, dm1) = m.g_eval(-1.0);
        assert_eq!(d1, -dm1);
        assert!((d1 - 2.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_g_matches_quadrature() {
        let (m, _) = exemplar();
        for &t in &[0.1, 1.0, 2.0, 7.5, 40.0] {
            let a = m.big_g(t);
            let b = m.big_g_quadrature(t);
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                "t={t}: {a} vs {b}"
            );
        }
        let s2 = 2f64.sqrt();
        let expected = 2.0 * 3.0 / 2.0 + (2.0 * s2).asinh() / (2.0 * s2);
        assert!((m.big_g(2.0) - expected).abs() < 1e-14);
        assert_eq!(m.big_g(0.0), 0.0);
    }

    #[test]
    fn inverse_round_trip_and_bounds() {
        let (m, p) = exemplar();
        assert_eq!(m.g_inverse(0.0).unwrap(), 0.0);
        let t = m.g_inverse(m.big_g(2.0)).unwrap();
        assert!((t - 2.0).abs() < 1e-10);
        for i in 1..200 {
            let s = 0.05 * i as f64;
            let u = m.g_inverse(s).unwrap();
            assert!(u <= s);
            assert!(m.big_g(u) >= p.beta / p.alpha * u.powf(p.alpha));
        }
    }

    #[test]
    fn h_and_a_values() {
        let (m, _) = exemplar();
        assert_eq!(m.h_eval(2.0, -1.0).0, 0.0);
        assert_eq!(m.h_eval(0.0, 3.0).0, 0.0);
        let (h, _) = m.h_eval(1e3, 1.7);
        assert!((h - 1.7f64.powi(4)).abs() < 1e-9);
        assert_eq!(m.hbar_eval(0.0), (0.0, 0.0));
        assert_eq!(m.a_eval(0.0), 0.5);
        assert!((m.a_eval(1e3) - 1.0).abs() < 1e-12);
        for &x in &[0.0, 0.3, 1.0, 4.0] {
            assert!(((1.0 - m.a_eval(x)) - 0.5 * (-3.0 * x).exp()).abs() < 1e-16);
        }
        assert_eq!(m.h_power(), 4.0);
    }

    #[test]
    fn reduced_functions() {
        let (m, _) = exemplar();
        assert_eq!(m.reduced_f_eval(1.0, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(m.limit_k_eval(0.0).unwrap(), 0.0);
        let t = 1e-4;
        assert!(m.limit_k_eval(t).unwrap() / (t * t) < 1e-3);
        let mut prev = f64::INFINITY;
        for &t in &[1e2, 1e3, 1e4] {
            let r = m.limit_k_eval(t).unwrap() / t.powi(3);
            assert!(r < prev);
            prev = r;
        }
        // k(t)/t³ ≈ 2^{5/4}·t^{−1/2} at leading order, about 0.024 at t = 1e4
        let lead = 2f64.powf(1.25) / 1e2;
        assert!((prev - lead).abs() < 0.01 * lead, "{prev} vs {lead}");
        // with a ≡ 1 far away and h → h̄, f tends to f̄
        let (f, ff) = m.reduced_f_eval(1e3, 2.5).unwrap();
        let (fb, ffb) = m.reduced_fbar_eval(2.5).unwrap();
        assert!((f - fb).abs() < 1e-12 && (ff - ffb).abs() < 1e-12);
    }

    #[test]
    fn invalid_documents_are_rejected() {
        let mut d = ModelDoc::exemplar();
        d.mu_tilde = 4.0;
        assert!(matches!(d.build(), Err(Error::Config(_))));
        let mut d = ModelDoc::exemplar();
        d.mu = 4.5;
        assert!(d.build().is_err());
        let mut d = ModelDoc::exemplar();
        d.a_family = AFamily::ExpWell { k: 1.2, nu: 3.0 };
        assert!(d.build().is_err());
        let json = r#"{"dimension":6,"mu":2,"g_family":{"kind":"sqrt_power","q":1},
            "h_family":{"kind":"exp_weighted_power","q_h":1.5,"nu":3},
            "a_family":{"kind":"exp_well","k":0.5,"nu":3},"mu_tilde":2.5,"p":1.8,"extra":1}"#;
        assert!(serde_json::from_str::<ModelDoc>(json).is_err());
    }
}
