//! Numerical laboratory for the quasilinear Schrödinger–Choquard problem
//! after the change of variables v = G(u).
//!
//! The crate is organised bottom-up: [`models`] holds the coefficient
//! families and pointwise algebra, [`grid`] the radial discretization,
//! [`riesz`] the nonlocal kernel, [`energy`] the functionals, [`bubbles`]
//! the Sobolev extremals and threshold experiments, and [`solver`] the
//! ground-state finder with its decay and translation experiments.

pub mod bubbles;
pub mod energy;
pub mod error;
pub mod grid;
pub mod models;
pub mod numerics;
pub mod riesz;
pub mod solver;

pub use bubbles::{
    adapted_threshold, constants, cutoff_bubble, prop22_table, regime_gate, talenti_bubble,
    threshold_experiment, BubbleSpec, ConstantsReport, Cutoff, Prop22Table, ThresholdReport,
};
pub use energy::{
    mp_geometry_check, random_bumps, EnergyBreakdown, Functional, FunctionalKind, MpReport, RayMax,
};
pub use error::{Error, Result};
pub use grid::{Grading, Norms, RadialField, RadialGrid};
pub use models::{
    axiom_suite, AFamily, AxiomReport, ClauseReport, CoefficientModel, GFamily, HFamily, ModelDoc,
    ProblemParams, SampleSpec,
};
pub use riesz::{
    double_integral, kernel_weight, pair_integral, riesz_convolve, spherical_mean,
    translated_weights, KernelTable, Profile,
};
pub use solver::{
    decay_fit, find_ground_state, lemma45_check, lemma52_experiment, weak_residual, DecayFit,
    GroundStateResult, SolverConfig,
};
