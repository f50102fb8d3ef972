//! Integral chains on simplicial and cubical complexes: flat norms, elliptic integrands,
//! penalized selection over homology classes, almost-minimality checks and discrete
//! second-variation spectra.

pub mod chain;
pub mod complex;
pub mod error;
pub mod family;
pub mod flatnorm;
pub mod geometry;
pub mod integrand;
mod lp;
pub mod runner;
pub mod scenario;
pub mod selection;
pub mod stability;

pub use chain::{Chain, ChainDoc};
pub use complex::{build_grid_complex, CellSet, CellShape, ComplexDoc, ComplexId, GridSpec, SimplicialComplex};
pub use error::{CurrentsError, Result};
pub use family::{Candidate, ClassFamily, SearchBounds};
pub use flatnorm::{
    filling_radius, flat_norm, flat_norm_bruteforce, is_homologous, minimal_filling, FlatDecomposition,
};
pub use geometry::{cone, distance_to, select_slice, slice, sublevel, Cone, LevelFunction, SliceSelection};
pub use integrand::{make_area_integrand, GFunctional, Integrand, Phi};
pub use runner::{
    emit_plotdata, oracle_scenario, run_scenario, run_scenario_file, Bundle, PlotKind, RunOptions, Summary,
};
pub use scenario::Scenario;
pub use selection::{
    almost_min_constant, check_almost_minimizing, find_lambda0, linear_deficit_bound, minimize_penalized,
    penalized_value, verify_calibration, AlmostMinReport, LambdaSweep, MinimizerSet, PenalizedProblem, Penalty,
};
pub use stability::{
    norm_chain_check, quadratic_growth_fit, second_variation_form, stability_profile, strict_minimality, GraphFamily,
    GrowthFit, JacobiSpectrum, NormReport, Profile, ProfileRow,
};
