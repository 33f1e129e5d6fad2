//! Neumann-series solution of the Kramers velocity-slip problem for a
//! degenerate Fermi gas with diffuse–specular wall reflection.
//!
//! The slip velocity and the velocity profile in the Knudsen layer are built
//! order by order in the accommodation coefficient `q`. A direct discrete
//! ordinates solver in [`oracle`] serves as an independent reference.

pub mod error;
pub mod fermi;
pub mod grid;
pub mod kernels;
pub mod oracle;
pub mod output;
pub mod profile;
pub mod quadrature;
pub mod series;
pub mod spline;

pub use error::{Error, Result};
pub use fermi::{fermi_log_moment, kv_prefactor, ReducedChemicalPotential};
pub use grid::KGrid;
pub use kernels::{eval_j, eval_l, eval_phi0, eval_s, eval_t, KernelValue};
pub use quadrature::QuadratureSpec;
pub use series::{
    build_e0, fredholm_residual, next_e, next_v, slip_coefficient, slip_velocity, solve_series, spectral_phi, SeriesCoefficients,
    SeriesSolution, SlipSolution, SpectralDensity, TransferOperator,
};
pub use oracle::{bc_residual, extract_slip, solve_halfspace, OracleConfig, OracleSolution};
pub use profile::{
    uc_component, velocity_profile, wall_velocity, AssembledSeries, ProfileRequest, VelocityProfile,
};
