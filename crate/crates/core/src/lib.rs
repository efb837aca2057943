//! Local randomized neural network trial spaces glued by hybridized
//! discontinuous Petrov-Galerkin weak forms for Darcy, Stokes, Brinkman, and
//! coupled Stokes-Darcy flow, solved as dense least-squares problems.

pub(crate) mod assembly;
pub mod coupled;
pub mod darcy;
pub mod error;
pub mod features;
pub mod mesh;
pub mod metrics;
pub mod poly;
pub mod problems;
pub mod quadrature;
pub mod runner;
pub mod stokes;
pub mod system;

pub use error::{Error, Result};
pub use features::{EdgeFeatureSpace, ElementFeatureSpace, FeatureSpaceConfig, Field};
pub use mesh::{Domain, Edge, EdgeKind, Element, Mesh, Point, Side, Subdomain};
pub use system::{
    residual_by_provenance, solve_least_squares, ColumnLayout, DenseSystem, Equation,
    LeastSquaresSolution, RowTag,
};
pub use coupled::{assemble_stokes_darcy, CoupledSchemeConfig, InterfaceConfig, Placement};
pub use darcy::{assemble_darcy, eval_darcy_solution, DarcySchemeConfig, DarcyVariant};
pub use metrics::ErrorReport;
pub use problems::{
    example1, example2, example3, example4, example5, preset_run_table, CoupledProblem, DarcyProblem, InterfaceLaw,
    StokesProblem,
};
pub use runner::{run, write_csv, RunConfig, RunRecord, Scheme};
pub use stokes::{assemble_brinkman, assemble_hdpg_stokes, eval_stokes_solution, StokesSchemeConfig};
