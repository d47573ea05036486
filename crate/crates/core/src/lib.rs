//! Pseudospectral stochastic SQG on the 2-torus: Galerkin integration,
//! balance identities, time-averaged stationary statistics and a
//! finite-dimensional Hamiltonian test rig.

pub mod error;
pub mod forcing;
pub mod functionals;
pub mod integrator;
pub mod measure;
pub mod sandbox;
pub mod spectral;
pub mod stats;

pub use error::{Result, SqgError};
pub use forcing::{AmplitudeRule, BasisFunction, EigenBasis, NoiseSpec, Parity, RngStream};
pub use functionals::{BalanceIdentity, BalanceReport, CasimirFunction, Observable, ObservableSet};
pub use integrator::{
    run_ensemble, run_trajectory, EnsembleResult, EnsembleStats, ExplicitScheme, InitialCondition,
    NoiseScheme, SimConfig, Stepper, StepperState, Trajectory, TrajectoryFailure,
};
pub use measure::{MomentLedger, StationaryPlan, StationaryResidual, SweepResult};
pub use sandbox::{HamiltonianSystem, SandboxConfig, SystemKind};
pub use stats::Estimate;
pub use spectral::{Grid, GridSpec, RealField, SpectralField, WaveVector};
