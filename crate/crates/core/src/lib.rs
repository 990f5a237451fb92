//! Learned dynamical-system motion plans executed under disturbances.
//!
//! A Gaussian-RBF vector field `ż = f(z)` is fit to demonstrations. At run
//! time a CLF-QP pulls the state back toward a target point chosen on the
//! nominal plan by a windowed DTW selector, and an L1 adaptive element
//! estimates and cancels the remaining discrepancy. The [`harness`] module
//! simulates the whole loop and scores runs by DTW distance.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below fix the common case.

pub mod certificate;
pub mod clf;
pub mod disturbance;
pub mod dtw;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod l1;
pub mod linalg;
pub mod plant;
pub mod rbf;
pub mod scalar;
pub mod selector;
pub mod shapes;
pub mod state;
pub mod trajectory;

pub use certificate::{certify, CertificateInputs, CertificateReport};
pub use clf::{clf_qp, clf_value, ClfConfig};
pub use disturbance::{Channel, DisturbanceSpec, Disturbances, HoldWindow, Signal};
pub use dtw::{dtw_distance, dtw_path, DtwParams};
pub use error::{Error, Result};
pub use harness::{
    normalized_dtw, run_imperfect, run_perfect, ControllerStack, RunResult, Scenario, TargetMode,
};
pub use integrate::{rk4_step, rollout, Rollout};
pub use l1::{L1Config, L1Controller, L1State};
pub use linalg::Matrix;
pub use plant::{LowLevelController, PidGains, PlantState};
pub use rbf::{fit_rbf, FitOptions, FitReport, VectorFieldModel};
pub use scalar::Scalar;
pub use selector::{select_target, SelectorConfig, SelectorState};
pub use shapes::{ShapeKind, ShapeParams};
pub use state::{DomainBox, StateVec};
pub use trajectory::Trajectory;

pub type StateF64 = StateVec<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type MatrixF64 = Matrix<f64>;
pub type ModelF64 = VectorFieldModel<f64>;
pub type ClfConfigF64 = ClfConfig<f64>;
pub type L1ConfigF64 = L1Config<f64>;
pub type DisturbancesF64 = Disturbances<f64>;
pub type ScenarioF64 = Scenario<f64>;
pub type RunResultF64 = RunResult<f64>;
pub type CertificateInputsF64 = CertificateInputs<f64>;
pub type CertificateReportF64 = CertificateReport<f64>;
