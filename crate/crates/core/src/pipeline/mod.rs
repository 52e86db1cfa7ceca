//! Experiment drivers: synthetic tool-contact sequences, sequential force
//! estimation, end-to-end registration, gradient audits, and their file
//! layouts and configs.

pub mod bundle;
pub mod commands;
pub mod config;
mod estimate;
mod gradcheck;
mod register;
mod synthetic;
mod targets;

pub use estimate::{estimate_clouds, estimate_sequence, relative_error, EstimationRecord, SequenceEstimate};
pub use gradcheck::{gradient_audit, AuditParams, DirectionCheck, GradientAudit};
pub use register::{register, RegistrationOutcome, RegistrationParams, RegistrationReport};
pub use synthetic::{adjacent_pair_near, generate_case, CaseParams, CaseStep, SyntheticCase};
pub use targets::{interpolate, locate_point, Location};
