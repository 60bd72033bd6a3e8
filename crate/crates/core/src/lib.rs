//! Mean-field propagation, Langevin fluctuation dynamics and DGCZ entanglement
//! of a signal/control field pair in a coherently prepared Λ medium.
//!
//! Units: Γ = 1, medium length L = 1, coupling g = 1 unless stated otherwise.
//! The field-fluctuation vector is ordered `(a_s, a_s†, a_c, a_c†)`.

pub mod analytic;
pub mod complex_serde;
pub mod correlation;
pub mod error;
pub mod fluctuation;
pub mod integrator;
pub mod io;
pub mod mean_field;
pub mod params;
pub mod simplex;
pub mod sweep;
pub mod vortex;

pub use num_complex::Complex64 as C64;

pub use correlation::{
    dgcz_theta, dgcz_value, propagate_correlations, vacuum_initial_correlations,
    CorrelationState, EntanglementResult, PropagationMode,
};
pub use error::{Error, Result};
pub use mean_field::{beta_coefficients, mean_field_coherences, propagate_mean_field, FieldState};
pub use params::ModelParams;
