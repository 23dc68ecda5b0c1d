//! Electromagnetic reflection models for building materials.

mod coeff;
mod link;
mod material;

pub use coeff::{
    echo_decay_length, fit_roughness_kappa, fresnel_thick, reflection_loss, reflection_loss_polarized,
    roughness_factor, slab_coefficient, slab_phase, ComplexReflection, Polarization, RlObservation, FITTED_KAPPA,
};
pub use link::{extract_total_rl, fspl, received_power, LinkBudget, RL_NEGATIVE_SLACK_DB};
pub use material::{builtin, builtin_materials, relative_permittivity, ComplexPermittivity, MaterialParams, MaterialTable};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
