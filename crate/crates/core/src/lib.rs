//! Reflection-loss modelling and map-assisted material identification for
//! millimetre-wave and terahertz radio.
//!
//! * [`em`]: permittivity, Fresnel and slab coefficients, reflection loss, link budget.
//! * [`settling`]: settling thickness of finite slabs.
//! * [`rldb`]: gridded reflection-loss database.
//! * [`scene`]: polygon scenes and image-method tracing.
//! * [`identify`]: candidate enumeration, measurement matching and cross-trajectory merging.

pub mod csvio;
pub mod demo;
pub mod em;
mod error;
pub mod identify;
pub mod rldb;
pub mod scene;
pub mod settling;

pub use error::{Error, Result};
pub use identify::{identify_loop, BeliefState, MeasurementRecord, RpKey, SequenceCandidate};
pub use em::{ComplexPermittivity, ComplexReflection, LinkBudget, MaterialParams, MaterialTable, Polarization};
pub use rldb::RlDatabase;
pub use scene::{trace, Facet, Scene, Trajectory};
pub use settling::{settling_thickness, thickness_sweep, SettlingQuery};
