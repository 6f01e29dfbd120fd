//! Quaternion-based rigid-body model of a cube balancing on one vertex with
//! three orthogonal reaction wheels.
//!
//! The crate is organised bottom-up:
//!
//! - [`quat`]: quaternion algebra and the passive (frame) rotation.
//! - [`kinematics`]: the Lagrange matrix `G`, the quaternion kinematic
//!   equation and Z-X-Z Euler angles for reporting.
//! - [`model`]: physical parameters and every derived constant.
//! - [`dynamics`]: the 13-state equations of motion and the symmetric-top
//!   reference model.
//! - [`integrate`]: fixed-step RK4 with quaternion renormalisation.
//! - [`analysis`]: energy, momentum projections and Poinsot families.
//! - [`scenario`]: the built-in validation runs, config files and CSV output
//!   used by the `cubli` binary.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod kinematics;
mod kv;
pub mod model;
pub mod quat;
pub mod scenario;

pub use error::{Error, Result};
pub use quat::{Quaternion, Vec3};

pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Vec4 = nalgebra::Vector4<f64>;
pub type Mat4 = nalgebra::Matrix4<f64>;
