//! Virtual p-u sound intensity probe built from four-wire thermal particle
//! velocity sensors and a back-chamber pressure sensor.
//!
//! - [`field`]: analytic plane-wave, standing-wave and monopole fields
//! - [`probe`]: sensor geometry, channel responses, selfnoise, time series
//! - [`calib`]: directivity correction by signal mixing, 3D velocity solve
//! - [`intensity`]: active/reactive intensity and levels
//! - [`bench`]: configuration, virtual experiments, CSV and SVG output

pub mod bench;
pub mod calib;
pub mod error;
pub mod field;
pub mod intensity;
pub mod probe;

pub use error::{Error, Result};
