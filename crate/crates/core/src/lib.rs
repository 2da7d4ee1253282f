pub mod battery;
pub mod bodyframe;
pub mod classify;
pub mod elliptic;
pub mod error;
pub mod neumann;
pub mod ode;
pub mod params;
pub mod poly;
pub mod quad;
pub mod quadratures;
pub mod runtime;
pub mod voronec;

pub use error::{Error, Result};
