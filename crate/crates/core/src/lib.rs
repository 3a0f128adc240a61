pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod integrator;
pub mod noise;
pub mod psdo;
pub mod rng;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = spectral::TorusGrid<f64>;
pub type Field = spectral::GridFunction<f64>;
pub type Multiplier = spectral::MultiplierSymbol<f64>;
pub type Symbol = psdo::FullSymbol<f64>;
pub type NoiseOperator = psdo::NoiseOperatorSpec<f64>;
pub type Solver = integrator::Integrator<f64>;
pub type SamplePath = integrator::Trajectory<f64>;
