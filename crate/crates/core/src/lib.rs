//! Variable-exponent Lebesgue and Triebel-Lizorkin quasi-norms on a periodic
//! grid, phi-transforms, Calderón-product factorizations and complex
//! interpolation diagnostics.
//!
//! The numerical core is generic over [`num::Real`]; the `*64` and `*32`
//! aliases below fix the scalar type.

pub mod error;
pub mod exponents;
pub mod fft;
pub mod grid;
pub mod num;
pub mod lebesgue;
pub mod kernels;
pub mod seqspaces;
pub mod lpf;
pub mod calderon;
pub mod interp;
pub mod corpus;
pub mod report;
pub mod config;
pub mod experiment;
pub mod suite;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use error::{Error, Result};
pub use experiment::{run, Report};
pub use exponents::{Recipe, Role};
pub use grid::DyadicCube;
pub use num::Real;

pub type Grid64 = grid::Grid<f64>;
pub type Grid32 = grid::Grid<f32>;
pub type GridFunction64 = grid::GridFunction<f64>;
pub type GridFunction32 = grid::GridFunction<f32>;
pub type ExponentField64 = exponents::ExponentField<f64>;
pub type ExponentField32 = exponents::ExponentField<f32>;
pub type DyadicCoefficients64 = seqspaces::DyadicCoefficients<f64>;
pub type DyadicCoefficients32 = seqspaces::DyadicCoefficients<f32>;
pub type FilterBank64 = lpf::FilterBank<f64>;
pub type FilterBank32 = lpf::FilterBank<f32>;
pub type FactorizationParams64 = calderon::FactorizationParams<f64>;
pub type FactorizationParams32 = calderon::FactorizationParams<f32>;
