//! Shallow-water stencil schemes on a modelled GPU execution substrate,
//! with traffic and shared-memory instrumentation, occupancy and energy
//! accounting, a Mandelbrot microbenchmark and a CUDA/OpenCL port checker.
//!
//! The numerics are generic over [`Real`]; the aliases below fix the
//! scalar type for the common single- and double-precision cases.

pub mod config;
pub mod ctcs;
pub mod energy;
pub mod error;
pub mod exec;
pub mod grid;
pub mod hires;
pub mod init;
pub mod io;
pub mod linear;
pub mod mandelbrot;
pub mod num;
pub mod occupancy;
pub mod portlint;
pub mod scheme;

pub use error::{Error, Result};
pub use exec::{BlockConfig, DevicePreset, Executor, LaunchSpec, MathMode, Schedule, TrafficStats};
pub use grid::{Bathymetry, Boundary, GridGeometry, SchemeKind, SimParams, SimState};
pub use num::Real;
pub use scheme::{Scheme, Variant};

pub type Field32 = grid::Field<f32>;
pub type Field64 = grid::Field<f64>;
pub type SimState32 = SimState<f32>;
pub type SimState64 = SimState<f64>;
pub type Bathymetry32 = Bathymetry<f32>;
pub type Bathymetry64 = Bathymetry<f64>;
