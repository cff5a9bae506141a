//! Sound absorption estimation from double-layer microphone array data.
//!
//! The forward model evaluates the exact field of a point source above a
//! locally reacting porous layer. The inverse model fits the measured
//! pressures with a real source, an image source and a line of complex image
//! sources, regularised with Tikhonov and an L-curve corner. The fitted
//! sources are then propagated to the sample surface to recover its
//! impedance and absorption coefficient.
//!
//! Everything is generic over [`num::Real`]; the `*64` aliases below are the
//! instantiations used by the command line tool.

pub mod error;
pub mod material;
pub mod num;
pub mod bessel;
pub mod integrate;
pub mod greens;
pub mod geometry;
pub mod quadrature;
pub mod field;
pub mod measurement;
pub mod inverse;
pub mod reconstruction;

pub use nalgebra::{DMatrix, DVector, Point3};

pub use error::{Error, Result};
pub use field::{FieldSample, Scene, SommerfeldOptions};
pub use geometry::{ArrayGeometry, ReconstructionGrid};
pub use inverse::{LineUnits, ModelKind, SourceModel};
pub use material::{AirProperties, PorousMaterial, SlottedPanel};
pub use measurement::MeasurementSet;
pub use num::{Cplx, Real};
pub use quadrature::{QuadratureRule, Scheme};
pub use reconstruction::AbsorptionResult;

pub type C64 = Cplx<f64>;
pub type Scene64 = Scene<f64>;
pub type Air64 = AirProperties<f64>;
pub type Porous64 = PorousMaterial<f64>;
pub type Array64 = ArrayGeometry<f64>;
pub type Grid64 = ReconstructionGrid<f64>;
pub type Rule64 = QuadratureRule<f64>;
pub type Model64 = SourceModel<f64>;
pub type Measurement64 = MeasurementSet<f64>;
pub type Absorption64 = AbsorptionResult<f64>;

pub type Scene32 = Scene<f32>;
pub type Model32 = SourceModel<f32>;
