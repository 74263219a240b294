//! Tessellations, pinching semiconjugacies and lower-end combinatorics for
//! degeneration pairs of quadratic maps `z ↦ z² + c`.

pub mod angles;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod geom;
pub mod henon;
pub mod linearize;
pub mod natext;
pub mod pullback;
pub mod quotient;
pub mod rays;
pub mod render;
pub mod semiconj;
pub mod series;
pub mod tess;

pub use angles::Angle;
pub use error::{Error, Result};
