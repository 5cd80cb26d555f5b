//! Weighted normal flows of toroidal graphs in the Horowitz-Myers geon
//!
//! ```text
//! g = ds² + (φ_s)² dξ² + φ² Σ (dθ^i)²,   φ(s) = cosh^{2/n}(ns/2),   n ∈ {3, 4}
//! ```
//!
//! The crate evaluates the background geometry and its conformal
//! rescalings, the curvature of graphs over the flat torus, the functional
//! `Q(Σ) = n(n−1)∫_Ω φ − ∫_Σ φH` and the flows `∂F/∂t = ν/φ` (n = 3) and
//! `∂F/∂t = ν/(φ φ_s)` (n = 4). Finite-difference oracles in [`oracle`]
//! check every closed form independently.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod background;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod functional;
pub mod io;
pub mod numerics;
pub mod oracle;
pub mod spectral;
pub mod surface;

pub use background::{Dimension, GeonParams, RadialJet, RadialProfile};
pub use curvature::{ConformalChoice, CurvatureTable};
pub use error::{GeonError, Result};
pub use flow::{DiagnosticsRow, FlowConfig, FlowEngine, FlowExit, InitialData, Mode, RunOutcome};
pub use functional::QReport;
pub use spectral::{Axis, PeriodicGrid, Spectral2d};
pub use surface::{GraphSurface, SurfaceGeometry};
