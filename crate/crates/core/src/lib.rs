//! Inner ε-neighborhood volumes of self-similar fractal tilings, computed
//! two independent ways and cross-checked:
//!
//! * a truncated residue series for the geometric ζ-function over the
//!   complex dimensions of the scaling system ([`tube`]), and
//! * exact direct summation over all scaled generator copies with a closed
//!   geometric-series tail ([`oracle`]).
//!
//! Generators may be non-convex and non-Steiner-like: the volume profile
//! carries a polynomial regime below `h`, an arbitrary continuous,
//! piecewise-C¹ transition band λ on `[h, g]`, and saturation beyond the
//! inradius `g`. Raster oracles give independent pixel-counting checks of
//! polygon volumes and tiling conditions.

pub mod config;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod oracle;
pub mod quad;
pub mod run;
pub mod spectrum;
pub mod system;
pub mod tube;

pub use geometry::{GeneratorProfile, Point, Polygon};
pub use spectrum::{DimensionSet, ScalingZeta};
pub use system::SelfSimilarSystem;
pub use tube::{GeometricZeta, QuadratureSpec, TubeEvaluation};
