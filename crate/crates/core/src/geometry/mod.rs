//! Generator geometry: polygons, their inner ε-neighborhood volumes, the
//! three-regime volume profile, and a pixel-counting oracle.
//!
//! Everything here is immutable after construction and every operation is a
//! pure function, so values can be shared freely across threads.

mod polygon;
pub mod profile;
mod raster;

pub use polygon::{
    corner_defect, point_segment_distance, polygon_area, steiner_coefficients, Point, Polygon,
};
pub use profile::{
    hexagram_lambda, profile_volume, scaled_profile_volume, GeneratorProfile, LambdaSpec,
    LambdaTable, MIN_TABLE_KNOTS,
};
pub use raster::{
    inner_tube_volume_raster, inner_tube_volume_raster_with_image, RasterEstimate, RasterImage,
    MIN_RESOLUTION,
};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertex is not finite")]
    NonFiniteVertex,
    #[error("zero-length edge starting at vertex {0}")]
    DegenerateEdge(usize),
    #[error("polygon must be counterclockwise with positive area (signed area {0})")]
    NotCounterclockwise(f64),
    #[error("boundary turns back on itself at vertex {0}")]
    SpikeVertex(usize),
    #[error("edges {0} and {1} intersect; polygon must be simple")]
    SelfIntersection(usize, usize),
    #[error("interior angle {0} outside (0, 2π)")]
    AngleOutOfRange(f64),
    #[error("ambient dimension must be positive, got {0}")]
    BadDimension(u32),
    #[error("kappa list has {got} entries, need d+1 = {need}")]
    KappaLength { got: usize, need: usize },
    #[error("kappa coefficients must be finite")]
    NonFiniteKappa,
    #[error("kappa_d = {0} must be negative (minus the generator volume)")]
    NonNegativeKappaD(f64),
    #[error("polynomial regime bound h = {0} must be positive and finite")]
    BadRegimeBound(f64),
    #[error("inradius g = {g} must be at least h = {h}")]
    InradiusBelowH { h: f64, g: f64 },
    #[error("profile has h < g but no lambda specification (h = {h}, g = {g})")]
    MissingLambda { h: f64, g: f64 },
    #[error("lambda table domain {table:?} does not match [h, g] = {profile:?}")]
    TableDomainMismatch {
        table: (f64, f64),
        profile: (f64, f64),
    },
    #[error("lambda table has {got} knots, need at least {need}")]
    TableTooSparse { got: usize, need: usize },
    #[error("lambda table abscissae must be strictly increasing (violated near u = {0})")]
    TableNotIncreasing(f64),
    #[error("lambda table entries must be finite")]
    NonFiniteTableEntry,
    #[error("polynomial regime and lambda disagree at h = {at}: {polynomial} vs {lambda}")]
    RegimeDiscontinuity {
        at: f64,
        polynomial: f64,
        lambda: f64,
    },
    #[error("lambda(g) = {lambda_g} does not reach the generator volume {volume}")]
    SaturationMismatch { lambda_g: f64, volume: f64 },
    #[error("profile volume decreases near ε = {at}")]
    NotMonotone { at: f64 },
    #[error("ε = {0} must be positive and finite")]
    BadEpsilon(f64),
    #[error("resolution {got} below the documented minimum {need} pixels per unit")]
    ResolutionTooLow { got: u32, need: u32 },
}

/// The unit-edge hexagram: twelve vertices alternating between inradius-1
/// reflex corners and radius-√3 tips, together with its exact volume
/// profile (d = 2, κ₀ = π−6√3, κ₁ = 12, κ₂ = −3√3, h = 1/√3, g = 1, closed
/// form λ).
pub fn hexagram_builtin() -> (Polygon, GeneratorProfile) {
    let s3 = 3f64.sqrt();
    let mut vertices = Vec::with_capacity(12);
    for k in 0..6 {
        let a0 = std::f64::consts::PI / 3.0 * k as f64;
        let a1 = a0 + std::f64::consts::PI / 6.0;
        vertices.push(Point::new(a0.cos(), a0.sin()));
        vertices.push(Point::new(s3 * a1.cos(), s3 * a1.sin()));
    }
    let polygon = Polygon::new(vertices).expect("hexagram vertices are valid");
    let profile = GeneratorProfile::new(
        2,
        vec![std::f64::consts::PI - 6.0 * s3, 12.0, -3.0 * s3],
        s3.recip(),
        1.0,
        Some(LambdaSpec::Hexagram),
    )
    .expect("hexagram profile is consistent");
    (polygon, profile)
}
