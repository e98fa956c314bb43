//! Built-in test systems: the 24-map hexagram tiling and unit-square
//! helpers.
//!
//! The hexagram tiling lives on a side-6 equilateral triangle subdivided
//! into 36 unit cells. Twenty-four similitudes of ratio 1/6 map the triangle
//! onto the cells away from the centroid; the twelve remaining cells form a
//! unit-edge hexagram whose three alternate tips touch the edge midpoints.
//! Upward cells take a pure translation, downward cells a half-turn.

use crate::geometry::{GeneratorProfile, Point, Polygon};
use crate::system::{RigidMotion, SelfSimilarSystem, Similitude};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Lattice point (i + j/2, j·√3/2) of the unit triangular grid.
fn lattice(i: i32, j: i32) -> Point {
    Point::new(i as f64 + j as f64 / 2.0, j as f64 * SQRT3 / 2.0)
}

/// Upward cells of the hexagram: (i, j) indices excluded from the tiling.
const STAR_UP: [(i32, i32); 6] = [(2, 2), (1, 2), (2, 1), (1, 3), (1, 1), (3, 1)];
/// Downward cells of the hexagram.
const STAR_DOWN: [(i32, i32); 6] = [(1, 2), (1, 1), (2, 1), (2, 2), (0, 2), (2, 0)];

/// The 24-map, ratio-1/6 planar system whose tiling generator is the
/// unit-edge hexagram.
pub fn example1_system() -> SelfSimilarSystem {
    let mut maps = Vec::with_capacity(24);
    // Upward cell (i, j): vertices P(i,j), P(i+1,j), P(i,j+1); image of the
    // hull under z/6 + P(i,j).
    for j in 0..6 {
        for i in 0..(6 - j) {
            if STAR_UP.contains(&(i, j)) {
                continue;
            }
            maps.push(Similitude::with_rigid(
                1.0 / 6.0,
                RigidMotion {
                    rotation: 0.0,
                    reflect: false,
                    translate: lattice(i, j),
                },
            ));
        }
    }
    // Downward cell (i, j): vertices P(i+1,j), P(i+1,j+1), P(i,j+1); image
    // of the hull under -z/6 + P(i+1,j+1).
    for j in 0..5 {
        for i in 0..(5 - j) {
            if STAR_DOWN.contains(&(i, j)) {
                continue;
            }
            maps.push(Similitude::with_rigid(
                1.0 / 6.0,
                RigidMotion {
                    rotation: std::f64::consts::PI,
                    reflect: false,
                    translate: lattice(i + 1, j + 1),
                },
            ));
        }
    }
    SelfSimilarSystem::new(2, maps).expect("builtin system is valid")
}

/// Convex hull of the tiling: the side-6 equilateral triangle.
pub fn example1_hull() -> Polygon {
    Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(6.0, 0.0),
        Point::new(3.0, 3.0 * SQRT3),
    ])
    .expect("hull triangle is valid")
}

/// The generator polygon in tiling coordinates: the unit-edge hexagram
/// centered at the hull centroid (3, √3).
pub fn example1_generator() -> Polygon {
    let (hexagram, _) = crate::geometry::hexagram_builtin();
    let center = Point::new(3.0, SQRT3);
    Polygon::new(
        hexagram
            .vertices()
            .iter()
            .map(|p| Point::new(p.x + center.x, p.y + center.y))
            .collect(),
    )
    .expect("translated hexagram is valid")
}

/// Unit square as a polygon.
pub fn unit_square_polygon() -> Polygon {
    Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ])
    .expect("unit square is valid")
}

/// Unit-square profile: V(ε) = 4ε − 4ε² up to h = g = 1/2, then area 1.
/// The transition band is empty, so no λ is needed.
pub fn unit_square_profile() -> GeneratorProfile {
    GeneratorProfile::new(2, vec![-4.0, 4.0, -1.0], 0.5, 0.5, None)
        .expect("square profile is consistent")
}
