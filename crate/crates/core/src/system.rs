//! Iterated function systems of contracting similitudes: standing-assumption
//! validation, aggregated enumeration of word scaling ratios, and advisory
//! raster checks of the tileset and non-triviality conditions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Point, Polygon};

#[derive(Debug, Clone, Error)]
pub enum SystemError {
    #[error("system needs at least 2 maps, got {0}")]
    TooFewMaps(usize),
    #[error("map {index} has ratio {ratio}, need a value in (0, 1)")]
    RatioOutOfRange { index: usize, ratio: f64 },
    #[error("sum of ratio^d is {0}, need < 1 so the tiling has finite volume")]
    ContractionTooWeak(f64),
    #[error("cutoff {0} must be positive")]
    BadCutoff(f64),
    #[error("enumeration exceeded the node budget of {budget} aggregate expansions")]
    BudgetExceeded { budget: u64 },
    #[error("raster condition check needs d = 2 and rigid parts on every map")]
    UnsupportedConfiguration,
}

/// A contracting similitude: scaling ratio in (0, 1) plus an optional rigid
/// part (rotation, reflection, translation) for planar rendering.
#[derive(Debug, Clone)]
pub struct Similitude {
    ratio: f64,
    rigid: Option<RigidMotion>,
}

#[derive(Debug, Clone, Copy)]
pub struct RigidMotion {
    /// Rotation angle in radians, applied after the optional reflection.
    pub rotation: f64,
    /// Reflect across the x-axis before rotating.
    pub reflect: bool,
    pub translate: Point,
}

impl Similitude {
    pub fn new(ratio: f64) -> Self {
        Similitude { ratio, rigid: None }
    }

    pub fn with_rigid(ratio: f64, rigid: RigidMotion) -> Self {
        Similitude {
            ratio,
            rigid: Some(rigid),
        }
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn rigid(&self) -> Option<&RigidMotion> {
        self.rigid.as_ref()
    }

    /// Apply the planar map. Panics if the rigid part is missing; callers
    /// gate on `rigid()` first.
    pub fn apply(&self, p: Point) -> Point {
        let rigid = self.rigid.as_ref().expect("similitude has no rigid part");
        let y = if rigid.reflect { -p.y } else { p.y };
        let (sin, cos) = rigid.rotation.sin_cos();
        Point::new(
            self.ratio * (cos * p.x - sin * y) + rigid.translate.x,
            self.ratio * (sin * p.x + cos * y) + rigid.translate.y,
        )
    }

    pub fn apply_polygon(&self, polygon: &Polygon) -> Vec<Point> {
        polygon.vertices().iter().map(|&p| self.apply(p)).collect()
    }

    /// Compose two similitudes: (self ∘ other)(p) = self(other(p)).
    pub fn compose(&self, other: &Similitude) -> Similitude {
        let a = self.rigid.as_ref().expect("composition needs rigid parts");
        let b = other.rigid.as_ref().expect("composition needs rigid parts");
        // Work out the combined reflection/rotation and translation by
        // pushing other's frame through self.
        let reflect = a.reflect != b.reflect;
        let rotation = if a.reflect {
            a.rotation - b.rotation
        } else {
            a.rotation + b.rotation
        };
        let translate = self.apply(b.translate);
        Similitude {
            ratio: self.ratio * other.ratio,
            rigid: Some(RigidMotion {
                rotation,
                reflect,
                translate,
            }),
        }
    }
}

/// The system of maps together with the ambient dimension.
#[derive(Debug, Clone)]
pub struct SelfSimilarSystem {
    d: u32,
    maps: Vec<Similitude>,
}

impl SelfSimilarSystem {
    pub fn new(d: u32, maps: Vec<Similitude>) -> Result<Self, SystemError> {
        if maps.len() < 2 {
            return Err(SystemError::TooFewMaps(maps.len()));
        }
        for (index, m) in maps.iter().enumerate() {
            if !(m.ratio > 0.0 && m.ratio < 1.0) || !m.ratio.is_finite() {
                return Err(SystemError::RatioOutOfRange {
                    index,
                    ratio: m.ratio,
                });
            }
        }
        let moment: f64 = maps.iter().map(|m| m.ratio.powi(d as i32)).sum();
        if !(moment < 1.0) {
            return Err(SystemError::ContractionTooWeak(moment));
        }
        Ok(SelfSimilarSystem { d, maps })
    }

    /// Shorthand for `count` maps of equal ratio with no rigid parts.
    pub fn uniform(d: u32, count: usize, ratio: f64) -> Result<Self, SystemError> {
        Self::new(d, vec![Similitude::new(ratio); count])
    }

    pub fn dimension(&self) -> u32 {
        self.d
    }

    pub fn maps(&self) -> &[Similitude] {
        &self.maps
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio).collect()
    }

    /// Σ_j r_j^d, the volume contraction per level; < 1 by construction.
    pub fn dth_moment(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio.powi(self.d as i32)).sum()
    }

    pub fn has_rigid_parts(&self) -> bool {
        self.maps.iter().all(|m| m.rigid.is_some())
    }

    /// Total volume of all tiles: vol_G / (1 − Σ r_j^d).
    pub fn total_tile_volume(&self, vol_g: f64) -> f64 {
        vol_g / (1.0 - self.dth_moment())
    }

    pub fn enumerate_ratios(&self, cutoff: f64) -> Result<RatioAggregate, SystemError> {
        self.enumerate_ratios_with_budget(cutoff, DEFAULT_NODE_BUDGET)
    }

    /// Depth-first expansion of word ratios, aggregated by log-ratio.
    ///
    /// Words are never materialized: the frontier holds (log r_w,
    /// multiplicity) buckets merged at tolerance 1e-12 on log r_w. A word at
    /// or above the cutoff is listed and expanded; once a word drops below
    /// the cutoff its whole subtree is closed into `closure_mass` as
    /// r_w^d / (1 − Σ r_j^d). The root (empty word, ratio 1) is always
    /// listed even when the cutoff exceeds 1.
    pub fn enumerate_ratios_with_budget(
        &self,
        cutoff: f64,
        budget: u64,
    ) -> Result<RatioAggregate, SystemError> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(SystemError::BadCutoff(cutoff));
        }
        let log_cutoff = cutoff.ln();
        let log_ratios: Vec<f64> = self.maps.iter().map(|m| m.ratio.ln()).collect();
        let subtree_factor = 1.0 / (1.0 - self.dth_moment());
        let d = self.d as i32;

        let mut heap: BinaryHeap<Bucket> = BinaryHeap::new();
        heap.push(Bucket {
            log_ratio: 0.0,
            multiplicity: 1,
        });
        let mut entries: Vec<(f64, u64)> = Vec::new();
        let mut closure_mass = 0.0;
        let mut closure_comp = 0.0;
        let mut expansions: u64 = 0;

        while let Some(top) = heap.pop() {
            let mut bucket = top;
            // Merge buckets whose log-ratios coincide within tolerance.
            while let Some(next) = heap.peek() {
                if (next.log_ratio - bucket.log_ratio).abs() <= LOG_MERGE_TOL {
                    bucket.multiplicity += heap.pop().unwrap().multiplicity;
                } else {
                    break;
                }
            }
            expansions += 1;
            if expansions > budget {
                return Err(SystemError::BudgetExceeded { budget });
            }
            let is_root = bucket.log_ratio == 0.0 && entries.is_empty();
            let listed = bucket.log_ratio >= log_cutoff || is_root;
            if listed {
                entries.push((bucket.log_ratio.exp(), bucket.multiplicity));
                for lr in &log_ratios {
                    heap.push(Bucket {
                        log_ratio: bucket.log_ratio + lr,
                        multiplicity: bucket.multiplicity,
                    });
                }
            } else {
                // Close the whole subtree: Σ over the subtree of r^d.
                let mass = bucket.multiplicity as f64
                    * (bucket.log_ratio * d as f64).exp()
                    * subtree_factor;
                let y = mass - closure_comp;
                let t = closure_mass + y;
                closure_comp = (t - closure_mass) - y;
                closure_mass = t;
            }
        }

        let aggregate = RatioAggregate {
            entries,
            cutoff,
            closure_mass,
            subtree_factor,
            dimension: self.d,
        };
        debug_assert!(
            aggregate.conservation_residual() < 1e-10,
            "d-th moment conservation violated: residual {}",
            aggregate.conservation_residual()
        );
        Ok(aggregate)
    }
}

/// Default cap on aggregate expansions; bounded memory with a clear failure.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

const LOG_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bucket {
    log_ratio: f64,
    multiplicity: u64,
}

impl Eq for Bucket {}

impl Ord for Bucket {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_ratio
            .partial_cmp(&other.log_ratio)
            .unwrap_or(Ordering::Equal)
            .then(self.multiplicity.cmp(&other.multiplicity))
    }
}

impl PartialOrd for Bucket {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Word ratios at or above a cutoff, with multiplicities, plus the exact
/// d-th-moment mass of everything below the cutoff.
#[derive(Debug, Clone)]
pub struct RatioAggregate {
    /// (ratio, multiplicity), in decreasing ratio order.
    entries: Vec<(f64, u64)>,
    cutoff: f64,
    closure_mass: f64,
    subtree_factor: f64,
    dimension: u32,
}

impl RatioAggregate {
    pub fn entries(&self) -> &[(f64, u64)] {
        &self.entries
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Smallest listed ratio.
    pub fn min_ratio(&self) -> Option<f64> {
        self.entries.last().map(|e| e.0)
    }

    pub fn closure_mass(&self) -> f64 {
        self.closure_mass
    }

    /// |Σ m·r^d + closure − 1/(1−Σ r_j^d)| relative to the total.
    pub fn conservation_residual(&self) -> f64 {
        let d = self.dimension as i32;
        let mut listed = 0.0;
        let mut comp = 0.0;
        for &(r, m) in &self.entries {
            let y = m as f64 * r.powi(d) - comp;
            let t = listed + y;
            comp = (t - listed) - y;
            listed = t;
        }
        ((listed + self.closure_mass) - self.subtree_factor).abs() / self.subtree_factor
    }

    /// Re-close a finer aggregate at a coarser cutoff: entries below the new
    /// cutoff fold their own d-th moment into the closure mass (their
    /// descendants are already accounted for, either as finer entries that
    /// also fold or inside the existing closure).
    pub fn re_close(&self, coarser_cutoff: f64) -> RatioAggregate {
        assert!(coarser_cutoff >= self.cutoff);
        let d = self.dimension as i32;
        let log_cutoff = coarser_cutoff.ln();
        let mut entries = Vec::new();
        let mut closure = self.closure_mass;
        for (idx, &(r, m)) in self.entries.iter().enumerate() {
            let keep = r.ln() >= log_cutoff || idx == 0;
            if keep {
                entries.push((r, m));
            } else {
                closure += m as f64 * r.powi(d);
            }
        }
        RatioAggregate {
            entries,
            cutoff: coarser_cutoff,
            closure_mass: closure,
            subtree_factor: self.subtree_factor,
            dimension: self.dimension,
        }
    }
}

/// Advisory raster report on the tileset and non-triviality conditions.
#[derive(Debug)]
pub struct ConditionReport {
    pub tileset_ok: bool,
    pub nontrivial_ok: bool,
    /// Area of image pixels falling outside the hull.
    pub outside_area: f64,
    /// Area of pixels claimed by two or more map images.
    pub overlap_area: f64,
    /// Area of hull pixels covered by no image: the generator mask.
    pub uncovered_area: f64,
    /// Pixel error bound the verdicts are measured against.
    pub error_bound: f64,
    pub resolution: u32,
    pub generator_mask: MaskImage,
}

/// Bit mask over the hull bounding box; true marks generator pixels.
#[derive(Debug, Clone)]
pub struct MaskImage {
    pub width: usize,
    pub height: usize,
    pub origin: Point,
    pub resolution: u32,
    pub inside: Vec<bool>,
}

impl MaskImage {
    pub fn area(&self) -> f64 {
        let step = 1.0 / self.resolution as f64;
        self.inside.iter().filter(|&&b| b).count() as f64 * step * step
    }

    pub fn write_pgm<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "P5")?;
        writeln!(out, "{} {}", self.width, self.height)?;
        writeln!(out, "255")?;
        // Stack rows top-down.
        for j in (0..self.height).rev() {
            let row: Vec<u8> = self.inside[j * self.width..(j + 1) * self.width]
                .iter()
                .map(|&b| if b { 255 } else { 0 })
                .collect();
            out.write_all(&row)?;
        }
        Ok(())
    }
}

/// Rasterize the hull and every map image and test the tileset condition
/// (images inside the hull with disjoint interiors) and non-triviality
/// (uncovered interior remains). Resolution-limited and advisory: verdicts
/// are measured against the reported pixel error bound, never trusted by
/// downstream arithmetic.
pub fn raster_condition_check(
    system: &SelfSimilarSystem,
    hull: &Polygon,
    resolution: u32,
) -> Result<ConditionReport, SystemError> {
    if system.d != 2 || !system.has_rigid_parts() {
        return Err(SystemError::UnsupportedConfiguration);
    }
    let images: Vec<Polygon> = system
        .maps
        .iter()
        .map(|m| {
            Polygon::from_loop(m.apply_polygon(hull))
                .map_err(|_| SystemError::UnsupportedConfiguration)
        })
        .collect::<Result<_, _>>()?;

    let (lo, hi) = hull.bounding_box();
    let step = 1.0 / resolution as f64;
    let width = ((hi.x - lo.x) / step).ceil() as usize + 1;
    let height = ((hi.y - lo.y) / step).ceil() as usize + 1;

    let rows: Vec<(u64, u64, u64, Vec<bool>)> = (0..height)
        .into_par_iter()
        .map(|j| {
            let y = lo.y + (j as f64 + 0.5) * step;
            let mut outside = 0u64;
            let mut overlap = 0u64;
            let mut uncovered = 0u64;
            let mut mask = vec![false; width];
            for i in 0..width {
                let p = Point::new(lo.x + (i as f64 + 0.5) * step, y);
                let in_hull = hull.contains(p);
                let mut count = 0u32;
                for img in &images {
                    if img.contains(p) {
                        count += 1;
                    }
                }
                if count > 0 && !in_hull {
                    outside += 1;
                }
                if count >= 2 {
                    overlap += 1;
                }
                if in_hull && count == 0 {
                    uncovered += 1;
                    mask[i] = true;
                }
            }
            (outside, overlap, uncovered, mask)
        })
        .collect();

    let pixel_area = step * step;
    let mut outside_area = 0.0;
    let mut overlap_area = 0.0;
    let mut uncovered_area = 0.0;
    let mut inside = Vec::with_capacity(width * height);
    for (outside, overlap, uncovered, mask) in rows {
        outside_area += outside as f64 * pixel_area;
        overlap_area += overlap as f64 * pixel_area;
        uncovered_area += uncovered as f64 * pixel_area;
        inside.extend_from_slice(&mask);
    }

    let total_perimeter: f64 =
        hull.perimeter() + images.iter().map(|p| p.perimeter()).sum::<f64>();
    let error_bound = 2.0 * total_perimeter / resolution as f64;

    Ok(ConditionReport {
        tileset_ok: outside_area <= error_bound && overlap_area <= error_bound,
        nontrivial_ok: uncovered_area > error_bound,
        outside_area,
        overlap_area,
        uncovered_area,
        error_bound,
        resolution,
        generator_mask: MaskImage {
            width,
            height,
            origin: lo,
            resolution,
            inside,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_system_validation() {
        assert!(SelfSimilarSystem::uniform(2, 24, 1.0 / 6.0).is_ok());
        assert!(matches!(
            SelfSimilarSystem::uniform(2, 1, 0.5),
            Err(SystemError::TooFewMaps(1))
        ));
        assert!(matches!(
            SelfSimilarSystem::uniform(2, 3, 1.2),
            Err(SystemError::RatioOutOfRange { .. })
        ));
        // 4 quarter-maps have Σ r² = 1: no room for a generator.
        assert!(matches!(
            SelfSimilarSystem::uniform(2, 4, 0.5),
            Err(SystemError::ContractionTooWeak(_))
        ));
    }

    #[test]
    fn enumerate_example_system() {
        let sys = SelfSimilarSystem::uniform(2, 24, 1.0 / 6.0).unwrap();
        let agg = sys.enumerate_ratios(0.05).unwrap();
        assert_eq!(agg.entries().len(), 2);
        assert_relative_eq!(agg.entries()[0].0, 1.0, epsilon = 0.0);
        assert_eq!(agg.entries()[0].1, 1);
        assert_relative_eq!(agg.entries()[1].0, 1.0 / 6.0, epsilon = 1e-12);
        assert_eq!(agg.entries()[1].1, 24);
        assert!(agg.conservation_residual() < 1e-10);
    }

    #[test]
    fn enumerate_closure_mass_by_hand() {
        // 3 maps of ratio 1/2, cutoff 0.3: depth ≥ 2 closes with mass
        // 9·(1/4)²/(1 − 3/4) = 2.25.
        let sys = SelfSimilarSystem::uniform(2, 3, 0.5).unwrap();
        let agg = sys.enumerate_ratios(0.3).unwrap();
        assert_eq!(agg.entries().len(), 2);
        assert_eq!(agg.entries()[1], (0.5, 3));
        assert_relative_eq!(agg.closure_mass(), 2.25, epsilon = 1e-12);
    }

    #[test]
    fn enumerate_with_cutoff_above_one() {
        let sys = SelfSimilarSystem::uniform(2, 3, 0.5).unwrap();
        for cutoff in [1.0, 2.5] {
            let agg = sys.enumerate_ratios(cutoff).unwrap();
            assert_eq!(agg.entries(), &[(1.0, 1)]);
            assert_relative_eq!(agg.closure_mass(), 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn multiplicities_are_powers_of_map_count() {
        let sys = SelfSimilarSystem::uniform(2, 3, 0.5).unwrap();
        let agg = sys.enumerate_ratios(0.05).unwrap();
        // Depths 0..=4 stay at or above 0.05.
        let expect: Vec<(f64, u64)> = (0..=4).map(|k| (0.5f64.powi(k), 3u64.pow(k as u32))).collect();
        assert_eq!(agg.entries().len(), expect.len());
        for (got, want) in agg.entries().iter().zip(&expect) {
            assert_relative_eq!(got.0, want.0, epsilon = 1e-12);
            assert_eq!(got.1, want.1);
        }
    }

    #[test]
    fn budget_exceeded_names_budget() {
        // Incommensurable ratios keep the buckets from merging, so the
        // aggregate tree grows quadratically with depth.
        let sys =
            SelfSimilarSystem::new(2, vec![Similitude::new(0.7), Similitude::new(0.6)]).unwrap();
        let err = sys.enumerate_ratios_with_budget(1e-6, 100).unwrap_err();
        assert!(matches!(err, SystemError::BudgetExceeded { budget: 100 }));
    }

    #[test]
    fn re_close_matches_direct_enumeration() {
        let sys =
            SelfSimilarSystem::new(2, vec![Similitude::new(0.5), Similitude::new(0.3)]).unwrap();
        let fine = sys.enumerate_ratios(0.01).unwrap();
        let coarse = sys.enumerate_ratios(0.1).unwrap();
        let reclosed = fine.re_close(0.1);
        assert_eq!(reclosed.entries(), coarse.entries());
        assert_relative_eq!(
            reclosed.closure_mass(),
            coarse.closure_mass(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn total_tile_volume_values() {
        let sys = SelfSimilarSystem::uniform(2, 24, 1.0 / 6.0).unwrap();
        assert_relative_eq!(
            sys.total_tile_volume(3.0 * 3f64.sqrt()),
            9.0 * 3f64.sqrt(),
            epsilon = 1e-12
        );
        let toy = SelfSimilarSystem::uniform(2, 3, 0.5).unwrap();
        assert_relative_eq!(toy.total_tile_volume(1.0), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn similitude_composition_matches_application() {
        let a = Similitude::with_rigid(
            0.5,
            RigidMotion {
                rotation: 0.7,
                reflect: true,
                translate: Point::new(1.0, -2.0),
            },
        );
        let b = Similitude::with_rigid(
            0.3,
            RigidMotion {
                rotation: -1.2,
                reflect: false,
                translate: Point::new(0.4, 0.9),
            },
        );
        let ab = a.compose(&b);
        for &p in &[Point::new(0.0, 0.0), Point::new(1.0, 2.0), Point::new(-3.0, 0.5)] {
            let direct = a.apply(b.apply(p));
            let composed = ab.apply(p);
            assert_relative_eq!(direct.x, composed.x, epsilon = 1e-12);
            assert_relative_eq!(direct.y, composed.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn overlapping_maps_fail_tileset() {
        let rigid = RigidMotion {
            rotation: 0.0,
            reflect: false,
            translate: Point::new(0.25, 0.25),
        };
        let sys = SelfSimilarSystem::new(
            2,
            vec![
                Similitude::with_rigid(0.5, rigid),
                Similitude::with_rigid(0.5, rigid),
            ],
        )
        .unwrap();
        let hull = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let report = raster_condition_check(&sys, &hull, 128).unwrap();
        assert!(!report.tileset_ok);
        assert!(report.overlap_area > report.error_bound);
    }

    #[test]
    fn thin_strip_cannot_certify_nontriviality() {
        // An interval-like strip: the uncovered sliver drowns in the raster
        // error bound, so the advisory verdict must be false.
        let delta = 0.002;
        let strip = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, delta),
            Point::new(0.0, delta),
        ])
        .unwrap();
        let sys = SelfSimilarSystem::new(
            2,
            vec![
                Similitude::with_rigid(
                    0.5,
                    RigidMotion {
                        rotation: 0.0,
                        reflect: false,
                        translate: Point::new(0.0, 0.0),
                    },
                ),
                Similitude::with_rigid(
                    0.5,
                    RigidMotion {
                        rotation: 0.0,
                        reflect: false,
                        translate: Point::new(0.5, 0.0),
                    },
                ),
            ],
        )
        .unwrap();
        let report = raster_condition_check(&sys, &strip, 1000).unwrap();
        assert!(report.tileset_ok);
        assert!(!report.nontrivial_ok);
    }

    #[test]
    fn missing_rigid_parts_rejected() {
        let sys = SelfSimilarSystem::uniform(2, 3, 0.5).unwrap();
        let hull = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 1.0),
        ])
        .unwrap();
        assert!(matches!(
            raster_condition_check(&sys, &hull, 128),
            Err(SystemError::UnsupportedConfiguration)
        ));
    }
}
