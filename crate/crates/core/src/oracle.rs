//! Ground truth for the tube volume: direct summation over all scaled
//! generator copies with an exact geometric-series tail, a raster tiling
//! oracle, and the sweep harness comparing the residue series against the
//! direct sum.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{GeneratorProfile, Point, Polygon};
use crate::spectrum::DimensionSet;
use crate::system::{SelfSimilarSystem, Similitude, SystemError};
use crate::tube::{tube_formula_sweep, GeometricZeta, TubeError, TubeEvaluation};

#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("ε = {0} must be positive and finite")]
    BadEpsilon(f64),
    #[error("profile dimension {profile} does not match system dimension {system}")]
    DimensionMismatch { profile: u32, system: u32 },
    #[error("enumeration budget exhausted at ε = {eps}; a larger ε (or budget) keeps the word tree finite: {source}")]
    Enumeration { eps: f64, source: SystemError },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("sweep grid must be strictly increasing and inside (0, h = {h}); offending ε = {eps}")]
    BadGrid { eps: f64, h: f64 },
    #[error("raster tiling depth {0} exceeds the supported maximum 4")]
    DepthTooDeep(u32),
    #[error("raster tiling needs d = 2 and rigid parts on every map")]
    UnsupportedConfiguration,
    #[error("tiles at depth {depth} are not saturated at ε = {eps} (needs ε > {needed}); increase depth or ε")]
    TailNotSaturated { depth: u32, eps: f64, needed: f64 },
    #[error("tile interiors overlap beyond the raster bound: overlap area {overlap}, bound {bound}")]
    TilingInconsistent { overlap: f64, bound: f64 },
}

/// V(ε) = Σ_w V(r_w, ε) summed exactly: words with r_w ≥ ε/g are
/// enumerated (aggregated by ratio) and everything below is saturated, so
/// each closed subtree contributes its d-th-moment mass times the generator
/// volume. Exact up to λ evaluation error.
pub fn direct_tile_sum(
    system: &SelfSimilarSystem,
    profile: &GeneratorProfile,
    eps: f64,
) -> Result<f64, OracleError> {
    direct_tile_sum_with_cutoff(system, profile, eps, eps / profile.inradius())
}

/// The same sum with an explicit enumeration cutoff; any cutoff at or below
/// ε/g gives the same value, because the extra listed words are saturated
/// anyway.
pub fn direct_tile_sum_with_cutoff(
    system: &SelfSimilarSystem,
    profile: &GeneratorProfile,
    eps: f64,
    cutoff: f64,
) -> Result<f64, OracleError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(OracleError::BadEpsilon(eps));
    }
    if system.dimension() != profile.dimension() {
        return Err(OracleError::DimensionMismatch {
            profile: profile.dimension(),
            system: system.dimension(),
        });
    }
    debug_assert!(
        cutoff <= eps / profile.inradius() * (1.0 + 1e-12),
        "cutoff above eps/g closes unsaturated subtrees"
    );
    let aggregate = system.enumerate_ratios(cutoff).map_err(|e| match e {
        SystemError::BudgetExceeded { .. } => OracleError::Enumeration { eps, source: e },
        other => OracleError::System(other),
    })?;
    // Kahan over the listed entries.
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &(ratio, multiplicity) in aggregate.entries() {
        let term = multiplicity as f64 * profile.scaled_volume(ratio, eps);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum + aggregate.closure_mass() * profile.generator_volume())
}

/// One row of a sweep: the residue evaluation and the direct oracle at one
/// ε, or the error that stopped that row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub eps: f64,
    pub outcome: Result<SweepValues, String>,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepValues {
    pub tube: TubeEvaluation,
    pub direct: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

/// Residue series vs direct sum across an ε grid.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub truncation: u64,
    pub cutoff_policy: String,
}

impl SweepReport {
    /// Largest relative error over the successful rows.
    pub fn max_rel_err(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|v| v.rel_err))
            .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.max(e))))
    }

    /// CSV rows under the shared column set:
    /// eps,N,integer_part,complex_part,total,direct_oracle,abs_err,rel_err,imag_leak.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "eps,N,integer_part,complex_part,total,direct_oracle,abs_err,rel_err,imag_leak"
        )?;
        for row in &self.rows {
            match &row.outcome {
                Ok(v) => writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    crate::io::fmt_f64(row.eps),
                    self.truncation,
                    crate::io::fmt_f64(v.tube.integer_part),
                    crate::io::fmt_f64(v.tube.complex_part),
                    crate::io::fmt_f64(v.tube.total),
                    crate::io::fmt_f64(v.direct),
                    crate::io::fmt_f64(v.abs_err),
                    crate::io::fmt_f64(v.rel_err),
                    crate::io::fmt_f64(v.tube.imag_leak),
                )?,
                Err(_) => writeln!(
                    out,
                    "{},{},nan,nan,nan,nan,nan,nan,nan",
                    crate::io::fmt_f64(row.eps),
                    self.truncation,
                )?,
            }
        }
        Ok(())
    }

    pub fn to_plot<'a>(&self, title: &'a str) -> crate::io::SweepPlot<'a> {
        let mut residue = Vec::new();
        let mut direct = Vec::new();
        let mut rel_err = Vec::new();
        for row in &self.rows {
            if let Ok(v) = &row.outcome {
                residue.push((row.eps, v.tube.total));
                direct.push((row.eps, v.direct));
                rel_err.push((row.eps, v.rel_err));
            }
        }
        crate::io::SweepPlot {
            title,
            residue,
            direct,
            rel_err,
        }
    }
}

/// Pair the truncated residue series with the direct oracle on a grid.
/// Component failures are recorded per row and the sweep continues.
pub fn sweep_compare(
    system: &SelfSimilarSystem,
    gz: &GeometricZeta,
    dims: &DimensionSet,
    eps_grid: &[f64],
    truncation: u64,
) -> Result<SweepReport, OracleError> {
    let h = gz.profile().regime_bound();
    for w in eps_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(OracleError::BadGrid { eps: w[1], h });
        }
    }
    for &eps in eps_grid {
        if !(eps > 0.0 && eps < h) {
            return Err(OracleError::BadGrid { eps, h });
        }
    }
    let tube_results: Vec<Result<TubeEvaluation, TubeError>> =
        tube_formula_sweep(gz, dims, eps_grid, truncation);
    let rows = eps_grid
        .iter()
        .zip(tube_results)
        .map(|(&eps, tube_result)| {
            let outcome = tube_result
                .map_err(|e| e.to_string())
                .and_then(|tube| {
                    let direct = direct_tile_sum(system, gz.profile(), eps)
                        .map_err(|e| e.to_string())?;
                    let abs_err = (tube.total - direct).abs();
                    let rel_err = abs_err / direct.abs().max(f64::MIN_POSITIVE);
                    Ok(SweepValues {
                        tube,
                        direct,
                        abs_err,
                        rel_err,
                    })
                });
            SweepRow { eps, outcome }
        })
        .collect();
    Ok(SweepReport {
        rows,
        truncation,
        cutoff_policy: "cutoff = eps / g per evaluation".to_string(),
    })
}

/// Raster tiling estimate: per-tile band areas plus the saturated tail.
#[derive(Debug, Clone)]
pub struct RasterTilingEstimate {
    /// Σ of rasterized inner ε-band areas over the placed tiles.
    pub banded_area: f64,
    /// Saturated closed tail for words at or beyond the depth.
    pub tail: f64,
    pub total: f64,
    pub overlap_area: f64,
    /// Raster bound used for the overlap verdict.
    pub error_bound: f64,
    pub tiles_placed: usize,
}

/// Place actual polygon images Φ_w(G) for |w| < depth on a shared pixel
/// grid, rasterize each tile's inner ε-band, and close the deeper levels
/// with the saturated tail. Tiles sharing pixels beyond the raster bound is
/// a tiling-consistency error.
pub fn raster_tiling_volume(
    system: &SelfSimilarSystem,
    generator: &Polygon,
    eps: f64,
    depth: u32,
    resolution: u32,
) -> Result<RasterTilingEstimate, OracleError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(OracleError::BadEpsilon(eps));
    }
    if depth > 4 {
        return Err(OracleError::DepthTooDeep(depth));
    }
    if system.dimension() != 2 || !system.has_rigid_parts() {
        return Err(OracleError::UnsupportedConfiguration);
    }
    let r_max = system
        .maps()
        .iter()
        .map(Similitude::ratio)
        .fold(0.0f64, f64::max);
    // The closed tail assumes every tile at the cut depth is saturated. The
    // inscribed disk fits inside the generator, so inradius ≤ √(area/π).
    let gen_inradius_bound = (crate::geometry::polygon_area(generator) / std::f64::consts::PI)
        .sqrt();
    let needed = r_max.powi(depth as i32) * gen_inradius_bound;
    if eps <= needed {
        return Err(OracleError::TailNotSaturated {
            depth,
            eps,
            needed,
        });
    }

    // Words of length < depth as composed similitudes.
    let identity = Similitude::with_rigid(
        1.0,
        crate::system::RigidMotion {
            rotation: 0.0,
            reflect: false,
            translate: Point::new(0.0, 0.0),
        },
    );
    let mut level: Vec<Similitude> = vec![identity];
    let mut words: Vec<Similitude> = Vec::new();
    let mut moment_cut = 1.0; // Σ over the cut generation of r_w^d.
    for _ in 0..depth {
        words.extend(level.iter().cloned());
        let mut next = Vec::with_capacity(level.len() * system.maps().len());
        for w in &level {
            for m in system.maps() {
                next.push(w.compose(m));
            }
        }
        level = next;
        moment_cut *= system.dth_moment();
    }
    // Note: with depth = 0 no tiles are placed and everything is tail.
    let tail =
        moment_cut / (1.0 - system.dth_moment()) * crate::geometry::polygon_area(generator);

    let tiles: Vec<Polygon> = words
        .iter()
        .map(|w| Polygon::from_loop(w.apply_polygon(generator)))
        .collect::<Result<_, _>>()
        .map_err(|_| OracleError::UnsupportedConfiguration)?;

    // Shared grid over the union bounding box.
    let step = 1.0 / resolution as f64;
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for t in &tiles {
        let (a, b) = t.bounding_box();
        lo = Point::new(lo.x.min(a.x), lo.y.min(a.y));
        hi = Point::new(hi.x.max(b.x), hi.y.max(b.y));
    }
    if tiles.is_empty() {
        return Ok(RasterTilingEstimate {
            banded_area: 0.0,
            tail,
            total: tail,
            overlap_area: 0.0,
            error_bound: 0.0,
            tiles_placed: 0,
        });
    }
    let width = ((hi.x - lo.x) / step).ceil() as usize + 1;
    let height = ((hi.y - lo.y) / step).ceil() as usize + 1;

    let rows: Vec<(u64, u64)> = (0..height)
        .into_par_iter()
        .map(|j| {
            let y = lo.y + (j as f64 + 0.5) * step;
            let mut band = 0u64;
            let mut overlap = 0u64;
            for i in 0..width {
                let p = Point::new(lo.x + (i as f64 + 0.5) * step, y);
                let mut owners = 0u32;
                let mut in_band = false;
                for t in &tiles {
                    let (a, b) = t.bounding_box();
                    if p.x < a.x || p.x > b.x || p.y < a.y || p.y > b.y {
                        continue;
                    }
                    if t.contains(p) {
                        owners += 1;
                        if owners == 1 && t.boundary_distance(p) < eps {
                            in_band = true;
                        }
                    }
                }
                if owners >= 2 {
                    overlap += 1;
                }
                if in_band {
                    band += 1;
                }
            }
            (band, overlap)
        })
        .collect();

    let pixel_area = step * step;
    let mut band_pixels = 0u64;
    let mut overlap_pixels = 0u64;
    for (band, overlap) in rows {
        band_pixels += band;
        overlap_pixels += overlap;
    }
    let total_perimeter: f64 = tiles.iter().map(Polygon::perimeter).sum();
    let error_bound = 2.0 * total_perimeter / resolution as f64;
    let overlap_area = overlap_pixels as f64 * pixel_area;
    if overlap_area > error_bound {
        return Err(OracleError::TilingInconsistent {
            overlap: overlap_area,
            bound: error_bound,
        });
    }
    let banded_area = band_pixels as f64 * pixel_area;
    Ok(RasterTilingEstimate {
        banded_area,
        tail,
        total: banded_area + tail,
        overlap_area,
        error_bound,
        tiles_placed: tiles.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        example1_generator, example1_system, unit_square_profile,
    };
    use crate::geometry::hexagram_builtin;
    use crate::spectrum::ScalingZeta;
    use crate::tube::QuadratureSpec;
    use approx::assert_relative_eq;

    fn toy_system() -> SelfSimilarSystem {
        SelfSimilarSystem::uniform(2, 3, 0.5).unwrap()
    }

    #[test]
    fn hand_enumerated_value() {
        // Depth 0 gives 0.75, depth 1 gives 3·0.25, depths ≥ 2 close to
        // 2.25: total 3.75.
        let v = direct_tile_sum(&toy_system(), &unit_square_profile(), 0.25).unwrap();
        assert_relative_eq!(v, 3.75, epsilon = 1e-12);
    }

    #[test]
    fn saturates_to_total_tile_volume() {
        let sys = toy_system();
        let prof = unit_square_profile();
        let v = direct_tile_sum(&sys, &prof, 100.0).unwrap();
        assert_relative_eq!(v, sys.total_tile_volume(1.0), epsilon = 1e-12);
    }

    #[test]
    fn cutoff_refinement_stability() {
        // Tightening the cutoff below ε/g must not move the value.
        let sys = example1_system();
        let (_, prof) = hexagram_builtin();
        let eps = 0.3;
        let coarse = direct_tile_sum(&sys, &prof, eps).unwrap();
        let agg = sys.enumerate_ratios(eps / (2.0 * prof.inradius())).unwrap();
        let mut fine = 0.0;
        for &(ratio, m) in agg.entries() {
            fine += m as f64 * prof.scaled_volume(ratio, eps);
        }
        fine += agg.closure_mass() * prof.generator_volume();
        assert_relative_eq!(coarse, fine, max_relative = 1e-10);
    }

    #[test]
    fn monotone_and_bounded() {
        let sys = example1_system();
        let (_, prof) = hexagram_builtin();
        let cap = sys.total_tile_volume(prof.generator_volume());
        let mut prev = 0.0;
        for k in 1..=60 {
            let eps = 1.2 * k as f64 / 60.0;
            let v = direct_tile_sum(&sys, &prof, eps).unwrap();
            assert!(v + 1e-12 >= prev, "decrease at eps = {eps}");
            assert!(v <= cap * (1.0 + 1e-12));
            prev = v;
        }
    }

    #[test]
    fn sweep_compare_small() {
        let sys = example1_system();
        let (_, prof) = hexagram_builtin();
        let zeta = ScalingZeta::new(sys.ratios()).unwrap();
        let p = 2.0 * std::f64::consts::PI / 6f64.ln();
        let window = 40.5 * p;
        let gz = GeometricZeta::for_window(zeta, prof, window).unwrap();
        let dims = gz.zeta().complex_dimensions(window, (-4.0, 2.0)).unwrap();
        let grid = [0.1, 0.2, 0.3, 0.4, 0.5];
        let report = sweep_compare(&sys, &gz, &dims, &grid, 40).unwrap();
        assert_eq!(report.rows.len(), 5);
        let max_err = report.max_rel_err().unwrap();
        assert!(max_err < 0.01, "max rel err {max_err}");
    }

    #[test]
    fn sweep_grid_validation() {
        let sys = example1_system();
        let (_, prof) = hexagram_builtin();
        let zeta = ScalingZeta::new(sys.ratios()).unwrap();
        let gz = GeometricZeta::new(zeta, prof, QuadratureSpec::default()).unwrap();
        let dims = gz.zeta().complex_dimensions(20.0, (-4.0, 2.0)).unwrap();
        // Point at h rejected.
        let h = gz.profile().regime_bound();
        assert!(matches!(
            sweep_compare(&sys, &gz, &dims, &[0.1, h], 3),
            Err(OracleError::BadGrid { .. })
        ));
        // Empty grid gives an empty report.
        let report = sweep_compare(&sys, &gz, &dims, &[], 3).unwrap();
        assert!(report.rows.is_empty());
        assert!(report.max_rel_err().is_none());
    }

    #[test]
    fn raster_tiling_agrees_with_direct_sum() {
        let sys = example1_system();
        let star = example1_generator();
        let (_, prof) = hexagram_builtin();
        let eps = 0.3;
        let est = raster_tiling_volume(&sys, &star, eps, 3, 192).unwrap();
        let direct = direct_tile_sum(&sys, &prof, eps).unwrap();
        let tol = est.error_bound.max(0.02 * direct);
        assert!(
            (est.total - direct).abs() <= tol,
            "raster {} vs direct {direct} (tol {tol})",
            est.total
        );
        assert_eq!(est.tiles_placed, 1 + 24 + 576);
    }

    #[test]
    fn raster_tiling_saturated_case_hits_total_volume() {
        let sys = example1_system();
        let star = example1_generator();
        let (_, prof) = hexagram_builtin();
        // ε beyond every placed tile's inradius: banded area equals tile
        // areas, so the estimate is the total tile volume.
        let est = raster_tiling_volume(&sys, &star, 1.5, 2, 160).unwrap();
        let expect = sys.total_tile_volume(prof.generator_volume());
        assert!(
            (est.total - expect).abs() <= est.error_bound.max(0.02 * expect),
            "{} vs {expect}",
            est.total
        );
    }

    #[test]
    fn raster_tiling_single_tile_reduces_to_polygon_band() {
        let sys = example1_system();
        let star = example1_generator();
        let eps = 0.3;
        let est = raster_tiling_volume(&sys, &star, eps, 1, 256).unwrap();
        let single = crate::geometry::inner_tube_volume_raster(&star, eps, 256).unwrap();
        assert_relative_eq!(est.banded_area, single.volume, max_relative = 0.03);
    }

    #[test]
    fn raster_tiling_guard_rails() {
        let sys = example1_system();
        let star = example1_generator();
        assert!(matches!(
            raster_tiling_volume(&sys, &star, 0.3, 5, 128),
            Err(OracleError::DepthTooDeep(5))
        ));
        // Tiny ε with shallow depth: the tail is not saturated.
        assert!(matches!(
            raster_tiling_volume(&sys, &star, 0.001, 1, 128),
            Err(OracleError::TailNotSaturated { .. })
        ));
        let no_rigid = SelfSimilarSystem::uniform(2, 3, 0.5).unwrap();
        assert!(matches!(
            raster_tiling_volume(&no_rigid, &star, 0.3, 2, 128),
            Err(OracleError::UnsupportedConfiguration)
        ));
    }
}
