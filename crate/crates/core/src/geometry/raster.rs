//! Pixel-counting oracle for inner neighborhood volumes.
//!
//! A pixel counts iff its center lies inside the polygon and its distance to
//! the boundary is below ε; no anti-aliasing. Distances are brute-force over
//! all edge segments, rows are rasterized in parallel, and the final counts
//! are combined in row order so the result is deterministic.

use rayon::prelude::*;

use super::polygon::{Point, Polygon};
use super::GeometryError;

/// Minimum pixels-per-unit accepted by the raster oracle.
pub const MIN_RESOLUTION: u32 = 64;

/// A raster estimate with its documented error bound.
#[derive(Debug, Clone)]
pub struct RasterEstimate {
    pub volume: f64,
    /// O(perimeter/resolution) bound on the pixelization error.
    pub error_bound: f64,
    pub band_pixels: u64,
    pub interior_pixels: u64,
    pub resolution: u32,
}

/// One byte per pixel; 255 marks the inner ε-band, 80 the remaining
/// interior, 0 the exterior.
#[derive(Debug, Clone)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub const PGM_BAND: u8 = 255;
pub const PGM_INTERIOR: u8 = 80;

impl RasterImage {
    pub fn write_pgm<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "P5")?;
        writeln!(out, "{} {}", self.width, self.height)?;
        writeln!(out, "255")?;
        out.write_all(&self.pixels)
    }
}

/// Estimate the inner ε-neighborhood volume of a polygon by counting pixel
/// centers within distance ε of the boundary.
pub fn inner_tube_volume_raster(
    polygon: &Polygon,
    eps: f64,
    resolution: u32,
) -> Result<RasterEstimate, GeometryError> {
    let (estimate, _) = raster_scan(polygon, eps, resolution, false)?;
    Ok(estimate)
}

/// Same scan, also returning the debug image.
pub fn inner_tube_volume_raster_with_image(
    polygon: &Polygon,
    eps: f64,
    resolution: u32,
) -> Result<(RasterEstimate, RasterImage), GeometryError> {
    let (estimate, image) = raster_scan(polygon, eps, resolution, true)?;
    Ok((estimate, image.expect("image requested")))
}

fn raster_scan(
    polygon: &Polygon,
    eps: f64,
    resolution: u32,
    want_image: bool,
) -> Result<(RasterEstimate, Option<RasterImage>), GeometryError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(GeometryError::BadEpsilon(eps));
    }
    if resolution < MIN_RESOLUTION {
        return Err(GeometryError::ResolutionTooLow {
            got: resolution,
            need: MIN_RESOLUTION,
        });
    }
    let (lo, hi) = polygon.bounding_box();
    let step = 1.0 / resolution as f64;
    let width = ((hi.x - lo.x) / step).ceil() as usize + 1;
    let height = ((hi.y - lo.y) / step).ceil() as usize + 1;

    let rows: Vec<(u64, u64, Option<Vec<u8>>)> = (0..height)
        .into_par_iter()
        .map(|j| {
            let y = lo.y + (j as f64 + 0.5) * step;
            let mut band = 0u64;
            let mut interior = 0u64;
            let mut row_pixels = if want_image {
                Some(vec![0u8; width])
            } else {
                None
            };
            for i in 0..width {
                let p = Point::new(lo.x + (i as f64 + 0.5) * step, y);
                if polygon.contains(p) {
                    interior += 1;
                    if polygon.boundary_distance(p) < eps {
                        band += 1;
                        if let Some(px) = row_pixels.as_mut() {
                            px[i] = PGM_BAND;
                        }
                    } else if let Some(px) = row_pixels.as_mut() {
                        px[i] = PGM_INTERIOR;
                    }
                }
            }
            (band, interior, row_pixels)
        })
        .collect();

    let mut band_pixels = 0u64;
    let mut interior_pixels = 0u64;
    let mut pixels = if want_image {
        Vec::with_capacity(width * height)
    } else {
        Vec::new()
    };
    // Image rows are stacked top-down so y increases downward in the file.
    for (band, interior, _) in &rows {
        band_pixels += band;
        interior_pixels += interior;
    }
    if want_image {
        for (_, _, row) in rows.iter().rev() {
            pixels.extend_from_slice(row.as_ref().unwrap());
        }
    }

    let pixel_area = step * step;
    let estimate = RasterEstimate {
        volume: band_pixels as f64 * pixel_area,
        error_bound: 2.0 * polygon.perimeter() / resolution as f64,
        band_pixels,
        interior_pixels,
        resolution,
    };
    let image = want_image.then_some(RasterImage {
        width,
        height,
        pixels,
    });
    Ok((estimate, image))
}
