//! Even-odd rasterization of slice loops into square 8-bit masks.

use std::io::Cursor;
use std::path::Path;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::SliceResult;
use crate::error::{Error, Result};

pub const MIN_RESOLUTION: u32 = 16;

/// Axis-aligned window in plane-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window2 {
    pub min: Point2<f64>,
    pub max: Point2<f64>,
}

impl Window2 {
    pub fn new(min: Point2<f64>, max: Point2<f64>) -> Result<Self> {
        if !(max.x > min.x && max.y > min.y) {
            return Err(Error::InvalidParameter("raster window must have positive extent".into()));
        }
        Ok(Window2 { min, max })
    }

    /// Square window around the loops' bounding box, padded by 5% of the
    /// larger side on every side.
    pub fn around<'a>(points: impl IntoIterator<Item = &'a Point2<f64>>) -> Self {
        let mut iter = points.into_iter();
        let Some(first) = iter.next() else {
            return Window2 {
                min: Point2::new(-1.0, -1.0),
                max: Point2::new(1.0, 1.0),
            };
        };
        let (lo, hi) = iter.fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        let side = (hi.x - lo.x).max(hi.y - lo.y);
        let half = if side > 0.0 { side * 1.1 / 2.0 } else { 0.5 };
        let c = nalgebra::center(&lo, &hi);
        Window2 {
            min: Point2::new(c.x - half, c.y - half),
            max: Point2::new(c.x + half, c.y + half),
        }
    }
}

/// Single-channel mask, row 0 at the top (largest `v`). 0 = background,
/// 255 = interior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceMask {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl SliceMask {
    pub fn filled_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    pub fn get(&self, col: u32, row: u32) -> u8 {
        self.pixels[(row * self.width + col) as usize]
    }

    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        image::write_buffer_with_format(
            &mut out,
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::L8,
            image::ImageFormat::Png,
        )
        .expect("in-memory PNG encoding");
        out.into_inner()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_png()).map_err(|e| Error::io(path, e))
    }
}

pub fn rasterize_slice(result: &SliceResult, resolution: u32, window: Option<Window2>) -> Result<SliceMask> {
    let loops: Vec<&[Point2<f64>]> = result.loops.iter().map(|l| l.points.as_slice()).collect();
    rasterize_loops(&loops, resolution, window)
}

/// Fills pixel centres inside an odd number of loops.
pub fn rasterize_loops(loops: &[&[Point2<f64>]], resolution: u32, window: Option<Window2>) -> Result<SliceMask> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidParameter(format!(
            "resolution must be >= {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    let window = window.unwrap_or_else(|| Window2::around(loops.iter().flat_map(|l| l.iter())));
    let n = resolution as usize;
    let mut pixels = vec![0u8; n * n];
    let sx = (window.max.x - window.min.x) / n as f64;
    let sy = (window.max.y - window.min.y) / n as f64;
    let mut crossings: Vec<f64> = Vec::new();
    for row in 0..n {
        let y = window.max.y - (row as f64 + 0.5) * sy;
        crossings.clear();
        for lp in loops {
            let m = lp.len();
            for i in 0..m {
                let (p, q) = (lp[i], lp[(i + 1) % m]);
                if (p.y > y) != (q.y > y) {
                    crossings.push(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
                }
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            // pixel centres x_c = min.x + (col + 0.5) sx with x0 <= x_c < x1
            let first = ((pair[0] - window.min.x) / sx - 0.5).ceil().max(0.0) as usize;
            let last = ((pair[1] - window.min.x) / sx - 0.5).ceil().max(0.0) as usize;
            for col in first..last.min(n) {
                pixels[row * n + col] = 255;
            }
        }
    }
    Ok(SliceMask {
        width: resolution,
        height: resolution,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn square(lo: f64, hi: f64) -> Vec<Point2<f64>> {
        vec![Point2::new(lo, lo), Point2::new(hi, lo), Point2::new(hi, hi), Point2::new(lo, hi)]
    }

    #[test]
    fn unit_square_fill_ratio() {
        let sq = square(0.0, 1.0);
        let w = Window2::new(Point2::new(-1.0, -1.0), Point2::new(2.0, 2.0)).unwrap();
        let mask = rasterize_loops(&[&sq], 100, Some(w)).unwrap();
        // 34 pixel centres per side fall in [0, 1): (col + 0.5) * 0.03 - 1
        assert_eq!(mask.filled_count(), 34 * 34);
        let ratio = mask.filled_count() as f64 / 10_000.0;
        assert!((ratio - 1.0 / 9.0).abs() <= 0.02, "{ratio}");
    }

    #[test]
    fn annulus_has_hole() {
        let ring = |r: f64| -> Vec<Point2<f64>> {
            (0..256).map(|i| {
                let a = TAU * i as f64 / 256.0;
                Point2::new(r * a.cos(), r * a.sin())
            }).collect()
        };
        let (outer, inner) = (ring(1.0), ring(0.5));
        let mask = rasterize_loops(&[&outer, &inner], 64, None).unwrap();
        assert_eq!(mask.get(32, 32), 0);
        assert_eq!(mask.get(32, 8), 255);
        assert_eq!(mask.get(0, 0), 0);
    }

    #[test]
    fn empty_is_background() {
        let mask = rasterize_loops(&[], 32, None).unwrap();
        assert_eq!(mask.filled_count(), 0);
        assert_eq!(mask.pixels.len(), 32 * 32);
    }

    #[test]
    fn resolution_bound() {
        assert!(rasterize_loops(&[], 15, None).is_err());
    }

    #[test]
    fn png_is_deterministic() {
        let sq = square(0.0, 1.0);
        let a = rasterize_loops(&[&sq], 40, None).unwrap().to_png();
        let b = rasterize_loops(&[&sq], 40, None).unwrap().to_png();
        assert_eq!(a, b);
        let img = image::load_from_memory(&a).unwrap().to_luma8();
        assert_eq!(img.dimensions(), (40, 40));
    }
}
