//! Rasterizing planar point clouds and cover ellipses to binary pixmaps.
//!
//! The output format is binary PPM (`P6`): the ASCII header
//! `P6\n<width> <height>\n255\n` followed by `width·height` RGB triples,
//! rows top to bottom. Background is black, points are white and ellipse
//! outlines are orange `(255, 128, 0)`.

use std::io::{self, Write};

use crate::covers::Ellipse;
use crate::error::{Error, Result};
use crate::estimators::PointCloud;
use crate::linalg::SmallVector;

pub const MAX_SIDE: usize = 8192;
pub const BACKGROUND: [u8; 3] = [0, 0, 0];
pub const POINT_COLOR: [u8; 3] = [255, 255, 255];
pub const OUTLINE_COLOR: [u8; 3] = [255, 128, 0];
/// Outline samples are capped per ellipse.
const MAX_OUTLINE_SAMPLES: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    /// Padding around the content, as a fraction of its larger side.
    pub margin: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 512,
            height: 512,
            margin: 0.05,
        }
    }
}

/// Uniform-scale map from world coordinates to pixels, with `y` up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub left: f64,
    pub top: f64,
    /// Pixels per world unit.
    pub scale: f64,
    pub width: usize,
    pub height: usize,
}

impl Viewport {
    /// Centers the box `[x0,x1]×[y0,y1]` plus margin in the raster.
    pub fn fit(bounds: [(f64, f64); 2], opts: &RenderOptions) -> Self {
        let [(x0, x1), (y0, y1)] = bounds;
        let side = (x1 - x0).max(y1 - y0).max(1e-12);
        let pad = side * opts.margin;
        let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
        let scale = (opts.width as f64 / w).min(opts.height as f64 / h);
        let cx = 0.5 * (x0 + x1);
        let cy = 0.5 * (y0 + y1);
        Viewport {
            left: cx - 0.5 * opts.width as f64 / scale,
            top: cy + 0.5 * opts.height as f64 / scale,
            scale,
            width: opts.width,
            height: opts.height,
        }
    }

    /// World size of one pixel.
    pub fn pixel_size(&self) -> f64 {
        1.0 / self.scale
    }

    pub fn to_pixel(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let px = ((x - self.left) * self.scale).floor();
        let py = ((self.top - y) * self.scale).floor();
        let inside = px >= 0.0 && py >= 0.0 && px < self.width as f64 && py < self.height as f64;
        inside.then_some((px as usize, py as usize))
    }

    pub fn pixel_center(&self, px: usize, py: usize) -> (f64, f64) {
        (
            self.left + (px as f64 + 0.5) / self.scale,
            self.top - (py as f64 + 0.5) / self.scale,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
            return Err(Error::invalid(format!(
                "raster size {width}x{height} must be within 1..={MAX_SIDE} per side"
            )));
        }
        Ok(Raster {
            width,
            height,
            pixels: vec![BACKGROUND; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, px: usize, py: usize) -> [u8; 3] {
        self.pixels[py * self.width + px]
    }

    pub fn set(&mut self, px: usize, py: usize, color: [u8; 3]) {
        self.pixels[py * self.width + px] = color;
    }

    /// Coordinates of every non-background pixel.
    pub fn lit_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != BACKGROUND)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        out.write_all(&bytes)
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.pixels.len() * 3 + 20);
        self.write_ppm(&mut buf).expect("writing to a Vec");
        buf
    }
}

fn content_bounds(cloud: &PointCloud, overlays: &[Ellipse]) -> [(f64, f64); 2] {
    let mut b = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    let mut grow = |x: f64, y: f64| {
        b[0] = (b[0].0.min(x), b[0].1.max(x));
        b[1] = (b[1].0.min(y), b[1].1.max(y));
    };
    for p in cloud.points() {
        grow(p[0], p[1]);
    }
    for e in overlays {
        let r = e.major();
        grow(e.center[0] - r, e.center[1] - r);
        grow(e.center[0] + r, e.center[1] + r);
    }
    if b[0].0 > b[0].1 {
        return [(0.0, 1.0), (0.0, 1.0)];
    }
    b
}

fn draw_outline(raster: &mut Raster, view: &Viewport, e: &Ellipse) {
    let circumference_px = std::f64::consts::TAU * e.major() * view.scale;
    let samples = ((2.0 * circumference_px).ceil() as usize).clamp(16, MAX_OUTLINE_SAMPLES);
    for k in 0..samples {
        let t = std::f64::consts::TAU * k as f64 / samples as f64;
        let local = SmallVector::from_slice(&[e.semi_lengths[0] * t.cos(), e.semi_lengths[1] * t.sin()])
            .expect("planar");
        let p = e.from_local(&local);
        if let Some((px, py)) = view.to_pixel(p[0], p[1]) {
            raster.set(px, py, OUTLINE_COLOR);
        }
    }
}

/// Points first, then ellipse outlines on top. The view fits the points and
/// the overlays' bounding boxes.
pub fn render(cloud: &PointCloud, overlays: &[Ellipse], opts: &RenderOptions) -> Result<(Raster, Viewport)> {
    if cloud.dim() != 2 {
        return Err(Error::UnsupportedDimension(cloud.dim()));
    }
    if let Some(e) = overlays.iter().find(|e| e.dim() != 2) {
        return Err(Error::UnsupportedDimension(e.dim()));
    }
    if !(opts.margin >= 0.0 && opts.margin.is_finite()) {
        return Err(Error::invalid("margin must be a non-negative number"));
    }
    let mut raster = Raster::new(opts.width, opts.height)?;
    let view = Viewport::fit(content_bounds(cloud, overlays), opts);
    for p in cloud.points() {
        if let Some((px, py)) = view.to_pixel(p[0], p[1]) {
            raster.set(px, py, POINT_COLOR);
        }
    }
    for e in overlays {
        draw_outline(&mut raster, &view, e);
    }
    Ok((raster, view))
}
