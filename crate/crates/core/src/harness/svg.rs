//! SVG 1.1 scenes of circles, annuli and heat-mapped fields.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use base64::Engine;
use image::{ImageFormat, Rgb, RgbImage};

use super::accumulation::{AccumulationConfig, Annulus};
use crate::error::{Error, Result};
use crate::field::{Bbox, GridField};
use crate::geometry::{Circle, CircleDomain};

#[derive(Debug, Clone)]
pub struct Scene {
    pub view: Bbox,
    /// Width of the drawing in pixels; the height follows the aspect ratio.
    pub width: u32,
    pub circles: Vec<Circle>,
    pub annuli: Vec<Annulus>,
    /// Drawn as `|value|` on `[0, 1]`, under the circles.
    pub field: Option<GridField>,
}

impl Scene {
    pub fn new(view: Bbox) -> Self {
        Scene {
            view,
            width: 800,
            circles: Vec::new(),
            annuli: Vec::new(),
            field: None,
        }
    }

    /// A view that contains every disk, with 10% margin.
    pub fn fit(circles: &[Circle]) -> Result<Self> {
        if circles.is_empty() {
            return Ok(Scene::new(Bbox::square(1.0)?));
        }
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in circles {
            x0 = x0.min(c.center().re - c.radius());
            y0 = y0.min(c.center().im - c.radius());
            x1 = x1.max(c.center().re + c.radius());
            y1 = y1.max(c.center().im + c.radius());
        }
        let pad = 0.1 * (x1 - x0).max(y1 - y0);
        let mut scene = Scene::new(Bbox::new(x0 - pad, y0 - pad, x1 + pad, y1 + pad)?);
        scene.circles = circles.to_vec();
        Ok(scene)
    }

    pub fn domain(domain: &CircleDomain) -> Result<Self> {
        Scene::fit(&domain.circles)
    }

    pub fn accumulation(config: &AccumulationConfig) -> Result<Self> {
        let mut scene = Scene::fit(&config.circles)?;
        scene.annuli = config.annuli.iter().flatten().copied().collect();
        Ok(scene)
    }
}

fn heatmap(field: &GridField) -> Result<String> {
    let (nx, ny) = (field.nx() as u32, field.ny() as u32);
    let img = RgbImage::from_fn(nx, ny, |i, j| {
        // image rows run downward, field rows upward
        let t = field.get(i as usize, (ny - 1 - j) as usize).norm().clamp(0.0, 1.0);
        Rgb([(255.0 * t) as u8, (64.0 * (1.0 - t)) as u8, (255.0 * (1.0 - t)) as u8])
    });
    let mut png = Vec::new();
    img.write_to(&mut Cursor::new(&mut png), ImageFormat::Png)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(base64::engine::general_purpose::STANDARD.encode(png))
}

pub fn render_svg(scene: &Scene) -> Result<String> {
    let v = scene.view;
    let scale = scene.width as f64 / v.width();
    let height = (v.height() * scale).round().max(1.0) as u32;
    let stroke = 1.0 / scale;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" version="1.1" width="{}" height="{}" viewBox="{} {} {} {}">"#,
        scene.width,
        height,
        v.x0,
        -v.y1,
        v.width(),
        v.height()
    );
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#,
        v.x0,
        -v.y1,
        v.width(),
        v.height()
    );
    if let Some(field) = &scene.field {
        let b = field.bbox();
        let _ = writeln!(
            s,
            r#"<image x="{}" y="{}" width="{}" height="{}" preserveAspectRatio="none" xlink:href="data:image/png;base64,{}"/>"#,
            b.x0,
            -b.y1,
            b.width(),
            b.height(),
            heatmap(field)?
        );
    }
    // flip so that +y points up
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    for a in &scene.annuli {
        let (cx, cy) = (a.center.re, a.center.im);
        let mut d = String::new();
        for r in [a.outer, a.inner.max(0.0)] {
            if r > 0.0 {
                let _ = write!(d, "M{} {}a{r} {r} 0 1 0 {} 0a{r} {r} 0 1 0 {} 0", cx - r, cy, 2.0 * r, -2.0 * r);
            }
        }
        let _ = writeln!(
            s,
            r##"<path d="{d}" fill="#f4d58d" fill-opacity="0.5" fill-rule="evenodd" stroke="none"/>"##
        );
    }
    for c in &scene.circles {
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="black" stroke-width="{stroke}"/>"#,
            c.center().re,
            c.center().im,
            c.radius()
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn write_svg<P: AsRef<Path>>(scene: &Scene, path: P) -> Result<()> {
    std::fs::write(path, render_svg(scene)?)?;
    Ok(())
}
