//! Orthographic scatter plots of clouds as standalone SVG files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Canvas width and height in pixels.
    pub size: f64,
    /// Marker radius in pixels.
    pub radius: f64,
    /// Blank border in pixels.
    pub margin: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            size: 800.0,
            radius: 1.0,
            margin: 10.0,
        }
    }
}

/// Drop coordinate `axis` (0, 1 or 2) and draw the remaining two, first as
/// the horizontal and second as the vertical (upwards) direction. The
/// projected points are scaled uniformly to fit the canvas and centred.
pub fn render_svg(cloud: &PointCloud, axis: usize, options: &SvgOptions) -> Result<String> {
    if axis > 2 {
        return Err(Error::invalid(format!("projection axis must be 0, 1 or 2, got {axis}")));
    }
    if !(options.size > 2.0 * options.margin) || !(options.radius > 0.0) || !(options.margin >= 0.0) {
        return Err(Error::invalid(
            "canvas size must exceed twice the margin and radius must be positive",
        ));
    }
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let (lo, hi) = cloud.bounding_box();
    let (cu, cv) = (0.5 * (lo.axis(u) + hi.axis(u)), 0.5 * (lo.axis(v) + hi.axis(v)));
    let extent = (hi.axis(u) - lo.axis(u)).max(hi.axis(v) - lo.axis(v));
    let usable = options.size - 2.0 * options.margin;
    let scale = if extent > 0.0 { usable / extent } else { 0.0 };
    let mid = 0.5 * options.size;

    let mut out = String::with_capacity(64 * cloud.len() + 256);
    let s = options.size;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<g fill="black" fill-opacity="0.6">"#);
    for p in cloud {
        let x = mid + (p.axis(u) - cu) * scale;
        let y = mid - (p.axis(v) - cv) * scale;
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{}"/>"#, options.radius);
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn export_svg(cloud: &PointCloud, axis: usize, path: impl AsRef<Path>, options: &SvgOptions) -> Result<()> {
    let path = path.as_ref();
    let text = render_svg(cloud, axis, options)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
