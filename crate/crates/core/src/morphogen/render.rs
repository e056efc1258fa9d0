use thiserror::Error;

use super::growth::GrowthResult;
use super::image::Image;

pub const RESOLUTIONS: [usize; 3] = [128, 256, 512];
pub const DEFAULT_RESOLUTION: usize = 256;

/// World square shown in the image: [-VIEW_HALF_WIDTH, VIEW_HALF_WIDTH]^2.
pub const VIEW_HALF_WIDTH: f64 = 1.0;

/// Smallest splat radius in pixels; guarantees every cell inks a pixel.
const MIN_SPLAT_PX: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("resolution {0} not one of 128, 256, 512")]
pub struct ResolutionError(pub usize);

/// World to pixel coordinates (continuous; pixel centers sit at +0.5).
/// The world origin maps to the image center and +y points up.
pub fn world_to_pixel(p: [f64; 2], resolution: usize) -> [f64; 2] {
    let half = resolution as f64 / 2.0;
    let scale = half / VIEW_HALF_WIDTH;
    [half + p[0] * scale, half - p[1] * scale]
}

/// Splats every cell as a filled disk of radius `rest_length / 2`, sums the
/// per-pixel coverage count `n` and maps it to `round(255 (1 - e^-n))`.
pub fn render(result: &GrowthResult, resolution: usize) -> Result<Image, ResolutionError> {
    if !RESOLUTIONS.contains(&resolution) {
        return Err(ResolutionError(resolution));
    }
    let scale = resolution as f64 / 2.0 / VIEW_HALF_WIDTH;
    let radius = (0.5 * result.rest_length * scale).max(MIN_SPLAT_PX);
    let r2 = radius * radius;
    let mut density = vec![0u32; resolution * resolution];
    let last = resolution as isize - 1;
    for cell in &result.cells {
        if !(cell.pos[0].is_finite() && cell.pos[1].is_finite()) {
            continue;
        }
        let [cx, cy] = world_to_pixel(cell.pos, resolution);
        let x0 = ((cx - radius - 0.5).floor() as isize).max(0);
        let x1 = ((cx + radius - 0.5).ceil() as isize).min(last);
        let y0 = ((cy - radius - 0.5).floor() as isize).max(0);
        let y1 = ((cy + radius - 0.5).ceil() as isize).min(last);
        for y in y0..=y1 {
            let dy = y as f64 + 0.5 - cy;
            for x in x0..=x1 {
                let dx = x as f64 + 0.5 - cx;
                if dx * dx + dy * dy <= r2 {
                    density[y as usize * resolution + x as usize] += 1;
                }
            }
        }
    }
    let pixels = density.into_iter().map(tone_map).collect();
    Ok(Image::from_pixels(resolution, resolution, pixels).expect("square buffer"))
}

pub fn tone_map(coverage: u32) -> u8 {
    (255.0 * (1.0 - (-(coverage as f64)).exp())).round() as u8
}

/// True when fewer than 0.5% or more than 99.5% of pixels are above mid-gray.
pub fn classify_empty(img: &Image) -> bool {
    let lit = img.pixels().iter().filter(|&&p| p > 127).count();
    let n = img.pixels().len();
    200 * lit < n || 200 * lit > 199 * n
}
