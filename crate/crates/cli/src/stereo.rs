//! Stereo instance construction: sampling-insensitive matching costs on a
//! 4-connected grid with intensity-gated Potts weights.
//!
//! Conventions (pinned here, since they vary across implementations):
//! - disparity `d` matches left pixel `(x, y)` to right pixel `(x - d, y)`;
//! - the dissimilarity is the symmetric sampling-insensitive measure over
//!   half-pixel interpolants `{p - 1/2, p, p + 1/2}` (linear interpolation,
//!   borders clamped);
//! - when `x - d` falls off the right image, the column is clamped to the
//!   border, or the configured cap is charged when one is set;
//! - edge weights use the left image: `P * s` when the endpoint intensity
//!   difference is below `T`, else `s`.

use crate::formats::{FormatError, GrayImage};
use potts_core::instance::Instance;

#[derive(Debug, Clone)]
pub struct StereoConfig {
    pub disparities: usize,
    pub penalty_factor: f64,
    pub gradient_threshold: f64,
    pub smoothness: f64,
    pub crop: Option<(usize, usize, usize, usize)>,
    pub bt_cap: Option<f64>,
}

impl Default for StereoConfig {
    fn default() -> Self {
        StereoConfig {
            disparities: 5,
            penalty_factor: 2.0,
            gradient_threshold: 50.0,
            smoothness: 4.0,
            crop: None,
            bt_cap: None,
        }
    }
}

fn interp_min_max(img: &GrayImage, x: usize, y: usize) -> (f64, f64) {
    let center = img.pixel(x, y) as f64;
    let left = img.pixel(x.saturating_sub(1), y) as f64;
    let right = img.pixel((x + 1).min(img.width - 1), y) as f64;
    let lo = 0.5 * (center + left);
    let hi = 0.5 * (center + right);
    let mut mn = center.min(lo).min(hi);
    let mut mx = center.max(lo).max(hi);
    if mn > mx {
        std::mem::swap(&mut mn, &mut mx);
    }
    (mn, mx)
}

/// Symmetric sampling-insensitive dissimilarity between left pixel `(xl, y)`
/// and right pixel `(xr, y)`.
pub fn bt_dissimilarity(left: &GrayImage, right: &GrayImage, xl: usize, xr: usize, y: usize) -> f64 {
    let il = left.pixel(xl, y) as f64;
    let ir = right.pixel(xr, y) as f64;
    let (rmin, rmax) = interp_min_max(right, xr, y);
    let a = (il - rmax).max(rmin - il).max(0.0);
    let (lmin, lmax) = interp_min_max(left, xl, y);
    let b = (ir - lmax).max(lmin - ir).max(0.0);
    a.min(b)
}

/// Build the grid instance for a rectified pair. Node order is row-major
/// over the (cropped) left image.
pub fn build_stereo_instance(
    left: &GrayImage,
    right: &GrayImage,
    cfg: &StereoConfig,
) -> Result<Instance, FormatError> {
    if left.width != right.width || left.height != right.height {
        return Err(FormatError::Pgm(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            left.width, left.height, right.width, right.height
        )));
    }
    if cfg.disparities < 2 {
        return Err(FormatError::Pgm("need at least 2 disparities".into()));
    }
    let (cx, cy, cw, ch) = cfg
        .crop
        .unwrap_or((0, 0, left.width, left.height));
    if cx + cw > left.width || cy + ch > left.height || cw == 0 || ch == 0 {
        return Err(FormatError::Pgm(format!(
            "crop {cx},{cy},{cw},{ch} leaves the {}x{} image",
            left.width, left.height
        )));
    }

    let k = cfg.disparities;
    let n = cw * ch;
    let mut costs = Vec::with_capacity(n * k);
    for ry in 0..ch {
        for rx in 0..cw {
            let (x, y) = (cx + rx, cy + ry);
            for d in 0..k {
                let cost = if d > x {
                    match cfg.bt_cap {
                        Some(cap) => cap,
                        None => bt_dissimilarity(left, right, x, 0, y),
                    }
                } else {
                    bt_dissimilarity(left, right, x, x - d, y)
                };
                costs.push(cost);
            }
        }
    }

    let mut edges = Vec::new();
    let weight = |xa: usize, ya: usize, xb: usize, yb: usize| -> f64 {
        let da = left.pixel(xa, ya) as f64 - left.pixel(xb, yb) as f64;
        if da.abs() < cfg.gradient_threshold {
            cfg.penalty_factor * cfg.smoothness
        } else {
            cfg.smoothness
        }
    };
    for ry in 0..ch {
        for rx in 0..cw {
            let u = ry * cw + rx;
            let (x, y) = (cx + rx, cy + ry);
            if rx + 1 < cw {
                edges.push((u, u + 1, weight(x, y, x + 1, y)));
            }
            if ry + 1 < ch {
                edges.push((u, u + cw, weight(x, y, x, y + 1)));
            }
        }
    }

    Ok(Instance::new(n, k, costs, edges)?)
}

/// Deterministic synthetic stereo pair: a textured background with a
/// textured foreground block shifted horizontally by `shift` pixels in the
/// right image (uniform disparity `shift` on the block, 0 elsewhere).
pub fn synthetic_pair(width: usize, height: usize, shift: usize, seed: u64) -> (GrayImage, GrayImage) {
    // xorshift-style generator; this must stay bit-stable because the
    // bundled data files are produced by it
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    // one texture sample per left-image column (plus margin); both views
    // read the same sample for corresponding scene points
    let tex_width = width + shift;
    let mut texture = vec![0u8; tex_width * height];
    for t in texture.iter_mut() {
        *t = (next() % 200) as u8 + 20;
    }
    let tex = |x: usize, y: usize| texture[y * tex_width + x.min(tex_width - 1)];
    let (bx0, bx1) = (width / 3, 2 * width / 3);
    let (by0, by1) = (height / 3, 2 * height / 3);
    let in_block = |x: usize, y: usize| x >= bx0 && x < bx1 && y >= by0 && y < by1;

    let mut left = vec![0u8; width * height];
    let mut right = vec![0u8; width * height];
    for y in 0..height {
        for x in 0..width {
            // left view shows the texture at its own column
            left[y * width + x] = tex(x, y);
            // right view: a foreground point at left column x + shift
            // projects here; otherwise the background at the same column
            let xl = x + shift;
            right[y * width + x] = if in_block(xl, y) { tex(xl, y) } else { tex(x, y) };
        }
    }
    (
        GrayImage {
            width,
            height,
            pixels: left,
        },
        GrayImage {
            width,
            height,
            pixels: right,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use potts_core::instance::{brute_force_map, Labeling};

    fn flat(width: usize, height: usize, value: u8) -> GrayImage {
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    #[test]
    fn identical_images_have_zero_cost_at_zero_disparity() {
        let (left, _) = synthetic_pair(8, 6, 0, 3);
        let cfg = StereoConfig {
            disparities: 3,
            ..Default::default()
        };
        let inst = build_stereo_instance(&left, &left, &cfg).unwrap();
        for u in 0..inst.node_count() {
            assert_eq!(inst.cost(u, 0), 0.0);
        }
    }

    #[test]
    fn constant_image_weights_are_p_times_s() {
        let img = flat(5, 4, 128);
        let cfg = StereoConfig {
            disparities: 2,
            ..Default::default()
        };
        let inst = build_stereo_instance(&img, &img, &cfg).unwrap();
        for &w in inst.weights() {
            assert_eq!(w, 8.0); // P * s = 2 * 4 at the defaults
        }
    }

    #[test]
    fn known_shift_recovered_in_the_interior() {
        let (left, right) = synthetic_pair(8, 8, 1, 11);
        let cfg = StereoConfig {
            disparities: 2,
            smoothness: 0.5,
            penalty_factor: 2.0,
            crop: Some((2, 2, 3, 3)),
            ..Default::default()
        };
        let inst = build_stereo_instance(&left, &right, &cfg).unwrap();
        let (map, _) = brute_force_map(&inst).unwrap();
        // the crop sits inside the shifted block: disparity 1 everywhere
        assert_eq!(map.as_slice(), Labeling::new(vec![1; 9]).as_slice());
    }

    #[test]
    fn crop_bounds_checked() {
        let img = flat(4, 4, 10);
        let cfg = StereoConfig {
            disparities: 2,
            crop: Some((2, 2, 3, 3)),
            ..Default::default()
        };
        assert!(build_stereo_instance(&img, &img, &cfg).is_err());
    }
}
