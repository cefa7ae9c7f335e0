//! Deterministic synthetic inputs: low-rank ground truths, piecewise-smooth
//! test scenes and bounded uniform noise.
//!
//! Everything here is a pure function of its arguments and a `u64` seed
//! (ChaCha8), so experiments and tests are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::ImageMatrix;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Entries drawn uniformly from `[-1, 1)`.
pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> ImageMatrix {
    let mut r = rng(seed, 1);
    ImageMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

/// `(1/k) * sum_i u_i v_i^T` with `u_i, v_i` uniform in `[0, 1)`, so the
/// result has rank `k` (almost surely) and entries in `[0, 1]`.
pub fn low_rank_matrix(rows: usize, cols: usize, rank: usize, seed: u64) -> ImageMatrix {
    let mut r = rng(seed, 2);
    let us: Vec<Vec<f64>> = (0..rank)
        .map(|_| (0..rows).map(|_| r.random::<f64>()).collect())
        .collect();
    let vs: Vec<Vec<f64>> = (0..rank)
        .map(|_| (0..cols).map(|_| r.random::<f64>()).collect())
        .collect();
    let scale = 1.0 / rank.max(1) as f64;
    ImageMatrix::from_fn(rows, cols, |i, j| {
        scale * (0..rank).map(|k| us[k][i] * vs[k][j]).sum::<f64>()
    })
}

fn smoothstep(edge: f64, x: f64) -> f64 {
    // unit-width ramp centred on `edge`
    let t = (x - edge + 0.5).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Piecewise-smooth scene: shaded background, a few soft-edged ellipses and
/// rectangles, and faint oriented texture. Values lie in `[0.02, 0.98]`.
pub fn natural_image(rows: usize, cols: usize, seed: u64) -> ImageMatrix {
    let mut r = rng(seed, 3);
    let (h, w) = (rows as f64, cols as f64);

    let base = r.random_range(0.25..0.6);
    let gy = r.random_range(-0.25..0.25);
    let gx = r.random_range(-0.25..0.25);
    let fy = r.random_range(0.5..2.0);
    let fx = r.random_range(0.5..2.0);
    let phase = r.random_range(0.0..std::f64::consts::TAU);
    let wave = r.random_range(0.03..0.08);

    enum Shape {
        Ellipse { cy: f64, cx: f64, ry: f64, rx: f64 },
        Rect { y0: f64, x0: f64, y1: f64, x1: f64 },
    }
    let count = r.random_range(3..6);
    let shapes: Vec<(Shape, f64)> = (0..count)
        .map(|_| {
            let level = r.random_range(-0.35..0.35);
            let shape = if r.random_bool(0.5) {
                Shape::Ellipse {
                    cy: r.random_range(0.15..0.85) * h,
                    cx: r.random_range(0.15..0.85) * w,
                    ry: r.random_range(0.1..0.3) * h,
                    rx: r.random_range(0.1..0.3) * w,
                }
            } else {
                let y0 = r.random_range(0.0..0.6) * h;
                let x0 = r.random_range(0.0..0.6) * w;
                Shape::Rect {
                    y0,
                    x0,
                    y1: y0 + r.random_range(0.2..0.4) * h,
                    x1: x0 + r.random_range(0.2..0.4) * w,
                }
            };
            (shape, level)
        })
        .collect();
    let tex_amp = r.random_range(0.01..0.03);
    let tex_f = r.random_range(0.6..1.2);
    let tex_theta = r.random_range(0.0..std::f64::consts::PI);

    ImageMatrix::from_fn(rows, cols, |i, j| {
        let (y, x) = (i as f64 + 0.5, j as f64 + 0.5);
        let mut v = base + gy * (y / h - 0.5) + gx * (x / w - 0.5);
        v += wave
            * (std::f64::consts::TAU * fy * y / h + phase).sin()
            * (std::f64::consts::TAU * fx * x / w).cos();
        for (shape, level) in &shapes {
            let inside = match *shape {
                Shape::Ellipse { cy, cx, ry, rx } => {
                    let d = (((y - cy) / ry).powi(2) + ((x - cx) / rx).powi(2)).sqrt();
                    // distance to the boundary in pixels, approximately
                    smoothstep(0.0, (1.0 - d) * ry.min(rx))
                }
                Shape::Rect { y0, x0, y1, x1 } => {
                    smoothstep(y0, y)
                        * (1.0 - smoothstep(y1, y))
                        * smoothstep(x0, x)
                        * (1.0 - smoothstep(x1, x))
                }
            };
            v += level * inside;
        }
        v += tex_amp * (tex_f * (x * tex_theta.cos() + y * tex_theta.sin())).sin();
        v.clamp(0.02, 0.98)
    })
}

/// Adds i.i.d. noise uniform in `[-amplitude, amplitude]` and clips to `[0, 1]`.
pub fn add_uniform_noise(x: &ImageMatrix, amplitude: f64, seed: u64) -> ImageMatrix {
    let mut r = rng(seed, 4);
    let noisy = ImageMatrix::from_fn(x.rows(), x.cols(), |i, j| {
        let e = if amplitude > 0.0 {
            r.random_range(-amplitude..=amplitude)
        } else {
            0.0
        };
        x.get(i, j) + e
    });
    noisy.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;

    #[test]
    fn low_rank_has_requested_rank() {
        for k in 1..=5 {
            let x = low_rank_matrix(16, 16, k, k as u64);
            assert_eq!(numerical_rank(&x, 1e-9).unwrap(), k);
            assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn scenes_are_deterministic_and_bounded() {
        let a = natural_image(32, 32, 4);
        assert_eq!(a, natural_image(32, 32, 4));
        assert_ne!(a, natural_image(32, 32, 5));
        assert!(a.iter().all(|&v| (0.02..=0.98).contains(&v)));
    }

    #[test]
    fn noise_is_bounded() {
        let x = ImageMatrix::constant(10, 10, 0.5);
        let amp = 8.0 / 255.0;
        let y = add_uniform_noise(&x, amp, 1);
        assert!(y.sub(&x).unwrap().max_abs() <= amp + 1e-15);
        assert!(y.sub(&x).unwrap().max_abs() > 0.0);
    }
}
