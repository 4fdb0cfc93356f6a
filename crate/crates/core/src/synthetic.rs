//! Deterministic test images used by the examples, the acceptance suite and
//! the browser demo.

use std::f64::consts::PI;

use crate::grid::ScalarField;

fn in_diamond(n: usize, x: usize, y: usize) -> bool {
    let c = (n as f64 - 1.0) / 2.0;
    (x as f64 - c).abs() + (y as f64 - c).abs() < n as f64 * 0.3
}

/// Two textured regions: a central diamond with a fine diagonal texture over
/// a background with coarser vertical stripes. Values stay inside `[0, 1]`.
pub fn two_texture(n: usize) -> ScalarField {
    ScalarField::from_fn(n, n, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        if in_diamond(n, x, y) {
            0.68 + 0.12 * (2.0 * PI * (xf + yf) / 5.0).sin()
        } else {
            0.32 + 0.12 * (2.0 * PI * xf / 7.0).sin() * (2.0 * PI * yf / 23.0).cos().signum()
        }
    })
}

/// Indicator of the diamond in [`two_texture`].
pub fn two_texture_mask(n: usize) -> ScalarField {
    ScalarField::from_fn(n, n, |x, y| if in_diamond(n, x, y) { 1.0 } else { 0.0 })
}

/// Pixels of the diamond whose 4-neighbourhood leaves the diamond.
pub fn two_texture_boundary(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in 0..n {
        for x in 0..n {
            if !in_diamond(n, x, y) {
                continue;
            }
            let edge = [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|&(dx, dy)| {
                    let (xx, yy) = (x as isize + dx, y as isize + dy);
                    xx < 0
                        || yy < 0
                        || xx >= n as isize
                        || yy >= n as isize
                        || !in_diamond(n, xx as usize, yy as usize)
                });
            if edge {
                out.push((x, y));
            }
        }
    }
    out
}

/// Piecewise-smooth scene: shaded background, a disc, a rectangle and a
/// smooth bump. Values stay inside `[0.1, 0.9]`.
pub fn piecewise_smooth(n: usize) -> ScalarField {
    let s = n as f64;
    ScalarField::from_fn(n, n, |x, y| {
        let (xf, yf) = (x as f64 / s, y as f64 / s);
        let mut v = 0.25 + 0.15 * xf + 0.05 * yf;
        if (xf - 0.33).hypot(yf - 0.36) < 0.2 {
            v = 0.75 - 0.1 * yf;
        }
        if (0.55..0.88).contains(&xf) && (0.58..0.85).contains(&yf) {
            v = 0.55 + 0.1 * xf;
        }
        let bump = (-((xf - 0.75).powi(2) + (yf - 0.25).powi(2)) / 0.01).exp();
        (v + 0.2 * bump).clamp(0.1, 0.9)
    })
}
