//! Image containers and the discrete differential operators shared by every
//! solver.
//!
//! Fields are stored row-major with `x` as the column index and `y` as the row
//! index. The gradient uses forward differences with a zero last column/row,
//! and the divergence is its exact negative adjoint (backward differences with
//! zero flux through the boundary). The Laplacian is the zero-flux 5-point
//! stencil, which coincides with `divergence(gradient(.))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D grid of real intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty field");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty field");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.width, self.height)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields of equal size.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_dims(other)?;
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Sum of pointwise products. Panics on size mismatch.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `max |self - other|`. Panics on size mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }
}

/// A 2-D grid of 2-vectors (dual variables, gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    width: usize,
    height: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty field");
        Self {
            width,
            height,
            x: vec![0.0; width * height],
            y: vec![0.0; width * height],
        }
    }

    pub fn from_components(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.ensure_same_dims(&y)?;
        Ok(Self {
            width: x.width,
            height: x.height,
            x: x.data,
            y: y.data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.x, &mut self.y)
    }

    pub fn x_component(&self) -> ScalarField {
        ScalarField {
            width: self.width,
            height: self.height,
            data: self.x.clone(),
        }
    }

    pub fn y_component(&self) -> ScalarField {
        ScalarField {
            width: self.width,
            height: self.height,
            data: self.y.clone(),
        }
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            width: self.width,
            height: self.height,
            data: self
                .x
                .iter()
                .zip(&self.y)
                .map(|(a, b)| a.hypot(*b))
                .collect(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims());
        let dx: f64 = self.x.iter().zip(&other.x).map(|(a, b)| a * b).sum();
        let dy: f64 = self.y.iter().zip(&other.y).map(|(a, b)| a * b).sum();
        dx + dy
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

/// Forward-difference gradient of a single row `src` (length `w`) at column
/// `x`, with the next row `below` when it exists.
#[inline]
pub(crate) fn forward_diff(src: &[f64], below: Option<&[f64]>, x: usize) -> (f64, f64) {
    let gx = if x + 1 < src.len() {
        src[x + 1] - src[x]
    } else {
        0.0
    };
    let gy = match below {
        Some(b) => b[x] - src[x],
        None => 0.0,
    };
    (gx, gy)
}

/// Backward-difference divergence at `(x, y)` given the x/y components.
#[inline]
pub(crate) fn backward_div(px: &[f64], py: &[f64], w: usize, h: usize, x: usize, y: usize) -> f64 {
    let i = y * w + x;
    let dx = if w == 1 {
        0.0
    } else if x == 0 {
        px[i]
    } else if x + 1 == w {
        -px[i - 1]
    } else {
        px[i] - px[i - 1]
    };
    let dy = if h == 1 {
        0.0
    } else if y == 0 {
        py[i]
    } else if y + 1 == h {
        -py[i - w]
    } else {
        py[i] - py[i - w]
    };
    dx + dy
}

pub fn gradient(img: &ScalarField) -> VectorField {
    let (w, h) = img.dims();
    let mut out = VectorField::zeros(w, h);
    for y in 0..h {
        let row = img.row(y);
        let below = (y + 1 < h).then(|| img.row(y + 1));
        for x in 0..w {
            let (gx, gy) = forward_diff(row, below, x);
            out.x[y * w + x] = gx;
            out.y[y * w + x] = gy;
        }
    }
    out
}

pub fn divergence(vf: &VectorField) -> ScalarField {
    let (w, h) = vf.dims();
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            data.push(backward_div(&vf.x, &vf.y, w, h, x, y));
        }
    }
    ScalarField {
        width: w,
        height: h,
        data,
    }
}

pub fn gradient_magnitude(img: &ScalarField) -> ScalarField {
    gradient(img).magnitude()
}

/// 5-point Laplacian; neighbours outside the grid take the centre value.
pub fn laplacian(img: &ScalarField) -> ScalarField {
    let (w, h) = img.dims();
    ScalarField::from_fn(w, h, |x, y| {
        let c = img.get(x, y);
        let left = if x > 0 { img.get(x - 1, y) } else { c };
        let right = if x + 1 < w { img.get(x + 1, y) } else { c };
        let up = if y > 0 { img.get(x, y - 1) } else { c };
        let down = if y + 1 < h { img.get(x, y + 1) } else { c };
        left + right + up + down - 4.0 * c
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(rows: &[&[f64]]) -> ScalarField {
        let h = rows.len();
        let w = rows[0].len();
        ScalarField::new(w, h, rows.concat()).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(ScalarField::new(0, 3, vec![]).is_err());
        assert!(ScalarField::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = gradient(&ScalarField::filled(5, 4, 0.7));
        assert!(g.xs().iter().chain(g.ys()).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_ramp() {
        let h = 0.25;
        let img = ScalarField::from_fn(6, 3, |x, _| x as f64 * h);
        let g = gradient(&img);
        for y in 0..3 {
            for x in 0..6 {
                let expect = if x < 5 { h } else { 0.0 };
                assert_eq!(g.xs()[y * 6 + x], expect);
                assert_eq!(g.ys()[y * 6 + x], 0.0);
            }
        }
        let m = gradient_magnitude(&img);
        assert_eq!(m.get(2, 1), h);
    }

    #[test]
    fn gradient_two_by_two() {
        let g = gradient(&field(&[&[0.0, 1.0], &[0.0, 1.0]]));
        assert_eq!(g.xs(), &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(g.ys(), &[0.0; 4]);
    }

    #[test]
    fn divergence_two_by_two() {
        let vf = VectorField::from_components(
            field(&[&[1.0, 0.0], &[1.0, 0.0]]),
            ScalarField::zeros(2, 2),
        )
        .unwrap();
        assert_eq!(divergence(&vf).values(), &[1.0, -1.0, 1.0, -1.0]);
        assert!(divergence(&VectorField::zeros(3, 3))
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn magnitude_pythagorean() {
        // gx = 3k, gy = 4k at (0, 0)
        let k = 0.1;
        let img = field(&[&[0.0, 3.0 * k], &[4.0 * k, 0.0]]);
        assert!((gradient_magnitude(&img).get(0, 0) - 5.0 * k).abs() < 1e-15);
    }

    #[test]
    fn laplacian_examples() {
        assert!(laplacian(&ScalarField::filled(4, 4, 2.0))
            .values()
            .iter()
            .all(|&v| v == 0.0));

        let ramp = ScalarField::from_fn(7, 5, |x, y| 0.1 * x as f64 + 0.3 * y as f64);
        let l = laplacian(&ramp);
        for y in 1..4 {
            for x in 1..6 {
                assert!(l.get(x, y).abs() < 1e-14);
            }
        }

        let mut spike = ScalarField::zeros(5, 5);
        spike.set(2, 2, 1.0);
        let l = laplacian(&spike);
        assert_eq!(l.get(2, 2), -4.0);
        for (x, y) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(l.get(x, y), 1.0);
        }
        assert_eq!(l.sum(), 0.0);
    }

    #[test]
    fn laplacian_is_div_grad() {
        let img = ScalarField::from_fn(9, 6, |x, y| ((x * 7 + y * 13) % 11) as f64 / 11.0);
        let a = laplacian(&img);
        let b = divergence(&gradient(&img));
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn single_row_and_column_fields() {
        let row = ScalarField::from_fn(5, 1, |x, _| x as f64);
        let u = ScalarField::from_fn(5, 1, |x, _| (x * x) as f64);
        let p = gradient(&u);
        assert!((gradient(&row).dot(&p) + row.dot(&divergence(&p))).abs() < 1e-12);
        let col = row.transpose();
        let pc = gradient(&u.transpose());
        assert!((gradient(&col).dot(&pc) + col.dot(&divergence(&pc))).abs() < 1e-12);
    }
}
