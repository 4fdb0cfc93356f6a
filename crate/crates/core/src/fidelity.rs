//! Adaptive fidelity fields for the texture term.
//!
//! * `mu1`: normalized area under the local cumulative histogram of the
//!   current cartoon.
//! * `mu2`: running sum of Gaussian-smoothed cartoons with shrinking scales.
//! * `mu3`: relative reduction of the local gradient energy under a low-pass
//!   filter, computed once from the input.
//!
//! Fields handed to the solver are floored at [`MU_FLOOR`] so that the
//! shrinkage threshold stays positive.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{gradient, ScalarField, VectorField};

/// Lower bound applied to every fidelity field that reaches the solver.
pub const MU_FLOOR: f64 = 1e-3;

/// Base value of `mu2` before any cartoon has been accumulated.
pub const MU2_INITIAL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramParams {
    /// Window half-width; the window is `(2r+1) x (2r+1)` clipped to the image.
    pub radius: usize,
    /// Number of intensity bins spanning `[0, 1]`.
    pub levels: usize,
}

impl Default for HistogramParams {
    fn default() -> Self {
        Self {
            radius: 5,
            levels: 256,
        }
    }
}

impl HistogramParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(invalid("histogram radius must be >= 1"));
        }
        if self.levels < 2 {
            return Err(invalid("histogram needs at least 2 levels"));
        }
        Ok(())
    }
}

/// Half-sample symmetric reflection of `i` into `0..n`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m >= n { period - 1 - m } else { m }) as usize
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable Gaussian blur with mirror boundaries. `sigma == 0` is the
/// identity.
pub fn gaussian_convolve(img: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = img.dims();

    let mut tmp = ScalarField::zeros(w, h);
    for y in 0..h {
        let row = img.row(y);
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * row[reflect(x as isize + k as isize - r, w)];
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = ScalarField::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * tmp.get(x, reflect(y as isize + k as isize - r, h));
            }
            out.set(x, y, acc);
        }
    }
    Ok(out)
}

/// Bin index of an intensity; values outside `[0, 1]` are clamped first.
#[inline]
pub(crate) fn quantize(v: f64, levels: usize) -> u64 {
    let top = (levels - 1) as f64;
    (v.clamp(0.0, 1.0) * top).round() as u64
}

/// Local-histogram fidelity.
///
/// For each pixel the cumulative distribution `F_x` of the quantized values in
/// the clipped window is integrated over `[0, 1]` with a left Riemann sum on the
/// bin grid, giving `I(x) = 1 - mean(q) / (levels - 1)`. The result is
/// `I(x) / max I`, floored at [`MU_FLOOR`]. If every window sits at the top
/// intensity (`max I == 0`) the field is identically 1.
pub fn mu1_local_histogram(u: &ScalarField, params: &HistogramParams) -> Result<ScalarField> {
    params.validate()?;
    if !u.is_finite() {
        return Err(crate::Error::NonFinite);
    }
    let (w, h) = u.dims();
    let top = (params.levels - 1) as u64;

    // summed-area table of bin indices, (w+1) x (h+1)
    let sw = w + 1;
    let mut sat = vec![0u64; sw * (h + 1)];
    for y in 0..h {
        let mut run = 0u64;
        for x in 0..w {
            run += quantize(u.get(x, y), params.levels);
            sat[(y + 1) * sw + x + 1] = sat[y * sw + x + 1] + run;
        }
    }

    let r = params.radius;
    let integral = ScalarField::from_fn(w, h, |x, y| {
        let x0 = x.saturating_sub(r);
        let y0 = y.saturating_sub(r);
        let x1 = (x + r + 1).min(w);
        let y1 = (y + r + 1).min(h);
        let n = ((x1 - x0) * (y1 - y0)) as u64;
        let qsum = sat[y1 * sw + x1] + sat[y0 * sw + x0] - sat[y0 * sw + x1] - sat[y1 * sw + x0];
        // sum over the window of (top - q) = sum_k #{q <= k}, k < top
        let below = n * top - qsum;
        below as f64 / (n as f64 * top as f64)
    });

    Ok(normalize_by_max(integral))
}

pub(crate) fn normalize_by_max(integral: ScalarField) -> ScalarField {
    let peak = integral.max();
    if peak <= 0.0 {
        return integral.map(|_| 1.0);
    }
    integral.map(|v| (v / peak).max(MU_FLOOR))
}

fn validate_dims(dims: (usize, usize)) -> Result<()> {
    if dims.0 == 0 || dims.1 == 0 {
        return Err(invalid("empty field dimensions"));
    }
    Ok(())
}

/// Incremental form of [`mu2_cumulative`], used inside the solver loop.
#[derive(Debug, Clone)]
pub struct Mu2Accumulator {
    sum: ScalarField,
    count: usize,
}

impl Mu2Accumulator {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            sum: ScalarField::zeros(width, height),
            count: 0,
        }
    }

    /// Adds `G_{1/i^2} * u` for the next index `i` (starting at 1).
    pub fn push(&mut self, u: &ScalarField) -> Result<()> {
        self.sum.ensure_same_dims(u)?;
        let i = (self.count + 1) as f64;
        let blurred = gaussian_convolve(u, 1.0 / (i * i))?;
        for (s, b) in self.sum.values_mut().iter_mut().zip(blurred.values()) {
            *s += b;
        }
        self.count += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn field(&self) -> ScalarField {
        if self.count == 0 {
            return self.sum.map(|_| MU2_INITIAL);
        }
        self.sum.map(|v| v.clamp(MU_FLOOR, 1.0))
    }
}

/// Cumulative-smoothing fidelity `sum_{i>=1} G_{1/i^2} * u^i`, clamped to
/// `[MU_FLOOR, 1]`. An empty history yields the constant [`MU2_INITIAL`].
pub fn mu2_cumulative(dims: (usize, usize), history: &[ScalarField]) -> Result<ScalarField> {
    validate_dims(dims)?;
    let mut acc = Mu2Accumulator::new(dims.0, dims.1);
    for u in history {
        acc.push(u)?;
    }
    Ok(acc.field())
}

/// Relative reduction of the smoothed gradient magnitude under a Gaussian
/// low-pass of width `sigma`, averaged at scale `rho`. Flat regions map to 0.
pub fn mu3_relative_reduction(f: &ScalarField, rho: f64, sigma: f64) -> Result<ScalarField> {
    if !(rho >= 0.0 && sigma >= 0.0) {
        return Err(invalid("rho and sigma must be non-negative"));
    }
    let grad = gradient(f);
    let full = gaussian_convolve(&grad.magnitude(), rho)?;
    let low = VectorField::from_components(
        gaussian_convolve(&grad.x_component(), sigma)?,
        gaussian_convolve(&grad.y_component(), sigma)?,
    )?;
    let reduced = gaussian_convolve(&low.magnitude(), rho)?;
    full.zip_map(&reduced, |a, b| {
        if a < 1e-12 {
            0.0
        } else {
            ((a - b) / a).clamp(0.0, 1.0)
        }
    })
}
