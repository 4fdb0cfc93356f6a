//! PSNR and (Gaussian-windowed) mean SSIM.

use crate::color::MultiChannelImage;
use crate::error::{invalid, Error, Result};
use crate::grid::ScalarField;

/// SSIM window side length.
pub const SSIM_WINDOW: usize = 11;
/// Standard deviation of the SSIM Gaussian window.
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Peak signal-to-noise ratio in dB. Identical inputs give
/// `f64::INFINITY`.
pub fn psnr(u: &ScalarField, reference: &ScalarField, max_val: f64) -> Result<f64> {
    u.ensure_same_dims(reference)?;
    if !(max_val > 0.0) {
        return Err(invalid(format!("max_val must be > 0, got {max_val}")));
    }
    let mse = u
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / u.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (max_val / mse.sqrt()).log10())
}

#[inline]
fn ssim_from_moments(m1: f64, m2: f64, v1: f64, v2: f64, cov: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * m1 * m2 + c1) * (2.0 * cov + c2)) / ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2))
}

/// SSIM of two equally sized windows with uniform weights.
pub fn ssim_window(w1: &[f64], w2: &[f64], c1: f64, c2: f64) -> Result<f64> {
    if w1.len() != w2.len() || w1.is_empty() {
        return Err(invalid("ssim windows must be non-empty and of equal size"));
    }
    let n = w1.len() as f64;
    let m1 = w1.iter().sum::<f64>() / n;
    let m2 = w2.iter().sum::<f64>() / n;
    let mut v1 = 0.0;
    let mut v2 = 0.0;
    let mut cov = 0.0;
    for (a, b) in w1.iter().zip(w2) {
        v1 += (a - m1) * (a - m1);
        v2 += (b - m2) * (b - m2);
        cov += (a - m1) * (b - m2);
    }
    Ok(ssim_from_moments(m1, m2, v1 / n, v2 / n, cov / n, c1, c2))
}

fn window_kernel() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable filtering over fully contained windows only.
fn filter_valid(data: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let ow = w - n + 1;
    let oh = h - n + 1;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let row = &data[y * w + x..y * w + x + n];
            tmp[y * ow + x] = row.iter().zip(k).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                acc += kv * tmp[(y + j) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean SSIM over all 11x11 Gaussian-weighted windows that fit inside the
/// image.
pub fn mssim(u: &ScalarField, reference: &ScalarField, max_val: f64) -> Result<f64> {
    u.ensure_same_dims(reference)?;
    let (w, h) = u.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(invalid(format!(
            "images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for MSSIM, got {w}x{h}"
        )));
    }
    let c1 = (SSIM_K1 * max_val).powi(2);
    let c2 = (SSIM_K2 * max_val).powi(2);
    let k = window_kernel();
    let a = u.values();
    let b = reference.values();
    let sq = |d: &[f64]| d.iter().map(|v| v * v).collect::<Vec<_>>();
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();

    let m1 = filter_valid(a, w, h, &k);
    let m2 = filter_valid(b, w, h, &k);
    let e11 = filter_valid(&sq(a), w, h, &k);
    let e22 = filter_valid(&sq(b), w, h, &k);
    let e12 = filter_valid(&prod, w, h, &k);

    let mut total = 0.0;
    for i in 0..m1.len() {
        let v1 = e11[i] - m1[i] * m1[i];
        let v2 = e22[i] - m2[i] * m2[i];
        let cov = e12[i] - m1[i] * m2[i];
        total += ssim_from_moments(m1[i], m2[i], v1, v2, cov, c1, c2);
    }
    Ok(total / m1.len() as f64)
}

/// Channel-averaged `(psnr, mssim)`.
pub fn average_channel_metrics(
    u: &MultiChannelImage,
    reference: &MultiChannelImage,
    max_val: f64,
) -> Result<(f64, f64)> {
    if u.channel_count() != reference.channel_count() {
        return Err(Error::ChannelCount {
            expected: reference.channel_count(),
            found: u.channel_count(),
        });
    }
    let mut p = 0.0;
    let mut s = 0.0;
    for (a, b) in u.channels().iter().zip(reference.channels()) {
        p += psnr(a, b, max_val)?;
        s += mssim(a, b, max_val)?;
    }
    let n = u.channel_count() as f64;
    Ok((p / n, s / n))
}
