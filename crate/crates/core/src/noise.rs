use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::color::MultiChannelImage;

/// Adds i.i.d. Gaussian noise with standard deviation `sigma_255 / 255`
/// to every channel and pixel, then clamps to `[0, 1]`. Channels are filled
/// in order from one seeded ChaCha8 stream.
pub fn add_gaussian_noise(img: &MultiChannelImage, sigma_255: f64, seed: u64) -> MultiChannelImage {
    assert!(sigma_255 >= 0.0, "noise level must be non-negative");
    if sigma_255 == 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_255 / 255.0).expect("finite sigma");
    let mut out = img.clone().into_channels();
    for c in &mut out {
        for v in c.values_mut() {
            *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }
    MultiChannelImage::new(out).expect("same shape as the input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScalarField;

    #[test]
    fn zero_sigma_is_identity() {
        let img = MultiChannelImage::gray(ScalarField::filled(8, 8, 0.3));
        assert_eq!(add_gaussian_noise(&img, 0.0, 1), img);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let img = MultiChannelImage::gray(ScalarField::filled(16, 16, 0.5));
        assert_eq!(add_gaussian_noise(&img, 30.0, 7), add_gaussian_noise(&img, 30.0, 7));
        assert_ne!(add_gaussian_noise(&img, 30.0, 7), add_gaussian_noise(&img, 30.0, 8));
    }

    #[test]
    fn empirical_std_on_mid_gray() {
        let clean = ScalarField::filled(256, 256, 0.5);
        let noisy = add_gaussian_noise(&MultiChannelImage::gray(clean.clone()), 30.0, 3);
        let diff: Vec<f64> = noisy.channels()[0]
            .values()
            .iter()
            .zip(clean.values())
            .map(|(a, b)| a - b)
            .collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        let var = diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diff.len() as f64;
        let target = 30.0 / 255.0;
        assert!((var.sqrt() - target).abs() < 0.03 * target, "std {}", var.sqrt());
    }
}
