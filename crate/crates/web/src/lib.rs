//! WebAssembly bindings for the interactive demo page in `www/`.
//!
//! The page holds one [`Demo`] and calls three operations on it: adding
//! noise, decomposing the current image and running the multiscale variant.
//! Components come back as RGBA buffers ready for `ImageData`.

use wasm_bindgen::prelude::*;

use cte_core::color::MultiChannelImage;
use cte_core::metrics::psnr;
use cte_core::multiscale::{multiscale_decompose, MultiscaleResult};
use cte_core::noise::add_gaussian_noise;
use cte_core::synthetic::{piecewise_smooth, two_texture};
use cte_core::visualize::{render, RenderMode};
use cte_core::{decompose, DecompositionResult, GChoice, MuMode, ScalarField, SolverConfig};

#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub iterations: usize,
    pub converged: bool,
    /// PSNR of the cartoon against the noise-free image, NaN without noise.
    pub psnr: f64,
    pub energy: f64,
}

#[wasm_bindgen]
pub struct Demo {
    clean: ScalarField,
    input: ScalarField,
    noisy: bool,
    result: Option<DecompositionResult>,
    layers: Option<MultiscaleResult>,
}

fn rgba(field: &ScalarField, mode: RenderMode) -> Vec<u8> {
    render(field, mode)
        .into_iter()
        .flat_map(|v| [v, v, v, 255])
        .collect()
}

fn rescale() -> RenderMode {
    RenderMode::Rescale { range: None }
}

fn psnr_255(a: &ScalarField, b: &ScalarField) -> f64 {
    let s = |x: &ScalarField| x.map(|v| v * 255.0);
    psnr(&s(a), &s(b), 255.0).unwrap_or(f64::NAN)
}

fn parse_mu(mode: &str, mu: f64) -> Result<MuMode, String> {
    Ok(match mode {
        "constant" => MuMode::Constant { value: mu },
        "mu1" => MuMode::mu1(),
        "mu2" => MuMode::Mu2,
        "mu3" => MuMode::mu3(),
        other => return Err(format!("unknown mu mode {other:?}")),
    })
}

fn parse_g(g: &str) -> Result<GChoice, String> {
    Ok(match g {
        "rational" => GChoice::Rational,
        "exp" => GChoice::Exponential,
        "tvreg" => GChoice::TvRegularized,
        other => return Err(format!("unknown weight {other:?}")),
    })
}

#[wasm_bindgen]
impl Demo {
    /// Starts from a bundled test image: `"two-texture"` or `"piecewise"`.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, size: usize) -> Result<Demo, String> {
        if !(16..=512).contains(&size) {
            return Err(format!("size must lie in 16..=512, got {size}"));
        }
        let clean = match kind {
            "two-texture" => two_texture(size),
            "piecewise" => piecewise_smooth(size),
            other => return Err(format!("unknown test image {other:?}")),
        };
        Ok(Self::with_image(clean))
    }

    /// Starts from canvas pixels; colour is reduced to luma.
    pub fn from_rgba(width: usize, height: usize, pixels: &[u8]) -> Result<Demo, String> {
        if width == 0 || height == 0 || pixels.len() != width * height * 4 {
            return Err(format!(
                "expected {}x{} RGBA pixels, got {} bytes",
                width,
                height,
                pixels.len()
            ));
        }
        let data = pixels
            .chunks_exact(4)
            .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0)
            .collect();
        let clean = ScalarField::new(width, height, data).map_err(|e| e.to_string())?;
        Ok(Self::with_image(clean))
    }

    pub fn width(&self) -> usize {
        self.input.width()
    }

    pub fn height(&self) -> usize {
        self.input.height()
    }

    /// Replaces the working image by the clean image plus Gaussian noise and
    /// returns its PSNR in dB. `sigma = 0` restores the clean image.
    pub fn add_noise(&mut self, sigma: f64, seed: u64) -> f64 {
        let sigma = sigma.max(0.0);
        self.input = add_gaussian_noise(&MultiChannelImage::gray(self.clean.clone()), sigma, seed)
            .into_channels()
            .remove(0);
        self.noisy = sigma > 0.0;
        self.result = None;
        self.layers = None;
        psnr_255(&self.input, &self.clean)
    }

    pub fn decompose(
        &mut self,
        theta: f64,
        mu_mode: &str,
        mu: f64,
        g: &str,
        max_outer: usize,
    ) -> Result<Summary, String> {
        let config = SolverConfig {
            theta,
            mu_mode: parse_mu(mu_mode, mu)?,
            g_choice: parse_g(g)?,
            max_outer,
            ..Default::default()
        };
        let r = decompose(&self.input, &config).map_err(|e| e.to_string())?;
        let summary = Summary {
            iterations: r.iterations,
            converged: r.converged,
            psnr: if self.noisy { psnr_255(&r.u, &self.clean) } else { f64::NAN },
            energy: r.energy_trace.last().copied().unwrap_or(f64::NAN),
        };
        self.result = Some(r);
        Ok(summary)
    }

    /// RGBA pixels of `"input"`, `"u"`, `"v"` or `"w"`; empty before the
    /// first decomposition.
    pub fn component(&self, name: &str) -> Vec<u8> {
        if name == "input" {
            return rgba(&self.input, RenderMode::Cartoon);
        }
        let Some(r) = &self.result else {
            return Vec::new();
        };
        match name {
            "u" => rgba(&r.u, RenderMode::Cartoon),
            "v" => rgba(&r.v, rescale()),
            "w" => rgba(&r.w, rescale()),
            _ => Vec::new(),
        }
    }

    /// Energy per outer sweep of the last decomposition.
    pub fn energy_trace(&self) -> Vec<f64> {
        self.result
            .as_ref()
            .map(|r| r.energy_trace.clone())
            .unwrap_or_default()
    }

    /// Runs `levels` scales with fidelity `mu0 * ratio^i`; returns the
    /// residual norm after the last scale.
    pub fn multiscale(&mut self, levels: usize, mu0: f64, ratio: f64, max_outer: usize) -> Result<f64, String> {
        let config = SolverConfig {
            max_outer,
            ..Default::default()
        };
        let ms = multiscale_decompose(&self.input, levels, mu0, ratio, &config).map_err(|e| e.to_string())?;
        let norm = ms.residuals.last().map(ScalarField::norm_l2).unwrap_or(f64::NAN);
        self.layers = Some(ms);
        Ok(norm)
    }

    pub fn layer_count(&self) -> usize {
        self.layers.as_ref().map_or(0, |m| m.layers.len())
    }

    /// RGBA pixels of scale `index`: `"u"`, `"v"`, or `"sum"` for the
    /// reconstruction `sum_{i <= index} (u_i + v_i)`.
    pub fn layer(&self, index: usize, name: &str) -> Vec<u8> {
        let Some(ms) = &self.layers else {
            return Vec::new();
        };
        let Some(layer) = ms.layers.get(index) else {
            return Vec::new();
        };
        match name {
            "u" => rgba(&layer.u, rescale()),
            "v" => rgba(&layer.v, rescale()),
            "sum" => rgba(&ms.cumulative(index), RenderMode::Cartoon),
            _ => Vec::new(),
        }
    }
}

impl Demo {
    fn with_image(clean: ScalarField) -> Self {
        Self {
            input: clean.clone(),
            clean,
            noisy: false,
            result: None,
            layers: None,
        }
    }
}
