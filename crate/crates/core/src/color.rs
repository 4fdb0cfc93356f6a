//! Vectorial (RGB) decomposition.
//!
//! Every channel keeps its own edge field, weight, dual variable and texture;
//! the channels interact only through the joint gradient norm in the dual
//! denominator.

use crate::diffusion::{evolve_w, DiffusionParams};
use crate::error::{Error, Result};
use crate::grid::{gradient_magnitude, ScalarField, VectorField};
use crate::tv_dual::{
    dual_iterations, energy_weighted, g_eval, primal_from_dual, shrink_v, DecompositionResult,
    DualChannel, MuState, SolverConfig,
};

/// Ordered list of equally sized channels (1 for gray, 3 for RGB).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelImage {
    channels: Vec<ScalarField>,
}

impl MultiChannelImage {
    pub fn new(channels: Vec<ScalarField>) -> Result<Self> {
        if channels.is_empty() || channels.len() > 3 {
            return Err(Error::ChannelCount {
                expected: 3,
                found: channels.len(),
            });
        }
        for c in &channels[1..] {
            channels[0].ensure_same_dims(c)?;
        }
        Ok(Self { channels })
    }

    pub fn gray(field: ScalarField) -> Self {
        Self {
            channels: vec![field],
        }
    }

    pub fn channels(&self) -> &[ScalarField] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<ScalarField> {
        self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn map_channels(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            channels: self.channels.iter().map(f).collect(),
        }
    }
}

struct ChannelState {
    u: ScalarField,
    v: ScalarField,
    w: ScalarField,
    p: VectorField,
    mu: MuState,
    energy_trace: Vec<f64>,
}

/// Coupled decomposition of a 3-channel image. Returns one result per channel
/// in input order; all share the iteration count and convergence flag.
pub fn decompose_color(
    f: &MultiChannelImage,
    config: &SolverConfig,
) -> Result<Vec<DecompositionResult>> {
    config.validate()?;
    if f.channel_count() != 3 {
        return Err(Error::ChannelCount {
            expected: 3,
            found: f.channel_count(),
        });
    }
    if !f.channels().iter().all(ScalarField::is_finite) {
        return Err(Error::NonFinite);
    }
    let (width, height) = f.dims();
    let diffusion = DiffusionParams::new(
        config.diffusion_dt,
        config.dx,
        config.lambda_mode.field(width, height)?,
    )?;

    let mut states = f
        .channels()
        .iter()
        .map(|fc| {
            Ok(ChannelState {
                u: fc.clone(),
                v: fc.zeros_like(),
                w: ScalarField::filled(width, height, 1.0),
                p: VectorField::zeros(width, height),
                mu: MuState::new(&config.mu_mode, fc)?,
                energy_trace: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_outer {
        iterations += 1;

        let mut mus = Vec::with_capacity(3);
        let mut gs = Vec::with_capacity(3);
        let mut hs = Vec::with_capacity(3);
        for (s, fc) in states.iter_mut().zip(f.channels()) {
            mus.push(s.mu.current(&s.u)?);
            s.w = evolve_w(&s.w, &gradient_magnitude(&s.u), &diffusion, config.diffusion_steps)?;
            gs.push(g_eval(&s.w, config.g_choice));
            hs.push(fc.zip_map(&s.v, |a, b| a - b)?);
        }

        {
            let mut channels: Vec<DualChannel<'_>> = states
                .iter_mut()
                .zip(hs.iter().zip(&gs))
                .map(|(s, (h, g))| DualChannel { h, g, p: &mut s.p })
                .collect();
            dual_iterations(&mut channels, config.theta, config.dual_dt, config.inner_iters);
        }

        let mut delta: f64 = 0.0;
        for (c, s) in states.iter_mut().enumerate() {
            let fc = &f.channels()[c];
            let u_next = primal_from_dual(&hs[c], &s.p, config.theta);
            let v_next = shrink_v(&fc.zip_map(&u_next, |a, b| a - b)?, config.theta, &mus[c])?;
            s.mu.record(&u_next)?;
            s.energy_trace.push(energy_weighted(
                &u_next,
                &v_next,
                &gs[c],
                fc,
                &mus[c],
                config.theta,
            )?);
            delta = delta
                .max(u_next.max_abs_diff(&s.u))
                .max(v_next.max_abs_diff(&s.v));
            s.u = u_next;
            s.v = v_next;
        }
        if delta <= config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(states
        .into_iter()
        .map(|s| DecompositionResult {
            u: s.u,
            v: s.v,
            w: s.w,
            energy_trace: s.energy_trace,
            iterations,
            converged,
        })
        .collect())
}
