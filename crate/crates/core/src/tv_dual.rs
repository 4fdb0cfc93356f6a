//! Grayscale cartoon/texture/edge solver.
//!
//! Each outer sweep advances the pseudo-edge field `w` by an explicit diffusion
//! step driven by `|grad u|`, solves the weighted ROF subproblem for `u` with a
//! warm-started dual fixed-point iteration using the weight `g(w)`, and then
//! soft-thresholds the residual to obtain the texture `v`.

use serde::{Deserialize, Serialize};

use crate::diffusion::{evolve_w, DiffusionParams};
use crate::error::{invalid, Error, Result};
use crate::fidelity::{
    mu1_local_histogram, mu3_relative_reduction, HistogramParams, Mu2Accumulator, MU_FLOOR,
};
use crate::grid::{backward_div, forward_diff, gradient_magnitude, ScalarField, VectorField};
use crate::par;

/// Regularization constant of the TV-type weight `1/sqrt(eps^2 + w^2)`.
pub const G_TV_EPSILON: f64 = 1e-3;

/// Edge-stopping weight applied to the pseudo-edge field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GChoice {
    /// `1 / (1 + w^2)`
    #[default]
    Rational,
    /// `exp(-w^2)`
    Exponential,
    /// `1 / sqrt(eps^2 + w^2)`
    TvRegularized,
}

impl GChoice {
    #[inline]
    pub fn apply(self, w: f64) -> f64 {
        match self {
            GChoice::Rational => 1.0 / (1.0 + w * w),
            GChoice::Exponential => (-w * w).exp(),
            GChoice::TvRegularized => 1.0 / (G_TV_EPSILON * G_TV_EPSILON + w * w).sqrt(),
        }
    }
}

pub fn g_eval(w: &ScalarField, g_choice: GChoice) -> ScalarField {
    w.map(|v| g_choice.apply(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MuMode {
    Constant { value: f64 },
    /// Local histogram of the current cartoon, recomputed every sweep.
    Mu1 { histogram: HistogramParams },
    /// Cumulative smoothing of past cartoons.
    Mu2,
    /// Relative gradient reduction of the input, computed once.
    Mu3 { rho: f64, sigma: f64 },
}

impl Default for MuMode {
    fn default() -> Self {
        MuMode::Constant { value: 1.0 }
    }
}

impl MuMode {
    pub fn mu1() -> Self {
        MuMode::Mu1 {
            histogram: HistogramParams::default(),
        }
    }

    pub fn mu3() -> Self {
        MuMode::Mu3 {
            rho: 4.0,
            sigma: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaMode {
    Constant(f64),
    Field(ScalarField),
}

impl Default for LambdaMode {
    fn default() -> Self {
        LambdaMode::Constant(0.5)
    }
}

impl LambdaMode {
    pub(crate) fn field(&self, width: usize, height: usize) -> Result<ScalarField> {
        match self {
            LambdaMode::Constant(l) => Ok(ScalarField::filled(width, height, *l)),
            LambdaMode::Field(f) => {
                if f.dims() != (width, height) {
                    return Err(Error::DimensionMismatch {
                        expected: (width, height),
                        found: f.dims(),
                    });
                }
                Ok(f.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Coupling weight between `u + v` and `f`.
    pub theta: f64,
    /// Stopping threshold on `max(|du|_inf, |dv|_inf)`.
    pub epsilon: f64,
    /// Dual fixed-point iterations per outer sweep.
    pub inner_iters: usize,
    /// Dual step size, at most 1/8.
    pub dual_dt: f64,
    pub g_choice: GChoice,
    pub mu_mode: MuMode,
    pub lambda_mode: LambdaMode,
    pub max_outer: usize,
    /// Explicit diffusion time step for `w`.
    pub diffusion_dt: f64,
    pub dx: f64,
    /// Diffusion steps per outer sweep.
    pub diffusion_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta: 1e-2,
            epsilon: 1e-4,
            inner_iters: 30,
            dual_dt: 0.125,
            g_choice: GChoice::Rational,
            mu_mode: MuMode::default(),
            lambda_mode: LambdaMode::default(),
            max_outer: 500,
            diffusion_dt: 0.125,
            dx: 1.0,
            diffusion_steps: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(invalid(format!("theta must be > 0, got {}", self.theta)));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.inner_iters == 0 {
            return Err(invalid("inner_iters must be >= 1"));
        }
        if !(self.dual_dt > 0.0 && self.dual_dt <= 0.125) {
            return Err(invalid(format!(
                "dual_dt must lie in (0, 1/8], got {}",
                self.dual_dt
            )));
        }
        if self.max_outer == 0 {
            return Err(invalid("max_outer must be >= 1"));
        }
        if self.diffusion_steps == 0 {
            return Err(invalid("diffusion_steps must be >= 1"));
        }
        match self.mu_mode {
            MuMode::Constant { value } if !(value > 0.0 && value.is_finite()) => {
                return Err(invalid(format!("constant mu must be > 0, got {value}")))
            }
            MuMode::Mu1 { histogram } => histogram.validate()?,
            MuMode::Mu3 { rho, sigma } if !(rho >= 0.0 && sigma >= 0.0) => {
                return Err(invalid("mu3 rho and sigma must be >= 0"))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    /// Cartoon.
    pub u: ScalarField,
    /// Texture.
    pub v: ScalarField,
    /// Pseudo-edges.
    pub w: ScalarField,
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// One channel of the dual fixed-point problem: data `h = f - v`, weight `g`
/// and the dual variable updated in place.
pub(crate) struct DualChannel<'a> {
    pub h: &'a ScalarField,
    pub g: &'a ScalarField,
    pub p: &'a mut VectorField,
}

/// Runs `iters` fixed-point updates
///
/// ```text
/// eta = grad(div p - h / theta)
/// p  <- (p + dt eta) / (1 + dt / g * |eta|)
/// ```
///
/// on every channel. With more than one channel `|eta|` is the joint norm
/// `sqrt(sum_c |eta_c|^2)`; the per-pixel terms are summed in sorted order so
/// the result does not depend on channel order.
pub(crate) fn dual_iterations(channels: &mut [DualChannel<'_>], theta: f64, dt: f64, iters: usize) {
    let Some(first) = channels.first() else {
        return;
    };
    let (w, h) = first.h.dims();
    let n = w * h;
    let inv_theta = 1.0 / theta;
    let mut residuals = vec![vec![0.0; n]; channels.len()];
    let mut norm = vec![0.0; n];

    for _ in 0..iters {
        for (ch, d) in channels.iter().zip(residuals.iter_mut()) {
            let (px, py) = (ch.p.xs(), ch.p.ys());
            let hv = ch.h.values();
            par::for_each_row(d, w, |y, row| {
                for (x, out) in row.iter_mut().enumerate() {
                    *out = backward_div(px, py, w, h, x, y) - hv[y * w + x] * inv_theta;
                }
            });
        }

        let residuals_ref = &residuals;
        par::for_each_row(&mut norm, w, |y, row| {
            let mut terms = [0.0f64; 3];
            for (x, out) in row.iter_mut().enumerate() {
                let mut total = 0.0;
                if residuals_ref.len() == 1 {
                    let d = &residuals_ref[0];
                    let below = (y + 1 < h).then(|| &d[(y + 1) * w..(y + 2) * w]);
                    let (ex, ey) = forward_diff(&d[y * w..(y + 1) * w], below, x);
                    total = ex * ex + ey * ey;
                } else {
                    for (c, d) in residuals_ref.iter().enumerate() {
                        let below = (y + 1 < h).then(|| &d[(y + 1) * w..(y + 2) * w]);
                        let (ex, ey) = forward_diff(&d[y * w..(y + 1) * w], below, x);
                        terms[c] = ex * ex + ey * ey;
                    }
                    let t = &mut terms[..residuals_ref.len()];
                    t.sort_by(f64::total_cmp);
                    for v in t.iter() {
                        total += v;
                    }
                }
                *out = total.sqrt();
            }
        });

        for (ch, d) in channels.iter_mut().zip(&residuals) {
            let gv = ch.g.values();
            let norm = &norm;
            let (px, py) = ch.p.components_mut();
            par::for_each_row_pair(px, py, w, |y, rx, ry| {
                let row = &d[y * w..(y + 1) * w];
                let below = (y + 1 < h).then(|| &d[(y + 1) * w..(y + 2) * w]);
                for x in 0..w {
                    let i = y * w + x;
                    let (ex, ey) = forward_diff(row, below, x);
                    let denom = 1.0 + dt / gv[i] * norm[i];
                    rx[x] = (rx[x] + dt * ex) / denom;
                    ry[x] = (ry[x] + dt * ey) / denom;
                }
            });
        }
    }
}

/// `u = h - theta * div p`.
pub(crate) fn primal_from_dual(h: &ScalarField, p: &VectorField, theta: f64) -> ScalarField {
    let (w, hh) = h.dims();
    let (px, py) = (p.xs(), p.ys());
    let hv = h.values();
    let mut u = ScalarField::zeros(w, hh);
    par::for_each_row(u.values_mut(), w, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = hv[y * w + x] - theta * backward_div(px, py, w, hh, x, y);
        }
    });
    u
}

fn ensure_positive_weight(g: &ScalarField) -> Result<()> {
    if !g.values().iter().all(|&v| v > 0.0 && v.is_finite()) {
        return Err(invalid("TV weight g must be positive and finite"));
    }
    Ok(())
}

/// Weighted ROF step: approximately minimizes
/// `sum g |grad u| + |u - (f - v)|^2 / (2 theta)` by `inner_iters` dual
/// fixed-point updates starting from `p0`.
///
/// If `|p0| <= g` pointwise then `|p| <= g` holds after every update.
pub fn chambolle_u_step(
    f_minus_v: &ScalarField,
    g: &ScalarField,
    p0: &VectorField,
    theta: f64,
    dual_dt: f64,
    inner_iters: usize,
) -> Result<(ScalarField, VectorField)> {
    f_minus_v.ensure_same_dims(g)?;
    if p0.dims() != f_minus_v.dims() {
        return Err(Error::DimensionMismatch {
            expected: f_minus_v.dims(),
            found: p0.dims(),
        });
    }
    if !(theta > 0.0) || !(dual_dt > 0.0) {
        return Err(invalid("theta and dual_dt must be positive"));
    }
    ensure_positive_weight(g)?;
    let mut p = p0.clone();
    dual_iterations(
        &mut [DualChannel {
            h: f_minus_v,
            g,
            p: &mut p,
        }],
        theta,
        dual_dt,
        inner_iters,
    );
    let u = primal_from_dual(f_minus_v, &p, theta);
    Ok((u, p))
}

/// Soft threshold `f - u` at level `theta * mu`.
pub fn shrink_v(f_minus_u: &ScalarField, theta: f64, mu: &ScalarField) -> Result<ScalarField> {
    f_minus_u.zip_map(mu, |r, m| {
        let t = theta * m;
        if r >= t {
            r - t
        } else if r <= -t {
            r + t
        } else {
            0.0
        }
    })
}

/// `sum g |grad u| + sum (u + v - f)^2 / (2 theta) + sum mu |v|` with a
/// precomputed weight `g`.
pub fn energy_weighted(
    u: &ScalarField,
    v: &ScalarField,
    g: &ScalarField,
    f: &ScalarField,
    mu: &ScalarField,
    theta: f64,
) -> Result<f64> {
    u.ensure_same_dims(v)?;
    u.ensure_same_dims(g)?;
    u.ensure_same_dims(f)?;
    u.ensure_same_dims(mu)?;
    let grad = gradient_magnitude(u);
    let mut tv = 0.0;
    let mut fit = 0.0;
    let mut l1 = 0.0;
    for i in 0..u.len() {
        tv += g.values()[i] * grad.values()[i];
        let r = u.values()[i] + v.values()[i] - f.values()[i];
        fit += r * r;
        l1 += mu.values()[i] * v.values()[i].abs();
    }
    Ok(tv + fit / (2.0 * theta) + l1)
}

pub fn energy(
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
    f: &ScalarField,
    mu: &ScalarField,
    theta: f64,
    g_choice: GChoice,
) -> Result<f64> {
    energy_weighted(u, v, &g_eval(w, g_choice), f, mu, theta)
}

/// Per-run fidelity state.
pub(crate) enum MuState {
    Constant(ScalarField),
    Mu1(HistogramParams),
    Mu2(Mu2Accumulator),
    Fixed(ScalarField),
}

impl MuState {
    pub(crate) fn new(mode: &MuMode, f: &ScalarField) -> Result<Self> {
        let (w, h) = f.dims();
        Ok(match *mode {
            MuMode::Constant { value } => MuState::Constant(ScalarField::filled(w, h, value)),
            MuMode::Mu1 { histogram } => MuState::Mu1(histogram),
            MuMode::Mu2 => MuState::Mu2(Mu2Accumulator::new(w, h)),
            MuMode::Mu3 { rho, sigma } => {
                MuState::Fixed(mu3_relative_reduction(f, rho, sigma)?.map(|m| m.max(MU_FLOOR)))
            }
        })
    }

    /// Fidelity for the sweep that starts from cartoon `u`.
    pub(crate) fn current(&self, u: &ScalarField) -> Result<ScalarField> {
        match self {
            MuState::Constant(m) | MuState::Fixed(m) => Ok(m.clone()),
            MuState::Mu1(params) => mu1_local_histogram(u, params),
            MuState::Mu2(acc) => Ok(acc.field()),
        }
    }

    pub(crate) fn record(&mut self, u: &ScalarField) -> Result<()> {
        if let MuState::Mu2(acc) = self {
            acc.push(u)?;
        }
        Ok(())
    }
}

/// Full coupled decomposition `f -> (u, v, w)` starting from `(f, 0, 1)`.
///
/// `f` must be finite; values are expected on the unit intensity scale but are
/// not clamped, so residual images can be decomposed as well.
pub fn decompose(f: &ScalarField, config: &SolverConfig) -> Result<DecompositionResult> {
    config.validate()?;
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    let (width, height) = f.dims();
    let diffusion = DiffusionParams::new(
        config.diffusion_dt,
        config.dx,
        config.lambda_mode.field(width, height)?,
    )?;
    let mut mu_state = MuState::new(&config.mu_mode, f)?;

    let mut u = f.clone();
    let mut v = f.zeros_like();
    let mut w = ScalarField::filled(width, height, 1.0);
    let mut p = VectorField::zeros(width, height);
    let mut energy_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_outer {
        iterations += 1;
        let mu = mu_state.current(&u)?;

        w = evolve_w(&w, &gradient_magnitude(&u), &diffusion, config.diffusion_steps)?;
        let g = g_eval(&w, config.g_choice);

        let h = f.zip_map(&v, |a, b| a - b)?;
        dual_iterations(
            &mut [DualChannel {
                h: &h,
                g: &g,
                p: &mut p,
            }],
            config.theta,
            config.dual_dt,
            config.inner_iters,
        );
        let u_next = primal_from_dual(&h, &p, config.theta);
        let v_next = shrink_v(&f.zip_map(&u_next, |a, b| a - b)?, config.theta, &mu)?;
        mu_state.record(&u_next)?;

        energy_trace.push(energy_weighted(&u_next, &v_next, &g, f, &mu, config.theta)?);
        let delta = u_next.max_abs_diff(&u).max(v_next.max_abs_diff(&v));
        u = u_next;
        v = v_next;
        if delta <= config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(DecompositionResult {
        u,
        v,
        w,
        energy_trace,
        iterations,
        converged,
    })
}

/// Result of a splitting run with a weight that does not change between
/// sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedWeightResult {
    pub u: ScalarField,
    pub v: ScalarField,
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// The same alternating `u`/`v` loop as [`decompose`] but with a frozen TV
/// weight `g` and no edge field.
pub fn split_fixed_weight(
    f: &ScalarField,
    g: &ScalarField,
    mu: &ScalarField,
    config: &SolverConfig,
) -> Result<FixedWeightResult> {
    config.validate()?;
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    f.ensure_same_dims(g)?;
    f.ensure_same_dims(mu)?;
    ensure_positive_weight(g)?;
    if !mu.values().iter().all(|&m| m > 0.0) {
        return Err(invalid("mu must be positive"));
    }
    let (width, height) = f.dims();
    let mut u = f.clone();
    let mut v = f.zeros_like();
    let mut p = VectorField::zeros(width, height);
    let mut energy_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_outer {
        iterations += 1;
        let h = f.zip_map(&v, |a, b| a - b)?;
        dual_iterations(
            &mut [DualChannel {
                h: &h,
                g,
                p: &mut p,
            }],
            config.theta,
            config.dual_dt,
            config.inner_iters,
        );
        let u_next = primal_from_dual(&h, &p, config.theta);
        let v_next = shrink_v(&f.zip_map(&u_next, |a, b| a - b)?, config.theta, mu)?;
        energy_trace.push(energy_weighted(&u_next, &v_next, g, f, mu, config.theta)?);
        let delta = u_next.max_abs_diff(&u).max(v_next.max_abs_diff(&v));
        u = u_next;
        v = v_next;
        if delta <= config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FixedWeightResult {
        u,
        v,
        energy_trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::divergence;
    use proptest::prelude::*;

    #[test]
    fn g_values() {
        let w = ScalarField::new(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
        let r = g_eval(&w, GChoice::Rational);
        assert_eq!(r.values(), &[1.0, 0.5, 0.1]);
        assert_eq!(GChoice::Exponential.apply(0.0), 1.0);
        assert!((GChoice::TvRegularized.apply(0.0) - 1000.0).abs() < 1e-9);
        for c in [GChoice::Rational, GChoice::Exponential] {
            for x in [0.0, 0.5, 2.0, 10.0] {
                let g = c.apply(x);
                assert!(g > 0.0 && g <= 1.0);
            }
        }
    }

    #[test]
    fn shrink_three_cases() {
        let mu = ScalarField::filled(3, 1, 1.0);
        let r = ScalarField::new(3, 1, vec![0.05, -0.05, 0.005]).unwrap();
        let v = shrink_v(&r, 0.01, &mu).unwrap();
        assert!((v.values()[0] - 0.04).abs() < 1e-15);
        assert!((v.values()[1] + 0.04).abs() < 1e-15);
        assert_eq!(v.values()[2], 0.0);
    }

    #[test]
    fn u_step_constant_data_is_fixed() {
        let h = ScalarField::filled(6, 5, 0.37);
        let g = ScalarField::filled(6, 5, 1.0);
        let (u, p) = chambolle_u_step(&h, &g, &VectorField::zeros(6, 5), 0.01, 0.125, 20).unwrap();
        assert_eq!(u, h);
        assert!(p.xs().iter().chain(p.ys()).all(|&v| v == 0.0));
    }

    #[test]
    fn u_step_rejects_bad_input() {
        let h = ScalarField::filled(4, 4, 0.5);
        let g = ScalarField::filled(4, 4, 1.0);
        let p = VectorField::zeros(3, 4);
        assert!(chambolle_u_step(&h, &g, &p, 0.01, 0.125, 1).is_err());
        let g0 = ScalarField::filled(4, 4, 0.0);
        assert!(chambolle_u_step(&h, &g0, &VectorField::zeros(4, 4), 0.01, 0.125, 1).is_err());
    }

    #[test]
    fn u_step_identity_holds() {
        let h = ScalarField::from_fn(12, 9, |x, y| ((x * 31 + y * 17) % 13) as f64 / 13.0);
        let g = ScalarField::from_fn(12, 9, |x, _| 0.2 + 0.05 * x as f64);
        let (u, p) = chambolle_u_step(&h, &g, &VectorField::zeros(12, 9), 0.01, 0.125, 40).unwrap();
        let div = divergence(&p);
        for i in 0..u.len() {
            let lhs = u.values()[i] + 0.01 * div.values()[i];
            assert!((lhs - h.values()[i]).abs() <= 1e-15);
        }
    }

    #[test]
    fn energy_examples() {
        let f = ScalarField::filled(4, 3, 0.6);
        let zero = f.zeros_like();
        let mu = ScalarField::filled(4, 3, 1.0);
        let w = ScalarField::filled(4, 3, 0.7);
        assert_eq!(energy(&f, &zero, &w, &f, &mu, 0.01, GChoice::Rational).unwrap(), 0.0);
        let e = energy(&zero, &zero, &zero, &f, &mu, 0.01, GChoice::Rational).unwrap();
        let expect = (1.0 / 0.02) * 12.0 * 0.36;
        assert!((e - expect).abs() < 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig {
                theta: 0.0,
                ..Default::default()
            },
            SolverConfig {
                epsilon: 0.0,
                ..Default::default()
            },
            SolverConfig {
                inner_iters: 0,
                ..Default::default()
            },
            SolverConfig {
                dual_dt: 0.2,
                ..Default::default()
            },
            SolverConfig {
                mu_mode: MuMode::Constant { value: -1.0 },
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn decompose_rejects_non_finite() {
        let mut f = ScalarField::filled(4, 4, 0.5);
        f.set(1, 1, f64::NAN);
        assert!(matches!(
            decompose(&f, &SolverConfig::default()),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let f = ScalarField::filled(16, 16, 0.42);
        let r = decompose(&f, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.u, f);
        assert_eq!(r.v.max_abs(), 0.0);
        assert!(r.w.min() >= 0.0);
        assert!(r.w.max() < 1.0);
    }

    #[test]
    fn two_region_image() {
        let f = ScalarField::from_fn(32, 32, |x, _| if x < 16 { 0.2 } else { 0.8 });
        let config = SolverConfig {
            max_outer: 200,
            ..Default::default()
        };
        let r = decompose(&f, &config).unwrap();
        let mean = f.mean();
        let dev: f64 = f.values().iter().map(|v| (v - mean).powi(2)).sum();
        let ve: f64 = r.v.values().iter().map(|v| v * v).sum();
        assert!(ve < 0.05 * dev, "texture energy {ve} vs {dev}");
        let (imax, _) =
            r.w.values()
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let x = imax % 32;
        assert!(x == 15 || x == 16, "w peaks at column {x}");
        assert!(r.w.min() >= 0.0);
    }

    #[test]
    fn sine_texture_goes_to_v() {
        let n = 64;
        let amp = 0.05;
        let sine = ScalarField::from_fn(n, n, |x, y| {
            amp * (std::f64::consts::PI * (x + y) as f64 / 2.0 + 0.3).sin()
        });
        let f = ScalarField::from_fn(n, n, |x, y| {
            let base = if (x as f64 - 32.0).hypot(y as f64 - 32.0) < 16.0 {
                0.7
            } else {
                0.3
            };
            base + sine.get(x, y)
        });
        let r = decompose(&f, &SolverConfig::default()).unwrap();
        let corr = correlation(&r.v, &sine);
        assert!(corr > 0.9, "correlation {corr}");
    }

    fn correlation(a: &ScalarField, b: &ScalarField) -> f64 {
        let (ma, mb) = (a.mean(), b.mean());
        let mut num = 0.0;
        let mut da = 0.0;
        let mut db = 0.0;
        for (x, y) in a.values().iter().zip(b.values()) {
            num += (x - ma) * (y - mb);
            da += (x - ma).powi(2);
            db += (y - mb).powi(2);
        }
        num / (da * db).sqrt()
    }

    #[test]
    fn decompose_is_deterministic() {
        let f = ScalarField::from_fn(20, 20, |x, y| ((x * 7 + y * 3) % 10) as f64 / 10.0);
        let config = SolverConfig {
            mu_mode: MuMode::mu1(),
            max_outer: 15,
            ..Default::default()
        };
        assert_eq!(decompose(&f, &config).unwrap(), decompose(&f, &config).unwrap());
    }

    #[test]
    fn each_mu_mode_runs() {
        let f = ScalarField::from_fn(24, 24, |x, y| ((x / 4 + y / 6) % 2) as f64 * 0.5 + 0.2);
        for mode in [MuMode::mu1(), MuMode::Mu2, MuMode::mu3(), MuMode::default()] {
            let config = SolverConfig {
                mu_mode: mode,
                max_outer: 20,
                ..Default::default()
            };
            let r = decompose(&f, &config).unwrap();
            assert!(r.u.is_finite() && r.v.is_finite());
            assert!(r.w.min() >= 0.0);
            assert_eq!(r.energy_trace.len(), r.iterations);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dual_stays_feasible(
            data in prop::collection::vec(-1.0f64..2.0, 64),
            weights in prop::collection::vec(0.01f64..2.0, 64),
            theta in 1e-3f64..1.0,
            steps in 1usize..20,
        ) {
            let h = ScalarField::new(8, 8, data).unwrap();
            let g = ScalarField::new(8, 8, weights).unwrap();
            let mut p = VectorField::zeros(8, 8);
            for _ in 0..steps {
                let (u, next) = chambolle_u_step(&h, &g, &p, theta, 0.125, 1).unwrap();
                p = next;
                let mag = p.magnitude();
                for i in 0..64 {
                    prop_assert!(mag.values()[i] - g.values()[i] <= 1e-12);
                }
                prop_assert!(u.is_finite());
            }
        }

        #[test]
        fn shrink_residual_identity(
            r in prop::collection::vec(-0.2f64..0.2, 16),
            m in prop::collection::vec(0.01f64..3.0, 16),
        ) {
            let theta = 0.01;
            let resid = ScalarField::new(4, 4, r).unwrap();
            let mu = ScalarField::new(4, 4, m).unwrap();
            let v = shrink_v(&resid, theta, &mu).unwrap();
            for i in 0..16 {
                let t = theta * mu.values()[i];
                let ri = resid.values()[i];
                let left = ri - v.values()[i];
                if ri.abs() > t {
                    prop_assert!((left.abs() - t).abs() < 1e-15);
                } else {
                    prop_assert_eq!(v.values()[i], 0.0);
                }
            }
        }
    }
}
