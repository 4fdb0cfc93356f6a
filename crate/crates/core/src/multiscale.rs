//! Hierarchical decomposition: the residual left by one scale is decomposed
//! again with a geometrically increasing fidelity, so later layers pick up
//! progressively finer structure.

use crate::error::{invalid, Result};
use crate::grid::ScalarField;
use crate::tv_dual::{decompose, MuMode, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleLayer {
    pub u: ScalarField,
    pub v: ScalarField,
    pub w: ScalarField,
    pub mu: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleResult {
    pub layers: Vec<ScaleLayer>,
    /// `r_0 = f`, `r_{i+1} = r_i - u_i - v_i`; one more entry than `layers`.
    pub residuals: Vec<ScalarField>,
}

impl MultiscaleResult {
    /// `sum_{i <= k} (u_i + v_i)`.
    pub fn cumulative(&self, k: usize) -> ScalarField {
        let mut acc = self.layers[0].u.zeros_like();
        for layer in &self.layers[..=k] {
            for ((a, u), v) in acc
                .values_mut()
                .iter_mut()
                .zip(layer.u.values())
                .zip(layer.v.values())
            {
                *a += u + v;
            }
        }
        acc
    }

    pub fn cumulative_cartoon(&self, k: usize) -> ScalarField {
        let mut acc = self.layers[0].u.zeros_like();
        for layer in &self.layers[..=k] {
            for (a, u) in acc.values_mut().iter_mut().zip(layer.u.values()) {
                *a += u;
            }
        }
        acc
    }
}

/// Runs `levels` scales with constant fidelity `mu0 * ratio^i` at scale `i`.
/// The `mu_mode` of `config` is ignored; every other setting is shared.
/// Residuals are not clamped.
pub fn multiscale_decompose(
    f: &ScalarField,
    levels: usize,
    mu0: f64,
    ratio: f64,
    config: &SolverConfig,
) -> Result<MultiscaleResult> {
    if levels == 0 {
        return Err(invalid("levels must be >= 1"));
    }
    if !(mu0 > 0.0 && mu0.is_finite()) {
        return Err(invalid(format!("mu0 must be > 0, got {mu0}")));
    }
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(invalid(format!("ratio must be > 1, got {ratio}")));
    }

    let mut layers = Vec::with_capacity(levels);
    let mut residuals = vec![f.clone()];
    for i in 0..levels {
        let mu = mu0 * ratio.powi(i as i32);
        let scale_config = SolverConfig {
            mu_mode: MuMode::Constant { value: mu },
            ..config.clone()
        };
        let r = residuals.last().expect("residual chain starts with f");
        let res = decompose(r, &scale_config)?;
        let mut next = r.clone();
        for ((n, u), v) in next
            .values_mut()
            .iter_mut()
            .zip(res.u.values())
            .zip(res.v.values())
        {
            *n = *n - u - v;
        }
        residuals.push(next);
        layers.push(ScaleLayer {
            u: res.u,
            v: res.v,
            w: res.w,
            mu,
            iterations: res.iterations,
            converged: res.converged,
        });
    }
    Ok(MultiscaleResult { layers, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn config() -> SolverConfig {
        SolverConfig {
            max_outer: 60,
            ..Default::default()
        }
    }

    #[test]
    fn argument_checks() {
        let f = ScalarField::filled(4, 4, 0.5);
        assert!(multiscale_decompose(&f, 0, 1.0, 2.0, &config()).is_err());
        assert!(multiscale_decompose(&f, 2, 0.0, 2.0, &config()).is_err());
        assert!(multiscale_decompose(&f, 2, 1.0, 1.0, &config()).is_err());
    }

    #[test]
    fn single_level_is_base_decomposition() {
        let f = synthetic::two_texture(32);
        let cfg = SolverConfig {
            mu_mode: MuMode::Constant { value: 0.7 },
            ..config()
        };
        let ms = multiscale_decompose(&f, 1, 0.7, 2.0, &cfg).unwrap();
        let base = decompose(&f, &cfg).unwrap();
        assert_eq!(ms.layers.len(), 1);
        assert_eq!(ms.layers[0].u, base.u);
        assert_eq!(ms.layers[0].v, base.v);
    }

    #[test]
    fn constant_input_collapses_after_first_scale() {
        let f = ScalarField::filled(12, 12, 0.3);
        let ms = multiscale_decompose(&f, 3, 1.0, 2.0, &config()).unwrap();
        assert_eq!(ms.layers[0].u, f);
        for layer in &ms.layers[1..] {
            assert!(layer.u.max_abs() < 1e-12);
            assert!(layer.v.max_abs() < 1e-12);
        }
    }

    #[test]
    fn telescoping_and_monotone_residuals() {
        let f = synthetic::two_texture(48);
        let ms = multiscale_decompose(&f, 4, 0.5, 2.0, &config()).unwrap();
        for k in 0..4 {
            let sum = ms.cumulative(k);
            let mut worst: f64 = 0.0;
            for i in 0..f.len() {
                let gap = f.values()[i] - sum.values()[i] - ms.residuals[k + 1].values()[i];
                worst = worst.max(gap.abs());
            }
            assert!(worst < 1e-12, "telescoping gap {worst} at k={k}");
        }
        for pair in ms.residuals.windows(2) {
            assert!(pair[1].norm_l2() <= pair[0].norm_l2() + 1e-6);
        }
    }
}
