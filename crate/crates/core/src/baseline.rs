//! Edge-weighted TV-L1 splitting with a weight fixed from the input image,
//! the comparison model for the coupled scheme.

use crate::error::{invalid, Result};
use crate::grid::{gradient_magnitude, ScalarField};
use crate::tv_dual::{split_fixed_weight, FixedWeightResult, SolverConfig};

/// Default `beta` on the unit intensity scale.
pub const DEFAULT_BETA: f64 = 100.0;

/// `g = 1 / (1 + beta |grad f|^2)`.
pub fn edge_indicator(f: &ScalarField, beta: f64) -> Result<ScalarField> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be >= 0, got {beta}")));
    }
    Ok(gradient_magnitude(f).map(|m| 1.0 / (1.0 + beta * m * m)))
}

/// Alternates the dual `u` step with weight `edge_indicator(f, beta)` and the
/// shrinkage `v` step with constant `mu`, using the stopping rule of
/// [`crate::decompose`].
pub fn bresson_decompose(
    f: &ScalarField,
    beta: f64,
    mu: f64,
    config: &SolverConfig,
) -> Result<FixedWeightResult> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(format!("mu must be > 0, got {mu}")));
    }
    let g = edge_indicator(f, beta)?;
    let (w, h) = f.dims();
    split_fixed_weight(f, &g, &ScalarField::filled(w, h, mu), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_examples() {
        let f = ScalarField::from_fn(5, 4, |x, y| (x * x + y) as f64 * 0.1);
        assert!(edge_indicator(&f, 0.0).unwrap().values().iter().all(|&g| g == 1.0));
        let c = ScalarField::filled(5, 4, 0.3);
        assert!(edge_indicator(&c, 55.0).unwrap().values().iter().all(|&g| g == 1.0));
        // |grad f| = 1 at (0, 0)
        let step = ScalarField::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(edge_indicator(&step, 1.0).unwrap().get(0, 0), 0.5);
        assert!(edge_indicator(&step, -1.0).is_err());
        let g = edge_indicator(&f, 100.0).unwrap();
        assert!(g.values().iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn beta_zero_is_unweighted_split() {
        let f = ScalarField::from_fn(16, 16, |x, y| ((x / 3 + y / 5) % 3) as f64 / 3.0);
        let config = SolverConfig {
            max_outer: 30,
            ..Default::default()
        };
        let a = bresson_decompose(&f, 0.0, 0.8, &config).unwrap();
        let b = split_fixed_weight(
            &f,
            &ScalarField::filled(16, 16, 1.0),
            &ScalarField::filled(16, 16, 0.8),
            &config,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_input() {
        let f = ScalarField::filled(10, 10, 0.6);
        let r = bresson_decompose(&f, DEFAULT_BETA, 1.0, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.u, f);
        assert_eq!(r.v.max_abs(), 0.0);
        assert!(bresson_decompose(&f, 1.0, 0.0, &SolverConfig::default()).is_err());
    }
}
