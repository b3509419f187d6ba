use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::ParameterStore;
use crate::error::Result;
use crate::seed::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckConfig {
    /// Coordinates compared; all of them when the store is smaller.
    pub samples: usize,
    pub h: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig { samples: 200, h: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the analytic gradients that `loss` accumulates into the store
/// against central differences on a seeded sample of coordinates.
pub fn grad_check<F>(params: &mut ParameterStore<f64>, mut loss: F, cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: FnMut(&mut ParameterStore<f64>) -> Result<f64>,
{
    params.zero_grads();
    loss(params)?;
    let analytic = params.clone();

    let coords: Vec<(usize, usize)> = params
        .ids()
        .flat_map(|id| (0..params.value(id).len()).map(move |j| (id.index(), j)))
        .collect();
    let picks: Vec<usize> = if coords.len() <= cfg.samples {
        (0..coords.len()).collect()
    } else {
        let mut v = sample(&mut rng(cfg.seed), coords.len(), cfg.samples).into_vec();
        v.sort_unstable();
        v
    };

    let ids: Vec<_> = params.ids().collect();
    let mut report = GradCheckReport { checked: 0, max_rel_error: 0.0, worst: None };
    for k in picks {
        let (p, j) = coords[k];
        let id = ids[p];
        let original = params.value(id).as_slice()[j];
        params.value_mut(id).as_mut_slice()[j] = original + cfg.h;
        let up = loss(params)?;
        params.value_mut(id).as_mut_slice()[j] = original - cfg.h;
        let down = loss(params)?;
        params.value_mut(id).as_mut_slice()[j] = original;
        let numeric = (up - down) / (2.0 * cfg.h);
        let err = relative_error(analytic.grad(id).as_slice()[j], numeric);
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = Some((params.name(id).to_string(), j));
        }
    }
    params.zero_grads();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn quadratic_is_exact() {
        let mut s = ParameterStore::<f64>::new();
        let a = s.add("a", Matrix::from_vec(2, 2, vec![0.5, -1.5, 2.0, 0.25]).unwrap()).unwrap();
        let report = grad_check(
            &mut s,
            |p| {
                let v = p.value(a).as_slice().to_vec();
                let loss: f64 = v.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x * x).sum();
                let g = p.grad_mut(a).as_mut_slice();
                for (i, x) in v.iter().enumerate() {
                    g[i] += 2.0 * (i + 1) as f64 * x;
                }
                Ok(loss)
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert_eq!(report.checked, 4);
        assert!(report.max_rel_error < 1e-7, "{report:?}");
    }

    #[test]
    fn wrong_gradient_detected() {
        let mut s = ParameterStore::<f64>::new();
        let a = s.add("a", Matrix::column(vec![1.0])).unwrap();
        let report = grad_check(
            &mut s,
            |p| {
                let x = p.value(a).get(0, 0);
                p.grad_mut(a).set(0, 0, 3.0 * x);
                Ok(x * x)
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(report.max_rel_error > 0.3);
    }
}
