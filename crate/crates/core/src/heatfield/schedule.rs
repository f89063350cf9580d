use serde::{Deserialize, Serialize};

use super::HeatError;

/// Per-level noise scales, step sizes and heat times for levels `t = 1..=T`.
///
/// `sigma` is geometric between the bounds, `heat_time = sigma^2 / 2` (the
/// free-space Gaussian of variance `2 t` has standard deviation `sigma`), and
/// `alpha = step_ratio * sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    sigma: Vec<f64>,
    alpha: Vec<f64>,
    heat_time: Vec<f64>,
    step_ratio: f64,
}

impl NoiseSchedule {
    /// Number of levels `T`.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    fn idx(&self, t: usize) -> usize {
        assert!(
            (1..=self.len()).contains(&t),
            "level {t} outside 1..={}",
            self.len()
        );
        t - 1
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma[self.idx(t)]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[self.idx(t)]
    }

    pub fn heat_time(&self, t: usize) -> f64 {
        self.heat_time[self.idx(t)]
    }

    pub fn heat_times(&self) -> &[f64] {
        &self.heat_time
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigma
    }

    pub fn step_ratio(&self) -> f64 {
        self.step_ratio
    }
}

pub fn build_schedule(
    steps: usize,
    sigma_min: f64,
    sigma_max: f64,
    step_ratio: f64,
) -> Result<NoiseSchedule, HeatError> {
    if steps < 2 {
        return Err(HeatError::Parameter(format!("need at least 2 levels, got {steps}")));
    }
    if !(sigma_min > 0.0 && sigma_max > sigma_min && sigma_max.is_finite()) {
        return Err(HeatError::Parameter(format!(
            "need 0 < sigma_min < sigma_max, got {sigma_min} and {sigma_max}"
        )));
    }
    if !(step_ratio > 0.0 && step_ratio.is_finite()) {
        return Err(HeatError::Parameter(format!(
            "step_ratio must be positive, got {step_ratio}"
        )));
    }
    let ratio = sigma_max / sigma_min;
    let sigma: Vec<f64> = (0..steps)
        .map(|i| {
            if i + 1 == steps {
                sigma_max
            } else {
                sigma_min * ratio.powf(i as f64 / (steps - 1) as f64)
            }
        })
        .collect();
    Ok(NoiseSchedule {
        alpha: sigma.iter().map(|s| step_ratio * s).collect(),
        heat_time: sigma.iter().map(|s| s * s / 2.0).collect(),
        sigma,
        step_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn endpoints_and_heat_time() {
        let s = build_schedule(20, 0.01, 1.0, 0.15).unwrap();
        assert_eq!(s.len(), 20);
        assert!((s.sigma(1) - 0.01).abs() < 1e-15);
        assert_eq!(s.sigma(20), 1.0);
        assert_eq!(s.heat_time(20), 0.5);
        assert!((s.alpha(20) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn strictly_increasing_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let steps = rng.random_range(2..60);
            let lo = rng.random_range(1e-4..0.1);
            let hi = lo * rng.random_range(1.01..500.0);
            let s = build_schedule(steps, lo, hi, rng.random_range(0.01..1.0)).unwrap();
            for t in 1..steps {
                assert!(s.sigma(t) < s.sigma(t + 1));
                assert!(s.heat_time(t) < s.heat_time(t + 1));
            }
        }
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(build_schedule(1, 0.01, 1.0, 0.1).is_err());
        assert!(build_schedule(20, 0.0, 1.0, 0.1).is_err());
        assert!(build_schedule(20, 1.0, 0.5, 0.1).is_err());
        assert!(build_schedule(20, 0.01, 1.0, 0.0).is_err());
    }
}
