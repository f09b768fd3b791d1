//! First-order update rules: SGD, SGD with momentum, RMSProp and Adam.
//!
//! Every rule returns the update `Δw` for the caller to apply as
//! `w ← w + Δw`. None of them inspects where the gradient came from, which
//! is what lets a client feed a stale gradient back in as a guess.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::numeric::Vector;

/// Adam hyperparameters. `alpha`/`beta` decay the first/second moments,
/// `epsilon` is the learning rate and `delta` the stabilizer added after the
/// square root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { alpha: 0.9, beta: 0.999, epsilon: 0.001, delta: 1e-8 }
    }
}

/// Adam moments and step counter. Moments start at zero; `t` counts every
/// call to [`AdamState::gradient_step`], guessed or not.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub v1: Vector,
    pub v2: Vector,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState { v1: Vector::zeros(len), v2: Vector::zeros(len), t: 0, config }
    }

    /// One Adam step. Increments `t` before bias correction.
    pub fn gradient_step(&mut self, grad: &Vector) -> Result<Vector> {
        check_len(self.v1.len(), grad.len())?;
        let AdamConfig { alpha, beta, epsilon, delta } = self.config;
        self.t = self.t.checked_add(1).expect("Adam step counter overflow");
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let c1 = 1.0 - alpha.powi(t);
        let c2 = 1.0 - beta.powi(t);
        let mut dw = Vector::zeros(grad.len());
        let v1 = self.v1.as_mut_slice();
        let v2 = self.v2.as_mut_slice();
        for (i, &g) in grad.iter().enumerate() {
            v1[i] = alpha * v1[i] + (1.0 - alpha) * g;
            v2[i] = beta * v2[i] + (1.0 - beta) * g * g;
            let m = v1[i] / c1;
            let s = v2[i] / c2;
            dw[i] = -epsilon * m / (s.sqrt() + delta);
        }
        dw.debug_check_finite();
        Ok(dw)
    }
}

/// Pure form of [`AdamState::gradient_step`]: returns `(Δw, state')`.
pub fn adam_gradient_step(state: &AdamState, grad: &Vector) -> Result<(Vector, AdamState)> {
    let mut next = state.clone();
    let dw = next.gradient_step(grad)?;
    Ok((dw, next))
}

/// Plain SGD: `Δw = -ε grad`.
pub fn sgd_step(grad: &Vector, epsilon: f64) -> Vector {
    grad.iter().map(|g| -epsilon * g).collect()
}

/// SGD with momentum: `v ← αv - ε grad`, `Δw = v`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub v: Vector,
    pub alpha: f64,
    pub epsilon: f64,
}

impl MomentumState {
    pub fn new(len: usize, alpha: f64, epsilon: f64) -> Self {
        MomentumState { v: Vector::zeros(len), alpha, epsilon }
    }

    pub fn step(&mut self, grad: &Vector) -> Result<Vector> {
        check_len(self.v.len(), grad.len())?;
        for (v, g) in self.v.as_mut_slice().iter_mut().zip(grad) {
            *v = self.alpha * *v - self.epsilon * g;
        }
        Ok(self.v.clone())
    }
}

pub fn momentum_step(state: &MomentumState, grad: &Vector) -> Result<(Vector, MomentumState)> {
    let mut next = state.clone();
    let dw = next.step(grad)?;
    Ok((dw, next))
}

/// RMSProp: `v2 ← βv2 + (1-β) grad⊙grad`, then `Δw = -ε grad / (√v2 + δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub v2: Vector,
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl RmsPropState {
    pub fn new(len: usize, beta: f64, epsilon: f64, delta: f64) -> Self {
        RmsPropState { v2: Vector::zeros(len), beta, epsilon, delta }
    }

    pub fn step(&mut self, grad: &Vector) -> Result<Vector> {
        check_len(self.v2.len(), grad.len())?;
        let mut dw = Vector::zeros(grad.len());
        for (i, (v2, &g)) in self.v2.as_mut_slice().iter_mut().zip(grad).enumerate() {
            *v2 = self.beta * *v2 + (1.0 - self.beta) * g * g;
            dw[i] = -self.epsilon * g / (v2.sqrt() + self.delta);
        }
        Ok(dw)
    }
}

pub fn rmsprop_step(state: &RmsPropState, grad: &Vector) -> Result<(Vector, RmsPropState)> {
    let mut next = state.clone();
    let dw = next.step(grad)?;
    Ok((dw, next))
}

/// Client-side optimizer selection. Adam is the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Adam(AdamConfig),
    Sgd { epsilon: f64 },
    Momentum { alpha: f64, epsilon: f64 },
    RmsProp { beta: f64, epsilon: f64, delta: f64 },
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam(AdamConfig::default())
    }
}

impl OptimizerConfig {
    /// Fresh, zero-initialized optimizer for `len` parameters.
    pub fn build(&self, len: usize) -> Optimizer {
        match *self {
            OptimizerConfig::Adam(c) => Optimizer::Adam(AdamState::new(len, c)),
            OptimizerConfig::Sgd { epsilon } => Optimizer::Sgd { len, epsilon },
            OptimizerConfig::Momentum { alpha, epsilon } => {
                Optimizer::Momentum(MomentumState::new(len, alpha, epsilon))
            }
            OptimizerConfig::RmsProp { beta, epsilon, delta } => {
                Optimizer::RmsProp(RmsPropState::new(len, beta, epsilon, delta))
            }
        }
    }
}

/// A live optimizer instance owned by one client for one round.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Adam(AdamState),
    Sgd { len: usize, epsilon: f64 },
    Momentum(MomentumState),
    RmsProp(RmsPropState),
}

impl Optimizer {
    pub fn gradient_step(&mut self, grad: &Vector) -> Result<Vector> {
        match self {
            Optimizer::Adam(s) => s.gradient_step(grad),
            Optimizer::Sgd { len, epsilon } => {
                check_len(*len, grad.len())?;
                Ok(sgd_step(grad, *epsilon))
            }
            Optimizer::Momentum(s) => s.step(grad),
            Optimizer::RmsProp(s) => s.step(grad),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::seeded_stream;
    use proptest::prelude::*;

    fn scalar(x: f64) -> Vector {
        Vector::from(vec![x])
    }

    #[test]
    fn adam_first_step_by_hand() {
        let state = AdamState::new(1, AdamConfig::default());
        let (dw, next) = adam_gradient_step(&state, &scalar(0.5)).unwrap();
        assert_eq!(next.t, 1);
        assert!((next.v1[0] - 0.05).abs() < 1e-15);
        assert!((next.v2[0] - 0.00025).abs() < 1e-15);
        let v1_hat = next.v1[0] / (1.0 - 0.9);
        let v2_hat = next.v2[0] / (1.0 - 0.999);
        assert!((v1_hat - 0.5).abs() < 1e-12);
        assert!((v2_hat - 0.25).abs() < 1e-12);
        assert!((dw[0] - (-0.001 * 0.5 / (0.5 + 1e-8))).abs() < 1e-12);
        assert!((dw[0] + 0.000_999_999_98).abs() < 1e-12);
        // Original state untouched.
        assert_eq!(state.t, 0);
    }

    #[test]
    fn adam_zero_gradient_is_zero_update_and_decays_moments() {
        let mut s = AdamState::new(2, AdamConfig::default());
        s.gradient_step(&Vector::from(vec![1.0, -3.0])).unwrap();
        let (v1, v2) = (s.v1.clone(), s.v2.clone());
        let dw = s.gradient_step(&Vector::zeros(2)).unwrap();
        // Bias-corrected first moment is nonzero, so Δw need not vanish after history;
        // on a fresh state it must.
        assert!(s.v1.iter().zip(&v1).all(|(a, b)| a.abs() < b.abs()));
        assert!(s.v2.iter().zip(&v2).all(|(a, b)| a < b));
        assert!(dw.is_finite());
        let mut fresh = AdamState::new(2, AdamConfig::default());
        for _ in 0..5 {
            assert_eq!(fresh.gradient_step(&Vector::zeros(2)).unwrap(), Vector::zeros(2));
        }
    }

    #[test]
    fn adam_constant_gradient_fixed_point() {
        let g = Vector::from(vec![0.5, -2.0, 1e-3, 7.25]);
        let c = AdamConfig::default();
        let expected: Vec<f64> = g.iter().map(|x| -c.epsilon * x / (x.abs() + c.delta)).collect();
        let mut s = AdamState::new(4, c);
        let mut first = None;
        for t in 1..=50u64 {
            let dw = s.gradient_step(&g).unwrap();
            assert_eq!(s.t, t);
            for (d, e) in dw.iter().zip(&expected) {
                assert!((d - e).abs() < 1e-12, "t={t}: {d} vs {e}");
            }
            let first = first.get_or_insert_with(|| dw.clone());
            for (d, f) in dw.iter().zip(first.iter()) {
                assert!((d - f).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adam_dimension_mismatch() {
        let mut s = AdamState::new(3, AdamConfig::default());
        assert!(s.gradient_step(&Vector::zeros(2)).is_err());
        assert_eq!(s.t, 0);
    }

    #[test]
    fn same_gradient_twice_is_real_then_guess() {
        let mut s = seeded_stream(8, "g");
        let g1: Vector = (0..5).map(|_| s.normal(0.0, 1.0).unwrap()).collect();
        let g2: Vector = (0..5).map(|_| s.normal(0.0, 1.0).unwrap()).collect();
        let mut real = AdamState::new(5, AdamConfig::default());
        real.gradient_step(&g1).unwrap();
        real.gradient_step(&g2).unwrap();
        let mut guessed = real.clone();
        let a = real.gradient_step(&g2).unwrap();
        let proxy = g2.clone();
        let b = guessed.gradient_step(&proxy).unwrap();
        assert_eq!(a, b);
        assert_eq!(real, guessed);
    }

    #[test]
    fn consecutive_guesses_are_not_collinear() {
        let mut s = AdamState::new(2, AdamConfig::default());
        s.gradient_step(&Vector::from(vec![1.0, 0.0])).unwrap();
        let last = Vector::from(vec![0.0, 1.0]);
        let du = s.gradient_step(&last).unwrap();
        let dg = s.gradient_step(&last).unwrap();
        let sum = crate::numeric::axpy(1.0, &du, &dg).unwrap();
        let cross = sum[0] * du[1] - sum[1] * du[0];
        assert!(cross.abs() > 1e-9, "cross {cross}");
    }

    #[test]
    fn sgd_examples() {
        assert_eq!(sgd_step(&Vector::from(vec![1.0, -2.0]), 0.1), Vector::from(vec![-0.1, 0.2]));
        assert_eq!(sgd_step(&Vector::zeros(3), 0.5), Vector::filled(3, -0.0));
        let g = Vector::from(vec![0.5, 4.0]);
        let a = sgd_step(&g, 0.2);
        let b = sgd_step(&g, 0.6);
        for (x, y) in a.iter().zip(&b) {
            assert!((3.0 * x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn momentum_examples() {
        let g = Vector::from(vec![2.0, -1.0]);
        let s0 = MomentumState::new(2, 0.9, 0.1);
        let (d1, s1) = momentum_step(&s0, &g).unwrap();
        assert_eq!(d1, Vector::from(vec![-0.2, 0.1]));
        let (d2, mut s2) = momentum_step(&s1, &g).unwrap();
        for (d, gi) in d2.iter().zip(&g) {
            assert!((d - (-0.1 * 1.9 * gi)).abs() < 1e-15);
        }
        let mut prev = d2;
        for _ in 0..5 {
            let d = s2.step(&Vector::zeros(2)).unwrap();
            for (a, b) in d.iter().zip(&prev) {
                assert!((a - 0.9 * b).abs() < 1e-15);
            }
            prev = d;
        }
        assert!(s2.step(&Vector::zeros(3)).is_err());
    }

    #[test]
    fn rmsprop_examples() {
        let s0 = RmsPropState::new(1, 0.999, 0.001, 1e-8);
        let (d0, _) = rmsprop_step(&s0, &Vector::zeros(1)).unwrap();
        assert_eq!(d0[0], 0.0);
        let g = -1.5;
        let (d, s1) = rmsprop_step(&s0, &scalar(g)).unwrap();
        assert!((s1.v2[0] - 0.001 * g * g).abs() < 1e-15);
        let expected = -0.001 * g / (0.001f64.sqrt() * g.abs() + 1e-8);
        assert!((d[0] - expected).abs() < 1e-15);
        assert!(s0.clone().step(&Vector::zeros(2)).is_err());
    }

    #[test]
    fn optimizer_dispatch_matches_direct_calls() {
        let g = Vector::from(vec![0.3, -0.7]);
        let mut opt = OptimizerConfig::default().build(2);
        let mut direct = AdamState::new(2, AdamConfig::default());
        assert_eq!(opt.gradient_step(&g).unwrap(), direct.gradient_step(&g).unwrap());
        let mut sgd = OptimizerConfig::Sgd { epsilon: 0.1 }.build(2);
        assert_eq!(sgd.gradient_step(&g).unwrap(), sgd_step(&g, 0.1));
        assert!(sgd.gradient_step(&Vector::zeros(1)).is_err());
    }

    proptest! {
        #[test]
        fn adam_steps_stay_bounded(
            grads in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 1..40)
        ) {
            let c = AdamConfig::default();
            let mut s = AdamState::new(3, c);
            for g in grads {
                let dw = s.gradient_step(&Vector::from(g)).unwrap();
                prop_assert!(dw.iter().all(|d| d.abs() <= 10.0 * c.epsilon));
                prop_assert!(s.v2.iter().all(|&v| v >= 0.0));
            }
        }

        #[test]
        fn rmsprop_opposes_gradient(g in prop::collection::vec(-10.0f64..10.0, 1..8)) {
            let mut s = RmsPropState::new(g.len(), 0.999, 0.001, 1e-8);
            let dw = s.step(&Vector::from(g.clone())).unwrap();
            for (d, gi) in dw.iter().zip(&g) {
                if *gi != 0.0 {
                    prop_assert_eq!(d.signum(), -gi.signum());
                }
            }
            prop_assert!(s.v2.iter().all(|&v| v >= 0.0));
        }
    }
}
