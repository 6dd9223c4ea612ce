//! First-order optimizers, selectable by name.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use super::{Scalar, TensorError};

/// One named parameter buffer and its gradient.
pub struct ParamGroup<'a, T> {
    pub name: &'a str,
    pub values: &'a mut [T],
    pub grads: &'a [T],
}

pub trait Optimizer<T: Scalar>: Send + Debug {
    fn name(&self) -> &'static str;

    /// Applies one update to every group. Gradients are validated before any
    /// parameter is touched, so a failed step leaves the model unchanged.
    /// Groups must be passed in the same order on every call.
    fn step(&mut self, groups: &mut [ParamGroup<'_, T>]) -> Result<(), TensorError>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub name: String,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub momentum: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            name: "adam".into(),
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum: 0.9,
        }
    }
}

type Factory<T> = fn(&OptimizerSettings) -> Box<dyn Optimizer<T>>;

fn registry<T: Scalar>() -> [(&'static str, Factory<T>); 2] {
    [
        ("adam", |s| Box::new(Adam::from_settings(s))),
        ("sgd_momentum", |s| Box::new(SgdMomentum::from_settings(s))),
    ]
}

pub fn optimizer_names() -> Vec<&'static str> {
    registry::<f32>().iter().map(|(n, _)| *n).collect()
}

pub fn build_optimizer<T: Scalar>(
    settings: &OptimizerSettings,
) -> Result<Box<dyn Optimizer<T>>, TensorError> {
    if !(settings.learning_rate > 0.0) {
        return Err(TensorError::invalid("optimizer", "learning_rate must be > 0"));
    }
    registry::<T>()
        .iter()
        .find(|(n, _)| *n == settings.name)
        .map(|(_, f)| f(settings))
        .ok_or_else(|| {
            TensorError::invalid(
                "optimizer",
                format!(
                    "unknown optimizer `{}` (known: {})",
                    settings.name,
                    optimizer_names().join(", ")
                ),
            )
        })
}

fn check_group<T: Scalar>(name: &str, values: &[T], grads: &[T]) -> Result<(), TensorError> {
    if values.len() != grads.len() {
        return Err(TensorError::Shape {
            op: "optimizer step",
            expected: format!("{} gradients for `{name}`", values.len()),
            found: grads.len().to_string(),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(TensorError::NonFiniteGradient(name.to_string()));
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState<T> {
    pub first: Vec<T>,
    pub second: Vec<T>,
    pub step: u64,
}

/// One bias-corrected Adam update of `params` in place.
#[allow(clippy::too_many_arguments)]
pub fn adam_step<T: Scalar>(
    name: &str,
    params: &mut [T],
    grads: &[T],
    state: &mut AdamState<T>,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) -> Result<(), TensorError> {
    check_group(name, params, grads)?;
    if state.first.is_empty() {
        state.first = vec![T::zero(); params.len()];
        state.second = vec![T::zero(); params.len()];
    } else if state.first.len() != params.len() {
        return Err(TensorError::shape("adam_step", state.first.len(), params.len()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::of(beta1), T::of(beta2));
    let (c1, c2) = (T::one() - b1, T::one() - b2);
    let correction1 = T::of(1.0 - beta1.powi(t));
    let correction2 = T::of(1.0 - beta2.powi(t));
    let (lr, eps) = (T::of(lr), T::of(epsilon));
    for ((p, &g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first.iter_mut().zip(state.second.iter_mut()))
    {
        *m = b1 * *m + c1 * g;
        *v = b2 * *v + c2 * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[derive(Debug)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64) -> Self {
        Self::from_settings(&OptimizerSettings {
            learning_rate,
            ..Default::default()
        })
    }

    pub fn from_settings(s: &OptimizerSettings) -> Self {
        Self {
            learning_rate: s.learning_rate,
            beta1: s.beta1,
            beta2: s.beta2,
            epsilon: s.epsilon,
            states: Vec::new(),
        }
    }

    pub fn states(&self) -> &[AdamState<T>] {
        &self.states
    }
}

impl<T: Scalar> Optimizer<T> for Adam<T> {
    fn name(&self) -> &'static str {
        "adam"
    }

    fn step(&mut self, groups: &mut [ParamGroup<'_, T>]) -> Result<(), TensorError> {
        for g in groups.iter() {
            check_group(g.name, g.values, g.grads)?;
        }
        self.states.resize_with(groups.len(), AdamState::default);
        for (g, state) in groups.iter_mut().zip(&mut self.states) {
            adam_step(
                g.name,
                g.values,
                g.grads,
                state,
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SgdMomentumState<T> {
    pub velocity: Vec<T>,
    pub step: u64,
}

/// `v ← μ·v + g; p ← p − lr·v`.
pub fn sgd_momentum_step<T: Scalar>(
    name: &str,
    params: &mut [T],
    grads: &[T],
    state: &mut SgdMomentumState<T>,
    lr: f64,
    momentum: f64,
) -> Result<(), TensorError> {
    check_group(name, params, grads)?;
    if state.velocity.is_empty() {
        state.velocity = vec![T::zero(); params.len()];
    } else if state.velocity.len() != params.len() {
        return Err(TensorError::shape(
            "sgd_momentum_step",
            state.velocity.len(),
            params.len(),
        ));
    }
    state.step += 1;
    let (lr, mu) = (T::of(lr), T::of(momentum));
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(state.velocity.iter_mut()) {
        *v = mu * *v + g;
        *p -= lr * *v;
    }
    Ok(())
}

#[derive(Debug)]
pub struct SgdMomentum<T> {
    pub learning_rate: f64,
    pub momentum: f64,
    states: Vec<SgdMomentumState<T>>,
}

impl<T: Scalar> SgdMomentum<T> {
    pub fn new(learning_rate: f64, momentum: f64) -> Self {
        Self {
            learning_rate,
            momentum,
            states: Vec::new(),
        }
    }

    pub fn from_settings(s: &OptimizerSettings) -> Self {
        Self::new(s.learning_rate, s.momentum)
    }
}

impl<T: Scalar> Optimizer<T> for SgdMomentum<T> {
    fn name(&self) -> &'static str {
        "sgd_momentum"
    }

    fn step(&mut self, groups: &mut [ParamGroup<'_, T>]) -> Result<(), TensorError> {
        for g in groups.iter() {
            check_group(g.name, g.values, g.grads)?;
        }
        self.states.resize_with(groups.len(), SgdMomentumState::default);
        for (g, state) in groups.iter_mut().zip(&mut self.states) {
            sgd_momentum_step(
                g.name,
                g.values,
                g.grads,
                state,
                self.learning_rate,
                self.momentum,
            )?;
        }
        Ok(())
    }
}
