use serde::{Deserialize, Serialize};

use super::NumericsError;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const RMSPROP_RHO: f64 = 0.9;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    #[serde(rename = "rmsprop")]
    RmsProp,
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OptimizerKind::Adam => f.write_str("Adam"),
            OptimizerKind::RmsProp => f.write_str("RMSprop"),
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            other => Err(format!(
                "unknown optimizer '{other}' (expected adam or rmsprop)"
            )),
        }
    }
}

/// Moment buffers for Adam or RMSprop. Moments are allocated lazily on the
/// first step so one state can be created before the parameter count is
/// known.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    kind: OptimizerKind,
    learning_rate: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self, NumericsError> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(NumericsError::InvalidHyperparameter(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            kind,
            learning_rate,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step_count: 0,
        })
    }

    pub fn adam(learning_rate: f64) -> Result<Self, NumericsError> {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn rmsprop(learning_rate: f64) -> Result<Self, NumericsError> {
        Self::new(OptimizerKind::RmsProp, learning_rate)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// Moves `params` against `grads` (descent). Callers that ascend pass
    /// negated gradients.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NumericsError> {
        if params.len() != grads.len() {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![params.len()],
                found: vec![grads.len()],
            });
        }
        if self.step_count == 0 && self.second_moment.is_empty() {
            self.first_moment = vec![0.0; params.len()];
            self.second_moment = vec![0.0; params.len()];
        } else if self.second_moment.len() != params.len() {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![self.second_moment.len()],
                found: vec![params.len()],
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(NumericsError::NonFinite("gradient"));
        }
        self.step_count += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Adam => {
                let t = self.step_count as i32;
                let bias1 = 1.0 - ADAM_BETA1.powi(t);
                let bias2 = 1.0 - ADAM_BETA2.powi(t);
                for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(
                    self.first_moment
                        .iter_mut()
                        .zip(self.second_moment.iter_mut()),
                ) {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = *m / bias1;
                    let v_hat = *v / bias2;
                    *p -= lr * m_hat / (v_hat.sqrt() + EPSILON);
                }
            }
            OptimizerKind::RmsProp => {
                for ((p, &g), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.second_moment.iter_mut())
                {
                    *v = RMSPROP_RHO * *v + (1.0 - RMSPROP_RHO) * g * g;
                    *p -= lr * g / (v.sqrt() + EPSILON);
                }
            }
        }
        Ok(())
    }
}
