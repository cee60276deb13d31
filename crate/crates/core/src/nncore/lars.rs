//! Layer-wise adaptive rate scaling.
//!
//! Each parameter's step is scaled by `trust * ||value|| / ||grad||` on top
//! of its group learning rate. Biases and batch-norm parameters form their
//! own group: they take the smaller group rate, skip weight decay, and skip
//! the layer-wise adaptation.

use super::{NnError, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    BatchNorm,
}

impl ParamKind {
    pub fn is_weight(self) -> bool {
        matches!(self, ParamKind::Weight)
    }
}

/// A learnable tensor with its gradient slot.
#[derive(Debug, Clone)]
pub struct Parameter<T: Scalar> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub kind: ParamKind,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(value: Tensor<T>, kind: ParamKind) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter { value, grad, kind }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::ZERO);
    }

    /// Adds `g` into the gradient slot (two views of one batch both
    /// contribute to the same parameters).
    pub fn accumulate_grad(&mut self, g: &Tensor<T>) {
        assert_eq!(self.grad.shape(), g.shape());
        for (dst, src) in self.grad.data_mut().iter_mut().zip(g.data()) {
            *dst += *src;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LarsConfig {
    pub lr_weight: f64,
    pub lr_bias_bn: f64,
    pub momentum: f64,
    pub trust_coefficient: f64,
    pub weight_decay: f64,
    /// When false, the layer-wise trust ratio is forced to 1 and the update
    /// reduces to plain SGD with momentum.
    pub layerwise_adaptation: bool,
}

impl Default for LarsConfig {
    fn default() -> Self {
        LarsConfig {
            lr_weight: 0.2,
            lr_bias_bn: 0.0048,
            momentum: 0.9,
            trust_coefficient: 0.001,
            weight_decay: 1e-6,
            layerwise_adaptation: true,
        }
    }
}

/// Per-parameter momentum buffers, ordered like the parameter list.
#[derive(Debug, Clone, Default)]
pub struct LarsState<T: Scalar> {
    pub velocities: Vec<Tensor<T>>,
}

impl<T: Scalar> LarsState<T> {
    pub fn new(params: &[Parameter<T>]) -> Self {
        LarsState {
            velocities: params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
        }
    }
}

/// One optimizer step over every parameter. `lr_scale` is the schedule
/// multiplier for the current epoch.
pub fn lars_step<T: Scalar>(
    params: &mut [Parameter<T>],
    state: &mut LarsState<T>,
    config: &LarsConfig,
    lr_scale: f64,
) -> Result<(), NnError> {
    assert_eq!(params.len(), state.velocities.len());
    for (p, vel) in params.iter_mut().zip(state.velocities.iter_mut()) {
        if !p.grad.all_finite() {
            return Err(NnError::NonFinite { op: "lars_step" });
        }
        let is_weight = p.kind.is_weight();
        let wd = if is_weight { config.weight_decay } else { 0.0 };
        let group_lr = if is_weight {
            config.lr_weight
        } else {
            config.lr_bias_bn
        };

        // g = grad (+ wd * value for weights)
        let mut g: Vec<f64> = p
            .grad
            .data()
            .iter()
            .zip(p.value.data())
            .map(|(gr, v)| gr.to_f64() + wd * v.to_f64())
            .collect();

        let local_lr = if is_weight && config.layerwise_adaptation {
            let vnorm = p.value.l2_norm();
            let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vnorm > 0.0 && gnorm > 0.0 {
                config.trust_coefficient * vnorm / gnorm
            } else {
                1.0
            }
        } else {
            1.0
        };

        let step = group_lr * lr_scale * local_lr;
        for x in &mut g {
            *x *= step;
        }
        for ((v, vel_x), gx) in p
            .value
            .data_mut()
            .iter_mut()
            .zip(vel.data_mut())
            .zip(g.iter())
        {
            let u = config.momentum * vel_x.to_f64() + gx;
            *vel_x = T::from_f64(u);
            *v = T::from_f64(v.to_f64() - u);
        }
    }
    Ok(())
}
