//! The embedding network: strided 1-D convolutions (batch norm + ReLU),
//! mean pooling over time, then three linear layers with batch norm + ReLU
//! after the first two. Parameters live in one flat, named list so the
//! optimizer and the checkpoint format see a stable order.

use super::EncoderConfig;
use crate::nncore::{
    batchnorm_backward, batchnorm_forward, conv1d_backward, conv1d_forward, linear_backward,
    linear_forward, mean_pool_time_backward, mean_pool_time_forward, relu_backward, relu_forward,
    BnCache, BnMode, BnStats, Container, ContainerError, LarsState, NnError, ParamKind, Parameter,
    Scalar, Tensor,
};
use rand::Rng;

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

struct ConvMeta {
    weight: usize,
    bias: usize,
    bn: Option<BnMeta>,
    stride: usize,
    pad: usize,
}

struct LinearMeta {
    weight: usize,
    bias: usize,
    /// Batch norm + ReLU present (all but the last linear layer).
    bn: Option<BnMeta>,
}

struct BnMeta {
    gamma: usize,
    beta: usize,
    running: usize,
}

pub struct Model<T: Scalar> {
    pub config: EncoderConfig,
    params: Vec<Parameter<T>>,
    param_names: Vec<String>,
    running: Vec<BnStats<T>>,
    conv: Vec<ConvMeta>,
    linear: Vec<LinearMeta>,
}

/// Everything the backward pass needs from one training forward.
pub struct Tape<T: Scalar> {
    input: Tensor<T>,
    conv: Vec<ConvTape<T>>,
    pooled: Tensor<T>,
    linear: Vec<LinearTape<T>>,
}

struct ConvTape<T: Scalar> {
    conv_out: Tensor<T>,
    bn_cache: Option<BnCache<T>>,
    block_out: Tensor<T>,
}

struct LinearTape<T: Scalar> {
    affine_out: Tensor<T>,
    bn_cache: Option<BnCache<T>>,
    block_out: Tensor<T>,
}

impl<T: Scalar> Model<T> {
    pub fn new(config: EncoderConfig, rng: &mut impl Rng) -> Result<Self, NnError> {
        config.validate().map_err(|detail| NnError::Dimension {
            op: "encoder",
            detail,
        })?;
        let mut model = Model {
            config: config.clone(),
            params: Vec::new(),
            param_names: Vec::new(),
            running: Vec::new(),
            conv: Vec::new(),
            linear: Vec::new(),
        };

        let plan = config.conv_plan();
        let mut c_in = 1usize;
        for (i, ((&k, &s), &(pad, _))) in config
            .kernel_sizes
            .iter()
            .zip(&config.strides)
            .zip(&plan)
            .enumerate()
        {
            let c_out = config.conv_channels;
            let bound = (1.0 / (c_in * k) as f64).sqrt();
            let weight = model.add_param(
                format!("conv{i}.weight"),
                uniform_tensor(rng, &[c_out, c_in, k], bound),
                ParamKind::Weight,
            );
            let bias = model.add_param(
                format!("conv{i}.bias"),
                uniform_tensor(rng, &[c_out], bound),
                ParamKind::Bias,
            );
            let bn = if config.conv_batchnorm {
                Some(model.add_bn(format!("conv{i}.bn"), c_out))
            } else {
                None
            };
            model.conv.push(ConvMeta {
                weight,
                bias,
                bn,
                stride: s,
                pad,
            });
            c_in = c_out;
        }

        let mut d_in = config.conv_channels;
        let n_linear = config.linear_dims.len();
        for (i, &d_out) in config.linear_dims.iter().enumerate() {
            let bound = (1.0 / d_in as f64).sqrt();
            let weight = model.add_param(
                format!("linear{i}.weight"),
                uniform_tensor(rng, &[d_out, d_in], bound),
                ParamKind::Weight,
            );
            let bias = model.add_param(
                format!("linear{i}.bias"),
                uniform_tensor(rng, &[d_out], bound),
                ParamKind::Bias,
            );
            let bn = if i + 1 < n_linear {
                Some(model.add_bn(format!("linear{i}.bn"), d_out))
            } else {
                None
            };
            model.linear.push(LinearMeta { weight, bias, bn });
            d_in = d_out;
        }
        Ok(model)
    }

    fn add_param(&mut self, name: String, value: Tensor<T>, kind: ParamKind) -> usize {
        self.params.push(Parameter::new(value, kind));
        self.param_names.push(name);
        self.params.len() - 1
    }

    fn add_bn(&mut self, prefix: String, channels: usize) -> BnMeta {
        let mut gamma = Tensor::zeros(&[channels]);
        gamma.fill(T::ONE);
        let gamma = self.add_param(format!("{prefix}.gamma"), gamma, ParamKind::BatchNorm);
        let beta = self.add_param(
            format!("{prefix}.beta"),
            Tensor::zeros(&[channels]),
            ParamKind::BatchNorm,
        );
        self.running.push(BnStats::new(channels));
        BnMeta {
            gamma,
            beta,
            running: self.running.len() - 1,
        }
    }

    pub fn params(&self) -> &[Parameter<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter<T>] {
        &mut self.params
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.zero_grad();
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.config.embedding_dim()
    }

    fn check_input(&self, segments: &Tensor<T>) -> Result<(), NnError> {
        let want = self.config.segment_samples();
        match *segments.shape() {
            [_, 1, l] if l == want => Ok(()),
            _ => Err(NnError::Dimension {
                op: "encode",
                detail: format!(
                    "expected [b, 1, {want}] input, got {:?}",
                    segments.shape()
                ),
            }),
        }
    }

    /// Eval-mode embedding: running batch-norm statistics, any batch size,
    /// no side effects.
    pub fn encode_eval(&self, segments: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.check_input(segments)?;
        let mut x = segments.clone();
        for meta in &self.conv {
            let z = conv1d_forward(
                &x,
                &self.params[meta.weight].value,
                &self.params[meta.bias].value,
                meta.stride,
                meta.pad,
            )?;
            let z = match &meta.bn {
                Some(bn) => {
                    // eval mode never touches the running stats
                    let mut stats = self.running[bn.running].clone();
                    batchnorm_forward(
                        &z,
                        &self.params[bn.gamma].value,
                        &self.params[bn.beta].value,
                        &mut stats,
                        BnMode::Eval,
                        BN_EPS,
                        BN_MOMENTUM,
                    )?
                    .0
                }
                None => z,
            };
            x = relu_forward(&z);
        }
        let mut y = mean_pool_time_forward(&x)?;
        for meta in &self.linear {
            let z = linear_forward(
                &y,
                &self.params[meta.weight].value,
                &self.params[meta.bias].value,
            )?;
            y = match &meta.bn {
                Some(bn) => {
                    let mut stats = self.running[bn.running].clone();
                    let (out, _) = batchnorm_forward(
                        &z,
                        &self.params[bn.gamma].value,
                        &self.params[bn.beta].value,
                        &mut stats,
                        BnMode::Eval,
                        BN_EPS,
                        BN_MOMENTUM,
                    )?;
                    relu_forward(&out)
                }
                None => z,
            };
        }
        Ok(y)
    }

    /// Train-mode forward: batch statistics, running-stat updates, and a
    /// tape for [`Model::backward`]. Layer inputs chain by reference into
    /// the tape and the activation runs in place; the eval path keeps the
    /// simpler pure formulation.
    pub fn forward_train(&mut self, segments: &Tensor<T>) -> Result<(Tensor<T>, Tape<T>), NnError> {
        self.check_input(segments)?;
        let mut conv_tapes: Vec<ConvTape<T>> = Vec::with_capacity(self.conv.len());
        for (i, meta) in self.conv.iter().enumerate() {
            let input = if i == 0 {
                segments
            } else {
                &conv_tapes[i - 1].block_out
            };
            let conv_out = conv1d_forward(
                input,
                &self.params[meta.weight].value,
                &self.params[meta.bias].value,
                meta.stride,
                meta.pad,
            )?;
            let (mut block_out, bn_cache) = match &meta.bn {
                Some(bn) => batchnorm_forward(
                    &conv_out,
                    &self.params[bn.gamma].value,
                    &self.params[bn.beta].value,
                    &mut self.running[bn.running],
                    BnMode::Train,
                    BN_EPS,
                    BN_MOMENTUM,
                )?,
                None => (conv_out.clone(), None),
            };
            for v in block_out.data_mut() {
                *v = v.maximum(T::ZERO);
            }
            conv_tapes.push(ConvTape {
                conv_out,
                bn_cache,
                block_out,
            });
        }

        let pooled = mean_pool_time_forward(&conv_tapes.last().expect("conv stack").block_out)?;
        let mut linear_tapes: Vec<LinearTape<T>> = Vec::with_capacity(self.linear.len());
        for (i, meta) in self.linear.iter().enumerate() {
            let input = if i == 0 {
                &pooled
            } else {
                &linear_tapes[i - 1].block_out
            };
            let affine_out = linear_forward(
                input,
                &self.params[meta.weight].value,
                &self.params[meta.bias].value,
            )?;
            let (block_out, bn_cache) = match &meta.bn {
                Some(bn) => {
                    let (out, cache) = batchnorm_forward(
                        &affine_out,
                        &self.params[bn.gamma].value,
                        &self.params[bn.beta].value,
                        &mut self.running[bn.running],
                        BnMode::Train,
                        BN_EPS,
                        BN_MOMENTUM,
                    )?;
                    (relu_forward(&out), cache)
                }
                None => (affine_out.clone(), None),
            };
            linear_tapes.push(LinearTape {
                affine_out,
                bn_cache,
                block_out,
            });
        }

        let output = linear_tapes.last().expect("linear stack").block_out.clone();
        let tape = Tape {
            input: segments.clone(),
            conv: conv_tapes,
            pooled,
            linear: linear_tapes,
        };
        Ok((output, tape))
    }

    /// Accumulates parameter gradients for one forward tape.
    pub fn backward(&mut self, tape: &Tape<T>, grad_output: &Tensor<T>) -> Result<(), NnError> {
        // linear stack, reversed
        let mut g = grad_output.clone();
        for i in (0..self.linear.len()).rev() {
            let lt = &tape.linear[i];
            let (weight_idx, bias_idx, bn) = {
                let m = &self.linear[i];
                (m.weight, m.bias, m.bn.as_ref().map(|b| (b.gamma, b.beta)))
            };
            if let (Some((gamma_idx, beta_idx)), Some(cache)) = (bn, lt.bn_cache.as_ref()) {
                g = relu_backward(&lt.block_out, &g);
                let (gx, ggamma, gbeta) = batchnorm_backward(
                    &lt.affine_out,
                    &self.params[gamma_idx].value,
                    cache,
                    &g,
                )?;
                self.params[gamma_idx].accumulate_grad(&ggamma);
                self.params[beta_idx].accumulate_grad(&gbeta);
                g = gx;
            }
            let input = if i == 0 {
                &tape.pooled
            } else {
                &tape.linear[i - 1].block_out
            };
            let (gx, gw, gb) = linear_backward(input, &self.params[weight_idx].value, &g)?;
            self.params[weight_idx].accumulate_grad(&gw);
            self.params[bias_idx].accumulate_grad(&gb);
            g = gx;
        }

        // through the time pooling
        let last_conv_shape = tape.conv.last().expect("conv stack").block_out.shape();
        let mut g3 = mean_pool_time_backward(last_conv_shape, &g);

        for i in (0..self.conv.len()).rev() {
            let ct = &tape.conv[i];
            let (weight_idx, bias_idx, stride, pad, bn) = {
                let m = &self.conv[i];
                (
                    m.weight,
                    m.bias,
                    m.stride,
                    m.pad,
                    m.bn.as_ref().map(|b| (b.gamma, b.beta)),
                )
            };
            g3 = relu_backward(&ct.block_out, &g3);
            if let (Some((gamma_idx, beta_idx)), Some(cache)) = (bn, ct.bn_cache.as_ref()) {
                let (gx, ggamma, gbeta) = batchnorm_backward(
                    &ct.conv_out,
                    &self.params[gamma_idx].value,
                    cache,
                    &g3,
                )?;
                self.params[gamma_idx].accumulate_grad(&ggamma);
                self.params[beta_idx].accumulate_grad(&gbeta);
                g3 = gx;
            }
            let input = if i == 0 {
                &tape.input
            } else {
                &tape.conv[i - 1].block_out
            };
            let (gx, gw, gb) =
                conv1d_backward(input, &self.params[weight_idx].value, stride, pad, &g3)?;
            self.params[weight_idx].accumulate_grad(&gw);
            self.params[bias_idx].accumulate_grad(&gb);
            g3 = gx;
        }
        Ok(())
    }

    /// Serializes parameters, batch-norm running statistics, config and
    /// (optionally) optimizer momentum into an artifact container.
    pub fn write_into(&self, c: &mut Container, lars: Option<&LarsState<T>>) {
        c.set_meta("kind", "encoder-checkpoint");
        c.set_meta("dtype", T::DTYPE_TAG);
        self.config_to_meta(c);
        for (p, name) in self.params.iter().zip(&self.param_names) {
            c.add_tensor(name, &p.value);
        }
        // running stats follow their bn parameter names
        for (layer, meta) in self
            .conv
            .iter()
            .map(|m| ("conv", m.bn.as_ref()))
            .enumerate()
            .filter_map(|(i, (kind, bn))| bn.map(|b| (format!("{kind}{i}.bn"), b)))
        {
            let stats = &self.running[meta.running];
            c.add_tensor(&format!("{layer}.running_mean"), &stats.mean);
            c.add_tensor(&format!("{layer}.running_var"), &stats.var);
        }
        for (layer, meta) in self
            .linear
            .iter()
            .map(|m| ("linear", m.bn.as_ref()))
            .enumerate()
            .filter_map(|(i, (kind, bn))| bn.map(|b| (format!("{kind}{i}.bn"), b)))
        {
            let stats = &self.running[meta.running];
            c.add_tensor(&format!("{layer}.running_mean"), &stats.mean);
            c.add_tensor(&format!("{layer}.running_var"), &stats.var);
        }
        if let Some(state) = lars {
            for (vel, name) in state.velocities.iter().zip(&self.param_names) {
                c.add_tensor(&format!("opt.velocity.{name}"), vel);
            }
        }
    }

    fn config_to_meta(&self, c: &mut Container) {
        let cfg = &self.config;
        c.set_meta("config.kernel_sizes", join(&cfg.kernel_sizes));
        c.set_meta("config.strides", join(&cfg.strides));
        c.set_meta("config.conv_channels", cfg.conv_channels);
        c.set_meta("config.linear_dims", join(&cfg.linear_dims));
        c.set_meta("config.segment_ms", cfg.segment_ms);
        c.set_meta("config.pair_gap_ms", cfg.pair_gap_ms);
        c.set_meta("config.conv_batchnorm", cfg.conv_batchnorm);
        c.set_meta("config.lambda", cfg.lambda);
    }

    pub fn config_from_meta(c: &Container) -> Result<EncoderConfig, ContainerError> {
        let mut cfg = EncoderConfig {
            kernel_sizes: split(c.meta("config.kernel_sizes")?)?,
            strides: split(c.meta("config.strides")?)?,
            conv_channels: c.meta_parse("config.conv_channels")?,
            linear_dims: split(c.meta("config.linear_dims")?)?,
            ..EncoderConfig::default()
        };
        cfg.segment_ms = c.meta_parse("config.segment_ms")?;
        cfg.pair_gap_ms = c.meta_parse("config.pair_gap_ms")?;
        cfg.conv_batchnorm = c.meta_parse("config.conv_batchnorm")?;
        cfg.lambda = c.meta_parse("config.lambda")?;
        Ok(cfg)
    }

    /// Rebuilds a model (and optimizer state, when present) from a
    /// container written by [`Model::write_into`].
    pub fn read_from(c: &Container) -> Result<(Self, Option<LarsState<T>>), ContainerError> {
        let config = Self::config_from_meta(c)?;
        let mut seed_rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut model = Model::new(config, &mut seed_rng)
            .map_err(|e| ContainerError::Malformed(format!("config rejected: {e}")))?;
        for (i, name) in model.param_names.clone().iter().enumerate() {
            model.params[i].value = c.tensor(name)?;
            model.params[i].grad = Tensor::zeros(model.params[i].value.shape());
        }
        let bn_names: Vec<(String, usize)> = model
            .conv
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.bn.as_ref().map(|b| (format!("conv{i}.bn"), b.running)))
            .chain(
                model
                    .linear
                    .iter()
                    .enumerate()
                    .filter_map(|(i, m)| m.bn.as_ref().map(|b| (format!("linear{i}.bn"), b.running))),
            )
            .collect();
        for (prefix, slot) in bn_names {
            model.running[slot].mean = c.tensor(&format!("{prefix}.running_mean"))?;
            model.running[slot].var = c.tensor(&format!("{prefix}.running_var"))?;
        }
        let lars = if c.has_tensor(&format!("opt.velocity.{}", model.param_names[0])) {
            let mut velocities = Vec::with_capacity(model.params.len());
            for name in &model.param_names {
                velocities.push(c.tensor(&format!("opt.velocity.{name}"))?);
            }
            Some(LarsState { velocities })
        } else {
            None
        };
        Ok((model, lars))
    }
}

use rand::SeedableRng;

fn uniform_tensor<T: Scalar>(rng: &mut impl Rng, shape: &[usize], bound: f64) -> Tensor<T> {
    let n: usize = shape.iter().product();
    Tensor::from_vec(
        shape,
        (0..n)
            .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
            .collect(),
    )
}

fn join(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn split(s: &str) -> Result<Vec<usize>, ContainerError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| ContainerError::Malformed(format!("bad list entry {x:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn tiny_config() -> EncoderConfig {
        EncoderConfig {
            kernel_sizes: vec![10, 10, 10, 8, 4, 4, 4],
            strides: vec![5, 5, 5, 4, 2, 2, 2],
            conv_channels: 8,
            linear_dims: vec![16, 16, 16],
            batch_size: 4,
            ..EncoderConfig::default()
        }
    }

    #[test]
    fn eval_forward_shapes_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model: Model<f64> = Model::new(tiny_config(), &mut rng).unwrap();
        let mut rng2 = ChaCha8Rng::seed_from_u64(2);
        let input = uniform_tensor::<f64>(&mut rng2, &[1, 1, 8000], 0.5);
        let a = model.encode_eval(&input).unwrap();
        let b = model.encode_eval(&input).unwrap();
        assert_eq!(a.shape(), &[1, 16]);
        assert_eq!(a, b, "eval mode must be pure");
        assert!(a.all_finite());
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model: Model<f64> = Model::new(tiny_config(), &mut rng).unwrap();
        let input = Tensor::<f64>::zeros(&[1, 1, 4000]);
        assert!(model.encode_eval(&input).is_err());
    }

    #[test]
    fn train_forward_then_backward_produces_finite_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model: Model<f64> = Model::new(tiny_config(), &mut rng).unwrap();
        let input = uniform_tensor::<f64>(&mut rng, &[4, 1, 8000], 0.5);
        let (out, tape) = model.forward_train(&input).unwrap();
        assert_eq!(out.shape(), &[4, 16]);
        let grad = uniform_tensor::<f64>(&mut rng, &[4, 16], 1.0);
        model.zero_grads();
        model.backward(&tape, &grad).unwrap();
        let total: f64 = model
            .params()
            .iter()
            .map(|p| p.grad.l2_norm())
            .sum();
        assert!(total.is_finite());
        assert!(total > 0.0, "gradients must flow");
    }

    #[test]
    fn checkpoint_round_trip_preserves_eval_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model: Model<f32> = Model::new(tiny_config(), &mut rng).unwrap();
        let input = uniform_tensor::<f32>(&mut rng, &[2, 1, 8000], 0.5);
        let before = model.encode_eval(&input).unwrap();

        let mut c = Container::new();
        model.write_into(&mut c, None);
        let mut bytes = Vec::new();
        c.write_to(&mut bytes).unwrap();
        let c2 = Container::read_from(&mut bytes.as_slice()).unwrap();
        let (model2, lars) = Model::<f32>::read_from(&c2).unwrap();
        assert!(lars.is_none());
        let after = model2.encode_eval(&input).unwrap();
        assert_eq!(before, after);
    }
}
