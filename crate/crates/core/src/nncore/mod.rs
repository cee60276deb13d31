//! Minimal dense-tensor numerics for the fixed operator set the encoder
//! needs: 1-D convolution, affine layers, batch normalization, ReLU and
//! time pooling, each with a hand-derived backward pass, plus the LARS
//! optimizer, the warm-up/cosine learning-rate schedule, and the versioned
//! binary container used for every on-disk artifact.
//!
//! There is no general computation graph. Each operation exposes a forward
//! function and a matching backward function; callers chain them explicitly
//! and keep whatever intermediate values the backward pass needs.

mod container;
mod gemm;
mod lars;
mod ops;
mod parallel;
mod schedule;
mod scalar;
mod tensor;

pub use container::{Container, ContainerError, NamedTensor, CONTAINER_VERSION};
pub use lars::{lars_step, LarsConfig, LarsState};
pub use ops::{
    batchnorm_backward, batchnorm_forward, conv1d_backward, conv1d_forward, conv1d_output_len,
    linear_backward, linear_forward, mean_pool_time_backward, mean_pool_time_forward,
    relu_backward, relu_forward, BnCache, BnMode, BnStats,
};
pub use parallel::{jobs, set_jobs};
pub(crate) use parallel::parallel_map;

/// Benchmark hooks for the matrix kernels (not part of the public contract).
#[doc(hidden)]
pub fn bench_gemm_nn(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    gemm::gemm_nn_f32(m, k, n, a, b, c);
}

#[doc(hidden)]
pub fn bench_gemm_nt(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    gemm::gemm_nt_f32(m, k, n, a, b, c);
}
pub use scalar::Scalar;
pub use schedule::LrSchedule;
pub use tensor::{NnError, Tensor};

pub use lars::ParamKind;
pub use lars::Parameter;
