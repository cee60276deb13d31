use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use undiar_core::encoder::{barlow_twins_loss, EncoderConfig, Model};
use undiar_core::nncore::{lars_step, set_jobs, LarsConfig, LarsState, Tensor};

fn main() {
    let jobs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let batch: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(256);
    set_jobs(jobs);
    let cfg = EncoderConfig { batch_size: batch, ..EncoderConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut model: Model<f32> = Model::new(cfg.clone(), &mut rng).unwrap();
    let mut state = LarsState::new(model.params());
    let lars = LarsConfig::default();
    use rand::Rng;
    let mk = |rng: &mut ChaCha8Rng| -> Tensor<f32> {
        Tensor::from_vec(&[batch, 1, 8000], (0..batch * 8000).map(|_| rng.gen_range(-0.3..0.3)).collect())
    };
    for step in 0..3 {
        let t0 = std::time::Instant::now();
        let xt = mk(&mut rng);
        let xtau = mk(&mut rng);
        let t_data = t0.elapsed();
        let (zt, tape_t) = model.forward_train(&xt).unwrap();
        let (ztau, tape_tau) = model.forward_train(&xtau).unwrap();
        let t_fwd = t0.elapsed();
        let out = barlow_twins_loss(&zt, &ztau, 1.0).unwrap();
        model.zero_grads();
        model.backward(&tape_t, &out.grad_t).unwrap();
        model.backward(&tape_tau, &out.grad_tau).unwrap();
        let t_bwd = t0.elapsed();
        lars_step(model.params_mut(), &mut state, &lars, 1.0).unwrap();
        let t_all = t0.elapsed();
        println!(
            "step {step}: data {:.2}s fwd {:.2}s bwd {:.2}s opt {:.2}s total {:.2}s (loss {:.1})",
            t_data.as_secs_f64(),
            (t_fwd - t_data).as_secs_f64(),
            (t_bwd - t_fwd).as_secs_f64(),
            (t_all - t_bwd).as_secs_f64(),
            t_all.as_secs_f64(),
            out.loss
        );
    }
}
