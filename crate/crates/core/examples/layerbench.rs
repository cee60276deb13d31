use undiar_core::nncore::*;

fn t<F: FnMut()>(mut f: F) -> f64 {
    let t0 = std::time::Instant::now();
    f();
    t0.elapsed().as_secs_f64()
}

fn main() {
    set_jobs(std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1));
    let b = 256;
    // layer shapes of the default encoder at 8000 input samples
    let shapes: [(usize, usize, usize, usize, usize, usize); 7] = [
        (1, 128, 8000, 10, 5, 0),
        (128, 128, 1599, 10, 5, 0),
        (128, 128, 318, 10, 5, 0),
        (128, 128, 62, 8, 4, 0),
        (128, 128, 14, 4, 2, 0),
        (128, 128, 6, 4, 2, 0),
        (128, 128, 2, 4, 2, 1),
    ];
    let mut total_fwd = 0.0;
    let mut total_bwd = 0.0;
    for (i, &(cin, cout, l, k, s, p)) in shapes.iter().enumerate() {
        let x = Tensor::<f32>::from_vec(&[b, cin, l], vec![0.1; b * cin * l]);
        let w = Tensor::<f32>::from_vec(&[cout, cin, k], vec![0.01; cout * cin * k]);
        let bias = Tensor::<f32>::zeros(&[cout]);
        let mut out = None;
        let dt_f = t(|| out = Some(conv1d_forward(&x, &w, &bias, s, p).unwrap()));
        let out = out.unwrap();
        let lo = out.shape()[2];
        let gy = Tensor::<f32>::from_vec(out.shape(), vec![0.01; out.len()]);
        let dt_b = t(|| { conv1d_backward(&x, &w, s, p, &gy).unwrap(); });
        let gf = 2.0 * (b * cout * cin * k * lo) as f64 / 1e9;
        println!("conv{}: fwd {dt_f:.2}s ({:.1} GF/s) bwd {dt_b:.2}s ({:.1} GF/s)", i + 1, gf / dt_f, 2.0 * gf / dt_b);
        total_fwd += dt_f;
        total_bwd += dt_b;
    }
    println!("conv totals: fwd {total_fwd:.2}s bwd {total_bwd:.2}s");

    // batchnorm layer1-size
    let x = Tensor::<f32>::from_vec(&[b, 128, 1599], vec![0.1; b * 128 * 1599]);
    let gamma = Tensor::<f32>::from_vec(&[128], vec![1.0; 128]);
    let beta = Tensor::<f32>::zeros(&[128]);
    let mut running = BnStats::new(128);
    let mut cache = None;
    let dt = t(|| {
        let (_, c) = batchnorm_forward(&x, &gamma, &beta, &mut running, BnMode::Train, 1e-5, 0.1).unwrap();
        cache = c;
    });
    println!("bn fwd layer1: {dt:.2}s");
    let gy = Tensor::<f32>::from_vec(&[b, 128, 1599], vec![0.01; b * 128 * 1599]);
    let dt = t(|| { batchnorm_backward(&x, &gamma, &cache.clone().unwrap(), &gy).unwrap(); });
    println!("bn bwd layer1: {dt:.2}s");
}
