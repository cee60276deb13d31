use std::time::Instant;

fn main() {
    // layer-2 shape: weight [128, 1280] x col [1280, 318]
    let (m, k, n) = (128usize, 1280usize, 318usize);
    let a: Vec<f32> = (0..m * k).map(|i| (i % 97) as f32 * 0.01).collect();
    let b: Vec<f32> = (0..k * n).map(|i| (i % 89) as f32 * 0.01).collect();
    let mut c = vec![0.0f32; m * n];
    // warmup + bench nn
    for reps in [5usize, 50] {
        let t0 = Instant::now();
        for _ in 0..reps {
            for v in c.iter_mut() { *v = 0.0; }
            undiar_core::nncore::bench_gemm_nn(m, k, n, &a, &b, &mut c);
        }
        let dt = t0.elapsed().as_secs_f64();
        let gflops = (2.0 * m as f64 * k as f64 * n as f64 * reps as f64) / dt / 1e9;
        println!("gemm_nn {m}x{k}x{n}: {gflops:.2} GFLOP/s ({reps} reps)");
    }
    // nt: grad_weight shape gy [128, 318] x col^T, i.e. A [128,318] B [1280,318]
    let (m2, k2, n2) = (128usize, 318usize, 1280usize);
    let a2: Vec<f32> = (0..m2 * k2).map(|i| (i % 101) as f32 * 0.01).collect();
    let b2: Vec<f32> = (0..n2 * k2).map(|i| (i % 83) as f32 * 0.01).collect();
    let mut c2 = vec![0.0f32; m2 * n2];
    for reps in [5usize, 50] {
        let t0 = Instant::now();
        for _ in 0..reps {
            for v in c2.iter_mut() { *v = 0.0; }
            undiar_core::nncore::bench_gemm_nt(m2, k2, n2, &a2, &b2, &mut c2);
        }
        let dt = t0.elapsed().as_secs_f64();
        let gflops = (2.0 * m2 as f64 * k2 as f64 * n2 as f64 * reps as f64) / dt / 1e9;
        println!("gemm_nt {m2}x{k2}x{n2}: {gflops:.2} GFLOP/s ({reps} reps)");
    }
}
