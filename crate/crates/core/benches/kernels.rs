use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qdsl::circuit::compile;
use qdsl::programs::entangle;
use qdsl::shor::qft;
use qdsl::{gates, Emitter, GrowParams, Ket};

/// Run `f` on rayon's default pool and on a one-thread pool.
fn modes(c: &mut Criterion, group: &str, f: &(dyn Fn() + Sync)) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        g.bench_function(BenchmarkId::new("default_pool", rayon::current_num_threads()), |b| b.iter(f));
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
        g.bench_function(BenchmarkId::new("single_thread", 1), |b| b.iter(|| one.install(f)));
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function(BenchmarkId::new("sequential", 1), |b| b.iter(f));
    g.finish();
}

fn h_layer(c: &mut Criterion) {
    let n = 20;
    let qs: Vec<usize> = (0..n).collect();
    let mut base = Ket::new(n, 0).unwrap();
    entangle(&mut base, &qs).unwrap();
    modes(c, "h_layer_20q", &|| {
        let mut k = base.clone();
        for &q in &qs {
            k.apply(&gates::h(), &[q]).unwrap();
        }
    });
}

fn qft_run(c: &mut Criterion) {
    let n = 18;
    let qs: Vec<usize> = (0..n).collect();
    let circ = compile(|em, qs| qft(em, qs), &qs).unwrap();
    let mut base = Ket::new(n, 0).unwrap();
    for &q in &qs {
        base.apply(&gates::h(), &[q]).unwrap();
        base.apply(&gates::t(), &[q]).unwrap();
    }
    base.apply(&gates::cnot(), &[0, n - 1]).unwrap();
    modes(c, "qft_run_18q", &|| {
        let mut k = base.clone();
        circ.run(&mut k as &mut dyn Emitter).unwrap();
    });
}

fn grow(c: &mut Criterion) {
    let qs: Vec<usize> = (0..12).collect();
    let circ = compile(|em, qs| qft(em, qs), &qs).unwrap();
    modes(c, "grow_qft_12q", &|| {
        circ.grow_gates(&GrowParams::default());
    });
}

criterion_group!(benches, h_layer, qft_run, grow);
criterion_main!(benches);
