use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::ThreadPoolBuilder;
use ringbid_core::group::GroupParams;
use ringbid_core::ringsig::{keygen, setup, sign, verify, Ring};

const RING: usize = 8;

fn sign_and_verify(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let group = GroupParams::generate(32, 32, &mut rng).unwrap();
    let (pp, _) = setup(&group, 160, &mut rng).unwrap();
    let keys: Vec<_> = (0..RING).map(|_| keygen(&pp, &mut rng)).collect();
    let ring = Ring::new(pp.curve(), keys.iter().map(|k| k.pub_key().clone())).unwrap();
    let pos = ring.position(keys[0].pub_key()).unwrap();
    let sig = sign(&pp, &ring, pos, &keys[0], b"bench", &mut rng).unwrap();

    // without the `parallel` feature both pools run the same sequential code
    let pools = [
        (
            "sequential",
            ThreadPoolBuilder::new().num_threads(1).build().unwrap(),
        ),
        ("parallel", ThreadPoolBuilder::new().build().unwrap()),
    ];
    let mut g = c.benchmark_group(format!("ring of {RING}"));
    for (name, pool) in &pools {
        g.bench_function(BenchmarkId::new("sign", name), |b| {
            let mut rng = ChaCha20Rng::seed_from_u64(2);
            b.iter(|| pool.install(|| sign(&pp, &ring, pos, &keys[0], b"bench", &mut rng).unwrap()))
        });
        g.bench_function(BenchmarkId::new("verify", name), |b| {
            b.iter(|| pool.install(|| verify(&pp, &ring, b"bench", &sig).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, sign_and_verify);
criterion_main!(benches);
