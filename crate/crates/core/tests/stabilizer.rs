use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdsl::circuit::compile;
use qdsl::gates;
use qdsl::programs::tele1;
use qdsl::stabilizer::Tableau;
use qdsl::{BitValue, Circuit, Emitter, Ket};

fn random_clifford(rng: &mut impl Rng, n: usize, count: usize) -> Circuit {
    let one = [gates::h(), gates::s(), gates::sdg(), gates::x(), gates::y(), gates::z()];
    let two = [gates::cnot(), gates::cz(), gates::swap()];
    let mut ops = Vec::new();
    for _ in 0..count {
        if n > 1 && rng.gen_bool(0.4) {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            ops.push(Circuit::apply(two[rng.gen_range(0..3)].clone(), &[a, b]));
        } else {
            ops.push(Circuit::apply(one[rng.gen_range(0..6)].clone(), &[rng.gen_range(0..n)]));
        }
    }
    Circuit::Seq(ops)
}

#[test]
fn random_clifford_states_match_universal() {
    let mut rng = ChaCha8Rng::seed_from_u64(432);
    for i in 0..50 {
        let n = rng.gen_range(1..=8);
        let c = random_clifford(&mut rng, n, 60);
        let mut t = Tableau::new(n, 0).unwrap();
        c.run(&mut t as &mut dyn Emitter).unwrap();
        let mut k = Ket::new(n, 0).unwrap();
        c.run(&mut k as &mut dyn Emitter).unwrap();
        let a = t.to_state().unwrap();
        let b = k.state_vector(&(0..n).collect::<Vec<_>>()).unwrap();
        let dot: qdsl::sparse::C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        assert!(dot.norm_sqr() > 1.0 - 1e-9, "circuit {i}: fidelity {}", dot.norm_sqr());
        t.check_invariants().unwrap();
    }
}

#[test]
fn h_measurement_is_fair() {
    let trials = 10_000;
    let ones = (0..trials)
        .filter(|&s| {
            let mut t = Tableau::new(1, s).unwrap();
            t.h(0).unwrap();
            t.measure(0).unwrap() == BitValue::One
        })
        .count();
    let frac = ones as f64 / trials as f64;
    assert!((0.48..=0.52).contains(&frac), "{frac}");
}

#[test]
fn tele1_reads_one() {
    let c = compile(|em, qs| tele1(em, qs), &[0, 1, 2]).unwrap();
    for seed in 0..100 {
        let mut t = Tableau::new(3, seed).unwrap();
        c.run(&mut t as &mut dyn Emitter).unwrap();
        assert_eq!(t.bits()[2], BitValue::One);
    }
}

#[test]
fn large_tableau_memory_is_quadratic_bits() {
    let n = 2000;
    let t = Tableau::new(n, 0).unwrap();
    let bits = t.memory_bytes() * 8;
    assert!(bits >= 4 * n * n && bits <= 5 * n * n, "{bits}");
}
