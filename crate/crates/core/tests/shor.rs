use qdsl::circuit::compile;
use qdsl::log::NullLog;
use qdsl::shor::{
    add_const, add_mod_n, cmult_mod_n, continued_fractions, controlled_ua, extract_factors, order_find, qft,
    qft_inv, shor, ShorInstance, ShorLayout,
};
use qdsl::{gates, Circuit, Emitter, Ket};

fn wires(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Run `c` on basis state `input` and return the output basis state, or
/// panic when the output is not a basis state.
fn run_basis(c: &Circuit, n: usize, input: u64) -> u64 {
    let mut ket = Ket::new(n, 1).unwrap();
    for q in 0..n {
        if input >> q & 1 == 1 {
            ket.apply(&gates::x(), &[q]).unwrap();
        }
    }
    c.run(&mut ket as &mut dyn Emitter).unwrap();
    let mut out = 0;
    for q in 0..n {
        let p = ket.prob_one(q).unwrap();
        assert!(!(1e-9..=1.0 - 1e-9).contains(&p), "wire {q} not classical: {p}");
        if p > 0.5 {
            out |= 1 << q;
        }
    }
    out
}

#[test]
fn fourier_addition_is_integer_addition() {
    let bs = [0, 1, 2, 3];
    for a in 0..16u64 {
        let c = compile(
            |em, _| {
                qft(em, &bs)?;
                add_const(em, a, &bs, &[])?;
                qft_inv(em, &bs)
            },
            &bs,
        )
        .unwrap();
        for x in 0..16 {
            assert_eq!(run_basis(&c, 4, x), (x + a) % 16, "a={a} x={x}");
        }
    }
}

#[test]
fn adders_are_phase_only() {
    let mut t = qdsl::Tracer::new(None);
    add_const(&mut t, 11, &[1, 2, 3, 4], &[0]).unwrap();
    let c = t.finish();
    for leaf in c.leaves() {
        let Circuit::Apply(op) = leaf else { panic!() };
        assert!(op.gate.matrix().unwrap().is_diagonal());
        assert_eq!(op.wires[0], 0);
    }
}

#[test]
fn qft_roundtrip_on_all_basis_states() {
    let qs = wires(4);
    let c = compile(|em, qs| {
        qft(em, qs)?;
        qft_inv(em, qs)
    }, &qs)
    .unwrap();
    for x in 0..16 {
        assert_eq!(run_basis(&c, 4, x), x);
    }
}

#[test]
fn add_mod_n_exhaustive_with_clean_ancilla() {
    for n_mod in [3u64, 5, 7] {
        let nb = 64 - n_mod.leading_zeros() as usize;
        let total = nb + 4;
        let bs: Vec<usize> = (2..nb + 3).collect();
        let anc = nb + 3;
        for a in 0..n_mod {
            let c = compile(
                |em, _| {
                    qft(em, &bs)?;
                    add_mod_n(em, a, n_mod, [0, 1], &bs, anc)?;
                    qft_inv(em, &bs)
                },
                &wires(total),
            )
            .unwrap();
            let rev = c.reverse().unwrap();
            for b in 0..n_mod {
                for ctl in 0..4u64 {
                    let input = ctl | b << 2;
                    let expect_b = if ctl == 3 { (a + b) % n_mod } else { b };
                    let out = run_basis(&c, total, input);
                    assert_eq!(out, ctl | expect_b << 2, "N={n_mod} a={a} b={b} ctl={ctl}");
                    assert_eq!(out >> anc & 1, 0);
                    assert_eq!(run_basis(&rev, total, out), input);
                }
            }
        }
    }
}

#[test]
fn cmult_exhaustive() {
    for n_mod in [3u64, 5, 7] {
        let nb = 64 - n_mod.leading_zeros() as usize;
        let l = ShorLayout::new(nb);
        for a in 1..n_mod {
            let c = compile(|em, _| cmult_mod_n(em, a, n_mod, l.ctrl, &l.xs, &l.bs, l.anc), &l.all()).unwrap();
            for x in 0..1u64 << nb {
                for b in 0..n_mod {
                    let input = 1 | x << 1 | b << (nb + 1);
                    let want_b = (b + a * x) % n_mod;
                    assert_eq!(run_basis(&c, l.total(), input), 1 | x << 1 | want_b << (nb + 1));
                }
            }
        }
    }
}

#[test]
fn controlled_ua_exhaustive_and_reversible() {
    for n_mod in [3u64, 5, 7] {
        let nb = 64 - n_mod.leading_zeros() as usize;
        let l = ShorLayout::new(nb);
        for a in (1..n_mod).filter(|a| (1..n_mod).any(|i| a * i % n_mod == 1)) {
            let c = compile(|em, _| controlled_ua(em, a, n_mod, &l), &l.all()).unwrap();
            let rev = c.reverse().unwrap();
            for x in 0..n_mod {
                for ctl in 0..2 {
                    let input = ctl | x << 1;
                    let want = if ctl == 1 { a * x % n_mod } else { x };
                    let out = run_basis(&c, l.total(), input);
                    assert_eq!(out, ctl | want << 1, "N={n_mod} a={a} x={x}");
                    assert_eq!(run_basis(&rev, l.total(), out), input);
                }
            }
        }
    }
}

#[test]
fn qubit_budget() {
    for (n_mod, bits) in [(15u64, 4usize), (21, 5), (65, 7), (77, 7)] {
        let inst = ShorInstance::new(n_mod, 2).unwrap();
        assert_eq!(inst.n, bits);
        assert_eq!(inst.qubits(), 2 * bits + 3);
        assert_eq!(inst.t, 2 * bits);
    }
    assert!(ShorInstance::new(15, 5).is_err());
    assert!(ShorInstance::new(25, 2).is_err());
}

fn classical_order(a: u64, n: u64) -> u64 {
    let mut v = a % n;
    let mut r = 1;
    while v != 1 {
        v = v * a % n;
        r += 1;
    }
    r
}

#[test]
fn order_of_7_mod_15_from_measurements() {
    assert_eq!(classical_order(7, 15), 4);
    let inst = ShorInstance::new(15, 7).unwrap();
    let mut hits = 0;
    for seed in 0..12 {
        let r = order_find(&inst, false, seed, &mut NullLog).unwrap();
        assert_eq!(r.bits.len(), 8);
        assert_eq!(r.m % 64, 0, "phase must be a multiple of 1/4, m={}", r.m);
        if continued_fractions(r.m, 8).contains(&4) {
            hits += 1;
        }
    }
    assert!(hits >= 3);
}

#[test]
fn grown_rounds_give_identical_bits() {
    let inst = ShorInstance::new(21, 2).unwrap();
    for seed in 0..3 {
        let d = order_find(&inst, false, seed, &mut NullLog).unwrap();
        let g = order_find(&inst, true, seed, &mut NullLog).unwrap();
        assert_eq!(d.bits, g.bits);
        assert!(g.grown_gates.unwrap() * 10 <= d.compiled_gates);
    }
}

#[test]
fn factor_post_processing() {
    let f = extract_factors(15, 7, &continued_fractions(64, 8)).unwrap();
    assert_eq!((f.p, f.q), (3, 5));
    assert!(extract_factors(15, 7, &[]).is_none());
}

#[test]
fn shor_15_succeeds_for_most_seeds() {
    let seeds = 20;
    let ok = (0..seeds)
        .filter(|&s| {
            let r = shor(15, false, s, 5, &mut NullLog).unwrap();
            r.factors == Some((3, 5))
        })
        .count();
    assert!(ok * 100 >= 95 * seeds as usize, "{ok}/{seeds}");
}

#[test]
fn shor_21_and_log_tail() {
    let mut log: Vec<String> = Vec::new();
    let r = shor(21, true, 3, 10, &mut log).unwrap();
    assert_eq!(r.factors, Some((3, 7)));
    assert_eq!(r.qubits, 13);
    let last = log.last().unwrap();
    assert!(last.starts_with("GOT: 21 = 3x  7; n=5; mins="), "{last}");
    assert!(last.ends_with("SUCCESS!!"));
    assert!(shor(16, false, 0, 1, &mut NullLog).is_err());
    assert!(shor(27, false, 0, 1, &mut NullLog).is_err());
}
