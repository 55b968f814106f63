use qdsl::circuit::compile;
use qdsl::noise::{injection_sites, inject_at, Pauli};
use qdsl::programs::tele1;
use qdsl::qecc::{inject, steane_transform, SteaneLayout};
use qdsl::stabilizer::Tableau;
use qdsl::{BitValue, Circuit, Emitter};

fn physical_tele1() -> (Circuit, SteaneLayout) {
    let c = compile(|em, qs| tele1(em, qs), &[0, 1, 2]).unwrap();
    steane_transform(&c, 3).unwrap()
}

fn run(c: &Circuit, layout: &SteaneLayout, seed: u64) -> (BitValue, usize) {
    let mut t = Tableau::new(layout.total_qubits(), seed).unwrap();
    c.run(&mut t as &mut dyn Emitter).unwrap();
    layout.decode_logical(2, t.bits()).unwrap()
}

#[test]
fn layout_uses_27_qubits() {
    let (c, layout) = physical_tele1();
    assert_eq!(layout.blocks.concat().len(), 21);
    assert_eq!(layout.ancillas.len(), 6);
    assert_eq!(c.wires(), (0..27).collect::<Vec<_>>());
}

#[test]
fn noiseless_tele1_decodes_one() {
    let (c, layout) = physical_tele1();
    for seed in 0..100 {
        assert_eq!(run(&c, &layout, seed), (BitValue::One, 0), "seed {seed}");
    }
}

#[test]
fn any_single_pauli_is_corrected() {
    let (c, layout) = physical_tele1();
    let sites = injection_sites(&c);
    assert!(sites.len() > 100);
    for &(site, wire) in &sites {
        for p in Pauli::ALL {
            let e = inject_at(&c, site, wire, p).unwrap();
            for seed in 0..3 {
                let (v, _) = run(&e, &layout, seed);
                assert_eq!(v, BitValue::One, "{p:?} at site {site} wire {wire} seed {seed}");
            }
        }
    }
}

#[test]
fn logical_error_rate_below_physical() {
    let (c, layout) = physical_tele1();
    let trials = 2000;
    let mut wrong = 0;
    for seed in 0..trials {
        let (e, stats) = inject(&c, 0.01, seed).unwrap();
        assert!(stats.total() <= stats.sites);
        if run(&e, &layout, seed ^ 0x5eed).0 != BitValue::One {
            wrong += 1;
        }
    }
    let rate = wrong as f64 / trials as f64;
    eprintln!("logical error rate {rate}");
    assert!(rate < 0.01, "rate {rate}");
}
