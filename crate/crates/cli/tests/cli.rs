use std::process::{Command, Output};

fn qdsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdsl"))
        .args(args)
        .env_remove("QDSL_LOG")
        .output()
        .expect("run qdsl")
}

fn ok(args: &[&str]) -> String {
    let out = qdsl(args);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\n{text}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    text
}

fn prefixed(text: &str) {
    for line in text.lines() {
        let (stamp, _) = line.split_once('/').expect("timestamped line");
        let (h, m) = stamp.split_once(':').unwrap();
        assert!(h.chars().all(|c| c.is_ascii_digit()), "{line}");
        assert!(m.len() >= 6 && m.as_bytes()[m.len() - 2] == b'.', "{line}");
    }
}

#[test]
fn show_echoes() {
    assert_eq!(ok(&["show", "Hello world"]), "Hello world\n");
}

#[test]
fn usage_errors_exit_2() {
    for args in [&["frobnicate"][..], &[], &["shor"], &["shor", "x"], &["noise-tele", "maybe", "1", "0.1"]] {
        let out = qdsl(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = qdsl(&["frobnicate"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unrecognized subcommand"));
    assert!(err.contains("shor-t"), "unknown commands list the catalog");
}

#[test]
fn failures_exit_1() {
    let out = qdsl(&["shor", "16"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = qdsl(&["entangle", "12", "--max-amplitudes", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds the limit of 2^10"));
}

#[test]
fn teleport_three_paths() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("tele");
    let text = ok(&["teleport", "--seeds", "20", "--out", base.to_str().unwrap()]);
    prefixed(&text);
    for path in ["direct", "compiled", "grown"] {
        assert!(text.contains(&format!("{path:>8}: worst fidelity 1.000000000000")), "{text}");
    }
    assert!(dir.path().join("tele-grown.svg").exists());
    assert!(dir.path().join("tele-circuit.tex").exists());
}

#[test]
fn epr_writes_drawings() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("epr");
    let text = ok(&["epr", "--out", base.to_str().unwrap()]);
    assert!(text.contains("epr.svg"));
    let svg = std::fs::read_to_string(dir.path().join("epr.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn entangle_24() {
    let text = ok(&["entangle"]);
    prefixed(&text);
    assert!(text.contains("Entangle 24 qubits"), "{text}");
    assert!(text.contains("max entangled 24"));
}

#[test]
fn big_stops_at_memory_guard() {
    let text = ok(&["big", "4", "8", "--max-amplitudes", "6"]);
    assert!(text.contains("Entangle  6 qubits"));
    assert!(!text.contains("Entangle  7 qubits"));
    assert!(text.contains("7 qubits refused"));
}

#[test]
fn steane7_rates() {
    let text = ok(&["steane7", "--trials", "100"]);
    assert!(text.contains("      21 = Data qubits"));
    assert!(text.contains("       6 = Ancilla qubits"));
    assert!(text.contains("Logical error rate"));
}

#[test]
fn qecc_exhaustive_injection() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("q");
    let text = ok(&["qecc", "--out", base.to_str().unwrap()]);
    assert!(text.contains("Noiseless result One at distance 0"));
    assert!(text.contains(", 0 flipped the result"));
    assert!(dir.path().join("q-steane.svg").exists());
}

#[test]
fn noise_tele_rows() {
    let text = ok(&["noise-tele", "false", "200", "0.05"]);
    assert!(text.contains("/none,200,0.05,"));
    let text = ok(&["noise-tele", "true", "50", "0.01"]);
    assert!(text.contains("/steane7,50,0.01,"));
}

#[test]
fn noise1_and_amplitude_damping() {
    let text = ok(&["noise1", "10", "1000", "0.1"]);
    assert!(text.contains("(expected 1.0000)"));
    let text = ok(&["noise-amp", "0.3", "2000"]);
    assert!(text.contains("(channel 0.7000)"));
}

#[test]
fn shor_65_optimized() {
    let text = ok(&["shor", "65", "true", "--base", "32"]);
    prefixed(&text);
    assert!(text.contains("      17 = total qubits"));
    assert!(text.contains("32^"), "{text}");
    let last = text.lines().last().unwrap();
    assert!(last.contains("GOT: 65 = 5x 13"), "{last}");
    assert!(last.ends_with("SUCCESS!!"));
}

#[test]
fn shor_t_both_modes() {
    for mode in ["false", "true"] {
        let text = ok(&["shor-t", mode]);
        assert!(text.contains("add_mod_n N=7: 196 cases passed"));
        assert!(text.contains("All sub-operations passed"));
    }
}

#[test]
fn qft_bench_modes_agree() {
    let text = ok(&["qft-bench", "10"]);
    assert!(text.contains("direct:"));
    assert!(text.contains("compiled:"));
    assert!(text.contains("grown:"));
}

#[test]
fn log_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.log");
    let out = Command::new(env!("CARGO_BIN_EXE_qdsl"))
        .args(["shor-t", "false"])
        .env("QDSL_LOG", &path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let first = text.lines().next().unwrap();
    assert_eq!(first, "0:0000.0/=============== Logging to: run.log opened ================");
    assert!(text.contains("All sub-operations passed"));
}
