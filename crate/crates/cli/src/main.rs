//! `qdsl`: command-line driver for the built-in tests.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, CommandFactory, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qdsl::circuit::compile;
use qdsl::log::{kv, LogSink, TimedLog};
use qdsl::noise::{amplitude_damp, apply_depolarizing, injection_sites, inject_at, Pauli};
use qdsl::programs::{entangle_measured, epr, random_qubit, source_fidelity, tele1, teleport, teleport_fidelity};
use qdsl::qecc::{self, steane_transform, SteaneLayout};
use qdsl::render::{render, Format};
use qdsl::shor::{qft, self_test, shor_with_base};
use qdsl::stabilizer::Tableau;
use qdsl::{gates, BitValue, Circuit, Emitter, Error, GrowParams, Ket};

/// Environment variable naming a file that receives a copy of the log.
const LOG_ENV: &str = "QDSL_LOG";

#[derive(Parser)]
#[command(name = "qdsl", version, about = "Quantum circuit simulator test driver")]
struct Cli {
    /// Largest state a universal simulation may hold, as log2 of amplitudes.
    #[arg(long, global = true, default_value_t = 28)]
    max_amplitudes: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Echo a string and exit
    Show { text: Vec<String> },
    /// Draw and run original, circuit and grown versions of teleport
    Teleport {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// Write drawings with this path prefix
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the EPR circuit
    Epr {
        #[arg(long, default_value = "epr")]
        out: PathBuf,
    },
    /// Run an n-qubit entanglement circuit
    Entangle {
        #[arg(default_value_t = 24)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run entanglement tests over a range of sizes
    Big {
        #[arg(default_value_t = 20)]
        lo: usize,
        #[arg(default_value_t = 33)]
        hi: usize,
    },
    /// Basic error injection in the Steane code
    Steane7 {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0.01)]
        p: f64,
    },
    /// Teleport with exhaustive single error injection in the Steane code
    Qecc {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Noise on teleport
    NoiseTele {
        #[arg(action = ArgAction::Set)]
        steane: bool,
        iters: u64,
        p: f64,
    },
    /// Noise on one qubit
    Noise1 { depth: usize, iters: u64, p: f64 },
    /// Amplitude damping (non-unitary) noise
    NoiseAmp {
        #[arg(default_value_t = 0.3)]
        gamma: f64,
        #[arg(default_value_t = 20000)]
        trials: u64,
    },
    /// Factor N with Shor's algorithm (false=direct true=optimized circuit)
    Shor {
        n: u64,
        #[arg(action = ArgAction::Set, default_value_t = false)]
        optimized: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        attempts: usize,
        /// Base for the first attempt instead of a random one
        #[arg(long)]
        base: Option<u64>,
    },
    /// Test each sub-operation of Shor (false=direct true=circuit)
    ShorT {
        #[arg(action = ArgAction::Set, default_value_t = false)]
        optimized: bool,
    },
    /// Benchmark execution modes for the QFT
    QftBench {
        #[arg(default_value_t = 14)]
        n: usize,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Sim(#[from] Error),
    #[error("{0}")]
    Failed(String),
}

type Res = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if e.kind() == clap::error::ErrorKind::InvalidSubcommand {
                eprintln!("\n{}", Cli::command().render_long_help());
            }
            return ExitCode::from(code as u8);
        }
    };
    let mut log = TimedLog::new(true);
    if let Some(path) = std::env::var_os(LOG_ENV) {
        match log.with_file(Path::new(&path)) {
            Ok(l) => log = l,
            Err(e) => {
                eprintln!("cannot open log file {}: {e}", Path::new(&path).display());
                return ExitCode::from(1);
            }
        }
    }
    let result = dispatch(&cli, &mut log);
    let closed = log.close();
    match (result, closed) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Err(e), _) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        (_, Err(e)) => {
            eprintln!("error: log file: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli, log: &mut TimedLog) -> Res {
    let guard = cli.max_amplitudes;
    match &cli.cmd {
        Cmd::Show { text } => {
            println!("{}", text.join(" "));
            Ok(())
        }
        Cmd::Teleport { seeds, out } => run_teleport(*seeds, out.as_deref(), log),
        Cmd::Epr { out } => {
            let c = compile(|em, qs| epr(em, qs), &[0, 1])?;
            drawn(&c, out, log)
        }
        Cmd::Entangle { n, seed, out } => {
            if let Some(out) = out {
                let c = compile(|em, qs| entangle_measured(em, qs), &(0..*n).collect::<Vec<_>>())?;
                drawn(&c, out, log)?;
            }
            run_entangle(*n, *seed, guard, log)
        }
        Cmd::Big { lo, hi } => {
            for n in *lo..=*hi {
                if n > guard {
                    log.line(&format!("{n} qubits refused: over the 2^{guard} amplitude budget"));
                    break;
                }
                run_entangle(n, n as u64, guard, log)?;
            }
            Ok(())
        }
        Cmd::Steane7 { trials, p } => run_steane7(*trials, *p, log),
        Cmd::Qecc { out } => run_qecc(out.as_deref(), log),
        Cmd::NoiseTele { steane, iters, p } => run_noise_tele(*steane, *iters, *p, log),
        Cmd::Noise1 { depth, iters, p } => run_noise1(*depth, *iters, *p, log),
        Cmd::NoiseAmp { gamma, trials } => run_noise_amp(*gamma, *trials, log),
        Cmd::Shor { n, optimized, seed, attempts, base } => {
            let r = shor_with_base(*n, *base, *optimized, *seed, *attempts, log)?;
            match r.factors {
                Some(_) => Ok(()),
                None => Err(CliError::Failed(format!("no factors of {n} found"))),
            }
        }
        Cmd::ShorT { optimized } => {
            let mode = if *optimized { "grown circuits" } else { "compiled circuits" };
            log.line(&format!("Testing Shor sub-operations with {mode}"));
            for (name, cases) in self_test(*optimized)? {
                log.line(&format!("{name}: {cases} cases passed"));
            }
            log.line("All sub-operations passed");
            Ok(())
        }
        Cmd::QftBench { n } => run_qft_bench(*n, guard, log),
    }
}

fn drawn(c: &Circuit, base: &Path, log: &mut dyn LogSink) -> Res {
    for p in render(c, &[Format::Svg, Format::Tikz], base, None)? {
        log.line(&format!("Wrote {}", p.display()));
    }
    Ok(())
}

fn suffixed(base: &Path, tag: &str) -> PathBuf {
    let stem = base.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    base.with_file_name(format!("{stem}-{tag}"))
}

fn run_teleport(seeds: u64, out: Option<&Path>, log: &mut dyn LogSink) -> Res {
    let qs = [0, 1, 2];
    let circ = compile(|em, qs| teleport(em, qs), &qs)?;
    let (grown, glog) = circ.grow_gates(&GrowParams::default());
    for l in glog.lines() {
        log.line(&l);
    }
    log.line(&kv(circ.gate_count().total, "Gates in compiled circuit"));
    log.line(&kv(grown.gate_count().total, "Gates in grown circuit"));
    if let Some(base) = out {
        drawn(&circ, &suffixed(base, "circuit"), log)?;
        drawn(&grown, &suffixed(base, "grown"), log)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds);
    let mut worst = [1.0f64; 3];
    for seed in 0..seeds {
        let src = random_qubit(&mut rng)?;
        let mut ket = Ket::new(3, seed)?;
        ket.apply(&src, &[0])?;
        teleport(&mut ket, &qs)?;
        let f = [
            source_fidelity(&mut ket, 2, &src)?,
            teleport_fidelity(&circ, &src, seed)?,
            teleport_fidelity(&grown, &src, seed)?,
        ];
        for (w, v) in worst.iter_mut().zip(f) {
            *w = w.min(v);
        }
    }
    for (name, w) in ["direct", "compiled", "grown"].iter().zip(worst) {
        log.line(&format!("Teleport {name:>8}: worst fidelity {w:.12} over {seeds} states"));
    }
    if worst.iter().any(|w| (w - 1.0).abs() > 1e-10) {
        return Err(CliError::Failed("teleport lost fidelity".into()));
    }
    Ok(())
}

fn run_entangle(n: usize, seed: u64, guard: usize, log: &mut dyn LogSink) -> Res {
    if n > guard {
        return Err(Error::TooLarge { qubits: n, limit: guard }.into());
    }
    let t = Instant::now();
    let mut ket = Ket::new(n, seed)?;
    ket.set_amplitude_limit(guard);
    let qs: Vec<usize> = (0..n).collect();
    entangle_measured(&mut ket, &qs)?;
    let bits = ket.bits();
    if bits.iter().any(|&b| b != bits[0]) {
        return Err(CliError::Failed(format!("{n}-qubit entanglement measured unequal bits")));
    }
    let ones = if bits[0] == BitValue::One { n } else { 0 };
    log.line(&format!(
        "Entangle {n:2} qubits: {ones:2} ones, max entangled {}, {:.3} s",
        ket.stats().max_entangled,
        t.elapsed().as_secs_f64()
    ));
    Ok(())
}

fn steane_tele1() -> Result<(Circuit, SteaneLayout), Error> {
    let c = compile(|em, qs| tele1(em, qs), &[0, 1, 2])?;
    steane_transform(&c, 3)
}

fn decode_tele1(c: &Circuit, layout: &SteaneLayout, seed: u64) -> Result<(BitValue, usize), Error> {
    let mut t = Tableau::new(layout.total_qubits(), seed)?;
    c.run(&mut t as &mut dyn Emitter)?;
    layout.decode_logical(2, t.bits())
}

fn run_steane7(trials: u64, p: f64, log: &mut dyn LogSink) -> Res {
    let (c, layout) = steane_tele1()?;
    log.line(&kv(layout.blocks.concat().len(), "Data qubits"));
    log.line(&kv(layout.ancillas.len(), "Ancilla qubits"));
    log.line(&kv(c.gate_count().total, "Physical gates"));
    let mut wrong = 0;
    let mut injected = 0;
    for seed in 0..trials {
        let (e, stats) = qecc::inject(&c, p, seed)?;
        injected += stats.total();
        if decode_tele1(&e, &layout, seed ^ 0x5eed)?.0 != BitValue::One {
            wrong += 1;
        }
    }
    log.line(&kv(injected, "Errors injected"));
    log.line(&format!(
        "Logical error rate {:.4} at p={p} over {trials} trials",
        wrong as f64 / trials.max(1) as f64
    ));
    Ok(())
}

fn run_qecc(out: Option<&Path>, log: &mut dyn LogSink) -> Res {
    let logical = compile(|em, qs| tele1(em, qs), &[0, 1, 2])?;
    let (c, layout) = steane_transform(&logical, 3)?;
    if let Some(base) = out {
        drawn(&logical, &suffixed(base, "logical"), log)?;
        drawn(&c, &suffixed(base, "steane"), log)?;
    }
    let clean = decode_tele1(&c, &layout, 0)?;
    log.line(&format!("Noiseless result {:?} at distance {}", clean.0, clean.1));
    let sites = injection_sites(&c);
    let mut flips = 0;
    for &(site, wire) in &sites {
        for p in Pauli::ALL {
            let e = inject_at(&c, site, wire, p)?;
            if decode_tele1(&e, &layout, site as u64)?.0 != BitValue::One {
                flips += 1;
                log.line(&format!("{p:?} at site {site} wire {wire} flipped the result"));
            }
        }
    }
    log.line(&format!("{} single errors injected, {flips} flipped the result", sites.len() * 3));
    if clean != (BitValue::One, 0) || flips > 0 {
        return Err(CliError::Failed("Steane teleport was not protected".into()));
    }
    Ok(())
}

fn run_noise_tele(steane: bool, iters: u64, p: f64, log: &mut dyn LogSink) -> Res {
    log.line("code,iters,p,failures,mean_fidelity");
    if steane {
        let (c, layout) = steane_tele1()?;
        let mut wrong = 0u64;
        for seed in 0..iters {
            let (e, _) = qecc::inject(&c, p, seed)?;
            if decode_tele1(&e, &layout, seed ^ 0x5eed)?.0 != BitValue::One {
                wrong += 1;
            }
        }
        let f = 1.0 - wrong as f64 / iters.max(1) as f64;
        log.line(&format!("steane7,{iters},{p},{wrong},{f:.6}"));
    } else {
        let c = compile(|em, qs| teleport(em, qs), &[0, 1, 2])?;
        let mut rng = ChaCha8Rng::seed_from_u64(iters);
        let mut total = 0.0;
        let mut wrong = 0u64;
        for seed in 0..iters {
            let src = random_qubit(&mut rng)?;
            let (e, _) = apply_depolarizing(&c, p, seed)?;
            let f = teleport_fidelity(&e, &src, seed)?;
            total += f;
            if f < 1.0 - 1e-9 {
                wrong += 1;
            }
        }
        log.line(&format!("none,{iters},{p},{wrong},{:.6}", total / iters.max(1) as f64));
    }
    Ok(())
}

fn run_noise1(depth: usize, iters: u64, p: f64, log: &mut dyn LogSink) -> Res {
    let c = Circuit::Seq(vec![Circuit::apply(gates::i(), &[0]); depth]);
    let mut counts = [0usize; 3];
    for seed in 0..iters {
        let (_, stats) = apply_depolarizing(&c, p, seed)?;
        for e in Pauli::ALL {
            counts[e as usize] += stats.count(e);
        }
    }
    let total: usize = counts.iter().sum();
    let mean = total as f64 / iters.max(1) as f64;
    log.line(&format!(
        "depth {depth}, p={p}: mean errors {mean:.4} (expected {:.4}); X={} Y={} Z={}",
        depth as f64 * p,
        counts[0],
        counts[1],
        counts[2]
    ));
    Ok(())
}

fn run_noise_amp(gamma: f64, trials: u64, log: &mut dyn LogSink) -> Res {
    let mut ones = 0u64;
    for seed in 0..trials {
        let mut ket = Ket::new(1, seed)?;
        ket.apply(&gates::x(), &[0])?;
        amplitude_damp(&mut ket, 0, gamma)?;
        if ket.measure(0)? == BitValue::One {
            ones += 1;
        }
    }
    log.line(&format!(
        "gamma={gamma}: P(One) = {:.4} over {trials} trials (channel {:.4})",
        ones as f64 / trials.max(1) as f64,
        1.0 - gamma
    ));
    Ok(())
}

fn run_qft_bench(n: usize, guard: usize, log: &mut dyn LogSink) -> Res {
    if n > guard {
        return Err(Error::TooLarge { qubits: n, limit: guard }.into());
    }
    let qs: Vec<usize> = (0..n).collect();
    let prepare = || -> Result<Ket, Error> {
        let mut ket = Ket::new(n, 0)?;
        ket.set_amplitude_limit(guard);
        for &q in &qs {
            ket.apply(&gates::h(), &[q])?;
            ket.apply(&gates::t(), &[q])?;
        }
        Ok(ket)
    };
    let t = Instant::now();
    let circ = compile(|em, qs| qft(em, qs), &qs)?;
    let compile_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (grown, _) = circ.grow_gates(&GrowParams::default());
    let grow_s = t.elapsed().as_secs_f64();
    log.line(&format!("QFT on {n} qubits: compile {compile_s:.3} s, grow {grow_s:.3} s"));

    let mut direct = prepare()?;
    let t = Instant::now();
    qft(&mut direct, &qs)?;
    log.line(&format!("{:>9}: {:4} gates, {:.3} s", "direct", circ.gate_count().total, t.elapsed().as_secs_f64()));
    let reference = direct.state_vector(&qs)?;

    for (name, c) in [("compiled", &circ), ("grown", &grown)] {
        let mut ket = prepare()?;
        let t = Instant::now();
        c.run(&mut ket as &mut dyn Emitter)?;
        let secs = t.elapsed().as_secs_f64();
        let got = ket.state_vector(&qs)?;
        let err = got.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        log.line(&format!("{name:>9}: {:4} gates, {secs:.3} s, max diff {err:.2e}", c.gate_count().total));
        if err > 1e-9 {
            return Err(CliError::Failed(format!("{name} QFT differs from direct by {err:.2e}")));
        }
    }
    Ok(())
}
