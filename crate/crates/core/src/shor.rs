//! Shor's algorithm: QFT, Fourier-space adders, modular arithmetic
//! (Beauregard's 2n+3 qubit layout), semiclassical order finding and the
//! classical pre- and post-processing.
//!
//! Registers are LSB first. `qft` leaves wire `j` of an m-wire register
//! holding the phase `2π·x/2^(j+1)`, so the output index is bit-reversed
//! relative to the input; no swaps are emitted.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{compile, Circuit, Emitter, GrowParams};
use crate::error::{Error, Result};
use crate::gates::{self, cnot, control, h, phase, rotation, rotation_adj, x, GateRef};
use crate::ket::{BitValue, Ket, KetStats, QubitId};
use crate::log::{kv, sig6, LogSink};

fn nonempty(qs: &[QubitId], what: &str) -> Result<()> {
    if qs.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} on an empty register")));
    }
    Ok(())
}

/// Quantum Fourier transform without the final swaps.
pub fn qft(em: &mut dyn Emitter, qs: &[QubitId]) -> Result<()> {
    nonempty(qs, "qft")?;
    for a_idx in (0..qs.len()).rev() {
        let a = qs[a_idx];
        em.apply(&h(), &[a])?;
        for k in 2..=a_idx + 1 {
            let c = qs[a_idx - (k - 1)];
            em.apply(&control(&rotation(k as u32)?)?, &[c, a])?;
        }
    }
    Ok(())
}

/// Inverse of `qft`.
pub fn qft_inv(em: &mut dyn Emitter, qs: &[QubitId]) -> Result<()> {
    nonempty(qs, "qft_inv")?;
    for a_idx in 0..qs.len() {
        let a = qs[a_idx];
        for k in (2..=a_idx + 1).rev() {
            let c = qs[a_idx - (k - 1)];
            em.apply(&control(&rotation_adj(k as u32)?)?, &[c, a])?;
        }
        em.apply(&h(), &[a])?;
    }
    Ok(())
}

fn controlled(g: GateRef, ctrls: usize) -> Result<GateRef> {
    (0..ctrls).try_fold(g, |g, _| control(&g))
}

/// Add the constant `a` to a Fourier-space register, with optional
/// controls (first wires of each emitted gate). One phase gate per wire.
pub fn add_const(em: &mut dyn Emitter, a: u64, bs: &[QubitId], ctrls: &[QubitId]) -> Result<()> {
    nonempty(bs, "add_const")?;
    let m = bs.len();
    if m >= 63 || a >> m != 0 {
        return Err(Error::InvalidArgument(format!("constant {a} does not fit {m} wires")));
    }
    for (j, &b) in bs.iter().enumerate() {
        let k = j as u32 + 1;
        let g = phase(a % (1u64 << k), k)?;
        if g.name == "I" {
            continue;
        }
        let mut wires = ctrls.to_vec();
        wires.push(b);
        em.apply(&controlled(g, ctrls.len())?, &wires)?;
    }
    Ok(())
}

/// Subtract the constant `a` (mod 2^|bs|) from a Fourier-space register.
pub fn sub_const(em: &mut dyn Emitter, a: u64, bs: &[QubitId], ctrls: &[QubitId]) -> Result<()> {
    nonempty(bs, "sub_const")?;
    let m = bs.len() as u32;
    if m >= 63 || a >> m != 0 {
        return Err(Error::InvalidArgument(format!("constant {a} does not fit {m} wires")));
    }
    add_const(em, ((1u64 << m) - a) % (1u64 << m), bs, ctrls)
}

/// Doubly controlled `b -> (b + a) mod n` on a Fourier-space register `bs`
/// of n+1 wires whose top wire is the overflow bit. `anc` starts and ends
/// in `|0⟩`.
pub fn add_mod_n(
    em: &mut dyn Emitter,
    a: u64,
    n: u64,
    ctrls: [QubitId; 2],
    bs: &[QubitId],
    anc: QubitId,
) -> Result<()> {
    if a >= n {
        return Err(Error::InvalidArgument(format!("add_mod_n needs a < N, got a={a} N={n}")));
    }
    if bs.len() < 2 || n >> (bs.len() - 1) != 0 {
        return Err(Error::InvalidArgument(format!("N={n} needs n+1 target wires")));
    }
    let top = bs[bs.len() - 1];
    add_const(em, a, bs, &ctrls)?;
    sub_const(em, n, bs, &[])?;
    qft_inv(em, bs)?;
    em.apply(&cnot(), &[top, anc])?;
    qft(em, bs)?;
    add_const(em, n, bs, &[anc])?;
    sub_const(em, a, bs, &ctrls)?;
    qft_inv(em, bs)?;
    em.apply(&x(), &[top])?;
    em.apply(&cnot(), &[top, anc])?;
    em.apply(&x(), &[top])?;
    qft(em, bs)?;
    add_const(em, a, bs, &ctrls)
}

/// Controlled `|x⟩|b⟩ -> |x⟩|(b + a·x) mod n⟩` with `b` in the computational
/// basis on n+1 wires.
pub fn cmult_mod_n(
    em: &mut dyn Emitter,
    a: u64,
    n: u64,
    ctrl: QubitId,
    xs: &[QubitId],
    bs: &[QubitId],
    anc: QubitId,
) -> Result<()> {
    qft(em, bs)?;
    let mut term = a % n;
    for &xi in xs {
        add_mod_n(em, term, n, [ctrl, xi], bs, anc)?;
        term = mulmod(term, 2, n);
    }
    qft_inv(em, bs)
}

/// Controlled `|x⟩ -> |a·x mod n⟩` on `xs`; `bs` and `anc` start and end
/// in `|0⟩`. `a` must be invertible mod n.
pub fn controlled_ua(em: &mut dyn Emitter, a: u64, n: u64, layout: &ShorLayout) -> Result<()> {
    let inv = modinv(a, n)
        .ok_or_else(|| Error::InvalidArgument(format!("{a} has no inverse mod {n}")))?;
    let (c, xs, bs, anc) = (layout.ctrl, &layout.xs[..], &layout.bs[..], layout.anc);
    cmult_mod_n(em, a, n, c, xs, bs, anc)?;
    let fredkin = gates::ccnot();
    for (&xi, &bi) in xs.iter().zip(bs) {
        em.apply(&cnot(), &[bi, xi])?;
        em.apply(&fredkin, &[c, xi, bi])?;
        em.apply(&cnot(), &[bi, xi])?;
    }
    let undo = compile(|em, _| cmult_mod_n(em, inv, n, c, xs, bs, anc), &layout.all())?;
    undo.reverse()?.run(em)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn mulmod(a: u64, b: u64, n: u64) -> u64 {
    (a as u128 * b as u128 % n as u128) as u64
}

pub fn powmod(mut base: u64, mut e: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    base %= n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, base, n);
        }
        base = mulmod(base, base, n);
        e >>= 1;
    }
    acc
}

pub fn modinv(a: u64, n: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (n as i128, (a % n) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    (r == 1).then(|| t.rem_euclid(n as i128) as u64)
}

fn bit_length(n: u64) -> usize {
    64 - n.leading_zeros() as usize
}

/// Wire assignment: phase qubit, x register (n), b register (n+1), ancilla.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShorLayout {
    pub n: usize,
    pub ctrl: QubitId,
    pub xs: Vec<QubitId>,
    pub bs: Vec<QubitId>,
    pub anc: QubitId,
}

impl ShorLayout {
    pub fn new(n: usize) -> ShorLayout {
        ShorLayout {
            n,
            ctrl: 0,
            xs: (1..=n).collect(),
            bs: (n + 1..=2 * n + 1).collect(),
            anc: 2 * n + 2,
        }
    }

    pub fn total(&self) -> usize {
        2 * self.n + 3
    }

    pub fn all(&self) -> Vec<QubitId> {
        (0..self.total()).collect()
    }

    pub fn describe(&self) -> Vec<String> {
        vec![
            format!("Qubits: M at {:2}", self.ctrl),
            format!("Qubits: X from {:2} to {:2}", self.xs[0], self.xs[self.n - 1]),
            format!("Qubits: B from {:2} to {:2}", self.bs[0], self.bs[self.n]),
            format!("Qubits: Anc at {:2}", self.anc),
        ]
    }
}

/// A checked factoring problem: modulus, base and register sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShorInstance {
    pub modulus: u64,
    pub a: u64,
    /// Bit length of the modulus.
    pub n: usize,
    /// Phase bits, 2n.
    pub t: usize,
}

impl ShorInstance {
    pub fn new(modulus: u64, a: u64) -> Result<ShorInstance> {
        check_modulus(modulus)?;
        if a <= 1 || a >= modulus || gcd(a, modulus) != 1 {
            return Err(Error::InvalidArgument(format!(
                "base {a} must be in (1, {modulus}) and coprime to it"
            )));
        }
        let n = bit_length(modulus);
        Ok(ShorInstance { modulus, a, n, t: 2 * n })
    }

    pub fn qubits(&self) -> usize {
        2 * self.n + 3
    }

    pub fn layout(&self) -> ShorLayout {
        ShorLayout::new(self.n)
    }

    /// Circuit of round `j`: H on the phase qubit, then controlled
    /// multiplication by `a^(2^(t-1-j))`.
    pub fn round_circuit(&self, j: usize) -> Result<Circuit> {
        let layout = self.layout();
        let mut mult = self.a;
        for _ in 0..self.t - 1 - j {
            mult = mulmod(mult, mult, self.modulus);
        }
        compile(
            |em, _| {
                em.apply(&h(), &[layout.ctrl])?;
                controlled_ua(em, mult, self.modulus, &layout)
            },
            &layout.all(),
        )
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn prime_power_root(n: u64) -> Option<u64> {
    (2..bit_length(n) as u32 + 1).find_map(|k| {
        let r = (n as f64).powf(1.0 / k as f64).round() as u64;
        (r.saturating_sub(1)..=r + 1).find(|&c| c > 1 && c.checked_pow(k) == Some(n) && is_prime(c))
    })
}

fn check_modulus(n: u64) -> Result<()> {
    if n < 15 || n.is_multiple_of(2) || is_prime(n) || prime_power_root(n).is_some() {
        return Err(Error::InvalidArgument(format!(
            "{n} must be an odd composite of at least 15 that is not a prime power"
        )));
    }
    if bit_length(n) > 30 {
        return Err(Error::InvalidArgument(format!("{n} is too large to simulate")));
    }
    Ok(())
}

/// Widest fused gate in optimized rounds. Fusion work per attempt doubles
/// with each wire; 12 keeps growing well under the run time.
pub const GROW_WIRES: usize = 12;

/// Measured bits and statistics from one order-finding run.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderResult {
    /// Bit of weight 2^j measured in round j.
    pub bits: Vec<u8>,
    pub m: u64,
    pub compiled_gates: usize,
    pub grown_gates: Option<usize>,
    pub compile_minutes: f64,
    pub grow_minutes: f64,
    pub run_minutes: f64,
    pub stats: KetStats,
}

fn minutes(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() / 60.0
}

/// Semiclassical phase estimation of `a` mod N with 2n rounds on one phase
/// qubit. With `optimize`, each round's circuit is grown before running.
pub fn order_find(
    inst: &ShorInstance,
    optimize: bool,
    seed: u64,
    log: &mut dyn LogSink,
) -> Result<OrderResult> {
    let layout = inst.layout();
    log.line(if optimize {
        "         - Compiling, growing and running each round"
    } else {
        "         - Compiling and running each round"
    });
    for l in layout.describe() {
        log.line(&l);
    }
    let params = GrowParams::new(GROW_WIRES, 0.5, false)?;
    let mut ket = Ket::new(layout.total(), seed)?;
    ket.apply(&x(), &[layout.xs[0]])?;
    let (mut compile_secs, mut grow_secs, mut run_secs) = (0.0, 0.0, 0.0);
    let (mut compiled_gates, mut grown_total) = (0, 0);
    let mut m = 0u64;
    let mut bits = Vec::with_capacity(inst.t);
    for j in 0..inst.t {
        let t0 = Instant::now();
        let mut c = inst.round_circuit(j)?;
        compiled_gates += c.gate_count().total;
        compile_secs += t0.elapsed().as_secs_f64();
        if optimize {
            let t1 = Instant::now();
            let (g, glog) = c.grow_gates(&params);
            if j == 0 {
                for l in glog.lines() {
                    log.line(&l);
                }
            }
            grown_total += g.gate_count().total;
            c = g;
            grow_secs += t1.elapsed().as_secs_f64();
        }
        let t2 = Instant::now();
        c.run(&mut ket)?;
        let k = j as u32 + 1;
        let correction = ((1u64 << k) - (m & ((1u64 << j) - 1))) % (1u64 << k);
        let g = phase(correction, k)?;
        if g.name != "I" {
            ket.apply(&g, &[layout.ctrl])?;
        }
        ket.apply(&h(), &[layout.ctrl])?;
        let bit = u8::from(ket.measure(layout.ctrl)? == BitValue::One);
        m |= u64::from(bit) << j;
        bits.push(bit);
        ket.reset(layout.ctrl, BitValue::Zero)?;
        run_secs += t2.elapsed().as_secs_f64();
        let mb = (ket.allocated_amplitudes() * 16) >> 20;
        log.line(&format!("{:>11} of {} [MB:{mb} m={bit}]", j + 1, inst.t));
    }
    let (compile_minutes, grow_minutes, run_minutes) =
        (compile_secs / 60.0, grow_secs / 60.0, run_secs / 60.0);
    log.line(&format!("{compile_minutes:.6} = mins for compile"));
    log.line(&kv(compiled_gates, "cnt of gates"));
    let cache = gates::cache_stats();
    log.line(&kv(cache.hits, "cache hits"));
    log.line(&kv(cache.misses, "cache misses"));
    let grown_gates = optimize.then_some(grown_total);
    if optimize {
        log.line(&format!("{grow_minutes:.6} = mins for growing gates"));
        log.line(&kv(grown_total, "cnt of gates"));
    }
    log.line(&format!("{run_minutes:.6} = mins for running"));
    let stats = ket.stats();
    log.line(&kv(stats.max_entangled, "Max Entangled"));
    log.line(&kv(stats.gates_permuted, "Gates Permuted"));
    log.line(&kv(stats.state_permuted, "State Permuted"));
    log.line(&kv(stats.none_permuted, "None  Permuted"));
    Ok(OrderResult {
        bits,
        m,
        compiled_gates,
        grown_gates,
        compile_minutes,
        grow_minutes,
        run_minutes,
        stats,
    })
}

/// Denominators of the convergents of `m / 2^t` below `2^(t/2)`, ascending.
pub fn continued_fractions(m: u64, t: usize) -> Vec<u64> {
    let limit = 1u128 << (t / 2);
    let (mut num, mut den) = (m as u128, 1u128 << t);
    let (mut q_prev, mut q) = (1u128, 0u128);
    let mut out = Vec::new();
    if num == 0 {
        return out;
    }
    while den != 0 {
        let a = num / den;
        (num, den) = (den, num - a * den);
        let q_next = a * q + q_prev;
        (q_prev, q) = (q, q_next);
        if q >= limit {
            break;
        }
        if q > 0 {
            out.push(q as u64);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Factors found from an exponent, with the values that produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factors {
    pub p: u64,
    pub q: u64,
    /// Even exponent e with `a^(e/2) ± 1` giving the factor.
    pub exponent: u64,
    pub plus: u64,
    pub minus: u64,
}

/// Try each candidate order and its multiples up to 4.
pub fn extract_factors(n: u64, a: u64, candidates: &[u64]) -> Option<Factors> {
    for &r in candidates {
        for k in 1..=4 {
            let e = r * k;
            if e == 0 || e % 2 == 1 {
                continue;
            }
            if let Some(f) = factors_from_exponent(n, a, e) {
                return Some(f);
            }
        }
    }
    None
}

/// Factors of `n` from `gcd(a^(e/2) ± 1, n)` when one is nontrivial.
pub fn factors_from_exponent(n: u64, a: u64, e: u64) -> Option<Factors> {
    let half = powmod(a, e / 2, n);
    if half == n - 1 {
        return None;
    }
    let plus = (half + 1) % n;
    let minus = (half + n - 1) % n;
    [gcd(plus, n), gcd(minus, n)]
        .into_iter()
        .find(|&g| g > 1 && g < n)
        .map(|g| {
            let (p, q) = (g.min(n / g), g.max(n / g));
            Factors { p, q, exponent: e, plus, minus }
        })
}

/// Outcome of `shor`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShorResult {
    pub modulus: u64,
    pub n: usize,
    pub qubits: usize,
    /// Base used in the final attempt.
    pub a: u64,
    pub attempts: usize,
    /// Order-finding data from the final attempt; absent when a lucky gcd
    /// already split the modulus.
    pub order: Option<OrderResult>,
    pub candidates: Vec<u64>,
    pub factors: Option<(u64, u64)>,
    pub minutes: f64,
}

/// Factor `modulus` with up to `max_attempts` random bases.
pub fn shor(
    modulus: u64,
    optimize: bool,
    seed: u64,
    max_attempts: usize,
    log: &mut dyn LogSink,
) -> Result<ShorResult> {
    shor_with_base(modulus, None, optimize, seed, max_attempts, log)
}

/// `shor`, with the first attempt using `base` instead of a random one.
pub fn shor_with_base(
    modulus: u64,
    base: Option<u64>,
    optimize: bool,
    seed: u64,
    max_attempts: usize,
    log: &mut dyn LogSink,
) -> Result<ShorResult> {
    check_modulus(modulus)?;
    if let Some(a) = base {
        if !(2..modulus - 1).contains(&a) {
            return Err(Error::InvalidArgument(format!("base {a} outside [2, {}]", modulus - 2)));
        }
    }
    let start = Instant::now();
    let n = bit_length(modulus);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut result = ShorResult {
        modulus,
        n,
        qubits: 2 * n + 3,
        a: 0,
        attempts: 0,
        order: None,
        candidates: Vec::new(),
        factors: None,
        minutes: 0.0,
    };
    while result.attempts < max_attempts {
        result.attempts += 1;
        let a = match base {
            Some(a) if result.attempts == 1 => a,
            _ => rng.gen_range(2..=modulus - 2),
        };
        result.a = a;
        log.line("======== Doing Shor Round =========");
        log.line(&kv(modulus, "N = Number to factor"));
        let g = gcd(a, modulus);
        if g > 1 {
            log.line(&kv(a, "a = shares a factor with N"));
            result.factors = Some((g.min(modulus / g), g.max(modulus / g)));
            break;
        }
        let inst = ShorInstance::new(modulus, a)?;
        log.line(&kv(a, "a = coPrime of N"));
        log.line(&kv(n, "n = number of bits for N"));
        log.line(&kv(1u64 << n, "2^n"));
        log.line(&kv(inst.qubits(), "total qubits"));
        let order = order_find(&inst, optimize, rng.gen(), log)?;
        let m = order.m;
        log.line(&kv(m, "m = quantum result"));
        log.line(&kv(sig6(m as f64 / (1u64 << n) as f64), &format!("c =~ {m}/{}", 1u64 << n)));
        result.candidates = continued_fractions(m, inst.t);
        let found = extract_factors(modulus, a, &result.candidates);
        if let Some(f) = &found {
            log.line(&kv(f.exponent, "exponent"));
            log.line(&kv(f.plus, &format!("{a}^{} + 1 mod {modulus}", f.exponent / 2)));
            log.line(&kv(f.minus, &format!("{a}^{} - 1 mod {modulus}", f.exponent / 2)));
        } else {
            log.line(&format!("candidates {:?} gave no factor", result.candidates));
        }
        result.order = Some(order);
        if let Some(f) = found {
            result.factors = Some((f.p, f.q));
            break;
        }
    }
    result.minutes = minutes(start);
    match result.factors {
        Some((p, q)) => log.line(&format!(
            "GOT: {modulus} = {p}x{q:3}; n={n}; mins={:.2}; SUCCESS!!",
            result.minutes
        )),
        None => log.line(&format!(
            "GOT: {modulus} = ?; n={n}; mins={:.2}; FAILURE after {} attempts",
            result.minutes, result.attempts
        )),
    }
    Ok(result)
}

/// One line per exhaustively checked arithmetic block: (name, cases).
pub fn self_test(optimized: bool) -> Result<Vec<(String, usize)>> {
    let mut out = Vec::new();
    for n_mod in [3u64, 5, 7] {
        let n = bit_length(n_mod);
        let mut cases = 0;
        let (c1, c2, anc) = (0, 1, n + 3);
        let bs: Vec<QubitId> = (2..n + 3).collect();
        for a in 0..n_mod {
            let circ = compile(
                |em, _| {
                    qft(em, &bs)?;
                    add_mod_n(em, a, n_mod, [c1, c2], &bs, anc)?;
                    qft_inv(em, &bs)
                },
                &(0..n + 4).collect::<Vec<_>>(),
            )?;
            let circ = maybe_grow(circ, optimized);
            for b in 0..n_mod {
                for ctl in 0..4u64 {
                    let input = (ctl & 1) | (ctl >> 1 & 1) << 1 | b << 2;
                    let on = ctl == 3;
                    let want = (ctl & 1) | (ctl >> 1 & 1) << 1 | if on { (a + b) % n_mod } else { b } << 2;
                    check_basis(&circ, n + 4, input, want, &format!("add_mod_n N={n_mod} a={a} b={b}"))?;
                    cases += 1;
                }
            }
        }
        out.push((format!("add_mod_n N={n_mod}"), cases));

        let layout = ShorLayout::new(n);
        let mut cases = 0;
        for a in (1..n_mod).filter(|&a| gcd(a, n_mod) == 1) {
            let circ = compile(|em, _| controlled_ua(em, a, n_mod, &layout), &layout.all())?;
            let circ = maybe_grow(circ, optimized);
            for xv in 0..n_mod {
                for c in 0..2u64 {
                    let input = c | xv << 1;
                    let want = c | if c == 1 { mulmod(a, xv, n_mod) } else { xv } << 1;
                    check_basis(&circ, layout.total(), input, want, &format!("Ua N={n_mod} a={a} x={xv}"))?;
                    cases += 1;
                }
            }
        }
        out.push((format!("controlled Ua N={n_mod}"), cases));
    }
    Ok(out)
}

fn maybe_grow(c: Circuit, grow: bool) -> Circuit {
    if grow {
        c.grow_gates(&GrowParams::default()).0
    } else {
        c
    }
}

/// Run `c` on basis state `input` (bit i on wire i) and require `want`.
fn check_basis(c: &Circuit, wires: usize, input: u64, want: u64, what: &str) -> Result<()> {
    let mut ket = Ket::new(wires, 0)?;
    for q in (0..wires).filter(|q| input >> q & 1 == 1) {
        ket.apply(&x(), &[q])?;
    }
    c.run(&mut ket)?;
    for q in 0..wires {
        let p = ket.prob_one(q)?;
        let expect = (want >> q & 1) as f64;
        if (p - expect).abs() > 1e-9 {
            return Err(Error::AssertionFailed(format!(
                "{what}: wire {q} has P(1)={p:.6}, expected {expect}"
            )));
        }
    }
    Ok(())
}
