//! State-vector executor for [`Circuit`]s.
//!
//! Each oscillator is kept in either the Fock basis or the eigenbasis of its
//! truncated `Q`, switching lazily: position-diagonal gates (CD, displacement,
//! quadratic phase) act in the position basis and phase-space rotations in
//! the Fock basis. Every gate is therefore applied as an exact function of
//! the truncated operators.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compiler::{Circuit, HeraldPolicy, Instruction, Pauli};
use crate::fock::{FockConfig, HybridLayout, HybridState, PositionBasis};
use crate::{Error, Exec, RMatrix, Result, C64};

/// Upper bound on circuit restarts under [`HeraldPolicy::Resample`].
pub const MAX_RESTARTS: usize = 100_000;

/// Outcome of one heralded measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeraldRecord {
    /// Instruction index within the circuit.
    pub step: usize,
    pub qubit: usize,
    pub outcome: u8,
    /// Probability of the heralded outcome before the measurement.
    pub probability: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeraldLog {
    pub records: Vec<HeraldRecord>,
    /// Number of restarts under the resample policy.
    pub restarts: usize,
}

impl HeraldLog {
    /// Product of the heralded-outcome probabilities.
    pub fn success_probability(&self) -> f64 {
        self.records.iter().map(|r| r.probability).product()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,outcome,probability")?;
        for r in &self.records {
            writeln!(out, "{},{},{:.12e}", r.step, r.outcome, r.probability)?;
        }
        Ok(())
    }
}

/// Per-shot generator derived from a root seed: stream `shot` of `ChaCha8(root)`.
pub fn shot_rng(root: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(shot);
    rng
}

/// Executor with cached position-basis data for one oscillator dimension.
#[derive(Clone, Debug)]
pub struct Simulator {
    dim: usize,
    nodes: Vec<f64>,
    vectors: RMatrix,
    vectors_t: RMatrix,
    exec: Exec,
}

struct Work<'a> {
    amps: &'a mut [C64],
    layout: HybridLayout,
    in_position: Vec<bool>,
}

impl Simulator {
    pub fn new(dim: usize, exec: Exec) -> Result<Self> {
        let basis = PositionBasis::new(FockConfig::new(dim)?);
        let vectors = basis.vectors().clone();
        Ok(Self { dim, nodes: basis.nodes().to_vec(), vectors_t: vectors.transpose(), vectors, exec })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Runs `circuit` on `state` in place.
    pub fn run(&self, circuit: &Circuit, state: &mut HybridState, rng: &mut ChaCha8Rng) -> Result<HeraldLog> {
        let layout = state.layout();
        if layout.dim != self.dim || layout.n_qubits != circuit.n_qubits() || layout.n_osc != circuit.n_oscillators() {
            return Err(Error::DimensionMismatch(format!(
                "circuit ({} qubits, {} oscillators) and state ({} qubits, {} oscillators, dim {}) disagree with executor dim {}",
                circuit.n_qubits(),
                circuit.n_oscillators(),
                layout.n_qubits,
                layout.n_osc,
                layout.dim,
                self.dim
            )));
        }
        let input = match circuit.herald_policy {
            HeraldPolicy::Resample => Some(state.amplitudes().clone()),
            _ => None,
        };
        let mut restarts = 0;
        loop {
            let mut work = Work { amps: state.amplitudes_mut().as_mut_slice(), layout, in_position: vec![false; layout.n_osc] };
            let result = self.execute(circuit, &mut work, rng);
            self.to_fock(&mut work);
            match result {
                Ok(records) => {
                    if work.amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                        return Err(Error::Circuit("non-finite amplitude".into()));
                    }
                    return Ok(HeraldLog { records, restarts });
                }
                Err(Error::HeraldAbort { step, probability }) if circuit.herald_policy == HeraldPolicy::Resample => {
                    restarts += 1;
                    if restarts > MAX_RESTARTS {
                        return Err(Error::HeraldAbort { step, probability });
                    }
                    state.amplitudes_mut().copy_from(input.as_ref().expect("input kept for resampling"));
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn execute(&self, circuit: &Circuit, w: &mut Work<'_>, rng: &mut ChaCha8Rng) -> Result<Vec<HeraldRecord>> {
        let mut records = Vec::new();
        for (step, inst) in circuit.instructions().iter().enumerate() {
            match inst {
                Instruction::Cd { qubit, osc, theta } => {
                    let t = *theta;
                    self.position_phase(w, *osc, Some(*qubit), move |x| t * x);
                }
                Instruction::Displace { osc, theta } => {
                    let t = *theta;
                    self.position_phase(w, *osc, None, move |x| t * x);
                }
                Instruction::QuadPhase { control, osc, theta } => {
                    let t = *theta;
                    self.position_phase(w, *osc, *control, move |x| t * x * x);
                }
                Instruction::Rotation { control, osc, theta } => self.rotation(w, *osc, *control, *theta),
                Instruction::Rot { qubit, axis, angle } => apply_rot(w, *qubit, *axis, *angle),
                Instruction::PauliExp2 { q0, p0, q1, p1, angle } => apply_pauli2(w, (*q0, *p0), (*q1, *p1), *angle),
                Instruction::ParityFlip { ancilla, register } => apply_parity(w, *ancilla, register),
                Instruction::Measure { qubit, herald } => {
                    let rec = measure(w, step, *qubit, *herald, circuit.herald_policy, rng)?;
                    records.push(rec);
                }
                Instruction::Reset { qubit } => reset(w, step, *qubit)?,
            }
        }
        Ok(records)
    }

    fn transform(&self, w: &mut Work<'_>, r: usize, to_position: bool) {
        if w.in_position[r] == to_position {
            return;
        }
        w.in_position[r] = to_position;
        let m = if to_position { &self.vectors_t } else { &self.vectors };
        let d = self.dim;
        let stride = w.layout.osc_stride(r);
        let block = d * stride;
        self.exec.for_each_chunk(w.amps, block, |_, chunk| {
            let mut buf = vec![C64::new(0.0, 0.0); d];
            for inner in 0..stride {
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = chunk[k * stride + inner];
                }
                for i in 0..d {
                    let row = m.row(i);
                    let mut s = C64::new(0.0, 0.0);
                    for (k, b) in buf.iter().enumerate() {
                        s += b * row[k];
                    }
                    chunk[i * stride + inner] = s;
                }
            }
        });
    }

    fn to_fock(&self, w: &mut Work<'_>) {
        for r in 0..w.layout.n_osc {
            self.transform(w, r, false);
        }
    }

    /// Multiplies by `exp(i z g(x))` with `z = ±1` from the control qubit (or 1 without one).
    fn position_phase<G: Fn(f64) -> f64>(&self, w: &mut Work<'_>, r: usize, control: Option<usize>, g: G) {
        self.transform(w, r, true);
        let plus: Vec<C64> = self.nodes.iter().map(|&x| C64::from_polar(1.0, g(x))).collect();
        let minus: Vec<C64> = plus.iter().map(|z| z.conj()).collect();
        self.diagonal(w, r, control, &plus, &minus);
    }

    fn rotation(&self, w: &mut Work<'_>, r: usize, control: Option<usize>, theta: f64) {
        self.transform(w, r, false);
        let plus: Vec<C64> = (0..self.dim).map(|n| C64::from_polar(1.0, -theta * n as f64)).collect();
        let minus: Vec<C64> = plus.iter().map(|z| z.conj()).collect();
        self.diagonal(w, r, control, &plus, &minus);
    }

    fn diagonal(&self, w: &mut Work<'_>, r: usize, control: Option<usize>, plus: &[C64], minus: &[C64]) {
        let layout = w.layout;
        let stride = layout.osc_stride(r);
        let d = self.dim;
        let mask = control.map(|q| layout.qubit_mask(q));
        self.exec.for_each_chunk(w.amps, layout.osc_len(), |qbits, chunk| {
            let table = match mask {
                Some(m) if qbits & m != 0 => minus,
                _ => plus,
            };
            for (i, z) in chunk.iter_mut().enumerate() {
                *z *= table[(i / stride) % d];
            }
        });
    }
}

fn blocks(w: &Work<'_>) -> (usize, usize) {
    (1 << w.layout.n_qubits, w.layout.osc_len())
}

fn apply_rot(w: &mut Work<'_>, q: usize, axis: Pauli, angle: f64) {
    let (c, s) = (angle.cos(), angle.sin());
    let zero = C64::new(0.0, 0.0);
    let is = C64::new(0.0, s);
    // e^{iθσ} = cos θ I + i sin θ σ
    let u = match axis {
        Pauli::X => [[C64::from(c), is], [is, C64::from(c)]],
        Pauli::Y => [[C64::from(c), C64::from(s)], [C64::from(-s), C64::from(c)]],
        Pauli::Z => [[C64::new(c, s), zero], [zero, C64::new(c, -s)]],
    };
    let (nb, ol) = blocks(w);
    let mask = w.layout.qubit_mask(q);
    for b0 in (0..nb).filter(|b| b & mask == 0) {
        let b1 = b0 | mask;
        for i in 0..ol {
            let (x, y) = (w.amps[b0 * ol + i], w.amps[b1 * ol + i]);
            w.amps[b0 * ol + i] = u[0][0] * x + u[0][1] * y;
            w.amps[b1 * ol + i] = u[1][0] * x + u[1][1] * y;
        }
    }
}

/// Action of a Pauli on computational bit `bit`: (flips, phase).
fn pauli_action(p: Pauli, bit: bool) -> (bool, C64) {
    match (p, bit) {
        (Pauli::X, _) => (true, C64::from(1.0)),
        (Pauli::Y, false) => (true, C64::new(0.0, 1.0)),
        (Pauli::Y, true) => (true, C64::new(0.0, -1.0)),
        (Pauli::Z, false) => (false, C64::from(1.0)),
        (Pauli::Z, true) => (false, C64::from(-1.0)),
    }
}

fn apply_pauli2(w: &mut Work<'_>, a: (usize, Pauli), b: (usize, Pauli), angle: f64) {
    let (nb, ol) = blocks(w);
    let (ma, mb) = (w.layout.qubit_mask(a.0), w.layout.qubit_mask(b.0));
    let old = w.amps.to_vec();
    let c = C64::from(angle.cos());
    let is = C64::new(0.0, angle.sin());
    w.amps.iter_mut().for_each(|z| *z *= c);
    for qb in 0..nb {
        let (fa, pa) = pauli_action(a.1, qb & ma != 0);
        let (fb, pb) = pauli_action(b.1, qb & mb != 0);
        let mut target = qb;
        if fa {
            target ^= ma;
        }
        if fb {
            target ^= mb;
        }
        let f = is * pa * pb;
        for i in 0..ol {
            w.amps[target * ol + i] += f * old[qb * ol + i];
        }
    }
}

fn apply_parity(w: &mut Work<'_>, ancilla: usize, register: &[usize]) {
    let (nb, ol) = blocks(w);
    let am = w.layout.qubit_mask(ancilla);
    let rmask: usize = register.iter().map(|&q| w.layout.qubit_mask(q)).sum();
    let want = (register.len() - 1) % 2;
    for b0 in (0..nb).filter(|b| b & am == 0) {
        if (b0 & rmask).count_ones() as usize % 2 == want {
            let b1 = b0 | am;
            for i in 0..ol {
                w.amps.swap(b0 * ol + i, b1 * ol + i);
            }
        }
    }
}

fn bit_probability(w: &Work<'_>, q: usize, value: u8) -> f64 {
    let (nb, ol) = blocks(w);
    let m = w.layout.qubit_mask(q);
    (0..nb).filter(|b| u8::from(b & m != 0) == value).map(|b| w.amps[b * ol..(b + 1) * ol].iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
}

fn measure(w: &mut Work<'_>, step: usize, q: usize, herald: u8, policy: HeraldPolicy, rng: &mut ChaCha8Rng) -> Result<HeraldRecord> {
    let total: f64 = w.amps.iter().map(|z| z.norm_sqr()).sum();
    let p = bit_probability(w, q, herald) / total;
    match policy {
        HeraldPolicy::Project => {
            if !(p > 1e-300) {
                return Err(Error::ZeroProbabilityBranch { step });
            }
        }
        HeraldPolicy::Abort | HeraldPolicy::Resample => {
            let u: f64 = rng.random();
            if u >= p {
                return Err(Error::HeraldAbort { step, probability: p });
            }
        }
    }
    let (nb, ol) = blocks(w);
    let m = w.layout.qubit_mask(q);
    let scale = 1.0 / (p * total).sqrt();
    for b in 0..nb {
        let keep = u8::from(b & m != 0) == herald;
        for z in &mut w.amps[b * ol..(b + 1) * ol] {
            *z = if keep { *z * scale } else { C64::new(0.0, 0.0) };
        }
    }
    Ok(HeraldRecord { step, qubit: q, outcome: herald, probability: p })
}

fn reset(w: &mut Work<'_>, step: usize, q: usize) -> Result<()> {
    let total: f64 = w.amps.iter().map(|z| z.norm_sqr()).sum();
    let p1 = bit_probability(w, q, 1) / total;
    if p1 <= 1e-12 {
        return Ok(());
    }
    if p1 < 1.0 - 1e-12 {
        return Err(Error::Circuit(format!("reset at instruction {step} on qubit {q} that is not in a basis state (P(1) = {p1:.3e})")));
    }
    let (nb, ol) = blocks(w);
    let m = w.layout.qubit_mask(q);
    for b0 in (0..nb).filter(|b| b & m == 0) {
        let b1 = b0 | m;
        for i in 0..ol {
            w.amps.swap(b0 * ol + i, b1 * ol + i);
        }
    }
    Ok(())
}

/// Runs `circuit` on a copy of `input` with generator stream 0 of `seed`.
pub fn simulate(circuit: &Circuit, input: &HybridState, seed: u64) -> Result<(HybridState, HeraldLog)> {
    let sim = Simulator::new(input.layout().dim, Exec::default())?;
    let mut state = input.clone();
    let log = sim.run(circuit, &mut state, &mut shot_rng(seed, 0))?;
    Ok((state, log))
}
