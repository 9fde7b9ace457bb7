//! Circuit representation over the oscillator-qubit instruction set and circuit builders.
//!
//! Conventions:
//!
//! * `CD q r θ` is `|0><0| ⊗ e^{iθQ_r} + |1><1| ⊗ e^{-iθQ_r}`, i.e. `e^{iθ Z_q Q_r}`.
//! * `DISP r θ` is `e^{iθQ_r}`; `QPHASE [q] r θ` is `e^{iθ (Z_q) Q_r^2}`.
//! * `ROT [q] r θ` is the phase-space rotation `e^{-iθ (Z_q) n_r}`.
//! * `RX/RY/RZ q θ` is `e^{iθσ}`; `PAULI2 P q P' q' θ` is `e^{iθ P⊗P'}`.
//! * `PARITY a r...` flips qubit `a` when the register holds exactly the code-space parity.
//! * `MEASURE q b` measures `q` and heralds on outcome `b`; `RESET q` returns `q` to `|0>`.
//!
//! Electronic states use the inverted unary code: state `n` of `N` is the
//! bitstring with qubit `n` in `|0>` and every other qubit in `|1>`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gqsp::GqspProgram;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        })
    }
}

impl FromStr for Pauli {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            _ => Err(format!("unknown Pauli axis '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    Cd { qubit: usize, osc: usize, theta: f64 },
    Displace { osc: usize, theta: f64 },
    QuadPhase { control: Option<usize>, osc: usize, theta: f64 },
    Rotation { control: Option<usize>, osc: usize, theta: f64 },
    Rot { qubit: usize, axis: Pauli, angle: f64 },
    PauliExp2 { q0: usize, p0: Pauli, q1: usize, p1: Pauli, angle: f64 },
    ParityFlip { ancilla: usize, register: Vec<usize> },
    Measure { qubit: usize, herald: u8 },
    Reset { qubit: usize },
}

impl Instruction {
    fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Cd { qubit, .. } | Instruction::Rot { qubit, .. } => vec![*qubit],
            Instruction::Measure { qubit, .. } | Instruction::Reset { qubit } => vec![*qubit],
            Instruction::QuadPhase { control, .. } | Instruction::Rotation { control, .. } => control.iter().copied().collect(),
            Instruction::Displace { .. } => vec![],
            Instruction::PauliExp2 { q0, q1, .. } => vec![*q0, *q1],
            Instruction::ParityFlip { ancilla, register } => std::iter::once(*ancilla).chain(register.iter().copied()).collect(),
        }
    }

    fn oscillator(&self) -> Option<usize> {
        match self {
            Instruction::Cd { osc, .. }
            | Instruction::Displace { osc, .. }
            | Instruction::QuadPhase { osc, .. }
            | Instruction::Rotation { osc, .. } => Some(*osc),
            _ => None,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ctrl = |c: &Option<usize>| c.map(|q| format!("q{q} ")).unwrap_or_default();
        match self {
            Instruction::Cd { qubit, osc, theta } => write!(f, "CD q{qubit} osc{osc} {theta}"),
            Instruction::Displace { osc, theta } => write!(f, "DISP osc{osc} {theta}"),
            Instruction::QuadPhase { control, osc, theta } => write!(f, "QPHASE {}osc{osc} {theta}", ctrl(control)),
            Instruction::Rotation { control, osc, theta } => write!(f, "ROT {}osc{osc} {theta}", ctrl(control)),
            Instruction::Rot { qubit, axis, angle } => write!(f, "R{axis} q{qubit} {angle}"),
            Instruction::PauliExp2 { q0, p0, q1, p1, angle } => write!(f, "PAULI2 {p0} q{q0} {p1} q{q1} {angle}"),
            Instruction::ParityFlip { ancilla, register } => {
                write!(f, "PARITY q{ancilla}")?;
                register.iter().try_for_each(|q| write!(f, " q{q}"))
            }
            Instruction::Measure { qubit, herald } => write!(f, "MEASURE q{qubit} {herald}"),
            Instruction::Reset { qubit } => write!(f, "RESET q{qubit}"),
        }
    }
}

/// What the executor does with a heralded measurement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeraldPolicy {
    /// Project onto the heralded outcome and record its probability.
    #[default]
    Project,
    /// Sample the outcome; a wrong outcome aborts the run.
    Abort,
    /// Sample the outcome; a wrong outcome restarts the circuit from its input.
    Resample,
}

impl fmt::Display for HeraldPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeraldPolicy::Project => "project",
            HeraldPolicy::Abort => "abort",
            HeraldPolicy::Resample => "resample",
        })
    }
}

impl FromStr for HeraldPolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "project" => Ok(HeraldPolicy::Project),
            "abort" => Ok(HeraldPolicy::Abort),
            "resample" => Ok(HeraldPolicy::Resample),
            _ => Err(format!("unknown herald policy '{s}'")),
        }
    }
}

/// Instruction counts by kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub cd: usize,
    pub displace: usize,
    pub quad_phase: usize,
    pub rotation: usize,
    pub single_qubit: usize,
    pub two_qubit: usize,
    pub parity: usize,
    pub measure: usize,
    pub reset: usize,
}

impl GateCounts {
    fn add(&mut self, inst: &Instruction) {
        match inst {
            Instruction::Cd { .. } => self.cd += 1,
            Instruction::Displace { .. } => self.displace += 1,
            Instruction::QuadPhase { .. } => self.quad_phase += 1,
            Instruction::Rotation { .. } => self.rotation += 1,
            Instruction::Rot { .. } => self.single_qubit += 1,
            Instruction::PauliExp2 { .. } => self.two_qubit += 1,
            Instruction::ParityFlip { .. } => self.parity += 1,
            Instruction::Measure { .. } => self.measure += 1,
            Instruction::Reset { .. } => self.reset += 1,
        }
    }

    /// Oscillator queries: conditional and unconditional displacements.
    pub fn cd_queries(&self) -> usize {
        self.cd + self.displace
    }

    pub fn total(&self) -> usize {
        self.cd + self.displace + self.quad_phase + self.rotation + self.single_qubit + self.two_qubit + self.parity + self.measure + self.reset
    }
}

impl std::ops::Add for GateCounts {
    type Output = GateCounts;
    fn add(self, o: GateCounts) -> GateCounts {
        GateCounts {
            cd: self.cd + o.cd,
            displace: self.displace + o.displace,
            quad_phase: self.quad_phase + o.quad_phase,
            rotation: self.rotation + o.rotation,
            single_qubit: self.single_qubit + o.single_qubit,
            two_qubit: self.two_qubit + o.two_qubit,
            parity: self.parity + o.parity,
            measure: self.measure + o.measure,
            reset: self.reset + o.reset,
        }
    }
}

/// An immutable-once-built instruction list with running gate counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_oscillators: usize,
    pub herald_policy: HeraldPolicy,
    instructions: Vec<Instruction>,
    counts: GateCounts,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_oscillators: usize) -> Self {
        Self { n_qubits, n_oscillators, herald_policy: HeraldPolicy::default(), instructions: Vec::new(), counts: GateCounts::default() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_oscillators(&self) -> usize {
        self.n_oscillators
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Counts maintained while building.
    pub fn counts(&self) -> GateCounts {
        self.counts
    }

    /// Counts obtained by traversing the instruction list.
    pub fn recount(&self) -> GateCounts {
        let mut c = GateCounts::default();
        self.instructions.iter().for_each(|i| c.add(i));
        c
    }

    pub fn push(&mut self, inst: Instruction) -> Result<()> {
        let qs = inst.qubits();
        if let Some(q) = qs.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::Circuit(format!("qubit {q} out of range in '{inst}' ({} qubits)", self.n_qubits)));
        }
        let mut sorted = qs.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Circuit(format!("repeated qubit operand in '{inst}'")));
        }
        if let Some(r) = inst.oscillator().filter(|&r| r >= self.n_oscillators) {
            return Err(Error::Circuit(format!("oscillator {r} out of range in '{inst}' ({} oscillators)", self.n_oscillators)));
        }
        if let Instruction::Measure { herald, .. } = inst {
            if herald > 1 {
                return Err(Error::Circuit(format!("herald outcome must be 0 or 1, got {herald}")));
            }
        }
        let finite = match &inst {
            Instruction::Cd { theta, .. }
            | Instruction::Displace { theta, .. }
            | Instruction::QuadPhase { theta, .. }
            | Instruction::Rotation { theta, .. } => theta.is_finite(),
            Instruction::Rot { angle, .. } | Instruction::PauliExp2 { angle, .. } => angle.is_finite(),
            _ => true,
        };
        if !finite {
            return Err(Error::Circuit(format!("non-finite parameter in '{inst}'")));
        }
        self.counts.add(&inst);
        self.instructions.push(inst);
        Ok(())
    }

    /// Appends every instruction of `other`, which must fit this circuit's registers.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits || other.n_oscillators > self.n_oscillators {
            return Err(Error::Circuit("appended circuit has larger registers".into()));
        }
        self.instructions.reserve(other.len());
        for i in &other.instructions {
            self.push(i.clone())?;
        }
        Ok(())
    }

    /// Line-oriented text form; see [`Circuit::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\noscillators {}\nherald {}\n", self.n_qubits, self.n_oscillators, self.herald_policy);
        for i in &self.instructions {
            s.push_str(&i.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses the text form.
    ///
    /// ```text
    /// qubits 3
    /// oscillators 1
    /// herald project
    /// CD q0 osc0 0.19635
    /// RX q1 0.5
    /// MEASURE q2 0
    /// ```
    ///
    /// Blank lines and `#` comments are ignored. The header lines must precede
    /// every instruction.
    pub fn parse(text: &str) -> Result<Circuit> {
        let mut n_qubits = None;
        let mut n_osc = None;
        let mut policy = HeraldPolicy::default();
        let mut circuit: Option<Circuit> = None;
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let head = toks[0];
            if circuit.is_none() {
                match head {
                    "qubits" | "oscillators" | "herald" => {
                        let v = toks.get(1).ok_or_else(|| err(format!("'{head}' needs a value")))?;
                        match head {
                            "qubits" => n_qubits = Some(v.parse::<usize>().map_err(|e| err(e.to_string()))?),
                            "oscillators" => n_osc = Some(v.parse::<usize>().map_err(|e| err(e.to_string()))?),
                            _ => policy = v.parse().map_err(err)?,
                        }
                        continue;
                    }
                    _ => {
                        let (q, o) = n_qubits.zip(n_osc).ok_or_else(|| err("missing 'qubits' or 'oscillators' header".into()))?;
                        let mut c = Circuit::new(q, o);
                        c.herald_policy = policy;
                        circuit = Some(c);
                    }
                }
            }
            let inst = parse_instruction(&toks).map_err(err)?;
            let c = circuit.as_mut().expect("circuit initialised above");
            c.push(inst).map_err(|e| err(e.to_string()))?;
        }
        match circuit {
            Some(c) => Ok(c),
            None => {
                let (q, o) = n_qubits.zip(n_osc).ok_or_else(|| Error::Parse { line: 0, message: "missing header".into() })?;
                let mut c = Circuit::new(q, o);
                c.herald_policy = policy;
                Ok(c)
            }
        }
    }
}

fn operand(tok: &str, prefix: &str) -> std::result::Result<usize, String> {
    tok.strip_prefix(prefix).and_then(|s| s.parse().ok()).ok_or_else(|| format!("expected operand '{prefix}<index>', got '{tok}'"))
}

fn number(tok: &str) -> std::result::Result<f64, String> {
    tok.parse().map_err(|_| format!("expected a number, got '{tok}'"))
}

fn parse_instruction(t: &[&str]) -> std::result::Result<Instruction, String> {
    let arity = |n: usize| if t.len() == n { Ok(()) } else { Err(format!("'{}' takes {} operands", t[0], n - 1)) };
    let controlled = || -> std::result::Result<(Option<usize>, usize, f64), String> {
        match t.len() {
            3 => Ok((None, operand(t[1], "osc")?, number(t[2])?)),
            4 => Ok((Some(operand(t[1], "q")?), operand(t[2], "osc")?, number(t[3])?)),
            _ => Err(format!("'{}' takes [q<i>] osc<r> <angle>", t[0])),
        }
    };
    Ok(match t[0] {
        "CD" => {
            arity(4)?;
            Instruction::Cd { qubit: operand(t[1], "q")?, osc: operand(t[2], "osc")?, theta: number(t[3])? }
        }
        "DISP" => {
            arity(3)?;
            Instruction::Displace { osc: operand(t[1], "osc")?, theta: number(t[2])? }
        }
        "QPHASE" => {
            let (control, osc, theta) = controlled()?;
            Instruction::QuadPhase { control, osc, theta }
        }
        "ROT" => {
            let (control, osc, theta) = controlled()?;
            Instruction::Rotation { control, osc, theta }
        }
        "RX" | "RY" | "RZ" => {
            arity(3)?;
            let axis = t[0][1..].parse()?;
            Instruction::Rot { qubit: operand(t[1], "q")?, axis, angle: number(t[2])? }
        }
        "PAULI2" => {
            arity(6)?;
            Instruction::PauliExp2 { p0: t[1].parse()?, q0: operand(t[2], "q")?, p1: t[3].parse()?, q1: operand(t[4], "q")?, angle: number(t[5])? }
        }
        "PARITY" => {
            if t.len() < 3 {
                return Err("'PARITY' takes an ancilla and at least one register qubit".into());
            }
            Instruction::ParityFlip {
                ancilla: operand(t[1], "q")?,
                register: t[2..].iter().map(|s| operand(s, "q")).collect::<std::result::Result<_, _>>()?,
            }
        }
        "MEASURE" => {
            arity(3)?;
            let herald = t[2].parse::<u8>().map_err(|_| format!("herald outcome must be 0 or 1, got '{}'", t[2]))?;
            Instruction::Measure { qubit: operand(t[1], "q")?, herald }
        }
        "RESET" => {
            arity(2)?;
            Instruction::Reset { qubit: operand(t[1], "q")? }
        }
        other => return Err(format!("unknown instruction '{other}'")),
    })
}

/// Inverted unary code for `n` electronic states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnaryCode {
    n: usize,
}

impl UnaryCode {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::InvalidConfig(format!("unary code needs 1 to 20 states, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    /// Bits of the codeword for `state`, qubit 0 first.
    pub fn codeword(&self, state: usize) -> Vec<u8> {
        (0..self.n).map(|q| u8::from(q != state)).collect()
    }

    /// Codeword packed with qubit 0 as the most significant bit.
    pub fn bits(&self, state: usize) -> usize {
        let all = (1 << self.n) - 1;
        all & !(1 << (self.n - 1 - state))
    }

    /// State encoded by `bits`, if it is a codeword.
    pub fn decode(&self, bits: usize) -> Option<usize> {
        let zeros = !bits & ((1 << self.n) - 1);
        (zeros.count_ones() == 1).then(|| self.n - 1 - zeros.trailing_zeros() as usize)
    }
}

/// Qubit assignment for a compiled model: unary register then one ancilla.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Registers {
    pub electronic: Vec<usize>,
    pub ancilla: usize,
}

impl Registers {
    /// Qubits `0..n` hold the unary register and qubit `n` the ancilla.
    pub fn standard(code: &UnaryCode) -> Self {
        Self { electronic: (0..code.n_states()).collect(), ancilla: code.n_states() }
    }

    pub fn n_qubits(&self) -> usize {
        self.electronic.iter().copied().chain([self.ancilla]).max().map_or(0, |m| m + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalKind {
    /// `diag(U, I)` on the main qubit.
    A,
    /// `diag(I, U†)` on the main qubit.
    B,
}

/// The first half of a signal operator: a CD on a `|0>` ancilla, or a plain displacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Helper {
    Ancilla(usize),
    Free,
}

/// Appends the two-gate signal operator with `U = exp(i pi Q / L)`.
pub fn append_signal_operator(c: &mut Circuit, kind: SignalKind, helper: Helper, main: usize, osc: usize, half_period: f64) -> Result<()> {
    let t = std::f64::consts::PI / (2.0 * half_period);
    let h = match kind {
        SignalKind::A => t,
        SignalKind::B => -t,
    };
    match helper {
        Helper::Ancilla(a) => c.push(Instruction::Cd { qubit: a, osc, theta: h })?,
        Helper::Free => c.push(Instruction::Displace { osc, theta: h })?,
    }
    c.push(Instruction::Cd { qubit: main, osc, theta: t })
}

/// Signal operator on `(main, ancilla)` and one oscillator.
pub fn signal_operator_circuit(half_period: f64, kind: SignalKind, main: usize, ancilla: usize, osc: usize) -> Result<Circuit> {
    let mut c = Circuit::new(main.max(ancilla) + 1, osc + 1);
    append_signal_operator(&mut c, kind, Helper::Ancilla(ancilla), main, osc, half_period)?;
    Ok(c)
}

/// Appends the OQ-GQSP sequence of `program` in time order.
///
/// The operator product `e^{iλZ} R_{-d} (B R_{-d+1}) ... (B R_0) (A R_1) ... (A R_d)`
/// is emitted right to left, each `R_j = e^{iφ_j X} e^{iθ_j Z}` as `RZ` then `RX`.
pub fn append_gqsp(c: &mut Circuit, program: &GqspProgram, main: usize, helper: Helper, osc: usize) -> Result<()> {
    program.validate()?;
    let d = program.d as i64;
    let l = program.half_period;
    let rot = |c: &mut Circuit, j: i64| -> Result<()> {
        c.push(Instruction::Rot { qubit: main, axis: Pauli::Z, angle: program.theta_at(j) })?;
        c.push(Instruction::Rot { qubit: main, axis: Pauli::X, angle: program.phi_at(j) })
    };
    for j in (1..=d).rev() {
        rot(c, j)?;
        append_signal_operator(c, SignalKind::A, helper, main, osc, l)?;
    }
    for j in (-d + 1..=0).rev() {
        rot(c, j)?;
        append_signal_operator(c, SignalKind::B, helper, main, osc, l)?;
    }
    rot(c, -d)?;
    c.push(Instruction::Rot { qubit: main, axis: Pauli::Z, angle: program.lambda })
}

/// Stand-alone OQ-GQSP circuit on `(main, ancilla)` and oscillator `osc`.
pub fn gqsp_circuit(program: &GqspProgram, main: usize, ancilla: usize, osc: usize) -> Result<Circuit> {
    let mut c = Circuit::new(main.max(ancilla) + 1, osc + 1);
    append_gqsp(&mut c, program, main, Helper::Ancilla(ancilla), osc)?;
    Ok(c)
}

/// Appends the heralded state-dependent gate: state `n` receives `F(U)^2` on `osc`,
/// every other unary state `F(U)† F(U)`.
///
/// `program` should realize the half-step series so that `F^2` is the intended phase.
pub fn append_state_dependent_gate(c: &mut Circuit, program: &GqspProgram, n: usize, code: &UnaryCode, regs: &Registers, osc: usize) -> Result<()> {
    if n >= code.n_states() || regs.electronic.len() != code.n_states() {
        return Err(Error::Circuit(format!("state {n} is not in a {}-state register", regs.electronic.len())));
    }
    let a = regs.ancilla;
    append_gqsp(c, program, a, Helper::Free, osc)?;
    c.push(Instruction::Measure { qubit: a, herald: 0 })?;
    append_gqsp(c, program, regs.electronic[n], Helper::Ancilla(a), osc)?;
    c.push(Instruction::ParityFlip { ancilla: a, register: regs.electronic.clone() })?;
    c.push(Instruction::Measure { qubit: a, herald: 1 })?;
    c.push(Instruction::Reset { qubit: a })
}

pub fn state_dependent_gate(program: &GqspProgram, n: usize, code: &UnaryCode, regs: &Registers, osc: usize) -> Result<Circuit> {
    let mut c = Circuit::new(regs.n_qubits(), osc + 1);
    append_state_dependent_gate(&mut c, program, n, code, regs, osc)?;
    Ok(c)
}

/// Order of the two commuting Pauli factors in an MCD coupling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairOrder {
    #[default]
    XxFirst,
    YyFirst,
}

/// Appends `exp(i θ (|n><m| + |m><n|) ⊗ Q_osc)` on the unary register.
///
/// On the register `|n><m| + h.c. = (X_n X_m + Y_n Y_m)/2`, so the exponential splits
/// into `e^{iθ/2 XXQ} e^{iθ/2 YYQ}`. Each factor is a CD on qubit `m` conjugated
/// by Cliffords that map `Z_m` to `P_n P_m`.
pub fn append_mcd_coupling(c: &mut Circuit, n: usize, m: usize, osc: usize, theta: f64, regs: &Registers, order: PairOrder) -> Result<()> {
    if n == m || n >= regs.electronic.len() || m >= regs.electronic.len() {
        return Err(Error::Circuit(format!("invalid coupling pair ({n}, {m})")));
    }
    let (qn, qm) = (regs.electronic[n], regs.electronic[m]);
    let quarter = std::f64::consts::FRAC_PI_4;
    let factor = |c: &mut Circuit, p: Pauli| -> Result<()> {
        let w = |angle| Instruction::PauliExp2 { q0: qn, p0: p, q1: qm, p1: Pauli::Z, angle };
        let v = |angle| Instruction::Rot { qubit: qm, axis: p, angle };
        c.push(w(quarter))?;
        c.push(v(quarter))?;
        c.push(Instruction::Cd { qubit: qm, osc, theta: 0.5 * theta })?;
        c.push(v(-quarter))?;
        c.push(w(-quarter))
    };
    match order {
        PairOrder::XxFirst => {
            factor(c, Pauli::X)?;
            factor(c, Pauli::Y)
        }
        PairOrder::YyFirst => {
            factor(c, Pauli::Y)?;
            factor(c, Pauli::X)
        }
    }
}

pub fn mcd_coupling_circuit(n: usize, m: usize, osc: usize, theta: f64, code: &UnaryCode, n_osc: usize) -> Result<Circuit> {
    let regs = Registers::standard(code);
    let mut c = Circuit::new(regs.n_qubits(), n_osc.max(osc + 1));
    append_mcd_coupling(&mut c, n, m, osc, theta, &regs, PairOrder::default())?;
    Ok(c)
}

/// Appends `exp(i φ |n><n| ⊗ Q)` as a displacement and a CD.
pub fn append_linear_term(c: &mut Circuit, n: usize, osc: usize, phi: f64, regs: &Registers) -> Result<()> {
    c.push(Instruction::Displace { osc, theta: 0.5 * phi })?;
    c.push(Instruction::Cd { qubit: regs.electronic[n], osc, theta: 0.5 * phi })
}

/// Appends `exp(i φ |n><n| ⊗ Q^2)` as an unconditional and a controlled quadratic phase.
pub fn append_quadratic_term(c: &mut Circuit, n: usize, osc: usize, phi: f64, regs: &Registers) -> Result<()> {
    c.push(Instruction::QuadPhase { control: None, osc, theta: 0.5 * phi })?;
    c.push(Instruction::QuadPhase { control: Some(regs.electronic[n]), osc, theta: 0.5 * phi })
}

/// Appends `exp(i φ |n><n|)` up to a global phase.
pub fn append_energy_term(c: &mut Circuit, n: usize, phi: f64, regs: &Registers) -> Result<()> {
    c.push(Instruction::Rot { qubit: regs.electronic[n], axis: Pauli::Z, angle: 0.5 * phi })
}

/// Appends the harmonic evolution `exp(-i θ n_osc)`.
pub fn append_harmonic(c: &mut Circuit, osc: usize, theta: f64) -> Result<()> {
    c.push(Instruction::Rotation { control: None, osc, theta })
}
