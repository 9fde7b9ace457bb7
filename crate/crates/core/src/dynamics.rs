//! Trotterized vibronic dynamics: compiled circuits versus matrix oracles.
//!
//! One first-order layer of length `Δt` applies, in this order:
//!
//! 1. the state energies `E_n`;
//! 2. per mode `r` (in model order): the harmonic term `ω_r (n_r + 1/2)`, then the
//!    diagonal function `f_r^(n)` of every state `n` (in model order);
//! 3. the off-diagonal couplings, mode-major and then lexicographic in `(n, m)`.
//!
//! The compiled path and the Trotterized oracle share this order, so their
//! difference isolates the Fourier and GQSP synthesis error.

use std::fmt::Write as _;
use std::io::Write;

use crate::compiler::{
    append_energy_term, append_harmonic, append_linear_term, append_mcd_coupling, append_quadratic_term, append_state_dependent_gate, Circuit,
    HeraldPolicy, PairOrder, Registers, UnaryCode,
};
use crate::fock::{displaced_vacuum, FockConfig, HybridLayout, HybridState, PositionBasis};
use crate::fourier::{certify_tail_against, fourier_coefficients_with, minimal_degree, PhaseTarget, DEFAULT_HALF_PERIOD};
use crate::gqsp::{complete, find_angles_with_period, CompletionOptions, GqspProgram, Provenance};
use crate::linalg::sorted_symmetric_eigen;
use crate::poly::LaurentPoly;
use crate::simulator::{shot_rng, Simulator};
use crate::units::HBAR_EV_FS;
use crate::vibronic::{assemble_matrix, commutator_bound, mode_matvec, Coupling, VibronicModel};
use crate::{CVector, Error, Exec, RMatrix, Result, C64};

/// Largest layer count accepted from the automatic planner.
pub const MAX_LAYERS: usize = 100_000_000;

/// Layer count and error budgets for a product-formula run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrotterPlan {
    /// Total time in fs.
    pub t_total: f64,
    pub p: usize,
    /// Layer length in fs.
    pub dt: f64,
    pub eps_trotter: f64,
    pub eps_fourier: f64,
    /// Commutator bound in eV^2, when it was computed.
    pub gamma: Option<f64>,
    /// True when `p` was fixed by hand instead of by the bound.
    pub manual: bool,
}

fn check_budget(t_total: f64, epsilon: f64) -> Result<()> {
    if !(t_total > 0.0 && t_total.is_finite()) {
        return Err(Error::InvalidConfig(format!("total time must be positive, got {t_total}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Plan from a known commutator bound: `p = ceil(Γ t^2 / (ħ^2 ε_Trot))`, `ε_Trot = ε/2`.
pub fn plan_with_gamma(t_total: f64, epsilon: f64, gamma: f64) -> Result<TrotterPlan> {
    check_budget(t_total, epsilon)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("commutator bound must be finite and non-negative, got {gamma}")));
    }
    let eps_trotter = 0.5 * epsilon;
    let raw = (gamma * t_total * t_total / (HBAR_EV_FS * HBAR_EV_FS * eps_trotter)).ceil();
    if raw > MAX_LAYERS as f64 {
        return Err(Error::InvalidConfig(format!("the bound asks for {raw:e} layers, more than {MAX_LAYERS}")));
    }
    let p = (raw as usize).max(1);
    Ok(TrotterPlan { t_total, p, dt: t_total / p as f64, eps_trotter, eps_fourier: epsilon - eps_trotter, gamma: Some(gamma), manual: false })
}

/// Plan with `Γ` computed on the truncated space.
pub fn plan(model: &VibronicModel, cfg: FockConfig, t_total: f64, epsilon: f64) -> Result<TrotterPlan> {
    check_budget(t_total, epsilon)?;
    plan_with_gamma(t_total, epsilon, commutator_bound(model, cfg)?)
}

/// Plan with a fixed layer count.
pub fn manual_plan(t_total: f64, p: usize, epsilon: f64) -> Result<TrotterPlan> {
    check_budget(t_total, epsilon)?;
    if p == 0 {
        return Err(Error::InvalidConfig("layer count must be at least 1".into()));
    }
    let eps_trotter = 0.5 * epsilon;
    Ok(TrotterPlan { t_total, p, dt: t_total / p as f64, eps_trotter, eps_fourier: epsilon - eps_trotter, gamma: None, manual: true })
}

/// Oscillator states: vacuum everywhere, displaced in `Q` by the given amount on selected modes.
pub fn initial_oscillators(model: &VibronicModel, cfg: FockConfig, displacements: &[(usize, f64)]) -> Result<Vec<CVector>> {
    let mut out = vec![displaced_vacuum(cfg, 0.0, 0.0); model.n_modes()];
    for &(r, q) in displacements {
        if r >= model.n_modes() {
            return Err(Error::InvalidConfig(format!("mode index {r} out of range")));
        }
        out[r] = displaced_vacuum(cfg, q, 0.0);
    }
    Ok(out)
}

/// Product state `|state> ⊗ ψ_0 ⊗ ... ⊗ ψ_{M-1}` in the physical electronic basis.
pub fn physical_state(model: &VibronicModel, state: usize, oscillators: &[CVector]) -> Result<CVector> {
    if state >= model.n_states() || oscillators.len() != model.n_modes() {
        return Err(Error::DimensionMismatch("initial state does not match the model".into()));
    }
    let osc = oscillators.iter().skip(1).fold(oscillators[0].clone(), |acc, v| acc.kronecker(v));
    let mut out = CVector::zeros(model.n_states() * osc.len());
    out.rows_mut(state * osc.len(), osc.len()).copy_from(&osc);
    Ok(out)
}

/// The same product state on the unary register with the ancilla in `|0>`.
pub fn encoded_state(model: &VibronicModel, state: usize, oscillators: &[CVector]) -> Result<HybridState> {
    let code = UnaryCode::new(model.n_states())?;
    if state >= model.n_states() || oscillators.len() != model.n_modes() {
        return Err(Error::DimensionMismatch("initial state does not match the model".into()));
    }
    let regs = Registers::standard(&code);
    let layout = HybridLayout::new(regs.n_qubits(), model.n_modes(), oscillators[0].len())?;
    let mut bits = code.codeword(state);
    bits.push(0);
    HybridState::product(layout, &bits, oscillators)
}

/// Electronic populations and cumulative herald probability on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTrace {
    pub states: Vec<String>,
    /// Times in fs.
    pub times: Vec<f64>,
    /// `populations[k][n]` at `times[k]`.
    pub populations: Vec<Vec<f64>>,
    /// Product of herald probabilities up to `times[k]`.
    pub herald: Vec<f64>,
}

impl PopulationTrace {
    /// `max_k |Σ_n P_n(t_k) - 1|`.
    pub fn normalization_defect(&self) -> f64 {
        self.populations.iter().map(|p| (p.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Writes `t_fs,P0,...,herald_cumulative` rows after a comment naming the states.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# states: {}", self.states.join(","))?;
        let cols: Vec<String> = (0..self.states.len()).map(|n| format!("P{n}")).collect();
        writeln!(out, "t_fs,{},herald_cumulative", cols.join(","))?;
        for (k, t) in self.times.iter().enumerate() {
            let ps: Vec<String> = self.populations[k].iter().map(|p| format!("{p:.12e}")).collect();
            writeln!(out, "{t:.6},{},{:.12e}", ps.join(","), self.herald[k])?;
        }
        Ok(())
    }
}

/// Deviation between two traces on the same grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub per_state_max: Vec<f64>,
    /// Root-mean-square deviation over the time grid.
    pub per_state_rms: Vec<f64>,
    pub max_deviation: f64,
}

impl ComparisonReport {
    pub fn to_text(&self, states: &[String]) -> String {
        let mut s = String::from("state  max_dev       rms_dev\n");
        for (n, name) in states.iter().enumerate() {
            let _ = writeln!(s, "{name:<6} {:.6e}  {:.6e}", self.per_state_max[n], self.per_state_rms[n]);
        }
        let _ = writeln!(s, "overall max deviation: {:.6e}", self.max_deviation);
        s
    }
}

pub fn compare(a: &PopulationTrace, b: &PopulationTrace) -> Result<ComparisonReport> {
    let same_grid = a.times.len() == b.times.len() && a.times.iter().zip(&b.times).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0));
    if !same_grid || a.states.len() != b.states.len() {
        return Err(Error::DimensionMismatch("traces have different time grids or state counts".into()));
    }
    let n = a.states.len();
    let mut max = vec![0.0f64; n];
    let mut sq = vec![0.0f64; n];
    for (pa, pb) in a.populations.iter().zip(&b.populations) {
        for s in 0..n {
            let d = (pa[s] - pb[s]).abs();
            max[s] = max[s].max(d);
            sq[s] += d * d;
        }
    }
    let rms = sq.iter().map(|v| (v / a.times.len().max(1) as f64).sqrt()).collect();
    let overall = max.iter().cloned().fold(0.0, f64::max);
    Ok(ComparisonReport { per_state_max: max, per_state_rms: rms, max_deviation: overall })
}

/// Settings for synthesizing the anharmonic phase gates.
#[derive(Clone, Debug)]
pub struct SynthesisOptions {
    pub half_period: f64,
    /// Sup-norm target for each half-step Fourier series.
    pub epsilon: f64,
    pub max_degree: usize,
    /// Fixed degree instead of the empirical search.
    pub degree: Option<usize>,
    pub exec: Exec,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { half_period: DEFAULT_HALF_PERIOD, epsilon: 1e-3, max_degree: 150, degree: None, exec: Exec::default() }
    }
}

/// A synthesized half-step phase gate for one `(n, r)` pair.
#[derive(Clone, Debug)]
pub struct PhaseGate {
    pub state: usize,
    pub mode: usize,
    pub program: GqspProgram,
    /// Sup-norm error of the realized `F` against the half-step phase on `[-L, L]`.
    pub tail: f64,
}

/// Program whose `F` approximates `exp(-i (dt/2) f(Q)/ħ)`, so that the heralded gate applies `F^2`.
pub fn synthesize_half_step(model: &VibronicModel, n: usize, r: usize, dt: f64, opts: &SynthesisOptions) -> Result<PhaseGate> {
    let target = PhaseTarget::new(model.diagonal_function(n, r), 0.5 * dt, opts.half_period)?;
    let series = match opts.degree {
        Some(d) => {
            let s = fourier_coefficients_with(&target, d, opts.exec)?;
            let tail = s.certify_tail(16)?;
            (s, tail)
        }
        None => {
            let sel = minimal_degree(&target, opts.epsilon, opts.max_degree, opts.exec)?;
            (sel.series, sel.empirical_error)
        }
    };
    let pair = complete(&LaurentPoly::from_series(&series.0), &CompletionOptions::default())?;
    // completion may shrink the series; the realized F is the series divided by the scale
    let tail =
        if pair.scale == 1.0 { series.1 } else { certify_tail_against(|x| target.value(x), &series.0.scaled(1.0 / pair.scale), 16, opts.exec)? };
    let mut program = find_angles_with_period(&pair, opts.half_period)?;
    program.provenance =
        Provenance { potential: Some(format!("{} state {}", model.modes[r].label, model.states[n])), delta_t: Some(0.5 * dt), refined: false };
    Ok(PhaseGate { state: n, mode: r, program, tail })
}

/// Couplings in mode-major, pair-lexicographic order.
fn ordered_couplings(model: &VibronicModel) -> Vec<Coupling> {
    let mut c = model.couplings.clone();
    c.sort_by_key(|c| (c.mode, c.n, c.m));
    c
}

/// One compiled Trotter layer.
#[derive(Clone, Debug)]
pub struct CompiledLayer {
    pub circuit: Circuit,
    pub gates: Vec<PhaseGate>,
}

/// Compiles one layer of length `dt` onto the unary register plus one ancilla.
pub fn compile_layer(model: &VibronicModel, dt: f64, opts: &SynthesisOptions, policy: HeraldPolicy) -> Result<CompiledLayer> {
    model.validate()?;
    let code = UnaryCode::new(model.n_states())?;
    let regs = Registers::standard(&code);
    let mut c = Circuit::new(regs.n_qubits(), model.n_modes());
    c.herald_policy = policy;
    let phase = |coef: f64| -dt * coef / HBAR_EV_FS;
    for (n, &e) in model.energies.iter().enumerate() {
        append_energy_term(&mut c, n, phase(e), &regs)?;
    }
    let pairs = model.anharmonic_pairs();
    let gates: Vec<PhaseGate> =
        opts.exec.map_slice(&pairs, |&(n, r)| synthesize_half_step(model, n, r, dt, opts)).into_iter().collect::<Result<_>>()?;
    for (r, mode) in model.modes.iter().enumerate() {
        append_harmonic(&mut c, r, dt * mode.omega / HBAR_EV_FS)?;
        for n in 0..model.n_states() {
            if let Some(g) = gates.iter().find(|g| g.state == n && g.mode == r) {
                append_state_dependent_gate(&mut c, &g.program, n, &code, &regs, r)?;
                continue;
            }
            let f = model.diagonal_function(n, r);
            let (c0, kappa, gamma) =
                f.polynomial_parts().ok_or_else(|| Error::InvalidConfig(format!("diagonal term ({n}, {r}) is neither polynomial nor anharmonic")))?;
            if c0 != 0.0 {
                append_energy_term(&mut c, n, phase(c0), &regs)?;
            }
            if kappa != 0.0 {
                append_linear_term(&mut c, n, r, phase(kappa), &regs)?;
            }
            if gamma != 0.0 {
                append_quadratic_term(&mut c, n, r, phase(0.5 * gamma), &regs)?;
            }
        }
    }
    for cp in ordered_couplings(model) {
        append_mcd_coupling(&mut c, cp.n, cp.m, cp.mode, phase(cp.lambda), &regs, PairOrder::default())?;
    }
    Ok(CompiledLayer { circuit: c, gates })
}

/// Populations of the unary codewords; the ancilla is traced out.
fn encoded_populations(state: &HybridState, code: &UnaryCode) -> Vec<f64> {
    let layout = state.layout();
    let ol = layout.osc_len();
    let mut p = vec![0.0; code.n_states()];
    for (i, z) in state.amplitudes().iter().enumerate() {
        let bits = i / ol;
        if let Some(n) = code.decode(bits >> 1) {
            p[n] += z.norm_sqr();
        }
    }
    p
}

/// Runs the compiled circuit layer by layer and records populations at layer boundaries.
pub fn evolve_compiled(
    model: &VibronicModel,
    plan: &TrotterPlan,
    initial: &HybridState,
    opts: &SynthesisOptions,
    policy: HeraldPolicy,
    seed: u64,
) -> Result<PopulationTrace> {
    let code = UnaryCode::new(model.n_states())?;
    let layer = compile_layer(model, plan.dt, opts, policy)?;
    let layout = initial.layout();
    if layout.n_qubits != layer.circuit.n_qubits() || layout.n_osc != model.n_modes() {
        return Err(Error::DimensionMismatch("initial state does not match the compiled register".into()));
    }
    if (initial.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(initial.norm()));
    }
    let sim = Simulator::new(layout.dim, opts.exec)?;
    let mut rng = shot_rng(seed, 0);
    let mut state = initial.clone();
    let mut trace =
        PopulationTrace { states: model.states.clone(), times: vec![0.0], populations: vec![encoded_populations(&state, &code)], herald: vec![1.0] };
    let mut cumulative = 1.0;
    for k in 1..=plan.p {
        let log = sim.run(&layer.circuit, &mut state, &mut rng)?;
        cumulative *= log.success_probability();
        trace.times.push(k as f64 * plan.dt);
        trace.populations.push(encoded_populations(&state, &code));
        trace.herald.push(cumulative);
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleFlavor {
    /// `exp(-iHt/ħ)` from a full diagonalization.
    Exact,
    /// The layer sequence with every term exponentiated exactly.
    Trotterized,
}

fn block_populations(psi: &CVector, n_states: usize) -> Vec<f64> {
    let ol = psi.len() / n_states;
    (0..n_states).map(|n| psi.rows(n * ol, ol).norm_squared()).collect()
}

/// `V cos(c(x)) V^T` and `V sin(c(x)) V^T` for values `c(x_j)` on the position nodes.
fn cos_sin(basis: &PositionBasis, values: &[f64]) -> (RMatrix, RMatrix) {
    let v = basis.vectors();
    let mut c = v.clone();
    let mut s = v.clone();
    for (j, &a) in values.iter().enumerate() {
        c.column_mut(j).scale_mut(a.cos());
        s.column_mut(j).scale_mut(a.sin());
    }
    (c * v.transpose(), s * v.transpose())
}

/// Exactly exponentiated layer terms in the documented order.
struct OracleLayer {
    dim: usize,
    n_states: usize,
    n_modes: usize,
    energy: Vec<C64>,
    harmonic: Vec<Vec<C64>>,
    /// `(n, r, cos, sin)` with `exp(-iαf) = cos - i sin`.
    diagonal: Vec<(usize, usize, RMatrix, RMatrix)>,
    coupling: Vec<(Coupling, RMatrix, RMatrix)>,
}

impl OracleLayer {
    fn new(model: &VibronicModel, cfg: FockConfig, dt: f64) -> Result<Self> {
        let basis = PositionBasis::new(cfg);
        let alpha = dt / HBAR_EV_FS;
        let energy = model.energies.iter().map(|e| C64::from_polar(1.0, -alpha * e)).collect();
        let harmonic =
            model.modes.iter().map(|m| (0..cfg.dim).map(|k| C64::from_polar(1.0, -alpha * m.omega * (k as f64 + 0.5))).collect()).collect();
        let mut diagonal = Vec::new();
        for r in 0..model.n_modes() {
            for n in 0..model.n_states() {
                let f = model.diagonal_function(n, r);
                if f.is_zero() {
                    continue;
                }
                let values: Vec<f64> = basis.nodes().iter().map(|&x| f.evaluate(x).map(|v| alpha * v)).collect::<Result<_>>()?;
                let (c, s) = cos_sin(&basis, &values);
                diagonal.push((n, r, c, s));
            }
        }
        let coupling = ordered_couplings(model)
            .into_iter()
            .map(|cp| {
                let values: Vec<f64> = basis.nodes().iter().map(|&x| alpha * cp.lambda * x).collect();
                let (c, s) = cos_sin(&basis, &values);
                (cp, c, s)
            })
            .collect();
        Ok(Self { dim: cfg.dim, n_states: model.n_states(), n_modes: model.n_modes(), energy, harmonic, diagonal, coupling })
    }

    fn apply(&self, psi: &mut CVector) {
        let ol = psi.len() / self.n_states;
        let (d, m) = (self.dim, self.n_modes);
        let one = C64::new(1.0, 0.0);
        let minus_i = C64::new(0.0, -1.0);
        let v = psi.as_mut_slice();
        for n in 0..self.n_states {
            for z in &mut v[n * ol..(n + 1) * ol] {
                *z *= self.energy[n];
            }
        }
        let mut next = 0;
        for r in 0..m {
            let stride = d.pow((m - 1 - r) as u32);
            for (i, z) in v.iter_mut().enumerate() {
                *z *= self.harmonic[r][(i / stride) % d];
            }
            while next < self.diagonal.len() && self.diagonal[next].1 == r {
                let (n, _, c, s) = &self.diagonal[next];
                let block = &mut v[n * ol..(n + 1) * ol];
                let src = block.to_vec();
                block.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                mode_matvec(&src, block, d, m, r, c, one);
                mode_matvec(&src, block, d, m, r, s, minus_i);
                next += 1;
            }
        }
        for (cp, c, s) in &self.coupling {
            let a = v[cp.n * ol..(cp.n + 1) * ol].to_vec();
            let b = v[cp.m * ol..(cp.m + 1) * ol].to_vec();
            let (lo, hi) = v.split_at_mut(cp.m * ol);
            let na = &mut lo[cp.n * ol..(cp.n + 1) * ol];
            let nb = &mut hi[..ol];
            na.iter_mut().chain(nb.iter_mut()).for_each(|z| *z = C64::new(0.0, 0.0));
            mode_matvec(&a, na, d, m, cp.mode, c, one);
            mode_matvec(&b, na, d, m, cp.mode, s, minus_i);
            mode_matvec(&b, nb, d, m, cp.mode, c, one);
            mode_matvec(&a, nb, d, m, cp.mode, s, minus_i);
        }
    }
}

/// Oracle populations in the physical electronic basis.
pub fn evolve_oracle(model: &VibronicModel, cfg: FockConfig, plan: &TrotterPlan, initial: &CVector, flavor: OracleFlavor) -> Result<PopulationTrace> {
    let total = model.total_dim(cfg).ok_or_else(|| Error::InvalidConfig("dimension overflow".into()))?;
    if initial.len() != total {
        return Err(Error::DimensionMismatch(format!("initial state has length {}, the model needs {total}", initial.len())));
    }
    let n_states = model.n_states();
    let mut trace = PopulationTrace {
        states: model.states.clone(),
        times: vec![0.0],
        populations: vec![block_populations(initial, n_states)],
        herald: vec![1.0],
    };
    match flavor {
        OracleFlavor::Exact => {
            let h = assemble_matrix(model, cfg)?;
            let (energies, vectors) = sorted_symmetric_eigen(h.matrix);
            let vt = vectors.transpose();
            let coeff_re = &vt * initial.map(|z| z.re);
            let coeff_im = &vt * initial.map(|z| z.im);
            for k in 1..=plan.p {
                let t = k as f64 * plan.dt;
                let evolved =
                    CVector::from_fn(energies.len(), |j, _| C64::new(coeff_re[j], coeff_im[j]) * C64::from_polar(1.0, -energies[j] * t / HBAR_EV_FS));
                let re = &vectors * evolved.map(|z| z.re);
                let im = &vectors * evolved.map(|z| z.im);
                let psi = CVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i]));
                trace.times.push(t);
                trace.populations.push(block_populations(&psi, n_states));
                trace.herald.push(1.0);
            }
        }
        OracleFlavor::Trotterized => {
            crate::vibronic::ModelOperators::new(model, cfg)?;
            let layer = OracleLayer::new(model, cfg, plan.dt)?;
            let mut psi = initial.clone();
            for k in 1..=plan.p {
                layer.apply(&mut psi);
                trace.times.push(k as f64 * plan.dt);
                trace.populations.push(block_populations(&psi, n_states));
                trace.herald.push(1.0);
            }
        }
    }
    Ok(trace)
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn planned_layers_meet_the_budget(t in 0.1f64..100.0, eps in 1e-4f64..0.5, gamma in 0.0f64..1e-3) {
            let plan = plan_with_gamma(t, eps, gamma).unwrap();
            prop_assert!(plan.p >= 1);
            prop_assert!((plan.dt * plan.p as f64 - t).abs() <= 1e-9 * t);
            prop_assert!((plan.eps_trotter + plan.eps_fourier - eps).abs() <= 1e-15);
            // the first-order bound is met with the chosen layer count
            prop_assert!(gamma * t * t / (HBAR_EV_FS * HBAR_EV_FS * plan.p as f64) <= plan.eps_trotter * (1.0 + 1e-12));
            let longer = plan_with_gamma(2.0 * t, eps, gamma).unwrap();
            prop_assert!(longer.p >= plan.p);
        }
    }
}
