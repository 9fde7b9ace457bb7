//! Closed-form resource accounting for compiled Trotter circuits.
//!
//! Per layer the compiler emits:
//!
//! * per state: one `RZ` for `E_n`;
//! * per mode: one `ROT` for the harmonic term;
//! * per anharmonic `(n, r)` pair of degree `d`: the heralded state-dependent gate,
//!   two OQ-GQSP sequences of `2d` signal operators each, i.e. `6d` CD, `2d` DISP,
//!   `2(4d + 3)` single-qubit rotations, one parity flip, two measurements, one reset;
//! * per polynomial `(n, r)` pair: `DISP + CD` for a linear term, two `QPHASE`
//!   for a quadratic term, one `RZ` for a constant;
//! * per coupled `(n, m, r)`: two CD, four two-qubit Pauli exponentials, four rotations.
//!
//! Heralded success uses a uniform per-measurement probability `1 - δ` and the
//! exponent `2 M' N p`.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::compiler::GateCounts;
use crate::dynamics::TrotterPlan;
use crate::fourier::{analytic_degree, minimal_degree, PhaseTarget, DEFAULT_HALF_PERIOD};
use crate::vibronic::VibronicModel;
use crate::{Error, Exec, Result};

/// Degree of the synthesized gate for one anharmonic `(n, r)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDegree {
    pub state: usize,
    pub mode: usize,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Degrees {
    Uniform(usize),
    PerPair(Vec<PairDegree>),
}

impl Degrees {
    fn resolve(&self, model: &VibronicModel) -> Result<Vec<PairDegree>> {
        model
            .anharmonic_pairs()
            .into_iter()
            .map(|(n, r)| match self {
                Degrees::Uniform(d) => Ok(PairDegree { state: n, mode: r, degree: *d }),
                Degrees::PerPair(list) => list
                    .iter()
                    .find(|p| p.state == n && p.mode == r)
                    .copied()
                    .ok_or_else(|| Error::InvalidConfig(format!("no degree for state {} on mode {}", model.states[n], model.modes[r].label))),
            })
            .collect()
    }
}

/// Instruction counts of one state-dependent gate of degree `d`.
pub fn state_dependent_gate_counts(d: usize) -> GateCounts {
    GateCounts { cd: 6 * d, displace: 2 * d, single_qubit: 2 * (4 * d + 3), parity: 1, measure: 2, reset: 1, ..Default::default() }
}

/// Instruction counts of one compiled layer.
pub fn layer_counts(model: &VibronicModel, degrees: &Degrees) -> Result<GateCounts> {
    let pairs = degrees.resolve(model)?;
    let mut c = GateCounts { single_qubit: model.n_states(), rotation: model.n_modes(), ..Default::default() };
    for r in 0..model.n_modes() {
        for n in 0..model.n_states() {
            if let Some(p) = pairs.iter().find(|p| p.state == n && p.mode == r) {
                c = c + state_dependent_gate_counts(p.degree);
                continue;
            }
            let (c0, kappa, gamma) = model
                .diagonal_function(n, r)
                .polynomial_parts()
                .ok_or_else(|| Error::InvalidConfig(format!("diagonal term ({n}, {r}) is neither polynomial nor anharmonic")))?;
            c.single_qubit += usize::from(c0 != 0.0);
            if kappa != 0.0 {
                c.displace += 1;
                c.cd += 1;
            }
            c.quad_phase += 2 * usize::from(gamma != 0.0);
        }
    }
    let k = model.couplings.len();
    c.cd += 2 * k;
    c.two_qubit += 4 * k;
    c.single_qubit += 4 * k;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceReport {
    pub n_states: usize,
    pub n_modes: usize,
    pub n_anharmonic_modes: usize,
    pub p: usize,
    pub degrees: Vec<PairDegree>,
    pub per_layer: GateCounts,
    /// CD queries of the diagonal terms per layer.
    pub diagonal_queries: usize,
    /// CD queries of the off-diagonal terms per layer.
    pub offdiagonal_queries: usize,
    pub total_cd_queries: usize,
    /// Uniform per-measurement success probability `1 - δ`.
    pub herald_success: f64,
    /// `2 M' N p`.
    pub herald_exponent: usize,
    pub success_probability: f64,
    pub shot_factor: f64,
    pub qubits: usize,
    pub oscillators: usize,
}

/// Concrete counts for `plan.p` layers of the compiled model.
pub fn estimate(model: &VibronicModel, plan: &TrotterPlan, degrees: &Degrees, herald_success: f64) -> Result<ResourceReport> {
    model.validate()?;
    if !(herald_success > 0.0 && herald_success <= 1.0) {
        return Err(Error::InvalidConfig(format!("per-measurement success probability must lie in (0, 1], got {herald_success}")));
    }
    let resolved = degrees.resolve(model)?;
    let per_layer = layer_counts(model, degrees)?;
    let offdiagonal_queries = 2 * model.couplings.len();
    let diagonal_queries = per_layer.cd_queries() - offdiagonal_queries;
    let (n, m, mp) = (model.n_states(), model.n_modes(), model.n_anharmonic_modes());
    let herald_exponent = 2 * mp * n * plan.p;
    let log_success = herald_exponent as f64 * herald_success.ln();
    Ok(ResourceReport {
        n_states: n,
        n_modes: m,
        n_anharmonic_modes: mp,
        p: plan.p,
        degrees: resolved,
        per_layer,
        diagonal_queries,
        offdiagonal_queries,
        total_cd_queries: per_layer.cd_queries() * plan.p,
        herald_success,
        herald_exponent,
        success_probability: log_success.exp(),
        shot_factor: (-log_success).exp(),
        qubits: n + 1,
        oscillators: m,
    })
}

impl ResourceReport {
    /// Aligned text table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let rows: Vec<(&str, String)> = vec![
            ("electronic states N", self.n_states.to_string()),
            ("modes M", self.n_modes.to_string()),
            ("anharmonic modes M'", self.n_anharmonic_modes.to_string()),
            ("Trotter layers p", self.p.to_string()),
            ("qubits (N + 1)", self.qubits.to_string()),
            ("oscillators (M)", self.oscillators.to_string()),
            ("anharmonic gates per layer", self.degrees.len().to_string()),
            ("diagonal CD queries per layer", self.diagonal_queries.to_string()),
            ("off-diagonal CD queries per layer", self.offdiagonal_queries.to_string()),
            ("total CD queries", self.total_cd_queries.to_string()),
            ("instructions per layer", self.per_layer.total().to_string()),
            ("per-measurement success 1 - delta", format!("{}", self.herald_success)),
            ("herald exponent 2 M' N p", self.herald_exponent.to_string()),
            ("success probability", format!("{:.6e}", self.success_probability)),
            ("shot factor", format!("{:.4}", self.shot_factor)),
            ("asymptotic form", "O(N M' ln(1/eps) + N^2 M) queries per layer".into()),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<36} {v}");
        }
        if !self.degrees.is_empty() {
            let ds: Vec<String> = self.degrees.iter().map(|p| format!("({},{}):{}", p.state, p.mode, p.degree)).collect();
            let _ = writeln!(s, "{:<36} {}", "degrees (state,mode):d", ds.join(" "));
        }
        s
    }

    /// `quantity,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "quantity,value")?;
        let c = &self.per_layer;
        let rows: Vec<(&str, String)> = vec![
            ("N", self.n_states.to_string()),
            ("M", self.n_modes.to_string()),
            ("M_prime", self.n_anharmonic_modes.to_string()),
            ("p", self.p.to_string()),
            ("qubits", self.qubits.to_string()),
            ("oscillators", self.oscillators.to_string()),
            ("layer_cd", c.cd.to_string()),
            ("layer_displace", c.displace.to_string()),
            ("layer_quad_phase", c.quad_phase.to_string()),
            ("layer_rotation", c.rotation.to_string()),
            ("layer_single_qubit", c.single_qubit.to_string()),
            ("layer_two_qubit", c.two_qubit.to_string()),
            ("layer_parity", c.parity.to_string()),
            ("layer_measure", c.measure.to_string()),
            ("layer_reset", c.reset.to_string()),
            ("diagonal_queries_per_layer", self.diagonal_queries.to_string()),
            ("offdiagonal_queries_per_layer", self.offdiagonal_queries.to_string()),
            ("total_cd_queries", self.total_cd_queries.to_string()),
            ("herald_success", format!("{}", self.herald_success)),
            ("herald_exponent", self.herald_exponent.to_string()),
            ("success_probability", format!("{:.12e}", self.success_probability)),
            ("shot_factor", format!("{:.12e}", self.shot_factor)),
        ];
        for (k, v) in rows {
            writeln!(out, "{k},{v}")?;
        }
        Ok(())
    }
}

/// How a per-measurement failure `δ` maps to a Fourier error target.
#[derive(Clone, Debug)]
pub struct TradeoffOptions {
    /// `ε = epsilon_per_delta · δ`.
    pub epsilon_per_delta: f64,
    pub half_period: f64,
    /// Largest degree tried by the empirical search.
    pub max_degree: usize,
    pub exec: Exec,
}

impl Default for TradeoffOptions {
    fn default() -> Self {
        Self { epsilon_per_delta: 0.5, half_period: DEFAULT_HALF_PERIOD, max_degree: 200, exec: Exec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub success: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Largest strip-bound degree over the anharmonic pairs.
    pub analytic_degree: usize,
    /// Largest empirical degree over the anharmonic pairs, if within `max_degree`.
    pub empirical_degree: Option<usize>,
    pub shot_factor: f64,
}

/// Degree and shot factor per `δ` for the half-step gates of `plan`.
pub fn tradeoff_sweep(model: &VibronicModel, plan: &TrotterPlan, deltas: &[f64], opts: &TradeoffOptions) -> Result<Vec<TradeoffRow>> {
    let pairs = model.anharmonic_pairs();
    let targets: Vec<PhaseTarget> =
        pairs.iter().map(|&(n, r)| PhaseTarget::new(model.diagonal_function(n, r), 0.5 * plan.dt, opts.half_period)).collect::<Result<_>>()?;
    let exponent = (2 * model.n_anharmonic_modes() * model.n_states() * plan.p) as f64;
    let mut rows = Vec::new();
    for &delta in deltas {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")));
        }
        let epsilon = opts.epsilon_per_delta * delta;
        let mut analytic = 0;
        let mut empirical = Some(0);
        for t in &targets {
            analytic = analytic.max(analytic_degree(t, epsilon, opts.exec)?.degree);
            empirical = match (empirical, minimal_degree(t, epsilon, opts.max_degree, opts.exec)) {
                (Some(e), Ok(sel)) => Some(e.max(sel.series.degree())),
                _ => None,
            };
        }
        rows.push(TradeoffRow {
            success: 1.0 - delta,
            delta,
            epsilon,
            analytic_degree: analytic,
            empirical_degree: empirical,
            shot_factor: (-exponent * (-delta).ln_1p()).exp(),
        });
    }
    Ok(rows)
}

pub fn tradeoff_to_text(rows: &[TradeoffRow]) -> String {
    let mut s = String::from("1-delta     delta       epsilon     d_analytic  d_empirical  shot_factor\n");
    for r in rows {
        let emp = r.empirical_degree.map_or_else(|| "-".to_string(), |d| d.to_string());
        let shots = if r.shot_factor < 1e6 { format!("{:.4}", r.shot_factor) } else { format!("{:.4e}", r.shot_factor) };
        let _ = writeln!(s, "{:<11.6} {:<11.4e} {:<11.4e} {:<11} {:<12} {shots}", r.success, r.delta, r.epsilon, r.analytic_degree, emp);
    }
    s
}

pub fn write_tradeoff_csv<W: Write>(rows: &[TradeoffRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "success,delta,epsilon,analytic_degree,empirical_degree,shot_factor")?;
    for r in rows {
        let emp = r.empirical_degree.map_or_else(String::new, |d| d.to_string());
        writeln!(out, "{},{:e},{:e},{},{},{:.12e}", r.success, r.delta, r.epsilon, r.analytic_degree, emp, r.shot_factor)?;
    }
    Ok(())
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::dataset::UracilDataset;
    use crate::dynamics::manual_plan;
    use crate::vibronic::build_model;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shot_factor_inverts_success(p in 1usize..400, success in 0.99f64..1.0, d in 1usize..80) {
            let m = build_model(&UracilDataset::builtin(), &[], &[]).unwrap();
            let r = estimate(&m, &manual_plan(40.0, p, 0.01).unwrap(), &Degrees::Uniform(d), success).unwrap();
            prop_assert!(r.shot_factor >= 1.0);
            prop_assert!((r.shot_factor * r.success_probability - 1.0).abs() < 1e-9);
            prop_assert_eq!(r.herald_exponent, 2 * r.n_anharmonic_modes * r.n_states * p);
            prop_assert_eq!(r.total_cd_queries, r.per_layer.cd_queries() * p);
        }
    }
}
