//! The four pipeline stages.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use hybrid_qsp::compiler::UnaryCode;
use hybrid_qsp::dataset::{load_uracil_dataset, UracilDataset};
use hybrid_qsp::dynamics::{
    compare, encoded_state, evolve_compiled, evolve_oracle, initial_oscillators, manual_plan, physical_state, plan, synthesize_half_step,
    OracleFlavor, PopulationTrace, SynthesisOptions, TrotterPlan,
};
use hybrid_qsp::fock::{FockConfig, HybridLayout, HybridState, PositionBasis};
use hybrid_qsp::fourier::{analytic_degree, estimate_strip_bound, fourier_coefficients_with, minimal_degree, select_degree, PhaseTarget};
use hybrid_qsp::gqsp::{complete, find_angles_with_period, reconstruction_error, CompletionOptions, GqspProgram, Provenance, CHECK_POINTS};
use hybrid_qsp::poly::LaurentPoly;
use hybrid_qsp::potentials::PotentialSpec;
use hybrid_qsp::refine::{program_fidelity, refine_angles, RefineOptions};
use hybrid_qsp::resources::{estimate, tradeoff_sweep, tradeoff_to_text, write_tradeoff_csv, Degrees, PairDegree, TradeoffOptions};
use hybrid_qsp::simulator::shot_rng;
use hybrid_qsp::units::HBAR_EV_FS;
use hybrid_qsp::vibronic::{build_model, commutator_bound, VibronicModel};
use hybrid_qsp::wigner::{wigner_map_pure, WignerGrid};
use hybrid_qsp::{CMatrix, CVector, C64};
use rand_distr::{Distribution, StandardNormal};

use crate::config::{OracleChoice, RunConfig};
use crate::CliError;

/// Shot factors and degrees quoted for the uracil-cation estimate.
#[allow(clippy::approx_constant)]
const REFERENCE_SHOT_FACTORS: [(f64, f64); 2] = [(0.9988, 122.0), (0.9997, 3.14)];
const REFERENCE_DEGREES: [(f64, usize); 2] = [(0.9988, 116), (0.9997, 261)];

/// Output directory plus the provenance header shared by every file.
pub struct Outputs {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.output_dir)
            .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", cfg.output_dir.display())))?;
        Ok(Self { dir: cfg.output_dir.clone(), hash: cfg.hash(), written: Vec::new() })
    }

    /// Writes `name` with a `#` header naming the tool version, config hash and quantity.
    pub fn write<F>(&mut self, name: &str, quantity: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        let header = format!("# hqsp {}\n# config-sha256: {}\n# quantity: {quantity}\n", env!("CARGO_PKG_VERSION"), self.hash);
        buf.extend_from_slice(header.as_bytes());
        body(&mut buf).map_err(|e| CliError::Validation(e.to_string()))?;
        let path = self.dir.join(name);
        fs::write(&path, buf).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, quantity: &str, text: &str) -> Result<(), CliError> {
        self.write(name, quantity, |b| b.write_all(text.as_bytes()))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn dataset(cfg: &RunConfig) -> Result<UracilDataset, CliError> {
    match &cfg.dataset {
        Some(p) => load_uracil_dataset(p).map_err(CliError::from),
        None => Ok(UracilDataset::builtin()),
    }
}

pub fn load_model(cfg: &RunConfig) -> Result<VibronicModel, CliError> {
    Ok(build_model(&dataset(cfg)?, &cfg.modes, &cfg.states)?)
}

/// Tabulated potential of `state` on `mode`, looked up in the full dataset.
fn tabulated_potential(cfg: &RunConfig, mode: &str, state: &str) -> Result<PotentialSpec, CliError> {
    let ds = dataset(cfg)?;
    let m = build_model(&ds, &[mode.to_string()], &[state.to_string()])?;
    Ok(m.modes[0].potentials[0].clone())
}

/// `(label, potential)` pairs handled by `approximate`.
fn approximation_targets(cfg: &RunConfig) -> Result<Vec<(String, PotentialSpec)>, CliError> {
    if let Some(p) = &cfg.fourier.potential {
        p.validate()?;
        return Ok(vec![("custom".into(), p.clone())]);
    }
    let model = load_model(cfg)?;
    Ok(model
        .anharmonic_pairs()
        .into_iter()
        .map(|(n, r)| (format!("{}_{}", model.modes[r].label, model.states[n]), model.modes[r].potentials[n].clone()))
        .collect())
}

pub fn cmd_approximate(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let f = &cfg.fourier;
    let targets = approximation_targets(cfg)?;
    let mut report = String::new();
    let _ = writeln!(report, "delta_t {} fs, half-period L {}, epsilon {:e}", f.delta_t, f.half_period, f.epsilon);
    let _ = writeln!(report, "target            d_empirical  sup_error     trust_error   d_analytic  sigma    B");
    if targets.is_empty() {
        let _ = writeln!(report, "(model has no anharmonic pairs)");
    }
    for (label, potential) in targets {
        let target = PhaseTarget::new(potential, f.delta_t, f.half_period)?;
        let sel = minimal_degree(&target, f.epsilon, f.max_degree, cfg.exec)?;
        let bound = match f.sigma {
            Some(sigma) => {
                estimate_strip_bound(&target, sigma, cfg.exec).and_then(|b| Ok((select_degree(b, sigma, f.half_period, f.epsilon)?, sigma, b)))
            }
            None => analytic_degree(&target, f.epsilon, cfg.exec).map(|s| (s.degree, s.sigma, s.b)),
        };
        let bound = match bound {
            Ok((d, sigma, b)) => format!("{d:<11} {sigma:<8.4} {b:.4e}"),
            Err(hybrid_qsp::Error::NotAnalytic(_)) => format!("{:<11} {:<8} -", "n/a", "-"),
            Err(e) => return Err(e.into()),
        };
        let _ = writeln!(report, "{label:<17} {:<12} {:<13.4e} {:<13.4e} {bound}", sel.series.degree(), sel.empirical_error, sel.trust_error,);
        let series = sel.series;
        out.write(&format!("series_{label}.csv"), "Fourier coefficients c_k of exp(-i dt f(x)/hbar) on [-L, L]", |b| series.write_csv(b))?;
    }
    out.text("degree_report.txt", "Fourier degree selection per anharmonic potential", &report)?;
    Ok(report)
}

fn target_matrix(potential: &PotentialSpec, dt: f64, dim: usize) -> Result<CMatrix, CliError> {
    let basis = PositionBasis::new(FockConfig::new(dim)?);
    let values: Vec<f64> = basis.nodes().iter().map(|&x| potential.evaluate(x)).collect::<Result<_, _>>()?;
    let v = basis.vectors();
    let mut scaled = v.map(C64::from);
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::from_polar(1.0, -dt * values[j] / HBAR_EV_FS);
    }
    Ok(scaled * v.transpose().map(C64::from))
}

/// Reference state with the main qubit in `|0>`.
fn reference(osc: &CVector) -> Result<HybridState, CliError> {
    let layout = HybridLayout::new(1, 1, osc.len())?;
    Ok(HybridState::product(layout, &[0], std::slice::from_ref(osc))?)
}

fn haar_vector(dim: usize, seed: u64, stream: u64) -> CVector {
    let mut rng = shot_rng(seed, stream);
    let v = CVector::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let n = v.norm();
    v / C64::from(n)
}

/// Oscillator state after the `F` block of `program` acts on `osc`, renormalized.
fn synthesized_state(program: &GqspProgram, osc: &CVector) -> Result<CVector, CliError> {
    let basis = PositionBasis::new(FockConfig::new(osc.len())?);
    let v = basis.vectors().map(C64::from);
    let mut pos = v.tr_mul(osc);
    for (j, x) in basis.nodes().iter().enumerate() {
        pos[j] *= program.matrix_at(C64::from_polar(1.0, std::f64::consts::PI * x / program.half_period))[0][0];
    }
    let s = &v * pos;
    let n = s.norm();
    Ok(s / C64::from(n))
}

pub fn cmd_synthesize(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let f = &cfg.fourier;
    let s = &cfg.synthesize;
    let (label, potential) = match &f.potential {
        Some(p) => ("custom".to_string(), p.clone()),
        None => (format!("{} {}", s.mode, s.state), tabulated_potential(cfg, &s.mode, &s.state)?),
    };
    let target = PhaseTarget::new(potential.clone(), f.delta_t, f.half_period)?;
    let (series, tail) = match s.degree {
        Some(d) => {
            let series = fourier_coefficients_with(&target, d, cfg.exec)?;
            let tail = series.certify_tail(16)?;
            (series, tail)
        }
        None => {
            let sel = minimal_degree(&target, f.epsilon, f.max_degree, cfg.exec)?;
            (sel.series, sel.empirical_error)
        }
    };
    let poly = LaurentPoly::from_series(&series);
    let pair = complete(&poly, &CompletionOptions::default())?;
    let mut program = find_angles_with_period(&pair, f.half_period)?;
    program.provenance = Provenance { potential: Some(label.clone()), delta_t: Some(f.delta_t), refined: false };
    let residual = pair.residual(CHECK_POINTS);
    let recon = reconstruction_error(&program, &pair.f, CHECK_POINTS, cfg.exec);

    let dim = cfg.fock_dim;
    let tmat = target_matrix(&potential, f.delta_t, dim)?;
    let vacuum = CVector::from_fn(dim, |i, _| C64::from(if i == 0 { 1.0 } else { 0.0 }));
    let vac_ref = reference(&vacuum)?;
    let unrefined = program_fidelity(&program, &tmat, &vac_ref, cfg.exec)?;
    let refined = if s.refine {
        let r = refine_angles(&program, &tmat, &vac_ref, &RefineOptions { max_iters: s.max_iters, exec: cfg.exec, ..Default::default() })?;
        let mut p = r.program;
        p.provenance.refined = true;
        Some((p, r.final_fidelity, r.iterations))
    } else {
        None
    };

    let mut report = String::new();
    let _ = writeln!(report, "potential: {label}");
    let _ = writeln!(report, "delta_t: {} fs; half-period L: {}; Fock dimension: {dim}", f.delta_t, f.half_period);
    let _ = writeln!(report, "degree d: {}", program.d);
    let _ = writeln!(report, "series sup-error on [-L, L]: {tail:.4e}");
    let _ = writeln!(report, "completion scale: {:.12}", pair.scale);
    let _ = writeln!(report, "completion residual max||F|^2+|G|^2-1|: {residual:.4e}");
    let _ = writeln!(report, "reconstruction sup-error: {recon:.4e}");
    let _ = writeln!(report, "vacuum fidelity (unrefined): {unrefined:.4} [{unrefined:.12}]");
    if let Some((_, fid, iters)) = &refined {
        let _ = writeln!(report, "vacuum fidelity (refined, {iters} iterations): {fid:.6} [{fid:.12}]");
    }
    for k in 0..s.haar_references {
        let psi = haar_vector(dim, cfg.seed, k as u64);
        let r = reference(&psi)?;
        let _ = write!(report, "haar reference {k} fidelity: unrefined {:.4}", program_fidelity(&program, &tmat, &r, cfg.exec)?);
        if let Some((p, _, _)) = &refined {
            let _ = write!(report, ", refined {:.4}", program_fidelity(p, &tmat, &r, cfg.exec)?);
        }
        report.push('\n');
    }

    let angle_text = program.to_toml_string()?;
    out.text("angles.toml", "OQ-GQSP phase angles (lambda, theta_j, phi_j) of the unrefined program", &angle_text)?;
    if let Some((p, _, _)) = &refined {
        let text = p.to_toml_string()?;
        out.text("angles_refined.toml", "OQ-GQSP phase angles after vacuum-reference refinement", &text)?;
    }
    if s.wigner {
        let grid = WignerGrid::square(s.wigner_half_width, s.wigner_resolution).with_exec(cfg.exec);
        let applied = &tmat * &vacuum;
        let w = wigner_map_pure(&applied, &grid)?;
        out.write("wigner_target.csv", "Wigner function of the target gate applied to the vacuum", |b| w.write_csv(b))?;
        let w = wigner_map_pure(&synthesized_state(&program, &vacuum)?, &grid)?;
        out.write("wigner_synthesized.csv", "Wigner function of the unrefined synthesized gate applied to the vacuum", |b| w.write_csv(b))?;
        if let Some((p, _, _)) = &refined {
            let w = wigner_map_pure(&synthesized_state(p, &vacuum)?, &grid)?;
            out.write("wigner_refined.csv", "Wigner function of the refined synthesized gate applied to the vacuum", |b| w.write_csv(b))?;
        }
    }
    out.text("synthesis_report.txt", "gate synthesis residuals and reference-state fidelities", &report)?;
    Ok(report)
}

fn simulation_plan(cfg: &RunConfig, model: &VibronicModel, p: Option<usize>) -> Result<TrotterPlan, CliError> {
    let d = &cfg.simulate;
    Ok(match p {
        Some(p) => manual_plan(d.t_total, p, d.epsilon)?,
        None => plan(model, FockConfig::new(cfg.fock_dim)?, d.t_total, d.epsilon)?,
    })
}

fn write_trace(out: &mut Outputs, name: &str, quantity: &str, trace: &PopulationTrace) -> Result<(), CliError> {
    out.write(name, quantity, |b| trace.write_csv(b))
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let model = load_model(cfg)?;
    let fock = FockConfig::new(cfg.fock_dim)?;
    let d = &cfg.simulate;
    UnaryCode::new(model.n_states())?;
    let total = model
        .total_dim(fock)
        .filter(|&t| t <= hybrid_qsp::vibronic::MAX_DENSE_DIM)
        .ok_or_else(|| CliError::Validation(format!("model dimension exceeds the simulation guard {}", hybrid_qsp::vibronic::MAX_DENSE_DIM)))?;
    let plan = simulation_plan(cfg, &model, d.p)?;
    let start = model.state_index(&d.initial_state)?;
    let shifts = d.displacements.iter().map(|(label, q)| Ok((model.mode_index(label)?, *q))).collect::<Result<Vec<_>, hybrid_qsp::Error>>()?;
    let osc = initial_oscillators(&model, fock, &shifts)?;
    let opts = SynthesisOptions {
        half_period: cfg.fourier.half_period,
        epsilon: cfg.fourier.epsilon,
        max_degree: cfg.fourier.max_degree,
        degree: None,
        exec: cfg.exec,
    };
    let compiled = evolve_compiled(&model, &plan, &encoded_state(&model, start, &osc)?, &opts, d.herald, cfg.seed)?;
    let psi0 = physical_state(&model, start, &osc)?;
    let mut report = String::new();
    let _ =
        writeln!(report, "states: {}; modes: {}", model.states.join(","), model.modes.iter().map(|m| m.label.as_str()).collect::<Vec<_>>().join(","));
    let _ = writeln!(report, "total dimension: {total}; layers p: {}; dt: {} fs; t: {} fs", plan.p, plan.dt, plan.t_total);
    if let Some(g) = plan.gamma {
        let _ = writeln!(report, "commutator bound Gamma: {g:.6e} eV^2");
    }
    let _ = writeln!(report, "herald policy: {:?}; cumulative herald probability: {:.6}", d.herald, compiled.herald.last().copied().unwrap_or(1.0));
    let pairs = model.anharmonic_pairs();
    for &(n, r) in &pairs {
        let g = synthesize_half_step(&model, n, r, plan.dt, &opts)?;
        let _ = writeln!(report, "gate {} {}: degree {}, half-step series error {:.3e}", model.modes[r].label, model.states[n], g.program.d, g.tail);
    }
    write_trace(out, "populations_compiled.csv", "electronic populations of the compiled Trotter circuit", &compiled)?;
    let flavors: &[(OracleFlavor, &str)] = match d.oracle {
        OracleChoice::Trotterized => &[(OracleFlavor::Trotterized, "trotterized")],
        OracleChoice::Exact => &[(OracleFlavor::Exact, "exact")],
        OracleChoice::Both => &[(OracleFlavor::Trotterized, "trotterized"), (OracleFlavor::Exact, "exact")],
    };
    for (flavor, name) in flavors {
        let trace = evolve_oracle(&model, fock, &plan, &psi0, *flavor)?;
        let cmp = compare(&compiled, &trace)?;
        let _ = writeln!(report, "\ncompiled vs {name} oracle:");
        report.push_str(&cmp.to_text(&model.states));
        let quantity = match flavor {
            OracleFlavor::Exact => "electronic populations under the exact propagator",
            OracleFlavor::Trotterized => "electronic populations under exactly exponentiated Trotter layers",
        };
        write_trace(out, &format!("populations_oracle_{name}.csv"), quantity, &trace)?;
    }
    out.text("comparison.txt", "population deviation between compiled and oracle dynamics", &report)?;
    Ok(report)
}

pub fn cmd_estimate(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let model = load_model(cfg)?;
    let e = &cfg.estimate;
    let p = e.p.or(cfg.simulate.p);
    let plan = match p {
        Some(p) => manual_plan(cfg.simulate.t_total, p, cfg.simulate.epsilon)?,
        None => plan(&model, FockConfig::new(cfg.fock_dim)?, cfg.simulate.t_total, cfg.simulate.epsilon)?,
    };
    let degrees = match e.degree {
        Some(d) => Degrees::Uniform(d),
        None => {
            let opts = SynthesisOptions {
                half_period: cfg.fourier.half_period,
                epsilon: cfg.fourier.epsilon,
                max_degree: cfg.fourier.max_degree,
                degree: None,
                exec: cfg.exec,
            };
            let mut list = Vec::new();
            for (n, r) in model.anharmonic_pairs() {
                let target = PhaseTarget::new(model.diagonal_function(n, r), 0.5 * plan.dt, opts.half_period)?;
                let sel = minimal_degree(&target, opts.epsilon, opts.max_degree, opts.exec)?;
                list.push(PairDegree { state: n, mode: r, degree: sel.series.degree() });
            }
            Degrees::PerPair(list)
        }
    };
    let mut report = String::new();
    report.push_str(&model.summary(FockConfig::new(cfg.fock_dim)?, None));
    if let Ok(gamma) = commutator_bound(&model, FockConfig::new(cfg.fock_dim)?) {
        let _ = writeln!(report, "commutator bound Gamma (dim {}): {gamma:.6e} eV^2", cfg.fock_dim);
    }
    for (i, &success) in e.herald_success.iter().enumerate() {
        let r = estimate(&model, &plan, &degrees, success)?;
        let _ = writeln!(report, "\n--- per-measurement success {success} ---");
        report.push_str(&r.to_text());
        if let Some((_, quoted)) = REFERENCE_SHOT_FACTORS.iter().find(|(s, _)| *s == success) {
            let rel = (r.shot_factor - quoted) / quoted;
            let _ = writeln!(report, "{:<36} {quoted} (formula differs by {:+.1}%)", "reference shot factor", 100.0 * rel);
        }
        out.write(&format!("resources_{i}.csv"), &format!("resource counts at per-measurement success {success}"), |b| r.write_csv(b))?;
    }
    let topts = TradeoffOptions {
        epsilon_per_delta: e.epsilon_per_delta,
        half_period: cfg.fourier.half_period,
        max_degree: cfg.fourier.max_degree,
        exec: cfg.exec,
    };
    let mut deltas = e.deltas.clone();
    for &(s, _) in &REFERENCE_DEGREES {
        let d = 1.0 - s;
        if !deltas.iter().any(|x| (x - d).abs() < 1e-15) {
            deltas.push(d);
        }
    }
    deltas.sort_by(|a, b| b.partial_cmp(a).expect("finite deltas"));
    let rows = tradeoff_sweep(&model, &plan, &deltas, &topts)?;
    let _ = writeln!(report, "\n--- depth versus shot trade-off (epsilon = {} delta) ---", e.epsilon_per_delta);
    report.push_str(&tradeoff_to_text(&rows));
    for (s, quoted) in REFERENCE_DEGREES {
        if let Some(row) = rows.iter().find(|r| (r.success - s).abs() < 1e-12) {
            let emp = row.empirical_degree.map_or_else(|| "-".to_string(), |d| d.to_string());
            let _ = writeln!(report, "1-delta = {s}: reference degree {quoted}; computed analytic {}, empirical {emp}", row.analytic_degree);
        }
    }
    out.write("tradeoff.csv", "GQSP degree and shot factor versus per-measurement failure delta", |b| write_tradeoff_csv(&rows, b))?;
    out.text("resources.txt", "resource estimate and depth versus shot trade-off", &report)?;
    Ok(report)
}
