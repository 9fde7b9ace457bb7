//! End-to-end checks across the library modules.

use hybrid_qsp::compiler::{gqsp_circuit, Circuit, HeraldPolicy};
use hybrid_qsp::dataset::{load_uracil_dataset, UracilDataset, FORBIDDEN_COUPLINGS};
use hybrid_qsp::dynamics::{compile_layer, plan, SynthesisOptions};
use hybrid_qsp::fock::{FockConfig, HybridLayout, HybridState, PositionBasis};
use hybrid_qsp::fourier::{minimal_degree, PhaseTarget, DEFAULT_HALF_PERIOD};
use hybrid_qsp::gqsp::{complete, find_angles, CompletionOptions};
use hybrid_qsp::poly::LaurentPoly;
use hybrid_qsp::resources::{estimate, layer_counts, Degrees, PairDegree};
use hybrid_qsp::simulator::simulate;
use hybrid_qsp::vibronic::build_model;
use hybrid_qsp::{CVector, Exec, C64};

fn labels(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn dataset_file_round_trip() {
    let ds = UracilDataset::builtin();
    let path = std::env::temp_dir().join(format!("hqsp-dataset-{}.toml", std::process::id()));
    std::fs::write(&path, ds.to_toml_string().unwrap()).unwrap();
    let back = load_uracil_dataset(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(back, ds);
    let full = build_model(&back, &[], &[]).unwrap();
    assert_eq!((full.n_states(), full.n_modes(), full.n_anharmonic_modes()), (4, 12, 5));
    for (a, b) in FORBIDDEN_COUPLINGS {
        let (n, m) = (full.state_index(a).unwrap(), full.state_index(b).unwrap());
        assert!((0..full.n_modes()).all(|r| full.coupling(n, m, r) == 0.0));
    }
}

#[test]
fn synthesized_morse_gate_acts_as_its_series_on_the_oscillator() {
    let m = build_model(&UracilDataset::builtin(), &labels(&["nu25"]), &labels(&["D0"])).unwrap();
    let target = PhaseTarget::new(m.modes[0].potentials[0].clone(), 0.2, DEFAULT_HALF_PERIOD).unwrap();
    let sel = minimal_degree(&target, 1e-3, 150, Exec::default()).unwrap();
    let pair = complete(&LaurentPoly::from_series(&sel.series), &CompletionOptions::default()).unwrap();
    let program = find_angles(&pair).unwrap();
    let dim = 20;
    let basis = PositionBasis::new(FockConfig::new(dim).unwrap());
    let f_op = basis.function(|x| pair.f.eval(C64::from_polar(1.0, std::f64::consts::PI * x / DEFAULT_HALF_PERIOD)));
    let circuit = gqsp_circuit(&program, 0, 1, 0).unwrap();
    // the text form executes identically
    let circuit = Circuit::parse(&circuit.to_text()).unwrap();
    let layout = HybridLayout::new(2, 1, dim).unwrap();
    let osc = hybrid_qsp::fock::displaced_vacuum(FockConfig::new(dim).unwrap(), 0.8, -0.4);
    let input = HybridState::product(layout, &[0, 0], std::slice::from_ref(&osc)).unwrap();
    let (out, _) = simulate(&circuit, &input, 0).unwrap();
    let got: CVector = out.amplitudes().rows(0, dim).into_owned();
    assert!((got - &f_op * &osc).norm() < 1e-9);
}

#[test]
fn planned_run_resources_agree_with_the_compiled_layer() {
    let m = build_model(&UracilDataset::builtin(), &labels(&["nu21", "nu24"]), &labels(&["D1", "D3"])).unwrap();
    let p = plan(&m, FockConfig::new(12).unwrap(), 10.0, 0.05).unwrap();
    assert!(p.gamma.unwrap() > 0.0 && p.p >= 1);
    let layer = compile_layer(&m, p.dt, &SynthesisOptions::default(), HeraldPolicy::Project).unwrap();
    let degrees = Degrees::PerPair(layer.gates.iter().map(|g| PairDegree { state: g.state, mode: g.mode, degree: g.program.d }).collect());
    assert_eq!(layer_counts(&m, &degrees).unwrap(), layer.circuit.counts());
    let r = estimate(&m, &p, &degrees, 0.999).unwrap();
    assert_eq!(r.total_cd_queries, layer.circuit.counts().cd_queries() * p.p);
    assert_eq!(r.herald_exponent, 2 * layer.gates.len() * p.p);
}
