//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use ensemble_kernel::dynamics::{certify_kernel, random_non_kernel_direction, PulseShape, PulseTemplate};
use ensemble_kernel::ensemble::{
    canonical_weights, check_monotone, custom_weights, diagonalize_grand_canonical, grand_canonical_weights,
    pure_ground_state, Ensemble,
};
use ensemble_kernel::fock::{build_model, model_basis, ManyBodyOperator, ModelSpec, OneBodyCoefficients, Provenance, Sector};
use ensemble_kernel::linalg::{complement_within, from_columns, max_principal_angle, orth, principal_angles, CMat, RMat};
use ensemble_kernel::probes::{
    ensemble_1rdm, expand_in_one_body_basis, one_body_hermitian_basis, predict_pathological_generators,
    site_density_probes, spin_number_probes, symmetry_probes, ProbeSet,
};
use ensemble_kernel::response_kernel::{
    compute_kernel, static_thermal_response, KernelOptions, KernelReport, ResponseSetup, ThermalKind,
    DEFAULT_STATIC_STEP,
};
use ensemble_kernel::spectrum::{diagonalize, SpectralDecomposition, DEFAULT_TOL_ENERGY};
use nalgebra::{DMatrix, DVector};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn hubbard(sites: usize, u: f64) -> ModelSpec {
    ModelSpec::HubbardChain {
        sites,
        t: 1.0,
        u,
        periodic: sites > 2,
    }
}

fn system(model: &ModelSpec, sector: Sector) -> (ManyBodyOperator, Arc<SpectralDecomposition>) {
    let basis = model_basis(model, sector).unwrap();
    let h = build_model(model, &basis).unwrap();
    let spec = Arc::new(diagonalize(&h, DEFAULT_TOL_ENERGY).unwrap());
    (h, spec)
}

fn kernel(probes: &ProbeSet, ens: &Ensemble) -> KernelReport {
    compute_kernel(probes, ens, &KernelOptions::default()).unwrap()
}

/// Orthonormal basis for the span of `vectors`.
fn span(vectors: &[Vec<f64>]) -> RMat {
    orth(&from_columns(vectors, vectors[0].len()), 1e-12)
}

fn c1_constant_density_kernel() -> Check {
    let mut details = Vec::new();
    for (sites, sector) in [(2, Sector::FixedNSz { n: 2, twice_sz: 0 }), (3, Sector::FixedN(3))] {
        let (h, spec) = system(&hubbard(sites, 2.0), sector);
        let probes = site_density_probes(h.basis()).unwrap();
        for beta in [0.5, 1.0, 2.0] {
            let kr = kernel(&probes, &canonical_weights(&spec, beta).unwrap());
            ensure(kr.kernel_dim == 1, format!("L={sites} beta={beta}: kernel dim {}", kr.kernel_dim))?;
            let ones = DVector::from_element(sites, 1.0 / (sites as f64).sqrt());
            let dist = kr.distance_to_kernel(ones.as_slice());
            ensure(dist <= 1e-10, format!("L={sites} beta={beta}: distance to (1,..,1) {dist:e}"))?;
            let gap = kr.necessary.gap().unwrap_or(0.0);
            ensure(gap >= 1e6, format!("L={sites} beta={beta}: singular gap {gap:e}"))?;
            details.push(format!("L{sites}/b{beta}: gap {gap:.1e}"));
        }
    }
    Ok(details.join(", "))
}

fn c2_commutant_theorem() -> Check {
    let model = hubbard(2, 2.0);
    let (h, spec) = system(&model, Sector::FixedN(2));
    let probes = one_body_hermitian_basis(h.basis());
    let kr = kernel(&probes, &canonical_weights(&spec, 1.0).unwrap());
    let mut refs: Vec<Vec<f64>> = spin_number_probes(h.basis()).into_iter().map(|s| s.coefficients).collect();
    refs.extend(
        symmetry_probes(h.basis())
            .into_iter()
            .filter(|s| s.label == "Sx" || s.label == "Sy")
            .map(|s| s.coefficients),
    );
    let target = span(&refs);
    let a_can = max_principal_angle(&kr.kernel_matrix(), &target);
    ensure(kr.kernel_dim == 4 && kr.commutant_dim == 4, format!("canonical dims {} / {}", kr.kernel_dim, kr.commutant_dim))?;
    ensure(a_can <= 1e-8, format!("canonical angle to span(N_up, N_down, Sx, Sy) {a_can:e}"))?;
    ensure(kr.max_principal_angle <= 1e-8, format!("canonical angle to commutant {:e}", kr.max_principal_angle))?;

    let u = 2.0;
    let (hf, _) = system(&model, Sector::Full);
    let gspec = Arc::new(diagonalize_grand_canonical(&hf, u / 2.0, DEFAULT_TOL_ENERGY).unwrap());
    let gprobes = one_body_hermitian_basis(hf.basis());
    let gk = kernel(&gprobes, &grand_canonical_weights(&gspec, 1.0, u / 2.0).unwrap());
    let a_gc = max_principal_angle(&gk.kernel_matrix(), &target);
    ensure(gk.kernel_dim == 4 && gk.commutant_dim == 4, format!("grand canonical dims {} / {}", gk.kernel_dim, gk.commutant_dim))?;
    ensure(a_gc <= 1e-8, format!("grand canonical angle {a_gc:e}"))?;
    ensure(gk.max_principal_angle <= 1e-8, format!("grand canonical angle to commutant {:e}", gk.max_principal_angle))?;
    Ok(format!("dim 4, angles {a_can:.1e} (N=2) / {a_gc:.1e} (Fock, dim {})", gspec.dim()))
}

fn c3_zero_temperature_excess() -> Check {
    let (h, spec) = system(&hubbard(2, 2.0), Sector::FixedN(2));
    let probes = one_body_hermitian_basis(h.basis());
    let kr = kernel(&probes, &pure_ground_state(&spec).unwrap());
    ensure(kr.kernel_dim > 4, format!("interacting pure kernel dim {}", kr.kernel_dim))?;

    let (h0, spec0) = system(&hubbard(2, 0.0), Sector::FixedN(2));
    let pure0 = pure_ground_state(&spec0).unwrap();
    let k0 = kernel(&one_body_hermitian_basis(h0.basis()), &pure0);
    let pred = predict_pathological_generators(&ensemble_1rdm(&pure0), false, Some(2));
    ensure(!pred.generators.is_empty(), "no generators predicted for the U=0 reference")?;
    let mut worst = 0.0_f64;
    for (label, g) in &pred.generators {
        let v = expand_in_one_body_basis(g.matrix());
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let d = k0.distance_to_kernel(&v) / norm;
        ensure(d <= 1e-8, format!("generator {label} at distance {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!(
        "U=2 kernel dim {}; {} predicted U=0 generators in kernel (dim {}), worst {worst:.1e}",
        kr.kernel_dim,
        pred.generators.len(),
        k0.kernel_dim
    ))
}

fn c4_kernel_collapse() -> Check {
    let (h, spec) = system(&hubbard(2, 2.0), Sector::FixedN(2));
    let probes = one_body_hermitian_basis(h.basis());
    let dims: Vec<usize> = [0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&b| kernel(&probes, &canonical_weights(&spec, b).unwrap()).kernel_dim)
        .collect();
    let pure = kernel(&probes, &pure_ground_state(&spec).unwrap()).kernel_dim;
    ensure(dims.iter().all(|&d| d == dims[0]), format!("dims vary with beta: {dims:?}"))?;
    ensure(dims[0] < pure, format!("thermal dim {} not below pure dim {pure}", dims[0]))?;
    Ok(format!("thermal dims {dims:?} < pure {pure}"))
}

fn c5_sufficiency_forms() -> Check {
    let hm = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let model = ModelSpec::Custom {
        sites: 3,
        spinful: false,
        h: OneBodyCoefficients::from_real(&hm).unwrap(),
        interaction: vec![],
    };
    let (h, spec) = system(&model, Sector::FixedN(1));
    let probes = one_body_hermitian_basis(h.basis());
    let labels = probes.labels();
    let unit = |name: &str| -> Vec<f64> { labels.iter().map(|l| if l == name { 1.0 } else { 0.0 }).collect() };
    let coupling = [unit("S_0_1"), unit("A_0_1")];

    let unequal = custom_weights(&spec, &[0.6, 0.4, 0.0]).unwrap();
    let equal = custom_weights(&spec, &[0.5, 0.5, 0.0]).unwrap();
    let ku = kernel(&probes, &unequal);
    let ke = kernel(&probes, &equal);
    let setup = ResponseSetup::new(&probes, &unequal).unwrap();

    // hand value: -Im Tr(rho [A_01, S_01]) = -Im(2i (0.6 - 0.4)) = -0.4
    let res = setup.sufficiency_residual(&coupling[0]).unwrap();
    let ia = labels.iter().position(|l| l == "A_0_1").unwrap();
    ensure((res.pairwise[ia] + 0.4).abs() <= 1e-12, format!("pairwise residual {} != -0.4", res.pairwise[ia]))?;
    ensure((res.commutator[ia] + 0.4).abs() <= 1e-12, format!("commutator residual {} != -0.4", res.commutator[ia]))?;

    for v in &coupling {
        ensure(ku.candidate_matrix().ncols() > 0, "empty candidate space")?;
        let dc = DVector::from_column_slice(v);
        let in_cand = ensemble_kernel::linalg::distance_to_span(&ku.candidate_matrix(), &dc);
        ensure(in_cand <= 1e-10, format!("coupling direction not a candidate ({in_cand:e})"))?;
        ensure(ku.distance_to_kernel(v) > 0.5, "coupling direction survived unequal weights")?;
        ensure(ke.distance_to_kernel(v) <= 1e-10, "coupling direction rejected with equal weights")?;
    }
    ensure(ku.sufficiency.rejected_dim == 2 && ke.sufficiency.rejected_dim == 0, "unexpected rejection counts")?;

    // form agreement on every candidate and on a degenerate triplet with unequal weights
    let (hd, sd) = system(&hubbard(2, 2.0), Sector::FixedN(2));
    let pd = one_body_hermitian_basis(hd.basis());
    let triplet = custom_weights(&sd, &[0.4, 0.25, 0.2, 0.15, 0.0, 0.0]).unwrap();
    ensure(check_monotone(&triplet).is_empty(), "triplet ensemble not monotone")?;
    let kt = kernel(&pd, &triplet);
    let mut worst = 0.0_f64;
    for rep in [&ku, &ke, &kt] {
        for r in &rep.sufficiency.residuals {
            let rel = r.max_mismatch / r.scale.max(f64::MIN_POSITIVE);
            ensure(r.max_mismatch <= 1e-10 * r.scale, format!("forms disagree: {rel:e}"))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!(
        "kernel {} (unequal) vs {} (equal); triplet rejected {}; worst mismatch {worst:.1e}·scale",
        ku.kernel_dim, ke.kernel_dim, kt.sufficiency.rejected_dim
    ))
}

fn c6_monotonicity_gate() -> Check {
    let (_, spec) = system(&hubbard(2, 2.0), Sector::FixedNSz { n: 2, twice_sz: 0 });
    let inverted = custom_weights(&spec, &[0.1, 0.2, 0.3, 0.4]).unwrap();
    let pairs = check_monotone(&inverted);
    let expected = vec![(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];
    ensure(pairs == expected, format!("violations {pairs:?}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("inverted.json");
    let text = r#"{
        "model": {"kind": "hubbard_chain", "sites": 2, "t": 1.0, "u": 2.0},
        "sector": {"N": 2, "Sz": 0},
        "ensemble": {"kind": "custom", "weights": [0.1, 0.2, 0.3, 0.4]},
        "probes": "site_density"
    }"#;
    std::fs::write(&path, text).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_ensemble-kernel"))
        .args(["kernel", "--quiet", "--spec"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    let code = out.status.code();
    ensure(code == Some(2), format!("exit code {code:?}"))?;
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).map_err(|e| e.to_string())?;
    let reported: Vec<(usize, usize)> = serde_json::from_value(err["error"]["pairs"].clone()).map_err(|e| e.to_string())?;
    ensure(reported == expected, format!("CLI pairs {reported:?}"))?;
    Ok(format!("{} violating pairs, CLI exit 2", pairs.len()))
}

fn c7_dynamics() -> Check {
    let start = Instant::now();
    let (h, spec) = system(&hubbard(3, 2.0), Sector::FixedN(3));
    let probes = one_body_hermitian_basis(h.basis());
    let ens = canonical_weights(&spec, 1.0).unwrap();
    let setup = ResponseSetup::new(&probes, &ens).unwrap();
    let kr = setup.compute_kernel(&KernelOptions::default()).unwrap();
    let other = random_non_kernel_direction(&kr.kernel_matrix(), probes.len(), 2024).unwrap();
    let template = PulseTemplate {
        shape: PulseShape::Sinusoid { omega: 1.0 },
        amplitude: 1e-4,
        t_end: 10.0,
        n_steps: 4000,
    };
    let cert = certify_kernel(&h, &setup, &kr.kernel_basis, Some(other), &template).unwrap();
    let rel = cert.convolution_relative_l2.unwrap();
    ensure(rel <= 1e-3, format!("(a) relative L2 {rel:e}"))?;
    let worst_kernel = cert.directions.iter().filter(|d| d.in_kernel).fold(0.0_f64, |a, d| a.max(d.max_response));
    for d in &cert.directions {
        ensure(d.passes, format!("direction (in kernel: {}) response {:e} vs {:e}", d.in_kernel, d.max_response, d.threshold))?;
        ensure(d.max_norm_drift <= 1e-9, format!("norm drift {:e}", d.max_norm_drift))?;
    }
    let outside = cert.directions.last().unwrap();
    ensure(!outside.in_kernel, "missing non-kernel direction")?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 60.0, format!("runtime {secs:.1}s"))?;
    Ok(format!(
        "(a) L2 {rel:.1e}; (b) {} kernel vectors, worst {worst_kernel:.1e}; (c) {:.2e} >= {:.1e}; {secs:.1}s",
        kr.kernel_dim, outside.max_response, outside.threshold
    ))
}

fn c8_canonical_vs_grand_canonical() -> Check {
    let model = hubbard(2, 2.0);
    let (h1, s1) = system(&model, Sector::FixedN(1));
    let p1 = one_body_hermitian_basis(h1.basis());
    let k1 = kernel(&p1, &canonical_weights(&s1, 1.0).unwrap());

    let (hf, _) = system(&model, Sector::Full);
    let sg = Arc::new(diagonalize_grand_canonical(&hf, 1.0, DEFAULT_TOL_ENERGY).unwrap());
    let pf = one_body_hermitian_basis(hf.basis());
    let kg = kernel(&pf, &grand_canonical_weights(&sg, 1.0, 1.0).unwrap());
    ensure(k1.kernel_dim > kg.kernel_dim, format!("dims {} vs {}", k1.kernel_dim, kg.kernel_dim))?;

    let excess = complement_within(&k1.kernel_matrix(), &kg.kernel_matrix(), 1e-8);
    ensure(excess.ncols() > 0, "no excess direction")?;
    let scale = pf.scale() * ensemble_kernel::linalg::hermitian_norm(hf.matrix());
    let mut worst_sector = 0.0_f64;
    let mut best_full = f64::INFINITY;
    for c in 0..excess.ncols() {
        let v: Vec<f64> = excess.column(c).iter().copied().collect();
        let on_sector = ensemble_kernel::linalg::commutator(h1.matrix(), &p1.combination(&v)).norm();
        let on_full = ensemble_kernel::linalg::commutator(hf.matrix(), &pf.combination(&v)).norm();
        worst_sector = worst_sector.max(on_sector);
        best_full = best_full.min(on_full);
    }
    ensure(worst_sector <= 1e-10 * scale, format!("excess does not commute on N=1: {worst_sector:e}"))?;
    ensure(best_full >= 1e-3, format!("excess commutes on the full Fock space: {best_full:e}"))?;
    Ok(format!(
        "N=1 canonical {} > grand canonical {}; {} excess directions, ||[H,L]|| {worst_sector:.1e} (N=1) vs {best_full:.2} (Fock)",
        k1.kernel_dim,
        kg.kernel_dim,
        excess.ncols()
    ))
}

fn c9_static_response() -> Check {
    let model = hubbard(2, 2.0);
    let (h, _) = system(&model, Sector::FixedN(2));
    let probes = one_body_hermitian_basis(h.basis());
    let sym = symmetry_probes(h.basis());
    let coeff = |name: &str| sym.iter().find(|s| s.label == name).unwrap().coefficients.clone();
    let can = ThermalKind::Canonical { beta: 1.0 };
    let max_abs = |d: Vec<f64>| d.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let dn = max_abs(static_thermal_response(&h, &probes, can, &coeff("N"), DEFAULT_STATIC_STEP).unwrap());
    let dz = max_abs(static_thermal_response(&h, &probes, can, &coeff("Sz"), DEFAULT_STATIC_STEP).unwrap());
    let dx = max_abs(static_thermal_response(&h, &probes, can, &coeff("Sx"), DEFAULT_STATIC_STEP).unwrap());
    ensure(dn <= 1e-9, format!("canonical number derivative {dn:e}"))?;
    ensure(dz >= 1e-3 && dx >= 1e-3, format!("spin derivatives {dz:e}, {dx:e}"))?;

    let (hf, _) = system(&model, Sector::Full);
    let pf = one_body_hermitian_basis(hf.basis());
    let symf = symmetry_probes(hf.basis());
    let nf = symf.iter().find(|s| s.label == "N").unwrap().coefficients.clone();
    let gc = ThermalKind::GrandCanonical { beta: 1.0, mu: 1.0 };
    let dg = max_abs(static_thermal_response(&hf, &pf, gc, &nf, DEFAULT_STATIC_STEP).unwrap());
    ensure(dg >= 1e-3, format!("grand canonical number derivative {dg:e}"))?;
    Ok(format!("canonical N {dn:.1e}, Sz {dz:.3}, Sx {dx:.3}; grand canonical N {dg:.3}"))
}

fn permuted(op: &ManyBodyOperator, perm: &[usize]) -> ManyBodyOperator {
    let n = perm.len();
    let m = op.matrix();
    let pm = CMat::from_fn(n, n, |r, c| m[(perm[r], perm[c])]);
    ManyBodyOperator::from_matrix(op.basis().clone(), pm, Provenance::Composite).unwrap()
}

fn c10_invariances() -> Check {
    let (h, spec) = system(&hubbard(2, 2.0), Sector::FixedN(2));
    let probes = one_body_hermitian_basis(h.basis());
    let ens = canonical_weights(&spec, 1.0).unwrap();
    let setup = ResponseSetup::new(&probes, &ens).unwrap();
    let kr = setup.compute_kernel(&KernelOptions::default()).unwrap();

    let mut dirs: Vec<(bool, Vec<f64>)> = kr.kernel_basis.iter().map(|v| (true, v.clone())).collect();
    for seed in 0..6 {
        dirs.push((false, random_non_kernel_direction(&kr.kernel_matrix(), probes.len(), seed).unwrap()));
    }
    let tol = 1e-12 * probes.scale().powi(2);
    for (expected_zero, v) in &dirs {
        let zeros: Vec<bool> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&s| setup.necessary_value(v, s).unwrap() <= tol)
            .collect();
        ensure(zeros.iter().all(|&z| z == zeros[0]), format!("zero set depends on s: {zeros:?}"))?;
        ensure(zeros[0] == *expected_zero, "zero set disagrees with the kernel")?;
    }

    let n = h.dim();
    let perm: Vec<usize> = (0..n).map(|i| (2 * n - 1 - i + 2) % n).collect();
    let hp = permuted(&h, &perm);
    let items = probes
        .probes()
        .iter()
        .map(|p| (p.label.clone(), permuted(&p.op, &perm).matrix().clone()))
        .collect();
    let pp = ProbeSet::from_matrices(h.basis(), items).unwrap();
    let sp = Arc::new(diagonalize(&hp, DEFAULT_TOL_ENERGY).unwrap());
    let mut worst = 0.0_f64;
    for (a, b) in [
        (ens.clone(), canonical_weights(&sp, 1.0).unwrap()),
        (pure_ground_state(&spec).unwrap(), pure_ground_state(&sp).unwrap()),
    ] {
        let ka = kernel(&probes, &a);
        let kb = kernel(&pp, &b);
        ensure(ka.kernel_dim == kb.kernel_dim, format!("dims {} vs {}", ka.kernel_dim, kb.kernel_dim))?;
        let angle = principal_angles(&ka.kernel_matrix(), &kb.kernel_matrix()).into_iter().fold(0.0, f64::max);
        ensure(angle <= 1e-8, format!("gauge angle {angle:e}"))?;
        worst = worst.max(angle);
    }
    Ok(format!("{} directions s-consistent; gauge angle {worst:.1e}", dirs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("density-response constant kernel", c1_constant_density_kernel),
        ("finite-temperature kernel equals commutant", c2_commutant_theorem),
        ("zero-temperature kernel excess", c3_zero_temperature_excess),
        ("kernel collapse at finite temperature", c4_kernel_collapse),
        ("sufficiency form equivalence", c5_sufficiency_forms),
        ("monotonicity gate", c6_monotonicity_gate),
        ("dynamics certification", c7_dynamics),
        ("canonical vs grand canonical", c8_canonical_vs_grand_canonical),
        ("static thermal response", c9_static_response),
        ("s-invariance and gauge invariance", c10_invariances),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}  PASS  {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2}  FAIL  {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
