//! Acceptance suite: one test per release criterion, each printing its own
//! pass line. Tolerances are pinned in code; a red test here means the
//! laboratory no longer reproduces the transport physics it was built for.

use std::f64::consts::PI;

use jumplab_cli::config::{S1Doc, S2Doc, S3Doc, S4Doc, S5Doc, ScenarioDoc};
use jumplab_cli::scenarios::run_scenario;
use jumplab_cli::ComparisonReport;

use jumplab_core::coefficients::{reduce_to_transport, TransportProfile};
use jumplab_core::kernel::{
    build_detailed_balance, JumpKernel, ProfileFn, RateField, SymmetricBase,
};
use jumplab_core::master_equation::{step_me, Closure, RateMatrix};
use jumplab_core::metrics::bin_field;
use jumplab_core::pde::{
    decay_rate, run_to, steady_state, BoundaryCondition, PdeForm, PdeProblem,
};
use jumplab_core::walkers::{
    simulate_ctrw, BinSpec, CtrwConfig, InitialPosition, JumpSampler,
};
use jumplab_core::{Grid, Interval, LatticeField};

fn pass(criterion: &str, detail: &str) {
    println!("ACCEPTANCE {criterion}: PASS ({detail})");
}

fn scenario_report(doc: ScenarioDoc) -> (ComparisonReport, tempfile::TempDir) {
    let dir = tempfile::tempdir().expect("tempdir");
    let report = run_scenario(&doc, dir.path()).expect("scenario runs");
    (report, dir)
}

fn metric(report: &ComparisonReport, key: &str) -> f64 {
    *report
        .metrics
        .get(key)
        .unwrap_or_else(|| panic!("metric {key} missing"))
}

/// Criterion 1 — closed-form kernels reduce to their analytic coefficients
/// within 1e-6 relative.
#[test]
fn criterion_01_moment_reduction() {
    let grid = Grid::new(0.0, 1.0, 64).unwrap();
    let tau1 = RateField::uniform(1.0).unwrap();

    let gaussian = JumpKernel::gaussian_iso(0.1).unwrap();
    let profile = reduce_to_transport(&gaussian, &tau1, &grid).unwrap();
    for i in 0..grid.len() {
        assert!((profile.d()[i] - 0.005).abs() / 0.005 <= 1e-6);
        assert!(profile.vprime()[i].abs() <= 1e-6 * 0.005);
    }

    let tophat = JumpKernel::tophat_iso(0.3).unwrap();
    let tau_half = RateField::uniform(2.0).unwrap();
    let profile = reduce_to_transport(&tophat, &tau_half, &grid).unwrap();
    for i in 0..grid.len() {
        assert!((profile.d()[i] - 0.03).abs() / 0.03 <= 1e-6);
    }

    let shifted = JumpKernel::shifted_gaussian_iso(0.1, 0.02).unwrap();
    let profile = reduce_to_transport(&shifted, &tau1, &grid).unwrap();
    for i in 0..grid.len() {
        assert!((profile.vprime()[i] - 0.02).abs() / 0.02 <= 1e-6);
    }
    pass("c01 moment reduction", "D and V' match closed forms to 1e-6");
}

/// Criterion 2 — the midpoint balance construction satisfies the two-point
/// rate identity to 1e-12 and is gradient-form diffusive to second order.
#[test]
fn criterion_02_detailed_balance_fick() {
    let grid = Grid::new(0.0, 1.0, 256).unwrap();
    let modulation = ProfileFn::Sinusoidal {
        offset: 1.0,
        amplitude: 0.5,
        frequency: 1.0,
        phase: 0.0,
    };

    let defect = |sigma: f64| -> f64 {
        let (kernel, rate) = build_detailed_balance(
            SymmetricBase::Gaussian { sigma },
            modulation.clone(),
            6.0 * sigma,
            &grid,
        )
        .unwrap();
        // pointwise two-point residual
        for &x in &[0.15, 0.5, 0.85] {
            for &d in &[0.5 * sigma, 2.0 * sigma, 5.0 * sigma] {
                let res =
                    jumplab_core::coefficients::detailed_balance_residual(&kernel, &rate, x, d)
                        .unwrap();
                let scale = kernel.evaluate(d, x).unwrap() * rate.rate(x).unwrap();
                assert!(res.abs() <= 1e-12 * scale, "residual {res} at x={x}, d={d}");
            }
        }
        let profile = reduce_to_transport(&kernel, &rate, &grid).unwrap();
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        sup(profile.v()) / sup(&profile.ddx_of_d())
    };

    let base = defect(0.05);
    assert!(base <= 0.05, "Fick defect {base}");
    let improvement = base / defect(0.025);
    assert!(
        (3.0..=5.0).contains(&improvement),
        "improvement {improvement}"
    );
    pass(
        "c02 detailed balance => Fick",
        &format!("defect {base:.4}, halving improves x{improvement:.2}"),
    );
}

/// Criterion 3 — conservative closure conserves mass to 1e-10 over 1e5 steps;
/// the uniform field is stationary for homogeneous balanced generators.
#[test]
fn criterion_03_me_conservation_and_stationarity() {
    let grid = Grid::new(0.0, 1.0, 64).unwrap();
    let kernel = JumpKernel::tophat_iso(0.2).unwrap();
    let rate = RateField::uniform(1.0).unwrap();
    let gen = RateMatrix::assemble(&kernel, &rate, &grid, Closure::Conservative).unwrap();
    let mut field = LatticeField::from_fn(grid, |x| 1.0 + (7.0 * x).sin().abs()).unwrap();
    let mass0 = field.mass();
    let mut worst_drift: f64 = 0.0;
    let mut worst_negativity: f64 = 0.0;
    for step in 0..100_000 {
        field = step_me(&field, &gen, 0.45).unwrap();
        if step % 997 == 0 {
            worst_drift = worst_drift.max((field.mass() - mass0).abs() / mass0);
            worst_negativity = worst_negativity.min(field.min() / field.max());
        }
    }
    worst_drift = worst_drift.max((field.mass() - mass0).abs() / mass0);
    assert!(worst_drift <= 1e-10, "mass drift {worst_drift}");
    assert!(worst_negativity >= -1e-14, "negativity {worst_negativity}");

    let (db_kernel, db_rate) = build_detailed_balance(
        SymmetricBase::Gaussian { sigma: 0.05 },
        ProfileFn::Constant(1.0),
        0.3,
        &grid,
    )
    .unwrap();
    let db_gen = RateMatrix::assemble(&db_kernel, &db_rate, &grid, Closure::Conservative).unwrap();
    let uniform = LatticeField::from_fn(grid, |_| 1.0).unwrap();
    let mut du = vec![0.0; grid.len()];
    db_gen.apply_into(uniform.values(), &mut du);
    let drift_rate = du.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(drift_rate <= 1e-10, "uniform drift rate {drift_rate}");
    pass(
        "c03 conservation & stationarity",
        &format!("drift {worst_drift:.2e} over 1e5 steps, uniform drift {drift_rate:.2e}/time"),
    );
}

/// Criterion 4 — the binned walker density tracks the lattice field within
/// four Poisson standard errors per bin at t = 0.5 and t = 1.
#[test]
fn criterion_04_me_walker_equivalence() {
    let kernel = JumpKernel::gaussian_iso(0.05).unwrap();
    let rate = RateField::uniform(1.0).unwrap();
    let grid = Grid::new(-0.5, 1.5, 1024).unwrap();
    let gen = RateMatrix::assemble(&kernel, &rate, &grid, Closure::Conservative).unwrap();

    let n_walkers = 100_000u64;
    let bins = BinSpec::new(0.0, 1.0, 64).unwrap();
    let sampler = JumpSampler::new(&kernel, None).unwrap();
    let cfg = CtrwConfig {
        t_end: 1.0,
        snapshots: vec![0.5, 1.0],
        bins,
        initial: InitialPosition::Point(0.5),
        n_walkers,
        seed: 2024,
        record_jumps: false,
    };
    let run = simulate_ctrw(&rate, &sampler, &cfg).unwrap();

    let mut field = LatticeField::point_mass(grid, 0.5, 1.0).unwrap();
    let mut worst_z: f64 = 0.0;
    for snap in &run.snapshots {
        while field.time() < snap.time - 1e-12 {
            field = step_me(&field, &gen, 0.05).unwrap();
        }
        let me_density = bin_field(&field, bins);
        for (b, me_d) in me_density.iter().enumerate() {
            let expected = me_d * bins.width() * n_walkers as f64;
            let observed = snap.counts[b] as f64;
            if expected < 1e-9 {
                assert_eq!(observed, 0.0);
                continue;
            }
            worst_z = worst_z.max((observed - expected).abs() / expected.sqrt());
        }
    }
    assert!(worst_z <= 4.0, "worst Poisson z = {worst_z}");
    pass(
        "c04 ME-walker equivalence",
        &format!("worst bin z = {worst_z:.2} over 128 bin-time pairs"),
    );
}

/// Criterion 5 — gaussianization: tabulated kurtosis equals -1.2/n to 1e-6
/// for n = 2..40, Monte Carlo agrees within error, KS(n=100) < 0.01.
#[test]
fn criterion_05_clt_gaussianization() {
    let (report, _dir) = scenario_report(ScenarioDoc::S4(S4Doc::default()));
    let oracle_dev = metric(&report, "kappa_oracle_max_dev");
    assert!(oracle_dev <= 1e-6, "oracle kurtosis deviation {oracle_dev}");
    let mc_z = metric(&report, "kappa_mc_max_z");
    assert!(mc_z <= 4.0, "Monte Carlo kurtosis z {mc_z}");
    let exponent = metric(&report, "kurtosis_exponent");
    assert!((exponent + 1.0).abs() <= 0.1, "decay exponent {exponent}");
    let ks1 = metric(&report, "ks_oracle_n1");
    let ks100 = metric(&report, "ks_oracle_n100");
    assert!(ks100 < ks1, "KS did not decrease: {ks1} -> {ks100}");
    assert!(ks100 < 0.01, "oracle KS at n=100: {ks100}");
    let ks_mc = metric(&report, "ks_mc_n100");
    assert!(ks_mc < 0.01, "Monte Carlo KS at n=100: {ks_mc}");
    pass(
        "c05 CLT gaussianization",
        &format!("kurtosis dev {oracle_dev:.1e}, KS(100) {ks100:.1e}, exponent {exponent:.3}"),
    );
}

/// Criterion 6 — diffusion-solver analytics: eigenmode decay, inhomogeneous
/// steady state, and the discrete form-equivalence order.
#[test]
fn criterion_06_pde_analytics() {
    // sine mode decays at D pi^2 within 2%
    let grid = Grid::new(0.0, 1.0, 128).unwrap();
    let d0 = 0.005;
    let dirichlet = BoundaryCondition::Dirichlet { value: 0.0 };
    let problem = PdeProblem::new(
        PdeForm::Fick,
        TransportProfile::from_fick(grid, |_| d0, |_| 0.0).unwrap(),
        dirichlet,
        dirichlet,
        LatticeField::from_fn(grid, |x| (PI * x).sin()).unwrap(),
    )
    .unwrap();
    let lambda = decay_rate(&problem, (5.0, 15.0)).unwrap();
    let analytic = d0 * PI * PI;
    assert!(
        (lambda - analytic).abs() / analytic <= 0.02,
        "decay {lambda} vs {analytic}"
    );

    // divergence-form steady state with D ∝ (1+x): u = 1/(ln2 (1+x)) within 1%
    let zero_flux = BoundaryCondition::NeumannFlux { flux: 0.0 };
    let problem = PdeProblem::new(
        PdeForm::FokkerPlanck,
        TransportProfile::from_fpe(grid, |x| 0.005 * (1.0 + x), |_| 0.0).unwrap(),
        zero_flux,
        zero_flux,
        LatticeField::uniform_on(grid, Interval::new(0.0, 1.0).unwrap(), 1.0).unwrap(),
    )
    .unwrap();
    let steady = steady_state(&problem, 1e-10, 5_000_000).unwrap();
    assert!(steady.converged);
    let ln2 = std::f64::consts::LN_2;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, u) in grid.centers().zip(steady.field.values()) {
        let exact = 1.0 / (ln2 * (1.0 + x));
        num += (u - exact) * (u - exact);
        den += exact * exact;
    }
    let l2 = (num / den).sqrt();
    assert!(l2 <= 0.01, "steady L2 error {l2}");

    // divergence form with V' = dD/dx equals gradient form with V = 0 at O(h²)
    let gap = |n: usize| {
        let grid = Grid::new(0.0, 1.0, n).unwrap();
        let d_fn = |x: f64| 0.004 + 0.002 * (2.0 * PI * x).sin();
        let dd_fn = |x: f64| 0.002 * 2.0 * PI * (2.0 * PI * x).cos();
        let init = LatticeField::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x).sin()).unwrap();
        let fick = PdeProblem::new(
            PdeForm::Fick,
            TransportProfile::from_fick(grid, d_fn, |_| 0.0).unwrap(),
            zero_flux,
            zero_flux,
            init.clone(),
        )
        .unwrap();
        let fpe = PdeProblem::new(
            PdeForm::FokkerPlanck,
            TransportProfile::from_fpe(grid, d_fn, dd_fn).unwrap(),
            zero_flux,
            zero_flux,
            init,
        )
        .unwrap();
        let a = run_to(&fick, 2.0, 0.5).unwrap();
        let b = run_to(&fpe, 2.0, 0.5).unwrap();
        let num: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        let den: f64 = b.values().iter().map(|y| y * y).sum();
        (num / den).sqrt()
    };
    let ratio = gap(64) / gap(128);
    assert!((3.0..=5.0).contains(&ratio), "h-halving ratio {ratio}");
    pass(
        "c06 PDE analytics",
        &format!("decay within 2%, steady L2 {l2:.1e}, equivalence ratio {ratio:.2}"),
    );
}

/// Criterion 7 — reflecting smooth wall: lattice equilibrium matches the
/// zero-flux gradient-form solution, strictly better than the divergence form
/// once the modulation varies.
#[test]
fn criterion_07_scenario_s1_reflecting() {
    let homogeneous = S1Doc {
        modulation_amplitude: 0.0,
        ..S1Doc::default()
    };
    let (report, _dir) = scenario_report(ScenarioDoc::S1(homogeneous));
    let l2 = metric(&report, "rel_l2_fick");
    assert!(l2 <= 1e-3, "homogeneous interior L2 {l2}");
    let mass = report.mass.expect("mass ledger");
    assert!(mass.closure_defect() <= 1e-9 * mass.initial);

    let (report, _dir) = scenario_report(ScenarioDoc::S1(S1Doc::default()));
    let fick = metric(&report, "rel_l2_fick");
    let fpe = metric(&report, "rel_l2_fpe");
    assert!(fick < fpe, "fick {fick} !< fpe {fpe}");
    pass(
        "c07 S1 reflecting/smooth",
        &format!("homogeneous L2 {l2:.1e}; modulated fick {fick:.1e} < fpe {fpe:.1e}"),
    );
}

/// Criterion 8 — absorbing smooth wall: slowest lattice decay rate within 15%
/// of the analytic Dirichlet eigenvalue, improving and scaling as sigma².
#[test]
fn criterion_08_scenario_s2_absorbing() {
    let (report, _dir) = scenario_report(ScenarioDoc::S2(S2Doc::default()));
    let ratio = metric(&report, "lambda_ratio");
    assert!((ratio - 1.0).abs() <= 0.15, "lambda ratio {ratio}");
    let half_ratio = metric(&report, "lambda_half_ratio_analytic");
    assert!(
        (half_ratio - 1.0).abs() < (ratio - 1.0).abs(),
        "ratio does not improve: {ratio} -> {half_ratio}"
    );
    let sigma_ratio = metric(&report, "lambda_sigma_ratio");
    assert!(
        (sigma_ratio - 4.0).abs() / 4.0 <= 0.1,
        "sigma^2 scaling ratio {sigma_ratio}"
    );
    pass(
        "c08 S2 absorbing/smooth",
        &format!("lambda/analytic {ratio:.4}, halved-sigma {half_ratio:.4}, scaling {sigma_ratio:.3}"),
    );
}

/// Criterion 9 — sharp interface: the diffusive description fails only within
/// four mean jump lengths of the wall, and the layer scales with the jump.
#[test]
fn criterion_09_scenario_s3_sharp() {
    let (report, _dir) = scenario_report(ScenarioDoc::S3(S3Doc::default()));
    let width = metric(&report, "layer_width");
    let mean_jump = metric(&report, "mean_jump_length");
    assert!(
        width <= 4.0 * mean_jump,
        "layer width {width} vs cap {}",
        4.0 * mean_jump
    );
    let scaling = metric(&report, "layer_width_scaling_ratio");
    assert!(
        (1.4..=2.6).contains(&scaling),
        "width scaling under sigma doubling: {scaling}"
    );
    pass(
        "c09 S3 sharp interface",
        &format!("width {width:.2e} <= 4<|d|> = {:.2e}, doubling ratio {scaling:.2}", 4.0 * mean_jump),
    );
}

/// Criterion 10 — reruns with the same configuration and seed are
/// byte-identical, whatever the thread count.
#[test]
fn criterion_10_reproducibility() {
    let artifacts = |dir: &std::path::Path, report: &ComparisonReport| -> Vec<(String, Vec<u8>)> {
        report
            .artifacts
            .iter()
            .map(|name| (name.clone(), std::fs::read(dir.join(name)).expect("artifact")))
            .collect()
    };

    // stochastic pipeline twice under different thread counts
    let doc = ScenarioDoc::S5(S5Doc::default());
    let mut outputs = Vec::new();
    for threads in [1usize, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = pool
            .install(|| run_scenario(&doc, dir.path()))
            .expect("scenario runs");
        outputs.push(artifacts(dir.path(), &report));
    }
    assert_eq!(outputs[0], outputs[1], "thread count changed the artifacts");

    // Monte Carlo and deterministic presets twice in a row
    for doc in [
        ScenarioDoc::S4(S4Doc::default()),
        ScenarioDoc::S2(S2Doc::default()),
    ] {
        let (r1, d1) = scenario_report(doc.clone());
        let (r2, d2) = scenario_report(doc);
        assert_eq!(
            artifacts(d1.path(), &r1),
            artifacts(d2.path(), &r2),
            "rerun changed the artifacts"
        );
    }
    pass(
        "c10 reproducibility",
        "byte-identical artifacts across reruns and thread counts",
    );
}
