//! Command pipelines: experiment presets S1–S5, the custom pipeline, and the
//! single-stage commands (coeffs, me-run, walk, pde-run, compare).
//!
//! Every run writes its CSV artifacts plus one `report.json` into the output
//! directory. On a stage failure the report is still written, carrying the
//! failing stage and a failure marker, and the error propagates to the exit
//! code.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use jumplab_core::coefficients::{
    check_resolution, detailed_balance_residual, reduce_to_transport, truncation_diagnostic,
    Resolution, TransportProfile,
};
use jumplab_core::kernel::{JumpKernel, RateField};
use jumplab_core::master_equation::{
    evolve_to_steady, step_me, Closure, RateMatrix,
};
use jumplab_core::metrics::{
    bin_field, boundary_layer_width, compare_fields, fit_log_slope,
};
use jumplab_core::pde::{
    decay_rate, steady_state, BoundaryCondition, PdeForm, PdeProblem,
};
use jumplab_core::walkers::{
    convolution_powers, estimate_km, propagator_statistics, BinSpec, CtrwConfig, JumpSampler,
};
use jumplab_core::{Grid, Interval, LatticeField};

use crate::config::*;
use crate::csvio;
use crate::report::{ComparisonReport, MassLedger, Provenance};
use crate::{parallel, CliError, Result};

type StageResult<T> = std::result::Result<T, (&'static str, CliError)>;

fn stage<T, E: Into<CliError>>(
    name: &'static str,
    result: std::result::Result<T, E>,
) -> StageResult<T> {
    result.map_err(|e| (name, e.into()))
}

fn finish(
    mut report: ComparisonReport,
    out: &Path,
    result: StageResult<()>,
) -> Result<ComparisonReport> {
    match result {
        Ok(()) => {
            report.validate_finite()?;
            report.push_artifact("report.json");
            report.artifacts.sort();
            report.write(&out.join("report.json"))?;
            Ok(report)
        }
        Err((stage_name, err)) => {
            report.mark_failed(stage_name, &err.to_string());
            report.push_artifact("report.json");
            report.artifacts.sort();
            let _ = report.write(&out.join("report.json"));
            Err(err)
        }
    }
}

fn new_report<T: Serialize>(
    command: &str,
    scenario: Option<&str>,
    doc: &T,
    seed: Option<u64>,
) -> Result<ComparisonReport> {
    Ok(ComparisonReport::new(
        command,
        scenario,
        Provenance::new(doc, seed)?,
    ))
}

/// March a lattice field, emitting a snapshot CSV at each requested time.
fn march_me_with_snapshots(
    gen: &RateMatrix,
    mut field: LatticeField,
    snapshots: &[f64],
    t_end: f64,
    dt_safety: f64,
    out: &Path,
    prefix: &str,
    report: &mut ComparisonReport,
) -> Result<LatticeField> {
    let dt = gen.dt_bound() * dt_safety.clamp(1e-6, 1.0);
    let mut targets: Vec<f64> = snapshots.to_vec();
    if targets.last().copied() != Some(t_end) {
        targets.push(t_end);
    }
    for (idx, &target) in targets.iter().enumerate() {
        let remaining = target - field.time();
        if remaining > 0.0 {
            let steps = (remaining / dt).ceil().max(1.0) as usize;
            let dt_actual = remaining / steps as f64;
            for _ in 0..steps {
                field = step_me(&field, gen, dt_actual)?;
            }
        }
        if idx < snapshots.len() {
            let name = format!("{prefix}_{idx:03}.csv");
            csvio::write_field_csv(&out.join(&name), &field)?;
            report.push_artifact(&name);
        }
    }
    Ok(field)
}

/// Max relative detailed-balance residual over a small probe set.
fn db_residual_norm(kernel: &JumpKernel, rate: &RateField) -> Result<f64> {
    let width = kernel.width_at(0.5)?;
    let mut worst: f64 = 0.0;
    for &x in &[0.2, 0.5, 0.8] {
        for &d in &[0.5 * width, 2.0 * width, 4.0 * width] {
            let res = detailed_balance_residual(kernel, rate, x, d)?;
            let scale = kernel.evaluate(d, x)? * rate.rate(x)?;
            if scale > 0.0 {
                worst = worst.max(res.abs() / scale);
            }
        }
    }
    Ok(worst)
}

fn resolution_metric(kernel: &JumpKernel, grid: &Grid) -> Result<f64> {
    Ok(match check_resolution(kernel, grid)? {
        Resolution::Resolved => 0.0,
        Resolution::Marginal => 1.0,
    })
}

// ---------------------------------------------------------------------------
// scenario dispatch

pub fn run_scenario(doc: &ScenarioDoc, out: &Path) -> Result<ComparisonReport> {
    std::fs::create_dir_all(out)?;
    let report = new_report("scenario", Some(doc.name()), doc, doc.seed())?;
    let mut report = report;
    let result = match doc {
        ScenarioDoc::S1(d) => s1(d, out, &mut report),
        ScenarioDoc::S2(d) => s2(d, out, &mut report),
        ScenarioDoc::S3(d) => s3(d, out, &mut report),
        ScenarioDoc::S4(d) => s4(d, out, &mut report),
        ScenarioDoc::S5(d) => s5(d, out, &mut report),
        ScenarioDoc::Custom(d) => custom(d, out, &mut report),
    };
    finish(report, out, result)
}

// ---------------------------------------------------------------------------
// S1: reflecting, smooth wall

fn s1_modulation(d: &S1Doc) -> Result<jumplab_core::kernel::ProfileFn> {
    use jumplab_core::kernel::{ProfileFn, Side, TransitionProfile};
    let eps = d.epsilon_factor * d.sigma;
    Ok(ProfileFn::Product(vec![
        ProfileFn::Constant(d.rate_scale),
        ProfileFn::Sinusoidal {
            offset: 1.0,
            amplitude: d.modulation_amplitude,
            frequency: 1.0,
            phase: 0.0,
        },
        ProfileFn::Transition(
            TransitionProfile::new(1.0, eps, d.floor, Side::Upper)
                .map_err(CliError::from)?,
        ),
        ProfileFn::Transition(
            TransitionProfile::new(0.0, eps, d.floor, Side::Lower)
                .map_err(CliError::from)?,
        ),
    ]))
}

fn s1(d: &S1Doc, out: &Path, report: &mut ComparisonReport) -> StageResult<()> {
    use jumplab_core::kernel::{build_detailed_balance, SymmetricBase};

    let eps = d.epsilon_factor * d.sigma;
    let margin = 6.0 * d.sigma + 2.0 * eps;
    let grid = stage("grid", Grid::new(-margin, 1.0 + margin, d.cells))?;
    let interior = stage("grid", Interval::new(0.0, 1.0))?;

    let modulation = stage("kernel", s1_modulation(d))?;
    let (kernel, rate) = stage(
        "kernel",
        build_detailed_balance(
            SymmetricBase::Gaussian { sigma: d.sigma },
            modulation,
            6.0 * d.sigma,
            &grid,
        ),
    )?;
    report.insert("epsilon", eps);
    report.insert(
        "mean_jump_length",
        stage("kernel", kernel.mean_jump_length(0.5))?,
    );
    report.insert(
        "db_residual_rel_max",
        stage("kernel", db_residual_norm(&kernel, &rate))?,
    );
    report.insert("resolution_marginal", stage("kernel", resolution_metric(&kernel, &grid))?);

    let gen = stage(
        "assemble",
        RateMatrix::assemble(&kernel, &rate, &grid, Closure::Conservative),
    )?;

    let init = stage(
        "evolve",
        LatticeField::from_fn(grid, |x| {
            if (0.0..=1.0).contains(&x) {
                1.0 + 0.2 * (-((x - 0.5) / 0.1) * ((x - 0.5) / 0.1)).exp()
            } else {
                0.0
            }
        }),
    )?;
    let initial_mass = init.mass();
    let me = stage("evolve", evolve_to_steady(&init, &gen, d.tol, d.t_max))?;
    report.insert("me_residual", me.residual);
    report.insert("me_converged", f64::from(me.converged));
    report.insert("me_steps", me.steps as f64);
    stage("evolve", csvio::write_field_csv(&out.join("me_steady.csv"), &me.field))?;
    report.push_artifact("me_steady.csv");

    let transport = stage("reduce", reduce_to_transport(&kernel, &rate, &grid))?;
    stage("reduce", csvio::write_profile_csv(&out.join("transport.csv"), &transport))?;
    report.push_artifact("transport.csv");

    // diffusion companions on the interior sub-grid, zero-flux walls
    let cells = grid.cells_in(interior);
    let sub = stage("pde", grid.subgrid(cells.clone()))?;
    let me_norm = stage("compare", me.field.normalized_on(interior))?;
    let me_interior = stage(
        "compare",
        LatticeField::new(sub, me_norm.values()[cells.clone()].to_vec(), me.field.time()),
    )?;
    let restricted = stage("pde", transport.restricted(cells))?;
    let uniform = stage("pde", LatticeField::uniform_on(sub, interior, 1.0))?;
    let zero_flux = BoundaryCondition::NeumannFlux { flux: 0.0 };

    let companion = |form: PdeForm,
                         profile: TransportProfile,
                         file: &str|
     -> StageResult<LatticeField> {
        let problem = stage(
            "pde",
            PdeProblem::new(form, profile, zero_flux, zero_flux, uniform.clone()),
        )?;
        let steady = stage("pde", steady_state(&problem, 1e-9, 5_000_000))?;
        let norm = stage("pde", steady.field.normalized_on(interior))?;
        stage("pde", csvio::write_field_csv(&out.join(file), &norm))?;
        Ok(norm)
    };
    let fick_norm = companion(PdeForm::Fick, restricted.with_zero_v(), "pde_fick_steady.csv")?;
    report.push_artifact("pde_fick_steady.csv");
    let fpe_norm = companion(PdeForm::FokkerPlanck, restricted.clone(), "pde_fpe_steady.csv")?;
    report.push_artifact("pde_fpe_steady.csv");

    let fick_err = stage("compare", compare_fields(&me_interior, &fick_norm, interior))?;
    let fpe_err = stage("compare", compare_fields(&me_interior, &fpe_norm, interior))?;
    report.insert("rel_l2_fick", fick_err.rel_l2);
    report.insert("rel_sup_fick", fick_err.rel_sup);
    report.insert("rel_l2_fpe", fpe_err.rel_l2);
    report.insert("rel_sup_fpe", fpe_err.rel_sup);
    let layer = stage(
        "compare",
        boundary_layer_width(&me_interior, &fick_norm, interior, 0.05),
    )?;
    report.insert("layer_width_fick", layer.max());

    report.mass = Some(MassLedger::new(
        initial_mass,
        me.field.interior_mass(interior),
        me.field.mass(),
    ));
    Ok(())
}

// ---------------------------------------------------------------------------
// S2 / S3 shared assembly: absorbing walls at 0 and 1

struct AbsorbingRun {
    grid: Grid,
    sub: Grid,
    rate_me: f64,
    me_mode: LatticeField,
    kernel: JumpKernel,
    rate: RateField,
    gen: RateMatrix,
    xstar: f64,
    pde_mode: LatticeField,
}

fn absorbing_mode(
    sigma: f64,
    tau: f64,
    epsilon_factor: f64,
    margin: f64,
    cells: usize,
) -> Result<AbsorbingRun> {
    use jumplab_core::kernel::{Side, TransitionProfile};
    let eps = epsilon_factor * sigma;
    let kernel = JumpKernel::gaussian_iso(sigma)?;
    let rate = RateField::uniform(1.0 / tau)?
        .with_suppression(TransitionProfile::new(1.0, eps, 0.0, Side::Upper)?)
        .with_suppression(TransitionProfile::new(0.0, eps, 0.0, Side::Lower)?);
    let grid = Grid::new(-margin, 1.0 + margin, cells)?;
    let gen = RateMatrix::assemble(&kernel, &rate, &grid, Closure::Conservative)?;
    let interior = Interval::new(0.0, 1.0)?;
    let cells_range = grid.cells_in(interior);
    let mode = gen.interior_decay_mode(cells_range.clone())?;
    let sub = grid.subgrid(cells_range)?;
    let me_mode =
        LatticeField::new(sub, mode.mode.clone(), 0.0)?.normalized_on(interior)?;

    // effective domain from the measured rate: the diffusive mode extends an
    // extrapolation length x* past each nominal wall
    let d_coeff = 0.5 * sigma * sigma / tau;
    let analytic = d_coeff * PI * PI;
    let xstar = (((analytic / mode.rate).sqrt() - 1.0) / 2.0).max(0.0);
    let l_eff = 1.0 + 2.0 * xstar;
    let pde_mode = LatticeField::from_fn(sub, |x| (PI * (x + xstar) / l_eff).sin())?
        .normalized_on(interior)?;

    Ok(AbsorbingRun {
        grid,
        sub,
        rate_me: mode.rate,
        me_mode,
        kernel,
        rate,
        gen,
        xstar,
        pde_mode,
    })
}

fn s2(d: &S2Doc, out: &Path, report: &mut ComparisonReport) -> StageResult<()> {
    let interior = stage("grid", Interval::new(0.0, 1.0))?;
    let run = stage(
        "eigen",
        absorbing_mode(d.sigma, d.tau, d.epsilon_factor, d.margin, d.cells),
    )?;
    let d_coeff = 0.5 * d.sigma * d.sigma / d.tau;
    let analytic = d_coeff * PI * PI;
    report.insert("lambda_me", run.rate_me);
    report.insert("lambda_analytic", analytic);
    report.insert("lambda_ratio", run.rate_me / analytic);
    report.insert("xstar_fitted", run.xstar);
    report.insert(
        "mean_jump_length",
        stage("eigen", run.kernel.mean_jump_length(0.5))?,
    );
    // wall-placement sensitivity: Dirichlet at the ramp ends instead
    let eps = d.epsilon_factor * d.sigma;
    report.insert("lambda_analytic_wall_inner", analytic / ((1.0 - 2.0 * eps) * (1.0 - 2.0 * eps)));
    report.insert("lambda_analytic_wall_outer", analytic / ((1.0 + 2.0 * eps) * (1.0 + 2.0 * eps)));

    stage("eigen", csvio::write_field_csv(&out.join("me_mode.csv"), &run.me_mode))?;
    report.push_artifact("me_mode.csv");
    stage("eigen", csvio::write_field_csv(&out.join("pde_mode.csv"), &run.pde_mode))?;
    report.push_artifact("pde_mode.csv");
    let mode_err = stage("compare", compare_fields(&run.me_mode, &run.pde_mode, interior))?;
    report.insert("mode_rel_l2", mode_err.rel_l2);

    // diffusion companion: divergence form, zero walls on the sub-grid
    let transport = stage("pde", reduce_to_transport(&run.kernel, &run.rate, &run.grid))?;
    let restricted = stage("pde", transport.restricted(run.grid.cells_in(interior)))?;
    let sub = run.sub;
    let sin_init = stage("pde", LatticeField::from_fn(sub, |x| (PI * x).sin()))?;
    let problem = stage(
        "pde",
        PdeProblem::new(
            PdeForm::FokkerPlanck,
            restricted,
            BoundaryCondition::Dirichlet { value: 0.0 },
            BoundaryCondition::Dirichlet { value: 0.0 },
            sin_init,
        ),
    )?;
    let window = (0.8 / analytic, 2.4 / analytic);
    let lambda_pde = stage("pde", decay_rate(&problem, window))?;
    report.insert("lambda_pde_fit", lambda_pde);
    report.insert("lambda_pde_ratio", lambda_pde / analytic);

    // short march for the mass ledger and a decay cross-check
    let init = stage("march", LatticeField::uniform_on(run.grid, interior, 1.0))?;
    let t_march = 1.2 / analytic;
    let samples = 24usize;
    let mut field = init.clone();
    let mut decay_rows = Vec::new();
    let mut fit_points = Vec::new();
    for k in 1..=samples {
        let target = t_march * k as f64 / samples as f64;
        field = stage(
            "march",
            march_me_plain(&run.gen, field, target),
        )?;
        let m = field.interior_mass(interior);
        decay_rows.push(vec![format!("{}", field.time()), format!("{m}")]);
        if k > samples / 2 {
            fit_points.push((field.time(), m.ln()));
        }
    }
    stage(
        "march",
        csvio::write_table_csv(&out.join("me_decay.csv"), "t,interior_mass", &decay_rows),
    )?;
    report.push_artifact("me_decay.csv");
    let slope = ls_slope_pairs(&fit_points);
    report.insert("lambda_me_march", -slope);
    stage("march", csvio::write_field_csv(&out.join("me_final.csv"), &field))?;
    report.push_artifact("me_final.csv");
    report.mass = Some(MassLedger::new(
        init.mass(),
        field.interior_mass(interior),
        field.mass(),
    ));

    if d.check_sigma_scaling {
        let half = stage(
            "sigma_scaling",
            absorbing_mode(d.sigma / 2.0, d.tau, d.epsilon_factor, d.margin, d.cells * 2),
        )?;
        report.insert("lambda_half_sigma", half.rate_me);
        report.insert("lambda_sigma_ratio", run.rate_me / half.rate_me);
        report.insert(
            "lambda_half_ratio_analytic",
            half.rate_me / (0.25 * analytic),
        );
    }
    Ok(())
}

fn march_me_plain(gen: &RateMatrix, mut field: LatticeField, target: f64) -> Result<LatticeField> {
    let dt = gen.dt_bound();
    while field.time() < target {
        let step = dt.min(target - field.time());
        field = step_me(&field, gen, step)?;
    }
    Ok(field)
}

fn ls_slope_pairs(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in points {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn s3(d: &S3Doc, out: &Path, report: &mut ComparisonReport) -> StageResult<()> {
    let interior = stage("grid", Interval::new(0.0, 1.0))?;
    let cells_for = |sigma: f64| ((1.0 + 2.0 * d.margin) / (sigma / d.cells_per_sigma)).round() as usize;

    let run = stage(
        "eigen",
        absorbing_mode(d.sigma, d.tau, d.epsilon_factor, d.margin, cells_for(d.sigma)),
    )?;
    let mean_jump = stage("eigen", run.kernel.mean_jump_length(0.5))?;
    let d_coeff = 0.5 * d.sigma * d.sigma / d.tau;
    let analytic = d_coeff * PI * PI;
    report.insert("lambda_me", run.rate_me);
    report.insert("lambda_analytic", analytic);
    report.insert("lambda_ratio", run.rate_me / analytic);
    report.insert("xstar_fitted", run.xstar);
    report.insert("mean_jump_length", mean_jump);
    report.insert("epsilon", d.epsilon_factor * d.sigma);

    stage("eigen", csvio::write_field_csv(&out.join("me_mode.csv"), &run.me_mode))?;
    report.push_artifact("me_mode.csv");
    stage("eigen", csvio::write_field_csv(&out.join("pde_mode.csv"), &run.pde_mode))?;
    report.push_artifact("pde_mode.csv");

    // pointwise discrepancy profile
    let mut rows = Vec::new();
    let peak = run.pde_mode.max();
    for i in 0..run.sub.len() {
        let me = run.me_mode.values()[i];
        let pde = run.pde_mode.values()[i];
        let rel = (me - pde).abs() / pde.abs().max(1e-6 * peak);
        rows.push(vec![
            format!("{}", run.sub.center(i)),
            format!("{me}"),
            format!("{pde}"),
            format!("{rel}"),
        ]);
    }
    stage(
        "compare",
        csvio::write_table_csv(&out.join("discrepancy.csv"), "x,me,pde,rel", &rows),
    )?;
    report.push_artifact("discrepancy.csv");

    let widths = stage(
        "compare",
        boundary_layer_width(&run.me_mode, &run.pde_mode, interior, d.threshold),
    )?;
    report.insert("layer_width_left", widths.left);
    report.insert("layer_width_right", widths.right);
    report.insert("layer_width", widths.max());
    report.insert("layer_width_over_mean_jump", widths.max() / mean_jump);

    // same comparison against the nominal-wall diffusive mode, for reference
    let naive = stage(
        "compare",
        LatticeField::from_fn(run.sub, |x| (PI * x).sin()),
    )?;
    let naive = stage("compare", naive.normalized_on(interior))?;
    let naive_widths = stage(
        "compare",
        boundary_layer_width(&run.me_mode, &naive, interior, d.threshold),
    )?;
    report.insert("layer_width_nominal_wall", naive_widths.max());

    if d.check_width_scaling {
        let doubled = stage(
            "width_scaling",
            absorbing_mode(
                2.0 * d.sigma,
                d.tau,
                d.epsilon_factor,
                d.margin,
                cells_for(2.0 * d.sigma),
            ),
        )?;
        let widths2 = stage(
            "width_scaling",
            boundary_layer_width(&doubled.me_mode, &doubled.pde_mode, interior, d.threshold),
        )?;
        report.insert("layer_width_sigma_doubled", widths2.max());
        report.insert("layer_width_scaling_ratio", widths2.max() / widths.max());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// S4: gaussianization of the n-step propagator

fn s4(d: &S4Doc, out: &Path, report: &mut ComparisonReport) -> StageResult<()> {
    let kernel = stage("kernel", JumpKernel::tophat_iso(d.halfwidth))?;
    let n_max = d.n_oracle_max.max(d.n_list.iter().copied().max().unwrap_or(2));

    let powers = stage(
        "oracle",
        convolution_powers(&kernel, n_max, d.halfwidth / d.oracle_nodes as f64),
    )?;
    let mut worst_dev: f64 = 0.0;
    let mut oracle_rows: Vec<(usize, f64)> = Vec::new();
    for n in 2..=n_max {
        let kappa = powers[n - 1].excess_kurtosis();
        worst_dev = worst_dev.max((kappa + 1.2 / n as f64).abs());
        oracle_rows.push((n, kappa));
    }
    report.insert("kappa_oracle_max_dev", worst_dev);

    let fit_points: Vec<(f64, f64)> = d
        .n_list
        .iter()
        .map(|n| (*n as f64, powers[n - 1].excess_kurtosis()))
        .collect();
    let exponent = stage("oracle", fit_log_slope(&fit_points))?;
    report.insert("kurtosis_exponent", exponent);

    // Monte Carlo kurtosis per step count
    let mut mc: Vec<(usize, f64, f64, f64)> = Vec::new();
    let mut worst_z: f64 = 0.0;
    for &n in &d.n_list {
        let stats = stage(
            "walkers",
            propagator_statistics(&kernel, n, d.n_walkers, d.seed),
        )?;
        let se = powers[n - 1].kurtosis_se(d.n_walkers);
        let z = (stats.excess_kurtosis - powers[n - 1].excess_kurtosis()).abs() / se;
        worst_z = worst_z.max(z);
        mc.push((n, stats.excess_kurtosis, se, z));
    }
    report.insert("kappa_mc_max_z", worst_z);
    let mc_fit: Vec<(f64, f64)> = mc.iter().map(|(n, k, _, _)| (*n as f64, *k)).collect();
    if mc_fit.iter().all(|(_, k)| *k != 0.0) {
        report.insert("kurtosis_exponent_mc", stage("walkers", fit_log_slope(&mc_fit))?);
    }

    // Kolmogorov-Smirnov gaussianization, exact and Monte Carlo
    let ks_powers = stage(
        "oracle",
        convolution_powers(&kernel, d.n_ks, d.halfwidth / d.ks_nodes as f64),
    )?;
    let ks1 = ks_powers[0].ks_to_fitted_gaussian();
    let ks_end = ks_powers[d.n_ks - 1].ks_to_fitted_gaussian();
    report.insert("ks_oracle_n1", ks1);
    report.insert(&format!("ks_oracle_n{}", d.n_ks), ks_end);
    let mc_ks = stage(
        "walkers",
        propagator_statistics(&kernel, d.n_ks, d.n_walkers, d.seed),
    )?;
    report.insert(&format!("ks_mc_n{}", d.n_ks), mc_ks.ks_distance);

    // one table: oracle for every n, Monte Carlo columns where sampled
    let mut rows = Vec::new();
    for (n, kappa) in &oracle_rows {
        let (mc_k, mc_se, mc_z) = mc
            .iter()
            .find(|(m, _, _, _)| m == n)
            .map(|(_, k, se, z)| (format!("{k}"), format!("{se}"), format!("{z}")))
            .unwrap_or_default();
        rows.push(vec![
            format!("{n}"),
            format!("{kappa}"),
            format!("{}", -1.2 / *n as f64),
            mc_k,
            mc_se,
            mc_z,
        ]);
    }
    stage(
        "oracle",
        csvio::write_table_csv(
            &out.join("clt.csv"),
            "n,kappa_oracle,kappa_expected,kappa_mc,kappa_mc_se,z",
            &rows,
        ),
    )?;
    report.push_artifact("clt.csv");
    Ok(())
}

// ---------------------------------------------------------------------------
// S5: coefficient sweep

fn s5(d: &S5Doc, out: &Path, report: &mut ComparisonReport) -> StageResult<()> {
    use jumplab_core::kernel::{build_detailed_balance, ProfileFn, SymmetricBase};
    use jumplab_core::walkers::InitialPosition;

    let grid = stage("grid", Grid::new(0.0, 1.0, d.cells))?;
    let modulation = ProfileFn::Product(vec![
        ProfileFn::Constant(d.rate_scale),
        ProfileFn::Sinusoidal {
            offset: 1.0,
            amplitude: d.modulation_amplitude,
            frequency: 1.0,
            phase: 0.0,
        },
    ]);
    let (kernel, rate) = stage(
        "kernel",
        build_detailed_balance(
            SymmetricBase::Gaussian { sigma: d.sigma },
            modulation,
            6.0 * d.sigma,
            &grid,
        ),
    )?;
    report.insert(
        "db_residual_rel_max",
        stage("kernel", db_residual_norm(&kernel, &rate))?,
    );

    let transport = stage("reduce", reduce_to_transport(&kernel, &rate, &grid))?;
    stage("reduce", csvio::write_profile_csv(&out.join("transport.csv"), &transport))?;
    report.push_artifact("transport.csv");
    let ddx = transport.ddx_of_d();
    let sup_v: f64 = transport.v().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sup_ddx: f64 = ddx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    report.insert("fick_defect_rel", sup_v / sup_ddx);

    let diag = stage(
        "reduce",
        truncation_diagnostic(&kernel, &rate, 0.5, 1.0),
    )?;
    report.insert("rho3", diag.rho3);
    report.insert("rho4", diag.rho4);

    // walker sweep with jump records
    let sampler = stage("walkers", JumpSampler::new(&kernel, Some(&grid)))?;
    let fast_rate = stage("walkers", rate.tabulated_on(&grid, d.cells))?;
    let cfg = CtrwConfig {
        t_end: d.t_end,
        snapshots: vec![],
        bins: stage("walkers", BinSpec::new(0.0, 1.0, d.km_bins))?,
        initial: InitialPosition::Uniform(stage("walkers", Interval::new(0.2, 0.8))?),
        n_walkers: d.n_walkers,
        seed: d.seed,
        record_jumps: true,
    };
    let run = stage("walkers", parallel::run_ctrw(&fast_rate, &sampler, &cfg))?;
    report.insert("total_jumps", run.total_jumps as f64);
    if d.write_jumps {
        stage("walkers", csvio::write_jumps_csv(&out.join("jumps.csv"), &run.jumps))?;
        report.push_artifact("jumps.csv");
    }

    let bins = stage("estimate", BinSpec::new(d.km_lo, d.km_hi, d.km_bins))?;
    let profile = estimate_km(&run.jumps, bins, 100);
    stage("estimate", csvio::write_km_csv(&out.join("km.csv"), &profile))?;
    report.push_artifact("km.csv");

    // bin estimates must land inside the per-bin coefficient range
    let stats = profile.jump_stats.as_ref().expect("km stats present");
    let mut max_z_v: f64 = 0.0;
    let mut max_z_d: f64 = 0.0;
    let mut reported = 0usize;
    for b in 0..bins.count {
        if !stats.reported[b] {
            continue;
        }
        reported += 1;
        let cells = grid.cells_in(stage(
            "estimate",
            Interval::new(bins.edge(b), bins.edge(b + 1)),
        )?);
        let bracket = |values: &[f64]| {
            let lo = values[cells.clone()].iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values[cells.clone()]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        let (vlo, vhi) = bracket(transport.vprime());
        let z_v = distance_outside(stats.vprime[b], vlo, vhi) / stats.vprime_se[b].max(1e-300);
        max_z_v = max_z_v.max(z_v);
        let (dlo, dhi) = bracket(transport.d());
        let z_d = distance_outside(stats.d[b], dlo, dhi) / stats.d_se[b].max(1e-300);
        max_z_d = max_z_d.max(z_d);
    }
    report.insert("km_bins_reported", reported as f64);
    report.insert("km_max_z_vprime", max_z_v);
    report.insert("km_max_z_d", max_z_d);
    Ok(())
}

fn distance_outside(value: f64, lo: f64, hi: f64) -> f64 {
    if value < lo {
        lo - value
    } else if value > hi {
        value - hi
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// custom pipeline

fn custom(d: &CustomDoc, out: &Path, report: &mut ComparisonReport) -> StageResult<()> {
    let grid = stage("grid", d.grid.build("grid"))?;
    let (kernel, rate) = stage("kernel", d.kernel.build(&d.rate, &grid, "kernel"))?;
    report.insert("resolution_marginal", stage("kernel", resolution_metric(&kernel, &grid))?);

    if d.walkers.is_some() && d.seed.is_none() {
        return Err((
            "validate",
            CliError::validation("seed is mandatory for stochastic runs (walkers configured)"),
        ));
    }

    let closure = d.closure.build();
    let gen = stage("assemble", RateMatrix::assemble(&kernel, &rate, &grid, closure))?;
    let init = stage("evolve", d.initial.build_field(grid, "initial"))?;
    let initial_mass = init.mass();

    let final_field = march_me_with_snapshots(
        &gen,
        init.clone(),
        &d.snapshots,
        d.t_end,
        d.dt_safety,
        out,
        "me",
        report,
    )
    .map_err(|e| ("evolve", e))?;
    stage("evolve", csvio::write_field_csv(&out.join("me_final.csv"), &final_field))?;
    report.push_artifact("me_final.csv");

    let region = match d.compare_region {
        Some([lo, hi]) => stage("validate", Interval::new(lo, hi))?,
        None => stage("validate", Interval::new(grid.x_min(), grid.x_max()))?,
    };
    report.mass = Some(MassLedger::new(
        initial_mass,
        final_field.interior_mass(region),
        final_field.mass(),
    ));

    // truncation diagnostics for the final field's own variation scale
    if let Some(l_u) = gradient_scale(&final_field) {
        report.insert("gradient_scale", l_u);
        let probe_x = 0.5 * (region.lo + region.hi);
        if let Ok(diag) = truncation_diagnostic(&kernel, &rate, probe_x, l_u) {
            report.insert("rho3", diag.rho3);
            report.insert("rho4", diag.rho4);
        }
    }

    if let Some(w) = &d.walkers {
        let seed = d.seed.expect("validated above");
        let sampler = stage("walkers", JumpSampler::new(&kernel, Some(&grid)))?;
        let rate_for_walkers = if kernel.is_detailed_balance() {
            stage("walkers", rate.tabulated_on(&grid, grid.len()))?
        } else {
            rate.clone()
        };
        let bins = stage("walkers", w.bins.build("walkers.bins"))?;
        let cfg = CtrwConfig {
            t_end: d.t_end,
            snapshots: d.snapshots.clone(),
            bins,
            initial: stage("walkers", d.initial.build_walker("initial"))?,
            n_walkers: w.n_walkers,
            seed,
            record_jumps: w.record_jumps,
        };
        let run = stage("walkers", parallel::run_ctrw(&rate_for_walkers, &sampler, &cfg))?;
        for (idx, snap) in run.snapshots.iter().enumerate() {
            let name = format!("walk_{idx:03}.csv");
            stage("walkers", csvio::write_snapshot_csv(&out.join(&name), snap))?;
            report.push_artifact(&name);
        }
        if w.record_jumps {
            stage("walkers", csvio::write_jumps_csv(&out.join("jumps.csv"), &run.jumps))?;
            report.push_artifact("jumps.csv");
        }
        // per-bin Poisson agreement against the lattice field at the last snapshot
        if let Some(last) = run.snapshots.last() {
            let me_at = march_me_plain(&gen, init, last.time).map_err(|e| ("walkers", e))?;
            let me_binned = bin_field(&me_at, bins);
            let mut worst_z: f64 = 0.0;
            for b in 0..bins.count {
                let expected = me_binned[b] * bins.width() * cfg.n_walkers as f64;
                let observed = snapshot_count(last, b);
                if expected > 1e-9 {
                    worst_z = worst_z.max((observed - expected).abs() / expected.sqrt());
                }
            }
            report.insert("walker_me_max_z", worst_z);
        }
    }

    if let Some(p) = &d.pde {
        let transport = stage(
            "pde",
            p.transport
                .build(grid, Some((&kernel, &rate)), "pde.transport"),
        )?;
        let problem = stage(
            "pde",
            PdeProblem::new(
                p.form.build(),
                transport,
                p.bc_left.build(),
                p.bc_right.build(),
                stage("pde", d.initial.build_field(grid, "initial"))?,
            ),
        )?;
        let pde_final = stage("pde", jumplab_core::pde::run_to(&problem, d.t_end, 0.9))?;
        stage("pde", csvio::write_field_csv(&out.join("pde_final.csv"), &pde_final))?;
        report.push_artifact("pde_final.csv");
        let m = stage("compare", compare_fields(&final_field, &pde_final, region))?;
        report.insert("rel_l2", m.rel_l2);
        report.insert("rel_sup", m.rel_sup);
    }
    Ok(())
}

fn snapshot_count(profile: &jumplab_core::walkers::EmpiricalProfile, bin: usize) -> f64 {
    profile.counts[bin] as f64
}

/// Global gradient scale of a field, `max|u| / max|∂ₓu|`.
fn gradient_scale(field: &LatticeField) -> Option<f64> {
    let grid = field.grid();
    let u = field.values();
    let mut max_u: f64 = 0.0;
    let mut max_grad: f64 = 0.0;
    for i in 1..grid.len() - 1 {
        max_u = max_u.max(u[i].abs());
        max_grad = max_grad.max((u[i + 1] - u[i - 1]).abs() / (2.0 * grid.h()));
    }
    (max_grad > 0.0 && max_u > 0.0).then_some(max_u / max_grad)
}

// ---------------------------------------------------------------------------
// single-stage commands

pub fn run_coeffs(doc: &CoeffsDoc, out: &Path) -> Result<ComparisonReport> {
    std::fs::create_dir_all(out)?;
    let mut report = new_report("coeffs", None, doc, None)?;
    let result: StageResult<()> = (|| {
        let grid = stage("grid", doc.grid.build("grid"))?;
        let (kernel, rate) = stage("kernel", doc.kernel.build(&doc.rate, &grid, "kernel"))?;
        report.insert("resolution_marginal", stage("kernel", resolution_metric(&kernel, &grid))?);
        let mut norm_defect: f64 = 0.0;
        for x in grid.centers() {
            let slice = stage("kernel", kernel.at(x))?;
            norm_defect = norm_defect.max((slice.normalization() - 1.0).abs());
        }
        report.insert("normalization_defect_max", norm_defect);
        let transport = stage("reduce", reduce_to_transport(&kernel, &rate, &grid))?;
        stage("reduce", csvio::write_profile_csv(&out.join("transport.csv"), &transport))?;
        report.push_artifact("transport.csv");
        Ok(())
    })();
    finish(report, out, result)
}

pub fn run_me(doc: &MeRunDoc, out: &Path) -> Result<ComparisonReport> {
    std::fs::create_dir_all(out)?;
    let mut report = new_report("me-run", None, doc, None)?;
    let result: StageResult<()> = (|| {
        let grid = stage("grid", doc.grid.build("grid"))?;
        let (kernel, rate) = stage("kernel", doc.kernel.build(&doc.rate, &grid, "kernel"))?;
        let gen = stage(
            "assemble",
            RateMatrix::assemble(&kernel, &rate, &grid, doc.closure.build()),
        )?;
        if doc.dump_generator {
            stage("assemble", csvio::write_generator_csv(&out.join("generator.csv"), &gen))?;
            report.push_artifact("generator.csv");
        }
        let init = stage("evolve", doc.initial.build_field(grid, "initial"))?;
        let initial_mass = init.mass();
        let final_field = march_me_with_snapshots(
            &gen,
            init,
            &doc.snapshots,
            doc.t_end,
            doc.dt_safety,
            out,
            "me",
            &mut report,
        )
        .map_err(|e| ("evolve", e))?;
        stage("evolve", csvio::write_field_csv(&out.join("me_final.csv"), &final_field))?;
        report.push_artifact("me_final.csv");
        let region = match doc.interior {
            Some([lo, hi]) => stage("evolve", Interval::new(lo, hi))?,
            None => stage("evolve", Interval::new(grid.x_min(), grid.x_max()))?,
        };
        report.mass = Some(MassLedger::new(
            initial_mass,
            final_field.interior_mass(region),
            final_field.mass(),
        ));
        Ok(())
    })();
    finish(report, out, result)
}

pub fn run_walk(doc: &WalkDoc, out: &Path) -> Result<ComparisonReport> {
    std::fs::create_dir_all(out)?;
    let mut report = new_report("walk", None, doc, Some(doc.seed))?;
    let result: StageResult<()> = (|| {
        let grid = match &doc.grid {
            Some(g) => Some(stage("grid", g.build("grid"))?),
            None => None,
        };
        let probe_grid = match grid {
            Some(g) => g,
            None => stage("grid", Grid::new(doc.bins.lo, doc.bins.hi, 64))?,
        };
        let (kernel, rate) = stage(
            "kernel",
            doc.kernel.build(&doc.rate, &probe_grid, "kernel"),
        )?;
        let sampler = stage("walkers", JumpSampler::new(&kernel, grid.as_ref()))?;
        let rate_for_walkers = if kernel.is_detailed_balance() {
            let g = grid.ok_or(("walkers", CliError::validation(
                "detailed_balance walks need a grid for rate tabulation",
            )))?;
            stage("walkers", rate.tabulated_on(&g, g.len()))?
        } else {
            rate.clone()
        };
        let bins = stage("walkers", doc.bins.build("bins"))?;
        let cfg = CtrwConfig {
            t_end: doc.t_end,
            snapshots: doc.snapshots.clone(),
            bins,
            initial: stage("walkers", doc.initial.build_walker("initial"))?,
            n_walkers: doc.n_walkers,
            seed: doc.seed,
            record_jumps: doc.record_jumps || doc.km_bins.is_some(),
        };
        let run = match &doc.resume_from {
            Some(rel) => {
                let ensemble = stage("walkers", crate::checkpoint::load(&out.join(rel)))?;
                stage("walkers", parallel::resume_ctrw(&ensemble, &rate_for_walkers, &sampler, &cfg))?
            }
            None => stage("walkers", parallel::run_ctrw(&rate_for_walkers, &sampler, &cfg))?,
        };
        for (idx, snap) in run.snapshots.iter().enumerate() {
            let name = format!("walk_{idx:03}.csv");
            stage("walkers", csvio::write_snapshot_csv(&out.join(&name), snap))?;
            report.push_artifact(&name);
            report.insert(&format!("unfrozen_{idx:03}"), snap.unfrozen as f64);
        }
        report.insert("total_jumps", run.total_jumps as f64);
        report.insert("frozen_fraction_final", run.ensemble.frozen_fraction());
        if doc.record_jumps {
            stage("walkers", csvio::write_jumps_csv(&out.join("jumps.csv"), &run.jumps))?;
            report.push_artifact("jumps.csv");
        }
        if let Some(kb) = &doc.km_bins {
            let kb = stage("estimate", kb.build("km_bins"))?;
            let profile = estimate_km(&run.jumps, kb, 100);
            stage("estimate", csvio::write_km_csv(&out.join("km.csv"), &profile))?;
            report.push_artifact("km.csv");
        }
        if let Some(rel) = &doc.checkpoint {
            stage("walkers", crate::checkpoint::save(&out.join(rel), &run.ensemble))?;
            report.push_artifact(rel);
        }
        Ok(())
    })();
    finish(report, out, result)
}

pub fn run_pde(doc: &PdeRunDoc, out: &Path) -> Result<ComparisonReport> {
    std::fs::create_dir_all(out)?;
    let mut report = new_report("pde-run", None, doc, None)?;
    let result: StageResult<()> = (|| {
        let grid = stage("grid", doc.grid.build("grid"))?;
        let kernel_rate = match &doc.kernel {
            Some(k) => Some(stage("kernel", k.build(&doc.rate, &grid, "kernel"))?),
            None => None,
        };
        let transport = stage(
            "transport",
            doc.transport.build(
                grid,
                kernel_rate.as_ref().map(|(k, r)| (k, r)),
                "transport",
            ),
        )?;
        stage("transport", csvio::write_profile_csv(&out.join("transport.csv"), &transport))?;
        report.push_artifact("transport.csv");
        let initial = stage("pde", doc.initial.build_field(grid, "initial"))?;
        let problem = stage(
            "pde",
            PdeProblem::new(
                doc.form.build(),
                transport,
                doc.bc_left.build(),
                doc.bc_right.build(),
                initial,
            ),
        )?;
        match &doc.mode {
            PdeModeSpec::Evolve(m) => {
                let mut field = problem.initial().clone();
                let mut targets = m.snapshots.clone();
                if targets.last().copied() != Some(m.t_end) {
                    targets.push(m.t_end);
                }
                let dt = problem.dt_bound() * doc.dt_safety.clamp(1e-6, 1.0);
                for (idx, &target) in targets.iter().enumerate() {
                    let remaining = target - field.time();
                    if remaining > 0.0 {
                        let steps = (remaining / dt).ceil().max(1.0) as usize;
                        let dt_actual = remaining / steps as f64;
                        for _ in 0..steps {
                            field = stage("pde", jumplab_core::pde::step_pde(&problem, &field, dt_actual))?;
                        }
                    }
                    if idx < m.snapshots.len() {
                        let name = format!("pde_{idx:03}.csv");
                        stage("pde", csvio::write_field_csv(&out.join(&name), &field))?;
                        report.push_artifact(&name);
                    }
                }
                stage("pde", csvio::write_field_csv(&out.join("pde_final.csv"), &field))?;
                report.push_artifact("pde_final.csv");
                report.insert("final_mass", field.mass());
            }
            PdeModeSpec::Steady(m) => {
                let steady = stage("pde", steady_state(&problem, m.tol, m.max_steps))?;
                stage("pde", csvio::write_field_csv(&out.join("pde_steady.csv"), &steady.field))?;
                report.push_artifact("pde_steady.csv");
                report.insert("residual", steady.residual);
                report.insert("converged", f64::from(steady.converged));
                report.insert("steps", steady.steps as f64);
            }
            PdeModeSpec::DecayRate(m) => {
                let rate = stage("pde", decay_rate(&problem, (m.window[0], m.window[1])))?;
                report.insert("decay_rate", rate);
            }
        }
        Ok(())
    })();
    finish(report, out, result)
}

pub fn run_compare(doc: &CompareDoc, out: &Path) -> Result<ComparisonReport> {
    std::fs::create_dir_all(out)?;
    let mut report = new_report("compare", None, doc, None)?;
    let result: StageResult<()> = (|| {
        let a = stage("read", csvio::read_field_csv(Path::new(&doc.a)))?;
        let b = stage("read", csvio::read_field_csv(Path::new(&doc.b)))?;
        let region = stage("read", Interval::new(doc.region[0], doc.region[1]))?;
        let m = stage("compare", compare_fields(&a, &b, region))?;
        report.insert("rel_l2", m.rel_l2);
        report.insert("rel_sup", m.rel_sup);
        report.insert("cells", m.cells as f64);
        let a_norm = stage("compare", a.normalized_on(region))?;
        let b_norm = stage("compare", b.normalized_on(region))?;
        let mn = stage("compare", compare_fields(&a_norm, &b_norm, region))?;
        report.insert("rel_l2_normalized", mn.rel_l2);
        report.insert("rel_sup_normalized", mn.rel_sup);
        let widths = stage(
            "compare",
            boundary_layer_width(&a_norm, &b_norm, region, doc.threshold),
        )?;
        report.insert("layer_width_left", widths.left);
        report.insert("layer_width_right", widths.right);
        report.insert("layer_width", widths.max());
        Ok(())
    })();
    finish(report, out, result)
}
