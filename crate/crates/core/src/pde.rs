//! Conservative finite-volume solver for the two diffusion forms.
//!
//! Gradient form: `∂ₜu = ∂ₓ(D ∂ₓu − V u)`, flux `F = −D ∂ₓu + V u`.
//! Divergence form: `∂ₜu = ∂ₓ(∂ₓ(D u) − V' u)`, flux `F = −∂ₓ(D u) + V' u`.
//!
//! Face coefficients are arithmetic averages of the adjacent cells (one-sided
//! second-order extrapolation at the walls); boundary conditions enter by
//! ghost-value elimination, so the discrete update conserves mass up to the
//! exact boundary fluxes.

use alloc::vec::Vec;

use crate::coefficients::TransportProfile;
use crate::error::{CoreError, Result};
use crate::lattice::{Grid, LatticeField};

/// Face diffusivities are floored here so degenerate exterior regions do not
/// divide the scheme by zero.
pub const D_FACE_FLOOR: f64 = 1e-12;

/// Which diffusion form the flux discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeForm {
    /// Gradient (Fick) form, drift `V`.
    Fick,
    /// Divergence (Fokker-Planck) form, drift `V'`.
    FokkerPlanck,
}

/// Boundary condition at one wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed face density `u = value`.
    Dirichlet { value: f64 },
    /// Prescribed outgoing flux `F = flux` (exact).
    NeumannFlux { flux: f64 },
    /// Prescribed face gradient `∂ₓu = gradient`.
    NeumannGradient { gradient: f64 },
    /// `alpha·u + beta·∂ₓu = value` at the face.
    Robin { alpha: f64, beta: f64, value: f64 },
}

impl BoundaryCondition {
    fn validate(&self, h: f64) -> Result<()> {
        if let BoundaryCondition::Robin { alpha, beta, .. } = self {
            if *alpha == 0.0 && *beta == 0.0 {
                return Err(CoreError::InvalidParameter(
                    "robin condition needs (alpha, beta) != (0, 0)".into(),
                ));
            }
            // ghost elimination divides by (beta ± alpha·h/2)
            if (beta - alpha * 0.5 * h).abs() < 1e-14 || (beta + alpha * 0.5 * h).abs() < 1e-14 {
                return Err(CoreError::InvalidParameter(
                    "robin coefficients are degenerate at this grid spacing".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A diffusion problem: form, coefficients, walls, and initial data.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    form: PdeForm,
    profile: TransportProfile,
    left: BoundaryCondition,
    right: BoundaryCondition,
    initial: LatticeField,
    // face-interpolated coefficients, length n+1
    d_face: Vec<f64>,
    v_face: Vec<f64>,
    vprime_face: Vec<f64>,
}

impl PdeProblem {
    pub fn new(
        form: PdeForm,
        profile: TransportProfile,
        left: BoundaryCondition,
        right: BoundaryCondition,
        initial: LatticeField,
    ) -> Result<Self> {
        if initial.grid() != profile.grid() {
            return Err(CoreError::GridMismatch);
        }
        let h = profile.grid().h();
        left.validate(h)?;
        right.validate(h)?;
        let d_face = face_average(profile.d());
        let v_face = face_average(profile.v());
        let vprime_face = face_average(profile.vprime());
        Ok(Self {
            form,
            profile,
            left,
            right,
            initial,
            d_face,
            v_face,
            vprime_face,
        })
    }

    pub fn grid(&self) -> Grid {
        self.profile.grid()
    }

    pub fn form(&self) -> PdeForm {
        self.form
    }

    pub fn profile(&self) -> &TransportProfile {
        &self.profile
    }

    pub fn initial(&self) -> &LatticeField {
        &self.initial
    }

    /// Diffusive stability bound `0.4·h²/max D`.
    pub fn dt_bound(&self) -> f64 {
        let h = self.grid().h();
        0.4 * h * h / self.profile.max_d().max(D_FACE_FLOOR)
    }

    fn boundary_flux(&self, field: &LatticeField, left: bool) -> f64 {
        let u = field.values();
        let n = u.len();
        let h = self.grid().h();
        let (bc, face, u_adj) = if left {
            (self.left, 0, u[0])
        } else {
            (self.right, n, u[n - 1])
        };
        if let BoundaryCondition::NeumannFlux { flux } = bc {
            return flux;
        }
        let d_face = self.d_face[face].max(D_FACE_FLOOR);
        // reduce the condition to a face value and a face gradient
        let (u_face, grad) = match bc {
            BoundaryCondition::Dirichlet { value } => {
                let grad = if left {
                    2.0 * (u_adj - value) / h
                } else {
                    2.0 * (value - u_adj) / h
                };
                (value, grad)
            }
            BoundaryCondition::NeumannGradient { gradient } => {
                let u_face = if left {
                    u_adj - gradient * 0.5 * h
                } else {
                    u_adj + gradient * 0.5 * h
                };
                (u_face, gradient)
            }
            BoundaryCondition::Robin { alpha, beta, value } => {
                let denom = if left {
                    beta - alpha * 0.5 * h
                } else {
                    beta + alpha * 0.5 * h
                };
                let grad = (value - alpha * u_adj) / denom;
                let u_face = if left {
                    u_adj - grad * 0.5 * h
                } else {
                    u_adj + grad * 0.5 * h
                };
                (u_face, grad)
            }
            BoundaryCondition::NeumannFlux { .. } => unreachable!(),
        };
        match self.form {
            PdeForm::Fick => -d_face * grad + self.v_face[face] * u_face,
            PdeForm::FokkerPlanck => {
                // ∂ₓ(Du) = D ∂ₓu + u ∂ₓD, with ∂ₓD implied by the drift pair
                let ddx_d = self.vprime_face[face] - self.v_face[face];
                -(d_face * grad + u_face * ddx_d) + self.vprime_face[face] * u_face
            }
        }
    }

    /// Discrete flux through face `i` (faces run `0..=n`).
    pub fn face_flux(&self, field: &LatticeField, i: usize) -> f64 {
        let u = field.values();
        let n = u.len();
        debug_assert!(i <= n);
        if i == 0 {
            return self.boundary_flux(field, true);
        }
        if i == n {
            return self.boundary_flux(field, false);
        }
        let h = self.grid().h();
        let d = self.profile.d();
        match self.form {
            PdeForm::Fick => {
                let grad = (u[i] - u[i - 1]) / h;
                let u_face = 0.5 * (u[i - 1] + u[i]);
                -self.d_face[i].max(D_FACE_FLOOR) * grad + self.v_face[i] * u_face
            }
            PdeForm::FokkerPlanck => {
                let grad_du = (d[i] * u[i] - d[i - 1] * u[i - 1]) / h;
                let u_face = 0.5 * (u[i - 1] + u[i]);
                -grad_du + self.vprime_face[i] * u_face
            }
        }
    }
}

fn face_average(cells: &[f64]) -> Vec<f64> {
    let n = cells.len();
    let mut faces = Vec::with_capacity(n + 1);
    faces.push(1.5 * cells[0] - 0.5 * cells[1]);
    for i in 1..n {
        faces.push(0.5 * (cells[i - 1] + cells[i]));
    }
    faces.push(1.5 * cells[n - 1] - 0.5 * cells[n - 2]);
    faces
}

/// One explicit finite-volume step `u_i ← u_i − dt·(F_{i+1/2} − F_{i−1/2})/h`.
pub fn step_pde(problem: &PdeProblem, field: &LatticeField, dt: f64) -> Result<LatticeField> {
    if field.grid() != problem.grid() {
        return Err(CoreError::GridMismatch);
    }
    let bound = problem.dt_bound();
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(CoreError::StabilityBound { dt, bound });
    }
    let n = field.grid().len();
    let h = field.grid().h();
    let mut fluxes = Vec::with_capacity(n + 1);
    for i in 0..=n {
        fluxes.push(problem.face_flux(field, i));
    }
    let values: Vec<f64> = (0..n)
        .map(|i| field.values()[i] - dt / h * (fluxes[i + 1] - fluxes[i]))
        .collect();
    Ok(field.with_values(values, field.time() + dt))
}

/// March from the problem's initial data to exactly `t_end`.
///
/// `safety ∈ (0, 1]` scales the stability bound; the step count is rounded up
/// so the final time lands exactly on `t_end`.
pub fn run_to(problem: &PdeProblem, t_end: f64, safety: f64) -> Result<LatticeField> {
    if !(t_end > 0.0 && (0.0..=1.0).contains(&safety) && safety > 0.0) {
        return Err(CoreError::InvalidParameter(
            "need t_end > 0 and safety in (0, 1]".into(),
        ));
    }
    let dt_target = problem.dt_bound() * safety;
    let steps = libm::ceil(t_end / dt_target) as usize;
    let dt = t_end / steps as f64;
    let mut field = problem.initial().clone();
    for _ in 0..steps {
        field = step_pde(problem, &field, dt)?;
    }
    Ok(field)
}

/// Steady-state march outcome.
#[derive(Debug, Clone)]
pub struct PdeSteady {
    pub field: LatticeField,
    /// `‖du/dt‖ · T_diff / ‖u‖` at the last step (diffusive time units).
    pub residual: f64,
    pub converged: bool,
    pub steps: usize,
}

/// March to a steady state: stop when the residual drops below `tol` or the
/// step budget runs out (the field is returned either way).
pub fn steady_state(problem: &PdeProblem, tol: f64, max_steps: usize) -> Result<PdeSteady> {
    let grid = problem.grid();
    let n = grid.len();
    let dt = problem.dt_bound();
    let span = grid.x_max() - grid.x_min();
    let t_diff = span * span / problem.profile().max_d().max(D_FACE_FLOOR);
    let mut field = problem.initial().clone();
    let mut steps = 0;
    loop {
        let next = step_pde(problem, &field, dt)?;
        let mut diff = 0.0;
        let mut norm = 0.0;
        for i in 0..n {
            let d = (next.values()[i] - field.values()[i]) / dt;
            diff += d * d;
            norm += next.values()[i] * next.values()[i];
        }
        let residual = if norm == 0.0 {
            0.0
        } else {
            libm::sqrt(diff / norm) * t_diff
        };
        field = next;
        steps += 1;
        if residual <= tol {
            return Ok(PdeSteady {
                field,
                residual,
                converged: true,
                steps,
            });
        }
        if steps >= max_steps {
            return Ok(PdeSteady {
                field,
                residual,
                converged: false,
                steps,
            });
        }
    }
}

/// Least-squares decay rate of the total mass over `window = (t0, t1)`.
///
/// The problem is marched from its initial data; the mass must decay
/// monotonically inside the window or the fit is rejected.
pub fn decay_rate(problem: &PdeProblem, window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    if !(t0 >= 0.0 && t1 > t0) {
        return Err(CoreError::InvalidParameter(
            "decay window must satisfy 0 <= t0 < t1".into(),
        ));
    }
    let dt_target = problem.dt_bound();
    let steps = libm::ceil(t1 / dt_target) as usize;
    let dt = t1 / steps as f64;
    let mut field = problem.initial().clone();
    let mut samples: Vec<(f64, f64)> = Vec::new();
    if t0 == 0.0 {
        samples.push((0.0, field.mass()));
    }
    for k in 0..steps {
        field = step_pde(problem, &field, dt)?;
        let t = (k + 1) as f64 * dt;
        if t >= t0 {
            samples.push((t, field.mass()));
        }
    }
    if samples.len() < 3 {
        return Err(CoreError::FitRejected("too few samples in window".into()));
    }
    let first = samples[0].1;
    let last = samples[samples.len() - 1].1;
    if !(first > 0.0) || last >= first * (1.0 - 1e-12) {
        return Err(CoreError::FitRejected("mass is not decaying".into()));
    }
    for pair in samples.windows(2) {
        if pair[1].1 > pair[0].1 * (1.0 + 1e-12) || pair[1].1 <= 0.0 {
            return Err(CoreError::FitRejected(
                "mass is not monotone in the window".into(),
            ));
        }
    }
    // linear least squares on log mass
    let n = samples.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (t, m) in &samples {
        let y = libm::log(*m);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let slope = (n * sty - st * sy) / (n * stt - st * st);
    Ok(-slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Interval;
    use core::f64::consts::PI;

    fn const_profile(grid: Grid, d: f64) -> TransportProfile {
        TransportProfile::from_fick(grid, |_| d, |_| 0.0).unwrap()
    }

    fn zero_flux() -> BoundaryCondition {
        BoundaryCondition::NeumannFlux { flux: 0.0 }
    }

    fn dirichlet0() -> BoundaryCondition {
        BoundaryCondition::Dirichlet { value: 0.0 }
    }

    #[test]
    fn uniform_field_has_zero_fluxes() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        let problem = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, 0.005),
            zero_flux(),
            zero_flux(),
            LatticeField::from_fn(grid, |_| 1.0).unwrap(),
        )
        .unwrap();
        let field = problem.initial().clone();
        for i in 0..=grid.len() {
            assert_eq!(problem.face_flux(&field, i), 0.0);
        }
    }

    #[test]
    fn divergence_form_flux_vanishes_when_du_is_constant() {
        // D = D0 (1+x), u = C/(1+x): D·u is constant, so the divergence-form
        // flux is identically zero on interior faces.
        let grid = Grid::new(0.0, 1.0, 128).unwrap();
        let profile = TransportProfile::from_fpe(grid, |x| 0.005 * (1.0 + x), |_| 0.0).unwrap();
        let field = LatticeField::from_fn(grid, |x| 2.0 / (1.0 + x)).unwrap();
        let problem = PdeProblem::new(
            PdeForm::FokkerPlanck,
            profile,
            zero_flux(),
            zero_flux(),
            field.clone(),
        )
        .unwrap();
        for i in 1..grid.len() {
            assert!(problem.face_flux(&field, i).abs() < 1e-13);
        }
    }

    #[test]
    fn prescribed_flux_is_exact_at_the_wall() {
        let grid = Grid::new(0.0, 1.0, 32).unwrap();
        let problem = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, 0.01),
            BoundaryCondition::NeumannFlux { flux: 0.25 },
            zero_flux(),
            LatticeField::from_fn(grid, |x| 1.0 + x).unwrap(),
        )
        .unwrap();
        let field = problem.initial().clone();
        assert_eq!(problem.face_flux(&field, 0), 0.25);
        assert_eq!(problem.face_flux(&field, grid.len()), 0.0);
    }

    #[test]
    fn mass_change_equals_boundary_flux_exactly() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        let problem = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, 0.005),
            dirichlet0(),
            dirichlet0(),
            LatticeField::from_fn(grid, |x| (PI * x).sin() + 0.2).unwrap(),
        )
        .unwrap();
        let mut field = problem.initial().clone();
        let dt = problem.dt_bound() * 0.9;
        for _ in 0..50 {
            let f_left = problem.face_flux(&field, 0);
            let f_right = problem.face_flux(&field, grid.len());
            let before = field.mass();
            field = step_pde(&problem, &field, dt).unwrap();
            let change = field.mass() - before;
            let expected = dt * (f_left - f_right);
            assert!(
                (change - expected).abs() <= 1e-13 * before.abs().max(1.0),
                "conservation defect {}",
                change - expected
            );
        }
    }

    #[test]
    fn zero_flux_conserves_mass_per_step() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        for form in [PdeForm::Fick, PdeForm::FokkerPlanck] {
            let problem = PdeProblem::new(
                form,
                const_profile(grid, 0.005),
                zero_flux(),
                zero_flux(),
                LatticeField::from_fn(grid, |x| 1.0 + 0.3 * (2.0 * PI * x).cos()).unwrap(),
            )
            .unwrap();
            let mut field = problem.initial().clone();
            let m0 = field.mass();
            for _ in 0..100 {
                field = step_pde(&problem, &field, problem.dt_bound()).unwrap();
                assert!((field.mass() - m0).abs() <= 1e-12 * m0);
            }
        }
    }

    #[test]
    fn sine_mode_decays_at_the_analytic_rate() {
        let grid = Grid::new(0.0, 1.0, 128).unwrap();
        let d = 0.005;
        let problem = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, d),
            dirichlet0(),
            dirichlet0(),
            LatticeField::from_fn(grid, |x| (PI * x).sin()).unwrap(),
        )
        .unwrap();
        let t_end = 10.0;
        let field = run_to(&problem, t_end, 0.9).unwrap();
        let ratio = field.values()[64] / problem.initial().values()[64];
        let expected = (-d * PI * PI * t_end).exp();
        assert!(
            (ratio - expected).abs() / expected < 0.01,
            "ratio {ratio} vs {expected}"
        );
    }

    #[test]
    fn forms_coincide_for_constant_coefficients() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        let init = LatticeField::from_fn(grid, |x| (PI * x).sin() + 0.5).unwrap();
        let fick = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, 0.005),
            zero_flux(),
            zero_flux(),
            init.clone(),
        )
        .unwrap();
        let fpe = PdeProblem::new(
            PdeForm::FokkerPlanck,
            const_profile(grid, 0.005),
            zero_flux(),
            zero_flux(),
            init,
        )
        .unwrap();
        let a = run_to(&fick, 1.0, 0.9).unwrap();
        let b = run_to(&fpe, 1.0, 0.9).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn form_equivalence_is_second_order_in_h() {
        // fpe with V' = dD/dx versus fick with V = 0: same continuum problem,
        // discrete gap shrinks as O(h²). (For polynomial D up to degree two
        // the face averaging makes the forms identical, so use a sine.)
        let d_fn = |x: f64| 0.004 + 0.002 * (2.0 * PI * x).sin();
        let dd_fn = |x: f64| 0.002 * 2.0 * PI * (2.0 * PI * x).cos();
        let gap = move |n: usize| {
            let grid = Grid::new(0.0, 1.0, n).unwrap();
            let init = LatticeField::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x).sin()).unwrap();
            let fick = PdeProblem::new(
                PdeForm::Fick,
                TransportProfile::from_fick(grid, d_fn, |_| 0.0).unwrap(),
                zero_flux(),
                zero_flux(),
                init.clone(),
            )
            .unwrap();
            let fpe = PdeProblem::new(
                PdeForm::FokkerPlanck,
                TransportProfile::from_fpe(grid, d_fn, dd_fn).unwrap(),
                zero_flux(),
                zero_flux(),
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
        let coarse = gap(64);
        let fine = gap(128);
        let ratio = coarse / fine;
        assert!(
            (3.0..=5.0).contains(&ratio),
            "coarse {coarse}, fine {fine}, ratio {ratio}"
        );
    }

    #[test]
    fn grid_convergence_against_analytic_sine_decay() {
        let error = |n: usize| {
            let grid = Grid::new(0.0, 1.0, n).unwrap();
            let d = 0.005;
            let problem = PdeProblem::new(
                PdeForm::Fick,
                const_profile(grid, d),
                dirichlet0(),
                dirichlet0(),
                LatticeField::from_fn(grid, |x| (PI * x).sin()).unwrap(),
            )
            .unwrap();
            let t_end = 5.0;
            let field = run_to(&problem, t_end, 0.5).unwrap();
            let decay = (-d * PI * PI * t_end).exp();
            let mut num = 0.0;
            let mut den = 0.0;
            for (x, u) in grid.centers().zip(field.values()) {
                let exact = decay * (PI * x).sin();
                num += (u - exact) * (u - exact);
                den += exact * exact;
            }
            (num / den).sqrt()
        };
        let ratio = error(32) / error(64);
        assert!((3.0..=5.0).contains(&ratio), "L2 error ratio {ratio}");
    }

    #[test]
    fn zero_flux_steady_state_is_uniform() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        let profile = TransportProfile::from_fick(grid, |x| 0.004 + 0.003 * x, |_| 0.0).unwrap();
        let problem = PdeProblem::new(
            PdeForm::Fick,
            profile,
            zero_flux(),
            zero_flux(),
            LatticeField::from_fn(grid, |x| if x < 0.5 { 1.6 } else { 0.4 }).unwrap(),
        )
        .unwrap();
        let out = steady_state(&problem, 1e-10, 2_000_000).unwrap();
        assert!(out.converged);
        for v in out.field.values() {
            assert!((v - 1.0).abs() < 1e-6, "steady level {v}");
        }
    }

    #[test]
    fn divergence_form_steady_state_matches_analytic_profile() {
        // D = 0.005 (1+x), V' = 0, zero flux, unit mass: u = 1/(ln 2 · (1+x))
        let grid = Grid::new(0.0, 1.0, 128).unwrap();
        let profile = TransportProfile::from_fpe(grid, |x| 0.005 * (1.0 + x), |_| 0.0).unwrap();
        let problem = PdeProblem::new(
            PdeForm::FokkerPlanck,
            profile,
            zero_flux(),
            zero_flux(),
            LatticeField::uniform_on(grid, Interval::new(0.0, 1.0).unwrap(), 1.0).unwrap(),
        )
        .unwrap();
        let out = steady_state(&problem, 1e-10, 2_000_000).unwrap();
        assert!(out.converged);
        let ln2 = core::f64::consts::LN_2;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, u) in grid.centers().zip(out.field.values()) {
            let exact = 1.0 / (ln2 * (1.0 + x));
            num += (u - exact) * (u - exact);
            den += exact * exact;
        }
        assert!((num / den).sqrt() < 0.01);
        let u0 = out.field.values()[0];
        let exact0 = 1.0 / (ln2 * (1.0 + grid.center(0)));
        assert!((u0 - exact0).abs() / exact0 < 0.01);
    }

    #[test]
    fn dirichlet_zero_steady_state_is_the_zero_field() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        let problem = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, 0.01),
            dirichlet0(),
            dirichlet0(),
            LatticeField::from_fn(grid, |x| (PI * x).sin()).unwrap(),
        )
        .unwrap();
        let out = steady_state(&problem, 1e-9, 2_000_000).unwrap();
        assert!(out.field.max() < 1e-6);
    }

    #[test]
    fn decay_rate_recovers_the_fundamental_eigenvalue() {
        let rate_for = |d: f64| {
            let grid = Grid::new(0.0, 1.0, 96).unwrap();
            let problem = PdeProblem::new(
                PdeForm::Fick,
                const_profile(grid, d),
                dirichlet0(),
                dirichlet0(),
                LatticeField::from_fn(grid, |x| (PI * x).sin()).unwrap(),
            )
            .unwrap();
            decay_rate(&problem, (5.0, 15.0)).unwrap()
        };
        let lam = rate_for(0.005);
        let expected = 0.005 * PI * PI;
        assert!((lam - expected).abs() / expected < 0.02, "rate {lam}");
        let lam2 = rate_for(0.01);
        assert!((lam2 / lam - 2.0).abs() < 0.02 * 2.0);
    }

    #[test]
    fn decay_fit_rejected_when_mass_is_conserved() {
        let grid = Grid::new(0.0, 1.0, 32).unwrap();
        let problem = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, 0.01),
            zero_flux(),
            zero_flux(),
            LatticeField::from_fn(grid, |x| 1.0 + x).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            decay_rate(&problem, (0.5, 2.0)),
            Err(CoreError::FitRejected(_))
        ));
    }

    #[test]
    fn solution_stays_non_negative() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        let problem = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, 0.005),
            dirichlet0(),
            dirichlet0(),
            LatticeField::point_mass(grid, 0.5, 1.0).unwrap(),
        )
        .unwrap();
        let mut field = problem.initial().clone();
        for _ in 0..500 {
            field = step_pde(&problem, &field, problem.dt_bound()).unwrap();
            assert!(field.min() >= -1e-14 * field.max().max(1.0));
        }
    }

    #[test]
    fn robin_reduces_to_dirichlet_and_gradient_forms() {
        let grid = Grid::new(0.0, 1.0, 32).unwrap();
        let init = LatticeField::from_fn(grid, |x| 1.0 + x * x).unwrap();
        let profile = const_profile(grid, 0.01);
        let as_dirichlet = PdeProblem::new(
            PdeForm::Fick,
            profile.clone(),
            BoundaryCondition::Robin {
                alpha: 1.0,
                beta: 0.0,
                value: 0.7,
            },
            zero_flux(),
            init.clone(),
        )
        .unwrap();
        let dirichlet = PdeProblem::new(
            PdeForm::Fick,
            profile.clone(),
            BoundaryCondition::Dirichlet { value: 0.7 },
            zero_flux(),
            init.clone(),
        )
        .unwrap();
        let f = init.clone();
        assert!(
            (as_dirichlet.face_flux(&f, 0) - dirichlet.face_flux(&f, 0)).abs() < 1e-12
        );

        let as_gradient = PdeProblem::new(
            PdeForm::Fick,
            profile.clone(),
            BoundaryCondition::Robin {
                alpha: 0.0,
                beta: 1.0,
                value: 0.3,
            },
            zero_flux(),
            init.clone(),
        )
        .unwrap();
        let gradient = PdeProblem::new(
            PdeForm::Fick,
            profile,
            BoundaryCondition::NeumannGradient { gradient: 0.3 },
            zero_flux(),
            init,
        )
        .unwrap();
        assert!((as_gradient.face_flux(&f, 0) - gradient.face_flux(&f, 0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_robin_is_rejected() {
        let grid = Grid::new(0.0, 1.0, 32).unwrap();
        let res = PdeProblem::new(
            PdeForm::Fick,
            const_profile(grid, 0.01),
            BoundaryCondition::Robin {
                alpha: 0.0,
                beta: 0.0,
                value: 1.0,
            },
            zero_flux(),
            LatticeField::zeros(grid),
        );
        assert!(res.is_err());
    }
}
