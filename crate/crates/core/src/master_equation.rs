//! The jump process on a uniform lattice: generator assembly, explicit time
//! stepping, steady states, and the slowest interior decay mode.
//!
//! The gain part of the balance equation is discretized by midpoint sampling
//! of the kernel on cell centers, `W_ij = p(x_i − x_j; x_j)·r(x_j)`. The
//! integral over all space must be truncated to the grid; the `closure`
//! decides what happens to the clipped tail:
//!
//! * [`Closure::Conservative`] books the tail as a self-transition, so every
//!   column carries exactly its nominal rate and the generator annihilates
//!   total mass. This also preserves the endpoint symmetry of
//!   detailed-balance kernels, keeping the uniform state exactly stationary.
//! * [`Closure::Open`] truncates; the per-column deficit acts as an escape
//!   channel and total mass decays accordingly.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::coefficients::check_resolution;
use crate::error::{CoreError, Result};
use crate::kernel::{JumpKernel, RateField};
use crate::lattice::{Grid, Interval, LatticeField};
use crate::linalg::Banded;

/// Finite-grid closure of the jump integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// Clipped tail re-booked as a self-transition; mass is conserved.
    Conservative,
    /// Clipped tail escapes; column rates may undershoot the nominal rate.
    Open,
}

/// Banded jump generator `du/dt = h·W·u − diag(1/τ)·u`.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    grid: Grid,
    bandwidth: usize,
    /// Row-major band: `weights[i*(2b+1) + (j - i + b)] = W_ij`.
    weights: Vec<f64>,
    /// Loss rates `1/τ_j`; zero marks a frozen column.
    loss: Vec<f64>,
    closure: Closure,
}

impl RateMatrix {
    /// Discretize a kernel/rate pair on `grid`.
    pub fn assemble(
        kernel: &JumpKernel,
        rate: &RateField,
        grid: &Grid,
        closure: Closure,
    ) -> Result<Self> {
        check_resolution(kernel, grid)?;
        let n = grid.len();
        let h = grid.h();
        let bandwidth = libm::ceil(kernel.delta_max() / h) as usize;
        let width = 2 * bandwidth + 1;
        let mut weights = vec![0.0; n * width];
        let mut loss = vec![0.0; n];

        for j in 0..n {
            let xj = grid.center(j);
            let r = rate.rate(xj)?;
            if r == 0.0 {
                continue; // frozen site: no departures, no loss
            }
            loss[j] = r;
            let slice = kernel.at(xj)?;
            let lo = j.saturating_sub(bandwidth);
            let hi = (j + bandwidth).min(n - 1);
            let mut colsum = 0.0;
            for i in lo..=hi {
                let w = slice.density(grid.center(i) - xj) * r;
                weights[i * width + (j + bandwidth - i)] = w;
                colsum += w;
            }
            let discrete = colsum * h;
            match closure {
                Closure::Conservative => {
                    if discrete == 0.0 {
                        return Err(CoreError::DegenerateColumn { column: j });
                    }
                    let deficit = r - discrete;
                    weights[j * width + bandwidth] += deficit / h;
                }
                Closure::Open => {
                    // never let a column exceed its nominal rate
                    if discrete > r {
                        let scale = r / discrete;
                        for i in lo..=hi {
                            weights[i * width + (j + bandwidth - i)] *= scale;
                        }
                    }
                }
            }
        }

        Ok(Self {
            grid: *grid,
            bandwidth,
            weights,
            loss,
            closure,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn loss(&self) -> &[f64] {
        &self.loss
    }

    #[inline]
    fn weight(&self, i: usize, j: usize) -> f64 {
        if j + self.bandwidth < i || j > i + self.bandwidth {
            0.0
        } else {
            self.weights[i * (2 * self.bandwidth + 1) + (j + self.bandwidth - i)]
        }
    }

    /// `Σ_i W_ij · h` for column `j`.
    pub fn column_rate(&self, j: usize) -> f64 {
        let lo = j.saturating_sub(self.bandwidth);
        let hi = (j + self.bandwidth).min(self.grid.len() - 1);
        let mut acc = 0.0;
        for i in lo..=hi {
            acc += self.weight(i, j);
        }
        acc * self.grid.h()
    }

    /// Escape rate of column `j` under the open closure.
    pub fn escape_rate(&self, j: usize) -> f64 {
        (self.loss[j] - self.column_rate(j)).max(0.0)
    }

    /// Largest loss rate (inverse of the shortest active waiting time).
    pub fn max_rate(&self) -> f64 {
        self.loss.iter().copied().fold(0.0, f64::max)
    }

    /// Stability bound for explicit stepping: half the shortest waiting time.
    pub fn dt_bound(&self) -> f64 {
        let max = self.max_rate();
        if max == 0.0 {
            f64::INFINITY
        } else {
            0.5 / max
        }
    }

    /// `out = h·W·u − diag(loss)·u`, fixed summation order within each row.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.grid.len());
        debug_assert_eq!(out.len(), self.grid.len());
        let n = self.grid.len();
        let h = self.grid.h();
        let width = 2 * self.bandwidth + 1;
        for i in 0..n {
            let lo = i.saturating_sub(self.bandwidth);
            let hi = (i + self.bandwidth).min(n - 1);
            let row = &self.weights[i * width..(i + 1) * width];
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += row[j + self.bandwidth - i] * u[j];
            }
            out[i] = acc * h - self.loss[i] * u[i];
        }
    }

    /// Nonzero generator entries `(i, j, g)` with `g = h·W_ij − δ_ij/τ_j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.grid.len();
        let h = self.grid.h();
        (0..n).flat_map(move |i| {
            let lo = i.saturating_sub(self.bandwidth);
            let hi = (i + self.bandwidth).min(n - 1);
            (lo..=hi).filter_map(move |j| {
                let mut g = h * self.weight(i, j);
                if i == j {
                    g -= self.loss[j];
                }
                (g != 0.0).then_some((i, j, g))
            })
        })
    }

    /// Slowest decay mode of the generator restricted to `cells`, by inverse
    /// power iteration on the banded interior block.
    pub fn interior_decay_mode(&self, cells: Range<usize>) -> Result<DecayMode> {
        let m = cells.len();
        if m == 0 || cells.end > self.grid.len() {
            return Err(CoreError::EmptyRegion);
        }
        let h = self.grid.h();
        // B = −(restricted generator): positive diagonal, non-positive off-diagonal
        let mut b = Banded::zeros(m, self.bandwidth.min(m - 1));
        for (bi, i) in cells.clone().enumerate() {
            for j in i.saturating_sub(self.bandwidth)..=(i + self.bandwidth).min(self.grid.len() - 1)
            {
                if !cells.contains(&j) {
                    continue;
                }
                let bj = j - cells.start;
                if bj + self.bandwidth.min(m - 1) < bi || bj > bi + self.bandwidth.min(m - 1) {
                    continue;
                }
                let mut v = -h * self.weight(i, j);
                if i == j {
                    v += self.loss[j];
                }
                b.set(bi, bj, v);
            }
        }
        let mut lu = b.clone();
        lu.lu_inplace()?;

        let mut v = vec![1.0; m];
        normalize(&mut v);
        let mut work = vec![0.0; m];
        let mut lambda = 0.0;
        const MAX_ITER: usize = 10_000;
        for iter in 0..MAX_ITER {
            let mut w = v.clone();
            lu.lu_solve(&mut w);
            normalize(&mut w);
            b.matvec(&w, &mut work);
            let num: f64 = w.iter().zip(work.iter()).map(|(a, c)| a * c).sum();
            let den: f64 = w.iter().map(|a| a * a).sum();
            lambda = num / den;
            // eigen-residual relative to the eigenvalue scale
            let res: f64 = libm::sqrt(
                work.iter()
                    .zip(w.iter())
                    .map(|(c, a)| (c - lambda * a) * (c - lambda * a))
                    .sum::<f64>(),
            );
            v = w;
            if res <= 1e-8 * lambda.abs() && iter > 0 {
                // modes are defined up to sign; report the non-negative one
                if v.iter().sum::<f64>() < 0.0 {
                    for x in &mut v {
                        *x = -*x;
                    }
                }
                return Ok(DecayMode {
                    rate: lambda,
                    mode: v,
                    residual: res / lambda.abs(),
                    iterations: iter + 1,
                });
            }
        }
        let _ = lambda;
        Err(CoreError::IterationLimit("inverse power iteration"))
    }
}

fn normalize(v: &mut [f64]) {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}

/// Slowest decay rate and its mode on the interior block.
#[derive(Debug, Clone)]
pub struct DecayMode {
    /// λ₁ ≥ 0, the decay rate of the longest-lived interior mode.
    pub rate: f64,
    /// Mode shape on the interior cells, L2-normalized, non-negative overall sign.
    pub mode: Vec<f64>,
    /// Relative eigen-residual achieved.
    pub residual: f64,
    pub iterations: usize,
}

/// One classical Runge-Kutta step of `du/dt = G·u`.
pub fn step_me(field: &LatticeField, gen: &RateMatrix, dt: f64) -> Result<LatticeField> {
    if field.grid() != gen.grid() {
        return Err(CoreError::GridMismatch);
    }
    let bound = gen.dt_bound();
    if !(dt > 0.0) || dt > bound {
        return Err(CoreError::StabilityBound { dt, bound });
    }
    let n = field.grid().len();
    let u = field.values();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];

    gen.apply_into(u, &mut k1);
    for i in 0..n {
        stage[i] = u[i] + 0.5 * dt * k1[i];
    }
    gen.apply_into(&stage, &mut k2);
    for i in 0..n {
        stage[i] = u[i] + 0.5 * dt * k2[i];
    }
    gen.apply_into(&stage, &mut k3);
    for i in 0..n {
        stage[i] = u[i] + dt * k3[i];
    }
    gen.apply_into(&stage, &mut k4);

    let values: Vec<f64> = (0..n)
        .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Ok(field.with_values(values, field.time() + dt))
}

/// Outcome of marching to a steady state.
#[derive(Debug, Clone)]
pub struct SteadyOutcome {
    pub field: LatticeField,
    /// Residual `‖du/dt‖ · τ_ref / ‖u‖` at the last step.
    pub residual: f64,
    pub converged: bool,
    pub steps: usize,
}

/// March until `‖du/dt‖ ≤ tol·‖u‖/τ_ref` (τ_ref the shortest waiting time)
/// or `t_max` is reached; the field is returned either way.
pub fn evolve_to_steady(
    field: &LatticeField,
    gen: &RateMatrix,
    tol: f64,
    t_max: f64,
) -> Result<SteadyOutcome> {
    if field.grid() != gen.grid() {
        return Err(CoreError::GridMismatch);
    }
    let max_rate = gen.max_rate();
    if max_rate == 0.0 {
        return Ok(SteadyOutcome {
            field: field.clone(),
            residual: 0.0,
            converged: true,
            steps: 0,
        });
    }
    let dt = gen.dt_bound();
    let n = field.grid().len();
    let mut current = field.clone();
    let mut du = vec![0.0; n];
    let mut steps = 0;
    loop {
        gen.apply_into(current.values(), &mut du);
        let res_norm = l2(&du);
        let u_norm = l2(current.values());
        let residual = if u_norm == 0.0 {
            0.0
        } else {
            res_norm / (u_norm * max_rate)
        };
        if residual <= tol {
            return Ok(SteadyOutcome {
                field: current,
                residual,
                converged: true,
                steps,
            });
        }
        let elapsed = current.time() - field.time();
        if elapsed >= t_max {
            return Ok(SteadyOutcome {
                field: current,
                residual,
                converged: false,
                steps,
            });
        }
        current = step_me(&current, gen, dt.min(t_max - elapsed))?;
        steps += 1;
    }
}

/// Mass in the cells whose centers fall inside `region`.
pub fn interior_mass(field: &LatticeField, region: Interval) -> f64 {
    field.interior_mass(region)
}

fn l2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum::<f64>())
}
