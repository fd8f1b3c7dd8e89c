//! Kramers-Moyal reduction of a kernel/rate pair to transport coefficients.
//!
//! The n-th jump moment at `x` is `Mₙ(x) = r(x)·∫ Δⁿ p(Δ; x) dΔ`. The first
//! two feed the diffusion forms: `D = M₂/2` and `V' = M₁`, with the
//! gradient-form drift recovered through `V = V' − dD/dx`. Higher moments
//! enter only the truncation diagnostics.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::kernel::{JumpKernel, RateField};
use crate::lattice::Grid;

/// How well the lattice resolves the kernel width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// `h ≤ width/4`: moments and generator assembly are trustworthy.
    Resolved,
    /// `width/4 < h ≤ width`: usable, but callers should surface a warning.
    Marginal,
}

/// Check the grid-resolution contract `h ≤ kernel width`.
pub fn check_resolution(kernel: &JumpKernel, grid: &Grid) -> Result<Resolution> {
    let width = kernel.min_width_on(grid)?;
    let h = grid.h();
    if h > width {
        return Err(CoreError::ResolutionTooCoarse { h, width });
    }
    if h > width / 4.0 {
        Ok(Resolution::Marginal)
    } else {
        Ok(Resolution::Resolved)
    }
}

/// Kramers-Moyal moment `Mₙ(x)`; zero at frozen sites (`r = 0`).
pub fn km_moment(kernel: &JumpKernel, rate: &RateField, order: u32, x: f64) -> Result<f64> {
    if order == 0 {
        return Err(CoreError::InvalidParameter(
            "moment order must be at least 1".into(),
        ));
    }
    let r = rate.rate(x)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(r * kernel.at(x)?.moment(order))
}

/// Diffusivity and drift profiles on a grid.
///
/// The two drifts always satisfy the discrete identity `V' = V + dD/dx`
/// (centered differences, one-sided at the ends) because one of them is
/// constructed from the other at build time.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProfile {
    grid: Grid,
    d: Vec<f64>,
    vprime: Vec<f64>,
    v: Vec<f64>,
}

impl TransportProfile {
    /// Build from diffusivity and divergence-form drift arrays.
    pub fn from_moments(grid: Grid, d: Vec<f64>, vprime: Vec<f64>) -> Result<Self> {
        if d.len() != grid.len() || vprime.len() != grid.len() {
            return Err(CoreError::InvalidGrid(
                "profile arrays must match the grid".into(),
            ));
        }
        if let Some(bad) = d.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "diffusivity must be finite and non-negative, got {bad}"
            )));
        }
        let ddx = ddx_centered(&d, grid.h());
        let v = vprime
            .iter()
            .zip(ddx.iter())
            .map(|(vp, dd)| vp - dd)
            .collect();
        Ok(Self { grid, d, vprime, v })
    }

    /// Build from gradient-form data `D(x)`, `V(x)`.
    pub fn from_fick(grid: Grid, d: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64) -> Result<Self> {
        let d: Vec<f64> = grid.centers().map(&d).collect();
        let v: Vec<f64> = grid.centers().map(&v).collect();
        if let Some(bad) = d.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "diffusivity must be finite and non-negative, got {bad}"
            )));
        }
        let ddx = ddx_centered(&d, grid.h());
        let vprime = v.iter().zip(ddx.iter()).map(|(v, dd)| v + dd).collect();
        Ok(Self { grid, d, vprime, v })
    }

    /// Build from divergence-form data `D(x)`, `V'(x)`.
    pub fn from_fpe(
        grid: Grid,
        d: impl Fn(f64) -> f64,
        vprime: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let d: Vec<f64> = grid.centers().map(&d).collect();
        let vprime: Vec<f64> = grid.centers().map(&vprime).collect();
        Self::from_moments(grid, d, vprime)
    }

    /// Restriction to a contiguous cell range of the parent grid.
    pub fn restricted(&self, cells: core::ops::Range<usize>) -> Result<Self> {
        let grid = self.grid.subgrid(cells.clone())?;
        Self::from_moments(
            grid,
            self.d[cells.clone()].to_vec(),
            self.vprime[cells].to_vec(),
        )
    }

    /// Copy with the divergence-form drift zeroed (gradient-form pairing).
    pub fn with_zero_v(&self) -> Self {
        let ddx = ddx_centered(&self.d, self.grid.h());
        Self {
            grid: self.grid,
            d: self.d.clone(),
            vprime: ddx,
            v: alloc::vec![0.0; self.d.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn vprime(&self) -> &[f64] {
        &self.vprime
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Discrete `dD/dx` implied by the stored drifts.
    pub fn ddx_of_d(&self) -> Vec<f64> {
        self.vprime
            .iter()
            .zip(self.v.iter())
            .map(|(vp, v)| vp - v)
            .collect()
    }

    pub fn max_d(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

/// Reduce a kernel/rate pair to its transport profile on `grid`.
pub fn reduce_to_transport(
    kernel: &JumpKernel,
    rate: &RateField,
    grid: &Grid,
) -> Result<TransportProfile> {
    check_resolution(kernel, grid)?;
    let mut d = Vec::with_capacity(grid.len());
    let mut vprime = Vec::with_capacity(grid.len());
    for x in grid.centers() {
        let r = rate.rate(x)?;
        if r == 0.0 {
            d.push(0.0);
            vprime.push(0.0);
            continue;
        }
        let slice = kernel.at(x)?;
        d.push(0.5 * r * slice.moment(2));
        vprime.push(r * slice.moment(1));
    }
    TransportProfile::from_moments(*grid, d, vprime)
}

/// Pointwise defect of the two-point rate balance:
/// `p(Δ; x)·r(x) − p(−Δ; x+Δ)·r(x+Δ)`.
///
/// Zero exactly when forward and backward hops between `x` and `x+Δ` balance.
pub fn detailed_balance_residual(
    kernel: &JumpKernel,
    rate: &RateField,
    x: f64,
    delta: f64,
) -> Result<f64> {
    let fwd = kernel.evaluate(delta, x)? * rate.rate(x)?;
    let bwd = kernel.evaluate(-delta, x + delta)? * rate.rate(x + delta)?;
    Ok(fwd - bwd)
}

/// Relative weight of the third and fourth Kramers-Moyal terms against the
/// diffusive term, for density structures of scale `l_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationDiagnostic {
    pub rho3: f64,
    pub rho4: f64,
}

/// `ρₙ = |Mₙ/n!| / (|M₂/2|·l_uⁿ⁻²)` for n = 3, 4.
pub fn truncation_diagnostic(
    kernel: &JumpKernel,
    rate: &RateField,
    x: f64,
    l_u: f64,
) -> Result<TruncationDiagnostic> {
    if !(l_u.is_finite() && l_u > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "variation scale l_u = {l_u} must be positive"
        )));
    }
    let m2 = km_moment(kernel, rate, 2, x)?;
    if m2 == 0.0 {
        return Err(CoreError::UndefinedRatio);
    }
    let diffusive = (m2 / 2.0).abs();
    let m3 = km_moment(kernel, rate, 3, x)?;
    let m4 = km_moment(kernel, rate, 4, x)?;
    Ok(TruncationDiagnostic {
        rho3: (m3 / 6.0).abs() / (diffusive * l_u),
        rho4: (m4 / 24.0).abs() / (diffusive * l_u * l_u),
    })
}

/// Second-order first derivative: centered inside, one-sided at the ends.
pub(crate) fn ddx_centered(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    if n < 3 {
        out.resize(n, 0.0);
        return out;
    }
    out.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h));
    for i in 1..n - 1 {
        out.push((values[i + 1] - values[i - 1]) / (2.0 * h));
    }
    out.push((3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h));
    out
}
