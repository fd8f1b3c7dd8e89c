//! Jump kernels `p(Δ; x)`, waiting-rate fields `r(x) = 1/τ(x)`, and boundary
//! transition profiles.
//!
//! A kernel is a probability density over the jump displacement Δ, possibly
//! varying with the departure point x. Densities vanish beyond the support
//! cutoff `Δ_max` and are normalized on the retained support, so every family
//! integrates to one under the module quadrature.
//!
//! The detailed-balance family is built from a symmetric base `s(|Δ|)` and a
//! positive modulation `φ(x)` as the hop rate `k(x → x+Δ) = s(|Δ|)·φ(x+Δ/2)`.
//! The rate is symmetric under endpoint exchange, so forward and backward hops
//! between any two points balance exactly; the waiting rate is the integral
//! `1/τ(x) = ∫ k dΔ` and the jump density is `p = k·τ`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{CoreError, Result};
use crate::lattice::Grid;
use crate::quad::{simpson_symmetric, SIMPSON_INTERVALS};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Gaussian support is cut at this many standard deviations.
pub const GAUSSIAN_SUPPORT_SIGMAS: f64 = 6.0;

/// Uniformly sampled scalar table with linear interpolation, clamped ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1d {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl Table1d {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(x0.is_finite() && dx.is_finite() && dx > 0.0) || values.len() < 2 {
            return Err(CoreError::InvalidParameter(
                "table needs dx > 0 and at least two samples".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidParameter(
                "table values must be finite".into(),
            ));
        }
        Ok(Self { x0, dx, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let t = (x - self.x0) / self.dx;
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= last as f64 {
            return self.values[last];
        }
        let i = t as usize;
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Which side of the boundary is interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Interior lies above the boundary (wall on the left of the interior).
    Lower,
    /// Interior lies below the boundary (wall on the right of the interior).
    Upper,
}

/// Smooth multiplier ramping from 1 (interior) to `floor` (exterior) across a
/// window of half-width `width` around `boundary`.
///
/// The ramp is the cubic smoothstep, C¹ and monotone across the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionProfile {
    boundary: f64,
    width: f64,
    floor: f64,
    side: Side,
}

impl TransitionProfile {
    pub fn new(boundary: f64, width: f64, floor: f64, side: Side) -> Result<Self> {
        if !(boundary.is_finite() && width.is_finite() && width > 0.0) {
            return Err(CoreError::InvalidParameter(
                "transition width must be positive and finite".into(),
            ));
        }
        if !(0.0..=1.0).contains(&floor) {
            return Err(CoreError::InvalidParameter(format!(
                "transition floor {floor} outside [0, 1]"
            )));
        }
        Ok(Self {
            boundary,
            width,
            floor,
            side,
        })
    }

    pub fn boundary(&self) -> f64 {
        self.boundary
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Multiplier at `x`: 1 at depth ≥ width inside, `floor` at depth ≥ width
    /// outside.
    pub fn chi(&self, x: f64) -> f64 {
        let u = match self.side {
            Side::Upper => (x - (self.boundary - self.width)) / (2.0 * self.width),
            Side::Lower => ((self.boundary + self.width) - x) / (2.0 * self.width),
        };
        if u <= 0.0 {
            1.0
        } else if u >= 1.0 {
            self.floor
        } else {
            let ramp = 1.0 - u * u * (3.0 - 2.0 * u);
            self.floor + (1.0 - self.floor) * ramp
        }
    }
}

/// Position-dependent scalar parameter drawn from a fixed catalog of forms.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFn {
    Constant(f64),
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// `offset + amplitude · sin(2π·frequency·x + phase)`.
    Sinusoidal {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    Tabulated(Table1d),
    Transition(TransitionProfile),
    Product(Vec<ProfileFn>),
}

impl ProfileFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ProfileFn::Constant(c) => *c,
            ProfileFn::Linear { intercept, slope } => intercept + slope * x,
            ProfileFn::Sinusoidal {
                offset,
                amplitude,
                frequency,
                phase,
            } => offset + amplitude * libm::sin(2.0 * PI * frequency * x + phase),
            ProfileFn::Tabulated(t) => t.eval(x),
            ProfileFn::Transition(p) => p.chi(x),
            ProfileFn::Product(parts) => parts.iter().map(|p| p.eval(x)).product(),
        }
    }

    /// True when the form cannot vary with position.
    pub fn is_constant(&self) -> bool {
        match self {
            ProfileFn::Constant(_) => true,
            ProfileFn::Linear { slope, .. } => *slope == 0.0,
            ProfileFn::Sinusoidal { amplitude, .. } => *amplitude == 0.0,
            ProfileFn::Tabulated(t) => t.values.iter().all(|v| *v == t.values[0]),
            ProfileFn::Transition(_) => false,
            ProfileFn::Product(parts) => parts.iter().all(|p| p.is_constant()),
        }
    }
}

/// Symmetric base shape for the detailed-balance construction, unit peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymmetricBase {
    Gaussian { sigma: f64 },
    TopHat { halfwidth: f64 },
}

impl SymmetricBase {
    fn validate(&self) -> Result<()> {
        let w = self.width();
        if !(w.is_finite() && w > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "symmetric base width {w} must be positive"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, abs_delta: f64) -> f64 {
        match self {
            SymmetricBase::Gaussian { sigma } => {
                libm::exp(-abs_delta * abs_delta / (2.0 * sigma * sigma))
            }
            SymmetricBase::TopHat { halfwidth } => {
                if abs_delta <= *halfwidth {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius beyond which the base is treated as zero.
    pub fn support_radius(&self) -> f64 {
        match self {
            SymmetricBase::Gaussian { sigma } => GAUSSIAN_SUPPORT_SIGMAS * sigma,
            SymmetricBase::TopHat { halfwidth } => *halfwidth,
        }
    }

    pub fn width(&self) -> f64 {
        match self {
            SymmetricBase::Gaussian { sigma } => *sigma,
            SymmetricBase::TopHat { halfwidth } => *halfwidth,
        }
    }
}

/// Hop-rate law `k(x → y) = s(|y − x|) · φ((x + y)/2)`.
///
/// The midpoint convention makes `k` symmetric under endpoint exchange, which
/// is the detailed-balance condition; it also matches the divergence-form
/// diffusion limit to second order in the base width.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailedBalanceLaw {
    base: SymmetricBase,
    modulation: ProfileFn,
    cutoff: f64,
}

impl DetailedBalanceLaw {
    pub fn new(base: SymmetricBase, modulation: ProfileFn, delta_max: f64) -> Result<Self> {
        base.validate()?;
        if !(delta_max.is_finite() && delta_max > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "delta_max {delta_max} must be positive"
            )));
        }
        Ok(Self {
            base,
            modulation,
            cutoff: delta_max.min(base.support_radius()),
        })
    }

    pub fn base(&self) -> SymmetricBase {
        self.base
    }

    pub fn modulation(&self) -> &ProfileFn {
        &self.modulation
    }

    /// Effective support radius of the law.
    pub fn support_radius(&self) -> f64 {
        self.cutoff
    }

    /// Transition rate density for the hop `from → to`.
    pub fn hop_rate(&self, from: f64, to: f64) -> f64 {
        let delta = to - from;
        if delta.abs() > self.cutoff {
            return 0.0;
        }
        self.base.eval(delta.abs()) * self.modulation.eval(0.5 * (from + to))
    }

    /// Total departure rate `1/τ(x) = ∫ k(x → x+Δ) dΔ`.
    pub fn rate(&self, x: f64) -> f64 {
        simpson_symmetric(
            |d| self.base.eval(d.abs()) * self.modulation.eval(x + 0.5 * d),
            self.cutoff,
            SIMPSON_INTERVALS,
        )
    }
}

/// Tabulated jump density over a (Δ, x) rectangle, bilinear interpolation.
///
/// Each x-slice is renormalized at construction so its trapezoid integral over
/// the Δ nodes is one; a blend of two normalized slices is again normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    x0: f64,
    dx: f64,
    delta0: f64,
    ddelta: f64,
    /// Row-major: `values[ix * ndelta + id]`.
    values: Vec<f64>,
    nx: usize,
    ndelta: usize,
}

impl KernelTable {
    pub fn new(
        x0: f64,
        dx: f64,
        nx: usize,
        delta0: f64,
        ddelta: f64,
        ndelta: usize,
        mut values: Vec<f64>,
    ) -> Result<Self> {
        if nx == 0 || ndelta < 3 || values.len() != nx * ndelta {
            return Err(CoreError::InvalidParameter(
                "kernel table shape mismatch".into(),
            ));
        }
        if !(ddelta.is_finite() && ddelta > 0.0 && dx.is_finite() && (dx > 0.0 || nx == 1)) {
            return Err(CoreError::InvalidParameter(
                "kernel table spacing must be positive".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(CoreError::InvalidParameter(
                "kernel table densities must be finite and non-negative".into(),
            ));
        }
        for ix in 0..nx {
            let row = &mut values[ix * ndelta..(ix + 1) * ndelta];
            let mut integral = 0.0;
            for id in 0..ndelta - 1 {
                integral += 0.5 * (row[id] + row[id + 1]) * ddelta;
            }
            if integral <= 0.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "kernel table slice {ix} integrates to zero"
                )));
            }
            for v in row {
                *v /= integral;
            }
        }
        Ok(Self {
            x0,
            dx,
            delta0,
            ddelta,
            values,
            nx,
            ndelta,
        })
    }

    pub fn delta_lo(&self) -> f64 {
        self.delta0
    }

    pub fn delta_hi(&self) -> f64 {
        self.delta0 + (self.ndelta - 1) as f64 * self.ddelta
    }

    fn slice_weights(&self, x: f64) -> (usize, usize, f64) {
        if self.nx == 1 {
            return (0, 0, 0.0);
        }
        let t = (x - self.x0) / self.dx;
        if t <= 0.0 {
            (0, 0, 0.0)
        } else if t >= (self.nx - 1) as f64 {
            (self.nx - 1, self.nx - 1, 0.0)
        } else {
            let i = t as usize;
            (i, i + 1, t - i as f64)
        }
    }

    fn eval(&self, delta: f64, x: f64) -> f64 {
        if delta < self.delta0 || delta > self.delta_hi() {
            return 0.0;
        }
        let (ia, ib, wx) = self.slice_weights(x);
        let t = (delta - self.delta0) / self.ddelta;
        let id = (t as usize).min(self.ndelta - 2);
        let frac = t - id as f64;
        let row = |ix: usize| {
            let r = &self.values[ix * self.ndelta..];
            r[id] * (1.0 - frac) + r[id + 1] * frac
        };
        row(ia) * (1.0 - wx) + row(ib) * wx
    }

    /// Trapezoid integral of `f(Δ)·p(Δ; x)` over the table's own Δ nodes.
    fn node_integral(&self, x: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for id in 0..self.ndelta - 1 {
            let d0 = self.delta0 + id as f64 * self.ddelta;
            let d1 = d0 + self.ddelta;
            acc += 0.5 * (f(d0) * self.eval(d0, x) + f(d1) * self.eval(d1, x)) * self.ddelta;
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum KernelShape {
    Gaussian { sigma: ProfileFn },
    TopHat { halfwidth: ProfileFn },
    ShiftedGaussian { sigma: ProfileFn, mean: ProfileFn },
    DetailedBalance(DetailedBalanceLaw),
    Tabulated(KernelTable),
}

/// Jump probability density `p(Δ; x)` with a hard support cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpKernel {
    shape: KernelShape,
    delta_max: f64,
}

impl JumpKernel {
    fn build(shape: KernelShape, delta_max: f64) -> Result<Self> {
        if !(delta_max.is_finite() && delta_max > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "delta_max {delta_max} must be positive"
            )));
        }
        Ok(Self { shape, delta_max })
    }

    /// Gaussian kernel with position-dependent standard deviation.
    pub fn gaussian(sigma: ProfileFn, delta_max: f64) -> Result<Self> {
        Self::build(KernelShape::Gaussian { sigma }, delta_max)
    }

    /// Gaussian kernel with constant σ and the default six-sigma cutoff.
    pub fn gaussian_iso(sigma: f64) -> Result<Self> {
        Self::gaussian(
            ProfileFn::Constant(sigma),
            GAUSSIAN_SUPPORT_SIGMAS * sigma,
        )
    }

    /// Uniform kernel on `[-a(x), a(x)]`.
    pub fn tophat(halfwidth: ProfileFn, delta_max: f64) -> Result<Self> {
        Self::build(KernelShape::TopHat { halfwidth }, delta_max)
    }

    /// Uniform kernel with constant half-width.
    pub fn tophat_iso(halfwidth: f64) -> Result<Self> {
        Self::tophat(ProfileFn::Constant(halfwidth), halfwidth)
    }

    /// Gaussian kernel with a position-dependent mean displacement.
    pub fn shifted_gaussian(sigma: ProfileFn, mean: ProfileFn, delta_max: f64) -> Result<Self> {
        Self::build(KernelShape::ShiftedGaussian { sigma, mean }, delta_max)
    }

    /// Shifted Gaussian with constant parameters and an automatic cutoff.
    pub fn shifted_gaussian_iso(sigma: f64, mean: f64) -> Result<Self> {
        Self::shifted_gaussian(
            ProfileFn::Constant(sigma),
            ProfileFn::Constant(mean),
            GAUSSIAN_SUPPORT_SIGMAS * sigma + mean.abs(),
        )
    }

    pub fn tabulated(table: KernelTable) -> Result<Self> {
        let delta_max = table.delta_lo().abs().max(table.delta_hi().abs());
        Self::build(KernelShape::Tabulated(table), delta_max)
    }

    pub(crate) fn from_law(law: DetailedBalanceLaw) -> Self {
        let delta_max = law.support_radius();
        Self {
            shape: KernelShape::DetailedBalance(law),
            delta_max,
        }
    }

    pub(crate) fn shape(&self) -> &KernelShape {
        &self.shape
    }

    /// Support cutoff: `p(Δ; x) = 0` for `|Δ| > delta_max`.
    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    /// True for kernels built by the detailed-balance construction.
    pub fn is_detailed_balance(&self) -> bool {
        matches!(self.shape, KernelShape::DetailedBalance(_))
    }

    /// True when the density does not depend on the departure point.
    pub fn is_homogeneous(&self) -> bool {
        match &self.shape {
            KernelShape::Gaussian { sigma } => sigma.is_constant(),
            KernelShape::TopHat { halfwidth } => halfwidth.is_constant(),
            KernelShape::ShiftedGaussian { sigma, mean } => {
                sigma.is_constant() && mean.is_constant()
            }
            KernelShape::DetailedBalance(law) => law.modulation.is_constant(),
            KernelShape::Tabulated(t) => t.nx == 1,
        }
    }

    /// Resolved single-position view of the kernel.
    pub fn at(&self, x: f64) -> Result<KernelSlice<'_>> {
        let shape = match &self.shape {
            KernelShape::Gaussian { sigma } => {
                let s = positive_param("sigma", sigma.eval(x), x)?;
                SliceShape::Gaussian {
                    sigma: s,
                    amp: gaussian_amp(s, 0.0, self.delta_max),
                }
            }
            KernelShape::TopHat { halfwidth } => {
                let a = positive_param("halfwidth", halfwidth.eval(x), x)?;
                SliceShape::TopHat {
                    halfwidth: a.min(self.delta_max),
                }
            }
            KernelShape::ShiftedGaussian { sigma, mean } => {
                let s = positive_param("sigma", sigma.eval(x), x)?;
                let m = mean.eval(x);
                if !m.is_finite() {
                    return Err(CoreError::InvalidParameter(format!(
                        "mean not finite at x = {x}"
                    )));
                }
                SliceShape::ShiftedGaussian {
                    sigma: s,
                    mean: m,
                    amp: gaussian_amp(s, m, self.delta_max),
                }
            }
            KernelShape::DetailedBalance(law) => {
                let rate = law.rate(x);
                if rate <= 0.0 {
                    return Err(CoreError::DegenerateKernel);
                }
                SliceShape::DetailedBalance {
                    law,
                    x,
                    tau: 1.0 / rate,
                }
            }
            KernelShape::Tabulated(table) => SliceShape::Tabulated { table, x },
        };
        Ok(KernelSlice {
            shape,
            delta_max: self.delta_max,
        })
    }

    /// Density `p(Δ; x)`; exactly zero beyond the cutoff.
    pub fn evaluate(&self, delta: f64, x: f64) -> Result<f64> {
        Ok(self.at(x)?.density(delta))
    }

    /// Mean absolute jump length `⟨|Δ|⟩` at `x`.
    pub fn mean_jump_length(&self, x: f64) -> Result<f64> {
        Ok(self.at(x)?.abs_mean())
    }

    /// Characteristic width at `x` (σ, half-width, or base width).
    pub fn width_at(&self, x: f64) -> Result<f64> {
        Ok(self.at(x)?.width())
    }

    /// Smallest characteristic width over the grid centers.
    pub fn min_width_on(&self, grid: &Grid) -> Result<f64> {
        let mut w = f64::INFINITY;
        for x in grid.centers() {
            w = w.min(self.width_at(x)?);
        }
        Ok(w)
    }
}

fn positive_param(name: &str, value: f64, x: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CoreError::InvalidParameter(format!(
            "{name} = {value} at x = {x} (must be > 0)"
        )))
    }
}

/// Normalization constant for a Gaussian of mean `mu` restricted to
/// `[-delta_max, delta_max]`.
fn gaussian_amp(sigma: f64, mu: f64, delta_max: f64) -> f64 {
    let z = 0.5
        * (libm::erf((delta_max - mu) / (sigma * SQRT_2))
            + libm::erf((delta_max + mu) / (sigma * SQRT_2)));
    1.0 / (sigma * SQRT_2PI * z)
}

enum SliceShape<'k> {
    Gaussian {
        sigma: f64,
        amp: f64,
    },
    TopHat {
        halfwidth: f64,
    },
    ShiftedGaussian {
        sigma: f64,
        mean: f64,
        amp: f64,
    },
    DetailedBalance {
        law: &'k DetailedBalanceLaw,
        x: f64,
        tau: f64,
    },
    Tabulated {
        table: &'k KernelTable,
        x: f64,
    },
}

/// Kernel resolved at a fixed departure point.
pub struct KernelSlice<'k> {
    shape: SliceShape<'k>,
    delta_max: f64,
}

impl KernelSlice<'_> {
    pub fn density(&self, delta: f64) -> f64 {
        if delta.abs() > self.delta_max {
            return 0.0;
        }
        match &self.shape {
            SliceShape::Gaussian { sigma, amp } => {
                amp * libm::exp(-delta * delta / (2.0 * sigma * sigma))
            }
            SliceShape::TopHat { halfwidth } => {
                if delta.abs() <= *halfwidth {
                    0.5 / halfwidth
                } else {
                    0.0
                }
            }
            SliceShape::ShiftedGaussian { sigma, mean, amp } => {
                let d = delta - mean;
                amp * libm::exp(-d * d / (2.0 * sigma * sigma))
            }
            SliceShape::DetailedBalance { law, x, tau } => {
                if delta.abs() > law.support_radius() {
                    0.0
                } else {
                    law.base.eval(delta.abs()) * law.modulation.eval(x + 0.5 * delta) * tau
                }
            }
            SliceShape::Tabulated { table, x } => table.eval(delta, *x),
        }
    }

    /// Quadrature radius adapted to the slice's exact support.
    fn quad_radius(&self) -> f64 {
        match &self.shape {
            SliceShape::TopHat { halfwidth } => *halfwidth,
            SliceShape::DetailedBalance { law, .. } => law.support_radius(),
            _ => self.delta_max,
        }
    }

    /// `∫ f(Δ)·p(Δ) dΔ` with the family-adapted quadrature.
    fn weighted_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        if let SliceShape::Tabulated { table, x } = &self.shape {
            return table.node_integral(*x, f);
        }
        simpson_symmetric(
            |d| f(d) * self.density(d),
            self.quad_radius(),
            SIMPSON_INTERVALS,
        )
    }

    /// `∫ p dΔ`; one up to quadrature tolerance for every family.
    pub fn normalization(&self) -> f64 {
        self.weighted_integral(|_| 1.0)
    }

    /// Raw moment `∫ Δⁿ p dΔ`.
    pub fn moment(&self, n: u32) -> f64 {
        self.weighted_integral(|d| powi(d, n))
    }

    /// Mean absolute jump `∫ |Δ| p dΔ`.
    pub fn abs_mean(&self) -> f64 {
        self.weighted_integral(|d| d.abs())
    }

    /// Characteristic width of the slice.
    pub fn width(&self) -> f64 {
        match &self.shape {
            SliceShape::Gaussian { sigma, .. } => *sigma,
            SliceShape::TopHat { halfwidth } => *halfwidth,
            SliceShape::ShiftedGaussian { sigma, .. } => *sigma,
            SliceShape::DetailedBalance { law, .. } => law.base.width(),
            SliceShape::Tabulated { .. } => {
                let m1 = self.moment(1);
                let m2 = self.moment(2);
                libm::sqrt((m2 - m1 * m1).max(0.0))
            }
        }
    }

    /// Waiting time for detailed-balance slices, if defined by construction.
    pub fn tau(&self) -> Option<f64> {
        match &self.shape {
            SliceShape::DetailedBalance { tau, .. } => Some(*tau),
            _ => None,
        }
    }
}

fn powi(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Waiting-rate base before boundary suppression.
#[derive(Debug, Clone, PartialEq)]
pub enum RateBase {
    Uniform(f64),
    Profile(ProfileFn),
    DetailedBalance(DetailedBalanceLaw),
}

/// Waiting-rate field `r(x) = 1/τ(x)`, with optional boundary suppression
/// windows multiplying the base. `r(x) = 0` encodes a frozen site (τ → ∞).
#[derive(Debug, Clone, PartialEq)]
pub struct RateField {
    base: RateBase,
    suppressions: Vec<TransitionProfile>,
}

impl RateField {
    pub fn uniform(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "rate {rate} must be finite and non-negative"
            )));
        }
        Ok(Self {
            base: RateBase::Uniform(rate),
            suppressions: Vec::new(),
        })
    }

    pub fn from_profile(profile: ProfileFn) -> Self {
        Self {
            base: RateBase::Profile(profile),
            suppressions: Vec::new(),
        }
    }

    fn from_law(law: DetailedBalanceLaw) -> Self {
        Self {
            base: RateBase::DetailedBalance(law),
            suppressions: Vec::new(),
        }
    }

    /// Multiply the rate by a transition profile (repeatable).
    pub fn with_suppression(mut self, profile: TransitionProfile) -> Self {
        self.suppressions.push(profile);
        self
    }

    pub fn suppressions(&self) -> &[TransitionProfile] {
        &self.suppressions
    }

    pub fn rate(&self, x: f64) -> Result<f64> {
        let base = match &self.base {
            RateBase::Uniform(r) => *r,
            RateBase::Profile(p) => p.eval(x),
            RateBase::DetailedBalance(law) => law.rate(x),
        };
        if !(base.is_finite() && base >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "rate base = {base} at x = {x} (must be ≥ 0)"
            )));
        }
        Ok(self
            .suppressions
            .iter()
            .fold(base, |r, p| r * p.chi(x)))
    }

    /// Largest rate over the grid centers.
    pub fn max_on(&self, grid: &Grid) -> Result<f64> {
        let mut m: f64 = 0.0;
        for x in grid.centers() {
            m = m.max(self.rate(x)?);
        }
        Ok(m)
    }

    /// Rate field pre-sampled on the grid centers (widened by `margin_cells`
    /// on each side), with suppressions folded in.
    ///
    /// Detailed-balance rates cost one quadrature per evaluation; walker
    /// loops should use this linear-interpolated table instead.
    pub fn tabulated_on(&self, grid: &Grid, margin_cells: usize) -> Result<RateField> {
        let h = grid.h();
        let x0 = grid.x_min() + 0.5 * h - margin_cells as f64 * h;
        let n = grid.len() + 2 * margin_cells;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            values.push(self.rate(x0 + i as f64 * h)?);
        }
        Ok(RateField::from_profile(ProfileFn::Tabulated(Table1d::new(
            x0, h, values,
        )?)))
    }
}

/// Build the detailed-balance kernel/rate pair for `k(x→x+Δ) = s(|Δ|)·φ(x+Δ/2)`.
///
/// The modulation must be strictly positive wherever a midpoint can fall for
/// departures on `grid` (centers widened by half the support radius); the rate
/// integral must be positive on every center.
pub fn build_detailed_balance(
    base: SymmetricBase,
    modulation: ProfileFn,
    delta_max: f64,
    grid: &Grid,
) -> Result<(JumpKernel, RateField)> {
    let law = DetailedBalanceLaw::new(base, modulation, delta_max)?;
    let margin = 0.5 * law.support_radius();
    let lo = grid.x_min() - margin;
    let hi = grid.x_max() + margin;
    let step = 0.5 * grid.h();
    let n_probe = ((hi - lo) / step) as usize + 1;
    for i in 0..=n_probe {
        let x = (lo + i as f64 * step).min(hi);
        if law.modulation.eval(x) <= 0.0 {
            return Err(CoreError::NonPositiveModulation { x });
        }
    }
    for x in grid.centers() {
        if law.rate(x) <= 0.0 {
            return Err(CoreError::DegenerateKernel);
        }
    }
    Ok((JumpKernel::from_law(law.clone()), RateField::from_law(law)))
}
