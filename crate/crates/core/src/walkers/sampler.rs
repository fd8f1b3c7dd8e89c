//! Jump-displacement sampling for every kernel family.
//!
//! Closed-form families sample directly (inverse CDF for the top hat, polar
//! normal transform with cutoff rejection for the Gaussians). The
//! detailed-balance and tabulated families invert CDF tables precomputed per
//! position bin; the bin width is the lattice spacing `h`.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::kernel::{JumpKernel, KernelShape, ProfileFn};
use crate::lattice::Grid;

/// Nodes per precomputed CDF table.
const CDF_NODES: usize = 1025;

#[derive(Debug, Clone)]
enum SamplerKind {
    Gaussian { sigma: ProfileFn },
    TopHat { halfwidth: ProfileFn },
    ShiftedGaussian { sigma: ProfileFn, mean: ProfileFn },
    Cdf(CdfTables),
}

#[derive(Debug, Clone)]
struct CdfTables {
    x0: f64,
    dx: f64,
    n_bins: usize,
    delta_lo: f64,
    delta_step: f64,
    nodes: usize,
    /// Row-major per position bin, each row non-decreasing from 0 to 1.
    cdf: Vec<f64>,
}

impl CdfTables {
    fn bin_of(&self, x: f64) -> usize {
        if self.n_bins == 1 {
            return 0;
        }
        // nearest table node (nodes sit on cell centers)
        let t = (x - self.x0) / self.dx + 0.5;
        if t <= 0.0 {
            0
        } else {
            (t as usize).min(self.n_bins - 1)
        }
    }

    fn invert(&self, bin: usize, u: f64) -> f64 {
        let row = &self.cdf[bin * self.nodes..(bin + 1) * self.nodes];
        // binary search for the first node with cdf >= u
        let mut lo = 0;
        let mut hi = self.nodes - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if row[mid] < u {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            return self.delta_lo;
        }
        let c0 = row[lo - 1];
        let c1 = row[lo];
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 1.0 };
        self.delta_lo + (lo as f64 - 1.0 + frac) * self.delta_step
    }
}

/// Displacement sampler for one kernel.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    kind: SamplerKind,
    delta_max: f64,
}

impl JumpSampler {
    /// Build a sampler. Table-driven families need `grid` for their position
    /// bins unless the kernel is homogeneous.
    pub fn new(kernel: &JumpKernel, grid: Option<&Grid>) -> Result<Self> {
        let delta_max = kernel.delta_max();
        let kind = match kernel.shape() {
            KernelShape::Gaussian { sigma } => SamplerKind::Gaussian {
                sigma: sigma.clone(),
            },
            KernelShape::TopHat { halfwidth } => SamplerKind::TopHat {
                halfwidth: halfwidth.clone(),
            },
            KernelShape::ShiftedGaussian { sigma, mean } => SamplerKind::ShiftedGaussian {
                sigma: sigma.clone(),
                mean: mean.clone(),
            },
            KernelShape::DetailedBalance(_) | KernelShape::Tabulated(_) => {
                SamplerKind::Cdf(build_tables(kernel, grid)?)
            }
        };
        Ok(Self { kind, delta_max })
    }

    /// Draw one displacement for a walker departing from `x`.
    pub fn sample(&self, rng: &mut ChaCha8Rng, x: f64) -> Result<f64> {
        match &self.kind {
            SamplerKind::Gaussian { sigma } => {
                let s = positive(sigma.eval(x), x)?;
                Ok(truncated_normal(rng, 0.0, s, self.delta_max))
            }
            SamplerKind::TopHat { halfwidth } => {
                let a = positive(halfwidth.eval(x), x)?.min(self.delta_max);
                Ok(a * (2.0 * rng.gen::<f64>() - 1.0))
            }
            SamplerKind::ShiftedGaussian { sigma, mean } => {
                let s = positive(sigma.eval(x), x)?;
                Ok(truncated_normal(rng, mean.eval(x), s, self.delta_max))
            }
            SamplerKind::Cdf(tables) => {
                let bin = tables.bin_of(x);
                Ok(tables.invert(bin, rng.gen::<f64>()))
            }
        }
    }
}

fn positive(value: f64, x: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CoreError::InvalidParameter(alloc::format!(
            "kernel width = {value} at x = {x} (must be > 0)"
        )))
    }
}

/// Marsaglia polar method.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u = 2.0 * rng.gen::<f64>() - 1.0;
        let v = 2.0 * rng.gen::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * libm::sqrt(-2.0 * libm::log(s) / s);
        }
    }
}

/// Normal draw rejected outside the support cutoff, matching the truncated
/// and renormalized kernel density exactly.
fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sigma: f64, delta_max: f64) -> f64 {
    loop {
        let d = mean + sigma * standard_normal(rng);
        if d.abs() <= delta_max {
            return d;
        }
    }
}

fn build_tables(kernel: &JumpKernel, grid: Option<&Grid>) -> Result<CdfTables> {
    let (x0, dx, n_bins) = match grid {
        Some(g) => (g.x_min() + 0.5 * g.h(), g.h(), g.len()),
        None if kernel.is_homogeneous() => (0.0, 1.0, 1),
        None => {
            return Err(CoreError::InvalidParameter(
                "table-driven sampling of an inhomogeneous kernel needs a position grid".into(),
            ))
        }
    };
    let nodes = CDF_NODES;
    let delta_lo = -kernel.delta_max();
    let delta_step = 2.0 * kernel.delta_max() / (nodes - 1) as f64;
    let mut cdf = Vec::with_capacity(n_bins * nodes);
    for b in 0..n_bins {
        let x = x0 + b as f64 * dx;
        let slice = kernel.at(x)?;
        let mut acc = 0.0;
        let mut prev = slice.density(delta_lo);
        cdf.push(0.0);
        for k in 1..nodes {
            let d = delta_lo + k as f64 * delta_step;
            let cur = slice.density(d);
            acc += 0.5 * (prev + cur) * delta_step;
            cdf.push(acc);
            prev = cur;
        }
        let total = acc;
        if !(total > 0.0) {
            return Err(CoreError::DegenerateKernel);
        }
        let row = &mut cdf[b * nodes..(b + 1) * nodes];
        for c in row {
            *c /= total;
        }
    }
    Ok(CdfTables {
        x0,
        dx,
        n_bins,
        delta_lo,
        delta_step,
        nodes,
        cdf,
    })
}
