//! n-step propagator statistics and the exact discrete convolution oracle.
//!
//! For a homogeneous kernel the n-step displacement is the sum of n
//! independent single-jump draws. Its distribution is computed two ways: by
//! Monte Carlo over walkers, and exactly by repeated discrete
//! self-convolution of the single-jump density on a uniform Δ grid. Cumulant
//! additivity makes the tabulated excess kurtosis decay exactly as `κ₁/n`.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::kernel::JumpKernel;
use crate::stats;
use crate::walkers::sampler::JumpSampler;

/// Distribution summary of the n-step displacement sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorStats {
    pub n_steps: usize,
    pub n_walkers: u64,
    pub variance: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov-Smirnov distance to the Gaussian fitted to the sample.
    pub ks_distance: f64,
}

/// Monte Carlo statistics of the n-step displacement of a homogeneous kernel.
pub fn propagator_statistics(
    kernel: &JumpKernel,
    n_steps: usize,
    n_walkers: u64,
    seed: u64,
) -> Result<PropagatorStats> {
    if !kernel.is_homogeneous() {
        return Err(CoreError::InvalidParameter(
            "propagator statistics need a homogeneous kernel".into(),
        ));
    }
    if n_steps == 0 || n_walkers == 0 {
        return Err(CoreError::InvalidParameter(
            "need n_steps >= 1 and at least one walker (n = 0 is the point mass at the origin)"
                .into(),
        ));
    }
    let sampler = JumpSampler::new(kernel, None)?;
    let mut sums = displacement_sums(&sampler, n_steps, 0..n_walkers, seed)?;
    let (_, m2, _, m4) = stats::central_moments_4(&sums);
    let kurt = m4 / (m2 * m2) - 3.0;
    let ks = stats::ks_to_fitted_gaussian(&mut sums);
    Ok(PropagatorStats {
        n_steps,
        n_walkers,
        variance: m2,
        excess_kurtosis: kurt,
        ks_distance: ks,
    })
}

/// Per-walker n-step displacement sums for a contiguous walker range, in
/// walker order (chunk-safe).
pub fn displacement_sums(
    sampler: &JumpSampler,
    n_steps: usize,
    range: core::ops::Range<u64>,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut sums = Vec::with_capacity((range.end - range.start) as usize);
    for walker in range {
        let mut rng = super::walker_rng(seed, walker);
        let mut acc = 0.0;
        for _ in 0..n_steps {
            acc += sampler.sample(&mut rng, 0.0)?;
        }
        sums.push(acc);
    }
    Ok(sums)
}

/// Probability density tabulated on a uniform Δ grid (atoms of mass
/// `value·step` at the nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    /// Δ of the first node.
    pub offset: f64,
    /// Node spacing.
    pub step: f64,
    /// Density values at the nodes.
    pub values: Vec<f64>,
}

impl TabulatedDensity {
    pub fn node(&self, k: usize) -> f64 {
        self.offset + k as f64 * self.step
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step
    }

    /// Density at `delta` by linear interpolation, zero outside the table.
    pub fn value_at(&self, delta: f64) -> f64 {
        let t = (delta - self.offset) / self.step;
        if t < 0.0 || t > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (t as usize).min(self.values.len() - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn mean(&self) -> f64 {
        let mut m = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            m += v * self.step * self.node(k);
        }
        m / self.total_mass()
    }

    /// Central moment of the atom distribution.
    pub fn central_moment(&self, order: u32) -> f64 {
        let mean = self.mean();
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let d = self.node(k) - mean;
            let mut p = 1.0;
            for _ in 0..order {
                p *= d;
            }
            acc += v * self.step * p;
        }
        acc / self.total_mass()
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        let m2 = self.central_moment(2);
        self.central_moment(4) / (m2 * m2) - 3.0
    }

    /// Delta-method standard error of a sample excess kurtosis that would be
    /// estimated from `n_samples` draws of this distribution.
    pub fn kurtosis_se(&self, n_samples: u64) -> f64 {
        stats::kurtosis_se_symmetric(
            self.central_moment(2),
            self.central_moment(4),
            self.central_moment(6),
            self.central_moment(8),
            n_samples as usize,
        )
    }

    /// KS distance between the atom CDF and the moment-fitted Gaussian.
    pub fn ks_to_fitted_gaussian(&self) -> f64 {
        let mean = self.mean();
        let sd = libm::sqrt(self.variance());
        let total = self.total_mass();
        let mut cum = 0.0;
        let mut d: f64 = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let below = cum;
            cum += v * self.step / total;
            let phi = stats::normal_cdf((self.node(k) - mean) / sd);
            d = d.max((below - phi).abs()).max((cum - phi).abs());
        }
        d
    }
}

/// Single-jump density sampled on a uniform grid of spacing `resolution`,
/// normalized to unit mass.
pub fn single_step_table(kernel: &JumpKernel, resolution: f64) -> Result<TabulatedDensity> {
    if !kernel.is_homogeneous() {
        return Err(CoreError::InvalidParameter(
            "the convolution oracle needs a homogeneous kernel".into(),
        ));
    }
    let width = kernel.width_at(0.0)?;
    if !(resolution > 0.0) || resolution > width / 4.0 {
        return Err(CoreError::ResolutionTooCoarse {
            h: resolution,
            width,
        });
    }
    let slice = kernel.at(0.0)?;
    let half = libm::ceil(kernel.delta_max() / resolution) as usize;
    let n = 2 * half + 1;
    let mut values: Vec<f64> = (0..n)
        .map(|k| slice.density((k as f64 - half as f64) * resolution))
        .collect();
    let mass: f64 = values.iter().sum::<f64>() * resolution;
    if !(mass > 0.0) {
        return Err(CoreError::DegenerateKernel);
    }
    for v in &mut values {
        *v /= mass;
    }
    Ok(TabulatedDensity {
        offset: -(half as f64) * resolution,
        step: resolution,
        values,
    })
}

/// Exact discrete n-fold self-convolution of the single-jump density.
pub fn n_fold_convolution(
    kernel: &JumpKernel,
    n: usize,
    resolution: f64,
) -> Result<TabulatedDensity> {
    let powers = convolution_powers(kernel, n, resolution)?;
    Ok(powers.into_iter().next_back().expect("n >= 1"))
}

/// Tables for every fold count `1..=n_max`, computed in one pass.
pub fn convolution_powers(
    kernel: &JumpKernel,
    n_max: usize,
    resolution: f64,
) -> Result<Vec<TabulatedDensity>> {
    if n_max == 0 {
        return Err(CoreError::InvalidParameter(
            "need at least one fold".into(),
        ));
    }
    let base = single_step_table(kernel, resolution)?;
    let step = base.step;
    let base_mass: Vec<f64> = base.values.iter().map(|v| v * step).collect();
    let mut out = Vec::with_capacity(n_max);
    let mut current = base_mass.clone();
    let mut offset = base.offset;
    out.push(base.clone());
    for _ in 2..=n_max {
        current = convolve_masses(&current, &base_mass);
        offset += base.offset;
        out.push(TabulatedDensity {
            offset,
            step,
            values: current.iter().map(|m| m / step).collect(),
        });
    }
    Ok(out)
}

fn convolve_masses(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = alloc::vec![0.0; a.len() + b.len() - 1];
    for (j, bj) in b.iter().enumerate() {
        if *bj == 0.0 {
            continue;
        }
        for (i, ai) in a.iter().enumerate() {
            c[i + j] += ai * bj;
        }
    }
    c
}
