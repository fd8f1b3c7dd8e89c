//! Continuous-time random-walk ensemble realizing the jump picture.
//!
//! Each walker waits an exponential time with mean `τ(x)` at its current
//! position, then jumps by `Δ ~ p(·; x)`. Random streams are counter-based:
//! walker `i` draws from stream `i` of a ChaCha generator seeded with the
//! master seed, so results are bitwise independent of execution order and
//! chunks can run in parallel.
//!
//! A walker that lands on a zero-rate site is frozen and never moves again
//! (τ → ∞). Walkers that merely start on a zero-rate site simply wait
//! forever: they stay visible in snapshots at their initial position.

mod propagator;
mod sampler;

pub use propagator::{
    convolution_powers, n_fold_convolution, propagator_statistics, PropagatorStats,
    TabulatedDensity,
};
pub use sampler::JumpSampler;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::kernel::RateField;
use crate::lattice::Interval;

/// Walkers per deterministic work unit. Fixed so that parallel and serial
/// executions merge identical partial results.
pub const CHUNK_SIZE: u64 = 1024;

/// Uniform histogram binning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || count == 0 {
            return Err(CoreError::InvalidParameter(
                "bins need lo < hi and at least one bin".into(),
            ));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.width()
    }

    /// Bin index for `x`, `None` outside `[lo, hi]`.
    pub fn index(&self, x: f64) -> Option<usize> {
        if x < self.lo || x > self.hi {
            return None;
        }
        let i = ((x - self.lo) / self.width()) as usize;
        Some(i.min(self.count - 1))
    }
}

/// Initial walker placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPosition {
    Point(f64),
    Uniform(Interval),
}

/// Run control for a CTRW simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct CtrwConfig {
    pub t_end: f64,
    /// Snapshot times, sorted, each in `[0, t_end]`.
    pub snapshots: Vec<f64>,
    pub bins: BinSpec,
    pub initial: InitialPosition,
    pub n_walkers: u64,
    pub seed: u64,
    /// Collect per-jump records `(x, Δ, τ_local)`.
    pub record_jumps: bool,
}

impl CtrwConfig {
    fn validate(&self) -> Result<()> {
        if self.n_walkers == 0 {
            return Err(CoreError::InvalidParameter(
                "need at least one walker".into(),
            ));
        }
        if !(self.t_end > 0.0) {
            return Err(CoreError::InvalidParameter("t_end must be positive".into()));
        }
        let mut prev = 0.0;
        for &s in &self.snapshots {
            if s < prev || s > self.t_end {
                return Err(CoreError::InvalidParameter(
                    "snapshots must be sorted and within [0, t_end]".into(),
                ));
            }
            prev = s;
        }
        Ok(())
    }
}

/// One recorded jump: departure point, displacement, local waiting time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub x: f64,
    pub delta: f64,
    pub tau_local: f64,
}

/// Full walker state, checkpointable and resumable.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerEnsemble {
    master_seed: u64,
    positions: Vec<f64>,
    /// Absolute time of the pending jump (`inf` when no jump will ever fire).
    next_jump: Vec<f64>,
    frozen: Vec<bool>,
    /// ChaCha word positions, for exact stream resumption.
    rng_pos: Vec<u128>,
}

impl WalkerEnsemble {
    pub fn from_raw(
        master_seed: u64,
        positions: Vec<f64>,
        next_jump: Vec<f64>,
        frozen: Vec<bool>,
        rng_pos: Vec<u128>,
    ) -> Result<Self> {
        let n = positions.len();
        if next_jump.len() != n || frozen.len() != n || rng_pos.len() != n {
            return Err(CoreError::InvalidParameter(
                "ensemble arrays must have equal length".into(),
            ));
        }
        Ok(Self {
            master_seed,
            positions,
            next_jump,
            frozen,
            rng_pos,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn next_jump_times(&self) -> &[f64] {
        &self.next_jump
    }

    pub fn frozen_flags(&self) -> &[bool] {
        &self.frozen
    }

    pub fn rng_positions(&self) -> &[u128] {
        &self.rng_pos
    }

    pub fn frozen_fraction(&self) -> f64 {
        self.frozen.iter().filter(|f| **f).count() as f64 / self.len() as f64
    }
}

/// Binned snapshot of the ensemble, plus optional jump-moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalProfile {
    pub time: f64,
    pub bins: BinSpec,
    /// Unfrozen walkers per bin (walkers outside the bin range are dropped).
    pub counts: Vec<u64>,
    /// `counts / (total_walkers · bin width)`.
    pub density: Vec<f64>,
    pub total_walkers: u64,
    /// Walkers not frozen at this time (inside or outside the bin range).
    pub unfrozen: u64,
    pub jump_stats: Option<JumpStats>,
}

impl EmpiricalProfile {
    /// `Σ density · width`; equals the in-range unfrozen fraction.
    pub fn density_integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bins.width()
    }
}

/// Per-bin conditional Kramers-Moyal estimates from jump records.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpStats {
    pub counts: Vec<u64>,
    pub mean_delta: Vec<f64>,
    pub mean_delta_sq: Vec<f64>,
    /// `⟨Δ/τ⟩` per bin.
    pub vprime: Vec<f64>,
    pub vprime_se: Vec<f64>,
    /// `⟨Δ²/(2τ)⟩` per bin.
    pub d: Vec<f64>,
    pub d_se: Vec<f64>,
    /// Bins with at least `min_count` samples.
    pub reported: Vec<bool>,
    pub min_count: u64,
}

/// Output of a CTRW run.
#[derive(Debug, Clone, PartialEq)]
pub struct CtrwRun {
    pub snapshots: Vec<EmpiricalProfile>,
    pub ensemble: WalkerEnsemble,
    pub jumps: Vec<JumpRecord>,
    pub total_jumps: u64,
}

/// Partial result for a contiguous walker range.
#[derive(Debug, Clone)]
pub struct ChunkOutcome {
    range: Range<u64>,
    bins: BinSpec,
    counts: Vec<Vec<u64>>,
    unfrozen: Vec<u64>,
    positions: Vec<f64>,
    next_jump: Vec<f64>,
    frozen: Vec<bool>,
    rng_pos: Vec<u128>,
    jumps: Vec<JumpRecord>,
    total_jumps: u64,
}

/// Fixed-size chunk ranges covering `0..n_walkers`.
pub fn chunk_ranges(n_walkers: u64) -> Vec<Range<u64>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < n_walkers {
        let end = (start + CHUNK_SIZE).min(n_walkers);
        out.push(start..end);
        start = end;
    }
    out
}

fn walker_rng(master_seed: u64, walker: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(walker);
    rng
}

#[inline]
fn exponential_wait(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -libm::log(1.0 - rng.gen::<f64>()) / rate
}

struct WalkerState {
    x: f64,
    next_jump: f64,
    frozen: bool,
    rate: f64,
}

/// Simulate walkers `range` from fresh initial conditions.
pub fn simulate_chunk(
    rate: &RateField,
    sampler: &JumpSampler,
    cfg: &CtrwConfig,
    range: Range<u64>,
) -> Result<ChunkOutcome> {
    cfg.validate()?;
    let mut out = ChunkOutcome::empty(cfg, range.clone());
    for walker in range {
        let mut rng = walker_rng(cfg.seed, walker);
        let x = match cfg.initial {
            InitialPosition::Point(p) => p,
            InitialPosition::Uniform(iv) => iv.lo + rng.gen::<f64>() * iv.length(),
        };
        let r = rate.rate(x)?;
        let next_jump = if r > 0.0 {
            exponential_wait(&mut rng, r)
        } else {
            f64::INFINITY
        };
        let mut state = WalkerState {
            x,
            next_jump,
            frozen: false,
            rate: r,
        };
        advance_walker(rate, sampler, cfg, &mut state, &mut rng, &mut out, 0)?;
        out.push_state(&state, rng.get_word_pos());
    }
    Ok(out)
}

/// Continue walkers `range` of a saved ensemble up to `cfg.t_end`.
///
/// Snapshot times must lie beyond the ensemble's previous horizon; the
/// combined run is bitwise identical to an uninterrupted one.
pub fn resume_chunk(
    ensemble: &WalkerEnsemble,
    rate: &RateField,
    sampler: &JumpSampler,
    cfg: &CtrwConfig,
    range: Range<u64>,
) -> Result<ChunkOutcome> {
    cfg.validate()?;
    if cfg.seed != ensemble.master_seed {
        return Err(CoreError::InvalidParameter(
            "resume seed must match the saved master seed".into(),
        ));
    }
    let mut out = ChunkOutcome::empty(cfg, range.clone());
    for walker in range {
        let i = walker as usize;
        let mut rng = walker_rng(cfg.seed, walker);
        rng.set_word_pos(ensemble.rng_pos[i]);
        let x = ensemble.positions[i];
        let frozen = ensemble.frozen[i];
        let r = if frozen { 0.0 } else { rate.rate(x)? };
        let mut state = WalkerState {
            x,
            next_jump: ensemble.next_jump[i],
            frozen,
            rate: r,
        };
        advance_walker(rate, sampler, cfg, &mut state, &mut rng, &mut out, 0)?;
        out.push_state(&state, rng.get_word_pos());
    }
    Ok(out)
}

fn advance_walker(
    rate: &RateField,
    sampler: &JumpSampler,
    cfg: &CtrwConfig,
    state: &mut WalkerState,
    rng: &mut ChaCha8Rng,
    out: &mut ChunkOutcome,
    mut snap_idx: usize,
) -> Result<()> {
    if state.frozen {
        return Ok(());
    }
    loop {
        while snap_idx < cfg.snapshots.len() && cfg.snapshots[snap_idx] < state.next_jump {
            out.record(snap_idx, state.x);
            snap_idx += 1;
        }
        if state.next_jump > cfg.t_end {
            return Ok(());
        }
        let delta = sampler.sample(rng, state.x)?;
        if cfg.record_jumps {
            out.jumps.push(JumpRecord {
                x: state.x,
                delta,
                tau_local: 1.0 / state.rate,
            });
        }
        out.total_jumps += 1;
        let t = state.next_jump;
        state.x += delta;
        let r = rate.rate(state.x)?;
        if r == 0.0 {
            // arrival on a dead site: frozen for good
            state.frozen = true;
            state.next_jump = f64::INFINITY;
            state.rate = 0.0;
            return Ok(());
        }
        state.rate = r;
        state.next_jump = t + exponential_wait(rng, r);
    }
}

impl ChunkOutcome {
    fn empty(cfg: &CtrwConfig, range: Range<u64>) -> Self {
        Self {
            range,
            bins: cfg.bins,
            counts: vec![vec![0; cfg.bins.count]; cfg.snapshots.len()],
            unfrozen: vec![0; cfg.snapshots.len()],
            positions: Vec::new(),
            next_jump: Vec::new(),
            frozen: Vec::new(),
            rng_pos: Vec::new(),
            jumps: Vec::new(),
            total_jumps: 0,
        }
    }

    fn record(&mut self, snap: usize, x: f64) {
        self.unfrozen[snap] += 1;
        if let Some(bin) = self.bins.index(x) {
            self.counts[snap][bin] += 1;
        }
    }

    fn push_state(&mut self, state: &WalkerState, rng_pos: u128) {
        self.positions.push(state.x);
        self.next_jump.push(state.next_jump);
        self.frozen.push(state.frozen);
        self.rng_pos.push(rng_pos);
    }
}

/// Merge chunk outcomes (must cover `0..n_walkers` contiguously, in order).
pub fn merge_chunks(cfg: &CtrwConfig, chunks: Vec<ChunkOutcome>) -> Result<CtrwRun> {
    let mut expected = 0u64;
    for c in &chunks {
        if c.range.start != expected {
            return Err(CoreError::InvalidParameter(
                "chunks must be merged contiguously in walker order".into(),
            ));
        }
        expected = c.range.end;
    }
    if expected != cfg.n_walkers {
        return Err(CoreError::InvalidParameter(
            "chunks do not cover the walker range".into(),
        ));
    }

    let nsnap = cfg.snapshots.len();
    let mut counts = vec![vec![0u64; cfg.bins.count]; nsnap];
    let mut unfrozen = vec![0u64; nsnap];
    let mut positions = Vec::with_capacity(cfg.n_walkers as usize);
    let mut next_jump = Vec::with_capacity(cfg.n_walkers as usize);
    let mut frozen = Vec::with_capacity(cfg.n_walkers as usize);
    let mut rng_pos = Vec::with_capacity(cfg.n_walkers as usize);
    let mut jumps = Vec::new();
    let mut total_jumps = 0;

    for c in chunks {
        for s in 0..nsnap {
            unfrozen[s] += c.unfrozen[s];
            for b in 0..cfg.bins.count {
                counts[s][b] += c.counts[s][b];
            }
        }
        positions.extend_from_slice(&c.positions);
        next_jump.extend_from_slice(&c.next_jump);
        frozen.extend_from_slice(&c.frozen);
        rng_pos.extend_from_slice(&c.rng_pos);
        jumps.extend_from_slice(&c.jumps);
        total_jumps += c.total_jumps;
    }

    let snapshots = cfg
        .snapshots
        .iter()
        .enumerate()
        .map(|(s, &t)| {
            let density = counts[s]
                .iter()
                .map(|c| *c as f64 / (cfg.n_walkers as f64 * cfg.bins.width()))
                .collect();
            EmpiricalProfile {
                time: t,
                bins: cfg.bins,
                counts: counts[s].clone(),
                density,
                total_walkers: cfg.n_walkers,
                unfrozen: unfrozen[s],
                jump_stats: None,
            }
        })
        .collect();

    Ok(CtrwRun {
        snapshots,
        ensemble: WalkerEnsemble {
            master_seed: cfg.seed,
            positions,
            next_jump,
            frozen,
            rng_pos,
        },
        jumps,
        total_jumps,
    })
}

/// Serial CTRW simulation (chunked internally, so it matches parallel runs).
pub fn simulate_ctrw(
    rate: &RateField,
    sampler: &JumpSampler,
    cfg: &CtrwConfig,
) -> Result<CtrwRun> {
    cfg.validate()?;
    let mut chunks = Vec::new();
    for range in chunk_ranges(cfg.n_walkers) {
        chunks.push(simulate_chunk(rate, sampler, cfg, range)?);
    }
    merge_chunks(cfg, chunks)
}

/// Serial resume of a saved ensemble to a later horizon.
pub fn resume_ctrw(
    ensemble: &WalkerEnsemble,
    rate: &RateField,
    sampler: &JumpSampler,
    cfg: &CtrwConfig,
) -> Result<CtrwRun> {
    cfg.validate()?;
    if cfg.n_walkers as usize != ensemble.len() {
        return Err(CoreError::InvalidParameter(
            "walker count must match the saved ensemble".into(),
        ));
    }
    let mut chunks = Vec::new();
    for range in chunk_ranges(cfg.n_walkers) {
        chunks.push(resume_chunk(ensemble, rate, sampler, cfg, range)?);
    }
    merge_chunks(cfg, chunks)
}

/// Per-bin Kramers-Moyal estimates from jump records.
///
/// `V̂' = ⟨Δ/τ⟩` and `D̂ = ⟨Δ²/(2τ)⟩` with each jump weighted by its own
/// departure-point waiting time; bins with fewer than `min_count` samples are
/// flagged unreported.
pub fn estimate_km(records: &[JumpRecord], bins: BinSpec, min_count: u64) -> EmpiricalProfile {
    let nb = bins.count;
    let mut counts = vec![0u64; nb];
    let mut s_delta = vec![0.0; nb];
    let mut s_delta_sq = vec![0.0; nb];
    let mut s_v = vec![0.0; nb];
    let mut s_v2 = vec![0.0; nb];
    let mut s_d = vec![0.0; nb];
    let mut s_d2 = vec![0.0; nb];
    for rec in records {
        let Some(b) = bins.index(rec.x) else {
            continue;
        };
        let gv = rec.delta / rec.tau_local;
        let gd = rec.delta * rec.delta / (2.0 * rec.tau_local);
        counts[b] += 1;
        s_delta[b] += rec.delta;
        s_delta_sq[b] += rec.delta * rec.delta;
        s_v[b] += gv;
        s_v2[b] += gv * gv;
        s_d[b] += gd;
        s_d2[b] += gd * gd;
    }
    let mut stats = JumpStats {
        counts: counts.clone(),
        mean_delta: vec![0.0; nb],
        mean_delta_sq: vec![0.0; nb],
        vprime: vec![0.0; nb],
        vprime_se: vec![0.0; nb],
        d: vec![0.0; nb],
        d_se: vec![0.0; nb],
        reported: vec![false; nb],
        min_count,
    };
    for b in 0..nb {
        let n = counts[b];
        if n == 0 {
            continue;
        }
        let nf = n as f64;
        stats.mean_delta[b] = s_delta[b] / nf;
        stats.mean_delta_sq[b] = s_delta_sq[b] / nf;
        stats.vprime[b] = s_v[b] / nf;
        stats.d[b] = s_d[b] / nf;
        if n >= 2 {
            let var_v = (s_v2[b] - nf * stats.vprime[b] * stats.vprime[b]) / (nf - 1.0);
            let var_d = (s_d2[b] - nf * stats.d[b] * stats.d[b]) / (nf - 1.0);
            stats.vprime_se[b] = libm::sqrt(var_v.max(0.0) / nf);
            stats.d_se[b] = libm::sqrt(var_d.max(0.0) / nf);
        }
        stats.reported[b] = n >= min_count;
    }
    let total = records.len() as u64;
    let density = counts
        .iter()
        .map(|c| {
            if total == 0 {
                0.0
            } else {
                *c as f64 / (total as f64 * bins.width())
            }
        })
        .collect();
    EmpiricalProfile {
        time: 0.0,
        bins,
        counts,
        density,
        total_walkers: total,
        unfrozen: total,
        jump_stats: Some(stats),
    }
}
