//! Rayon drivers for the walker engine.
//!
//! Chunks are fixed-size walker ranges with independent random streams, so
//! the partial results are identical whatever the thread count; merging in
//! range order makes parallel output bitwise equal to the serial path.

use rayon::prelude::*;

use jumplab_core::kernel::RateField;
use jumplab_core::walkers::{
    self, chunk_ranges, merge_chunks, CtrwConfig, CtrwRun, JumpSampler, WalkerEnsemble,
};

use crate::Result;

pub fn run_ctrw(rate: &RateField, sampler: &JumpSampler, cfg: &CtrwConfig) -> Result<CtrwRun> {
    let chunks = chunk_ranges(cfg.n_walkers)
        .into_par_iter()
        .map(|range| walkers::simulate_chunk(rate, sampler, cfg, range))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(merge_chunks(cfg, chunks)?)
}

pub fn resume_ctrw(
    ensemble: &WalkerEnsemble,
    rate: &RateField,
    sampler: &JumpSampler,
    cfg: &CtrwConfig,
) -> Result<CtrwRun> {
    let chunks = chunk_ranges(cfg.n_walkers)
        .into_par_iter()
        .map(|range| walkers::resume_chunk(ensemble, rate, sampler, cfg, range))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(merge_chunks(cfg, chunks)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use jumplab_core::kernel::JumpKernel;
    use jumplab_core::walkers::{simulate_ctrw, BinSpec, InitialPosition};

    #[test]
    fn parallel_run_is_bitwise_equal_to_serial() {
        let kernel = JumpKernel::gaussian_iso(0.05).unwrap();
        let rate = RateField::uniform(1.0).unwrap();
        let sampler = JumpSampler::new(&kernel, None).unwrap();
        let cfg = CtrwConfig {
            t_end: 1.0,
            snapshots: vec![0.5, 1.0],
            bins: BinSpec::new(-0.5, 1.5, 32).unwrap(),
            initial: InitialPosition::Point(0.5),
            n_walkers: 10_000,
            seed: 7,
            record_jumps: true,
        };
        let serial = simulate_ctrw(&rate, &sampler, &cfg).unwrap();

        for threads in [1usize, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let parallel = pool.install(|| run_ctrw(&rate, &sampler, &cfg)).unwrap();
            assert_eq!(parallel, serial, "thread count {threads}");
        }
    }
}
