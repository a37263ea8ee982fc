//! Deterministic seeding helpers.
//!
//! Trial seeds are derived from a master seed through a SplitMix64 mix so
//! that independent trials get decorrelated streams and a run is exactly
//! reproducible for a fixed master seed, regardless of thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one trial of a multi-trial experiment.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(trial)))
}

/// RNG for a single-shot operation.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Run `trials` independent jobs, at most `threads` at a time, collecting the
/// results in trial order. `threads = 0` uses the available parallelism.
/// Results are identical for any thread count because each job only sees its
/// trial index and the aggregation happens on the ordered output.
pub fn run_trials<T, F>(trials: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = if threads == 0 {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
    } else {
        threads
    };
    let threads = threads.min(trials.max(1));
    if threads <= 1 || trials <= 1 {
        return (0..trials).map(job).collect();
    }
    let mut slots: Vec<Option<T>> = (0..trials).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots_ptr = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= trials {
                    break;
                }
                let out = job(i);
                let mut guard = slots_ptr.lock().unwrap();
                guard[i] = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("trial job completed"))
        .collect()
}
