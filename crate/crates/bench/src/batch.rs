//! Episode batches on a worker pool.
//!
//! Episode `i` always uses seed `base_seed + i` and is independent of every
//! other episode, so results do not depend on the worker count. Finished
//! episodes are handed to the sink strictly in index order.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use lceopt_core::{run_episode, EpisodeRecord, Scenario, SolverConfig};

use crate::BenchError;

pub fn run_batch<S: Scenario>(
    scenario: &S,
    solver: &SolverConfig,
    base_seed: u64,
    episodes: usize,
    workers: usize,
    mut sink: impl FnMut(&EpisodeRecord) -> Result<(), BenchError>,
) -> Result<Vec<EpisodeRecord>, BenchError> {
    solver.validate()?;
    let workers = workers.clamp(1, episodes.max(1));
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();
    let mut records = Vec::with_capacity(episodes);

    std::thread::scope(|scope| -> Result<(), BenchError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop) = (&next, &stop);
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= episodes {
                    break;
                }
                let result = run_episode(scenario, solver, base_seed.wrapping_add(i as u64));
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        for (i, result) in rx {
            match result {
                Ok(record) => {
                    pending.insert(i, record);
                }
                Err(e) => {
                    stop.store(true, Ordering::Relaxed);
                    return Err(e.into());
                }
            }
            while let Some(record) = pending.remove(&records.len()) {
                if let Err(e) = sink(&record) {
                    stop.store(true, Ordering::Relaxed);
                    return Err(e);
                }
                records.push(record);
            }
        }
        Ok(())
    })?;
    Ok(records)
}
