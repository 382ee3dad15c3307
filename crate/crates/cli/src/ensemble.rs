//! Parallel trajectory ensembles with bit-stable aggregation.
//!
//! Trajectory `k` is fully determined by `(base_seed, k)`, so the only job
//! here is to hand indices to workers and place each finished record into
//! its slot; the statistics then reduce over slots in index order, making
//! the result identical for any worker count or scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use wqnet_core::filtering::{
    ensemble_stats, run_trajectory, EnsembleStats, FilterError, FilterOptions, TrajectoryRecord,
};
use wqnet_core::network::Network;
use wqnet_core::operator::DensityMatrix;

/// Ensemble statistics plus (optionally) the per-trajectory records.
#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub stats: EnsembleStats,
    pub records: Option<Vec<TrajectoryRecord>>,
}

/// Run `trajectories` conditioned trajectories on `workers` threads.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    net: &Network,
    rho0: &DensityMatrix,
    t_end: f64,
    dt: f64,
    opts: &FilterOptions,
    trajectories: usize,
    base_seed: u64,
    workers: usize,
    keep_records: bool,
) -> Result<EnsembleResult, FilterError> {
    assert!(trajectories >= 1, "ensemble needs at least one trajectory");
    let workers = workers.max(1).min(trajectories);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<TrajectoryRecord>>> =
        (0..trajectories).map(|_| Mutex::new(None)).collect();
    let failure: Mutex<Option<FilterError>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= trajectories || failure.lock().unwrap().is_some() {
                    break;
                }
                match run_trajectory(net, rho0, t_end, dt, opts, base_seed, k as u64) {
                    Ok(record) => *slots[k].lock().unwrap() = Some(record),
                    Err(e) => {
                        let mut f = failure.lock().unwrap();
                        if f.is_none() {
                            *f = Some(e);
                        }
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let records: Vec<TrajectoryRecord> = slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("missing trajectory slot"))
        .collect();
    let stats = ensemble_stats(&records);
    Ok(EnsembleResult { stats, records: keep_records.then_some(records) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use wqnet_core::dynamics::Observable;
    use wqnet_core::network::{Atom, MeasurementPort, WaveguideKind};

    fn small_net() -> Network {
        Network::new(
            WaveguideKind::SemiInfinite,
            vec![Atom::single_point(1.0, 0.3, 0.0, 0.2)],
            MeasurementPort::SemiInfiniteEnd,
        )
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let net = small_net();
        let rho0 = DensityMatrix::product_state(&[true]);
        let opts = FilterOptions::new(vec![Observable::Excitation(1)]);
        let runs: Vec<EnsembleStats> = [1usize, 4, 8]
            .iter()
            .map(|&w| {
                run_ensemble(&net, &rho0, 10.0, 0.5, &opts, 24, 99, w, false).unwrap().stats
            })
            .collect();
        for other in &runs[1..] {
            assert_eq!(runs[0].mean, other.mean);
            assert_eq!(runs[0].stderr, other.stderr);
        }
    }

    #[test]
    fn single_trajectory_ensemble_equals_trajectory() {
        let net = small_net();
        let rho0 = DensityMatrix::product_state(&[true]);
        let opts = FilterOptions::new(vec![Observable::Excitation(1)]);
        let solo = run_trajectory(&net, &rho0, 10.0, 0.5, &opts, 3, 0).unwrap();
        let ens = run_ensemble(&net, &rho0, 10.0, 0.5, &opts, 1, 3, 4, true).unwrap();
        assert_eq!(ens.stats.mean[0], solo.observables[0]);
        assert_eq!(ens.records.unwrap()[0].dw, solo.dw);
    }
}
