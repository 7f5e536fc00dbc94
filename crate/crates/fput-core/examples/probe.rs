use fput_core::chaos::{classify, indicators, ChaosConfig, ClassifyThresholds};
use fput_core::experiments::{derive_seed, sample_disorder};
use fput_core::integrators::TrajectoryStatus;
use fput_core::lattice::{initial_condition_mode1, LatticeModel, Variant};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args[1].parse().unwrap();
    let master: u64 = args[2].parse().unwrap();
    let count: u64 = args[3].parse().unwrap();
    let horizon: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1e6);
    let initial = initial_condition_mode1(n);
    for r in 0..count {
        let start = Instant::now();
        let seed = derive_seed(master, n as u64, r);
        let model = LatticeModel::new(
            n,
            0.25,
            sample_disorder(10.0, n, seed),
            Variant::DisorderedNonlinear,
        )
        .unwrap();
        let cfg = ChaosConfig {
            deviation_seed: derive_seed(seed, 0xDE7, 0),
            ..Default::default()
        };
        match indicators(&model, &initial, horizon, &cfg) {
            Ok(run) if run.status == TrajectoryStatus::Completed => {
                let v = classify(&run.mle, &run.sali, &ClassifyThresholds::default());
                println!(
                    "N={n} master={master} r={r}: {:?} mle={:.3e} sali={:.3e} ({:.0}s)",
                    v.label,
                    v.mle_final,
                    v.sali_final,
                    start.elapsed().as_secs_f64()
                );
            }
            Ok(run) => println!(
                "N={n} master={master} r={r}: status {:?} ({:.0}s)",
                run.status,
                start.elapsed().as_secs_f64()
            ),
            Err(e) => println!(
                "N={n} master={master} r={r}: error {e} ({:.0}s)",
                start.elapsed().as_secs_f64()
            ),
        }
    }
}
