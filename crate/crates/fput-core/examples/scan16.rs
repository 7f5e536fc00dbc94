use fput_core::chaos::{indicators, ChaosConfig};
use fput_core::experiments::{derive_seed, sample_disorder};
use fput_core::lattice::{initial_condition_mode1, LatticeModel, Variant};

// cheap pre-filter: SALI at 1e5 flags candidate chaotic realizations
fn main() {
    let n = 16usize;
    let initial = initial_condition_mode1(n);
    for master in 1u64..=10 {
        let mut suspicious = Vec::new();
        let mut min_sali = f64::INFINITY;
        for r in 0..30u64 {
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
            match indicators(&model, &initial, 1e5, &cfg) {
                Ok(run) => {
                    let s = run.sali.final_value();
                    min_sali = min_sali.min(s);
                    if s < 1e-2 {
                        suspicious.push((r, s));
                    }
                }
                Err(_) => suspicious.push((r, f64::NAN)),
            }
        }
        println!("master={master}: min_sali={min_sali:.3e} candidates={suspicious:?}");
    }
}
