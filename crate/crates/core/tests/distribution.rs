use pbc_core::circuit::generate_random_family2;
use pbc_core::engine::{histogram, run_shots, BackendKind, SampleConfig};
use pbc_core::gadget::gadgetize;
use pbc_core::greedy::GreedyConfig;
use pbc_core::statevec::{exact_distribution, total_variation};

#[test]
fn pbc_samples_match_exact_distribution() {
    for seed in 0..12u64 {
        let n = 2 + (seed as usize % 4);
        let t = 1 + (seed as usize % 8);
        let c = generate_random_family2(n, t, seed);
        let exact = exact_distribution(&c).unwrap();
        let ac = gadgetize(&c);
        for greedy in [GreedyConfig::off(), GreedyConfig::structured(2)] {
            let cfg = SampleConfig {
                shots: 4096,
                seed: 100 + seed,
                backend: BackendKind::Statevector,
                greedy,
                ..Default::default()
            };
            let progs = run_shots(&ac, None, &cfg).unwrap();
            let tvd = total_variation(&exact, &histogram(&progs));
            assert!(tvd <= 0.05, "seed {seed} n={n} t={t} tvd={tvd}");
        }
    }
}
