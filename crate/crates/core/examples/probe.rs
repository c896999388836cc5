//! Scratch probe: inclusion rates on the synthetic dataset at paper scale.

use confidence_nets::data::split;
use confidence_nets::ensemble::{train_confidence_net, EnsembleConfig};
use confidence_nets::eval::{error_estimation_report, summarize};
use confidence_nets::synth::concrete_like;

fn main() {
    let raw = concrete_like(1030, 7);
    let config = EnsembleConfig::default();
    for fraction in [0.9, 0.55] {
        for seed in 1..=5u64 {
            let t0 = std::time::Instant::now();
            let (train, test) = split(&raw, fraction, seed, true).unwrap();
            let model = train_confidence_net(&train, &config, seed).unwrap();
            let s = summarize(&model, &test, "syndefine", fraction, seed).unwrap();
            let records = error_estimation_report(&model, &test).unwrap();
            let mean_de =
                records.iter().map(|r| r.d_e).sum::<f64>() / records.len() as f64;
            let mean_half = records
                .iter()
                .map(|r| (r.upper - r.lower) / 2.0)
                .sum::<f64>()
                / records.len() as f64;
            println!(
                "f={fraction} seed={seed} inc_conf={:.3} inc_ann={:.3} mae_raw={:.3} mae_corr={:.3} l_n={:.4} omega={:.4} mean_de={:.4} mean_half={:.3} t={:.1}s",
                s.inclusion_rate_confidence,
                s.inclusion_rate_ann,
                s.mae_raw,
                s.mae_corrected,
                model.memory.l_n,
                model.omega,
                mean_de,
                mean_half,
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
