//! Deterministic synthetic tabular generators for benches and tests.
//!
//! `concrete_like` mimics the shape of a concrete compressive-strength
//! table: eight mix-design features and a strength target driven by the
//! binder-to-water ratio and curing age, with mild noise. It is generated
//! data for exercising the pipeline at realistic scale, not a substitute
//! for any measured dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::RawDataset;
use crate::matrix::Matrix;

/// Standard normal via Box-Muller.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Synthetic mix-design table: columns cement, slag, fly_ash, water,
/// superplasticizer, coarse_agg, fine_agg, age and target strength.
pub fn concrete_like(n_rows: usize, seed: u64) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ages = [1.0, 3.0, 7.0, 14.0, 28.0, 28.0, 28.0, 56.0, 90.0, 180.0, 365.0];
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let cement: f64 = rng.gen_range(100.0..540.0);
        let slag: f64 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(10.0..360.0) };
        let fly_ash: f64 = if rng.gen_bool(0.55) { 0.0 } else { rng.gen_range(10.0..200.0) };
        let water: f64 = rng.gen_range(120.0..250.0);
        let superplasticizer: f64 =
            if rng.gen_bool(0.35) { 0.0 } else { rng.gen_range(1.0..32.0) };
        let coarse: f64 = rng.gen_range(800.0..1150.0);
        let fine: f64 = rng.gen_range(590.0..1000.0);
        let age: f64 = ages[rng.gen_range(0..ages.len())];

        let binder = cement + 0.7 * slag + 0.5 * fly_ash;
        let bw = binder / water;
        let age_factor = (1.0 + age).ln() / (29.0f64).ln();
        let plasticizer_boost = 1.0 + 0.004 * superplasticizer;
        let aggregate_drag = 1.0 - 0.03 * ((coarse + fine) - 1770.0) / 560.0;
        let core = 16.5 * bw.powf(1.35) * age_factor * plasticizer_boost * aggregate_drag;
        let strength = (core * (1.0 + 0.10 * gaussian(&mut rng)) + 1.2 * gaussian(&mut rng))
            .max(1.0);

        rows.push(vec![
            cement,
            slag,
            fly_ash,
            water,
            superplasticizer,
            coarse,
            fine,
            age,
            strength,
        ]);
    }
    let names = [
        "cement",
        "slag",
        "fly_ash",
        "water",
        "superplasticizer",
        "coarse_agg",
        "fine_agg",
        "age",
        "strength",
    ]
    .map(str::to_owned)
    .to_vec();
    RawDataset::new(names, Matrix::from_rows(&rows).unwrap(), 8)
        .expect("generated table is well-formed")
}

/// Renders a raw dataset as CSV text (header plus one line per row).
pub fn to_csv_string(raw: &RawDataset) -> String {
    let mut out = raw.column_names().join(",");
    out.push('\n');
    for i in 0..raw.n_samples() {
        let row = (0..raw.n_columns())
            .map(|j| {
                let v = if j == raw.target_index() {
                    raw.targets()[i]
                } else {
                    let fj = if j < raw.target_index() { j } else { j - 1 };
                    raw.features().get(i, fj)
                };
                format!("{v}")
            })
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = concrete_like(120, 9);
        assert_eq!(a.n_samples(), 120);
        assert_eq!(a.n_columns(), 9);
        assert_eq!(a.target_name(), "strength");
        let b = concrete_like(120, 9);
        assert_eq!(a.targets(), b.targets());
        let c = concrete_like(120, 10);
        assert_ne!(a.targets(), c.targets());
    }

    #[test]
    fn strengths_are_positive_and_varied() {
        let raw = concrete_like(500, 1);
        let y = raw.targets();
        assert!(y.iter().all(|&v| v >= 1.0));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let spread = y.iter().map(|v| (v - mean).abs()).sum::<f64>() / y.len() as f64;
        assert!(mean > 10.0 && mean < 80.0, "mean {mean}");
        assert!(spread > 3.0, "spread {spread}");
    }

    #[test]
    fn csv_render_parses_back() {
        let raw = concrete_like(10, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("synth.csv");
        std::fs::write(&path, to_csv_string(&raw)).unwrap();
        let back = crate::data::load_csv(&path, "strength").unwrap();
        assert_eq!(back.n_samples(), 10);
        assert_eq!(back.targets(), raw.targets());
    }
}
