use std::f64::consts::PI;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Bundled generators, each with its fixed generation seed.
pub const GENERATORS: [(&str, u64); 4] = [("noise3", 3), ("blobs8", 8), ("ring6", 6), ("binary2", 2)];

/// Standard normal draw via Box-Muller.
fn normal(rng: &mut impl Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn finish(name: &str, dims: usize, rows: Vec<(Vec<f64>, usize)>) -> Result<Dataset> {
    let feature_names = (0..dims).map(|j| format!("x{j}")).collect();
    let rows = rows
        .into_iter()
        .map(|(x, y)| (x.into_iter().map(round4).collect(), y.to_string()))
        .collect();
    Dataset::from_raw(name, feature_names, rows, 0)
}

/// Three labels where the pair {0, 1} outweighs label 2 but label 2 is the
/// single most likely label on the left half of the first feature.
fn noise3(rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let left = WeightedIndex::new([0.27, 0.27, 0.46]).unwrap();
    let right = WeightedIndex::new([0.6, 0.2, 0.2]).unwrap();
    let rows = (0..900)
        .map(|_| {
            let x: Vec<f64> = (0..2).map(|_| rng.gen()).collect();
            let y = if x[0] < 0.5 { left.sample(rng) } else { right.sample(rng) };
            (x, y)
        })
        .collect();
    finish("noise3", 2, rows)
}

/// Eight Gaussian classes in seven dimensions with a skewed class
/// distribution, shaped like a small protein-localization table.
fn blobs8(rng: &mut ChaCha8Rng) -> Result<Dataset> {
    const COUNTS: [usize; 8] = [143, 77, 52, 35, 20, 5, 2, 2];
    let centers: Vec<Vec<f64>> = (0..8).map(|_| (0..7).map(|_| rng.gen()).collect()).collect();
    let mut rows = Vec::new();
    for (y, &n) in COUNTS.iter().enumerate() {
        for _ in 0..n {
            let x = centers[y].iter().map(|c| c + 0.15 * normal(rng)).collect();
            rows.push((x, y));
        }
    }
    rows.shuffle(rng);
    finish("blobs8", 7, rows)
}

/// Six angular sectors of an annulus, 15% of labels replaced at random.
fn ring6(rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let rows = (0..720)
        .map(|_| {
            let theta: f64 = rng.gen_range(0.0..2.0 * PI);
            let r: f64 = rng.gen_range(0.5..1.0);
            let mut y = ((theta / (PI / 3.0)) as usize).min(5);
            if rng.gen_bool(0.15) {
                y = rng.gen_range(0..6);
            }
            (vec![r * theta.cos(), r * theta.sin()], y)
        })
        .collect();
    finish("ring6", 2, rows)
}

/// Two overlapping Gaussian classes.
fn binary2(rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let rows = (0..400)
        .map(|i| {
            let y = i % 2;
            let shift = if y == 0 { -0.5 } else { 0.5 };
            (vec![shift + normal(rng), shift + normal(rng)], y)
        })
        .collect();
    finish("binary2", 2, rows)
}

/// Builds a bundled synthetic dataset by name. The output depends only on the name.
pub fn generate(name: &str) -> Result<Dataset> {
    let seed = GENERATORS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            let known: Vec<&str> = GENERATORS.iter().map(|(n, _)| *n).collect();
            Error::InvalidArgument(format!("unknown generator '{name}', expected one of {}", known.join(", ")))
        })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "noise3" => noise3(&mut rng),
        "blobs8" => blobs8(&mut rng),
        "ring6" => ring6(&mut rng),
        _ => binary2(&mut rng),
    }
}
