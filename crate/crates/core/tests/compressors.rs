use std::collections::HashMap;

use bicolor_core::compressors::codec::{decode, encode, header_bits};
use bicolor_core::compressors::{
    compress, compress_restricted, encoded_bits, natural_round, sample_subset, CompressorKind, CompressorSpec,
};
use bicolor_core::rng::substream;
use proptest::prelude::*;

/// Upper 1e-3 quantiles of the chi-square distribution.
fn chi2_critical(df: usize) -> f64 {
    match df {
        5 => 20.515,
        9 => 27.877,
        14 => 36.123,
        19 => 43.820,
        _ => panic!("no table entry for df = {df}"),
    }
}

fn chi2(counts: &HashMap<Vec<usize>, usize>, cells: usize, draws: usize) -> f64 {
    assert_eq!(counts.len(), cells, "some subsets never appeared");
    let e = draws as f64 / cells as f64;
    counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn subset_sampler_is_uniform() {
    let draws = 60_000;
    for (d, k) in [(6usize, 1usize), (5, 3), (6, 2), (6, 3)] {
        let mut rng = substream(31, (d * 10 + k) as u64);
        let mut counts = HashMap::new();
        for _ in 0..draws {
            let mut s = sample_subset(d, k, &mut rng);
            s.sort_unstable();
            *counts.entry(s).or_insert(0) += 1;
        }
        let cells = binomial(d, k);
        let stat = chi2(&counts, cells, draws);
        assert!(stat < chi2_critical(cells - 1), "d={d} k={k}: chi2 = {stat}");
    }
}

#[test]
fn rand_k_support_is_uniform() {
    let draws = 60_000;
    let (d, k) = (6, 2);
    let spec = CompressorSpec::rand_k(d, k).unwrap();
    let x = [1.0, -2.0, 3.0, 0.5, 4.0, -1.5];
    let mut rng = substream(5, 0);
    let mut counts = HashMap::new();
    for _ in 0..draws {
        let m = compress(&spec, &x, &mut rng).unwrap();
        *counts.entry(m.support().to_vec()).or_insert(0) += 1;
    }
    let stat = chi2(&counts, 15, draws);
    assert!(stat < chi2_critical(14), "chi2 = {stat}");
}

#[test]
fn natural_rounding_probabilities() {
    // 3 = 2 + 1 rounds up to 4 with probability (3 - 2) / 2
    let draws = 200_000;
    let mut rng = substream(9, 0);
    let up =
        (0..draws).filter(|_| natural_round(3.0, &mut rng).unwrap() == 4.0).count() as f64 / draws as f64;
    let se = (0.25f64 / draws as f64).sqrt();
    assert!((up - 0.5).abs() < 5.0 * se, "P(up) = {up}");
    let mut rng = substream(9, 1);
    let up =
        (0..draws).filter(|_| natural_round(-2.5, &mut rng).unwrap() == -4.0).count() as f64 / draws as f64;
    let se = (0.25f64 * 0.75 / draws as f64).sqrt();
    assert!((up - 0.25).abs() < 5.0 * se, "P(up) = {up}");
}

#[test]
fn restricted_rand_k_mean_on_subset() {
    let d = 8;
    let omega = [1usize, 4, 6];
    let spec = CompressorSpec::rand_k(d, 2).unwrap();
    let x: Vec<f64> = (0..d).map(|j| j as f64 - 3.5).collect();
    let mut rng = substream(12, 0);
    let draws = 100_000;
    let mut mean = vec![0.0; d];
    for _ in 0..draws {
        let m = compress_restricted(&spec, &x, &omega, &mut rng).unwrap();
        assert!(m.support().iter().all(|j| omega.contains(j)));
        m.add_to(1.0 / draws as f64, &mut mean);
    }
    for j in 0..d {
        if omega.contains(&j) {
            // scale k'/K = 3/2, variance x²/2 per draw
            let se = (x[j] * x[j] * 0.5 / draws as f64).sqrt();
            assert!((mean[j] - x[j]).abs() < 5.0 * se, "coordinate {j}: {}", mean[j]);
        } else {
            assert_eq!(mean[j], 0.0);
        }
    }
}

fn largest_k(kind: &CompressorKind) -> usize {
    match kind {
        CompressorKind::RandK { k } => *k,
        CompressorKind::Composed { outer, inner } => largest_k(outer).max(largest_k(inner)),
        _ => 1,
    }
}

fn spec_strategy() -> impl Strategy<Value = CompressorSpec> {
    (1usize..40).prop_flat_map(|d| {
        (0usize..4, 1..=d).prop_map(move |(kind, k)| match kind {
            0 => CompressorSpec::identity(d).unwrap(),
            1 => CompressorSpec::rand_k(d, k).unwrap(),
            2 => CompressorSpec::natural(d).unwrap(),
            _ => CompressorSpec::rand_k_natural(d, k).unwrap(),
        })
    })
}

proptest! {
    #[test]
    fn codec_length_and_roundtrip(
        spec in spec_strategy(),
        seed in any::<u64>(),
        raw in prop::collection::vec(prop_oneof![Just(0.0), -1e6f64..1e6], 40),
        restrict in any::<bool>(),
    ) {
        let d = spec.dim;
        let x = &raw[..d];
        let mut rng = substream(seed, 0);
        let msg = if restrict {
            // a restricted rand-K needs at least K coordinates to choose from
            let floor = largest_k(&spec.kind);
            let k = floor + (seed as usize) % (d - floor + 1);
            compress_restricted(&spec, x, &sample_subset(d, k, &mut rng), &mut rng).unwrap()
        } else {
            compress(&spec, x, &mut rng).unwrap()
        };
        prop_assert_eq!(msg.bit_length, encoded_bits(&spec, msg.support().len(), d));
        let enc = encode(&msg).unwrap();
        prop_assert_eq!(enc.bit_len, header_bits(d) as u64 + msg.bit_length);
        prop_assert_eq!(enc.bytes.len() as u64, enc.bit_len.div_ceil(8));
        let back = decode(&enc.bytes, d, spec.kind.value_coding()).unwrap();
        prop_assert_eq!(back.support(), msg.support());
        prop_assert_eq!(back.bit_length, msg.bit_length);
        for (a, b) in back.values.iter().zip(&msg.values) {
            prop_assert_eq!(*a, *b as f32 as f64);
        }
    }
}
