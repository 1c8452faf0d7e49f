use proptest::prelude::*;

use quenchdesign::hilbert::{enumerate_sectors, trace_power, Lattice, SectorLabel, SectorState};
use quenchdesign::imperfect::{apply_channel, readout_distribution, ChannelKind, ChannelSpec, FidelitySpec};
use quenchdesign::linalg::hermitian_eigenvalues;
use quenchdesign::measure::{falling_factorial_estimator, outcome_probs, Observable};
use quenchdesign::models::{IsingParams, QuenchModel};
use quenchdesign::renyi::{forward_moment, forward_second_moment, invert_higher_moment, invert_second_moment};
use quenchdesign::rng::seeded;
use quenchdesign::states::random_pure;
use quenchdesign::unitaries::BlockUnitary;

fn spectrum() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (2usize..=12)
        .prop_flat_map(|dim| (prop::collection::vec(0.0f64..1.0, 1..=dim), Just(dim)))
        .prop_filter("nonzero", |(v, _)| v.iter().sum::<f64>() > 1e-3)
}

fn traces(raw: &[f64]) -> Vec<f64> {
    let z: f64 = raw.iter().sum();
    (1..=4).map(|k| raw.iter().map(|x| (x / z).powi(k)).sum()).collect()
}

proptest! {
    #[test]
    fn higher_moment_round_trip((raw, dim) in spectrum(), n in 1u32..=4) {
        let t = traces(&raw);
        let m = forward_moment(n, &t, dim).unwrap();
        let back = invert_higher_moment(n, m, &t[..n as usize - 1], dim).unwrap();
        prop_assert!((back - t[n as usize - 1]).abs() < 1e-11);
    }

    #[test]
    fn second_moment_round_trip((raw, dim) in spectrum(), w_frac in 0.0f64..1.0) {
        let w = 1 + ((dim - 1) as f64 * w_frac) as usize;
        prop_assume!(w < dim);
        let t = traces(&raw);
        let (m1, m2) = forward_second_moment(t[0], t[1], w, dim).unwrap();
        let (a, b) = invert_second_moment(m1, m2, w, dim).unwrap();
        prop_assert!((a - t[0]).abs() < 1e-11 && (b - t[1]).abs() < 1e-11);
    }

    #[test]
    fn falling_factorial_is_unbiased_for_binomial(p in 0.0f64..1.0, n_m in 2u64..12, n in 1u32..=3) {
        prop_assume!(n as u64 <= n_m);
        let mut expect = 0.0;
        for b in 0..=n_m {
            let choose = (0..b).fold(1.0, |acc, i| acc * (n_m - i) as f64 / (i + 1) as f64);
            let prob = choose * p.powi(b as i32) * (1.0 - p).powi((n_m - b) as i32);
            expect += prob * falling_factorial_estimator(b, n_m, n).unwrap();
        }
        prop_assert!((expect - p.powi(n as i32)).abs() < 1e-10);
    }

    #[test]
    fn channels_preserve_trace_and_positivity(seed in any::<u64>(), p in 0.0f64..0.3, depol in any::<bool>(), l in 1usize..=3) {
        let model = QuenchModel::ising(Lattice::chain(l).unwrap(), IsingParams::default()).unwrap();
        let sectors = enumerate_sectors(&model).unwrap();
        let rho = random_pure(&sectors[0], &mut seeded(seed)).unwrap();
        let kind = if depol { ChannelKind::Depolarizing } else { ChannelKind::Dephasing };
        let out = apply_channel(&rho, &sectors, ChannelSpec::new(kind, p).unwrap()).unwrap();
        prop_assert!((trace_power(&out, 1).unwrap() - 1.0).abs() < 1e-12);
        let purity = trace_power(&out, 2).unwrap();
        prop_assert!(purity <= 1.0 + 1e-12);
        for b in out.blocks() {
            prop_assert!(hermitian_eigenvalues(&b.matrix).unwrap().iter().all(|&e| e > -1e-12));
        }
    }

    #[test]
    fn probabilities_and_readout_sum_to_one(seed in any::<u64>(), p in 0.0f64..0.45, l in 1usize..=3) {
        let model = QuenchModel::ising(Lattice::chain(l).unwrap(), IsingParams::default()).unwrap();
        let sectors = enumerate_sectors(&model).unwrap();
        let mut rng = seeded(seed);
        let rho = random_pure(&sectors[0], &mut rng).unwrap();
        let dims: Vec<(SectorLabel, usize)> = sectors.iter().map(|s| (s.label(), s.dim())).collect();
        let u = BlockUnitary::cue(&dims, &mut rng);
        let dist = outcome_probs(&u, &rho, &Observable::fine(&sectors)).unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-10);
        let flipped = readout_distribution(&dist, &sectors, FidelitySpec::new(p).unwrap()).unwrap();
        prop_assert!((flipped.total() - 1.0).abs() < 1e-10);
        prop_assert!(flipped.sectors.iter().flat_map(|s| s.probs.iter()).all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn mixed_state_purity_bounds(pops in prop::collection::vec(0.0f64..1.0, 1..10)) {
        let z: f64 = pops.iter().sum();
        prop_assume!(z > 1e-6);
        let pops: Vec<f64> = pops.iter().map(|x| x / z).collect();
        let st = SectorState::diagonal(SectorLabel::Full, &pops).unwrap();
        let p2 = trace_power(&st, 2).unwrap();
        prop_assert!(p2 <= 1.0 + 1e-12 && p2 >= 1.0 / pops.len() as f64 - 1e-12);
    }
}
