//! Randomized property checks across the crate: basis packing is a
//! bijection, gates preserve norm and never touch padding slots, histograms
//! and empirical CDFs keep their counting invariants, and degeneracy merging
//! is idempotent.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use spinwalk::graph::Family;
use spinwalk::observables::{magnetization, position_distribution};
use spinwalk::ops::{evolve, Coin, CzMode};
use spinwalk::spectral::merge_degenerate_levels;
use spinwalk::state::{pack_index, packed_dim, unpack_index};
use spinwalk::stats::{histogram, Ecdf};
use spinwalk::{generate, Graph, Guards, PureState};

fn small_family() -> impl Strategy<Value = Family> {
    prop_oneof![
        (3usize..=7).prop_map(|n| Family::Cycle { n }),
        (2usize..=7).prop_map(|n| Family::Path { n }),
        (3usize..=6).prop_map(|n| Family::Complete { n }),
        (2usize..=4).prop_map(|rungs| Family::Ladder { rungs }),
        (3usize..=4).prop_map(|rungs| Family::CircularLadder { rungs }),
        Just(Family::MoebiusLadder { n: 6 }),
        Just(Family::Bull),
        Just(Family::Kite),
    ]
}

fn small_graph() -> impl Strategy<Value = Arc<Graph>> {
    small_family().prop_map(|f| Arc::new(generate(&f).unwrap()))
}

proptest! {
    #[test]
    fn packing_is_a_bijection(graph in small_graph(), raw in any::<proptest::sample::Index>()) {
        let dim = packed_dim(&graph);
        let index = raw.index(dim);
        let (x, c, s) = unpack_index(&graph, index);
        prop_assert!(x < graph.n_nodes());
        prop_assert!(c < graph.degree(x));
        prop_assert!(s < (1 << graph.n_nodes()));
        prop_assert_eq!(pack_index(&graph, x, c, s).unwrap(), index);
    }

    #[test]
    fn evolution_preserves_norm_and_padding(
        graph in small_graph(),
        seed in any::<u64>(),
        steps in 0usize..8,
        grover in any::<bool>(),
        edge_mode in any::<bool>(),
    ) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut state = PureState::random(graph, &mut rng, &Guards::default()).unwrap();
        let coin = if grover { Coin::Grover } else { Coin::Fourier };
        let mode = if edge_mode { CzMode::EdgeList } else { CzMode::Incident };
        evolve(&mut state, coin, mode, steps);
        prop_assert!((state.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(state.padding_weight(), 0.0);

        let p = position_distribution(&state);
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!(magnetization(&state).iter().all(|m| m.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn histogram_counts_every_in_range_sample(
        samples in proptest::collection::vec(0.0f64..10.0, 1..200),
        bins in 1usize..40,
    ) {
        let h = histogram(&samples, bins, (0.0, 10.0)).unwrap();
        prop_assert_eq!(h.total(), samples.len() as u64);
        prop_assert_eq!(h.counts().iter().sum::<u64>(), samples.len() as u64);
        prop_assert_eq!(h.edges().len(), bins + 1);
        // Density integrates to one over the covered range.
        let width = 10.0 / bins as f64;
        let integral: f64 = h.density().iter().map(|d| d * width).sum();
        prop_assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ecdf_is_monotone_and_bounded(
        mut samples in proptest::collection::vec(-50.0f64..50.0, 1..100),
        probe_a in -60.0f64..60.0,
        probe_b in -60.0f64..60.0,
    ) {
        samples.sort_by(f64::total_cmp);
        let ecdf = Ecdf::new(&samples).unwrap();
        let (lo, hi) = if probe_a <= probe_b { (probe_a, probe_b) } else { (probe_b, probe_a) };
        let f_lo = ecdf.eval(lo);
        let f_hi = ecdf.eval(hi);
        prop_assert!((0.0..=1.0).contains(&f_lo));
        prop_assert!((0.0..=1.0).contains(&f_hi));
        prop_assert!(f_lo <= f_hi);
        prop_assert_eq!(ecdf.eval(f64::INFINITY), 1.0);
    }

    #[test]
    fn degeneracy_merging_is_idempotent(
        mut levels in proptest::collection::vec(-3.0f64..3.0, 3..60),
        tol_exp in 1i32..8,
    ) {
        levels.sort_by(f64::total_cmp);
        let tol = 10f64.powi(-tol_exp);
        let once = merge_degenerate_levels(&levels, tol);
        let twice = merge_degenerate_levels(&once, tol);
        prop_assert_eq!(once.clone(), twice);
        prop_assert!(once.len() <= levels.len());
        prop_assert!(once.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn random_states_are_normalized() {
    let graph = Arc::new(generate(&Family::Bull).unwrap());
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    for _ in 0..10 {
        let state = PureState::random(graph.clone(), &mut rng, &Guards::default()).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
        assert_eq!(state.padding_weight(), 0.0);
    }
}

#[test]
fn packed_round_trip_preserves_amplitudes() {
    let graph = Arc::new(generate(&Family::Kite).unwrap());
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let state = PureState::random(graph.clone(), &mut rng, &Guards::default()).unwrap();
    let packed = state.to_packed();
    let back = PureState::from_packed(graph, &packed, &Guards::default()).unwrap();
    let diff = back
        .as_slice()
        .iter()
        .zip(state.as_slice())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    assert_eq!(diff, 0.0, "round trip must be exact");
}
