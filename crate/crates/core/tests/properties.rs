use ensemble_gop::ensemble::{prepare_state, MeasurementModel, Partition};
use ensemble_gop::mapping::{
    index_to_midpoint, marked_value, midpoint_to_index, sharpen_value, CellIndex, DiscreteOracle,
    GridSpec,
};
use ensemble_gop::objective::{ObjectiveSpec, Point};
use ensemble_gop::search::{predict_total_queries, required_trials, run_search, SearchConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> impl Strategy<Value = GridSpec> {
    (1usize..=4, 1u64..=40).prop_map(|(d, m)| GridSpec::new(d, m).unwrap())
}

proptest! {
    #[test]
    fn cell_codec_round_trips(g in grid(), raw in any::<u64>()) {
        let i = CellIndex(raw % g.n_cells());
        let mid = index_to_midpoint(&g, i).unwrap();
        prop_assert_eq!(midpoint_to_index(&g, &mid).unwrap(), i);
        prop_assert!(mid.coords().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn every_point_lands_in_the_cell_around_it(g in grid(), x in prop::collection::vec(0.0f64..=1.0, 4)) {
        let p = Point::new(x[..g.dimension()].to_vec());
        let mid = index_to_midpoint(&g, midpoint_to_index(&g, &p).unwrap()).unwrap();
        prop_assert!(mid.max_dist(&p) <= 0.5 * g.cell_width() + 1e-12);
    }

    #[test]
    fn trials_monotone(p in 1u64..(1 << 30), d in 0.0f64..1.0, c in 0.5f64..8.0, scale in 1.0f64..4.0) {
        let base = required_trials(p, d, c);
        prop_assert!(base >= 1);
        prop_assert!(required_trials(2 * p, d, c) >= base);
        prop_assert!(required_trials(p, d * scale, c) >= base);
        prop_assert!(required_trials(p, d, c * scale) >= base);
        // averaged noise stays within 1/c of the threshold
        if d > 0.0 && base < u64::MAX {
            prop_assert!(d / (base as f64).sqrt() <= 1.0 / (c * 2.0 * p as f64) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn objectives_stay_in_unit_range(
        a in prop::collection::vec(0.1f64..0.9, 2),
        x in prop::collection::vec(0.0f64..=1.0, 2),
        sigma in 0.01f64..0.5,
    ) {
        let p = Point::new(x);
        let specs = [
            ObjectiveSpec::golf_course(&a, 0.1).unwrap(),
            ObjectiveSpec::gaussian_well(&a, sigma).unwrap(),
        ];
        for spec in &specs {
            let f = spec.evaluate(&p).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn mark_matches_rounding_rule(f in 0.0f64..=1.0, m in 1u32..12) {
        let g = sharpen_value(f, m);
        let rounded = 1.0 - (g + 0.5).floor();
        // the two agree away from the tie g = 1/2
        if (g - 0.5).abs() > 1e-12 {
            prop_assert_eq!(marked_value(f, m), rounded == 1.0);
        }
    }

    #[test]
    fn output_fraction_tracks_marked_count(
        bits in 1u32..12,
        marks in prop::collection::vec(any::<u64>(), 0..6),
        lo_raw in any::<u64>(),
        len_raw in any::<u64>(),
    ) {
        let n = 1u64 << bits;
        let marks: Vec<u64> = marks.iter().map(|m| m % n).collect();
        let oracle = DiscreteOracle::from_marked(n, &marks).unwrap();
        let lo = lo_raw % n;
        let hi = lo + 1 + len_raw % (n - lo);
        let part = Partition::new(lo, hi).unwrap();
        let mut state = prepare_state(part);
        state.apply_oracle(&oracle).unwrap();
        let mut distinct = marks.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let inside = distinct.iter().filter(|&&q| part.contains(q)).count() as f64;
        let expect = 0.5 + inside / (2.0 * part.size() as f64);
        prop_assert!((state.out_frac_one() - expect).abs() < 1e-15);
    }

    #[test]
    fn noiseless_search_lands_on_a_mark(bits in 1u32..14, marks in prop::collection::vec(any::<u64>(), 1..5)) {
        let n = 1u64 << bits;
        let marks: Vec<u64> = marks.iter().map(|m| m % n).collect();
        let oracle = DiscreteOracle::from_marked(n, &marks).unwrap();
        let r = run_search(&oracle, &MeasurementModel::noiseless(), &SearchConfig::default()).unwrap();
        prop_assert!(marks.contains(&r.found.0));
        prop_assert_eq!(r.total_queries, predict_total_queries(n, 0.0, 2.0));
    }
}

#[test]
fn golf_zero_set_volume() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples = 200_000;
    for (a, eps) in [
        (vec![0.5], 0.125),
        (vec![0.3, 0.6], 0.2),
        (vec![0.4, 0.5, 0.6], 0.25),
    ] {
        let spec = ObjectiveSpec::golf_course(&a, eps).unwrap();
        let zeros = (0..samples)
            .filter(|_| {
                let p = Point::new((0..a.len()).map(|_| rng.random::<f64>()).collect());
                spec.evaluate_scan(&p).unwrap() == 0.0
            })
            .count();
        let volume = zeros as f64 / samples as f64;
        let expect = eps.powi(a.len() as i32);
        assert!(
            (volume - expect).abs() < 1e-3,
            "d {}: {volume} vs {expect}",
            a.len()
        );
    }
}
