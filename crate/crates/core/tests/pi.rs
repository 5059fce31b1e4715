mod common;

use common::integer_rank;
use num_traits::Zero;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soclab::pi::{
    avalanche_relations, classify_drive_regime, compute_pi_groups, k41_relations, same_span, Dimension,
    DimensionedVariable, DriveRegime, Rational, VariableTable, DEFAULT_REGIME_MARGIN,
};

const BASES: [&str; 4] = ["L", "T", "M", "S"];

fn table_strategy() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=7, 1usize..=4).prop_flat_map(|(v, w)| prop::collection::vec(prop::collection::vec(-3i64..=3, w), v))
}

fn build_table(exps: &[Vec<i64>]) -> VariableTable {
    let vars = exps
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let pairs: Vec<(&str, i64)> = e.iter().enumerate().map(|(k, &x)| (BASES[k], x)).collect();
            DimensionedVariable::new(format!("q{i}"), Dimension::of(&pairs), "")
        })
        .collect();
    VariableTable::with_bases(BASES[..exps[0].len()].iter().map(|s| s.to_string()).collect(), vars).unwrap()
}

fn transpose(exps: &[Vec<i64>]) -> Vec<Vec<i64>> {
    (0..exps[0].len()).map(|k| exps.iter().map(|e| e[k]).collect()).collect()
}

#[test]
fn thousand_random_tables_satisfy_nullspace_checks() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() });
    runner
        .run(&table_strategy(), |exps| {
            let t = build_table(&exps);
            let groups = compute_pi_groups(&t).unwrap();
            let rank = integer_rank(&transpose(&exps));
            prop_assert_eq!(groups.len(), exps.len() - rank);
            for g in &groups {
                prop_assert!(g.residual_dimension(t.variables(), t.bases()).iter().all(Zero::is_zero));
                let first = g.exponents().iter().find(|&&e| e != 0).copied().unwrap();
                prop_assert!(first > 0);
            }
            Ok(())
        })
        .unwrap();
}

proptest! {
    #[test]
    fn permuting_variables_keeps_the_span(exps in table_strategy(), seed in any::<u64>()) {
        let t = build_table(&exps);
        let names: Vec<String> = t.variables().iter().map(|v| v.name.clone()).collect();
        let mut order: Vec<usize> = (0..exps.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let permuted = VariableTable::with_bases(
            t.bases().to_vec(),
            order.iter().map(|&i| t.variables()[i].clone()).collect(),
        ).unwrap();
        let a = compute_pi_groups(&t).unwrap();
        let b = compute_pi_groups(&permuted).unwrap();
        prop_assert_eq!(a.len(), b.len());
        prop_assert!(same_span(&a, &b, &names));
    }

    #[test]
    fn k41_exponent_relation(u in 1e-3f64..1e3, l0 in 1e-3f64..1e3, nu in 1e-6f64..1e1) {
        let k = k41_relations(u, l0, nu).unwrap();
        let lhs = (k.l0 / k.eta).powf(4.0 / 3.0);
        prop_assert!((lhs / k.reynolds - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regime_is_monotone_in_drive(h1 in 1e-3f64..1e6, h2 in 1e-3f64..1e6, side in 2.0f64..1000.0) {
        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        let a = classify_drive_regime(lo, 4.0, side, 2, DEFAULT_REGIME_MARGIN).unwrap();
        let b = classify_drive_regime(hi, 4.0, side, 2, DEFAULT_REGIME_MARGIN).unwrap();
        prop_assert!(a <= b, "{a:?} at {lo} vs {b:?} at {hi}");
    }

    #[test]
    fn configured_control_parameter_matches_prediction(side in 2u32..2000, h in 1u32..1000) {
        let l = side as f64;
        let r = avalanche_relations(h as f64 / (l * l), h as f64, l, 2, Rational::from_integer(2)).unwrap();
        prop_assert!((r.r_a / r.r_a_predicted - 1.0).abs() < 1e-12);
    }
}

#[test]
fn regime_crosses_both_bounds_in_order() {
    let regimes: Vec<DriveRegime> = [1.0, 2.0, 2.5, 100.0, 19_999.0, 20_000.0, 24_000.0]
        .iter()
        .map(|&h| classify_drive_regime(h, 4.0, 100.0, 2, DEFAULT_REGIME_MARGIN).unwrap())
        .collect();
    use DriveRegime::*;
    assert_eq!(regimes, [Sdidt, Sdidt, Intermediate, Intermediate, Intermediate, Laminar, Laminar]);
}
