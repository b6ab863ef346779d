mod common;

use common::{example_dag, rel_close};
use proptest::prelude::*;
use timerec_core::bench::german_system;
use timerec_core::cost::{feature_cost, time_cost, total_cost, CostError};
use timerec_core::scm::{NoiseSpec, StructuralEquation, TargetSpec, Variable};
use timerec_core::{Action, CostSpec, Normalization, Scm, TimeVariant};

fn spec(p: f64, normalization: Normalization) -> CostSpec {
    CostSpec { p, normalization, ..CostSpec::default() }
}

#[test]
fn feature_cost_by_hand() {
    let sys = german_system();
    let v = sys.variances();
    let a = Action::new([("E", 3.0), ("S", -4.0)]);
    assert_eq!(feature_cost(&a, &spec(1.0, Normalization::None), v).unwrap(), 7.0);
    assert!(rel_close(feature_cost(&a, &spec(2.0, Normalization::None), v).unwrap(), 5.0, 1e-15));
    // σ̂_E = 1, σ̂_S = 2.
    assert!(rel_close(feature_cost(&a, &spec(2.0, Normalization::ProperSigma), v).unwrap(), 13f64.sqrt(), 1e-15));
    let marginal = feature_cost(&a, &spec(1.0, Normalization::MarginalSigma), v).unwrap();
    let expected = 3.0 / 123.75f64.sqrt() + 4.0 / v.get("S").unwrap().marginal_sigma();
    assert!(rel_close(marginal, expected, 1e-14));
    assert_eq!(feature_cost(&Action::empty(), &spec(2.0, Normalization::None), v).unwrap(), 0.0);
}

#[test]
fn time_cost_variants() {
    let sys = german_system();
    let dag = sys.dag();
    let avg = CostSpec::default();
    let lp = avg.with_variant(TimeVariant::LongestPath);
    let raw = avg.with_variant(TimeVariant::WeightedAverageRaw);
    assert!(rel_close(time_cost(dag, ["E"], "Y", &avg).unwrap(), 3148.0 / 408.0, 1e-12));
    assert!(rel_close(time_cost(dag, ["E"], "Y", &raw).unwrap(), 3148.0 / 408.0, 1e-12));
    assert_eq!(time_cost(dag, ["E"], "Y", &lp).unwrap(), 8.0);
    assert!(rel_close(time_cost(dag, ["I", "E"], "Y", &avg).unwrap(), 3148.0 / 408.0, 1e-12));
    assert!(rel_close(time_cost(dag, ["I"], "Y", &avg).unwrap(), 32.0 / 17.0, 1e-12));
    assert_eq!(time_cost(dag, ["L", "S"], "Y", &lp).unwrap(), 0.0);
    assert_eq!(time_cost(dag, ["Y"], "Y", &lp).unwrap(), 0.0);
    assert!(matches!(time_cost(dag, [], "Y", &lp), Err(CostError::EmptySupport)));

    let unit = example_dag(true);
    assert_eq!(time_cost(&unit, ["W", "X"], "Y", &lp).unwrap(), 3.0);
}

#[test]
fn time_cost_skips_members_without_path() {
    let sys = german_system();
    // Nothing leads from Y back into the graph; E still counts.
    let lp = CostSpec::default().with_variant(TimeVariant::LongestPath);
    assert_eq!(time_cost(sys.dag(), ["Y", "E"], "Y", &lp).unwrap(), 8.0);
    assert_eq!(time_cost(sys.dag(), ["S"], "E", &lp).unwrap(), 0.0);
}

#[test]
fn total_cost_composition() {
    let sys = german_system();
    let a = Action::new([("E", 0.5)]);
    let s = CostSpec::classic();
    let b = total_cost(&a, sys.dag(), "Y", &s, sys.variances()).unwrap();
    assert_eq!(b.total, b.c_s);
    assert_eq!(b.c_s, 0.5);
    let timed = s.with_lambda(2.0);
    let b = total_cost(&a, sys.dag(), "Y", &timed, sys.variances()).unwrap();
    assert!(rel_close(b.total, 0.5 + 2.0 * 3148.0 / 408.0, 1e-12));
    let empty = total_cost(&Action::empty(), sys.dag(), "Y", &timed, sys.variances()).unwrap();
    assert_eq!((empty.c_s, empty.c_t, empty.total), (0.0, 0.0, 0.0));
}

#[test]
fn invalid_specs() {
    let sys = german_system();
    let a = Action::single("E", 1.0);
    for bad in [
        CostSpec { p: 0.5, ..CostSpec::default() },
        CostSpec { lambda: -1.0, ..CostSpec::default() },
        CostSpec { time_budget: Some(-1.0), ..CostSpec::default() },
        CostSpec { p: f64::NAN, ..CostSpec::default() },
    ] {
        assert!(matches!(total_cost(&a, sys.dag(), "Y", &bad, sys.variances()), Err(CostError::InvalidSpec(_))));
    }
}

#[test]
fn spec_serialisation_defaults() {
    let s: CostSpec = serde_json::from_str("{}").unwrap();
    assert_eq!(s, CostSpec::default());
    let s: CostSpec = serde_json::from_str(r#"{"p": 1, "normalization": "none", "time_variant": "longest_path"}"#).unwrap();
    assert_eq!((s.p, s.normalization, s.time_variant), (1.0, Normalization::None, TimeVariant::LongestPath));
}

fn root_scm(sd: f64) -> Scm {
    Scm::new(
        vec![Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::normal(sd))],
        TargetSpec::new(&[("X", 1.0)]),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn homogeneous_of_degree_one(
        d in prop::collection::vec(-10.0..10.0f64, 3),
        t in -5.0..5.0f64,
        p in prop_oneof![Just(1.0), Just(2.0), 1.0..6.0f64],
    ) {
        let sys = german_system();
        let names = ["E", "J", "S"];
        let a = Action::new(names.iter().copied().zip(d.iter().copied()));
        let ta = Action::new(names.iter().copied().zip(d.iter().map(|x| x * t)));
        let s = spec(p, Normalization::ProperSigma);
        let c = feature_cost(&a, &s, sys.variances()).unwrap();
        let ct = feature_cost(&ta, &s, sys.variances()).unwrap();
        prop_assert!(rel_close(ct, t.abs() * c, 1e-12), "{} vs {}", ct, t.abs() * c);
    }

    #[test]
    fn normalised_cost_is_unit_free(sd in 0.01..100.0f64, delta in -5.0..5.0f64) {
        // Rescaling a variable's units rescales σ and δ together.
        let base = feature_cost(&Action::single("X", delta), &spec(2.0, Normalization::ProperSigma), &root_scm(1.0).variances()).unwrap();
        let scaled = feature_cost(&Action::single("X", delta * sd), &spec(2.0, Normalization::ProperSigma), &root_scm(sd).variances()).unwrap();
        prop_assert!(rel_close(base, scaled, 1e-12));
    }

    #[test]
    fn lp_norms_are_ordered(d in prop::collection::vec(-10.0..10.0f64, 3)) {
        let sys = german_system();
        let a = Action::new(["E", "J", "S"].into_iter().zip(d));
        let c1 = feature_cost(&a, &spec(1.0, Normalization::None), sys.variances()).unwrap();
        let c2 = feature_cost(&a, &spec(2.0, Normalization::None), sys.variances()).unwrap();
        prop_assert!(c2 <= c1 * (1.0 + 1e-12));
    }
}
