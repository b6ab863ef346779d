//! Semi-synthetic loan-approval SCM modelled on the German Credit data.

use crate::graph::ResponseTimes;
use crate::recourse::CausalSystem;
use crate::scm::{Actionability, Instance, NoiseSpec, Scm, ScmError, StructuralEquation as Eq, TargetSpec, Variable};

/// Gender, Age, Education, Job, Loan amount, Loan duration, Income, Savings;
/// outcome `Y ~ σ(2I + 3S − L − D)`.
pub fn german_scm() -> Scm {
    use Actionability::*;
    let normal = NoiseSpec::normal;
    let vars = vec![
        Variable::new("G", Eq::root(0.0), NoiseSpec::Bernoulli { p: 0.5 }).with_actionability(NonActionable),
        Variable::new("A", Eq::root(-35.0), NoiseSpec::Gamma { shape: 10.0, scale: 3.5 })
            .with_actionability(NonActionable),
        Variable::new("E", Eq::linear(0.0, &[("G", 1.0), ("A", 1.0)]), normal(1.0)),
        Variable::new("J", Eq::linear(0.0, &[("G", 1.0), ("A", 2.0), ("E", 4.0)]), normal(2.0)),
        Variable::new("L", Eq::linear(0.0, &[("A", 1.0), ("G", 0.5)]), normal(3.0)),
        Variable::new("D", Eq::linear(0.0, &[("G", 1.0), ("A", -0.5), ("L", 2.0)]), normal(2.0))
            .with_actionability(Mutable),
        Variable::new("I", Eq::linear(0.0, &[("G", 0.5), ("A", 1.0), ("E", 4.0), ("J", 5.0)]), normal(4.0)),
        Variable::new("S", Eq::linear(0.0, &[("I", 5.0)]), normal(2.0)),
    ];
    let target = TargetSpec::new(&[("I", 2.0), ("S", 3.0), ("L", -1.0), ("D", -1.0)]);
    Scm::new(vars, target).expect("German SCM is valid")
}

/// Response times of the actionable sub-graph; every other edge is 0.
pub fn german_times() -> ResponseTimes {
    ResponseTimes::new()
        .with("E", "I", 5.0)
        .with("E", "J", 5.0)
        .with("J", "I", 1.0)
        .with("I", "S", 2.0)
        .with("D", "Y", 0.0)
        .with("I", "Y", 1.0)
        .with("S", "Y", 0.0)
        .with("L", "Y", 0.0)
        .with("L", "D", 0.0)
}

pub fn german_system() -> CausalSystem {
    CausalSystem::new(german_scm(), german_times()).expect("German response times match the graph")
}

/// A fixed unfavourable individual: G = 0, every other noise at its mean
/// except Education's, which sits a quarter unit below. All descendants
/// follow from that one deficit (score −102).
pub fn demo_individual() -> Instance {
    let scm = german_scm();
    let mut noise: Vec<f64> = scm.variables().iter().map(|v| v.noise.mean()).collect();
    noise[scm.index_of("G").unwrap()] = 0.0;
    noise[scm.index_of("E").unwrap()] = -0.25;
    scm.to_instance(&scm.evaluate(&noise, None))
}

/// A seeded unfavourable individual: among 256 sampled rows, the rejected
/// one closest to the decision boundary (German scores spread over
/// thousands, so an arbitrary rejected row is usually beyond any bounded
/// action). Seeds `seed, seed + 1, …` are tried until a block has a
/// rejected row.
pub fn random_unfavorable_individual(scm: &Scm, seed: u64) -> Result<Instance, ScmError> {
    let threshold = scm.target().threshold;
    for attempt in 0..64u64 {
        let ds = scm.sample(256, seed.wrapping_add(attempt))?;
        let best = (0..ds.len())
            .filter(|&r| ds.y_prob[r] < threshold)
            .max_by(|&a, &b| ds.y_prob[a].total_cmp(&ds.y_prob[b]).then(b.cmp(&a)));
        if let Some(r) = best {
            return Ok(ds.instance(r));
        }
    }
    Err(ScmError::EmptySample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CausalDag;

    #[test]
    fn german_is_valid() {
        let scm = german_scm();
        assert!(scm.validate().is_ok());
        assert_eq!(scm.len(), 8);
        assert_eq!(scm.variances().get("S").unwrap().proper_sigma(), 2.0);
    }

    #[test]
    fn german_topological_order() {
        let scm = german_scm();
        let order = scm.topological_order();
        assert_eq!(&order[..2], &["G", "A"]);
        assert_eq!(*order.last().unwrap(), "S");
        for v in scm.variables() {
            let pos = |n: &str| order.iter().position(|o| *o == n).unwrap();
            for p in &v.equation.parents {
                assert!(pos(p) < pos(&v.name));
            }
        }
    }

    #[test]
    fn edge_counts_follow_the_equations() {
        let dag = CausalDag::from_scm(&german_scm(), &german_times()).unwrap();
        assert_eq!(dag.structural_edge_count(), 15);
        assert_eq!(dag.edges().len(), 19);
        let e = dag.edge("E", "I").unwrap();
        assert_eq!((e.beta, e.tau), (4.0, 5.0));
        assert_eq!(dag.edge("I", "S").unwrap().tau, 2.0);
        assert_eq!(dag.edge("G", "E").unwrap().tau, 0.0);
    }

    #[test]
    fn demo_individual_is_rejected() {
        let scm = german_scm();
        let x = demo_individual();
        let p = scm.predict(&x).unwrap();
        assert_eq!(p.score, -102.0);
        assert_eq!(p.label, 0);
        assert_eq!(x.get("E"), Some(-0.25));
    }

    #[test]
    fn random_individual_is_rejected_and_seeded() {
        let scm = german_scm();
        let a = random_unfavorable_individual(&scm, 5).unwrap();
        assert_eq!(a, random_unfavorable_individual(&scm, 5).unwrap());
        assert_eq!(scm.predict(&a).unwrap().label, 0);
    }
}
