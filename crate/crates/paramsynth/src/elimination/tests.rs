use std::collections::BTreeSet;

use super::*;
use crate::models::{Instantiation, OptDir, Specification};
use crate::ratfunc::parse_rational_function;
use crate::testutil::{inst, model, rat, GEOMETRIC, INVCHAIN, KYDIE, PMC5, TOY4};

fn rf(s: &str) -> crate::ratfunc::RationalFunction {
    parse_rational_function(s).unwrap()
}

fn forward() -> Box<dyn EliminationOrder> {
    order_by_name("forward").unwrap()
}

#[test]
fn shortcut_steps_match_worked_example() {
    // Eliminating s2 of the five-state pMC: first the transition s1 -> s2,
    // then s0 -> s2, reproducing the intermediate matrices step by step.
    let m = model(PMC5);
    let (mut matrix, _) = prepare_for_tests(&m, "target");
    // s2's row: q -> s1, (1-q) -> s4 dropped (s4 cannot reach the target)
    matrix.eliminate_selfloop(2).unwrap();
    matrix.eliminate_transition(1, 2);
    assert_eq!(matrix.entry(1, 1), Some(&rf("q*q")));
    assert!(matrix.entry(1, 2).is_none());
    matrix.eliminate_transition(0, 2);
    assert_eq!(matrix.entry(0, 1), Some(&rf("p + (1-p)*q")));
    assert!(matrix.entry(0, 2).is_none());
    // loop elimination on s1: the one-step probability (1-q) rescales
    // to (1-q)/(1-q^2) = 1/(1+q)
    matrix.eliminate_selfloop(1).unwrap();
    assert_eq!(matrix.one_step(1), &rf("1/(1+q)"));
    // final shortcut: x(s0) = (1-q) + (p + (1-p)q) / (1+q)
    matrix.eliminate_state(1);
    matrix.eliminate_selfloop(0).unwrap();
    assert!(matrix
        .one_step(0)
        .semantically_equal(&rf("(p + q - p*q)/(1+q)")));
}

#[test]
fn selfloop_rescale_to_certainty() {
    let src = "\
pmc
parameters p
states 2 init 0
label target 1
transition 0 0 p
transition 0 1 1-p
transition 1 1 1
";
    let m = model(src);
    let (mut matrix, _) = prepare_for_tests(&m, "target");
    matrix.eliminate_selfloop(0).unwrap();
    assert!(matrix.one_step(0).is_one());
}

#[test]
fn absorbing_selfloop_is_an_error() {
    let src = "\
pmc
parameters p
states 2 init 0
label target 1
transition 0 0 1
transition 1 1 1
";
    // state 0 cannot reach the target at all, so force the matrix by hand
    let m = model(src);
    let (mut matrix, _) = prepare_for_tests(&m, "target");
    // target-unreachable rows are dropped in preparation
    assert!(matrix.row(0).is_empty());
    matrix.set_entry(0, 0, rf("1"));
    assert!(matrix.eliminate_selfloop(0).is_err());
}

#[test]
fn toy_pmc_solution_function() {
    let m = model(TOY4);
    let f = solution_function(&m, "target", forward().as_ref(), Engine::StateElim).unwrap();
    assert!(f.semantically_equal(&rf("1 - p + p*q")));
}

#[test]
fn knuth_yao_solution_function() {
    let m = model(KYDIE);
    let f = solution_function(&m, "two", forward().as_ref(), Engine::StateElim).unwrap();
    assert!(f.semantically_equal(&rf("p*(1-q)*(1-p)/(1-p*q)")));
    assert_eq!(f.stats(), (3, 2, 4, 2));
}

#[test]
fn five_state_solution_function() {
    let m = model(PMC5);
    let f = solution_function(&m, "target", forward().as_ref(), Engine::StateElim).unwrap();
    assert!(f.semantically_equal(&rf("(p + q - p*q)/(1+q)")));
    // cross-check against the exact linear solve at (4/5, 3/5)
    let u = inst(&m, "p=4/5,q=3/5");
    let v = f.evaluate(&u.values).unwrap().value().unwrap();
    assert_eq!(v, rat("23/40"));
}

#[test]
fn all_orders_and_engines_agree() {
    for src in [TOY4, PMC5, KYDIE, INVCHAIN] {
        let m = model(src);
        let label = m.labels.keys().next().unwrap().clone();
        let reference =
            solution_function(&m, &label, forward().as_ref(), Engine::StateElim).unwrap();
        for name in order_names() {
            let order = order_by_name(name).unwrap();
            let f = solution_function(&m, &label, order.as_ref(), Engine::StateElim).unwrap();
            assert!(
                f.semantically_equal(&reference),
                "order {} disagrees on {}",
                name,
                label
            );
        }
        for engine in [Engine::Gaussian, Engine::SetBased] {
            let f = solution_function(&m, &label, forward().as_ref(), engine).unwrap();
            assert!(
                f.semantically_equal(&reference),
                "engine {:?} disagrees",
                engine
            );
        }
    }
}

#[test]
fn gaussian_vector_boundary_values() {
    let m = model(PMC5);
    let vec = gaussian_vector(&m, "target", ValueKind::Reachability).unwrap();
    assert!(vec[3].is_one());
    assert!(vec[4].is_zero());
    assert!(vec[0].semantically_equal(&rf("(p + q - p*q)/(1+q)")));
    assert!(vec[1].semantically_equal(&rf("1/(1+q)")));
    assert!(vec[2].semantically_equal(&rf("q/(1+q)")));
}

#[test]
fn expected_reward_geometric() {
    let m = model(GEOMETRIC);
    let f = expected_reward_function(&m, "target", forward().as_ref()).unwrap();
    assert!(f.semantically_equal(&rf("1/p")));
    let u = inst(&m, "p=1/2");
    assert_eq!(f.evaluate(&u.values).unwrap().value().unwrap(), rat("2"));
}

#[test]
fn expected_reward_with_cancelling_reward() {
    let src = "\
pmc
parameters p
states 2 init 0
label target 1
transition 0 1 p
transition 0 0 1-p
transition 1 1 1
reward 0 p
";
    let m = model(src);
    let f = expected_reward_function(&m, "target", forward().as_ref()).unwrap();
    assert!(f.is_one());
}

#[test]
fn expected_reward_constant_chain() {
    let src = "\
pmc
parameters c
states 2 init 0
label target 1
transition 0 1 1
transition 1 1 1
reward 0 c
";
    let m = model(src);
    let f = expected_reward_function(&m, "target", forward().as_ref()).unwrap();
    assert!(f.semantically_equal(&rf("c")));
}

#[test]
fn expected_reward_diverges_when_target_avoidable() {
    let src = "\
pmc
parameters p
states 3 init 0
label target 1
transition 0 1 p
transition 0 2 1-p
transition 1 1 1
transition 2 2 1
reward 0 1
";
    let m = model(src);
    assert!(matches!(
        expected_reward_function(&m, "target", forward().as_ref()),
        Err(EliminationError::RewardDiverges)
    ));
}

#[test]
fn bounded_reachability_functions() {
    let m = model(TOY4);
    let n1 = bounded_reach_function(&m, "target", 1).unwrap();
    assert!(n1.semantically_equal(&rf("1-p")));
    let n2 = bounded_reach_function(&m, "target", 2).unwrap();
    assert!(n2.semantically_equal(&rf("1 - p + p*q")));
    let n0 = bounded_reach_function(&m, "target", 0).unwrap();
    assert!(n0.is_zero());
}

#[test]
fn order_examples() {
    // forward-reversed on a chain: states {1, 2, 3} eligible, reversed
    let src = "\
pmc
parameters p
states 5 init 0
label target 4
transition 0 1 1
transition 1 2 p
transition 1 4 1-p
transition 2 3 p
transition 2 4 1-p
transition 3 4 1
";
    let m = model(src);
    let prepared = prepare_for_tests(&m, "target");
    let ctx_matrix = prepared.0;
    let eligible = prepared.1;
    assert_eq!(eligible, vec![1, 2, 3]);
    let order = order_by_name("forward-reversed").unwrap();
    let target = BTreeSet::from([4]);
    let ctx = OrderContext {
        model: &m,
        matrix: &ctx_matrix,
        initial: 0,
        eligible: &eligible,
        target: &target,
    };
    let mut run = order.begin(&ctx);
    let mut remaining: BTreeSet<usize> = eligible.iter().copied().collect();
    let mut picked = Vec::new();
    while !remaining.is_empty() {
        let s = run.next_state(&ctx_matrix, &remaining);
        remaining.remove(&s);
        picked.push(s);
    }
    assert_eq!(picked, vec![3, 2, 1]);
}

#[test]
fn regex_order_picks_low_degree_states() {
    // acyclic chain: only one eligible interior state anyway
    let src = "\
pmc
parameters p
states 3 init 0
label target 2
transition 0 1 1
transition 1 2 1
transition 2 2 1
";
    let m = model(src);
    let (matrix, eligible) = prepare_for_tests(&m, "target");
    assert_eq!(eligible, vec![1]);
    let order = order_by_name("regex").unwrap();
    let target = BTreeSet::from([2]);
    let ctx = OrderContext {
        model: &m,
        matrix: &matrix,
        initial: 0,
        eligible: &eligible,
        target: &target,
    };
    let mut run = order.begin(&ctx);
    let remaining: BTreeSet<usize> = eligible.iter().copied().collect();
    assert_eq!(run.next_state(&matrix, &remaining), 1);
}

#[test]
fn dynamic_penalty_prefers_constant_rows() {
    // state 1 carries constant transitions, state 2 carries p*q terms
    let src = "\
pmc
parameters p q
states 4 init 0
label target 3
transition 0 1 1/2
transition 0 2 1/2
transition 1 3 1
transition 2 3 p*q
transition 2 1 1-p*q
transition 3 3 1
";
    let m = model(src);
    let (matrix, eligible) = prepare_for_tests(&m, "target");
    assert_eq!(eligible, vec![1, 2]);
    let order = order_by_name("dpen").unwrap();
    let target = BTreeSet::from([3]);
    let ctx = OrderContext {
        model: &m,
        matrix: &matrix,
        initial: 0,
        eligible: &eligible,
        target: &target,
    };
    let mut run = order.begin(&ctx);
    let remaining: BTreeSet<usize> = eligible.iter().copied().collect();
    assert_eq!(run.next_state(&matrix, &remaining), 1);
}

#[test]
fn oracle_agreement_on_random_points() {
    // deterministic lattice of graph-preserving points
    for src in [TOY4, PMC5, KYDIE, INVCHAIN] {
        let m = model(src);
        let label = m.labels.keys().next().unwrap().clone();
        let f = solution_function(&m, &label, forward().as_ref(), Engine::StateElim).unwrap();
        let spec = Specification::parse(&format!("P > 0 reach {}", label)).unwrap();
        for i in 1..5 {
            for j in 1..5 {
                let u = Instantiation::parse(
                    &format!("p={}/7,q={}/9", i, j),
                    &m.params,
                )
                .unwrap();
                if !m.is_graph_preserving_point(&u) {
                    continue;
                }
                let exact = m
                    .instantiate(&u)
                    .check(&spec, OptDir::Max)
                    .unwrap()
                    .finite()
                    .unwrap();
                let symbolic = f.evaluate(&u.values).unwrap().value().unwrap();
                assert_eq!(exact, symbolic, "mismatch on {} at {}", label, u);
            }
        }
    }
}

#[test]
fn set_based_intermediate_solution_invariant() {
    // After the full set-based run, the result matches the equation system's
    // unique solution at a sample point (spot check of the x vector).
    let m = model(PMC5);
    let f = solution_function(&m, "target", forward().as_ref(), Engine::SetBased).unwrap();
    let u = inst(&m, "p=1/3,q=1/4");
    let spec = Specification::parse("P > 0 reach target").unwrap();
    let exact = m
        .instantiate(&u)
        .check(&spec, OptDir::Max)
        .unwrap()
        .finite()
        .unwrap();
    assert_eq!(f.evaluate(&u.values).unwrap().value().unwrap(), exact);
}

#[test]
fn initial_state_inside_target_or_sink() {
    let m = model(TOY4);
    let mut labels = m.labels.clone();
    labels.insert("init_label".into(), BTreeSet::from([0]));
    let m2 = crate::models::ParametricModel { labels, ..m };
    let f = solution_function(&m2, "init_label", forward().as_ref(), Engine::StateElim).unwrap();
    assert!(f.is_one());
}
