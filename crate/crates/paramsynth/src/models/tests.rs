use super::*;
use crate::testutil::{PMC5, PMDP3, TOY4};

fn rat(s: &str) -> Rational {
    crate::testutil::rat(s)
}

fn inst(model: &ParametricModel, s: &str) -> Instantiation {
    crate::testutil::inst(model, s)
}

#[test]
fn instantiate_sample_pmc_well_defined() {
    let m = ParametricModel::parse(PMC5).unwrap();
    let c = m.instantiate(&inst(&m, "p=4/5,q=3/5"));
    assert!(c.is_well_defined());
    assert_eq!(c.actions[0][0].row[0], (1, rat("4/5")));
    assert_eq!(c.actions[1][0].row[1], (3, rat("2/5")));
}

#[test]
fn boundary_instantiation_well_defined_but_not_graph_preserving() {
    let m = ParametricModel::parse(PMC5).unwrap();
    let u = inst(&m, "p=1,q=3/5");
    assert!(m.instantiate(&u).is_well_defined());
    assert!(!m.is_graph_preserving_point(&u));
    let interior = inst(&m, "p=4/5,q=3/5");
    assert!(m.is_graph_preserving_point(&interior));
}

#[test]
fn vanishing_denominator_flags_not_well_defined() {
    let src = "\
pmc
parameters p
states 2 init 0
label target 1
transition 0 1 1/(1+p)
transition 0 0 p/(1+p)
transition 1 1 1
";
    let m = ParametricModel::parse(src).unwrap();
    let c = m.instantiate(&inst(&m, "p=-1"));
    assert!(!c.is_well_defined());
}

#[test]
fn reach_states_on_sample_pmc() {
    let m = ParametricModel::parse(PMC5).unwrap();
    let (can, cannot) = m.reach_states(&BTreeSet::from([3]));
    assert_eq!(cannot, BTreeSet::from([4]));
    assert_eq!(can.len() + cannot.len(), m.num_states);
    let (_, none) = m.reach_states(&(0..5).collect());
    assert!(none.is_empty());
}

#[test]
fn reach_states_on_toy_pmc() {
    let m = ParametricModel::parse(TOY4).unwrap();
    let (_, cannot) = m.reach_states(&BTreeSet::from([2]));
    assert_eq!(cannot, BTreeSet::from([3]));
}

#[test]
fn exact_check_on_instantiated_sample_pmc() {
    let m = ParametricModel::parse(PMC5).unwrap();
    let c = m.instantiate(&inst(&m, "p=4/5,q=3/5"));
    let spec = Specification::parse("P >= 1/2 reach target").unwrap();
    let v = c.check(&spec, OptDir::Max).unwrap();
    assert_eq!(v, CheckValue::Finite(rat("23/40")));
}

#[test]
fn pmdp_max_reach_prefers_sure_branch() {
    let m = ParametricModel::parse(PMDP3).unwrap();
    let c = m.instantiate(&inst(&m, "p=1/2,q=1/2"));
    let spec = Specification::parse("P > 4/5 reach target").unwrap();
    // strategy b reaches the target surely
    assert_eq!(
        c.check(&spec, OptDir::Max).unwrap(),
        CheckValue::Finite(rat("1"))
    );
    // strategy a yields 1 - q + q*p = 3/4
    assert_eq!(
        c.check(&spec, OptDir::Min).unwrap(),
        CheckValue::Finite(rat("3/4"))
    );
}

#[test]
fn min_reach_sees_avoiding_strategy() {
    let src = "\
pmdp
parameters p
states 2 init 0
label target 1
transition 0 a 1 1
transition 0 b 0 1
transition 1 a 1 1
";
    let m = ParametricModel::parse(src).unwrap();
    let c = m.instantiate(&inst(&m, "p=1/2"));
    let spec = Specification::parse("P >= 1/2 reach target").unwrap();
    assert_eq!(
        c.check(&spec, OptDir::Min).unwrap(),
        CheckValue::Finite(rat("0"))
    );
    assert_eq!(
        c.check(&spec, OptDir::Max).unwrap(),
        CheckValue::Finite(rat("1"))
    );
}

#[test]
fn policy_value_is_fixed_point_under_deviations() {
    let m = ParametricModel::parse(PMDP3).unwrap();
    let c = m.instantiate(&inst(&m, "p=2/5,q=7/10"));
    let spec = Specification::parse("P > 0 reach target").unwrap();
    let best = c.check(&spec, OptDir::Max).unwrap().finite().unwrap();
    // no single fixed strategy beats the reported optimum
    let strat_a = rat("1") - rat("7/10") * (rat("1") - rat("2/5"));
    assert!(strat_a <= best);
    assert!(rat("1") <= best);
    assert_eq!(best, rat("1"));
}

#[test]
fn expected_reward_geometric_loop() {
    let src = "\
pmc
parameters p
states 2 init 0
label target 1
transition 0 1 p
transition 0 0 1-p
transition 1 1 1
reward 0 1
";
    let m = ParametricModel::parse(src).unwrap();
    let c = m.instantiate(&inst(&m, "p=1/2"));
    let spec = Specification::parse("E <= 5 reach target").unwrap();
    assert_eq!(
        c.check(&spec, OptDir::Max).unwrap(),
        CheckValue::Finite(rat("2"))
    );
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
    let m = ParametricModel::parse(src).unwrap();
    let c = m.instantiate(&inst(&m, "p=1/2"));
    let spec = Specification::parse("E <= 5 reach target").unwrap();
    assert_eq!(c.check(&spec, OptDir::Max).unwrap(), CheckValue::Infinite);
}

#[test]
fn bounded_reachability_steps() {
    let m = ParametricModel::parse(TOY4).unwrap();
    let c = m.instantiate(&inst(&m, "p=1/2,q=3/10"));
    let one = Specification::parse("P > 0 within 1 reach target").unwrap();
    let two = Specification::parse("P > 0 within 2 reach target").unwrap();
    let zero = Specification::parse("P > 0 within 0 reach target").unwrap();
    assert_eq!(
        c.check(&one, OptDir::Max).unwrap(),
        CheckValue::Finite(rat("1/2"))
    );
    assert_eq!(
        c.check(&two, OptDir::Max).unwrap(),
        CheckValue::Finite(rat("13/20"))
    );
    assert_eq!(
        c.check(&zero, OptDir::Max).unwrap(),
        CheckValue::Finite(rat("0"))
    );
}

#[test]
fn parse_rejects_deadlock_and_mdp_mismatch() {
    let deadlock = "\
pmc
parameters p
states 2 init 0
label target 1
transition 0 1 1
";
    assert!(ParametricModel::parse(deadlock).is_err());
    let two_actions_in_pmc = "\
pmc
parameters p
states 1 init 0
label t 0
transition 0 0 1
transition 0 0 1
";
    assert!(ParametricModel::parse(two_actions_in_pmc).is_err());
}

#[test]
fn spec_parser_accepts_grammar() {
    let s = Specification::parse("P <= 2/5 reach target").unwrap();
    assert_eq!(s.kind, SpecKind::ReachProb);
    assert_eq!(s.relation, Relation::Leq);
    assert_eq!(s.threshold, rat("2/5"));
    let b = Specification::parse("P > 0.4 within 7 reach target").unwrap();
    assert_eq!(b.kind, SpecKind::BoundedReachProb(7));
    assert_eq!(b.threshold, rat("2/5"));
    let e = Specification::parse("E <= 5 reach target").unwrap();
    assert_eq!(e.kind, SpecKind::ExpReward);
    assert!(Specification::parse("P <= 3/2 reach target").is_err());
    assert!(Specification::parse("E <= 5 within 3 reach target").is_err());
}
