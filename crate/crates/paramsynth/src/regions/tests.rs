use num_traits::Zero;

use super::*;
use crate::models::ParametricModel;
use crate::testutil::PMC5;

fn rat(s: &str) -> Rational {
    crate::testutil::rat(s)
}

fn region(s: &str) -> Region {
    Region::parse(s).unwrap()
}

#[test]
fn parse_and_display_round_trip() {
    let r = region("0.1<=p<=0.8, 0.4<=q<=0.7");
    assert_eq!(r.to_string(), "1/10<=p<=4/5, 2/5<=q<=7/10");
    assert_eq!(Region::parse(&r.to_string()).unwrap(), r);
}

#[test]
fn empty_box_rejected_at_parse() {
    assert!(matches!(
        Region::parse("0.8<=p<=0.1"),
        Err(RegionError::EmptyBox(_))
    ));
}

#[test]
fn size_is_the_box_volume() {
    assert_eq!(region("0<=p<=1, 0<=q<=1").size(), rat("1"));
    assert_eq!(region("1/10<=p<=4/5, 2/5<=q<=7/10").size(), rat("21/100"));
}

#[test]
fn split_all_dims_quarters_the_unit_box() {
    let r = region("0<=p<=1, 0<=q<=1");
    let parts = r.split(&SplitStrategy::AllDims);
    assert_eq!(parts.len(), 4);
    for part in &parts {
        assert_eq!(part.size(), rat("1/4"));
    }
    let total: Rational = parts.iter().map(|b| b.size()).sum();
    assert_eq!(total, r.size());
}

#[test]
fn split_single_dim() {
    let r = region("0<=p<=1, 0<=q<=1");
    let parts = r.split(&SplitStrategy::Dim(Var::intern("p")));
    assert_eq!(parts.len(), 2);
    assert_eq!(parts[0], region("0<=p<=1/2, 0<=q<=1"));
    assert_eq!(parts[1], region("1/2<=p<=1, 0<=q<=1"));
}

#[test]
fn split_at_anchor_point() {
    let r = region("0<=p<=1, 0<=q<=1");
    let u = Instantiation::parse("p=1/4,q=3/4", &[]).unwrap();
    let parts = r.split(&SplitStrategy::AtPoint(u));
    assert_eq!(parts.len(), 4);
    let total: Rational = parts.iter().map(|b| b.size()).sum();
    assert_eq!(total, r.size());
    // every child has the anchor as one of its corners
    for part in &parts {
        let has_corner = part.vertices().iter().any(|v| {
            v.get(Var::intern("p")) == Some(&rat("1/4"))
                && v.get(Var::intern("q")) == Some(&rat("3/4"))
        });
        assert!(has_corner);
    }
}

#[test]
fn split_children_stay_inside_parent() {
    let r = region("1/10<=p<=4/5, 2/5<=q<=7/10");
    for part in r.split(&SplitStrategy::AllDims) {
        for v in part.vertices() {
            assert!(r.contains(&v));
        }
    }
}

#[test]
fn vertices_enumeration_order() {
    let r = region("0<=p<=1, 0<=q<=1");
    let verts = r.vertices();
    let p = Var::intern("p");
    let q = Var::intern("q");
    let as_pairs: Vec<(Rational, Rational)> = verts
        .iter()
        .map(|u| (u.get(p).unwrap().clone(), u.get(q).unwrap().clone()))
        .collect();
    assert_eq!(
        as_pairs,
        vec![
            (rat("0"), rat("0")),
            (rat("0"), rat("1")),
            (rat("1"), rat("0")),
            (rat("1"), rat("1")),
        ]
    );
    // degenerate interval contributes a single value
    assert_eq!(region("1/2<=p<=1/2, 0<=q<=1").vertices().len(), 2);
    assert_eq!(region("0<=p<=1, 0<=q<=1, 0<=r<=1").vertices().len(), 8);
}

#[test]
fn graph_preservation_of_sample_pmc() {
    let m = ParametricModel::parse(PMC5).unwrap();
    match check_graph_preserving(&m, &region("1/10<=p<=4/5, 2/5<=q<=7/10")) {
        GraphPreservation::Preserving => {}
        other => panic!("expected Preserving, got {:?}", other),
    }
    match check_graph_preserving(&m, &region("0<=p<=1, 0<=q<=1")) {
        GraphPreservation::NotPreserving(witness) => {
            assert_eq!(witness.get(Var::intern("p")), Some(&Rational::zero()));
            assert_eq!(witness.get(Var::intern("q")), Some(&Rational::zero()));
        }
        other => panic!("expected NotPreserving, got {:?}", other),
    }
}

#[test]
fn graph_preservation_with_rational_transitions() {
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
    // 1/(1+p) in [1/2, 2/3] on the box: numerator and denominator sign-definite
    match check_graph_preserving(&m, &region("1/2<=p<=1")) {
        GraphPreservation::Preserving => {}
        other => panic!("expected Preserving, got {:?}", other),
    }
    // p = 0 kills the self-loop transition
    match check_graph_preserving(&m, &region("0<=p<=1")) {
        GraphPreservation::NotPreserving(_) => {}
        other => panic!("expected NotPreserving, got {:?}", other),
    }
}

#[test]
fn non_multilinear_transitions_need_a_solver() {
    let src = "\
pmc
parameters p
states 2 init 0
label target 1
transition 0 1 p*p
transition 0 0 1-p*p
transition 1 1 1
";
    let m = ParametricModel::parse(src).unwrap();
    match check_graph_preserving(&m, &region("1/10<=p<=9/10")) {
        GraphPreservation::NeedsSolver(_) => {}
        other => panic!("expected NeedsSolver, got {:?}", other),
    }
}

#[test]
fn preserving_verdict_matches_pointwise_checks() {
    let m = ParametricModel::parse(PMC5).unwrap();
    let r = region("1/10<=p<=4/5, 2/5<=q<=7/10");
    assert!(matches!(
        check_graph_preserving(&m, &r),
        GraphPreservation::Preserving
    ));
    // deterministic lattice of 50 interior points
    let p = Var::intern("p");
    let q = Var::intern("q");
    let mut checked = 0;
    for i in 1..=10 {
        for j in 1..=5 {
            let (plo, phi) = r.interval_of(p).unwrap();
            let (qlo, qhi) = r.interval_of(q).unwrap();
            let pu = plo + (phi - plo) * Rational::new(i.into(), 11.into());
            let qu = qlo + (qhi - qlo) * Rational::new(j.into(), 6.into());
            let u = Instantiation::new([(p, pu), (q, qu)].into_iter().collect());
            assert!(m.is_graph_preserving_point(&u));
            checked += 1;
        }
    }
    assert_eq!(checked, 50);
}
