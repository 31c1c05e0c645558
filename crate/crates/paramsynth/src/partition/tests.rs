use num_traits::Zero;

use super::*;
use crate::testutil::{model, rat, KYDIE, TOY4};

fn spec(s: &str) -> Specification {
    Specification::parse(s).unwrap()
}

fn region(s: &str) -> Region {
    Region::parse(s).unwrap()
}

fn lifting_config() -> PartitionConfig {
    PartitionConfig {
        smt_fallback: false,
        ..PartitionConfig::default()
    }
}

#[test]
fn grid_samples_are_exact_and_counted() {
    let m = model(KYDIE);
    let sp = spec("P > 3/20 reach two");
    let space = region("1/100<=p<=99/100, 1/100<=q<=99/100");
    let samples = sample_grid(&m, &sp, &space, 2, SchedulerQuantifier::Demonic).unwrap();
    assert_eq!(samples.len(), 4);
    // the biased-coin point is a violating sample with value 1/10
    let biased = evaluate_sample(
        &m,
        &sp,
        SchedulerQuantifier::Demonic,
        Instantiation::parse("p=2/5,q=7/10", &m.params).unwrap(),
    )
    .unwrap();
    assert!(!biased.satisfies);
    assert_eq!(biased.value, CheckValue::Finite(rat("1/10")));
    // the fair coin reaches `two` with 1/6 > 3/20
    let fair = evaluate_sample(
        &m,
        &sp,
        SchedulerQuantifier::Demonic,
        Instantiation::parse("p=1/2,q=1/2", &m.params).unwrap(),
    )
    .unwrap();
    assert!(fair.satisfies);
    assert_eq!(fair.value, CheckValue::Finite(rat("1/6")));
}

#[test]
fn interpolation_produces_midpoints() {
    let m = model(TOY4);
    let sp = spec("P <= 3/5 reach target");
    let space = region("0<=p<=1, 0<=q<=1");
    let a = evaluate_sample(
        &m,
        &sp,
        SchedulerQuantifier::Demonic,
        Instantiation::parse("p=3/4,q=1/4", &m.params).unwrap(),
    )
    .unwrap();
    let b = evaluate_sample(
        &m,
        &sp,
        SchedulerQuantifier::Demonic,
        Instantiation::parse("p=1/4,q=3/4", &m.params).unwrap(),
    )
    .unwrap();
    assert!(a.satisfies != b.satisfies);
    let mids = interpolate_samples(&[a.clone(), b], &space).unwrap();
    assert_eq!(mids.len(), 1);
    assert_eq!(
        mids[0],
        Instantiation::parse("p=1/2,q=1/2", &m.params).unwrap()
    );
    // all-accepting pools are an error
    assert!(matches!(
        interpolate_samples(&[a.clone(), a], &space),
        Err(PartitionError::NoMixedSamples)
    ));
}

#[test]
fn trivial_spec_accepts_whole_space_in_one_iteration() {
    let m = model(TOY4);
    let sp = spec("P <= 1 reach target");
    let space = region("1/10<=p<=9/10, 1/10<=q<=9/10");
    let st = refine(&m, &sp, &space, &lifting_config()).unwrap();
    assert_eq!(st.stop, StopReason::CoverageReached);
    assert_eq!(st.accepted.len(), 1);
    assert!(st.rejected.is_empty());
    assert_eq!(st.coverage, rat("1"));
}

#[test]
fn rejecting_space_decided_quickly() {
    let m = model(TOY4);
    let sp = spec("P <= 2/5 reach target");
    let space = region("2/5<=p<=3/5, 1/5<=q<=1/2");
    let st = refine(&m, &sp, &space, &lifting_config()).unwrap();
    assert_eq!(st.stop, StopReason::CoverageReached);
    assert!(st.accepted.is_empty());
    assert_eq!(st.rejected.len(), 1);
    assert!(st.iterations <= 3);
    assert_eq!(st.coverage, rat("1"));
}

fn audit_partition(m: &ParametricModel, sp: &Specification, st: &PartitionState) {
    // deterministic interior probes of every decided box
    for (regions, expect) in [(&st.accepted, true), (&st.rejected, false)] {
        for region in regions.iter() {
            for (i, j) in [(1, 2), (2, 1), (1, 1)] {
                let point = Instantiation::new(
                    region
                        .intervals()
                        .iter()
                        .enumerate()
                        .map(|(d, (v, lo, hi))| {
                            let t = Rational::new(
                                ((i + j + d) as i64 % 3 + 1).into(),
                                4.into(),
                            );
                            (*v, lo + (hi - lo) * t)
                        })
                        .collect(),
                );
                let s = evaluate_sample(m, sp, SchedulerQuantifier::Demonic, point).unwrap();
                assert_eq!(
                    s.satisfies, expect,
                    "misclassified point {} in {:?} box",
                    s.point, expect
                );
            }
        }
    }
}

#[test]
fn knuth_yao_partition_reaches_coverage_and_is_sound() {
    let m = model(KYDIE);
    let sp = spec("P > 3/20 reach two");
    let space = region("1/100<=p<=99/100, 1/100<=q<=99/100");
    let cfg = lifting_config();
    let st = refine(&m, &sp, &space, &cfg).unwrap();
    assert_eq!(st.stop, StopReason::CoverageReached);
    assert!(st.coverage >= rat("95/100"));
    assert!(!st.accepted.is_empty());
    assert!(!st.rejected.is_empty());
    audit_partition(&m, &sp, &st);
    // conservation: decided plus queued sizes equal the space size
    let mut total = Rational::zero();
    for r in st.accepted.iter().chain(&st.rejected).chain(&st.queue) {
        total += r.size();
    }
    assert_eq!(total, space.size());
}

#[test]
fn growing_rectangles_also_converges() {
    let m = model(KYDIE);
    let sp = spec("P > 3/20 reach two");
    let space = region("1/100<=p<=99/100, 1/100<=q<=99/100");
    let cfg = PartitionConfig {
        splitter: Splitter::GrowingRectangles,
        coverage: rat("9/10"),
        ..lifting_config()
    };
    let st = refine(&m, &sp, &space, &cfg).unwrap();
    assert_eq!(st.stop, StopReason::CoverageReached);
    assert!(st.coverage >= rat("9/10"));
    audit_partition(&m, &sp, &st);
}

#[test]
fn counterexamples_become_samples() {
    let m = model(TOY4);
    let sp = spec("P <= 3/5 reach target");
    let space = region("2/5<=p<=3/5, 1/5<=q<=1/2");
    let cfg = PartitionConfig {
        grid: 2,
        ..lifting_config()
    };
    let before = sample_grid(&m, &sp, &space, 2, SchedulerQuantifier::Demonic)
        .unwrap()
        .len();
    let st = refine(&m, &sp, &space, &cfg).unwrap();
    // the loop found its way to full coverage and gathered extra samples
    assert!(st.samples.len() >= before);
    assert!(st.coverage >= cfg.coverage);
    audit_partition(&m, &sp, &st);
}

#[test]
fn partition_is_deterministic() {
    let m = model(KYDIE);
    let sp = spec("P > 3/20 reach two");
    let space = region("1/100<=p<=99/100, 1/100<=q<=99/100");
    let cfg = lifting_config();
    let a = refine(&m, &sp, &space, &cfg).unwrap();
    let b = refine(&m, &sp, &space, &cfg).unwrap();
    assert_eq!(export_csv(&a), export_csv(&b));
    assert_eq!(export_svg(&a).unwrap(), export_svg(&b).unwrap());
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn exports_have_stable_shape() {
    let m = model(TOY4);
    let sp = spec("P <= 1 reach target");
    let space = region("1/10<=p<=9/10, 1/10<=q<=9/10");
    let st = refine(&m, &sp, &space, &lifting_config()).unwrap();
    let csv = export_csv(&st);
    assert!(csv.starts_with("xmin,xmax,ymin,ymax,status\n"));
    assert!(csv.contains("accepted"));
    let svg = export_svg(&st).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("#2e7d32"));
    // empty state renders header-only rows
    let empty = PartitionState {
        space: space.clone(),
        accepted: vec![],
        rejected: vec![],
        queue: vec![],
        samples: vec![],
        coverage: Rational::zero(),
        iterations: 0,
        engine_calls: 0,
        stop: StopReason::QueueExhausted,
    };
    assert_eq!(export_csv(&empty), "xmin,xmax,ymin,ymax,status\n");
}

#[test]
fn svg_rejects_non_planar_spaces() {
    let m = model(crate::testutil::GEOMETRIC);
    let sp = spec("E <= 2 reach target");
    let space = region("1/2<=p<=3/4");
    let st = refine(&m, &sp, &space, &lifting_config()).unwrap();
    assert!(matches!(
        export_svg(&st),
        Err(ExportError::DimensionUnsupported(1))
    ));
    let csv = export_csv(&st);
    assert!(csv.starts_with("p_min,p_max,status\n"));
}
