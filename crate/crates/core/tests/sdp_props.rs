mod common;

use common::{example1, scalar};
use fracnd::lmi::{build_problem, default_margin};
use fracnd::model::RMatrix;
use fracnd::sdpcore::{
    eig_bounds, solve_feasibility, LmiConstraint, LmiFeasibilityProblem, Sense, Solution,
    SolverOptions,
};
use fracnd::CertificateForm;
use proptest::prelude::*;

fn slab(lo: f64, hi: f64, margin: f64) -> LmiFeasibilityProblem {
    let one = RMatrix::from_element(1, 1, 1.0);
    LmiFeasibilityProblem {
        num_vars: 1,
        constraints: vec![
            LmiConstraint {
                name: "lower".into(),
                constant: RMatrix::from_element(1, 1, -lo),
                terms: vec![(0, one.clone())],
                sense: Sense::PositiveDefinite,
                margin,
            },
            LmiConstraint {
                name: "upper".into(),
                constant: RMatrix::from_element(1, 1, -hi),
                terms: vec![(0, one)],
                sense: Sense::NegativeDefinite,
                margin,
            },
        ],
        variable_metadata: vec![],
    }
}

fn satisfied(p: &LmiFeasibilityProblem, x: &[f64]) -> bool {
    p.constraints.iter().all(|c| {
        let (lo, hi) = eig_bounds(&c.evaluate(x)).unwrap();
        match c.sense {
            Sense::NegativeDefinite => hi <= -c.margin,
            Sense::PositiveDefinite => lo >= c.margin,
        }
    })
}

proptest! {
    #[test]
    fn slab_answers_round_trip(lo in -5.0f64..5.0, width in -2.0f64..4.0, margin in 0.0f64..0.5) {
        let p = slab(lo, lo + width, margin);
        match solve_feasibility(&p, &SolverOptions::default()).unwrap() {
            Solution::Feasible { x, slack, .. } => {
                prop_assert!(slack < 0.0);
                prop_assert!(satisfied(&p, &x));
                prop_assert!(width > 2.0 * margin);
            }
            Solution::Infeasible { best_slack, .. } => {
                prop_assert!(best_slack >= 0.0);
                prop_assert!(width <= 2.0 * margin + 1e-6);
            }
        }
    }

    #[test]
    fn larger_margins_never_restore_feasibility(lo in -3.0f64..3.0, width in 0.0f64..2.0) {
        let mut seen_infeasible = false;
        for margin in [0.0, 0.05, 0.2, 0.5, 0.9, 1.5] {
            let feasible = solve_feasibility(&slab(lo, lo + width, margin), &SolverOptions::default())
                .unwrap()
                .is_feasible();
            prop_assert!(!(seen_infeasible && feasible));
            seen_infeasible |= !feasible;
        }
    }
}

#[test]
fn nested_margins_on_scalar_models() {
    for a in [0.5, 0.9, 2.0] {
        let m = scalar(0.5, 0, a);
        for form in [CertificateForm::Theorem2, CertificateForm::Corollary1] {
            let mut verdicts = Vec::new();
            for margin in [1e-8, 1e-6, 1e-3, 1e-1, 0.5] {
                let (p, _) = build_problem(&m, form, margin).unwrap();
                verdicts.push(
                    solve_feasibility(&p, &SolverOptions::default())
                        .unwrap()
                        .is_feasible(),
                );
            }
            assert!(
                verdicts.windows(2).all(|w| w[0] || !w[1]),
                "a={a} {form}: {verdicts:?}"
            );
            assert_eq!(verdicts[0], a < 1.0, "a={a} {form}");
        }
    }
}

#[test]
fn deterministic_answers() {
    let m = example1();
    let (p, _) = build_problem(&m, CertificateForm::Theorem2, default_margin(&m)).unwrap();
    let first = solve_feasibility(&p, &SolverOptions::default()).unwrap();
    for _ in 0..3 {
        assert_eq!(
            solve_feasibility(&p, &SolverOptions::default()).unwrap(),
            first
        );
    }
    let Solution::Feasible { x, .. } = first else {
        panic!("expected feasible")
    };
    assert!(satisfied(&p, &x));
}

#[test]
fn example1_problem_symmetric_data() {
    let m = example1();
    let (p, _) = build_problem(&m, CertificateForm::Theorem2, default_margin(&m)).unwrap();
    p.validate().unwrap();
    for c in &p.constraints {
        for (_, f) in &c.terms {
            assert!((f - f.transpose()).amax() <= 1e-12);
        }
    }
}
