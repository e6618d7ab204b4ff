mod common;

use common::{small_formulas, small_lassos, unfold};
use proptest::prelude::*;
use repair_core::ltl::{eval_trace, Formula, Valuation};

#[test]
fn eval_trace_matches_unfolding_exhaustively() {
    let formulas = small_formulas(2);
    let lassos = small_lassos(3);
    assert!(formulas.len() > 10_000 && lassos.len() > 200);
    let mut checked = 0usize;
    for f in &formulas {
        for (trace, lb) in &lassos {
            let want = unfold(f, trace, *lb, 0);
            let got = eval_trace(f, trace, *lb).unwrap();
            assert_eq!(got, want, "{f} on {trace:?} loop {lb}");
            checked += 1;
        }
    }
    assert_eq!(checked, formulas.len() * lassos.len());
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just(Formula::True), Just(Formula::False), Just(Formula::prop("a")), Just(Formula::prop("b"))];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            inner.clone().prop_map(|f| Formula::Next(Box::new(f))),
            inner.clone().prop_map(|f| Formula::Always(Box::new(f))),
            inner.clone().prop_map(|f| Formula::Eventually(Box::new(f))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::And(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Or(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::Until(Box::new(a), Box::new(b))),
        ]
    })
}

fn lasso() -> impl Strategy<Value = (Vec<Valuation>, usize)> {
    prop::collection::vec((any::<bool>(), any::<bool>()), 1..6).prop_flat_map(|bits| {
        let n = bits.len();
        let trace: Vec<Valuation> = bits.into_iter().map(|(a, b)| Valuation::from_pairs([("a", a), ("b", b)])).collect();
        (Just(trace), 0..n)
    })
}

proptest! {
    #[test]
    fn deeper_formulas_on_longer_lassos((trace, lb) in lasso(), f in formula()) {
        prop_assert_eq!(eval_trace(&f, &trace, lb).unwrap(), unfold(&f, &trace, lb, 0));
    }

    #[test]
    fn always_is_not_eventually_not((trace, lb) in lasso(), f in formula()) {
        let g = Formula::Always(Box::new(f.clone()));
        let h = Formula::Not(Box::new(Formula::Eventually(Box::new(Formula::Not(Box::new(f))))));
        prop_assert_eq!(eval_trace(&g, &trace, lb).unwrap(), eval_trace(&h, &trace, lb).unwrap());
    }

    #[test]
    fn unrolling_the_loop_changes_nothing((trace, lb) in lasso(), f in formula()) {
        // trace[..lb] (trace[lb..])^ω equals trace ++ trace[lb..] looping at the old end
        let mut longer = trace.clone();
        longer.extend(trace[lb..].iter().cloned());
        prop_assert_eq!(eval_trace(&f, &trace, lb).unwrap(), eval_trace(&f, &longer, trace.len()).unwrap());
    }
}
