mod common;

use std::collections::BTreeSet;

use common::{env_enforceable, env_lasso, oracle_verdict, random_spec, random_specs, Compiled, OracleVerdict};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use repair_core::game::{check_realizability, SynthesisResult};
use repair_core::ltl::GR1Spec;
use repair_core::miner::{apply_candidate, mine_candidates, MinerError, MiningReport, RejectReason};

fn unrealizable(seed: u64, want: usize) -> Vec<(GR1Spec, repair_core::game::CounterStrategy)> {
    let mut out = Vec::new();
    for spec in random_specs(seed, 20 * want) {
        if let Ok(SynthesisResult::Unrealizable(cs)) = check_realizability(&spec) {
            out.push((spec, cs));
            if out.len() == want {
                break;
            }
        }
    }
    out
}

fn lits(c: &repair_core::miner::AssumptionCandidate) -> BTreeSet<(String, bool)> {
    c.literals().iter().map(|l| (l.prop.clone(), l.positive)).collect()
}

fn check_report(spec: &GR1Spec, report: &MiningReport) -> Result<(), String> {
    let ctx = spec.dump_json();
    for (k, c) in report.candidates.iter().enumerate() {
        let repaired = apply_candidate(spec, c).map_err(|e| format!("{ctx}: {e}"))?;
        let rc = Compiled::new(&repaired);
        if oracle_verdict(&rc) != OracleVerdict::Realizable {
            return Err(format!("{ctx}: accepted {} leaves the spec unrealizable", c.formula()));
        }
        if !env_lasso(&rc) || !env_enforceable(&rc) {
            return Err(format!("{ctx}: accepted {} is not satisfiable by the environment", c.formula()));
        }
        for earlier in &report.candidates[..k] {
            if lits(earlier).is_subset(&lits(c)) {
                return Err(format!("{ctx}: {} is a superset of accepted {}", c.formula(), earlier.formula()));
            }
        }
    }
    for (c, why) in &report.rejected {
        let rc = Compiled::new(&apply_candidate(spec, c).map_err(|e| e.to_string())?);
        let consistent = match why {
            RejectReason::StillUnrealizable => oracle_verdict(&rc) != OracleVerdict::Realizable,
            RejectReason::EnvUnsatisfiable => !env_lasso(&rc),
            RejectReason::EnvNotEnforceable => !env_enforceable(&rc),
        };
        if !consistent {
            return Err(format!("{ctx}: {} rejected as {why:?} but the oracle disagrees", c.formula()));
        }
    }
    let keys: Vec<_> = report.candidates.iter().map(|c| c.rank_key.clone()).collect();
    if keys.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("{ctx}: candidates out of rank order"));
    }
    Ok(())
}

#[test]
fn accepted_candidates_repair_and_are_env_satisfiable() {
    let cases = unrealizable(77, 100);
    assert_eq!(cases.len(), 100);
    let mut repaired = 0;
    for (spec, cs) in &cases {
        let report = mine_candidates(spec, cs, 2).unwrap();
        check_report(spec, &report).unwrap();
        repaired += usize::from(!report.candidates.is_empty());
        // deterministic
        let again = mine_candidates(spec, cs, 2).unwrap();
        assert_eq!(report.to_json(), again.to_json());
    }
    assert!(repaired >= 10, "only {repaired} of 100 specs had a repair");
}

#[test]
fn realizable_specs_are_refused() {
    let spec = random_specs(5, 50)
        .into_iter()
        .find(|s| matches!(check_realizability(s), Ok(SynthesisResult::Realizable(_))))
        .unwrap();
    let other = unrealizable(9, 1).pop().unwrap().1;
    assert_eq!(mine_candidates(&spec, &other, 2).unwrap_err(), MinerError::NotUnrealizable);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, .. ProptestConfig::default() })]

    #[test]
    fn mining_invariants_hold(seed in any::<u64>(), ns in 1usize..=3, ny in 1usize..=2, limit in 1usize..=2) {
        let spec = random_spec(&mut StdRng::seed_from_u64(seed), ns, ny);
        let Ok(SynthesisResult::Unrealizable(cs)) = check_realizability(&spec) else {
            return Ok(());
        };
        let report = mine_candidates(&spec, &cs, limit).unwrap();
        prop_assert!(report.candidates.iter().chain(&report.partial).all(|c| c.literals().len() <= limit));
        if let Err(e) = check_report(&spec, &report) {
            prop_assert!(false, "{}", e);
        }
        for c in &report.candidates {
            let twice = apply_candidate(&apply_candidate(&spec, c).unwrap(), c);
            prop_assert!(matches!(twice, Err(MinerError::DuplicateAssumption(_))));
        }
    }
}
