use super::{Phase, Reason, Recommendation, TrialState};

/// Lowest dose that has not yet received a cohort.
pub fn startup_select(state: &TrialState) -> usize {
    debug_assert_eq!(state.phase, Phase::Startup);
    state.next_untested().unwrap_or(state.doses() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscalationStep {
    Treat(usize),
    Stop(Recommendation),
}

/// Classical 3+3 in cohorts of three: escalate on 0/3 or at most 1/6,
/// repeat on 1/3, stop on two or more toxicities at a dose.
pub fn three_plus_three_step(state: &TrialState) -> EscalationStep {
    let Some(last) = state.log.last() else {
        return EscalationStep::Treat(0);
    };
    let d = last.dose;
    let n = state.tox.patients[d];
    let s = state.tox.toxicities[d];
    if s >= 2 {
        return EscalationStep::Stop(three_plus_three_recommend(state));
    }
    if n < 6 && s == 1 {
        return EscalationStep::Treat(d);
    }
    if n < 3 {
        return EscalationStep::Treat(d);
    }
    if d + 1 < state.doses() {
        EscalationStep::Treat(d + 1)
    } else {
        EscalationStep::Stop(Recommendation::dose(d))
    }
}

/// Highest dose cleared by the escalation rule.
pub fn three_plus_three_recommend(state: &TrialState) -> Recommendation {
    let cleared = (0..state.doses()).rev().find(|&d| {
        let n = state.tox.patients[d];
        let s = state.tox.toxicities[d];
        (n >= 3 && s == 0) || (n >= 6 && s <= 1)
    });
    match cleared {
        Some(d) => Recommendation::dose(d),
        None if state.tox.toxicities.iter().any(|&s| s >= 2) => Recommendation::none(Reason::EarlyStopToxicity),
        None => Recommendation::none(Reason::NoData),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::Outcome;
    use crate::Threshold;
    use alloc::vec;
    use alloc::vec::Vec;

    fn cohort(tox: usize) -> Vec<Outcome> {
        (0..3).map(|i| Outcome { tox: i < tox, eff: None }).collect()
    }

    fn state(k: usize) -> TrialState {
        TrialState::new(k, Threshold::new(0.3).unwrap(), 36, false, false)
    }

    fn run(k: usize, cohorts: &[usize]) -> (TrialState, EscalationStep) {
        let mut s = state(k);
        for &t in cohorts {
            match three_plus_three_step(&s) {
                EscalationStep::Treat(d) => s.apply_cohort(d, &cohort(t)).unwrap(),
                EscalationStep::Stop(_) => panic!("stopped early"),
            }
        }
        let step = three_plus_three_step(&s);
        (s, step)
    }

    #[test]
    fn escalation_examples() {
        assert_eq!(run(6, &[]).1, EscalationStep::Treat(0));
        assert_eq!(run(6, &[0, 0]).1, EscalationStep::Treat(2));
        assert_eq!(run(6, &[2]).1, EscalationStep::Stop(Recommendation::none(Reason::EarlyStopToxicity)));
        assert_eq!(run(6, &[0, 1]).1, EscalationStep::Treat(1));
        assert_eq!(run(6, &[0, 1, 0]).1, EscalationStep::Treat(2));
        assert_eq!(run(6, &[0, 1, 1]).1, EscalationStep::Stop(Recommendation::dose(0)));
        assert_eq!(run(6, &[0, 0, 3]).1, EscalationStep::Stop(Recommendation::dose(1)));
        assert_eq!(run(2, &[0, 0]).1, EscalationStep::Stop(Recommendation::dose(1)));
    }

    #[test]
    fn startup_walks_up() {
        let mut s = TrialState::new(3, Threshold::new(0.3).unwrap(), 36, false, true);
        assert_eq!(startup_select(&s), 0);
        s.apply_cohort(0, &cohort(0)).unwrap();
        assert_eq!(startup_select(&s), 1);
        s.apply_cohort(1, &cohort(1)).unwrap();
        assert_eq!(s.phase, Phase::Adaptive);
    }

    /// Exhaustive walk over every cohort outcome sequence.
    #[test]
    fn no_reachable_state_treats_a_seventh_patient_at_a_dose() {
        let mut stack = vec![state(6)];
        let mut visited = 0usize;
        while let Some(s) = stack.pop() {
            visited += 1;
            if let EscalationStep::Treat(d) = three_plus_three_step(&s) {
                assert!(s.tox.patients[d] + 3 <= 6, "{:?}", s.tox);
                for t in 0..=3 {
                    let mut next = s.clone();
                    next.apply_cohort(d, &cohort(t)).unwrap();
                    stack.push(next);
                }
            }
        }
        assert!(visited > 100);
    }
}
