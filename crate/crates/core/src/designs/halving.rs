use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::argmin_distance;
use crate::{Error, Result, Threshold};

fn rounds(doses: usize) -> usize {
    doses.next_power_of_two().trailing_zeros() as usize
}

/// Per-dose allocation `t_r` of each phase.
pub fn halving_schedule(doses: usize, budget: usize) -> Result<Vec<usize>> {
    if doses < 2 {
        return Err(Error::TooFewDoses(doses));
    }
    let r = rounds(doses);
    if budget < doses * r {
        return Err(Error::BudgetTooSmall { budget, doses });
    }
    let mut alive = doses;
    let mut t = Vec::with_capacity(r);
    for _ in 0..r {
        t.push(budget / (alive * r));
        alive = alive.div_ceil(2);
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalvingStep {
    /// Give `patients` consecutive patients dose `dose`.
    Treat { dose: usize, patients: usize },
    Done(usize),
}

/// Sequential Halving for MTD identification as an incremental schedule.
/// Each phase's elimination uses only that phase's outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialHalving {
    theta: Threshold,
    schedule: Vec<usize>,
    phase: usize,
    survivors: Vec<usize>,
    /// Index into `survivors` of the next dose to allocate this phase.
    cursor: usize,
    phase_toxicities: Vec<u32>,
}

impl SequentialHalving {
    pub fn new(doses: usize, theta: Threshold, budget: usize) -> Result<Self> {
        Ok(Self {
            theta,
            schedule: halving_schedule(doses, budget)?,
            phase: 0,
            survivors: (0..doses).collect(),
            cursor: 0,
            phase_toxicities: vec![0; doses],
        })
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    pub fn next(&self) -> HalvingStep {
        if self.phase == self.schedule.len() {
            return HalvingStep::Done(self.survivors[0]);
        }
        HalvingStep::Treat {
            dose: self.survivors[self.cursor],
            patients: self.schedule[self.phase],
        }
    }

    /// Records the outcome of the allocation returned by [`Self::next`].
    pub fn observe(&mut self, dose: usize, toxicities: u32) -> Result<()> {
        match self.next() {
            HalvingStep::Treat { dose: d, .. } if d == dose => {}
            _ => return Err(Error::DoseOutOfRange(dose)),
        }
        self.phase_toxicities[dose] = toxicities;
        self.cursor += 1;
        if self.cursor == self.survivors.len() {
            self.eliminate();
        }
        Ok(())
    }

    fn eliminate(&mut self) {
        let t = self.schedule[self.phase] as f64;
        let keep = self.survivors.len().div_ceil(2);
        let mut pool: Vec<usize> = self.survivors.clone();
        let mut kept = Vec::with_capacity(keep);
        for _ in 0..keep {
            let means: Vec<f64> = pool.iter().map(|&k| f64::from(self.phase_toxicities[k]) / t).collect();
            let i = argmin_distance(&means, self.theta.value());
            kept.push(pool.remove(i));
        }
        kept.sort_unstable();
        self.survivors = kept;
        self.cursor = 0;
        self.phase += 1;
        self.phase_toxicities.iter_mut().for_each(|x| *x = 0);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalvingOutcome {
    pub recommended: usize,
    pub allocations: Vec<u32>,
}

/// Runs the whole schedule against Bernoulli toxicities `p_true`.
pub fn sequential_halving_run<R: Rng + ?Sized>(
    p_true: &[f64],
    theta: Threshold,
    budget: usize,
    rng: &mut R,
) -> Result<HalvingOutcome> {
    crate::stats::check_probabilities(p_true)?;
    let mut sh = SequentialHalving::new(p_true.len(), theta, budget)?;
    let mut allocations = vec![0u32; p_true.len()];
    loop {
        match sh.next() {
            HalvingStep::Done(recommended) => return Ok(HalvingOutcome { recommended, allocations }),
            HalvingStep::Treat { dose, patients } => {
                let tox = (0..patients).filter(|_| rng.random::<f64>() < p_true[dose]).count() as u32;
                allocations[dose] += patients as u32;
                sh.observe(dose, tox)?;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mtd_index;
    use crate::RngSeed;
    use proptest::prelude::*;

    fn th(t: f64) -> Threshold {
        Threshold::new(t).unwrap()
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(halving_schedule(6, 36).unwrap(), vec![2, 4, 6]);
        assert_eq!(halving_schedule(2, 37).unwrap(), vec![18]);
        assert_eq!(halving_schedule(4, 2000).unwrap(), vec![250, 500]);
        assert_eq!(halving_schedule(6, 17), Err(Error::BudgetTooSmall { budget: 17, doses: 6 }));
    }

    #[test]
    fn deterministic_outcomes_find_the_mtd() {
        let p = [0.0, 0.0, 1.0, 1.0, 1.0];
        for t in [0.1, 0.4, 0.6, 0.9] {
            let out = sequential_halving_run(&p, th(t), 60, &mut RngSeed(1).stream(1)).unwrap();
            assert_eq!(out.recommended, mtd_index(&p, th(t)));
        }
    }

    #[test]
    fn two_doses_single_phase() {
        let out = sequential_halving_run(&[0.0, 1.0], th(0.7), 11, &mut RngSeed(2).stream(1)).unwrap();
        assert_eq!(out.allocations, vec![5, 5]);
        assert_eq!(out.recommended, 1);
    }

    proptest! {
        #[test]
        fn allocations_within_budget(k in 2usize..=10, extra in 0usize..200, seed in any::<u64>()) {
            let r = rounds(k);
            let n = k * r + extra;
            prop_assume!(n <= 200);
            let t = halving_schedule(k, n).unwrap();
            let mut alive = k;
            let mut total = 0;
            for &tr in &t {
                prop_assert!(tr >= 1);
                total += alive * tr;
                alive = alive.div_ceil(2);
            }
            prop_assert_eq!(alive, 1);
            prop_assert!(total <= n);
            let p: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect();
            let out = sequential_halving_run(&p, th(0.3), n, &mut RngSeed(seed).stream(1)).unwrap();
            prop_assert_eq!(out.allocations.iter().map(|&a| a as usize).sum::<usize>(), total);
        }
    }
}
