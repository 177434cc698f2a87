use serde::{Deserialize, Serialize};

/// Beta posterior on one dose's toxicity probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BetaPosterior {
    fn default() -> Self {
        Self::uniform()
    }
}

impl BetaPosterior {
    pub fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    /// `Beta(S + 1, N - S + 1)` from raw counts under a uniform prior.
    pub fn from_counts(patients: u32, toxicities: u32) -> Self {
        Self {
            alpha: f64::from(toxicities) + 1.0,
            beta: f64::from(patients - toxicities) + 1.0,
        }
    }

    #[must_use]
    pub fn update(self, toxic: bool) -> Self {
        if toxic {
            Self {
                alpha: self.alpha + 1.0,
                ..self
            }
        } else {
            Self {
                beta: self.beta + 1.0,
                ..self
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_examples() {
        assert_eq!(BetaPosterior::uniform(), BetaPosterior::from_counts(0, 0));
        assert_eq!(
            BetaPosterior::from_counts(6, 2),
            BetaPosterior { alpha: 3.0, beta: 5.0 }
        );
        assert_eq!(
            BetaPosterior { alpha: 3.0, beta: 5.0 }.update(true),
            BetaPosterior { alpha: 4.0, beta: 5.0 }
        );
        let post = [false, true, false, false, true, false]
            .iter()
            .fold(BetaPosterior::uniform(), |p, &x| p.update(x));
        assert_eq!(post, BetaPosterior::from_counts(6, 2));
    }
}
