//! Subjective Logic opinions and the two operators used to propagate trust:
//! discounting (trust in a recommender applied to its opinion) and consensus
//! (fusion of independent opinions about the same target).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for the `b + d + u = 1` and range checks.
pub const OPINION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpinionError {
    #[error("malformed opinion (b={belief}, d={disbelief}, u={uncertainty})")]
    Malformed {
        belief: f64,
        disbelief: f64,
        uncertainty: f64,
    },
    #[error("consensus of two dogmatic opinions (u = 0) is undefined")]
    DogmaticConsensus,
}

/// A binomial opinion `(b, d, u)` with `b + d + u = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Opinion {
    pub belief: f64,
    pub disbelief: f64,
    pub uncertainty: f64,
}

impl Opinion {
    /// The vacuous opinion `(0, 0, 1)`.
    pub const VACUOUS: Opinion = Opinion {
        belief: 0.0,
        disbelief: 0.0,
        uncertainty: 1.0,
    };

    /// Builds an opinion, rejecting triples that violate the invariants.
    pub fn new(belief: f64, disbelief: f64, uncertainty: f64) -> Result<Self, OpinionError> {
        let o = Opinion {
            belief,
            disbelief,
            uncertainty,
        };
        if o.is_valid() {
            Ok(o)
        } else {
            Err(o.malformed())
        }
    }

    /// True iff every component is in `[0, 1]` and the components sum to one,
    /// both within [`OPINION_TOLERANCE`].
    pub fn is_valid(&self) -> bool {
        let in_range =
            |x: f64| x.is_finite() && (-OPINION_TOLERANCE..=1.0 + OPINION_TOLERANCE).contains(&x);
        in_range(self.belief)
            && in_range(self.disbelief)
            && in_range(self.uncertainty)
            && (self.sum() - 1.0).abs() <= OPINION_TOLERANCE
    }

    pub fn is_vacuous(&self) -> bool {
        self.uncertainty >= 1.0
    }

    fn sum(&self) -> f64 {
        self.belief + self.disbelief + self.uncertainty
    }

    fn malformed(&self) -> OpinionError {
        OpinionError::Malformed {
            belief: self.belief,
            disbelief: self.disbelief,
            uncertainty: self.uncertainty,
        }
    }

    fn check(&self) -> Result<(), OpinionError> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(self.malformed())
        }
    }

    /// Removes floating-point drift from an operator output. Only drift below
    /// the tolerance is corrected; anything larger is reported as malformed.
    fn renormalized(self) -> Result<Self, OpinionError> {
        let sum = self.sum();
        if !sum.is_finite() || (sum - 1.0).abs() > OPINION_TOLERANCE {
            return Err(self.malformed());
        }
        let o = if sum == 1.0 {
            self
        } else {
            Opinion {
                belief: self.belief / sum,
                disbelief: self.disbelief / sum,
                uncertainty: self.uncertainty / sum,
            }
        };
        o.check()?;
        Ok(o)
    }
}

/// Standalone form of [`Opinion::is_valid`].
pub fn validate(o: &Opinion) -> bool {
    o.is_valid()
}

/// Discounting: the opinion `recommended` held by a recommender, seen through
/// `recommender_trust` (the holder's trust in that recommender).
///
/// `b' = bR·b`, `d' = bR·d`, `u' = dR + uR + bR·u`.
pub fn discount(
    recommender_trust: &Opinion,
    recommended: &Opinion,
) -> Result<Opinion, OpinionError> {
    recommender_trust.check()?;
    recommended.check()?;
    let r = recommender_trust;
    Opinion {
        belief: r.belief * recommended.belief,
        disbelief: r.belief * recommended.disbelief,
        uncertainty: r.disbelief + r.uncertainty + r.belief * recommended.uncertainty,
    }
    .renormalized()
}

/// Consensus of two independent opinions about the same target.
///
/// With `κ = uA + uB − uA·uB`:
/// `b' = (bA·uB + bB·uA)/κ`, `d' = (dA·uB + dB·uA)/κ`, `u' = uA·uB/κ`.
pub fn consensus(a: &Opinion, b: &Opinion) -> Result<Opinion, OpinionError> {
    a.check()?;
    b.check()?;
    let kappa = a.uncertainty + b.uncertainty - a.uncertainty * b.uncertainty;
    if kappa <= 0.0 {
        return Err(OpinionError::DogmaticConsensus);
    }
    Opinion {
        belief: (a.belief * b.uncertainty + b.belief * a.uncertainty) / kappa,
        disbelief: (a.disbelief * b.uncertainty + b.disbelief * a.uncertainty) / kappa,
        uncertainty: (a.uncertainty * b.uncertainty) / kappa,
    }
    .renormalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn op(b: f64, d: f64, u: f64) -> Opinion {
        Opinion::new(b, d, u).unwrap()
    }

    fn assert_op_eq(x: Opinion, y: Opinion, eps: f64) {
        assert_abs_diff_eq!(x.belief, y.belief, epsilon = eps);
        assert_abs_diff_eq!(x.disbelief, y.disbelief, epsilon = eps);
        assert_abs_diff_eq!(x.uncertainty, y.uncertainty, epsilon = eps);
    }

    prop_compose! {
        fn any_opinion()(x in 0.0f64..=1.0, y in 0.0f64..=1.0) -> Opinion {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            Opinion { belief: lo, disbelief: hi - lo, uncertainty: 1.0 - hi }
        }
    }

    prop_compose! {
        fn uncertain_opinion()(o in any_opinion(), u in 1e-3f64..=1.0) -> Opinion {
            // rescale so that uncertainty is at least `u`-ish and never zero
            let mass = 1.0 - u;
            let bd = o.belief + o.disbelief;
            if bd == 0.0 {
                Opinion { belief: 0.0, disbelief: mass, uncertainty: u }
            } else {
                Opinion { belief: o.belief / bd * mass, disbelief: o.disbelief / bd * mass, uncertainty: u }
            }
        }
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&Opinion {
            belief: 0.5,
            disbelief: 0.3,
            uncertainty: 0.2
        }));
        assert!(!validate(&Opinion {
            belief: 0.5,
            disbelief: 0.6,
            uncertainty: 0.2
        }));
        assert!(validate(&Opinion {
            belief: 1.0,
            disbelief: 0.0,
            uncertainty: 0.0
        }));
        assert!(!validate(&Opinion {
            belief: -0.1,
            disbelief: 0.6,
            uncertainty: 0.5
        }));
        assert!(!validate(&Opinion {
            belief: f64::NAN,
            disbelief: 0.0,
            uncertainty: 1.0
        }));
    }

    #[test]
    fn full_trust_is_identity() {
        let w = op(0.5, 0.3, 0.2);
        assert_op_eq(discount(&op(1.0, 0.0, 0.0), &w).unwrap(), w, 1e-12);
    }

    #[test]
    fn total_distrust_is_vacuous() {
        let r = discount(&op(0.0, 1.0, 0.0), &op(0.7, 0.2, 0.1)).unwrap();
        assert_eq!(r, Opinion::VACUOUS);
    }

    #[test]
    fn discount_hand_computed() {
        let r = discount(&op(0.8, 0.1, 0.1), &op(0.5, 0.3, 0.2)).unwrap();
        assert_op_eq(r, op(0.40, 0.24, 0.36), 1e-12);
    }

    #[test]
    fn consensus_hand_computed() {
        let r = consensus(&op(0.6, 0.2, 0.2), &op(0.4, 0.4, 0.2)).unwrap();
        assert_op_eq(
            r,
            Opinion {
                belief: 0.2 / 0.36,
                disbelief: 0.12 / 0.36,
                uncertainty: 0.04 / 0.36,
            },
            1e-12,
        );
        assert_abs_diff_eq!(r.belief, 0.5556, epsilon = 1e-4);
        assert_abs_diff_eq!(r.disbelief, 0.3333, epsilon = 1e-4);
        assert_abs_diff_eq!(r.uncertainty, 0.1111, epsilon = 1e-4);
    }

    #[test]
    fn dogmatic_consensus_is_an_error() {
        let e = consensus(&op(1.0, 0.0, 0.0), &op(0.3, 0.7, 0.0)).unwrap_err();
        assert_eq!(e, OpinionError::DogmaticConsensus);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let bad = Opinion {
            belief: 0.5,
            disbelief: 0.6,
            uncertainty: 0.2,
        };
        assert!(matches!(
            discount(&bad, &Opinion::VACUOUS),
            Err(OpinionError::Malformed { .. })
        ));
        assert!(matches!(
            consensus(&Opinion::VACUOUS, &bad),
            Err(OpinionError::Malformed { .. })
        ));
        assert!(Opinion::new(0.2, 0.2, 0.2).is_err());
    }

    #[test]
    fn vacuous_with_zero_belief_annihilates() {
        let r = discount(&Opinion::VACUOUS, &op(0.9, 0.05, 0.05)).unwrap();
        assert_eq!(r, Opinion::VACUOUS);
    }

    proptest! {
        #[test]
        fn discount_closure_and_belief_product(r in any_opinion(), w in any_opinion()) {
            let out = discount(&r, &w).unwrap();
            prop_assert!(out.is_valid());
            prop_assert!(out.belief <= r.belief + 1e-15);
            prop_assert!((out.belief - r.belief * w.belief).abs() <= 1e-15);
        }

        #[test]
        fn consensus_closure_and_commutativity(a in uncertain_opinion(), b in any_opinion()) {
            let ab = consensus(&a, &b).unwrap();
            let ba = consensus(&b, &a).unwrap();
            prop_assert!(ab.is_valid());
            prop_assert!(ab.uncertainty <= a.uncertainty.min(b.uncertainty) + 1e-12);
            prop_assert!((ab.belief - ba.belief).abs() <= 1e-12);
            prop_assert!((ab.disbelief - ba.disbelief).abs() <= 1e-12);
            prop_assert!((ab.uncertainty - ba.uncertainty).abs() <= 1e-12);
        }

        #[test]
        fn consensus_is_associative(a in uncertain_opinion(), b in uncertain_opinion(), c in uncertain_opinion()) {
            let left = consensus(&consensus(&a, &b).unwrap(), &c).unwrap();
            let right = consensus(&a, &consensus(&b, &c).unwrap()).unwrap();
            prop_assert!((left.belief - right.belief).abs() <= 1e-9);
            prop_assert!((left.disbelief - right.disbelief).abs() <= 1e-9);
            prop_assert!((left.uncertainty - right.uncertainty).abs() <= 1e-9);
        }

        #[test]
        fn vacuous_is_consensus_identity(a in any_opinion()) {
            let r = consensus(&a, &Opinion::VACUOUS).unwrap();
            prop_assert!((r.belief - a.belief).abs() <= 1e-12);
            prop_assert!((r.disbelief - a.disbelief).abs() <= 1e-12);
            prop_assert!((r.uncertainty - a.uncertainty).abs() <= 1e-12);
        }
    }
}
