//! Exact analysis of one coin flipping round.

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;

/// A distribution over secret payloads.
pub type Dist<T> = Vec<(u32, T)>;

pub fn uniform_bit<T: One + Clone + std::ops::Div<Output = T> + std::ops::Add<Output = T>>() -> Dist<T> {
    let half = T::one() / (T::one() + T::one());
    vec![(0, half.clone()), (1, half)]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundOutcome {
    /// Secrets equal: A wins the flip.
    AWins,
    BWins,
    /// B cannot open the first put: A wins by timeout.
    BBlocked,
}

/// Who wins one round given the two payloads, following the guard
/// `0 <= b <= 1` and the comparison `a = b`.
pub fn round_outcome(a: u32, b: u32) -> RoundOutcome {
    if b > 1 {
        RoundOutcome::BBlocked
    } else if a == b {
        RoundOutcome::AWins
    } else {
        RoundOutcome::BWins
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRow<T> {
    pub a: u32,
    pub b: u32,
    pub probability: T,
    pub outcome: RoundOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundAnalysis<T> {
    pub rows: Vec<RoundRow<T>>,
    /// Probability that A takes the round, by flip or by timeout.
    pub a_wins: T,
}

/// Enumerates every pair of payloads with its probability.
pub fn round_analysis<T>(a: &Dist<T>, b: &Dist<T>) -> RoundAnalysis<T>
where
    T: Zero + Clone + std::ops::Mul<Output = T>,
{
    let mut rows = Vec::new();
    let mut a_wins = T::zero();
    for (x, px) in a {
        for (y, py) in b {
            let probability = px.clone() * py.clone();
            let outcome = round_outcome(*x, *y);
            if outcome != RoundOutcome::BWins {
                a_wins = a_wins + probability.clone();
            }
            rows.push(RoundRow { a: *x, b: *y, probability, outcome });
        }
    }
    RoundAnalysis { rows, a_wins }
}

/// Both players rational, in exact arithmetic.
pub fn exhaustive_round_analysis() -> RoundAnalysis<Ratio<i64>> {
    round_analysis(&uniform_bit(), &uniform_bit())
}

/// Expected take `p` of the last flip winner when the game would go on:
/// the solution of `p = w*pot + (1-w)*(w*p + (1-w)*0)`, where `w` is the
/// probability of winning a flip.
pub fn split_fixed_point<T>(pot: T, w: T) -> T
where
    T: One + Clone + std::ops::Sub<Output = T> + std::ops::Mul<Output = T> + std::ops::Div<Output = T>,
{
    let lose = T::one() - w.clone();
    w.clone() * pot / (T::one() - lose * w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn rational_round_is_a_fair_coin() {
        let a = exhaustive_round_analysis();
        assert_eq!(a.rows.len(), 4);
        assert!(a.rows.iter().all(|row| row.probability == r(1, 4)));
        assert_eq!(a.a_wins, r(1, 2));
    }

    #[test]
    fn out_of_range_secrets() {
        // A playing 2 never matches; B playing 7 is blocked by the guard.
        let bad_a = round_analysis(&vec![(2, r(1, 1))], &uniform_bit());
        assert_eq!(bad_a.a_wins, r(0, 1));
        let bad_b = round_analysis(&uniform_bit(), &vec![(7, r(1, 1))]);
        assert_eq!(bad_b.a_wins, r(1, 1));
    }

    #[test]
    fn biased_opponent_is_exploitable() {
        let zero = vec![(0, r(1, 1))];
        assert_eq!(round_analysis(&zero, &zero).a_wins, r(1, 1));
        assert_eq!(round_analysis(&uniform_bit(), &zero).a_wins, r(1, 2));
    }

    #[test]
    fn split_amounts() {
        let p = split_fixed_point(r(6, 1), r(1, 2));
        assert_eq!(p, r(4, 1));
        assert_eq!(p, r(3, 1) + p / 4);
        assert_eq!(r(6, 1) - p, r(2, 1));
    }

    // Oracle: iterate the recurrence in floating point.
    #[test]
    fn fixed_point_agrees_with_iteration() {
        for w in [0.5f64, 0.3, 0.9] {
            let mut p = 0.0;
            for _ in 0..200 {
                p = w * 6.0 + (1.0 - w) * (w * p);
            }
            assert!((split_fixed_point(6.0, w) - p).abs() < 1e-9);
        }
    }
}
