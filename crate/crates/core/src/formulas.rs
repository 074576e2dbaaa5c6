//! Closed forms for the five named problem families.
//!
//! Each function returns a bracket [lower, upper] for the optimal success
//! probability, with `exact` set when the two sides coincide. Bounds are
//! exact rationals wherever the closed form is rational; only the
//! evaluation family's upper bound is a transcendental expression and is
//! carried as a double. Brackets are clamped into [0, 1], with the trivial
//! guessing probability 1/|cosets| as the floor.

use crate::algebra::is_prime;
use crate::error::{QocError, Result};
use num::{BigInt, BigRational, One, ToPrimitive, Zero};

/// One side of a bracket: exact rational or floating point.
#[derive(Clone, Debug)]
pub enum BoundValue {
    Exact(BigRational),
    Approx(f64),
}

impl BoundValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            BoundValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            BoundValue::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            BoundValue::Exact(r) => Some(r),
            BoundValue::Approx(_) => None,
        }
    }

    fn at_most(&self, value: &BigRational) -> bool {
        match self {
            BoundValue::Exact(r) => r <= value,
            BoundValue::Approx(x) => *x <= value.to_f64().unwrap_or(f64::NAN),
        }
    }

    fn at_least(&self, value: &BigRational) -> bool {
        match self {
            BoundValue::Exact(r) => r >= value,
            BoundValue::Approx(x) => *x >= value.to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// Bracket for an optimal success probability.
#[derive(Clone, Debug)]
pub struct BoundBracket {
    pub lower: BoundValue,
    pub upper: BoundValue,
    pub exact: bool,
    pub regime: String,
}

impl BoundBracket {
    fn exact_point(value: BigRational, regime: impl Into<String>) -> Self {
        BoundBracket {
            lower: BoundValue::Exact(value.clone()),
            upper: BoundValue::Exact(value),
            exact: true,
            regime: regime.into(),
        }
    }

    /// Inclusive containment test.
    pub fn contains(&self, value: &BigRational) -> bool {
        self.lower.at_most(value) && self.upper.at_least(value)
    }
}

fn rat(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn rat_u(num: u64, den: u64) -> BigRational {
    rat(BigInt::from(num), BigInt::from(den))
}

fn big_pow(base: u128, e: u64) -> BigInt {
    num::pow::pow(BigInt::from(base), e as usize)
}

fn binom_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn clamp_unit(r: BigRational) -> BigRational {
    if r < BigRational::zero() {
        BigRational::zero()
    } else if r > BigRational::one() {
        BigRational::one()
    } else {
        r
    }
}

fn check_prime(p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(QocError::domain(format!("{p} is not prime")));
    }
    Ok(())
}

/// Exact optimum for learning the coset that determines a table's total sum:
/// min(floor(M / (M - q)) / |G|, 1), reaching 1 at q = M.
pub fn summation_bound(m: u64, q: u64, group_order: u128) -> Result<BoundBracket> {
    if m < 2 {
        return Err(QocError::domain("summation needs M >= 2"));
    }
    if group_order < 2 {
        return Err(QocError::domain("group order must be at least 2"));
    }
    if q > m {
        return Err(QocError::domain(format!("q = {q} exceeds M = {m}")));
    }
    let value = if q == m {
        BigRational::one()
    } else {
        let floor = m / (m - q);
        clamp_unit(rat(BigInt::from(floor), BigInt::from(group_order)))
    };
    Ok(BoundBracket::exact_point(value, "summation"))
}

fn weight_sum(positions: u64, q: u64, order_minus_one: &BigInt) -> BigInt {
    // number of vectors of the given length that are nonzero in at most q slots
    let mut acc = BigInt::zero();
    for i in 0..=q.min(positions) {
        acc += binom_big(positions, i) * num::pow::pow(order_minus_one.clone(), i as usize);
    }
    acc
}

/// Bracket for recovering a table's values on k fixed targets out of M
/// points. The upper side counts length-M vectors of weight at most q (a
/// rank bound over the whole domain); the lower side counts the payoffs
/// reachable alongside the zero fingerprint, which only involves the k
/// target positions. The two sides meet when k = M or q = 0.
pub fn interrogation_bound(m: u64, group_order: u128, k: u64, q: u64) -> Result<BoundBracket> {
    if k < 1 || k > m {
        return Err(QocError::domain(format!(
            "target count k = {k} must satisfy 1 <= k <= M = {m}"
        )));
    }
    if group_order < 2 {
        return Err(QocError::domain("group order must be at least 2"));
    }
    let n_minus_one = BigInt::from(group_order) - BigInt::one();
    let denom = big_pow(group_order, k);
    let upper = clamp_unit(rat(weight_sum(m, q, &n_minus_one), denom.clone()));
    let lower = clamp_unit(rat(weight_sum(k, q, &n_minus_one), denom));
    let exact = lower == upper;
    Ok(BoundBracket {
        exact,
        regime: if exact {
            "interrogation".into()
        } else {
            "interrogation/rank-upper".into()
        },
        lower: BoundValue::Exact(lower),
        upper: BoundValue::Exact(upper),
    })
}

/// High-query floor shared by the interpolation and extrapolation families:
/// 1 - ((ceil(d/2) + 1)! + d + 1) / p, possibly vacuous for small p.
fn high_query_lower(d: u64, p: u64) -> BigRational {
    let half_up = d.div_ceil(2);
    let numerator = BigInt::from(p) - factorial(half_up + 1) - BigInt::from(d + 1);
    rat(numerator, BigInt::from(p))
}

/// Bracket for recovering all d+1 coefficients of a hidden degree-<=d
/// polynomial over F_p with q queries.
pub fn interpolation_bound(d: u64, q: u64, p: u64) -> Result<BoundBracket> {
    check_prime(p)?;
    if d < 1 {
        return Err(QocError::domain("interpolation needs d >= 1"));
    }
    let trivial = rat(BigInt::one(), big_pow(p as u128, d + 1));
    if 2 * q <= d {
        return Ok(BoundBracket {
            lower: BoundValue::Exact(trivial),
            upper: BoundValue::Exact(rat_u(1, p)),
            exact: false,
            regime: "interpolation/low-query".into(),
        });
    }
    if 2 * q == d + 1 {
        // threshold: success is about 1/q!, up to a 1/p correction
        let q_fact = factorial(q);
        let raw = rat(
            BigInt::from(p) - binom_big(q + 1, 2),
            q_fact.clone() * BigInt::from(p),
        );
        let (lower, clamped) = if raw < trivial {
            (trivial.clone(), true)
        } else {
            (raw, false)
        };
        return Ok(BoundBracket {
            lower: BoundValue::Exact(lower),
            upper: BoundValue::Exact(rat(BigInt::one(), q_fact)),
            exact: false,
            regime: if clamped {
                "interpolation/threshold (lower clamped)".into()
            } else {
                "interpolation/threshold".into()
            },
        });
    }
    let raw = high_query_lower(d, p);
    let (lower, clamped) = if raw < trivial {
        (trivial.clone(), true)
    } else {
        (raw, false)
    };
    Ok(BoundBracket {
        lower: BoundValue::Exact(lower),
        upper: BoundValue::Exact(BigRational::one()),
        exact: false,
        regime: if clamped {
            "interpolation/high-query (lower clamped)".into()
        } else {
            "interpolation/high-query".into()
        },
    })
}

/// Bracket for producing q+1 input/output pairs of a hidden degree-<=d
/// polynomial from q queries, in the covered regime q <= d/2:
/// upper (q+1) * q * e^{2 sqrt(q)} / p, floor 1/p^{q+1}.
pub fn evaluation_bound(d: u64, q: u64, p: u64) -> Result<BoundBracket> {
    check_prime(p)?;
    if d < 1 {
        return Err(QocError::domain("evaluation needs d >= 1"));
    }
    if 2 * q > d {
        return Err(QocError::domain(format!(
            "evaluation bound covers q <= d/2 only (got q = {q}, d = {d})"
        )));
    }
    let trivial = rat(BigInt::one(), big_pow(p as u128, q + 1));
    if q == 0 {
        return Ok(BoundBracket::exact_point(trivial, "evaluation/no-query"));
    }
    let raw = ((q + 1) * q) as f64 * (2.0 * (q as f64).sqrt()).exp() / p as f64;
    let upper = raw.min(1.0).max(trivial.to_f64().unwrap());
    Ok(BoundBracket {
        lower: BoundValue::Exact(trivial),
        upper: BoundValue::Approx(upper),
        exact: false,
        regime: "evaluation/low-query".into(),
    })
}

/// Bracket for recovering a hidden degree-<=d polynomial's value at 0 from
/// q queries on F_p \ {0}: exactly 1/p while q <= d/2; at the threshold
/// 2q = d+1 the optimum is floor((p-1)/q)/p whenever q divides p-1.
pub fn extrapolation_bound(d: u64, q: u64, p: u64) -> Result<BoundBracket> {
    check_prime(p)?;
    if d < 1 {
        return Err(QocError::domain("extrapolation needs d >= 1"));
    }
    let trivial = rat_u(1, p);
    if 2 * q <= d {
        return Ok(BoundBracket::exact_point(trivial, "extrapolation/low-query"));
    }
    if 2 * q == d + 1 {
        let upper = clamp_unit(rat_u((p - 1) / q, p));
        let tight = (p - 1).is_multiple_of(q);
        let lower = if tight { upper.clone() } else { trivial };
        let exact = lower == upper;
        return Ok(BoundBracket {
            exact,
            regime: if tight {
                "extrapolation/threshold".into()
            } else {
                "extrapolation/threshold (upper not known tight)".into()
            },
            lower: BoundValue::Exact(lower),
            upper: BoundValue::Exact(upper),
        });
    }
    let raw = high_query_lower(d, p);
    let (lower, clamped) = if raw < trivial {
        (trivial, true)
    } else {
        (raw, false)
    };
    Ok(BoundBracket {
        lower: BoundValue::Exact(lower),
        upper: BoundValue::Exact(BigRational::one()),
        exact: false,
        regime: if clamped {
            "extrapolation/high-query (lower clamped)".into()
        } else {
            "extrapolation/high-query".into()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: u64, b: u64) -> BigRational {
        rat_u(a, b)
    }

    fn exact_value(b: &BoundBracket) -> BigRational {
        assert!(b.exact, "bracket {b:?} is not exact");
        b.lower.exact().unwrap().clone()
    }

    #[test]
    fn summation_values() {
        assert_eq!(exact_value(&summation_bound(4, 1, 2).unwrap()), r(1, 2));
        assert_eq!(exact_value(&summation_bound(4, 2, 2).unwrap()), r(1, 1));
        assert_eq!(exact_value(&summation_bound(5, 4, 6).unwrap()), r(5, 6));
        assert_eq!(exact_value(&summation_bound(4, 4, 2).unwrap()), r(1, 1));
        assert_eq!(exact_value(&summation_bound(4, 0, 3).unwrap()), r(1, 3));
        assert!(summation_bound(4, 5, 2).is_err());
    }

    #[test]
    fn interrogation_full_domain_is_exact() {
        assert_eq!(
            exact_value(&interrogation_bound(4, 2, 4, 2).unwrap()),
            r(11, 16)
        );
        assert_eq!(
            exact_value(&interrogation_bound(2, 2, 2, 1).unwrap()),
            r(3, 4)
        );
        assert_eq!(
            exact_value(&interrogation_bound(6, 3, 3, 0).unwrap()),
            r(1, 27)
        );
        assert!(interrogation_bound(3, 2, 4, 1).is_err());
        assert!(interrogation_bound(3, 2, 0, 1).is_err());
    }

    #[test]
    fn interrogation_partial_targets_bracket() {
        // k < M: the whole-domain rank count exceeds the reachable payoffs
        let b = interrogation_bound(3, 2, 2, 1).unwrap();
        assert!(!b.exact);
        assert_eq!(b.lower.exact().unwrap(), &r(3, 4));
        assert_eq!(b.upper.exact().unwrap(), &r(1, 1));
        assert!(b.contains(&r(3, 4)));
    }

    #[test]
    fn interrogation_saturates_at_k_queries() {
        let b = interrogation_bound(5, 2, 3, 3).unwrap();
        assert!(b.exact);
        assert_eq!(exact_value(&b), r(1, 1));
    }

    #[test]
    fn interpolation_regimes() {
        let low = interpolation_bound(2, 1, 5).unwrap();
        assert_eq!(low.upper.exact().unwrap(), &r(1, 5));
        assert_eq!(low.lower.exact().unwrap(), &r(1, 125));
        assert!(!low.exact);

        let threshold = interpolation_bound(1, 1, 3).unwrap();
        assert_eq!(threshold.lower.exact().unwrap(), &r(2, 3));
        assert_eq!(threshold.upper.exact().unwrap(), &r(1, 1));

        let half = interpolation_bound(3, 2, 5).unwrap();
        assert_eq!(half.lower.exact().unwrap(), &r(1, 5));
        assert_eq!(half.upper.exact().unwrap(), &r(1, 2));

        let high = interpolation_bound(2, 2, 101).unwrap();
        assert_eq!(high.lower.exact().unwrap(), &r(96, 101));
        assert_eq!(high.upper.exact().unwrap(), &r(1, 1));

        // small p makes the high-query floor vacuous; fall back to guessing
        let clamped = interpolation_bound(2, 2, 3).unwrap();
        assert_eq!(clamped.lower.exact().unwrap(), &r(1, 27));
        assert!(clamped.regime.contains("clamped"));
    }

    #[test]
    fn evaluation_regimes() {
        let b = evaluation_bound(2, 1, 10007).unwrap();
        let expected = 2.0 * (2.0f64).exp() / 10007.0;
        assert!((b.upper.as_f64() - expected).abs() < 1e-12);
        assert_eq!(b.lower.exact().unwrap(), &rat(BigInt::one(), big_pow(10007, 2)));

        let no_query = evaluation_bound(2, 0, 5).unwrap();
        assert_eq!(exact_value(&no_query), r(1, 5));

        // small p clamps the transcendental bound at 1
        let clamped = evaluation_bound(4, 2, 7).unwrap();
        assert_eq!(clamped.upper.as_f64(), 1.0);

        assert!(evaluation_bound(2, 2, 5).is_err());
    }

    #[test]
    fn extrapolation_regimes() {
        assert_eq!(exact_value(&extrapolation_bound(2, 1, 5).unwrap()), r(1, 5));
        assert_eq!(exact_value(&extrapolation_bound(3, 2, 5).unwrap()), r(2, 5));
        assert_eq!(exact_value(&extrapolation_bound(1, 1, 3).unwrap()), r(2, 3));

        // threshold with q not dividing p-1: only a bracket
        let loose = extrapolation_bound(5, 3, 11).unwrap();
        assert!(!loose.exact);
        assert_eq!(loose.lower.exact().unwrap(), &r(1, 11));
        assert_eq!(loose.upper.exact().unwrap(), &r(3, 11));

        let high = extrapolation_bound(2, 2, 101).unwrap();
        assert_eq!(high.lower.exact().unwrap(), &r(96, 101));

        let clamped = extrapolation_bound(2, 2, 3).unwrap();
        assert_eq!(clamped.lower.exact().unwrap(), &r(1, 3));
        assert!(clamped.regime.contains("clamped"));
    }

    #[test]
    fn brackets_are_ordered_and_within_unit_interval() {
        let zero = BigRational::zero();
        let one = BigRational::one();
        let mut brackets = Vec::new();
        for q in 0..=6 {
            brackets.push(summation_bound(6, q, 4).unwrap());
        }
        for q in 0..=5 {
            brackets.push(interrogation_bound(5, 3, 2, q).unwrap());
            if let Ok(b) = interpolation_bound(3, q, 5) {
                brackets.push(b);
            }
            if let Ok(b) = evaluation_bound(4, q, 5) {
                brackets.push(b);
            }
            brackets.push(extrapolation_bound(4, q, 7).unwrap());
        }
        for b in brackets {
            let lo = b.lower.as_f64();
            let hi = b.upper.as_f64();
            assert!(lo >= -1e-15 && hi <= 1.0 + 1e-15 && lo <= hi + 1e-15, "{b:?}");
            if let (Some(l), Some(u)) = (b.lower.exact(), b.upper.exact()) {
                assert!(l >= &zero && u <= &one && l <= u);
                assert_eq!(b.exact, l == u);
            }
        }
    }
}
