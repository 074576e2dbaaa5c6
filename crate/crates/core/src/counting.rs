//! Exact optimum by enumeration.
//!
//! A canonical batch query is a pair (x, r): strictly increasing distinct
//! points x and one character index r_i per point, zeros allowed. Each pair
//! determines the fingerprint h = B(x) * r (how the induced character acts
//! on the kernel generators) and the payoff z = C(x) * r (how it acts on the
//! quotient generators), both computed in the componentwise ring. The
//! optimal success probability of any q-query algorithm is
//!
//! ```text
//! P = max_h |{ z reachable together with h }| / |G|^t
//! ```
//!
//! so the whole problem reduces to bucketing (h, z) over all canonical
//! pairs. Everything here is exact integer/rational arithmetic.

use crate::algebra::{enumerate_vectors, GroupElement};
use crate::error::{QocError, Result};
use crate::instance::{matrix_b, matrix_c, QocInstance, QueryPair};
use indexmap::{IndexMap, IndexSet};
use itertools::Itertools;
use num::{BigInt, BigRational};
use rayon::prelude::*;

/// Guards for the enumeration; `parallel = false` forces the single-chunk
/// code path (results are identical either way).
#[derive(Clone, Debug)]
pub struct CountConfig {
    pub max_pairs: u128,
    pub parallel: bool,
}

impl Default for CountConfig {
    fn default() -> Self {
        CountConfig {
            max_pairs: 100_000_000,
            parallel: true,
        }
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn group_pow(order: u128, e: usize) -> Result<u128> {
    let mut acc = 1u128;
    for _ in 0..e {
        acc = acc
            .checked_mul(order)
            .ok_or_else(|| QocError::structural("enumeration size overflows u128"))?;
    }
    Ok(acc)
}

/// Number of canonical pairs: binom(|X|, q) * |G|^q.
pub fn pair_count(inst: &QocInstance, q: usize) -> Result<u128> {
    if q > inst.domain().len() {
        return Err(QocError::domain(format!(
            "q = {q} exceeds the domain size {}",
            inst.domain().len()
        )));
    }
    let subsets = binomial(inst.domain().len() as u64, q as u64);
    let chars = group_pow(inst.group().order(), q)?;
    subsets
        .checked_mul(chars)
        .ok_or_else(|| QocError::structural("enumeration size overflows u128"))
}

/// All canonical pairs in deterministic order: point subsets in
/// lexicographic order, character vectors in odometer order within each
/// subset. The q = 0 stream is the single empty pair.
pub fn enumerate_pairs(inst: &QocInstance, q: usize, cfg: &CountConfig) -> Result<Vec<QueryPair>> {
    let total = pair_count(inst, q)?;
    if total > cfg.max_pairs {
        return Err(QocError::Capacity {
            what: "pair enumeration".into(),
            needed: total,
            guard: cfg.max_pairs,
        });
    }
    let chars = enumerate_vectors(inst.group(), q);
    let mut out = Vec::with_capacity(total as usize);
    for subset in inst.domain().iter().copied().combinations(q) {
        for r in &chars {
            out.push(QueryPair::new(inst, subset.clone(), r.clone())?);
        }
    }
    Ok(out)
}

fn apply_rows(
    rows: &[Vec<GroupElement>],
    chars: &[GroupElement],
    inst: &QocInstance,
) -> Result<Vec<GroupElement>> {
    let group = inst.group();
    rows.iter()
        .map(|row| {
            let mut acc = group.zero();
            for (entry, r) in row.iter().zip(chars) {
                acc = group.add(&acc, &group.ring_mul(entry, r)?)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Fingerprint and payoff of one canonical pair: h = B(x) r, z = C(x) r.
pub fn hz_of_pair(
    inst: &QocInstance,
    pair: &QueryPair,
) -> Result<(Vec<GroupElement>, Vec<GroupElement>)> {
    let b = matrix_b(inst, pair.points())?;
    let c = matrix_c(inst, pair.points())?;
    let h = apply_rows(&b, pair.chars(), inst)?;
    let z = apply_rows(&c, pair.chars(), inst)?;
    Ok((h, z))
}

/// A member of the best class, with one witnessing pair and the number of
/// canonical pairs that realize it.
#[derive(Clone, Debug)]
pub struct Witness {
    pub z: Vec<GroupElement>,
    pub multiplicity: u64,
    pub pair: QueryPair,
}

/// Outcome of the exact count.
#[derive(Clone, Debug)]
pub struct CountingResult {
    /// h -> set of reachable z, keyed in first-appearance order.
    pub classes: IndexMap<Vec<GroupElement>, IndexSet<Vec<GroupElement>>>,
    /// First h (in enumeration order) attaining the maximum class size.
    pub best_h: Vec<GroupElement>,
    pub best_class_size: u64,
    /// |G|^t, the number of cosets.
    pub quotient_order: u128,
    /// best_class_size / quotient_order, reduced.
    pub probability: BigRational,
    pub witnesses: Vec<Witness>,
    pub q: usize,
    pub pair_count: u128,
}

type ClassMap = IndexMap<Vec<GroupElement>, IndexSet<Vec<GroupElement>>>;

fn classes_for_subset(inst: &QocInstance, subset: &[u64], chars: &[Vec<GroupElement>]) -> Result<ClassMap> {
    let b = matrix_b(inst, subset)?;
    let c = matrix_c(inst, subset)?;
    let mut local: ClassMap = IndexMap::new();
    for r in chars {
        let h = apply_rows(&b, r, inst)?;
        let z = apply_rows(&c, r, inst)?;
        local.entry(h).or_default().insert(z);
    }
    Ok(local)
}

fn merge_in_order(maps: Vec<ClassMap>) -> ClassMap {
    let mut merged: ClassMap = IndexMap::new();
    for local in maps {
        for (h, zs) in local {
            let entry = merged.entry(h).or_default();
            for z in zs {
                entry.insert(z);
            }
        }
    }
    merged
}

/// Exact optimal success probability for q queries, with witnesses for the
/// winning class.
pub fn count_optimal(inst: &QocInstance, q: usize, cfg: &CountConfig) -> Result<CountingResult> {
    let total = pair_count(inst, q)?;
    if total > cfg.max_pairs {
        return Err(QocError::Capacity {
            what: "pair enumeration".into(),
            needed: total,
            guard: cfg.max_pairs,
        });
    }
    let chars = enumerate_vectors(inst.group(), q);
    let subsets: Vec<Vec<u64>> = inst.domain().iter().copied().combinations(q).collect();

    // Aggregate per subset, then merge in subset order so the map's
    // first-appearance order (and hence the argmax tie-break) does not
    // depend on the partitioning.
    let locals: Vec<ClassMap> = if cfg.parallel {
        subsets
            .par_iter()
            .map(|subset| classes_for_subset(inst, subset, &chars))
            .collect::<Result<_>>()?
    } else {
        subsets
            .iter()
            .map(|subset| classes_for_subset(inst, subset, &chars))
            .collect::<Result<_>>()?
    };
    let classes = merge_in_order(locals);

    let (best_h, best_class_size) = classes
        .iter()
        .fold(None::<(&Vec<GroupElement>, usize)>, |best, (h, zs)| {
            match best {
                Some((_, n)) if n >= zs.len() => best,
                _ => Some((h, zs.len())),
            }
        })
        .map(|(h, n)| (h.clone(), n as u64))
        .ok_or_else(|| QocError::numerical("no classes produced"))?;

    // Second pass: witnesses for the winning class only.
    let mut witnesses: IndexMap<Vec<GroupElement>, Witness> = IndexMap::new();
    for subset in &subsets {
        let b = matrix_b(inst, subset)?;
        let c = matrix_c(inst, subset)?;
        for r in &chars {
            let h = apply_rows(&b, r, inst)?;
            if h != best_h {
                continue;
            }
            let z = apply_rows(&c, r, inst)?;
            match witnesses.get_mut(&z) {
                Some(w) => w.multiplicity += 1,
                None => {
                    let pair = QueryPair::new(inst, subset.clone(), r.clone())?;
                    witnesses.insert(
                        z.clone(),
                        Witness {
                            z,
                            multiplicity: 1,
                            pair,
                        },
                    );
                }
            }
        }
    }
    debug_assert_eq!(witnesses.len() as u64, best_class_size);

    let quotient_order = inst.quotient_order();
    let probability = BigRational::new(
        BigInt::from(best_class_size),
        BigInt::from(quotient_order),
    );
    Ok(CountingResult {
        classes,
        best_h,
        best_class_size,
        quotient_order,
        probability,
        witnesses: witnesses.into_values().collect(),
        q,
        pair_count: total,
    })
}

/// Probabilities for a range of q; exact and nondecreasing in q.
pub fn sweep(
    inst: &QocInstance,
    q_min: usize,
    q_max: usize,
    cfg: &CountConfig,
) -> Result<Vec<(usize, BigRational)>> {
    if q_min > q_max {
        return Err(QocError::domain("empty sweep range"));
    }
    let mut rows = Vec::with_capacity(q_max - q_min + 1);
    let mut prev: Option<BigRational> = None;
    for q in q_min..=q_max {
        let result = count_optimal(inst, q, cfg)?;
        if let Some(p) = &prev {
            if &result.probability < p {
                return Err(QocError::numerical(format!(
                    "success probability decreased between q = {} and q = {q}",
                    q - 1
                )));
            }
        }
        prev = Some(result.probability.clone());
        rows.push((q, result.probability));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::GroupSpec;
    use crate::instance::{
        make_extrapolation, make_interpolation, make_interrogation, make_summation,
    };
    use num::ToPrimitive;

    fn z(n: u64) -> GroupSpec {
        GroupSpec::cyclic(n).unwrap()
    }

    fn ratio(a: u64, b: u64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn cfg() -> CountConfig {
        CountConfig::default()
    }

    #[test]
    fn pair_counts() {
        let extrap = make_extrapolation(3, 1).unwrap();
        assert_eq!(pair_count(&extrap, 1).unwrap(), 6);
        assert_eq!(pair_count(&extrap, 0).unwrap(), 1);
        let interp = make_interpolation(3, 1).unwrap();
        assert_eq!(pair_count(&interp, 2).unwrap(), 27);
        assert!(pair_count(&interp, 4).is_err());
    }

    #[test]
    fn enumerate_is_deterministic_and_complete() {
        let inst = make_extrapolation(3, 1).unwrap();
        let pairs = enumerate_pairs(&inst, 1, &cfg()).unwrap();
        assert_eq!(pairs.len(), 6);
        let again = enumerate_pairs(&inst, 1, &cfg()).unwrap();
        assert_eq!(pairs, again);
        assert_eq!(pairs[0].points(), &[1]);
        assert!(pairs[0].chars()[0].is_zero());

        let empty = enumerate_pairs(&inst, 0, &cfg()).unwrap();
        assert_eq!(empty.len(), 1);
        assert!(empty[0].is_empty());
    }

    #[test]
    fn enumeration_capacity_guard() {
        let inst = make_interpolation(5, 2).unwrap();
        let tight = CountConfig {
            max_pairs: 10,
            parallel: false,
        };
        match enumerate_pairs(&inst, 1, &tight) {
            Err(QocError::Capacity { needed, .. }) => assert_eq!(needed, 25),
            other => panic!("expected capacity error, got {other:?}"),
        }
        assert!(count_optimal(&inst, 1, &tight).is_err());
    }

    #[test]
    fn hz_examples() {
        let inst = make_extrapolation(3, 1).unwrap();
        let g = inst.group().clone();
        let two = g.element(vec![2]).unwrap();
        let pair = QueryPair::new(&inst, vec![2], vec![two.clone()]).unwrap();
        let (h, z) = hz_of_pair(&inst, &pair).unwrap();
        assert_eq!(h[0].scalar(), 1); // 2*2 mod 3
        assert_eq!(z[0].scalar(), 2);

        let zero_pair = QueryPair::new(&inst, vec![1], vec![g.zero()]).unwrap();
        let (h, z) = hz_of_pair(&inst, &zero_pair).unwrap();
        assert!(h[0].is_zero() && z[0].is_zero());
    }

    #[test]
    fn count_summation_m2_is_certain() {
        let inst = make_summation(2, &z(2)).unwrap();
        let res = count_optimal(&inst, 1, &cfg()).unwrap();
        assert_eq!(res.probability, ratio(1, 1));
    }

    #[test]
    fn count_extrapolation_smallest() {
        let inst = make_extrapolation(3, 1).unwrap();
        let res = count_optimal(&inst, 1, &cfg()).unwrap();
        assert_eq!(res.probability, ratio(2, 3));
        assert_eq!(res.best_class_size, 2);
        assert_eq!(res.best_h[0].scalar(), 1);
        let members: Vec<u64> = res.witnesses.iter().map(|w| w.z[0].scalar()).collect();
        assert_eq!(members, vec![1, 2]);
        assert!(res.witnesses.iter().all(|w| w.multiplicity == 1));
        assert_eq!(res.witnesses[0].pair.points(), &[1]);
        assert_eq!(res.witnesses[0].pair.chars()[0].scalar(), 1);
    }

    #[test]
    fn count_extrapolation_quadratic_blocks_learning() {
        let inst = make_extrapolation(3, 2).unwrap();
        let res = count_optimal(&inst, 1, &cfg()).unwrap();
        assert_eq!(res.probability, ratio(1, 3));
    }

    #[test]
    fn count_interpolation_line() {
        let inst = make_interpolation(3, 1).unwrap();
        let res = count_optimal(&inst, 1, &cfg()).unwrap();
        // one h class; distinct payoffs are (0,0) plus (r, r*x) for r != 0
        let expected = 1 + (3 - 1) * 3;
        assert_eq!(res.best_class_size, expected);
        assert_eq!(res.probability, ratio(expected, 9));
        assert_eq!(res.classes.len(), 1);
    }

    #[test]
    fn count_interrogation_full_board() {
        let inst = make_interrogation(4, &z(2), &[0, 1, 2, 3]).unwrap();
        let res = count_optimal(&inst, 2, &cfg()).unwrap();
        // vectors of weight <= 2 on 4 positions: 1 + 4 + 6
        assert_eq!(res.probability, ratio(11, 16));
    }

    #[test]
    fn count_q0_is_inverse_quotient_order() {
        for inst in [
            make_summation(3, &z(3)).unwrap(),
            make_interpolation(3, 1).unwrap(),
            make_extrapolation(5, 2).unwrap(),
        ] {
            let res = count_optimal(&inst, 0, &cfg()).unwrap();
            assert_eq!(
                res.probability,
                BigRational::new(BigInt::from(1), BigInt::from(inst.quotient_order()))
            );
            assert_eq!(res.best_class_size, 1);
        }
    }

    #[test]
    fn sweep_matches_known_parity_run() {
        let inst = make_summation(4, &z(2)).unwrap();
        let rows = sweep(&inst, 0, 4, &cfg()).unwrap();
        let probs: Vec<f64> = rows
            .iter()
            .map(|(_, p)| p.to_f64().unwrap())
            .collect();
        assert_eq!(probs, vec![0.5, 0.5, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn parallel_and_serial_agree_exactly() {
        let serial = CountConfig {
            parallel: false,
            ..CountConfig::default()
        };
        for inst in [
            make_interpolation(5, 2).unwrap(),
            make_extrapolation(5, 3).unwrap(),
            make_interrogation(4, &z(3), &[0, 2]).unwrap(),
        ] {
            for q in 0..=2 {
                let a = count_optimal(&inst, q, &cfg()).unwrap();
                let b = count_optimal(&inst, q, &serial).unwrap();
                assert_eq!(a.probability, b.probability);
                assert_eq!(a.best_h, b.best_h);
                assert_eq!(a.classes, b.classes);
                assert_eq!(a.witnesses.len(), b.witnesses.len());
                for (wa, wb) in a.witnesses.iter().zip(&b.witnesses) {
                    assert_eq!(wa.z, wb.z);
                    assert_eq!(wa.multiplicity, wb.multiplicity);
                    assert_eq!(wa.pair, wb.pair);
                }
            }
        }
    }

    #[test]
    fn probability_denominator_divides_quotient_order() {
        for inst in [
            make_interpolation(3, 2).unwrap(),
            make_extrapolation(5, 2).unwrap(),
            make_summation(4, &GroupSpec::new(vec![2, 2]).unwrap()).unwrap(),
        ] {
            for q in 0..=2 {
                let res = count_optimal(&inst, q, &cfg()).unwrap();
                let den = res.probability.denom().clone();
                let order = BigInt::from(inst.quotient_order());
                assert_eq!(order % den, BigInt::from(0));
            }
        }
    }

    #[test]
    fn witness_multiplicities_sum_to_class_pair_count() {
        // every canonical pair with h = best_h is accounted for exactly once
        let inst = make_interrogation(3, &z(2), &[0, 1]).unwrap();
        let res = count_optimal(&inst, 1, &cfg()).unwrap();
        let total: u64 = res.witnesses.iter().map(|w| w.multiplicity).sum();
        let by_hand = enumerate_pairs(&inst, 1, &cfg())
            .unwrap()
            .iter()
            .filter(|pair| hz_of_pair(&inst, pair).unwrap().0 == res.best_h)
            .count() as u64;
        assert_eq!(total, by_hand);
    }
}
