//! Finite abelian groups presented as Z_{N1} x ... x Z_{Nk}, their
//! componentwise ring structure, and their characters.
//!
//! A character is indexed by a group element r and acts as
//! g -> w_{N1}^{r1*g1} * ... * w_{Nk}^{rk*gk} with w_N = e^{2*pi*i/N}.
//! Every character value is a root of unity of order dividing
//! lcm(N1..Nk), so phases are carried as exact integer exponents and only
//! converted to complex doubles at the boundary.

use crate::error::{QocError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

/// Element of a product group, one reduced residue per factor.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    residues: Vec<u64>,
}

impl GroupElement {
    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    /// Convenience for single-factor groups.
    pub fn scalar(&self) -> u64 {
        debug_assert_eq!(self.residues.len(), 1);
        self.residues[0]
    }

    pub fn is_zero(&self) -> bool {
        self.residues.iter().all(|&r| r == 0)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.residues.len() == 1 {
            write!(f, "{}", self.residues[0])
        } else {
            write!(f, "{:?}", self.residues)
        }
    }
}

/// A finite abelian group Z_{N1} x ... x Z_{Nk}, each N >= 2.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GroupSpec {
    moduli: Vec<u64>,
    order: u128,
    phase_order: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

impl GroupSpec {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(QocError::structural("group needs at least one factor"));
        }
        if let Some(&bad) = moduli.iter().find(|&&n| n < 2) {
            return Err(QocError::structural(format!(
                "modulus {bad} is below 2"
            )));
        }
        let order = moduli.iter().fold(1u128, |acc, &n| acc * n as u128);
        let phase_order = moduli.iter().fold(1u64, |acc, &n| lcm(acc, n));
        // phase_order divides the group order by construction
        debug_assert_eq!(order % phase_order as u128, 0);
        Ok(GroupSpec {
            moduli,
            order,
            phase_order,
        })
    }

    /// Z_n shorthand.
    pub fn cyclic(n: u64) -> Result<Self> {
        GroupSpec::new(vec![n])
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn factors(&self) -> usize {
        self.moduli.len()
    }

    pub fn order(&self) -> u128 {
        self.order
    }

    /// lcm of the moduli: the order of the root of unity all character
    /// values live in.
    pub fn phase_order(&self) -> u64 {
        self.phase_order
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        g.residues.len() == self.moduli.len()
            && g.residues.iter().zip(&self.moduli).all(|(&r, &n)| r < n)
    }

    fn check(&self, g: &GroupElement, role: &str) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(QocError::structural(format!(
                "{role} {:?} does not belong to group with moduli {:?}",
                g, self.moduli
            )))
        }
    }

    /// Build an element, reducing each coordinate mod its modulus.
    pub fn element(&self, residues: Vec<u64>) -> Result<GroupElement> {
        if residues.len() != self.moduli.len() {
            return Err(QocError::structural(format!(
                "element arity {} does not match {} group factors",
                residues.len(),
                self.moduli.len()
            )));
        }
        let residues = residues
            .into_iter()
            .zip(&self.moduli)
            .map(|(r, &n)| r % n)
            .collect();
        Ok(GroupElement { residues })
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            residues: vec![0; self.moduli.len()],
        }
    }

    /// The ring unit (1, ..., 1).
    pub fn unit(&self) -> GroupElement {
        GroupElement {
            residues: vec![1; self.moduli.len()],
        }
    }

    /// a + b componentwise.
    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a, "left operand")?;
        self.check(b, "right operand")?;
        let residues = a
            .residues
            .iter()
            .zip(&b.residues)
            .zip(&self.moduli)
            .map(|((&x, &y), &n)| (x + y) % n)
            .collect();
        Ok(GroupElement { residues })
    }

    pub fn neg(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check(a, "operand")?;
        let residues = a
            .residues
            .iter()
            .zip(&self.moduli)
            .map(|(&x, &n)| (n - x) % n)
            .collect();
        Ok(GroupElement { residues })
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        let nb = self.neg(b)?;
        self.add(a, &nb)
    }

    /// Componentwise product; this is the ring action used for module
    /// coefficients.
    pub fn ring_mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a, "left operand")?;
        self.check(b, "right operand")?;
        let residues = a
            .residues
            .iter()
            .zip(&b.residues)
            .zip(&self.moduli)
            .map(|((&x, &y), &n)| ((x as u128 * y as u128) % n as u128) as u64)
            .collect();
        Ok(GroupElement { residues })
    }

    /// Value of the character indexed by `r` at `g`, as an exact phase.
    ///
    /// The exponent is sum_i (phase_order/N_i) * r_i * g_i mod phase_order.
    pub fn char_eval(&self, r: &GroupElement, g: &GroupElement) -> Result<ExactPhase> {
        self.check(r, "character index")?;
        self.check(g, "argument")?;
        let m = self.phase_order as u128;
        let mut exponent = 0u128;
        for ((&ri, &gi), &n) in r.residues.iter().zip(&g.residues).zip(&self.moduli) {
            let stride = m / n as u128;
            exponent = (exponent + stride * ((ri as u128 * gi as u128) % n as u128)) % m;
        }
        Ok(ExactPhase {
            exponent: exponent as u64,
            order: self.phase_order,
        })
    }

    /// All group elements in odometer order (last factor fastest).
    pub fn elements(&self) -> Vec<GroupElement> {
        let mut out = Vec::with_capacity(self.order as usize);
        let mut cur = vec![0u64; self.moduli.len()];
        loop {
            out.push(GroupElement {
                residues: cur.clone(),
            });
            let mut pos = self.moduli.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                cur[pos] += 1;
                if cur[pos] < self.moduli[pos] {
                    break;
                }
                cur[pos] = 0;
            }
        }
    }
}

/// Enumerate G^len in odometer order (last coordinate fastest). The empty
/// vector is the sole entry when len = 0.
pub fn enumerate_vectors(spec: &GroupSpec, len: usize) -> Vec<Vec<GroupElement>> {
    let elems = spec.elements();
    let mut out = Vec::new();
    let mut idx = vec![0usize; len];
    loop {
        out.push(idx.iter().map(|&i| elems[i].clone()).collect());
        let mut pos = len;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < elems.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// e^{2*pi*i*exponent/order}, kept exact until rendered.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ExactPhase {
    exponent: u64,
    order: u64,
}

impl ExactPhase {
    pub fn new(exponent: u64, order: u64) -> Result<Self> {
        if order == 0 {
            return Err(QocError::structural("phase order must be positive"));
        }
        Ok(ExactPhase {
            exponent: exponent % order,
            order,
        })
    }

    pub fn one(order: u64) -> Self {
        ExactPhase { exponent: 0, order }
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_one(&self) -> bool {
        self.exponent == 0
    }

    /// Multiply two phases of the same order (exponents add mod order).
    pub fn mul(&self, other: &ExactPhase) -> Result<ExactPhase> {
        if self.order != other.order {
            return Err(QocError::structural(format!(
                "phase orders differ: {} vs {}",
                self.order, other.order
            )));
        }
        Ok(ExactPhase {
            exponent: (self.exponent + other.exponent) % self.order,
            order: self.order,
        })
    }

    pub fn conj(&self) -> ExactPhase {
        ExactPhase {
            exponent: (self.order - self.exponent) % self.order,
            order: self.order,
        }
    }

    /// Only this boundary touches floating point.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.exponent as f64 / self.order as f64)
    }
}

/// Multiplicative inverse of `a` modulo prime `p` via the extended Euclid
/// algorithm.
pub fn mod_inverse(a: u64, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(QocError::domain(format!("{p} is not prime")));
    }
    let a = a % p;
    if a == 0 {
        return Err(QocError::domain("0 has no multiplicative inverse"));
    }
    let (mut r0, mut r1) = (p as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    Ok(t0.rem_euclid(p as i128) as u64)
}

/// Trial division is plenty at desk scale.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: u64) -> GroupSpec {
        GroupSpec::cyclic(n).unwrap()
    }

    #[test]
    fn add_wraps_per_factor() {
        let g = GroupSpec::new(vec![2, 3]).unwrap();
        let a = g.element(vec![1, 2]).unwrap();
        let b = g.element(vec![1, 2]).unwrap();
        let sum = g.add(&a, &b).unwrap();
        assert_eq!(sum.residues(), &[0, 1]);
    }

    #[test]
    fn add_scalar_case() {
        let g = z(4);
        let a = g.element(vec![3]).unwrap();
        let b = g.element(vec![2]).unwrap();
        assert_eq!(g.add(&a, &b).unwrap().residues(), &[1]);
    }

    #[test]
    fn add_rejects_mismatched_spec() {
        let g2 = GroupSpec::new(vec![2, 3]).unwrap();
        let g1 = z(6);
        let a = g1.element(vec![5]).unwrap();
        let b = g2.element(vec![1, 1]).unwrap();
        assert!(g2.add(&a, &b).is_err());
    }

    #[test]
    fn ring_mul_componentwise() {
        let g = GroupSpec::new(vec![4, 5]).unwrap();
        let a = g.element(vec![3, 2]).unwrap();
        let b = g.element(vec![2, 4]).unwrap();
        assert_eq!(g.ring_mul(&a, &b).unwrap().residues(), &[2, 3]);
    }

    #[test]
    fn ring_mul_by_unit_is_identity() {
        let g = GroupSpec::new(vec![2, 7]).unwrap();
        let a = g.element(vec![1, 5]).unwrap();
        assert_eq!(g.ring_mul(&a, &g.unit()).unwrap(), a);
    }

    #[test]
    fn neg_of_zero_is_zero() {
        let g = GroupSpec::new(vec![3, 4]).unwrap();
        assert_eq!(g.neg(&g.zero()).unwrap(), g.zero());
    }

    #[test]
    fn char_eval_z4() {
        // r=1, g=3 in Z_4: exponent 3 of a 4th root, i.e. -i
        let g = z(4);
        let r = g.element(vec![1]).unwrap();
        let x = g.element(vec![3]).unwrap();
        let ph = g.char_eval(&r, &x).unwrap();
        assert_eq!(ph.exponent(), 3);
        assert_eq!(ph.order(), 4);
        let c = ph.to_complex();
        assert!((c.re - 0.0).abs() < 1e-12 && (c.im + 1.0).abs() < 1e-12);
    }

    #[test]
    fn char_eval_product_group() {
        // Z_2 x Z_2, r=(1,1), g=(1,1): (-1)*(-1) = +1
        let g = GroupSpec::new(vec![2, 2]).unwrap();
        let r = g.element(vec![1, 1]).unwrap();
        let x = g.element(vec![1, 1]).unwrap();
        let ph = g.char_eval(&r, &x).unwrap();
        assert!(ph.is_one());
    }

    #[test]
    fn char_eval_mixed_moduli() {
        // Z_2 x Z_3 has phase order 6; r=(1,1), g=(1,2) gives
        // exponent 3*1 + 2*2 = 7 = 1 mod 6
        let g = GroupSpec::new(vec![2, 3]).unwrap();
        let r = g.element(vec![1, 1]).unwrap();
        let x = g.element(vec![1, 2]).unwrap();
        let ph = g.char_eval(&r, &x).unwrap();
        assert_eq!(ph.order(), 6);
        assert_eq!(ph.exponent(), 1);
    }

    #[test]
    fn trivial_character_is_constant_one() {
        let g = GroupSpec::new(vec![3, 4]).unwrap();
        for x in g.elements() {
            assert!(g.char_eval(&g.zero(), &x).unwrap().is_one());
        }
    }

    #[test]
    fn character_orthogonality_exhaustive() {
        // sum_g chi_r(g) is |G| for r = 0 and 0 otherwise
        for moduli in [vec![2], vec![3], vec![4], vec![2, 2], vec![2, 3], vec![3, 4]] {
            let g = GroupSpec::new(moduli).unwrap();
            for r in g.elements() {
                let total: Complex64 = g
                    .elements()
                    .iter()
                    .map(|x| g.char_eval(&r, x).unwrap().to_complex())
                    .sum();
                if r.is_zero() {
                    assert!((total.re - g.order() as f64).abs() < 1e-9);
                    assert!(total.im.abs() < 1e-9);
                } else {
                    assert!(total.norm() < 1e-9, "r={r:?} sum={total}");
                }
            }
        }
    }

    #[test]
    fn phase_multiplication_adds_exponents() {
        let a = ExactPhase::new(5, 12).unwrap();
        let b = ExactPhase::new(9, 12).unwrap();
        assert_eq!(a.mul(&b).unwrap().exponent(), 2);
        assert!(a.mul(&a.conj()).unwrap().is_one());
    }

    #[test]
    fn phase_order_mismatch_rejected() {
        let a = ExactPhase::new(1, 4).unwrap();
        let b = ExactPhase::new(1, 6).unwrap();
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn mod_inverse_small_cases() {
        assert_eq!(mod_inverse(2, 5).unwrap(), 3);
        assert_eq!(mod_inverse(4, 7).unwrap(), 2);
        assert_eq!(mod_inverse(1, 2).unwrap(), 1);
        assert_eq!(mod_inverse(9, 7).unwrap(), 4);
        assert!(mod_inverse(0, 5).is_err());
        assert!(mod_inverse(3, 6).is_err());
    }

    #[test]
    fn element_reduces_residues() {
        let g = GroupSpec::new(vec![2, 5]).unwrap();
        let e = g.element(vec![7, 11]).unwrap();
        assert_eq!(e.residues(), &[1, 1]);
    }

    #[test]
    fn group_spec_rejects_degenerate_moduli() {
        assert!(GroupSpec::new(vec![]).is_err());
        assert!(GroupSpec::new(vec![1]).is_err());
        assert!(GroupSpec::new(vec![2, 0]).is_err());
    }

    #[test]
    fn elements_odometer_order() {
        let g = GroupSpec::new(vec![2, 2]).unwrap();
        let all: Vec<Vec<u64>> = g.elements().iter().map(|e| e.residues().to_vec()).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn vector_enumeration_counts() {
        let g = z(3);
        assert_eq!(enumerate_vectors(&g, 0).len(), 1);
        assert_eq!(enumerate_vectors(&g, 2).len(), 9);
        assert!(enumerate_vectors(&g, 0)[0].is_empty());
    }

    #[test]
    fn phase_order_divides_group_order() {
        for moduli in [vec![2, 3], vec![4, 6], vec![2, 2, 5]] {
            let g = GroupSpec::new(moduli).unwrap();
            assert_eq!(g.order() % g.phase_order() as u128, 0);
        }
    }
}
