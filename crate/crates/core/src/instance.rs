//! Problem instances: a domain of query points, a coefficient group G, and
//! two lists of basis tables. The hidden oracle is a G-linear combination
//! A = sum_l beta_l * B_l + sum_m gamma_m * C_m of kernel tables B_l and
//! quotient tables C_m; the task is to recover gamma, i.e. the coset of the
//! kernel span that A lives in.
//!
//! Five named constructions cover the worked problem families; `Custom`
//! instances supply raw tables. Domain points are plain integers under their
//! natural order.

use crate::algebra::{enumerate_vectors, GroupElement, GroupSpec};
use crate::error::{QocError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// A total function from the shared domain to G, stored in domain order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OracleTable {
    domain: Vec<u64>,
    values: Vec<GroupElement>,
}

impl OracleTable {
    pub fn new(domain: Vec<u64>, values: Vec<GroupElement>, group: &GroupSpec) -> Result<Self> {
        check_domain(&domain)?;
        if values.len() != domain.len() {
            return Err(QocError::structural(format!(
                "table has {} values for {} domain points",
                values.len(),
                domain.len()
            )));
        }
        for v in &values {
            if !group.contains(v) {
                return Err(QocError::structural(format!(
                    "table value {v:?} is not reduced for moduli {:?}",
                    group.moduli()
                )));
            }
        }
        Ok(OracleTable { domain, values })
    }

    pub fn domain(&self) -> &[u64] {
        &self.domain
    }

    pub fn values(&self) -> &[GroupElement] {
        &self.values
    }

    pub fn value(&self, point: u64) -> Result<&GroupElement> {
        match self.domain.binary_search(&point) {
            Ok(i) => Ok(&self.values[i]),
            Err(_) => Err(QocError::domain(format!(
                "point {point} is outside the table domain"
            ))),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(GroupElement::is_zero)
    }

    pub fn add(&self, other: &OracleTable, group: &GroupSpec) -> Result<OracleTable> {
        if self.domain != other.domain {
            return Err(QocError::structural("table domains differ"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| group.add(a, b))
            .collect::<Result<_>>()?;
        Ok(OracleTable {
            domain: self.domain.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &OracleTable, group: &GroupSpec) -> Result<OracleTable> {
        if self.domain != other.domain {
            return Err(QocError::structural("table domains differ"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| group.sub(a, b))
            .collect::<Result<_>>()?;
        Ok(OracleTable {
            domain: self.domain.clone(),
            values,
        })
    }

    /// Pointwise ring action of a coefficient.
    pub fn scaled(&self, coeff: &GroupElement, group: &GroupSpec) -> Result<OracleTable> {
        let values = self
            .values
            .iter()
            .map(|v| group.ring_mul(coeff, v))
            .collect::<Result<_>>()?;
        Ok(OracleTable {
            domain: self.domain.clone(),
            values,
        })
    }
}

fn check_domain(domain: &[u64]) -> Result<()> {
    if domain.is_empty() {
        return Err(QocError::structural("domain must be nonempty"));
    }
    if !domain.windows(2).all(|w| w[0] < w[1]) {
        return Err(QocError::structural(
            "domain points must be strictly increasing",
        ));
    }
    Ok(())
}

/// A classification instance: recover the quotient coefficients of a hidden
/// linear combination of the basis tables.
#[derive(Clone, Debug)]
pub struct QocInstance {
    label: String,
    domain: Vec<u64>,
    group: GroupSpec,
    kernel_basis: Vec<OracleTable>,
    quotient_basis: Vec<OracleTable>,
    quotient_order: u128,
}

impl QocInstance {
    pub fn new(
        label: impl Into<String>,
        domain: Vec<u64>,
        group: GroupSpec,
        kernel_basis: Vec<OracleTable>,
        quotient_basis: Vec<OracleTable>,
    ) -> Result<Self> {
        check_domain(&domain)?;
        for table in kernel_basis.iter().chain(&quotient_basis) {
            if table.domain != domain {
                return Err(QocError::structural(
                    "all basis tables must share the instance domain",
                ));
            }
            for v in &table.values {
                if !group.contains(v) {
                    return Err(QocError::structural(
                        "basis table value does not belong to the group",
                    ));
                }
            }
        }
        let mut quotient_order = 1u128;
        for _ in 0..quotient_basis.len() {
            quotient_order = quotient_order.checked_mul(group.order()).ok_or_else(|| {
                QocError::structural("quotient order overflows u128")
            })?;
        }
        Ok(QocInstance {
            label: label.into(),
            domain,
            group,
            kernel_basis,
            quotient_basis,
            quotient_order,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &[u64] {
        &self.domain
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn kernel_basis(&self) -> &[OracleTable] {
        &self.kernel_basis
    }

    pub fn quotient_basis(&self) -> &[OracleTable] {
        &self.quotient_basis
    }

    /// Number of kernel generators.
    pub fn s(&self) -> usize {
        self.kernel_basis.len()
    }

    /// Number of quotient generators.
    pub fn t(&self) -> usize {
        self.quotient_basis.len()
    }

    /// |G|^t, the number of cosets to distinguish.
    pub fn quotient_order(&self) -> u128 {
        self.quotient_order
    }
}

fn group_label(group: &GroupSpec) -> String {
    group
        .moduli()
        .iter()
        .map(|n| format!("Z{n}"))
        .collect::<Vec<_>>()
        .join("x")
}

/// Indicator table: the ring unit at `point`, zero elsewhere.
fn indicator(domain: &[u64], group: &GroupSpec, point: u64) -> OracleTable {
    let values = domain
        .iter()
        .map(|&x| if x == point { group.unit() } else { group.zero() })
        .collect();
    OracleTable {
        domain: domain.to_vec(),
        values,
    }
}

/// Learn the sum-determining coset of a table [0,M) -> G: kernel generators
/// B_y (y != 0) take -1 at 0 and +1 at y, so the quotient coordinate is the
/// value at 0 shifted by the (invariant) total sum.
pub fn make_summation(m: u64, group: &GroupSpec) -> Result<QocInstance> {
    if m < 2 {
        return Err(QocError::domain("summation needs a domain of at least 2"));
    }
    let domain: Vec<u64> = (0..m).collect();
    let minus_one = group.neg(&group.unit())?;
    let kernel = (1..m)
        .map(|y| {
            let values = domain
                .iter()
                .map(|&x| {
                    if x == 0 {
                        minus_one.clone()
                    } else if x == y {
                        group.unit()
                    } else {
                        group.zero()
                    }
                })
                .collect();
            OracleTable {
                domain: domain.clone(),
                values,
            }
        })
        .collect();
    let quotient = vec![indicator(&domain, group, 0)];
    QocInstance::new(
        format!("summation(M={m}, G={})", group_label(group)),
        domain,
        group.clone(),
        kernel,
        quotient,
    )
}

/// Recover the oracle's values on a fixed target set: indicators off the
/// targets span the kernel, indicators on the targets span the quotient.
pub fn make_interrogation(m: u64, group: &GroupSpec, targets: &[u64]) -> Result<QocInstance> {
    if m < 1 {
        return Err(QocError::domain("interrogation needs a nonempty domain"));
    }
    if targets.is_empty() {
        return Err(QocError::domain("interrogation needs at least one target"));
    }
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != targets.len() {
        return Err(QocError::domain("targets must be distinct"));
    }
    if sorted.iter().any(|&y| y >= m) {
        return Err(QocError::domain("targets must lie in [0, M)"));
    }
    let domain: Vec<u64> = (0..m).collect();
    let kernel = domain
        .iter()
        .filter(|x| !sorted.contains(x))
        .map(|&y| indicator(&domain, group, y))
        .collect();
    let quotient = sorted
        .iter()
        .map(|&y| indicator(&domain, group, y))
        .collect();
    QocInstance::new(
        format!(
            "interrogation(M={m}, G={}, targets={sorted:?})",
            group_label(group)
        ),
        domain,
        group.clone(),
        kernel,
        quotient,
    )
}

fn prime_group(p: u64) -> Result<GroupSpec> {
    if !crate::algebra::is_prime(p) {
        return Err(QocError::domain(format!("{p} is not prime")));
    }
    GroupSpec::cyclic(p)
}

fn pow_mod(x: u64, e: u64, p: u64) -> u64 {
    let mut acc = 1u128;
    let x = x as u128 % p as u128;
    for _ in 0..e {
        acc = acc * x % p as u128;
    }
    acc as u64
}

fn poly_table(domain: &[u64], group: &GroupSpec, p: u64, f: impl Fn(u64) -> u64) -> OracleTable {
    let values = domain
        .iter()
        .map(|&x| group.element(vec![f(x) % p]).unwrap())
        .collect();
    OracleTable {
        domain: domain.to_vec(),
        values,
    }
}

/// Recover all coefficients of a hidden polynomial of degree at most d over
/// F_p: empty kernel, quotient spanned by the monomials x^0 .. x^d.
pub fn make_interpolation(p: u64, d: u64) -> Result<QocInstance> {
    if d < 1 {
        return Err(QocError::domain("interpolation needs degree at least 1"));
    }
    let group = prime_group(p)?;
    let domain: Vec<u64> = (0..p).collect();
    let quotient = (0..=d)
        .map(|i| poly_table(&domain, &group, p, |x| pow_mod(x, i, p)))
        .collect();
    QocInstance::new(
        format!("interpolation(p={p}, d={d})"),
        domain,
        group,
        Vec::new(),
        quotient,
    )
}

/// Recover a hidden degree-<=d polynomial's values at k chosen targets.
/// Polynomials vanishing on the targets form the kernel, spanned by
/// Q(x) * x^i for i = 0 .. d-k with Q = prod(x - y); the quotient is spanned
/// by the Lagrange polynomials of the target set, so the quotient
/// coefficients are literally the target outputs.
pub fn make_evaluation(p: u64, d: u64, targets: &[u64]) -> Result<QocInstance> {
    let group = prime_group(p)?;
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != targets.len() || sorted.is_empty() {
        return Err(QocError::domain("targets must be distinct and nonempty"));
    }
    if sorted.iter().any(|&y| y >= p) {
        return Err(QocError::domain("targets must lie in F_p"));
    }
    let k = sorted.len() as u64;
    if d < k {
        return Err(QocError::domain(
            "evaluation needs degree at least the number of targets",
        ));
    }
    let domain: Vec<u64> = (0..p).collect();
    let q_at = |x: u64| -> u64 {
        sorted
            .iter()
            .fold(1u128, |acc, &y| acc * ((x + p - y) % p) as u128 % p as u128) as u64
    };
    let kernel = (0..=d - k)
        .map(|i| poly_table(&domain, &group, p, |x| {
            (q_at(x) as u128 * pow_mod(x, i, p) as u128 % p as u128) as u64
        }))
        .collect();
    let quotient = sorted
        .iter()
        .map(|&y| {
            let lagrange = |x: u64| -> u64 {
                let mut acc = 1u128;
                for &y2 in &sorted {
                    if y2 == y {
                        continue;
                    }
                    let num = (x + p - y2) % p;
                    let den = crate::algebra::mod_inverse((y + p - y2) % p, p).unwrap();
                    acc = acc * num as u128 % p as u128;
                    acc = acc * den as u128 % p as u128;
                }
                acc as u64
            };
            poly_table(&domain, &group, p, lagrange)
        })
        .collect();
    QocInstance::new(
        format!("evaluation(p={p}, d={d}, targets={sorted:?})"),
        domain,
        group,
        kernel,
        quotient,
    )
}

/// Recover a hidden degree-<=d polynomial's value at 0 from queries on the
/// punctured domain F_p \ {0}: kernel spanned by x^1 .. x^d, quotient by the
/// constant 1, so the quotient coefficient is the value at 0.
pub fn make_extrapolation(p: u64, d: u64) -> Result<QocInstance> {
    if d < 1 {
        return Err(QocError::domain("extrapolation needs degree at least 1"));
    }
    let group = prime_group(p)?;
    let domain: Vec<u64> = (1..p).collect();
    let kernel = (1..=d)
        .map(|i| poly_table(&domain, &group, p, |x| pow_mod(x, i, p)))
        .collect();
    let quotient = vec![poly_table(&domain, &group, p, |_| 1)];
    QocInstance::new(
        format!("extrapolation(p={p}, d={d})"),
        domain,
        group,
        kernel,
        quotient,
    )
}

fn check_points(inst: &QocInstance, points: &[u64]) -> Result<()> {
    if !points.windows(2).all(|w| w[0] < w[1]) {
        return Err(QocError::domain("points must be strictly increasing"));
    }
    for &x in points {
        if inst.domain.binary_search(&x).is_err() {
            return Err(QocError::domain(format!(
                "point {x} is outside the instance domain"
            )));
        }
    }
    Ok(())
}

/// Kernel basis evaluated at the query points: s rows of length q.
pub fn matrix_b(inst: &QocInstance, points: &[u64]) -> Result<Vec<Vec<GroupElement>>> {
    check_points(inst, points)?;
    inst.kernel_basis
        .iter()
        .map(|table| points.iter().map(|&x| table.value(x).cloned()).collect())
        .collect()
}

/// Quotient basis evaluated at the query points: t rows of length q.
pub fn matrix_c(inst: &QocInstance, points: &[u64]) -> Result<Vec<Vec<GroupElement>>> {
    check_points(inst, points)?;
    inst.quotient_basis
        .iter()
        .map(|table| points.iter().map(|&x| table.value(x).cloned()).collect())
        .collect()
}

/// A canonical batch query: strictly increasing distinct points paired with
/// character indices, zero components allowed.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct QueryPair {
    points: Vec<u64>,
    chars: Vec<GroupElement>,
}

impl QueryPair {
    pub fn new(inst: &QocInstance, points: Vec<u64>, chars: Vec<GroupElement>) -> Result<Self> {
        if points.len() != chars.len() {
            return Err(QocError::structural(
                "points and characters must have equal length",
            ));
        }
        check_points(inst, &points)?;
        for r in &chars {
            if !inst.group.contains(r) {
                return Err(QocError::structural(
                    "character index does not belong to the group",
                ));
            }
        }
        Ok(QueryPair { points, chars })
    }

    /// Sort coordinates jointly by point; rejects repeated points.
    pub fn canonicalize(
        inst: &QocInstance,
        points: Vec<u64>,
        chars: Vec<GroupElement>,
    ) -> Result<Self> {
        if points.len() != chars.len() {
            return Err(QocError::structural(
                "points and characters must have equal length",
            ));
        }
        let mut paired: Vec<(u64, GroupElement)> = points.into_iter().zip(chars).collect();
        paired.sort_by_key(|(x, _)| *x);
        if paired.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(QocError::domain("query points must be distinct"));
        }
        let (points, chars) = paired.into_iter().unzip();
        QueryPair::new(inst, points, chars)
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    pub fn chars(&self) -> &[GroupElement] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Assemble the table of A = sum beta_l B_l + sum gamma_m C_m.
pub fn oracle_from_coeffs(
    inst: &QocInstance,
    beta: &[GroupElement],
    gamma: &[GroupElement],
) -> Result<OracleTable> {
    if beta.len() != inst.s() || gamma.len() != inst.t() {
        return Err(QocError::structural(format!(
            "expected {} kernel and {} quotient coefficients, got {} and {}",
            inst.s(),
            inst.t(),
            beta.len(),
            gamma.len()
        )));
    }
    let zero = OracleTable {
        domain: inst.domain.clone(),
        values: vec![inst.group.zero(); inst.domain.len()],
    };
    let mut acc = zero;
    for (coeff, table) in beta
        .iter()
        .zip(&inst.kernel_basis)
        .chain(gamma.iter().zip(&inst.quotient_basis))
    {
        acc = acc.add(&table.scaled(coeff, &inst.group)?, &inst.group)?;
    }
    Ok(acc)
}

/// Draw uniform coefficients from a seeded stream and assemble the oracle.
pub fn sample_oracle(
    inst: &QocInstance,
    seed: u64,
) -> Result<(Vec<GroupElement>, Vec<GroupElement>, OracleTable)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| -> Vec<GroupElement> {
        (0..count)
            .map(|_| {
                let residues = inst
                    .group
                    .moduli()
                    .iter()
                    .map(|&n| rng.gen_range(0..n))
                    .collect();
                inst.group.element(residues).unwrap()
            })
            .collect()
    };
    let beta = draw(inst.s());
    let gamma = draw(inst.t());
    let table = oracle_from_coeffs(inst, &beta, &gamma)?;
    Ok((beta, gamma, table))
}

fn coeff_space_size(inst: &QocInstance, generators: usize) -> Result<u128> {
    let mut size = 1u128;
    for _ in 0..generators {
        size = size
            .checked_mul(inst.group.order())
            .ok_or_else(|| QocError::structural("coefficient space overflows u128"))?;
    }
    Ok(size)
}

/// All tables in the kernel span, by exhaustive combination.
pub fn kernel_span(inst: &QocInstance, guard: u128) -> Result<Vec<OracleTable>> {
    let size = coeff_space_size(inst, inst.s())?;
    if size > guard {
        return Err(QocError::Capacity {
            what: "kernel span enumeration".into(),
            needed: size,
            guard,
        });
    }
    let zero_gamma = vec![inst.group.zero(); inst.t()];
    enumerate_vectors(&inst.group, inst.s())
        .iter()
        .map(|beta| oracle_from_coeffs(inst, beta, &zero_gamma))
        .collect()
}

/// Check that distinct coefficient vectors yield distinct tables, i.e. that
/// the basis presents a free module.
pub fn verify_free(inst: &QocInstance, guard: u128) -> Result<bool> {
    let size = coeff_space_size(inst, inst.s() + inst.t())?;
    if size > guard {
        return Err(QocError::Capacity {
            what: "free-module check".into(),
            needed: size,
            guard,
        });
    }
    let mut seen: HashSet<Vec<GroupElement>> = HashSet::with_capacity(size as usize);
    for coeffs in enumerate_vectors(&inst.group, inst.s() + inst.t()) {
        let (beta, gamma) = coeffs.split_at(inst.s());
        let table = oracle_from_coeffs(inst, beta, gamma)?;
        if !seen.insert(table.values().to_vec()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// On-disk instance description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceDef {
    Summation {
        #[serde(rename = "M")]
        m: u64,
        moduli: Vec<u64>,
    },
    Interrogation {
        #[serde(rename = "M")]
        m: u64,
        moduli: Vec<u64>,
        targets: Vec<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<u64>,
    },
    Interpolation {
        p: u64,
        d: u64,
    },
    Evaluation {
        p: u64,
        d: u64,
        targets: Vec<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<u64>,
    },
    Extrapolation {
        p: u64,
        d: u64,
    },
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        domain: Vec<u64>,
        moduli: Vec<u64>,
        kernel_basis: Vec<Vec<Vec<u64>>>,
        quotient_basis: Vec<Vec<Vec<u64>>>,
    },
}

impl InstanceDef {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| QocError::domain(format!("invalid instance file: {e}")))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            InstanceDef::Summation { .. } => "summation",
            InstanceDef::Interrogation { .. } => "interrogation",
            InstanceDef::Interpolation { .. } => "interpolation",
            InstanceDef::Evaluation { .. } => "evaluation",
            InstanceDef::Extrapolation { .. } => "extrapolation",
            InstanceDef::Custom { .. } => "custom",
        }
    }

    pub fn to_instance(&self) -> Result<QocInstance> {
        match self {
            InstanceDef::Summation { m, moduli } => {
                let group = GroupSpec::new(moduli.clone())?;
                make_summation(*m, &group)
            }
            InstanceDef::Interrogation {
                m,
                moduli,
                targets,
                k,
            } => {
                if let Some(k) = k {
                    if *k as usize != targets.len() {
                        return Err(QocError::domain(
                            "field k disagrees with the number of targets",
                        ));
                    }
                }
                let group = GroupSpec::new(moduli.clone())?;
                make_interrogation(*m, &group, targets)
            }
            InstanceDef::Interpolation { p, d } => make_interpolation(*p, *d),
            InstanceDef::Evaluation { p, d, targets, k } => {
                if let Some(k) = k {
                    if *k as usize != targets.len() {
                        return Err(QocError::domain(
                            "field k disagrees with the number of targets",
                        ));
                    }
                }
                make_evaluation(*p, *d, targets)
            }
            InstanceDef::Extrapolation { p, d } => make_extrapolation(*p, *d),
            InstanceDef::Custom {
                label,
                domain,
                moduli,
                kernel_basis,
                quotient_basis,
            } => {
                let group = GroupSpec::new(moduli.clone())?;
                let build = |raw: &Vec<Vec<u64>>| -> Result<OracleTable> {
                    if raw.len() != domain.len() {
                        return Err(QocError::structural(
                            "custom table length does not match the domain",
                        ));
                    }
                    let values = raw
                        .iter()
                        .map(|residues| {
                            let e = group.element(residues.clone())?;
                            if e.residues() != residues.as_slice() {
                                return Err(QocError::structural(format!(
                                    "custom table value {residues:?} is not reduced"
                                )));
                            }
                            Ok(e)
                        })
                        .collect::<Result<_>>()?;
                    OracleTable::new(domain.clone(), values, &group)
                };
                let kernel = kernel_basis.iter().map(build).collect::<Result<_>>()?;
                let quotient = quotient_basis.iter().map(build).collect::<Result<_>>()?;
                QocInstance::new(
                    label.clone().unwrap_or_else(|| "custom".into()),
                    domain.clone(),
                    group,
                    kernel,
                    quotient,
                )
            }
        }
    }
}
