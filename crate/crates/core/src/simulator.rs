//! Double-precision simulation of the optimal measurement and of explicit
//! single-round algorithms.
//!
//! The winning class from the exact count indexes an orthonormal basis, one
//! axis per reachable payoff z. For the oracle coset with quotient
//! coefficients gamma, the post-query state has amplitude chi_z(gamma) /
//! sqrt(|E|) on axis z, |E| the class size: the multiplicity of a payoff
//! cancels against the weighting of its query pairs. The Gram matrix U of
//! these states satisfies U^2 = (|cosets|/|E|) U, its principal square root
//! is sqrt(|E|/|cosets|) U, and measuring in the pretty-good basis
//! R = T U^{-1/2} (pseudoinverse when U is rank-deficient) succeeds with
//! probability |E|/|cosets| on every coset, matching the exact count.
//!
//! `ParallelAlgorithm` is the explicit form of a general single-round
//! strategy: a unit start vector over (query pair, workspace) labels, the
//! query phases, one mixing unitary, a measurement in the label basis and a
//! label -> guess map. Random instances of it provide an executable lower
//! bound check; `ParallelAlgorithm::optimal` rebuilds the witness-based
//! optimum in this form.

use crate::algebra::{enumerate_vectors, ExactPhase, GroupElement};
use crate::counting::{count_optimal, enumerate_pairs, hz_of_pair, CountConfig, CountingResult};
use crate::error::{QocError, Result};
use crate::instance::{oracle_from_coeffs, OracleTable, QocInstance, QueryPair};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;

/// Tolerances and guards for the floating-point layer.
#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Tolerance for probability comparisons.
    pub prob_tol: f64,
    /// Tolerance for matrix identity checks.
    pub matrix_tol: f64,
    /// Largest number of cosets the dense linear algebra will accept.
    pub max_quotient: u128,
    /// Largest oracle space an explicit algorithm run will average over.
    pub max_oracles: u128,
    /// Largest (pair, workspace) dimension for explicit algorithms.
    pub max_state_dim: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            prob_tol: 1e-9,
            matrix_tol: 1e-8,
            max_quotient: 4096,
            max_oracles: 1_000_000,
            max_state_dim: 4096,
        }
    }
}

/// One payoff of the winning class with the canonical pairs realizing it.
#[derive(Clone, Debug)]
pub struct ClassMember {
    pub z: Vec<GroupElement>,
    pub multiplicity: u64,
    pub pairs: Vec<QueryPair>,
}

/// The winning class: fingerprint h plus its members in first-appearance
/// order.
#[derive(Clone, Debug)]
pub struct ClassBasis {
    pub h: Vec<GroupElement>,
    pub members: Vec<ClassMember>,
}

impl ClassBasis {
    /// Collect every canonical pair of the class keyed by payoff.
    pub fn for_class(
        inst: &QocInstance,
        q: usize,
        h: &[GroupElement],
        cfg: &CountConfig,
    ) -> Result<ClassBasis> {
        let mut members: Vec<ClassMember> = Vec::new();
        let mut index: HashMap<Vec<GroupElement>, usize> = HashMap::new();
        for pair in enumerate_pairs(inst, q, cfg)? {
            let (ph, z) = hz_of_pair(inst, &pair)?;
            if ph != h {
                continue;
            }
            match index.get(&z) {
                Some(&i) => {
                    members[i].multiplicity += 1;
                    members[i].pairs.push(pair);
                }
                None => {
                    index.insert(z.clone(), members.len());
                    members.push(ClassMember {
                        z,
                        multiplicity: 1,
                        pairs: vec![pair],
                    });
                }
            }
        }
        if members.is_empty() {
            return Err(QocError::domain("no canonical pair has the given fingerprint"));
        }
        Ok(ClassBasis {
            h: h.to_vec(),
            members,
        })
    }

    /// Light-weight basis from a finished count: one representative pair
    /// per member.
    pub fn from_counting(result: &CountingResult) -> ClassBasis {
        ClassBasis {
            h: result.best_h.clone(),
            members: result
                .witnesses
                .iter()
                .map(|w| ClassMember {
                    z: w.z.clone(),
                    multiplicity: w.multiplicity,
                    pairs: vec![w.pair.clone()],
                })
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Character phase chi_z(gamma) = prod_m chi_{z_m}(gamma_m).
fn member_phase(
    inst: &QocInstance,
    z: &[GroupElement],
    gamma: &[GroupElement],
) -> Result<ExactPhase> {
    let group = inst.group();
    let mut acc = ExactPhase::one(group.phase_order());
    for (zm, gm) in z.iter().zip(gamma) {
        acc = acc.mul(&group.char_eval(zm, gm)?)?;
    }
    Ok(acc)
}

/// Post-query state of the coset `gamma` on the class basis: unit vector
/// with entry chi_z(gamma) / sqrt(|E|) per member z.
pub fn build_class_state(
    inst: &QocInstance,
    class: &ClassBasis,
    gamma: &[GroupElement],
) -> Result<DVector<Complex64>> {
    if gamma.len() != inst.t() {
        return Err(QocError::structural(format!(
            "expected {} quotient coefficients, got {}",
            inst.t(),
            gamma.len()
        )));
    }
    let scale = 1.0 / (class.size() as f64).sqrt();
    let entries = class
        .members
        .iter()
        .map(|m| Ok(member_phase(inst, &m.z, gamma)?.to_complex() * scale))
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(entries))
}

/// Pairwise inner products; entry (i, j) = <state_i | state_j>.
pub fn gram_matrix(states: &[DVector<Complex64>]) -> DMatrix<Complex64> {
    let n = states.len();
    DMatrix::from_fn(n, n, |i, j| states[i].dotc(&states[j]))
}

fn hermitian_eigen(
    u: &DMatrix<Complex64>,
) -> (DVector<f64>, DMatrix<Complex64>) {
    let eig = u.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

fn recompose(
    vectors: &DMatrix<Complex64>,
    diag: impl Fn(f64) -> f64,
    eigenvalues: &DVector<f64>,
) -> DMatrix<Complex64> {
    let d = DVector::from_iterator(
        eigenvalues.len(),
        eigenvalues.iter().map(|&l| Complex64::new(diag(l), 0.0)),
    );
    vectors * DMatrix::from_diagonal(&d) * vectors.adjoint()
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Principal square root of the Gram matrix.
///
/// Computed in closed form as sqrt(|E|/dim) * U. The result is verified to
/// be Hermitian with nonnegative spectrum and to square back to U, which
/// pins the principal root uniquely; any violation beyond `matrix_tol`
/// (spectrum: -1e-9) is reported as a consistency error.
pub fn sqrt_gram(
    u: &DMatrix<Complex64>,
    class_size: usize,
    matrix_tol: f64,
) -> Result<DMatrix<Complex64>> {
    let dim = u.nrows();
    if dim == 0 || class_size == 0 {
        return Err(QocError::structural("empty Gram matrix"));
    }
    if max_abs(&(u - u.adjoint())) > matrix_tol {
        return Err(QocError::numerical("Gram matrix is not Hermitian"));
    }
    let (eigenvalues, _) = hermitian_eigen(u);
    if let Some(&worst) = eigenvalues
        .iter()
        .filter(|&&l| l < -1e-9)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
    {
        return Err(QocError::numerical(format!(
            "Gram matrix has negative eigenvalue {worst:e}"
        )));
    }
    let closed = u * Complex64::new((class_size as f64 / dim as f64).sqrt(), 0.0);
    let gap = max_abs(&(&closed * &closed - u));
    if gap > matrix_tol {
        return Err(QocError::numerical(format!(
            "square of the closed-form Gram root misses the Gram matrix by {gap:e}"
        )));
    }
    Ok(closed)
}

/// Moore-Penrose inverse square root on the support of U.
fn pinv_sqrt(u: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let (eigenvalues, vectors) = hermitian_eigen(u);
    let max = eigenvalues.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(QocError::numerical("Gram matrix has no positive spectrum"));
    }
    let cut = 1e-8 * max;
    Ok(recompose(
        &vectors,
        |l| if l > cut { 1.0 / l.sqrt() } else { 0.0 },
        &eigenvalues,
    ))
}

/// Dimension of the span of the given states: singular values above
/// 1e-8 times the largest.
pub fn span_rank(states: &[DVector<Complex64>]) -> usize {
    if states.is_empty() {
        return 0;
    }
    let rows = states[0].len();
    let m = DMatrix::from_fn(rows, states.len(), |i, j| states[j][i]);
    let sv = m.svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * max).count()
}

/// Everything the optimal-measurement simulation produces.
#[derive(Clone, Debug)]
pub struct GramReport {
    /// Number of cosets, the matrix dimension.
    pub dimension: usize,
    /// Size |E| of the winning class.
    pub class_size: usize,
    pub gram: DMatrix<Complex64>,
    pub sqrt_gram: DMatrix<Complex64>,
    /// |<R_C | psi_C>|^2 per coset, in coset enumeration order.
    pub per_coset_success: Vec<f64>,
    pub total_success: f64,
}

/// Build the winning-class states for every coset, take their Gram matrix,
/// and read off the success probability of the pretty-good measurement.
pub fn optimal_success(
    inst: &QocInstance,
    q: usize,
    ccfg: &CountConfig,
    scfg: &SimConfig,
) -> Result<GramReport> {
    if inst.quotient_order() > scfg.max_quotient {
        return Err(QocError::Capacity {
            what: "coset-space linear algebra".into(),
            needed: inst.quotient_order(),
            guard: scfg.max_quotient,
        });
    }
    let counting = count_optimal(inst, q, ccfg)?;
    let class = ClassBasis::from_counting(&counting);
    let gammas = enumerate_vectors(inst.group(), inst.t());
    let states = gammas
        .iter()
        .map(|gamma| build_class_state(inst, &class, gamma))
        .collect::<Result<Vec<_>>>()?;
    let gram = gram_matrix(&states);
    let sqrt = sqrt_gram(&gram, class.size(), scfg.matrix_tol)?;
    // <R_C | psi_C> is the diagonal of U^{-1/2} U, the square root of U
    // restricted to its support.
    let projected = pinv_sqrt(&gram)? * &gram;
    let per_coset_success: Vec<f64> = (0..gram.nrows())
        .map(|c| projected[(c, c)].norm_sqr())
        .collect();
    let total_success = per_coset_success.iter().sum::<f64>() / per_coset_success.len() as f64;
    Ok(GramReport {
        dimension: gram.nrows(),
        class_size: class.size(),
        gram,
        sqrt_gram: sqrt,
        per_coset_success,
        total_success,
    })
}

/// Explicit single-round algorithm on the (pair, workspace) label basis.
///
/// Labels are pair-major: label = pair_index * workspace + w. After the
/// batched query multiplies each pair block by its oracle phase, `mix` is
/// applied, the label is measured, and `decode` maps it to a guessed coset
/// index.
#[derive(Clone, Debug)]
pub struct ParallelAlgorithm {
    pub init: DVector<Complex64>,
    pub mix: DMatrix<Complex64>,
    pub decode: Vec<usize>,
    pub n_pairs: usize,
    pub workspace: usize,
}

const ALG_TOL: f64 = 1e-9;

impl ParallelAlgorithm {
    pub fn dimension(&self) -> usize {
        self.n_pairs * self.workspace
    }

    pub fn validate(&self, n_cosets: usize) -> Result<()> {
        let d = self.dimension();
        if self.init.len() != d || self.mix.nrows() != d || self.mix.ncols() != d {
            return Err(QocError::structural(format!(
                "algorithm dimension mismatch: init {}, mix {}x{}, expected {d}",
                self.init.len(),
                self.mix.nrows(),
                self.mix.ncols()
            )));
        }
        if self.decode.len() != d {
            return Err(QocError::structural("decode table must cover every label"));
        }
        if self.decode.iter().any(|&g| g >= n_cosets) {
            return Err(QocError::structural("decode target outside the coset range"));
        }
        if (self.init.norm() - 1.0).abs() > ALG_TOL {
            return Err(QocError::structural("start vector is not unit norm"));
        }
        let gap = max_abs(&(self.mix.adjoint() * &self.mix - DMatrix::identity(d, d)));
        if gap > ALG_TOL {
            return Err(QocError::structural(format!(
                "mix is not unitary (deviation {gap:e})"
            )));
        }
        Ok(())
    }

    /// Seeded Haar-style random algorithm with the default surjective
    /// decode label -> label mod cosets.
    pub fn random(inst: &QocInstance, q: usize, seed: u64, cfg: &CountConfig) -> Result<Self> {
        let n_pairs = enumerate_pairs(inst, q, cfg)?.len();
        let workspace = quotient_size(inst)?;
        let d = n_pairs * workspace;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cplx = |rng: &mut ChaCha8Rng| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        };
        let mut init = DVector::from_fn(d, |_, _| cplx(&mut rng));
        init /= Complex64::new(init.norm(), 0.0);
        let gauss = DMatrix::from_fn(d, d, |_, _| cplx(&mut rng));
        let qr = gauss.qr();
        let r = qr.r();
        let mut mix = qr.q();
        for i in 0..d {
            let diag = r[(i, i)];
            let phase = if diag.norm() > 0.0 {
                diag / diag.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            for row in 0..d {
                mix[(row, i)] *= phase;
            }
        }
        let decode = (0..d).map(|l| l % workspace).collect();
        Ok(ParallelAlgorithm {
            init,
            mix,
            decode,
            n_pairs,
            workspace,
        })
    }

    /// The witness-based optimum, recast as an explicit algorithm: start
    /// from the winning class superposition and rotate the pretty-good
    /// measurement onto the label basis.
    pub fn optimal(inst: &QocInstance, q: usize, ccfg: &CountConfig, scfg: &SimConfig) -> Result<Self> {
        let counting = count_optimal(inst, q, ccfg)?;
        let class = ClassBasis::for_class(inst, q, &counting.best_h, ccfg)?;
        let pairs = enumerate_pairs(inst, q, ccfg)?;
        let pair_index: HashMap<&QueryPair, usize> =
            pairs.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let workspace = quotient_size(inst)?;
        let n_pairs = pairs.len();
        let d = n_pairs * workspace;
        if d > scfg.max_state_dim {
            return Err(QocError::Capacity {
                what: "explicit algorithm state".into(),
                needed: d as u128,
                guard: scfg.max_state_dim as u128,
            });
        }

        let gammas = enumerate_vectors(inst.group(), inst.t());
        let states = gammas
            .iter()
            .map(|gamma| build_class_state(inst, &class, gamma))
            .collect::<Result<Vec<_>>>()?;
        let t_mat = DMatrix::from_fn(class.size(), gammas.len(), |i, j| states[j][i]);
        let gram = gram_matrix(&states);
        let r_mat = &t_mat * pinv_sqrt(&gram)?;

        // start vector: weight 1/sqrt(|E| * S) on each pair of a member
        // with multiplicity S, workspace slot 0
        let mut init = DVector::zeros(d);
        let scale = 1.0 / (class.size() as f64).sqrt();
        for member in &class.members {
            let w = scale / (member.multiplicity as f64).sqrt();
            for pair in &member.pairs {
                init[pair_index[pair] * workspace] = Complex64::new(w, 0.0);
            }
        }

        // X maps the measurement vector R_c (embedded in the pair basis) to
        // the label that decodes to coset c; complete X to a unitary via its
        // singular vectors.
        let anchor = pair_index[&class.members[0].pairs[0]];
        let mut x = DMatrix::<Complex64>::zeros(d, d);
        for c in 0..gammas.len() {
            let label = anchor * workspace + c;
            for (j, member) in class.members.iter().enumerate() {
                let amp = r_mat[(j, c)] / (member.multiplicity as f64).sqrt();
                for pair in &member.pairs {
                    x[(label, pair_index[pair] * workspace)] += amp.conj();
                }
            }
        }
        let svd = x.svd(true, true);
        let mix = svd.u.unwrap() * svd.v_t.unwrap();

        let decode = (0..d).map(|l| l % workspace).collect();
        let alg = ParallelAlgorithm {
            init,
            mix,
            decode,
            n_pairs,
            workspace,
        };
        alg.validate(workspace)?;
        Ok(alg)
    }
}

fn quotient_size(inst: &QocInstance) -> Result<usize> {
    usize::try_from(inst.quotient_order())
        .map_err(|_| QocError::structural("coset space does not fit in usize"))
}

fn oracle_space(inst: &QocInstance, scfg: &SimConfig) -> Result<()> {
    let mut size = 1u128;
    for _ in 0..inst.s() + inst.t() {
        size = size
            .checked_mul(inst.group().order())
            .ok_or_else(|| QocError::structural("oracle space overflows u128"))?;
    }
    if size > scfg.max_oracles {
        return Err(QocError::Capacity {
            what: "oracle-space average".into(),
            needed: size,
            guard: scfg.max_oracles,
        });
    }
    Ok(())
}

fn pair_phases(
    inst: &QocInstance,
    pairs: &[QueryPair],
    table: &OracleTable,
) -> Result<Vec<Complex64>> {
    let group = inst.group();
    pairs
        .iter()
        .map(|pair| {
            let mut acc = ExactPhase::one(group.phase_order());
            for (&x, r) in pair.points().iter().zip(pair.chars()) {
                acc = acc.mul(&group.char_eval(r, table.value(x)?)?)?;
            }
            Ok(acc.to_complex())
        })
        .collect()
}

fn run_with_shift(
    alg: &ParallelAlgorithm,
    inst: &QocInstance,
    q: usize,
    shift: Option<(&[GroupElement], &[GroupElement])>,
    ccfg: &CountConfig,
    scfg: &SimConfig,
) -> Result<f64> {
    let workspace = quotient_size(inst)?;
    alg.validate(workspace)?;
    let pairs = enumerate_pairs(inst, q, ccfg)?;
    if pairs.len() != alg.n_pairs || workspace != alg.workspace {
        return Err(QocError::structural(
            "algorithm was built for a different instance or query count",
        ));
    }
    oracle_space(inst, scfg)?;

    let group = inst.group();
    let gammas = enumerate_vectors(group, inst.t());
    let betas = enumerate_vectors(group, inst.s());
    let gamma_index: HashMap<&Vec<GroupElement>, usize> =
        gammas.iter().enumerate().map(|(i, g)| (g, i)).collect();

    let shift_table = match shift {
        Some((beta0, gamma0)) => Some((
            oracle_from_coeffs(inst, beta0, gamma0)?,
            gamma0.to_vec(),
        )),
        None => None,
    };

    let mut total = 0.0;
    let mut count = 0u64;
    for gamma in &gammas {
        // the guess must match the true coset; under a shift the algorithm
        // sees gamma + gamma0 and its guess is corrected by -gamma0, so the
        // winning label set is the one decoding to gamma + gamma0
        let target = match &shift_table {
            Some((_, gamma0)) => {
                let shifted = gamma
                    .iter()
                    .zip(gamma0)
                    .map(|(a, b)| group.add(a, b))
                    .collect::<Result<Vec<_>>>()?;
                gamma_index[&shifted]
            }
            None => gamma_index[gamma],
        };
        for beta in &betas {
            let mut table = oracle_from_coeffs(inst, beta, gamma)?;
            if let Some((t0, _)) = &shift_table {
                table = table.add(t0, group)?;
            }
            let phases = pair_phases(inst, &pairs, &table)?;
            let mut state = alg.init.clone();
            for (p, phase) in phases.iter().enumerate() {
                for w in 0..alg.workspace {
                    state[p * alg.workspace + w] *= phase;
                }
            }
            let final_state = &alg.mix * state;
            let success: f64 = final_state
                .iter()
                .enumerate()
                .filter(|(label, _)| alg.decode[*label] == target)
                .map(|(_, amp)| amp.norm_sqr())
                .sum();
            total += success;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Exact average success of an explicit algorithm over every oracle.
pub fn run_parallel_algorithm(
    alg: &ParallelAlgorithm,
    inst: &QocInstance,
    q: usize,
    ccfg: &CountConfig,
    scfg: &SimConfig,
) -> Result<f64> {
    run_with_shift(alg, inst, q, None, ccfg, scfg)
}

/// Run against the shifted oracle A + A0 and correct the decoded guess by
/// -gamma0. The average success must match the unshifted run.
pub fn oracle_shift_run(
    alg: &ParallelAlgorithm,
    inst: &QocInstance,
    q: usize,
    beta0: &[GroupElement],
    gamma0: &[GroupElement],
    ccfg: &CountConfig,
    scfg: &SimConfig,
) -> Result<f64> {
    if beta0.len() != inst.s() || gamma0.len() != inst.t() {
        return Err(QocError::structural("shift coefficients have wrong arity"));
    }
    run_with_shift(alg, inst, q, Some((beta0, gamma0)), ccfg, scfg)
}
