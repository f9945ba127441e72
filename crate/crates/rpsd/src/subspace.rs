//! Covering subspace families, random selections and averaged projections.
//!
//! Two families are supported on `R^n`:
//! * `Axes`: one subspace per coordinate axis, `C_i = span(e_i)`;
//! * `Jumps`: `C_i = {x : x_j = x_{j+1} for all j != i}`, the vectors whose
//!   only allowed variation sits between positions `i` and `i+1` (0-based).
//!
//! A selection draws a subset of the family and sums the members. Applying
//! the orthogonal projection onto that sum is done matrix-free: masking for
//! `Axes`, block means for `Jumps`. The expectation of the projection,
//! `pbar = E[P_S]`, is positive definite for admissible laws; its inverse
//! square root `q` is the change of basis used by the solver.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Eigenvalues of `pbar` below this floor are treated as a sign of an
/// effectively inadmissible sampling.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Largest number of outcomes the exact expectation will enumerate.
pub const EXACT_ENUMERATION_LIMIT: u128 = 1_000_000;

/// Default number of Monte-Carlo samples when enumeration is too large.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Axes,
    Jumps,
}

/// A covering family of subspaces of `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubspaceFamily {
    kind: FamilyKind,
    n: usize,
}

impl SubspaceFamily {
    /// Coordinate axes family, one subspace per coordinate.
    pub fn axes(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfiguration(
                "ambient dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            kind: FamilyKind::Axes,
            n,
        })
    }

    /// Fixed-variation family; member `i` allows a jump between positions
    /// `i` and `i+1` only.
    pub fn jumps(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfiguration(
                "the jump family needs ambient dimension at least 2".into(),
            ));
        }
        Ok(Self {
            kind: FamilyKind::Jumps,
            n,
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of members: `n` for axes, `n - 1` for jumps.
    pub fn size(&self) -> usize {
        match self.kind {
            FamilyKind::Axes => self.n,
            FamilyKind::Jumps => self.n - 1,
        }
    }
}

/// How a random subset of the family is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionVariant {
    /// Each member `i` enters the selection independently with probability
    /// `probs[i]`.
    BernoulliPerSubspace { probs: Vec<f64> },
    /// All `forced` members enter; `sample_size` more are drawn uniformly
    /// without replacement from the rest.
    FixedSampleSize {
        sample_size: usize,
        forced: Vec<usize>,
    },
}

/// A selection law together with the seed of its dedicated randomness
/// (used by Monte-Carlo estimation of the averaged projection).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionLaw {
    pub variant: SelectionVariant,
    pub seed: u64,
}

impl SelectionLaw {
    pub fn bernoulli(probs: Vec<f64>, seed: u64) -> Self {
        Self {
            variant: SelectionVariant::BernoulliPerSubspace { probs },
            seed,
        }
    }

    pub fn fixed_sample_size(sample_size: usize, forced: Vec<usize>, seed: u64) -> Self {
        let mut forced = forced;
        forced.sort_unstable();
        forced.dedup();
        Self {
            variant: SelectionVariant::FixedSampleSize {
                sample_size,
                forced,
            },
            seed,
        }
    }

    /// Structural validation against a family (lengths, ranges).
    pub fn validate(&self, family: &SubspaceFamily) -> Result<()> {
        let m = family.size();
        match &self.variant {
            SelectionVariant::BernoulliPerSubspace { probs } => {
                if probs.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: probs.len(),
                    });
                }
                if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::InvalidConfiguration(
                        "Bernoulli probabilities must lie in [0, 1]".into(),
                    ));
                }
            }
            SelectionVariant::FixedSampleSize {
                sample_size,
                forced,
            } => {
                if forced.iter().any(|&i| i >= m) {
                    return Err(Error::InvalidConfiguration(format!(
                        "forced index out of range (family size {m})"
                    )));
                }
                let pool = m - forced.len();
                if *sample_size > pool {
                    return Err(Error::InvalidConfiguration(format!(
                        "sample size {sample_size} exceeds the {pool} non-forced members"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Admissibility: every member must have positive inclusion probability.
    pub fn check_admissible(&self, family: &SubspaceFamily) -> Result<()> {
        self.validate(family)?;
        let m = family.size();
        match &self.variant {
            SelectionVariant::BernoulliPerSubspace { probs } => {
                if let Some(i) = probs.iter().position(|&p| p <= 0.0) {
                    return Err(Error::Admissibility(format!(
                        "subspace {i} has zero inclusion probability"
                    )));
                }
            }
            SelectionVariant::FixedSampleSize {
                sample_size,
                forced,
            } => {
                if *sample_size == 0 && forced.len() < m {
                    return Err(Error::Admissibility(
                        "sample size 0 leaves non-forced subspaces never selected".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Probability that member `i` belongs to the selection.
    pub fn inclusion_probability(&self, family: &SubspaceFamily, i: usize) -> f64 {
        match &self.variant {
            SelectionVariant::BernoulliPerSubspace { probs } => probs[i],
            SelectionVariant::FixedSampleSize {
                sample_size,
                forced,
            } => {
                if forced.binary_search(&i).is_ok() {
                    1.0
                } else {
                    let pool = family.size() - forced.len();
                    if pool == 0 {
                        1.0
                    } else {
                        *sample_size as f64 / pool as f64
                    }
                }
            }
        }
    }
}

/// One drawn outcome: a sorted set of member indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    chosen: Vec<usize>,
}

impl Selection {
    /// Build from arbitrary indices; sorts and deduplicates.
    pub fn new(mut chosen: Vec<usize>) -> Self {
        chosen.sort_unstable();
        chosen.dedup();
        Self { chosen }
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }
}

/// Draw one selection from the law.
///
/// The Bernoulli variant consumes exactly one uniform per member, and the
/// fixed-sample-size variant uses a partial Fisher-Yates shuffle of the
/// non-forced indices, so streams are reproducible under a seeded `rng`.
pub fn draw_selection<R: Rng + ?Sized>(
    family: &SubspaceFamily,
    law: &SelectionLaw,
    rng: &mut R,
) -> Result<Selection> {
    law.validate(family)?;
    let m = family.size();
    match &law.variant {
        SelectionVariant::BernoulliPerSubspace { probs } => {
            let mut chosen = Vec::new();
            for (i, &p) in probs.iter().enumerate() {
                let u: f64 = rng.random();
                if u < p {
                    chosen.push(i);
                }
            }
            Ok(Selection { chosen })
        }
        SelectionVariant::FixedSampleSize {
            sample_size,
            forced,
        } => {
            let mut pool: Vec<usize> = (0..m)
                .filter(|i| forced.binary_search(i).is_err())
                .collect();
            for j in 0..*sample_size {
                let r = rng.random_range(j..pool.len());
                pool.swap(j, r);
            }
            let mut chosen = forced.clone();
            chosen.extend_from_slice(&pool[..*sample_size]);
            chosen.sort_unstable();
            Ok(Selection { chosen })
        }
    }
}

/// Apply the orthogonal projection onto the selected subspace, matrix-free.
///
/// Axes: keep the chosen coordinates, zero elsewhere. Jumps: the chosen jump
/// indices split `0..n` into blocks and every block is filled with its mean.
/// An empty selection projects onto the trivial subspace `{0}`.
pub fn apply_projection(family: &SubspaceFamily, sel: &Selection, v: &Array1<f64>) -> Array1<f64> {
    assert_eq!(
        v.len(),
        family.dim(),
        "vector length must match the ambient dimension"
    );
    let n = family.dim();
    let mut out = Array1::zeros(n);
    if sel.is_empty() {
        return out;
    }
    match family.kind() {
        FamilyKind::Axes => {
            for &i in sel.chosen() {
                out[i] = v[i];
            }
        }
        FamilyKind::Jumps => {
            let mut start = 0;
            for &j in sel.chosen().iter().chain(std::iter::once(&(n - 1))) {
                let end = j + 1; // block is start..end
                let len = (end - start) as f64;
                let mean = v.slice(ndarray::s![start..end]).sum() / len;
                for i in start..end {
                    out[i] = mean;
                }
                start = end;
            }
        }
    }
    out
}

/// How `pbar = E[P_S]` is estimated for laws without a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimation {
    /// Enumerate every outcome with positive probability; errors out above
    /// [`EXACT_ENUMERATION_LIMIT`].
    Exact,
    /// Average `samples` drawn projections (seeded by the law's own seed),
    /// then symmetrize.
    MonteCarlo { samples: usize },
    /// `Exact` when the outcome count fits the limit, `MonteCarlo` otherwise.
    Auto { samples: usize },
}

#[derive(Debug, Clone)]
enum Repr {
    Diagonal {
        pbar: Array1<f64>,
        q: Array1<f64>,
        qinv: Array1<f64>,
    },
    Dense {
        pbar: Array2<f64>,
        q: Array2<f64>,
        qinv: Array2<f64>,
    },
}

/// The averaged projection `pbar` with its inverse square root `q` and
/// `qinv = q^{-1} = pbar^{1/2}`, plus the extreme eigenvalues.
///
/// Diagonal storage is used exactly for the axes family; the jump family
/// gets dense matrices.
#[derive(Debug, Clone)]
pub struct AveragedProjection {
    repr: Repr,
    lambda_min: f64,
    lambda_max: f64,
}

impl AveragedProjection {
    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Diagonal { pbar, .. } => pbar.len(),
            Repr::Dense { pbar, .. } => pbar.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal { .. })
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn apply_q(&self, v: &Array1<f64>) -> Array1<f64> {
        match &self.repr {
            Repr::Diagonal { q, .. } => q * v,
            Repr::Dense { q, .. } => q.dot(v),
        }
    }

    pub fn apply_qinv(&self, v: &Array1<f64>) -> Array1<f64> {
        match &self.repr {
            Repr::Diagonal { qinv, .. } => qinv * v,
            Repr::Dense { qinv, .. } => qinv.dot(v),
        }
    }

    pub fn apply_pbar(&self, v: &Array1<f64>) -> Array1<f64> {
        match &self.repr {
            Repr::Diagonal { pbar, .. } => pbar * v,
            Repr::Dense { pbar, .. } => pbar.dot(v),
        }
    }

    pub fn pbar_dense(&self) -> Array2<f64> {
        match &self.repr {
            Repr::Diagonal { pbar, .. } => Array2::from_diag(pbar),
            Repr::Dense { pbar, .. } => pbar.clone(),
        }
    }

    pub fn q_dense(&self) -> Array2<f64> {
        match &self.repr {
            Repr::Diagonal { q, .. } => Array2::from_diag(q),
            Repr::Dense { q, .. } => q.clone(),
        }
    }

    pub fn qinv_dense(&self) -> Array2<f64> {
        match &self.repr {
            Repr::Diagonal { qinv, .. } => Array2::from_diag(qinv),
            Repr::Dense { qinv, .. } => qinv.clone(),
        }
    }
}

/// Compute the averaged projection of an admissible law.
///
/// For the axes family the expectation is the diagonal of inclusion
/// probabilities, exact for both law variants. For the jump family the
/// expectation is dense and is either enumerated exactly or sampled,
/// depending on `estimation`.
pub fn average_projection(
    family: &SubspaceFamily,
    law: &SelectionLaw,
    estimation: Estimation,
) -> Result<AveragedProjection> {
    law.check_admissible(family)?;
    match family.kind() {
        FamilyKind::Axes => {
            let m = family.size();
            let probs = Array1::from_iter((0..m).map(|i| law.inclusion_probability(family, i)));
            diagonal_projection(probs)
        }
        FamilyKind::Jumps => {
            let outcomes = outcome_count(family, law);
            let exact = match estimation {
                Estimation::Exact => true,
                Estimation::MonteCarlo { .. } => false,
                Estimation::Auto { .. } => outcomes <= EXACT_ENUMERATION_LIMIT,
            };
            let pbar = if exact {
                if outcomes > EXACT_ENUMERATION_LIMIT {
                    return Err(Error::EnumerationTooLarge {
                        outcomes,
                        limit: EXACT_ENUMERATION_LIMIT,
                    });
                }
                exact_jump_pbar(family, law)
            } else {
                let samples = match estimation {
                    Estimation::MonteCarlo { samples } | Estimation::Auto { samples } => samples,
                    Estimation::Exact => unreachable!(),
                };
                monte_carlo_jump_pbar(family, law, samples)?
            };
            dense_projection(pbar)
        }
    }
}

fn diagonal_projection(pbar: Array1<f64>) -> Result<AveragedProjection> {
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    for &p in pbar.iter() {
        if p < EIGENVALUE_FLOOR {
            return Err(Error::NearSingular {
                eigenvalue: p,
                floor: EIGENVALUE_FLOOR,
            });
        }
        lambda_min = lambda_min.min(p);
        lambda_max = lambda_max.max(p);
    }
    let q = pbar.mapv(|p| 1.0 / p.sqrt());
    let qinv = pbar.mapv(f64::sqrt);
    Ok(AveragedProjection {
        repr: Repr::Diagonal { pbar, q, qinv },
        lambda_min,
        lambda_max,
    })
}

fn dense_projection(pbar: Array2<f64>) -> Result<AveragedProjection> {
    let (vals, vecs) = sym_eigh(&pbar);
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    for &v in vals.iter() {
        if v < EIGENVALUE_FLOOR {
            return Err(Error::NearSingular {
                eigenvalue: v,
                floor: EIGENVALUE_FLOOR,
            });
        }
        lambda_min = lambda_min.min(v);
        lambda_max = lambda_max.max(v);
    }
    let q = spectral_map(&vals, &vecs, |v| 1.0 / v.sqrt());
    let qinv = spectral_map(&vals, &vecs, f64::sqrt);
    Ok(AveragedProjection {
        repr: Repr::Dense { pbar, q, qinv },
        lambda_min,
        lambda_max,
    })
}

/// Number of outcomes with positive probability under the law.
fn outcome_count(family: &SubspaceFamily, law: &SelectionLaw) -> u128 {
    match &law.variant {
        SelectionVariant::BernoulliPerSubspace { probs } => {
            // Members with p = 1 are always in; only the rest branch.
            let free = probs.iter().filter(|&&p| p < 1.0).count();
            if free >= 127 {
                u128::MAX
            } else {
                1u128 << free
            }
        }
        SelectionVariant::FixedSampleSize {
            sample_size,
            forced,
        } => binomial(family.size() - forced.len(), *sample_size),
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}

/// Rank-structured accumulator for jump projections: every block of a
/// selection contributes a constant square patch, recorded in O(1) through a
/// two-dimensional difference array and resolved by one prefix-sum pass.
struct BlockAccumulator {
    n: usize,
    diff: Array2<f64>,
}

impl BlockAccumulator {
    fn new(n: usize) -> Self {
        Self {
            n,
            diff: Array2::zeros((n + 1, n + 1)),
        }
    }

    /// Add `weight * P_S` for the selection with the given chosen jumps.
    fn add_selection(&mut self, chosen: &[usize], weight: f64) {
        if chosen.is_empty() {
            return; // empty selection projects onto {0}
        }
        let mut start = 0;
        for &j in chosen.iter().chain(std::iter::once(&(self.n - 1))) {
            let end = j + 1;
            let w = weight / (end - start) as f64;
            self.diff[[start, start]] += w;
            self.diff[[start, end]] -= w;
            self.diff[[end, start]] -= w;
            self.diff[[end, end]] += w;
            start = end;
        }
    }

    fn resolve(mut self) -> Array2<f64> {
        let n = self.n;
        for r in 0..=n {
            for c in 1..=n {
                let prev = self.diff[[r, c - 1]];
                self.diff[[r, c]] += prev;
            }
        }
        for c in 0..=n {
            for r in 1..=n {
                let prev = self.diff[[r - 1, c]];
                self.diff[[r, c]] += prev;
            }
        }
        self.diff.slice(ndarray::s![..n, ..n]).to_owned()
    }
}

fn exact_jump_pbar(family: &SubspaceFamily, law: &SelectionLaw) -> Array2<f64> {
    let n = family.dim();
    let m = family.size();
    let mut acc = BlockAccumulator::new(n);
    match &law.variant {
        SelectionVariant::BernoulliPerSubspace { probs } => {
            let always: Vec<usize> = (0..m).filter(|&i| probs[i] >= 1.0).collect();
            let free: Vec<usize> = (0..m).filter(|&i| probs[i] < 1.0).collect();
            let combos = 1usize << free.len();
            let mut chosen = Vec::with_capacity(m);
            for mask in 0..combos {
                let mut weight = 1.0;
                chosen.clear();
                chosen.extend_from_slice(&always);
                for (bit, &i) in free.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        weight *= probs[i];
                        chosen.push(i);
                    } else {
                        weight *= 1.0 - probs[i];
                    }
                }
                chosen.sort_unstable();
                acc.add_selection(&chosen, weight);
            }
        }
        SelectionVariant::FixedSampleSize {
            sample_size,
            forced,
        } => {
            let pool: Vec<usize> = (0..m)
                .filter(|i| forced.binary_search(i).is_err())
                .collect();
            let total = binomial(pool.len(), *sample_size) as f64;
            let weight = 1.0 / total;
            let mut chosen = Vec::with_capacity(forced.len() + sample_size);
            for_each_combination(pool.len(), *sample_size, |combo| {
                chosen.clear();
                chosen.extend_from_slice(forced);
                chosen.extend(combo.iter().map(|&i| pool[i]));
                chosen.sort_unstable();
                acc.add_selection(&chosen, weight);
            });
        }
    }
    acc.resolve()
}

fn monte_carlo_jump_pbar(
    family: &SubspaceFamily,
    law: &SelectionLaw,
    samples: usize,
) -> Result<Array2<f64>> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "Monte-Carlo needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(law.seed);
    let mut acc = BlockAccumulator::new(family.dim());
    let weight = 1.0 / samples as f64;
    for _ in 0..samples {
        let sel = draw_selection(family, law, &mut rng)?;
        acc.add_selection(sel.chosen(), weight);
    }
    let raw = acc.resolve();
    Ok(0.5 * (&raw + &raw.t()))
}

/// Visit every k-combination of `0..n` in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        f(&combo);
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if combo[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Squared spectral norm of `Q_new * Q_old^{-1}`, the cost of switching the
/// change of basis between two adaptation cycles.
pub fn transition_norm(q_new: &AveragedProjection, q_old: &AveragedProjection) -> f64 {
    assert_eq!(
        q_new.dim(),
        q_old.dim(),
        "projections live in different dimensions"
    );
    match (&q_new.repr, &q_old.repr) {
        (Repr::Diagonal { q, .. }, Repr::Diagonal { qinv, .. }) => q
            .iter()
            .zip(qinv.iter())
            .map(|(a, b)| (a * b) * (a * b))
            .fold(0.0, f64::max),
        _ => {
            let product = q_new.q_dense().dot(&q_old.qinv_dense());
            let gram = product.t().dot(&product);
            let sym = 0.5 * (&gram + &gram.t());
            let (vals, _) = sym_eigh(&sym);
            vals.iter().copied().fold(0.0, f64::max)
        }
    }
}

/// Apply `Q_new * Q_old^{-1}` to `z`, matrix-free; used when entering a new
/// adaptation cycle.
pub fn rescale(
    q_new: &AveragedProjection,
    q_old: &AveragedProjection,
    z: &Array1<f64>,
) -> Array1<f64> {
    q_new.apply_q(&q_old.apply_qinv(z))
}

/// Symmetric eigendecomposition, eigenvalues ascending is not guaranteed.
fn sym_eigh(mat: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = mat.nrows();
    let dm = nalgebra::DMatrix::from_fn(n, n, |r, c| mat[[r, c]]);
    let se = dm.symmetric_eigen();
    let vals = Array1::from_iter(se.eigenvalues.iter().copied());
    let vecs = Array2::from_shape_fn((n, n), |(r, c)| se.eigenvectors[(r, c)]);
    (vals, vecs)
}

/// Build `V f(diag) V^T` and symmetrize.
fn spectral_map(vals: &Array1<f64>, vecs: &Array2<f64>, f: impl Fn(f64) -> f64) -> Array2<f64> {
    let scaled = Array2::from_diag(&vals.mapv(f));
    let raw = vecs.dot(&scaled).dot(&vecs.t());
    0.5 * (&raw + &raw.t())
}
