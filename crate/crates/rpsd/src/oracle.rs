//! Independent brute-force references used by tests: enumerated averaged
//! projections, subgradient/enumeration prox solvers, finite-difference
//! gradients, straight-line reimplementations of the first-order methods,
//! and a Jacobi eigensolver.
//!
//! Everything here is written against the mathematical definitions with
//! plain loops, deliberately sharing no numerical kernels with the main
//! modules. Transparency over speed: inputs are bounded to small sizes.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::SmoothObjective;
use crate::prox::Regularizer;
use crate::subspace::{FamilyKind, SelectionLaw, SelectionVariant, SubspaceFamily};

/// Outcome of one oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, max_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

const MAX_ENUMERATION_OUTCOMES: u128 = 10_000;
const MAX_BRUTE_DIM: usize = 8;

/// Materialize the projection matrix onto the subspace spanned by the chosen
/// members, straight from the family definition.
pub fn projection_matrix(family: &SubspaceFamily, chosen: &[usize]) -> Array2<f64> {
    let n = family.dim();
    let mut p = Array2::zeros((n, n));
    if chosen.is_empty() {
        return p;
    }
    match family.kind() {
        FamilyKind::Axes => {
            for &i in chosen {
                p[[i, i]] = 1.0;
            }
        }
        FamilyKind::Jumps => {
            let mut start = 0;
            let mut sorted: Vec<usize> = chosen.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            sorted.push(n - 1);
            for j in sorted {
                let end = j + 1;
                let w = 1.0 / (end - start) as f64;
                p.slice_mut(ndarray::s![start..end, start..end]).fill(w);
                start = end;
            }
        }
    }
    p
}

/// Probability-weighted sum of every selection outcome's projection matrix.
/// Refuses above 10^4 outcomes.
pub fn enumerate_average_projection(
    family: &SubspaceFamily,
    law: &SelectionLaw,
) -> Result<Array2<f64>> {
    let n = family.dim();
    let m = family.size();
    let mut acc = Array2::zeros((n, n));
    match &law.variant {
        SelectionVariant::BernoulliPerSubspace { probs } => {
            if probs.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: probs.len(),
                });
            }
            let outcomes = 1u128 << m.min(126);
            if outcomes > MAX_ENUMERATION_OUTCOMES {
                return Err(Error::EnumerationTooLarge {
                    outcomes,
                    limit: MAX_ENUMERATION_OUTCOMES,
                });
            }
            for mask in 0u64..(1u64 << m) {
                let mut weight = 1.0;
                let mut chosen = Vec::new();
                for (i, &p) in probs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        weight *= p;
                        chosen.push(i);
                    } else {
                        weight *= 1.0 - p;
                    }
                }
                if weight == 0.0 {
                    continue;
                }
                acc = acc + projection_matrix(family, &chosen).mapv(|v| v * weight);
            }
        }
        SelectionVariant::FixedSampleSize {
            sample_size,
            forced,
        } => {
            let pool: Vec<usize> = (0..m)
                .filter(|i| forced.binary_search(i).is_err())
                .collect();
            let combos = combinations(&pool, *sample_size);
            if combos.len() as u128 > MAX_ENUMERATION_OUTCOMES {
                return Err(Error::EnumerationTooLarge {
                    outcomes: combos.len() as u128,
                    limit: MAX_ENUMERATION_OUTCOMES,
                });
            }
            let weight = 1.0 / combos.len() as f64;
            for combo in combos {
                let mut chosen = forced.clone();
                chosen.extend(combo);
                acc = acc + projection_matrix(family, &chosen).mapv(|v| v * weight);
            }
        }
    }
    Ok(acc)
}

fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > pool.len() {
        return out;
    }
    let mut current = Vec::with_capacity(k);
    fn recurse(
        pool: &[usize],
        k: usize,
        start: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..pool.len() {
            current.push(pool[i]);
            recurse(pool, k, i + 1, current, out);
            current.pop();
        }
    }
    recurse(pool, k, 0, &mut current, &mut out);
    out
}

/// Regularizer value written out longhand, independent of the prox module.
fn reg_value(reg: &Regularizer, y: &[f64]) -> f64 {
    match reg {
        Regularizer::L1 { lambda1 } => {
            let mut s = 0.0;
            for &v in y {
                s += v.abs();
            }
            lambda1 * s
        }
        Regularizer::GroupL1L2 { lambda1, groups } => {
            let mut s = 0.0;
            for g in groups {
                let mut q = 0.0;
                for &i in g {
                    q += y[i] * y[i];
                }
                s += q.sqrt();
            }
            lambda1 * s
        }
        Regularizer::Tv1d { lambda1 } => {
            let mut s = 0.0;
            for w in y.windows(2) {
                s += (w[1] - w[0]).abs();
            }
            lambda1 * s
        }
    }
}

fn prox_objective(reg: &Regularizer, gamma: f64, u: &[f64], y: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..u.len() {
        let d = y[i] - u[i];
        quad += d * d;
    }
    reg_value(reg, y) + quad / (2.0 * gamma)
}

fn reg_subgradient(reg: &Regularizer, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut g = vec![0.0; n];
    match reg {
        Regularizer::L1 { lambda1 } => {
            for i in 0..n {
                g[i] = lambda1 * y[i].signum() * if y[i] == 0.0 { 0.0 } else { 1.0 };
            }
        }
        Regularizer::GroupL1L2 { lambda1, groups } => {
            for grp in groups {
                let mut norm = 0.0;
                for &i in grp {
                    norm += y[i] * y[i];
                }
                let norm = norm.sqrt();
                if norm > 0.0 {
                    for &i in grp {
                        g[i] = lambda1 * y[i] / norm;
                    }
                }
            }
        }
        Regularizer::Tv1d { lambda1 } => {
            for i in 0..n.saturating_sub(1) {
                let d = y[i + 1] - y[i];
                if d != 0.0 {
                    let s = lambda1 * d.signum();
                    g[i + 1] += s;
                    g[i] -= s;
                }
            }
        }
    }
    g
}

/// Reference prox: averaged subgradient descent on the strongly convex prox
/// objective, then a local search over contiguous-block moves (single
/// coordinates are blocks of length one; block moves are what total
/// variation needs to escape flat-segment stalls). Dimension is capped at 8.
pub fn brute_prox(reg: &Regularizer, gamma: f64, u: &Array1<f64>) -> Result<Array1<f64>> {
    if u.len() > MAX_BRUTE_DIM {
        return Err(Error::InvalidParameter(format!(
            "brute-force prox is limited to dimension {MAX_BRUTE_DIM}"
        )));
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidParameter("prox step must be positive".into()));
    }
    let n = u.len();
    let u = u.to_vec();
    let mut y = u.clone();
    let mut avg = vec![0.0; n];
    let mut weight_sum = 0.0;
    let strong = 1.0 / gamma;
    let iters = 100_000usize;
    for k in 0..iters {
        let mut g = reg_subgradient(reg, &y);
        for i in 0..n {
            g[i] += (y[i] - u[i]) / gamma;
        }
        let step = 2.0 / (strong * (k + 2) as f64);
        for i in 0..n {
            y[i] -= step * g[i];
        }
        let w = (k + 1) as f64;
        weight_sum += w;
        for i in 0..n {
            avg[i] += w * (y[i] - avg[i]) / weight_sum;
        }
    }
    let mut best = avg;
    let mut best_val = prox_objective(reg, gamma, &u, &best);
    // polish: contiguous-block moves with shrinking step
    let mut delta = 0.1;
    while delta > 1e-14 {
        let mut improved = true;
        while improved {
            improved = false;
            for lo in 0..n {
                for hi in lo..n {
                    for sign in [1.0, -1.0] {
                        let mut cand = best.clone();
                        for item in cand.iter_mut().take(hi + 1).skip(lo) {
                            *item += sign * delta;
                        }
                        let val = prox_objective(reg, gamma, &u, &cand);
                        if val < best_val {
                            best_val = val;
                            best = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        delta *= 0.5;
    }
    Ok(Array1::from_vec(best))
}

/// Exact 1D total-variation prox by enumerating segment structures: every
/// assignment of {merge, up, down} to adjacent pairs fixes the flat segments
/// and jump signs, making the minimizer closed-form per block; the best true
/// objective over all structures is the exact optimum. Dimension capped at 8.
#[allow(clippy::needless_range_loop)] // the loop index doubles as the block boundary
pub fn tv_prox_by_enumeration(lambda1: f64, gamma: f64, u: &Array1<f64>) -> Result<Array1<f64>> {
    if u.len() > MAX_BRUTE_DIM {
        return Err(Error::InvalidParameter(format!(
            "enumeration prox is limited to dimension {MAX_BRUTE_DIM}"
        )));
    }
    let n = u.len();
    let u = u.to_vec();
    let reg = Regularizer::Tv1d { lambda1 };
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    let pairs = n - 1;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(pairs as u32);
    for code in 0..total {
        // decode trits: 0 merge, 1 jump up (+), 2 jump down (-)
        let mut signs = vec![0i8; pairs];
        let mut c = code;
        for s in signs.iter_mut() {
            *s = (c % 3) as i8;
            c /= 3;
        }
        // block boundaries after every non-merge pair
        let mut candidate = vec![0.0; n];
        let mut start = 0usize;
        let mut blocks: Vec<(usize, usize, i8, i8)> = Vec::new(); // (start, end, sign_before, sign_after)
        let mut sign_before = 0i8;
        for i in 0..=pairs {
            let is_boundary = i == pairs || signs[i] != 0;
            if is_boundary {
                let sign_after = if i == pairs { 0 } else { signs[i] };
                blocks.push((start, i + 1, sign_before, sign_after));
                sign_before = sign_after;
                start = i + 1;
            }
        }
        for &(lo, hi, before, after) in &blocks {
            let len = (hi - lo) as f64;
            let mean: f64 = u[lo..hi].iter().sum::<f64>() / len;
            // derivative of lambda * sum sigma_j (v_right - v_left) wrt this
            // block value: lambda * (to_signed(before) - to_signed(after))
            let coef = to_signed(before) - to_signed(after);
            let v = mean - gamma * lambda1 * coef / len;
            for item in candidate.iter_mut().take(hi).skip(lo) {
                *item = v;
            }
        }
        let val = prox_objective(&reg, gamma, &u, &candidate);
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, candidate));
        }
    }
    Ok(Array1::from_vec(best.expect("at least one structure").1))
}

fn to_signed(code: i8) -> f64 {
    match code {
        1 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

/// Central finite differences of the smooth objective, error O(h^2).
pub fn finite_diff_gradient(obj: &SmoothObjective, x: &Array1<f64>, h: f64) -> Array1<f64> {
    let n = x.len();
    let mut g = Array1::zeros(n);
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
    }
    g
}

/// Straight-line reimplementation of proximal gradient descent on the
/// ridge-regularized lasso, scalar loops only. Returns the whole trajectory.
pub fn lasso_pgd_trajectory(
    a: &Array2<f64>,
    b: &Array1<f64>,
    l2: f64,
    lambda1: f64,
    gamma: f64,
    iters: usize,
) -> Vec<Array1<f64>> {
    let m = a.nrows();
    let n = a.ncols();
    let mut x = vec![0.0; n];
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        // residual r = A x - b
        let mut r = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..n {
                acc += a[[i, j]] * x[j];
            }
            r[i] = acc - b[i];
        }
        // gradient (A^T r) / m + l2 x
        let mut grad = vec![0.0; n];
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..m {
                acc += a[[i, j]] * r[i];
            }
            grad[j] = acc / m as f64 + l2 * x[j];
        }
        for j in 0..n {
            let step = x[j] - gamma * grad[j];
            let t = gamma * lambda1;
            x[j] = if step > t {
                step - t
            } else if step < -t {
                step + t
            } else {
                0.0
            };
        }
        out.push(Array1::from_vec(x.clone()));
    }
    out
}

/// Textbook proximal coordinate descent on l1-regularized logistic ridge:
/// at each step the listed coordinates are updated simultaneously by
/// `x_i <- soft_threshold(x_i - gamma grad_i f(x), gamma lambda1)`.
/// Dense features, scalar loops, nothing shared with the solver path.
pub fn coordinate_descent_l1_trajectory(
    features: &Array2<f64>,
    labels: &[f64],
    l2: f64,
    lambda1: f64,
    gamma: f64,
    selections: &[Vec<usize>],
) -> Vec<Array1<f64>> {
    let m = features.nrows();
    let n = features.ncols();
    let mut x = vec![0.0; n];
    let mut out = Vec::with_capacity(selections.len());
    for chosen in selections {
        // full gradient of f at x
        let mut grad = vec![0.0; n];
        for i in 0..m {
            let mut dot = 0.0;
            for j in 0..n {
                dot += features[[i, j]] * x[j];
            }
            let t = -labels[i] * dot;
            let sigma = if t >= 0.0 {
                1.0 / (1.0 + (-t).exp())
            } else {
                let e = t.exp();
                e / (1.0 + e)
            };
            for j in 0..n {
                grad[j] += -labels[i] * features[[i, j]] * sigma / m as f64;
            }
        }
        for item in grad.iter_mut().zip(x.iter()) {
            *item.0 += l2 * item.1;
        }
        let mut next = x.clone();
        for &j in chosen {
            let step = x[j] - gamma * grad[j];
            let t = gamma * lambda1;
            next[j] = if step > t {
                step - t
            } else if step < -t {
                step + t
            } else {
                0.0
            };
        }
        x = next;
        out.push(Array1::from_vec(x.clone()));
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues and the orthogonal matrix of column eigenvectors.
pub fn jacobi_eigh(mat: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "matrix must be square");
    let mut a = mat.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    for _sweep in 0..200 {
        let mut off = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                off += a[[r, c]] * a[[r, c]];
            }
        }
        if off.sqrt() <= 1e-15 * (1.0 + frobenius(&a)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diag().to_owned(), v)
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest squared singular value via the Jacobi eigensolver, for
/// cross-checking spectral norms.
pub fn spectral_norm_sq_oracle(mat: &Array2<f64>) -> f64 {
    let gram = mat.t().dot(mat);
    let sym = 0.5 * (&gram + &gram.t());
    let (vals, _) = jacobi_eigh(&sym);
    vals.iter().copied().fold(0.0, f64::max)
}
