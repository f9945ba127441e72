//! Proximal operators of the supported regularizers and the sparsity
//! patterns (support / jumps) they induce on iterates.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::subspace::FamilyKind;

/// Relative tolerance used by default when reading jumps off an iterate.
/// Support detection uses an exact zero test instead, since soft-thresholding
/// produces bit-exact zeros.
pub const DEFAULT_JUMP_TOL: f64 = 1e-12;

/// The nonsmooth part `g` of the composite objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// `lambda1 * ||x||_1`
    L1 { lambda1: f64 },
    /// `lambda1 * sum_b ||x_b||_2` over a partition of the coordinates.
    GroupL1L2 {
        lambda1: f64,
        groups: Vec<Vec<usize>>,
    },
    /// `lambda1 * sum_i |x_{i+1} - x_i|`
    Tv1d { lambda1: f64 },
}

impl Regularizer {
    pub fn l1(lambda1: f64) -> Result<Self> {
        check_weight(lambda1)?;
        Ok(Self::L1 { lambda1 })
    }

    pub fn tv1d(lambda1: f64) -> Result<Self> {
        check_weight(lambda1)?;
        Ok(Self::Tv1d { lambda1 })
    }

    /// `groups` must partition `0..n`: disjoint and covering.
    pub fn group_l1l2(lambda1: f64, groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        check_weight(lambda1)?;
        let mut seen = vec![false; n];
        for g in &groups {
            for &i in g {
                if i >= n {
                    return Err(Error::InvalidConfiguration(format!(
                        "group index {i} out of range for dimension {n}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidConfiguration(format!(
                        "groups overlap at index {i}"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidConfiguration(
                "groups do not cover every index".into(),
            ));
        }
        Ok(Self::GroupL1L2 { lambda1, groups })
    }

    pub fn lambda1(&self) -> f64 {
        match self {
            Self::L1 { lambda1 } | Self::GroupL1L2 { lambda1, .. } | Self::Tv1d { lambda1 } => {
                *lambda1
            }
        }
    }

    /// Evaluate `g(x)`.
    pub fn value(&self, x: &Array1<f64>) -> f64 {
        match self {
            Self::L1 { lambda1 } => lambda1 * x.iter().map(|v| v.abs()).sum::<f64>(),
            Self::GroupL1L2 { lambda1, groups } => {
                lambda1
                    * groups
                        .iter()
                        .map(|g| g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt())
                        .sum::<f64>()
            }
            Self::Tv1d { lambda1 } => {
                lambda1
                    * x.windows(2)
                        .into_iter()
                        .map(|w| (w[1] - w[0]).abs())
                        .sum::<f64>()
            }
        }
    }

    /// Which family identifies this regularizer's structure.
    pub fn natural_family(&self) -> FamilyKind {
        match self {
            Self::Tv1d { .. } => FamilyKind::Jumps,
            _ => FamilyKind::Axes,
        }
    }
}

fn check_weight(lambda1: f64) -> Result<()> {
    if lambda1.is_nan() || lambda1 < 0.0 {
        return Err(Error::InvalidParameter(
            "lambda1 must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Exact minimizer of `g(y) + ||y - u||^2 / (2 gamma)`.
pub fn prox(reg: &Regularizer, gamma: f64, u: &Array1<f64>) -> Result<Array1<f64>> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidParameter("prox step must be positive".into()));
    }
    Ok(match reg {
        Regularizer::L1 { lambda1 } => {
            let t = gamma * lambda1;
            u.mapv(|v| soft_threshold(v, t))
        }
        Regularizer::GroupL1L2 { lambda1, groups } => {
            let t = gamma * lambda1;
            let mut out = Array1::zeros(u.len());
            for g in groups {
                let norm = g.iter().map(|&i| u[i] * u[i]).sum::<f64>().sqrt();
                if norm > t {
                    let scale = 1.0 - t / norm;
                    for &i in g {
                        out[i] = scale * u[i];
                    }
                }
                // norm <= t: the whole block collapses to exact zeros
            }
            out
        }
        Regularizer::Tv1d { lambda1 } => Array1::from_vec(tv1d_denoise(
            u.as_slice().expect("contiguous"),
            gamma * lambda1,
        )),
    })
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Direct 1D total-variation denoising (taut-string walk): the exact
/// minimizer of `sum_i (x_i - y_i)^2 / 2 + lam * sum |x_{i+1} - x_i|`,
/// computed in one forward pass. Segment values are written once per flat
/// segment, so equal entries are bit-identical.
fn tv1d_denoise(y: &[f64], lam: f64) -> Vec<f64> {
    let n = y.len();
    let mut x = vec![0.0; n];
    if n == 0 {
        return x;
    }
    if lam <= 0.0 {
        x.copy_from_slice(y);
        return x;
    }
    let (mut k, mut k0, mut kminus, mut kplus) = (0usize, 0usize, 0usize, 0usize);
    let mut vmin = y[0] - lam;
    let mut vmax = y[0] + lam;
    let mut umin = lam;
    let mut umax = -lam;
    loop {
        if k == n - 1 {
            if umin < 0.0 {
                // the tube forces a negative jump at kminus
                x[k0..=kminus].fill(vmin);
                k0 = kminus + 1;
                k = k0;
                kminus = k0;
                vmin = y[k];
                umin = lam;
                umax = y[k] + lam - vmax;
                continue;
            } else if umax > 0.0 {
                // positive jump at kplus
                x[k0..=kplus].fill(vmax);
                k0 = kplus + 1;
                k = k0;
                kplus = k0;
                vmax = y[k];
                umax = -lam;
                umin = y[k] - lam - vmin;
                continue;
            } else {
                let v = vmin + umin / (k - k0 + 1) as f64;
                x[k0..=k].fill(v);
                return x;
            }
        }
        if y[k + 1] + umin < vmin - lam {
            // negative jump is certain
            x[k0..=kminus].fill(vmin);
            k0 = kminus + 1;
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = y[k];
            vmax = y[k] + 2.0 * lam;
            umin = lam;
            umax = -lam;
        } else if y[k + 1] + umax > vmax + lam {
            // positive jump is certain
            x[k0..=kplus].fill(vmax);
            k0 = kplus + 1;
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = y[k] - 2.0 * lam;
            vmax = y[k];
            umin = lam;
            umax = -lam;
        } else {
            // extend the current segment
            k += 1;
            umin += y[k] - vmin;
            umax += y[k] - vmax;
            if umin >= lam {
                vmin += (umin - lam) / (k - k0 + 1) as f64;
                umin = lam;
                kminus = k;
            }
            if umax <= -lam {
                vmax += (umax + lam) / (k - k0 + 1) as f64;
                umax = -lam;
                kplus = k;
            }
        }
    }
}

/// A `{0,1}` pattern over the identification subspaces: support bits for the
/// axes family, jump bits for the jump family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityVector {
    bits: Vec<bool>,
}

impl SparsityVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of set bits, `||S(x)||_1`.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of set bits.
    pub fn ones(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Bitwise partial order: `self <= other`.
    pub fn leq(&self, other: &Self) -> bool {
        assert_eq!(self.len(), other.len(), "pattern lengths differ");
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Bitwise union.
    pub fn union(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "pattern lengths differ");
        Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a || b)
                .collect(),
        }
    }
}

/// Read the sparsity pattern of `x` for the given family kind.
///
/// Axes: bit `i` set iff `|x_i| > tol`. Jumps: bit `i` set iff
/// `|x_{i+1} - x_i| > tol * max(1, ||x||_inf)`.
pub fn sparsity_vector(kind: FamilyKind, x: &Array1<f64>, tol: f64) -> SparsityVector {
    assert!(tol >= 0.0, "tolerance must be nonnegative");
    match kind {
        FamilyKind::Axes => SparsityVector {
            bits: x.iter().map(|v| v.abs() > tol).collect(),
        },
        FamilyKind::Jumps => {
            let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            let thresh = tol * scale;
            SparsityVector {
                bits: x
                    .windows(2)
                    .into_iter()
                    .map(|w| (w[1] - w[0]).abs() > thresh)
                    .collect(),
            }
        }
    }
}
