//! Smooth objectives (logistic + ridge, least squares), their constants,
//! and LibSVM-format data ingestion over a compressed-row sparse matrix.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Minimal compressed-row sparse matrix; rows keep their entries sorted by
/// column index.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, ncols: usize) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if c >= ncols {
                    return Err(Error::DimensionMismatch {
                        expected: ncols,
                        found: c + 1,
                    });
                }
                if !v.is_finite() {
                    return Err(Error::InvalidConfiguration(
                        "non-finite feature value".into(),
                    ));
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows: indptr.len() - 1,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(a: &Array2<f64>) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                let v = a[[r, c]];
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: a.nrows(),
            ncols: a.ncols(),
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn row_dot(&self, r: usize, x: &Array1<f64>) -> f64 {
        let (idx, val) = self.row(r);
        idx.iter().zip(val).map(|(&c, &v)| v * x[c]).sum()
    }

    /// `y = A x`
    pub fn matvec(&self, x: &Array1<f64>) -> Array1<f64> {
        Array1::from_iter((0..self.nrows).map(|r| self.row_dot(r, x)))
    }

    /// `y = A^T c`
    pub fn t_matvec(&self, c: &Array1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.ncols);
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            let cr = c[r];
            for (&j, &v) in idx.iter().zip(val) {
                out[j] += v * cr;
            }
        }
        out
    }
}

/// Labeled data with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: CsrMatrix,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(features: CsrMatrix, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                found: labels.len(),
            });
        }
        if labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::InvalidConfiguration(
                "labels must be +1 or -1".into(),
            ));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &CsrMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Number of samples.
    pub fn num_samples(&self) -> usize {
        self.features.nrows()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Parse a LibSVM text file: `<label> idx:val idx:val ...` per line with
/// 1-based feature indices. Labels `0` and `-1` map to `-1`; `1`/`+1` map to
/// `+1`. Files ending in `.gz` are transparently decompressed.
pub fn parse_libsvm<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    parse_libsvm_with_dim(path, None)
}

/// Same as [`parse_libsvm`], forcing the feature dimension, which may exceed
/// the largest index present in the file.
pub fn parse_libsvm_with_dim<P: AsRef<Path>>(path: P, dim: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::read::GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_libsvm_reader(BufReader::new(reader), dim)
}

fn parse_libsvm_reader<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut max_index = 0usize; // 1-based
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let mut tokens = text.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a first token");
        let label = match label_tok {
            "+1" | "1" => 1.0,
            "-1" | "0" => -1.0,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("label `{other}` is not one of 0, 1, +1, -1"),
                })
            }
        };
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("feature token `{tok}` lacks `idx:val` form"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad feature index `{idx_s}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad feature value `{val_s}`"),
            })?;
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite feature value `{val_s}`"),
                });
            }
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no samples in input".into(),
        });
    }
    let ncols = match dim {
        Some(d) => {
            if d < max_index {
                return Err(Error::InvalidConfiguration(format!(
                    "dimension override {d} below largest feature index {max_index}"
                )));
            }
            d
        }
        None => max_index,
    };
    Dataset::new(CsrMatrix::from_rows(rows, ncols)?, labels)
}

/// Write a dataset back to LibSVM text; floats use the shortest
/// round-tripping representation so a re-parse reproduces the same values.
pub fn write_libsvm<W: Write>(dataset: &Dataset, mut w: W) -> Result<()> {
    for r in 0..dataset.num_samples() {
        let label = if dataset.labels()[r] > 0.0 {
            "+1"
        } else {
            "-1"
        };
        write!(w, "{label}")?;
        let (idx, val) = dataset.features().row(r);
        for (&c, &v) in idx.iter().zip(val) {
            write!(w, " {}:{}", c + 1, v)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// The smooth part `f` with its smoothness and strong-convexity constants.
#[derive(Debug, Clone)]
pub enum SmoothObjective {
    /// `(1/m) sum log(1 + exp(-b_i a_i^T x)) + (l2/2) ||x||^2`
    LogisticRidge {
        data: Dataset,
        l2: f64,
        l: f64,
        mu: f64,
    },
    /// `(1/(2m)) ||A x - b||^2 + (l2/2) ||x||^2`
    LeastSquares {
        a: Array2<f64>,
        b: Array1<f64>,
        l2: f64,
        l: f64,
        mu: f64,
    },
}

impl SmoothObjective {
    pub fn logistic_ridge(data: Dataset, l2: f64) -> Result<Self> {
        if l2 < 0.0 {
            return Err(Error::InvalidParameter(
                "ridge weight must be nonnegative".into(),
            ));
        }
        let m = data.num_samples() as f64;
        let sigma_sq = spectral_norm_sq(
            |v| data.features().t_matvec(&data.features().matvec(v)),
            data.dim(),
        );
        let l = sigma_sq / (4.0 * m) + l2;
        Ok(Self::LogisticRidge {
            data,
            l2,
            l,
            mu: l2,
        })
    }

    pub fn least_squares(a: Array2<f64>, b: Array1<f64>, l2: f64) -> Result<Self> {
        if l2 < 0.0 {
            return Err(Error::InvalidParameter(
                "ridge weight must be nonnegative".into(),
            ));
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        let m = a.nrows() as f64;
        let sigma_sq = spectral_norm_sq(|v| a.t().dot(&a.dot(v)), a.ncols());
        let l = sigma_sq / m + l2;
        Ok(Self::LeastSquares {
            a,
            b,
            l2,
            l,
            mu: l2,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::LogisticRidge { data, .. } => data.dim(),
            Self::LeastSquares { a, .. } => a.ncols(),
        }
    }

    /// `(L, mu)`
    pub fn lipschitz_constants(&self) -> (f64, f64) {
        match self {
            Self::LogisticRidge { l, mu, .. } | Self::LeastSquares { l, mu, .. } => (*l, *mu),
        }
    }

    pub fn smoothness(&self) -> f64 {
        self.lipschitz_constants().0
    }

    pub fn strong_convexity(&self) -> f64 {
        self.lipschitz_constants().1
    }

    pub fn value(&self, x: &Array1<f64>) -> f64 {
        self.value_and_gradient(x).0
    }

    pub fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        self.value_and_gradient(x).1
    }

    /// Evaluate `f(x)` and its gradient with overflow-safe logistic terms.
    pub fn value_and_gradient(&self, x: &Array1<f64>) -> (f64, Array1<f64>) {
        assert_eq!(x.len(), self.dim(), "iterate dimension mismatch");
        match self {
            Self::LogisticRidge { data, l2, .. } => {
                let m = data.num_samples() as f64;
                let mut value = 0.0;
                let mut coeff = Array1::zeros(data.num_samples());
                for i in 0..data.num_samples() {
                    let b = data.labels()[i];
                    let t = -b * data.features().row_dot(i, x);
                    value += softplus(t);
                    coeff[i] = -b * sigmoid(t) / m;
                }
                let mut grad = data.features().t_matvec(&coeff);
                value = value / m + 0.5 * l2 * x.dot(x);
                grad += &x.mapv(|v| l2 * v);
                (value, grad)
            }
            Self::LeastSquares { a, b, l2, .. } => {
                let m = a.nrows() as f64;
                let r = &a.dot(x) - b;
                let value = r.dot(&r) / (2.0 * m) + 0.5 * l2 * x.dot(x);
                let grad = a.t().dot(&r).mapv(|v| v / m) + &x.mapv(|v| l2 * v);
                (value, grad)
            }
        }
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-t))` without overflow.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Largest eigenvalue of the PSD operator `v -> op(v)` (power iteration,
/// deterministic seeded start, tolerance 1e-8, at most 1000 iterations).
fn spectral_norm_sq(op: impl Fn(&Array1<f64>) -> Array1<f64>, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = Array1::from_iter((0..n).map(|_| rng.random::<f64>() - 0.5));
    let norm = v.dot(&v).sqrt();
    if norm == 0.0 || n == 0 {
        return 0.0;
    }
    v.mapv_inplace(|x| x / norm);
    let mut lambda = 0.0;
    for _ in 0..1000 {
        let w = op(&v);
        let new_lambda = v.dot(&w);
        let wnorm = w.dot(&w).sqrt();
        if wnorm == 0.0 {
            return 0.0;
        }
        v = w.mapv(|x| x / wnorm);
        if (new_lambda - lambda).abs() <= 1e-8 * new_lambda.abs().max(1.0) {
            return new_lambda;
        }
        lambda = new_lambda;
    }
    lambda
}

/// Deterministic synthetic classification data: rows of `A` are unit-norm
/// Gaussian directions and `b_i = sign(a_i^T w + noise * eps_i)` for a
/// planted weight vector `w` (ties resolved to +1).
pub fn synthetic_classification(
    num_samples: usize,
    weights: &Array1<f64>,
    noise: f64,
    seed: u64,
) -> Dataset {
    synthetic_classification_spiked(num_samples, weights, noise, 0.0, seed)
}

/// Like [`synthetic_classification`], with a rank-one feature correlation:
/// every row mixes in a shared random direction (with a per-row sign) at
/// relative strength `spike`, which inflates the top singular value to about
/// `spike / sqrt(1 + spike^2) * sqrt(m)` while rows stay unit-norm. That is
/// the conditioning profile of real correlated data.
pub fn synthetic_classification_spiked(
    num_samples: usize,
    weights: &Array1<f64>,
    noise: f64,
    spike: f64,
    seed: u64,
) -> Dataset {
    let n = weights.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = if spike > 0.0 {
        let mut h = Array1::from_iter((0..n).map(|_| gaussian(&mut rng)));
        let norm = h.dot(&h).sqrt();
        h.mapv_inplace(|v| v / norm);
        Some(h)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(num_samples);
    let mut labels = Vec::with_capacity(num_samples);
    for _ in 0..num_samples {
        let mut a = Array1::from_iter((0..n).map(|_| gaussian(&mut rng)));
        if let Some(h) = &shared {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let scale = sign * spike * (n as f64).sqrt();
            a += &h.mapv(|v| scale * v);
        }
        let norm = a.dot(&a).sqrt();
        if norm > 0.0 {
            a.mapv_inplace(|v| v / norm);
        }
        let margin = a.dot(weights) + noise * gaussian(&mut rng);
        labels.push(if margin < 0.0 { -1.0 } else { 1.0 });
        rows.push(a.iter().enumerate().map(|(i, &v)| (i, v)).collect());
    }
    let features = CsrMatrix::from_rows(rows, n).expect("generated rows are valid");
    Dataset::new(features, labels).expect("generated labels are valid")
}

/// Piecewise-constant weight vector with `blocks` equal segments whose
/// values alternate in sign; natural ground truth for jump identification.
pub fn blocky_weights(n: usize, blocks: usize, amplitude: f64, seed: u64) -> Array1<f64> {
    let blocks = blocks.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array1::zeros(n);
    let base = n / blocks;
    let mut start = 0;
    for b in 0..blocks {
        let len = if b + 1 == blocks { n - start } else { base };
        let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
        let level = sign * amplitude * (0.5 + rng.random::<f64>());
        for i in start..start + len {
            w[i] = level;
        }
        start += len;
    }
    w
}

/// Weight vector with `count` random spikes; ground truth for support
/// identification.
pub fn spike_weights(n: usize, count: usize, amplitude: f64, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array1::zeros(n);
    let mut placed = 0;
    while placed < count.min(n) {
        let i = rng.random_range(0..n);
        if w[i] == 0.0 {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            w[i] = sign * amplitude * (0.5 + rng.random::<f64>());
            placed += 1;
        }
    }
    w
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller, cosine branch only; two uniforms per draw.
    loop {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        if u > f64::MIN_POSITIVE {
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_dataset() -> Dataset {
        let rows = vec![
            vec![(0, 1.0), (2, -0.5)],
            vec![(1, 2.0)],
            vec![(0, -1.0), (1, 0.5), (2, 1.5)],
        ];
        Dataset::new(CsrMatrix::from_rows(rows, 3).unwrap(), vec![1.0, -1.0, 1.0]).unwrap()
    }

    #[test]
    fn value_at_zero_is_log_two() {
        let obj = SmoothObjective::logistic_ridge(toy_dataset(), 0.0).unwrap();
        let x = Array1::zeros(3);
        let (v, g) = obj.value_and_gradient(&x);
        assert!((v - (2.0f64).ln()).abs() <= 1e-15);
        // gradient at zero: -(1/m) sum b_i a_i / 2, summed by hand over the
        // three rows (b = +1, -1, +1)
        let expect = array![-(1.0 - 1.0) / 6.0, -(-2.0 + 0.5) / 6.0, -(-0.5 + 1.5) / 6.0];
        for (a, b) in g.iter().zip(expect.iter()) {
            assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn single_sample_closed_form() {
        let data = Dataset::new(
            CsrMatrix::from_rows(vec![vec![(0, 1.0)]], 2).unwrap(),
            vec![1.0],
        )
        .unwrap();
        let obj = SmoothObjective::logistic_ridge(data, 0.0).unwrap();
        let x = array![10.0, 0.0];
        let (v, g) = obj.value_and_gradient(&x);
        let expect_v = (1.0 + (-10.0f64).exp()).ln();
        assert!((v - expect_v).abs() <= 1e-15);
        let e = (-10.0f64).exp();
        assert!((g[0] - (-e / (1.0 + e))).abs() <= 1e-15);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn logistic_is_overflow_safe() {
        let data = Dataset::new(
            CsrMatrix::from_rows(vec![vec![(0, 1.0)], vec![(0, -1.0)]], 1).unwrap(),
            vec![1.0, 1.0],
        )
        .unwrap();
        let obj = SmoothObjective::logistic_ridge(data, 0.0).unwrap();
        for scale in [1e3, 1e6, 1e9] {
            let (v, g) = obj.value_and_gradient(&array![scale]);
            assert!(v.is_finite());
            assert!(g.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn identity_features_smoothness() {
        let rows = (0..4).map(|i| vec![(i, 1.0)]).collect();
        let data = Dataset::new(
            CsrMatrix::from_rows(rows, 4).unwrap(),
            vec![1.0, -1.0, 1.0, -1.0],
        )
        .unwrap();
        let obj = SmoothObjective::logistic_ridge(data, 0.0).unwrap();
        let (l, mu) = obj.lipschitz_constants();
        assert!((l - 1.0 / 16.0).abs() <= 1e-9, "L = {l}");
        assert_eq!(mu, 0.0);
    }

    #[test]
    fn ridge_gives_strong_convexity() {
        let m = toy_dataset().num_samples() as f64;
        let obj = SmoothObjective::logistic_ridge(toy_dataset(), 1.0 / m).unwrap();
        let (_, mu) = obj.lipschitz_constants();
        assert_eq!(mu, 1.0 / m);
    }

    #[test]
    fn parse_single_line() {
        let input = "+1 3:1 7:0.5\n";
        let data = parse_libsvm_reader(std::io::Cursor::new(input), None).unwrap();
        assert_eq!(data.num_samples(), 1);
        assert_eq!(data.dim(), 7);
        assert_eq!(data.labels(), &[1.0]);
        let (idx, val) = data.features().row(0);
        assert_eq!(idx, &[2, 6]);
        assert_eq!(val, &[1.0, 0.5]);
    }

    #[test]
    fn parse_zero_label_maps_to_minus_one() {
        let input = "0 1:2.5\n1 2:-1\n";
        let data = parse_libsvm_reader(std::io::Cursor::new(input), None).unwrap();
        assert_eq!(data.labels(), &[-1.0, 1.0]);
    }

    #[test]
    fn parse_rejects_malformed_tokens() {
        let bad = "1 2:abc\n";
        match parse_libsvm_reader(std::io::Cursor::new(bad), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        let empty = "";
        assert!(matches!(
            parse_libsvm_reader(std::io::Cursor::new(empty), None),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn parse_accepts_out_of_order_indices() {
        let input = "-1 5:1 2:3\n";
        let data = parse_libsvm_reader(std::io::Cursor::new(input), None).unwrap();
        let (idx, val) = data.features().row(0);
        assert_eq!(idx, &[1, 4]);
        assert_eq!(val, &[3.0, 1.0]);
    }

    #[test]
    fn libsvm_round_trip() {
        let data = toy_dataset();
        let mut buf = Vec::new();
        write_libsvm(&data, &mut buf).unwrap();
        let back = parse_libsvm_reader(std::io::Cursor::new(buf), Some(3)).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let obj = SmoothObjective::logistic_ridge(toy_dataset(), 0.3).unwrap();
        let x = array![0.4, -0.2, 0.9];
        let (_, g) = obj.value_and_gradient(&x);
        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-5,
                "coordinate {i}: {fd} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn gradient_lipschitz_bound_holds() {
        use rand::Rng;
        let obj = SmoothObjective::logistic_ridge(toy_dataset(), 0.2).unwrap();
        let (l, mu) = obj.lipschitz_constants();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let x = Array1::from_iter((0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0));
            let y = Array1::from_iter((0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0));
            let gx = obj.gradient(&x);
            let gy = obj.gradient(&y);
            let lhs = (&gx - &gy).dot(&(&gx - &gy)).sqrt();
            let dist = (&x - &y).dot(&(&x - &y)).sqrt();
            assert!(lhs <= l * dist * (1.0 + 1e-6), "{lhs} > {}", l * dist);
            // strong convexity with mu = l2
            let inner = (&gx - &gy).dot(&(&x - &y));
            assert!(inner >= mu * dist * dist * (1.0 - 1e-9) - 1e-12);
        }
    }

    #[test]
    fn least_squares_gradient() {
        let a = array![[1.0, 2.0], [0.0, 1.0], [1.0, -1.0]];
        let b = array![1.0, 0.0, 2.0];
        let obj = SmoothObjective::least_squares(a.clone(), b.clone(), 0.1).unwrap();
        let x = array![0.3, -0.7];
        let (v, g) = obj.value_and_gradient(&x);
        let r = a.dot(&x) - &b;
        let expect_v = r.dot(&r) / 6.0 + 0.05 * x.dot(&x);
        assert!((v - expect_v).abs() <= 1e-14);
        let expect_g = a.t().dot(&r).mapv(|t| t / 3.0) + &x.mapv(|t| 0.1 * t);
        for (ga, gb) in g.iter().zip(expect_g.iter()) {
            assert!((ga - gb).abs() <= 1e-14);
        }
    }

    #[test]
    fn synthetic_data_is_deterministic() {
        let w = spike_weights(10, 3, 1.0, 5);
        let a = synthetic_classification(20, &w, 0.1, 9);
        let b = synthetic_classification(20, &w, 0.1, 9);
        assert_eq!(a, b);
        assert!(a.labels().iter().all(|&l| l == 1.0 || l == -1.0));
        for r in 0..a.num_samples() {
            let (_, vals) = a.features().row(r);
            let norm: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn spiked_rows_stay_unit_norm_and_worsen_conditioning() {
        let w = spike_weights(20, 3, 1.0, 5);
        let plain = synthetic_classification_spiked(200, &w, 0.1, 0.0, 9);
        let spiked = synthetic_classification_spiked(200, &w, 0.1, 0.6, 9);
        for data in [&plain, &spiked] {
            for r in 0..data.num_samples() {
                let (_, vals) = data.features().row(r);
                let norm: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12);
            }
        }
        let l_plain = SmoothObjective::logistic_ridge(plain, 0.0)
            .unwrap()
            .smoothness();
        let l_spiked = SmoothObjective::logistic_ridge(spiked, 0.0)
            .unwrap()
            .smoothness();
        assert!(
            l_spiked > 3.0 * l_plain,
            "spike did not inflate the top singular value: {l_spiked} vs {l_plain}"
        );
    }

    #[test]
    fn blocky_weights_have_expected_jumps() {
        let w = blocky_weights(12, 4, 1.0, 3);
        let jumps = w
            .windows(2)
            .into_iter()
            .filter(|win| (win[1] - win[0]).abs() > 0.0)
            .count();
        assert_eq!(jumps, 3);
    }
}
