//! Optimization engines: plain proximal gradient, randomized subspace
//! proximal gradient, and the identification-driven adaptive variant.
//!
//! The randomized step keeps two iterates: `x`, living in the original
//! space, and `z`, living in the rescaled space. One iteration computes
//! `y = Q (x - gamma grad f(x))`, overwrites `z` inside the drawn subspace
//! with `y`, and maps back through `x = prox_{gamma g}(Q^{-1} z)`.
//! Adaptive runs rebuild the selection law from the iterate's sparsity
//! pattern, rescale `z` by `Q_new Q_old^{-1}`, and then respect a minimum
//! number of iterations before the next adaptation, chosen so that the
//! rescaling cost is amortized by the contraction of the previous law.

use ndarray::Array1;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::SmoothObjective;
use crate::prox::{prox, sparsity_vector, Regularizer, SparsityVector, DEFAULT_JUMP_TOL};
use crate::subspace::{
    apply_projection, average_projection, draw_selection, rescale, transition_norm,
    AveragedProjection, Estimation, FamilyKind, Selection, SelectionLaw, SubspaceFamily,
    DEFAULT_MC_SAMPLES,
};

/// How the selection law is parameterized (per-subspace probability or a
/// fixed number of sampled subspaces).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionOption {
    /// Bernoulli probability `p` outside the identified pattern, probability
    /// one inside it.
    Option1 { p: f64 },
    /// Sample `s` subspaces outside the identified pattern, force everything
    /// inside it.
    Option2 { s: usize },
}

/// Adaptation policy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adaptation {
    /// Never adapt: the plain randomized subspace method.
    None,
    /// Adapt when the pattern changed and the minimum gap has elapsed, with
    /// the gap computed from the executed transition cost.
    IdentificationDriven,
    /// Adapt on pattern change but with a fixed user-chosen gap.
    FixedCadence { period: usize },
}

/// Configuration of a solver run.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub gamma: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub selection: SelectionOption,
    /// Corrected-rate margin used by the adaptation gap rule.
    pub beta: f64,
    /// Tolerance for reading the sparsity pattern off an iterate.
    pub tol_pattern: f64,
    pub adaptation: Adaptation,
    /// Monte-Carlo sample count for dense averaged projections.
    pub mc_samples: usize,
    /// Gap used when the strongly convex gap rule is unavailable (mu = 0).
    pub fallback_cadence: usize,
}

impl SolverConfig {
    /// Defaults: `gamma = 2/(mu+L)` when strongly convex else `1/L`;
    /// `beta = gamma mu L / (n (mu + L))`; pattern tolerance 0 for the axes
    /// family and a relative `1e-12` for jumps.
    pub fn new(
        obj: &SmoothObjective,
        family: &SubspaceFamily,
        selection: SelectionOption,
        adaptation: Adaptation,
        max_iters: usize,
        seed: u64,
    ) -> Self {
        let (l, mu) = obj.lipschitz_constants();
        let gamma = if mu > 0.0 { 2.0 / (mu + l) } else { 1.0 / l };
        let n = family.dim() as f64;
        let beta = if mu > 0.0 {
            gamma * mu * l / (n * (mu + l))
        } else {
            0.0
        };
        let tol_pattern = match family.kind() {
            FamilyKind::Axes => 0.0,
            FamilyKind::Jumps => DEFAULT_JUMP_TOL,
        };
        Self {
            gamma,
            max_iters,
            seed,
            selection,
            beta,
            tol_pattern,
            adaptation,
            mc_samples: DEFAULT_MC_SAMPLES,
            fallback_cadence: 50,
        }
    }

    pub fn validate(&self, obj: &SmoothObjective, family: &SubspaceFamily) -> Result<()> {
        let (l, mu) = obj.lipschitz_constants();
        if mu > 0.0 {
            if !(self.gamma > 0.0 && self.gamma <= 2.0 / (mu + l)) {
                return Err(Error::InvalidConfiguration(format!(
                    "step {} outside (0, 2/(mu+L)] = (0, {}]",
                    self.gamma,
                    2.0 / (mu + l)
                )));
            }
        } else if !(self.gamma > 0.0 && self.gamma < 2.0 / l) {
            return Err(Error::InvalidConfiguration(format!(
                "step {} outside (0, 2/L) = (0, {})",
                self.gamma,
                2.0 / l
            )));
        }
        if self.adaptation == Adaptation::IdentificationDriven && mu > 0.0 {
            let cap = 2.0 * self.gamma * mu * l / (family.dim() as f64 * (mu + l));
            if !(self.beta > 0.0 && self.beta <= cap) {
                return Err(Error::InvalidConfiguration(format!(
                    "beta {} outside (0, {cap}]",
                    self.beta
                )));
            }
        }
        match self.selection {
            SelectionOption::Option1 { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidConfiguration(
                        "Option1 probability must lie in (0, 1]".into(),
                    ));
                }
            }
            SelectionOption::Option2 { s } => {
                if s == 0 || s > family.size() {
                    return Err(Error::InvalidConfiguration(format!(
                        "Option2 sample size must lie in 1..={}",
                        family.size()
                    )));
                }
            }
        }
        if self.fallback_cadence == 0 {
            return Err(Error::InvalidConfiguration(
                "fallback cadence must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Mutable state of a randomized run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Array1<f64>,
    pub z: Array1<f64>,
    /// Adaptation cycle index.
    pub cycle: usize,
    /// Iteration of the last adaptation.
    pub last_adapt_iter: usize,
    /// Minimum iterations between the last adaptation and the next.
    pub min_gap: usize,
    /// Instantaneous rate of the law active before the last adaptation.
    pub alpha_prev: f64,
    pub proj: AveragedProjection,
    pub law: SelectionLaw,
    pub pattern_at_adapt: SparsityVector,
}

impl SolverState {
    /// Whether an adaptation is allowed at iteration `k` given the current
    /// pattern: the gap must have elapsed and the pattern must differ from
    /// the one the current law was built from. Deterministic in `(pattern, k)`.
    pub fn decide_adaptation(&self, pattern_now: &SparsityVector, k: usize) -> bool {
        k >= self.last_adapt_iter + self.min_gap && *pattern_now != self.pattern_at_adapt
    }
}

/// One record per iteration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub pattern_size: usize,
    /// Subspaces touched by this iteration's selection.
    pub explored: usize,
    /// Running total of `explored`.
    pub subspaces_explored: usize,
    pub cycle: usize,
    pub adaptation: bool,
}

/// Details of one adaptation event.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationEvent {
    pub iter: usize,
    pub transition_norm_sq: f64,
    /// Gap imposed before the next adaptation.
    pub next_gap: usize,
    pub lambda_min: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunMetrics {
    pub records: Vec<IterationRecord>,
    pub adaptations: Vec<AdaptationEvent>,
    /// Set when the gap rule fell back to the fixed cadence because the
    /// objective is not strongly convex.
    pub rate_uncontrolled: bool,
}

impl RunMetrics {
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }
}

/// One plain proximal gradient step: `prox_{gamma g}(x - gamma grad f(x))`.
pub fn pgd_step(
    obj: &SmoothObjective,
    reg: &Regularizer,
    gamma: f64,
    x: &Array1<f64>,
) -> Result<Array1<f64>> {
    let (_, grad) = obj.value_and_gradient(x);
    prox(reg, gamma, &(x - &grad.mapv(|g| gamma * g)))
}

/// One randomized subspace step with the given selection. `x` and `z` are
/// advanced in place.
#[allow(clippy::too_many_arguments)]
pub fn rpsd_step(
    x: &mut Array1<f64>,
    z: &mut Array1<f64>,
    obj: &SmoothObjective,
    reg: &Regularizer,
    gamma: f64,
    family: &SubspaceFamily,
    proj: &AveragedProjection,
    sel: &Selection,
) -> Result<()> {
    let (_, grad) = obj.value_and_gradient(x);
    let y = proj.apply_q(&(&*x - &grad.mapv(|g| gamma * g)));
    *z = match family.kind() {
        // Merging coordinatewise keeps untouched entries bit-identical.
        FamilyKind::Axes => {
            let mut znew = z.clone();
            for &i in sel.chosen() {
                znew[i] = y[i];
            }
            znew
        }
        FamilyKind::Jumps => {
            &apply_projection(family, sel, &y) + &(&*z - &apply_projection(family, sel, z))
        }
    };
    *x = prox(reg, gamma, &proj.apply_qinv(z))?;
    Ok(())
}

/// Instantaneous contraction rate `2 gamma mu L lambda / (mu + L)` of a law
/// with the given smallest averaged-projection eigenvalue; 0 when mu = 0.
pub fn rate_alpha(obj: &SmoothObjective, gamma: f64, lambda_min: f64) -> f64 {
    let (l, mu) = obj.lipschitz_constants();
    if mu <= 0.0 {
        0.0
    } else {
        lambda_min * 2.0 * gamma * mu * l / (mu + l)
    }
}

/// Per-iteration contraction factor guaranteed for the current law.
pub fn theoretical_rate(
    proj: &AveragedProjection,
    obj: &SmoothObjective,
    gamma: f64,
) -> Result<f64> {
    let (_, mu) = obj.lipschitz_constants();
    if mu <= 0.0 {
        return Err(Error::UndefinedRate);
    }
    Ok(1.0 - rate_alpha(obj, gamma, proj.lambda_min()))
}

/// Smallest integer `c >= 1` with
/// `transition_norm_sq * (1 - alpha_prev)^c <= 1 - beta`, evaluated through
/// its ceiling formula and then pinned to exact minimality in floating point.
///
/// Errors with [`Error::UndefinedRate`] when `alpha_prev <= 0` (mu = 0 mode);
/// the caller falls back to a fixed cadence then.
pub fn inter_adaptation_time(transition_norm_sq: f64, alpha_prev: f64, beta: f64) -> Result<usize> {
    if alpha_prev.is_nan() || alpha_prev <= 0.0 {
        return Err(Error::UndefinedRate);
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter("beta must lie in (0, 1)".into()));
    }
    if alpha_prev >= 1.0 {
        return Ok(1);
    }
    let a = transition_norm_sq;
    let target = 1.0 - beta;
    let shrink = 1.0 - alpha_prev;
    let satisfied = |c: u32| a * shrink.powi(c as i32) <= target;
    let raw = (a.ln() + (1.0 / target).ln()) / (1.0 / shrink).ln();
    let mut c: u32 = if raw.is_finite() && raw > 1.0 {
        raw.ceil().min(u32::MAX as f64 / 2.0) as u32
    } else {
        1
    };
    while !satisfied(c) {
        c += 1;
    }
    while c > 1 && satisfied(c - 1) {
        c -= 1;
    }
    Ok(c as usize)
}

/// Fixed inter-adaptation period balancing a constant transition-cost bound
/// against the rate `alpha`: smallest `c` with
/// `a_bound (1-alpha)^c <= (1 - alpha/2)^c`.
pub fn fixed_cadence_interval(a_bound: f64, alpha: f64) -> usize {
    if a_bound <= 1.0 {
        return 1;
    }
    let ratio = (2.0 - alpha) / (2.0 - 2.0 * alpha);
    if ratio.is_nan() || ratio <= 1.0 {
        return 1;
    }
    (a_bound.ln() / ratio.ln()).ceil().max(1.0) as usize
}

/// Rebuild the selection law from an identified pattern.
///
/// Option 1 keeps probability one on pattern subspaces and `p` elsewhere;
/// Option 2 forces the pattern subspaces and samples `s` of the rest
/// (capped by how many remain).
pub fn build_adapted_law(
    pattern: &SparsityVector,
    option: SelectionOption,
    seed: u64,
) -> SelectionLaw {
    match option {
        SelectionOption::Option1 { p } => SelectionLaw::bernoulli(
            pattern
                .bits()
                .iter()
                .map(|&b| if b { 1.0 } else { p })
                .collect(),
            seed,
        ),
        SelectionOption::Option2 { s } => {
            let forced = pattern.ones();
            let zeros = pattern.len() - forced.len();
            SelectionLaw::fixed_sample_size(s.min(zeros), forced, seed)
        }
    }
}

fn mix_seed(seed: u64, cycle: usize) -> u64 {
    // splitmix64 step so per-cycle law seeds do not collide with the run seed
    let mut z = seed ^ (cycle as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run the randomized subspace method, adaptively or not, recording metrics
/// every iteration. Returns the final iterate and the per-iteration records.
pub fn arpsd_run(
    config: &SolverConfig,
    obj: &SmoothObjective,
    reg: &Regularizer,
    family: &SubspaceFamily,
) -> Result<(Array1<f64>, RunMetrics)> {
    config.validate(obj, family)?;
    let n = family.dim();
    if obj.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: obj.dim(),
        });
    }
    let m = family.size();
    let gamma = config.gamma;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let estimation = Estimation::Auto {
        samples: config.mc_samples,
    };

    let initial_pattern = SparsityVector::zeros(m);
    let law = build_adapted_law(&initial_pattern, config.selection, mix_seed(config.seed, 0));
    let proj = average_projection(family, &law, estimation)?;

    let mut state = SolverState {
        x: Array1::zeros(n),
        z: Array1::zeros(n),
        cycle: 0,
        last_adapt_iter: 0,
        min_gap: match config.adaptation {
            Adaptation::FixedCadence { period } => period,
            _ => 1,
        },
        alpha_prev: rate_alpha(obj, gamma, proj.lambda_min()),
        proj,
        law,
        pattern_at_adapt: initial_pattern,
    };
    // x^0 = prox(Q^{-1} z^0) with z^0 = Q * 0 = 0.
    state.x = prox(reg, gamma, &state.proj.apply_qinv(&state.z))?;

    let mut metrics = RunMetrics::default();
    let mut explored_total = 0usize;
    let pattern0 = sparsity_vector(family.kind(), &state.x, config.tol_pattern);
    metrics.records.push(IterationRecord {
        iter: 0,
        objective: obj.value(&state.x) + reg.value(&state.x),
        pattern_size: pattern0.count_ones(),
        explored: 0,
        subspaces_explored: 0,
        cycle: 0,
        adaptation: false,
    });

    for k in 1..=config.max_iters {
        let sel = draw_selection(family, &state.law, &mut rng)?;
        rpsd_step(
            &mut state.x,
            &mut state.z,
            obj,
            reg,
            gamma,
            family,
            &state.proj,
            &sel,
        )?;
        explored_total += sel.len();

        let pattern = sparsity_vector(family.kind(), &state.x, config.tol_pattern);
        let mut adapted = false;
        if config.adaptation != Adaptation::None && state.decide_adaptation(&pattern, k) {
            adapted = true;
            state.cycle += 1;
            let new_law = build_adapted_law(
                &pattern,
                config.selection,
                mix_seed(config.seed, state.cycle),
            );
            let new_proj = average_projection(family, &new_law, estimation)?;
            let cost = transition_norm(&new_proj, &state.proj);
            state.z = rescale(&new_proj, &state.proj, &state.z);
            let alpha_old = rate_alpha(obj, gamma, state.proj.lambda_min());
            let gap = match config.adaptation {
                Adaptation::FixedCadence { period } => period,
                _ => match inter_adaptation_time(cost, alpha_old, config.beta) {
                    Ok(c) => c,
                    Err(Error::UndefinedRate) => {
                        metrics.rate_uncontrolled = true;
                        config.fallback_cadence
                    }
                    Err(e) => return Err(e),
                },
            };
            metrics.adaptations.push(AdaptationEvent {
                iter: k,
                transition_norm_sq: cost,
                next_gap: gap,
                lambda_min: new_proj.lambda_min(),
            });
            state.alpha_prev = alpha_old;
            state.min_gap = gap;
            state.last_adapt_iter = k;
            state.pattern_at_adapt = pattern.clone();
            state.proj = new_proj;
            state.law = new_law;
        }

        metrics.records.push(IterationRecord {
            iter: k,
            objective: obj.value(&state.x) + reg.value(&state.x),
            pattern_size: pattern.count_ones(),
            explored: sel.len(),
            subspaces_explored: explored_total,
            cycle: state.cycle,
            adaptation: adapted,
        });
    }
    Ok((state.x, metrics))
}

/// Plain proximal gradient run with the same metrics schema; every
/// iteration explores the whole family.
pub fn pgd_run(
    obj: &SmoothObjective,
    reg: &Regularizer,
    family: &SubspaceFamily,
    gamma: f64,
    max_iters: usize,
    tol_pattern: f64,
) -> Result<(Array1<f64>, RunMetrics)> {
    let n = family.dim();
    if obj.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: obj.dim(),
        });
    }
    let m = family.size();
    let mut x = Array1::zeros(n);
    x = prox(reg, gamma, &x)?;
    let mut metrics = RunMetrics::default();
    let mut explored_total = 0usize;
    let p0 = sparsity_vector(family.kind(), &x, tol_pattern);
    metrics.records.push(IterationRecord {
        iter: 0,
        objective: obj.value(&x) + reg.value(&x),
        pattern_size: p0.count_ones(),
        explored: 0,
        subspaces_explored: 0,
        cycle: 0,
        adaptation: false,
    });
    for k in 1..=max_iters {
        x = pgd_step(obj, reg, gamma, &x)?;
        explored_total += m;
        let pattern = sparsity_vector(family.kind(), &x, tol_pattern);
        metrics.records.push(IterationRecord {
            iter: k,
            objective: obj.value(&x) + reg.value(&x),
            pattern_size: pattern.count_ones(),
            explored: m,
            subspaces_explored: explored_total,
            cycle: 0,
            adaptation: false,
        });
    }
    Ok((x, metrics))
}

/// Reference solution by plain proximal gradient, iterated until the
/// gradient-mapping norm `||x - prox(x - gamma grad f)|| / gamma` drops
/// below `tol` (or `max_iters` is hit). Returns the minimizer and `F*`.
pub fn reference_minimizer(
    obj: &SmoothObjective,
    reg: &Regularizer,
    gamma: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Array1<f64>, f64)> {
    let mut x = Array1::zeros(obj.dim());
    for _ in 0..max_iters {
        let next = pgd_step(obj, reg, gamma, &x)?;
        let gm = (&x - &next).mapv(|d| d * d).sum().sqrt() / gamma;
        x = next;
        if gm <= tol {
            break;
        }
    }
    let f_star = obj.value(&x) + reg.value(&x);
    Ok((x, f_star))
}
