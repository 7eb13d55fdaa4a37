//! Multi-class RBF support vector machine.
//!
//! Binary machines are trained on the dual problem
//!
//! ```text
//! max  Σ αᵢ − ½ ΣΣ αᵢ αⱼ yᵢ yⱼ K(xᵢ, xⱼ)
//! s.t. 0 ≤ αᵢ ≤ C,  Σ αᵢ yᵢ = 0
//! ```
//!
//! with sequential minimal optimization: pairs of multipliers are updated
//! analytically until every sample satisfies the KKT conditions within `tol`.
//! Several classes are handled one-vs-rest, all machines sharing one Gram
//! matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Prediction, Source};
use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FeatureVector, Scaler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_passes: usize,
}

impl SvmParams {
    /// Defaults with `gamma = 1 / dims`.
    pub fn for_dims(dims: usize) -> Self {
        SvmOptions::default().resolve(dims)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.c) && ok(self.gamma) && ok(self.tol) && self.max_passes > 0) {
            return Err(Error::InvalidConfig(format!(
                "SVM parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Parameters before the feature dimensionality is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    pub c: f64,
    /// `None` means `1 / dims`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 200,
        }
    }
}

impl SvmOptions {
    pub fn resolve(&self, dims: usize) -> SvmParams {
        SvmParams {
            c: self.c,
            gamma: self.gamma.unwrap_or(1.0 / dims.max(1) as f64),
            tol: self.tol,
            max_passes: self.max_passes,
        }
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(x, y)).exp()
}

/// `exp(-gamma * ‖x − y‖²)`.
pub fn rbf_kernel(x: &FeatureVector, y: &FeatureVector, gamma: f64) -> Result<f64> {
    if x.dims() != y.dims() {
        return Err(Error::LayoutMismatch {
            expected: x.dims(),
            got: y.dims(),
        });
    }
    Ok(rbf(&x.0, &y.0, gamma))
}

/// Dense symmetric Gram matrix.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn rbf(xs: &[FeatureVector], gamma: f64) -> Self {
        let n = xs.len();
        let rows: Vec<usize> = (0..n).collect();
        let upper = crate::exec::par_map(&rows, |&i| {
            (i..n)
                .map(|j| if i == j { 1.0 } else { rbf(&xs[i].0, &xs[j].0, gamma) })
                .collect::<Vec<_>>()
        });
        let mut data = vec![0.0; n * n];
        for (i, row) in upper.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        KernelMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Optimized dual variables for one binary problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub passes: usize,
    pub converged: bool,
}

/// Dual objective `Σα − ½ αᵀQα` with `Q = yyᵀ ∘ K`.
pub fn dual_objective(alphas: &[f64], labels: &[f64], kernel: &KernelMatrix) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let row = kernel.row(i);
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * row[j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

fn check_labels(labels: &[f64]) -> Result<()> {
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidInput("labels must be +1 or -1".into()));
    }
    let pos = labels.iter().filter(|&&y| y > 0.0).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::DegenerateLabels);
    }
    Ok(())
}

struct Smo<'a> {
    k: &'a KernelMatrix,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    bias: f64,
    /// `f(xᵢ) − yᵢ` for every sample.
    err: Vec<f64>,
}

const STEP_EPS: f64 = 1e-12;

impl Smo<'_> {
    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.err[i] * self.y[i];
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        };
        if hi - lo < STEP_EPS {
            return false;
        }
        let k11 = self.k.get(i1, i1);
        let k12 = self.k.get(i1, i2);
        let k22 = self.k.get(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2_new = if eta > STEP_EPS {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Curvature vanishes: move to whichever end gains more objective.
            let g1 = e1 + y1 - self.bias;
            let g2 = e2 + y2 - self.bias;
            let gain = |a2_cand: f64| {
                let d2 = a2_cand - a2;
                let d1 = -s * d2;
                d1 + d2 - y1 * g1 * d1 - y2 * g2 * d2 - 0.5 * (d1 * d1 * k11 + d2 * d2 * k22 + 2.0 * s * d1 * d2 * k12)
            };
            let (w_lo, w_hi) = (gain(lo), gain(hi));
            if w_lo > w_hi + STEP_EPS {
                lo
            } else if w_hi > w_lo + STEP_EPS {
                hi
            } else {
                a2
            }
        };
        if a2_new < STEP_EPS {
            a2_new = 0.0;
        } else if a2_new > self.c - STEP_EPS {
            a2_new = self.c;
        }
        if (a2_new - a2).abs() < STEP_EPS * (a2_new + a2 + STEP_EPS) {
            return false;
        }
        let mut a1_new = a1 + s * (a2 - a2_new);
        if a1_new < STEP_EPS {
            a1_new = 0.0;
        } else if a1_new > self.c - STEP_EPS {
            a1_new = self.c;
        }

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let free1 = a1_new > 0.0 && a1_new < self.c;
        let free2 = a2_new > 0.0 && a2_new < self.c;
        let b_new = if free1 {
            b1
        } else if free2 {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.bias;
        let (r1, r2) = (self.k.row(i1), self.k.row(i2));
        for (j, e) in self.err.iter_mut().enumerate() {
            *e += d1 * r1[j] + d2 * r2[j] + db;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.bias = b_new;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        if !self.violates_kkt(i2) {
            return false;
        }
        let n = self.alpha.len();
        // Second index: largest |E1 − E2|, lowest index on ties.
        let e2 = self.err[i2];
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if j == i2 {
                continue;
            }
            let gap = (self.err[j] - e2).abs();
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some((j, gap));
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        for off in 1..n {
            let i1 = (i2 + off) % n;
            if self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        for off in 1..n {
            let i1 = (i2 + off) % n;
            if !self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    /// Bias from free multipliers, or the midpoint of the feasible interval
    /// when every multiplier sits at a bound.
    fn final_bias(&self) -> f64 {
        let n = self.alpha.len();
        let mut free_sum = 0.0;
        let mut free_n = 0usize;
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..n {
            // yᵢ − Σⱼ αⱼ yⱼ Kᵢⱼ
            let r = -(self.err[i] - self.bias);
            if self.is_free(i) {
                free_sum += r;
                free_n += 1;
            } else {
                let at_zero = self.alpha[i] == 0.0;
                if (self.y[i] > 0.0) == at_zero {
                    lower = lower.max(r);
                } else {
                    upper = upper.min(r);
                }
            }
        }
        if free_n > 0 {
            free_sum / free_n as f64
        } else if lower.is_finite() && upper.is_finite() {
            0.5 * (lower + upper)
        } else if lower.is_finite() {
            lower
        } else if upper.is_finite() {
            upper
        } else {
            self.bias
        }
    }
}

/// Solve the binary dual on a precomputed Gram matrix.
pub fn solve_dual(kernel: &KernelMatrix, labels: &[f64], params: &SvmParams) -> Result<DualSolution> {
    params.validate()?;
    if kernel.len() != labels.len() || labels.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two samples with one label each, got {} samples and {} labels",
            kernel.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    let n = labels.len();
    let mut smo = Smo {
        k: kernel,
        y: labels,
        c: params.c,
        tol: params.tol,
        alpha: vec![0.0; n],
        bias: 0.0,
        err: labels.iter().map(|y| -y).collect(),
    };

    let mut examine_all = true;
    let mut passes = 0;
    let mut converged = false;
    while passes < params.max_passes {
        passes += 1;
        let mut changed = 0;
        for i in 0..n {
            if (examine_all || smo.is_free(i)) && smo.examine(i) {
                changed += 1;
            }
        }
        if examine_all && changed == 0 {
            converged = true;
            break;
        }
        if examine_all {
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }
    // The final recorded pass must be a clean sweep over every sample.
    if !converged {
        converged = (0..n).all(|i| !smo.violates_kkt(i));
    }
    let bias = smo.final_bias();
    Ok(DualSolution {
        alphas: smo.alpha,
        bias,
        passes,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<FeatureVector>,
    /// `αᵢ yᵢ` per support vector.
    pub coefs: Vec<f64>,
    pub bias: f64,
    pub params: SvmParams,
    /// Position of each support vector in the training set.
    pub sv_indices: Vec<usize>,
    pub converged: bool,
}

impl BinarySvm {
    fn from_solution(xs: &[FeatureVector], labels: &[f64], sol: &DualSolution, params: SvmParams) -> Self {
        let sv_indices: Vec<usize> = (0..xs.len()).filter(|&i| sol.alphas[i] > 0.0).collect();
        BinarySvm {
            support_vectors: sv_indices.iter().map(|&i| xs[i].clone()).collect(),
            coefs: sv_indices.iter().map(|&i| sol.alphas[i] * labels[i]).collect(),
            bias: sol.bias,
            params,
            sv_indices,
            converged: sol.converged,
        }
    }

    pub fn decision_value(&self, x: &FeatureVector) -> Result<f64> {
        let mut f = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.coefs) {
            f += coef * rbf_kernel(sv, x, self.params.gamma)?;
        }
        Ok(f)
    }
}

fn check_finite(xs: &[FeatureVector]) -> Result<()> {
    let dims = xs.first().map_or(0, FeatureVector::dims);
    for (i, x) in xs.iter().enumerate() {
        if x.dims() != dims {
            return Err(Error::LayoutMismatch {
                expected: dims,
                got: x.dims(),
            });
        }
        if x.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} has a non-finite feature")));
        }
    }
    Ok(())
}

/// Train one binary machine; labels are ±1.
pub fn train_binary(xs: &[FeatureVector], labels: &[f64], params: &SvmParams) -> Result<BinarySvm> {
    if xs.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} samples but {} labels",
            xs.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    check_finite(xs)?;
    let kernel = KernelMatrix::rbf(xs, params.gamma);
    let sol = solve_dual(&kernel, labels, params)?;
    Ok(BinarySvm::from_solution(xs, labels, &sol, *params))
}

/// One machine per class, sharing a support-vector pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsRest {
    pub classes: Vec<String>,
    pub params: SvmParams,
    /// Every training vector that is a support vector of at least one machine.
    pub vectors: Vec<FeatureVector>,
    pub machines: Vec<MachineRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineRecord {
    pub class: String,
    /// Indices into [`OneVsRest::vectors`].
    pub support: Vec<usize>,
    pub coefs: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

impl OneVsRest {
    /// Train on `(vector, class)` samples in the order given.
    pub fn train(xs: &[FeatureVector], classes: &[&str], params: &SvmParams) -> Result<Self> {
        params.validate()?;
        if xs.len() != classes.len() {
            return Err(Error::InvalidInput(format!(
                "{} samples but {} labels",
                xs.len(),
                classes.len()
            )));
        }
        let distinct: Vec<String> = classes
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(str::to_owned)
            .collect();
        if distinct.len() < 2 {
            return Err(Error::NeedsTwoClasses);
        }
        check_finite(xs)?;
        let kernel = KernelMatrix::rbf(xs, params.gamma);
        let solutions = crate::exec::try_par_map(&distinct, |class| {
            let labels: Vec<f64> = classes.iter().map(|&c| if c == class { 1.0 } else { -1.0 }).collect();
            solve_dual(&kernel, &labels, params).map(|sol| (labels, sol))
        })?;

        let mut pool: BTreeMap<usize, usize> = BTreeMap::new();
        for (_, sol) in &solutions {
            for (i, &a) in sol.alphas.iter().enumerate() {
                if a > 0.0 {
                    pool.insert(i, 0);
                }
            }
        }
        for (slot, v) in pool.values_mut().enumerate() {
            *v = slot;
        }
        let vectors = pool.keys().map(|&i| xs[i].clone()).collect();
        let machines = distinct
            .iter()
            .zip(&solutions)
            .map(|(class, (labels, sol))| {
                let idx: Vec<usize> = (0..xs.len()).filter(|&i| sol.alphas[i] > 0.0).collect();
                MachineRecord {
                    class: class.clone(),
                    support: idx.iter().map(|i| pool[i]).collect(),
                    coefs: idx.iter().map(|&i| sol.alphas[i] * labels[i]).collect(),
                    bias: sol.bias,
                    converged: sol.converged,
                }
            })
            .collect();
        Ok(OneVsRest {
            classes: distinct,
            params: *params,
            vectors,
            machines,
        })
    }

    /// Raw decision value of every machine, keyed by class.
    pub fn decision_values(&self, x: &FeatureVector) -> Result<BTreeMap<String, f64>> {
        let dims = self.vectors.first().map_or(x.dims(), FeatureVector::dims);
        if x.dims() != dims {
            return Err(Error::LayoutMismatch {
                expected: dims,
                got: x.dims(),
            });
        }
        let k: Vec<f64> = self
            .vectors
            .iter()
            .map(|v| rbf(&v.0, &x.0, self.params.gamma))
            .collect();
        Ok(self
            .machines
            .iter()
            .map(|m| {
                let f = m.bias + m.support.iter().zip(&m.coefs).map(|(&s, c)| c * k[s]).sum::<f64>();
                (m.class.clone(), f)
            })
            .collect())
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        Ok(Prediction::from_raw(self.decision_values(x)?, Source::Svm))
    }
}

/// One-vs-rest SVM together with the feature layout and scaler it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSvmModel {
    pub layout: FeatureLayout,
    pub scaler: Scaler,
    pub machines: OneVsRest,
}

impl MultiSvmModel {
    /// Train from `(doc_id, author, unscaled vector)` samples.
    ///
    /// Samples are sorted by doc_id first, so the model does not depend on
    /// the order they arrive in.
    pub fn train(samples: &[(&str, &str, FeatureVector)], layout: FeatureLayout, opts: &SvmOptions) -> Result<Self> {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[a].0.cmp(samples[b].0));
        let raw: Vec<FeatureVector> = order.iter().map(|&i| samples[i].2.clone()).collect();
        let classes: Vec<&str> = order.iter().map(|&i| samples[i].1).collect();
        if classes.iter().collect::<std::collections::BTreeSet<_>>().len() < 2 {
            return Err(Error::NeedsTwoClasses);
        }
        if let Some(bad) = raw.iter().find(|v| v.dims() != layout.dims()) {
            return Err(Error::LayoutMismatch {
                expected: layout.dims(),
                got: bad.dims(),
            });
        }
        let scaler = crate::features::fit_scaler(&raw)?;
        let scaled = raw.iter().map(|v| scaler.apply(v)).collect::<Result<Vec<_>>>()?;
        let params = opts.resolve(layout.dims());
        let machines = OneVsRest::train(&scaled, &classes, &params)?;
        Ok(MultiSvmModel {
            layout,
            scaler,
            machines,
        })
    }

    pub fn authors(&self) -> &[String] {
        &self.machines.classes
    }

    /// Predict from an unscaled feature vector.
    pub fn predict_vector(&self, v: &FeatureVector) -> Result<Prediction> {
        if v.dims() != self.layout.dims() || self.scaler.dims() != self.layout.dims() {
            return Err(Error::IncompatibleModel(format!(
                "vector has {} dims, model expects {}",
                v.dims(),
                self.layout.dims()
            )));
        }
        self.machines.predict(&self.scaler.apply(v)?)
    }

    pub fn predict(&self, pt: &crate::preprocess::ProcessedText) -> Result<Prediction> {
        let sf = crate::features::extract(pt, 0);
        self.predict_vector(&crate::features::vectorize(&sf, &self.layout))
    }
}

pub fn predict_svm(model: &MultiSvmModel, pt: &crate::preprocess::ProcessedText) -> Result<Prediction> {
    model.predict(pt)
}
