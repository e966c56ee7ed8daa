//! Cross-view caption consistency, attribute accuracy, memory scalability and
//! per-step timing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::ClassScores;
use crate::memory::{EpisodicMemory, ObjectEntry};
use crate::oracle::{cosine_similarity, AttributeSet, Embedder};

/// Minimum series length accepted by [`memory_scalability`].
pub const MIN_SCALABILITY_STEPS: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no objects to score")]
    NoObjects,
    #[error("series has {steps} steps, need at least {min}")]
    InsufficientData { steps: usize, min: usize },
    #[error("series steps must be strictly increasing (step {step})")]
    NonMonotonicSteps { step: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub per_object: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub iqr: f64,
}

/// Quantile by linear interpolation between closest ranks. `sorted` must be
/// non-empty and ascending.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl ConsistencyReport {
    pub fn from_values(per_object: Vec<f64>) -> Result<Self, MetricsError> {
        if per_object.is_empty() {
            return Err(MetricsError::NoObjects);
        }
        let mut sorted = per_object.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = per_object.iter().sum::<f64>() / per_object.len() as f64;
        Ok(Self {
            mean,
            median: quantile(&sorted, 0.5),
            iqr: quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
            per_object,
        })
    }
}

/// Mean pairwise cosine similarity over a caption list; 1 for fewer than two.
pub fn list_consistency<S: AsRef<str>>(captions: &[S], embedder: &Embedder) -> f64 {
    if captions.len() < 2 {
        return 1.0;
    }
    let vecs: Vec<_> = captions.iter().map(|c| embedder.embed(c.as_ref())).collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            sum += cosine_similarity(&vecs[i], &vecs[j]);
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// Same quantity over a caption histogram, weighting each distinct pair by
/// the product of its counts. Equal to [`list_consistency`] on the expanded
/// multiset.
pub fn entry_consistency(entry: &ObjectEntry, embedder: &Embedder) -> f64 {
    let n: u64 = entry.captions.iter().map(|c| c.count as u64).sum();
    if n < 2 {
        return 1.0;
    }
    let vecs: Vec<_> = entry.captions.iter().map(|c| embedder.embed(&c.text)).collect();
    let mut sum = 0.0;
    for i in 0..vecs.len() {
        let ci = entry.captions[i].count as f64;
        // Identical captions within one bin have similarity 1.
        sum += ci * (ci - 1.0) / 2.0;
        for j in i + 1..vecs.len() {
            sum += ci * entry.captions[j].count as f64 * cosine_similarity(&vecs[i], &vecs[j]);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Consistency over explicit per-object caption lists.
pub fn caption_consistency<S: AsRef<str>>(objects: &[Vec<S>], embedder: &Embedder) -> Result<ConsistencyReport, MetricsError> {
    ConsistencyReport::from_values(objects.iter().map(|o| list_consistency(o, embedder)).collect())
}

/// Consistency over every entry of a memory, in entry order.
pub fn memory_consistency(memory: &EpisodicMemory, embedder: &Embedder) -> Result<ConsistencyReport, MetricsError> {
    ConsistencyReport::from_values(memory.entries().iter().map(|e| entry_consistency(e, embedder)).collect())
}

/// Set precision and recall over category plus modifiers. A missing
/// prediction scores zero.
pub fn attribute_f1(predicted: Option<&AttributeSet>, truth: &AttributeSet) -> ClassScores {
    let truth_tokens: std::collections::BTreeSet<&str> = truth.content_tokens().into_iter().collect();
    let Some(pred) = predicted else {
        return ClassScores::from_counts(0, 0, truth_tokens.len());
    };
    let pred_tokens: std::collections::BTreeSet<&str> = pred.content_tokens().into_iter().collect();
    let tp = pred_tokens.intersection(&truth_tokens).count();
    ClassScores::from_counts(tp, pred_tokens.len(), truth_tokens.len())
}

/// Pearson correlation; zero when either side has no variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return 0.0;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityPoint {
    pub step: u32,
    pub tokens: usize,
    pub objects: usize,
    pub distinct_captions: usize,
    /// Deterministic stand-in for inference time: prompt token count.
    pub surrogate_cost: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityReport {
    pub series: Vec<ScalabilityPoint>,
    /// First step from which entry count and distinct-caption count stay at
    /// their final values.
    pub saturation_step: u32,
    pub corr_tokens_objects: f64,
    pub corr_tokens_suffix_steps: f64,
    /// Token count constant over the post-saturation suffix.
    pub plateau: bool,
    pub pass: bool,
}

pub fn memory_scalability(series: &[ScalabilityPoint]) -> Result<ScalabilityReport, MetricsError> {
    if series.len() < MIN_SCALABILITY_STEPS {
        return Err(MetricsError::InsufficientData {
            steps: series.len(),
            min: MIN_SCALABILITY_STEPS,
        });
    }
    if let Some(w) = series.windows(2).find(|w| w[1].step <= w[0].step) {
        return Err(MetricsError::NonMonotonicSteps { step: w[1].step });
    }
    let last = series[series.len() - 1];
    let mut sat = series.len() - 1;
    while sat > 0 && series[sat - 1].objects == last.objects && series[sat - 1].distinct_captions == last.distinct_captions {
        sat -= 1;
    }
    let tokens: Vec<f64> = series.iter().map(|p| p.tokens as f64).collect();
    let objects: Vec<f64> = series.iter().map(|p| p.objects as f64).collect();
    let suffix = &series[sat..];
    let suffix_steps: Vec<f64> = suffix.iter().map(|p| p.step as f64).collect();
    let corr_obj = pearson(&tokens, &objects);
    let corr_steps = pearson(&tokens[sat..], &suffix_steps);
    Ok(ScalabilityReport {
        saturation_step: series[sat].step,
        corr_tokens_objects: corr_obj,
        corr_tokens_suffix_steps: corr_steps,
        plateau: suffix.iter().all(|p| p.tokens == suffix[0].tokens),
        pass: corr_obj > corr_steps,
        series: series.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingProfile {
    /// Seconds per step.
    pub per_step: Vec<f64>,
    pub median: f64,
    pub max: f64,
}

impl TimingProfile {
    pub fn new(per_step: Vec<f64>) -> Self {
        if per_step.is_empty() {
            return Self {
                per_step,
                median: 0.0,
                max: 0.0,
            };
        }
        let mut sorted = per_step.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            median: quantile(&sorted, 0.5),
            max: sorted[sorted.len() - 1],
            per_step,
        }
    }

    /// Element-wise minimum over repeated runs of the same episode, which
    /// filters scheduler noise out of the per-step cost.
    pub fn from_repeats(runs: &[Vec<f64>]) -> Self {
        let len = runs.iter().map(Vec::len).min().unwrap_or(0);
        let per_step = (0..len).map(|i| runs.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min)).collect();
        Self::new(per_step)
    }

    pub fn ratio(&self) -> f64 {
        if self.median > 0.0 {
            self.max / self.median
        } else {
            1.0
        }
    }

    pub fn bounded(&self, max_over_median: f64) -> bool {
        self.ratio() <= max_over_median
    }
}
