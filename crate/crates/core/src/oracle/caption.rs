//! Viewpoint-conditioned stochastic captioner.
//!
//! Each ground-truth modifier is independently corrupted (dropped or swapped
//! for another vocabulary modifier) with a probability that grows linearly
//! with normalized distance and normalized off-axis angle. The category may be
//! swapped for a confusable one and view-dependent context terms may be
//! appended.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{AttributeSet, Vocabulary};
use crate::world::{AgentPose, WorldObject};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Base per-modifier corruption probability.
    pub p0: f64,
    /// Slope in normalized distance (`distance / max_range`).
    pub k_d: f64,
    /// Slope in normalized off-axis angle (`|angle| / (fov / 2)`).
    pub k_a: f64,
    /// Upper clamp on every corruption probability.
    pub p_max: f64,
    /// Base probability of reporting a confusable category.
    pub p_cat: f64,
    /// Probability of appending one view-dependent context term at full
    /// range and the edge of the field of view; scales down linearly for
    /// closer, more frontal views.
    pub p_context: f64,
    /// Share of modifier corruptions that substitute rather than drop.
    pub substitute_share: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p0: 0.02,
            k_d: 0.4,
            k_a: 0.2,
            p_max: 0.6,
            p_cat: 0.05,
            p_context: 0.4,
            substitute_share: 0.5,
        }
    }
}

impl NoiseModel {
    /// The ideal captioner: always renders the ground truth.
    pub fn zero() -> Self {
        Self {
            p0: 0.0,
            k_d: 0.0,
            k_a: 0.0,
            p_max: 0.0,
            p_cat: 0.0,
            p_context: 0.0,
            substitute_share: 0.5,
        }
    }

    /// Constant corruption rate `p` for modifiers and category, no context terms.
    pub fn constant(p: f64) -> Self {
        Self {
            p0: p,
            k_d: 0.0,
            k_a: 0.0,
            p_max: 1.0,
            p_cat: p,
            p_context: 0.0,
            substitute_share: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("p0", self.p0),
            ("k_d", self.k_d),
            ("k_a", self.k_a),
            ("p_max", self.p_max),
            ("p_cat", self.p_cat),
            ("p_context", self.p_context),
            ("substitute_share", self.substitute_share),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("noise.{name} must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("p_max", self.p_max),
            ("p_context", self.p_context),
            ("substitute_share", self.substitute_share),
        ] {
            if v > 1.0 {
                return Err(format!("noise.{name} must be <= 1"));
            }
        }
        Ok(())
    }

    /// `clamp(p0 + k_d·d/range + k_a·|angle|/half_fov, 0, p_max)`.
    pub fn modifier_corruption(&self, view: &ViewGeometry) -> f64 {
        (self.p0 + self.k_d * view.normalized_distance() + self.k_a * view.normalized_angle())
            .clamp(0.0, self.p_max)
    }

    /// `clamp(p_context·(d/range + |angle|/half_fov)/2, 0, p_max)`.
    pub fn context_probability(&self, view: &ViewGeometry) -> f64 {
        (self.p_context * (view.normalized_distance() + view.normalized_angle()) / 2.0).clamp(0.0, self.p_max)
    }

    /// Category confusion: `p_cat` scaled by the same distance/angle growth.
    pub fn category_corruption(&self, view: &ViewGeometry) -> f64 {
        (self.p_cat
            * (1.0 + self.k_d * view.normalized_distance() + self.k_a * view.normalized_angle()))
        .clamp(0.0, self.p_max)
    }
}

/// Relative geometry between the agent's camera and an observed object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewGeometry {
    /// Planar distance in meters.
    pub distance: f64,
    /// Off-axis angle in degrees, signed.
    pub angle_deg: f64,
    pub max_range: f64,
    pub fov_deg: f64,
}

impl ViewGeometry {
    pub fn normalized_distance(&self) -> f64 {
        if self.max_range > 0.0 {
            self.distance / self.max_range
        } else {
            0.0
        }
    }

    pub fn normalized_angle(&self) -> f64 {
        let half = self.fov_deg / 2.0;
        if half > 0.0 {
            self.angle_deg.abs() / half
        } else {
            0.0
        }
    }
}

/// A rendered caption and the pose it was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caption {
    pub text: String,
    pub source_step: u32,
    pub source_pose: AgentPose,
}

/// Draws a noisy realization of the object's attribute set.
pub fn corrupt_attributes<R: Rng + ?Sized>(
    truth: &AttributeSet,
    view: &ViewGeometry,
    noise: &NoiseModel,
    vocab: &Vocabulary,
    rng: &mut R,
) -> AttributeSet {
    let p_mod = noise.modifier_corruption(view);
    let p_cat = noise.category_corruption(view);

    let mut category = truth.category.clone();
    if rng.gen::<f64>() < p_cat {
        if let Some(alt) = vocab.confusable_with(&truth.category).choose(rng) {
            category = alt.to_string();
        }
    }

    let mut modifiers: Vec<String> = Vec::with_capacity(truth.modifiers.len());
    for m in &truth.modifiers {
        if rng.gen::<f64>() >= p_mod {
            modifiers.push(m.clone());
            continue;
        }
        if rng.gen::<f64>() < noise.substitute_share {
            let pool: Vec<&String> = vocab
                .modifiers()
                .iter()
                .filter(|c| !truth.modifiers.contains(c) && !modifiers.contains(c))
                .collect();
            if let Some(sub) = pool.choose(rng) {
                modifiers.push((*sub).clone());
            }
        }
    }

    let mut context = Vec::new();
    if rng.gen::<f64>() < noise.context_probability(view) {
        if let Some(c) = vocab.context().choose(rng) {
            context.push(c.clone());
        }
    }

    AttributeSet {
        category,
        modifiers,
        context,
    }
}

pub fn caption_object<R: Rng + ?Sized>(
    object: &WorldObject,
    pose: AgentPose,
    step: u32,
    view: &ViewGeometry,
    noise: &NoiseModel,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Caption {
    let realized = corrupt_attributes(&object.attributes, view, noise, vocab, rng);
    Caption {
        text: realized.render(),
        source_step: step,
        source_pose: pose,
    }
}
