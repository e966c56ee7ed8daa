use serde::{Deserialize, Serialize};

/// How overlapping object discs combine in the disagreement map.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapRule {
    #[default]
    Max,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationConfig {
    /// Weight of target disagreement against travel cost (alpha).
    pub alpha: f64,
    /// Minimum target region area in cells (A_min).
    pub area_min: usize,
    /// Viewpoint sampling radii in meters (R).
    pub radii: Vec<f64>,
    /// Candidate viewpoints per radius (N_r).
    pub candidates_per_radius: usize,
    /// N_min.
    pub viewpoints_min: usize,
    /// N_max.
    pub viewpoints_max: usize,
    /// Sliding window for stuck detection, steps (tau_s).
    pub stuck_window: usize,
    /// Minimum displacement over the window, meters (epsilon_p).
    pub displacement_eps: f64,
    /// Maximum recovery attempts per target (N_rec).
    pub recovery_attempts: u32,
    /// Recovery sampling radius in cells.
    pub recovery_radius_cells: f64,
    /// Threshold on the max-normalized disagreement map.
    pub disagreement_threshold: f64,
    /// Obstacle clearance required at a viewpoint, meters.
    pub safety_margin: f64,
    /// Radius of the disc each memory entry writes into the map, meters.
    pub projection_radius: f64,
    pub overlap: OverlapRule,
    /// Frontier steps taken before the first planning round.
    pub warmup_steps: u32,
    /// Obstacle clearance for random-goal sampling, meters.
    pub random_goal_margin: f64,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            area_min: 3,
            radii: vec![0.5, 1.0, 2.0],
            candidates_per_radius: 30,
            viewpoints_min: 5,
            viewpoints_max: 20,
            stuck_window: 5,
            displacement_eps: 0.15,
            recovery_attempts: 5,
            recovery_radius_cells: 2.0,
            disagreement_threshold: 0.5,
            safety_margin: 0.5,
            projection_radius: 0.5,
            overlap: OverlapRule::Max,
            warmup_steps: 250,
            random_goal_margin: 0.0,
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<(), String> {
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err("alpha must be in [0, 1]".into());
        }
        if self.area_min == 0 || self.candidates_per_radius == 0 || self.stuck_window == 0 {
            return Err("area_min, candidates_per_radius and stuck_window must be positive".into());
        }
        if self.recovery_attempts == 0 {
            return Err("recovery_attempts must be positive".into());
        }
        if self.viewpoints_min == 0 || self.viewpoints_min > self.viewpoints_max {
            return Err("viewpoints_min must satisfy 1 <= viewpoints_min <= viewpoints_max".into());
        }
        if self.radii.is_empty() || !self.radii.iter().all(|r| nonneg(*r)) {
            return Err("radii must be a non-empty list of non-negative meters".into());
        }
        if !(0.0..=1.0).contains(&self.disagreement_threshold) {
            return Err("disagreement_threshold must be in [0, 1]".into());
        }
        for (name, v) in [
            ("displacement_eps", self.displacement_eps),
            ("recovery_radius_cells", self.recovery_radius_cells),
            ("safety_margin", self.safety_margin),
            ("projection_radius", self.projection_radius),
            ("random_goal_margin", self.random_goal_margin),
        ] {
            if !nonneg(v) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        if self.recovery_radius_cells < 1.0 {
            return Err("recovery_radius_cells must be at least 1".into());
        }
        Ok(())
    }
}
