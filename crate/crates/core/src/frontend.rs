//! Incremental online pipeline: one call per robot step builds the partial
//! NDT map, adds detected corners as landmarks, links them to the floor
//! plan, optimizes, and folds the newest pose's correction into an
//! accumulator so future odometry predictions start from corrected ground.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Point2, Pose2, Real};
use crate::graph::{AcgGraph, LinkCandidatePolicy};
use crate::ndt::{build_ndt_grid, detect_corners};
use crate::prior::PriorGraph;
use crate::solver::{optimize_with, total_chi2, IterationTrace, KernelScope, Schedule};

/// One robot step: relative motion since the previous step and the scan
/// taken at the new pose, both in the robot frame. The first step of a run
/// ignores the odometry fields (there is no previous pose).
#[derive(Debug, Clone)]
pub struct StepInput {
    pub odometry_delta: Pose2,
    pub odometry_information: Mat3,
    pub scan_points: Vec<Point2>,
}

/// Pipeline tuning. `corner_dropout` is the probability of discarding a
/// detected corner (for outlier-rate experiments); `propagate_corrections`
/// turns the accumulator off to measure what propagation buys.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub cell_size: Real,
    pub neighborhood: usize,
    pub link_policy: LinkCandidatePolicy,
    pub schedule: Schedule,
    pub scope: KernelScope,
    pub propagate_corrections: bool,
    pub corner_dropout: Real,
    pub dropout_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cell_size: 0.5,
            neighborhood: 2,
            link_policy: LinkCandidatePolicy::default(),
            schedule: Schedule::default(),
            scope: KernelScope::default(),
            propagate_corrections: true,
            corner_dropout: 0.0,
            dropout_seed: 0,
        }
    }
}

/// Totals after one step, appendable to a JSON-lines log.
#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub step: usize,
    pub poses: usize,
    pub landmarks: usize,
    pub links: usize,
    pub mean_error_final: Real,
    /// Corners this step contributed (after dropout).
    pub new_landmarks: usize,
    /// Raw chi² of the grown graph before this step's optimization.
    pub chi2_before: Real,
}

impl StepReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("step report serializes")
    }
}

/// The incremental builder. Owns the graph; the plan (if any) is added once
/// via [`Pipeline::add_prior`] before stepping, and every modification the
/// optimizer makes to it persists across steps.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub graph: AcgGraph,
    config: PipelineConfig,
    /// Dead-reckoned pose from raw odometry only.
    raw_pose: Pose2,
    /// Composition of all post-optimization corrections; applied to the left
    /// of raw odometry predictions.
    accumulator: Pose2,
    steps: usize,
    dropout_rng: ChaCha8Rng,
    traces: Vec<IterationTrace>,
}

impl Pipeline {
    pub fn new(initial_pose: Pose2, config: PipelineConfig) -> Result<Pipeline> {
        if !(config.cell_size.is_finite() && config.cell_size > 0.0) {
            return Err(Error::invalid(format!(
                "cell size must be positive, got {}",
                config.cell_size
            )));
        }
        if !(0.0..=1.0).contains(&config.corner_dropout) {
            return Err(Error::invalid(format!(
                "corner dropout must be a probability, got {}",
                config.corner_dropout
            )));
        }
        if !initial_pose.is_finite() {
            return Err(Error::invalid("non-finite initial pose"));
        }
        let dropout_rng = ChaCha8Rng::seed_from_u64(config.dropout_seed);
        Ok(Pipeline {
            graph: AcgGraph::new(),
            config,
            raw_pose: initial_pose,
            accumulator: Pose2::identity(),
            steps: 0,
            dropout_rng,
            traces: Vec::new(),
        })
    }

    /// Places the floor plan (see [`AcgGraph::add_prior`]). Call before the
    /// first step; running without a plan is the prior-free mode.
    pub fn add_prior(
        &mut self,
        prior: &PriorGraph,
        anchor_pairs: [(Point2, Point2); 2],
        eigenvalue_fraction: Real,
    ) -> Result<()> {
        self.graph.add_prior(prior, anchor_pairs, eigenvalue_fraction)
    }

    pub fn accumulator(&self) -> Pose2 {
        self.accumulator
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Optimizer trace of each completed step, in step order.
    pub fn traces(&self) -> &[IterationTrace] {
        &self.traces
    }

    /// Runs one step: predict the new pose, build the partial map there,
    /// add corners as landmarks, link, optimize, and absorb the newest
    /// pose's correction into the accumulator.
    pub fn step(&mut self, input: &StepInput) -> Result<StepReport> {
        let step_index = self.steps;
        let wrap = |source: Error| Error::Step {
            step: step_index,
            source: Box::new(source),
        };

        let first = step_index == 0;
        if !first {
            self.raw_pose = self.raw_pose.compose(&input.odometry_delta);
        }
        let predicted = if self.config.propagate_corrections {
            self.accumulator.compose(&self.raw_pose)
        } else {
            self.raw_pose
        };

        // Corners are detected on the scan placed at the predicted pose, so
        // their measurements are expressed relative to that same pose.
        let world_points: Vec<Point2> = input
            .scan_points
            .iter()
            .map(|p| predicted.transform_point(p))
            .collect();
        let world_grid = build_ndt_grid(&world_points, self.config.cell_size).map_err(wrap)?;
        let corners = detect_corners(&world_grid, self.config.neighborhood);

        let robot_grid = build_ndt_grid(&input.scan_points, self.config.cell_size).map_err(wrap)?;
        let odometry = (!first).then(|| (input.odometry_delta, input.odometry_information));
        let pose_id = self
            .graph
            .add_pose_node(predicted, Some(robot_grid), odometry)
            .map_err(wrap)?;
        self.graph.poses[pose_id.0].scan_points = input.scan_points.clone();

        let mut new_landmarks = 0;
        for corner in &corners {
            if self.dropout_rng.gen::<f64>() < self.config.corner_dropout {
                continue;
            }
            let measurement = predicted.inverse_transform_point(&corner.position);
            self.graph.add_landmark(pose_id, measurement).map_err(wrap)?;
            new_landmarks += 1;
        }
        let _ = self.graph.generate_link_edges(&self.config.link_policy);

        let chi2_before = total_chi2(&self.graph);
        let trace = optimize_with(&mut self.graph, &self.config.schedule, self.config.scope)
            .map_err(wrap)?;
        let optimized = self.graph.poses[pose_id.0].pose;
        let correction = predicted.between(&optimized);
        self.accumulator = self.accumulator.compose(&correction);

        let mean_error_final = trace.final_mean_error().unwrap_or(0.0);
        self.traces.push(trace);
        self.steps += 1;
        Ok(StepReport {
            step: step_index,
            poses: self.graph.poses.len(),
            landmarks: self.graph.landmarks.len(),
            links: self.graph.link_edges.len(),
            mean_error_final,
            new_landmarks,
            chi2_before,
        })
    }
}
