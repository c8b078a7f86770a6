//! End-to-end experiment drivers: run a scenario through the mapping
//! pipeline against its deformed floor plan, sweep one parameter axis with
//! repeated seeds, and compare robust-kernel schedules on identical data.

use crate::error::{Error, Result};
use crate::frontend::{Pipeline, PipelineConfig, StepReport};
use crate::geometry::{Point2, Real};
use crate::graph::{AcgGraph, LinkCandidatePolicy};
use crate::sim::{outlier_fraction, simulate, CorrespondenceOracle, DeformedPrior, Scenario, World};
use crate::solver::{IterationTrace, KernelScope, KernelSpec, Schedule};
use crate::stats::{judge_success, pose_rmse, prior_rmse, RunOutcome, DEFAULT_SUCCESS_TOLERANCE};

/// Tunables of a single run; everything not drawn from the scenario file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Landmark-to-plan gating distance for link edges, meters.
    pub link_threshold: Real,
    /// Fraction of a plan wall's length used as its along-wall deviation.
    pub eigenvalue_fraction: Real,
    pub schedule: Schedule,
    pub scope: KernelScope,
    pub success_tolerance: Real,
    pub cell_size: Real,
    pub neighborhood: usize,
    pub propagate_corrections: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            link_threshold: 2.0,
            eigenvalue_fraction: 0.5,
            schedule: Schedule::default(),
            scope: KernelScope::default(),
            success_tolerance: DEFAULT_SUCCESS_TOLERANCE,
            cell_size: 0.5,
            neighborhood: 2,
            propagate_corrections: true,
        }
    }
}

/// Everything a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub graph: AcgGraph,
    pub oracle: CorrespondenceOracle,
    pub reports: Vec<StepReport>,
    pub traces: Vec<IterationTrace>,
}

/// Derives a child seed from a master seed and two stream indices
/// (splitmix64 finalizer); equal inputs give equal outputs, distinct
/// inputs effectively uncorrelated ones.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn pick_anchors(world: &World, deformed: &DeformedPrior) -> Result<[(Point2, Point2); 2]> {
    let mut best: Option<(usize, usize, Real)> = None;
    let corners = &world.true_corners;
    for i in 0..deformed.prior.nodes.len() {
        let Some(ci) = deformed.node_to_corner[i] else { continue };
        for j in (i + 1)..deformed.prior.nodes.len() {
            let Some(cj) = deformed.node_to_corner[j] else { continue };
            let d = (corners[ci] - corners[cj]).norm();
            if best.map_or(true, |(_, _, bd)| d > bd) {
                best = Some((i, j, d));
            }
        }
    }
    let (i, j, _) = best.ok_or_else(|| Error::invalid("plan has fewer than two corresponded nodes"))?;
    let ci = deformed.node_to_corner[i].expect("chosen above");
    let cj = deformed.node_to_corner[j].expect("chosen above");
    Ok([
        (deformed.prior.nodes[i], corners[ci]),
        (deformed.prior.nodes[j], corners[cj]),
    ])
}

/// Runs one full scenario: simulate, feed the pipeline step by step, and
/// judge the optimized graph against ground truth. The seed drives both the
/// sensor noise and the corner-dropout stream.
pub fn run_scenario(scenario: &Scenario, config: &RunConfig, seed: u64) -> Result<RunResult> {
    let world = scenario.world()?;
    let deformed = world.deform(&scenario.room_scales())?;
    let trajectory = scenario.trajectory()?;
    let inputs = simulate(&world, &trajectory, &scenario.noise, seed)?;
    let anchors = pick_anchors(&world, &deformed)?;

    let pipeline_config = PipelineConfig {
        cell_size: config.cell_size,
        neighborhood: config.neighborhood,
        link_policy: LinkCandidatePolicy::new(config.link_threshold)?,
        schedule: config.schedule.clone(),
        scope: config.scope,
        propagate_corrections: config.propagate_corrections,
        corner_dropout: scenario.noise.corner_dropout,
        dropout_seed: derive_seed(seed, u64::from(u32::MAX), 0),
    };
    let mut pipeline = Pipeline::new(trajectory[0], pipeline_config)?;
    pipeline.add_prior(&deformed.prior, anchors, config.eigenvalue_fraction)?;
    let mut reports = Vec::with_capacity(inputs.len());
    for input in &inputs {
        reports.push(pipeline.step(input)?);
    }

    let oracle = CorrespondenceOracle::new(&world, &deformed, trajectory);
    let traces = pipeline.traces().to_vec();
    let graph = pipeline.graph;
    let outcome = RunOutcome {
        outlier_pct: outlier_fraction(&graph, &oracle)? * 100.0,
        success: judge_success(&graph, &oracle, config.success_tolerance)?,
        prior_rmse: prior_rmse(&graph, &oracle)?,
        pose_rmse: pose_rmse(&graph, &oracle.true_poses)?,
    };
    Ok(RunResult {
        outcome,
        graph,
        oracle,
        reports,
        traces,
    })
}

/// The parameter axes a sweep can walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    OutlierThreshold,
    EigenvalueFraction,
    KernelSchedule,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<SweepAxis> {
        match name {
            "outlier_threshold" => Ok(SweepAxis::OutlierThreshold),
            "eigenvalue_fraction" => Ok(SweepAxis::EigenvalueFraction),
            "kernel_schedule" => Ok(SweepAxis::KernelSchedule),
            other => Err(Error::invalid(format!(
                "unknown sweep axis '{other}' (expected outlier_threshold, eigenvalue_fraction, or kernel_schedule)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::OutlierThreshold => "outlier_threshold",
            SweepAxis::EigenvalueFraction => "eigenvalue_fraction",
            SweepAxis::KernelSchedule => "kernel_schedule",
        }
    }
}

/// Applies one axis value to a base configuration; rejects unparsable or
/// out-of-range values before any run starts.
pub fn apply_axis(base: &RunConfig, axis: SweepAxis, value: &str) -> Result<RunConfig> {
    let mut config = base.clone();
    match axis {
        SweepAxis::OutlierThreshold => {
            let v: Real = value
                .parse()
                .map_err(|_| Error::invalid(format!("outlier threshold '{value}' is not a number")))?;
            LinkCandidatePolicy::new(v)?;
            config.link_threshold = v;
        }
        SweepAxis::EigenvalueFraction => {
            let v: Real = value
                .parse()
                .map_err(|_| Error::invalid(format!("eigenvalue fraction '{value}' is not a number")))?;
            if !(v.is_finite() && v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("eigenvalue fraction must be in (0, 1], got {v}")));
            }
            config.eigenvalue_fraction = v;
        }
        SweepAxis::KernelSchedule => {
            config.schedule = Schedule::parse(value)?;
        }
    }
    Ok(config)
}

/// One sweep cell: the axis value it ran at, the repeat index, and the
/// outcome (a failed run records [`RunOutcome::failed`], it does not abort
/// the sweep).
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub repeat: usize,
    pub outcome: RunOutcome,
}

/// Runs `values.len() × repeats` scenario runs with per-cell derived seeds.
pub fn sweep(
    scenario: &Scenario,
    config: &RunConfig,
    axis: SweepAxis,
    values: &[String],
    repeats: usize,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    let configs = sweep_configs(config, axis, values)?;
    if repeats == 0 {
        return Err(Error::invalid("sweep needs at least one repeat"));
    }
    let mut rows = Vec::with_capacity(configs.len() * repeats);
    for (vi, (value, cell_config)) in configs.iter().enumerate() {
        for repeat in 0..repeats {
            let seed = derive_seed(master_seed, vi as u64, repeat as u64);
            let outcome = match run_scenario(scenario, cell_config, seed) {
                Ok(result) => result.outcome,
                Err(err) => {
                    log::warn!("run failed for {}={} repeat {}: {}", axis.name(), value, repeat, err);
                    RunOutcome::failed()
                }
            };
            rows.push(SweepRow {
                value: value.clone(),
                repeat,
                outcome,
            });
        }
    }
    Ok(rows)
}

/// Validates and materializes the per-value configurations of a sweep.
pub fn sweep_configs(config: &RunConfig, axis: SweepAxis, values: &[String]) -> Result<Vec<(String, RunConfig)>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one axis value"));
    }
    values
        .iter()
        .map(|v| Ok((v.clone(), apply_axis(config, axis, v)?)))
        .collect()
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn outcome_csv(outcome: &RunOutcome) -> String {
    format!(
        "{:.9e},{},{:.9e},{:.9e}",
        outcome.outlier_pct, outcome.success, outcome.prior_rmse, outcome.pose_rmse
    )
}

/// Renders sweep rows as CSV with a header line.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,repeat,outlier_pct,success,prior_rmse,pose_rmse\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_field(&row.value),
            row.repeat,
            outcome_csv(&row.outcome)
        ));
    }
    out
}

/// The four schedules compared by the kernel ablation. The staged run and
/// the single-kernel runs get the same iteration budget. The pure
/// delta-like kernel runs with the kernel on every edge — the configuration
/// whose failure mode (a corrupted pose chain) the ablation demonstrates —
/// while the others keep it on the plan-related edges only.
pub fn kernel_variants() -> Vec<(&'static str, Schedule, KernelScope)> {
    vec![
        (
            "none",
            Schedule::new(vec![(KernelSpec::None, 30)]).expect("static schedule"),
            KernelScope::LinkAndPrior,
        ),
        (
            "huber",
            Schedule::new(vec![(KernelSpec::Huber(1.0), 30)]).expect("static schedule"),
            KernelScope::LinkAndPrior,
        ),
        (
            "dcs",
            Schedule::new(vec![(KernelSpec::Dcs(1.0), 30)]).expect("static schedule"),
            KernelScope::AllEdges,
        ),
        ("huber+dcs", Schedule::default(), KernelScope::LinkAndPrior),
    ]
}

/// One ablation cell: a kernel variant run on one seed's data.
#[derive(Debug, Clone)]
pub struct AblationRow {
    pub seed: u64,
    pub variant: &'static str,
    pub outcome: RunOutcome,
}

/// Runs every kernel variant on every seed (same simulated data per seed,
/// since the seed fixes the sensor streams).
pub fn ablate_kernels(scenario: &Scenario, config: &RunConfig, seeds: &[u64]) -> Result<Vec<AblationRow>> {
    if seeds.is_empty() {
        return Err(Error::invalid("ablation needs at least one seed"));
    }
    let mut rows = Vec::with_capacity(seeds.len() * 4);
    for &seed in seeds {
        for (variant, schedule, scope) in kernel_variants() {
            let cell_config = RunConfig {
                schedule,
                scope,
                ..config.clone()
            };
            let outcome = match run_scenario(scenario, &cell_config, seed) {
                Ok(result) => result.outcome,
                Err(err) => {
                    log::warn!("ablation run failed for {variant} seed {seed}: {err}");
                    RunOutcome::failed()
                }
            };
            rows.push(AblationRow {
                seed,
                variant,
                outcome,
            });
        }
    }
    Ok(rows)
}

/// Renders ablation rows as CSV with a header line.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("seed,variant,outlier_pct,success,prior_rmse,pose_rmse\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.seed,
            csv_field(row.variant),
            outcome_csv(&row.outcome)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{NoiseModel, ScenarioRoom, ScenarioWall};

    fn mini_scenario() -> Scenario {
        let wall = |ax: Real, ay: Real, bx: Real, by: Real| ScenarioWall {
            a: [ax, ay],
            b: [bx, by],
            in_prior: true,
        };
        Scenario {
            name: "mini".into(),
            walls: vec![
                wall(0.0, 0.0, 10.0, 0.0),
                wall(10.0, 0.0, 10.0, 10.0),
                wall(10.0, 10.0, 0.0, 10.0),
                wall(0.0, 10.0, 0.0, 0.0),
            ],
            rooms: vec![ScenarioRoom {
                name: "room".into(),
                min: [0.0, 0.0],
                max: [10.0, 10.0],
                scale: [1.05, 0.95],
            }],
            waypoints: vec![[3.0, 3.0], [7.0, 3.0], [7.0, 7.0]],
            step_distance: 2.0,
            noise: NoiseModel {
                odom_trans_std: 0.01,
                odom_rot_std: 0.004,
                scan_std: 0.01,
                corner_dropout: 0.0,
            },
            seed: 5,
        }
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
        let seeds: std::collections::BTreeSet<u64> = (0..10)
            .flat_map(|v| (0..10).map(move |r| derive_seed(42, v, r)))
            .collect();
        assert_eq!(seeds.len(), 100);
    }

    #[test]
    fn mini_run_recovers_the_room() {
        let scenario = mini_scenario();
        let result = run_scenario(&scenario, &RunConfig::default(), 3).unwrap();
        assert_eq!(result.graph.poses.len(), result.oracle.true_poses.len());
        assert!(result.graph.link_edges.len() >= 2, "links: {}", result.graph.link_edges.len());
        assert!(result.outcome.success, "outcome: {:?}", result.outcome);
        assert!(result.outcome.pose_rmse < 0.5, "pose rmse {}", result.outcome.pose_rmse);
        assert_eq!(result.reports.len(), result.traces.len());
    }

    #[test]
    fn identical_seeds_reproduce_the_run_bit_for_bit() {
        let scenario = mini_scenario();
        let a = run_scenario(&scenario, &RunConfig::default(), 9).unwrap();
        let b = run_scenario(&scenario, &RunConfig::default(), 9).unwrap();
        assert_eq!(a.graph.serialize(), b.graph.serialize());
        assert_eq!(sweep_csv(&[SweepRow { value: "x".into(), repeat: 0, outcome: a.outcome }]),
                   sweep_csv(&[SweepRow { value: "x".into(), repeat: 0, outcome: b.outcome }]));
    }

    #[test]
    fn sweep_walks_values_and_repeats() {
        let scenario = mini_scenario();
        let values = vec!["1.0".to_string(), "2.0".to_string()];
        let rows = sweep(
            &scenario,
            &RunConfig::default(),
            SweepAxis::OutlierThreshold,
            &values,
            2,
            77,
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].value, "1.0");
        assert_eq!(rows[3].value, "2.0");
        assert_eq!(rows[1].repeat, 1);
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("value,repeat,outlier_pct,success,prior_rmse,pose_rmse\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn schedule_values_are_quoted_in_csv() {
        let rows = [SweepRow {
            value: "huber:5,dcs:5".into(),
            repeat: 0,
            outcome: RunOutcome::failed(),
        }];
        let csv = sweep_csv(&rows);
        assert!(csv.contains("\"huber:5,dcs:5\",0,NaN,false,NaN,NaN"), "csv: {csv}");
    }

    #[test]
    fn invalid_axis_values_fail_before_any_run() {
        let scenario = mini_scenario();
        let err = sweep(
            &scenario,
            &RunConfig::default(),
            SweepAxis::EigenvalueFraction,
            &["0.5".to_string(), "woops".to_string()],
            1,
            1,
        )
        .unwrap_err();
        assert!(err.to_string().contains("woops"), "got: {err}");
        assert!(SweepAxis::parse("outlier_threshold").is_ok());
        assert!(SweepAxis::parse("bogus").is_err());
        assert!(apply_axis(&RunConfig::default(), SweepAxis::EigenvalueFraction, "1.5").is_err());
        assert!(apply_axis(&RunConfig::default(), SweepAxis::KernelSchedule, "huber:0").is_err());
    }

    #[test]
    #[ignore]
    fn probe_standard_scenario() {
        let scenario = Scenario::standard();
        let config = RunConfig::default();
        let start = std::time::Instant::now();
        for seed in 1..=5u64 {
            let t0 = std::time::Instant::now();
            match run_scenario(&scenario, &config, seed) {
                Ok(r) => println!(
                    "seed {seed}: outliers {:.1}% success {} prior_rmse {:.3} pose_rmse {:.3} links {} landmarks {} ({:.2?})",
                    r.outcome.outlier_pct,
                    r.outcome.success,
                    r.outcome.prior_rmse,
                    r.outcome.pose_rmse,
                    r.graph.link_edges.len(),
                    r.graph.landmarks.len(),
                    t0.elapsed()
                ),
                Err(e) => println!("seed {seed}: FAILED {e}"),
            }
        }
        // Link residual split by oracle verdict, and per-node errors.
        {
            let r = run_scenario(&scenario, &config, 1).unwrap();
            let world = scenario.world().unwrap();
            let deformed = world.deform(&scenario.room_scales()).unwrap();
            let anchors = pick_anchors(&world, &deformed).unwrap();
            let mut initial = AcgGraph::new();
            initial
                .add_pose_node(r.oracle.true_poses[0], None, None)
                .unwrap();
            initial.add_prior(&deformed.prior, anchors, 0.5).unwrap();
            let init_rmse = prior_rmse(&initial, &r.oracle).unwrap();
            println!("initial (anchored, unoptimized) prior rmse: {init_rmse:.3}");
            let (mut cres, mut wres) = (Vec::new(), Vec::new());
            for link in &r.graph.link_edges {
                let lm = r.oracle.landmark_corner(&r.graph, link.landmark);
                let pr = r.oracle.prior_corner(link.prior);
                let d = (r.graph.landmarks[link.landmark.0] - r.graph.priors[link.prior.0]).norm();
                if matches!((lm, pr), (Some(a), Some(b)) if a == b) {
                    cres.push(d);
                } else {
                    wres.push(d);
                }
            }
            let mean = |v: &[Real]| v.iter().sum::<Real>() / v.len().max(1) as Real;
            println!(
                "final link residuals: correct n={} mean {:.3}, wrong n={} mean {:.3}",
                cres.len(),
                mean(&cres),
                wres.len(),
                mean(&wres)
            );
            for (i, node) in r.graph.priors.iter().enumerate() {
                if let Some(c) = r.oracle.prior_corner(crate::graph::PriorId(i)) {
                    let err = (node - r.oracle.true_corners[c]).norm();
                    let links = r.graph.link_edges.iter().filter(|l| l.prior.0 == i).count();
                    if err > 0.6 {
                        println!(
                            "  node {i} at corner {:?}: err {err:.3} links {links}",
                            (r.oracle.true_corners[c].x, r.oracle.true_corners[c].y)
                        );
                    }
                }
            }
            let trace = r.traces.last().unwrap();
            for rec in trace.records.iter().step_by(6) {
                println!(
                    "  it {:>2} {:>6}: mean_err {:.4} max_corr {:.5}",
                    rec.iteration, rec.stage, rec.mean_error, rec.max_correction
                );
            }
            // Landmark census: node-corner duplicates vs non-node corners
            // (reveals, clutter, endpoints) vs spurious detections.
            let node_corners: std::collections::BTreeSet<usize> =
                r.oracle.prior_to_corner.iter().flatten().copied().collect();
            let (mut lm_node, mut lm_other, mut lm_spur) = (0usize, 0usize, 0usize);
            let mut spur_pos = Vec::new();
            for i in 0..r.graph.landmarks.len() {
                match r.oracle.landmark_corner(&r.graph, crate::graph::LandmarkId(i)) {
                    Some(c) if node_corners.contains(&c) => lm_node += 1,
                    Some(_) => lm_other += 1,
                    None => {
                        lm_spur += 1;
                        let p = r.graph.landmarks[i];
                        spur_pos.push((10.0 * p.x).round() / 10.0);
                        spur_pos.push((10.0 * p.y).round() / 10.0);
                    }
                }
            }
            println!(
                "landmarks: {} on node corners, {} on other real corners, {} spurious",
                lm_node, lm_other, lm_spur
            );
            for pair in spur_pos.chunks(2).take(20) {
                print!("  spur ({:.1},{:.1})", pair[0], pair[1]);
            }
            if lm_spur > 0 {
                println!();
            }
            let (mut w_cross, mut w_other, mut w_spur) = (0usize, 0usize, 0usize);
            for link in &r.graph.link_edges {
                let lm = r.oracle.landmark_corner(&r.graph, link.landmark);
                let pr = r.oracle.prior_corner(link.prior);
                match (lm, pr) {
                    (Some(a), Some(b)) if a == b => {}
                    (Some(a), _) if node_corners.contains(&a) => w_cross += 1,
                    (Some(_), _) => w_other += 1,
                    (None, _) => w_spur += 1,
                }
            }
            println!(
                "wrong links: {} cross-node, {} from non-node corners, {} from spurious",
                w_cross, w_other, w_spur
            );
        }
        let seeds: Vec<u64> = (1..=10).collect();
        for th in ["2.0", "2.5", "2.6", "2.75"] {
            println!("--- ablation seeds 1..10, threshold {th} ---");
            let cfg = apply_axis(&config, SweepAxis::OutlierThreshold, th).unwrap();
            let rows = ablate_kernels(&scenario, &cfg, &seeds).unwrap();
            let mut prior_wins = 0;
            let mut pose_wins = 0;
            let mut outlier_sum = 0.0;
            for chunk in rows.chunks(4) {
                let by = |name: &str| chunk.iter().find(|r| r.variant == name).unwrap();
                let both = by("huber+dcs").outcome.prior_rmse;
                if both < by("huber").outcome.prior_rmse && both < by("none").outcome.prior_rmse {
                    prior_wins += 1;
                }
                if by("dcs").outcome.pose_rmse >= 2.0 * by("huber+dcs").outcome.pose_rmse {
                    pose_wins += 1;
                }
                print!("seed {}:", by("none").seed);
                for name in ["none", "huber", "dcs", "huber+dcs"] {
                    let r = by(name);
                    print!(
                        "  {name} {:.0}%/{:.2}/{:.2}",
                        r.outcome.outlier_pct, r.outcome.prior_rmse, r.outcome.pose_rmse
                    );
                    outlier_sum += r.outcome.outlier_pct;
                }
                println!();
            }
            println!(
                "th {th}: prior wins {prior_wins}/10, dcs pose blowups {pose_wins}/10, mean outliers {:.1}%",
                outlier_sum / rows.len() as Real
            );
        }
        println!("--- fraction sweep seeds 1..10 ---");
        for frac in ["0.01", "0.5", "1.0"] {
            let cfg = apply_axis(&config, SweepAxis::EigenvalueFraction, frac).unwrap();
            let mut rmse_sum = 0.0;
            let mut vals = Vec::new();
            for &seed in &seeds {
                let r = run_scenario(&scenario, &cfg, seed).unwrap();
                vals.push(r.outcome.prior_rmse);
                rmse_sum += r.outcome.prior_rmse;
            }
            let strs: Vec<String> = vals.iter().map(|v| format!("{v:.2}")).collect();
            println!(
                "fraction {frac}: mean prior_rmse {:.4} [{}]",
                rmse_sum / seeds.len() as Real,
                strs.join(" ")
            );
        }
        println!("--- threshold sweep seed 1 ---");
        for th in ["1.0", "1.5", "2.0", "2.5", "3.0", "4.0"] {
            let cfg = apply_axis(&config, SweepAxis::OutlierThreshold, th).unwrap();
            let r = run_scenario(&scenario, &cfg, 1).unwrap();
            println!(
                "threshold {th}: outliers {:.1}% success {} prior_rmse {:.3}",
                r.outcome.outlier_pct, r.outcome.success, r.outcome.prior_rmse
            );
        }
        println!("total {:.2?}", start.elapsed());
    }

    #[test]
    #[ignore]
    fn probe_node_digest() {
        let scenario = Scenario::standard();
        let mut config = RunConfig::default();
        config.link_threshold = 2.0;
        {
            let world = scenario.world().unwrap();
            let deformed = world.deform(&scenario.room_scales()).unwrap();
            let anchors = pick_anchors(&world, &deformed).unwrap();
            let mut initial = AcgGraph::new();
            initial
                .add_pose_node(crate::geometry::Pose2::identity(), None, None)
                .unwrap();
            initial.add_prior(&deformed.prior, anchors, 0.5).unwrap();
            for (i, p) in initial.priors.iter().enumerate() {
                println!("init node {i:>2}: ({:>6.2},{:>6.2})", p.x, p.y);
            }
            for e in &initial.prior_edges {
                println!(
                    "prior edge {}-{} meas ({:>5.2},{:>5.2}) info [{:.2} {:.2}; {:.2} {:.2}]",
                    e.a.0, e.b.0, e.measurement.x, e.measurement.y,
                    e.information[(0, 0)], e.information[(0, 1)],
                    e.information[(1, 0)], e.information[(1, 1)]
                );
            }
        }
        for seed in [2u64, 3, 7] {
            let r = run_scenario(&scenario, &config, seed).unwrap();
            println!(
                "=== seed {seed}: outliers {:.1}% success {} prior_rmse {:.3}",
                r.outcome.outlier_pct, r.outcome.success, r.outcome.prior_rmse
            );
            for (i, node) in r.graph.priors.iter().enumerate() {
                let Some(c) = r.oracle.prior_corner(crate::graph::PriorId(i)) else {
                    continue;
                };
                let truth = r.oracle.true_corners[c];
                let err = (node - truth).norm();
                // Group this node's links by the linked landmark's true identity.
                let mut groups: std::collections::BTreeMap<String, (usize, Real)> =
                    std::collections::BTreeMap::new();
                let mut correct = 0usize;
                for link in r.graph.link_edges.iter().filter(|l| l.prior.0 == i) {
                    let lm = r.graph.landmarks[link.landmark.0];
                    let key = match r.oracle.landmark_corner(&r.graph, link.landmark) {
                        Some(k) if k == c => {
                            correct += 1;
                            continue;
                        }
                        Some(k) => {
                            let t = r.oracle.true_corners[k];
                            format!("corner ({:.2},{:.2})", t.x, t.y)
                        }
                        None => format!("spur ({:.1},{:.1})", lm.x, lm.y),
                    };
                    let e = groups.entry(key).or_insert((0, 0.0));
                    e.0 += 1;
                    e.1 += (lm - node).norm();
                }
                println!(
                    "node {i:>2} true ({:>5.2},{:>5.2}) err {err:.3} correct n={correct}",
                    truth.x, truth.y
                );
                for (key, (n, sum)) in groups {
                    println!("     wrong {key}: n={n} mean residual {:.3}", sum / n as Real);
                }
            }
            // Census: landmark duplicates per node corner (detection supply).
            let node_corners: Vec<usize> = (0..r.graph.priors.len())
                .filter_map(|i| r.oracle.prior_corner(crate::graph::PriorId(i)))
                .collect();
            let mut dups = vec![0usize; r.oracle.true_corners.len()];
            for l in 0..r.graph.landmarks.len() {
                if let Some(k) =
                    r.oracle.landmark_corner(&r.graph, crate::graph::LandmarkId(l))
                {
                    dups[k] += 1;
                }
            }
            for &c in &node_corners {
                let t = r.oracle.true_corners[c];
                println!("supply ({:>5.2},{:>5.2}): {} dups", t.x, t.y, dups[c]);
            }
        }
    }

    #[test]
    #[ignore]
    fn probe_step_trace() {
        let scenario = Scenario::standard();
        let config = RunConfig::default();
        let seed = 3u64;
        let world = scenario.world().unwrap();
        let deformed = world.deform(&scenario.room_scales()).unwrap();
        let trajectory = scenario.trajectory().unwrap();
        let inputs = simulate(&world, &trajectory, &scenario.noise, seed).unwrap();
        let anchors = pick_anchors(&world, &deformed).unwrap();
        let pipeline_config = PipelineConfig {
            cell_size: config.cell_size,
            neighborhood: config.neighborhood,
            link_policy: LinkCandidatePolicy::new(config.link_threshold).unwrap(),
            schedule: config.schedule.clone(),
            scope: config.scope,
            propagate_corrections: config.propagate_corrections,
            corner_dropout: scenario.noise.corner_dropout,
            dropout_seed: derive_seed(seed, u64::from(u32::MAX), 0),
        };
        let mut pipeline = Pipeline::new(trajectory[0], pipeline_config).unwrap();
        pipeline
            .add_prior(&deformed.prior, anchors, config.eigenvalue_fraction)
            .unwrap();
        let in_box = |p: &Point2| (6.8..=8.4).contains(&p.x) && (3.2..=4.4).contains(&p.y);
        let mut seen = 0usize;
        for (k, input) in inputs.iter().enumerate() {
            pipeline.step(input).unwrap();
            let g = &pipeline.graph;
            let truth = scenario.trajectory().unwrap()[k];
            let est = g.poses[k].pose;
            for l in seen..g.landmarks.len() {
                let p = g.landmarks[l];
                if in_box(&p) {
                    println!(
                        "step {k}: new lm {l} at ({:.2},{:.2}); est pose ({:.2},{:.2},{:.3}) true ({:.2},{:.2},{:.3})",
                        p.x, p.y, est.translation().x, est.translation().y, est.theta,
                        truth.translation().x, truth.translation().y, truth.theta
                    );
                    let world_points: Vec<Point2> = g.poses[k]
                        .scan_points
                        .iter()
                        .map(|sp| est.transform_point(sp))
                        .collect();
                    let grid = crate::ndt::build_ndt_grid(&world_points, 0.5).unwrap();
                    for cand in crate::ndt::detect_corner_candidates(&grid, 2) {
                        if (cand.position - p).norm() > 1.0 {
                            continue;
                        }
                        println!(
                            "    cand at ({:.2},{:.2}) strength {:.1}",
                            cand.position.x, cand.position.y, cand.strength_deg
                        );
                        for idx in [cand.cells.0, cand.cells.1] {
                            let c = grid.cell(idx).unwrap();
                            let ax = c.main_axis();
                            println!(
                                "      cell {idx:?} mean ({:.2},{:.2}) axis ({:+.2},{:+.2}) ratio {:.1} pts {}",
                                c.mean.x, c.mean.y, ax.x, ax.y, c.axis_ratio(), c.point_count
                            );
                        }
                    }
                }
            }
            seen = g.landmarks.len();
        }
    }

    #[test]
    fn ablation_produces_four_variants_per_seed() {
        let scenario = mini_scenario();
        let rows = ablate_kernels(&scenario, &RunConfig::default(), &[1, 2]).unwrap();
        assert_eq!(rows.len(), 8);
        let variants: Vec<&str> = rows.iter().take(4).map(|r| r.variant).collect();
        assert_eq!(variants, ["none", "huber", "dcs", "huber+dcs"]);
        let csv = ablation_csv(&rows);
        assert!(csv.starts_with("seed,variant,"));
        assert_eq!(csv.lines().count(), 9);
    }
}
