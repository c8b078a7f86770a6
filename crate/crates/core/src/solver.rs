//! Sparse nonlinear least-squares back-end with robust kernels.
//!
//! Optimization runs staged Gauss–Newton: a schedule lists kernels and
//! iteration counts (default: 10 Huber iterations, then 20 with dynamic
//! covariance scaling). Kernels are applied per edge via iteratively
//! reweighted least squares on the whitened residual, and by default only to
//! link and wall (plan) edges — odometry and corner observations are trusted.
//! The first pose node is the gauge and is held constant.

use nalgebra::{DMatrix, DVector, Matrix2x3, Vector3};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Mat2, Mat3, Point2, Pose2, Real, Vec2};
use crate::graph::AcgGraph;

/// Huber threshold on the whitened residual norm.
pub const DEFAULT_HUBER_K: Real = 1.0;
/// Dynamic covariance scaling parameter.
pub const DEFAULT_DCS_PHI: Real = 1.0;
/// Geman–McClure scale parameter.
pub const DEFAULT_GM_C: Real = 1.0;
/// Additive diagonal damping on the normal equations.
const DAMPING: Real = 1e-6;

type Vec3 = Vector3<Real>;
type Mat2x3 = Matrix2x3<Real>;

/// Robust kernel choice for one schedule stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    None,
    Huber(Real),
    Dcs(Real),
    GemanMcclure(Real),
}

impl KernelSpec {
    pub fn label(&self) -> &'static str {
        match self {
            KernelSpec::None => "none",
            KernelSpec::Huber(_) => "huber",
            KernelSpec::Dcs(_) => "dcs",
            KernelSpec::GemanMcclure(_) => "gm",
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            KernelSpec::None => true,
            KernelSpec::Huber(k) => k.is_finite() && *k > 0.0,
            KernelSpec::Dcs(phi) => phi.is_finite() && *phi > 0.0,
            KernelSpec::GemanMcclure(c) => c.is_finite() && *c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("kernel parameter must be positive: {self:?}")))
        }
    }
}

/// Huber loss: quadratic up to `k`, linear beyond.
pub fn huber_rho(x: Real, k: Real) -> Real {
    let a = x.abs();
    if a <= k {
        x * x / 2.0
    } else {
        k * (a - k / 2.0)
    }
}

/// Dynamic covariance scaling factor in (0, 1]; the edge information is
/// multiplied by the square of this during linearization.
pub fn dcs_scale(chi2: Real, phi: Real) -> Real {
    (2.0 * phi / (phi + chi2)).min(1.0)
}

/// Geman–McClure IRLS weight, c² / (c² + x²)².
pub fn gm_weight(x: Real, c: Real) -> Real {
    let c2 = c * c;
    let d = c2 + x * x;
    c2 / (d * d)
}

/// Multiplier applied to an edge's information matrix under `kernel` when the
/// edge's raw squared error is `chi2`.
pub fn robust_info_scale(kernel: &KernelSpec, chi2: Real) -> Real {
    match kernel {
        KernelSpec::None => 1.0,
        KernelSpec::Huber(k) => {
            let x = chi2.sqrt();
            if x <= *k {
                1.0
            } else {
                *k / x
            }
        }
        KernelSpec::Dcs(phi) => {
            let s = dcs_scale(chi2, *phi);
            s * s
        }
        KernelSpec::GemanMcclure(c) => gm_weight(chi2.sqrt(), *c),
    }
}

/// Robustified cost of one edge (what the trace's mean error averages).
/// Equals the raw chi² for well-fitting edges under every kernel.
pub fn robust_cost(kernel: &KernelSpec, chi2: Real) -> Real {
    match kernel {
        KernelSpec::None => chi2,
        KernelSpec::Huber(k) => 2.0 * huber_rho(chi2.sqrt(), *k),
        KernelSpec::Dcs(phi) => {
            let s = dcs_scale(chi2, *phi);
            s * s * chi2 + phi * (s - 1.0) * (s - 1.0)
        }
        KernelSpec::GemanMcclure(c) => chi2 / (1.0 + chi2 / (c * c)),
    }
}

/// Which edges the stage kernel re-weights. Odometry and observations are
/// trusted by default; widening to all edges reproduces the failure mode
/// where an aggressive kernel tears the pose chain apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelScope {
    #[default]
    LinkAndPrior,
    AllEdges,
}

/// A sequence of (kernel, iteration count) stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub stages: Vec<(KernelSpec, usize)>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            stages: vec![
                (KernelSpec::Huber(DEFAULT_HUBER_K), 10),
                (KernelSpec::Dcs(DEFAULT_DCS_PHI), 20),
            ],
        }
    }
}

impl Schedule {
    pub fn new(stages: Vec<(KernelSpec, usize)>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("a schedule needs at least one stage"));
        }
        for (kernel, count) in &stages {
            kernel.validate()?;
            if *count == 0 {
                return Err(Error::invalid("schedule stage counts must be at least 1"));
            }
        }
        Ok(Schedule { stages })
    }

    /// Parses `"huber:10,dcs:20"`-style stage lists. Kernel names: `none`,
    /// `huber`, `dcs`, `gm` (each with its default parameter).
    pub fn parse(text: &str) -> Result<Schedule> {
        let mut stages = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            let (name, count) = part.split_once(':').ok_or_else(|| {
                Error::invalid(format!("schedule stage '{part}' must look like 'huber:10'"))
            })?;
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad iteration count in '{part}'")))?;
            let kernel = match name.trim() {
                "none" => KernelSpec::None,
                "huber" => KernelSpec::Huber(DEFAULT_HUBER_K),
                "dcs" => KernelSpec::Dcs(DEFAULT_DCS_PHI),
                "gm" => KernelSpec::GemanMcclure(DEFAULT_GM_C),
                other => {
                    return Err(Error::invalid(format!(
                        "unknown kernel '{other}' (expected none, huber, dcs or gm)"
                    )))
                }
            };
            stages.push((kernel, count));
        }
        Schedule::new(stages)
    }

    pub fn total_iterations(&self) -> usize {
        self.stages.iter().map(|(_, n)| n).sum()
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .stages
            .iter()
            .map(|(k, n)| format!("{}:{}", k.label(), n))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// One executed Gauss–Newton iteration, recorded after its update.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub stage: &'static str,
    /// Mean robustified cost per edge.
    pub mean_error: Real,
    /// Largest pose increment norm this iteration (largest point increment
    /// when the graph has no free pose).
    pub max_correction: Real,
}

/// Per-iteration optimization history.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,stage,mean_error,max_correction\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{:.9e},{:.9e}\n",
                r.iteration, r.stage, r.mean_error, r.max_correction
            ));
        }
        out
    }

    pub fn final_mean_error(&self) -> Option<Real> {
        self.records.last().map(|r| r.mean_error)
    }
}

/// Residual and Jacobians of an odometry edge: the measured relative pose
/// composed against the estimated one, in the measurement frame. Returns
/// (residual, d/d pose_i, d/d pose_j).
pub fn odometry_residual(xi: &Pose2, xj: &Pose2, z: &Pose2) -> (Vec3, Mat3, Mat3) {
    let ri_t = xi.rotation().transpose();
    let rz_t = z.rotation().transpose();
    let d = xj.translation() - xi.translation();
    let et = rz_t * (ri_t * d - z.translation());
    let eth = normalize_angle(xj.theta - xi.theta - z.theta);

    let (s, c) = xi.theta.sin_cos();
    // d(Ri^T)/d theta_i
    let dri_t = Mat2::new(-s, c, -c, -s);

    let a = rz_t * ri_t;
    let dt_dthi = rz_t * dri_t * d;
    let mut ji = Mat3::zeros();
    ji.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-a));
    ji.fixed_view_mut::<2, 1>(0, 2).copy_from(&dt_dthi);
    ji[(2, 2)] = -1.0;
    let mut jj = Mat3::zeros();
    jj.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    jj[(2, 2)] = 1.0;

    (Vec3::new(et.x, et.y, eth), ji, jj)
}

/// Residual and Jacobians of a corner observation: the landmark in the pose
/// frame minus the measurement. Returns (residual, d/d pose, d/d landmark).
pub fn observation_residual(x: &Pose2, landmark: &Point2, measured: &Vec2) -> (Vec2, Mat2x3, Mat2) {
    let r_t = x.rotation().transpose();
    let d = landmark - x.position();
    let e = r_t * d - measured;
    let (s, c) = x.theta.sin_cos();
    let dr_t = Mat2::new(-s, c, -c, -s);
    let mut jp = Mat2x3::zeros();
    jp.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-r_t));
    jp.fixed_view_mut::<2, 1>(0, 2).copy_from(&(dr_t * d));
    (e, jp, r_t)
}

/// Residual and Jacobians of a wall (plan) edge: node displacement minus the
/// expected displacement. Returns (residual, d/d a, d/d b).
pub fn prior_residual(a: &Point2, b: &Point2, expected: &Vec2) -> (Vec2, Mat2, Mat2) {
    ((b - a) - expected, -Mat2::identity(), Mat2::identity())
}

/// Residual and Jacobians of a link edge: landmark minus plan node (the
/// measurement is identically zero). Returns (residual, d/d landmark, d/d plan).
pub fn link_residual(landmark: &Point2, prior: &Point2) -> (Vec2, Mat2, Mat2) {
    (landmark - prior, Mat2::identity(), -Mat2::identity())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeKind {
    Odometry,
    Observation,
    Prior,
    Link,
    Anchor,
}

/// Anchors are trusted gauge constraints, not measurements, so no scope ever
/// robustifies them.
fn kernel_applies(kind: EdgeKind, scope: KernelScope) -> bool {
    match scope {
        KernelScope::AllEdges => kind != EdgeKind::Anchor,
        KernelScope::LinkAndPrior => matches!(kind, EdgeKind::Prior | EdgeKind::Link),
    }
}

/// State-vector layout: pose 0 is the gauge and gets no offset.
struct Layout {
    pose_offsets: Vec<Option<usize>>,
    landmark_base: usize,
    prior_base: usize,
    dim: usize,
}

impl Layout {
    fn new(graph: &AcgGraph) -> Layout {
        let mut pose_offsets = Vec::with_capacity(graph.poses.len());
        let mut off = 0;
        for i in 0..graph.poses.len() {
            if i == 0 {
                pose_offsets.push(None);
            } else {
                pose_offsets.push(Some(off));
                off += 3;
            }
        }
        let landmark_base = off;
        off += 2 * graph.landmarks.len();
        let prior_base = off;
        off += 2 * graph.priors.len();
        Layout {
            pose_offsets,
            landmark_base,
            prior_base,
            dim: off,
        }
    }

    fn landmark(&self, i: usize) -> usize {
        self.landmark_base + 2 * i
    }

    fn prior(&self, i: usize) -> usize {
        self.prior_base + 2 * i
    }
}

struct Assembler {
    coo: CooMatrix<Real>,
    b: DVector<Real>,
}

impl Assembler {
    fn new(dim: usize) -> Assembler {
        Assembler {
            coo: CooMatrix::new(dim, dim),
            b: DVector::zeros(dim),
        }
    }

    /// Adds one edge's contribution. `blocks` pairs each variable block's
    /// state offset (None = gauge-fixed, skipped) with its Jacobian.
    fn add_edge(&mut self, blocks: &[(Option<usize>, DMatrix<Real>)], e: &DVector<Real>, omega: &DMatrix<Real>) {
        for (off_a, ja) in blocks {
            let Some(oa) = off_a else { continue };
            let jt_omega = ja.transpose() * omega;
            let grad = &jt_omega * e;
            for r in 0..grad.nrows() {
                self.b[oa + r] += grad[r];
            }
            for (off_b, jb) in blocks {
                let Some(ob) = off_b else { continue };
                let h = &jt_omega * jb;
                for r in 0..h.nrows() {
                    for c in 0..h.ncols() {
                        self.coo.push(oa + r, ob + c, h[(r, c)]);
                    }
                }
            }
        }
    }
}

fn dm<const R: usize, const C: usize>(m: &nalgebra::SMatrix<Real, R, C>) -> DMatrix<Real> {
    DMatrix::from_fn(R, C, |r, c| m[(r, c)])
}

fn dv<const R: usize>(v: &nalgebra::SVector<Real, R>) -> DVector<Real> {
    DVector::from_fn(R, |r, _| v[r])
}

/// Raw (unrobustified) total chi² of the graph.
pub fn total_chi2(graph: &AcgGraph) -> Real {
    edge_chi2s(graph).map(|(_, chi2)| chi2).sum()
}

/// Mean robustified cost per edge, with `kernel` applied to edges in `scope`
/// and the plain chi² elsewhere. Zero for an edgeless graph.
pub fn evaluate_mean_error(graph: &AcgGraph, kernel: &KernelSpec, scope: KernelScope) -> Real {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (kind, chi2) in edge_chi2s(graph) {
        let k = if kernel_applies(kind, scope) { kernel } else { &KernelSpec::None };
        sum += robust_cost(k, chi2);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as Real
    }
}

fn edge_chi2s(graph: &AcgGraph) -> impl Iterator<Item = (EdgeKind, Real)> + '_ {
    let odom = graph.odometry_edges.iter().map(|e| {
        let (r, _, _) = odometry_residual(&graph.poses[e.from.0].pose, &graph.poses[e.to.0].pose, &e.measurement);
        (EdgeKind::Odometry, (r.transpose() * e.information * r)[0])
    });
    let obs = graph.observation_edges.iter().map(|e| {
        let (r, _, _) = observation_residual(&graph.poses[e.pose.0].pose, &graph.landmarks[e.landmark.0], &e.measurement);
        (EdgeKind::Observation, (r.transpose() * e.information * r)[0])
    });
    let prior = graph.prior_edges.iter().map(|e| {
        let (r, _, _) = prior_residual(&graph.priors[e.a.0], &graph.priors[e.b.0], &e.measurement);
        (EdgeKind::Prior, (r.transpose() * e.information * r)[0])
    });
    let link = graph.link_edges.iter().map(|e| {
        let (r, _, _) = link_residual(&graph.landmarks[e.landmark.0], &graph.priors[e.prior.0]);
        (EdgeKind::Link, (r.transpose() * e.information * r)[0])
    });
    let anchor = graph.anchor_edges.iter().map(|e| {
        let r = graph.priors[e.node.0] - e.position;
        (EdgeKind::Anchor, (r.transpose() * e.information * r)[0])
    });
    odom.chain(obs).chain(prior).chain(link).chain(anchor)
}

/// Optimizes the graph in place with the default kernel scope (robust
/// kernels on link and wall edges only).
pub fn optimize(graph: &mut AcgGraph, schedule: &Schedule) -> Result<IterationTrace> {
    optimize_with(graph, schedule, KernelScope::LinkAndPrior)
}

/// Optimizes the graph in place: staged Gauss–Newton on the damped sparse
/// normal equations, first pose held constant. Returns one trace record per
/// executed iteration; estimates are updated in place.
pub fn optimize_with(graph: &mut AcgGraph, schedule: &Schedule, scope: KernelScope) -> Result<IterationTrace> {
    graph.validate()?;
    if graph.poses.is_empty() {
        return Err(Error::invalid("optimization needs at least one pose node as the gauge"));
    }
    if let Some(orphans) = orphan_nodes(graph) {
        return Err(Error::SingularSystem {
            diagnostics: format!("nodes without any edge cannot be estimated: {orphans}"),
        });
    }
    let layout = Layout::new(graph);
    let mut trace = IterationTrace::default();
    if layout.dim == 0 {
        return Ok(trace);
    }
    let mut iteration = 0;
    for (kernel, count) in &schedule.stages {
        for _ in 0..*count {
            iteration += 1;
            let max_correction = gauss_newton_step(graph, &layout, kernel, scope)?;
            trace.records.push(IterationRecord {
                iteration,
                stage: kernel.label(),
                mean_error: evaluate_mean_error(graph, kernel, scope),
                max_correction,
            });
        }
    }
    Ok(trace)
}

fn gauss_newton_step(
    graph: &mut AcgGraph,
    layout: &Layout,
    kernel: &KernelSpec,
    scope: KernelScope,
) -> Result<Real> {
    let mut asm = Assembler::new(layout.dim);

    for e in &graph.odometry_edges {
        let (r, ji, jj) = odometry_residual(&graph.poses[e.from.0].pose, &graph.poses[e.to.0].pose, &e.measurement);
        let chi2 = (r.transpose() * e.information * r)[0];
        let scale = scaled(kernel, scope, EdgeKind::Odometry, chi2);
        let omega = dm(&e.information) * scale;
        asm.add_edge(
            &[
                (layout.pose_offsets[e.from.0], dm(&ji)),
                (layout.pose_offsets[e.to.0], dm(&jj)),
            ],
            &dv(&r),
            &omega,
        );
    }
    for e in &graph.observation_edges {
        let (r, jp, jl) = observation_residual(&graph.poses[e.pose.0].pose, &graph.landmarks[e.landmark.0], &e.measurement);
        let chi2 = (r.transpose() * e.information * r)[0];
        let scale = scaled(kernel, scope, EdgeKind::Observation, chi2);
        let omega = dm(&e.information) * scale;
        asm.add_edge(
            &[
                (layout.pose_offsets[e.pose.0], dm(&jp)),
                (Some(layout.landmark(e.landmark.0)), dm(&jl)),
            ],
            &dv(&r),
            &omega,
        );
    }
    for e in &graph.prior_edges {
        let (r, ja, jb) = prior_residual(&graph.priors[e.a.0], &graph.priors[e.b.0], &e.measurement);
        let chi2 = (r.transpose() * e.information * r)[0];
        let scale = scaled(kernel, scope, EdgeKind::Prior, chi2);
        let omega = dm(&e.information) * scale;
        asm.add_edge(
            &[
                (Some(layout.prior(e.a.0)), dm(&ja)),
                (Some(layout.prior(e.b.0)), dm(&jb)),
            ],
            &dv(&r),
            &omega,
        );
    }
    for e in &graph.link_edges {
        let (r, jl, jp) = link_residual(&graph.landmarks[e.landmark.0], &graph.priors[e.prior.0]);
        let chi2 = (r.transpose() * e.information * r)[0];
        let scale = scaled(kernel, scope, EdgeKind::Link, chi2);
        let omega = dm(&e.information) * scale;
        asm.add_edge(
            &[
                (Some(layout.landmark(e.landmark.0)), dm(&jl)),
                (Some(layout.prior(e.prior.0)), dm(&jp)),
            ],
            &dv(&r),
            &omega,
        );
    }
    for e in &graph.anchor_edges {
        let r = graph.priors[e.node.0] - e.position;
        let omega = dm(&e.information);
        asm.add_edge(
            &[(Some(layout.prior(e.node.0)), dm(&Mat2::identity()))],
            &dv(&r),
            &omega,
        );
    }
    for i in 0..layout.dim {
        asm.coo.push(i, i, DAMPING);
    }

    let csc = CscMatrix::from(&asm.coo);
    let chol = CscCholesky::factor(&csc).map_err(|err| Error::SingularSystem {
        diagnostics: format!("{}; {}", describe_connectivity(graph), err),
    })?;
    let rhs = DMatrix::from_column_slice(layout.dim, 1, (-&asm.b).as_slice());
    let dx = chol.solve(&rhs);
    if dx.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem {
            diagnostics: format!("non-finite increment; {}", describe_connectivity(graph)),
        });
    }

    let mut max_pose_corr: Option<Real> = None;
    let mut max_point_corr: Real = 0.0;
    for (i, off) in layout.pose_offsets.iter().enumerate() {
        let Some(o) = off else { continue };
        let (ax, ay, ath) = (dx[(*o, 0)], dx[(*o + 1, 0)], dx[(*o + 2, 0)]);
        let p = &mut graph.poses[i].pose;
        p.x += ax;
        p.y += ay;
        p.theta = normalize_angle(p.theta + ath);
        let norm = (ax * ax + ay * ay + ath * ath).sqrt();
        max_pose_corr = Some(max_pose_corr.unwrap_or(0.0).max(norm));
    }
    for i in 0..graph.landmarks.len() {
        let o = layout.landmark(i);
        let (ax, ay) = (dx[(o, 0)], dx[(o + 1, 0)]);
        graph.landmarks[i].x += ax;
        graph.landmarks[i].y += ay;
        max_point_corr = max_point_corr.max((ax * ax + ay * ay).sqrt());
    }
    for i in 0..graph.priors.len() {
        let o = layout.prior(i);
        let (ax, ay) = (dx[(o, 0)], dx[(o + 1, 0)]);
        graph.priors[i].x += ax;
        graph.priors[i].y += ay;
        max_point_corr = max_point_corr.max((ax * ax + ay * ay).sqrt());
    }
    Ok(max_pose_corr.unwrap_or(max_point_corr))
}

fn scaled(kernel: &KernelSpec, scope: KernelScope, kind: EdgeKind, chi2: Real) -> Real {
    if kernel_applies(kind, scope) {
        robust_info_scale(kernel, chi2)
    } else {
        1.0
    }
}

/// Human-readable description of free nodes with no incident edge, if any.
fn orphan_nodes(graph: &AcgGraph) -> Option<String> {
    let mut pose_deg = vec![0usize; graph.poses.len()];
    let mut lm_deg = vec![0usize; graph.landmarks.len()];
    let mut prior_deg = vec![0usize; graph.priors.len()];
    for e in &graph.odometry_edges {
        pose_deg[e.from.0] += 1;
        pose_deg[e.to.0] += 1;
    }
    for e in &graph.observation_edges {
        pose_deg[e.pose.0] += 1;
        lm_deg[e.landmark.0] += 1;
    }
    for e in &graph.prior_edges {
        prior_deg[e.a.0] += 1;
        prior_deg[e.b.0] += 1;
    }
    for e in &graph.link_edges {
        lm_deg[e.landmark.0] += 1;
        prior_deg[e.prior.0] += 1;
    }
    for e in &graph.anchor_edges {
        prior_deg[e.node.0] += 1;
    }
    let mut names = Vec::new();
    for (i, d) in pose_deg.iter().enumerate() {
        if *d == 0 && i != 0 {
            names.push(format!("pose {i}"));
        }
    }
    for (i, d) in lm_deg.iter().enumerate() {
        if *d == 0 {
            names.push(format!("landmark {i}"));
        }
    }
    for (i, d) in prior_deg.iter().enumerate() {
        if *d == 0 {
            names.push(format!("plan node {i}"));
        }
    }
    if names.is_empty() {
        None
    } else {
        Some(names.join(", "))
    }
}

/// Connected-component summary used in singular-system diagnostics: which
/// parts of the graph are not tied to the gauge-fixed pose.
fn describe_connectivity(graph: &AcgGraph) -> String {
    let n_pose = graph.poses.len();
    let n_lm = graph.landmarks.len();
    let total = n_pose + n_lm + graph.priors.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for e in &graph.odometry_edges {
        union(&mut parent, e.from.0, e.to.0);
    }
    for e in &graph.observation_edges {
        union(&mut parent, e.pose.0, n_pose + e.landmark.0);
    }
    for e in &graph.prior_edges {
        union(&mut parent, n_pose + n_lm + e.a.0, n_pose + n_lm + e.b.0);
    }
    for e in &graph.link_edges {
        union(&mut parent, n_pose + e.landmark.0, n_pose + n_lm + e.prior.0);
    }
    // An anchored plan node is absolutely constrained, hence as grounded as
    // the gauge-fixed pose.
    if n_pose > 0 {
        for e in &graph.anchor_edges {
            union(&mut parent, 0, n_pose + n_lm + e.node.0);
        }
    }
    if total == 0 {
        return "empty graph".into();
    }
    let gauge_root = find(&mut parent, 0);
    let floating = (0..total).filter(|&i| find(&mut parent, i) != gauge_root).count();
    if floating == 0 {
        "all nodes connected to the gauge".into()
    } else {
        format!("{floating} of {total} nodes are in components not connected to the gauge-fixed pose")
    }
}
