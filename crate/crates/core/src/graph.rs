//! The auto-complete factor graph: robot poses, corner landmarks, and floor
//! plan nodes, tied together by odometry, observation, wall, and link edges.
//!
//! The floor plan enters through a two-point similarity alignment and keeps
//! soft, anisotropic wall constraints (stretchy along a wall, stiff across
//! it), so optimization can rescale the sketch without rotating it freely.
//! Link edges declare "this detected corner is that plan corner" with a zero
//! measurement; they are the part robust kernels later down-weight when the
//! association is wrong.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{
    anisotropic_cov, is_spd_2x2, is_spd_3x3, Mat2, Mat3, Point2, Pose2, Real, Vec2,
};
use crate::ndt::NdtGrid;
use crate::prior::PriorGraph;

/// Information weight on each axis of an observation edge (1 / 0.05 m²).
pub const OBSERVATION_INFORMATION: Real = 20.0;
/// Information weight on each axis of a link edge (1 / 0.5 m²).
pub const LINK_INFORMATION: Real = 2.0;
/// Across-wall covariance eigenvalue of a plan edge, m².
pub const PRIOR_CROSS_VARIANCE: Real = 0.005;
/// Information weight on each axis of a plan anchor (1 / 0.01 m²). Strong
/// enough that a handful of wrong links cannot drag the plan off its
/// registered placement while the landmark side is still sparse.
pub const ANCHOR_INFORMATION: Real = 100.0;

/// Index of a robot pose node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PoseId(pub usize);

/// Index of a detected-corner landmark node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LandmarkId(pub usize);

/// Index of a floor-plan corner node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PriorId(pub usize);

/// A robot pose estimate plus the sensor snapshot taken there. The map and
/// scan are runtime attachments in the robot frame; they are not serialized.
#[derive(Debug, Clone)]
pub struct PoseVertex {
    pub pose: Pose2,
    pub partial_map: Option<NdtGrid>,
    pub scan_points: Vec<Point2>,
}

/// Relative SE(2) constraint between two consecutive poses.
#[derive(Debug, Clone)]
pub struct OdometryEdge {
    pub from: PoseId,
    pub to: PoseId,
    pub measurement: Pose2,
    pub information: Mat3,
}

/// A corner seen from a pose, measured in that pose's frame.
#[derive(Debug, Clone)]
pub struct ObservationEdge {
    pub pose: PoseId,
    pub landmark: LandmarkId,
    pub measurement: Vec2,
    pub information: Mat2,
}

/// A wall of the floor plan: expected displacement between two plan nodes,
/// with anisotropic stiffness fixed at insertion time.
#[derive(Debug, Clone)]
pub struct PriorMapEdge {
    pub a: PriorId,
    pub b: PriorId,
    pub measurement: Vec2,
    pub information: Mat2,
}

/// Association between a detected corner and a plan corner. The measurement
/// is identically zero, so it is not stored.
#[derive(Debug, Clone)]
pub struct LinkEdge {
    pub landmark: LandmarkId,
    pub prior: PriorId,
    pub information: Mat2,
}

/// Absolute position constraint on one plan node. The two anchors created
/// when the plan is added fix its gauge in the world frame; they are trusted
/// registration input, not data association, so robust kernels never apply.
#[derive(Debug, Clone)]
pub struct AnchorEdge {
    pub node: PriorId,
    pub position: Point2,
    pub information: Mat2,
}

/// Gate for creating link edges: landmark/plan-corner pairs at most this far
/// apart (meters, Euclidean, current estimates) get linked.
#[derive(Debug, Clone, Copy)]
pub struct LinkCandidatePolicy {
    pub max_distance: Real,
}

impl LinkCandidatePolicy {
    pub fn new(max_distance: Real) -> Result<Self> {
        if !(max_distance.is_finite() && max_distance > 0.0) {
            return Err(Error::invalid(format!(
                "link distance threshold must be positive, got {max_distance}"
            )));
        }
        Ok(LinkCandidatePolicy { max_distance })
    }
}

impl Default for LinkCandidatePolicy {
    fn default() -> Self {
        LinkCandidatePolicy { max_distance: 2.0 }
    }
}

/// The complete graph. The first pose node added is the gauge: it is held
/// constant during optimization.
#[derive(Debug, Clone, Default)]
pub struct AcgGraph {
    pub poses: Vec<PoseVertex>,
    pub landmarks: Vec<Point2>,
    pub priors: Vec<Point2>,
    pub odometry_edges: Vec<OdometryEdge>,
    pub observation_edges: Vec<ObservationEdge>,
    pub prior_edges: Vec<PriorMapEdge>,
    pub link_edges: Vec<LinkEdge>,
    pub anchor_edges: Vec<AnchorEdge>,
}

impl AcgGraph {
    pub fn new() -> Self {
        AcgGraph::default()
    }

    /// Appends a pose node. Every node but the first must carry an odometry
    /// measurement (relative pose and 3x3 information) from its predecessor;
    /// the first must not.
    pub fn add_pose_node(
        &mut self,
        pose: Pose2,
        partial_map: Option<NdtGrid>,
        odometry: Option<(Pose2, Mat3)>,
    ) -> Result<PoseId> {
        if !pose.is_finite() {
            return Err(Error::invalid(format!("non-finite pose {pose:?}")));
        }
        match (&odometry, self.poses.is_empty()) {
            (Some(_), true) => {
                return Err(Error::invalid(
                    "the first pose node takes no odometry measurement",
                ))
            }
            (None, false) => {
                return Err(Error::invalid(
                    "every pose node after the first needs an odometry measurement",
                ))
            }
            _ => {}
        }
        let id = PoseId(self.poses.len());
        if let Some((measurement, information)) = odometry {
            if !measurement.is_finite() {
                return Err(Error::invalid("non-finite odometry measurement"));
            }
            if !is_spd_3x3(&information) {
                return Err(Error::invalid(
                    "odometry information must be symmetric positive definite",
                ));
            }
            self.odometry_edges.push(OdometryEdge {
                from: PoseId(id.0 - 1),
                to: id,
                measurement,
                information,
            });
        }
        self.poses.push(PoseVertex {
            pose,
            partial_map,
            scan_points: Vec::new(),
        });
        Ok(id)
    }

    /// Adds a corner landmark seen from `pose_id` at `corner_in_pose_frame`,
    /// initializing the node at the world-frame position and creating the
    /// observation edge with the standard isotropic information.
    pub fn add_landmark(&mut self, pose_id: PoseId, corner_in_pose_frame: Point2) -> Result<LandmarkId> {
        let vertex = self
            .poses
            .get(pose_id.0)
            .ok_or_else(|| Error::invalid(format!("unknown pose node {}", pose_id.0)))?;
        if !(corner_in_pose_frame.x.is_finite() && corner_in_pose_frame.y.is_finite()) {
            return Err(Error::invalid("non-finite corner measurement"));
        }
        let world = vertex.pose.transform_point(&corner_in_pose_frame);
        let id = LandmarkId(self.landmarks.len());
        self.landmarks.push(world);
        self.observation_edges.push(ObservationEdge {
            pose: pose_id,
            landmark: id,
            measurement: corner_in_pose_frame.coords,
            information: Mat2::from_diagonal_element(OBSERVATION_INFORMATION),
        });
        Ok(id)
    }

    /// Places a floor plan into the graph. The two anchor pairs (plan node
    /// position, world point) define a similarity transform — rotation,
    /// translation and one uniform scale, no reflection — applied to every
    /// plan node; the two named nodes are then tied to their world points by
    /// [`AnchorEdge`]s (information diag([`ANCHOR_INFORMATION`])), fixing the
    /// plan's gauge. Each wall edge gets its measurement (node displacement)
    /// and an anisotropic information matrix whose soft eigenvalue is
    /// `eigenvalue_fraction x` the transformed wall length (a variance, m²)
    /// along the wall, with [`PRIOR_CROSS_VARIANCE`] across it.
    pub fn add_prior(
        &mut self,
        prior: &PriorGraph,
        anchor_pairs: [(Point2, Point2); 2],
        eigenvalue_fraction: Real,
    ) -> Result<()> {
        if !self.priors.is_empty() {
            return Err(Error::invalid("a floor plan was already added to this graph"));
        }
        if !(eigenvalue_fraction.is_finite() && eigenvalue_fraction > 0.0) {
            return Err(Error::invalid(format!(
                "eigenvalue fraction must be positive, got {eigenvalue_fraction}"
            )));
        }
        let [(p1, w1), (p2, w2)] = anchor_pairs;
        let dp = p2 - p1;
        let dw = w2 - w1;
        if dp.norm() < 1e-12 || dw.norm() < 1e-12 {
            return Err(Error::invalid("anchor pairs must use two distinct points"));
        }
        let node_at = |p: &Point2| -> Result<usize> {
            prior
                .nodes
                .iter()
                .position(|n| (n - p).norm() < 1e-9)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "anchor point ({}, {}) is not a plan node",
                        p.x, p.y
                    ))
                })
        };
        let anchor_nodes = [node_at(&p1)?, node_at(&p2)?];
        let scale = dw.norm() / dp.norm();
        let angle = dw.y.atan2(dw.x) - dp.y.atan2(dp.x);
        let rot = Mat2::new(angle.cos(), -angle.sin(), angle.sin(), angle.cos());
        let map = |p: &Point2| -> Point2 { Point2::from(rot * (p - p1) * scale + w1.coords) };

        let nodes: Vec<Point2> = prior.nodes.iter().map(&map).collect();
        let mut edges = Vec::with_capacity(prior.edges.len());
        for e in &prior.edges {
            let a = nodes[e.a];
            let b = nodes[e.b];
            let d = b - a;
            let length = d.norm();
            if length < 1e-12 {
                return Err(Error::invalid(format!(
                    "plan edge between nodes {} and {} has zero length after alignment",
                    e.a, e.b
                )));
            }
            let direction = d / length;
            // Information = covariance with reciprocal eigenvalues, which
            // keeps the eigen-directions exactly on/across the wall.
            let info = anisotropic_cov(
                &direction,
                1.0 / (eigenvalue_fraction * length),
                1.0 / PRIOR_CROSS_VARIANCE,
            )?;
            edges.push(PriorMapEdge {
                a: PriorId(e.a),
                b: PriorId(e.b),
                measurement: d,
                information: *info.matrix(),
            });
        }
        self.priors = nodes;
        self.prior_edges = edges;
        self.anchor_edges = anchor_nodes
            .iter()
            .zip([w1, w2])
            .map(|(&node, position)| AnchorEdge {
                node: PriorId(node),
                position,
                information: Mat2::from_diagonal_element(ANCHOR_INFORMATION),
            })
            .collect();
        Ok(())
    }

    /// Creates a link edge for every (landmark, plan corner) pair within the
    /// policy's distance in the current estimates. Existing pairs are kept,
    /// never duplicated; returns how many edges were added.
    pub fn generate_link_edges(&mut self, policy: &LinkCandidatePolicy) -> usize {
        let mut existing: BTreeSet<(usize, usize)> = self
            .link_edges
            .iter()
            .map(|l| (l.landmark.0, l.prior.0))
            .collect();
        let mut added = 0;
        for (li, lm) in self.landmarks.iter().enumerate() {
            for (pi, pr) in self.priors.iter().enumerate() {
                if (lm - pr).norm() <= policy.max_distance && existing.insert((li, pi)) {
                    self.link_edges.push(LinkEdge {
                        landmark: LandmarkId(li),
                        prior: PriorId(pi),
                        information: Mat2::from_diagonal_element(LINK_INFORMATION),
                    });
                    added += 1;
                }
            }
        }
        added
    }

    /// Checks the structural invariants: edges reference existing nodes, all
    /// information matrices are symmetric positive definite, observation and
    /// link informations carry their standard fixed weights, and every
    /// estimate is finite.
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.poses.iter().enumerate() {
            if !v.pose.is_finite() {
                return Err(Error::invalid(format!("pose node {i} is not finite")));
            }
        }
        for (i, l) in self.landmarks.iter().enumerate() {
            if !(l.x.is_finite() && l.y.is_finite()) {
                return Err(Error::invalid(format!("landmark node {i} is not finite")));
            }
        }
        for (i, p) in self.priors.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::invalid(format!("plan node {i} is not finite")));
            }
        }
        for (i, e) in self.odometry_edges.iter().enumerate() {
            if e.from.0 >= self.poses.len() || e.to.0 >= self.poses.len() {
                return Err(Error::invalid(format!("odometry edge {i} references a missing pose")));
            }
            if !is_spd_3x3(&e.information) {
                return Err(Error::invalid(format!("odometry edge {i} information is not SPD")));
            }
        }
        for (i, e) in self.observation_edges.iter().enumerate() {
            if e.pose.0 >= self.poses.len() || e.landmark.0 >= self.landmarks.len() {
                return Err(Error::invalid(format!("observation edge {i} references a missing node")));
            }
            if !is_spd_2x2(&e.information) {
                return Err(Error::invalid(format!("observation edge {i} information is not SPD")));
            }
            let expected = Mat2::from_diagonal_element(OBSERVATION_INFORMATION);
            if (e.information - expected).abs().max() > 1e-6 {
                return Err(Error::invalid(format!(
                    "observation edge {i} must use the standard information diag({OBSERVATION_INFORMATION})"
                )));
            }
        }
        for (i, e) in self.prior_edges.iter().enumerate() {
            if e.a.0 >= self.priors.len() || e.b.0 >= self.priors.len() {
                return Err(Error::invalid(format!("plan edge {i} references a missing node")));
            }
            if e.a == e.b {
                return Err(Error::invalid(format!("plan edge {i} is a self-loop")));
            }
            if !is_spd_2x2(&e.information) {
                return Err(Error::invalid(format!("plan edge {i} information is not SPD")));
            }
        }
        for (i, e) in self.link_edges.iter().enumerate() {
            if e.landmark.0 >= self.landmarks.len() || e.prior.0 >= self.priors.len() {
                return Err(Error::invalid(format!("link edge {i} references a missing node")));
            }
            if !is_spd_2x2(&e.information) {
                return Err(Error::invalid(format!("link edge {i} information is not SPD")));
            }
            let expected = Mat2::from_diagonal_element(LINK_INFORMATION);
            if (e.information - expected).abs().max() > 1e-6 {
                return Err(Error::invalid(format!(
                    "link edge {i} must use the standard information diag({LINK_INFORMATION})"
                )));
            }
        }
        for (i, e) in self.anchor_edges.iter().enumerate() {
            if e.node.0 >= self.priors.len() {
                return Err(Error::invalid(format!("anchor edge {i} references a missing plan node")));
            }
            if !(e.position.x.is_finite() && e.position.y.is_finite()) {
                return Err(Error::invalid(format!("anchor edge {i} position is not finite")));
            }
            let expected = Mat2::from_diagonal_element(ANCHOR_INFORMATION);
            if (e.information - expected).abs().max() > 1e-6 {
                return Err(Error::invalid(format!(
                    "anchor edge {i} must use the standard information diag({ANCHOR_INFORMATION})"
                )));
            }
        }
        Ok(())
    }

    /// Serializes to the line-oriented exchange text (see [`deserialize`]).
    /// Node ids are the in-memory indices; runtime attachments (partial maps,
    /// scans) are not part of the format.
    pub fn serialize(&self) -> String {
        let mut out = String::from("ACG 1\n");
        let f = |x: Real| format!("{x:.16e}");
        for (i, v) in self.poses.iter().enumerate() {
            let _ = writeln!(out, "POSE {i} {} {} {}", f(v.pose.x), f(v.pose.y), f(v.pose.theta));
        }
        for (i, l) in self.landmarks.iter().enumerate() {
            let _ = writeln!(out, "LANDMARK {i} {} {}", f(l.x), f(l.y));
        }
        for (i, p) in self.priors.iter().enumerate() {
            let _ = writeln!(out, "PRIOR {i} {} {}", f(p.x), f(p.y));
        }
        for e in &self.odometry_edges {
            let m = &e.measurement;
            let a = &e.information;
            let _ = writeln!(
                out,
                "EDGE_ODOM {} {} {} {} {} {} {} {} {} {} {}",
                e.from.0,
                e.to.0,
                f(m.x),
                f(m.y),
                f(m.theta),
                f(a[(0, 0)]),
                f(a[(0, 1)]),
                f(a[(0, 2)]),
                f(a[(1, 1)]),
                f(a[(1, 2)]),
                f(a[(2, 2)]),
            );
        }
        for e in &self.observation_edges {
            let a = &e.information;
            let _ = writeln!(
                out,
                "EDGE_OBS {} {} {} {} {} {} {}",
                e.pose.0,
                e.landmark.0,
                f(e.measurement.x),
                f(e.measurement.y),
                f(a[(0, 0)]),
                f(a[(0, 1)]),
                f(a[(1, 1)]),
            );
        }
        for e in &self.prior_edges {
            let a = &e.information;
            let _ = writeln!(
                out,
                "EDGE_PRIOR {} {} {} {} {} {} {}",
                e.a.0,
                e.b.0,
                f(e.measurement.x),
                f(e.measurement.y),
                f(a[(0, 0)]),
                f(a[(0, 1)]),
                f(a[(1, 1)]),
            );
        }
        for e in &self.link_edges {
            let a = &e.information;
            let _ = writeln!(
                out,
                "EDGE_LINK {} {} {} {} {}",
                e.landmark.0,
                e.prior.0,
                f(a[(0, 0)]),
                f(a[(0, 1)]),
                f(a[(1, 1)]),
            );
        }
        for e in &self.anchor_edges {
            let a = &e.information;
            let _ = writeln!(
                out,
                "EDGE_ANCHOR {} {} {} {} {} {}",
                e.node.0,
                f(e.position.x),
                f(e.position.y),
                f(a[(0, 0)]),
                f(a[(0, 1)]),
                f(a[(1, 1)]),
            );
        }
        out
    }

    /// Parses the exchange text. Lines may carry `#` comments; node records
    /// must precede edges that reference them and use sequential ids in file
    /// order. Errors name the offending line (1-based).
    pub fn deserialize(text: &str) -> Result<AcgGraph> {
        let mut g = AcgGraph::new();
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if !saw_header {
                if tokens != ["ACG", "1"] {
                    return Err(parse_err(format!("expected header 'ACG 1', got '{line}'")));
                }
                saw_header = true;
                continue;
            }
            let need = |count: usize| -> Result<()> {
                if tokens.len() != count + 1 {
                    Err(parse_err(format!(
                        "{} takes {count} fields, got {}",
                        tokens[0],
                        tokens.len() - 1
                    )))
                } else {
                    Ok(())
                }
            };
            let num = |tok: &str| -> Result<Real> {
                let v: Real = tok
                    .parse()
                    .map_err(|_| parse_err(format!("bad number '{tok}'")))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("non-finite number '{tok}'")));
                }
                Ok(v)
            };
            let id = |tok: &str, expected: usize, kind: &str| -> Result<usize> {
                let v: usize = tok
                    .parse()
                    .map_err(|_| parse_err(format!("bad id '{tok}'")))?;
                if v != expected {
                    return Err(parse_err(format!(
                        "{kind} id {v} out of order, expected {expected}"
                    )));
                }
                Ok(v)
            };
            let node_ref = |tok: &str, len: usize, kind: &str| -> Result<usize> {
                let v: usize = tok
                    .parse()
                    .map_err(|_| parse_err(format!("bad id '{tok}'")))?;
                if v >= len {
                    return Err(parse_err(format!("unknown {kind} node {v}")));
                }
                Ok(v)
            };
            match tokens[0] {
                "POSE" => {
                    need(4)?;
                    id(tokens[1], g.poses.len(), "pose")?;
                    g.poses.push(PoseVertex {
                        pose: Pose2::new(num(tokens[2])?, num(tokens[3])?, num(tokens[4])?),
                        partial_map: None,
                        scan_points: Vec::new(),
                    });
                }
                "LANDMARK" => {
                    need(3)?;
                    id(tokens[1], g.landmarks.len(), "landmark")?;
                    g.landmarks.push(Point2::new(num(tokens[2])?, num(tokens[3])?));
                }
                "PRIOR" => {
                    need(3)?;
                    id(tokens[1], g.priors.len(), "plan")?;
                    g.priors.push(Point2::new(num(tokens[2])?, num(tokens[3])?));
                }
                "EDGE_ODOM" => {
                    need(11)?;
                    let from = node_ref(tokens[1], g.poses.len(), "pose")?;
                    let to = node_ref(tokens[2], g.poses.len(), "pose")?;
                    let m = Pose2::new(num(tokens[3])?, num(tokens[4])?, num(tokens[5])?);
                    let (i11, i12, i13) = (num(tokens[6])?, num(tokens[7])?, num(tokens[8])?);
                    let (i22, i23, i33) = (num(tokens[9])?, num(tokens[10])?, num(tokens[11])?);
                    g.odometry_edges.push(OdometryEdge {
                        from: PoseId(from),
                        to: PoseId(to),
                        measurement: m,
                        information: Mat3::new(i11, i12, i13, i12, i22, i23, i13, i23, i33),
                    });
                }
                "EDGE_OBS" => {
                    need(7)?;
                    let pose = node_ref(tokens[1], g.poses.len(), "pose")?;
                    let lm = node_ref(tokens[2], g.landmarks.len(), "landmark")?;
                    let m = Vec2::new(num(tokens[3])?, num(tokens[4])?);
                    let (i11, i12, i22) = (num(tokens[5])?, num(tokens[6])?, num(tokens[7])?);
                    g.observation_edges.push(ObservationEdge {
                        pose: PoseId(pose),
                        landmark: LandmarkId(lm),
                        measurement: m,
                        information: Mat2::new(i11, i12, i12, i22),
                    });
                }
                "EDGE_PRIOR" => {
                    need(7)?;
                    let a = node_ref(tokens[1], g.priors.len(), "plan")?;
                    let b = node_ref(tokens[2], g.priors.len(), "plan")?;
                    let m = Vec2::new(num(tokens[3])?, num(tokens[4])?);
                    let (i11, i12, i22) = (num(tokens[5])?, num(tokens[6])?, num(tokens[7])?);
                    g.prior_edges.push(PriorMapEdge {
                        a: PriorId(a),
                        b: PriorId(b),
                        measurement: m,
                        information: Mat2::new(i11, i12, i12, i22),
                    });
                }
                "EDGE_LINK" => {
                    need(5)?;
                    let lm = node_ref(tokens[1], g.landmarks.len(), "landmark")?;
                    let p = node_ref(tokens[2], g.priors.len(), "plan")?;
                    let (i11, i12, i22) = (num(tokens[3])?, num(tokens[4])?, num(tokens[5])?);
                    g.link_edges.push(LinkEdge {
                        landmark: LandmarkId(lm),
                        prior: PriorId(p),
                        information: Mat2::new(i11, i12, i12, i22),
                    });
                }
                "EDGE_ANCHOR" => {
                    need(6)?;
                    let p = node_ref(tokens[1], g.priors.len(), "plan")?;
                    let position = Point2::new(num(tokens[2])?, num(tokens[3])?);
                    let (i11, i12, i22) = (num(tokens[4])?, num(tokens[5])?, num(tokens[6])?);
                    g.anchor_edges.push(AnchorEdge {
                        node: PriorId(p),
                        position,
                        information: Mat2::new(i11, i12, i12, i22),
                    });
                }
                other => {
                    return Err(parse_err(format!("unknown record '{other}'")));
                }
            }
        }
        if !saw_header {
            return Err(Error::Parse {
                line: 1,
                message: "missing 'ACG 1' header".into(),
            });
        }
        Ok(g)
    }

    /// Structural near-equality on nodes and edges (attachments ignored),
    /// with numeric fields compared to `tol`.
    pub fn approx_eq(&self, other: &AcgGraph, tol: Real) -> bool {
        let pose_eq = |a: &Pose2, b: &Pose2| {
            (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol && (a.theta - b.theta).abs() <= tol
        };
        let pt_eq = |a: &Point2, b: &Point2| (a - b).norm() <= tol;
        let m2_eq = |a: &Mat2, b: &Mat2| (a - b).abs().max() <= tol;
        let m3_eq = |a: &Mat3, b: &Mat3| (a - b).abs().max() <= tol;
        self.poses.len() == other.poses.len()
            && self.landmarks.len() == other.landmarks.len()
            && self.priors.len() == other.priors.len()
            && self.odometry_edges.len() == other.odometry_edges.len()
            && self.observation_edges.len() == other.observation_edges.len()
            && self.prior_edges.len() == other.prior_edges.len()
            && self.link_edges.len() == other.link_edges.len()
            && self.anchor_edges.len() == other.anchor_edges.len()
            && self
                .poses
                .iter()
                .zip(&other.poses)
                .all(|(a, b)| pose_eq(&a.pose, &b.pose))
            && self.landmarks.iter().zip(&other.landmarks).all(|(a, b)| pt_eq(a, b))
            && self.priors.iter().zip(&other.priors).all(|(a, b)| pt_eq(a, b))
            && self.odometry_edges.iter().zip(&other.odometry_edges).all(|(a, b)| {
                a.from == b.from && a.to == b.to && pose_eq(&a.measurement, &b.measurement) && m3_eq(&a.information, &b.information)
            })
            && self.observation_edges.iter().zip(&other.observation_edges).all(|(a, b)| {
                a.pose == b.pose
                    && a.landmark == b.landmark
                    && (a.measurement - b.measurement).norm() <= tol
                    && m2_eq(&a.information, &b.information)
            })
            && self.prior_edges.iter().zip(&other.prior_edges).all(|(a, b)| {
                a.a == b.a && a.b == b.b && (a.measurement - b.measurement).norm() <= tol && m2_eq(&a.information, &b.information)
            })
            && self.link_edges.iter().zip(&other.link_edges).all(|(a, b)| {
                a.landmark == b.landmark && a.prior == b.prior && m2_eq(&a.information, &b.information)
            })
            && self.anchor_edges.iter().zip(&other.anchor_edges).all(|(a, b)| {
                a.node == b.node && pt_eq(&a.position, &b.position) && m2_eq(&a.information, &b.information)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sym_eigen_2x2;
    use crate::prior::PriorEdge;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn info3() -> Mat3 {
        Mat3::from_diagonal(&nalgebra::Vector3::new(100.0, 100.0, 400.0))
    }

    fn square_prior() -> PriorGraph {
        let nodes = vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
            Point2::new(0.0, 4.0),
        ];
        let edges = (0..4)
            .map(|i| {
                let j = (i + 1) % 4;
                PriorEdge {
                    a: i.min(j),
                    b: i.max(j),
                    length: (nodes[i] - nodes[j]).norm(),
                }
            })
            .collect();
        PriorGraph { nodes, edges }
    }

    #[test]
    fn pose_chain_composes_back_to_inserted_poses() {
        let mut g = AcgGraph::new();
        let truth = [
            Pose2::identity(),
            Pose2::new(1.0, 0.2, 0.3),
            Pose2::new(2.1, 0.4, 0.9),
            Pose2::new(2.5, 1.6, -1.2),
            Pose2::new(1.9, 2.8, 2.4),
        ];
        g.add_pose_node(truth[0], None, None).unwrap();
        for i in 1..truth.len() {
            let delta = truth[i - 1].between(&truth[i]);
            g.add_pose_node(truth[i], None, Some((delta, info3()))).unwrap();
        }
        assert_eq!(g.poses.len(), 5);
        assert_eq!(g.odometry_edges.len(), 4);
        let mut acc = truth[0];
        for e in &g.odometry_edges {
            acc = acc.compose(&e.measurement);
            let t = &g.poses[e.to.0].pose;
            assert_relative_eq!(acc.x, t.x, epsilon = 1e-10);
            assert_relative_eq!(acc.y, t.y, epsilon = 1e-10);
            assert_relative_eq!(acc.theta, t.theta, epsilon = 1e-10);
        }
        g.validate().unwrap();
    }

    #[test]
    fn pose_node_odometry_is_strict() {
        let mut g = AcgGraph::new();
        assert!(g
            .add_pose_node(Pose2::identity(), None, Some((Pose2::identity(), info3())))
            .is_err());
        g.add_pose_node(Pose2::identity(), None, None).unwrap();
        assert!(g.add_pose_node(Pose2::new(1.0, 0.0, 0.0), None, None).is_err());
        let bad_info = Mat3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 1.0));
        assert!(g
            .add_pose_node(Pose2::new(1.0, 0.0, 0.0), None, Some((Pose2::identity(), bad_info)))
            .is_err());
    }

    #[test]
    fn landmark_is_initialized_in_world_frame() {
        let mut g = AcgGraph::new();
        let p0 = g.add_pose_node(Pose2::identity(), None, None).unwrap();
        let l0 = g.add_landmark(p0, Point2::new(1.0, 1.0)).unwrap();
        assert_relative_eq!(g.landmarks[l0.0].x, 1.0);
        assert_relative_eq!(g.landmarks[l0.0].y, 1.0);

        let p1 = g
            .add_pose_node(
                Pose2::new(0.0, 0.0, std::f64::consts::FRAC_PI_2),
                None,
                Some((Pose2::identity(), info3())),
            )
            .unwrap();
        let l1 = g.add_landmark(p1, Point2::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(g.landmarks[l1.0].x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(g.landmarks[l1.0].y, 1.0, epsilon = 1e-12);

        let e = &g.observation_edges[l1.0];
        assert_eq!(e.information, Mat2::from_diagonal_element(20.0));
        assert!(g.add_landmark(PoseId(99), Point2::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn identity_anchors_leave_plan_unchanged() {
        let mut g = AcgGraph::new();
        let prior = square_prior();
        let anchors = [
            (prior.nodes[0], prior.nodes[0]),
            (prior.nodes[1], prior.nodes[1]),
        ];
        g.add_prior(&prior, anchors, 0.5).unwrap();
        for (a, b) in g.priors.iter().zip(&prior.nodes) {
            assert_relative_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
        // Axis-aligned wall of length 4, fraction 0.5: covariance eigenvalues
        // (2.0, 0.005) with the large one along the wall.
        let e = &g.prior_edges[0];
        let cov = e.information.try_inverse().unwrap();
        let ((l1, v1), (l2, _)) = sym_eigen_2x2(&cov);
        assert_relative_eq!(l1, 2.0, epsilon = 1e-9);
        assert_relative_eq!(l2, 0.005, epsilon = 1e-9);
        let dir = g.priors[e.b.0] - g.priors[e.a.0];
        assert!((v1.dot(&dir.normalize())).abs() > 1.0 - 1e-9);
    }

    #[test]
    fn scaling_anchors_rescale_walls_and_covariances() {
        let mut g = AcgGraph::new();
        let prior = square_prior();
        let anchors = [
            (prior.nodes[0], Point2::new(0.0, 0.0)),
            (prior.nodes[1], Point2::new(8.0, 0.0)),
        ];
        g.add_prior(&prior, anchors, 0.5).unwrap();
        for e in &g.prior_edges {
            assert_relative_eq!(e.measurement.norm(), 8.0, epsilon = 1e-9);
            let cov = e.information.try_inverse().unwrap();
            let ((l1, _), (l2, _)) = sym_eigen_2x2(&cov);
            assert_relative_eq!(l1, 0.5 * 8.0, epsilon = 1e-9);
            assert_relative_eq!(l2, 0.005, epsilon = 1e-9);
        }
        g.validate().unwrap();
    }

    #[test]
    fn prior_rejects_bad_anchors_and_double_insert() {
        let prior = square_prior();
        let mut g = AcgGraph::new();
        let same = Point2::new(1.0, 1.0);
        assert!(g.add_prior(&prior, [(same, same), (same, same)], 0.5).is_err());
        // Anchor plan points must coincide with plan nodes.
        let off_node = [
            (Point2::new(2.0, 0.0), Point2::new(2.0, 0.0)),
            (prior.nodes[1], prior.nodes[1]),
        ];
        assert!(g.add_prior(&prior, off_node, 0.5).is_err());
        let anchors = [
            (prior.nodes[0], prior.nodes[0]),
            (prior.nodes[1], prior.nodes[1]),
        ];
        g.add_prior(&prior, anchors, 0.5).unwrap();
        assert!(g.add_prior(&prior, anchors, 0.5).is_err());
    }

    #[test]
    fn anchors_pin_their_nodes_with_standard_information() {
        let mut g = AcgGraph::new();
        let prior = square_prior();
        let w0 = Point2::new(1.0, 2.0);
        let w1 = Point2::new(5.0, 2.0);
        g.add_prior(&prior, [(prior.nodes[0], w0), (prior.nodes[1], w1)], 0.5).unwrap();
        assert_eq!(g.anchor_edges.len(), 2);
        let a = &g.anchor_edges[0];
        let b = &g.anchor_edges[1];
        assert_eq!(a.node, PriorId(0));
        assert_eq!(b.node, PriorId(1));
        assert_relative_eq!((a.position - w0).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((b.position - w1).norm(), 0.0, epsilon = 1e-12);
        // The transform maps each anchor node exactly onto its world point.
        assert_relative_eq!((g.priors[0] - w0).norm(), 0.0, epsilon = 1e-9);
        assert_relative_eq!((g.priors[1] - w1).norm(), 0.0, epsilon = 1e-9);
        assert_eq!(a.information, Mat2::from_diagonal_element(ANCHOR_INFORMATION));
        g.validate().unwrap();
    }

    #[test]
    fn link_edges_respect_the_distance_gate() {
        let mut g = AcgGraph::new();
        let p0 = g.add_pose_node(Pose2::identity(), None, None).unwrap();
        g.add_landmark(p0, Point2::new(0.0, 0.0)).unwrap();
        g.priors = vec![Point2::new(3.0, 0.0)];
        let policy = LinkCandidatePolicy::default();
        assert_eq!(g.generate_link_edges(&policy), 0);

        g.priors = vec![Point2::new(0.5, 0.0), Point2::new(1.5, 0.0)];
        assert_eq!(g.generate_link_edges(&policy), 2);
        assert_eq!(g.generate_link_edges(&policy), 0, "idempotent");
        assert_eq!(g.link_edges.len(), 2);

        // Boundary: exactly at the threshold counts as within.
        g.priors.push(Point2::new(2.0, 0.0));
        assert_eq!(g.generate_link_edges(&policy), 1);
        g.validate().unwrap();
    }

    #[test]
    fn link_edges_match_brute_force_on_random_layouts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut g = AcgGraph::new();
            let p0 = g.add_pose_node(Pose2::identity(), None, None).unwrap();
            for _ in 0..8 {
                let p = Point2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                g.add_landmark(p0, p).unwrap();
            }
            g.priors = (0..6)
                .map(|_| Point2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)))
                .collect();
            let policy = LinkCandidatePolicy::new(2.0).unwrap();
            g.generate_link_edges(&policy);
            let have: BTreeSet<(usize, usize)> = g
                .link_edges
                .iter()
                .map(|l| (l.landmark.0, l.prior.0))
                .collect();
            for (li, lm) in g.landmarks.iter().enumerate() {
                for (pi, pr) in g.priors.iter().enumerate() {
                    assert_eq!(
                        (lm - pr).norm() <= 2.0,
                        have.contains(&(li, pi)),
                        "pair ({li},{pi})"
                    );
                }
            }
        }
    }

    #[test]
    fn empty_graph_serializes_to_header_only() {
        let g = AcgGraph::new();
        assert_eq!(g.serialize(), "ACG 1\n");
        let back = AcgGraph::deserialize(&g.serialize()).unwrap();
        assert!(back.approx_eq(&g, 0.0));
    }

    #[test]
    fn small_graph_line_count() {
        let mut g = AcgGraph::new();
        let p0 = g.add_pose_node(Pose2::identity(), None, None).unwrap();
        g.add_landmark(p0, Point2::new(1.0, 0.5)).unwrap();
        let text = g.serialize();
        assert_eq!(text.lines().count(), 4, "header + pose + landmark + observation");
    }

    #[test]
    fn random_graph_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut g = AcgGraph::new();
        let mut prev = Pose2::identity();
        let mut pose_ids = Vec::new();
        pose_ids.push(g.add_pose_node(prev, None, None).unwrap());
        for _ in 1..20 {
            let pose = Pose2::new(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-3.0..3.0),
            );
            let delta = prev.between(&pose);
            pose_ids.push(g.add_pose_node(pose, None, Some((delta, info3()))).unwrap());
            prev = pose;
        }
        for i in 0..26 {
            let pid = pose_ids[i % pose_ids.len()];
            g.add_landmark(pid, Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
                .unwrap();
        }
        g.add_prior(
            &square_prior(),
            [
                (Point2::new(0.0, 0.0), Point2::new(1.0, 2.0)),
                (Point2::new(4.0, 0.0), Point2::new(4.5, 2.3)),
            ],
            0.5,
        )
        .unwrap();
        g.generate_link_edges(&LinkCandidatePolicy::new(6.0).unwrap());
        assert_eq!(g.poses.len() + g.landmarks.len() + g.priors.len(), 50);
        assert!(!g.link_edges.is_empty());
        g.validate().unwrap();

        let text = g.serialize();
        let back = AcgGraph::deserialize(&text).unwrap();
        assert!(back.approx_eq(&g, 1e-9));
        back.validate().unwrap();
    }

    #[test]
    fn parse_errors_name_the_line() {
        let cases = [
            ("ACG 2\n", 1),
            ("ACG 1\nPOSE 0 1 2\n", 2),
            ("ACG 1\nPOSE 1 0 0 0\n", 2),
            ("ACG 1\nPOSE 0 0 0 0\nLANDMARK 0 x 2\n", 3),
            ("ACG 1\nEDGE_LINK 0 0 1 0 1\n", 2),
            ("ACG 1\nWALL 0 0\n", 2),
            ("ACG 1\nPOSE 0 0 0 nan\n", 2),
        ];
        for (text, want_line) in cases {
            match AcgGraph::deserialize(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want_line, "input {text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
        assert!(AcgGraph::deserialize("# only a comment\n").is_err(), "missing header");
        // Comments and blank lines are fine.
        let ok = "# comment\nACG 1\n\nPOSE 0 0.0 0.0 0.0 # trailing\n";
        assert_eq!(AcgGraph::deserialize(ok).unwrap().poses.len(), 1);
    }

    #[test]
    fn validate_flags_broken_graphs() {
        let mut g = AcgGraph::new();
        let p0 = g.add_pose_node(Pose2::identity(), None, None).unwrap();
        g.add_landmark(p0, Point2::new(1.0, 0.0)).unwrap();
        g.validate().unwrap();

        let mut dangling = g.clone();
        dangling.observation_edges[0].landmark = LandmarkId(5);
        assert!(dangling.validate().is_err());

        let mut wrong_info = g.clone();
        wrong_info.observation_edges[0].information = Mat2::from_diagonal_element(1.0);
        assert!(wrong_info.validate().is_err());

        let mut non_spd = g.clone();
        non_spd.observation_edges[0].information = Mat2::new(20.0, 25.0, 25.0, 20.0);
        assert!(non_spd.validate().is_err());
    }

    #[test]
    fn prior_edge_information_aligns_with_walls() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let len: f64 = rng.gen_range(0.5..10.0);
            let b = Point2::new(a.x + len * ang.cos(), a.y + len * ang.sin());
            let prior = PriorGraph {
                nodes: vec![a, b],
                edges: vec![PriorEdge { a: 0, b: 1, length: len }],
            };
            let mut g = AcgGraph::new();
            g.add_prior(&prior, [(a, a), (b, b)], 0.5).unwrap();
            let e = &g.prior_edges[0];
            // The soft direction (small information eigenvalue) is along the wall.
            let ((_, _), (_, vmin)) = sym_eigen_2x2(&e.information);
            let dir = (b - a).normalize();
            assert!(
                vmin.dot(&dir).abs() > 1.0 - 1e-9,
                "info eigendirection drifted from wall direction"
            );
        }
    }
}
