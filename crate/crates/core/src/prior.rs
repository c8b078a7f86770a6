//! Floor-plan extraction: turns a scanned/drawn map image into a sparse
//! node-and-wall graph.
//!
//! The chain is threshold → thin → trace:
//! 1. dark pixels (ink) become wall pixels,
//! 2. walls are thinned to a one-pixel-wide skeleton (Zhang–Suen),
//! 3. the skeleton is walked into polylines; graph nodes are placed at
//!    junctions (three or more branches), endpoints, and sharp bends
//!    (tangent deviation of 45 degrees or more over a short lookahead),
//!    then nodes closer than a few pixels are merged.
//!
//! Pixel coordinates use image convention (row 0 on top); the extracted
//! graph lives in a y-up world frame, `x = (col + 0.5) * pixel_size`,
//! `y = (height - row - 0.5) * pixel_size`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Real};
use crate::pgm::Gray;

/// Nodes closer than this many pixels collapse into one.
pub const NODE_MERGE_RADIUS_PX: Real = 3.0;
/// Tangent lookahead, in skeleton pixels, on each side of a bend test.
pub const CORNER_LOOKAHEAD_PX: usize = 7;
/// Minimum tangent deviation that splits a polyline at a bend.
pub const CORNER_MIN_DEVIATION_DEG: Real = 45.0;

/// A grayscale (or, after [`threshold`], binary 0/1) raster with a scale.
#[derive(Debug, Clone)]
pub struct RasterMap {
    pub image: Gray,
    /// Meters per pixel.
    pub pixel_size: Real,
}

impl RasterMap {
    pub fn new(image: Gray, pixel_size: Real) -> Result<RasterMap> {
        if !(pixel_size.is_finite() && pixel_size > 0.0) {
            return Err(Error::invalid(format!(
                "pixel_size must be positive, got {pixel_size}"
            )));
        }
        Ok(RasterMap { image, pixel_size })
    }

    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }

    /// True when every pixel is 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.image.pixels.iter().all(|&p| p <= 1)
    }

    /// Binary map (1 = wall) rendered as ink on paper (0 on 255) for export.
    pub fn to_ink_image(&self) -> Gray {
        let mut g = self.image.clone();
        for p in &mut g.pixels {
            *p = if *p != 0 { 0 } else { 255 };
        }
        g
    }
}

/// Marks every pixel at or below `level` as wall: dark ink on light paper.
/// Output pixels are 1 (wall) or 0 (background).
pub fn threshold(raster: &RasterMap, level: u8) -> RasterMap {
    let mut image = raster.image.clone();
    for p in &mut image.pixels {
        *p = u8::from(*p <= level);
    }
    RasterMap {
        image,
        pixel_size: raster.pixel_size,
    }
}

/// A wall segment between two node indices of a [`PriorGraph`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorEdge {
    pub a: usize,
    pub b: usize,
    /// Euclidean distance between the endpoints, meters.
    pub length: Real,
}

/// Sparse polyline graph of a floor plan: wall corners/junctions/endpoints
/// and straight wall segments between them.
#[derive(Debug, Clone, Default)]
pub struct PriorGraph {
    pub nodes: Vec<Point2>,
    pub edges: Vec<PriorEdge>,
}

impl PriorGraph {
    /// Checks the structural invariants: indices in range, no self or
    /// duplicate edges, every stored length equal to the endpoint distance.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.a >= self.nodes.len() || e.b >= self.nodes.len() {
                return Err(Error::invalid(format!("edge {i} references a missing node")));
            }
            if e.a == e.b {
                return Err(Error::invalid(format!("edge {i} is a self-loop")));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(Error::invalid(format!("edge {i} is a duplicate")));
            }
            let d = (self.nodes[e.a] - self.nodes[e.b]).norm();
            if (d - e.length).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "edge {i} length {} does not match endpoint distance {d}",
                    e.length
                )));
            }
        }
        Ok(())
    }

    pub fn total_length(&self) -> Real {
        self.edges.iter().map(|e| e.length).sum()
    }
}

/// Thins a binary raster (1 = wall) to a one-pixel-wide, 8-connected
/// skeleton using the two-subpass Zhang–Suen iteration.
pub fn zhang_suen_thin(binary: &RasterMap) -> Result<RasterMap> {
    if !binary.is_binary() {
        return Err(Error::invalid("thinning expects a binary (0/1) raster"));
    }
    let w = binary.width();
    let h = binary.height();
    let mut img = binary.image.clone();
    let at = |img: &Gray, c: i64, r: i64| -> u8 {
        if c < 0 || r < 0 || c >= w as i64 || r >= h as i64 {
            0
        } else {
            img.get(c as usize, r as usize)
        }
    };
    let mut to_clear: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            to_clear.clear();
            for r in 0..h as i64 {
                for c in 0..w as i64 {
                    if at(&img, c, r) == 0 {
                        continue;
                    }
                    // Neighbors clockwise from north: P2..P9.
                    let p = [
                        at(&img, c, r - 1),
                        at(&img, c + 1, r - 1),
                        at(&img, c + 1, r),
                        at(&img, c + 1, r + 1),
                        at(&img, c, r + 1),
                        at(&img, c - 1, r + 1),
                        at(&img, c - 1, r),
                        at(&img, c - 1, r - 1),
                    ];
                    let b: u8 = p.iter().sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| p[i] == 0 && p[(i + 1) % 8] == 1).count();
                    if a != 1 {
                        continue;
                    }
                    let ok = if pass == 0 {
                        p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0
                    } else {
                        p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0
                    };
                    if ok {
                        to_clear.push((c as usize, r as usize));
                    }
                }
            }
            for &(c, r) in &to_clear {
                img.set(c, r, 0);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(RasterMap {
        image: img,
        pixel_size: binary.pixel_size,
    })
}

/// Extracts the wall graph from a binary raster (1 = wall): thins it, walks
/// the skeleton, places nodes at junctions/endpoints/bends, merges nearby
/// nodes, and scales positions into the y-up world frame.
pub fn extract_prior_graph(binary: &RasterMap) -> Result<PriorGraph> {
    if !binary.is_binary() {
        return Err(Error::invalid(
            "extraction expects a binary (0/1) raster; threshold it first",
        ));
    }
    let skel = zhang_suen_thin(binary)?;
    let traced = trace_skeleton(&skel.image);
    let merged = merge_nodes(traced, NODE_MERGE_RADIUS_PX);

    let h = binary.height() as Real;
    let ps = binary.pixel_size;
    let nodes: Vec<Point2> = merged
        .nodes
        .iter()
        .map(|&(c, r)| Point2::new((c + 0.5) * ps, (h - r - 0.5) * ps))
        .collect();
    let mut edges: Vec<PriorEdge> = merged
        .edges
        .iter()
        .map(|&(a, b)| PriorEdge {
            a,
            b,
            length: (nodes[a] - nodes[b]).norm(),
        })
        .collect();
    edges.sort_by_key(|e| (e.a, e.b));
    let graph = PriorGraph { nodes, edges };
    graph.validate()?;
    Ok(graph)
}

/// Pixel-space trace result (positions in continuous pixel coordinates).
struct Traced {
    nodes: Vec<(Real, Real)>,
    edges: Vec<(usize, usize)>,
}

const NEIGHBORS8: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

fn trace_skeleton(skel: &Gray) -> Traced {
    let w = skel.width as i64;
    let h = skel.height as i64;
    let on = |c: i64, r: i64| -> bool { c >= 0 && r >= 0 && c < w && r < h && skel.get(c as usize, r as usize) != 0 };

    // Branch count per pixel: connected runs of foreground in the 8-ring.
    // 1 = endpoint, 2 = path interior, >= 3 = junction.
    let branch_count = |c: i64, r: i64| -> usize {
        let ring: Vec<bool> = NEIGHBORS8.iter().map(|&(dc, dr)| on(c + dc, r + dr)).collect();
        (0..8).filter(|&i| !ring[i] && ring[(i + 1) % 8]).count()
    };
    let is_node = |c: i64, r: i64| -> bool {
        let b = branch_count(c, r);
        b == 1 || b >= 3
    };

    // Walking prefers orthogonal steps so diagonal shortcuts do not skip
    // skeleton pixels.
    let next_candidates = |cur: (i64, i64), prev: (i64, i64)| -> Vec<(i64, i64)> {
        let mut cands: Vec<((i64, i64), bool)> = Vec::new();
        for &(dc, dr) in &NEIGHBORS8 {
            let q = (cur.0 + dc, cur.1 + dr);
            if q != prev && on(q.0, q.1) {
                cands.push((q, dc != 0 && dr != 0));
            }
        }
        cands.sort_by_key(|&(_, diag)| diag);
        cands.into_iter().map(|(q, _)| q).collect()
    };

    let mut traversed: BTreeSet<((i64, i64), (i64, i64))> = BTreeSet::new();
    let mut touched: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut paths: Vec<(Vec<(i64, i64)>, bool)> = Vec::new(); // (pixels, cyclic)

    let mut node_pixels: Vec<(i64, i64)> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if on(c, r) && is_node(c, r) {
                node_pixels.push((c, r));
            }
        }
    }

    // Open paths between node pixels.
    for &start in &node_pixels {
        for &(dc, dr) in &NEIGHBORS8 {
            let first = (start.0 + dc, start.1 + dr);
            if !on(first.0, first.1) || traversed.contains(&(start, first)) {
                continue;
            }
            let mut path = vec![start, first];
            traversed.insert((start, first));
            traversed.insert((first, start));
            touched.insert(start);
            touched.insert(first);
            while !is_node(path[path.len() - 1].0, path[path.len() - 1].1) {
                let cur = path[path.len() - 1];
                let prev = path[path.len() - 2];
                let cands = next_candidates(cur, prev);
                let Some(&next) = cands.first() else { break };
                traversed.insert((cur, next));
                traversed.insert((next, cur));
                touched.insert(next);
                path.push(next);
            }
            paths.push((path, false));
        }
    }

    // Closed loops that touch no node pixel (e.g. a plain rectangle).
    for r in 0..h {
        for c in 0..w {
            let start = (c, r);
            if !on(c, r) || touched.contains(&start) || is_node(c, r) {
                continue;
            }
            let cands = next_candidates(start, start);
            let Some(&first) = cands.first() else { continue };
            let mut path = vec![start, first];
            traversed.insert((start, first));
            traversed.insert((first, start));
            touched.insert(start);
            touched.insert(first);
            loop {
                let cur = path[path.len() - 1];
                let prev = path[path.len() - 2];
                let cands = next_candidates(cur, prev);
                let Some(&next) = cands.first() else { break };
                if next == start {
                    traversed.insert((cur, next));
                    traversed.insert((next, cur));
                    break;
                }
                traversed.insert((cur, next));
                traversed.insert((next, cur));
                touched.insert(next);
                path.push(next);
            }
            paths.push((path, true));
        }
    }

    // Split paths at bends and register nodes.
    let mut node_ids: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut nodes: Vec<(Real, Real)> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut id_of = |px: (i64, i64), nodes: &mut Vec<(Real, Real)>| -> usize {
        *node_ids
            .entry(px)
            .or_insert_with(|| {
                nodes.push((px.0 as Real, px.1 as Real));
                nodes.len() - 1
            })
    };

    for (path, cyclic) in &paths {
        let corners = bend_indices(path, *cyclic);
        if *cyclic {
            if corners.len() < 2 {
                // A loop with no resolvable bends (a circle) cannot be
                // represented as straight wall segments; skip it.
                log::debug!("dropping {}-pixel loop with {} bends", path.len(), corners.len());
                continue;
            }
            let ids: Vec<usize> = corners.iter().map(|&i| id_of(path[i], &mut nodes)).collect();
            for k in 0..ids.len() {
                edges.push((ids[k], ids[(k + 1) % ids.len()]));
            }
        } else {
            let mut ids = vec![id_of(path[0], &mut nodes)];
            for &i in &corners {
                ids.push(id_of(path[i], &mut nodes));
            }
            ids.push(id_of(path[path.len() - 1], &mut nodes));
            for k in 0..ids.len() - 1 {
                edges.push((ids[k], ids[k + 1]));
            }
        }
    }

    Traced { nodes, edges }
}

/// Indices along `path` where the tangent direction turns by at least
/// [`CORNER_MIN_DEVIATION_DEG`] within [`CORNER_LOOKAHEAD_PX`] pixels each
/// side; non-maximum suppression keeps one index per bend.
fn bend_indices(path: &[(i64, i64)], cyclic: bool) -> Vec<usize> {
    let n = path.len();
    let w = CORNER_LOOKAHEAD_PX;
    if (cyclic && n < 2 * w + 1) || (!cyclic && n < 2 * w + 1) {
        return Vec::new();
    }
    let angle_at = |i: usize| -> Option<Real> {
        let (ib, if_) = if cyclic {
            (((i + n) - w) % n, (i + w) % n)
        } else {
            if i < w || i + w >= n {
                return None;
            }
            (i - w, i + w)
        };
        let v1 = (
            (path[i].0 - path[ib].0) as Real,
            (path[i].1 - path[ib].1) as Real,
        );
        let v2 = (
            (path[if_].0 - path[i].0) as Real,
            (path[if_].1 - path[i].1) as Real,
        );
        let n1 = (v1.0 * v1.0 + v1.1 * v1.1).sqrt();
        let n2 = (v2.0 * v2.0 + v2.1 * v2.1).sqrt();
        if n1 == 0.0 || n2 == 0.0 {
            return None;
        }
        let cos = ((v1.0 * v2.0 + v1.1 * v2.1) / (n1 * n2)).clamp(-1.0, 1.0);
        Some(cos.acos().to_degrees())
    };
    let angles: Vec<Option<Real>> = (0..n).map(angle_at).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let Some(a) = angles[i] else { continue };
        if a < CORNER_MIN_DEVIATION_DEG {
            continue;
        }
        // Local maximum within the lookahead window; first of a tie run wins.
        let mut is_max = true;
        for d in 1..=w {
            let before = if cyclic {
                Some(((i + n) - d) % n)
            } else {
                i.checked_sub(d)
            };
            if let Some(j) = before {
                if let Some(b) = angles[j] {
                    if b >= a {
                        is_max = false;
                        break;
                    }
                }
            }
            let after = if cyclic { Some((i + d) % n) } else { (i + d < n).then_some(i + d) };
            if let Some(j) = after {
                if let Some(b) = angles[j] {
                    if b > a {
                        is_max = false;
                        break;
                    }
                }
            }
        }
        if is_max {
            out.push(i);
        }
    }
    out
}

/// Single-linkage merge of nodes within `radius` pixels; merged nodes take
/// the centroid, self and duplicate edges are dropped.
fn merge_nodes(t: Traced, radius: Real) -> Traced {
    let n = t.nodes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = t.nodes[i].0 - t.nodes[j].0;
            let dy = t.nodes[i].1 - t.nodes[j].1;
            if (dx * dx + dy * dy).sqrt() < radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut cluster_ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut nodes: Vec<(Real, Real)> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut remap = vec![0usize; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        let id = *cluster_ids.entry(root).or_insert_with(|| {
            nodes.push((0.0, 0.0));
            counts.push(0);
            nodes.len() - 1
        });
        nodes[id].0 += t.nodes[i].0;
        nodes[id].1 += t.nodes[i].1;
        counts[id] += 1;
        remap[i] = id;
    }
    for (i, node) in nodes.iter_mut().enumerate() {
        node.0 /= counts[i] as Real;
        node.1 /= counts[i] as Real;
    }
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for &(a, b) in &t.edges {
        let (a, b) = (remap[a], remap[b]);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    Traced { nodes, edges }
}

/// Renders world-frame wall segments as ink (0) on paper (255), one image
/// pixel per `pixel_size` meters, with `margin_px` of padding. Returns the
/// image and the world position of its bottom-left corner.
pub fn render_segments(
    segments: &[(Point2, Point2)],
    pixel_size: Real,
    thickness_px: usize,
    margin_px: usize,
) -> Result<(Gray, Point2)> {
    if segments.is_empty() {
        return Err(Error::invalid("nothing to render"));
    }
    if !(pixel_size.is_finite() && pixel_size > 0.0) {
        return Err(Error::invalid(format!("pixel_size must be positive, got {pixel_size}")));
    }
    let mut min = Point2::new(Real::INFINITY, Real::INFINITY);
    let mut max = Point2::new(Real::NEG_INFINITY, Real::NEG_INFINITY);
    for (a, b) in segments {
        for p in [a, b] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
    }
    let m = margin_px as Real * pixel_size;
    let origin = Point2::new(min.x - m, min.y - m);
    let width = (((max.x - origin.x) / pixel_size).ceil() as usize + margin_px).max(1);
    let height = (((max.y - origin.y) / pixel_size).ceil() as usize + margin_px).max(1);
    let mut img = Gray::new(width, height, 255);
    let half = thickness_px as Real * pixel_size / 2.0;
    for (a, b) in segments {
        let lo_c = (((a.x.min(b.x) - half - origin.x) / pixel_size).floor().max(0.0)) as usize;
        let hi_c = ((((a.x.max(b.x) + half - origin.x) / pixel_size).ceil()) as usize).min(width - 1);
        let lo_r_y = a.y.min(b.y) - half;
        let hi_r_y = a.y.max(b.y) + half;
        let r_from = ((height as Real - (hi_r_y - origin.y) / pixel_size).floor().max(0.0)) as usize;
        let r_to = ((height as Real - (lo_r_y - origin.y) / pixel_size).ceil() as usize).min(height - 1);
        for r in r_from..=r_to {
            for c in lo_c..=hi_c {
                let p = Point2::new(
                    origin.x + (c as Real + 0.5) * pixel_size,
                    origin.y + (height as Real - r as Real - 0.5) * pixel_size,
                );
                if point_segment_distance(&p, a, b) <= half {
                    img.set(c, r, 0);
                }
            }
        }
    }
    Ok((img, origin))
}

pub(crate) fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> Real {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}
