//! Sparse normal-distributions-transform (NDT) grids and corner detection.
//!
//! A scan is summarized cell by cell: every grid cell holding at least
//! [`MIN_POINTS_PER_CELL`] points stores the sample mean and a regularized
//! sample covariance of those points. Corners are found where the main
//! covariance axes of two nearby cells meet at close to a right angle: the
//! two axis lines are intersected and the intersection is reported, with
//! duplicates from overlapping cell pairs merged within one cell size.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::geometry::{sym_eigen_2x2, Cov2, Mat2, Point2, Real, Vec2};

/// Cells with fewer points than this carry no Gaussian.
pub const MIN_POINTS_PER_CELL: usize = 3;
/// Largest allowed ratio between covariance eigenvalues after regularization.
pub const MAX_CONDITION_NUMBER: Real = 1e4;
/// Accepted range, in degrees, for the angle between the two main axes of a
/// corner-forming cell pair.
pub const CORNER_ANGLE_RANGE_DEG: (Real, Real) = (80.0, 100.0);
/// A cell takes part in corner detection only when it is clearly elongated:
/// its covariance eigenvalues must differ by at least this factor. Blob-like
/// cells (partially occluded wall slivers, junction cells) have unstable
/// main axes and would otherwise report corners in arbitrary places.
pub const MIN_AXIS_RATIO: Real = 6.0;

/// One occupied grid cell: Gaussian fit of the points that fell into it.
#[derive(Debug, Clone, Copy)]
pub struct NdtCell {
    pub mean: Point2,
    pub cov: Cov2,
    pub point_count: usize,
}

impl NdtCell {
    /// Unit direction of the largest covariance eigenvalue (deterministic
    /// sign: non-negative x, then non-negative y).
    pub fn main_axis(&self) -> Vec2 {
        let ((_, v), _) = self.cov.eigen();
        v
    }

    /// Ratio of the larger to the smaller covariance eigenvalue.
    pub fn axis_ratio(&self) -> Real {
        let ((l_max, _), (l_min, _)) = self.cov.eigen();
        l_max / l_min
    }

    /// Whether the cell is elongated enough for its main axis to be a
    /// trustworthy line direction.
    pub fn is_line_like(&self) -> bool {
        self.axis_ratio() >= MIN_AXIS_RATIO
    }
}

/// Sparse grid of Gaussian cells, keyed by integer cell index.
///
/// A point `p` falls into cell `floor((p - origin) / cell_size)` per axis.
/// Iteration over cells is in index order, so everything derived from a grid
/// is deterministic.
#[derive(Debug, Clone)]
pub struct NdtGrid {
    cell_size: Real,
    origin: Point2,
    cells: BTreeMap<(i32, i32), NdtCell>,
}

impl NdtGrid {
    pub fn cell_size(&self) -> Real {
        self.cell_size
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, index: (i32, i32)) -> Option<&NdtCell> {
        self.cells.get(&index)
    }

    /// Occupied cells in index order.
    pub fn cells(&self) -> impl Iterator<Item = ((i32, i32), &NdtCell)> {
        self.cells.iter().map(|(k, v)| (*k, v))
    }

    /// Index of the cell containing `p`.
    pub fn cell_index(&self, p: &Point2) -> (i32, i32) {
        (
            ((p.x - self.origin.x) / self.cell_size).floor() as i32,
            ((p.y - self.origin.y) / self.cell_size).floor() as i32,
        )
    }

    /// World-frame square covered by a cell index: `[min, min + cell_size)`.
    pub fn cell_bounds(&self, index: (i32, i32)) -> (Point2, Point2) {
        let min = Point2::new(
            self.origin.x + index.0 as Real * self.cell_size,
            self.origin.y + index.1 as Real * self.cell_size,
        );
        (min, Point2::new(min.x + self.cell_size, min.y + self.cell_size))
    }
}

/// Bins `points` into cells of `cell_size` meters (origin at the world
/// origin) and fits a Gaussian to every cell with at least
/// [`MIN_POINTS_PER_CELL`] points.
///
/// The sample covariance is regularized by `(0.01 * cell_size)^2 * I` and its
/// condition number clamped to [`MAX_CONDITION_NUMBER`], so every stored
/// covariance is positive definite even for collinear or identical points.
pub fn build_ndt_grid(points: &[Point2], cell_size: Real) -> Result<NdtGrid> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(Error::invalid(format!("cell_size must be positive, got {cell_size}")));
    }
    for (i, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::invalid(format!("point {i} has non-finite coordinates")));
        }
    }
    let origin = Point2::new(0.0, 0.0);
    let mut bins: BTreeMap<(i32, i32), Vec<Point2>> = BTreeMap::new();
    for p in points {
        let idx = (
            ((p.x - origin.x) / cell_size).floor() as i32,
            ((p.y - origin.y) / cell_size).floor() as i32,
        );
        bins.entry(idx).or_default().push(*p);
    }

    let epsilon = (0.01 * cell_size) * (0.01 * cell_size);
    let mut cells = BTreeMap::new();
    for (idx, pts) in bins {
        if pts.len() < MIN_POINTS_PER_CELL {
            continue;
        }
        let n = pts.len() as Real;
        let mut mean = Vec2::zeros();
        for p in &pts {
            mean += p.coords;
        }
        mean /= n;
        let mut cov = Mat2::zeros();
        for p in &pts {
            let d = p.coords - mean;
            cov += d * d.transpose();
        }
        cov /= n - 1.0;
        cov += Mat2::identity() * epsilon;
        let ((l_max, v_max), (l_min, v_min)) = sym_eigen_2x2(&cov);
        let l_min = l_min.max(l_max / MAX_CONDITION_NUMBER);
        let cov = Cov2::new(reconstruct(l_max, &v_max, l_min, &v_min))?;
        cells.insert(
            idx,
            NdtCell {
                mean: Point2::new(mean.x, mean.y),
                cov,
                point_count: pts.len(),
            },
        );
    }
    Ok(NdtGrid {
        cell_size,
        origin,
        cells,
    })
}

fn reconstruct(l1: Real, v1: &Vec2, l2: Real, v2: &Vec2) -> Mat2 {
    let m = l1 * v1 * v1.transpose() + l2 * v2 * v2.transpose();
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Mat2::new(m[(0, 0)], b, b, m[(1, 1)])
}

/// A detected wall corner.
#[derive(Debug, Clone, Copy)]
pub struct Corner {
    pub position: Point2,
    /// Deviation of the generating axis pair from a right angle, in degrees;
    /// always within `[0, 10]` given the accepted angle range.
    pub strength_deg: Real,
}

/// Pre-merge corner evidence: one near-perpendicular pair of cell axes.
#[derive(Debug, Clone, Copy)]
pub struct CornerCandidate {
    pub position: Point2,
    pub strength_deg: Real,
    /// The two cells whose main axes intersect at `position`.
    pub cells: ((i32, i32), (i32, i32)),
}

/// Every near-perpendicular pair of main axes among cells that are mutual
/// neighbors (Chebyshev distance `1..=neighborhood` of some common occupied
/// cell), one candidate per unordered cell pair.
pub fn detect_corner_candidates(grid: &NdtGrid, neighborhood: usize) -> Vec<CornerCandidate> {
    let mut seen: std::collections::BTreeSet<((i32, i32), (i32, i32))> = Default::default();
    let mut out = Vec::new();
    let n = neighborhood as i32;
    for (center, _) in grid.cells() {
        // Occupied line-like neighbors of the center cell, excluding the
        // center itself.
        let mut neighbors: Vec<((i32, i32), &NdtCell)> = Vec::new();
        for di in -n..=n {
            for dj in -n..=n {
                if di == 0 && dj == 0 {
                    continue;
                }
                let idx = (center.0 + di, center.1 + dj);
                if let Some(c) = grid.cell(idx) {
                    if c.is_line_like() {
                        neighbors.push((idx, c));
                    }
                }
            }
        }
        if neighbors.len() < 2 {
            continue;
        }
        for a in 0..neighbors.len() {
            for b in (a + 1)..neighbors.len() {
                let (ia, ca) = neighbors[a];
                let (ib, cb) = neighbors[b];
                let key = if ia <= ib { (ia, ib) } else { (ib, ia) };
                if seen.contains(&key) {
                    continue;
                }
                let ua = ca.main_axis();
                let ub = cb.main_axis();
                // Angle between the axis *lines*, folded into [0, 90].
                let cos = ua.dot(&ub).abs().min(1.0);
                let angle_deg = cos.acos().to_degrees();
                if angle_deg < 90.0 - (90.0 - CORNER_ANGLE_RANGE_DEG.0) {
                    continue;
                }
                // Intersect the two axis lines through the cell means.
                let a_mat = Matrix2::from_columns(&[ua, -ub]);
                let det = a_mat.determinant();
                if det.abs() < 1e-12 {
                    continue;
                }
                let rhs = cb.mean.coords - ca.mean.coords;
                let ts = a_mat.try_inverse().expect("checked determinant") * rhs;
                let position = Point2::from(ca.mean.coords + ts.x * ua);
                seen.insert(key);
                out.push(CornerCandidate {
                    position,
                    strength_deg: 90.0 - angle_deg,
                    cells: key,
                });
            }
        }
    }
    out
}

/// Corners of `grid`: candidate axis intersections merged within one cell
/// size (single linkage, centroid position, strongest evidence kept), sorted
/// by position.
pub fn detect_corners(grid: &NdtGrid, neighborhood: usize) -> Vec<Corner> {
    let candidates = detect_corner_candidates(grid, neighborhood);
    merge_candidates(&candidates, grid.cell_size())
}

fn merge_candidates(candidates: &[CornerCandidate], merge_radius: Real) -> Vec<Corner> {
    let n = candidates.len();
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
            let d = (candidates[i].position - candidates[j].position).norm();
            if d <= merge_radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        clusters.entry(r).or_default().push(i);
    }
    let mut corners: Vec<Corner> = clusters
        .values()
        .map(|members| {
            let mut sum = Vec2::zeros();
            let mut strength: Real = 0.0;
            for &m in members {
                sum += candidates[m].position.coords;
                strength = strength.max(candidates[m].strength_deg);
            }
            Corner {
                position: Point2::from(sum / members.len() as Real),
                strength_deg: strength,
            }
        })
        .collect();
    corners.sort_by(|a, b| {
        (a.position.x, a.position.y)
            .partial_cmp(&(b.position.x, b.position.y))
            .expect("finite corner positions")
    });
    corners
}

/// Parses whitespace-separated `x y` lines; blank lines and `#` comments are
/// skipped. Errors name the offending 1-based line.
pub fn parse_xy_points(text: &str) -> Result<Vec<Point2>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(xs), Some(ys), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected `x y`, got {line:?}"),
            });
        };
        let x: Real = xs.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("bad x coordinate {xs:?}"),
        })?;
        let y: Real = ys.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("bad y coordinate {ys:?}"),
        })?;
        out.push(Point2::new(x, y));
    }
    Ok(out)
}

/// Reads a point cloud from a file of `x y` lines.
pub fn read_xy_points(path: &Path) -> Result<Vec<Point2>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_xy_points(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Points along a horizontal 3 m wall at y = 0.1 with a tiny alternating
    /// offset so the sample covariance is nondegenerate.
    fn wall_points() -> Vec<Point2> {
        (0..100)
            .map(|i| {
                let x = 3.0 * i as f64 / 100.0;
                let y = 0.1 + if i % 2 == 0 { 0.004 } else { -0.004 };
                Point2::new(x, y)
            })
            .collect()
    }

    /// L-shape: two perpendicular 3 m walls meeting at the origin, points
    /// every 3 cm, both legs included from the corner outward.
    fn l_shape_points(skip_below: f64) -> Vec<Point2> {
        let mut pts = Vec::new();
        let mut d = 0.0;
        while d <= 3.0 {
            if d >= skip_below {
                pts.push(Point2::new(d, 0.0));
                pts.push(Point2::new(0.0, d));
            }
            d += 0.03;
        }
        pts
    }

    #[test]
    fn collinear_points_one_cell_axis_along_line() {
        let pts: Vec<Point2> = (0..10).map(|i| Point2::new(0.05 + 0.04 * i as f64, 0.2)).collect();
        let grid = build_ndt_grid(&pts, 0.5).unwrap();
        assert_eq!(grid.len(), 1);
        let cell = grid.cell((0, 0)).unwrap();
        assert_eq!(cell.point_count, 10);
        let axis = cell.main_axis();
        assert!(axis.x.abs() > 1.0 - 1e-9, "axis {axis:?} not along the line");
    }

    #[test]
    fn wall_grid_matches_direct_eigen_oracle() {
        let pts = wall_points();
        let grid = build_ndt_grid(&pts, 1.0).unwrap();
        assert_eq!(grid.len(), 3);
        for (idx, cell) in grid.cells() {
            // Oracle: direct eigen-decomposition of this cell's samples.
            let members: Vec<&Point2> = pts
                .iter()
                .filter(|p| grid.cell_index(p) == idx)
                .collect();
            let n = members.len() as f64;
            let mean = members.iter().fold(Vec2::zeros(), |a, p| a + p.coords) / n;
            let mut cov = Mat2::zeros();
            for p in &members {
                let d = p.coords - mean;
                cov += d * d.transpose();
            }
            cov /= n - 1.0;
            let ((_, oracle_axis), _) = sym_eigen_2x2(&cov);
            let cos = cell.main_axis().dot(&oracle_axis).abs();
            assert!(cos.acos().to_degrees() < 5.0);
            // And the axis really is the wall direction.
            assert!(cell.main_axis().x.abs() > (5.0f64).to_radians().cos());
            assert_relative_eq!(cell.mean.y, 0.1, epsilon = 0.01);
        }
    }

    #[test]
    fn small_cells_are_dropped() {
        let pts = vec![
            Point2::new(0.1, 0.1),
            Point2::new(0.2, 0.1),
            // second cell: only two points, below the minimum
            Point2::new(1.1, 0.1),
            Point2::new(1.2, 0.1),
            Point2::new(0.3, 0.1),
        ];
        let grid = build_ndt_grid(&pts, 1.0).unwrap();
        assert_eq!(grid.len(), 1);
        assert!(grid.cell((0, 0)).is_some());
        assert!(grid.cell((1, 0)).is_none());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_ndt_grid(&[], 0.0).is_err());
        assert!(build_ndt_grid(&[], -1.0).is_err());
        assert!(build_ndt_grid(&[Point2::new(f64::NAN, 0.0)], 0.5).is_err());
    }

    #[test]
    fn l_shape_yields_exactly_one_corner_at_origin() {
        let grid = build_ndt_grid(&l_shape_points(0.0), 0.5).unwrap();
        let corners = detect_corners(&grid, 2);
        assert_eq!(corners.len(), 1, "corners: {corners:?}");
        let c = corners[0];
        assert!((c.position.coords).norm() <= 0.75, "corner at {:?}", c.position);
        assert!(c.strength_deg >= 0.0 && c.strength_deg <= 10.0);
    }

    #[test]
    fn straight_wall_yields_no_corners() {
        let grid = build_ndt_grid(&wall_points(), 0.5).unwrap();
        assert!(detect_corners(&grid, 2).is_empty());
    }

    #[test]
    fn blob_cells_report_no_corners() {
        // A wall plus an isotropic point cluster nearby: the cluster's main
        // axis is meaningless, so it must not pair up with the wall cells.
        let mut pts: Vec<Point2> = (0..40).map(|i| Point2::new(0.05 * i as Real, 0.0)).collect();
        for (dx, dy) in [(0.08, 0.0), (-0.08, 0.0), (0.0, 0.08), (0.0, -0.08)] {
            pts.push(Point2::new(0.75 + dx, 0.75 + dy));
        }
        let grid = build_ndt_grid(&pts, 0.5).unwrap();
        let blob = grid.cell((1, 1)).expect("cluster cell occupied");
        assert!(!blob.is_line_like(), "ratio {}", blob.axis_ratio());
        assert!(detect_corners(&grid, 2).is_empty());
    }

    #[test]
    fn corner_next_to_gap_needs_wider_neighborhood() {
        // Both legs start one meter out from the corner: the corner cell and
        // the first cell of each leg are empty, so at neighborhood 1 no cell
        // pair spans the gap, while at neighborhood 2 the legs see each other.
        let grid = build_ndt_grid(&l_shape_points(1.0), 0.5).unwrap();
        assert!(grid.cell((0, 0)).is_none());
        assert!(grid.cell((1, 0)).is_none());
        assert!(grid.cell((0, 1)).is_none());
        assert!(detect_corners(&grid, 1).is_empty());
        let corners = detect_corners(&grid, 2);
        assert_eq!(corners.len(), 1);
        assert!((corners[0].position.coords).norm() <= 0.75);
    }

    #[test]
    fn candidate_rays_intersect_at_reported_position() {
        let grid = build_ndt_grid(&l_shape_points(0.0), 0.5).unwrap();
        let candidates = detect_corner_candidates(&grid, 2);
        assert!(!candidates.is_empty());
        for cand in &candidates {
            let (ia, ib) = cand.cells;
            let ca = grid.cell(ia).unwrap();
            let cb = grid.cell(ib).unwrap();
            // Both axis lines must pass through the reported intersection.
            for (cell, axis) in [(ca, ca.main_axis()), (cb, cb.main_axis())] {
                let d = cand.position.coords - cell.mean.coords;
                let off_line = (d - d.dot(&axis) * axis).norm();
                assert!(off_line < 1e-9, "ray misses intersection by {off_line}");
            }
        }
    }

    #[test]
    fn larger_neighborhood_keeps_existing_corners() {
        let grid = build_ndt_grid(&l_shape_points(0.0), 0.5).unwrap();
        for n in 2..=4usize {
            let smaller = detect_corners(&grid, n - 1);
            let larger = detect_corners(&grid, n);
            for c in &smaller {
                let best = larger
                    .iter()
                    .map(|d| (d.position - c.position).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    best <= grid.cell_size(),
                    "corner {:?} from neighborhood {} lost at {}",
                    c.position,
                    n - 1,
                    n
                );
            }
        }
    }

    #[test]
    fn parse_xy_points_round_trip_and_errors() {
        let pts = parse_xy_points("# comment\n1.5 2.5\n\n-3 4e-2\n").unwrap();
        assert_eq!(pts.len(), 2);
        assert_relative_eq!(pts[1].y, 0.04);
        let err = parse_xy_points("1.0 2.0\noops").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    proptest! {
        // Regularization must keep every stored covariance well conditioned
        // and positive definite for arbitrary point clouds.
        #[test]
        fn covariances_stay_well_conditioned(
            seed in 0u64..1000,
            n_points in 3usize..120,
            cell in 0.1..2.0f64,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point2> = (0..n_points)
                .map(|_| {
                    // Mix of clustered and collinear points.
                    let x: f64 = rng.gen_range(-2.0..2.0);
                    let y = if seed % 2 == 0 { 0.3 * x } else { rng.gen_range(-2.0..2.0) };
                    Point2::new(x, y)
                })
                .collect();
            let grid = build_ndt_grid(&pts, cell).unwrap();
            for (_, c) in grid.cells() {
                let ((l1, _), (l2, _)) = c.cov.eigen();
                prop_assert!(l2 > 0.0);
                prop_assert!(l1 / l2 <= MAX_CONDITION_NUMBER * (1.0 + 1e-9));
            }
        }

        // Corner strength is bounded by the accepted angle window.
        #[test]
        fn corner_strength_is_bounded(gap in 0.0..1.2f64) {
            let grid = build_ndt_grid(&l_shape_points(gap), 0.5).unwrap();
            for c in detect_corners(&grid, 2) {
                prop_assert!(c.strength_deg >= 0.0 && c.strength_deg <= 10.0);
            }
        }
    }
}
