//! Outcome metrics and the statistical toolkit behind the experiments:
//! success judgment against ground truth, RMSE summaries, and Welch's
//! unequal-variance t-test for comparing outcome populations.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::geometry::{Pose2, Real};
use crate::graph::{AcgGraph, PriorId};
use crate::sim::CorrespondenceOracle;

/// A run succeeds when every corresponded plan node lands within this many
/// meters of its true corner.
pub const DEFAULT_SUCCESS_TOLERANCE: Real = 1.0;

/// Summary of one experiment run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunOutcome {
    /// Percentage of link edges that are outliers (0–100).
    pub outlier_pct: Real,
    pub success: bool,
    /// RMSE of optimized plan nodes against their true corners, meters.
    pub prior_rmse: Real,
    /// RMSE of optimized pose translations against the true trajectory.
    pub pose_rmse: Real,
}

impl RunOutcome {
    /// The outcome recorded when a run errors out: metrics are NaN and the
    /// run counts as a failure.
    pub fn failed() -> RunOutcome {
        RunOutcome {
            outlier_pct: Real::NAN,
            success: false,
            prior_rmse: Real::NAN,
            pose_rmse: Real::NAN,
        }
    }
}

/// Root-mean-square of a sample. Empty input is the caller's bug.
pub fn rmse(errors: &[Real]) -> Real {
    assert!(!errors.is_empty(), "rmse of an empty sample");
    (errors.iter().map(|e| e * e).sum::<Real>() / errors.len() as Real).sqrt()
}

fn corresponded_errors(graph: &AcgGraph, oracle: &CorrespondenceOracle) -> Result<Vec<Real>> {
    let errors: Vec<Real> = graph
        .priors
        .iter()
        .enumerate()
        .filter_map(|(i, node)| {
            let corner = oracle.prior_corner(PriorId(i))?;
            Some((node - oracle.true_corners[corner]).norm())
        })
        .collect();
    if errors.is_empty() {
        return Err(Error::invalid("no plan node corresponds to a true corner"));
    }
    Ok(errors)
}

/// RMSE of the corresponded plan nodes against their true corners.
pub fn prior_rmse(graph: &AcgGraph, oracle: &CorrespondenceOracle) -> Result<Real> {
    Ok(rmse(&corresponded_errors(graph, oracle)?))
}

/// RMSE of optimized pose translations against the true trajectory; the
/// graph must hold exactly one pose per trajectory entry.
pub fn pose_rmse(graph: &AcgGraph, true_poses: &[Pose2]) -> Result<Real> {
    if graph.poses.len() != true_poses.len() {
        return Err(Error::invalid(format!(
            "{} poses in the graph but {} in the trajectory",
            graph.poses.len(),
            true_poses.len()
        )));
    }
    if true_poses.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    let errors: Vec<Real> = graph
        .poses
        .iter()
        .zip(true_poses)
        .map(|(v, t)| (v.pose.translation() - t.translation()).norm())
        .collect();
    Ok(rmse(&errors))
}

/// True when every corresponded plan node sits within `tolerance` meters of
/// its true corner. Monotone in the tolerance by construction.
pub fn judge_success(graph: &AcgGraph, oracle: &CorrespondenceOracle, tolerance: Real) -> Result<bool> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tolerance}")));
    }
    Ok(corresponded_errors(graph, oracle)?.iter().all(|e| *e <= tolerance))
}

fn mean_and_var(sample: &[Real]) -> (Real, Real) {
    let n = sample.len() as Real;
    let mean = sample.iter().sum::<Real>() / n;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<Real>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test. Returns `(t, p)` where `t < 0` when
/// `mean(a) < mean(b)` and `p` is the one-tailed probability of observing a
/// difference at least this negative under the no-difference hypothesis
/// (small `p` supports `mean(a) < mean(b)`). Degrees of freedom follow
/// Welch–Satterthwaite. Samples need at least two values each and at least
/// one of them nonzero variance; two identical constant samples yield
/// `(0, 0.5)`.
pub fn welch_t(a: &[Real], b: &[Real]) -> Result<(Real, Real)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(format!(
            "welch t-test needs at least two values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::invalid("welch t-test samples must be finite"));
    }
    let (ma, va) = mean_and_var(a);
    let (mb, vb) = mean_and_var(b);
    let (na, nb) = (a.len() as Real, b.len() as Real);
    let sa = va / na;
    let sb = vb / nb;
    if sa + sb == 0.0 {
        if ma == mb {
            return Ok((0.0, 0.5));
        }
        return Err(Error::invalid("both samples have zero variance but different means"));
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(format!("t-distribution: {e}")))?;
    Ok((t, dist.cdf(t)))
}
