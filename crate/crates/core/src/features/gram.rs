//! Pose Gram matrices and the Bures-type distance between PSD matrices.
//!
//! For a pose with centered joint matrix `J` (n × 3), `G = J Jᵀ`. Two routes
//! give the same squared distance
//! `d² = tr G₁ + tr G₂ − 2 tr (G₁^{1/2} G₂ G₁^{1/2})^{1/2}`:
//! [`psd_distance`] works on the matrices through symmetric
//! eigendecompositions and rank-truncated factors, while [`gram_cost`] uses the factors, where the last
//! trace is the nuclear norm of the 3 × 3 matrix `J₁ᵀ J₂`.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dp::CostOracle;
use crate::error::{Error, Result};
use crate::motion::Motion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSequence {
    /// `G_t = J_t J_tᵀ`, one per frame.
    pub matrices: Vec<DMatrix<f64>>,
    /// Centered joint positions `J_t` (n × 3).
    pub factors: Vec<DMatrix<f64>>,
}

impl GramSequence {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

pub fn gram_sequence(m: &Motion, active_joints: &[usize]) -> Result<GramSequence> {
    if active_joints.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 active joints".into()));
    }
    if let Some(&j) = active_joints.iter().find(|&&j| j >= m.joint_count()) {
        return Err(Error::UnknownJoint(j.to_string()));
    }
    let n = active_joints.len();
    let mut matrices = Vec::with_capacity(m.frame_count());
    let mut factors = Vec::with_capacity(m.frame_count());
    for pose in m.poses() {
        let centroid = active_joints.iter().map(|&j| pose[j]).sum::<nalgebra::Vector3<f64>>() / n as f64;
        let j = DMatrix::from_fn(n, 3, |r, c| pose[active_joints[r]][c] - centroid[c]);
        matrices.push(&j * j.transpose());
        factors.push(j);
    }
    Ok(GramSequence { matrices, factors })
}

fn check_psd(name: &str, g: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !g.is_square() {
        return Err(Error::NotPsd(format!("{name} is not square")));
    }
    let scale = g.amax().max(1.0);
    let asym = (g - g.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(Error::NotPsd(format!("{name} is not symmetric (gap {asym:e})")));
    }
    let sym = 0.5 * (g + g.transpose());
    let eig = sym.symmetric_eigen();
    let norm = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if min < -1e-6 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd(format!("{name} has eigenvalue {min:e}")));
    }
    Ok(eig)
}

/// Bures-type distance between two PSD matrices of equal size.
pub fn psd_distance(g1: &DMatrix<f64>, g2: &DMatrix<f64>) -> Result<f64> {
    if g1.shape() != g2.shape() {
        return Err(Error::NotPsd(format!(
            "shapes {:?} and {:?} differ",
            g1.shape(),
            g2.shape()
        )));
    }
    let f1 = factor(&check_psd("first matrix", g1)?);
    let f2 = factor(&check_psd("second matrix", g2)?);
    let fidelity = if f1.ncols() == 0 || f2.ncols() == 0 {
        0.0
    } else {
        (f1.transpose() * f2).singular_values().sum()
    };
    let d2 = g1.trace() + g2.trace() - 2.0 * fidelity;
    Ok(d2.max(0.0).sqrt())
}

/// `F` with `G = F Fᵀ`, keeping eigenvalues above `RANK_TOL · λ_max`.
///
/// `tr (G₁^{1/2} G₂ G₁^{1/2})^{1/2}` is the nuclear norm of `F₁ᵀ F₂`; going
/// through singular values avoids square roots of eigenvalues at round-off
/// level, which rank-deficient Gram matrices always have.
fn factor(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> DMatrix<f64> {
    const RANK_TOL: f64 = 1e-12;
    let top = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] > RANK_TOL * top)
        .collect();
    let n = eig.eigenvectors.nrows();
    DMatrix::from_fn(n, keep.len(), |r, c| {
        let k = keep[c];
        eig.eigenvectors[(r, k)] * eig.eigenvalues[k].sqrt()
    })
}

fn cross_3x3(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    for r in 0..3 {
        for c in 0..3 {
            out[(r, c)] = a.column(r).dot(&b.column(c));
        }
    }
    out
}

/// Squared distance `d²(G_a(i), G_b(j))` from the Gram factors.
pub fn gram_cost(a: &GramSequence, b: &GramSequence) -> Result<CostOracle<'static>> {
    let n = a.factors.first().map(|f| f.nrows());
    if n.is_none() || b.factors.first().map(|f| f.nrows()) != n {
        return Err(Error::InvalidInput("Gram sequences use different joint sets".into()));
    }
    let traces_a: Vec<f64> = a.factors.iter().map(|j| j.norm_squared()).collect();
    let traces_b: Vec<f64> = b.factors.iter().map(|j| j.norm_squared()).collect();
    let fa = a.factors.clone();
    let fb = b.factors.clone();
    Ok(CostOracle::new(fa.len(), fb.len(), move |i, j| {
        let nuclear: f64 = cross_3x3(&fa[i], &fb[j]).singular_values().sum();
        (traces_a[i] + traces_b[j] - 2.0 * nuclear).max(0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{SkeletonTopology, Vec3};
    use std::sync::Arc;

    fn two_joint_motion(a: Vec3, b: Vec3) -> Motion {
        let topo = Arc::new(SkeletonTopology::unlinked(vec!["a".into(), "b".into()]).unwrap());
        Motion::new(topo, vec![0.0, 1.0], vec![vec![a, b], vec![a, b]]).unwrap()
    }

    #[test]
    fn coincident_joints_give_zero() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        let g = gram_sequence(&two_joint_motion(p, p), &[0, 1]).unwrap();
        assert_eq!(g.matrices[0], DMatrix::zeros(2, 2));
    }

    #[test]
    fn symmetric_pair() {
        let g = gram_sequence(
            &two_joint_motion(Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)),
            &[0, 1],
        )
        .unwrap();
        assert_eq!(g.matrices[0], DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert!(gram_sequence(&two_joint_motion(Vec3::x(), Vec3::y()), &[0]).is_err());
        assert!(gram_sequence(&two_joint_motion(Vec3::x(), Vec3::y()), &[0, 4]).is_err());
    }

    #[test]
    fn scalar_case() {
        let d = psd_distance(&DMatrix::from_element(1, 1, 4.0), &DMatrix::from_element(1, 1, 1.0))
            .unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_to_zero_is_root_trace() {
        let j = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 1.0, 0.0, -2.5, -1.0]);
        let g = &j * j.transpose();
        let d = psd_distance(&DMatrix::zeros(3, 3), &g).unwrap();
        assert!((d - g.trace().sqrt()).abs() < 1e-12);
        assert!(psd_distance(&g, &g).unwrap() < 1e-6);
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(psd_distance(&asym, &DMatrix::identity(2, 2)).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(psd_distance(&neg, &DMatrix::identity(2, 2)).is_err());
        assert!(psd_distance(&DMatrix::identity(3, 3), &DMatrix::identity(2, 2)).is_err());
    }
}
