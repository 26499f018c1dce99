//! Crystallography presets and published reference values.

use crate::error::Result;
use crate::model::{BurgersSet, GbParams, Vec3};

/// Poisson ratio of aluminium.
pub const ALUMINIUM_NU: f64 = 0.347;
/// Core cutoff `r_g` in units of `b`.
pub const CORE_RADIUS: f64 = 0.85;
/// Default `ε/θ²`.
pub const DEFAULT_EPSILON_RATIO: f64 = 1.0 / 400.0;

/// The six `a/2⟨110⟩` Burgers vectors seen from a {111} plane, with
/// `x = [-110]`, `y = [-1-12]`, `z = [111]` and `b = 1`.
pub fn fcc111_vectors() -> Vec<Vec3> {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    vec![
        [1.0, 0.0, 0.0],
        [0.5, s3 / 2.0, 0.0],
        [0.5, -s3 / 2.0, 0.0],
        [0.0, s3 / 3.0, s6 / 3.0],
        [0.5, s3 / 6.0, -s6 / 3.0],
        [-0.5, s3 / 6.0, -s6 / 3.0],
    ]
}

/// Twist boundary parameters: `a = n = (0,0,1)`, aluminium elastic constants,
/// `ε = ratio·θ²`.
pub fn twist_params(theta: f64, epsilon_ratio: f64) -> Result<GbParams> {
    GbParams::new(
        theta,
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0],
        ALUMINIUM_NU,
        CORE_RADIUS,
        epsilon_ratio * theta * theta,
    )
}

/// All six {111} Burgers vectors with the default twist parameters.
pub fn preset_fcc111(theta: f64) -> Result<(BurgersSet, GbParams)> {
    Ok((BurgersSet::new(fcc111_vectors())?, twist_params(theta, DEFAULT_EPSILON_RATIO)?))
}

/// The three in-plane vectors `b₁, b₂, b₃` of the {111} set.
pub fn preset_fcc111_inplane(theta: f64) -> Result<(BurgersSet, GbParams)> {
    Ok((
        BurgersSet::new(fcc111_vectors()[..3].to_vec())?,
        twist_params(theta, DEFAULT_EPSILON_RATIO)?,
    ))
}

/// A published value together with where it comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub tolerance: f64,
    pub provenance: &'static str,
}

fn angle_key(theta_deg: f64) -> Option<usize> {
    [2.5, 3.75, 7.5].iter().position(|&a| (a - theta_deg).abs() < 1e-9)
}

/// Published ADMM density `‖u₁‖` of the {111} twist boundary.
pub fn admm_density_reference(theta_deg: f64) -> Option<Reference> {
    angle_key(theta_deg).map(|i| Reference {
        value: [0.0283, 0.0422, 0.0821][i],
        tolerance: [5e-4, 8e-4, 1.5e-3][i],
        provenance: "published ADMM density",
    })
}

/// Published penalty-method simulation density (informational).
pub fn penalty_density_reference(theta_deg: f64) -> Option<Reference> {
    angle_key(theta_deg).map(|i| Reference {
        value: [0.0291, 0.0436, 0.0873][i],
        tolerance: f64::NAN,
        provenance: "published penalty-method simulation",
    })
}

/// Theoretical density from the dislocation-network geometry (informational).
pub fn theoretical_density_reference(theta_deg: f64) -> Option<Reference> {
    angle_key(theta_deg).map(|i| Reference {
        value: [0.0282, 0.0424, 0.0847][i],
        tolerance: f64::NAN,
        provenance: "published theoretical density",
    })
}

/// Published `ε₀/θ²` of the three-family reduction, accepted within ±25%.
pub fn epsilon0_ratio_reference(theta_deg: f64) -> Option<Reference> {
    angle_key(theta_deg).map(|i| {
        let v = 1.0 / [400.0, 250.0, 92.0][i];
        Reference {
            value: v,
            tolerance: 0.25 * v,
            provenance: "published epsilon0 ratio",
        }
    })
}

/// Published spectral radius of the counterexample iteration matrix.
pub fn spectral_radius_reference(beta: f64) -> Option<Reference> {
    let value = if (beta - 1.0).abs() < 1e-12 {
        1.0278
    } else if (beta - 1.1).abs() < 1e-12 {
        0.9809
    } else {
        return None;
    };
    Some(Reference {
        value,
        tolerance: 1e-3,
        provenance: "published spectral radius",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::assemble_constraints;
    use crate::numkit::{matmul, Matrix};

    #[test]
    fn vectors_have_unit_length() {
        for v in fcc111_vectors() {
            assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() <= 1e-12);
        }
        let b4 = fcc111_vectors()[3];
        assert_eq!(b4, [0.0, 3f64.sqrt() / 3.0, 6f64.sqrt() / 3.0]);
    }

    #[test]
    fn preset_blocks_are_semi_orthogonal() {
        let (bs, p) = preset_fcc111(2.5f64.to_radians()).unwrap();
        let cs = assemble_constraints(&bs, &p);
        for j in 0..6 {
            let g = matmul(&cs.block(j).transpose(), cs.block(j)).unwrap();
            assert!(g.max_abs_diff(&Matrix::identity(2)) <= 1e-12);
        }
        assert_eq!(p.epsilon, p.theta * p.theta / 400.0);
    }

    #[test]
    fn reference_lookup() {
        assert_eq!(admm_density_reference(3.75).unwrap().value, 0.0422);
        assert!(admm_density_reference(5.0).is_none());
        assert_eq!(epsilon0_ratio_reference(7.5).unwrap().value, 1.0 / 92.0);
        assert_eq!(spectral_radius_reference(1.1).unwrap().value, 0.9809);
        assert!(spectral_radius_reference(2.0).is_none());
    }
}
