use nalgebra::{Matrix3, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcm::grid::Physics;

/// Constitutive data and volume loads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Material {
    Elastic {
        young: f64,
        poisson: f64,
        /// Force per volume, e.g. density times gravity.
        #[serde(default)]
        body_force: [f64; 3],
    },
    Diffusion {
        conductivity: f64,
        /// Heat supply per volume.
        #[serde(default)]
        source: f64,
    },
}

impl Material {
    pub fn elastic(young: f64, poisson: f64) -> Material {
        Material::Elastic {
            young,
            poisson,
            body_force: [0.0; 3],
        }
    }

    pub fn diffusion(conductivity: f64) -> Material {
        Material::Diffusion {
            conductivity,
            source: 0.0,
        }
    }

    pub fn physics(&self) -> Physics {
        match self {
            Material::Elastic { .. } => Physics::Elasticity3D,
            Material::Diffusion { .. } => Physics::Diffusion3D,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Material::Elastic { young, poisson, .. } => {
                if !(young > 0.0) || !(poisson > -1.0 && poisson < 0.5) {
                    return Err(Error::Config(format!("need E > 0 and -1 < nu < 0.5, got E={young} nu={poisson}")));
                }
            }
            Material::Diffusion { conductivity, .. } => {
                if !(conductivity > 0.0) {
                    return Err(Error::Config(format!("conductivity must be positive, got {conductivity}")));
                }
            }
        }
        Ok(())
    }

    /// Lamé parameters `(λ, μ)`.
    pub fn lame(&self) -> (f64, f64) {
        match *self {
            Material::Elastic { young: e, poisson: nu, .. } => {
                (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
            }
            Material::Diffusion { .. } => (0.0, 0.0),
        }
    }

    /// Stiffness scale used for penalty factors.
    pub fn modulus(&self) -> f64 {
        match *self {
            Material::Elastic { young, .. } => young,
            Material::Diffusion { conductivity, .. } => conductivity,
        }
    }

    /// Volume load per unknown component.
    pub fn volume_load(&self) -> Vec<f64> {
        match *self {
            Material::Elastic { body_force, .. } => body_force.to_vec(),
            Material::Diffusion { source, .. } => vec![source],
        }
    }

    /// Isotropic 6x6 matrix in Voigt order xx, yy, zz, yz, xz, xy with
    /// engineering shear strains.
    pub fn elasticity_matrix(&self) -> Matrix6<f64> {
        let (l, m) = self.lame();
        let mut c = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                c[(i, j)] = l;
            }
            c[(i, i)] += 2.0 * m;
            c[(i + 3, i + 3)] = m;
        }
        c
    }

    /// Stress tensor for a displacement gradient `grad[i][j] = ∂u_i/∂x_j`.
    pub fn stress(&self, grad: &Matrix3<f64>) -> Matrix3<f64> {
        let (l, m) = self.lame();
        let eps = 0.5 * (grad + grad.transpose());
        Matrix3::identity() * (l * eps.trace()) + eps * (2.0 * m)
    }
}

/// Von Mises equivalent of a symmetric stress tensor.
pub fn von_mises(s: &Matrix3<f64>) -> f64 {
    let v = Vector6::new(s[(0, 0)], s[(1, 1)], s[(2, 2)], s[(1, 2)], s[(0, 2)], s[(0, 1)]);
    (0.5 * ((v[0] - v[1]).powi(2) + (v[1] - v[2]).powi(2) + (v[2] - v[0]).powi(2))
        + 3.0 * (v[3] * v[3] + v[4] * v[4] + v[5] * v[5]))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elasticity_matrix_is_spd() {
        let c = Material::elastic(1e4, 0.3).elasticity_matrix();
        assert_eq!(c, c.transpose());
        assert!(c.cholesky().is_some());
    }

    #[test]
    fn stress_matches_voigt_product() {
        let mat = Material::elastic(210.0, 0.25);
        let g = Matrix3::new(0.1, 0.02, -0.03, 0.04, -0.05, 0.06, 0.01, 0.02, 0.07);
        let s = mat.stress(&g);
        let e = Vector6::new(g[(0, 0)], g[(1, 1)], g[(2, 2)], g[(1, 2)] + g[(2, 1)], g[(0, 2)] + g[(2, 0)], g[(0, 1)] + g[(1, 0)]);
        let sv = mat.elasticity_matrix() * e;
        let expect = [s[(0, 0)], s[(1, 1)], s[(2, 2)], s[(1, 2)], s[(0, 2)], s[(0, 1)]];
        for i in 0..6 {
            assert!((sv[i] - expect[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn uniaxial_von_mises() {
        let s = Matrix3::new(100.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!((von_mises(&s) - 100.0).abs() < 1e-12);
        assert_eq!(von_mises(&Matrix3::identity()), 0.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Material::elastic(-1.0, 0.3).validate().is_err());
        assert!(Material::elastic(1.0, 0.5).validate().is_err());
        assert!(Material::diffusion(0.0).validate().is_err());
        assert!(Material::elastic(1.0, 0.0).validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let m: Material = serde_json::from_str(r#"{"kind":"elastic","young":10000,"poisson":0.3}"#).unwrap();
        assert_eq!(m, Material::elastic(1e4, 0.3));
    }
}
