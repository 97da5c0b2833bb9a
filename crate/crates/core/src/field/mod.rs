//! Static magnetic fields of chip wires and the traps they form.
//!
//! Positions are in metres, fields in tesla. A trapped state sees the
//! potential `m_F g_F μ_B |B(r)|`, optionally plus gravity.

mod ioffe;
mod trap;
mod wire;

pub use ioffe::{gradient_from_frequency, ip_fit, IoffePritchardField, IpFit, IpTrapParams};
pub use trap::{
    find_minimum, find_potential_minimum, trap_depth, trap_frequencies, FieldMinimum, TrapDepth, TrapFrequencies,
    ZERO_FIELD_THRESHOLD,
};
pub use wire::{FieldModel, WireSegment, ZTrapLayout, SINGULARITY_GUARD};

use nalgebra::Matrix3;

use crate::{Result, Vec3};

/// Plane bounding the trapping region; atoms reaching it are lost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePlane {
    pub point: Vec3,
    /// Unit normal pointing into the vacuum side.
    pub normal: Vec3,
}

impl SurfacePlane {
    pub fn new(point: Vec3, normal: Vec3) -> Self {
        Self {
            point,
            normal: normal.normalize(),
        }
    }

    /// Signed height above the plane.
    pub fn height(&self, r: Vec3) -> f64 {
        (r - self.point).dot(&self.normal)
    }
}

pub trait MagneticField {
    fn field(&self, r: Vec3) -> Result<Vec3>;

    fn magnitude(&self, r: Vec3) -> Result<f64> {
        Ok(self.field(r)?.norm())
    }

    /// Gravitational acceleration vector, if gravity is switched on.
    fn gravity(&self) -> Option<Vec3> {
        None
    }

    fn surface(&self) -> Option<SurfacePlane> {
        None
    }

    /// Typical distance over which the field changes near `r`.
    fn length_scale(&self, _r: Vec3) -> f64 {
        1e-4
    }
}

impl<T: MagneticField + ?Sized> MagneticField for &T {
    fn field(&self, r: Vec3) -> Result<Vec3> {
        (**self).field(r)
    }
    fn gravity(&self) -> Option<Vec3> {
        (**self).gravity()
    }
    fn surface(&self) -> Option<SurfacePlane> {
        (**self).surface()
    }
    fn length_scale(&self, r: Vec3) -> f64 {
        (**self).length_scale(r)
    }
}

/// Potential energy `moment·|B| − M g·r` of a state in `field`.
pub fn potential_energy<F: MagneticField + ?Sized>(field: &F, moment: f64, mass: f64, r: Vec3) -> Result<f64> {
    let mut u = moment * field.magnitude(r)?;
    if let Some(g) = field.gravity() {
        u -= mass * g.dot(&r);
    }
    Ok(u)
}

pub(crate) fn unit(i: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[i] = 1.0;
    e
}

fn central_gradient<F: Fn(Vec3) -> Result<f64>>(f: &F, x: Vec3, h: f64) -> Result<Vec3> {
    let mut g = Vec3::zeros();
    for i in 0..3 {
        let e = unit(i) * h;
        g[i] = (f(x + e)? - f(x - e)?) / (2.0 * h);
    }
    Ok(g)
}

/// Central-difference gradient with one Richardson step.
pub fn fd_gradient<F: Fn(Vec3) -> Result<f64>>(f: &F, x: Vec3, h: f64) -> Result<Vec3> {
    let g1 = central_gradient(f, x, h)?;
    let g2 = central_gradient(f, x, 2.0 * h)?;
    Ok((g1 * 4.0 - g2) / 3.0)
}

fn central_hessian<F: Fn(Vec3) -> Result<f64>>(f: &F, x: Vec3, f0: f64, h: f64) -> Result<Matrix3<f64>> {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let ei = unit(i) * h;
        m[(i, i)] = (f(x + ei)? - 2.0 * f0 + f(x - ei)?) / (h * h);
        for j in 0..i {
            let ej = unit(j) * h;
            let v = (f(x + ei + ej)? - f(x + ei - ej)? - f(x - ei + ej)? + f(x - ei - ej)?) / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Central-difference Hessian with one Richardson step.
pub fn fd_hessian<F: Fn(Vec3) -> Result<f64>>(f: &F, x: Vec3, h: f64) -> Result<Matrix3<f64>> {
    let f0 = f(x)?;
    let h1 = central_hessian(f, x, f0, h)?;
    let h2 = central_hessian(f, x, f0, 2.0 * h)?;
    Ok((h1 * 4.0 - h2) / 3.0)
}

/// Jacobian `∂B_i/∂x_j` by Richardson-extrapolated central differences.
pub fn field_jacobian<F: MagneticField + ?Sized>(field: &F, r: Vec3, h: f64) -> Result<Matrix3<f64>> {
    let central = |h: f64| -> Result<Matrix3<f64>> {
        let mut m = Matrix3::zeros();
        for j in 0..3 {
            let e = unit(j) * h;
            let d = (field.field(r + e)? - field.field(r - e)?) / (2.0 * h);
            m.set_column(j, &d);
        }
        Ok(m)
    };
    Ok((central(h)? * 4.0 - central(2.0 * h)?) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_helpers_on_quadratic() {
        let f = |x: Vec3| Ok(x[0] * x[0] + 3.0 * x[0] * x[1] + 2.0 * x[2] * x[2] * x[2]);
        let x = Vec3::new(1.0, -2.0, 0.5);
        let g = fd_gradient(&f, x, 1e-3).unwrap();
        assert!((g - Vec3::new(2.0 - 6.0, 3.0, 1.5)).norm() < 1e-9);
        let h = fd_hessian(&f, x, 1e-3).unwrap();
        let want = Matrix3::new(2.0, 3.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 6.0);
        assert!((h - want).norm() < 1e-5);
    }

    #[test]
    fn surface_height() {
        let s = SurfacePlane::new(Vec3::zeros(), Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(s.height(Vec3::new(1.0, 1.0, 3.0)), 3.0);
        assert!(s.height(Vec3::new(0.0, 0.0, -1.0)) < 0.0);
    }
}
