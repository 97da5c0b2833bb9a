use nalgebra::SymmetricEigen;

#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::{magnetic_moment, SpinState};
use crate::field::trap::magnitude_hessian;
use crate::field::MagneticField;
use crate::{Error, Result, Vec3};

/// Ioffe-Pritchard parameters: bottom field `b0` (T), radial gradient
/// `gradient` (T/m) and axial curvature `curvature` (T/m²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpTrapParams {
    pub b0: f64,
    pub gradient: f64,
    pub curvature: f64,
}

impl IpTrapParams {
    pub fn new(b0: f64, gradient: f64, curvature: f64) -> Result<Self> {
        if !(b0 >= 0.0 && gradient >= 0.0 && curvature.is_finite() && b0.is_finite() && gradient.is_finite()) {
            return Err(Error::invalid(
                "Ioffe-Pritchard parameters must be finite, B0 and B' non-negative",
            ));
        }
        Ok(Self {
            b0,
            gradient,
            curvature,
        })
    }

    /// Harmonic `(ω_radial, ω_axial)` for `state`.
    pub fn frequencies(&self, state: &SpinState) -> Result<(f64, f64)> {
        let mu = magnetic_moment(state);
        if mu <= 0.0 {
            return Err(Error::NotTrappable { moment: mu });
        }
        if self.b0 <= 0.0 {
            return Err(Error::domain("radial frequency needs B0 > 0"));
        }
        let m = state.mass();
        let radial = mu * (self.gradient * self.gradient / self.b0 - 0.5 * self.curvature) / m;
        let axial = mu * self.curvature / m;
        Ok((radial.max(0.0).sqrt(), axial.max(0.0).sqrt()))
    }
}

/// Radial gradient giving radial frequency `omega` at bottom field `b0`.
pub fn gradient_from_frequency(omega: f64, b0: f64, curvature: f64, state: &SpinState) -> Result<f64> {
    let mu = magnetic_moment(state);
    if mu <= 0.0 {
        return Err(Error::NotTrappable { moment: mu });
    }
    let g2 = b0 * (state.mass() * omega * omega / mu + 0.5 * curvature);
    if !(g2 >= 0.0) {
        return Err(Error::domain("no real gradient for this frequency"));
    }
    Ok(g2.sqrt())
}

/// Analytic Ioffe-Pritchard field, exact to second order and divergence
/// and curl free everywhere.
///
/// In the local frame (u, v, w) with w the trap axis:
/// `B = B0 ŵ + B'(u û − v v̂) + (B''/2)(−uw û − vw v̂ + (w² − (u²+v²)/2) ŵ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoffePritchardField {
    pub params: IpTrapParams,
    pub center: Vec3,
    frame: [Vec3; 3],
}

impl IoffePritchardField {
    /// Centred at the origin with axis along z.
    pub fn new(params: IpTrapParams) -> Self {
        Self {
            params,
            center: Vec3::zeros(),
            frame: [Vec3::x(), Vec3::y(), Vec3::z()],
        }
    }

    /// Place the trap at `center` with axis `axis` and first radial
    /// direction as close to `radial` as orthogonality allows.
    pub fn with_frame(mut self, center: Vec3, radial: Vec3, axis: Vec3) -> Result<Self> {
        let w = axis.try_normalize(0.0).ok_or_else(|| Error::invalid("zero axis"))?;
        let u = (radial - w * radial.dot(&w))
            .try_normalize(1e-12 * radial.norm())
            .ok_or_else(|| Error::invalid("radial direction parallel to axis"))?;
        self.center = center;
        self.frame = [u, w.cross(&u), w];
        Ok(self)
    }

    /// (û, v̂, ŵ).
    pub fn frame(&self) -> [Vec3; 3] {
        self.frame
    }
}

impl MagneticField for IoffePritchardField {
    fn field(&self, r: Vec3) -> Result<Vec3> {
        let d = r - self.center;
        let [eu, ev, ew] = self.frame;
        let (u, v, w) = (d.dot(&eu), d.dot(&ev), d.dot(&ew));
        let p = self.params;
        let c = 0.5 * p.curvature;
        let bu = p.gradient * u - c * u * w;
        let bv = -p.gradient * v - c * v * w;
        let bw = p.b0 + c * (w * w - 0.5 * (u * u + v * v));
        Ok(eu * bu + ev * bv + ew * bw)
    }

    fn length_scale(&self, _r: Vec3) -> f64 {
        let p = self.params;
        if p.b0 > 0.0 && p.gradient > 0.0 {
            p.b0 / p.gradient
        } else if p.b0 > 0.0 && p.curvature > 0.0 {
            (2.0 * p.b0 / p.curvature).sqrt()
        } else {
            1e-4
        }
    }
}

/// Local Ioffe-Pritchard description of a numerically computed minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpFit {
    pub params: IpTrapParams,
    pub center: Vec3,
    /// Two radial directions followed by the axis.
    pub axes: [Vec3; 3],
    /// Gradients fitted separately along the two radial directions.
    pub radial_gradients: [f64; 2],
    /// RMS of the |B| fit residual relative to B0.
    pub residual: f64,
    pub poor_fit: bool,
    /// False when the radial gradient vanishes.
    pub radially_trapping: bool,
    pub axially_trapping: bool,
}

/// Relative residual above which an IP fit is flagged as poor.
pub const POOR_FIT_THRESHOLD: f64 = 0.01;
const FIT_POINTS: usize = 41;

/// Fit `|B|² = B0² + B'² s²` along each radial eigen-direction of the
/// |B| Hessian at `r0` over `|s| ≤ 0.2 B0/B'`. The axis is the eigen-direction
/// closest to the bottom field and `B''` is the curvature along it.
pub fn ip_fit<F: MagneticField + ?Sized>(field: &F, r0: Vec3) -> Result<IpFit> {
    let b0 = field.magnitude(r0)?;
    let hess = magnitude_hessian(field, r0)?;
    let eig = SymmetricEigen::new(hess);
    let b_hat = field.field(r0)?.normalize();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let pa = eig.eigenvectors.column(a).dot(&b_hat).abs();
        let pb = eig.eigenvectors.column(b).dot(&b_hat).abs();
        pb.total_cmp(&pa)
    });
    let axial_idx = order[0];
    let curvature = eig.eigenvalues[axial_idx];
    let axis: Vec3 = eig.eigenvectors.column(axial_idx).into();
    let radial: [Vec3; 2] = [
        eig.eigenvectors.column(order[1]).into(),
        eig.eigenvectors.column(order[2]).into(),
    ];

    let noise = 1e-6 * b0 * eig.eigenvalues.amax();
    let mut gradients = [0.0; 2];
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    for (k, dir) in radial.iter().enumerate() {
        let kappa = eig.eigenvalues[order[k + 1]];
        // |B|'' = B'²/B0 − B''/2 on the radial axes
        let g2_est = b0 * (kappa + 0.5 * curvature);
        if !(g2_est > noise) {
            continue;
        }
        let s_max = 0.2 * b0 / g2_est.sqrt();
        let mut xs = [0.0; FIT_POINTS];
        let mut ys = [0.0; FIT_POINTS];
        for i in 0..FIT_POINTS {
            let s = -s_max + 2.0 * s_max * i as f64 / (FIT_POINTS - 1) as f64;
            let b = field.magnitude(r0 + dir * s)?;
            xs[i] = s * s;
            ys[i] = b * b;
        }
        let n = FIT_POINTS as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        for i in 0..FIT_POINTS {
            let model = (intercept + slope * xs[i]).max(0.0).sqrt();
            let d = model - ys[i].sqrt();
            sq_sum += d * d;
            count += 1;
        }
        // the analytic model adds −B0 B''/2 to the s² coefficient
        let g2 = slope + 0.5 * b0 * curvature;
        gradients[k] = if g2 > noise { g2.sqrt() } else { 0.0 };
    }
    let radially_trapping = gradients.iter().all(|&g| g > 0.0);
    let gradient = if radially_trapping {
        0.5 * (gradients[0] + gradients[1])
    } else {
        0.0
    };
    let residual = if count > 0 {
        (sq_sum / count as f64).sqrt() / b0
    } else {
        0.0
    };
    Ok(IpFit {
        params: IpTrapParams {
            b0,
            gradient,
            curvature,
        },
        center: r0,
        axes: [radial[0], radial[1], axis],
        radial_gradients: gradients,
        residual,
        poor_fit: residual > POOR_FIT_THRESHOLD,
        radially_trapping,
        axially_trapping: curvature > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{k40_stretched, rb87_stretched};
    use crate::field::field_jacobian;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn rb_params() -> IpTrapParams {
        let rb = rb87_stretched();
        let b0 = 1.214e-4;
        let m = rb.mass();
        let mu = magnetic_moment(&rb);
        let curvature = m * (2.0 * PI * 13.7f64).powi(2) / mu;
        let gradient = gradient_from_frequency(2.0 * PI * 1230.0, b0, curvature, &rb).unwrap();
        IpTrapParams::new(b0, gradient, curvature).unwrap()
    }

    #[test]
    fn gradient_inversion() {
        let p = rb_params();
        // 0.106 G/μm
        assert!((p.gradient * 1e4 / 1e6 - 0.1062).abs() < 5e-4);
        let (wr, wa) = p.frequencies(&rb87_stretched()).unwrap();
        assert_relative_eq!(wr, 2.0 * PI * 1230.0, max_relative = 1e-12);
        assert_relative_eq!(wa, 2.0 * PI * 13.7, max_relative = 1e-12);
    }

    #[test]
    fn field_on_axes() {
        let p = IpTrapParams::new(1e-4, 10.0, 50.0).unwrap();
        let f = IoffePritchardField::new(p);
        assert_eq!(f.field(Vec3::zeros()).unwrap(), Vec3::new(0.0, 0.0, 1e-4));
        let w = 1e-4;
        assert_relative_eq!(
            f.magnitude(Vec3::new(0.0, 0.0, w)).unwrap(),
            1e-4 + 25.0 * w * w,
            max_relative = 1e-14
        );
        let u = 3e-6;
        let b = f.field(Vec3::new(u, 0.0, 0.0)).unwrap();
        assert_relative_eq!(b[0], 10.0 * u, max_relative = 1e-14);
    }

    #[test]
    fn analytic_field_is_maxwellian() {
        let f = IoffePritchardField::new(rb_params())
            .with_frame(
                Vec3::new(1e-5, -2e-5, 3e-6),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 0.3, 1.0),
            )
            .unwrap();
        for r in [Vec3::new(1e-5, 2e-5, -3e-5), Vec3::new(-4e-6, 1e-6, 8e-5)] {
            let j = field_jacobian(&f, r, 1e-7).unwrap();
            let s = j.norm();
            assert!(j.trace().abs() < 1e-9 * s);
            assert!((j - j.transpose()).norm() < 1e-9 * s);
        }
    }

    #[test]
    fn fit_recovers_parameters() {
        let p = IpTrapParams::new(2e-4, 8.0, 20.0).unwrap();
        let f = IoffePritchardField::new(p)
            .with_frame(Vec3::new(1e-4, 2e-4, 3e-4), Vec3::x(), Vec3::new(0.0, 1.0, 1.0))
            .unwrap();
        let fit = ip_fit(&f, f.center).unwrap();
        assert_relative_eq!(fit.params.b0, 2e-4, max_relative = 1e-12);
        assert_relative_eq!(fit.params.gradient, 8.0, max_relative = 1e-4);
        assert_relative_eq!(fit.params.curvature, 20.0, max_relative = 1e-3);
        assert!(fit.axes[2].dot(&Vec3::new(0.0, 1.0, 1.0).normalize()).abs() > 1.0 - 1e-6);
        assert!(!fit.poor_fit && fit.radially_trapping && fit.axially_trapping);
        assert!(fit.residual < 1e-4);
    }

    #[test]
    fn fit_flags_missing_gradient() {
        let p = IpTrapParams::new(1e-4, 0.0, 30.0).unwrap();
        let fit = ip_fit(&IoffePritchardField::new(p), Vec3::zeros()).unwrap();
        assert!(!fit.radially_trapping);
        assert_eq!(fit.params.gradient, 0.0);
    }

    #[test]
    fn untrappable_state() {
        let k = k40_stretched().with_m_f(num_rational::Rational64::new(-1, 2)).unwrap();
        assert!(matches!(rb_params().frequencies(&k), Err(Error::NotTrappable { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fit_recovers_random_traps(b0 in 0.2e-4_f64..10e-4, g in 1.0_f64..50.0, c in 1.0_f64..500.0) {
            let p = IpTrapParams::new(b0, g, c).unwrap();
            prop_assume!(g * g / b0 > c);
            let fit = ip_fit(&IoffePritchardField::new(p), Vec3::zeros()).unwrap();
            prop_assert!((fit.params.gradient / g - 1.0).abs() < 1e-3);
            prop_assert!((fit.params.curvature / c - 1.0).abs() < 1e-2);
            prop_assert!((fit.params.b0 / b0 - 1.0).abs() < 1e-12);
        }
    }
}
