use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Matrix3, SymmetricEigen};

#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::{magnetic_moment, SpinState, K_B};
use crate::field::{fd_gradient, fd_hessian, potential_energy, MagneticField};
use crate::numerics::golden_section_min;
use crate::{Error, Result, Vec3};

/// Minima with |B| below this (T) are reported as field zeros.
pub const ZERO_FIELD_THRESHOLD: f64 = 1e-10;
/// Convergence target for |∇|B|| (T/m).
const GRADIENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMinimum {
    pub position: Vec3,
    /// |B| at the minimum (T).
    pub b0: f64,
    /// The minimum is a field zero (quadrupole-like, spin-flip losses).
    pub zero_field: bool,
    /// |∇|B|| at the returned point, or |∇|B|²| for a field zero.
    pub gradient_norm: f64,
    pub iterations: usize,
}

fn eigen_sorted(m: Matrix3<f64>) -> ([f64; 3], [Vec3; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.map(|i| eig.eigenvalues[i]);
    let vecs = idx.map(|i| Vec3::from(eig.eigenvectors.column(i)));
    (vals, vecs)
}

/// Newton direction with eigenvalues replaced by their moduli, so that it
/// always points downhill.
fn saddle_free_step(g: Vec3, h: Matrix3<f64>) -> Vec3 {
    let eig = SymmetricEigen::new(h);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let floor = if lmax > 0.0 { 1e-8 * lmax } else { 1.0 };
    let mut p = Vec3::zeros();
    for i in 0..3 {
        let v: Vec3 = eig.eigenvectors.column(i).into();
        p -= v * (v.dot(&g) / eig.eigenvalues[i].abs().max(floor));
    }
    p
}

/// Finite-difference step for |B| derivatives near a minimum: `1e-4·B0/B'`
/// floored at 10 nm, with `B0/B'` estimated from a trial Hessian.
fn hessian_step<F: MagneticField + ?Sized>(field: &F, r0: Vec3, b0: f64) -> Result<f64> {
    let h0 = (1e-4 * field.length_scale(r0)).max(1e-8);
    let mag = |r: Vec3| field.magnitude(r);
    let (vals, _) = eigen_sorted(fd_hessian(&mag, r0, h0)?);
    let kmax = vals[2];
    Ok(if kmax > 0.0 {
        (1e-4 * (b0 / kmax).sqrt()).max(1e-8)
    } else {
        h0
    })
}

pub(crate) fn magnitude_hessian<F: MagneticField + ?Sized>(field: &F, r0: Vec3) -> Result<Matrix3<f64>> {
    let b0 = field.magnitude(r0)?;
    if b0 < ZERO_FIELD_THRESHOLD {
        return Err(Error::domain("|B| is not differentiable at a field zero"));
    }
    let h = hessian_step(field, r0, b0)?;
    fd_hessian(&|r: Vec3| field.magnitude(r), r0, h)
}

/// Damped Newton polish of a smooth scalar `f` until `|∇f| < tol`.
fn newton_polish<F: Fn(Vec3) -> Result<f64>>(
    f: &F,
    x0: Vec3,
    h: f64,
    hg: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec3, f64, usize)> {
    let mut x = x0;
    let mut fx = f(x)?;
    let mut gnorm = f64::INFINITY;
    for it in 0..max_iter {
        let g = fd_gradient(f, x, hg)?;
        gnorm = g.norm();
        if gnorm < tol {
            return Ok((x, gnorm, it));
        }
        let p = saddle_free_step(g, fd_hessian(f, x, h)?);
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-10 {
            let xn = x + p * alpha;
            if let Ok(fn_) = f(xn) {
                if fn_ <= fx + 1e-15 * fx.abs() {
                    x = xn;
                    fx = fn_;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if gnorm < tol {
        Ok((x, gnorm, max_iter))
    } else {
        Err(Error::NonConvergence {
            what: "trap minimum",
            detail: format!("|grad| = {gnorm:e} at {x:?}"),
        })
    }
}

/// Local minimum of |B| near `seed`.
///
/// A saddle-free Newton descent on the smooth |B|² locates the basin (and
/// any field zero); for a nonzero bottom a Newton polish on |B| itself
/// drives the gradient below 1e-10 T/m. Saddles are rejected.
pub fn find_minimum<F: MagneticField + ?Sized>(field: &F, seed: Vec3) -> Result<FieldMinimum> {
    let sq = |r: Vec3| -> Result<f64> { Ok(field.field(r)?.norm_squared()) };
    let mut x = seed;
    let mut fx = sq(x)?;
    let mut iterations = 0;
    let mut g2norm = f64::INFINITY;
    let mut radius = 0.25 * field.length_scale(x);
    for it in 0..500 {
        iterations = it + 1;
        let ell = field.length_scale(x);
        let h = (1e-3 * ell).clamp(1e-9, 1e-6);
        let g = fd_gradient(&sq, x, h)?;
        g2norm = g.norm();
        let mut p = saddle_free_step(g, fd_hessian(&sq, x, h)?);
        let capped = p.norm() > radius;
        if capped {
            p *= radius / p.norm();
        }
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-8 {
            let xn = x + p * alpha;
            if let Ok(fn_) = sq(xn) {
                if fn_ < fx {
                    x = xn;
                    fx = fn_;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        let step = p.norm() * alpha;
        if moved && alpha == 1.0 && capped {
            radius *= 2.0;
        } else if moved && alpha < 1.0 {
            radius = step.max(1e-3 * ell);
        }
        if !moved || step < 1e-13 * ell || fx.sqrt() < 0.01 * ZERO_FIELD_THRESHOLD {
            break;
        }
    }
    let b = fx.sqrt();
    if b < ZERO_FIELD_THRESHOLD {
        return Ok(FieldMinimum {
            position: x,
            b0: b,
            zero_field: true,
            gradient_norm: g2norm,
            iterations,
        });
    }
    let h = hessian_step(field, x, b)?;
    let hg = (10.0 * h).clamp(1e-8, 1e-6);
    let mag = |r: Vec3| field.magnitude(r);
    let (x, gnorm, extra) = newton_polish(&mag, x, h, hg, GRADIENT_TOL, 100)?;
    let b0 = field.magnitude(x)?;
    if b0 < ZERO_FIELD_THRESHOLD {
        return Ok(FieldMinimum {
            position: x,
            b0,
            zero_field: true,
            gradient_norm: gnorm,
            iterations: iterations + extra,
        });
    }
    let (vals, _) = eigen_sorted(fd_hessian(&mag, x, h)?);
    if vals[0] < -1e-6 * vals[2].abs() {
        return Err(Error::Saddle { eigenvalues: vals });
    }
    Ok(FieldMinimum {
        position: x,
        b0,
        zero_field: false,
        gradient_norm: gnorm,
        iterations: iterations + extra,
    })
}

fn trapped_moment(state: &SpinState) -> Result<f64> {
    let mu = magnetic_moment(state);
    if mu > 0.0 {
        Ok(mu)
    } else {
        Err(Error::NotTrappable { moment: mu })
    }
}

/// Minimum of the full potential (including gravity when the field model
/// has it) for `state`, starting from the |B| minimum near `seed`.
pub fn find_potential_minimum<F: MagneticField + ?Sized>(
    field: &F,
    state: &SpinState,
    seed: Vec3,
) -> Result<FieldMinimum> {
    let mu = trapped_moment(state)?;
    let min = find_minimum(field, seed)?;
    if field.gravity().is_none() || min.zero_field {
        return Ok(min);
    }
    let mass = state.mass();
    // work in field units so the gradient tolerance keeps its meaning
    let u = |r: Vec3| Ok(potential_energy(field, mu, mass, r)? / mu);
    let h = hessian_step(field, min.position, min.b0)?;
    let hg = (10.0 * h).clamp(1e-8, 1e-6);
    let (x, gnorm, it) = newton_polish(&u, min.position, h, hg, GRADIENT_TOL, 100)?;
    Ok(FieldMinimum {
        position: x,
        b0: field.magnitude(x)?,
        zero_field: false,
        gradient_norm: gnorm,
        iterations: min.iterations + it,
    })
}

/// Normal-mode frequencies of a harmonic minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapFrequencies {
    /// Angular frequencies, ascending.
    pub omega: [f64; 3],
    /// Matching unit eigenvectors.
    pub axes: [Vec3; 3],
    /// Potential Hessian (J/m²).
    pub hessian: Matrix3<f64>,
}

impl TrapFrequencies {
    /// Frequencies reordered to the coordinate axis each mode is closest to.
    pub fn along_axes(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut used = [false; 3];
        for (axis, slot) in out.iter_mut().enumerate() {
            let best = (0..3)
                .filter(|&k| !used[k])
                .max_by(|&a, &b| self.axes[a][axis].abs().total_cmp(&self.axes[b][axis].abs()))
                .unwrap_or(axis);
            used[best] = true;
            *slot = self.omega[best];
        }
        out
    }

    pub fn geometric_mean(&self) -> f64 {
        (self.omega[0] * self.omega[1] * self.omega[2]).cbrt()
    }
}

/// Harmonic frequencies of `state` at the minimum `r0` from the
/// finite-difference Hessian of `m_F g_F μ_B |B|`.
pub fn trap_frequencies<F: MagneticField + ?Sized>(field: &F, state: &SpinState, r0: Vec3) -> Result<TrapFrequencies> {
    let mu = trapped_moment(state)?;
    let hessian = magnitude_hessian(field, r0)? * mu;
    let (vals, axes) = eigen_sorted(hessian);
    if vals[0] <= 0.0 {
        return Err(Error::NotATrap { eigenvalues: vals });
    }
    let m = state.mass();
    Ok(TrapFrequencies {
        omega: vals.map(|k| (k / m).sqrt()),
        axes,
        hessian,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapDepth {
    /// Lowest escape barrier above the trap bottom (J).
    pub depth: f64,
    /// `depth / k_B` (K).
    pub temperature: f64,
    /// Escape direction of the weakest ray.
    pub direction: Vec3,
    /// Location of the barrier along that ray.
    pub escape_point: Vec3,
    /// Rays along which the potential keeps rising to the search radius.
    pub unbounded: Vec<Vec3>,
    pub rays: usize,
}

const RAY_START: f64 = 5e-8;
const RAY_END: f64 = 5e-2;
const RAY_FACTOR: f64 = 1.03;

enum Ray {
    Bounded { barrier: f64, distance: f64 },
    Unbounded,
}

fn scan_ray<U: Fn(Vec3) -> Result<f64>, F: MagneticField + ?Sized>(
    field: &F,
    u: &U,
    r0: Vec3,
    u0: f64,
    dir: Vec3,
) -> Ray {
    let at = |s: f64| u(r0 + dir * s);
    // distance to the surface along the ray, if it is hit
    let s_surface = field.surface().and_then(|p| {
        let rate = dir.dot(&p.normal);
        (rate < 0.0).then(|| p.height(r0) / -rate)
    });
    let s_stop = s_surface.unwrap_or(f64::INFINITY).min(RAY_END);
    let mut samples: Vec<(f64, f64)> = alloc::vec![(0.0, u0)];
    let mut s = RAY_START;
    let mut terminated = s_surface.is_some_and(|sc| sc <= RAY_END);
    while s < s_stop {
        match at(s) {
            Ok(v) => samples.push((s, v)),
            Err(_) => {
                // ran into a conductor: everything beyond is inaccessible
                terminated = true;
                break;
            }
        }
        s *= RAY_FACTOR;
    }
    if s >= s_stop {
        match at(s_stop) {
            Ok(v) => samples.push((s_stop, v)),
            Err(_) => terminated = true,
        }
    }
    let (k_max, &(s_max, v_max)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("nonempty");
    if !terminated {
        let total = v_max - u0;
        let rise = match at(0.8 * RAY_END) {
            Ok(v) => samples.last().map_or(0.0, |l| l.1) - v,
            Err(_) => 0.0,
        };
        if rise > 0.01 * total {
            return Ray::Unbounded;
        }
    }
    if k_max == 0 {
        return Ray::Bounded {
            barrier: u0,
            distance: 0.0,
        };
    }
    if k_max + 1 < samples.len() {
        let (a, b) = (samples[k_max - 1].0, samples[k_max + 1].0);
        let (s_ref, neg) = golden_section_min(|s| at(s).map_or(f64::NEG_INFINITY, |v| -v), a, b, 1e-9 * b);
        if -neg > v_max {
            return Ray::Bounded {
                barrier: -neg,
                distance: s_ref,
            };
        }
    }
    Ray::Bounded {
        barrier: v_max,
        distance: s_max,
    }
}

fn perpendicular_basis(d: Vec3) -> (Vec3, Vec3) {
    let trial = if d[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (trial - d * trial.dot(&d)).normalize();
    (e1, d.cross(&e1))
}

/// Lowest escape barrier from the minimum `r0`.
///
/// The potential is sampled along rays (the 26 lattice directions plus the
/// Hessian eigen-directions) at geometrically growing distance from 50 nm to
/// 5 cm, stopping at the chip surface or a conductor. Rays still rising over
/// their last 20 % are reported as unbounded and skipped. The weakest ray is
/// then refined by a shrinking cone search.
pub fn trap_depth<F: MagneticField + ?Sized>(field: &F, state: &SpinState, r0: Vec3) -> Result<TrapDepth> {
    let mu = trapped_moment(state)?;
    let mass = state.mass();
    let u = |r: Vec3| potential_energy(field, mu, mass, r);
    let u0 = u(r0)?;

    let mut dirs: Vec<Vec3> = Vec::new();
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) != (0, 0, 0) {
                    dirs.push(Vec3::new(i as f64, j as f64, k as f64).normalize());
                }
            }
        }
    }
    if let Ok(h) = magnitude_hessian(field, r0) {
        let (_, axes) = eigen_sorted(h);
        for a in axes {
            dirs.push(a);
            dirs.push(-a);
        }
    }

    let mut best: Option<(f64, f64, Vec3)> = None;
    let mut unbounded = Vec::new();
    let mut rays = 0;
    let mut consider = |d: Vec3, best: &mut Option<(f64, f64, Vec3)>, unbounded: Option<&mut Vec<Vec3>>| {
        rays += 1;
        match scan_ray(field, &u, r0, u0, d) {
            Ray::Bounded { barrier, distance } => {
                if best.is_none_or(|b| barrier < b.0) {
                    *best = Some((barrier, distance, d));
                    return true;
                }
            }
            Ray::Unbounded => {
                if let Some(list) = unbounded {
                    list.push(d);
                }
            }
        }
        false
    };
    for &d in &dirs {
        consider(d, &mut best, Some(&mut unbounded));
    }
    if best.is_none() {
        return Err(Error::UnboundedDepth);
    }

    let mut angle = 0.2;
    let mut guard = 0;
    while angle > 2e-3 && guard < 80 {
        guard += 1;
        let center = best.expect("set").2;
        let (e1, e2) = perpendicular_basis(center);
        let mut improved = false;
        for k in 0..8 {
            let phi = core::f64::consts::PI * k as f64 / 4.0;
            let (sp, cp) = phi.sin_cos();
            let (st, ct) = angle.sin_cos();
            let d = (center * ct + (e1 * cp + e2 * sp) * st).normalize();
            improved |= consider(d, &mut best, None);
        }
        if !improved {
            angle *= 0.5;
        }
    }
    let (barrier, distance, direction) = best.expect("set");
    let depth = barrier - u0;
    Ok(TrapDepth {
        depth,
        temperature: depth / K_B,
        direction,
        escape_point: r0 + direction * distance,
        unbounded,
        rays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{k40_stretched, rb87_stretched, MU_0};
    use crate::field::{ip_fit, FieldModel, IoffePritchardField, IpTrapParams, SurfacePlane, WireSegment, ZTrapLayout};
    use approx::assert_relative_eq;
    use core::f64::consts::PI;
    use num_rational::Rational64;

    fn ip() -> IoffePritchardField {
        IoffePritchardField::new(IpTrapParams::new(1.214e-4, 10.62, 0.115).unwrap())
    }

    fn z_trap() -> FieldModel {
        ZTrapLayout {
            central_length: 2e-3,
            lead_length: 5e-3,
            current: 1.6,
            bias: Vec3::new(-16e-4, -2e-4, 0.0),
        }
        .build()
        .unwrap()
    }

    fn side_guide(d: f64) -> FieldModel {
        let wire = WireSegment::new(Vec3::new(0.0, -1e-2, 0.0), Vec3::new(0.0, 1e-2, 0.0), 2.0).unwrap();
        let b = MU_0 * 2.0 / (2.0 * PI * d);
        FieldModel::new(alloc::vec![wire], Vec3::new(-b, 0.0, 0.0))
            .with_surface(SurfacePlane::new(Vec3::zeros(), Vec3::z()))
    }

    #[test]
    fn ip_minimum_and_frequencies() {
        let f = ip();
        let min = find_minimum(&f, Vec3::new(3e-6, -2e-6, 40e-6)).unwrap();
        assert!(min.position.norm() < 1e-9, "{:?}", min.position);
        assert!(!min.zero_field);
        assert!(min.gradient_norm < 1e-10);
        assert_relative_eq!(min.b0, 1.214e-4, max_relative = 1e-12);
        let rb = rb87_stretched();
        let tf = trap_frequencies(&f, &rb, min.position).unwrap();
        let (wr, wa) = f.params.frequencies(&rb).unwrap();
        assert_relative_eq!(tf.omega[0], wa, max_relative = 1e-2);
        assert_relative_eq!(tf.omega[1], wr, max_relative = 1e-2);
        assert_relative_eq!(tf.omega[2], wr, max_relative = 1e-2);
        let ax = tf.along_axes();
        assert_relative_eq!(ax[2], wa, max_relative = 1e-2);
    }

    #[test]
    fn quadrupole_zero_is_flagged() {
        let d = 190e-6;
        let f = side_guide(d);
        let min = find_minimum(&f, Vec3::new(10e-6, 0.0, 150e-6)).unwrap();
        assert!(min.zero_field);
        assert!(f.magnitude(min.position).unwrap() < ZERO_FIELD_THRESHOLD);
        // finite wire length shifts the zero by ~d³/2l²
        assert!((min.position[2] - d).abs() < 1e-7);
        assert!(min.position[0].abs() < 1e-9);
    }

    #[test]
    fn side_guide_depth_is_bias_field() {
        let d = 190e-6;
        let f = side_guide(d);
        let min = find_minimum(&f, Vec3::new(0.0, 0.0, d)).unwrap();
        let depth = trap_depth(&f, &rb87_stretched(), min.position).unwrap();
        // 21.05 G bias: μ_B·B/k_B ≈ 1.41 mK
        let want = crate::constants::MU_B * f.bias.norm() / K_B;
        assert!(
            (depth.temperature / want - 1.0).abs() < 0.01,
            "{} vs {}",
            depth.temperature,
            want
        );
    }

    #[test]
    fn ip_analytic_depth_is_unbounded() {
        assert_eq!(
            trap_depth(&ip(), &rb87_stretched(), Vec3::zeros()),
            Err(Error::UnboundedDepth)
        );
    }

    #[test]
    fn saddle_rejected() {
        // negative curvature along the axis: the centre is a saddle of |B|
        let f = IoffePritchardField::new(IpTrapParams::new(1e-4, 10.0, -20.0).unwrap());
        assert!(matches!(find_minimum(&f, Vec3::zeros()), Err(Error::Saddle { .. })));
        // seeded off the saddle it slides down the axis to the field zero at w² = 2B0/|B''|
        let m = find_minimum(&f, Vec3::new(1e-7, 0.0, 1e-6)).unwrap();
        assert!(m.zero_field);
        assert_relative_eq!(m.position[2], (2.0 * 1e-4 / 20.0f64).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn z_trap_is_a_trap() {
        let f = z_trap();
        let min = find_minimum(&f, Vec3::new(0.0, 0.0, 200e-6)).unwrap();
        assert!(!min.zero_field);
        assert!(min.gradient_norm < 1e-10);
        let k = k40_stretched();
        let tf = trap_frequencies(&f, &k, min.position).unwrap();
        let ax = tf.along_axes();
        assert!(ax[1] < ax[0] && ax[1] < ax[2]);
        let fit = ip_fit(&f, min.position).unwrap();
        assert!(fit.axes[2][1].abs() > 0.99);
        let (wr, wa) = fit.params.frequencies(&k).unwrap();
        assert_relative_eq!(wa, ax[1], max_relative = 1e-3);
        assert_relative_eq!(wr, (ax[0] * ax[2]).sqrt(), max_relative = 2e-2);
        let depth = trap_depth(&f, &k, min.position).unwrap();
        assert!(depth.temperature > 0.0 && depth.temperature < 2e-3);
    }

    #[test]
    fn frequencies_scale_with_sqrt_moment() {
        let f = z_trap();
        let min = find_minimum(&f, Vec3::new(0.0, 0.0, 200e-6)).unwrap();
        let k = k40_stretched();
        let top = trap_frequencies(&f, &k, min.position).unwrap();
        for two_m in [1, 3, 5, 7] {
            let s = k.with_m_f(Rational64::new(two_m, 2)).unwrap();
            let tf = trap_frequencies(&f, &s, min.position).unwrap();
            let ratio = (two_m as f64 / 9.0).sqrt();
            for i in 0..3 {
                assert_relative_eq!(tf.omega[i], top.omega[i] * ratio, max_relative = 1e-9);
            }
        }
        assert!(matches!(
            trap_frequencies(&f, &k.with_m_f(Rational64::new(-1, 2)).unwrap(), min.position),
            Err(Error::NotTrappable { .. })
        ));
    }

    #[test]
    fn scaling_and_translation() {
        let f = z_trap();
        let k = k40_stretched();
        let min = find_minimum(&f, Vec3::new(0.0, 0.0, 200e-6)).unwrap();
        let base = trap_frequencies(&f, &k, min.position).unwrap();

        let doubled = f.scaled(2.0);
        let m2 = find_minimum(&doubled, min.position).unwrap();
        assert!((m2.position - min.position).norm() < 1e-9);
        assert_relative_eq!(m2.b0, 2.0 * min.b0, max_relative = 1e-9);
        let t2 = trap_frequencies(&doubled, &k, m2.position).unwrap();
        for i in 0..3 {
            assert_relative_eq!(t2.omega[i], base.omega[i] * 2f64.sqrt(), max_relative = 1e-4);
        }

        let shift = Vec3::new(1.3e-3, -0.4e-3, 2e-4);
        let moved = f.translated(shift);
        let m3 = find_minimum(&moved, min.position + shift).unwrap();
        assert!((m3.position - min.position - shift).norm() < 1e-9);
        let t3 = trap_frequencies(&moved, &k, m3.position).unwrap();
        for i in 0..3 {
            assert_relative_eq!(t3.omega[i], base.omega[i], max_relative = 1e-4);
        }
    }

    #[test]
    fn axial_bias_raises_bottom() {
        let f = z_trap();
        let min = find_minimum(&f, Vec3::new(0.0, 0.0, 200e-6)).unwrap();
        let mut g = f.clone();
        g.bias[1] -= 1e-5;
        let m = find_minimum(&g, min.position).unwrap();
        assert_relative_eq!(m.b0 - min.b0, 1e-5, max_relative = 1e-3);
    }

    #[test]
    fn bottom_tuned_by_axial_bias() {
        let mut f = z_trap();
        let min = find_minimum(&f, Vec3::new(0.0, 0.0, 200e-6)).unwrap();
        let wires_y = f.field(min.position).unwrap()[1] - f.bias[1];
        let base = -1.214e-4 - wires_y;
        let bottom = |by: f64| {
            let mut g = f.clone();
            g.bias[1] = by;
            find_minimum(&g, min.position).unwrap().b0
        };
        let by = crate::numerics::brent(|by| bottom(by) - 1.214e-4, base, base + 5e-6, 1e-14, 1e-12, 100).unwrap();
        f.bias[1] = by;
        let tuned = find_minimum(&f, min.position).unwrap();
        // 0.1 mG
        assert!((tuned.b0 - 1.214e-4).abs() < 1e-8, "{}", tuned.b0);
    }

    #[test]
    fn gravity_sags_the_minimum() {
        let f = z_trap();
        let k = k40_stretched();
        let no_g = find_potential_minimum(&f, &k, Vec3::new(0.0, 0.0, 200e-6)).unwrap();
        let with_g = f.clone().with_gravity(-Vec3::z());
        let m = find_potential_minimum(&with_g, &k, no_g.position).unwrap();
        let tf = trap_frequencies(&f, &k, no_g.position).unwrap().along_axes();
        let sag = crate::constants::G_STANDARD / (tf[2] * tf[2]);
        assert_relative_eq!(no_g.position[2] - m.position[2], sag, max_relative = 0.05);
    }
}
