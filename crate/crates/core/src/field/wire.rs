use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::constants::{G_STANDARD, MU_0};
use crate::field::{MagneticField, SurfacePlane};
use crate::{Error, Result, Vec3};

/// Points closer than this to a wire are rejected.
pub const SINGULARITY_GUARD: f64 = 1e-6;

/// Thin straight conductor from `a` to `b` carrying `current` (A) along a→b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireSegment {
    pub a: Vec3,
    pub b: Vec3,
    pub current: f64,
}

impl WireSegment {
    pub fn new(a: Vec3, b: Vec3, current: f64) -> Result<Self> {
        if !((b - a).norm() > 0.0) {
            return Err(Error::invalid("wire segment endpoints coincide"));
        }
        Ok(Self { a, b, current })
    }

    /// Distance from `r` to the closest point of the segment.
    pub fn distance(&self, r: Vec3) -> f64 {
        let d = self.b - self.a;
        let s = ((r - self.a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        (r - (self.a + d * s)).norm()
    }

    /// Biot-Savart field of the finite segment.
    pub fn field(&self, r: Vec3) -> Result<Vec3> {
        let dist = self.distance(r);
        if dist < SINGULARITY_GUARD {
            return Err(Error::SingularField {
                distance: dist,
                guard: SINGULARITY_GUARD,
            });
        }
        let u = (self.b - self.a).normalize();
        let ra = r - self.a;
        let rb = r - self.b;
        let rho = ra - u * ra.dot(&u);
        let d2 = rho.norm_squared();
        if d2 == 0.0 {
            // on the axis beyond an end
            return Ok(Vec3::zeros());
        }
        let ends = ra.dot(&u) / ra.norm() - rb.dot(&u) / rb.norm();
        Ok(u.cross(&rho) * (MU_0 * self.current / (4.0 * PI * d2) * ends))
    }
}

/// Wire segments plus a uniform bias field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldModel {
    pub segments: Vec<WireSegment>,
    /// Uniform bias (T).
    pub bias: Vec3,
    /// Gravitational acceleration vector, `None` to ignore gravity.
    pub gravity: Option<Vec3>,
    pub surface: Option<SurfacePlane>,
}

impl FieldModel {
    pub fn new(segments: Vec<WireSegment>, bias: Vec3) -> Self {
        Self {
            segments,
            bias,
            gravity: None,
            surface: None,
        }
    }

    /// Enable standard gravity pointing along `down`.
    pub fn with_gravity(mut self, down: Vec3) -> Self {
        self.gravity = Some(down.normalize() * G_STANDARD);
        self
    }

    pub fn with_surface(mut self, surface: SurfacePlane) -> Self {
        self.surface = Some(surface);
        self
    }

    /// Same geometry with every current and the bias multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.current *= k;
        }
        out.bias *= k;
        out
    }

    /// Rigidly shifted copy.
    pub fn translated(&self, shift: Vec3) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.a += shift;
            s.b += shift;
        }
        if let Some(p) = &mut out.surface {
            p.point += shift;
        }
        out
    }

    /// Chained wire through `points` carrying one current.
    pub fn add_path(&mut self, points: &[Vec3], current: f64) -> Result<()> {
        for w in points.windows(2) {
            self.segments.push(WireSegment::new(w[0], w[1], current)?);
        }
        Ok(())
    }

    fn nearest_wire(&self, r: Vec3) -> f64 {
        self.segments
            .iter()
            .map(|s| s.distance(r))
            .fold(f64::INFINITY, f64::min)
    }
}

impl MagneticField for FieldModel {
    fn field(&self, r: Vec3) -> Result<Vec3> {
        let mut b = self.bias;
        for s in &self.segments {
            b += s.field(r)?;
        }
        Ok(b)
    }

    fn gravity(&self) -> Option<Vec3> {
        self.gravity
    }

    fn surface(&self) -> Option<SurfacePlane> {
        self.surface
    }

    fn length_scale(&self, r: Vec3) -> f64 {
        let d = self.nearest_wire(r);
        if d.is_finite() {
            d
        } else {
            1e-3
        }
    }
}

/// Z-shaped wire in the z = 0 plane: a central section along y with two
/// parallel leads along +x, plus a uniform bias.
///
/// Current enters at `(−lead, −L/2, 0)`, runs along y through the central
/// section and leaves towards `(+lead, +L/2, 0)`. Atoms sit above the chip
/// (z > 0) with the weak trap axis along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZTrapLayout {
    pub central_length: f64,
    pub lead_length: f64,
    pub current: f64,
    pub bias: Vec3,
}

impl ZTrapLayout {
    pub fn build(&self) -> Result<FieldModel> {
        let h = 0.5 * self.central_length;
        let mut model = FieldModel::new(Vec::new(), self.bias);
        model.add_path(
            &[
                Vec3::new(-self.lead_length, -h, 0.0),
                Vec3::new(0.0, -h, 0.0),
                Vec3::new(0.0, h, 0.0),
                Vec3::new(self.lead_length, h, 0.0),
            ],
            self.current,
        )?;
        model.surface = Some(SurfacePlane::new(Vec3::zeros(), Vec3::z()));
        Ok(model)
    }
}
