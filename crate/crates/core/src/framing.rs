//! Normal frames along sampled curves: twist, total phase, gauge-invariant twist.

use crate::curve_core::{sample_curve, CurveSamples, INFLEXION_TOL};
use crate::error::{GeomError, Result};
use crate::spectral;
use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Largest grid the phase unwrapping may refine to.
pub const PHASE_M_MAX: usize = 1 << 18;
/// Overlaps below this are exact zeros (antipodal tangents) and skipped.
pub const OVERLAP_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Frenet,
    Parallel,
    Custom,
}

/// Rotation angle eta(t) about the tangent.
#[derive(Clone)]
pub struct Gauge {
    eta: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Gauge")
    }
}

impl Gauge {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(eta: F) -> Self {
        Self { eta: Arc::new(eta) }
    }

    /// eta(t) = 2 pi w t / P.
    pub fn linear_winding(w: f64, period: f64) -> Self {
        Self::new(move |t| 2.0 * PI * w * t / period)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eta)(t)
    }
}

#[derive(Debug, Clone)]
enum Recipe {
    Frenet,
    Parallel(Vector3<f64>),
    Gauge(Box<Recipe>, Gauge),
    Fixed,
}

/// Orthonormal (U, V = T x U) along a sampled closed curve.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub samples: Arc<CurveSamples>,
    pub u: Vec<Vector3<f64>>,
    pub v: Vec<Vector3<f64>>,
    /// dU/dt at each node.
    pub du: Vec<Vector3<f64>>,
    /// U and V at t = period.
    pub u_end: Vector3<f64>,
    pub v_end: Vector3<f64>,
    pub kind: FrameKind,
    /// Rotation of (U, V) at t = period relative to t = 0 about T(0).
    pub closure_angle: f64,
    recipe: Recipe,
}

impl FrameField {
    pub fn m(&self) -> usize {
        self.samples.m
    }

    /// True when the frame at t = period coincides with the frame at 0.
    pub fn is_closed(&self, tol: f64) -> bool {
        self.closure_angle.abs() < tol
    }

    /// dV/dt = T' x U + T x U'.
    pub fn dv(&self, k: usize) -> Vector3<f64> {
        let s = &self.samples;
        s.tangent_rate(k).cross(&self.u[k]) + s.tangent(k).cross(&self.du[k])
    }

    /// The same construction on a grid of size `m`.
    pub fn resampled(&self, m: usize) -> Result<FrameField> {
        if let Recipe::Fixed = self.recipe {
            return Err(GeomError::InvalidInput("a frame given by raw vectors cannot be resampled".into()));
        }
        let s = sample_curve(&self.samples.spec, m)?;
        build(&s, &self.recipe)
    }

    fn finish(samples: Arc<CurveSamples>, u: Vec<Vector3<f64>>, du: Vec<Vector3<f64>>, u_end: Vector3<f64>, kind: FrameKind, recipe: Recipe) -> Self {
        let v: Vec<_> = (0..samples.m).map(|k| samples.tangent(k).cross(&u[k])).collect();
        let t0 = samples.tangent(0);
        let v_end = t0.cross(&u_end);
        let closure_angle = u_end.dot(&v[0]).atan2(u_end.dot(&u[0]));
        Self { samples, u, v, du, u_end, v_end, kind, closure_angle, recipe }
    }
}

fn build(s: &CurveSamples, recipe: &Recipe) -> Result<FrameField> {
    match recipe {
        Recipe::Frenet => frenet_frame(s),
        Recipe::Parallel(u0) => Ok(parallel_transport_frame(s, *u0)),
        Recipe::Gauge(base, eta) => Ok(gauge_rotate(&build(s, base)?, eta)),
        Recipe::Fixed => unreachable!(),
    }
}

/// U = N, V = B.
pub fn frenet_frame(samples: &CurveSamples) -> Result<FrameField> {
    let m = samples.m;
    let mut u = Vec::with_capacity(m);
    let mut du = Vec::with_capacity(m);
    for k in 0..m {
        let c = samples.r1[k].cross(&samples.r2[k]);
        if samples.kappa[k] < INFLEXION_TOL {
            return Err(GeomError::InflexionPoint { t: samples.t[k], norm: c.norm() });
        }
        let t = samples.tangent(k);
        let b = c / c.norm();
        let n = b.cross(&t);
        u.push(n);
        // N' = v (-kappa T + tau B)
        du.push((b * samples.tau[k] - t * samples.kappa[k]) * samples.v[k]);
    }
    let end = samples.spec.jet(samples.period());
    let c = end[1].cross(&end[2]);
    let n_end = (c / c.norm()).cross(&end[1].normalize());
    Ok(FrameField::finish(Arc::new(samples.clone()), u, du, n_end, FrameKind::Frenet, Recipe::Frenet))
}

/// Angular velocity of the tangent, r' x r'' / |r'|^2.
fn omega(r1: &Vector3<f64>, r2: &Vector3<f64>) -> Vector3<f64> {
    r1.cross(r2) / r1.norm_squared()
}

/// A unit vector normal to `t`.
pub fn any_normal(t: &Vector3<f64>) -> Vector3<f64> {
    let a = if t.x.abs() < 0.6 { Vector3::x() } else { Vector3::y() };
    (a - t * t.dot(&a)).normalize()
}

/// Apply the smallest rotation taking unit `a` to unit `b` to `x`.
fn minimal_rotation(a: &Vector3<f64>, b: &Vector3<f64>, x: &Vector3<f64>) -> Vector3<f64> {
    let k = a.cross(b);
    let c = a.dot(b);
    let kx = k.cross(x);
    x + kx + k.cross(&kx) / (1.0 + c)
}

/// Rotation-minimizing frame started from `u0` (projected onto the normal plane).
///
/// Each step applies a fourth-order Magnus rotation built from the tangent's
/// angular velocity at the two Gauss points, then the minimal rotation taking
/// the transported tangent onto the sampled one.
pub fn parallel_transport_frame(samples: &CurveSamples, u0: Vector3<f64>) -> FrameField {
    let m = samples.m;
    let h = samples.dt();
    let spec = &samples.spec;
    let t0 = samples.tangent(0);
    let mut cur = u0 - t0 * t0.dot(&u0);
    cur = if cur.norm() > 1e-8 { cur.normalize() } else { any_normal(&t0) };
    let g = 3f64.sqrt() / 6.0;
    let mut u = Vec::with_capacity(m);
    let mut du = Vec::with_capacity(m);
    let mut t_cur = t0;
    for k in 0..m {
        u.push(cur);
        du.push(-samples.tangent(k) * cur.dot(&samples.tangent_rate(k)));
        let tk = samples.t[k];
        let j1 = spec.jet(tk + (0.5 - g) * h);
        let j2 = spec.jet(tk + (0.5 + g) * h);
        let (w1, w2) = (omega(&j1[1], &j1[2]), omega(&j2[1], &j2[2]));
        let big = (w1 + w2) * (0.5 * h) - w1.cross(&w2) * (3f64.sqrt() / 12.0 * h * h);
        let rot = Rotation3::new(big);
        let t_next = if k + 1 < m { samples.tangent(k + 1) } else { t0 };
        let moved_t = rot * t_cur;
        let next = minimal_rotation(&moved_t, &t_next, &(rot * cur));
        cur = (next - t_next * t_next.dot(&next)).normalize();
        t_cur = t_next;
    }
    FrameField::finish(Arc::new(samples.clone()), u, du, cur, FrameKind::Parallel, Recipe::Parallel(u0))
}

/// Rotate (U, V) by eta(t): U' = U cos eta + V sin eta, V' = -U sin eta + V cos eta.
pub fn gauge_rotate(frame: &FrameField, eta: &Gauge) -> FrameField {
    let s = &frame.samples;
    let m = s.m;
    let p = s.period();
    let e: Vec<f64> = s.t.iter().map(|&t| eta.eval(t)).collect();
    let e_end = eta.eval(p);
    let slope = (e_end - e[0]) / p;
    let periodic: Vec<f64> = e.iter().zip(s.t.iter()).map(|(x, t)| x - slope * t).collect();
    let de: Vec<f64> = spectral::derivative(&periodic, p).iter().map(|d| d + slope).collect();
    let mut u = Vec::with_capacity(m);
    let mut du = Vec::with_capacity(m);
    for k in 0..m {
        let (sn, cs) = e[k].sin_cos();
        let (uk, vk) = (frame.u[k], frame.v[k]);
        let un = uk * cs + vk * sn;
        let vn = -uk * sn + vk * cs;
        u.push(un);
        du.push(frame.du[k] * cs + frame.dv(k) * sn + vn * de[k]);
    }
    let (sn, cs) = e_end.sin_cos();
    let u_end = frame.u_end * cs + frame.v_end * sn;
    let recipe = match frame.recipe {
        Recipe::Fixed => Recipe::Fixed,
        ref r => Recipe::Gauge(Box::new(r.clone()), eta.clone()),
    };
    FrameField::finish(frame.samples.clone(), u, du, u_end, FrameKind::Custom, recipe)
}

/// Frame from user-supplied normals on a closed frame; U' by spectral differentiation.
pub fn custom_frame(samples: &CurveSamples, normals: &[Vector3<f64>]) -> Result<FrameField> {
    if normals.len() != samples.m {
        return Err(GeomError::LengthMismatch { expected: samples.m, got: normals.len() });
    }
    let mut u = Vec::with_capacity(samples.m);
    for (k, n) in normals.iter().enumerate() {
        let t = samples.tangent(k);
        let p = n - t * t.dot(n);
        if p.norm() < 1e-10 {
            return Err(GeomError::InvalidInput(format!("normal {k} is parallel to the tangent")));
        }
        u.push(p.normalize());
    }
    let du = spectral::derivative_vec(&u, samples.period());
    let u_end = u[0];
    Ok(FrameField::finish(Arc::new(samples.clone()), u, du, u_end, FrameKind::Custom, Recipe::Fixed))
}

/// (1/2 pi) integral of (T x U) . U' ds, in turns.
pub fn twist(frame: &FrameField) -> f64 {
    let h = frame.samples.dt();
    let sum: f64 = (0..frame.m()).map(|k| frame.v[k].dot(&frame.du[k])).sum();
    sum * h / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    /// Unwrapped phase in units of 2 pi.
    pub total_phase: f64,
    pub fractional_part: f64,
    pub winding: i64,
    /// Smallest |overlap| met along the grid.
    pub min_overlap: f64,
    /// Largest single-step phase change (radians).
    pub max_step: f64,
    pub m_used: usize,
}

/// Overlap of the frame at (U, V) with the frame at t = 0, rotating by +eta under a gauge eta.
fn overlap(u0: &Vector3<f64>, v0: &Vector3<f64>, u: &Vector3<f64>, v: &Vector3<f64>) -> (f64, f64) {
    let re = 0.5 * (u0.dot(u) + v0.dot(v));
    let im = 0.5 * (u.dot(v0) - v.dot(u0));
    (re, im)
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

enum Unwrap {
    Done(PhaseResult),
    Coarse { min_overlap: f64 },
}

fn unwrap_on_grid(frame: &FrameField) -> Unwrap {
    let (u0, v0) = (frame.u[0], frame.v[0]);
    let m = frame.m();
    let mut prev = 0.0;
    let mut total = 0.0;
    let mut min_overlap = 1.0f64;
    let mut max_step = 0.0f64;
    let mut coarse = false;
    for k in 1..=m {
        let (u, v) = if k < m { (frame.u[k], frame.v[k]) } else { (frame.u_end, frame.v_end) };
        let (re, im) = overlap(&u0, &v0, &u, &v);
        let mag = re.hypot(im);
        min_overlap = min_overlap.min(mag);
        if mag < OVERLAP_ZERO {
            continue;
        }
        let arg = im.atan2(re);
        let d = wrap(arg - prev);
        max_step = max_step.max(d.abs());
        if d.abs() >= 0.5 * PI {
            coarse = true;
        }
        total += d;
        prev = arg;
    }
    if coarse {
        return Unwrap::Coarse { min_overlap };
    }
    let (re, im) = overlap(&u0, &v0, &frame.u_end, &frame.v_end);
    let fractional_part = im.atan2(re) / (2.0 * PI);
    let winding = (total / (2.0 * PI) - fractional_part).round() as i64;
    Unwrap::Done(PhaseResult {
        total_phase: winding as f64 + fractional_part,
        fractional_part,
        winding,
        min_overlap,
        max_step,
        m_used: m,
    })
}

/// Continuously unwrapped argument of the overlap with the initial frame, in turns.
pub fn total_phase(frame: &FrameField) -> Result<PhaseResult> {
    let mut owned: Option<FrameField> = None;
    loop {
        let f = owned.as_ref().unwrap_or(frame);
        match unwrap_on_grid(f) {
            Unwrap::Done(r) => return Ok(r),
            Unwrap::Coarse { min_overlap } => {
                let m2 = 2 * f.m();
                if m2 > PHASE_M_MAX || matches!(f.recipe, Recipe::Fixed) {
                    return Err(GeomError::OverlapVanishes { min_overlap });
                }
                owned = Some(f.resampled(m2)?);
            }
        }
    }
}

/// Which construction produced a gauge-invariant twist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwistRoute {
    Frenet,
    Parallel,
}

/// Tw - phi_T for one frame.
pub fn twist_minus_phase(frame: &FrameField) -> Result<f64> {
    Ok(twist(frame) - total_phase(frame)?.total_phase)
}

/// Tw_g by the Frenet route, or by the parallel route where the curve has an inflexion.
pub fn gauge_invariant_twist_with_route(samples: &CurveSamples) -> Result<(f64, TwistRoute)> {
    if samples.inflexional_nodes().is_empty() {
        let f = frenet_frame(samples)?;
        return Ok((twist_minus_phase(&f)?, TwistRoute::Frenet));
    }
    Ok((parallel_route(samples)?, TwistRoute::Parallel))
}

/// Tw_g = -phi_T of a parallel frame.
pub fn parallel_route(samples: &CurveSamples) -> Result<f64> {
    let u0 = any_normal(&samples.tangent(0));
    let f = parallel_transport_frame(samples, u0);
    twist_minus_phase(&f)
}

pub fn gauge_invariant_twist(samples: &CurveSamples) -> Result<f64> {
    Ok(gauge_invariant_twist_with_route(samples)?.0)
}

/// phi_g = -Tw_g.
pub fn geometric_phase(samples: &CurveSamples) -> Result<f64> {
    Ok(-gauge_invariant_twist(samples)?)
}
