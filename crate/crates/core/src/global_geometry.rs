//! Writhe, Gauss linking, ribbons and the two CWF balances.

use crate::curve_core::{sample_curve, CurveSamples, CurveSpec, FourierCurve};
use crate::error::{GeomError, Result};
use crate::framing::{gauge_rotate, total_phase, twist, FrameField, FrameKind, Gauge};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Grid-doubling policy for the O(m^2) sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub tol: f64,
    pub m_max: usize,
}

impl Default for Convergence {
    fn default() -> Self {
        Self { tol: 1e-6, m_max: 1 << 14 }
    }
}

/// A value accepted (or not) by grid doubling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Converged {
    pub value: f64,
    pub m_used: usize,
    /// |value(m_used) - value(m_used / 2)|.
    pub delta: f64,
    pub converged: bool,
}

impl Converged {
    fn require(self, quantity: &str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(GeomError::NotConverged { quantity: quantity.into(), delta: self.delta, m: self.m_used })
        }
    }
}

fn refine<F>(m0: usize, conv: &Convergence, mut at: F) -> Result<Converged>
where
    F: FnMut(usize) -> Result<f64>,
{
    let (mut m, mut prev) = if 2 * m0 > conv.m_max { (m0, at(m0 / 2)?) } else { (m0, at(m0)?) };
    if 2 * m0 > conv.m_max {
        let value = at(m)?;
        let delta = (value - prev).abs();
        return Ok(Converged { value, m_used: m, delta, converged: delta < conv.tol });
    }
    loop {
        let m2 = 2 * m;
        let value = at(m2)?;
        let delta = (value - prev).abs();
        if delta < conv.tol || 2 * m2 > conv.m_max {
            return Ok(Converged { value, m_used: m2, delta, converged: delta < conv.tol });
        }
        m = m2;
        prev = value;
    }
}

#[derive(Clone, Copy)]
struct Node {
    p: [f64; 3],
    d: [f64; 3],
}

fn nodes(s: &CurveSamples) -> Vec<Node> {
    (0..s.m)
        .map(|k| Node { p: s.r[k].into(), d: s.r1[k].into() })
        .collect()
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn gauss_kernel(a: &Node, b: &Node) -> (f64, f64) {
    let x = [a.p[0] - b.p[0], a.p[1] - b.p[1], a.p[2] - b.p[2]];
    let d2 = dot(&x, &x);
    let d = d2.sqrt();
    (dot(&cross(&a.d, &b.d), &x) / (d2 * d), d)
}

#[inline]
fn chord_kernel(a: &Node, b: &Node) -> f64 {
    // unit chord from s1 to s2 and its partial derivatives
    let x = [b.p[0] - a.p[0], b.p[1] - a.p[1], b.p[2] - a.p[2]];
    let d = dot(&x, &x).sqrt();
    let c = [x[0] / d, x[1] / d, x[2] / d];
    let (ca, cb) = (dot(&c, &a.d), dot(&c, &b.d));
    let da = [(c[0] * ca - a.d[0]) / d, (c[1] * ca - a.d[1]) / d, (c[2] * ca - a.d[2]) / d];
    let db = [(b.d[0] - c[0] * cb) / d, (b.d[1] - c[1] * cb) / d, (b.d[2] - c[2] * cb) / d];
    dot(&cross(&da, &db), &c)
}

/// Euler-Maclaurin correction for the |s1 - s2| kink of the writhe integrand
/// on the diagonal: the integrand behaves like v^3 kappa^2 tau |dt| / 12.
fn diagonal_correction(s: &CurveSamples) -> f64 {
    let h = s.dt();
    let sum: f64 = (0..s.m)
        .map(|k| {
            let v = s.v[k];
            s.r1[k].cross(&s.r2[k]).dot(&s.r3[k]) / (v * v * v)
        })
        .sum();
    h * h / 72.0 * sum * h
}

fn self_distance_floor(s: &CurveSamples) -> f64 {
    1e-6 * s.length
}

fn writhe_sum(s: &CurveSamples, chord_form: bool) -> Result<f64> {
    let pts = nodes(s);
    let m = s.m;
    let rows: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            let mut dmin = f64::INFINITY;
            for j in (i + 1)..m {
                let (g, d) = gauss_kernel(&pts[i], &pts[j]);
                let periodic_gap = (j - i).min(m + i - j);
                if periodic_gap > 1 {
                    dmin = dmin.min(d);
                }
                acc += if chord_form { chord_kernel(&pts[i], &pts[j]) } else { g };
            }
            (acc, dmin)
        })
        .collect();
    let dmin = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    if dmin < self_distance_floor(s) {
        return Err(GeomError::SelfIntersection { distance: dmin });
    }
    let total: f64 = rows.iter().map(|r| r.0).sum();
    let h = s.dt();
    Ok((2.0 * total * h * h + diagonal_correction(s)) / (4.0 * PI))
}

/// Writhe on the sample grid alone (no doubling).
pub fn writhe_on_grid(samples: &CurveSamples) -> Result<f64> {
    writhe_sum(samples, false)
}

/// Chord-form writhe on the sample grid alone.
pub fn writhe_chordform_on_grid(samples: &CurveSamples) -> Result<f64> {
    writhe_sum(samples, true)
}

pub fn writhe_converged(samples: &CurveSamples, conv: &Convergence) -> Result<Converged> {
    let spec = samples.spec.clone();
    refine(samples.m, conv, |m| {
        if m == samples.m {
            writhe_sum(samples, false)
        } else {
            writhe_sum(&sample_curve(&spec, m)?, false)
        }
    })
}

/// Gauss double integral for (T1 x T2) . (r1 - r2) / |r1 - r2|^3, grid-doubled.
pub fn writhe(samples: &CurveSamples) -> Result<f64> {
    writhe_converged(samples, &Convergence::default())?.require("writhe")
}

/// Writhe from the unit chord C = (r(s2) - r(s1)) / |r(s2) - r(s1)| and its partials.
pub fn writhe_chordform(samples: &CurveSamples) -> Result<f64> {
    let spec = samples.spec.clone();
    refine(samples.m, &Convergence::default(), |m| {
        if m == samples.m {
            writhe_sum(samples, true)
        } else {
            writhe_sum(&sample_curve(&spec, m)?, true)
        }
    })?
    .require("writhe (chord form)")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkingResult {
    pub value: f64,
    pub nearest: i64,
    /// |value - nearest|.
    pub residual: f64,
    pub m_used: usize,
    pub delta: f64,
    pub converged: bool,
}

impl LinkingResult {
    fn from(c: Converged) -> Self {
        let nearest = c.value.round();
        Self {
            value: c.value,
            nearest: nearest as i64,
            residual: (c.value - nearest).abs(),
            m_used: c.m_used,
            delta: c.delta,
            converged: c.converged,
        }
    }
}

/// Columns of a sampled curve, laid out for the inner loop.
struct Columns {
    p: [Vec<f64>; 3],
    d: [Vec<f64>; 3],
}

fn columns(s: &CurveSamples) -> Columns {
    let col = |f: &dyn Fn(usize) -> f64| (0..s.m).map(f).collect::<Vec<f64>>();
    Columns {
        p: [col(&|k| s.r[k].x), col(&|k| s.r[k].y), col(&|k| s.r[k].z)],
        d: [col(&|k| s.r1[k].x), col(&|k| s.r1[k].y), col(&|k| s.r1[k].z)],
    }
}

/// Gauss linking integral on the given grids (no doubling).
pub fn gauss_linking_on_grid(a: &CurveSamples, b: &CurveSamples, floor: f64) -> Result<f64> {
    let pa = nodes(a);
    let cb = columns(b);
    let (bx, by, bz) = (&cb.p[0], &cb.p[1], &cb.p[2]);
    let (ux, uy, uz) = (&cb.d[0], &cb.d[1], &cb.d[2]);
    let rows: Vec<(f64, f64)> = pa
        .par_iter()
        .map(|x| {
            let mut acc = 0.0;
            let mut d2min = f64::INFINITY;
            for j in 0..bx.len() {
                let (dx, dy, dz) = (x.p[0] - bx[j], x.p[1] - by[j], x.p[2] - bz[j]);
                let cx = x.d[1] * uz[j] - x.d[2] * uy[j];
                let cy = x.d[2] * ux[j] - x.d[0] * uz[j];
                let cz = x.d[0] * uy[j] - x.d[1] * ux[j];
                let d2 = dx * dx + dy * dy + dz * dz;
                acc += (cx * dx + cy * dy + cz * dz) / (d2 * d2.sqrt());
                d2min = d2min.min(d2);
            }
            (acc, d2min.sqrt())
        })
        .collect();
    let dmin = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    if dmin < floor {
        return Err(GeomError::CurvesTouch { distance: dmin });
    }
    let total: f64 = rows.iter().map(|r| r.0).sum();
    Ok(total * a.dt() * b.dt() / (4.0 * PI))
}

fn touch_floor(a: &CurveSamples, b: &CurveSamples) -> f64 {
    1e-6 * a.length.max(b.length)
}

pub fn gauss_linking_converged(a: &CurveSamples, b: &CurveSamples, conv: &Convergence) -> Result<LinkingResult> {
    let floor = touch_floor(a, b);
    let m0 = a.m.max(b.m);
    let c = refine(m0, conv, |m| {
        let sa = if a.m == m { a.clone() } else { sample_curve(&a.spec, m)? };
        let sb = if b.m == m { b.clone() } else { sample_curve(&b.spec, m)? };
        gauss_linking_on_grid(&sa, &sb, floor)
    })?;
    Ok(LinkingResult::from(c))
}

/// (1/4 pi) double integral of (T_a x T_b) . (r_a - r_b) / |r_a - r_b|^3.
pub fn gauss_linking(a: &CurveSamples, b: &CurveSamples) -> Result<LinkingResult> {
    let r = gauss_linking_converged(a, b, &Convergence::default())?;
    if !r.converged {
        return Err(GeomError::NotConverged { quantity: "linking".into(), delta: r.delta, m: r.m_used });
    }
    Ok(r)
}

/// Closest approach between non-local parts of the curve: pairs whose arc
/// separation exceeds min(L/2, pi / kappa_max).
pub fn min_self_distance(samples: &CurveSamples) -> f64 {
    let stride = (samples.m / 2048).max(1);
    let idx: Vec<usize> = (0..samples.m).step_by(stride).collect();
    let l = samples.length;
    let reach = (0.5 * l).min(PI / samples.max_kappa().max(1e-300)) * (1.0 - 1e-9);
    idx.par_iter()
        .map(|&i| {
            let mut best = f64::INFINITY;
            for &j in &idx {
                let ds = (samples.s[i] - samples.s[j]).abs();
                if ds.min(l - ds) >= reach {
                    best = best.min((samples.r[i] - samples.r[j]).norm());
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Base curve and its offset r + eps U.
#[derive(Debug, Clone)]
pub struct RibbonEdges {
    pub base: CurveSamples,
    pub offset: CurveSamples,
    pub epsilon: f64,
}

/// Offset a closed frame's base curve by eps U. The offset is the
/// trigonometric interpolant of the offset nodes.
pub fn ribbon_edge(samples: &CurveSamples, frame: &FrameField, epsilon: f64) -> Result<RibbonEdges> {
    if !(epsilon > 0.0) {
        return Err(GeomError::InvalidInput(format!("epsilon {epsilon} must be > 0")));
    }
    if frame.m() != samples.m {
        return Err(GeomError::LengthMismatch { expected: samples.m, got: frame.m() });
    }
    if !frame.is_closed(1e-8) {
        return Err(GeomError::InvalidInput(format!(
            "ribbon needs a closed frame (closure angle {:e})",
            frame.closure_angle
        )));
    }
    let limit = 0.5 * min_self_distance(samples);
    if epsilon >= limit {
        return Err(GeomError::EpsilonTooLarge { epsilon, limit });
    }
    let pts: Vec<Vector3<f64>> = (0..samples.m).map(|k| samples.r[k] + frame.u[k] * epsilon).collect();
    let curve = FourierCurve::interpolate(samples.period(), &pts);
    let spec = CurveSpec::from_fourier(format!("{} + eps U", samples.spec.label()), curve);
    let offset = sample_curve(&spec, samples.m)?;
    Ok(RibbonEdges { base: samples.clone(), offset, epsilon })
}

/// Close a frame with holonomy theta by the linear gauge eta = -theta t / P.
pub fn close_frame(frame: &FrameField) -> FrameField {
    let theta = frame.closure_angle;
    if theta == 0.0 {
        return frame.clone();
    }
    let p = frame.samples.period();
    gauge_rotate(frame, &Gauge::new(move |t| -theta * t / p))
}

/// Linking number of the base curve with its eps-ribbon, doubling the frame's grid.
pub fn ribbon_linking(frame: &FrameField, epsilon: f64, conv: &Convergence) -> Result<LinkingResult> {
    let edges = ribbon_edge(&frame.samples, frame, epsilon)?;
    let floor = 0.1 * epsilon;
    let m0 = frame.m();
    let c = refine(m0, conv, |m| {
        if m == m0 {
            return gauss_linking_on_grid(&edges.base, &edges.offset, floor);
        }
        match frame.resampled(m) {
            Ok(f) => {
                let e = ribbon_edge(&f.samples, &f, epsilon)?;
                gauss_linking_on_grid(&e.base, &e.offset, floor)
            }
            Err(_) => {
                let b = sample_curve(&edges.base.spec, m)?;
                let o = sample_curve(&edges.offset.spec, m)?;
                gauss_linking_on_grid(&b, &o, floor)
            }
        }
    })?;
    Ok(LinkingResult::from(c))
}

/// Every scalar of both CWF balances for one (curve, frame, eps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub label: String,
    pub frame: FrameKind,
    /// The supplied frame did not close and was closed by a linear gauge.
    pub closed_by_gauge: bool,
    pub m: usize,
    pub length: f64,
    pub epsilon: f64,
    #[serde(rename = "Tw")]
    pub tw: f64,
    #[serde(rename = "phi_T")]
    pub phi_t: f64,
    pub phase_m: usize,
    pub min_overlap: f64,
    #[serde(rename = "Tw_g")]
    pub tw_g: f64,
    pub phi_g: f64,
    #[serde(rename = "Wr")]
    pub wr: f64,
    pub wr_m: usize,
    pub wr_delta: f64,
    #[serde(rename = "Lk")]
    pub lk: i64,
    pub lk_value: f64,
    pub lk_residual: f64,
    pub lk_m: usize,
    pub lk_delta: f64,
    #[serde(rename = "Lk_g")]
    pub lk_g: f64,
    pub cwf_residual: f64,
    pub cwf_g_residual: f64,
    pub converged: bool,
}

pub fn summarize_with(samples: &CurveSamples, frame: &FrameField, epsilon: f64, conv: &Convergence) -> Result<GeometrySummary> {
    if frame.m() != samples.m {
        return Err(GeomError::LengthMismatch { expected: samples.m, got: frame.m() });
    }
    let closed_by_gauge = !frame.is_closed(1e-8);
    let frame = if closed_by_gauge { close_frame(frame) } else { frame.clone() };
    let tw = twist(&frame);
    let phase = total_phase(&frame)?;
    let wr = writhe_converged(samples, conv)?;
    let lk = ribbon_linking(&frame, epsilon, conv)?;
    let phi_t = phase.total_phase;
    let tw_g = tw - phi_t;
    let lk_g = lk.nearest as f64 - phi_t;
    Ok(GeometrySummary {
        label: samples.spec.label().to_string(),
        frame: frame.kind,
        closed_by_gauge,
        m: samples.m,
        length: samples.length,
        epsilon,
        tw,
        phi_t,
        phase_m: phase.m_used,
        min_overlap: phase.min_overlap,
        tw_g,
        phi_g: -tw_g,
        wr: wr.value,
        wr_m: wr.m_used,
        wr_delta: wr.delta,
        lk: lk.nearest,
        lk_value: lk.value,
        lk_residual: lk.residual,
        lk_m: lk.m_used,
        lk_delta: lk.delta,
        lk_g,
        cwf_residual: lk.value - tw - wr.value,
        cwf_g_residual: lk_g - tw_g - wr.value,
        converged: wr.converged && lk.converged,
    })
}

/// [`summarize_with`] under the default convergence policy.
pub fn summarize(samples: &CurveSamples, frame: &FrameField, epsilon: f64) -> Result<GeometrySummary> {
    summarize_with(samples, frame, epsilon, &Convergence::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::{frenet_frame, parallel_transport_frame};

    fn circle(m: usize) -> CurveSamples {
        sample_curve(&CurveSpec::circle(1.0), m).unwrap()
    }

    #[test]
    fn planar_circle_has_no_writhe() {
        let s = circle(128);
        assert!(writhe(&s).unwrap().abs() < 1e-10);
        assert!(writhe_chordform(&s).unwrap().abs() < 1e-10);
    }

    #[test]
    fn distant_circles_unlinked() {
        let a = circle(128);
        let b = sample_curve(&CurveSpec::circle(1.0).translated(Vector3::new(5.0, 0.0, 0.0)), 128).unwrap();
        assert!(gauss_linking(&a, &b).unwrap().value.abs() < 1e-10);
    }

    #[test]
    fn translated_ribbon_is_unlinked() {
        let s = circle(256);
        let f = parallel_transport_frame(&s, Vector3::z());
        let e = ribbon_edge(&s, &f, 0.1).unwrap();
        let d = (0..s.m).map(|k| (e.offset.r[k] - e.base.r[k]).norm()).fold(f64::INFINITY, f64::min);
        assert!((d - 0.1).abs() < 1e-10);
        let lk = gauss_linking(&e.base, &e.offset).unwrap();
        assert_eq!(lk.nearest, 0);
    }

    #[test]
    fn rotating_ribbon_links_once() {
        let s = circle(256);
        let f = parallel_transport_frame(&s, Vector3::z());
        let g = gauge_rotate(&f, &Gauge::linear_winding(1.0, s.period()));
        let lk = ribbon_linking(&g, 0.1, &Convergence::default()).unwrap();
        assert_eq!(lk.nearest.abs(), 1);
        assert!(lk.residual < 1e-8);
    }

    #[test]
    fn oversized_epsilon_rejected() {
        let s = circle(128);
        let f = frenet_frame(&s).unwrap();
        assert!(matches!(ribbon_edge(&s, &f, 1.5), Err(GeomError::EpsilonTooLarge { .. })));
    }

    #[test]
    fn circle_summary_is_all_zero() {
        let s = circle(256);
        let f = frenet_frame(&s).unwrap();
        let g = summarize(&s, &f, 1e-3 * s.length).unwrap();
        assert!(g.tw.abs() < 1e-10 && g.wr.abs() < 1e-10 && g.phi_t.abs() < 1e-10);
        assert_eq!(g.lk, 0);
        assert!(g.lk_g.abs() < 1e-10);
        assert!(g.cwf_residual.abs() < 1e-8 && g.cwf_g_residual.abs() < 1e-8);
        assert_eq!(g.phi_g, -g.tw_g);
    }
}
