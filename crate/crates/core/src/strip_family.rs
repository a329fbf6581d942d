//! Closed strips with n half-twists and their boundary curves.

use crate::curve_core::{detect_inflexions, sample_curve, CurveSamples, CurveSpec, Jet};
use crate::error::{GeomError, Result};
use nalgebra::Vector3;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write;

/// Orientation of the generated strip.
///
/// `Left` is the strip exactly as written in the defining formula, with
/// z = w sin(nt/2). `Right` is its mirror image z = -w sin(nt/2); with the
/// standard (right-handed) signs of torsion, writhe and Gauss linking it
/// has writhe +n for odd n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    #[default]
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripParams {
    pub n: u32,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub handedness: Handedness,
}

impl StripParams {
    pub fn new(n: u32, alpha: f64) -> Self {
        Self { n, alpha, radius: 1.0, handedness: Handedness::Right }
    }

    pub fn with_handedness(mut self, h: Handedness) -> Self {
        self.handedness = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(GeomError::InvalidInput("n must be positive".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(GeomError::InvalidInput(format!("alpha {} must be > 0", self.alpha)));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(GeomError::InvalidInput(format!("R {} must be > 0", self.radius)));
        }
        Ok(())
    }

    /// Strips wider than the ring self-intersect as surfaces.
    pub fn is_wide(&self) -> bool {
        self.alpha >= self.radius
    }

    pub fn period(&self) -> f64 {
        if self.n % 2 == 1 {
            4.0 * PI
        } else {
            2.0 * PI
        }
    }

    /// Critical half-width for this ring radius.
    pub fn alpha_c(&self) -> f64 {
        self.radius * alpha_c(self.n)
    }

    /// Reduced width a = (alpha - alpha_c) / alpha_c.
    pub fn reduced_width(&self) -> f64 {
        (self.alpha - self.alpha_c()) / self.alpha_c()
    }
}

/// (1 + n^2/4)^-1.
pub fn alpha_c(n: u32) -> f64 {
    let n = n as f64;
    1.0 / (1.0 + 0.25 * n * n)
}

/// Derivatives of the boundary at sheet w, orders 0..=3.
pub fn strip_jet(params: &StripParams, w: f64, t: f64) -> Jet {
    let k = params.n as f64 / 2.0;
    let chi = match params.handedness {
        Handedness::Left => 1.0,
        Handedness::Right => -1.0,
    };
    // x + iy = R e^{it} + (w/2)(e^{i(1+k)t} + e^{i(1-k)t})
    let terms = [(1.0, params.radius), (1.0 + k, 0.5 * w), (1.0 - k, 0.5 * w)];
    let mut out = [Vector3::zeros(); 4];
    for (d, o) in out.iter_mut().enumerate() {
        let mut z = Complex64::new(0.0, 0.0);
        for &(f, amp) in &terms {
            z += amp * Complex64::new(0.0, f).powu(d as u32) * Complex64::from_polar(1.0, f * t);
        }
        let zz = chi * w * k.powi(d as i32) * (k * t + d as f64 * PI / 2.0).sin();
        *o = Vector3::new(z.re, z.im, zz);
    }
    out
}

/// Position on the strip surface.
pub fn strip_point(params: &StripParams, w: f64, t: f64) -> Vector3<f64> {
    strip_jet(params, w, t)[0]
}

/// Boundary curve at w = +alpha or -alpha. For odd n there is a single
/// boundary; it is returned as the w = +alpha traversal of period 4 pi for
/// either edge.
pub fn strip_boundary(params: &StripParams, edge: Edge) -> CurveSpec {
    let p = *params;
    let odd = p.n % 2 == 1;
    let w = if odd || edge == Edge::Plus { p.alpha } else { -p.alpha };
    let label = if odd {
        format!("strip n={} alpha={} boundary", p.n, p.alpha)
    } else {
        let e = if w > 0.0 { "+" } else { "-" };
        format!("strip n={} alpha={} edge {}", p.n, p.alpha, e)
    };
    CurveSpec::new(label, p.period(), move |t| strip_jet(&p, w, t))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CriticalData {
    pub n: u32,
    pub alpha_c: f64,
    /// Parameter values of the inflexions at alpha_c on the boundary curve.
    pub t_c: Vec<f64>,
    pub edges: Vec<Edge>,
    /// Expansion constant, known in closed form for n = 1 only.
    pub b: Option<f64>,
    /// Speed |dr/dt| at the first inflexion.
    pub v_c: f64,
}

/// Polish a curvature minimum by a secant iteration on d|r'xr''|^2/dt.
fn polish_inflexion(spec: &CurveSpec, t0: f64, h: f64) -> f64 {
    let g = |t: f64| {
        let j = spec.jet(t);
        j[1].cross(&j[2]).dot(&j[1].cross(&j[3]))
    };
    let (mut a, mut b) = (t0 - 0.5 * h, t0 + 0.5 * h);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..60 {
        if gb == ga {
            break;
        }
        let c = b - gb * (b - a) / (gb - ga);
        if !c.is_finite() || (c - t0).abs() > 4.0 * h {
            return t0;
        }
        a = b;
        ga = gb;
        b = c;
        gb = g(b);
        if (b - a).abs() < 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    b
}

/// Inflexions of every boundary curve at alpha_c. For even n the two edges
/// carry n/2 each; `t_c[i]` is a parameter value on edge `edges[i]`.
pub fn critical_data(n: u32) -> Result<CriticalData> {
    if n == 0 {
        return Err(GeomError::InvalidInput("n must be positive".into()));
    }
    let params = StripParams::new(n, alpha_c(n));
    let edges: &[Edge] = if n % 2 == 1 { &[Edge::Plus] } else { &[Edge::Plus, Edge::Minus] };
    let mut t_c = Vec::new();
    let mut tagged = Vec::new();
    for &edge in edges {
        let spec = strip_boundary(&params, edge);
        let samples = sample_curve(&spec, 8192)?;
        let h = samples.dt();
        for &(t, _) in &detect_inflexions(&samples, 1e-3).points {
            t_c.push(polish_inflexion(&spec, t, h).rem_euclid(spec.period()));
            tagged.push(edge);
        }
    }
    let v_c = t_c
        .first()
        .map(|&t| strip_boundary(&params, Edge::Plus).deriv1(t).norm())
        .unwrap_or(f64::NAN);
    Ok(CriticalData { n, alpha_c: params.alpha_c(), t_c, edges: tagged, b: (n == 1).then_some(6.0 / 5.0), v_c })
}

/// Inflexions that a single boundary traversal passes through at alpha_c.
pub fn inflexions_per_curve(n: u32) -> u32 {
    if n % 2 == 1 {
        n
    } else {
        n / 2
    }
}

const B_ONE: f64 = 6.0 / 5.0;
const ALPHA_C_ONE: f64 = 0.8;
const T_C_ONE: f64 = 2.0 * PI;

fn v_c_one() -> f64 {
    1.0 / 5f64.sqrt()
}

fn require_mobius(params: &StripParams) -> Result<()> {
    if params.n != 1 || params.radius != 1.0 {
        return Err(GeomError::InvalidInput("asymptotic forms exist for n = 1, R = 1 only".into()));
    }
    Ok(())
}

/// Closed-form leading-order (kappa, tau) near the n = 1 inflexion.
/// Torsion is NaN exactly at the critical point, where it is undefined.
pub fn asymptotic_kappa_tau(alpha: f64, t: f64) -> Result<(f64, f64)> {
    let d = alpha - ALPHA_C_ONE;
    let s = t - T_C_ONE;
    if d.abs() > 0.1 + 1e-12 || s.abs() > 0.3 + 1e-12 {
        return Err(GeomError::OutsideWindow(format!("alpha = {alpha}, t = {t}")));
    }
    let (b, vc) = (B_ONE, v_c_one());
    let q = d * d + 9.0 * b * b * vc * vc * s * s;
    let kappa = q.sqrt() * vc.powf(1.5);
    let tau = if q == 0.0 { f64::NAN } else { -3.0 * b * d / q };
    Ok((kappa, tau))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct WindowAngle {
    /// Integral of tau v dt over [t_c - t0, t_c + t0], radians.
    pub numeric: f64,
    /// arctan(t0 / [b v_c (alpha - alpha_c)]).
    pub predicted: f64,
    pub panels: usize,
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
    (-0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
];

fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            GL5.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Integrated torsion across the n = 1 inflexion window.
pub fn torsion_window_angle(params: &StripParams, t0: f64) -> Result<WindowAngle> {
    require_mobius(params)?;
    let d = params.alpha - ALPHA_C_ONE;
    if d == 0.0 {
        return Err(GeomError::InvalidInput("alpha = alpha_c is excluded".into()));
    }
    if d.abs() > 0.1 + 1e-12 {
        return Err(GeomError::OutsideWindow(format!("alpha = {}", params.alpha)));
    }
    if !(t0 > 0.0 && t0 <= 0.3) {
        return Err(GeomError::OutsideWindow(format!("t0 = {t0}")));
    }
    let p = *params;
    let f = move |t: f64| {
        let j = strip_jet(&p, p.alpha, t);
        let c = j[1].cross(&j[2]);
        c.dot(&j[3]) / c.norm_squared() * j[1].norm()
    };
    let (a, b) = (T_C_ONE - t0, T_C_ONE + t0);
    let mut panels = 8;
    let mut prev = gauss_legendre(&f, a, b, panels);
    loop {
        panels *= 2;
        let next = gauss_legendre(&f, a, b, panels);
        if (next - prev).abs() < 1e-11 * (1.0 + next.abs()) {
            let predicted = (t0 / (B_ONE * v_c_one() * d)).atan();
            return Ok(WindowAngle { numeric: next, predicted, panels });
        }
        if panels >= 1 << 16 {
            return Err(GeomError::NotConverged {
                quantity: "torsion window".into(),
                delta: (next - prev).abs(),
                m: panels,
            });
        }
        prev = next;
    }
}

/// Sampled boundary as CSV with columns t,x,y,z,kappa,tau.
pub fn boundary_csv(samples: &CurveSamples) -> String {
    let mut out = String::from("t,x,y,z,kappa,tau\n");
    for k in 0..samples.m {
        let r = samples.r[k];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            crate::fmt12(samples.t[k]),
            crate::fmt12(r.x),
            crate::fmt12(r.y),
            crate::fmt12(r.z),
            crate::fmt12(samples.kappa[k]),
            crate::fmt12(samples.tau[k])
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mobius_closes_after_two_turns() {
        let p = StripParams::new(1, 0.6);
        let spec = strip_boundary(&p, Edge::Plus);
        assert_relative_eq!(spec.period(), 4.0 * PI);
        assert!((spec.eval(0.0) - Vector3::new(1.6, 0.0, 0.0)).norm() < 1e-14);
        assert!((spec.eval(2.0 * PI) - Vector3::new(0.4, 0.0, 0.0)).norm() < 1e-14);
        assert!((spec.eval(4.0 * PI) - spec.eval(0.0)).norm() < 1e-13);
    }

    #[test]
    fn even_strip_has_two_edges() {
        let p = StripParams::new(2, 0.3);
        let a = strip_boundary(&p, Edge::Plus);
        let b = strip_boundary(&p, Edge::Minus);
        assert_relative_eq!(a.period(), 2.0 * PI);
        assert!((a.eval(0.0) - b.eval(0.0)).norm() > 0.5);
    }

    #[test]
    fn handedness_mirrors_z() {
        let r = StripParams::new(3, 0.2);
        let l = r.with_handedness(Handedness::Left);
        let a = strip_point(&r, 0.2, 0.4);
        let b = strip_point(&l, 0.2, 0.4);
        assert_relative_eq!(a.x, b.x);
        assert_relative_eq!(a.z, -b.z);
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        for n in 1..=4 {
            let p = StripParams::new(n, 0.37);
            let h = 1e-3;
            for &t in &[0.1, 1.3, 2.9, 5.0] {
                let j = strip_jet(&p, p.alpha, t);
                for d in 1..4 {
                    // 6th-order central difference of the (d-1)-th derivative
                    let f = |x: f64| strip_jet(&p, p.alpha, x)[d - 1];
                    let fd = (f(t + 3.0 * h) - 9.0 * f(t + 2.0 * h) + 45.0 * f(t + h) - 45.0 * f(t - h)
                        + 9.0 * f(t - 2.0 * h)
                        - f(t - 3.0 * h))
                        / (60.0 * h);
                    assert!((fd - j[d]).norm() < 1e-8, "n={n} d={d} err={}", (fd - j[d]).norm());
                }
            }
        }
    }

    #[test]
    fn critical_widths() {
        assert_eq!(alpha_c(1), 0.8);
        assert_eq!(alpha_c(2), 0.5);
        assert_eq!(alpha_c(3), 4.0 / 13.0);
        let mut prev = 1.0;
        for n in 1..40 {
            assert!(alpha_c(n) < prev);
            prev = alpha_c(n);
        }
    }

    #[test]
    fn asymptotic_window_enforced() {
        assert!(matches!(asymptotic_kappa_tau(0.5, 2.0 * PI), Err(GeomError::OutsideWindow(_))));
        let (k, _) = asymptotic_kappa_tau(0.8, 2.0 * PI).unwrap();
        assert_eq!(k, 0.0);
        let (_, lo) = asymptotic_kappa_tau(0.79, 2.0 * PI).unwrap();
        let (_, hi) = asymptotic_kappa_tau(0.81, 2.0 * PI).unwrap();
        assert!(lo > 0.0 && hi < 0.0);
    }

    #[test]
    fn window_rejects_critical_alpha() {
        let p = StripParams::new(1, 0.8);
        assert!(matches!(torsion_window_angle(&p, 0.1), Err(GeomError::InvalidInput(_))));
        let q = StripParams::new(1, 0.75);
        assert!(matches!(torsion_window_angle(&q, 0.5), Err(GeomError::OutsideWindow(_))));
    }
}
