//! Closed parametric curves, uniform sampling and local Frenet-Serret data.

use crate::error::{GeomError, Result};
use crate::spectral;
use nalgebra::Vector3;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

/// Position and its first three parameter derivatives at one t.
pub type Jet = [Vector3<f64>; 4];

/// Speed below which a sample is considered singular.
pub const REGULARITY_TOL: f64 = 1e-10;
/// Curvature below which a node counts as inflexional.
pub const INFLEXION_TOL: f64 = 1e-8;
const CLOSURE_TOL: f64 = 1e-9;

type JetFn = dyn Fn(f64) -> Jet + Send + Sync;

#[derive(Clone)]
enum Source {
    Analytic(Arc<JetFn>),
    Fourier(Arc<FourierCurve>),
}

/// A closed curve r(t), t in [0, period), with analytic derivatives.
#[derive(Clone)]
pub struct CurveSpec {
    label: String,
    period: f64,
    source: Source,
}

impl fmt::Debug for CurveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurveSpec")
            .field("label", &self.label)
            .field("period", &self.period)
            .finish()
    }
}

impl CurveSpec {
    /// Build from a closure returning `[r, r', r'', r''']`.
    pub fn new<F>(label: impl Into<String>, period: f64, jet: F) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            period,
            source: Source::Analytic(Arc::new(jet)),
        }
    }

    pub fn from_fourier(label: impl Into<String>, curve: FourierCurve) -> Self {
        Self {
            label: label.into(),
            period: curve.period,
            source: Source::Fourier(Arc::new(curve)),
        }
    }

    /// Parse the Fourier ingestion format.
    pub fn from_json_str(label: impl Into<String>, text: &str) -> Result<Self> {
        let curve: FourierCurve =
            serde_json::from_str(text).map_err(|e| GeomError::InvalidInput(e.to_string()))?;
        curve.validate()?;
        Ok(Self::from_fourier(label, curve))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeomError::Io(e.to_string()))?;
        Self::from_json_str(path.display().to_string(), &text)
    }

    /// Circle of radius `radius` in the xy-plane, counter-clockwise.
    pub fn circle(radius: f64) -> Self {
        Self::new("circle", 2.0 * PI, move |t| {
            let (s, c) = t.sin_cos();
            [
                Vector3::new(radius * c, radius * s, 0.0),
                Vector3::new(-radius * s, radius * c, 0.0),
                Vector3::new(-radius * c, -radius * s, 0.0),
                Vector3::new(radius * s, -radius * c, 0.0),
            ]
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn jet(&self, t: f64) -> Jet {
        match &self.source {
            Source::Analytic(f) => f(t),
            Source::Fourier(c) => c.jet(t),
        }
    }

    pub fn eval(&self, t: f64) -> Vector3<f64> {
        self.jet(t)[0]
    }

    pub fn deriv1(&self, t: f64) -> Vector3<f64> {
        self.jet(t)[1]
    }

    pub fn deriv2(&self, t: f64) -> Vector3<f64> {
        self.jet(t)[2]
    }

    pub fn deriv3(&self, t: f64) -> Vector3<f64> {
        self.jet(t)[3]
    }

    /// Same point set traversed backwards: r(P - t).
    pub fn reversed(&self) -> Self {
        let inner = self.clone();
        let p = self.period;
        Self::new(format!("{} (reversed)", self.label), p, move |t| {
            let j = inner.jet(p - t);
            [j[0], -j[1], j[2], -j[3]]
        })
    }

    /// Same curve with the parameter origin moved to `t0`.
    pub fn shifted(&self, t0: f64) -> Self {
        let inner = self.clone();
        Self::new(format!("{} (shifted)", self.label), self.period, move |t| {
            inner.jet(t + t0)
        })
    }

    /// Rigid translation by `d`.
    pub fn translated(&self, d: Vector3<f64>) -> Self {
        let inner = self.clone();
        Self::new(self.label.clone(), self.period, move |t| {
            let mut j = inner.jet(t);
            j[0] += d;
            j
        })
    }

    fn grid_jets(&self, m: usize) -> Vec<Jet> {
        let h = self.period / m as f64;
        if let Source::Fourier(c) = &self.source {
            if m > 2 * c.max_harmonic() {
                return c.grid_jets(m);
            }
        }
        (0..m).into_par_iter().map(|k| self.jet(k as f64 * h)).collect()
    }
}

/// One coordinate of a Fourier curve.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct FourierAxis {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FourierCoords {
    pub x: FourierAxis,
    pub y: FourierAxis,
    pub z: FourierAxis,
}

/// r(t) = sum_j a_j cos(2 pi j t / P) + b_j sin(2 pi j t / P) per coordinate.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FourierCurve {
    pub period: f64,
    pub fourier: FourierCoords,
}

impl FourierCurve {
    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(GeomError::InvalidInput(format!("period {} must be > 0", self.period)));
        }
        let all = self.axes().iter().flat_map(|a| a.cos.iter().chain(a.sin.iter())).all(|x| x.is_finite());
        if !all {
            return Err(GeomError::InvalidInput("non-finite Fourier coefficient".into()));
        }
        Ok(())
    }

    fn axes(&self) -> [&FourierAxis; 3] {
        [&self.fourier.x, &self.fourier.y, &self.fourier.z]
    }

    pub fn max_harmonic(&self) -> usize {
        self.axes()
            .iter()
            .map(|a| a.cos.len().max(a.sin.len()))
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    /// Trigonometric interpolant through equispaced samples of a closed curve.
    pub fn interpolate(period: f64, points: &[Vector3<f64>]) -> Self {
        let axis = |c: usize| {
            let (cos, sin) = spectral::trig_coefficients(&points.iter().map(|p| p[c]).collect::<Vec<_>>());
            FourierAxis { cos, sin }
        };
        Self {
            period,
            fourier: FourierCoords { x: axis(0), y: axis(1), z: axis(2) },
        }
    }

    pub fn jet(&self, t: f64) -> Jet {
        let w0 = 2.0 * PI / self.period;
        let mut out = [Vector3::zeros(); 4];
        let step = Complex64::from_polar(1.0, w0 * t);
        for (c, axis) in self.axes().iter().enumerate() {
            let nh = axis.cos.len().max(axis.sin.len());
            let mut e = Complex64::new(1.0, 0.0);
            for j in 0..nh {
                let a = axis.cos.get(j).copied().unwrap_or(0.0);
                let b = axis.sin.get(j).copied().unwrap_or(0.0);
                let w = w0 * j as f64;
                // a cos + b sin = Re[(a - i b) e^{i w t}]
                let mut z = Complex64::new(a, -b) * e;
                for d in 0..4 {
                    out[d][c] += z.re;
                    z *= Complex64::new(0.0, w);
                }
                e *= step;
            }
        }
        out
    }

    fn grid_jets(&self, m: usize) -> Vec<Jet> {
        let cols: Vec<[Vec<f64>; 3]> = (0..4u32)
            .map(|d| {
                let f = |a: &FourierAxis| spectral::synthesize(&a.cos, &a.sin, self.period, m, d);
                [f(&self.fourier.x), f(&self.fourier.y), f(&self.fourier.z)]
            })
            .collect();
        (0..m)
            .map(|k| {
                let mut j = [Vector3::zeros(); 4];
                for d in 0..4 {
                    j[d] = Vector3::new(cols[d][0][k], cols[d][1][k], cols[d][2][k]);
                }
                j
            })
            .collect()
    }
}

/// A curve sampled on the uniform grid t_k = k P / m.
#[derive(Debug, Clone)]
pub struct CurveSamples {
    pub spec: CurveSpec,
    pub m: usize,
    pub t: Vec<f64>,
    pub r: Vec<Vector3<f64>>,
    pub r1: Vec<Vector3<f64>>,
    pub r2: Vec<Vector3<f64>>,
    pub r3: Vec<Vector3<f64>>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub length: f64,
    pub kappa: Vec<f64>,
    /// NaN at inflexional nodes, where torsion is undefined.
    pub tau: Vec<f64>,
}

impl CurveSamples {
    pub fn period(&self) -> f64 {
        self.spec.period()
    }

    /// Grid spacing in t.
    pub fn dt(&self) -> f64 {
        self.spec.period() / self.m as f64
    }

    pub fn tangent(&self, k: usize) -> Vector3<f64> {
        self.r1[k] / self.v[k]
    }

    pub fn tangents(&self) -> Vec<Vector3<f64>> {
        (0..self.m).map(|k| self.tangent(k)).collect()
    }

    /// dT/dt at node k.
    pub fn tangent_rate(&self, k: usize) -> Vector3<f64> {
        let t = self.tangent(k);
        (self.r2[k] - t * t.dot(&self.r2[k])) / self.v[k]
    }

    pub fn min_kappa(&self) -> f64 {
        self.kappa.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_kappa(&self) -> f64 {
        self.kappa.iter().cloned().fold(0.0, f64::max)
    }

    /// Indices where |r'xr''|/|r'|^3 falls below the inflexion tolerance.
    pub fn inflexional_nodes(&self) -> Vec<usize> {
        (0..self.m).filter(|&k| self.kappa[k] < INFLEXION_TOL).collect()
    }

    /// (1/2 pi) times the integral of torsion over arc length.
    pub fn integrated_torsion(&self) -> Result<f64> {
        if let Some(&k) = self.inflexional_nodes().first() {
            return Err(GeomError::InflexionPoint {
                t: self.t[k],
                norm: self.r1[k].cross(&self.r2[k]).norm(),
            });
        }
        Ok(integrate_periodic(&self.tau, self, Weight::Ds)? / (2.0 * PI))
    }
}

/// Sample `spec` on `m` uniform nodes and compute the local geometry.
pub fn sample_curve(spec: &CurveSpec, m: usize) -> Result<CurveSamples> {
    if m < 16 || m % 2 != 0 {
        return Err(GeomError::InvalidGrid(m));
    }
    let p = spec.period();
    if !(p.is_finite() && p > 0.0) {
        return Err(GeomError::InvalidInput(format!("period {p} must be > 0")));
    }
    let start = spec.jet(0.0);
    let end = spec.jet(p);
    for d in 0..4 {
        let residual = (end[d] - start[d]).norm();
        if residual > CLOSURE_TOL * (1.0 + start[d].norm()) {
            return Err(GeomError::NotClosed { residual, order: d });
        }
    }
    let h = p / m as f64;
    let jets = spec.grid_jets(m);
    let t: Vec<f64> = (0..m).map(|k| k as f64 * h).collect();
    let r: Vec<_> = jets.iter().map(|j| j[0]).collect();
    let r1: Vec<_> = jets.iter().map(|j| j[1]).collect();
    let r2: Vec<_> = jets.iter().map(|j| j[2]).collect();
    let r3: Vec<_> = jets.iter().map(|j| j[3]).collect();
    let v: Vec<f64> = r1.iter().map(|d| d.norm()).collect();
    for k in 0..m {
        if !(v[k] >= REGULARITY_TOL) {
            return Err(GeomError::NonRegular { t: t[k], speed: v[k] });
        }
    }
    let mut s = vec![0.0; m];
    for k in 1..m {
        s[k] = s[k - 1] + 0.5 * h * (v[k - 1] + v[k]);
    }
    let length = v.iter().sum::<f64>() * h;
    let kappa: Vec<f64> = (0..m).map(|k| curvature_at(&r1[k], &r2[k]).unwrap_or(0.0)).collect();
    let tau: Vec<f64> = (0..m)
        .map(|k| {
            if kappa[k] < INFLEXION_TOL {
                f64::NAN
            } else {
                torsion_at(&r1[k], &r2[k], &r3[k]).unwrap_or(f64::NAN)
            }
        })
        .collect();
    Ok(CurveSamples {
        spec: spec.clone(),
        m,
        t,
        r,
        r1,
        r2,
        r3,
        v,
        s,
        length,
        kappa,
        tau,
    })
}

/// kappa = |r' x r''| / |r'|^3.
pub fn curvature_at(r1: &Vector3<f64>, r2: &Vector3<f64>) -> Result<f64> {
    let v = r1.norm();
    if v < REGULARITY_TOL {
        return Err(GeomError::NonRegular { t: f64::NAN, speed: v });
    }
    Ok(r1.cross(r2).norm() / (v * v * v))
}

/// tau = (r' x r'') . r''' / |r' x r''|^2.
pub fn torsion_at(r1: &Vector3<f64>, r2: &Vector3<f64>, r3: &Vector3<f64>) -> Result<f64> {
    let v = r1.norm();
    let c = r1.cross(r2);
    let n2 = c.norm_squared();
    if v < REGULARITY_TOL {
        return Err(GeomError::NonRegular { t: f64::NAN, speed: v });
    }
    if n2.sqrt() < INFLEXION_TOL * v * v * v {
        return Err(GeomError::InflexionPoint { t: f64::NAN, norm: n2.sqrt() });
    }
    Ok(c.dot(r3) / n2)
}

/// Measure used by [`integrate_periodic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Dt,
    Ds,
}

/// Periodic trapezoidal rule over the sample grid.
pub fn integrate_periodic(values: &[f64], samples: &CurveSamples, weight: Weight) -> Result<f64> {
    if values.len() != samples.m {
        return Err(GeomError::LengthMismatch { expected: samples.m, got: values.len() });
    }
    let h = samples.dt();
    let sum: f64 = match weight {
        Weight::Dt => values.iter().sum(),
        Weight::Ds => values.iter().zip(&samples.v).map(|(f, v)| f * v).sum(),
    };
    Ok(sum * h)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InflexionReport {
    /// (t*, kappa_min) per detected near-inflexion.
    pub points: Vec<(f64, f64)>,
    pub tolerance: f64,
}

/// Local minima of kappa below `tol`, located by a parabola through kappa^2.
pub fn detect_inflexions(samples: &CurveSamples, tol: f64) -> InflexionReport {
    let m = samples.m;
    let h = samples.dt();
    let k2: Vec<f64> = samples.kappa.iter().map(|k| k * k).collect();
    let mut points = Vec::new();
    for k in 0..m {
        let (km, kp) = ((k + m - 1) % m, (k + 1) % m);
        let (f0, fm, fp) = (k2[k], k2[km], k2[kp]);
        if !(f0 < fm && f0 <= fp) {
            continue;
        }
        let curv = fm - 2.0 * f0 + fp;
        let (shift, fmin) = if curv > 0.0 {
            let d = 0.5 * (fm - fp) / curv;
            (d, f0 - 0.125 * (fp - fm).powi(2) / curv)
        } else {
            (0.0, f0)
        };
        let kmin = fmin.max(0.0).sqrt().min(samples.kappa[k]);
        if kmin < tol {
            let period = samples.period();
            let t = (samples.t[k] + shift * h).rem_euclid(period);
            points.push((t, kmin));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    InflexionReport { points, tolerance: tol }
}
