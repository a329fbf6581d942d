#![allow(dead_code)]

use curvegeom::curve_core::{CurveSpec, FourierAxis, FourierCoords, FourierCurve, Jet};
use nalgebra::Vector3;
use rand::{rngs::StdRng, Rng, SeedableRng};
use std::f64::consts::PI;

fn axis(cos: Vec<f64>, sin: Vec<f64>) -> FourierAxis {
    FourierAxis { cos, sin }
}

/// Trefoil x = sin t + 2 sin 2t, y = cos t - 2 cos 2t, z = -sin 3t.
pub fn trefoil() -> FourierCurve {
    FourierCurve {
        period: 2.0 * PI,
        fourier: FourierCoords {
            x: axis(vec![], vec![0.0, 1.0, 2.0]),
            y: axis(vec![0.0, 1.0, -2.0], vec![]),
            z: axis(vec![], vec![0.0, 0.0, 0.0, -1.0]),
        },
    }
}

/// Trefoil plus small random harmonics up to order 4.
pub fn random_knot_curve(seed: u64) -> FourierCurve {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut c = trefoil();
    for a in [&mut c.fourier.x, &mut c.fourier.y, &mut c.fourier.z] {
        a.cos.resize(5, 0.0);
        a.sin.resize(5, 0.0);
        for j in 1..5 {
            a.cos[j] += rng.gen_range(-0.08..0.08);
            a.sin[j] += rng.gen_range(-0.08..0.08);
        }
    }
    c
}

pub fn random_knot(seed: u64) -> CurveSpec {
    CurveSpec::from_fourier(format!("knot {seed}"), random_knot_curve(seed))
}

/// Ellipse with semi-axes a, b in the xy-plane.
pub fn ellipse(a: f64, b: f64) -> CurveSpec {
    CurveSpec::new("ellipse", 2.0 * PI, move |t| {
        let (s, c) = t.sin_cos();
        [
            Vector3::new(a * c, b * s, 0.0),
            Vector3::new(-a * s, b * c, 0.0),
            Vector3::new(-a * c, -b * s, 0.0),
            Vector3::new(a * s, -b * c, 0.0),
        ]
    })
}

/// r(sigma(t)) with sigma = t + amp sin t (period 2 pi), jets by the chain rule.
pub fn reparametrized(spec: &CurveSpec, amp: f64) -> CurveSpec {
    assert!((spec.period() - 2.0 * PI).abs() < 1e-12);
    let base = spec.clone();
    CurveSpec::new(format!("{} reparametrized", spec.label()), spec.period(), move |t| {
        let (s, c) = t.sin_cos();
        let (g1, g2, g3) = (1.0 + amp * c, -amp * s, -amp * c);
        let j: Jet = base.jet(t + amp * s);
        [
            j[0],
            j[1] * g1,
            j[2] * g1 * g1 + j[1] * g2,
            j[3] * g1 * g1 * g1 + j[2] * (3.0 * g1 * g2) + j[1] * g3,
        ]
    })
}

/// Mirror image z -> -z.
pub fn mirrored(spec: &CurveSpec) -> CurveSpec {
    let base = spec.clone();
    CurveSpec::new(format!("{} mirrored", spec.label()), spec.period(), move |t| {
        let mut j = base.jet(t);
        for d in j.iter_mut() {
            d.z = -d.z;
        }
        j
    })
}

/// Sixth-order central difference of a vector function.
pub fn fd6(f: impl Fn(f64) -> Vector3<f64>, t: f64, h: f64) -> Vector3<f64> {
    let c = [(1.0, 45.0), (2.0, -9.0), (3.0, 1.0)];
    c.iter().fold(Vector3::zeros(), |acc, &(k, w)| acc + (f(t + k * h) - f(t - k * h)) * w) / (60.0 * h)
}
