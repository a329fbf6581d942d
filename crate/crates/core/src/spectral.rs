//! FFT helpers for periodic grid data.

use nalgebra::Vector3;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse(mut buf: Vec<Complex64>) -> Vec<f64> {
    let m = buf.len();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|z| z.re / m as f64).collect()
}

/// Signed wavenumber of FFT bin `j` on an `m`-point grid.
pub(crate) fn wavenumber(j: usize, m: usize) -> f64 {
    if j <= m / 2 {
        j as f64
    } else {
        j as f64 - m as f64
    }
}

/// Derivative of uniformly sampled periodic data (Nyquist mode dropped).
pub fn derivative(values: &[f64], period: f64) -> Vec<f64> {
    let m = values.len();
    let mut spec = forward(values);
    let w0 = 2.0 * PI / period;
    for (j, z) in spec.iter_mut().enumerate() {
        if m % 2 == 0 && j == m / 2 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= Complex64::new(0.0, w0 * wavenumber(j, m));
        }
    }
    inverse(spec)
}

/// Component-wise [`derivative`] of a vector field.
pub fn derivative_vec(values: &[Vector3<f64>], period: f64) -> Vec<Vector3<f64>> {
    let comps: Vec<Vec<f64>> = (0..3)
        .map(|c| derivative(&values.iter().map(|p| p[c]).collect::<Vec<_>>(), period))
        .collect();
    (0..values.len())
        .map(|k| Vector3::new(comps[0][k], comps[1][k], comps[2][k]))
        .collect()
}

/// Cosine and sine coefficients of the trigonometric interpolant of `values`,
/// harmonics 0..=m/2.
pub fn trig_coefficients(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = values.len();
    let spec = forward(values);
    let h = m / 2;
    let mut cos = vec![0.0; h + 1];
    let mut sin = vec![0.0; h + 1];
    cos[0] = spec[0].re / m as f64;
    for j in 1..=h {
        let z = spec[j] / m as f64;
        if m % 2 == 0 && j == h {
            cos[j] = z.re;
        } else {
            cos[j] = 2.0 * z.re;
            sin[j] = -2.0 * z.im;
        }
    }
    (cos, sin)
}

/// Evaluate the `order`-th derivative of a real trigonometric series on the
/// uniform `m`-point grid. Requires `m > 2 * (cos.len() - 1)`, or equality
/// with a vanishing sine at the top harmonic.
pub fn synthesize(cos: &[f64], sin: &[f64], period: f64, m: usize, order: u32) -> Vec<f64> {
    let w0 = 2.0 * PI / period;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let nh = cos.len().max(sin.len());
    for j in 0..nh {
        let c = cos.get(j).copied().unwrap_or(0.0);
        let s = sin.get(j).copied().unwrap_or(0.0);
        let factor = Complex64::new(0.0, w0 * j as f64).powu(order);
        if j == 0 {
            buf[0] += Complex64::new(c, 0.0) * factor;
            continue;
        }
        let plus = Complex64::new(c, -s) * 0.5 * factor;
        let minus = Complex64::new(c, s) * 0.5 * factor.conj();
        if 2 * j == m {
            // both halves alias onto the Nyquist bin
            buf[j] += plus + minus;
        } else {
            buf[j] += plus;
            buf[m - j] += minus;
        }
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|z| z.re).collect()
}
