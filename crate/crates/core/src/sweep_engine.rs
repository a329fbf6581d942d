//! Width sweeps over the strip family, feature extraction and persistence.

use crate::curve_core::sample_curve;
use crate::error::{GeomError, Result};
use crate::framing::{frenet_frame, parallel_transport_frame, any_normal, total_phase, twist, FrameField};
use crate::global_geometry::{close_frame, ribbon_linking, writhe_converged, Convergence};
use crate::strip_family::{alpha_c, inflexions_per_curve, strip_boundary, Edge, Handedness, StripParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const CSV_HEADER: &str = "n,alpha,a,Wr,Tw_g,phi_g,int_tau,phi_T,Lk_g,cwf_residual,m_used,converged";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: u32,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub steps: usize,
    /// Rows with |a| below this are skipped, a = (alpha - alpha_c) / alpha_c.
    pub exclude_radius: f64,
    pub tol: f64,
    pub m_initial: usize,
    pub m_max: usize,
    /// Ribbon offset as a fraction of the curve length.
    pub epsilon_factor: f64,
    pub edge: Edge,
    pub handedness: Handedness,
}

impl SweepConfig {
    /// a in [-0.9, 0.8] with 40 steps.
    pub fn default_for(n: u32) -> Self {
        let ac = alpha_c(n);
        Self {
            n,
            alpha_min: 0.1 * ac,
            alpha_max: 1.8 * ac,
            steps: 40,
            exclude_radius: 0.005,
            tol: 1e-6,
            m_initial: 2048,
            m_max: 1 << 14,
            epsilon_factor: 1e-3,
            edge: Edge::Plus,
            handedness: Handedness::Right,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GeomError::InvalidInput(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max && self.alpha_max.is_finite()) {
            return bad(format!("need 0 < alpha_min < alpha_max, got [{}, {}]", self.alpha_min, self.alpha_max));
        }
        if self.steps < 2 {
            return bad(format!("steps must be >= 2, got {}", self.steps));
        }
        if !(self.tol > 0.0) || !(self.exclude_radius >= 0.0) || !(self.epsilon_factor > 0.0) {
            return bad("tol, exclude_radius and epsilon_factor must be positive".into());
        }
        if self.m_initial < 16 || self.m_initial % 2 != 0 || self.m_max < self.m_initial {
            return bad(format!("bad grid sizes m_initial = {}, m_max = {}", self.m_initial, self.m_max));
        }
        Ok(())
    }

    /// The alpha grid with the band around alpha_c removed.
    pub fn alphas(&self) -> Vec<f64> {
        let ac = alpha_c(self.n);
        (0..self.steps)
            .map(|i| self.alpha_min + (self.alpha_max - self.alpha_min) * i as f64 / (self.steps - 1) as f64)
            .filter(|&al| ((al - ac) / ac).abs() >= self.exclude_radius)
            .collect()
    }

    fn convergence(&self) -> Convergence {
        Convergence { tol: self.tol, m_max: self.m_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u32,
    pub alpha: f64,
    pub a: f64,
    #[serde(rename = "Wr")]
    pub wr: f64,
    #[serde(rename = "Tw_g")]
    pub tw_g: f64,
    pub phi_g: f64,
    pub int_tau: f64,
    /// Total phase of the principal normal (of the closed parallel frame
    /// when the grid hits an inflexion exactly).
    #[serde(rename = "phi_T")]
    pub phi_t: f64,
    #[serde(rename = "Lk_g")]
    pub lk_g: f64,
    pub cwf_residual: f64,
    pub m_used: usize,
    pub converged: bool,
    #[serde(skip)]
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(n: u32, alpha: f64, a: f64, err: &GeomError) -> Self {
        Self {
            n,
            alpha,
            a,
            wr: f64::NAN,
            tw_g: f64::NAN,
            phi_g: f64::NAN,
            int_tau: f64::NAN,
            phi_t: f64::NAN,
            lk_g: f64::NAN,
            cwf_residual: f64::NAN,
            m_used: 0,
            converged: false,
            error: Some(err.to_string()),
        }
    }

    /// |Lk_g - round(Lk_g)|.
    pub fn integerness(&self) -> f64 {
        (self.lk_g - self.lk_g.round()).abs()
    }
}

fn row(config: &SweepConfig, alpha: f64) -> Result<SweepRow> {
    let params = StripParams { n: config.n, alpha, radius: 1.0, handedness: config.handedness };
    let a = params.reduced_width();
    let spec = strip_boundary(&params, config.edge);
    let conv = config.convergence();

    // resolve the torsion spike by doubling until the integral settles
    let mut samples = sample_curve(&spec, config.m_initial)?;
    let mut int_tau = samples.integrated_torsion();
    let mut tau_ok = false;
    while let Ok(prev) = int_tau {
        if 2 * samples.m > conv.m_max {
            break;
        }
        let finer = sample_curve(&spec, 2 * samples.m)?;
        let next = finer.integrated_torsion();
        samples = finer;
        match next {
            Ok(v) if (v - prev).abs() < conv.tol => {
                int_tau = Ok(v);
                tau_ok = true;
                break;
            }
            other => int_tau = other,
        }
    }

    let frame: FrameField = match frenet_frame(&samples) {
        Ok(f) => f,
        Err(GeomError::InflexionPoint { .. }) => {
            close_frame(&parallel_transport_frame(&samples, any_normal(&samples.tangent(0))))
        }
        Err(e) => return Err(e),
    };
    let tw = twist(&frame);
    let phase = total_phase(&frame)?;
    let wr = writhe_converged(&sample_curve(&spec, config.m_initial)?, &conv)?;
    let lk = ribbon_linking(&frame, config.epsilon_factor * samples.length, &conv)?;
    let phi_t = phase.total_phase;
    let tw_g = tw - phi_t;
    Ok(SweepRow {
        n: config.n,
        alpha,
        a,
        wr: wr.value,
        tw_g,
        phi_g: -tw_g,
        int_tau: int_tau.unwrap_or(f64::NAN),
        phi_t,
        lk_g: lk.nearest as f64 - phi_t,
        cwf_residual: lk.value - tw - wr.value,
        m_used: wr.m_used.max(lk.m_used).max(samples.m),
        converged: tau_ok && wr.converged && lk.converged,
        error: None,
    })
}

/// One row per alpha, ordered by alpha; failures are recorded in the row.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let rows = config
        .alphas()
        .into_par_iter()
        .map(|alpha| {
            row(config, alpha).unwrap_or_else(|e| {
                let a = (alpha - alpha_c(config.n)) / alpha_c(config.n);
                SweepRow::failed(config.n, alpha, a, &e)
            })
        })
        .collect();
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "Wr")]
    Wr,
    #[serde(rename = "Tw_g")]
    TwG,
    #[serde(rename = "Lk_g")]
    LkG,
    #[serde(rename = "int_tau")]
    IntTau,
    #[serde(rename = "phi_T")]
    PhiT,
}

impl Quantity {
    pub fn of(&self, r: &SweepRow) -> f64 {
        match self {
            Quantity::Wr => r.wr,
            Quantity::TwG => r.tw_g,
            Quantity::LkG => r.lk_g,
            Quantity::IntTau => r.int_tau,
            Quantity::PhiT => r.phi_t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuity {
    Continuous,
    UnitJump,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub quantity: Quantity,
    /// Right limit minus left limit at a = 0.
    pub jump: f64,
    pub left_limit: f64,
    pub right_limit: f64,
    pub class: Continuity,
}

/// Jump at a = 0 from one-sided linear extrapolation of the two nearest
/// converged rows on each side.
pub fn continuity_report(rows: &[SweepRow], quantity: Quantity) -> Result<ContinuityReport> {
    let good: Vec<&SweepRow> = rows.iter().filter(|r| r.converged && quantity.of(r).is_finite()).collect();
    let mut left: Vec<&SweepRow> = good.iter().copied().filter(|r| r.a < 0.0).collect();
    let mut right: Vec<&SweepRow> = good.iter().copied().filter(|r| r.a > 0.0).collect();
    if left.len() < 2 || right.len() < 2 {
        return Err(GeomError::InsufficientRows(format!(
            "need two converged rows on each side of a = 0, have {} and {}",
            left.len(),
            right.len()
        )));
    }
    left.sort_by(|x, y| y.a.total_cmp(&x.a));
    right.sort_by(|x, y| x.a.total_cmp(&y.a));
    let extrapolate = |p: &SweepRow, q: &SweepRow| {
        let (fp, fq) = (quantity.of(p), quantity.of(q));
        fp - p.a * (fq - fp) / (q.a - p.a)
    };
    let left_limit = extrapolate(left[0], left[1]);
    let right_limit = extrapolate(right[0], right[1]);
    let jump = right_limit - left_limit;
    let jumps = inflexions_per_curve(rows[0].n) as f64;
    let class = if jump.abs() < 0.05 {
        Continuity::Continuous
    } else if (jump.abs() - jumps).abs() < 0.05 {
        Continuity::UnitJump
    } else {
        Continuity::Other
    };
    Ok(ContinuityReport { quantity, jump, left_limit, right_limit, class })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub a: f64,
    pub alpha: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    /// Largest Wr, if it lies strictly inside the a-range.
    pub wr_max: Option<Extremum>,
    /// Smallest Tw_g, if it lies strictly inside the a-range.
    pub tw_g_min: Option<Extremum>,
    /// Smallest Wr, if interior.
    pub wr_min: Option<Extremum>,
    /// Largest Tw_g, if interior.
    pub tw_g_max: Option<Extremum>,
    pub wr_range: f64,
    /// Most frequent round(Lk_g) over converged rows.
    pub lk_g_plateau: Option<i64>,
    /// Largest |Lk_g - plateau| over converged rows.
    pub lk_g_max_deviation: f64,
    pub rows_used: usize,
}

fn interior_extremum(rows: &[&SweepRow], f: impl Fn(&SweepRow) -> f64, largest: bool) -> Option<Extremum> {
    if rows.len() < 3 {
        return None;
    }
    let key = |r: &SweepRow| if largest { f(r) } else { -f(r) };
    let (i, best) = rows
        .iter()
        .enumerate()
        .max_by(|x, y| key(x.1).total_cmp(&key(y.1)))?;
    if i == 0 || i + 1 == rows.len() {
        return None;
    }
    Some(Extremum { a: best.a, alpha: best.alpha, value: f(best) })
}

/// Extrema of Wr and Tw_g against a, and the Lk_g plateau.
pub fn feature_extract(rows: &[SweepRow]) -> Features {
    let mut good: Vec<&SweepRow> = rows.iter().filter(|r| r.converged).collect();
    good.sort_by(|x, y| x.a.total_cmp(&y.a));
    let wr_max = interior_extremum(&good, |r| r.wr, true);
    let tw_g_min = interior_extremum(&good, |r| r.tw_g, false);
    let wr_min = interior_extremum(&good, |r| r.wr, false);
    let tw_g_max = interior_extremum(&good, |r| r.tw_g, true);
    let (lo, hi) = good
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.wr), hi.max(r.wr)));
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for r in &good {
        *counts.entry(r.lk_g.round() as i64).or_default() += 1;
    }
    let lk_g_plateau = counts.iter().max_by_key(|(_, c)| **c).map(|(k, _)| *k);
    let lk_g_max_deviation = lk_g_plateau
        .map(|p| good.iter().map(|r| (r.lk_g - p as f64).abs()).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    Features {
        wr_max,
        tw_g_min,
        wr_min,
        tw_g_max,
        wr_range: if good.is_empty() { 0.0 } else { hi - lo },
        lk_g_plateau,
        lk_g_max_deviation,
        rows_used: good.len(),
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let f = crate::fmt12;
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            f(r.alpha),
            f(r.a),
            f(r.wr),
            f(r.tw_g),
            f(r.phi_g),
            f(r.int_tau),
            f(r.phi_t),
            f(r.lk_g),
            f(r.cwf_residual),
            r.m_used,
            r.converged
        );
    }
    out
}

/// JSON array mirroring the CSV columns, floats at 12 significant digits.
pub fn rows_to_json(rows: &[SweepRow]) -> String {
    let num = |x: f64| -> serde_json::Value {
        crate::fmt12(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(serde_json::Value::Null, serde_json::Value::Number)
    };
    let arr: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "n": r.n,
                "alpha": num(r.alpha),
                "a": num(r.a),
                "Wr": num(r.wr),
                "Tw_g": num(r.tw_g),
                "phi_g": num(r.phi_g),
                "int_tau": num(r.int_tau),
                "phi_T": num(r.phi_t),
                "Lk_g": num(r.lk_g),
                "cwf_residual": num(r.cwf_residual),
                "m_used": r.m_used,
                "converged": r.converged,
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&arr).unwrap_or_default();
    s.push('\n');
    s
}

/// Write through a sibling temporary file and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| GeomError::Io(format!("{}: {e}", path.display()));
    let name = path.file_name().ok_or_else(|| GeomError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(values: &[(f64, f64)]) -> Vec<SweepRow> {
        values
            .iter()
            .map(|&(a, wr)| SweepRow {
                n: 1,
                alpha: 0.8 * (1.0 + a),
                a,
                wr,
                tw_g: 2.0 - wr,
                phi_g: wr - 2.0,
                int_tau: if a < 0.0 { 0.1 } else { 1.1 },
                phi_t: if a < 0.0 { -2.0 } else { -1.0 },
                lk_g: 3.0,
                cwf_residual: 0.0,
                m_used: 2048,
                converged: true,
                error: None,
            })
            .collect()
    }

    #[test]
    fn monotone_rows_have_no_interior_extremum() {
        let rows = synthetic(&(0..12).map(|i| (-0.5 + 0.1 * i as f64, i as f64)).collect::<Vec<_>>());
        let f = feature_extract(&rows);
        assert!(f.wr_max.is_none());
        assert!(f.tw_g_min.is_none());
        assert_eq!(f.lk_g_plateau, Some(3));
        assert_eq!(f.wr_range, 11.0);
    }

    #[test]
    fn jumps_are_classified() {
        let rows = synthetic(&[(-0.3, 0.8), (-0.1, 0.84), (0.1, 0.84), (0.3, 0.8)]);
        let c = continuity_report(&rows, Quantity::Wr).unwrap();
        assert_eq!(c.class, Continuity::Continuous);
        let t = continuity_report(&rows, Quantity::IntTau).unwrap();
        assert_eq!(t.class, Continuity::UnitJump);
        assert!((t.jump - 1.0).abs() < 1e-12);
        assert!(matches!(continuity_report(&rows[..2], Quantity::Wr), Err(GeomError::InsufficientRows(_))));
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::default_for(1);
        assert!(c.validate().is_ok());
        c.steps = 1;
        assert!(c.validate().is_err());
        let d = SweepConfig::default_for(1);
        let al = d.alphas();
        assert!(al.iter().all(|x| ((x - 0.8) / 0.8).abs() >= 0.005));
        assert!((al[0] - 0.08).abs() < 1e-12);
    }

    #[test]
    fn csv_header_fixed() {
        let rows = synthetic(&[(-0.1, 0.9)]);
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("n,alpha,a,Wr,Tw_g,phi_g,int_tau,phi_T,Lk_g,cwf_residual,m_used,converged\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with(",2048,true"));
    }
}
