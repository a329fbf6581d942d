//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use common::random_knot;
use curvegeom::curve_core::*;
use curvegeom::framing::*;
use curvegeom::global_geometry::*;
use curvegeom::strip_family::*;
use curvegeom::sweep_engine::*;
use curvegeom::Result;
use nalgebra::Vector3;
use rand::{rngs::StdRng, Rng, SeedableRng};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;

type Outcome = Result<(bool, String)>;

struct Sweeps(BTreeMap<u32, Vec<SweepRow>>);

impl Sweeps {
    fn get(&mut self, n: u32) -> Result<&Vec<SweepRow>> {
        if !self.0.contains_key(&n) {
            let rows = run_sweep(&SweepConfig::default_for(n))?;
            self.0.insert(n, rows);
        }
        Ok(&self.0[&n])
    }
}

fn criterion_1() -> Outcome {
    let exact = alpha_c(1) == 4.0 / 5.0 && alpha_c(2) == 1.0 / 2.0 && alpha_c(3) == 4.0 / 13.0;
    let mut ok = exact;
    let mut counts = Vec::new();
    for n in 1..=5 {
        let c = critical_data(n)?;
        ok &= c.alpha_c == alpha_c(n) && c.t_c.len() == n as usize;
        counts.push(format!("n={n}:{}", c.t_c.len()));
    }
    Ok((ok, format!("alpha_c exact = {exact}; inflexions at alpha_c {}", counts.join(" "))))
}

fn criterion_2(sweeps: &mut Sweeps) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (n, want) in [(1, 3), (2, 1), (3, 5), (4, 1)] {
        let rows = sweeps.get(n)?;
        let good: Vec<&SweepRow> = rows.iter().filter(|r| r.converged).collect();
        let worst = good.iter().map(|r| r.integerness()).fold(0.0, f64::max);
        let mut seen: Vec<i64> = good.iter().map(|r| r.lk_g.round() as i64).collect();
        seen.dedup();
        let pass = !good.is_empty() && worst < 1e-3 && seen.iter().all(|&v| v == want);
        ok &= pass;
        notes.push(format!("n={n}: round(Lk_g) {seen:?} want {want}, max |Lk_g - round| {worst:.1e}, {}/{} rows", good.len(), rows.len()));
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for alpha in [0.3, 0.6, 1.0] {
        let s = sample_curve(&strip_boundary(&StripParams::new(1, alpha), Edge::Plus), 2048)?;
        let g = summarize(&s, &frenet_frame(&s)?, 1e-3 * s.length)?;
        let pass = g.converged && g.lk_residual < 1e-6 && g.cwf_residual.abs() < 1e-6;
        ok &= pass;
        notes.push(format!("alpha={alpha}: Lk={} (off {:.1e}), Lk-Tw-Wr={:.1e}", g.lk, g.lk_residual, g.cwf_residual));
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_4() -> Outcome {
    let s = sample_curve(&random_knot(2024), 2048)?;
    let f = frenet_frame(&s)?;
    let (tw0, ph0) = (twist(&f), total_phase(&f)?.total_phase);
    let mut rng = StdRng::seed_from_u64(4);
    let p = s.period();
    let (mut dtw, mut dph, mut dtg) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let w = rng.gen_range(-2i32..=2) as f64;
        let c: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))).collect();
        let eta = Gauge::new(move |t| {
            let x = 2.0 * PI * t / p;
            w * x + c.iter().enumerate().map(|(j, (a, ph))| a * ((j + 1) as f64 * x + ph).sin()).sum::<f64>()
        });
        let g = gauge_rotate(&f, &eta);
        let (tw, ph) = (twist(&g), total_phase(&g)?.total_phase);
        dtw = dtw.max((tw - tw0 - w).abs());
        dph = dph.max((ph - ph0 - w).abs());
        dtg = dtg.max(((tw - ph) - (tw0 - ph0)).abs());
    }
    let ok = dtw < 1e-8 && dph < 1e-8 && dtg < 1e-8;
    Ok((ok, format!("max errors: twist {dtw:.1e}, phase {dph:.1e}, Tw_g {dtg:.1e}")))
}

fn thin_writhe(n: u32, alpha: f64) -> Result<f64> {
    let s = sample_curve(&strip_boundary(&StripParams::new(n, alpha), Edge::Plus), 2048)?;
    Ok(writhe_converged(&s, &Convergence::default())?.value)
}

fn criterion_5() -> Outcome {
    let w1 = thin_writhe(1, 0.01)?;
    let w1b = thin_writhe(1, 0.02)?;
    let extrapolated = 2.0 * w1 - w1b;
    let w3 = thin_writhe(3, 0.01)?;
    let w2 = thin_writhe(2, 0.01)?;
    let ok = (0.95..=1.05).contains(&w1) && (extrapolated - 1.0).abs() < 1e-2 && (w3 - 3.0).abs() < 5e-2 && w2.abs() < 1e-2;
    Ok((ok, format!("Wr(1,0.01)={w1:.6}, extrapolated {extrapolated:.6}; Wr(3,0.01)={w3:.6}; Wr(2,0.01)={w2:.2e}")))
}

fn criterion_6(sweeps: &mut Sweeps) -> Outcome {
    let rows = sweeps.get(1)?;
    let tau = continuity_report(rows, Quantity::IntTau)?;
    let phi = continuity_report(rows, Quantity::PhiT)?;
    let side = |alpha: f64| -> Result<(f64, f64)> {
        let s = sample_curve(&strip_boundary(&StripParams::new(1, alpha), Edge::Plus), 2048)?;
        Ok((gauge_invariant_twist(&s)?, writhe_converged(&s, &Convergence::default())?.value))
    };
    let (tg_lo, wr_lo) = side(0.78)?;
    let (tg_hi, wr_hi) = side(0.82)?;
    // phi_T of the Frenet frame on either side, at the same widths
    let phase = |alpha: f64| -> Result<f64> {
        let s = sample_curve(&strip_boundary(&StripParams::new(1, alpha), Edge::Plus), 2048)?;
        Ok(total_phase(&frenet_frame(&s)?)?.total_phase)
    };
    let direct = phase(0.82)? - phase(0.78)?;
    let ok = (tau.jump.abs() - 1.0).abs() < 0.05
        && (phi.jump.abs() - 1.0).abs() < 0.05
        && direct.abs().round() == 1.0
        && (tg_hi - tg_lo).abs() < 0.05
        && (wr_hi - wr_lo).abs() < 0.05;
    Ok((
        ok,
        format!(
            "int_tau jump {:.4}, phi_T jump {:.4} (direct {:.4}), |dTw_g| {:.2e}, |dWr| {:.2e}",
            tau.jump,
            phi.jump,
            direct,
            (tg_hi - tg_lo).abs(),
            (wr_hi - wr_lo).abs()
        ),
    ))
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for alpha in [0.75, 0.85] {
        for t0 in [0.05, 0.1] {
            let p = StripParams::new(1, alpha).with_handedness(Handedness::Left);
            let w = torsion_window_angle(&p, t0)?;
            let rel = ((w.numeric - w.predicted) / w.predicted).abs();
            ok &= rel < 0.1;
            notes.push(format!("({alpha},{t0}): {:.4} vs {:.4}", w.numeric, w.predicted));
        }
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_8() -> Outcome {
    let p = |alpha| StripParams::new(1, alpha).with_handedness(Handedness::Left);
    let (mut worst_k, mut worst_t, mut checked) = (0.0f64, 0.0f64, 0);
    for i in -3i32..=3 {
        let alpha = 0.8 + 0.01 * i as f64;
        for k in -4i32..=4 {
            let t = 2.0 * PI + 0.025 * k as f64;
            let (kp, tp) = asymptotic_kappa_tau(alpha, t)?;
            let j = strip_jet(&p(alpha), alpha, t);
            let c = j[1].cross(&j[2]);
            if c.norm() < 1e-12 {
                continue;
            }
            let km = curvature_at(&j[1], &j[2])?;
            let tm = torsion_at(&j[1], &j[2], &j[3])?;
            if kp.abs() > 1e-3 {
                worst_k = worst_k.max(((km - kp) / kp).abs());
                checked += 1;
            }
            if tp.is_finite() && tp.abs() > 1e-3 {
                worst_t = worst_t.max(((tm - tp) / tp).abs());
                checked += 1;
            }
        }
    }
    let ok = checked > 0 && worst_k < 0.1 && worst_t < 0.1;
    Ok((ok, format!("{checked} comparisons; worst relative error kappa {worst_k:.3}, tau {worst_t:.3}")))
}

fn criterion_9(sweeps: &mut Sweeps) -> Outcome {
    let f1 = feature_extract(sweeps.get(1)?);
    let f2 = feature_extract(sweeps.get(2)?);
    let near = |e: &Option<Extremum>| e.map_or(false, |e| e.a.abs() <= 0.25);
    let ok = near(&f1.wr_max) && f1.tw_g_min.is_some() && f1.wr_range > f2.wr_range;
    let show = |e: &Option<Extremum>| e.map_or("none".to_string(), |e| format!("{:.4} at a={:.3}", e.value, e.a));
    Ok((
        ok,
        format!(
            "n=1 Wr interior max {}, Tw_g interior min {} (interior Wr min {}, Tw_g max {}); Wr range n=1 {:.4} vs n=2 {:.4}",
            show(&f1.wr_max),
            show(&f1.tw_g_min),
            show(&f1.wr_min),
            show(&f1.tw_g_max),
            f1.wr_range,
            f2.wr_range
        ),
    ))
}

fn ring(center: Vector3<f64>, e1: Vector3<f64>, e2: Vector3<f64>) -> CurveSpec {
    CurveSpec::new("ring", 2.0 * PI, move |t| {
        let (s, c) = t.sin_cos();
        [center + e1 * c + e2 * s, -e1 * s + e2 * c, -e1 * c - e2 * s, e1 * s - e2 * c]
    })
}

fn criterion_10() -> Outcome {
    let (mut chord, mut routes) = (0.0f64, 0.0f64);
    for seed in 100..105 {
        let s = sample_curve(&random_knot(seed), 1024)?;
        chord = chord.max((writhe_on_grid(&s)? - writhe_chordform_on_grid(&s)?).abs());
        let fs = twist_minus_phase(&frenet_frame(&s)?)?;
        routes = routes.max((fs - parallel_route(&s)?).abs());
    }
    let a = sample_curve(&ring(Vector3::zeros(), Vector3::x(), Vector3::y()), 256)?;
    let b = sample_curve(&ring(Vector3::x(), Vector3::x(), Vector3::z()), 256)?;
    let hopf = gauss_linking(&a, &b)?.value;
    let c = sample_curve(&CurveSpec::circle(1.0), 256)?;
    let g = summarize(&c, &frenet_frame(&c)?, 1e-3 * c.length)?;
    let zero = [g.tw, g.phi_t, g.tw_g, g.wr, g.lk_value, g.lk_g].iter().map(|x| x.abs()).fold(0.0, f64::max);
    let ok = chord < 1e-8 && routes < 1e-6 && (hopf.abs() - 1.0).abs() < 1e-8 && zero < 1e-10;
    Ok((ok, format!("chord vs classical {chord:.1e}; FS vs parallel Tw_g {routes:.1e}; Hopf {hopf:.10}; circle max |x| {zero:.1e}")))
}

fn main() -> ExitCode {
    let mut sweeps = Sweeps(BTreeMap::new());
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "critical width and inflexion count", criterion_1()),
        (2, "Lk_g plateaus over the default sweeps", criterion_2(&mut sweeps)),
        (3, "CWF identity on the n = 1 ribbon", criterion_3()),
        (4, "gauge invariance", criterion_4()),
        (5, "thin-strip writhe limits", criterion_5()),
        (6, "inflexion transition at alpha_c (n = 1)", criterion_6(&mut sweeps)),
        (7, "window torsion formula (n = 1)", criterion_7()),
        (8, "Taylor forms of kappa and tau (n = 1)", criterion_8()),
        (9, "Wr and Tw_g features against a", criterion_9(&mut sweeps)),
        (10, "oracle equivalences", criterion_10()),
    ];
    let mut failed = 0;
    for (i, name, r) in results {
        let (ok, detail) = match r {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("criterion {i:>2} {}: {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
