//! Scratch numerical probes used while pinning acceptance parameters.
use healcrete::experiments::*;
use healcrete::simulation::*;
use healcrete::*;
use std::time::Instant;

fn heal_time(cfg: SimConfig, threshold: f64) -> (Option<f64>, bool) {
    let trace = run(cfg).unwrap();
    (time_to_heal(&trace, threshold).time(), trace.completed)
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "cdm".into());
    match mode.as_str() {
        "cdm" => probe_cdm(),
        "cmm" => probe_cmm(),
        "angle" => probe_angle(),
        "dt" => probe_dt(),
        "mirror" => probe_mirror(),
        "width" => probe_width(),
        "surface" => probe_surface(),
        "dataset" => probe_dataset(),
        other => eprintln!("unknown probe {other}"),
    }
}

fn probe_cdm() {
    let t0 = Instant::now();
    let cfg = SimConfig::default();
    let trace = run(cfg).unwrap();
    let t50 = time_to_heal(&trace, 0.5).time();
    let t95 = time_to_heal(&trace, 0.95).time();
    let u_min = trace.rows.iter().map(|r| r.u_min).fold(f64::MAX, f64::min);
    let u_max = trace.rows.iter().map(|r| r.u_max).fold(f64::MIN, f64::max);
    println!(
        "CDM default: t50={t50:?} t95={t95:?} completed={} u_min={u_min:.3e} u_max={u_max} rows={} elapsed={:?}",
        trace.completed, trace.rows.len(), t0.elapsed()
    );
    // consistent-mass comparison
    let cfg2 = SimConfig { lumped_mass: false, ..cfg };
    let trace2 = run(cfg2).unwrap();
    let t50c = time_to_heal(&trace2, 0.5).time();
    let u_min2 = trace2.rows.iter().map(|r| r.u_min).fold(f64::MAX, f64::min);
    println!("CDM consistent-mass: t50={t50c:?} u_min={u_min2:.3e}");
    // arithmetic averaging comparison
    let cfg3 = SimConfig { coeff_average: CoeffAverage::Arithmetic, ..cfg };
    let t50a = heal_time(cfg3, 0.5).0;
    println!("CDM arithmetic avg: t50={t50a:?}");
}

fn probe_cmm() {
    for eps in [1e-3, 1e-4, 1e-5] {
        let t0 = Instant::now();
        let mut cfg = SimConfig::default();
        cfg.model = ModelKind::Cmm;
        cfg.gate.epsilon_gate = eps;
        let cmp = model_comparison(&SimConfig { gate: cfg.gate, ..cfg }).unwrap();
        let t_cdm = time_to_heal(&cmp.cdm, 0.95).time();
        let t_cmm = time_to_heal(&cmp.cmm, 0.95).time();
        let rates = healing_rates(&cmp.cmm);
        // pre-gate max: running max at the moment of first dip below 25%
        let mut run_max = 0.0f64;
        let mut premax = None;
        let mut dip_start = None;
        for &(t, r) in &rates {
            if r > run_max { run_max = r; }
            if premax.is_none() && run_max > 0.0 && r < 0.25 * run_max {
                premax = Some(run_max);
                dip_start = Some(t);
                break;
            }
        }
        let (dip_len, min_ratio, recovered) = if let (Some(pm), Some(ds)) = (premax, dip_start) {
            let mut len = 0usize;
            let mut min_ratio = f64::MAX;
            let mut rec = false;
            let mut in_dip = true;
            for &(t, r) in rates.iter().filter(|(t, _)| *t >= ds) {
                let _ = t;
                if in_dip {
                    if r < 0.25 * pm { len += 1; min_ratio = min_ratio.min(r / pm); } else { in_dip = false; }
                }
                if r > pm { rec = true; }
            }
            (len, min_ratio, rec)
        } else { (0, f64::NAN, false) };
        println!(
            "CMM eps={eps:.0e}: t_cdm={t_cdm:?} t_cmm={t_cmm:?} cmm_completed={} premax={premax:?} dip_start={dip_start:?} dip_len={dip_len} min_ratio={min_ratio:.3} recovered={recovered} stage1={:?} stage2={:?} elapsed={:?}",
            cmp.cmm.completed, cmp.stage1_end, cmp.stage2_end, t0.elapsed()
        );
    }
}

fn probe_angle() {
    let t0 = Instant::now();
    let base = SimConfig { t_max: 2e7, ..SimConfig::default() };
    let spec = SweepSpec {
        varied: VariedParam::Beta,
        values: (0..13).map(|i| i as f64 * 15.0).collect(),
        base,
    };
    let rows = angle_sweep(&spec, 1).unwrap();
    for r in &rows {
        println!("beta={:>5}  t95={:?} note={:?}", r.value, r.heal_time, r.note);
    }
    println!("elapsed={:?}", t0.elapsed());
}

fn probe_dt() {
    let base = SimConfig::default();
    let t1 = heal_time(base, 0.95).0.unwrap();
    let half = SimConfig { dt: 1000.0, ..base };
    let t2 = heal_time(half, 0.95).0.unwrap();
    println!("dt=2000: {t1}; dt=1000: {t2}; rel change {:.4}", (t1 - t2).abs() / t1);
}

fn probe_mirror() {
    for beta_deg in [15.0, 30.0, 45.0] {
        let mk = |deg: f64| {
            let mut c = SimConfig::default();
            c.crack.beta = (deg as f64).to_radians();
            c.t_max = 2e7;
            c
        };
        let a = run(mk(beta_deg)).unwrap();
        let b = run(mk(180.0 - beta_deg)).unwrap();
        let ta = time_to_heal(&a, 0.95).time().unwrap();
        let tb = time_to_heal(&b, 0.95).time().unwrap();
        let max_rel = a
            .rows
            .iter()
            .zip(&b.rows)
            .map(|(x, y)| {
                let denom = x.healing.abs().max(1e-12);
                ((x.healing - y.healing).abs() / denom).min((x.healing - y.healing).abs() * 1e6)
            })
            .fold(0.0f64, f64::max);
        println!(
            "beta={beta_deg}: t={ta:.4e} mirror={tb:.4e} rel diff {:.2e}; rows {} vs {}; max healing rel diff {:.2e}",
            (ta - tb).abs() / ta, a.rows.len(), b.rows.len(), max_rel
        );
    }
}

fn probe_width() {
    let t0 = Instant::now();
    for (dc, lo, hi) in [(1e-9, 0.025, 0.040), (1e-7, 0.005, 0.025)] {
        let base = SimConfig { n_div: 16, t_max: 2e7, ..SimConfig::default() };
        let values: Vec<f64> = (0..7).map(|i| lo + i as f64 * (hi - lo) / 6.0).collect();
        let spec = SweepSpec { varied: VariedParam::Sigma, values, base };
        let rows = width_sweep(&spec, Some(dc), 1).unwrap();
        println!("D_cracked={dc:.0e}:");
        for r in &rows {
            println!("  sigma={:.4} t95={:?}", r.value, r.heal_time);
        }
    }
    println!("elapsed={:?}", t0.elapsed());
}

fn probe_surface() {
    let t0 = Instant::now();
    let base = SimConfig { n_div: 16, t_max: 2e7, ..SimConfig::default() };
    let sigmas: Vec<f64> = (0..6).map(|i| 0.010 + i as f64 * 0.005).collect();
    let gammas: Vec<f64> = (0..6).map(|i| 0.010 + i as f64 * 0.010).collect();
    let rows = surface_sweep(&sigmas, &gammas, &base, 1).unwrap();
    println!("grid (sigma rows x gamma cols):");
    for (i, s) in sigmas.iter().enumerate() {
        let line: Vec<String> = (0..gammas.len())
            .map(|j| format!("{:.3e}", rows[i * gammas.len() + j].heal_time.unwrap_or(-1.0)))
            .collect();
        println!("  s={:.3}: {}", s, line.join(" "));
    }
    // second differences along gamma (fixed sigma) and along sigma (fixed gamma)
    for (i, s) in sigmas.iter().enumerate() {
        let col: Vec<f64> = (0..gammas.len()).map(|j| rows[i * gammas.len() + j].heal_time.unwrap()).collect();
        let d2 = second_differences(&col);
        println!("  gamma-convexity s={s:.3}: {:?}", d2.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>());
    }
    for (j, g) in gammas.iter().enumerate() {
        let row: Vec<f64> = (0..sigmas.len()).map(|i| rows[i * gammas.len() + j].heal_time.unwrap()).collect();
        let d2 = second_differences(&row);
        println!("  sigma-concavity g={g:.3}: {:?}", d2.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>());
    }
    println!("elapsed={:?}", t0.elapsed());
}

fn probe_dataset() {
    let t0 = Instant::now();
    // A sub-grid of the desk spec to estimate timing and label balance.
    let mut spec = DatasetSpec::desk();
    spec.sigma = GridRange::new(0.001, 0.1, 0.0165); // 7 values
    spec.gamma = GridRange::new(0.001, 0.1, 0.0165);
    let out = generate_dataset(&spec, 1).unwrap();
    let ones: usize = out.rows.iter().map(|r| r.h as usize).sum();
    println!(
        "cells=49 rows={} ones={ones} ({:.1}%) skipped={} elapsed={:?} (desk would be ~{:?})",
        out.rows.len(),
        100.0 * ones as f64 / out.rows.len() as f64,
        out.skipped.len(),
        t0.elapsed(),
        t0.elapsed() * (625 / 49) as u32
    );
}
