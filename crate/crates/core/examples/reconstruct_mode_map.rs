//! Searches for the 8-mode pendulum map and writes `fixtures/pendulum_modes.json`.
//!
//! Label 2 is the `H = h = 0.2` mode. Labels 3 and 4 range over ordered
//! pairs of the remaining unstable candidates, and labels 1, 5, 6, 7, 8 over
//! 5-subsets of the stable candidates in candidate order. A map is kept
//! when degree-0 stabilization gives Perron root 5, degree-1 stabilization
//! is certified, and `32645` stays accepted with growth below one. Kept maps
//! are ranked by distance of the degree-1 entropy to log2(7.2568898).
//!
//! Run with `cargo run --release -p switchprune --example reconstruct_mode_map`.

use std::time::Instant;

use serde_json::json;
use switchprune::models::{
    pendulum_candidate_modes, pendulum_system, ModeMapEntry, ModeMapFixture, PendulumMode, PendulumParams,
    SolverMethod, MODE_MAP_SCHEMA,
};
use switchprune::{stabilize_impl, OracleConfig, Symbol, Word};

const TARGET_ROOT: f64 = 7.2568898;

struct Scored {
    modes: Vec<PendulumMode>,
    root0: f64,
    root1: f64,
    growth_32645: f64,
    distance: f64,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out.sort();
    out
}

fn evaluate(params: &PendulumParams, modes: &[PendulumMode], cfg: &OracleConfig) -> Result<Scored, String> {
    let inst = pendulum_system(params, modes).map_err(|e| e.to_string())?;
    if inst.unstable_labels() != vec![2, 3, 4] {
        return Err("unstable labels differ from 2, 3, 4".into());
    }
    let t0 = stabilize_impl(&inst.css, cfg).map_err(|e| format!("degree 0: {e}"))?;
    if (t0.final_perron_root - 5.0).abs() > 1e-9 {
        return Err(format!("degree 0 root {}", t0.final_perron_root));
    }
    let lifted = inst
        .css
        .with_graph(inst.css.graph().lift(1).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let t1 = stabilize_impl(&lifted, cfg).map_err(|e| format!("degree 1: {e}"))?;
    let w: Word = "32645".parse().expect("valid word");
    if !t1.final_css.graph().accepts_periodic(&w) {
        return Err("32645 not accepted after degree 1".into());
    }
    let growth_32645 = inst.css.growth(&w).map_err(|e| e.to_string())?;
    if growth_32645 >= 1.0 {
        return Err(format!("32645 growth {growth_32645}"));
    }
    Ok(Scored {
        modes: modes.to_vec(),
        root0: t0.final_perron_root,
        root1: t1.final_perron_root,
        growth_32645,
        distance: (t1.final_perron_root.log2() - TARGET_ROOT.log2()).abs(),
    })
}

fn main() {
    let started = Instant::now();
    let params = PendulumParams::default();
    let cands = pendulum_candidate_modes();
    let radii = pendulum_system(&params, &cands).expect("candidates build").spectral_radii;
    let unstable: Vec<usize> = (0..cands.len()).filter(|&i| radii[i] > 1.0).collect();
    let stable: Vec<usize> = (0..cands.len()).filter(|&i| radii[i] <= 1.0).collect();
    let named = cands
        .iter()
        .position(|m| m.method == SolverMethod::Midpoint && m.h == 0.2 && m.big_h == 0.2)
        .expect("H = h = 0.2 candidate");

    let cfg = OracleConfig::default();
    let mut kept: Vec<Scored> = Vec::new();
    let mut rejected = 0usize;
    let mut evaluated = 0usize;
    for &a3 in &unstable {
        for &a4 in &unstable {
            if a3 == named || a4 == named || a3 == a4 {
                continue;
            }
            for subset in combinations(stable.len(), 5) {
                let s: Vec<PendulumMode> = subset.iter().map(|&i| cands[stable[i]]).collect();
                let modes = vec![s[0], cands[named], cands[a3], cands[a4], s[1], s[2], s[3], s[4]];
                evaluated += 1;
                match evaluate(&params, &modes, &cfg) {
                    Ok(sc) => kept.push(sc),
                    Err(_) => rejected += 1,
                }
            }
        }
    }
    // Stable sort keeps enumeration order among equal distances.
    kept.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    let describe = |modes: &[PendulumMode]| -> Vec<String> { modes.iter().map(|m| m.describe()).collect() };
    let best = kept.first().expect("at least one map passes the gates");
    let top: Vec<serde_json::Value> = kept
        .iter()
        .take(10)
        .map(|s| {
            json!({
                "modes": describe(&s.modes),
                "degree0_root": s.root0,
                "degree1_root": s.root1,
                "growth_32645": s.growth_32645,
                "entropy_distance_bits": s.distance,
            })
        })
        .collect();
    let fixture = ModeMapFixture {
        schema: MODE_MAP_SCHEMA.into(),
        params,
        modes: best
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| ModeMapEntry {
                label: i as Symbol + 1,
                mode: *m,
            })
            .collect(),
        audit: json!({
            "generator": "cargo run --release -p switchprune --example reconstruct_mode_map",
            "candidates": cands.iter().zip(&radii).map(|(m, r)| json!({"mode": m.describe(), "spectral_radius": r})).collect::<Vec<_>>(),
            "label_2": cands[named].describe(),
            "stabilizer": "stabilize_impl, default oracle configuration",
            "target_degree1_root": TARGET_ROOT,
            "evaluated": evaluated,
            "rejected": rejected,
            "kept": kept.len(),
            "top": top,
        }),
    };
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pendulum_modes.json");
    let text = serde_json::to_string_pretty(&fixture).expect("serializable") + "\n";
    std::fs::write(path, text).expect("fixture written");
    println!(
        "evaluated {evaluated}, kept {}, best degree-1 root {} ({:.2?})",
        kept.len(),
        best.root1,
        started.elapsed()
    );
}
