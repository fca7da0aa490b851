//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::time::{Duration, Instant};

use mapping_torus::curve_factory::MetricCurve;
use mapping_torus::dynamics_probe::{
    asymptotic_check, classify_state, fiber_return_map, independence_rank, lyapunov_spectrum, sol_state, sol_triple,
    LyapunovOptions, OrbitTag,
};
use mapping_torus::geodesic_engine::{integrate_quotient, poisson_bracket, PhaseFunction, PhaseState};
use mapping_torus::invariant_forge::{
    build_q, defining_relation_defect, jordan_layout, momentum_names, rotation_invariants, shifted_jk, solve_gk,
    verify_q_invariance, Monomial, RatPoly,
};
use mapping_torus::matrix_lab::{dual_action, spectrum, validate_monodromy, MonodromyMatrix};
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Outcome { pass: false, detail: format!("panicked: {}", msg.unwrap_or_default()) }
    });
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = out.pass && in_time;
    println!(
        "{} [{id:>2}] {name}: {} ({:.2}s, limit {:.0}s{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs_f64(),
        if in_time { "" } else { ", over time" }
    );
    pass
}

fn m(rows: &[&[i64]]) -> MonodromyMatrix {
    validate_monodromy(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn golden_log() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln()
}

/// `Σ c · p^e` over `p1..p_nvars`, built without the parser.
fn poly(nvars: usize, terms: &[(i64, &[u32])]) -> RatPoly {
    let vars = momentum_names(nvars);
    RatPoly::from_terms(vars, terms.iter().map(|(c, e)| (Monomial::new(e.to_vec()), BigRational::from_integer((*c).into()))))
}

fn printed_g(k: usize) -> RatPoly {
    match k {
        1 => poly(2, &[(1, &[0, 1])]),
        2 => poly(3, &[(1, &[0, 2]), (-2, &[1, 0, 1])]),
        3 => poly(4, &[(1, &[0, 3]), (3, &[2, 0, 0, 1]), (-3, &[1, 1, 1])]),
        4 => poly(5, &[(1, &[0, 4]), (-4, &[3, 0, 0, 0, 1]), (-4, &[1, 2, 1]), (2, &[2, 0, 2]), (4, &[2, 1, 0, 1])]),
        _ => unreachable!(),
    }
}

/// `p ↦ L·p` on a single chain with eigenvalue `lambda`.
fn chain_action(p: &[f64], lambda: f64) -> Vec<f64> {
    (0..p.len()).map(|i| lambda * p[i] + if i > 0 { p[i - 1] } else { 0.0 }).collect()
}

fn c1_printed() -> Outcome {
    let mut bad = Vec::new();
    for k in 1..=4 {
        match solve_gk(k, k + 1) {
            Ok(g) if g == printed_g(k) => {}
            Ok(g) => bad.push(format!("G{k} = {}", g.canonical_text())),
            Err(e) => bad.push(format!("G{k}: {e}")),
        }
    }
    Outcome { pass: bad.is_empty(), detail: if bad.is_empty() { "G1..G4 match exactly".into() } else { bad.join("; ") } }
}

fn c2_defining_relation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for k in 1..=6 {
        let g = match solve_gk(k, k + 1) {
            Ok(g) => g,
            Err(e) => return Outcome { pass: false, detail: format!("k = {k}: {e}") },
        };
        let defect = defining_relation_defect(&g, k).unwrap();
        if !defect.is_empty() {
            return Outcome { pass: false, detail: format!("k = {k}: nonzero symbolic defect") };
        }
        // Numeric oracle at random λ and p.
        for _ in 0..20 {
            let lambda: f64 = rng.random_range(0.3..3.0);
            let p: Vec<f64> = (0..=k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = g.eval_f64(&chain_action(&p, lambda)) - lambda.powi(k as i32) * g.eval_f64(&p);
            let scale = 1.0 + lambda.powi(k as i32) * g.eval_f64(&p).abs();
            worst = worst.max((lhs - p[0].powi(k as i32)).abs() / scale);
        }
    }
    Outcome { pass: worst < 1e-9, detail: format!("symbolic defect 0 for k ≤ 6; numeric oracle residual {worst:.1e}") }
}

fn c3_jk_shift() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst: f64 = 0.0;
    for k in 1..=6 {
        let jk = shifted_jk(&solve_gk(k, k + 1).unwrap(), k);
        if !jk.verify_shift().unwrap() {
            return Outcome { pass: false, detail: format!("J{k} shift fails symbolically") };
        }
        for _ in 0..20 {
            let lambda: f64 = rng.random_range(0.5..2.0);
            let p: Vec<f64> = (0..=k).map(|i| if i == 0 { rng.random_range(0.5..1.5) } else { rng.random_range(-1.0..1.0) }).collect();
            let d = jk.eval(&chain_action(&p, lambda)) - jk.eval(&p) - lambda.powi(-(k as i32));
            worst = worst.max(d.abs());
        }
    }
    Outcome { pass: worst < 1e-8, detail: format!("J_k(Lp) = J_k(p) + λ^-k exactly for k ≤ 6; numeric oracle {worst:.1e}") }
}

fn c4_q_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let cases = [("SOL", m(&[&[2, 1], &[1, 1]])), ("Butler", m(&[&[1, 1], &[0, 1]])), ("3x3", m(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 1]]))];
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, a) in &cases {
        let spec = spectrum(a).unwrap();
        let v = verify_q_invariance(a, &spec).unwrap();
        let q = build_q(&spec).unwrap();
        let _ = jordan_layout(&spec).unwrap();
        // Numeric oracle: Q(J p) = Q(p) for the Jordan form J of the dual action.
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let p = DVector::from_fn(a.n(), |_, _| rng.random_range(-1.0..1.0));
            let jp = &spec.dual_form * &p;
            worst = worst.max((q.eval_f64(jp.as_slice()) - q.eval_f64(p.as_slice())).abs());
        }
        pass &= v.holds() && worst < 1e-9;
        notes.push(format!("{name}: Q = {} symbolic {} numeric {worst:.0e}", q.canonical_text(), v.holds()));
    }
    Outcome { pass, detail: notes.join("; ") }
}

fn c5_twist() -> Outcome {
    let mats = [
        m(&[&[2, 1], &[1, 1]]),
        m(&[&[1, 1], &[0, 1]]),
        m(&[&[-1, 0], &[0, -1]]),
        m(&[&[0, -1], &[1, 0]]),
        m(&[&[0, -1], &[1, -1]]),
        m(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 1]]),
        m(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst: f64 = 0.0;
    let mut worst_id: f64 = 0.0;
    for a in &mats {
        let c = match MetricCurve::new(a, None) {
            Ok(c) => c,
            Err(e) => return Outcome { pass: false, detail: format!("{a}: {e}") },
        };
        let ainv = a.inverse().to_f64();
        let n = a.n();
        worst_id = worst_id.max((c.gamma(0.0) - DMatrix::identity(n, n)).amax());
        for _ in 0..200 {
            let z: f64 = rng.random_range(-3.0..3.0);
            let d = c.gamma(z + 1.0) - c.gamma(z) * &ainv;
            // Relative to the size of γ to keep the bound scale-free across z.
            worst = worst.max(d.amax() / c.gamma(z + 1.0).amax().max(1.0));
        }
    }
    Outcome {
        pass: worst < 1e-10 && worst_id == 0.0,
        detail: format!("{} matrices, max ‖γ(z+1) − γ(z)A⁻¹‖∞ = {worst:.1e}, ‖γ(0) − E‖ = {worst_id:.0e}", mats.len()),
    }
}

fn c6_conservation() -> Outcome {
    let c = MetricCurve::sol_model();
    let triple = sol_triple(&c).unwrap();
    let starts: Vec<PhaseState> = (0..50)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 100 + i);
            mapping_torus::geodesic_engine::random_unit_state(&c, &mut rng)
        })
        .collect();
    let res: Vec<(f64, f64)> = starts
        .par_iter()
        .map(|s| {
            let tr = integrate_quotient(s, &c, 100.0, 1e-10).unwrap();
            let f0: Vec<f64> = triple[..2].iter().map(|f| f.value(&tr.samples[0], &c).unwrap_or(0.0)).collect();
            let mut drift: f64 = 0.0;
            for q in &tr.samples {
                for (f, v0) in triple[..2].iter().zip(&f0) {
                    if let Ok(v) = f.value(q, &c) {
                        drift = drift.max((v - v0).abs());
                    }
                }
            }
            (tr.diagnostics.max_energy_drift, drift)
        })
        .collect();
    let h = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let i = res.iter().map(|r| r.1).fold(0.0, f64::max);
    Outcome { pass: h < 1e-8 && i < 1e-6, detail: format!("50 starts, max rel H drift {h:.1e} (< 1e-8), max integral drift {i:.1e} (< 1e-6)") }
}

fn c7_involution() -> Outcome {
    let c = MetricCurve::sol_model();
    let triple = sol_triple(&c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    while points < 100 {
        let s = mapping_torus::geodesic_engine::random_unit_state(&c, &mut rng);
        let mut vals = Vec::new();
        let mut ok = true;
        for i in 0..3 {
            for j in i + 1..3 {
                match poisson_bracket(&*triple[i], &*triple[j], &s, &c) {
                    Ok(v) => vals.push(v),
                    Err(_) => ok = false,
                }
            }
        }
        if ok {
            points += 1;
            worst = vals.iter().fold(worst, |a, b| a.max(b.abs()));
        }
    }
    Outcome { pass: worst < 1e-8, detail: format!("100 points, max |{{·,·}}| = {worst:.1e} (< 1e-8)") }
}

fn c8_lyapunov_vplus() -> Outcome {
    let c = MetricCurve::sol_model();
    let s = sol_state(&c, [0.3, 0.7], 0.0, 0.0, 0.0).unwrap().unwrap();
    let r = lyapunov_spectrum(&s, &c, 200.0, &LyapunovOptions::default()).unwrap();
    let gap = (r.top() - golden_log()).abs() / golden_log();
    Outcome { pass: gap < 0.05, detail: format!("top {:.4} vs {:.4}, gap {:.2}% (< 5%), spectrum {:.3?}", r.top(), golden_log(), 100.0 * gap, r.exponents) }
}

fn c9_lyapunov_tori() -> Outcome {
    let c = MetricCurve::sol_model();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut starts = Vec::new();
    while starts.len() < 10 {
        let pu: f64 = rng.random_range(-0.8..0.8);
        let pv: f64 = rng.random_range(-0.8..0.8);
        let z: f64 = rng.random_range(0.0..1.0);
        if let Some(mut s) = sol_state(&c, [rng.random(), rng.random()], z, pu, pv).unwrap() {
            if rng.random::<bool>() {
                s.pz = -s.pz;
            }
            if classify_state(&s, &c).map(|k| k.tag) == Ok(OrbitTag::InvariantTorus) {
                starts.push(s);
            }
        }
    }
    let worst: Vec<f64> =
        starts.par_iter().map(|s| lyapunov_spectrum(s, &c, 500.0, &LyapunovOptions::default()).unwrap().max_abs()).collect();
    let w = worst.iter().copied().fold(0.0, f64::max);
    Outcome { pass: w < 0.02, detail: format!("10 tori, max |exponent| {w:.4} (< 0.02)") }
}

fn c10_return_map() -> Outcome {
    let c = MetricCurve::sol_model();
    let grid: Vec<Vec<f64>> = (0..5).flat_map(|i| (0..5).map(move |j| vec![i as f64 / 5.0 + 0.03, j as f64 / 5.0 + 0.07])).collect();
    let r = fiber_return_map(&c, &grid, 1e-12).unwrap();
    let expected = vec![vec![2, 1], vec![1, 1]];
    let pass = r.matrix == expected && r.max_deviation < 1e-6 && (r.determinant - 1.0).abs() < 1e-9;
    Outcome {
        pass,
        detail: format!(
            "fitted {:?} (expected {:?}), max deviation {:.1e}, det {:.12}",
            r.matrix, expected, r.max_deviation, r.determinant
        ),
    }
}

fn c11_asymptotics() -> Outcome {
    let c = MetricCurve::sol_model();
    let mut notes = Vec::new();
    let mut pass = true;
    for (pu, pv) in [(0.5, 0.0), (-0.8, 0.0), (0.0, 0.6), (0.0, -0.3)] {
        let s = sol_state(&c, [0.2, 0.4], 0.3, pu, pv).unwrap().unwrap();
        let r = asymptotic_check(&s, &c, 200.0, 1e-10).unwrap();
        pass &= r.converged(1e-3);
        notes.push(format!("{:?} fwd {:.1e} bwd {:.1e}", r.tag, r.forward.pz_error, r.backward.pz_error));
    }
    Outcome { pass, detail: format!("|p_z ∓ 1| at T = ±200: {}", notes.join(", ")) }
}

fn c12_rotations() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (trace, a, k) in [(-1, m(&[&[0, -1], &[1, -1]]), 3), (0, m(&[&[0, -1], &[1, 0]]), 4), (1, m(&[&[1, -1], &[1, 0]]), 6)] {
        let r = rotation_invariants(&a).unwrap();
        // Oracle: substitute the dual action into both invariants directly.
        let d = dual_action(&a);
        let vars = r.i1.vars().clone();
        let p1 = RatPoly::var(vars.clone(), 0).unwrap();
        let p2 = RatPoly::var(vars, 1).unwrap();
        let c = |x: i64| BigRational::from_integer(x.into());
        let img = [p1.scale(&c(d.get(0, 0))) + p2.scale(&c(d.get(0, 1))), p1.scale(&c(d.get(1, 0))) + p2.scale(&c(d.get(1, 1)))];
        let inv = r.i1.substitute(&img) == r.i1 && r.i2.substitute(&img) == r.i2 && !r.i2.is_empty();
        pass &= r.k == k && inv && r.exact;
        notes.push(format!("trace {trace}: k = {}", r.k));
        let _ = (trace, k);
    }
    Outcome { pass, detail: format!("{}; I1, I2 exactly invariant", notes.join(", ")) }
}

fn c13_independence() -> Outcome {
    let c = MetricCurve::sol_model();
    let triple = sol_triple(&c).unwrap();
    let refs: Vec<&(dyn PhaseFunction + Sync)> = triple.iter().map(|f| &**f as &(dyn PhaseFunction + Sync)).collect();
    let r = independence_rank(&refs, &c, 10_000, SEED).unwrap();
    Outcome {
        pass: r.fraction >= 0.99,
        detail: format!("rank 3 at {:.2}% of {} nonsingular points ({} singular skipped)", 100.0 * r.fraction, r.drawn - r.singular, r.singular),
    }
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        run(1, "printed G1..G4", s(1), c1_printed),
        run(2, "defining relation, k ≤ 6", s(5), c2_defining_relation),
        run(3, "J_k shift", s(1), c3_jk_shift),
        run(4, "Q invariance", s(1), c4_q_invariance),
        run(5, "curve twist", s(5), c5_twist),
        run(6, "conservation suite", s(120), c6_conservation),
        run(7, "involution suite", s(30), c7_involution),
        run(8, "Lyapunov on V+", s(60), c8_lyapunov_vplus),
        run(9, "Lyapunov on tori", s(300), c9_lyapunov_tori),
        run(10, "fiber return map", s(60), c10_return_map),
        run(11, "asymptotics", s(120), c11_asymptotics),
        run(12, "rotation cases", s(1), c12_rotations),
        run(13, "independence", s(60), c13_independence),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
