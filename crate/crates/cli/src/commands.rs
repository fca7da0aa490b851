use anyhow::Result;
use mapping_torus::curve_factory::MetricCurve;
use mapping_torus::dynamics_probe::{
    classify_state, entropy_report, lyapunov_spectrum, LyapunovOptions, OrbitTag, ENTROPY_GAP,
};
use mapping_torus::geodesic_engine::{
    integrate_quotient, poisson_bracket, random_unit_state, Energy, LocalIntegral, PhaseFunction, PhaseState,
};
use mapping_torus::invariant_forge::{
    build_q, coordinate_family, defining_relation_defect, jordan_layout, q_integral, rotation_invariants, shifted_jk,
    smooth_family, solve_gk, verify_q_invariance, SmoothIntegral,
};
use mapping_torus::matrix_lab::{entropy_lower_bound, spectrum, validate_monodromy, MonodromyMatrix, SpectralData, SpectrumKind};
use mapping_torus::Error;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::Sink;

/// What a command produced: a one-line summary and any violated checks.
pub struct Outcome {
    pub summary: String,
    pub violations: Vec<String>,
}

type Integral = Box<dyn PhaseFunction + Send + Sync>;

fn matrix(c: &RunConfig) -> Result<MonodromyMatrix> {
    Ok(validate_monodromy(&c.matrix)?)
}

fn ghat(c: &RunConfig) -> Option<DMatrix<f64>> {
    c.ghat.as_ref().map(|rows| DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j]))
}

/// Eigenframe for real spectra, lattice frame otherwise.
fn curve(c: &RunConfig, a: &MonodromyMatrix, spec: &SpectralData) -> Result<MetricCurve> {
    Ok(match spec.kind {
        SpectrumKind::AllReal => MetricCurve::eigenframe(a, ghat(c))?,
        _ => MetricCurve::from_spectrum(a, spec, ghat(c))?,
    })
}

fn frame_name(curve: &MetricCurve) -> &'static str {
    if curve.is_lattice_frame() {
        "lattice"
    } else {
        "jordan"
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn initial_or_random(c: &RunConfig, curve: &MetricCurve) -> Result<PhaseState> {
    match &c.initial {
        Some(s) => Ok(PhaseState::new(s.x.clone(), s.z, s.p.clone(), s.pz)?.normalized(curve)?),
        None => Ok(random_unit_state(curve, &mut ChaCha8Rng::seed_from_u64(c.seed))),
    }
}

fn is_identity_spectrum(a: &MonodromyMatrix) -> bool {
    a.is_identity()
}

/// Momentum integrals in lattice momenta: `Q`, the smooth family (or the
/// rotation invariants, or the coordinates when `A = E`).
fn momentum_integrals(a: &MonodromyMatrix, spec: &SpectralData) -> Result<Vec<SmoothIntegral>> {
    if is_identity_spectrum(a) {
        return Ok(coordinate_family(a.n()));
    }
    match spec.kind {
        SpectrumKind::ComplexUnitCircle => Ok(rotation_invariants(a)?.integrals()),
        _ => {
            let mut q = q_integral(spec)?;
            q.label = "Q".into();
            let mut out = vec![q];
            out.extend(smooth_family(spec)?);
            Ok(out)
        }
    }
}

fn phase_integrals(a: &MonodromyMatrix, spec: &SpectralData, curve: &MetricCurve) -> Result<Vec<Integral>> {
    let mut out: Vec<Integral> = momentum_integrals(a, spec)?
        .iter()
        .map(|i| Box::new(LocalIntegral::from_lattice(i, curve)) as Integral)
        .collect();
    out.push(Box::new(Energy));
    Ok(out)
}

pub fn analyze(c: &RunConfig, sink: &mut Sink) -> Result<Outcome> {
    let a = matrix(c)?;
    let spec = spectrum(&a)?;
    let eigenvalues: Vec<Value> = a
        .eigenvalues()
        .iter()
        .map(|r| json!({"re": r.value.re, "im": r.value.im, "multiplicity": r.multiplicity, "exact": r.exact}))
        .collect();
    let blocks: Vec<Value> = spec
        .jordan_blocks
        .iter()
        .map(|b| json!({"eigenvalue": {"re": b.eigenvalue.re, "im": b.eigenvalue.im}, "size": b.size}))
        .collect();
    let rotation_order = match spec.kind {
        SpectrumKind::ComplexUnitCircle => rotation_invariants(&a).ok().map(|r| r.k),
        _ => None,
    };
    let bound = entropy_lower_bound(&a);
    let result = json!({
        "matrix": a,
        "n": a.n(),
        "trace": a.trace(),
        "char_poly_ascending": a.char_poly().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "eigenvalues": eigenvalues,
        "kind": spec.kind,
        "dual_jordan_blocks": blocks,
        "rotation_order": rotation_order,
        "entropy_lower_bound": bound,
        "tolerances": {"unit_circle": 1e-12},
    });
    sink.json("analyze", &result)?;
    Ok(Outcome { summary: format!("{a}: {:?}, entropy bound {bound:.6}", spec.kind), violations: vec![] })
}

pub fn invariants(c: &RunConfig, sink: &mut Sink) -> Result<Outcome> {
    let a = matrix(c)?;
    let spec = spectrum(&a)?;
    let mut violations = Vec::new();
    let mut result = serde_json::Map::new();
    result.insert("matrix".into(), json!(a));
    result.insert("kind".into(), json!(spec.kind));
    match spec.kind {
        SpectrumKind::ComplexUnitCircle => {
            let r = rotation_invariants(&a)?;
            if !r.exact {
                violations.push("rotation invariants are not exactly invariant".into());
            }
            result.insert(
                "rotation".into(),
                json!({
                    "order": r.k,
                    "I1": r.i1.canonical_text(),
                    "I2": r.i2.canonical_text(),
                    "I1_adapted": r.i1_adapted.canonical_text(),
                    "I2_adapted": r.i2_adapted.canonical_text(),
                    "exact": r.exact,
                }),
            );
        }
        _ => {
            let layout = jordan_layout(&spec)?;
            let q = build_q(&spec)?;
            let qi = verify_q_invariance(&a, &spec)?;
            if !qi.holds() {
                violations.push("Q is not invariant".into());
            }
            result.insert("variables".into(), json!(layout.names.as_ref()));
            result.insert("Q".into(), json!({"text": q.canonical_text(), "invariant": qi.holds(), "det_is_one": qi.det_is_one}));
            let longest = spec.jordan_blocks.iter().map(|b| b.size).max().unwrap_or(1);
            let mut gk = Vec::new();
            for k in 1..longest {
                let g = solve_gk(k, k + 1)?;
                let relation = defining_relation_defect(&g, k)?.is_empty();
                let shift = shifted_jk(&g, k).verify_shift()?;
                if !relation || !shift {
                    violations.push(format!("G_{k} fails its defining relation or J_{k} shift"));
                }
                gk.push(json!({"k": k, "G": g.canonical_text(), "relation_holds": relation, "J_shift_holds": shift}));
            }
            result.insert("G".into(), json!(gk));
        }
    }
    let family = momentum_integrals(&a, &spec)?;
    let mut labels: Vec<String> = family.iter().map(|f| f.label.clone()).collect();
    labels.push("H".into());
    result.insert("first_integrals".into(), json!(labels));
    result.insert("family".into(), json!(family));
    sink.json("invariants", &Value::Object(result))?;
    Ok(Outcome { summary: format!("{a}: first integrals {}", labels.join(", ")), violations })
}

pub fn integrate(c: &RunConfig, sink: &mut Sink) -> Result<Outcome> {
    let a = matrix(c)?;
    let spec = spectrum(&a)?;
    let curve = curve(c, &a, &spec)?;
    let s0 = initial_or_random(c, &curve)?;
    let tr = integrate_quotient(&s0, &curve, c.horizon, c.tol)?;
    let integrals = phase_integrals(&a, &spec, &curve)?;
    let mut drifts = Vec::new();
    let mut worst: f64 = 0.0;
    for f in &integrals[..integrals.len() - 1] {
        let v0 = f.value(&tr.samples[0], &curve).ok();
        let d = tr
            .samples
            .iter()
            .filter_map(|s| Some((f.value(s, &curve).ok()? - v0?).abs()))
            .fold(0.0, f64::max);
        worst = worst.max(d);
        drifts.push(json!({"label": f.label(), "max_drift": d}));
    }
    let mut violations = Vec::new();
    if tr.diagnostics.max_energy_drift > tr.diagnostics.drift_bound {
        violations.push(format!("energy drift {:e} exceeds {:e}", tr.diagnostics.max_energy_drift, tr.diagnostics.drift_bound));
    }
    if worst > c.thresholds.integral_drift {
        violations.push(format!("integral drift {worst:e} exceeds {:e}", c.thresholds.integral_drift));
    }
    let (header, table) = tr.table(&curve);
    sink.csv("trajectory.csv", &header, &table)?;
    let result = json!({
        "frame": frame_name(&curve),
        "frame_matrix": rows(curve.frame()),
        "initial": s0,
        "final": tr.end,
        "diagnostics": tr.diagnostics,
        "tol": c.tol,
        "integral_drifts": drifts,
        "integral_drift_tol": c.thresholds.integral_drift,
    });
    sink.json("integrate", &result)?;
    Ok(Outcome {
        summary: format!(
            "T = {}: energy drift {:.2e}, integral drift {worst:.2e}, {} steps",
            c.horizon, tr.diagnostics.max_energy_drift, tr.diagnostics.accepted_steps
        ),
        violations,
    })
}

/// `p = 0`, `p_z = 1` at `z = 0` and a seeded fiber point.
fn vplus_state(c: &RunConfig, curve: &MetricCurve) -> Result<PhaseState> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let n = curve.n();
    let xl = nalgebra::DVector::from_fn(n, |_, _| rng.random::<f64>());
    let x = (curve.frame_inverse() * xl).as_slice().to_vec();
    Ok(PhaseState::new(x, 0.0, vec![0.0; n], 1.0)?)
}

pub fn lyapunov(c: &RunConfig, sink: &mut Sink) -> Result<Outcome> {
    let a = matrix(c)?;
    let spec = spectrum(&a)?;
    let curve = curve(c, &a, &spec)?;
    let s0 = match &c.initial {
        Some(_) => initial_or_random(c, &curve)?,
        None => vplus_state(c, &curve)?,
    };
    let opts = LyapunovOptions { tol: c.tol.max(1e-12), interval: 1.0 };
    let r = lyapunov_spectrum(&s0, &curve, c.horizon, &opts)?;
    let on_vplus = s0.p.iter().all(|&v| v == 0.0);
    let ent = entropy_report(&a, Some(&r))?;
    let mut violations = Vec::new();
    if r.sum().abs() > c.thresholds.lyapunov_sum {
        violations.push(format!("exponent sum {:e} exceeds {:e}", r.sum(), c.thresholds.lyapunov_sum));
    }
    if on_vplus && ent.hyperbolic && ent.consistent != Some(true) {
        violations.push(format!("top exponent {:.4} misses the entropy bound {:.4} by more than {ENTROPY_GAP}", r.top(), ent.lower_bound));
    }
    let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=r.exponents.len()).map(|i| format!("l{i}"))).collect();
    let table: Vec<Vec<f64>> = r.history.iter().map(|(t, e)| std::iter::once(*t).chain(e.iter().copied()).collect()).collect();
    sink.csv("lyapunov_convergence.csv", &header, &table)?;
    let result = json!({
        "frame": frame_name(&curve),
        "initial": s0,
        "on_vplus": on_vplus,
        "exponents": r.exponents,
        "top": r.top(),
        "sum": r.sum(),
        "sum_tol": c.thresholds.lyapunov_sum,
        "residuals": r.residuals,
        "horizon": r.horizon,
        "interval": r.interval,
        "tol": r.tol,
        "entropy": ent,
    });
    sink.json("lyapunov", &result)?;
    Ok(Outcome { summary: format!("top exponent {:.4} (bound {:.4}) at T = {}", r.top(), ent.lower_bound, r.horizon), violations })
}

pub fn classify(c: &RunConfig, sink: &mut Sink) -> Result<Outcome> {
    let a = matrix(c)?;
    let spec = spectrum(&a)?;
    let curve = curve(c, &a, &spec)?;
    if c.initial.is_some() {
        let s = initial_or_random(c, &curve)?;
        let k = classify_state(&s, &curve)?;
        sink.json("classify", &json!({"state": s, "class": k}))?;
        return Ok(Outcome { summary: format!("{}", k.tag), violations: vec![] });
    }
    let classes: Vec<(PhaseState, OrbitTag)> = (0..c.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            rng.set_stream(i as u64);
            let s = random_unit_state(&curve, &mut rng);
            let k = classify_state(&s, &curve)?;
            Ok((s, k.tag))
        })
        .collect::<Result<_, Error>>()?;
    let mut counts = std::collections::BTreeMap::new();
    for (_, t) in &classes {
        *counts.entry(t.to_string()).or_insert(0usize) += 1;
    }
    let table: Vec<Vec<String>> = classes
        .iter()
        .enumerate()
        .map(|(i, (s, t))| {
            let mut row = vec![i.to_string(), t.to_string(), format!("{:e}", s.z)];
            row.extend(s.p.iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", s.pz));
            row
        })
        .collect();
    let mut header = vec!["sample", "tag", "z"];
    let names: Vec<String> = (1..=curve.n()).map(|i| format!("p{i}")).collect();
    header.extend(names.iter().map(|s| s.as_str()));
    header.push("pz");
    sink.csv_text("classify.csv", &header, &table)?;
    sink.json("classify", &json!({"samples": c.samples, "counts": counts}))?;
    Ok(Outcome { summary: format!("{counts:?}"), violations: vec![] })
}

pub fn involution(c: &RunConfig, sink: &mut Sink) -> Result<Outcome> {
    let a = matrix(c)?;
    let spec = spectrum(&a)?;
    let curve = curve(c, &a, &spec)?;
    let fs = phase_integrals(&a, &spec, &curve)?;
    let labels: Vec<String> = fs.iter().map(|f| f.label()).collect();
    let per_point: Vec<Option<Vec<f64>>> = (0..c.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            rng.set_stream(i as u64);
            let s = random_unit_state(&curve, &mut rng);
            let mut vals = Vec::new();
            for x in 0..fs.len() {
                for y in x + 1..fs.len() {
                    match poisson_bracket(&*fs[x], &*fs[y], &s, &curve) {
                        Ok(v) => vals.push(v),
                        Err(Error::SingularPoint { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(Some(vals))
        })
        .collect::<Result<_, Error>>()?;
    let pairs: Vec<String> =
        (0..fs.len()).flat_map(|x| (x + 1..fs.len()).map(move |y| (x, y))).map(|(x, y)| format!("{{{},{}}}", labels[x], labels[y])).collect();
    let mut max_abs: f64 = 0.0;
    let mut singular = 0;
    let mut table = Vec::new();
    for (i, v) in per_point.iter().enumerate() {
        match v {
            Some(v) => {
                max_abs = v.iter().fold(max_abs, |m, b| m.max(b.abs()));
                table.push(std::iter::once(i as f64).chain(v.iter().copied()).collect());
            }
            None => singular += 1,
        }
    }
    let header: Vec<String> = std::iter::once("sample".to_string()).chain(pairs.iter().cloned()).collect();
    sink.csv("brackets.csv", &header, &table)?;
    let mut violations = Vec::new();
    if max_abs >= c.thresholds.involution {
        violations.push(format!("max bracket {max_abs:e} ≥ {:e}", c.thresholds.involution));
    }
    sink.json(
        "involution",
        &json!({"integrals": labels, "pairs": pairs, "samples": c.samples, "singular_skipped": singular, "max_abs_bracket": max_abs, "tol": c.thresholds.involution}),
    )?;
    Ok(Outcome { summary: format!("max |bracket| {max_abs:.2e} over {} points", c.samples - singular), violations })
}

pub fn entropy(c: &RunConfig, sink: &mut Sink) -> Result<Outcome> {
    let a = matrix(c)?;
    let spec = spectrum(&a)?;
    let bound = entropy_lower_bound(&a);
    let measured = if bound > 1e-12 && spec.kind == SpectrumKind::AllReal {
        let curve = curve(c, &a, &spec)?;
        let s0 = vplus_state(c, &curve)?;
        Some(lyapunov_spectrum(&s0, &curve, c.horizon, &LyapunovOptions { tol: c.tol.max(1e-12), interval: 1.0 })?)
    } else {
        None
    };
    let r = entropy_report(&a, measured.as_ref())?;
    let mut violations = Vec::new();
    if r.consistent == Some(false) {
        violations.push(format!("measured {:?} vs bound {:.4}: gap {:?} ≥ {ENTROPY_GAP}", r.measured_top, r.lower_bound, r.gap));
    }
    sink.json("entropy", &json!({"report": r, "horizon": c.horizon, "tol": c.tol}))?;
    let summary = match r.measured_top {
        Some(m) => format!("bound {:.6}, measured {m:.6}", r.lower_bound),
        None => format!("bound {:.6}, no hyperbolic fiber map", r.lower_bound),
    };
    Ok(Outcome { summary, violations })
}
