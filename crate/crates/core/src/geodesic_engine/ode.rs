//! Adaptive DOP853 (Dormand–Prince 8(5,3)) with 7th-order dense output.
//!
//! Error estimation and step control follow Hairer's `dop853`: the 5th and
//! 3rd order embedded estimates are blended, the controller uses exponent
//! 1/8 with safety 0.9 and step ratio clamped to `[0.333, 6]`.
//! Integration runs forward or backward in time.

use super::tableau::*;
use crate::{Error, Result};

/// Range admitted for the relative tolerance.
pub const TOL_RANGE: (f64, f64) = (1e-14, 1e-4);

const SAFE: f64 = 0.9;
const ALPHA: f64 = 1.0 / 8.0;
const MIN_SCALE: f64 = 0.333;
const MAX_SCALE: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; estimated when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    /// `rtol = atol = tol`, checked against [`TOL_RANGE`].
    pub fn with_tol(tol: f64) -> Result<Self> {
        if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
            return Err(Error::ToleranceOutOfRange(tol));
        }
        Ok(OdeOptions { rtol: tol, atol: tol, h_init: None, h_max: f64::INFINITY, max_steps: 1_000_000 })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Step proposed for continuing past the end point (signed).
    pub h_next: f64,
}

impl OdeStats {
    pub fn absorb(&mut self, other: &OdeStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
        self.h_next = other.h_next;
    }
}

/// Dense interpolant over one accepted step `[t_old, t_old + h]`.
pub struct DenseStep<'a> {
    pub t_old: f64,
    pub h: f64,
    rcont: &'a [Vec<f64>; 8],
}

impl DenseStep<'_> {
    pub fn t_new(&self) -> f64 {
        self.t_old + self.h
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t_old) / self.h;
        let s1 = 1.0 - s;
        let r = self.rcont;
        for i in 0..out.len() {
            out[i] = r[0][i]
                + s * (r[1][i]
                    + s1 * (r[2][i] + s * (r[3][i] + s1 * (r[4][i] + s * (r[5][i] + s1 * (r[6][i] + s * r[7][i]))))));
        }
    }
}

type Row = &'static [(usize, f64)];

/// Stages 2..=12: `(c, [(j, a_ij)])` with `j` the 0-based stage index.
const STAGES: [(f64, Row); 11] = [
    (C2, &[(0, A21)]),
    (C3, &[(0, A31), (1, A32)]),
    (C4, &[(0, A41), (2, A43)]),
    (C5, &[(0, A51), (2, A53), (3, A54)]),
    (C6, &[(0, A61), (3, A64), (4, A65)]),
    (C7, &[(0, A71), (3, A74), (4, A75), (5, A76)]),
    (C8, &[(0, A81), (3, A84), (4, A85), (5, A86), (6, A87)]),
    (C9, &[(0, A91), (3, A94), (4, A95), (5, A96), (6, A97), (7, A98)]),
    (C10, &[(0, A101), (3, A104), (4, A105), (5, A106), (6, A107), (7, A108), (8, A109)]),
    (C11, &[(0, A111), (3, A114), (4, A115), (5, A116), (6, A117), (7, A118), (8, A119), (9, A1110)]),
    (1.0, &[(0, A121), (3, A124), (4, A125), (5, A126), (6, A127), (7, A128), (8, A129), (9, A1210), (10, A1211)]),
];

const B: Row = &[(0, B1), (5, B6), (6, B7), (7, B8), (8, B9), (9, B10), (10, B11), (11, B12)];
const BHH: Row = &[(0, BHH1), (8, BHH2), (11, BHH3)];
const ER: Row = &[(0, ER1), (5, ER6), (6, ER7), (7, ER8), (8, ER9), (9, ER10), (10, ER11), (11, ER12)];

/// Extra stages 14..=16 for the dense output; index 12 is `f(t+h, y_new)`.
const DENSE_STAGES: [(f64, Row); 3] = [
    (C14, &[(0, A141), (6, A147), (7, A148), (8, A149), (9, A1410), (10, A1411), (11, A1412), (12, A1413)]),
    (C15, &[(0, A151), (5, A156), (6, A157), (7, A158), (10, A1511), (11, A1512), (12, A1513), (13, A1514)]),
    (C16, &[(0, A161), (5, A166), (6, A167), (7, A168), (8, A169), (12, A1613), (13, A1614), (14, A1615)]),
];

const D: [Row; 4] = [
    &[
        (0, D41),
        (5, D46),
        (6, D47),
        (7, D48),
        (8, D49),
        (9, D410),
        (10, D411),
        (11, D412),
        (12, D413),
        (13, D414),
        (14, D415),
        (15, D416),
    ],
    &[
        (0, D51),
        (5, D56),
        (6, D57),
        (7, D58),
        (8, D59),
        (9, D510),
        (10, D511),
        (11, D512),
        (12, D513),
        (13, D514),
        (14, D515),
        (15, D516),
    ],
    &[
        (0, D61),
        (5, D66),
        (6, D67),
        (7, D68),
        (8, D69),
        (9, D610),
        (10, D611),
        (11, D612),
        (12, D613),
        (13, D614),
        (14, D615),
        (15, D616),
    ],
    &[
        (0, D71),
        (5, D76),
        (6, D77),
        (7, D78),
        (8, D79),
        (9, D710),
        (10, D711),
        (11, D712),
        (12, D713),
        (13, D714),
        (14, D715),
        (15, D716),
    ],
];

fn combine(k: &[Vec<f64>], row: Row, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for &(j, a) in row {
        for (o, kj) in out.iter_mut().zip(&k[j]) {
            *o += a * kj;
        }
    }
}

fn stage_point(y: &[f64], h: f64, k: &[Vec<f64>], row: Row, out: &mut [f64]) {
    combine(k, row, out);
    for (o, yi) in out.iter_mut().zip(y) {
        *o = yi + h * *o;
    }
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `observer` is called after every accepted step with the dense
/// interpolant and the new state. Returns the final state and statistics.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(Vec<f64>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&DenseStep<'_>, &[f64]),
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    if t_end == t0 {
        return Ok((y, stats));
    }
    if !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidInput("integration bounds must be finite".into()));
    }
    let dir = (t_end - t0).signum();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 16];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err5 = vec![0.0; n];
    let mut err3 = vec![0.0; n];
    let mut rcont: [Vec<f64>; 8] = std::array::from_fn(|_| vec![0.0; n]);

    let mut t = t0;
    f(t, &y, &mut k[0]);
    stats.evaluations += 1;
    let span = (t_end - t0).abs();
    let h_max = opts.h_max.min(span);
    let mut h = match opts.h_init {
        Some(h0) => h0.abs().min(h_max),
        None => initial_step(&mut f, t, &y, &k[0].clone(), dir, h_max, opts, &mut stats),
    } * dir;
    let mut reject = false;
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            return Err(Error::TooManySteps(steps));
        }
        if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t });
        }
        let last = (t + 1.01 * h - t_end) * dir >= 0.0;
        if last {
            h = t_end - t;
        }
        steps += 1;

        for (s, (c, row)) in STAGES.iter().enumerate() {
            stage_point(&y, h, &k, row, &mut tmp);
            f(t + c * h, &tmp, &mut k[s + 1]);
        }
        stats.evaluations += STAGES.len();
        combine(&k, B, &mut tmp);
        for i in 0..n {
            y_new[i] = y[i] + h * tmp[i];
        }
        combine(&k, BHH, &mut err5);
        combine(&k, ER, &mut err3);
        let (mut e5, mut e3) = (0.0, 0.0);
        for i in 0..n {
            let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            e5 += ((tmp[i] - err5[i]) / sk).powi(2);
            e3 += (err3[i] / sk).powi(2);
        }
        let deno = e5 + 0.01 * e3;
        let deno = if deno > 0.0 { deno } else { 1.0 };
        let err = h.abs() * e5 * (1.0 / (n as f64 * deno)).sqrt();

        if !err.is_finite() || err > 1.0 {
            stats.rejected += 1;
            let scale = if err.is_finite() { MIN_SCALE.max(SAFE * err.powf(-ALPHA)) } else { MIN_SCALE };
            h *= scale;
            reject = true;
            continue;
        }

        stats.accepted += 1;
        let mut k13 = std::mem::take(&mut k[12]);
        f(t + h, &y_new, &mut k13);
        k[12] = k13;
        stats.evaluations += 1;

        for i in 0..n {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k[0][i] - ydiff;
            rcont[0][i] = y[i];
            rcont[1][i] = ydiff;
            rcont[2][i] = bspl;
            rcont[3][i] = ydiff - h * k[12][i] - bspl;
        }
        for (s, (c, row)) in DENSE_STAGES.iter().enumerate() {
            stage_point(&y, h, &k, row, &mut tmp);
            f(t + c * h, &tmp, &mut k[13 + s]);
        }
        stats.evaluations += DENSE_STAGES.len();
        for (r, row) in D.iter().enumerate() {
            combine(&k, row, &mut tmp);
            for i in 0..n {
                rcont[4 + r][i] = h * tmp[i];
            }
        }
        observer(&DenseStep { t_old: t, h, rcont: &rcont }, &y_new);

        let mut scale = if err == 0.0 { MAX_SCALE } else { (SAFE * err.powf(-ALPHA)).clamp(MIN_SCALE, MAX_SCALE) };
        if reject {
            scale = scale.min(1.0);
        }
        reject = false;
        let h_next = (h.abs() * scale).min(h_max) * dir;

        std::mem::swap(&mut y, &mut y_new);
        k.swap(0, 12);
        t = if last { t_end } else { t + h };
        if last {
            stats.h_next = h_next;
            return Ok((y, stats));
        }
        h = h_next;
    }
}

/// Hairer's starting-step heuristic for an order-8 method.
#[allow(clippy::too_many_arguments)]
fn initial_step<F: FnMut(f64, &[f64], &mut [f64])>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    h_max: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64 {
    let n = y.len().max(1) as f64;
    let sk: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt();
    let d0 = norm(y);
    let d1 = norm(f0);
    let mut h0 = if d0 <= 1e-10 || d1 <= 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(h_max);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + dir * h0, &y1, &mut f1);
    stats.evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 { (1e-6f64).max(h0 * 1e-3) } else { (0.01 / m).powf(ALPHA) };
    (100.0 * h0).min(h1).min(h_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions::with_tol(1e-12).unwrap();
        let (y, stats) = integrate(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 3.0, &opts, |_, _| {}).unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-12, "{}", y[0]);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn backward_oscillator() {
        let opts = OdeOptions::with_tol(1e-12).unwrap();
        let (y, _) = integrate(oscillator, 0.0, &[0.0, 1.0], -10.0, &opts, |_, _| {}).unwrap();
        assert!((y[0] - (-10.0f64).sin()).abs() < 1e-10);
        assert!((y[1] - (-10.0f64).cos()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_matches_solution() {
        let opts = OdeOptions::with_tol(1e-12).unwrap();
        let mut worst: f64 = 0.0;
        let mut out = [0.0; 2];
        integrate(oscillator, 0.0, &[0.0, 1.0], 20.0, &opts, |d, _| {
            for j in 1..8 {
                let t = d.t_old + d.h * j as f64 / 8.0;
                d.eval(t, &mut out);
                worst = worst.max((out[0] - t.sin()).abs());
            }
        })
        .unwrap();
        assert!(worst < 1e-9, "dense error {worst:e}");
    }

    #[test]
    fn error_tracks_tolerance() {
        let err = |tol: f64| {
            let opts = OdeOptions::with_tol(tol).unwrap();
            let (y, _) = integrate(oscillator, 0.0, &[0.0, 1.0], 50.0, &opts, |_, _| {}).unwrap();
            (y[0] - 50f64.sin()).abs()
        };
        let (e6, e10) = (err(1e-6), err(1e-10));
        assert!(e10 < e6);
        assert!(e10 < 1e-7);
    }

    #[test]
    fn high_order_on_fixed_steps() {
        // With the controller pinned by h_max, error ratio over a halving of h
        // should be near 2^8.
        let run = |h: f64| {
            let opts = OdeOptions { rtol: 1e-4, atol: 1e-4, h_init: Some(h), h_max: h, max_steps: 100_000 };
            let (y, _) = integrate(oscillator, 0.0, &[0.0, 1.0], 4.0, &opts, |_, _| {}).unwrap();
            (y[0] - 4f64.sin()).abs()
        };
        let ratio = run(0.4) / run(0.2);
        assert!(ratio > 100.0, "ratio {ratio}");
    }

    #[test]
    fn blow_up_is_reported() {
        let opts = OdeOptions { max_steps: 5_000, ..OdeOptions::with_tol(1e-10).unwrap() };
        let r = integrate(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, &opts, |_, _| {});
        assert!(matches!(r, Err(Error::StepSizeUnderflow { .. }) | Err(Error::TooManySteps(_))));
    }

    #[test]
    fn tolerance_range() {
        assert!(OdeOptions::with_tol(1e-3).is_err());
        assert!(OdeOptions::with_tol(1e-15).is_err());
        assert!(OdeOptions::with_tol(1e-14).is_ok());
    }
}
