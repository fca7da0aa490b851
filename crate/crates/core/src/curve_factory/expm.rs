//! Matrix exponential by scaling and squaring with the degree-13 Padé
//! approximant.

use nalgebra::DMatrix;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA_13: f64 = 5.371920351148152;

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0))
}

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if is_diagonal(a) {
        return DMatrix::from_fn(n, n, |i, j| if i == j { a[(i, i)].exp() } else { 0.0 });
    }
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm1 > THETA_13 { (norm1 / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9]) + &a6 * B[7] + &a4 * B[5] + &a2 * B[3] + &id * B[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8]) + &a6 * B[6] + &a4 * B[4] + &a2 * B[2] + &id * B[0];
    let mut r = (&v - &u).lu().solve(&(&v + &u)).expect("Padé denominator is invertible");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
