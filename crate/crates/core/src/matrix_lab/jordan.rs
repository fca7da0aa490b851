//! Numerical Jordan chains for real matrices with known real eigenvalues.
//!
//! Convention: a chain `v_1, …, v_s` satisfies `(M − μ)v_k = v_{k+1}` and
//! `(M − μ)v_s = 0`. With the chain vectors as consecutive columns of `P`,
//! `P⁻¹ M P` is block diagonal with LOWER bidiagonal blocks (μ on the
//! diagonal, 1 below it). On coordinates `c = P⁻¹ p` the matrix then acts by
//! `c_1 → μ c_1`, `c_k → μ c_k + c_{k−1}`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Tolerance on singular values of scaled matrix powers.
pub const RANK_TOL: f64 = 1e-9;
/// Eigenvalues closer than this are merged into one cluster.
pub const CLUSTER_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct RealJordan {
    /// Columns are the chain vectors.
    pub basis: DMatrix<f64>,
    pub basis_inverse: DMatrix<f64>,
    /// `(eigenvalue, size)` in column order.
    pub blocks: Vec<(f64, usize)>,
    /// Assembled Jordan form.
    pub form: DMatrix<f64>,
}

impl RealJordan {
    /// Column offset of each block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for &(_, s) in &self.blocks {
            off.push(acc);
            acc += s;
        }
        off
    }
}

/// Lower bidiagonal Jordan form for the given blocks.
pub fn assemble_form(blocks: &[(f64, usize)]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.1).sum();
    let mut j = DMatrix::zeros(n, n);
    let mut off = 0;
    for &(mu, s) in blocks {
        for k in 0..s {
            j[(off + k, off + k)] = mu;
            if k > 0 {
                j[(off + k, off + k - 1)] = 1.0;
            }
        }
        off += s;
    }
    j
}

/// Merge eigenvalues closer than [`CLUSTER_TOL`], summing multiplicities.
pub fn cluster(eigs: &[(f64, usize)]) -> Vec<(f64, usize)> {
    let mut sorted = eigs.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<(f64, usize)> = Vec::new();
    for (mu, m) in sorted {
        match out.last_mut() {
            Some(last) if (last.0 - mu).abs() < CLUSTER_TOL * mu.abs().max(1.0) => {
                let total = last.1 + m;
                last.0 = (last.0 * last.1 as f64 + mu * m as f64) / total as f64;
                last.1 = total;
            }
            _ => out.push((mu, m)),
        }
    }
    out
}

fn nullspace(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let cols: Vec<_> = (0..n)
        .filter(|&i| svd.singular_values[i] <= RANK_TOL)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the span of the columns, by modified Gram–Schmidt.
fn orthonormal(cols: &[nalgebra::DVector<f64>]) -> Vec<nalgebra::DVector<f64>> {
    let mut out: Vec<nalgebra::DVector<f64>> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &out {
                let d = q.dot(&v);
                v -= q * d;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 * c.norm().max(1e-300) {
            out.push(v / nv);
        }
    }
    out
}

fn residual(v: &nalgebra::DVector<f64>, q: &[nalgebra::DVector<f64>]) -> nalgebra::DVector<f64> {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in q {
            let d = b.dot(&r);
            r -= b * d;
        }
    }
    r
}

fn sign_normalize(v: &mut nalgebra::DVector<f64>) {
    let (mut best, mut idx) = (0.0, 0);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best + 1e-12 {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        *v = -v.clone();
    }
}

/// Jordan basis of `m` given its real eigenvalues with multiplicities.
///
/// Blocks are ordered with all 1×1 blocks first, then larger blocks; within
/// each group by decreasing eigenvalue.
pub fn real_jordan(m: &DMatrix<f64>, eigs: &[(f64, usize)]) -> Result<RealJordan> {
    let n = m.nrows();
    let total: usize = eigs.iter().map(|e| e.1).sum();
    if total != n {
        return Err(Error::DimensionMismatch { expected: n, got: total });
    }
    let scale = m.amax().max(1.0);
    let mut chains: Vec<(f64, Vec<nalgebra::DVector<f64>>)> = Vec::new();
    for (mu, mult) in cluster(eigs) {
        let nmat = m - DMatrix::identity(n, n) * mu;
        let ns = &nmat / scale;
        // Kernels of successive powers until the generalized eigenspace.
        let mut kernels = vec![DMatrix::zeros(n, 0)];
        let mut power = DMatrix::identity(n, n);
        while kernels.last().unwrap().ncols() < mult {
            power = &ns * power;
            let k = nullspace(&power);
            let prev = kernels.last().unwrap().ncols();
            if k.ncols() <= prev || k.ncols() > mult || kernels.len() > mult {
                return Err(Error::InvalidInput(format!(
                    "ill-conditioned Jordan structure at eigenvalue {mu}"
                )));
            }
            kernels.push(k);
        }
        let depth = kernels.len() - 1;
        let dim = |j: usize| kernels[j.min(depth)].ncols();
        let mut tops: Vec<(usize, nalgebra::DVector<f64>)> = Vec::new();
        for s in (1..=depth).rev() {
            let count = (dim(s) - dim(s - 1)) - (dim(s + 1) - dim(s));
            if count == 0 {
                continue;
            }
            let mut span: Vec<nalgebra::DVector<f64>> = kernels[s - 1].column_iter().map(|c| c.into_owned()).collect();
            for (t, v) in &tops {
                let mut w = v.clone();
                for _ in 0..(t - s) {
                    w = &nmat * w;
                }
                span.push(w);
            }
            let mut q = orthonormal(&span);
            // Candidates: standard basis vectors projected onto ker N^s.
            let ks = orthonormal(&kernels[s].column_iter().map(|c| c.into_owned()).collect::<Vec<_>>());
            let candidates: Vec<nalgebra::DVector<f64>> = (0..n)
                .map(|i| {
                    let mut c = nalgebra::DVector::zeros(n);
                    for b in &ks {
                        c += b * b[i];
                    }
                    c
                })
                .collect();
            for _ in 0..count {
                let res: Vec<_> = candidates.iter().map(|c| residual(c, &q)).collect();
                let norms: Vec<f64> = res.iter().map(|r| r.norm()).collect();
                let best = norms.iter().cloned().fold(0.0, f64::max);
                if best < 1e-6 {
                    return Err(Error::InvalidInput(format!(
                        "could not complete Jordan chains at eigenvalue {mu}"
                    )));
                }
                let idx = norms.iter().position(|&x| x >= 0.999 * best).unwrap();
                let mut top = res[idx].clone() / norms[idx];
                sign_normalize(&mut top);
                q.push(top.clone());
                q = orthonormal(&q);
                tops.push((s, top));
            }
        }
        for (s, top) in tops {
            let mut chain = vec![top];
            for _ in 1..s {
                let next = &nmat * chain.last().unwrap();
                chain.push(next);
            }
            chains.push((mu, chain));
        }
    }
    chains.sort_by(|a, b| {
        let ga = a.1.len() > 1;
        let gb = b.1.len() > 1;
        ga.cmp(&gb).then(b.0.total_cmp(&a.0)).then(b.1.len().cmp(&a.1.len()))
    });
    let blocks: Vec<(f64, usize)> = chains.iter().map(|(mu, c)| (*mu, c.len())).collect();
    let cols: Vec<_> = chains.into_iter().flat_map(|(_, c)| c).collect();
    let basis = DMatrix::from_columns(&cols);
    let basis_inverse = basis
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("Jordan basis is singular".into()))?;
    let form = assemble_form(&blocks);
    Ok(RealJordan { basis, basis_inverse, blocks, form })
}
