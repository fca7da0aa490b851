//! The operator `L` of a Jordan chain and the polynomials `G_k` with
//! `L·G_k = λᵏ G_k + p₁ᵏ`.
//!
//! `G_k` is sought as `(F_k + H)/c` with `F_k = p_{k+1} p₁^{k−1}` and `H`
//! homogeneous of degree `k` in `p₁…p_k`. The kernel of `L − λᵏ` on that
//! space is larger than the line through `p₁ᵏ` once `k ≥ 3`, so `H` is
//! restricted to isobaric monomials of weight `2k` (weight of `p_i` is `i`),
//! the weight of `F_k`. On that subspace the solution is unique.

use super::poly::{momentum_names, Monomial, MultiPoly, RatPoly};
use crate::algebra::{Ring, RatFunc, UniPoly};
use crate::error::{Error, Result};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::sync::Arc;

/// `L·f = f(L·p)`, with `L·p_{c₀} = λ p_{c₀}` and
/// `L·p_{c_k} = λ p_{c_k} + p_{c_{k−1}}` along `chain`; other variables are
/// fixed.
pub fn apply_l<C: Ring>(f: &MultiPoly<C>, lambda: &C, chain: &[usize]) -> Result<MultiPoly<C>> {
    let vars = f.vars().clone();
    let n = vars.len();
    let mut images: Vec<MultiPoly<C>> = (0..n).map(|i| MultiPoly::var(vars.clone(), i)).collect::<Result<_>>()?;
    for (pos, &idx) in chain.iter().enumerate() {
        if idx >= n {
            return Err(Error::UnknownVariable { index: idx, nvars: n });
        }
        let mut img = MultiPoly::var(vars.clone(), idx)?.scale(lambda);
        if pos > 0 {
            img = img + MultiPoly::var(vars.clone(), chain[pos - 1])?;
        }
        images[idx] = img;
    }
    Ok(f.substitute(&images))
}

/// Lift a rational polynomial to coefficients in ℚ(λ).
pub fn to_formal(f: &RatPoly) -> MultiPoly<RatFunc> {
    f.map_coeffs(|c| RatFunc::from_rational(c.clone()))
}

fn lambda_pow(k: u32) -> RatFunc {
    RatFunc::from_poly(UniPoly::monomial(BigRational::one(), k as usize))
}

/// Exponent vectors of degree `k` and weight `2k` in `p₁…p_k`.
fn isobaric_basis(k: usize) -> Vec<Monomial> {
    fn rec(i: usize, k: usize, deg_left: u32, w_left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == k {
            if deg_left == 0 && w_left == 0 {
                out.push(Monomial::new(cur.clone()));
            }
            return;
        }
        let w = i as u32 + 1;
        for e in 0..=deg_left {
            if e * w > w_left {
                break;
            }
            cur.push(e);
            rec(i + 1, k, deg_left - e, w_left - e * w, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, k as u32, 2 * k as u32, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Solve the dense system `M x = b` over ℚ(λ). Returns `None` unless the
/// solution exists and is unique.
#[allow(clippy::needless_range_loop)]
fn solve_unique(mut m: Vec<Vec<RatFunc>>, mut b: Vec<RatFunc>, ncols: usize) -> std::result::Result<Vec<RatFunc>, String> {
    let nrows = m.len();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..nrows).find(|&r| !m[r][col].is_zero()) else {
            return Err(format!("column {col} has no pivot; the solution is not unique"));
        };
        m.swap(row, p);
        b.swap(row, p);
        let inv = RatFunc::one() / m[row][col].clone();
        for j in col..ncols {
            m[row][j] = m[row][j].clone() * inv.clone();
        }
        b[row] = b[row].clone() * inv;
        for r in 0..nrows {
            if r == row || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in col..ncols {
                let t = m[row][j].clone() * f.clone();
                m[r][j] = m[r][j].clone() - t;
            }
            b[r] = b[r].clone() - b[row].clone() * f;
        }
        pivots.push(col);
        row += 1;
    }
    if b[row..].iter().any(|x| !x.is_zero()) {
        return Err("inconsistent system".into());
    }
    Ok(b.into_iter().take(ncols).collect())
}

/// `G_k` with coefficients in ℚ(λ), over the variables `p₁…p_{vars}`.
pub fn solve_gk_formal(k: usize, chain_length: usize) -> Result<MultiPoly<RatFunc>> {
    if k == 0 {
        return Err(Error::SolveFailure { k, reason: "k must be positive".into() });
    }
    if chain_length < k + 1 {
        return Err(Error::SolveFailure { k, reason: format!("chain of length {chain_length} is shorter than k + 1") });
    }
    let vars = momentum_names(chain_length);
    let chain: Vec<usize> = (0..chain_length).collect();
    let lambda = RatFunc::lambda();
    let lk = lambda_pow(k as u32);
    let mono_poly = |m: Monomial| MultiPoly::<RatFunc>::from_terms(vars.clone(), [(m, RatFunc::one())]);
    let p1k = Monomial::new(vec![k as u32]);

    // Columns: (L − λᵏ) applied to each basis monomial, then −p₁ᵏ for c.
    let basis = isobaric_basis(k);
    let mut columns: Vec<MultiPoly<RatFunc>> = Vec::with_capacity(basis.len() + 1);
    for m in &basis {
        let f = mono_poly(m.clone());
        columns.push(apply_l(&f, &lambda, &chain)? - f.scale(&lk));
    }
    columns.push(-mono_poly(p1k.clone()));
    // Right-hand side: −λ^{k−1} p_k p₁^{k−1}.
    let mut rhs_exp = vec![0u32; k];
    rhs_exp[0] = k as u32 - 1;
    rhs_exp[k - 1] += 1;
    let rhs = mono_poly(Monomial::new(rhs_exp)).scale(&(-lambda_pow(k as u32 - 1)));

    let mut rows: Vec<Monomial> = columns.iter().chain(std::iter::once(&rhs)).flat_map(|p| p.terms().map(|(m, _)| m.clone())).collect();
    rows.sort();
    rows.dedup();
    let mat: Vec<Vec<RatFunc>> = rows.iter().map(|r| columns.iter().map(|c| c.coeff(r)).collect()).collect();
    let b: Vec<RatFunc> = rows.iter().map(|r| rhs.coeff(r)).collect();
    let sol = solve_unique(mat, b, columns.len()).map_err(|reason| Error::SolveFailure { k, reason })?;
    let c = sol.last().unwrap().clone();
    if c.is_zero() {
        return Err(Error::SolveFailure { k, reason: "c_k = 0".into() });
    }
    let mut fk = vec![0u32; k + 1];
    fk[0] = k as u32 - 1;
    fk[k] += 1;
    let mut g = mono_poly(Monomial::new(fk));
    for (m, h) in basis.into_iter().zip(sol) {
        g.add_term(m, h);
    }
    Ok(g.scale(&(RatFunc::one() / c)))
}

/// First coefficient (in decreasing monomial order) that depends on λ.
pub fn first_lambda_dependent(g: &MultiPoly<RatFunc>) -> Option<(Monomial, RatFunc)> {
    g.terms().rev().find(|(_, c)| !c.is_constant()).map(|(m, c)| (m.clone(), c.clone()))
}

/// `G_k` over `p₁…p_{chain_length}`, normalised so `p₂ᵏ` has coefficient 1.
pub fn solve_gk(k: usize, chain_length: usize) -> Result<RatPoly> {
    let formal = solve_gk_formal(k, chain_length)?;
    if let Some((m, c)) = first_lambda_dependent(&formal) {
        return Err(Error::SolveFailure {
            k,
            reason: format!("coefficient of {:?} depends on λ: {c}", m.padded(chain_length)),
        });
    }
    let g = formal.map_coeffs(|c| c.as_constant().expect("checked constant"));
    let mut p2k = vec![0u32; 2];
    p2k[1] = k as u32;
    let lead = g.coeff(&Monomial::new(p2k));
    if !lead.is_one() {
        return Err(Error::SolveFailure { k, reason: format!("coefficient of p2^{k} is {lead}, expected 1") });
    }
    Ok(g)
}

/// `L·G − λᵏ G − p₁ᵏ`, with λ formal; zero iff the defining relation holds.
pub fn defining_relation_defect(g: &RatPoly, k: usize) -> Result<MultiPoly<RatFunc>> {
    let f = to_formal(g);
    let chain: Vec<usize> = (0..g.nvars()).collect();
    let lambda = RatFunc::lambda();
    let lg = apply_l(&f, &lambda, &chain)?;
    let p1k = MultiPoly::from_terms(g.vars().clone(), [(Monomial::new(vec![k as u32]), RatFunc::one())]);
    Ok(lg - f.scale(&lambda_pow(k as u32)) - p1k)
}

/// `J_k = G_k / p₁ᵏ` as a numerator/denominator pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Jk {
    pub k: usize,
    pub numerator: RatPoly,
    pub denominator: RatPoly,
}

pub fn shifted_jk(g: &RatPoly, k: usize) -> Jk {
    let den = RatPoly::from_terms(g.vars().clone(), [(Monomial::new(vec![k as u32]), BigRational::one())]);
    Jk { k, numerator: g.clone(), denominator: den }
}

impl Jk {
    /// Check `L(N)/L(D) = N/D + λ^{−k}` by cross-multiplication:
    /// `λᵏ·L(N)·D = (λᵏ N + D)·L(D)`.
    pub fn verify_shift(&self) -> Result<bool> {
        let vars: Arc<Vec<String>> = self.numerator.vars().clone();
        let chain: Vec<usize> = (0..vars.len()).collect();
        let lambda = RatFunc::lambda();
        let lk = lambda_pow(self.k as u32);
        let n = to_formal(&self.numerator);
        let d = to_formal(&self.denominator);
        let ln = apply_l(&n, &lambda, &chain)?;
        let ld = apply_l(&d, &lambda, &chain)?;
        let lhs = ln.scale(&lk) * d.clone();
        let rhs = (n.scale(&lk) + d) * ld;
        Ok(lhs == rhs)
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.numerator.eval_f64(p) / self.denominator.eval_f64(p)
    }
}
