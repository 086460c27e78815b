//! Expansion of a coefficient `c(L)` in powers of `1/L`.

use super::{LogVar, RatFn, SeriesError};
use crate::scalar::Sym;

/// Coefficients of `c(L) = Σ_{k=0}^{K} coeffs[k] / L^k + O(L^{-K-1})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LTail {
    pub coeffs: Vec<Sym>,
}

impl LTail {
    pub fn order_l(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `L^{-k}`; zero beyond the computed order.
    pub fn get(&self, k: usize) -> Sym {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// Expands `c(t)` with `L = scale·t + shift`.
    ///
    /// First in `u = 1/t` by power-series division of the reversed
    /// numerator and denominator, then substituting
    /// `u = scale·w / (1 - shift·w)` with `w = 1/L`.
    pub fn of(c: &RatFn, var: &LogVar, order_l: usize) -> Result<LTail, SeriesError> {
        let k = order_l + 1;
        let (dn, dd) = (c.num_degree(), c.den_degree());
        if c.is_zero() {
            return Ok(LTail { coeffs: vec![Sym::zero(); k] });
        }
        if dn > dd {
            return Err(SeriesError::DegreeTooLarge { num: dn, den: dd });
        }
        let num = c.num().coeffs();
        let den: Vec<Sym> = c.den().coeffs().iter().map(|g| Sym::from_gauss(g.clone())).collect();
        let rev_num: Vec<Sym> = (0..k).map(|j| if j <= dn { num[dn - j].clone() } else { Sym::zero() }).collect();
        let rev_den: Vec<Sym> = (0..k).map(|j| if j <= dd { den[dd - j].clone() } else { Sym::zero() }).collect();
        // rev_den[0] = 1 since the denominator is monic
        let mut quo = vec![Sym::zero(); k];
        for n in 0..k {
            let mut acc = rev_num[n].clone();
            for j in 1..=n {
                acc -= &(&rev_den[j] * &quo[n - j]);
            }
            quo[n] = acc;
        }
        // c = u^{dd-dn} · quo(u)
        let gap = dd - dn;
        let mut in_u = vec![Sym::zero(); k];
        for (n, v) in quo.into_iter().enumerate() {
            if n + gap < k {
                in_u[n + gap] = v;
            }
        }
        // u(w) = scale · Σ_{j≥0} shift^j w^{j+1}
        let mut u_of_w = vec![Sym::zero(); k];
        let mut p = var.scale().clone();
        for slot in u_of_w.iter_mut().skip(1) {
            *slot = p.clone();
            p = &p * var.shift();
        }
        let mut out = vec![Sym::zero(); k];
        let mut power = vec![Sym::zero(); k];
        power[0] = Sym::one();
        for (n, e) in in_u.iter().enumerate() {
            if n > 0 {
                power = truncated_mul(&power, &u_of_w);
            }
            if !e.is_zero() {
                for (j, pv) in power.iter().enumerate() {
                    if !pv.is_zero() {
                        out[j] += &(e * pv);
                    }
                }
            }
        }
        Ok(LTail { coeffs: out })
    }
}

fn truncated_mul(a: &[Sym], b: &[Sym]) -> Vec<Sym> {
    let n = a.len();
    let mut out = vec![Sym::zero(); n];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            if !y.is_zero() {
                out[i + j] += &(x * y);
            }
        }
    }
    out
}
