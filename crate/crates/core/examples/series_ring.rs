//! Arithmetic in the ring of pseudoasymptotic series.
//!
//! Builds `F = ℓ + 1/(12π z²)` and `G = 1/z`, where `ℓ` stands for
//! `-(ln z² + 2γ)/(4π)`, then multiplies, inverts and differentiates them.

use hybrid_trace::scalar::{gq_rat, Sym};
use hybrid_trace::series::{LogVar, PseudoSeries, RatFn};

fn main() {
    let var = LogVar::ell();
    let order = 6;
    let f = PseudoSeries::from_terms(
        var.clone(),
        order,
        [(0, RatFn::var()), (2, RatFn::from_sym(&Sym::pi_pow(-1).scale(&gq_rat(1, 12))))],
    );
    let g = PseudoSeries::monomial(var.clone(), order, 1, RatFn::one());

    let x = &(&f * &g) + &PseudoSeries::one(var.clone(), order);
    println!("X = F G + 1:");
    print(&x);

    let inv = x.reciprocal().expect("X has a nonzero head");
    println!("\n1/X:");
    print(&inv);
    assert_eq!(&x * &inv, PseudoSeries::one(var.clone(), order));

    println!("\nd/dz F:");
    print(&f.dz());

    // 1/(F + 1) has coefficients rational in ℓ, so each decays like 1/L
    let y = (&f + &PseudoSeries::one(var.clone(), order)).reciprocal().expect("nonzero head");
    println!("\n1/(F + 1):");
    print(&y);
    let tail = y.l_tail(2, 3).expect("coefficient exists");
    println!("z^-2 coefficient for large L: {}", (0..=3).map(|k| format!("({}) L^-{k}", tail.get(k))).collect::<Vec<_>>().join(" + "));

    let (re, im) = inv.eval_f64(100.0).expect("finite at z = 100");
    println!("1/X at z = 100: {re:.15e} {im:+.3e}i");
}

/// Coefficients print as numerator and denominator coefficient lists in ℓ.
fn print(s: &PseudoSeries) {
    for q in 0..=s.order() {
        let c = s.coeff(q).expect("within order");
        if !c.is_zero() {
            println!("  z^-{q}: {c}");
        }
    }
}
