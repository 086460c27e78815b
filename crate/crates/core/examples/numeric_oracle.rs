//! Check the series against direct high-precision evaluation, and the flat
//! torus Green function against its lattice image sum.

use hybrid_trace::oracle::{oracle_table, segment_trace_exact, segment_trace_quadrature, torus_f_derivative, PREC};
use hybrid_trace::model::{HybridSpec, LambdaTriple, SelfAdjointDiagBC};
use hybrid_trace::scalar::{gq, rat, Sym};
use rug::Float;

fn main() {
    let h = HybridSpec::torus_with_segment(Sym::one());
    let bc = SelfAdjointDiagBC {
        points: vec![
            LambdaTriple { top: rat(0, 1), off: gq(rat(1, 1), rat(0, 1)), seg: rat(2, 1) },
            LambdaTriple { top: rat(1, 2), off: gq(rat(1, 3), rat(1, 2)), seg: rat(3, 1) },
        ],
    }
    .to_boundary();
    println!("{:>8} {:>24} {:>24} {:>12}", "z", "series", "oracle", "abs_diff");
    for r in oracle_table(&h, &bc, 10, &[50.0, 100.0, 200.0, 400.0]).expect("oracle") {
        println!("{:>8} {:>24.17e} {:>24.17e} {:>12.4e}", r.z, r.series, r.oracle, r.difference);
    }

    let (l, z) = (Float::with_val(PREC, 1), Float::with_val(PREC, 30));
    let q = segment_trace_quadrature(&l, &z);
    let e = segment_trace_exact(&l, &z);
    println!("\nsegment trace at z = 30: quadrature {:.20e}, closed form {:.20e}", q.to_f64(), e.to_f64());

    let tau = std::f64::consts::TAU;
    for z in [5.0, 10.0, 20.0] {
        let r = torus_f_derivative([[tau, 0.0], [0.0, tau]], z, 3).expect("cutoff large enough");
        println!("torus z = {z:>4}: F' + 1/(2πz) = {:+.4e}, F'' - 1/(2πz²) = {:+.4e}", r.first.to_f64(), r.second.to_f64());
    }
}
