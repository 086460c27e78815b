//! Recover geometry and diagonal boundary data from an expansion.

use hybrid_trace::engine::assemble_trace;
use hybrid_trace::inverse::{invert, HeatData};
use hybrid_trace::model::{HybridSpec, LambdaTriple, SelfAdjointDiagBC};
use hybrid_trace::scalar::{gq, rat, Sym};

fn main() {
    let h = HybridSpec::torus_with_segment(Sym::frac(3, 2));
    let truth = SelfAdjointDiagBC {
        points: vec![
            LambdaTriple { top: rat(-2, 3), off: gq(rat(1, 2), rat(1, 2)), seg: rat(7, 4) },
            LambdaTriple { top: rat(5, 1), off: gq(rat(2, 1), rat(0, 1)), seg: rat(1, 3) },
        ],
    };
    let order = h.n_points() + 4;
    let exp = assemble_trace(&h, &truth.to_boundary(), order).expect("valid");
    let heat = HeatData::from_hybrid(&h, order).expect("flat torus heat data");
    let report = invert(&exp.series, &heat).expect("geometry");

    println!("hybrid: {}", report.is_hybrid);
    println!("geometry: {:?}", report.geometry);
    for i in 0..report.lambda_seg.len() {
        println!(
            "point {i}: seg = {:.12}  |off| = {:.12}  top = {:.12}",
            report.lambda_seg[i], report.lambda_off_abs[i], report.lambda_top[i]
        );
    }
    println!("truth (unordered):");
    for p in &truth.points {
        println!("  seg = {}  off = {}  top = {}", p.seg, hybrid_trace::scalar::fmt_gauss(&p.off), p.top);
    }
}
