//! Compare the engine with the closed-form coefficient formulas for
//! diagonal boundary conditions, printed and corrected.

use hybrid_trace::closed_forms::{compare, Status};
use hybrid_trace::engine::assemble_trace;
use hybrid_trace::model::{HybridSpec, LambdaTriple, SelfAdjointDiagBC};
use hybrid_trace::scalar::{gq, rat, Sym};

fn main() {
    let h = HybridSpec::torus_with_segment(Sym::one());
    let bc = SelfAdjointDiagBC {
        points: vec![
            LambdaTriple { top: rat(0, 1), off: gq(rat(1, 1), rat(0, 1)), seg: rat(2, 1) },
            LambdaTriple { top: rat(1, 2), off: gq(rat(1, 3), rat(1, 2)), seg: rat(3, 1) },
        ],
    };
    let exp = assemble_trace(&h, &bc.to_boundary(), 9).expect("valid");
    let report = compare(&exp, &h, &bc).expect("diagonal class");
    for row in &report.rows {
        let tag = match row.status {
            Status::Match => "match",
            Status::KnownDiscrepancy => "printed formula differs; corrected form matches",
            Status::Mismatch => "MISMATCH",
        };
        println!("c_{} [1/L^{}]: {}  ({tag})", row.n, row.l_order, row.engine);
        if row.status != Status::Match {
            println!("    printed:   {}", row.printed);
        }
    }
    println!("{} matches, {} known discrepancies, {} mismatches", report.matches, report.known_discrepancies, report.mismatches);
}
