//! Boundary blocks: canonical unitary form, reducibility and the
//! invariance of the expansion under `(A, B) → (LA, LB)`.

use hybrid_trace::engine::assemble_trace;
use hybrid_trace::model::boundary::fmt_mat;
use hybrid_trace::model::{Block, BoundaryCondition, HybridSpec, LambdaTriple};
use hybrid_trace::scalar::{gq, gq_int, rat, Sym};

fn main() {
    let t = LambdaTriple { top: rat(1, 2), off: gq(rat(1, 1), rat(-1, 3)), seg: rat(2, 1) };
    let block = Block::from_lambda(&t);
    println!("A = {}\nB = {}", fmt_mat(&block.a), fmt_mat(&block.b));
    println!("canonical form: {}", fmt_mat(&block.canonical(0).expect("self-adjoint")));
    println!("reducible: {}", block.is_reducible(0).expect("self-adjoint"));

    let l = [[gq_int(2), gq(rat(1, 1), rat(1, 1))], [gq_int(0), gq(rat(0, 1), rat(3, 1))]];
    let scaled = block.scaled(&l);
    println!("\nscaled A = {}\nscaled B = {}", fmt_mat(&scaled.a), fmt_mat(&scaled.b));

    let h = HybridSpec::torus_with_segment(Sym::one());
    let other = Block::from_lambda(&LambdaTriple { top: rat(0, 1), off: gq_int(1), seg: rat(3, 1) });
    let e1 = assemble_trace(&h, &BoundaryCondition::new(vec![block, other.clone()]), 8).expect("valid");
    let e2 = assemble_trace(&h, &BoundaryCondition::new(vec![scaled, other]), 8).expect("valid");
    println!("expansions identical after scaling: {}", e1.series == e2.series);

    let decoupled = Block::from_lambda(&LambdaTriple { top: rat(1, 1), off: gq_int(0), seg: rat(2, 1) });
    println!("zero off-diagonal entry is reducible: {}", decoupled.is_reducible(0).expect("self-adjoint"));
}
