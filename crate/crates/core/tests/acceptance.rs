//! Acceptance suite. Each criterion runs under its time budget and prints
//! one PASS/FAIL line; the test fails if any criterion does.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hybrid_trace::closed_forms::{compare, Status};
use hybrid_trace::engine::{assemble_trace, segment_trace_base};
use hybrid_trace::inverse::{detect_hybrid, invert, HeatData};
use hybrid_trace::model::{Block, BoundaryCondition, HybridSpec, LambdaTriple, ManifoldSpec, SelfAdjointDiagBC};
use hybrid_trace::oracle::{oracle_table, segment_trace_quadrature, torus_f_derivative, PREC};
use hybrid_trace::scalar::{gq, gq_int, gq_to_mp, rat, to_float, Sym};
use hybrid_trace::series::{LogVar, PseudoSeries, RatFn};
use rand::Rng;
use rug::Float;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture() -> (HybridSpec, SelfAdjointDiagBC) {
    let h = HybridSpec::torus_with_segment(Sym::one());
    let bc = SelfAdjointDiagBC {
        points: vec![
            LambdaTriple { top: rat(0, 1), off: gq_int(1), seg: rat(2, 1) },
            LambdaTriple { top: rat(1, 2), off: gq(rat(1, 3), rat(1, 2)), seg: rat(3, 1) },
        ],
    };
    (h, bc)
}

fn four_pi_inv() -> Sym {
    Sym::pi_pow(-1).scale(&hybrid_trace::scalar::gq_rat(1, 4))
}

fn leading_coefficients() -> Outcome {
    let mut r = common::rng(1);
    for case in 0..10 {
        let h = common::hybrid(&mut r, 3, true);
        let bc = common::generic_bc(&mut r, h.n_points());
        let exp = assemble_trace(&h, &bc, 4).map_err(|e| format!("case {case}: {e}"))?;
        let c2 = exp.series.coeff(2).and_then(RatFn::as_constant);
        let c3 = exp.series.coeff(3).and_then(RatFn::as_constant);
        let want2 = &h.sum_volume() * &four_pi_inv();
        let want3 = h.sum_length().scale(&hybrid_trace::scalar::gq_rat(1, 4));
        ensure(c2.as_ref() == Some(&want2), || format!("case {case}: c_2 = {c2:?}, want {want2}"))?;
        ensure(c3.as_ref() == Some(&want3), || format!("case {case}: c_3 = {c3:?}, want {want3}"))?;
    }
    Ok("10 random hybrids, c_2 and c_3 exact".into())
}

fn c4_structure() -> Outcome {
    let mut r = common::rng(2);
    let mut reduced = 0;
    for case in 0..12 {
        let h = common::hybrid(&mut r, 3, true);
        let n = h.n_points();
        let constructed = case % 2 == 1;
        let mut blocks: Vec<Block> = (0..n).map(|_| common::generic_block(&mut r)).collect();
        if constructed {
            // seg = 0 makes a_{i,i+N} b_{i+N,i} - a_{i+N,i+N} b_{i,i} vanish
            for (j, b) in blocks.iter_mut().enumerate() {
                if j % 2 == 0 || r.random_bool(0.3) {
                    let t = LambdaTriple { top: common::small_rat(&mut r, 3), off: common::nonzero_gauss(&mut r, 3), seg: rat(0, 1) };
                    *b = Block::from_lambda(&t).scaled(&common::invertible(&mut r));
                }
            }
        }
        let bc = BoundaryCondition::new(blocks);
        let n0 = bc.n_zero_count();
        if constructed {
            ensure(n0 < n, || format!("case {case}: constructed blocks kept N0 = N"))?;
            reduced += 1;
        } else {
            ensure(n0 == n, || format!("case {case}: generic blocks gave N0 = {n0} < N = {n}"))?;
        }
        let exp = assemble_trace(&h, &bc, 4).map_err(|e| format!("case {case}: {e}"))?;
        let tail = exp.series.l_tail(4, 1).map_err(|e| format!("case {case}: {e}"))?;
        let want0 = Sym::frac(h.sum_euler(), 6) + Sym::frac(n as i64, 4);
        ensure(tail.get(0) == want0, || format!("case {case}: lim c_4 = {}, want {want0}", tail.get(0)))?;
        ensure(tail.get(1) == Sym::int(n0 as i64), || format!("case {case}: 1/L coefficient {}, want N0 = {n0}", tail.get(1)))?;
    }
    Ok(format!("12 hybrids, {reduced} with N0 < N"))
}

fn extension_invariance() -> Outcome {
    let mut r = common::rng(3);
    for case in 0..20 {
        let h = common::hybrid(&mut r, 2, true);
        let bc = common::generic_bc(&mut r, h.n_points());
        let scaled = BoundaryCondition::new(bc.blocks.iter().map(|b| b.scaled(&common::invertible(&mut r))).collect());
        let order = 8;
        let e1 = assemble_trace(&h, &bc, order).map_err(|e| format!("case {case}: {e}"))?;
        let e2 = assemble_trace(&h, &scaled, order).map_err(|e| format!("case {case}: {e}"))?;
        ensure(e1.series == e2.series, || format!("case {case}: tables differ"))?;
    }
    Ok("20 random (A, B) with random scalings, order 8".into())
}

fn segment_base() -> Outcome {
    for (p, q) in [(1, 1), (3, 2), (5, 1)] {
        let l = Sym::frac(p, q);
        let s = segment_trace_base(&l, 12);
        let want = PseudoSeries::from_terms(
            LogVar::ell(),
            12,
            [(3, RatFn::from_sym(&l.scale(&hybrid_trace::scalar::gq_rat(1, 4)))), (4, RatFn::from_sym(&Sym::frac(1, 2)))],
        );
        ensure(s == want, || format!("l = {l}: base series differs"))?;
        let z = Float::with_val(PREC, 30);
        let lf = to_float(&hybrid_trace::scalar::rat(p, q), PREC);
        let quad = segment_trace_quadrature(&lf, &z);
        let series = s.eval(&z, PREC).map_err(|e| e.to_string())?;
        let diff = Float::with_val(PREC, &quad - series.real()).abs().to_f64();
        ensure(diff < 1e-12, || format!("l = {l}: |quadrature - series| = {diff:e}"))?;
    }
    Ok("l/(4z^3) + 1/(2z^4) exact; quadrature at z = 30 within 1e-12".into())
}

fn series_vs_oracle() -> Outcome {
    let (h, bc) = fixture();
    let rows = oracle_table(&h, &bc.to_boundary(), 10, &[50.0, 100.0, 200.0, 400.0]).map_err(|e| e.to_string())?;
    let d: Vec<f64> = rows.iter().map(|r| r.difference).collect();
    ensure(d.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {d:?}"))?;
    ensure(d[3] < 1e-10, || format!("difference at z = 400 is {:e}", d[3]))?;
    Ok(format!("|diff| = {:.2e}, {:.2e}, {:.2e}, {:.2e}", d[0], d[1], d[2], d[3]))
}

fn flat_torus() -> Outcome {
    let tau = std::f64::consts::TAU;
    let basis = [[tau, 0.0], [0.0, tau]];
    let mut prev = f64::INFINITY;
    let mut first = Vec::new();
    for z in [5.0, 10.0, 20.0] {
        let res = torus_f_derivative(basis, z, 4).map_err(|e| e.to_string())?;
        let f1 = res.first.to_f64().abs();
        let f2 = res.second.to_f64().abs();
        ensure(f1 < prev, || format!("residual not decreasing at z = {z}"))?;
        ensure(z != 5.0 || (f1 < 1e-8 && f2 < 1e-8), || format!("z = 5: |F' + 1/(2πz)| = {f1:e}, |F'' - 1/(2πz²)| = {f2:e}"))?;
        prev = f1;
        first.push(f1);
    }
    Ok(format!("|F' + 1/(2πz)| = {:.2e}, {:.2e}, {:.2e} at z = 5, 10, 20", first[0], first[1], first[2]))
}

fn closed_forms() -> Outcome {
    let mut r = common::rng(7);
    let mut cases: Vec<(HybridSpec, SelfAdjointDiagBC)> = vec![fixture()];
    let mut sphere = HybridSpec::torus_with_segment(Sym::frac(3, 2));
    sphere.manifolds[0] = ManifoldSpec::unit_sphere("s", &["p", "q"]);
    cases.push((sphere, common::diag_bc(&mut r, 2)));
    for _ in 0..4 {
        let h = common::hybrid(&mut r, 2, true);
        let bc = common::diag_bc(&mut r, h.n_points());
        cases.push((h, bc));
    }
    let (mut matches, mut known) = (0, 0);
    for (k, (h, bc)) in cases.iter().enumerate() {
        let exp = assemble_trace(h, &bc.to_boundary(), 10).map_err(|e| format!("case {k}: {e}"))?;
        let report = compare(&exp, h, bc).map_err(|e| format!("case {k}: {e}"))?;
        if let Some(row) = report.rows.iter().find(|r| r.status == Status::Mismatch) {
            return Err(format!("case {k}: c_{} [1/L^{}]: engine {} printed {}", row.n, row.l_order, row.engine, row.printed));
        }
        for row in report.rows.iter().filter(|r| r.status == Status::KnownDiscrepancy) {
            ensure(row.corrected.as_ref() == Some(&row.engine), || format!("case {k}: whitelisted row without corrected value"))?;
            if k == 0 && row.n == 5 {
                println!("    known discrepancy c_5 [1/L^{}]: engine {} printed {}", row.l_order, row.engine, row.printed);
            }
        }
        matches += report.matches;
        known += report.known_discrepancies;
    }
    Ok(format!("{} instances: {matches} matches, {known} known discrepancies, 0 mismatches", cases.len()))
}

fn inverse_round_trip() -> Outcome {
    let mut r = common::rng(8);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let n_seg = 1 + case % 3;
        let h = loop {
            let h = common::hybrid(&mut r, n_seg, false);
            if h.segments.len() == n_seg {
                break h;
            }
        };
        let h = if case % 5 == 4 {
            let mut s = h;
            s.manifolds.truncate(1);
            let labels: Vec<String> = (0..s.n_points()).map(|j| format!("p{j}")).collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            s.manifolds[0] = ManifoldSpec::unit_sphere("s", &refs);
            for (j, a) in s.gluing.iter_mut().enumerate() {
                a.manifold = 0;
                a.point = j;
            }
            s
        } else {
            h
        };
        let n = h.n_points();
        let truth = common::diag_bc(&mut r, n);
        let order = n + 4;
        let exp = assemble_trace(&h, &truth.to_boundary(), order).map_err(|e| format!("case {case}: {e}"))?;
        let heat = HeatData::from_hybrid(&h, order).map_err(|e| format!("case {case}: {e}"))?;
        let rep = invert(&exp.series, &heat).map_err(|e| format!("case {case}: {e}"))?;
        ensure(rep.all_ok(), || format!("case {case}: {:?}", rep.stages))?;
        let g = &rep.geometry;
        ensure(
            g.sum_volume == h.sum_volume().to_string()
                && g.sum_length == h.sum_length().to_string()
                && g.n_points == n
                && g.n_segments == h.segments.len()
                && g.sum_euler == h.sum_euler()
                && g.euler_hybrid == h.sum_euler() - n as i64,
            || format!("case {case}: geometry {g:?}"),
        )?;
        let mut t: Vec<(f64, f64, f64)> = truth
            .points
            .iter()
            .map(|p| (to_float(&p.seg, 64).to_f64(), gq_to_mp(&p.off, 64).abs().real().to_f64(), to_float(&p.top, 64).to_f64()))
            .collect();
        t.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (i, want) in t.iter().enumerate() {
            for (got, want) in [(rep.lambda_seg[i], want.0), (rep.lambda_off_abs[i], want.1), (rep.lambda_top[i], want.2)] {
                let e = (got - want).abs() / want.abs().max(1.0);
                worst = worst.max(e);
                ensure(e < 1e-6, || format!("case {case}: got {got}, want {want}"))?;
            }
        }
    }
    Ok(format!("20 instances, N in 2..=6, max relative error {worst:.2e}"))
}

fn hybrid_detection() -> Outcome {
    let smooth = [
        HybridSpec { manifolds: vec![ManifoldSpec::flat_torus("t", Sym::pi_pow(2), &[])], ..Default::default() },
        HybridSpec { manifolds: vec![ManifoldSpec::unit_sphere("s", &[])], ..Default::default() },
    ];
    for h in &smooth {
        let e = assemble_trace(h, &BoundaryCondition::new(vec![]), 10).map_err(|e| e.to_string())?;
        ensure(!detect_hybrid(&e.series), || "smooth manifold reported hybrid".into())?;
    }
    let mut r = common::rng(9);
    for case in 0..10 {
        let h = common::hybrid(&mut r, 3, true);
        let bc = common::generic_bc(&mut r, h.n_points());
        let e = assemble_trace(&h, &bc, 6).map_err(|e| e.to_string())?;
        ensure(detect_hybrid(&e.series), || format!("case {case}: hybrid not detected"))?;
    }
    Ok("2 smooth manifolds false, 10 hybrids true".into())
}

fn ring_properties() -> Outcome {
    let mut r = common::rng(10);
    let one = |order| PseudoSeries::one(LogVar::ell(), order);
    for case in 0..1000 {
        let order = r.random_range(2..=4);
        match case % 4 {
            0 => {
                let (a, b) = (common::series(&mut r, order), common::series(&mut r, order));
                ensure(&a + &b == &b + &a && &a * &b == &b * &a, || format!("case {case}: commutativity"))?;
            }
            1 => {
                let (a, b, c) = (common::series(&mut r, order), common::series(&mut r, order), common::series(&mut r, order));
                ensure(&(&a + &b) + &c == &a + &(&b + &c), || format!("case {case}: additive associativity"))?;
                ensure(&(&a * &b) * &c == &a * &(&b * &c), || format!("case {case}: multiplicative associativity"))?;
            }
            2 => {
                let (a, b, c) = (common::series(&mut r, order), common::series(&mut r, order), common::series(&mut r, order));
                ensure(&a * &(&b + &c) == &(&a * &b) + &(&a * &c), || format!("case {case}: distributivity"))?;
            }
            _ => {
                let a = common::invertible_series(&mut r, order);
                let inv = a.reciprocal().map_err(|e| format!("case {case}: {e}"))?;
                ensure(&a * &inv == one(order), || format!("case {case}: a * (1/a) != 1"))?;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let a = common::series(&mut r, 4);
        let d = a.dz();
        for z in [20.0, 50.0] {
            let prec = 192;
            let at = |x: f64| a.eval(&Float::with_val(prec, x), prec).map(|v| v.real().clone());
            let h = z * 1e-5;
            let fd = Float::with_val(prec, at(z + h).map_err(|e| e.to_string())? - at(z - h).map_err(|e| e.to_string())?) / (2.0 * h);
            let exact = d.eval(&Float::with_val(prec, z), prec).map_err(|e| e.to_string())?.real().clone();
            let scale = exact.to_f64().abs().max(1e-300);
            let rel = Float::with_val(prec, &fd - &exact).abs().to_f64() / scale;
            if exact.to_f64().abs() > 1e-30 {
                worst = worst.max(rel);
                ensure(rel < 1e-6, || format!("dz case {case} at z = {z}: relative error {rel:e}"))?;
            }
        }
    }
    Ok(format!("1000 ring-law and reciprocal cases exact; dz vs finite differences max relative error {worst:.2e}"))
}

#[test]
fn acceptance() {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 10] = [
        (1, "leading coefficients", 10, leading_coefficients),
        (2, "c_4 structure", 10, c4_structure),
        (3, "extension invariance", 30, extension_invariance),
        (4, "segment base term", 10, segment_base),
        (5, "series vs oracle", 60, series_vs_oracle),
        (6, "flat torus lattice check", 30, flat_torus),
        (7, "closed-form cross-check", 60, closed_forms),
        (8, "inverse round trip", 120, inverse_round_trip),
        (9, "hybrid detection", 5, hybrid_detection),
        (10, "series ring properties", 60, ring_properties),
    ];
    let mut failed = Vec::new();
    for (k, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(budget) => Err(format!("took {elapsed:.2?}, budget {budget} s")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("[PASS] {k:>2} {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                println!("[FAIL] {k:>2} {name}: {why} ({elapsed:.2?})");
                failed.push(k);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
