//! Expand `Tr R²(z)` for a configuration file and print the leading
//! coefficients with their large-`L` behaviour.
//!
//! Usage: `cargo run --example expand_config [config.toml] [order]`

use hybrid_trace::engine::assemble_trace;
use hybrid_trace::model::config;

fn main() {
    let default = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/torus_segment.toml");
    let path = std::env::args().nth(1).unwrap_or_else(|| default.to_string());
    let order: usize = std::env::args().nth(2).map(|s| s.parse().expect("order")).unwrap_or(8);

    let cfg = config::load(path.as_ref()).expect("readable config");
    let bc = cfg.boundary().expect("boundary for every endpoint");
    let exp = assemble_trace(&cfg.hybrid, &bc, order).expect("valid hybrid");

    let m = &exp.metadata;
    println!("sum vol = {}, sum l = {}, N = {}, N0 = {}", m.sum_volume, m.sum_length, m.n_points, m.n_zero);
    for q in 2..=order {
        let tail = exp.series.l_tail(q, 2).expect("within order");
        println!("c_{q:<2} ~ {}  +  ({}) / L  +  ({}) / L^2", tail.get(0), tail.get(1), tail.get(2));
    }
}
