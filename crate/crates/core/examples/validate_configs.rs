//! Validate every bundled configuration and print the findings.

use hybrid_trace::model::config;

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs");
    let mut paths: Vec<_> = std::fs::read_dir(dir).expect("configs dir").flatten().map(|e| e.path()).collect();
    paths.sort();
    for p in paths {
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        match config::load(&p) {
            Err(e) => println!("{name}: {e}"),
            Ok(cfg) => {
                let mut findings: Vec<String> = cfg.hybrid.validate().err().unwrap_or_default().iter().map(ToString::to_string).collect();
                if let Err(missing) = cfg.boundary() {
                    findings.extend(missing);
                }
                if findings.is_empty() {
                    println!("{name}: ok ({} gluing points)", cfg.hybrid.n_points());
                } else {
                    println!("{name}:");
                    for f in findings {
                        println!("  {f}");
                    }
                }
            }
        }
    }
}
