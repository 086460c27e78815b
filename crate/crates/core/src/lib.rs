//! Pseudoasymptotic expansion of `Tr R²(z)` for Laplacians on hybrid
//! manifolds (closed surfaces joined by segments), with the inverse problem
//! of recovering geometry and boundary data from the coefficients.
//!
//! Coefficients are exact: polynomials in `π` and Euler's `γ` over the
//! Gaussian rationals, divided by polynomials in `L = ln z²`.

pub mod cli;
pub mod closed_forms;
pub mod engine;
pub mod inverse;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod scalar;
pub mod series;

/// Pretty JSON with object keys sorted, newline terminated.
pub fn to_sorted_json<T: serde::Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("records serialize");
    serde_json::to_string_pretty(&v).expect("values serialize") + "\n"
}
