//! Verify analytic gradients (parameter-shift theta, closed-form phi,
//! analytic head) against central finite differences over a battery of small
//! model configurations.
//!
//!     cargo run --release --example gradcheck

use ano::cli::{run_gradcheck, ShiftFault};

fn main() {
    let report = run_gradcheck(None, ShiftFault::None, 31415).unwrap();
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    assert!(report.pass);
}
