//! Train the 2-local banknote classifier end to end (one seeded trial) and
//! report the test-accuracy curve.
//!
//!     cargo run --release --example train_banknote [-- <k> <epochs>]
//!
//! Expects the dataset at $ANO_DATA_DIR/banknote/data_banknote_authentication.txt
//! (default ./data); see scripts/fetch_data.sh.

use ano::cli::{load_task_dataset, run_trial};
use ano::config::RunConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let k: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(2);
    let epochs: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(100);

    let mut rc = RunConfig::banknote_default();
    rc.circuit.k = Some(k);
    rc.train.epochs = epochs;

    let full = match load_task_dataset(&rc) {
        Ok(ds) => ds,
        Err(e) => {
            eprintln!("could not load banknote data: {e}");
            eprintln!("fetch it with scripts/fetch_data.sh first");
            std::process::exit(3);
        }
    };
    println!(
        "banknote: {} samples, {k}-local sliding scheme, {} epochs",
        full.len(),
        rc.train.epochs
    );
    let trial = run_trial(&rc, &full, 0).unwrap();
    for m in trial.metrics.iter().step_by(10) {
        println!(
            "epoch {:>3}: train loss {:.4}, test accuracy {:.4}",
            m.epoch, m.train_loss, m.test_accuracy
        );
    }
    let last = trial.metrics.last().unwrap();
    println!("final test accuracy: {:.4}", last.test_accuracy);
}
