//! Train an MNIST model on 4x4 block-mean images.
//!
//!     cargo run --release --example train_mnist [-- <scheme> <subset_prefix> <epochs>]
//!
//! scheme: pairwise (default) or a digit 1..=5 for sliding k-local.
//! Expects IDX files under $ANO_DATA_DIR/mnist/ (default ./data/mnist); see
//! scripts/fetch_data.sh or scripts/mnist_npm_to_idx.py.

use ano::circuit::SchemeKind;
use ano::cli::{load_task_dataset, run_trial};
use ano::config::RunConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scheme = args.get(1).cloned().unwrap_or_else(|| "pairwise".to_string());
    let prefix: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2500);
    let epochs: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(5);

    let mut rc = RunConfig::mnist_default();
    rc.data.subset_prefix = Some(prefix);
    rc.data.test_fraction = 0.2;
    rc.train.epochs = epochs;
    match scheme.as_str() {
        "pairwise" => {}
        k => {
            let k: usize = k.parse().expect("scheme must be `pairwise` or a locality 1..=5");
            rc.circuit.scheme = SchemeKind::SlidingKLocal;
            rc.circuit.subset = None;
            rc.circuit.k = Some(k);
            rc.circuit.use_rotations = true;
        }
    }

    let full = match load_task_dataset(&rc) {
        Ok(ds) => ds,
        Err(e) => {
            eprintln!("could not load MNIST data: {e}");
            eprintln!("fetch it with scripts/fetch_data.sh first");
            std::process::exit(3);
        }
    };
    println!(
        "mnist: {} samples ({} scheme), {} epochs",
        full.len(),
        scheme,
        rc.train.epochs
    );
    let t0 = std::time::Instant::now();
    let trial = run_trial(&rc, &full, 0).unwrap();
    for m in &trial.metrics {
        println!(
            "epoch {:>2}: train loss {:.4}, test accuracy {:.4} ({:.1} s)",
            m.epoch, m.train_loss, m.test_accuracy, m.wall_time_s
        );
    }
    println!(
        "final test accuracy {:.4} in {:.1} s",
        trial.metrics.last().unwrap().test_accuracy,
        t0.elapsed().as_secs_f64()
    );
}
