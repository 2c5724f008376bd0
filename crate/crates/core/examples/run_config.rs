//! Runs an experiment described by a TOML file, as the binary does.
//!
//! `cargo run --example run_config -- configs/validate.toml`

use std::path::PathBuf;

use varorder::cli::run_config_file;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("configs/validate.toml"));
    match run_config_file(&path) {
        Ok(outcome) => {
            println!("outcome: {outcome:?}");
            std::process::exit(outcome.code());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
