//! Runs the multi-seed comparison of all eight variants on the smoke corpus
//! and prints the mean table, best first.
//!
//! `cargo run --release --example compare_variants -- 3` (number of seeds)

use std::path::Path;

use harassnet::cli::{prepare, RunSpec};
use harassnet::training::{run_protocol, ProtocolConfig, ProtocolData};
use harassnet::{load_corpus, ColumnMap};

fn main() -> harassnet::Result<()> {
    let runs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let spec = RunSpec {
        embeddings: Some(fixtures.join("smoke_vectors.txt")),
        ..RunSpec::default()
    };
    let corpus = load_corpus(&fixtures.join("smoke.csv"), &ColumnMap::default())?;
    let data = prepare(&spec, &corpus)?;

    let mut train_cfg = spec.train.clone();
    train_cfg.max_epochs = 5;
    train_cfg.patience = 3;
    let cfg = ProtocolConfig::new(spec.model.clone(), train_cfg, runs);
    let mut table = run_protocol(
        &cfg,
        &ProtocolData {
            embeddings: &data.embeddings,
            train: &data.train,
            validation: &data.validation,
            test: &data.test,
        },
    )?;
    table.sort_by_f1_macro();
    print!("{}", table.to_csv());
    Ok(())
}
