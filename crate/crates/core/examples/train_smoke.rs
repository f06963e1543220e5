//! Trains the multi-attention model on the smoke corpus, reports test
//! metrics and reloads the saved checkpoint.
//!
//! `cargo run --release --example train_smoke`

use std::path::Path;

use harassnet::cli::{prepare, RunSpec};
use harassnet::training::TABLE_COLUMNS;
use harassnet::{evaluate, load_corpus, model, train, ColumnMap, Model, TrainConfig};

fn main() -> harassnet::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let spec = RunSpec {
        embeddings: Some(fixtures.join("smoke_vectors.txt")),
        augment: false,
        ..RunSpec::default()
    };
    let corpus = load_corpus(&fixtures.join("smoke.csv"), &ColumnMap::default())?;
    let data = prepare(&spec, &corpus)?;

    let net = Model::build(spec.model.clone(), &data.embeddings)?;
    println!("{} with {} parameters", net.config().variant, net.num_params());
    let cfg = TrainConfig {
        max_epochs: 10,
        ..TrainConfig::default()
    };
    let outcome = train(net, &data.train, &data.validation, &cfg)?;
    for e in &outcome.history.epochs {
        println!(
            "epoch {:>2}  loss {:.4}  val auc {:.4}{}",
            e.epoch,
            e.train_loss,
            e.val_auc_avg,
            if e.improved { "  *" } else { "" }
        );
    }

    let report = evaluate(&outcome.model, &data.test, cfg.threshold)?;
    let metrics = harassnet::training::TableMetrics::from_report(&report);
    for (name, v) in TABLE_COLUMNS.iter().zip(metrics.values()) {
        println!("{name:<14} {v:.4}");
    }

    let path = std::env::temp_dir().join("harassnet_example.ckpt");
    model::save(&outcome.model, &path)?;
    let reloaded = model::load(&path)?;
    let text = "i will break your legs";
    println!(
        "\nreloaded model scores {text:?}: {:?}",
        reloaded.score_text(text)?.as_array()
    );
    Ok(())
}
