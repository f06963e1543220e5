//! Augments the smoke corpus by back-translation, records the translations
//! to a cassette and replays them.
//!
//! Set HARASSNET_MT_ENDPOINT (and HARASSNET_MT_TOKEN) to use a real
//! translation service instead of the offline word-swap backend.

use std::path::Path;

use harassnet::augment::{
    augment_dataset, AugmentPolicy, HttpBackend, HttpConfig, RecordingBackend, ReplayBackend, ShuffleBackend,
    TranslationBackend,
};
use harassnet::{load_corpus, ColumnMap, Split};

fn main() -> harassnet::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let corpus = load_corpus(&fixtures.join("smoke.csv"), &ColumnMap::default())?;
    let policy = AugmentPolicy::default();

    let inner: Box<dyn TranslationBackend> = match std::env::var("HARASSNET_MT_ENDPOINT") {
        Ok(endpoint) => Box::new(HttpBackend::new(HttpConfig {
            endpoint,
            ..HttpConfig::default()
        })?),
        Err(_) => Box::new(ShuffleBackend::new(42)),
    };
    let recorder = RecordingBackend::new(inner);
    let (augmented, report) = augment_dataset(&corpus, &policy, &recorder)?;
    println!(
        "backend {}: {} sources, {} added, {} duplicates dropped, {} failed",
        report.backend, report.targeted, report.added, report.duplicates_dropped, report.failed
    );
    println!(
        "train split {} -> {}",
        corpus.split_len(Split::Train),
        augmented.split_len(Split::Train)
    );
    for e in augmented.examples[corpus.len()..].iter().take(3) {
        println!("  {} [{}] {}", e.id, e.provenance.as_deref().unwrap_or(""), e.text);
    }

    let cassette = std::env::temp_dir().join("harassnet_cassette.json");
    recorder.save(&cassette)?;
    let replay = ReplayBackend::load(report.backend.clone(), &cassette)?;
    let (again, _) = augment_dataset(&corpus, &policy, &replay)?;
    println!(
        "replayed {} translations, identical output: {}",
        replay.len(),
        again == augmented
    );
    Ok(())
}
