//! Builds a vocabulary from the smoke corpus, loads the matching word vectors
//! and round-trips a tweet through encode/decode.

use std::path::Path;

use harassnet::embeddings::{build_vocab, decode, encode, load_embeddings, DEFAULT_MAX_LEN};
use harassnet::textprep::{preprocess, CleanConfig};
use harassnet::{load_corpus, ColumnMap, Rng, Split};

fn main() -> harassnet::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let corpus = load_corpus(&fixtures.join("smoke.csv"), &ColumnMap::default())?;
    let cfg = CleanConfig::default();

    let train_tokens: Vec<Vec<String>> = corpus.split(Split::Train).map(|e| preprocess(&e.text, &cfg)).collect();
    let vocab = build_vocab(&train_tokens, 1)?;
    println!("vocabulary: {} entries (including PAD and UNK)", vocab.len());

    let emb = load_embeddings(&fixtures.join("smoke_vectors.txt"), &vocab, 200, &mut Rng::new(1))?;
    println!(
        "embeddings: {} x {}, {:.1}% of the vocabulary found in the file",
        vocab.len(),
        emb.dim(),
        100.0 * emb.coverage()
    );

    let text = &corpus.split(Split::Test).next().expect("test split").text;
    let tokens = preprocess(text, &cfg);
    let ids = encode(&tokens, &vocab, DEFAULT_MAX_LEN);
    println!("\n{text}\n -> {ids:?}\n -> {:?}", decode(&ids, &vocab));
    Ok(())
}
