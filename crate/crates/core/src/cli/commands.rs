use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{BackendKind, RunSpec};
use crate::augment::{
    augment_dataset, AugmentReport, HttpBackend, IdentityBackend, RecordingBackend, ReplayBackend, ShuffleBackend,
    TranslationBackend,
};
use crate::corpus::{load_corpus, save_corpus, write_corpus};
use crate::dataset::{Category, Dataset, EncodedExample, Example, Split};
use crate::embeddings::{build_vocab, encode, load_embeddings, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::model::{self, decide, Model};
use crate::ndmath::Rng;
use crate::textprep::{preprocess, CleanConfig};
use crate::training::{
    evaluate, run_protocol, train, MetricsReport, ProtocolConfig, ProtocolData, TableMetrics, TABLE_COLUMNS,
};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, s)
}

fn load_dataset(spec: &RunSpec) -> Result<Dataset> {
    let corpus = spec
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Config("no corpus given (pass a path or set corpus= in the config)".into()))?;
    load_corpus(corpus, &spec.column_map()?)
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Per-split class distribution as CSV.
pub fn stats_table(dataset: &Dataset) -> String {
    let mut out = String::from("split,tweets,harassment,harassment_pct,indirect_pct,sexual_pct,physical_pct\n");
    for split in Split::ALL {
        let rows: Vec<&Example> = dataset.split(split).collect();
        let n = rows.len();
        let count = |c: Category| rows.iter().filter(|e| e.labels.get(c)).count();
        let _ = writeln!(
            out,
            "{split},{n},{},{:.2},{:.2},{:.2},{:.2}",
            count(Category::Harassment),
            pct(count(Category::Harassment), n),
            pct(count(Category::Indirect), n),
            pct(count(Category::Sexual), n),
            pct(count(Category::Physical), n),
        );
    }
    out
}

pub fn stats(spec: &RunSpec) -> Result<()> {
    let dataset = load_dataset(spec)?;
    let table = stats_table(&dataset);
    print!("{table}");
    create_dir(&spec.out_dir)?;
    write_file(&spec.out_dir.join("stats.csv"), table)
}

pub fn preprocess_cmd(spec: &RunSpec, output: Option<&Path>) -> Result<()> {
    let dataset = load_dataset(spec)?;
    let output = match output {
        Some(p) => p.to_path_buf(),
        None => {
            create_dir(&spec.out_dir)?;
            spec.out_dir.join("preprocessed.csv")
        }
    };
    let cfg = CleanConfig::default();
    let tokens = |e: &Example| preprocess(&e.text, &cfg).join(" ");
    let file = fs::File::create(&output).map_err(|e| Error::io(&output, e))?;
    write_corpus(std::io::BufWriter::new(file), &dataset, &[("tokens", &tokens)])?;
    println!("wrote {} rows to {}", dataset.len(), output.display());
    Ok(())
}

pub fn make_backend(spec: &RunSpec) -> Result<Box<dyn TranslationBackend>> {
    Ok(match spec.backend {
        BackendKind::Identity => Box::new(IdentityBackend),
        BackendKind::Shuffle => Box::new(ShuffleBackend::new(
            Rng::new(spec.model.seed).derive("augment").next_u64(),
        )),
        BackendKind::Http => Box::new(HttpBackend::new(spec.http.clone())?),
        BackendKind::Replay => {
            let path = spec
                .cassette
                .as_ref()
                .ok_or_else(|| Error::Config("the replay backend needs a cassette path".into()))?;
            Box::new(ReplayBackend::load("replay", path)?)
        }
    })
}

fn print_augment_report(r: &AugmentReport) {
    println!(
        "augmentation ({}): {} targeted, {} added, {} duplicates dropped, {} failed",
        r.backend, r.targeted, r.added, r.duplicates_dropped, r.failed
    );
}

/// Augments the training split when enabled, writing the report to `out_dir`.
fn maybe_augment(spec: &RunSpec, dataset: Dataset) -> Result<Dataset> {
    if !spec.augment {
        return Ok(dataset);
    }
    let backend = make_backend(spec)?;
    let (out, report) = augment_dataset(&dataset, &spec.policy, backend.as_ref())?;
    print_augment_report(&report);
    write_json(&spec.out_dir.join("augment_report.json"), &report)?;
    Ok(out)
}

pub fn augment_cmd(spec: &RunSpec, output: Option<&Path>, record: Option<&Path>) -> Result<()> {
    spec.policy.validate()?;
    let dataset = load_dataset(spec)?;
    create_dir(&spec.out_dir)?;
    let backend = RecordingBackend::new(make_backend(spec)?);
    let (out, report) = augment_dataset(&dataset, &spec.policy, &backend)?;
    let output = output.map_or_else(|| spec.out_dir.join("augmented.csv"), Path::to_path_buf);
    save_corpus(&output, &out)?;
    write_json(&spec.out_dir.join("augment_report.json"), &report)?;
    if let Some(path) = record {
        backend.save(path)?;
    }
    print_augment_report(&report);
    println!("wrote {} rows to {}", out.len(), output.display());
    Ok(())
}

/// Tokenised, encoded splits plus the embedding table built from them.
pub struct Prepared {
    pub embeddings: EmbeddingMatrix,
    pub train: Vec<EncodedExample>,
    pub validation: Vec<EncodedExample>,
    pub test: Vec<EncodedExample>,
}

/// Builds the vocabulary from the training split and encodes every split.
pub fn prepare(spec: &RunSpec, dataset: &Dataset) -> Result<Prepared> {
    let cfg = CleanConfig::default();
    let tokens: Vec<(Split, Vec<String>, _)> = dataset
        .examples
        .iter()
        .map(|e| (e.split, preprocess(&e.text, &cfg), e.labels))
        .collect();
    let train_tokens: Vec<Vec<String>> = tokens
        .iter()
        .filter(|(s, _, _)| *s == Split::Train)
        .map(|(_, t, _)| t.clone())
        .collect();
    if train_tokens.is_empty() {
        return Err(Error::Input("the corpus has no training rows".into()));
    }
    let vocab = build_vocab(&train_tokens, spec.min_freq)?;
    let mut rng = Rng::new(spec.model.seed).derive("embeddings");
    let embeddings = match &spec.embeddings {
        Some(path) => {
            let m = load_embeddings(path, &vocab, spec.model.embed_dim, &mut rng)?;
            log::info!(
                "embeddings: {} of {} vocabulary entries found ({:.1}%)",
                m.found,
                m.vocab.len(),
                100.0 * m.coverage()
            );
            m
        }
        None => {
            log::warn!("no embeddings file given; every row is randomly initialised");
            EmbeddingMatrix::random(vocab, spec.model.embed_dim, &mut rng)
        }
    };
    let pick = |split: Split| -> Vec<EncodedExample> {
        tokens
            .iter()
            .filter(|(s, _, _)| *s == split)
            .map(|(_, t, labels)| EncodedExample {
                ids: encode(t, &embeddings.vocab, spec.model.max_len),
                labels: *labels,
            })
            .collect()
    };
    Ok(Prepared {
        train: pick(Split::Train),
        validation: pick(Split::Validation),
        test: pick(Split::Test),
        embeddings,
    })
}

/// One comparison-table row: model name and the five F1 figures.
pub fn table_row_csv(model: &str, m: &TableMetrics) -> String {
    let mut out = format!("model,{}\n{model}", TABLE_COLUMNS.join(","));
    for v in m.values() {
        let _ = write!(out, ",{v:.6}");
    }
    out.push('\n');
    out
}

fn print_report(label: &str, r: &MetricsReport) {
    println!(
        "{label}: f1 harassment {:.4} indirect {:.4} sexual {:.4} physical {:.4} | f1_macro {:.4} | auc_avg {:.4} (n={})",
        r.f1.harassment, r.f1.indirect, r.f1.sexual, r.f1.physical, r.f1_macro, r.auc_avg, r.n_examples
    );
}

pub fn train_cmd(spec: &RunSpec) -> Result<()> {
    spec.validate()?;
    let dataset = load_dataset(spec)?;
    create_dir(&spec.out_dir)?;
    write_file(&spec.out_dir.join("run.cfg"), spec.to_config_string())?;
    let dataset = maybe_augment(spec, dataset)?;
    let data = prepare(spec, &dataset)?;
    let model = Model::build(spec.model.clone(), &data.embeddings)?;
    log::info!("{} with {} parameters", spec.model.variant, model.num_params());
    let outcome = train(model, &data.train, &data.validation, &spec.train)?;
    let mut report = evaluate(&outcome.model, &data.validation, spec.train.threshold)?;
    report.seed = Some(spec.model.seed);
    report.best_epoch = Some(outcome.history.best_epoch);

    let dir = &spec.out_dir;
    model::save(&outcome.model, &dir.join("model.ckpt"))?;
    outcome.model.vocab().save(&dir.join("vocab.txt"))?;
    write_json(&dir.join("history.json"), &outcome.history)?;
    write_json(&dir.join("metrics.json"), &report)?;
    write_file(
        &dir.join("metrics.csv"),
        table_row_csv(spec.model.variant.name(), &TableMetrics::from_report(&report)),
    )?;
    print_report(
        &format!("validation (best epoch {})", outcome.history.best_epoch),
        &report,
    );
    println!(
        "wrote model.ckpt, vocab.txt, history.json, metrics.json, metrics.csv to {}",
        dir.display()
    );
    Ok(())
}

pub fn eval_cmd(spec: &RunSpec, checkpoint: &Path, split: Split) -> Result<()> {
    spec.train.validate()?;
    let model = model::load(checkpoint)?;
    let dataset = load_dataset(spec)?;
    let encoded: Vec<EncodedExample> = dataset
        .split(split)
        .map(|e| EncodedExample {
            ids: model.encode_text(&e.text),
            labels: e.labels,
        })
        .collect();
    if encoded.is_empty() {
        return Err(Error::Input(format!("split '{split}' is empty")));
    }
    let report = evaluate(&model, &encoded, spec.train.threshold)?;
    create_dir(&spec.out_dir)?;
    write_json(&spec.out_dir.join(format!("eval_{split}.json")), &report)?;
    write_file(
        &spec.out_dir.join(format!("eval_{split}.csv")),
        table_row_csv(model.config().variant.name(), &TableMetrics::from_report(&report)),
    )?;
    print_report(split.name(), &report);
    Ok(())
}

/// Scores every row of a CSV with `id` and `text` columns (labels, if any,
/// are ignored).
pub fn predict_cmd(spec: &RunSpec, checkpoint: &Path, input: &Path, output: Option<&Path>) -> Result<()> {
    spec.train.validate()?;
    let model = model::load(checkpoint)?;
    if !input.exists() {
        return Err(Error::MissingPath(input.to_path_buf()));
    }
    let columns = spec.column_map()?;
    let mut rdr = csv::Reader::from_path(input)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let text_col = find(&columns.text).ok_or_else(|| Error::Parse {
        path: input.display().to_string(),
        line: 1,
        message: format!("missing column '{}'", columns.text),
    })?;
    let id_col = find(&columns.id);

    let sink: Box<dyn std::io::Write> = match output {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["id".to_string()];
    header.extend(Category::ALL.iter().map(|c| c.name().to_string()));
    header.extend(Category::ALL.iter().map(|c| format!("pred_{}", c.name())));
    w.write_record(&header)?;
    let mut n = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: input.display().to_string(),
            line: e.position().map_or(i + 2, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let id = id_col
            .and_then(|c| record.get(c))
            .map_or_else(|| (i + 1).to_string(), str::to_string);
        let scores = model.score_text(record.get(text_col).unwrap_or(""))?;
        let labels = decide(&scores, spec.train.threshold);
        let mut row = vec![id];
        row.extend(scores.as_array().iter().map(|s| format!("{s:.6}")));
        row.extend(labels.as_array().iter().map(|&b| if b { "1" } else { "0" }.to_string()));
        w.write_record(&row)?;
        n += 1;
    }
    w.flush()
        .map_err(|e| Error::io(output.unwrap_or(Path::new("<stdout>")), e))?;
    if let Some(p) = output {
        println!("wrote {n} predictions to {}", p.display());
    }
    Ok(())
}

pub fn bench_cmd(spec: &RunSpec, sort: bool) -> Result<PathBuf> {
    spec.validate()?;
    let dataset = load_dataset(spec)?;
    create_dir(&spec.out_dir)?;
    write_file(&spec.out_dir.join("run.cfg"), spec.to_config_string())?;
    let dataset = maybe_augment(spec, dataset)?;
    let data = prepare(spec, &dataset)?;
    let cfg = ProtocolConfig::new(spec.model.clone(), spec.train.clone(), spec.runs);
    let mut table = run_protocol(
        &cfg,
        &ProtocolData {
            embeddings: &data.embeddings,
            train: &data.train,
            validation: &data.validation,
            test: &data.test,
        },
    )?;
    if sort {
        table.sort_by_f1_macro();
    }
    let csv_path = spec.out_dir.join("bench.csv");
    write_file(&csv_path, table.to_csv())?;
    write_file(&spec.out_dir.join("bench_std.csv"), table.to_std_csv())?;
    write_json(&spec.out_dir.join("bench.json"), &table)?;
    print!("{}", table.to_csv());
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabelVector;

    fn ex(split: Split, labels: LabelVector) -> Example {
        Example {
            id: "x".into(),
            text: "t".into(),
            labels,
            split,
            provenance: None,
        }
    }

    #[test]
    fn stats_percentages() {
        let d = Dataset::new(vec![ex(Split::Train, LabelVector::new(true, false, true, false))]);
        let table = stats_table(&d);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[1], "train,1,1,100.00,0.00,100.00,0.00");
        assert_eq!(lines[2], "validation,0,0,0.00,0.00,0.00,0.00");
    }

    #[test]
    fn stats_match_reported_train_split() {
        let harassed = LabelVector::new(true, false, true, false);
        let mut v: Vec<Example> = (0..2713).map(|_| ex(Split::Train, harassed)).collect();
        v.extend((0..6374 - 2713).map(|_| ex(Split::Train, LabelVector::default())));
        let table = stats_table(&Dataset::new(v));
        assert!(table.lines().nth(1).unwrap().starts_with("train,6374,2713,42.56,"));
    }

    #[test]
    fn table_row_has_comparison_columns() {
        let csv = table_row_csv("AvgRNN", &TableMetrics::default());
        assert_eq!(
            csv.lines().next().unwrap(),
            "model,sexual_f1,indirect_f1,physical_f1,harassment_f1,f1_macro"
        );
    }
}
