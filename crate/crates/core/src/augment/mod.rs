//! Back-translation augmentation of the rare harassment types.

mod backend;
mod http;

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use backend::{
    CassetteEntry, IdentityBackend, RecordingBackend, ReplayBackend, ShuffleBackend, TranslationBackend,
};
pub use http::{HttpBackend, HttpConfig, MAX_CONCURRENT_REQUESTS, TOKEN_ENV};

use crate::dataset::{Category, Dataset, Example, Split};
use crate::error::{Error, Result};

/// Language of the corpus.
pub const SOURCE_LANG: &str = "en";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub pivot_langs: Vec<String>,
    pub target_categories: Vec<Category>,
    pub dedup: bool,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        Self {
            pivot_langs: vec!["de".into(), "fr".into(), "el".into()],
            target_categories: vec![Category::Indirect, Category::Physical],
            dedup: true,
        }
    }
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.pivot_langs.is_empty() {
            return Err(Error::Config("augmentation needs at least one pivot language".into()));
        }
        if let Some(p) = self
            .pivot_langs
            .iter()
            .find(|p| p.as_str() == SOURCE_LANG || p.is_empty())
        {
            return Err(Error::Config(format!("invalid pivot language '{p}'")));
        }
        if self.target_categories.contains(&Category::Harassment) {
            return Err(Error::Config(
                "target categories must be harassment types (indirect, sexual, physical)".into(),
            ));
        }
        Ok(())
    }

    fn targets(&self, ex: &Example) -> bool {
        self.target_categories.iter().any(|&c| ex.labels.get(c))
    }
}

/// Translates `text` into `pivot` and back.
pub fn back_translate(text: &str, pivot: &str, backend: &dyn TranslationBackend) -> Result<String> {
    if !backend.supports(SOURCE_LANG, pivot) || !backend.supports(pivot, SOURCE_LANG) {
        return Err(Error::Backend(format!(
            "backend '{}' does not support {SOURCE_LANG}<->{pivot}",
            backend.name()
        )));
    }
    let there = backend.translate(text, SOURCE_LANG, pivot)?;
    backend.translate(&there, pivot, SOURCE_LANG)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub backend: String,
    /// Training examples carrying a targeted category.
    pub targeted: usize,
    pub attempted: usize,
    pub added: usize,
    pub duplicates_dropped: usize,
    pub failed: usize,
    /// Added examples per category name, then per pivot.
    pub per_category: BTreeMap<String, BTreeMap<String, usize>>,
}

impl AugmentReport {
    pub fn count(&self, category: Category, pivot: &str) -> usize {
        self.per_category
            .get(category.name())
            .and_then(|m| m.get(pivot))
            .copied()
            .unwrap_or(0)
    }
}

/// Appends one back-translated copy per pivot for every targeted training
/// example. Validation and test examples are copied through untouched.
/// Failed translations are logged, counted and skipped.
pub fn augment_dataset(
    dataset: &Dataset,
    policy: &AugmentPolicy,
    backend: &dyn TranslationBackend,
) -> Result<(Dataset, AugmentReport)> {
    policy.validate()?;
    let mut sources: Vec<&Example> = dataset.split(Split::Train).filter(|ex| policy.targets(ex)).collect();
    sources.sort_by(|a, b| a.id.cmp(&b.id));
    let jobs: Vec<(&Example, &str)> = sources
        .iter()
        .flat_map(|&ex| policy.pivot_langs.iter().map(move |p| (ex, p.as_str())))
        .collect();

    let results = run_jobs(&jobs, backend);

    let mut report = AugmentReport {
        backend: backend.name().to_string(),
        targeted: sources.len(),
        attempted: jobs.len(),
        ..Default::default()
    };
    let mut seen: HashSet<String> = dataset.examples.iter().map(|e| e.text.clone()).collect();
    let mut out = dataset.examples.clone();
    for ((source, pivot), result) in jobs.iter().zip(results) {
        let text = match result {
            Ok(t) => t,
            Err(e) => {
                let err = Error::Augment {
                    example_id: source.id.clone(),
                    pivot: pivot.to_string(),
                    message: e.to_string(),
                };
                log::warn!("{err}");
                report.failed += 1;
                continue;
            }
        };
        if policy.dedup && !seen.insert(text.clone()) {
            report.duplicates_dropped += 1;
            continue;
        }
        for c in Category::TYPES {
            if source.labels.get(c) && policy.target_categories.contains(&c) {
                *report
                    .per_category
                    .entry(c.name().to_string())
                    .or_default()
                    .entry(pivot.to_string())
                    .or_default() += 1;
            }
        }
        report.added += 1;
        out.push(Example {
            id: format!("{}#bt-{pivot}", source.id),
            text,
            labels: source.labels,
            split: Split::Train,
            provenance: Some(format!("bt:{pivot}:{}:{}", backend.name(), source.id)),
        });
    }
    if report.failed > 0 {
        log::warn!(
            "{} of {} back-translations failed and were skipped",
            report.failed,
            report.attempted
        );
    }
    Ok((Dataset::new(out), report))
}

/// Runs the translations on up to `backend.max_concurrency()` threads and
/// returns results in job order.
fn run_jobs(jobs: &[(&Example, &str)], backend: &dyn TranslationBackend) -> Vec<Result<String>> {
    let workers = backend
        .max_concurrency()
        .clamp(1, MAX_CONCURRENT_REQUESTS)
        .min(jobs.len().max(1));
    if workers == 1 {
        return jobs
            .iter()
            .map(|(ex, p)| back_translate(&ex.text, p, backend))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<String>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((ex, p)) = jobs.get(i) else { break };
                let r = back_translate(&ex.text, p, backend);
                slots.lock().expect("result lock poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result lock poisoned")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}
