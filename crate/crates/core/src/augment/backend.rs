use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::{rng_fnv1a, Rng};

/// A machine-translation service.
pub trait TranslationBackend: Send + Sync {
    /// Short identifier recorded in example provenance.
    fn name(&self) -> &str;

    fn supports(&self, src_lang: &str, tgt_lang: &str) -> bool;

    fn translate(&self, text: &str, src_lang: &str, tgt_lang: &str) -> Result<String>;

    /// How many calls may be in flight at once.
    fn max_concurrency(&self) -> usize {
        1
    }
}

impl<T: TranslationBackend + ?Sized> TranslationBackend for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn supports(&self, src_lang: &str, tgt_lang: &str) -> bool {
        (**self).supports(src_lang, tgt_lang)
    }

    fn translate(&self, text: &str, src_lang: &str, tgt_lang: &str) -> Result<String> {
        (**self).translate(text, src_lang, tgt_lang)
    }

    fn max_concurrency(&self) -> usize {
        (**self).max_concurrency()
    }
}

/// Returns its input unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityBackend;

impl TranslationBackend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn supports(&self, _: &str, _: &str) -> bool {
        true
    }

    fn translate(&self, text: &str, _: &str, _: &str) -> Result<String> {
        Ok(text.to_string())
    }
}

/// Offline stand-in for a real service: swaps adjacent words at random.
/// The output is always a permutation of the whitespace-separated input words
/// and depends only on the seed, the text and the language pair.
#[derive(Clone, Debug)]
pub struct ShuffleBackend {
    seed: u64,
    swap_prob: f64,
}

impl ShuffleBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed, swap_prob: 0.3 }
    }

    pub fn with_swap_prob(seed: u64, swap_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&swap_prob) {
            return Err(Error::Config(format!(
                "swap probability must be in [0, 1], got {swap_prob}"
            )));
        }
        Ok(Self { seed, swap_prob })
    }
}

impl TranslationBackend for ShuffleBackend {
    fn name(&self) -> &str {
        "shuffle"
    }

    fn supports(&self, _: &str, _: &str) -> bool {
        true
    }

    fn translate(&self, text: &str, src_lang: &str, tgt_lang: &str) -> Result<String> {
        let key = format!("{src_lang}\u{1f}{tgt_lang}\u{1f}{text}");
        let mut rng = Rng::new(self.seed ^ rng_fnv1a(key.as_bytes()));
        let mut words: Vec<&str> = text.split_whitespace().collect();
        let mut i = 0;
        while i + 1 < words.len() {
            if rng.bernoulli(self.swap_prob) {
                words.swap(i, i + 1);
                i += 2;
            } else {
                i += 1;
            }
        }
        Ok(words.join(" "))
    }
}

/// One cassette entry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub src_lang: String,
    pub tgt_lang: String,
    pub input: String,
    pub output: String,
}

type CassetteKey = (String, String, String);

fn key(text: &str, src: &str, tgt: &str) -> CassetteKey {
    (src.to_string(), tgt.to_string(), text.to_string())
}

/// Wraps another backend and remembers every successful call.
pub struct RecordingBackend<B> {
    inner: B,
    name: String,
    log: Mutex<HashMap<CassetteKey, String>>,
}

impl<B: TranslationBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            name: inner.name().to_string(),
            inner,
            log: Mutex::new(HashMap::new()),
        }
    }

    /// Recorded calls, sorted so the cassette is independent of call order.
    pub fn entries(&self) -> Vec<CassetteEntry> {
        let log = self.log.lock().expect("recording lock poisoned");
        let mut out: Vec<CassetteEntry> = log
            .iter()
            .map(|((src, tgt, input), output)| CassetteEntry {
                src_lang: src.clone(),
                tgt_lang: tgt.clone(),
                input: input.clone(),
                output: output.clone(),
            })
            .collect();
        out.sort();
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.entries())?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

impl<B: TranslationBackend> TranslationBackend for RecordingBackend<B> {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports(&self, src_lang: &str, tgt_lang: &str) -> bool {
        self.inner.supports(src_lang, tgt_lang)
    }

    fn translate(&self, text: &str, src_lang: &str, tgt_lang: &str) -> Result<String> {
        let out = self.inner.translate(text, src_lang, tgt_lang)?;
        self.log
            .lock()
            .expect("recording lock poisoned")
            .insert(key(text, src_lang, tgt_lang), out.clone());
        Ok(out)
    }

    fn max_concurrency(&self) -> usize {
        self.inner.max_concurrency()
    }
}

/// Serves translations from a cassette; unknown inputs are errors.
pub struct ReplayBackend {
    name: String,
    table: HashMap<CassetteKey, String>,
}

impl ReplayBackend {
    /// `name` is reported in provenance, normally the recorded backend's name.
    pub fn new(name: impl Into<String>, entries: Vec<CassetteEntry>) -> Self {
        let table = entries
            .into_iter()
            .map(|e| ((e.src_lang, e.tgt_lang, e.input), e.output))
            .collect();
        Self {
            name: name.into(),
            table,
        }
    }

    pub fn load(name: impl Into<String>, path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<CassetteEntry> = serde_json::from_str(&raw)?;
        Ok(Self::new(name, entries))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl TranslationBackend for ReplayBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports(&self, src_lang: &str, tgt_lang: &str) -> bool {
        self.table.keys().any(|(s, t, _)| s == src_lang && t == tgt_lang)
    }

    fn translate(&self, text: &str, src_lang: &str, tgt_lang: &str) -> Result<String> {
        self.table
            .get(&key(text, src_lang, tgt_lang))
            .cloned()
            .ok_or_else(|| Error::Backend(format!("cassette has no {src_lang}->{tgt_lang} entry for {text:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffle_is_a_deterministic_permutation() {
        let b = ShuffleBackend::new(7);
        let text = "you are such a pathetic little loser go away now";
        let a = b.translate(text, "en", "de").unwrap();
        assert_eq!(a, b.translate(text, "en", "de").unwrap());
        let mut x: Vec<&str> = a.split_whitespace().collect();
        let mut y: Vec<&str> = text.split_whitespace().collect();
        x.sort();
        y.sort();
        assert_eq!(x, y);
    }

    #[test]
    fn shuffle_full_swap_probability_swaps_pairs() {
        let b = ShuffleBackend::with_swap_prob(1, 1.0).unwrap();
        assert_eq!(b.translate("a b c d e", "en", "fr").unwrap(), "b a d c e");
        assert!(ShuffleBackend::with_swap_prob(1, 1.5).is_err());
    }

    #[test]
    fn replay_misses_are_backend_errors() {
        let r = ReplayBackend::new("x", vec![]);
        assert!(matches!(r.translate("hi", "en", "de"), Err(Error::Backend(_))));
        assert!(!r.supports("en", "de"));
    }

    #[test]
    fn recording_then_replay_round_trips_through_disk() {
        let rec = RecordingBackend::new(ShuffleBackend::new(3));
        let first = rec.translate("one two three four", "en", "el").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cassette.json");
        rec.save(&path).unwrap();
        let replay = ReplayBackend::load("shuffle", &path).unwrap();
        assert_eq!(replay.len(), 1);
        assert_eq!(replay.translate("one two three four", "en", "el").unwrap(), first);
    }
}
