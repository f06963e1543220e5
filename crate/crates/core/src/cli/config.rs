use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::augment::{AugmentPolicy, HttpConfig};
use crate::corpus::ColumnMap;
use crate::dataset::Category;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::training::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Identity,
    Shuffle,
    Http,
    Replay,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Identity => "identity",
            BackendKind::Shuffle => "shuffle",
            BackendKind::Http => "http",
            BackendKind::Replay => "replay",
        }
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(BackendKind::Identity),
            "shuffle" => Ok(BackendKind::Shuffle),
            "http" => Ok(BackendKind::Http),
            "replay" => Ok(BackendKind::Replay),
            other => Err(Error::Config(format!(
                "unknown backend '{other}' (expected identity, shuffle, http or replay)"
            ))),
        }
    }
}

/// Everything a command needs, resolved from defaults, the config file and
/// command-line overrides, in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub columns: String,
    pub min_freq: usize,
    pub runs: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub augment: bool,
    pub policy: AugmentPolicy,
    pub backend: BackendKind,
    pub cassette: Option<PathBuf>,
    pub http: HttpConfig,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            corpus: None,
            embeddings: None,
            out_dir: PathBuf::from("out"),
            columns: String::new(),
            min_freq: 1,
            runs: 10,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            augment: true,
            policy: AugmentPolicy::default(),
            backend: BackendKind::Shuffle,
            cassette: None,
            http: HttpConfig::default(),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean '{value}' for '{key}'"))),
    }
}

fn path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl RunSpec {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let m = &mut self.model;
        let t = &mut self.train;
        match key.trim() {
            "corpus" => self.corpus = path(value),
            "embeddings" => self.embeddings = path(value),
            "out_dir" => self.out_dir = path(value).unwrap_or_else(|| PathBuf::from(".")),
            "columns" => {
                ColumnMap::from_str(value)?;
                self.columns = value.trim().to_string();
            }
            "min_freq" => self.min_freq = num(key, value)?,
            "runs" => self.runs = num(key, value)?,
            "seed" => {
                m.seed = num(key, value)?;
                t.seed = m.seed;
            }
            "variant" => m.variant = value.parse()?,
            "embed_dim" => m.embed_dim = num(key, value)?,
            "hidden" => m.hidden = num(key, value)?,
            "proj_width" => m.proj_width = num(key, value)?,
            "head_width" => m.head_width = num(key, value)?,
            "head_layers" => m.head_layers = num(key, value)?,
            "attn_hidden" => m.attn_hidden = num(key, value)?,
            "attn_layers" => m.attn_layers = num(key, value)?,
            "dropout" => m.dropout_rate = num(key, value)?,
            "max_len" => m.max_len = num(key, value)?,
            "freeze_embeddings" => m.freeze_embeddings = boolean(key, value)?,
            "lr" => t.lr = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "max_epochs" => t.max_epochs = num(key, value)?,
            "patience" => t.patience = num(key, value)?,
            "threshold" => t.threshold = num(key, value)?,
            "adam_beta1" => t.adam_beta1 = num(key, value)?,
            "adam_beta2" => t.adam_beta2 = num(key, value)?,
            "adam_eps" => t.adam_eps = num(key, value)?,
            "augment" => self.augment = boolean(key, value)?,
            "pivots" => self.policy.pivot_langs = list(value),
            "augment_categories" => {
                self.policy.target_categories = list(value)
                    .iter()
                    .map(|c| Category::from_str(c))
                    .collect::<Result<_>>()?
            }
            "dedup" => self.policy.dedup = boolean(key, value)?,
            "backend" => self.backend = value.parse()?,
            "cassette" => self.cassette = path(value),
            "mt_endpoint" => self.http.endpoint = value.trim().to_string(),
            "mt_auth_header" => self.http.auth_header = value.trim().to_string(),
            "mt_auth_scheme" => self.http.auth_scheme = value.trim().to_string(),
            "mt_token_env" => self.http.token_env = value.trim().to_string(),
            "mt_timeout_secs" => self.http.timeout_secs = num(key, value)?,
            "mt_max_concurrency" => self.http.max_concurrency = num(key, value)?,
            "mt_max_retries" => self.http.max_retries = num(key, value)?,
            "mt_backoff_ms" => self.http.backoff_base_ms = num(key, value)?,
            "mt_languages" => self.http.languages = list(value),
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` file. Blank lines and `#` comments are skipped.
    pub fn apply_str(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key=value, got '{line}'",
                    origin.display(),
                    n + 1
                ))
            })?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", origin.display(), n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        if !path.exists() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text, path)
    }

    pub fn column_map(&self) -> Result<ColumnMap> {
        self.columns.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.min_freq == 0 {
            return Err(Error::Config("min_freq must be at least 1".into()));
        }
        if self.augment {
            self.policy.validate()?;
            if self.backend == BackendKind::Replay && self.cassette.is_none() {
                return Err(Error::Config("the replay backend needs a cassette path".into()));
            }
        }
        for p in [&self.corpus, &self.embeddings, &self.cassette].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::MissingPath(p.clone()));
            }
        }
        Ok(())
    }

    /// The resolved spec in the same `key=value` format [`RunSpec::apply_str`]
    /// reads.
    pub fn to_config_string(&self) -> String {
        let p = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let m = &self.model;
        let t = &self.train;
        let cats: Vec<&str> = self.policy.target_categories.iter().map(|c| c.name()).collect();
        let entries: Vec<(&str, String)> = vec![
            ("corpus", p(&self.corpus)),
            ("embeddings", p(&self.embeddings)),
            ("out_dir", self.out_dir.display().to_string()),
            ("columns", self.columns.clone()),
            ("min_freq", self.min_freq.to_string()),
            ("runs", self.runs.to_string()),
            ("seed", m.seed.to_string()),
            ("variant", m.variant.to_string()),
            ("embed_dim", m.embed_dim.to_string()),
            ("hidden", m.hidden.to_string()),
            ("proj_width", m.proj_width.to_string()),
            ("head_width", m.head_width.to_string()),
            ("head_layers", m.head_layers.to_string()),
            ("attn_hidden", m.attn_hidden.to_string()),
            ("attn_layers", m.attn_layers.to_string()),
            ("dropout", m.dropout_rate.to_string()),
            ("max_len", m.max_len.to_string()),
            ("freeze_embeddings", m.freeze_embeddings.to_string()),
            ("lr", t.lr.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("max_epochs", t.max_epochs.to_string()),
            ("patience", t.patience.to_string()),
            ("threshold", t.threshold.to_string()),
            ("adam_beta1", t.adam_beta1.to_string()),
            ("adam_beta2", t.adam_beta2.to_string()),
            ("adam_eps", t.adam_eps.to_string()),
            ("augment", self.augment.to_string()),
            ("pivots", self.policy.pivot_langs.join(",")),
            ("augment_categories", cats.join(",")),
            ("dedup", self.policy.dedup.to_string()),
            ("backend", self.backend.name().to_string()),
            ("cassette", p(&self.cassette)),
            ("mt_endpoint", self.http.endpoint.clone()),
            ("mt_auth_header", self.http.auth_header.clone()),
            ("mt_auth_scheme", self.http.auth_scheme.clone()),
            ("mt_token_env", self.http.token_env.clone()),
            ("mt_timeout_secs", self.http.timeout_secs.to_string()),
            ("mt_max_concurrency", self.http.max_concurrency.to_string()),
            ("mt_max_retries", self.http.max_retries.to_string()),
            ("mt_backoff_ms", self.http.backoff_base_ms.to_string()),
            ("mt_languages", self.http.languages.join(",")),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VariantId;

    #[test]
    fn file_then_overrides() {
        let mut spec = RunSpec::default();
        spec.apply_str(
            "# comment\nvariant = AvgRNN\nseed=7\n\nmax_epochs=3\npivots=de, el\n",
            Path::new("x.cfg"),
        )
        .unwrap();
        spec.set("seed", "9").unwrap();
        assert_eq!(spec.model.variant, VariantId::AvgRNN);
        assert_eq!((spec.model.seed, spec.train.seed), (9, 9));
        assert_eq!(spec.train.max_epochs, 3);
        assert_eq!(spec.policy.pivot_langs, ["de", "el"]);
    }

    #[test]
    fn errors_name_the_line() {
        let mut spec = RunSpec::default();
        let err = spec.apply_str("seed=1\nlr=fast\n", Path::new("a.cfg")).unwrap_err();
        assert!(err.to_string().contains("a.cfg:2"), "{err}");
        assert!(spec.apply_str("nonsense", Path::new("a.cfg")).is_err());
        assert!(matches!(spec.set("colour", "red"), Err(Error::Config(_))));
    }

    #[test]
    fn dump_round_trips() {
        let mut spec = RunSpec::default();
        spec.set("variant", "LastStateRNN").unwrap();
        spec.set("augment_categories", "sexual,physical").unwrap();
        spec.set("mt_languages", "en,de").unwrap();
        spec.set("dropout", "0.35").unwrap();
        let mut back = RunSpec::default();
        back.apply_str(&spec.to_config_string(), Path::new("dump")).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn validate_checks_paths() {
        let spec = RunSpec {
            embeddings: Some("/no/such/vectors.txt".into()),
            ..Default::default()
        };
        assert!(matches!(spec.validate(), Err(Error::MissingPath(_))));
    }
}
