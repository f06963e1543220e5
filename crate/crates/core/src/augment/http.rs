use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::TranslationBackend;
use crate::error::{Error, Result};

/// Environment variable holding the MT service token.
pub const TOKEN_ENV: &str = "HARASSNET_MT_TOKEN";

/// Hard upper bound on concurrent requests.
pub const MAX_CONCURRENT_REQUESTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Header carrying the token, sent as `{auth_scheme} {token}` or just the
    /// token when the scheme is empty.
    pub auth_header: String,
    pub auth_scheme: String,
    pub token_env: String,
    pub timeout_secs: u64,
    pub max_concurrency: usize,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    /// Languages the service accepts; empty means any.
    pub languages: Vec<String>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:5000/translate".into(),
            auth_header: "Authorization".into(),
            auth_scheme: "Bearer".into(),
            token_env: TOKEN_ENV.into(),
            timeout_secs: 30,
            max_concurrency: MAX_CONCURRENT_REQUESTS,
            max_retries: 5,
            backoff_base_ms: 500,
            languages: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
struct Response {
    #[serde(rename = "translatedText")]
    translated_text: String,
}

/// Client for a JSON MT service (`{"q","source","target"}` in,
/// `{"translatedText"}` out).
pub struct HttpBackend {
    cfg: HttpConfig,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    /// Reads the token from `cfg.token_env`; a missing token means requests go
    /// out without the auth header.
    pub fn new(cfg: HttpConfig) -> Result<Self> {
        if cfg.endpoint.is_empty() {
            return Err(Error::Config("MT endpoint is empty".into()));
        }
        if cfg.max_concurrency == 0 || cfg.max_concurrency > MAX_CONCURRENT_REQUESTS {
            return Err(Error::Config(format!(
                "max_concurrency must be in 1..={MAX_CONCURRENT_REQUESTS}, got {}",
                cfg.max_concurrency
            )));
        }
        let token = std::env::var(&cfg.token_env).ok().filter(|t| !t.is_empty());
        if token.is_none() {
            log::warn!("{} is not set; MT requests are unauthenticated", cfg.token_env);
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { cfg, token, agent })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }

    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.cfg.backoff_base_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

impl TranslationBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn supports(&self, src_lang: &str, tgt_lang: &str) -> bool {
        let ok = |l: &str| self.cfg.languages.is_empty() || self.cfg.languages.iter().any(|x| x == l);
        ok(src_lang) && ok(tgt_lang)
    }

    fn translate(&self, text: &str, src_lang: &str, tgt_lang: &str) -> Result<String> {
        let body = Request {
            q: text,
            source: src_lang,
            target: tgt_lang,
        };
        let mut attempt = 0;
        loop {
            let mut req = self.agent.post(&self.cfg.endpoint);
            if let Some(token) = &self.token {
                let value = if self.cfg.auth_scheme.is_empty() {
                    token.clone()
                } else {
                    format!("{} {token}", self.cfg.auth_scheme)
                };
                req = req.header(self.cfg.auth_header.as_str(), value);
            }
            let mut resp = req
                .send_json(&body)
                .map_err(|e| Error::Backend(format!("request to {} failed: {e}", self.cfg.endpoint)))?;
            let status = resp.status().as_u16();
            if status == 429 || (500..600).contains(&status) {
                if attempt >= self.cfg.max_retries {
                    return Err(Error::Backend(format!(
                        "{} answered {status} after {} attempts",
                        self.cfg.endpoint,
                        attempt + 1
                    )));
                }
                let wait = self.backoff(attempt);
                log::debug!("MT service answered {status}; retrying in {wait:?}");
                std::thread::sleep(wait);
                attempt += 1;
                continue;
            }
            if !(200..300).contains(&status) {
                return Err(Error::Backend(format!("{} answered {status}", self.cfg.endpoint)));
            }
            let parsed: Response = resp
                .body_mut()
                .read_json()
                .map_err(|e| Error::Backend(format!("malformed MT response: {e}")))?;
            return Ok(parsed.translated_text);
        }
    }

    fn max_concurrency(&self) -> usize {
        self.cfg.max_concurrency
    }
}
