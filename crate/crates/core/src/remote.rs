//! Blocking client for a remote NMT service.
//!
//! Wire contract: `POST {endpoint}/translate` with
//! `{"text", "source_lang", "target_lang"}`, answered by `200` and
//! `{"translation"}`. Anything else is an error.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::translation::RemoteSpec;

#[derive(Debug, Serialize)]
pub struct TranslateRequest<'a> {
    pub text: &'a str,
    pub source_lang: &'a str,
    pub target_lang: &'a str,
}

#[derive(Debug, Deserialize)]
pub struct TranslateResponse {
    pub translation: String,
}

type CacheKey = (String, String, String);

pub struct RemoteClient {
    spec: RemoteSpec,
    agent: ureq::Agent,
    cache: Mutex<HashMap<CacheKey, String>>,
    /// Requests currently on the wire; bounded by `max_in_flight` across
    /// every caller of this client.
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
    peak_in_flight: AtomicUsize,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient").field("spec", &self.spec).finish()
    }
}

impl RemoteClient {
    pub fn new(spec: RemoteSpec) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(spec.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            spec,
            agent,
            cache: Mutex::new(HashMap::new()),
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
            peak_in_flight: AtomicUsize::new(0),
        }
    }

    pub fn url(&self) -> String {
        format!("{}/translate", self.spec.endpoint.trim_end_matches('/'))
    }

    /// Highest number of concurrent requests observed so far.
    pub fn peak_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }

    fn send_once(&self, body: &TranslateRequest<'_>) -> Result<String> {
        {
            let limit = self.spec.max_in_flight.max(1);
            let mut n = self
                .slot_freed
                .wait_while(self.in_flight.lock().expect("in-flight poisoned"), |n| {
                    *n >= limit
                })
                .expect("in-flight poisoned");
            *n += 1;
            self.peak_in_flight.fetch_max(*n, Ordering::SeqCst);
        }
        let result = (|| {
            let mut resp = self
                .agent
                .post(&self.url())
                .send_json(body)
                .map_err(|e| Error::Translation(format!("transport: {e}")))?;
            let status = resp.status().as_u16();
            if status != 200 {
                return Err(Error::Translation(format!("status {status}")));
            }
            let parsed: TranslateResponse = resp
                .body_mut()
                .read_json()
                .map_err(|e| Error::Translation(format!("malformed response: {e}")))?;
            Ok(parsed.translation)
        })();
        *self.in_flight.lock().expect("in-flight poisoned") -= 1;
        self.slot_freed.notify_one();
        result
    }

    pub fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String> {
        if src == tgt {
            return Err(Error::InvalidInput(format!(
                "remote translation needs distinct languages, got {src:?} twice"
            )));
        }
        let key = (src.to_string(), tgt.to_string(), text.to_string());
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let body = TranslateRequest {
            text,
            source_lang: src,
            target_lang: tgt,
        };
        let mut attempt = 0;
        let translation = loop {
            match self.send_once(&body) {
                Ok(t) => break t,
                Err(e) if attempt < self.spec.max_retries => {
                    warn!("translation attempt {} failed: {e}; retrying", attempt + 1);
                    std::thread::sleep(Duration::from_millis(self.spec.backoff_ms << attempt.min(6)));
                    attempt += 1;
                }
                Err(e) => {
                    return Err(Error::Translation(format!(
                        "{e} (after {} attempts)",
                        attempt + 1
                    )))
                }
            }
        };
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, translation.clone());
        Ok(translation)
    }

    /// Fans requests out over at most `max_in_flight` workers; results are
    /// returned in input order, or the error of the first failing text.
    pub fn translate_many(&self, texts: &[&str], src: &str, tgt: &str) -> Result<Vec<String>> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<String>>>> =
            texts.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.spec.max_in_flight.min(texts.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= texts.len() {
                        break;
                    }
                    let r = self.translate(texts[i], src, tgt);
                    *slots[i].lock().expect("slot poisoned") = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().expect("slot poisoned").expect("every slot filled"))
            .collect()
    }
}
