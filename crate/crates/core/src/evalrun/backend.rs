use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// JSON field names of the completion protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WireFields {
    pub prompt: String,
    pub max_tokens: String,
    pub temperature: String,
    pub stop: String,
    /// Response field holding the completion; dots descend into objects.
    pub text: String,
}

impl Default for WireFields {
    fn default() -> Self {
        WireFields {
            prompt: "prompt".into(),
            max_tokens: "max_tokens".into(),
            temperature: "temperature".into(),
            stop: "stop".into(),
            text: "text".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Attempts after the first one for retryable failures.
    pub retries: u32,
    pub backoff_ms: u64,
    pub fields: WireFields,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint: String::new(),
            timeout_ms: 30_000,
            retries: 2,
            backoff_ms: 200,
            fields: WireFields::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletionParams {
    pub max_tokens: usize,
    pub temperature: f64,
    pub stop: Vec<String>,
    /// Cut the completion where it would leave the scope it starts in.
    pub scope_truncate: bool,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            max_tokens: 256,
            temperature: 0.0,
            stop: Vec::new(),
            scope_truncate: false,
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .finish()
    }
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self> {
        if config.endpoint.trim().is_empty() {
            return Err(Error::Config("http backend needs an endpoint URL".into()));
        }
        if config.timeout_ms == 0 {
            return Err(Error::Config(
                "http backend needs a non-zero timeout".into(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| Error::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(HttpBackend { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn request_body(&self, prompt: &str, params: &CompletionParams) -> Value {
        let f = &self.config.fields;
        let mut body = Map::new();
        body.insert(f.prompt.clone(), prompt.into());
        body.insert(f.max_tokens.clone(), params.max_tokens.into());
        body.insert(f.temperature.clone(), params.temperature.into());
        body.insert(f.stop.clone(), params.stop.clone().into());
        Value::Object(body)
    }

    fn attempt(&self, body: &Value) -> Result<String> {
        let transport = |e: reqwest::Error| Error::Backend {
            retryable: e.is_timeout() || e.is_connect() || e.is_request(),
            message: e.to_string(),
        };
        let response = self
            .client
            .post(&self.config.endpoint)
            .json(body)
            .send()
            .map_err(transport)?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::Backend {
                retryable: status.is_server_error() || status.as_u16() == 429,
                message: format!("endpoint answered {status}"),
            });
        }
        let value: Value = response.json().map_err(|e| Error::Backend {
            retryable: false,
            message: format!("malformed response: {e}"),
        })?;
        extract_text(&value, &self.config.fields.text)
    }

    pub fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String> {
        let body = self.request_body(prompt, params);
        let mut tries = 0;
        loop {
            match self.attempt(&body) {
                Err(e) if e.is_retryable() && tries < self.config.retries => {
                    tries += 1;
                    thread::sleep(Duration::from_millis(
                        self.config.backoff_ms << (tries - 1).min(6),
                    ));
                }
                other => return other,
            }
        }
    }
}

fn extract_text(value: &Value, field: &str) -> Result<String> {
    let mut cur = value;
    for part in field.split('.') {
        cur = match (cur, part.parse::<usize>()) {
            (Value::Array(items), Ok(i)) => items.get(i),
            (Value::Object(map), _) => map.get(part),
            _ => None,
        }
        .ok_or_else(|| Error::Backend {
            retryable: false,
            message: format!("response has no `{field}` field"),
        })?;
    }
    cur.as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::Backend {
            retryable: false,
            message: format!("response field `{field}` is not a string"),
        })
}

/// Stored completions keyed by example id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayStore(pub BTreeMap<String, String>);

impl ReplayStore {
    /// JSONL lines carrying `id` and `completion`. Lines without a string
    /// completion (for instance failed records) are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut map = BTreeMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(&line)?;
            let id = v.get("id").and_then(Value::as_str).ok_or_else(|| {
                Error::Invalid(format!(
                    "{}:{}: replay line has no id",
                    path.display(),
                    n + 1
                ))
            })?;
            if let Some(text) = v.get("completion").and_then(Value::as_str) {
                map.insert(id.to_string(), text.to_string());
            }
        }
        Ok(ReplayStore(map))
    }
}

#[derive(Debug)]
pub enum CompletionBackend {
    Http(HttpBackend),
    Replay(ReplayStore),
    OracleEcho,
    OracleTruncate(usize),
    OracleEmpty,
}

impl CompletionBackend {
    pub fn name(&self) -> String {
        match self {
            CompletionBackend::Http(_) => "http".into(),
            CompletionBackend::Replay(_) => "replay".into(),
            CompletionBackend::OracleEcho => "echo".into(),
            CompletionBackend::OracleTruncate(n) => format!("truncate:{n}"),
            CompletionBackend::OracleEmpty => "empty".into(),
        }
    }

    /// Raw backend answer before post-processing.
    pub fn raw(
        &self,
        id: &str,
        middle: &str,
        prompt: &str,
        params: &CompletionParams,
    ) -> Result<String> {
        match self {
            CompletionBackend::Http(http) => http.complete(prompt, params),
            CompletionBackend::Replay(store) => store
                .0
                .get(id)
                .cloned()
                .ok_or_else(|| Error::ReplayMiss(id.into())),
            CompletionBackend::OracleEcho => Ok(middle.to_string()),
            CompletionBackend::OracleTruncate(n) => {
                Ok(middle.split_inclusive('\n').take(*n).collect())
            }
            CompletionBackend::OracleEmpty => Ok(String::new()),
        }
    }
}

/// Backend kinds as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Http,
    Replay,
    Echo,
    Truncate(usize),
    Empty,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "http" => BackendKind::Http,
            "replay" => BackendKind::Replay,
            "echo" => BackendKind::Echo,
            "empty" => BackendKind::Empty,
            other => match other.strip_prefix("truncate:").map(str::parse) {
                Some(Ok(n)) => BackendKind::Truncate(n),
                _ => {
                    return Err(Error::Invalid(format!(
                    "unknown backend `{other}` (expected http, replay, echo, truncate:N or empty)"
                )))
                }
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Serves canned HTTP responses in order, one per connection, and
    /// returns the request bodies it saw.
    fn stub(
        responses: Vec<(u16, String)>,
    ) -> (String, thread::JoinHandle<Vec<String>>, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/complete", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                bodies.push(read_request(&mut stream));
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
            bodies
        });
        (url, handle, hits)
    }

    fn read_request(stream: &mut std::net::TcpStream) -> String {
        let mut buf = Vec::new();
        let mut chunk = [0u8; 1024];
        loop {
            let n = stream.read(&mut chunk).unwrap();
            buf.extend_from_slice(&chunk[..n]);
            let text = String::from_utf8_lossy(&buf);
            if let Some(head_end) = text.find("\r\n\r\n") {
                let len = text[..head_end]
                    .lines()
                    .find_map(|l| {
                        l.to_ascii_lowercase()
                            .strip_prefix("content-length:")
                            .map(|v| v.trim().parse::<usize>().unwrap())
                    })
                    .unwrap_or(0);
                if buf.len() >= head_end + 4 + len {
                    return text[head_end + 4..head_end + 4 + len].to_string();
                }
            }
            if n == 0 {
                return String::new();
            }
        }
    }

    fn backend(url: String, fields: WireFields) -> HttpBackend {
        HttpBackend::new(HttpConfig {
            endpoint: url,
            timeout_ms: 5_000,
            retries: 2,
            backoff_ms: 1,
            fields,
        })
        .unwrap()
    }

    #[test]
    fn http_round_trip_with_custom_fields() {
        let (url, handle, _) = stub(vec![(200, r#"{"choices":[{"content":"x + 1"}]}"#.into())]);
        let fields = WireFields {
            prompt: "input".into(),
            text: "choices.0.content".into(),
            ..Default::default()
        };
        let params = CompletionParams {
            stop: vec!["\n\n".into()],
            ..Default::default()
        };
        let got = backend(url, fields).complete("P", &params).unwrap();
        assert_eq!(got, "x + 1");
        let bodies = handle.join().unwrap();
        let sent: Value = serde_json::from_str(&bodies[0]).unwrap();
        assert_eq!(sent["input"], "P");
        assert_eq!(sent["max_tokens"], 256);
        assert_eq!(sent["temperature"], 0.0);
        assert_eq!(sent["stop"][0], "\n\n");
    }

    #[test]
    fn http_retries_server_errors() {
        let (url, handle, hits) = stub(vec![(503, "{}".into()), (200, r#"{"text":"ok"}"#.into())]);
        let got = backend(url, WireFields::default())
            .complete("P", &CompletionParams::default())
            .unwrap();
        assert_eq!(got, "ok");
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn http_gives_up_after_retries() {
        let (url, handle, hits) = stub(vec![
            (500, "{}".into()),
            (500, "{}".into()),
            (500, "{}".into()),
        ]);
        let err = backend(url, WireFields::default())
            .complete("P", &CompletionParams::default())
            .unwrap_err();
        assert!(err.is_retryable());
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn http_client_errors_are_final() {
        let (url, handle, hits) = stub(vec![(400, "{}".into())]);
        let err = backend(url, WireFields::default())
            .complete("P", &CompletionParams::default())
            .unwrap_err();
        assert!(!err.is_retryable());
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn http_connection_refused_is_retryable() {
        let addr = TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap();
        let http = HttpBackend::new(HttpConfig {
            endpoint: format!("http://{addr}/"),
            retries: 0,
            ..Default::default()
        })
        .unwrap();
        assert!(http
            .complete("P", &CompletionParams::default())
            .unwrap_err()
            .is_retryable());
        assert!(HttpBackend::new(HttpConfig::default()).is_err());
    }

    #[test]
    fn oracles_and_replay() {
        let p = CompletionParams::default();
        let middle = "a\nb\nc";
        assert_eq!(
            CompletionBackend::OracleEcho
                .raw("i", middle, "", &p)
                .unwrap(),
            middle
        );
        assert_eq!(
            CompletionBackend::OracleTruncate(1)
                .raw("i", middle, "", &p)
                .unwrap(),
            "a\n"
        );
        assert_eq!(
            CompletionBackend::OracleEmpty
                .raw("i", middle, "", &p)
                .unwrap(),
            ""
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("replay.jsonl");
        std::fs::write(&path, "{\"id\":\"i\",\"completion\":\"stored\\n text\"}\n{\"id\":\"j\",\"completion\":null}\n").unwrap();
        let replay = CompletionBackend::Replay(ReplayStore::load(&path).unwrap());
        assert_eq!(replay.raw("i", middle, "", &p).unwrap(), "stored\n text");
        assert!(matches!(
            replay.raw("j", middle, "", &p),
            Err(Error::ReplayMiss(_))
        ));
    }

    #[test]
    fn backend_kinds_parse() {
        assert_eq!(
            "truncate:3".parse::<BackendKind>().unwrap(),
            BackendKind::Truncate(3)
        );
        assert_eq!("echo".parse::<BackendKind>().unwrap(), BackendKind::Echo);
        assert!("truncate:x".parse::<BackendKind>().is_err());
        assert!("grpc".parse::<BackendKind>().is_err());
    }
}
