use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, SchemaId, TextGenBackend};

pub const API_KEY_VAR: &str = "ARCFORGE_API_KEY";
pub const BASE_URL_VAR: &str = "ARCFORGE_BASE_URL";
pub const MODEL_VAR: &str = "ARCFORGE_MODEL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: String,
    pub timeout_secs: u64,
    pub retries: u32,
    pub temperature: f64,
}

impl RemoteConfig {
    /// Reads key, base URL and model from the environment.
    pub fn from_env(timeout_secs: u64, retries: u32) -> Result<Self, BackendError> {
        let api_key = std::env::var(API_KEY_VAR)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::new("remote", format!("{API_KEY_VAR} is not set")))?;
        Ok(Self {
            base_url: std::env::var(BASE_URL_VAR).unwrap_or_else(|_| DEFAULT_BASE_URL.into()),
            model: std::env::var(MODEL_VAR).unwrap_or_else(|_| DEFAULT_MODEL.into()),
            api_key,
            timeout_secs,
            retries,
            temperature: 0.7,
        })
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 2],
    temperature: f64,
    response_format: ResponseFormat,
}

#[derive(Serialize)]
struct ResponseFormat {
    #[serde(rename = "type")]
    kind: &'static str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

/// Chat-completions client (`POST {base_url}/chat/completions`).
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Self { config, agent }
    }

    fn attempt(&self, system: &str, user: &str) -> Result<String, (bool, String)> {
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let body = ChatRequest {
            model: &self.config.model,
            messages: [
                Message {
                    role: "system",
                    content: system,
                },
                Message {
                    role: "user",
                    content: user,
                },
            ],
            temperature: self.config.temperature,
            response_format: ResponseFormat {
                kind: "json_object",
            },
        };
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .send_json(&body)
            .map_err(|e| {
                let retry = match &e {
                    ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
                    _ => true,
                };
                (retry, e.to_string())
            })?;
        let parsed: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| (false, format!("malformed completion: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or((false, "completion has no content".to_string()))
    }
}

impl TextGenBackend for RemoteBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(
        &self,
        system: &str,
        user: &str,
        _schema: SchemaId,
    ) -> Result<String, BackendError> {
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(200 * u64::from(attempt)));
            }
            match self.attempt(system, user) {
                Ok(text) => return Ok(text),
                Err((retry, msg)) => {
                    last = msg;
                    if !retry {
                        break;
                    }
                }
            }
        }
        Err(BackendError::new("remote", last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serves the given (status, body) responses in order and forwards each
    /// request's headers and body.
    fn serve(responses: Vec<(u16, &'static str)>) -> (String, mpsc::Receiver<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}/v1", listener.local_addr().unwrap());
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut head = String::new();
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    head.push_str(&line);
                }
                let mut req = vec![0; len];
                reader.read_exact(&mut req).unwrap();
                tx.send((head, String::from_utf8(req).unwrap())).unwrap();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (base, rx)
    }

    fn config(base: String, retries: u32) -> RemoteConfig {
        RemoteConfig {
            base_url: base,
            model: "test-model".into(),
            api_key: "k-123".into(),
            timeout_secs: 5,
            retries,
            temperature: 0.7,
        }
    }

    const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"{\"criteria\":\"talk to Mira\"}"}}]}"#;

    #[test]
    fn wire_format() {
        let (base, rx) = serve(vec![(200, OK)]);
        let b = RemoteBackend::new(config(base, 0));
        let out = b.complete("sys", "usr", SchemaId::Criteria).unwrap();
        assert_eq!(out, r#"{"criteria":"talk to Mira"}"#);
        let (head, body) = rx.recv().unwrap();
        assert!(head.starts_with("POST /v1/chat/completions"));
        assert!(head
            .to_ascii_lowercase()
            .contains("authorization: bearer k-123"));
        let v: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["model"], "test-model");
        assert_eq!(v["messages"][0]["role"], "system");
        assert_eq!(v["messages"][1]["content"], "usr");
    }

    #[test]
    fn retries_server_errors() {
        let (base, rx) = serve(vec![(503, "{}"), (200, OK)]);
        let b = RemoteBackend::new(config(base, 1));
        assert!(b.complete("s", "u", SchemaId::Criteria).is_ok());
        assert_eq!(rx.iter().take(2).count(), 2);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (base, _rx) = serve(vec![(401, "{}")]);
        let b = RemoteBackend::new(config(base, 3));
        let e = b.complete("s", "u", SchemaId::Criteria).unwrap_err();
        assert!(e.message.contains("401"), "{e}");
    }
}
