//! Chat-completion client for LLM-generated questions.
//!
//! Speaks the OpenAI-compatible wire format: a JSON POST to
//! `{base_url}/chat/completions` with a pinned system prompt and the masked
//! triplet rendering as the user message. The first line of the reply becomes
//! the question. Every failure (transport, non-2xx, empty reply) surfaces with
//! the triplet id; there is no silent fallback.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::augment::{MaskedTriplet, SyntheticQuestion};
use crate::error::{Error, Result};

/// Default instruction prompt sent as the system message.
pub const DEFAULT_SYSTEM_PROMPT: &str = "You are given a knowledge-graph triplet written as \
    'head | relation | tail' with one entity replaced by [MASK]. Write one natural language \
    question whose answer is the masked entity. Reply with the question only.";

/// Environment variable holding the API credential.
pub const API_KEY_ENV: &str = "KGPR_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    /// Endpoint base, e.g. `https://host/v1`; the client appends
    /// `/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub system_prompt: String,
    pub timeout_secs: u64,
    /// When true, a failed request falls back to the deterministic template
    /// instead of erroring. Off by default.
    pub fallback_to_template: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            base_url: String::new(),
            model: String::new(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.into(),
            timeout_secs: 30,
            fallback_to_template: false,
        }
    }
}

pub struct LlmGenerator {
    cfg: LlmConfig,
    agent: ureq::Agent,
}

impl LlmGenerator {
    pub fn new(cfg: LlmConfig) -> Result<Self> {
        if cfg.base_url.is_empty() || cfg.model.is_empty() {
            return Err(Error::InvalidConfig(
                "external-llm generator requires base_url and model".into(),
            ));
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build();
        Ok(LlmGenerator { cfg, agent })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.cfg
    }

    /// Request body for one masked rendering. Kept separate so the wire
    /// format is testable without a server.
    pub fn request_body(&self, masked_rendering: &str) -> serde_json::Value {
        json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": self.cfg.system_prompt},
                {"role": "user", "content": masked_rendering},
            ],
        })
    }

    /// First line of the first choice's message content, trimmed.
    pub fn extract_reply(response: &serde_json::Value) -> std::result::Result<String, String> {
        let content = response
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| "reply has no choices[0].message.content".to_string())?;
        let first_line = content.lines().next().unwrap_or("").trim();
        if first_line.is_empty() {
            return Err("reply content is empty".into());
        }
        Ok(first_line.to_string())
    }

    pub fn generate(&self, masked: &MaskedTriplet) -> Result<SyntheticQuestion> {
        let triplet_id = masked.source.id;
        match self.request(masked) {
            Ok(text) => Ok(SyntheticQuestion {
                text,
                source_triplet_id: triplet_id,
                masked_slot: masked.masked_slot,
                generator: "external-llm".into(),
            }),
            Err(message) if self.cfg.fallback_to_template => {
                let mut q = crate::augment::QuestionGenerator::Template.generate(masked)?;
                let _ = message; // fallback is explicit config, not silence
                q.generator = "template".into();
                Ok(q)
            }
            Err(message) => Err(Error::Generator {
                triplet_id,
                message,
            }),
        }
    }

    fn request(&self, masked: &MaskedTriplet) -> std::result::Result<String, String> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| format!("credential environment variable {API_KEY_ENV} is not set"))?;
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let response = self
            .agent
            .post(&url)
            .set("Authorization", &format!("Bearer {api_key}"))
            .send_json(self.request_body(&masked.render()))
            .map_err(|e| match e {
                ureq::Error::Status(code, _) => format!("endpoint returned status {code}"),
                ureq::Error::Transport(t) => format!("transport failure: {t}"),
            })?;
        let body: serde_json::Value = response
            .into_json()
            .map_err(|e| format!("reply is not JSON: {e}"))?;
        Self::extract_reply(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{mask_triplet, MaskSlot};
    use crate::kg::Triplet;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn masked() -> MaskedTriplet {
        let t = Triplet {
            id: 7,
            head: "Jamaican English".into(),
            relation: "countries_spoken_in".into(),
            tail: "Jamaica".into(),
        };
        mask_triplet(&t, MaskSlot::Tail)
    }

    fn client(base_url: String) -> LlmGenerator {
        LlmGenerator::new(LlmConfig {
            base_url,
            model: "test-model".into(),
            ..LlmConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn request_body_shape() {
        let gen = client("http://example.invalid".into());
        let body = gen.request_body("Jamaican English | countries_spoken_in | [MASK]");
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][0]["content"], DEFAULT_SYSTEM_PROMPT);
        assert_eq!(body["messages"][1]["role"], "user");
        assert_eq!(
            body["messages"][1]["content"],
            "Jamaican English | countries_spoken_in | [MASK]"
        );
    }

    #[test]
    fn extract_reply_takes_first_line_trimmed() {
        let body = serde_json::json!({
            "choices": [{"message": {"content": "  Where is Jamaican English spoken?  \nSecond line"}}]
        });
        assert_eq!(
            LlmGenerator::extract_reply(&body).unwrap(),
            "Where is Jamaican English spoken?"
        );
        let empty = serde_json::json!({"choices": [{"message": {"content": "\n"}}]});
        assert!(LlmGenerator::extract_reply(&empty).is_err());
        let missing = serde_json::json!({"choices": []});
        assert!(LlmGenerator::extract_reply(&missing).is_err());
    }

    /// One-shot HTTP server returning a canned response.
    fn spawn_server(status_line: &'static str, body: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = [0u8; 8192];
            let mut read = 0;
            // Read until the end of the request body (content-length headers
            // from ureq are small; a single read pass is enough here).
            loop {
                let n = stream.read(&mut buf[read..]).unwrap();
                read += n;
                let text = String::from_utf8_lossy(&buf[..read]);
                if let Some(header_end) = text.find("\r\n\r\n") {
                    let content_length = text
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(str::trim).map(String::from))
                        .and_then(|v| v.parse::<usize>().ok())
                        .unwrap_or(0);
                    if read >= header_end + 4 + content_length {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let response = format!(
                "HTTP/1.1 {status_line}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        });
        format!("http://{addr}")
    }

    #[test]
    fn generate_against_mock_server() {
        std::env::set_var(API_KEY_ENV, "test-key");
        let base = spawn_server(
            "200 OK",
            r#"{"choices":[{"message":{"content":"Where is Jamaican English spoken?\n"}}]}"#,
        );
        let q = client(base).generate(&masked()).unwrap();
        assert_eq!(q.text, "Where is Jamaican English spoken?");
        assert_eq!(q.source_triplet_id, 7);
        assert_eq!(q.generator, "external-llm");
    }

    #[test]
    fn server_error_carries_triplet_id() {
        std::env::set_var(API_KEY_ENV, "test-key");
        let base = spawn_server("500 Internal Server Error", "{}");
        match client(base).generate(&masked()).unwrap_err() {
            Error::Generator { triplet_id, message } => {
                assert_eq!(triplet_id, 7);
                assert!(message.contains("500"), "{message}");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn explicit_fallback_uses_template() {
        std::env::set_var(API_KEY_ENV, "test-key");
        let base = spawn_server("503 Service Unavailable", "{}");
        let gen = LlmGenerator::new(LlmConfig {
            base_url: base,
            model: "test-model".into(),
            fallback_to_template: true,
            ..LlmConfig::default()
        })
        .unwrap();
        let q = gen.generate(&masked()).unwrap();
        assert_eq!(q.generator, "template");
        assert_eq!(q.text, "What is the countries spoken in of Jamaican English?");
    }
}
