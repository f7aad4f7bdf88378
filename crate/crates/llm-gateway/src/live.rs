//! Live HTTP backend speaking the common chat-completion wire format:
//! the request carries model id, temperature, and the role/content message
//! list; the response carries the assistant text. Transient transport
//! failures are retried with exponential backoff.

use crate::{ChatSession, Completion, CompletionRequest, Gateway, GatewayError};
use serde::Deserialize;
use std::time::Duration;

const BACKOFF_BASE_MS: u64 = 250;

#[derive(Clone)]
pub struct LiveGateway {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl LiveGateway {
    /// `endpoint` is the chat-completions URL; the credential comes from the
    /// environment, never from flags.
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .expect("client builds");
        LiveGateway {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            client,
        }
    }

    fn attempt(&self, request: &CompletionRequest) -> Result<String, AttemptError> {
        let body = serde_json::json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "messages": request.messages,
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| AttemptError::Retryable(e.to_string()))?;

        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(AttemptError::Auth(format!("HTTP {status}")));
        }
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(AttemptError::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(format!("HTTP {status}")));
        }

        #[derive(Deserialize)]
        struct Body {
            choices: Vec<Choice>,
        }
        #[derive(Deserialize)]
        struct Choice {
            message: Message,
        }
        #[derive(Deserialize)]
        struct Message {
            content: String,
        }
        let body: Body = response
            .json()
            .map_err(|e| AttemptError::Fatal(format!("bad response body: {e}")))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| AttemptError::Fatal("response carried no choices".to_string()))
    }
}

enum AttemptError {
    Retryable(String),
    Auth(String),
    Fatal(String),
}

impl Gateway for LiveGateway {
    fn session(&self, _match_key: &str) -> Box<dyn ChatSession> {
        Box::new(LiveSession {
            gateway: self.clone(),
        })
    }
}

struct LiveSession {
    gateway: LiveGateway,
}

impl ChatSession for LiveSession {
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, GatewayError> {
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            match self.gateway.attempt(request) {
                Ok(text) => return Ok(Completion { text, attempt }),
                Err(AttemptError::Auth(message)) => return Err(GatewayError::Auth(message)),
                Err(AttemptError::Fatal(message)) => {
                    return Err(GatewayError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
                Err(AttemptError::Retryable(message)) => {
                    if attempt > request.max_retries {
                        return Err(GatewayError::Transport {
                            attempts: attempt,
                            message,
                        });
                    }
                    std::thread::sleep(Duration::from_millis(
                        BACKOFF_BASE_MS << (attempt - 1).min(6),
                    ));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{request_digest, ChatMessage};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Minimal one-shot HTTP server: answers each connection with the next
    /// scripted (status, body) pair.
    fn serve(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(value) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        content_length = value.trim().parse().unwrap();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut payload = vec![0u8; content_length];
                reader.read_exact(&mut payload).unwrap();
                let reason = if status == 200 { "OK" } else { "ERR" };
                write!(
                    stream,
                    "HTTP/1.1 {status} {reason}\r\ncontent-length: {}\r\ncontent-type: application/json\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/chat/completions"), handle)
    }

    fn ok_body(text: &str) -> String {
        serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
            .to_string()
    }

    fn request() -> CompletionRequest {
        CompletionRequest::new(
            "test-model",
            vec![ChatMessage::system("s"), ChatMessage::user("q")],
        )
    }

    #[test]
    fn completes_against_a_scripted_endpoint() {
        let (url, handle) = serve(vec![(200, ok_body("Option F"))]);
        let gateway = LiveGateway::new(url, "test-key");
        let req = request();
        let digest_before = request_digest(&req);
        let completion = gateway.session("m").complete(&req).unwrap();
        assert_eq!(completion.text, "Option F");
        assert_eq!(completion.attempt, 1);
        // The backend never alters message content.
        assert_eq!(request_digest(&req), digest_before);
        handle.join().unwrap();
    }

    #[test]
    fn retries_transient_failures_then_succeeds() {
        let (url, handle) = serve(vec![
            (500, "{}".into()),
            (429, "{}".into()),
            (200, ok_body("J")),
        ]);
        let gateway = LiveGateway::new(url, "test-key");
        let completion = gateway.session("m").complete(&request()).unwrap();
        assert_eq!(completion.text, "J");
        assert_eq!(completion.attempt, 3);
        handle.join().unwrap();
    }

    #[test]
    fn exhausted_retries_surface_as_transport_error() {
        let (url, handle) = serve(vec![(500, "{}".into()); 3]);
        let gateway = LiveGateway::new(url, "test-key");
        let mut req = request();
        req.max_retries = 2;
        let err = gateway.session("m").complete(&req).unwrap_err();
        assert!(matches!(err, GatewayError::Transport { attempts: 3, .. }));
        handle.join().unwrap();
    }

    #[test]
    fn credential_rejection_is_not_retried() {
        let (url, handle) = serve(vec![(401, "{}".into())]);
        let gateway = LiveGateway::new(url, "test-key");
        let err = gateway.session("m").complete(&request()).unwrap_err();
        assert!(matches!(err, GatewayError::Auth(_)));
        handle.join().unwrap();
    }
}
