//! HTTP implementations of the generator/scorer client contracts.
//!
//! Generator: POST `{"inputs": [..]}` → `{"outputs": [..], "version": ".."}`.
//! Scorer: POST `{"pairs": [{"source","candidate"}, ..]}` → `{"scores": [..]}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use compgen_core::selftrain::{ClientError, GeneratorClient, GeneratorOutput, ScorerClient};

fn build_client(timeout_secs: u64) -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(timeout_secs))
        .build()
        .expect("reqwest client builds")
}

/// Connection problems and 5xx responses are transport errors (retryable);
/// other failures are protocol errors.
fn post_json<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &Req,
) -> Result<Resp, ClientError> {
    let response = client
        .post(url)
        .json(body)
        .send()
        .map_err(|e| ClientError::Transport(e.to_string()))?;
    let status = response.status();
    if status.is_server_error() {
        return Err(ClientError::Transport(format!("{url}: status {status}")));
    }
    if !status.is_success() {
        return Err(ClientError::Protocol(format!("{url}: status {status}")));
    }
    response
        .json::<Resp>()
        .map_err(|e| ClientError::Protocol(format!("{url}: bad body: {e}")))
}

pub struct HttpGeneratorClient {
    url: String,
    client: reqwest::blocking::Client,
}

impl HttpGeneratorClient {
    pub fn new(url: impl Into<String>, timeout_secs: u64) -> Self {
        HttpGeneratorClient {
            url: url.into(),
            client: build_client(timeout_secs),
        }
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    inputs: &'a [String],
}

impl GeneratorClient for HttpGeneratorClient {
    fn generate(&self, inputs: &[String]) -> Result<GeneratorOutput, ClientError> {
        post_json(&self.client, &self.url, &GenerateRequest { inputs })
    }
}

pub struct HttpScorerClient {
    url: String,
    client: reqwest::blocking::Client,
}

impl HttpScorerClient {
    pub fn new(url: impl Into<String>, timeout_secs: u64) -> Self {
        HttpScorerClient {
            url: url.into(),
            client: build_client(timeout_secs),
        }
    }
}

#[derive(Serialize)]
struct ScorePairBody<'a> {
    source: &'a str,
    candidate: &'a str,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    pairs: Vec<ScorePairBody<'a>>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

impl ScorerClient for HttpScorerClient {
    fn score(&self, pairs: &[(String, String)]) -> Result<Vec<f64>, ClientError> {
        let request = ScoreRequest {
            pairs: pairs
                .iter()
                .map(|(source, candidate)| ScorePairBody { source, candidate })
                .collect(),
        };
        let response: ScoreResponse = post_json(&self.client, &self.url, &request)?;
        Ok(response.scores)
    }
}
