//! Generated humor-QA ingestion and the iterative generation loop against a
//! completion service.
//!
//! The wire format is a JSON array of `{"joke", "options", "answer"}`
//! records with options prefixed `"A. "`..`"D. "`. Generation sends one of
//! three fixed prompts, parses the response as that array, and keeps only
//! instances that are novel with respect to what has been accumulated so
//! far.

use super::dedup::{dedup_key, DedupPolicy};
use super::instance::{GroupKey, QAInstance, Source, Subtask, Variant};
use super::{short_hash, DatasetError};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs;
use std::path::Path;

const OPTION_PREFIXES: [&str; 4] = ["A. ", "B. ", "C. ", "D. "];
const ANSWER_LETTERS: [&str; 4] = ["A", "B", "C", "D"];

/// One joke record in the generated-humor wire format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumorRecord {
    pub joke: String,
    pub options: Vec<String>,
    pub answer: String,
}

impl HumorRecord {
    fn to_instance(&self, record: usize) -> Result<QAInstance, DatasetError> {
        if self.options.len() != 4 {
            return Err(DatasetError::Parse {
                record: Some(record),
                message: format!("expected 4 options, found {}", self.options.len()),
            });
        }
        let mut choices = Vec::with_capacity(4);
        for (option, prefix) in self.options.iter().zip(OPTION_PREFIXES) {
            let stripped = option.strip_prefix(prefix).ok_or_else(|| DatasetError::Parse {
                record: Some(record),
                message: format!("option {option:?} lacks the {prefix:?} prefix"),
            })?;
            choices.push(stripped.to_string());
        }
        let gold_index = ANSWER_LETTERS
            .iter()
            .position(|l| *l == self.answer)
            .ok_or_else(|| DatasetError::Parse {
                record: Some(record),
                message: format!("answer {:?} is not one of A..D", self.answer),
            })?;
        let id = format!("humor-{}", short_hash(&self.joke));
        let inst = QAInstance {
            id: id.clone(),
            question: self.joke.clone(),
            choices,
            gold_index,
            group: GroupKey(id),
            variant: Variant::Ungrouped,
            subtask: Subtask::External,
            source: Source::Humor,
        };
        inst.validate()?;
        Ok(inst)
    }
}

fn records_to_instances(records: &[HumorRecord]) -> Result<Vec<QAInstance>, DatasetError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| r.to_instance(i))
        .collect()
}

/// Load a humor JSON array file into canonical instances.
pub fn load_humor(path: &Path) -> Result<Vec<QAInstance>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let records: Vec<HumorRecord> =
        serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
            record: None,
            message: e.to_string(),
        })?;
    records_to_instances(&records)
}

/// Which of the three fixed generation prompts to send.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum PromptId {
    P1,
    P2,
    P3,
}

impl PromptId {
    /// The exact prompt text sent to the completion service.
    pub fn text(self) -> &'static str {
        match self {
            PromptId::P1 => {
                "Could you create a dataset for me that includes humor-styled questions, \
                 each with multiple choices and an answer? The dataset should be in JSON format."
            }
            PromptId::P2 => {
                "Could you create a dataset of 40 jokes for me in JSON format? \
                 Each joke should include four options and the correct answer."
            }
            PromptId::P3 => {
                "Could you generate an additional 20 jokes with multiple choices and an answer? \
                 Please ensure there are no duplicates and that none of them are the same as \
                 those previously generated."
            }
        }
    }
}

/// A completion service: give it a prompt, get back a response body.
/// Implementations need not be reentrant; callers serialize access.
pub trait CompletionClient {
    fn complete(&self, prompt: &str) -> Result<String, DatasetError>;
}

/// HTTP transport: POSTs `{"prompt": ...}` to the endpoint, optionally with
/// a bearer token, and returns the response body.
pub struct HttpCompletionClient {
    endpoint: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpCompletionClient {
    pub fn new(endpoint: String, token: Option<String>) -> Self {
        HttpCompletionClient {
            endpoint,
            token,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, prompt: &str) -> Result<String, DatasetError> {
        let mut request = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "prompt": prompt }));
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| DatasetError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(DatasetError::Transport(format!(
                "endpoint returned status {status}"
            )));
        }
        response
            .text()
            .map_err(|e| DatasetError::Transport(e.to_string()))
    }
}

/// File-backed mock transport: returns the file's contents as the response
/// body regardless of the prompt.
pub struct FileMockClient {
    body: String,
}

impl FileMockClient {
    pub fn from_path(path: &Path) -> Result<Self, DatasetError> {
        let body = fs::read_to_string(path).map_err(|e| DatasetError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(FileMockClient { body })
    }

    pub fn from_body(body: impl Into<String>) -> Self {
        FileMockClient { body: body.into() }
    }
}

impl CompletionClient for FileMockClient {
    fn complete(&self, _prompt: &str) -> Result<String, DatasetError> {
        Ok(self.body.clone())
    }
}

/// Parse a completion response as a humor array. The body may be the array
/// itself or an object wrapping exactly one array field.
pub fn parse_humor_response(body: &str) -> Result<Vec<HumorRecord>, DatasetError> {
    let format_err = |message: String| DatasetError::Format {
        message,
        body: body.to_string(),
    };
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| format_err(format!("not JSON: {e}")))?;
    let array = match &value {
        serde_json::Value::Array(_) => value,
        serde_json::Value::Object(map) => {
            let mut arrays: Vec<&serde_json::Value> =
                map.values().filter(|v| v.is_array()).collect();
            match (arrays.len(), arrays.pop()) {
                (1, Some(inner)) => inner.clone(),
                _ => {
                    return Err(format_err(
                        "object response does not contain exactly one array field".to_string(),
                    ))
                }
            }
        }
        _ => return Err(format_err("response is neither an array nor an object".to_string())),
    };
    serde_json::from_value(array).map_err(|e| format_err(format!("bad humor record: {e}")))
}

/// Run one round of the generation loop: send the prompt, parse the
/// response, and return only the instances that are novel with respect to
/// `accumulated` (and to each other) under the default dedup policy.
/// `accumulated` is never mutated.
pub fn generate_humor_batch(
    client: &dyn CompletionClient,
    prompt: PromptId,
    accumulated: &[QAInstance],
) -> Result<Vec<QAInstance>, DatasetError> {
    let body = client.complete(prompt.text())?;
    let records = parse_humor_response(&body)?;
    let instances = records_to_instances(&records)?;
    let policy = DedupPolicy::default();
    let mut seen: HashSet<String> = accumulated
        .iter()
        .map(|inst| dedup_key(inst, policy))
        .collect();
    Ok(instances
        .into_iter()
        .filter(|inst| seen.insert(dedup_key(inst, policy)))
        .collect())
}
