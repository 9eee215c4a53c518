use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::AnnotateError;
use crate::parse::{parse_confidence, parse_label};
use crate::provider::{ChatProvider, RequestSettings};
use crate::template::PromptTemplate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotateOptions {
    pub request: RequestSettings,
    /// Extra attempts per stage when a reply does not parse.
    pub parse_retries: u32,
}

impl AnnotateOptions {
    pub fn new(request: RequestSettings) -> Self {
        Self { request, parse_retries: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationResult {
    pub id: String,
    pub letter: char,
    pub label: String,
    /// Numeric annotation for the chosen option.
    pub value: f64,
    pub confidence: f64,
    /// The confidence needed clamping or percentage conversion.
    pub confidence_anomaly: bool,
    pub stage1_replies: Vec<String>,
    pub stage2_replies: Vec<String>,
}

/// An instance that could not be annotated, kept for review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFailure {
    pub id: String,
    pub error: AnnotateError,
    pub stage1_replies: Vec<String>,
    pub stage2_replies: Vec<String>,
}

pub type AnnotationOutcome = Result<AnnotationResult, AnnotationFailure>;

/// Runs both prompting stages for one text.
pub fn annotate_instance(
    id: &str,
    text: &str,
    template: &PromptTemplate,
    provider: &dyn ChatProvider,
    options: &AnnotateOptions,
) -> AnnotationOutcome {
    let mut stage1_replies = Vec::new();
    let mut stage2_replies = Vec::new();
    let fail = |error: AnnotateError, s1: Vec<String>, s2: Vec<String>| AnnotationFailure {
        id: id.to_string(),
        error,
        stage1_replies: s1,
        stage2_replies: s2,
    };

    let stage1 = options.request.request(template.stage1_prompt(text));
    let mut chosen = None;
    for _ in 0..=options.parse_retries {
        let reply = match provider.complete(&stage1) {
            Ok(r) => r,
            Err(e) => return Err(fail(e.into(), stage1_replies, stage2_replies)),
        };
        chosen = parse_label(&reply, template);
        stage1_replies.push(reply);
        if chosen.is_some() {
            break;
        }
    }
    let Some(k) = chosen else {
        let reply = stage1_replies.last().cloned().unwrap_or_default();
        return Err(fail(AnnotateError::UnparseableLabel { reply }, stage1_replies, stage2_replies));
    };
    let option = &template.options[k];

    let stage2 = options.request.request(template.stage2_prompt(text, option));
    let mut parsed = None;
    for _ in 0..=options.parse_retries {
        let reply = match provider.complete(&stage2) {
            Ok(r) => r,
            Err(e) => return Err(fail(e.into(), stage1_replies, stage2_replies)),
        };
        parsed = parse_confidence(&reply);
        stage2_replies.push(reply);
        if parsed.is_some() {
            break;
        }
    }
    let Some(conf) = parsed else {
        let reply = stage2_replies.last().cloned().unwrap_or_default();
        return Err(fail(AnnotateError::UnparseableConfidence { reply }, stage1_replies, stage2_replies));
    };

    Ok(AnnotationResult {
        id: id.to_string(),
        letter: option.letter,
        label: option.label.clone(),
        value: option.value,
        confidence: conf.value,
        confidence_anomaly: conf.anomaly,
        stage1_replies,
        stage2_replies,
    })
}

/// Annotates `(id, text)` items with at most `concurrency_limit` requests in
/// flight. Output order matches input order.
pub fn annotate_corpus(
    items: &[(String, String)],
    template: &PromptTemplate,
    provider: &dyn ChatProvider,
    options: &AnnotateOptions,
    concurrency_limit: usize,
) -> Vec<AnnotationOutcome> {
    let workers = concurrency_limit.max(1).min(items.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<AnnotationOutcome>>> = Mutex::new(vec![None; items.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some((id, text)) = items.get(k) else { break };
                let outcome = annotate_instance(id, text, template, provider, options);
                slots.lock().expect("result lock")[k] = Some(outcome);
            });
        }
    });
    slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|o| o.expect("every item annotated"))
        .collect()
}
