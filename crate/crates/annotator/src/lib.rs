//! Verbalized-confidence annotation: a stage-1 prompt asks the model for a
//! lettered answer, a stage-2 prompt asks how likely that answer is, and the
//! pair becomes an `(llm_annotation, confidence)` row.
//!
//! Providers sit behind [`ChatProvider`]. [`HttpProvider`] talks to a live
//! OpenAI-style endpoint, [`TranscriptProvider`] replays a recorded JSONL
//! transcript, and [`RecordingProvider`] writes one.

mod annotate;
mod error;
mod http;
mod parse;
mod provider;
mod template;
mod transcript;

pub use annotate::{annotate_corpus, annotate_instance, AnnotateOptions, AnnotationFailure, AnnotationOutcome, AnnotationResult};
pub use error::{AnnotateError, ProviderError, TemplateError, TranscriptError};
pub use http::{HttpProvider, ProviderConfig};
pub use parse::{parse_confidence, parse_label, ParsedConfidence, CLAMP_TOLERANCE};
pub use provider::{ChatProvider, ChatRequest, Message, RequestSettings};
pub use template::{AnswerOption, PromptTemplate, Task, ANSWER_SLOT, PROBABILITY_REQUEST, TEXT_SLOT};
pub use transcript::{read_transcript, write_transcript, RecordingProvider, TranscriptEntry, TranscriptProvider};
