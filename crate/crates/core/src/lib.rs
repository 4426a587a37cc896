//! Retrieval-augmented multi-task information extraction for dietary-supplement
//! clinical text.
//!
//! The pipeline blends four task corpora (NER, RE, TE, UC) into one training
//! set, retrieves a task-matched in-context example per input, renders
//! instruction prompts, sends them to a chat-completion endpoint, parses the
//! generations back into structured values and scores them with exact-match
//! micro precision/recall/F1.

pub mod config;
pub mod dataset;
pub mod embedding;
pub mod evaluation;
pub mod fixtures;
pub mod generation;
pub mod model;
pub mod par;
pub mod parsing;
pub mod pipeline;
pub mod prompting;
pub mod retrieval;
