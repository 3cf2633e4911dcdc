//! Desk-scale workbench for lateral-thinking multiple-choice QA.
//!
//! The pipeline: ingest and augment multiple-choice puzzle data
//! ([`dataset`]), train a byte-level BPE tokenizer ([`tokenizer`]), train a
//! compact transformer encoder under either a multiple-choice or a
//! sequence-classification head ([`model`], [`trainer`]), and score
//! predictions with instance- and group-based accuracy over adversarial
//! question groups ([`evaluator`]). The [`cli`] module exposes the whole
//! pipeline as subcommands of the `lateralqa` binary; every
//! artifact-producing command writes a manifest ([`manifest`]) from which it
//! can be replayed bit-for-bit.

pub mod cli;
pub mod dataset;
pub mod evaluator;
pub mod manifest;
pub mod model;
pub mod tokenizer;
pub mod trainer;
