//! Non-neural machinery for few-shot compositional data-to-text generation.
//!
//! The crate covers the full offline pipeline around pluggable generator and
//! scorer services:
//!
//! - [`mr_tree`]: parse, validate, serialize, and fingerprint linearized
//!   tree-structured meaning representations (MRs).
//! - [`template_engine`]: a small template DSL that turns an MR into
//!   template-guided text, plain or with structural annotations.
//! - [`metrics`]: tree accuracy, slot error rate, and corpus BLEU-4.
//! - [`splits`]: nested few-shot split construction and seen/unseen
//!   evaluation set derivation.
//! - [`qe_data`]: synthetic rated-pair generation for fine-tuning a
//!   quality estimator.
//! - [`selftrain`]: the threshold-gated self-training loop over external
//!   generator/scorer services, with persisted per-iteration state.
//! - [`corpus`]: JSONL wire formats shared by the CLI and the library.

pub mod corpus;
pub mod fixtures;
mod hashing;
pub mod metrics;
pub mod mr_tree;
pub mod qe_data;
pub mod selftrain;
pub mod splits;
pub mod template_engine;
pub mod text;

pub use mr_tree::{parse_mr, serialize, MrNode, MrTree, NodeKind, StructureSignature};
pub use template_engine::{RenderMode, Template, TemplateRegistry};
