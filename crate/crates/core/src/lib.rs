//! Core pipeline for the metaphor identification workbench.
//!
//! The crate covers everything that does not talk to a network or a disk
//! beyond reading corpus files: corpus ingestion and tokenization, the
//! MIP-derived prompt, parsing annotated model responses, aligning those
//! annotations back onto source tokens, and scoring.

pub mod alignment;
pub mod corpus;
pub mod evaluation;
pub mod normalize;
pub mod parser;
pub mod prompting;

pub use alignment::{
    align, check_map, focus_prediction, project_labels, AlignmentError, AlignmentMap, AlignmentOp,
    JudgmentMapping, LabelProvenance, Prediction, PredictionSource, TokenLabel,
};
pub use corpus::{
    tokenize, Corpus, CorpusError, CorpusFormat, CorpusRecord, FormatRegistry, MetaphorSpan,
    MwlbRecord, Token, TrofiRecord, Usage, ValidationReport,
};
pub use evaluation::{
    aggregate_qualitative, consensus, derive_confusion_from_pr, precision_recall,
    reconstruct_confusion, score_trofi, AggregateReport, BinaryConfusion, ClassMetrics, Conflict,
    ConsensusOutcome, EvalError, FieldError, QualitativeRecord, Ratio, Reconstruction,
};
pub use parser::{
    parse, GRAMMAR_VERSION, render, BasicMeaningJudgment, DiagnosticKind, ParseDiagnostic, ParsedOutput,
    UnitAnnotation, UnitKind,
};
pub use prompting::{
    build_messages, default_template, template_digest, ChatMessage, PromptInstance, PromptTemplate,
    Role,
};
