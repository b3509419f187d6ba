//! Analyses of trained models: linear probes on encoder states for
//! disfluency structure and slot memory, attention aggregated over API
//! calls, prompted API calls mid-dialogue and a taxonomy of response errors.

mod alignment;
mod grid;
mod logistic;
mod slots;
mod states;
mod structure;
mod taxonomy;
mod trigger;

pub use alignment::{
    aggregate_alignment, api_row_labels, attention_alignment, attention_dumps, token_type, AlignmentMatrix, DEFAULT_TAU,
};
pub use grid::LabelledGrid;
pub use logistic::{
    balanced_indices, fit_binary, fit_multiclass, split_dialogues, BinaryClassifier, MulticlassClassifier, ProbeConfig,
};
pub use slots::{probe_slots, slot_records, SlotAccuracy, SlotProbeConfig, SlotProbeRecord, SlotProbeReport};
pub use states::{
    collect_encoder_states, read_states, write_states, StateDataset, StateRecord, StructureKind, STATES_MAGIC,
    STATES_VERSION,
};
pub use structure::{
    eval_diagnostic, structure_report, train_diagnostic, DiagnosticClassifier, PrecisionRecall, StructureReport,
    STRUCTURE_KINDS, STRUCTURE_TARGETS,
};
pub use taxonomy::{canonical_order, classify, error_taxonomy, ErrorKind, TaxonomyReport};
pub use trigger::{fillable_slots, trigger_api_calls, TriggerPrompt, TriggerReport};
