//! Model documents and command reports.

mod document;
mod report;

pub use document::{
    canonicalize, model_to_document, overlay_document, parse_document, parse_graph, parse_model,
    serialize_model, to_json, ActionDoc, ActionKindDoc, AlternativeDoc, CompatibilityDoc,
    ComponentDoc, EdgeDoc, GraphDocument, ModelDocument, NodeDoc, OverlayDoc, ScaleDoc,
};
pub use report::{digest_inputs, Cell, Record, Report, Status};
