//! Experiment pipelines, example generators and rendering.

pub mod accumulation;
pub mod builtins;
pub mod cli;
pub mod pipelines;
pub mod svg;

pub use accumulation::{generate_accumulation_example, verify_accumulation, AccumulationConfig, AccumulationReport, Annulus};
pub use pipelines::{
    rigidity_check, sibner_pipeline, zero_area_probe, GridSpec, RigidityReport, SibnerOptions, SibnerReport, TestMap,
    ZeroAreaOptions, ZeroAreaReport,
};
pub use svg::{render_svg, write_svg, Scene};
