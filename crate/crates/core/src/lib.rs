//! Psychometric evaluation and personality induction for text-generation
//! models: inventories, a model gateway, Likert scoring, prompt induction
//! and the vignette rating study.

pub mod gateway;
pub mod induction;
pub mod inventory;
pub mod json;
pub mod scoring;
pub mod vignette;
