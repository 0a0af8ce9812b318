//! Contrastive-argument fact verification.
//!
//! For each claim two independent branches turn the re-ranked evidence into
//! a supporting and a refuting argument. The arguments, together with
//! demonstrations carrying their own cached arguments, fill the synthesis
//! prompt whose final sentence the model completes with a class name. The
//! explanation is a separate generation over the same arguments.

mod parse;
pub mod prompts;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Claim, Document};
use crate::demos::Demonstration;
use crate::provider::{Gateway, ProviderError};
use crate::scalar::Scalar;

pub use parse::{parse_label, ParseStatus};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("MissingArgument: demonstration {0} has no cached arguments")]
    MissingArgument(String),
    #[error("UnknownClass: {0}")]
    UnknownClass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Supporting,
    Refuting,
}

impl Stance {
    /// The exact completion expected when the documents say nothing relevant.
    pub fn absence_sentence(self) -> &'static str {
        match self {
            Stance::Supporting => "No evidence found to support the claim.",
            Stance::Refuting => "No evidence found to refute the claim.",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentPair {
    pub supporting: String,
    pub refuting: String,
    pub evidence_doc_ids: Vec<String>,
}

/// All prompts sent for one claim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub argument_prompts: (String, String),
    pub synthesis_prompt: String,
    pub explanation_prompt: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub claim_id: String,
    pub predicted_label: String,
    pub explanation: String,
    pub arguments: ArgumentPair,
    pub demonstrations_used: Vec<String>,
    pub raw_completion: String,
    pub parse_status: ParseStatus,
}

pub fn generate_argument(
    claim: &Claim,
    evidence: &[&Document],
    stance: Stance,
    gateway: &Gateway,
) -> Result<String, VerifyError> {
    let prompt = prompts::argument_prompt(claim, evidence, stance);
    Ok(gateway.generate_text(prompts::ARGUMENT_SYSTEM, &prompt)?)
}

/// Both stances, generated concurrently.
pub fn generate_arguments(
    claim: &Claim,
    evidence: &[&Document],
    gateway: &Gateway,
) -> Result<ArgumentPair, VerifyError> {
    let (supporting, refuting) = rayon::join(
        || generate_argument(claim, evidence, Stance::Supporting, gateway),
        || generate_argument(claim, evidence, Stance::Refuting, gateway),
    );
    Ok(ArgumentPair {
        supporting: supporting?,
        refuting: refuting?,
        evidence_doc_ids: evidence.iter().map(|d| d.doc_id.clone()).collect(),
    })
}

pub fn build_synthesis_prompt<T: Scalar>(
    demos: &[Demonstration<T>],
    args: &ArgumentPair,
    claim: &Claim,
    classes: &[String],
) -> Result<String, VerifyError> {
    prompts::synthesis_prompt(demos, &args.supporting, &args.refuting, claim, classes)
        .map_err(VerifyError::MissingArgument)
}

/// One synthesis generation, parsed into a class. The explanation is left
/// empty; see [`generate_explanation`].
pub fn predict_verdict<T: Scalar>(
    claim: &Claim,
    demos: &[Demonstration<T>],
    args: &ArgumentPair,
    classes: &[String],
    fallback: &str,
    gateway: &Gateway,
) -> Result<Verdict, VerifyError> {
    if !classes.iter().any(|c| c == fallback) {
        return Err(VerifyError::UnknownClass(fallback.to_string()));
    }
    let prompt = build_synthesis_prompt(demos, args, claim, classes)?;
    let raw = gateway.generate_text(prompts::SYNTHESIS_SYSTEM, &prompt)?;
    let (predicted_label, parse_status) = parse_label(&raw, classes, fallback);
    Ok(Verdict {
        claim_id: claim.claim_id.clone(),
        predicted_label,
        explanation: String::new(),
        arguments: args.clone(),
        demonstrations_used: demos.iter().map(|d| d.claim.claim_id.clone()).collect(),
        raw_completion: raw,
        parse_status,
    })
}

pub fn generate_explanation(
    claim: &Claim,
    args: &ArgumentPair,
    predicted_label: &str,
    gateway: &Gateway,
) -> Result<String, VerifyError> {
    let prompt =
        prompts::explanation_prompt(claim, &args.supporting, &args.refuting, predicted_label);
    Ok(gateway.generate_text(prompts::EXPLANATION_SYSTEM, &prompt)?)
}

/// Every prompt the verifier would send for `claim`, without calling a provider.
pub fn prompt_bundle<T: Scalar>(
    claim: &Claim,
    evidence: &[&Document],
    demos: &[Demonstration<T>],
    args: &ArgumentPair,
    classes: &[String],
    predicted_label: &str,
) -> Result<PromptBundle, VerifyError> {
    Ok(PromptBundle {
        argument_prompts: (
            prompts::argument_prompt(claim, evidence, Stance::Supporting),
            prompts::argument_prompt(claim, evidence, Stance::Refuting),
        ),
        synthesis_prompt: build_synthesis_prompt(demos, args, claim, classes)?,
        explanation_prompt: prompts::explanation_prompt(
            claim,
            &args.supporting,
            &args.refuting,
            predicted_label,
        ),
    })
}
