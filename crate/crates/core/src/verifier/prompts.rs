//! Versioned prompt assets and the template filler.

use super::Stance;
use crate::corpus::{Claim, Document};
use crate::demos::Demonstration;
use crate::scalar::Scalar;

pub const PROMPT_VERSION: &str = "v1";

pub const ARGUMENT_SYSTEM: &str = include_str!("../../assets/prompts/argument_system.txt");
pub const ARGUMENT_TEMPLATE: &str = include_str!("../../assets/prompts/argument.txt");
pub const STANCE_SUPPORTING: &str = include_str!("../../assets/prompts/stance_supporting.txt");
pub const STANCE_REFUTING: &str = include_str!("../../assets/prompts/stance_refuting.txt");
pub const SYNTHESIS_SYSTEM: &str = include_str!("../../assets/prompts/synthesis_system.txt");
pub const EXPLANATION_SYSTEM: &str = include_str!("../../assets/prompts/explanation_system.txt");
pub const EXPLANATION_TEMPLATE: &str = include_str!("../../assets/prompts/explanation.txt");

/// Whitespace tokens kept per evidence document.
pub const DOC_TOKEN_LIMIT: usize = 300;

pub const NO_DOCUMENTS: &str = "(no documents retrieved)";

const VERDICT_LEAD: &str =
    "Based on the claim, its supporting and refuting arguments, it is clear that among";

/// Substitutes `{name}` placeholders in one pass; unknown braces are kept.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            values
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, v)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn truncate_tokens(text: &str, limit: usize) -> String {
    text.split_whitespace()
        .take(limit)
        .collect::<Vec<_>>()
        .join(" ")
}

/// `[i] <title>: <text>` per document, each limited to [`DOC_TOKEN_LIMIT`] tokens.
pub fn render_documents(evidence: &[&Document]) -> String {
    if evidence.is_empty() {
        return NO_DOCUMENTS.to_string();
    }
    evidence
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let body = match &d.title {
                Some(t) if !t.trim().is_empty() => format!("{}: {}", t.trim(), d.text),
                _ => d.text.clone(),
            };
            format!("[{}] {}", i + 1, truncate_tokens(&body, DOC_TOKEN_LIMIT))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn stance_instruction(stance: Stance) -> &'static str {
    match stance {
        Stance::Supporting => STANCE_SUPPORTING,
        Stance::Refuting => STANCE_REFUTING,
    }
}

pub fn argument_prompt(claim: &Claim, evidence: &[&Document], stance: Stance) -> String {
    let docs = render_documents(evidence);
    fill(
        ARGUMENT_TEMPLATE,
        &[
            ("stance_instruction", stance_instruction(stance)),
            ("claim", &claim.text),
            ("documents", &docs),
        ],
    )
    .trim_end()
    .to_string()
}

fn example_block(
    claim: &str,
    supporting: &str,
    refuting: &str,
    classes: &str,
    label: Option<&str>,
) -> String {
    let ending = match label {
        Some(l) => format!(" {l}."),
        None => String::new(),
    };
    format!(
        "Claim: {claim}\nSupporting argument: {supporting}\nRefuting argument: {refuting}\n{VERDICT_LEAD} {classes}, the claim should be classified as{ending}"
    )
}

/// Demonstration blocks then the unlabeled target block, separated by blank lines.
pub fn synthesis_prompt<T: Scalar>(
    demos: &[Demonstration<T>],
    supporting: &str,
    refuting: &str,
    claim: &Claim,
    classes: &[String],
) -> Result<String, String> {
    let class_list = classes.join(", ");
    let mut blocks = Vec::with_capacity(demos.len() + 1);
    for d in demos {
        match (&d.supporting_arg, &d.refuting_arg) {
            (Some(s), Some(r)) => blocks.push(example_block(
                &d.claim.text,
                s,
                r,
                &class_list,
                Some(&d.label),
            )),
            _ => return Err(d.claim.claim_id.clone()),
        }
    }
    blocks.push(example_block(
        &claim.text,
        supporting,
        refuting,
        &class_list,
        None,
    ));
    Ok(blocks.join("\n\n"))
}

pub fn explanation_prompt(
    claim: &Claim,
    supporting: &str,
    refuting: &str,
    verdict: &str,
) -> String {
    fill(
        EXPLANATION_TEMPLATE,
        &[
            ("claim", &claim.text),
            ("supporting", supporting),
            ("refuting", refuting),
            ("verdict", verdict),
        ],
    )
    .trim_end()
    .to_string()
}
