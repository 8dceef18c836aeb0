//! Prompt behavior classification against the 17-code codebook.
//!
//! The default backend is a priority-ordered regex table, one rule per code.
//! An LLM-backed classifier can be plugged in behind the same trait.

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CODEBOOK_VERSION: &str = "behavior-codebook-v1";
pub const OTHER_CODE: &str = "other";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Plan,
    Code,
    Explain,
    Eval,
    Setup,
    Converse,
    Other,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BehaviorCode {
    pub code: &'static str,
    pub category: Category,
    pub description: &'static str,
}

const fn code(code: &'static str, category: Category, description: &'static str) -> BehaviorCode {
    BehaviorCode {
        code,
        category,
        description,
    }
}

pub const CODEBOOK: [BehaviorCode; 17] = [
    code(
        "ai_suggest_steps_or_plan",
        Category::Plan,
        "Step-by-step workflow or plan",
    ),
    code(
        "ai_breakdown_intent",
        Category::Plan,
        "Decompose complex goal",
    ),
    code("ai_improve_prompt", Category::Plan, "Refine prompt wording"),
    code(
        "ai_choose_approach",
        Category::Plan,
        "Choose library, technology, or design",
    ),
    code(
        "ai_generate_code",
        Category::Code,
        "Produce code for a requested action",
    ),
    code(
        "ai_edit_partial_code",
        Category::Code,
        "Edit a specific snippet or function",
    ),
    code(
        "ai_write_documentation",
        Category::Code,
        "Write or edit docs, comments, READMEs, text",
    ),
    code(
        "ai_explain_bug_or_error",
        Category::Explain,
        "Explain error or traceback and outline fix",
    ),
    code(
        "ai_explain_code_or_api",
        Category::Explain,
        "Interpret specific code or explain a function/API",
    ),
    code("ai_explain_concepts", Category::Explain, "Explain concepts"),
    code(
        "ai_understand_codebase",
        Category::Explain,
        "Navigate, locate files, understand structure",
    ),
    code(
        "ai_critique_output",
        Category::Eval,
        "Evaluate correctness, suggest improvements",
    ),
    code(
        "ai_setup_environment",
        Category::Setup,
        "Configure env, install deps, build tools",
    ),
    code(
        "ai_git_operations",
        Category::Setup,
        "Git commands, branching, merging",
    ),
    code(
        "ai_run_or_deploy",
        Category::Setup,
        "Run tests, start servers, deploy",
    ),
    code(
        "ai_acknowledge",
        Category::Converse,
        "Acknowledge, confirm, greet; non-task input",
    ),
    code(
        "ai_provide_context",
        Category::Converse,
        "Share logs, terminal output, or context",
    ),
];

/// Category of a codebook code, or `None` for codes outside the codebook.
pub fn category_of(code: &str) -> Option<Category> {
    if code == OTHER_CODE {
        return Some(Category::Other);
    }
    CODEBOOK.iter().find(|c| c.code == code).map(|c| c.category)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorLabel {
    pub code: String,
    pub category: Category,
    pub matched_rule_id: String,
}

impl BehaviorLabel {
    pub fn other(rule: impl Into<String>) -> Self {
        BehaviorLabel {
            code: OTHER_CODE.to_string(),
            category: Category::Other,
            matched_rule_id: rule.into(),
        }
    }
}

pub trait ClassifierBackend: Send + Sync {
    fn name(&self) -> &str;
    fn classify(&self, prompt_text: &str) -> Result<BehaviorLabel>;
}

/// Classify a non-trivial prompt with the given backend.
pub fn classify_behavior(
    prompt_text: &str,
    backend: &dyn ClassifierBackend,
) -> Result<BehaviorLabel> {
    backend.classify(prompt_text)
}

// Order matters: the first matching rule wins.
const RULES: [(&str, &str, &str); 17] = [
    (
        "error-keywords",
        "ai_explain_bug_or_error",
        r"\w*error\b|\bexceptions?\b|\btraceback\b|\bstack ?trace\b|\bcrash(es|ed|ing)?\b|\bfail(s|ed|ing)?\b|\bbug\b|\bdoesn'?t work\b|\bnot working\b|\bbroken\b|\bundefined\b",
    ),
    (
        "shared-context",
        "ai_provide_context",
        r"\bhere (is|are)\b|\bhere's\b|\bthis is what\b|\bfor context\b|\bfyi\b|\bfor (your )?reference\b|\b(terminal|console|log) output\b",
    ),
    (
        "git-vocabulary",
        "ai_git_operations",
        r"\bgit\b|\bcommits?\b|\bbranch(es)?\b|\bmerge\b|\brebase\b|\bpull request\b|\bpush\b|\bstash\b|\bcherry-pick\b",
    ),
    (
        "environment-setup",
        "ai_setup_environment",
        r"\binstall(ing|ed)?\b|\bdependenc(y|ies)\b|\bpip\b|\bnpm\b|\bvenv\b|\bvirtualenv\b|\bconda\b|\benvironment\b|\benv var|\bconfigure\b|\bdocker\b|\bset ?up\b|\brequirements\.txt\b|\btoolchain\b",
    ),
    (
        "run-or-deploy",
        "ai_run_or_deploy",
        r"\brun (the |my |all )?(tests?|test suite|server|app|script|migrations?|project)\b|\bdeploy\w*\b|\bstart (the |a )?(dev )?(server|app)\b|\blaunch (the )?(app|server)\b|\bhow (do|can) i run\b",
    ),
    (
        "documentation",
        "ai_write_documentation",
        r"\breadme\b|\bdocstrings?\b|\bdocumentation\b|\bdocument (this|the)\b|\bcomments?\b|\bdocs\b|\bchangelog\b",
    ),
    (
        "prompt-wording",
        "ai_improve_prompt",
        r"\b(improve|refine|rephrase|reword|rewrite) (this |my |the )?prompt\b|\bbetter prompt\b|\bprompt wording\b",
    ),
    (
        "decompose-goal",
        "ai_breakdown_intent",
        r"\bbreak (this|it|that)( \w+)? down\b|\bbreak down\b|\bdecompose\b|\bsub-?tasks\b|\bsmaller (tasks|pieces|parts)\b|\bsub-?problems\b",
    ),
    (
        "plan-request",
        "ai_suggest_steps_or_plan",
        r"\bplan\b|\bstep[- ]by[- ]step\b|\bsteps\b|\broadmap\b|\bworkflow\b|\bhow should i (start|approach|proceed)\b|\bwhat should i do (first|next)\b",
    ),
    (
        "choose-option",
        "ai_choose_approach",
        r"\bwhich (library|framework|approach|database|tool|package|one)\b|\bshould i use\b|\bbetter to use\b|\bpros and cons\b|\bvs\.?(\s|$)|\bversus\b|\btrade-?offs?\b|\bchoose between\b",
    ),
    (
        "critique",
        "ai_critique_output",
        r"\breview\b|\bcritique\b|\bis (this|it|my|this \w+|my \w+) (correct|right|good|ok|okay)\b|\bdoes (this|it) look (right|good|correct)\b|\b(any|suggest) improvements\b|\bwhat could be improved\b|\bcheck (my|this)\b",
    ),
    (
        "navigate-codebase",
        "ai_understand_codebase",
        r"\bwhere (is|are|does|do)\b|\bwhich files?\b|\blocate\b|\bfind the (file|function|class|definition)\b|\bcodebase\b|\bproject structure\b|\bstructure of\b|\bfolders?\b",
    ),
    (
        "interpret-code",
        "ai_explain_code_or_api",
        r"\bwhat does (this|the|that)\b.*\bdo\b|\bexplain (this|the|that) (code|function|method|class|api|snippet|line|endpoint|query)\b|\bhow does (this|the|that) (code|function|method|api|class)\b|\bwhat is the purpose of\b|\bwhat (is|are) the (parameters|arguments|return)",
    ),
    (
        "concept-question",
        "ai_explain_concepts",
        r"\bwhat (is|are)\b|\bwhat's\b|\bexplain\b|\bwhy (do|does|is|are)\b|\bdifference between\b|\bhow do(es)? \w+ work\b|\bconcept\b|\bmeaning of\b",
    ),
    (
        "targeted-edit",
        "ai_edit_partial_code",
        r"\b(modify|change|update|edit|refactor|rename|tweak|adjust|replace|fix) (this|the|that|my)\b",
    ),
    (
        "generate-request",
        "ai_generate_code",
        r"\b(implement|write|create|add|generate|build|make)\b",
    ),
    (
        "acknowledgement",
        "ai_acknowledge",
        r"\bthanks?\b|\bthank you\b|\bgot it\b|\bgreat\b|\bperfect\b|\bawesome\b|\bsounds good\b|\bhello\b|\bhi\b|\bhey\b|\bok(ay)?\b|\bappreciate\b",
    ),
];

struct Rule {
    id: String,
    code: &'static str,
    category: Category,
    pattern: Regex,
}

/// Deterministic keyword classifier; no match yields `other`.
pub struct RuleBackend {
    rules: Vec<Rule>,
}

impl Default for RuleBackend {
    fn default() -> Self {
        let rules = RULES
            .iter()
            .enumerate()
            .map(|(i, (id, code, pattern))| Rule {
                id: format!("R{:02}-{id}", i + 1),
                code,
                category: category_of(code).expect("rule codes come from the codebook"),
                pattern: Regex::new(&format!("(?i){pattern}")).expect("rule patterns compile"),
            })
            .collect();
        RuleBackend { rules }
    }
}

impl RuleBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn label(&self, prompt_text: &str) -> BehaviorLabel {
        self.rules
            .iter()
            .find(|r| r.pattern.is_match(prompt_text))
            .map(|r| BehaviorLabel {
                code: r.code.to_string(),
                category: r.category,
                matched_rule_id: r.id.clone(),
            })
            .unwrap_or_else(|| BehaviorLabel::other("no-rule"))
    }
}

impl ClassifierBackend for RuleBackend {
    fn name(&self) -> &str {
        "rules"
    }

    fn classify(&self, prompt_text: &str) -> Result<BehaviorLabel> {
        Ok(self.label(prompt_text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub prompt_text: String,
    pub codebook_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub code: String,
}

/// Carries one classification request to a model and returns its answer.
pub trait LlmTransport: Send + Sync {
    fn send(&self, request: &LlmRequest) -> Result<LlmResponse>;
}

/// Classifier delegating to a language model; answers outside the codebook
/// become `other`.
pub struct LlmBackend<T> {
    transport: T,
}

impl<T: LlmTransport> LlmBackend<T> {
    pub fn new(transport: T) -> Self {
        LlmBackend { transport }
    }
}

impl<T: LlmTransport> ClassifierBackend for LlmBackend<T> {
    fn name(&self) -> &str {
        "llm"
    }

    fn classify(&self, prompt_text: &str) -> Result<BehaviorLabel> {
        let response = self.transport.send(&LlmRequest {
            prompt_text: prompt_text.to_string(),
            codebook_version: CODEBOOK_VERSION.to_string(),
        })?;
        let code = response.code.trim();
        Ok(match category_of(code) {
            Some(category) => BehaviorLabel {
                code: code.to_string(),
                category,
                matched_rule_id: "llm".to_string(),
            },
            None => BehaviorLabel::other("llm-invalid-code"),
        })
    }
}

/// JSON-over-HTTP transport. The API key is read from an environment
/// variable at construction time.
#[cfg(feature = "llm-http")]
pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
}

#[cfg(feature = "llm-http")]
impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, api_key_env: Option<&str>) -> Result<Self> {
        let api_key =
            match api_key_env {
                Some(var) => Some(std::env::var(var).map_err(|_| {
                    Error::Backend(format!("environment variable {var} is not set"))
                })?),
                None => None,
            };
        Ok(HttpTransport {
            endpoint: endpoint.into(),
            api_key,
        })
    }
}

#[cfg(feature = "llm-http")]
impl LlmTransport for HttpTransport {
    fn send(&self, request: &LlmRequest) -> Result<LlmResponse> {
        let mut call = ureq::post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(request)
            .map_err(|e| Error::Backend(format!("{}: {e}", self.endpoint)))?;
        response
            .body_mut()
            .read_json::<LlmResponse>()
            .map_err(|e| Error::Backend(format!("{}: bad response: {e}", self.endpoint)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorDistribution {
    /// Share of each category among labels that are not `Other`.
    pub fractions: BTreeMap<Category, f64>,
    pub other_count: usize,
    pub total: usize,
    pub code_counts: BTreeMap<String, usize>,
}

pub fn behavior_distribution(labels: &[BehaviorLabel]) -> Result<BehaviorDistribution> {
    if labels.is_empty() {
        return Err(Error::Consistency(
            "behavior distribution of zero labels".into(),
        ));
    }
    let mut counts: BTreeMap<Category, usize> = BTreeMap::new();
    let mut code_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut other_count = 0;
    for label in labels {
        *code_counts.entry(label.code.clone()).or_default() += 1;
        if label.category == Category::Other {
            other_count += 1;
        } else {
            *counts.entry(label.category).or_default() += 1;
        }
    }
    let classified = (labels.len() - other_count) as f64;
    let fractions = counts
        .into_iter()
        .map(|(cat, n)| (cat, n as f64 / classified))
        .collect();
    Ok(BehaviorDistribution {
        fractions,
        other_count,
        total: labels.len(),
        code_counts,
    })
}
