use serde::{Deserialize, Serialize};

use super::{ChatMessage, ChatRequest, Role};

pub const TEMPLATE_VERSION: &str = "v1";

const DECISION_DECOUPLED: &str = include_str!("../../prompts/decision_decoupled.v1.txt");
const DECISION_ONE_STEP: &str = include_str!("../../prompts/decision_one_step.v1.txt");
const PARSE_LOCAL: &str = include_str!("../../prompts/parse_local.v1.txt");
const SUMMARIZE: &str = include_str!("../../prompts/summarize.v1.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    /// Parsed descriptions and a summary feed the decision prompt.
    Decoupled,
    /// Raw observations go straight to the decision prompt.
    OneStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    DecisionDecoupled,
    DecisionOneStep,
    ParseLocal,
    Summarize,
}

impl Template {
    fn source(self) -> &'static str {
        match self {
            Self::DecisionDecoupled => DECISION_DECOUPLED,
            Self::DecisionOneStep => DECISION_ONE_STEP,
            Self::ParseLocal => PARSE_LOCAL,
            Self::Summarize => SUMMARIZE,
        }
    }

    /// (system, user) sections.
    fn sections(self) -> (&'static str, &'static str) {
        let src = self.source();
        let rest = src.strip_prefix("[system]\n").expect("template starts with [system]");
        let (system, user) = rest.split_once("\n[user]\n").expect("template has a [user] section");
        (system.trim_end(), user)
    }
}

/// Fills `{{key}}` placeholders.
pub fn render_template(text: &str, vars: &[(&str, &str)]) -> String {
    let mut out = text.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

/// Transport-level request fields shared by every prompt of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestTemplate {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
}

impl RequestTemplate {
    pub fn request(&self, template: Template, vars: &[(&str, &str)]) -> ChatRequest {
        let (system, user) = template.sections();
        ChatRequest {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            messages: vec![
                ChatMessage::new(Role::System, render_template(system, vars)),
                ChatMessage::new(Role::User, render_template(user, vars)),
            ],
            temperature: self.temperature,
            timeout_secs: self.timeout_secs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorText {
    pub sector: u8,
    /// Parsed local description.
    pub description: String,
    /// Unparsed observation listing.
    pub observation: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptInputs<'a> {
    pub target: &'a str,
    /// Present sectors only, ascending.
    pub sectors: &'a [SectorText],
    pub summary: &'a str,
    /// Queue summaries oldest first; `None` when memory is withheld.
    pub history: Option<&'a [String]>,
}

fn history_section(history: Option<&[String]>) -> String {
    match history {
        None => String::new(),
        Some(items) => {
            let mut s = String::from("\nExploration history (oldest first):\n");
            for (i, item) in items.iter().enumerate() {
                s.push_str(&format!("{}. {item}\n", i + 1));
            }
            s
        }
    }
}

pub fn render_decision_prompt(inputs: &PromptInputs<'_>, mode: PromptMode, base: &RequestTemplate) -> ChatRequest {
    let sectors: Vec<String> = inputs.sectors.iter().map(|s| s.sector.to_string()).collect();
    let sectors = sectors.join(", ");
    let history = history_section(inputs.history);
    match mode {
        PromptMode::Decoupled => {
            let descriptions: Vec<String> = inputs
                .sectors
                .iter()
                .map(|s| format!("- Direction {}: {}", s.sector, s.description))
                .collect();
            base.request(
                Template::DecisionDecoupled,
                &[
                    ("target", inputs.target),
                    ("descriptions", &descriptions.join("\n")),
                    ("summary", inputs.summary),
                    ("history", &history),
                    ("sectors", &sectors),
                ],
            )
        }
        PromptMode::OneStep => {
            let observations: Vec<String> = inputs
                .sectors
                .iter()
                .map(|s| format!("- Direction {}: {}", s.sector, s.observation))
                .collect();
            base.request(
                Template::DecisionOneStep,
                &[
                    ("target", inputs.target),
                    ("observations", &observations.join("\n")),
                    ("history", &history),
                    ("sectors", &sectors),
                ],
            )
        }
    }
}
