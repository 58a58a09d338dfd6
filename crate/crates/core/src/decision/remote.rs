use std::fmt::Write as _;

use super::{check_arity, DecisionError, DecisionResult, HeuristicPolicy, Policy};
use crate::llm_client::{parse_decision_reply, render_decision_prompt, LlmClient, PromptInputs, PromptMode, RequestTemplate, SectorText};
use crate::perception::{GlobalSummary, LocalDescription};

/// Language-model policy. Unreadable replies are retried once, then the
/// heuristic policy decides with the same memory access.
pub struct RemotePolicy {
    client: LlmClient,
    template: RequestTemplate,
    mode: PromptMode,
    target: String,
    fallback: HeuristicPolicy,
    fallbacks: u32,
}

impl RemotePolicy {
    pub fn new(client: LlmClient, template: RequestTemplate, mode: PromptMode, target: impl Into<String>, fallback: HeuristicPolicy) -> Self {
        Self {
            client,
            template,
            mode,
            target: target.into(),
            fallback,
            fallbacks: 0,
        }
    }

    pub fn fallbacks(&self) -> u32 {
        self.fallbacks
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }

    pub fn into_client(self) -> LlmClient {
        self.client
    }

    fn ask(
        &mut self,
        locals: &[Option<LocalDescription>],
        summary: &GlobalSummary,
        memory: Option<&[GlobalSummary]>,
    ) -> Result<DecisionResult, DecisionError> {
        check_arity(locals)?;
        let mut present: Vec<&LocalDescription> = locals.iter().flatten().collect();
        present.sort_by_key(|ld| ld.sector);
        let sectors: Vec<SectorText> = present
            .iter()
            .map(|ld| SectorText {
                sector: ld.sector,
                description: ld.text.clone(),
                observation: observation(ld),
            })
            .collect();
        let allowed: Vec<u8> = present.iter().map(|ld| ld.sector).collect();
        let history: Option<Vec<String>> = memory.map(|m| m.iter().map(|g| g.text.clone()).collect());
        let inputs = PromptInputs {
            target: &self.target,
            sectors: &sectors,
            summary: &summary.text,
            history: history.as_deref(),
        };
        let req = render_decision_prompt(&inputs, self.mode, &self.template);
        for _ in 0..2 {
            let reply = self.client.complete(&req)?;
            if let Some(d) = parse_decision_reply(&reply, &allowed) {
                return Ok(DecisionResult {
                    sector: d.sector,
                    found: d.found,
                    rationale: d.reason,
                });
            }
        }
        self.fallbacks += 1;
        log::warn!("unreadable decision reply twice; falling back to heuristic policy");
        let mut d = match memory {
            Some(m) => self.fallback.decide_with_memory(locals, summary, m)?,
            None => self.fallback.decide_without_memory(locals, summary)?,
        };
        d.rationale = format!("fallback: {}", d.rationale);
        Ok(d)
    }
}

/// Uninterpreted listing of one sector's entities.
fn observation(ld: &LocalDescription) -> String {
    if ld.entities.is_empty() {
        return "nothing detected".into();
    }
    let mut s = String::new();
    for (i, e) in ld.entities.iter().enumerate() {
        let _ = write!(s, "{}{} at {:.1} m", if i == 0 { "" } else { ", " }, e.category, e.range);
    }
    s
}

impl Policy for RemotePolicy {
    fn decide_without_memory(&mut self, locals: &[Option<LocalDescription>], summary: &GlobalSummary) -> Result<DecisionResult, DecisionError> {
        self.ask(locals, summary, None)
    }

    fn decide_with_memory(
        &mut self,
        locals: &[Option<LocalDescription>],
        summary: &GlobalSummary,
        memory: &[GlobalSummary],
    ) -> Result<DecisionResult, DecisionError> {
        if memory.is_empty() {
            return Err(DecisionError::EmptyMemory);
        }
        self.ask(locals, summary, Some(memory))
    }
}
