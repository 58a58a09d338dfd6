use super::{
    parse_spatial_relations, render_global_text, render_observation, summarize_global, DirectionalView, GlobalSummary,
    LocalDescription, OracleParser, ParserBackend, PerceptionError, ScaffoldGrid,
};
use crate::llm_client::{parse_json_reply, ChatRequest, LlmClient, RequestTemplate, Template};
use crate::priors::UNKNOWN_ROOM;

/// Model-backed parser. Entities and relations stay symbolic; room type,
/// likelihood, richness and prose come from the model. Replies that cannot
/// be read after one retry fall back to the oracle values.
pub struct RemoteParser {
    client: LlmClient,
    template: RequestTemplate,
    fallback: OracleParser,
    fallbacks: u32,
}

impl RemoteParser {
    pub fn new(client: LlmClient, template: RequestTemplate, fallback: OracleParser) -> Self {
        Self {
            client,
            template,
            fallback,
            fallbacks: 0,
        }
    }

    pub fn fallbacks(&self) -> u32 {
        self.fallbacks
    }

    pub fn into_client(self) -> LlmClient {
        self.client
    }

    fn ask<T>(&mut self, req: &ChatRequest, read: impl Fn(&serde_json::Value) -> Option<T>) -> Result<Option<T>, PerceptionError> {
        for _ in 0..2 {
            let reply = self.client.complete(req)?;
            if let Some(v) = parse_json_reply(&reply).and_then(|(v, _)| read(&v)) {
                return Ok(Some(v));
            }
        }
        self.fallbacks += 1;
        log::warn!("unreadable parser reply; using oracle values");
        Ok(None)
    }
}

fn room_label(v: &serde_json::Value) -> Option<String> {
    let room = v["room_type"].as_str()?.trim().to_lowercase().replace([' ', '-'], "_");
    Some(if room.is_empty() { UNKNOWN_ROOM.to_string() } else { room })
}

fn unit(v: &serde_json::Value) -> Option<f64> {
    let x = v.as_f64()?;
    x.is_finite().then(|| x.clamp(0.0, 1.0))
}

impl ParserBackend for RemoteParser {
    fn parse_local(
        &mut self,
        view: &DirectionalView,
        scaffold: &ScaffoldGrid,
        target: &str,
    ) -> Result<LocalDescription, PerceptionError> {
        let observation = render_observation(view, scaffold);
        let sector = view.sector.to_string();
        let req = self.template.request(
            Template::ParseLocal,
            &[("target", target), ("sector", &sector), ("observation", &observation)],
        );
        let parsed = self.ask(&req, |v| {
            Some((
                room_label(v)?,
                unit(&v["target_likelihood"])?,
                unit(&v["richness"])?,
                v["description"].as_str().unwrap_or_default().trim().to_string(),
            ))
        })?;
        let Some((room, likelihood, richness, text)) = parsed else {
            return Ok(self.fallback.describe(view, scaffold, target));
        };
        let text = if text.is_empty() { observation } else { text };
        Ok(LocalDescription {
            sector: view.sector,
            entities: view.entities.clone(),
            relations: parse_spatial_relations(view, scaffold),
            room_type_guess: room,
            target_likelihood: likelihood,
            richness,
            text,
        })
    }

    fn summarize(&mut self, timestep: u32, locals: &[Option<LocalDescription>]) -> Result<GlobalSummary, PerceptionError> {
        // Arity check and the union inventory do not depend on the model.
        let base = summarize_global(timestep, locals)?;
        let descriptions: Vec<String> = locals
            .iter()
            .flatten()
            .map(|ld| format!("- Direction {}: {}", ld.sector, ld.text))
            .collect();
        let req = self.template.request(Template::Summarize, &[("descriptions", &descriptions.join("\n"))]);
        let parsed = self.ask(&req, |v| Some((room_label(v)?, v["summary"].as_str().unwrap_or_default().trim().to_string())))?;
        let Some((room_type, summary)) = parsed else {
            return Ok(base);
        };
        let text = if summary.is_empty() {
            render_global_text(&room_type, &base.inventory)
        } else {
            summary
        };
        Ok(GlobalSummary {
            timestep,
            room_type,
            inventory: base.inventory,
            text,
        })
    }
}
