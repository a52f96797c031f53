use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmotionPrediction, EmotionScorer};

#[derive(Serialize)]
struct ScoreRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScoreResponse {
    Bare(Vec<EmotionPrediction>),
    Wrapped { predictions: Vec<EmotionPrediction> },
}

/// Client for an external classifier service.
///
/// Sends `{"text": ...}` as a JSON POST and accepts either a list of
/// `{label, prob}` objects or `{"predictions": [...]}`.
pub struct HttpEmotionScorer {
    url: String,
    agent: ureq::Agent,
}

impl HttpEmotionScorer {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
        }
    }
}

impl EmotionScorer for HttpEmotionScorer {
    fn name(&self) -> &str {
        "http"
    }

    fn score(&self, text: &str) -> Result<Vec<EmotionPrediction>, String> {
        let resp: ScoreResponse = self
            .agent
            .post(&self.url)
            .send_json(&ScoreRequest { text })
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        let preds = match resp {
            ScoreResponse::Bare(p) | ScoreResponse::Wrapped { predictions: p } => p,
        };
        if let Some(bad) = preds.iter().find(|p| !(0.0..=1.0).contains(&p.prob)) {
            return Err(format!(
                "probability {} for `{}` is outside [0, 1]",
                bad.prob, bad.label
            ));
        }
        Ok(preds)
    }
}
