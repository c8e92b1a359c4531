//! Text similarity and `find`: picking an object from a label, a visual
//! description or a location description.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::description::SceneDescription;
use crate::perception::{ObjectInfo, RelationKind, RelationSet};
use crate::thresholds::Thresholds;
use crate::world::ObjectId;

pub const DEFAULT_PROVIDER_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundingError {
    #[error("find needs at least one of label, visual or location")]
    NoArguments,
    #[error("no object matches the description")]
    NotFound,
    #[error("similarity provider failed: {0}")]
    Provider(String),
}

pub trait SimilarityProvider: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, a: &str, b: &str) -> Result<f64, GroundingError>;
}

fn tokens(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn trigrams(toks: &[String]) -> BTreeSet<String> {
    let padded: Vec<char> = format!(" {} ", toks.join(" ")).chars().collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

/// Mean of token-set Jaccard and character-trigram Dice over lowercased,
/// punctuation-stripped text.
pub fn default_similarity(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokens(a), tokens(b));
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let (sa, sb): (BTreeSet<&String>, BTreeSet<&String>) = (ta.iter().collect(), tb.iter().collect());
    let jaccard = sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64;
    let (ga, gb) = (trigrams(&ta), trigrams(&tb));
    let dice = 2.0 * ga.intersection(&gb).count() as f64 / (ga.len() + gb.len()) as f64;
    0.5 * jaccard + 0.5 * dice
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LexicalSimilarity;

impl SimilarityProvider for LexicalSimilarity {
    fn name(&self) -> &str {
        "lexical"
    }

    fn score(&self, a: &str, b: &str) -> Result<f64, GroundingError> {
        Ok(default_similarity(a, b))
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    texts: [&'a str; 2],
}

#[derive(Deserialize)]
struct ScoreResponse {
    score: f64,
}

/// Remote scorer: POST `{"texts":[a,b]}` and read back `{"score":s}`.
pub struct HttpSimilarity {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpSimilarity {
    pub fn new(endpoint: &str, timeout: Duration) -> Result<Self, GroundingError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GroundingError::Provider(e.to_string()))?;
        Ok(Self { endpoint: endpoint.to_string(), client })
    }
}

impl SimilarityProvider for HttpSimilarity {
    fn name(&self) -> &str {
        "http"
    }

    fn score(&self, a: &str, b: &str) -> Result<f64, GroundingError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&ScoreRequest { texts: [a, b] })
            .send()
            .map_err(|e| GroundingError::Provider(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(GroundingError::Provider(format!("status {}", resp.status().as_u16())));
        }
        let body: ScoreResponse = resp.json().map_err(|e| GroundingError::Provider(e.to_string()))?;
        if !(0.0..=1.0).contains(&body.score) {
            return Err(GroundingError::Provider(format!("score {} outside [0, 1]", body.score)));
        }
        Ok(body.score)
    }
}

/// One phrase per relation the object takes part in, seen from the object.
/// `names` maps ids to bare noun phrases ("second bowl"); missing ids
/// are skipped.
pub fn location_phrases(object: ObjectId, rels: &RelationSet, names: &BTreeMap<ObjectId, String>) -> Vec<String> {
    let Some(me) = names.get(&object) else { return vec![] };
    let mut out = vec![];
    for r in rels.involving(object) {
        let (kind, other, forward) = if r.subject == object { (r.kind, r.object, true) } else { (r.kind, r.subject, false) };
        let Some(other_name) = names.get(&other) else { continue };
        let verb = match (kind, forward) {
            (RelationKind::ContainedIn, true) => "is inside",
            (RelationKind::ContainedIn, false) => "contains",
            (RelationKind::Above, true) => "lies over",
            (RelationKind::Above, false) => "lies under",
            (k, f) => {
                let k = if f { k } else { k.mirror().unwrap_or(k) };
                match k {
                    RelationKind::Left => "lies to the left of",
                    RelationKind::Right => "lies to the right of",
                    RelationKind::Front => "lies in front of",
                    _ => "lies behind",
                }
            }
        };
        out.push(format!("{me} that {verb} the {other_name}"));
    }
    out
}

/// What `find` gets asked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FindQuery {
    pub label: Option<String>,
    pub visual: Option<String>,
    pub location: Option<String>,
    pub candidates: Option<Vec<ObjectId>>,
}

impl FindQuery {
    pub fn label(s: &str) -> Self {
        Self { label: Some(s.into()), ..Default::default() }
    }

    pub fn visual(s: &str) -> Self {
        Self { visual: Some(s.into()), ..Default::default() }
    }

    pub fn location(s: &str) -> Self {
        Self { location: Some(s.into()), ..Default::default() }
    }
}

/// Scene state `find` scores against.
pub struct FindContext<'a> {
    pub infos: &'a [ObjectInfo],
    pub relations: &'a RelationSet,
    pub description: &'a SceneDescription,
    pub thresholds: &'a Thresholds,
    pub provider: &'a dyn SimilarityProvider,
}

/// Per-candidate channel scores, kept for logging.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FindScore {
    pub id: ObjectId,
    pub label: Option<f64>,
    pub visual: Option<f64>,
    pub location: Option<f64>,
    /// Max over channels at or above their threshold.
    pub combined: Option<f64>,
}

fn bare(name: &str) -> &str {
    name.strip_prefix("the ").unwrap_or(name)
}

fn best_of(p: &dyn SimilarityProvider, query: &str, texts: &[String]) -> Result<Option<f64>, GroundingError> {
    let mut best: Option<f64> = None;
    for t in texts {
        let s = p.score(query, t)?;
        best = Some(best.map_or(s, |b: f64| b.max(s)));
    }
    Ok(best)
}

pub fn score_candidates(q: &FindQuery, ctx: &FindContext) -> Result<Vec<FindScore>, GroundingError> {
    if q.label.is_none() && q.visual.is_none() && q.location.is_none() {
        return Err(GroundingError::NoArguments);
    }
    let names: BTreeMap<ObjectId, String> = ctx
        .infos
        .iter()
        .map(|i| (i.id, ctx.description.name_of(i.id).map(|n| bare(n).to_string()).unwrap_or_else(|| i.label.clone())))
        .collect();
    let mut out = vec![];
    for info in ctx.infos {
        if let Some(c) = &q.candidates {
            if !c.contains(&info.id) {
                continue;
            }
        }
        let label = match &q.label {
            Some(l) => {
                let mut texts = vec![info.label.clone()];
                if let Some(n) = ctx.description.name_of(info.id) {
                    texts.push(bare(n).to_string());
                }
                best_of(ctx.provider, l, &texts)?
            }
            None => None,
        };
        let visual = match &q.visual {
            Some(v) => Some(best_of(ctx.provider, v, &info.attributes)?.unwrap_or(0.0)),
            None => None,
        };
        let location = match &q.location {
            Some(l) => {
                let phrases = location_phrases(info.id, ctx.relations, &names);
                Some(best_of(ctx.provider, l, &phrases)?.unwrap_or(0.0))
            }
            None => None,
        };
        let t = ctx.thresholds;
        let combined = [(label, t.label), (visual, t.visual_desc), (location, t.place_desc)]
            .into_iter()
            .filter_map(|(s, thr)| s.filter(|s| *s >= thr))
            .reduce(f64::max);
        out.push(FindScore { id: info.id, label, visual, location, combined });
    }
    Ok(out)
}

/// Best candidate whose score passes at least one provided channel's
/// threshold. Ties go to the smaller id.
pub fn find(q: &FindQuery, ctx: &FindContext) -> Result<ObjectId, GroundingError> {
    let scores = score_candidates(q, ctx)?;
    scores
        .iter()
        .filter_map(|s| s.combined.map(|c| (c, s.id)))
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, id)| id)
        .ok_or(GroundingError::NotFound)
}
