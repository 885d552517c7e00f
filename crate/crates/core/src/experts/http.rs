//! Adapter for recommenders served over HTTP.
//!
//! Request body:
//! `{"target", "frontiers": [{"id", "centroid": [x, y], "nearby_objects": [[label, count]], "room", "density"}], "map_summary": {"explored_fraction"}}`.
//! Response body: `{"frontier_ids": [int, ...]}`.

use std::collections::BTreeSet;
use std::time::Duration;

use log::warn;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{ExpertQuery, ExpertRecommendation, FrontierExpert};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpFrontier {
    pub id: usize,
    pub centroid: [f64; 2],
    pub nearby_objects: Vec<(String, u32)>,
    pub room: String,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub explored_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpExpertRequest {
    pub target: String,
    pub frontiers: Vec<HttpFrontier>,
    pub map_summary: MapSummary,
}

impl HttpExpertRequest {
    pub fn from_query(q: &ExpertQuery<'_>) -> Self {
        let frontiers = q
            .frontiers
            .iter()
            .zip(q.contexts)
            .map(|(f, c)| HttpFrontier {
                id: f.id,
                centroid: [f.centroid.0, f.centroid.1],
                nearby_objects: c.nearby_objects.clone(),
                room: c.room_label.clone(),
                density: c.local_density,
            })
            .collect();
        Self {
            target: q.target.to_string(),
            frontiers,
            map_summary: MapSummary {
                explored_fraction: q.explored_fraction,
            },
        }
    }
}

#[derive(Deserialize)]
struct HttpExpertResponse {
    frontier_ids: Vec<i64>,
}

/// POSTs `request` and keeps only returned ids present in the request.
/// Any transport error, non-200 status, timeout or malformed body yields an
/// empty recommendation with `failure` set.
pub fn http_expert_recommend(
    client: &reqwest::blocking::Client,
    name: &str,
    endpoint: &str,
    request: &HttpExpertRequest,
    timeout: Duration,
) -> ExpertRecommendation {
    let fail = |reason: String| {
        warn!("expert {name} failed: {reason}");
        ExpertRecommendation::failed(name, reason)
    };
    let resp = match client.post(endpoint).timeout(timeout).json(request).send() {
        Ok(r) => r,
        Err(e) if e.is_timeout() => return fail(format!("timeout after {timeout:?}")),
        Err(e) => return fail(format!("request error: {e}")),
    };
    if resp.status() != reqwest::StatusCode::OK {
        return fail(format!("HTTP status {}", resp.status()));
    }
    let body: HttpExpertResponse = match resp.json() {
        Ok(b) => b,
        Err(e) if e.is_timeout() => return fail(format!("timeout after {timeout:?}")),
        Err(e) => return fail(format!("malformed response: {e}")),
    };

    let candidates: BTreeSet<usize> = request.frontiers.iter().map(|f| f.id).collect();
    let mut kept = BTreeSet::new();
    for id in body.frontier_ids {
        match usize::try_from(id) {
            Ok(id) if candidates.contains(&id) => {
                kept.insert(id);
            }
            _ => warn!("expert {name} returned unknown frontier id {id}; dropped"),
        }
    }
    ExpertRecommendation::new(name, kept)
}

/// A [`FrontierExpert`] backed by an HTTP endpoint.
#[derive(Clone, Debug)]
pub struct HttpExpert {
    name: String,
    endpoint: String,
    timeout: Duration,
    client: reqwest::blocking::Client,
}

impl HttpExpert {
    pub fn new(name: impl Into<String>, endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self {
            name: name.into(),
            endpoint: endpoint.into(),
            timeout,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl FrontierExpert for HttpExpert {
    fn name(&self) -> &str {
        &self.name
    }

    fn recommend(&self, q: &ExpertQuery<'_>, _rng: &mut dyn RngCore) -> ExpertRecommendation {
        let req = HttpExpertRequest::from_query(q);
        http_expert_recommend(&self.client, &self.name, &self.endpoint, &req, self.timeout)
    }
}
