//! Local HTTP server that serves a snapshot over the adapter wire shape.
//!
//! Used to exercise [`super::fetch_snapshot`] without a live platform. It can
//! inject two faults: a number of transient `503` responses, and a page whose
//! body is cut off mid-document on every request.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Serialize;
use serde_json::Value;
use tiny_http::{Header, Response, Server};

use super::fixture::IdentityLink;
use super::Page;
use crate::model::VenueSnapshot;

/// Cut the body of one page in half, every time it is requested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatePage {
    /// Collection name, e.g. `reviews`.
    pub collection: String,
    /// Zero-based page index.
    pub page: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MockOptions {
    pub token: String,
    pub truncate: Option<TruncatePage>,
    /// Respond `503` to this many requests before serving normally.
    pub transient_failures: usize,
}

pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    handle: Option<JoinHandle<()>>,
    requests: Arc<AtomicUsize>,
}

struct Data {
    cycles: Vec<Value>,
    per_cycle: BTreeMap<(String, &'static str), Vec<Value>>,
    identity: Vec<Value>,
}

fn values<T: Serialize>(items: impl IntoIterator<Item = T>) -> Vec<Value> {
    items.into_iter().map(|i| serde_json::to_value(i).expect("record serializes")).collect()
}

impl Data {
    fn new(s: &VenueSnapshot) -> Self {
        let s = s.clone().normalized();
        let mut per_cycle = BTreeMap::new();
        for c in &s.cycles {
            let id = c.id.clone();
            let subs: Vec<_> = s.submissions.iter().filter(|x| x.cycle_id == id).collect();
            let decisions = s.author_decisions.iter().filter(|d| subs.iter().any(|x| x.id == d.submission_id));
            per_cycle.insert((id.clone(), "author_decisions"), values(decisions));
            per_cycle.insert((id.clone(), "submissions"), values(subs));
            per_cycle.insert((id.clone(), "reviews"), values(s.reviews.iter().filter(|r| r.cycle_id == id)));
            per_cycle.insert(
                (id.clone(), "reviewer_consents"),
                values(s.reviewer_consents.iter().filter(|r| r.cycle_id == id)),
            );
        }
        Data {
            cycles: values(&s.cycles),
            per_cycle,
            identity: values(
                s.identity_map.iter().map(|(k, v)| IdentityLink { reviewer_id: k.clone(), stable_id: v.clone() }),
            ),
        }
    }

    fn collection(&self, path: &str) -> Option<(&str, &[Value])> {
        let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
        match parts.as_slice() {
            ["v1", "cycles"] => Some(("cycles", &self.cycles)),
            ["v1", "identity_map"] => Some(("identity_map", &self.identity)),
            ["v1", "cycles", cycle, name] => {
                self.per_cycle.iter().find(|((c, n), _)| c == cycle && n == name).map(|((_, n), v)| (*n, v.as_slice()))
            }
            _ => None,
        }
    }
}

fn query(url: &str) -> BTreeMap<String, String> {
    url.split_once('?')
        .map(|(_, q)| {
            q.split('&').filter_map(|kv| kv.split_once('=')).map(|(k, v)| (k.to_owned(), v.to_owned())).collect()
        })
        .unwrap_or_default()
}

fn json_response(status: u16, body: String) -> Response<std::io::Cursor<Vec<u8>>> {
    let header = Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).expect("static header");
    Response::from_string(body).with_status_code(status).with_header(header)
}

impl MockServer {
    pub fn start(snapshot: &VenueSnapshot, options: MockOptions) -> std::io::Result<Self> {
        let server = Arc::new(Server::http("127.0.0.1:0").map_err(std::io::Error::other)?);
        let addr = server.server_addr().to_ip().ok_or_else(|| std::io::Error::other("not an IP listener"))?;
        let data = Data::new(snapshot);
        let requests = Arc::new(AtomicUsize::new(0));
        let transient = AtomicUsize::new(options.transient_failures);

        let worker = Arc::clone(&server);
        let counter = Arc::clone(&requests);
        let handle = std::thread::spawn(move || {
            let expected = format!("Bearer {}", options.token);
            for request in worker.incoming_requests() {
                counter.fetch_add(1, Ordering::SeqCst);
                let authorized =
                    request.headers().iter().any(|h| h.field.equiv("Authorization") && h.value.as_str() == expected);
                let response = if !authorized {
                    json_response(401, r#"{"error":"unauthorized"}"#.into())
                } else if transient.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok() {
                    json_response(503, r#"{"error":"unavailable"}"#.into())
                } else {
                    serve(&data, request.url(), options.truncate.as_ref())
                };
                let _ = request.respond(response);
            }
        });

        Ok(MockServer { server, addr, handle: Some(handle), requests })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn serve(data: &Data, url: &str, truncate: Option<&TruncatePage>) -> Response<std::io::Cursor<Vec<u8>>> {
    let path = url.split('?').next().unwrap_or("");
    let Some((name, items)) = data.collection(path) else {
        return json_response(404, r#"{"error":"not found"}"#.into());
    };
    let q = query(url);
    let limit: usize = q.get("limit").and_then(|v| v.parse().ok()).unwrap_or(100).max(1);
    let start: usize = match q.get("cursor").map(|c| c.parse()) {
        None => 0,
        Some(Ok(n)) => n,
        Some(Err(_)) => return json_response(400, r#"{"error":"bad cursor"}"#.into()),
    };
    let end = (start + limit).min(items.len());
    let has_more = end < items.len();
    let page = Page {
        items: items.get(start..end).unwrap_or_default().to_vec(),
        cursor: has_more.then(|| end.to_string()),
        has_more,
    };
    let mut body = serde_json::to_string(&page).expect("page serializes");
    if truncate.is_some_and(|t| t.collection == name && t.page * limit == start) {
        let mut cut = body.len() / 2;
        while !body.is_char_boundary(cut) {
            cut -= 1;
        }
        body.truncate(cut);
    }
    json_response(200, body)
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
