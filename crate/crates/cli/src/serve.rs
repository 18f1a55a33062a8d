//! Serve mode: one document per process, requests handled strictly in order.

use std::io::Write;
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::json;

use spinxml::exporters::{export, EasySpinRegime, ExportOptions, ExportTarget};
use spinxml::geometry::{build_scene, SceneMode, SceneOptions};
use spinxml::spinxml_io::{parse_spinxml, write_spinxml, WriteStyle};
use spinxml::SpinSystem;

use crate::{apply_edit, bundle_for, validate_text, CliError, EditRequest};

#[derive(Debug, Clone, Default)]
pub struct Session {
    pub system: SpinSystem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: String,
}

impl Response {
    fn json<T: Serialize>(status: u16, value: &T) -> Self {
        Response {
            status,
            content_type: "application/json",
            body: serde_json::to_string(value).expect("serializable response"),
        }
    }

    fn error(status: u16, e: &CliError) -> Self {
        Response::json(status, e)
    }
}

fn status_for(e: &CliError) -> u16 {
    match e.error {
        "not_found" => 404,
        "parse" | "edit" | "read_only_field" | "usage" => 400,
        _ => 422,
    }
}

fn query_param<'a>(query: &'a str, key: &str) -> Option<&'a str> {
    query
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

fn parse_body(body: &[u8]) -> Result<SpinSystem, CliError> {
    let text = std::str::from_utf8(body).map_err(|e| CliError::new("parse", e))?;
    if text.trim_start().starts_with('<') {
        parse_spinxml(text).map(|r| r.system).map_err(|e| CliError::new("parse", e))
    } else {
        serde_json::from_str(text).map_err(|e| CliError::new("parse", e))
    }
}

fn scene(session: &Session, query: &str) -> Result<Response, CliError> {
    let mut opts = SceneOptions::default();
    if let Some(m) = query_param(query, "mode") {
        opts.mode = m.parse::<SceneMode>().map_err(|e| CliError::new("usage", e))?;
    }
    let number = |key: &str| -> Result<Option<f64>, CliError> {
        query_param(query, key)
            .map(|v| v.parse::<f64>().map_err(|e| CliError::new("usage", format!("{key}: {e}"))))
            .transpose()
    };
    if let Some(b) = number("bond_threshold")? {
        opts.bond_threshold = b;
    }
    if let Some(d) = number("display_threshold")? {
        opts.display_threshold = d;
    }
    Ok(Response::json(200, &build_scene(&session.system, &opts)))
}

fn export_route(session: &Session, query: &str) -> Result<Response, CliError> {
    let target: ExportTarget = query_param(query, "target")
        .ok_or_else(|| CliError::new("usage", "missing target"))?
        .parse()
        .map_err(|e| CliError::new("usage", e))?;
    let regime: EasySpinRegime = match query_param(query, "regime") {
        Some(r) => r.parse().map_err(|e| CliError::new("usage", e))?,
        None => EasySpinRegime::default(),
    };
    let opts = ExportOptions {
        regime,
        dipolar_from_coordinates: query_param(query, "dipolar_from_coordinates") == Some("true"),
    };
    let out = export(&session.system, target, &opts).map_err(|e| CliError::new("export", e))?;
    Ok(Response::json(200, &out))
}

fn route(session: &mut Session, method: &str, path: &str, query: &str, body: &[u8]) -> Result<Response, CliError> {
    let segments: Vec<&str> = path.trim_matches('/').split('/').collect();
    match (method, segments.as_slice()) {
        ("GET", ["system"]) if query_param(query, "format") == Some("xml") => {
            let text = write_spinxml(&session.system, WriteStyle::Preserve).map_err(|e| CliError::new("model", e))?;
            Ok(Response {
                status: 200,
                content_type: "application/xml",
                body: text,
            })
        }
        ("GET", ["system"]) => Ok(Response::json(200, &session.system)),
        ("PUT", ["system"]) => {
            session.system = parse_body(body)?;
            Ok(Response::json(200, &session.system))
        }
        ("GET", ["validate"]) => {
            let text = write_spinxml(&session.system, WriteStyle::Preserve).map_err(|e| CliError::new("model", e))?;
            Ok(Response::json(200, &validate_text(&text)?))
        }
        ("GET", ["scene"]) => scene(session, query),
        ("GET", ["export"]) => export_route(session, query),
        ("GET", ["interactions", id]) => {
            let id = parse_id(id)?;
            let term = session
                .system
                .interaction(id)
                .ok_or_else(|| CliError::new("not_found", format!("no interaction with id {id}")))?;
            Ok(Response::json(200, &bundle_for(term)?))
        }
        ("POST", ["interactions", id, "edit"]) => {
            let id = parse_id(id)?;
            let req: EditRequest = serde_json::from_slice(body).map_err(|e| CliError::new("parse", e))?;
            let bundle = apply_edit(&mut session.system, id, &req.edited, req.value)?;
            Ok(Response::json(200, &bundle))
        }
        (_, ["system" | "validate" | "scene" | "export"]) | (_, ["interactions", _]) | (_, ["interactions", _, "edit"]) => {
            Ok(Response::json(405, &json!({ "error": "method_not_allowed", "message": format!("{method} {path}") })))
        }
        _ => Err(CliError::new("not_found", format!("no route for {path}"))),
    }
}

fn parse_id(s: &str) -> Result<i64, CliError> {
    s.parse().map_err(|_| CliError::new("not_found", format!("bad interaction id `{s}`")))
}

/// Handles one request against the session document.
pub fn handle(session: &mut Session, method: &str, url: &str, body: &[u8]) -> Response {
    let (path, query) = url.split_once('?').unwrap_or((url, ""));
    route(session, method, path, query, body).unwrap_or_else(|e| Response::error(status_for(&e), &e))
}

/// Blocks serving requests on `host:port`. A single-threaded runtime and a
/// lock around the session keep request handling strictly serial.
pub fn serve(host: &str, port: u16, system: SpinSystem, log: &mut dyn Write) -> std::io::Result<()> {
    use axum::body::Bytes;
    use axum::http::{header, Method, StatusCode, Uri};
    use axum::response::IntoResponse;

    let session = Arc::new(Mutex::new(Session { system }));
    let app = axum::Router::new().fallback(move |method: Method, uri: Uri, body: Bytes| {
        let session = Arc::clone(&session);
        async move {
            let url = uri.path_and_query().map_or(uri.path(), |p| p.as_str()).to_owned();
            let mut guard = session.lock().unwrap_or_else(|p| p.into_inner());
            let r = handle(&mut guard, method.as_str(), &url, &body);
            let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, [(header::CONTENT_TYPE, r.content_type)], r.body).into_response()
        }
    });
    let runtime = tokio::runtime::Builder::new_current_thread().enable_io().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        let _ = writeln!(log, "{}", json!({ "listening": format!("http://{}", listener.local_addr()?) }));
        axum::serve(listener, app).await
    })
}
