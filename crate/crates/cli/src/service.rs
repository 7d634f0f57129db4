//! HTTP slice service: model listing, geometry streaming, slicing and
//! annotations over a directory of meshes loaded once at start-up.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nalgebra::Vector3;
use organslice::mesh::{load_mesh, LoadOptions, Mesh};
use organslice::slice::{slice, PlaneSpec};
use serde::{Deserialize, Serialize};

const MESH_EXTENSIONS: [&str; 2] = ["stl", "obj"];
pub const ANNOTATION_SUFFIX: &str = ".annotations.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub anchor: [f64; 3],
    pub title: String,
    pub text: String,
}

#[derive(Debug)]
pub struct Model {
    pub id: String,
    pub mesh: Mesh,
    pub annotations: Vec<Annotation>,
}

/// Immutable model registry shared by all request handlers.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    models: Arc<BTreeMap<String, Arc<Model>>>,
}

impl AppState {
    pub fn from_models(models: impl IntoIterator<Item = Model>) -> Self {
        let map = models.into_iter().map(|m| (m.id.clone(), Arc::new(m))).collect();
        AppState { models: Arc::new(map) }
    }

    /// Loads every `.stl`/`.obj` in `dir`; the model id is the file stem.
    /// Coordinates (and annotation anchors) are multiplied by `scale`.
    pub fn load_dir(dir: &Path, scale: f64) -> anyhow::Result<Self> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| MESH_EXTENSIONS.contains(&x.to_ascii_lowercase().as_str()))
            })
            .collect();
        files.sort();
        let mut models = Vec::new();
        for path in files {
            let id = path.file_stem().unwrap().to_string_lossy().into_owned();
            let (mesh, _) = load_mesh(&path, &LoadOptions::default()).with_context(|| format!("loading {}", path.display()))?;
            let sidecar = path.with_file_name(format!("{id}{ANNOTATION_SUFFIX}"));
            let mut annotations = if sidecar.exists() {
                let text = std::fs::read_to_string(&sidecar).with_context(|| format!("reading {}", sidecar.display()))?;
                parse_annotations(&text).with_context(|| format!("parsing {}", sidecar.display()))?
            } else {
                Vec::new()
            };
            for a in &mut annotations {
                a.anchor = a.anchor.map(|c| c * scale);
            }
            let mesh = if scale == 1.0 { mesh } else { mesh.scaled(scale) };
            models.push(Model { id, mesh, annotations });
        }
        if models.is_empty() {
            bail!("no loadable meshes in {}", dir.display());
        }
        Ok(AppState::from_models(models))
    }

    pub fn model(&self, id: &str) -> Option<&Arc<Model>> {
        self.models.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}

/// Tab-separated records `id, x, y, z, title, text`; `#` starts a comment
/// line.
pub fn parse_annotations(text: &str) -> anyhow::Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.splitn(6, '\t').collect();
        if f.len() < 5 {
            bail!("line {}: expected id, x, y, z, title[, text]", n + 1);
        }
        let coord = |s: &str| s.trim().parse::<f64>().with_context(|| format!("line {}: bad coordinate {s:?}", n + 1));
        out.push(Annotation {
            id: f[0].to_string(),
            anchor: [coord(f[1])?, coord(f[2])?, coord(f[3])?],
            title: f[4].to_string(),
            text: f.get(5).unwrap_or(&"").to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRequest {
    pub model: String,
    pub normal: [f64; 3],
    pub offset: f64,
}

#[derive(Debug, Serialize)]
struct ModelInfo<'a> {
    id: &'a str,
    vertex_count: usize,
    face_count: usize,
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    annotation_count: usize,
}

#[derive(Debug, Deserialize)]
pub struct GeometryQuery {
    format: Option<String>,
}

#[derive(Debug, Serialize)]
struct GeometryJson {
    positions: Vec<f32>,
    indices: Vec<u32>,
}

fn error(status: StatusCode, reason: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": reason.into() }))).into_response()
}

fn json_body(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models", get(list_models))
        .route("/models/{id}/geometry", get(geometry))
        .route("/models/{id}/annotations", get(annotations))
        .route("/slice", post(slice_model))
        .with_state(state)
}

async fn list_models(State(state): State<AppState>) -> Response {
    let infos: Vec<ModelInfo> = state
        .models
        .values()
        .map(|m| {
            let bbox = m.mesh.bounding_box().expect("loaded meshes are non-empty");
            ModelInfo {
                id: &m.id,
                vertex_count: m.mesh.vertex_count(),
                face_count: m.mesh.face_count(),
                bbox_min: bbox.min.coords.into(),
                bbox_max: bbox.max.coords.into(),
                annotation_count: m.annotations.len(),
            }
        })
        .collect();
    json_body(serde_json::to_string(&infos).unwrap())
}

/// `u32 V, u32 F, f32 xyz * V, u32 abc * F`, little-endian.
pub fn encode_geometry(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 12 * mesh.vertex_count() + 12 * mesh.face_count());
    out.extend_from_slice(&(mesh.vertex_count() as u32).to_le_bytes());
    out.extend_from_slice(&(mesh.face_count() as u32).to_le_bytes());
    for p in mesh.vertices() {
        for c in p.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    for f in mesh.faces() {
        for &i in f {
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
    }
    out
}

async fn geometry(State(state): State<AppState>, UrlPath(id): UrlPath<String>, Query(q): Query<GeometryQuery>) -> Response {
    let Some(model) = state.model(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown model {id:?}"));
    };
    match q.format.as_deref().unwrap_or("json") {
        "binary" => (
            [(header::CONTENT_TYPE, "application/octet-stream")],
            encode_geometry(&model.mesh),
        )
            .into_response(),
        "json" => {
            let g = GeometryJson {
                positions: model.mesh.vertices().iter().flat_map(|p| p.iter().map(|&c| c as f32).collect::<Vec<_>>()).collect(),
                indices: model.mesh.faces().iter().flatten().map(|&i| i as u32).collect(),
            };
            json_body(serde_json::to_string(&g).unwrap())
        }
        other => error(StatusCode::BAD_REQUEST, format!("unknown geometry format {other:?}")),
    }
}

async fn annotations(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    match state.model(&id) {
        Some(m) => json_body(serde_json::to_string(&m.annotations).unwrap()),
        None => error(StatusCode::NOT_FOUND, format!("unknown model {id:?}")),
    }
}

/// Parses and validates a slice request body. The normal need not be unit
/// length; it is normalized and `offset` is measured along the result.
pub fn parse_slice_request(body: &[u8]) -> Result<(SliceRequest, PlaneSpec), String> {
    let req: SliceRequest = serde_json::from_slice(body).map_err(|e| format!("malformed request: {e}"))?;
    let plane = PlaneSpec::from_direction(Vector3::from(req.normal), req.offset).map_err(|e| e.to_string())?;
    Ok((req, plane))
}

async fn slice_model(State(state): State<AppState>, body: Bytes) -> Response {
    let (req, plane) = match parse_slice_request(&body) {
        Ok(x) => x,
        Err(reason) => return error(StatusCode::BAD_REQUEST, reason),
    };
    let Some(model) = state.model(&req.model).cloned() else {
        return error(StatusCode::NOT_FOUND, format!("unknown model {:?}", req.model));
    };
    match tokio::task::spawn_blocking(move || slice(&model.mesh, &plane).to_json()).await {
        Ok(body) => json_body(body),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    eprintln!("serving {} model(s) on http://{}", state.models.len(), listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
