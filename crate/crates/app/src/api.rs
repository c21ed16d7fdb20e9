//! JSON HTTP service over one immutable model and scene.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use polcbm::concepts::{ConceptGroup, ConceptInfo, CONCEPT_COUNT};
use polcbm::kan::BSplineGrid;
use polcbm::pacbm::{DecisionHead, PaCBMModel, Strategy, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
use polcbm::polsar::{Patch, Scene, FEATURE_COUNT, PATCH_SIZE};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{decompose, DecompositionReport};
use crate::error::AppResult;
use crate::explain::{explain, FormulaReport};
use crate::view::{scene_view, SceneView};

/// Everything the handlers read. Built once, never mutated.
pub struct ServiceState {
    pub model: PaCBMModel,
    pub scene: Scene,
    pub view: SceneView,
    pub formulas: FormulaReport,
    pub info: Info,
}

impl ServiceState {
    pub fn new(model: PaCBMModel, scene: Scene, explain_seed: u64) -> AppResult<Self> {
        if scene.class_count() != model.class_count() {
            return Err(crate::error::AppError::Argument(format!(
                "scene has {} classes, model has {}",
                scene.class_count(),
                model.class_count()
            )));
        }
        let view = scene_view(&scene)?;
        let formulas = explain(&model, explain_seed)?;
        let info = Info {
            model: ModelInfo {
                format: CHECKPOINT_FORMAT.into(),
                version: CHECKPOINT_VERSION.into(),
                strategy: model.config.strategy,
                lambda: model.config.lambda,
                seed: model.config.seed,
                class_names: model.class_table.class_names(),
                concept_count: CONCEPT_COUNT,
                decision_head: DecisionHead::ConceptPath,
                grid: model.config.grid.clone(),
            },
            scene: SceneInfo {
                width: scene.width(),
                height: scene.height(),
                looks: scene.meta.looks,
                seed: scene.meta.seed,
                class_names: scene.meta.class_names.clone(),
            },
        };
        Ok(Self {
            model,
            scene,
            view,
            formulas,
            info,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelInfo {
    pub format: String,
    pub version: String,
    pub strategy: Strategy,
    pub lambda: f64,
    pub seed: u64,
    pub class_names: Vec<String>,
    pub concept_count: usize,
    pub decision_head: DecisionHead,
    pub grid: BSplineGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneInfo {
    pub width: usize,
    pub height: usize,
    pub looks: usize,
    pub seed: u64,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Info {
    pub model: ModelInfo,
    pub scene: SceneInfo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpan {
    pub group: ConceptGroup,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptsResponse {
    pub concepts: Vec<ConceptInfo>,
    pub groups: Vec<GroupSpan>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub row: Option<usize>,
    pub col: Option<usize>,
    /// `patch[row][col][channel]`, 15×15×9.
    pub patch: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col: Option<usize>,
    pub concepts: Vec<f64>,
    pub direct_logits: Vec<f64>,
    pub concept_path_logits: Vec<f64>,
    pub label: usize,
    pub label_name: String,
    pub direct_label: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_label: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterveneRequest {
    pub concepts: Vec<f64>,
    #[serde(default)]
    pub edits: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterveneResponse {
    pub concepts: Vec<f64>,
    pub logits: Vec<f64>,
    pub label: usize,
    pub label_name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelRequest {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: ErrorBody,
}

/// Error mapped onto an HTTP status.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "bad-request",
            message: message.into(),
        }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "unprocessable",
            message: message.into(),
        }
    }
}

impl From<polcbm::Error> for ApiError {
    fn from(e: polcbm::Error) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<crate::error::AppError> for ApiError {
    fn from(e: crate::error::AppError) -> Self {
        match e {
            crate::error::AppError::Core(c) => c.into(),
            other => Self {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                code: "internal",
                message: other.to_string(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorResponse {
            error: ErrorBody {
                code: self.code.into(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

type Shared = State<Arc<ServiceState>>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

async fn info(State(s): Shared) -> Json<Info> {
    Json(s.info.clone())
}

async fn concepts(State(s): Shared) -> Json<ConceptsResponse> {
    let groups = ConceptGroup::ALL
        .iter()
        .map(|&g| GroupSpan {
            group: g,
            start: g.range().start,
            len: g.range().len(),
        })
        .collect();
    Json(ConceptsResponse {
        concepts: s.model.vocabulary.clone(),
        groups,
    })
}

async fn scene(State(s): Shared) -> Json<SceneView> {
    Json(s.view.clone())
}

async fn formulas(State(s): Shared) -> Json<FormulaReport> {
    Json(s.formulas.clone())
}

fn patch_from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Patch, ApiError> {
    let shape_ok = nested.len() == PATCH_SIZE
        && nested
            .iter()
            .all(|r| r.len() == PATCH_SIZE && r.iter().all(|px| px.len() == FEATURE_COUNT));
    if !shape_ok {
        return Err(ApiError::unprocessable(format!(
            "patch must be {PATCH_SIZE}x{PATCH_SIZE}x{FEATURE_COUNT}"
        )));
    }
    let values: Vec<f64> = nested.iter().flatten().flatten().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ApiError::unprocessable("patch values must be finite"));
    }
    Patch::from_values(values).map_err(|e| ApiError::unprocessable(e.to_string()))
}

/// Predicts for a scene anchor or an uploaded patch.
pub fn predict_request(s: &ServiceState, req: &PredictRequest) -> Result<PredictResponse, ApiError> {
    let (patch, row, col) = match (req.row, req.col, &req.patch) {
        (Some(r), Some(c), None) => (s.scene.patch(r, c)?, Some(r), Some(c)),
        (None, None, Some(p)) => (patch_from_nested(p)?, None, None),
        _ => return Err(ApiError::bad_request("give either row and col, or patch")),
    };
    let out = s.model.forward_patch(&patch)?;
    Ok(PredictResponse {
        row,
        col,
        label_name: s.model.class_table.class_names()[out.label].clone(),
        concepts: out.concept_probs,
        direct_logits: out.direct_logits,
        concept_path_logits: out.concept_path_logits,
        label: out.label,
        direct_label: out.direct_label,
        true_label: patch.label.map(usize::from),
    })
}

async fn predict(State(s): Shared, body: Bytes) -> Result<Json<PredictResponse>, ApiError> {
    let req: PredictRequest = parse(&body)?;
    predict_request(&s, &req).map(Json)
}

pub fn intervene_request(s: &ServiceState, req: &InterveneRequest) -> Result<InterveneResponse, ApiError> {
    let mut edits = BTreeMap::new();
    for (k, &v) in &req.edits {
        let i: usize = k
            .parse()
            .map_err(|_| ApiError::bad_request(format!("edit key {k:?} is not a concept index")))?;
        edits.insert(i, v);
    }
    let r = s.model.intervene(&req.concepts, &edits)?;
    Ok(InterveneResponse {
        label_name: s.model.class_table.class_names()[r.label].clone(),
        concepts: r.concepts,
        logits: r.logits,
        label: r.label,
    })
}

async fn intervene(State(s): Shared, body: Bytes) -> Result<Json<InterveneResponse>, ApiError> {
    let req: InterveneRequest = parse(&body)?;
    intervene_request(&s, &req).map(Json)
}

/// Decomposition of the patch-mean coherency around an anchor.
pub fn decompose_request(s: &ServiceState, req: &PixelRequest) -> Result<DecompositionReport, ApiError> {
    let patch = s.scene.patch(req.row, req.col)?;
    Ok(decompose(&patch.mean_coherency())?)
}

async fn decompose_handler(State(s): Shared, body: Bytes) -> Result<Json<DecompositionReport>, ApiError> {
    let req: PixelRequest = parse(&body)?;
    decompose_request(&s, &req).map(Json)
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "not-found",
        message: "unknown route".into(),
    }
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/api/info", get(info))
        .route("/api/concepts", get(concepts))
        .route("/api/scene", get(scene))
        .route("/api/formulas", get(formulas))
        .route("/api/predict", post(predict))
        .route("/api/intervene", post(intervene))
        .route("/api/decompose", post(decompose_handler))
        .fallback(not_found)
        .with_state(state)
}
