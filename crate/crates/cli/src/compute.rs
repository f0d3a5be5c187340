//! One-off evaluations on registered models: metric, tensor, divergence, distance.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use infogeo_core::geodesic::{arc_length, geodesic_bvp};
use infogeo_core::ManifoldModel;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::registry;
use crate::report::SCHEMA;
use crate::suites::Ctx;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComputeKind {
    Metric,
    Divergence,
    Distance,
    Tensor,
}

impl std::str::FromStr for ComputeKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "metric" => Ok(ComputeKind::Metric),
            "divergence" => Ok(ComputeKind::Divergence),
            "distance" => Ok(ComputeKind::Distance),
            "tensor" => Ok(ComputeKind::Tensor),
            _ => Err(CliError::Usage(format!(
                "unknown kind `{s}`; expected metric, divergence, distance or tensor"
            ))),
        }
    }
}

impl ComputeKind {
    fn name(self) -> &'static str {
        match self {
            ComputeKind::Metric => "metric",
            ComputeKind::Divergence => "divergence",
            ComputeKind::Distance => "distance",
            ComputeKind::Tensor => "tensor",
        }
    }

    fn arity(self) -> usize {
        match self {
            ComputeKind::Metric | ComputeKind::Tensor => 1,
            ComputeKind::Divergence | ComputeKind::Distance => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComputeRequest {
    pub kind: ComputeKind,
    pub model: String,
    pub points: String,
    pub emit_path: Option<PathBuf>,
}

fn as_vector(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(Value::as_f64).collect()
}

/// Accepts `[x…]` for one point and `[[p…], [q…]]` for two.
pub fn parse_points(text: &str, arity: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("--points is not valid JSON: {e}")))?;
    let points = match as_vector(&value) {
        Some(single) => vec![single],
        None => value
            .as_array()
            .and_then(|items| items.iter().map(as_vector).collect::<Option<Vec<_>>>())
            .ok_or_else(|| {
                CliError::Usage(
                    "points must be a numeric array or an array of numeric arrays".into(),
                )
            })?,
    };
    if points.len() != arity {
        return Err(CliError::Usage(format!(
            "expected {arity} point(s), got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage("points must not be empty".into()));
    }
    Ok(points)
}

/// Simplex inputs may be given as full weight vectors; the chart drops the last weight.
pub fn to_chart(simplex_like: bool, dim: Option<usize>, p: Vec<f64>) -> Vec<f64> {
    let sums_to_one = (p.iter().sum::<f64>() - 1.0).abs() < 1e-9 && p.iter().all(|&w| w > 0.0);
    let is_full = match dim {
        Some(n) => p.len() == n + 1,
        None => p.len() >= 2,
    };
    if simplex_like && sums_to_one && is_full {
        p[..p.len() - 1].to_vec()
    } else {
        p
    }
}

fn is_simplex_name(name: &str) -> bool {
    name.starts_with("simplex") || name == "kl-simplex"
}

fn settings(ctx: &Ctx) -> Value {
    json!({
        "fd.metric": ctx.cfg.metric_step().rel_step,
        "fd.second": ctx.steps.second,
        "fd.third": ctx.steps.third,
        "shoot.rk_steps": ctx.shooting.rk_steps,
        "shoot.newton_tol": ctx.shooting.newton_tol,
    })
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> Value {
    json!((0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<f64>>())
        .collect::<Vec<_>>())
}

pub fn compute(req: &ComputeRequest, cfg: &RunConfig) -> Result<Value, CliError> {
    let ctx = Ctx::new(cfg)?;
    let raw = parse_points(&req.points, req.kind.arity())?;
    let simplex_like = is_simplex_name(&req.model);

    let divergence_only =
        req.kind == ComputeKind::Divergence && registry::is_divergence_name(&req.model);
    let model: Option<ManifoldModel> = if divergence_only {
        None
    } else {
        Some(registry::model(&req.model)?.with_fd(cfg.metric_step()))
    };
    let points: Vec<Vec<f64>> = raw
        .into_iter()
        .map(|p| to_chart(simplex_like, model.as_ref().map(|m| m.dim()), p))
        .collect();

    let mut extra = serde_json::Map::new();
    let result = match req.kind {
        ComputeKind::Metric => matrix_json(
            &model
                .as_ref()
                .expect("model resolved")
                .metric_at(&points[0])?,
        ),
        ComputeKind::Tensor => {
            let t = model
                .as_ref()
                .expect("model resolved")
                .tensor_at(&points[0])?;
            let n = t.dim();
            json!((0..n)
                .map(|i| (0..n)
                    .map(|j| (0..n).map(|k| t.get(i, j, k)).collect::<Vec<f64>>())
                    .collect::<Vec<_>>())
                .collect::<Vec<_>>())
        }
        ComputeKind::Divergence => {
            let d = match &model {
                None => registry::divergence(&req.model, points[0].len())?,
                Some(m) => m.divergence().cloned().ok_or_else(|| {
                    CliError::Usage(format!("model `{}` carries no divergence", req.model))
                })?,
            };
            if points[0].len() != points[1].len() {
                return Err(CliError::Usage(
                    "both points must have the same dimension".into(),
                ));
            }
            extra.insert("divergence".into(), json!(d.name()));
            json!(d.eval(&points[0], &points[1])?)
        }
        ComputeKind::Distance => {
            let m = model.as_ref().expect("model resolved");
            m.check(&points[0])?;
            m.check(&points[1])?;
            let path = geodesic_bvp(
                &m.levi_civita_field(),
                &points[0],
                &points[1],
                &ctx.shooting,
            )?;
            if let Some(out) = &req.emit_path {
                path.write_csv(BufWriter::new(File::create(out)?))?;
                extra.insert("path_csv".into(), json!(out.display().to_string()));
            }
            json!(arc_length(m, &path)?)
        }
    };
    let mut doc = json!({
        "schema": SCHEMA,
        "kind": req.kind.name(),
        "model": req.model,
        "points": points,
        "result": result,
        "settings": settings(&ctx),
    });
    doc.as_object_mut()
        .expect("document is an object")
        .extend(extra);
    Ok(doc)
}
