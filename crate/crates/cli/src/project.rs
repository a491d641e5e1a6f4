use gemqp_core::{project, Error, GradientSet, ProjectionResult};
use serde::{Deserialize, Serialize};

use crate::input::{read_json, to_json};
use crate::{CliError, CommonArgs, InputArgs, RequestSettings};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectRequest {
    pub g: Vec<f64>,
    pub memory_gradients: Vec<Vec<f64>>,
    #[serde(flatten)]
    pub settings: RequestSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectResponse {
    pub g_tilde: Vec<f64>,
    pub v_star: Vec<f64>,
    pub violated: Vec<usize>,
    pub projected: bool,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: String,
}

impl From<ProjectionResult> for ProjectResponse {
    fn from(r: ProjectionResult) -> Self {
        Self {
            g_tilde: r.g_tilde,
            v_star: r.v_star,
            violated: r.violated,
            projected: r.projected,
            kkt_residual: r.kkt_residual,
            iterations: r.iterations,
            status: r.status.to_string(),
        }
    }
}

pub fn run(args: &InputArgs, common: &CommonArgs) -> Result<String, CliError> {
    let req: ProjectRequest = read_json(args.input.as_deref())?;
    let config = common.projection_config(&req.settings)?;
    let gs = GradientSet::new(req.g, req.memory_gradients)?;
    match project(&gs, &config) {
        Ok(r) => to_json(&ProjectResponse::from(r)),
        Err(Error::NotConverged(partial)) => Err(CliError::NotConverged(to_json(&ProjectResponse::from(*partial))?)),
        Err(e) => Err(e.into()),
    }
}
