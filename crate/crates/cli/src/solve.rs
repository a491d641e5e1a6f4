use std::path::PathBuf;

use clap::Args;
use gemqp_core::{Certificate, DualQP, NonnegQP, PrimalQP, SolverResult, SolverStatus};
use serde::{Deserialize, Serialize};

use crate::input::{read_json, to_json};
use crate::{CliError, CommonArgs, RequestSettings};

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Read the JSON problem from FILE instead of stdin
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Print the dual data (M, q, constant) of a generic QP
    #[arg(long)]
    dualize: bool,
    /// Solve the dual of a generic QP and certify the recovered primal point
    #[arg(long)]
    certify: bool,
}

/// Either `{C, w, A, b}` or `{M, q}`, told apart by which keys are present.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct Problem {
    C: Option<Vec<Vec<f64>>>,
    w: Option<Vec<f64>>,
    A: Option<Vec<Vec<f64>>>,
    b: Option<Vec<f64>>,
    M: Option<Vec<Vec<f64>>>,
    q: Option<Vec<f64>>,
    #[serde(flatten)]
    settings: RequestSettings,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct DualReport<'a> {
    M: Vec<&'a [f64]>,
    q: &'a [f64],
    constant: f64,
}

impl<'a> From<&'a DualQP> for DualReport<'a> {
    fn from(d: &'a DualQP) -> Self {
        Self { M: (0..d.m.rows()).map(|i| d.m.row(i)).collect(), q: &d.q, constant: d.constant }
    }
}

#[derive(Serialize)]
struct CertificateReport<'a> {
    z: &'a [f64],
    v: &'a [f64],
    primal_objective: f64,
    dual_value: f64,
    duality_gap: Option<f64>,
    max_violation: f64,
    kkt_residual: f64,
    iterations: usize,
    status: &'static str,
}

impl<'a> From<&'a Certificate> for CertificateReport<'a> {
    fn from(c: &'a Certificate) -> Self {
        Self {
            z: &c.z,
            v: &c.v,
            primal_objective: c.primal_objective,
            dual_value: c.dual_value,
            duality_gap: c.duality_gap,
            max_violation: c.max_violation,
            kkt_residual: c.kkt_residual,
            iterations: c.iterations,
            status: c.status.as_str(),
        }
    }
}

#[derive(Serialize)]
struct Combined<'a> {
    dual: DualReport<'a>,
    certificate: CertificateReport<'a>,
}

#[derive(Serialize)]
struct NonnegReport<'a> {
    v_star: &'a [f64],
    objective: f64,
    kkt_residual: f64,
    iterations: usize,
    status: &'static str,
}

fn finish(text: String, status: SolverStatus) -> Result<String, CliError> {
    match status {
        SolverStatus::Converged => Ok(text),
        SolverStatus::MaxItersReached => Err(CliError::NotConverged(text)),
    }
}

pub fn run(args: &SolveArgs, common: &CommonArgs) -> Result<String, CliError> {
    let p: Problem = read_json(args.input.as_deref())?;
    let solver = common.solver()?;
    let config = common.solver_config(&p.settings);
    match (p.C, p.w, p.A, p.b, p.M, p.q) {
        (Some(c), Some(w), Some(a), Some(b), None, None) => {
            let qp = PrimalQP::from_rows(&c, w, &a, b)?;
            if args.dualize && !args.certify {
                return to_json(&DualReport::from(qp.form_dual()));
            }
            let cert = qp.certify(solver, &config)?;
            let text = if args.dualize {
                to_json(&Combined { dual: qp.form_dual().into(), certificate: (&cert).into() })?
            } else {
                to_json(&CertificateReport::from(&cert))?
            };
            finish(text, cert.status)
        }
        (None, None, None, None, Some(m), Some(q)) => {
            if args.dualize || args.certify {
                return Err(CliError::Input("--dualize and --certify need a generic QP {C, w, A, b}".into()));
            }
            let problem = NonnegQP::from_rows(&m, q)?;
            let r: SolverResult = solver.solve(&problem, &config)?;
            let text = to_json(&NonnegReport {
                v_star: &r.v_star,
                objective: problem.objective(&r.v_star),
                kkt_residual: r.kkt_residual,
                iterations: r.iterations,
                status: r.status.as_str(),
            })?;
            finish(text, r.status)
        }
        _ => Err(CliError::Input("expected either keys C, w, A, b or keys M, q".into())),
    }
}
