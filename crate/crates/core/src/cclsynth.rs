//! Cone-complementarity linearization for predictive gain synthesis.
//!
//! The exact design conditions need `Q = P⁻¹`, which is not convex. The
//! loop keeps `[P, I; I, Q] ⪰ 0` and drives `trace(P·Q)` towards its
//! lower bound `n·N_drop` by repeatedly minimizing the linearization
//! `trace(P·Q_k + P_k·Q)`. After every solve the gains are handed to the
//! exact analysis test, and the first certified schedule is returned.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::densela::{matmul, LinAlgError, Matrix};
use crate::ncsmodel::{
    assemble_synthesis_blocks, verify_stability, GainSchedule, ModelError, StabilityCertificate, SwitchedPlant,
    Verification, VariableMap, DEFAULT_EPSILON,
};
use crate::sdp::{sdp_phase1, sdp_solve, AffineBlock, SdpError, SdpProblem, SdpSettings, SdpStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CclError {
    #[error("invalid settings: {0}")]
    InvalidSettings(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CclSettings {
    pub max_iterations: usize,
    pub trace_tol: f64,
    pub epsilon: f64,
    pub sdp: SdpSettings,
}

impl Default for CclSettings {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            trace_tol: 1e-4,
            epsilon: DEFAULT_EPSILON,
            sdp: SdpSettings::default(),
        }
    }
}

impl CclSettings {
    pub fn validate(&self) -> Result<(), CclError> {
        if self.max_iterations == 0 {
            return Err(CclError::InvalidSettings("max_iterations must be positive"));
        }
        if !(self.trace_tol.is_finite() && self.trace_tol > 0.0) {
            return Err(CclError::InvalidSettings("trace_tol must be positive"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CclError::InvalidSettings("epsilon must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CclStatus {
    Stabilized,
    TraceConvergedUnverified,
    IterationLimit,
    InitializationFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 for the initial feasible point.
    pub iteration: usize,
    /// `trace(P·Q_k + P_k·Q)`; `2·trace(P·Q)` at iteration 0.
    pub objective: f64,
    /// `‖P·Q − I‖_F`.
    pub inverse_gap: f64,
    pub verified: bool,
    /// Largest eigenvalue of `ΦᵀPΦ − P` at the analysis certificate's `P`.
    pub worst_margin: f64,
    /// Status of the SDP solved at this iteration; `None` at iteration 0.
    pub sdp_status: Option<SdpStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CclResult {
    pub status: CclStatus,
    pub gains: GainSchedule,
    pub p: Matrix,
    pub q: Matrix,
    /// Present iff `status` is `Stabilized`.
    pub certificate: Option<StabilityCertificate>,
    pub history: Vec<IterationRecord>,
    /// Phase-1 margin of the initial point (the smaller of the design LMIs
    /// and the per-mode stabilizability screen).
    pub initial_margin: f64,
}

impl CclResult {
    pub fn final_worst_margin(&self) -> Option<f64> {
        self.history.last().map(|r| r.worst_margin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CclStart {
    pub p: Matrix,
    pub q: Matrix,
    pub gains: GainSchedule,
    pub margin: f64,
    pub z: Vec<f64>,
}

/// Per-mode test `∃ X ≻ 0, Y: [X, (F X + G Y)ᵀ; F X + G Y, X] ≻ 0`, which
/// holds iff `(F, G)` is stabilizable. Returns the smallest phase-1 margin.
fn stabilizability_margin(plant: &SwitchedPlant, epsilon: f64, settings: &SdpSettings) -> Result<f64, CclError> {
    let n = plant.states();
    let m = plant.inputs();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let d = pairs.len() + m * n;
    let mut worst = f64::INFINITY;
    for mode in plant.modes() {
        let mut big = vec![Matrix::zeros(2 * n, 2 * n); d];
        let mut small = vec![Matrix::zeros(n, n); d];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let mut e = Matrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let fe = matmul(&mode.f, &e)?;
            let c = &mut big[k];
            c.set_block(0, 0, &e);
            c.set_block(n, n, &e);
            c.set_block(n, 0, &fe);
            c.set_block(0, n, &fe.transpose());
            small[k] = e;
        }
        for row in 0..m {
            for col in 0..n {
                let c = &mut big[pairs.len() + row * n + col];
                for r in 0..n {
                    let v = mode.g[(r, row)];
                    c[(n + r, col)] = v;
                    c[(col, n + r)] = v;
                }
            }
        }
        let blocks = vec![
            AffineBlock::new(Matrix::identity(2 * n).scale(-epsilon), big)?,
            AffineBlock::new(Matrix::identity(n).scale(-epsilon), small)?,
        ];
        worst = worst.min(sdp_phase1(&blocks, settings)?.margin);
    }
    Ok(worst)
}

fn inverse_gap(p: &Matrix, q: &Matrix) -> f64 {
    matmul(p, q)
        .and_then(|pq| pq.sub(&Matrix::identity(p.rows())))
        .map(|r| r.frobenius())
        .unwrap_or(f64::INFINITY)
}

fn start_point(
    plant: &SwitchedPlant,
    blocks: &[AffineBlock],
    map: &VariableMap,
    settings: &CclSettings,
) -> Result<CclStart, CclError> {
    let phase1 = sdp_phase1(blocks, &settings.sdp)?;
    let screen = stabilizability_margin(plant, settings.epsilon, &settings.sdp)?;
    let (p, q, gains) = map.extract(&phase1.z);
    Ok(CclStart {
        p,
        q,
        gains,
        margin: phase1.margin.min(screen),
        z: phase1.z,
    })
}

/// Finds a strictly feasible point of the relaxed design LMIs.
///
/// The relaxed LMIs alone are satisfiable by any plant (large multiples of
/// the identity for `P` and `Q` work), so every mode is also screened for
/// stabilizability, which the design problem requires. Fails with
/// `Ok(Err(margin))` when either phase-1 margin is not positive.
pub fn ccl_initialize(plant: &SwitchedPlant, settings: &CclSettings) -> Result<Result<CclStart, f64>, CclError> {
    settings.validate()?;
    let (blocks, map) = assemble_synthesis_blocks(plant, settings.epsilon)?;
    let start = start_point(plant, &blocks, &map, settings)?;
    Ok(if start.margin > 0.0 { Ok(start) } else { Err(start.margin) })
}

fn check(
    plant: &SwitchedPlant,
    gains: &GainSchedule,
    settings: &CclSettings,
) -> Result<Verification, CclError> {
    Ok(verify_stability(plant, gains, settings.epsilon, &settings.sdp)?)
}

pub fn ccl_synthesize(plant: &SwitchedPlant, settings: &CclSettings) -> Result<CclResult, CclError> {
    settings.validate()?;
    let (blocks, map) = assemble_synthesis_blocks(plant, settings.epsilon)?;
    let start = start_point(plant, &blocks, &map, settings)?;
    let initial_margin = start.margin;
    let CclStart {
        mut p,
        mut q,
        mut gains,
        ..
    } = start;

    if initial_margin <= 0.0 {
        return Ok(CclResult {
            status: CclStatus::InitializationFailed,
            gains,
            p,
            q,
            certificate: None,
            history: Vec::new(),
            initial_margin,
        });
    }

    let fixed_point = 2.0 * map.order() as f64;
    let mut history = Vec::new();
    let finish = |status, gains, p, q, certificate, history| CclResult {
        status,
        gains,
        p,
        q,
        certificate,
        history,
        initial_margin,
    };

    let verification = check(plant, &gains, settings)?;
    history.push(IterationRecord {
        iteration: 0,
        objective: 2.0 * matmul(&p, &q)?.trace(),
        inverse_gap: inverse_gap(&p, &q),
        verified: verification.is_certified(),
        worst_margin: verification.worst_margin(),
        sdp_status: None,
    });
    if let Verification::Certified(cert) = verification {
        return Ok(finish(CclStatus::Stabilized, gains, p, q, Some(cert), history));
    }

    let mut problem = SdpProblem::new(vec![0.0; map.dimension()], blocks)?;
    for iteration in 1..=settings.max_iterations {
        problem.objective = map.linearized_trace_objective(&p, &q);
        let solution = sdp_solve(&problem, &settings.sdp)?;
        let usable = match solution.status {
            SdpStatus::Optimal | SdpStatus::Feasible => true,
            SdpStatus::IterationLimit => solution.min_block_margin >= -settings.sdp.feas_tol,
            SdpStatus::Infeasible | SdpStatus::NumericalFailure => false,
        };
        if !usable {
            history.push(IterationRecord {
                iteration,
                objective: solution.objective_value,
                inverse_gap: inverse_gap(&p, &q),
                verified: false,
                worst_margin: history.last().map_or(f64::INFINITY, |r: &IterationRecord| r.worst_margin),
                sdp_status: Some(solution.status),
            });
            return Ok(finish(CclStatus::IterationLimit, gains, p, q, None, history));
        }

        let (p_next, q_next, gains_next) = map.extract(&solution.z);
        p = p_next;
        q = q_next;
        gains = gains_next;
        let verification = check(plant, &gains, settings)?;
        history.push(IterationRecord {
            iteration,
            objective: solution.objective_value,
            inverse_gap: inverse_gap(&p, &q),
            verified: verification.is_certified(),
            worst_margin: verification.worst_margin(),
            sdp_status: Some(solution.status),
        });
        if let Verification::Certified(cert) = verification {
            return Ok(finish(CclStatus::Stabilized, gains, p, q, Some(cert), history));
        }
        if (solution.objective_value - fixed_point).abs() < settings.trace_tol {
            return Ok(finish(CclStatus::TraceConvergedUnverified, gains, p, q, None, history));
        }
    }
    Ok(finish(CclStatus::IterationLimit, gains, p, q, None, history))
}
