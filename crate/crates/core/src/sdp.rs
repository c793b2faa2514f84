//! Small dense semidefinite programs in inequality form:
//!
//! ```text
//! minimize    cᵀz
//! subject to  F0_j + Σ_i z_i·F_ij ⪰ 0   for every block j
//! ```
//!
//! Solved with a primal log-barrier path-following method. A phase-1
//! problem (maximize a uniform margin `t` with `F_j(z) ⪰ t·I`, `t` capped
//! at `initial_margin`) supplies a strictly feasible start or an
//! infeasibility certificate. Every iterate stays strictly inside the
//! constraint cone, so any returned point is feasible up to Cholesky
//! pivot tolerance.
//!
//! Decision variables are additionally confined to the box
//! `|z_i| ≤ variable_bound`. The box keeps the barrier bounded below when
//! the feasible set is unbounded (the phase-1 problems built for Lyapunov
//! certificates are homogeneous in the unknowns).

use thiserror::Error;

use crate::densela::{cholesky_unchecked, eig_sym, LinAlgError, Matrix, SYMMETRY_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("problem has no constraint blocks")]
    NoBlocks,
    #[error("block {block}: coefficient count {got} does not match dimension {expected}")]
    DimensionMismatch {
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("block {block}: matrix {index} is {rows}x{cols}, expected {size}x{size}")]
    BlockShape {
        block: usize,
        index: usize,
        rows: usize,
        cols: usize,
        size: usize,
    },
    #[error("block {block}: matrix {index} is not symmetric")]
    NotSymmetric { block: usize, index: usize },
    #[error("objective length {got} does not match dimension {expected}")]
    ObjectiveLength { expected: usize, got: usize },
    #[error("invalid settings: {0}")]
    InvalidSettings(&'static str),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// One symmetric affine matrix function `f0 + Σ z_i·coeffs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBlock {
    size: usize,
    f0: Matrix,
    coeffs: Vec<Matrix>,
}

impl AffineBlock {
    pub fn new(f0: Matrix, coeffs: Vec<Matrix>) -> Result<Self, SdpError> {
        let size = f0.rows();
        let block = Self { size, f0, coeffs };
        block.validate(0)?;
        Ok(block)
    }

    fn validate(&self, block: usize) -> Result<(), SdpError> {
        for (index, m) in std::iter::once(&self.f0).chain(&self.coeffs).enumerate() {
            if m.shape() != (self.size, self.size) {
                return Err(SdpError::BlockShape {
                    block,
                    index,
                    rows: m.rows(),
                    cols: m.cols(),
                    size: self.size,
                });
            }
            if !m.is_symmetric(SYMMETRY_TOL) {
                return Err(SdpError::NotSymmetric { block, index });
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dimension(&self) -> usize {
        self.coeffs.len()
    }

    pub fn f0(&self) -> &Matrix {
        &self.f0
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    /// Value of the block at `z`.
    pub fn eval(&self, z: &[f64]) -> Matrix {
        assert_eq!(z.len(), self.coeffs.len(), "AffineBlock::eval dimension");
        let mut m = self.f0.clone();
        for (zi, ci) in z.iter().zip(&self.coeffs) {
            if *zi != 0.0 {
                m.axpy(*zi, ci);
            }
        }
        m
    }

    /// Smallest eigenvalue of the block at `z`, recomputed by Jacobi.
    pub fn min_eigenvalue(&self, z: &[f64]) -> f64 {
        let mut m = self.eval(z);
        m.symmetrize();
        eig_sym(&m).map(|e| e.min()).unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub dimension: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<AffineBlock>,
}

impl SdpProblem {
    pub fn new(objective: Vec<f64>, blocks: Vec<AffineBlock>) -> Result<Self, SdpError> {
        let problem = Self {
            dimension: objective.len(),
            objective,
            blocks,
        };
        problem.validate()?;
        Ok(problem)
    }

    fn validate(&self) -> Result<(), SdpError> {
        if self.objective.len() != self.dimension {
            return Err(SdpError::ObjectiveLength {
                expected: self.dimension,
                got: self.objective.len(),
            });
        }
        validate_blocks(&self.blocks, self.dimension)
    }

    /// Smallest eigenvalue over all blocks at `z`.
    pub fn min_block_margin(&self, z: &[f64]) -> f64 {
        min_margin(&self.blocks, z)
    }
}

fn validate_blocks(blocks: &[AffineBlock], dimension: usize) -> Result<(), SdpError> {
    if blocks.is_empty() {
        return Err(SdpError::NoBlocks);
    }
    for (j, b) in blocks.iter().enumerate() {
        if b.coeffs.len() != dimension {
            return Err(SdpError::DimensionMismatch {
                block: j,
                expected: dimension,
                got: b.coeffs.len(),
            });
        }
        b.validate(j)?;
    }
    Ok(())
}

fn min_margin(blocks: &[AffineBlock], z: &[f64]) -> f64 {
    blocks
        .iter()
        .map(|b| b.min_eigenvalue(z))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SdpStatus {
    Optimal,
    Feasible,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Best iterate; always present, even on failure.
    pub z: Vec<f64>,
    pub objective_value: f64,
    pub min_block_margin: f64,
    /// Newton steps over both phases.
    pub iterations: usize,
    /// Duality-gap bound at the returned point (infinite if unknown).
    pub gap: f64,
    /// Objective at each central point of phase 2.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SdpSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    /// Newton-step budget per phase.
    pub max_iterations: usize,
    /// Upper cap on the phase-1 margin.
    pub initial_margin: f64,
    /// Box half-width applied to every decision variable.
    pub variable_bound: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-7,
            max_iterations: 200,
            initial_margin: 1.0,
            variable_bound: 1e4,
        }
    }
}

impl SdpSettings {
    fn validate(&self) -> Result<(), SdpError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.feas_tol) {
            return Err(SdpError::InvalidSettings("feas_tol must be positive"));
        }
        if !positive(self.gap_tol) {
            return Err(SdpError::InvalidSettings("gap_tol must be positive"));
        }
        if !positive(self.initial_margin) {
            return Err(SdpError::InvalidSettings("initial_margin must be positive"));
        }
        if !positive(self.variable_bound) {
            return Err(SdpError::InvalidSettings("variable_bound must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(SdpError::InvalidSettings("max_iterations must be positive"));
        }
        Ok(())
    }
}

/// Outcome of the margin-maximization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Result {
    pub z: Vec<f64>,
    /// Achieved margin at `z`; positive means strictly feasible.
    pub margin: f64,
    /// Upper bound on the best achievable margin.
    pub margin_upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

// ---------------------------------------------------------------------------
// Barrier machinery
// ---------------------------------------------------------------------------

/// Symmetric coefficient stored as its nonzero entries (both triangles).
#[derive(Debug, Clone)]
struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    fn from_dense(m: &Matrix) -> Option<Self> {
        let n = m.rows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                // Average the two triangles so the stored form is exactly symmetric.
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        (!entries.is_empty()).then_some(Self { entries })
    }

    fn add_scaled_to(&self, s: f64, m: &mut Matrix) {
        for &(i, j, v) in &self.entries {
            m[(i, j)] += s * v;
        }
    }

    /// `⟨self, a⟩ = tr(self·a)` for symmetric `a`.
    fn inner(&self, a: &Matrix) -> f64 {
        self.entries.iter().map(|&(i, j, v)| v * a[(i, j)]).sum()
    }
}

#[derive(Debug, Clone)]
struct BarrierBlock {
    f0: Matrix,
    /// (variable index, coefficient) for every variable the block depends on.
    coeffs: Vec<(usize, SparseSym)>,
}

impl BarrierBlock {
    fn eval(&self, x: &[f64]) -> Matrix {
        let mut m = self.f0.clone();
        for (var, c) in &self.coeffs {
            if x[*var] != 0.0 {
                c.add_scaled_to(x[*var], &mut m);
            }
        }
        m
    }
}

/// Scalar constraint `a0 + Σ a_i·x_i > 0`.
#[derive(Debug, Clone)]
struct LinIneq {
    a0: f64,
    terms: Vec<(usize, f64)>,
}

impl LinIneq {
    fn slack(&self, x: &[f64]) -> f64 {
        self.a0 + self.terms.iter().map(|&(i, a)| a * x[i]).sum::<f64>()
    }
}

struct Barrier {
    nvar: usize,
    blocks: Vec<BarrierBlock>,
    lin: Vec<LinIneq>,
    c: Vec<f64>,
}

enum CenterFailure {
    Budget,
    Numerical,
}

struct Factorization {
    chol: Vec<Matrix>,
    slacks: Vec<f64>,
}

impl Barrier {
    /// Barrier parameter: total order of all constraints.
    fn order(&self) -> f64 {
        (self.blocks.iter().map(|b| b.f0.rows()).sum::<usize>() + self.lin.len()) as f64
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    fn factor(&self, x: &[f64]) -> Option<Factorization> {
        let mut chol = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            chol.push(cholesky_unchecked(&b.eval(x))?);
        }
        let mut slacks = Vec::with_capacity(self.lin.len());
        for l in &self.lin {
            let s = l.slack(x);
            if !(s > 0.0) {
                return None;
            }
            slacks.push(s);
        }
        Some(Factorization { chol, slacks })
    }

    fn barrier_value(f: &Factorization) -> f64 {
        let logdet: f64 = f
            .chol
            .iter()
            .map(|l| (0..l.rows()).map(|i| 2.0 * l[(i, i)].ln()).sum::<f64>())
            .sum();
        let loglin: f64 = f.slacks.iter().map(|s| s.ln()).sum();
        -logdet - loglin
    }

    /// Gradient and Hessian of the barrier term alone.
    fn derivatives(&self, f: &Factorization) -> (Vec<f64>, Matrix) {
        let n = self.nvar;
        let mut g = vec![0.0; n];
        let mut h = Matrix::zeros(n, n);
        for (b, l) in self.blocks.iter().zip(&f.chol) {
            let w = chol_inverse(l);
            let s = w.rows();
            // A_k = W·F_k·W, accumulated from the sparse entries of F_k.
            let mut scaled: Vec<Matrix> = Vec::with_capacity(b.coeffs.len());
            for (var, c) in &b.coeffs {
                g[*var] -= c.inner(&w);
                let mut a = Matrix::zeros(s, s);
                for &(i, j, v) in &c.entries {
                    for p in 0..s {
                        let wpi = w[(p, i)] * v;
                        if wpi == 0.0 {
                            continue;
                        }
                        for q in 0..s {
                            a[(p, q)] += wpi * w[(j, q)];
                        }
                    }
                }
                scaled.push(a);
            }
            for (ki, (vk, _)) in b.coeffs.iter().enumerate() {
                for (vi, ci) in b.coeffs.iter().take(ki + 1) {
                    let val = ci.inner(&scaled[ki]);
                    h[(*vi, *vk)] += val;
                    if vi != vk {
                        h[(*vk, *vi)] += val;
                    }
                }
            }
        }
        for (l, s) in self.lin.iter().zip(&f.slacks) {
            for &(i, ai) in &l.terms {
                g[i] -= ai / s;
                for &(k, ak) in &l.terms {
                    h[(i, k)] += ai * ak / (s * s);
                }
            }
        }
        (g, h)
    }

    /// Damped Newton minimization of `tau·cᵀx + φ(x)` from a strictly
    /// feasible `x`. Stops early when `stop(x)` returns true.
    fn center(
        &self,
        x: &mut Vec<f64>,
        tau: f64,
        budget: &mut usize,
        steps: &mut usize,
        stop: &dyn Fn(&[f64]) -> bool,
    ) -> Result<(), CenterFailure> {
        let mut fact = self.factor(x).ok_or(CenterFailure::Numerical)?;
        loop {
            if stop(x) {
                return Ok(());
            }
            if *budget == 0 {
                return Err(CenterFailure::Budget);
            }
            let (gphi, h) = self.derivatives(&fact);
            let g: Vec<f64> = gphi
                .iter()
                .zip(&self.c)
                .map(|(gp, c)| tau * c + gp)
                .collect();
            let dx = newton_direction(&h, &g).ok_or(CenterFailure::Numerical)?;
            let decrement: f64 = -g.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>();
            if !decrement.is_finite() {
                return Err(CenterFailure::Numerical);
            }
            let f_cur = tau * self.objective(x) + Self::barrier_value(&fact);
            // Below the rounding floor of f the line search only sees noise.
            let floor = 1e-10_f64.max(64.0 * f64::EPSILON * f_cur.abs());
            if decrement <= 0.0 || decrement / 2.0 <= floor {
                return Ok(());
            }
            *budget -= 1;
            *steps += 1;

            let slope = -decrement;
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
                if trial == *x {
                    break;
                }
                if let Some(tf) = self.factor(&trial) {
                    let f_new = tau * self.objective(&trial) + Self::barrier_value(&tf);
                    if f_new <= f_cur + 0.01 * alpha * slope {
                        accepted = Some((trial, tf));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((trial, tf)) => {
                    *x = trial;
                    fact = tf;
                }
                // No progress possible at machine precision: treat as centered.
                None => return Ok(()),
            }
        }
    }

    /// Starting barrier weight that best balances objective and barrier
    /// gradients at `x`.
    fn initial_tau(&self, x: &[f64]) -> f64 {
        let Some(fact) = self.factor(x) else {
            return 1.0;
        };
        let (gphi, h) = self.derivatives(&fact);
        let (Some(hc), Some(hg)) = (
            newton_direction(&h, &self.c),
            newton_direction(&h, &gphi),
        ) else {
            return 1.0;
        };
        let num: f64 = -self.c.iter().zip(&hg).map(|(a, b)| a * b).sum::<f64>();
        let den: f64 = self.c.iter().zip(&hc).map(|(a, b)| a * b).sum::<f64>();
        let tau = num / den;
        if tau.is_finite() && tau > 0.0 {
            tau.clamp(1e-6, 1e6)
        } else {
            1.0
        }
    }
}

/// `H⁻¹·g` (the negated Newton step when `g` is a gradient), with small
/// diagonal regularization on failure.
fn newton_direction(h: &Matrix, g: &[f64]) -> Option<Vec<f64>> {
    let n = h.rows();
    if n == 0 {
        return Some(Vec::new());
    }
    let diag_max = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
    let mut reg = 0.0;
    for _ in 0..6 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += reg;
        }
        if let Some(l) = cholesky_unchecked(&hr) {
            let y = chol_solve(&l, g);
            if y.iter().all(|v| v.is_finite()) {
                return Some(y.into_iter().map(|v| -v).collect());
            }
        }
        reg = if reg == 0.0 {
            1e-12 * (diag_max + 1.0)
        } else {
            reg * 100.0
        };
    }
    None
}

fn chol_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// `(L·Lᵀ)⁻¹` from the Cholesky factor.
fn chol_inverse(l: &Matrix) -> Matrix {
    let n = l.rows();
    // Invert L (lower triangular) column by column.
    let mut linv = Matrix::zeros(n, n);
    for j in 0..n {
        linv[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[(i, k)] * linv[(k, j)];
            }
            linv[(i, j)] = s / l[(i, i)];
        }
    }
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..n {
                s += linv[(k, i)] * linv[(k, j)];
            }
            w[(i, j)] = s;
            w[(j, i)] = s;
        }
    }
    w
}

fn barrier_blocks(blocks: &[AffineBlock], with_margin_var: Option<usize>) -> Vec<BarrierBlock> {
    blocks
        .iter()
        .map(|b| {
            let mut coeffs: Vec<(usize, SparseSym)> = b
                .coeffs
                .iter()
                .enumerate()
                .filter_map(|(i, c)| SparseSym::from_dense(c).map(|s| (i, s)))
                .collect();
            if let Some(t) = with_margin_var {
                if let Some(neg_eye) = SparseSym::from_dense(&Matrix::identity(b.size).scale(-1.0)) {
                    coeffs.push((t, neg_eye));
                }
            }
            let mut f0 = b.f0.clone();
            f0.symmetrize();
            BarrierBlock { f0, coeffs }
        })
        .collect()
}

fn box_constraints(d: usize, bound: f64) -> Vec<LinIneq> {
    (0..d)
        .flat_map(|i| {
            [
                LinIneq {
                    a0: bound,
                    terms: vec![(i, -1.0)],
                },
                LinIneq {
                    a0: bound,
                    terms: vec![(i, 1.0)],
                },
            ]
        })
        .collect()
}

/// Phase-1 driver shared by `sdp_phase1` and `sdp_solve`.
///
/// With `stop_when_positive`, returns as soon as a centered iterate has a
/// positive margin.
fn run_phase1(
    blocks: &[AffineBlock],
    dimension: usize,
    settings: &SdpSettings,
    stop_when_positive: bool,
) -> Result<Phase1Result, SdpError> {
    let d = dimension;
    let t_var = d;
    let cap = settings.initial_margin;
    let mut lin = box_constraints(d, settings.variable_bound);
    lin.push(LinIneq {
        a0: cap,
        terms: vec![(t_var, -1.0)],
    });
    let mut c = vec![0.0; d + 1];
    c[t_var] = -1.0;
    let barrier = Barrier {
        nvar: d + 1,
        blocks: barrier_blocks(blocks, Some(t_var)),
        lin,
        c,
    };

    let z0 = vec![0.0; d];
    let start_margin = min_margin(blocks, &z0);
    let mut x = z0;
    let t0 = if start_margin.is_finite() {
        start_margin.min(cap) - 1.0 - 1e-3 * start_margin.abs()
    } else {
        return Err(SdpError::LinAlg(LinAlgError::Singular));
    };
    x.push(t0);

    let order = barrier.order();
    let mut tau = barrier.initial_tau(&x).max(1.0 / (1.0 + cap.abs()));
    let mut budget = settings.max_iterations;
    let mut steps = 0usize;
    let mu = 10.0;
    let mut converged = false;
    let mut margin_upper = f64::INFINITY;
    let stop_positive = |x: &[f64]| stop_when_positive && x[t_var] > 0.0;

    loop {
        match barrier.center(&mut x, tau, &mut budget, &mut steps, &stop_positive) {
            Ok(()) => {}
            Err(_) => break,
        }
        let t = x[t_var];
        let gap = order / tau;
        margin_upper = (t + gap).min(cap);
        if stop_positive(&x) {
            break;
        }
        if margin_upper < -settings.feas_tol && gap < 0.5 * (-margin_upper).max(settings.feas_tol) {
            converged = true;
            break;
        }
        if gap <= settings.gap_tol * (1.0 + t.abs()) {
            converged = true;
            break;
        }
        tau *= mu;
    }

    let z = x[..d].to_vec();
    let margin = min_margin(blocks, &z).min(cap);
    Ok(Phase1Result {
        z,
        margin,
        margin_upper: margin_upper.max(margin),
        iterations: steps,
        converged,
    })
}

/// Maximizes the uniform margin `t` with `F_j(z) ⪰ t·I` on every block,
/// `t ≤ initial_margin`. A positive margin certifies strict feasibility.
pub fn sdp_phase1(blocks: &[AffineBlock], settings: &SdpSettings) -> Result<Phase1Result, SdpError> {
    settings.validate()?;
    let d = blocks.first().map_or(0, |b| b.dimension());
    validate_blocks(blocks, d)?;
    run_phase1(blocks, d, settings, false)
}

/// Interior-point minimization of `objectiveᵀz` over the blocks.
pub fn sdp_solve(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution, SdpError> {
    settings.validate()?;
    problem.validate()?;
    let d = problem.dimension;

    let p1 = run_phase1(&problem.blocks, d, settings, true)?;
    let finish = |status, z: Vec<f64>, iterations, gap, history| {
        let objective_value = dot(&problem.objective, &z);
        SdpSolution {
            status,
            min_block_margin: problem.min_block_margin(&z),
            objective_value,
            z,
            iterations,
            gap,
            objective_history: history,
        }
    };

    if p1.margin <= 0.0 {
        let status = if p1.margin_upper < -settings.feas_tol {
            SdpStatus::Infeasible
        } else if p1.margin >= -settings.feas_tol {
            // Feasible but without interior: nothing left to optimize over.
            SdpStatus::Feasible
        } else if p1.converged {
            SdpStatus::Infeasible
        } else {
            SdpStatus::IterationLimit
        };
        return Ok(finish(status, p1.z, p1.iterations, f64::INFINITY, Vec::new()));
    }

    // Iterate on c/‖c‖∞ so the path, and with it the returned z, does not
    // depend on the objective's scale.
    let scale = problem.objective.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let objective_is_zero = scale == 0.0;
    let barrier = Barrier {
        nvar: d,
        blocks: barrier_blocks(&problem.blocks, None),
        lin: box_constraints(d, settings.variable_bound),
        c: if objective_is_zero {
            problem.objective.clone()
        } else {
            problem.objective.iter().map(|c| c / scale).collect()
        },
    };
    let mut x = p1.z;
    let order = barrier.order();
    let mut tau = barrier.initial_tau(&x);
    let mut budget = settings.max_iterations;
    let mut steps = 0usize;
    let mut history = Vec::new();
    let never = |_: &[f64]| false;

    loop {
        match barrier.center(&mut x, tau, &mut budget, &mut steps, &never) {
            Ok(()) => {}
            Err(CenterFailure::Budget) => {
                let gap = order / tau * scale;
                return Ok(finish(
                    SdpStatus::IterationLimit,
                    x,
                    p1.iterations + steps,
                    gap,
                    history,
                ));
            }
            Err(CenterFailure::Numerical) => {
                let gap = order / tau * scale;
                return Ok(finish(
                    SdpStatus::NumericalFailure,
                    x,
                    p1.iterations + steps,
                    gap,
                    history,
                ));
            }
        }
        history.push(dot(&problem.objective, &x));
        // Normalized gap; in original units this is at most
        // gap_tol·(1 + |objective|) whatever the scale.
        let gap = if objective_is_zero { 0.0 } else { order / tau };
        let obj = barrier.objective(&x);
        if gap <= settings.gap_tol * ((1.0 / scale).min(1.0) + obj.abs()) {
            return Ok(finish(
                SdpStatus::Optimal,
                x,
                p1.iterations + steps,
                gap * scale,
                history,
            ));
        }
        tau *= 10.0;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Convenience for building 1x1 and diagonal test blocks.
pub fn diag_block(f0: &[f64], coeffs: &[&[f64]]) -> Result<AffineBlock, SdpError> {
    AffineBlock::new(
        Matrix::from_diag(f0),
        coeffs.iter().map(|c| Matrix::from_diag(c)).collect(),
    )
}
