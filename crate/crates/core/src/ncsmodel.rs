//! Switched plants over a lossy link and the LMIs that certify them.
//!
//! A drop-count-`η` interval between two effective packets maps the
//! plant state by
//!
//! ```text
//! x(i_{m+1}) = (F^η + Σ_{t=0}^{η-1} F^t·G·K_{η-t}) · x(i_m)
//! ```
//!
//! and stacking the last `N_drop` effective states gives the augmented
//! map `Γ(i_{m+1}) = Φ_{l,η}·Γ(i_m)` with the closed-loop block in the top
//! left and a block shift below it.

use thiserror::Error;

use crate::densela::{self, cholesky, eig_sym, is_schur_stable, matmul, LinAlgError, Matrix};
use crate::sdp::{sdp_phase1, AffineBlock, SdpError, SdpSettings};

/// Default strictness margin for the strict matrix inequalities.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("drop count {eta} outside 1..={n_drop}")]
    EtaOutOfRange { eta: usize, n_drop: usize },
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Continuous-time mode `ẋ = A·x + B·u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousMode {
    pub a: Matrix,
    pub b: Matrix,
    pub label: String,
}

impl ContinuousMode {
    pub fn new(a: Matrix, b: Matrix, label: impl Into<String>) -> Result<Self, ModelError> {
        let label = label.into();
        if !a.is_square() {
            return Err(ModelError::InvalidPlant(format!("mode {label}: A is not square")));
        }
        if b.rows() != a.rows() {
            return Err(ModelError::InvalidPlant(format!(
                "mode {label}: B has {} rows, A has {}",
                b.rows(),
                a.rows()
            )));
        }
        Ok(Self { a, b, label })
    }
}

/// Discrete-time mode `x(k+1) = F·x(k) + G·u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantMode {
    pub f: Matrix,
    pub g: Matrix,
    pub label: String,
}

impl PlantMode {
    pub fn new(f: Matrix, g: Matrix, label: impl Into<String>) -> Result<Self, ModelError> {
        let label = label.into();
        if !f.is_square() {
            return Err(ModelError::InvalidPlant(format!("mode {label}: F is not square")));
        }
        if g.rows() != f.rows() {
            return Err(ModelError::InvalidPlant(format!(
                "mode {label}: G has {} rows, F has {}",
                g.rows(),
                f.rows()
            )));
        }
        Ok(Self { f, g, label })
    }

    pub fn states(&self) -> usize {
        self.f.rows()
    }

    pub fn inputs(&self) -> usize {
        self.g.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedPlant {
    modes: Vec<PlantMode>,
    sample_period: f64,
    n_drop: usize,
}

impl SwitchedPlant {
    pub fn new(modes: Vec<PlantMode>, sample_period: f64, n_drop: usize) -> Result<Self, ModelError> {
        let first = modes
            .first()
            .ok_or_else(|| ModelError::InvalidPlant("at least one mode is required".into()))?;
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(ModelError::InvalidPlant(format!(
                "sample_period must be positive, got {sample_period}"
            )));
        }
        if n_drop == 0 {
            return Err(ModelError::InvalidPlant("n_drop must be at least 1".into()));
        }
        let (n, m) = (first.states(), first.inputs());
        for mode in &modes {
            if mode.states() != n || mode.inputs() != m {
                return Err(ModelError::InvalidPlant(format!(
                    "mode {} is {}x{}, expected {n}x{m}",
                    mode.label,
                    mode.states(),
                    mode.inputs()
                )));
            }
        }
        Ok(Self {
            modes,
            sample_period,
            n_drop,
        })
    }

    pub fn modes(&self) -> &[PlantMode] {
        &self.modes
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn n_drop(&self) -> usize {
        self.n_drop
    }

    pub fn states(&self) -> usize {
        self.modes[0].states()
    }

    pub fn inputs(&self) -> usize {
        self.modes[0].inputs()
    }

    /// Order of the augmented state, `n·N_drop`.
    pub fn augmented_order(&self) -> usize {
        self.states() * self.n_drop
    }
}

/// Predictive gains `K_1..K_{N_drop}`; `K_q` is applied `q - 1` steps
/// after the packet that carried it.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    gains: Vec<Matrix>,
}

impl GainSchedule {
    pub fn new(gains: Vec<Matrix>) -> Result<Self, ModelError> {
        let first = gains
            .first()
            .ok_or_else(|| ModelError::DimensionMismatch("gain schedule is empty".into()))?;
        let shape = first.shape();
        if let Some((q, k)) = gains.iter().enumerate().find(|(_, k)| k.shape() != shape) {
            return Err(ModelError::DimensionMismatch(format!(
                "K_{} is {}x{}, K_1 is {}x{}",
                q + 1,
                k.rows(),
                k.cols(),
                shape.0,
                shape.1
            )));
        }
        Ok(Self { gains })
    }

    pub fn zeros(plant: &SwitchedPlant) -> Self {
        Self {
            gains: vec![Matrix::zeros(plant.inputs(), plant.states()); plant.n_drop()],
        }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// `K_q` with 1-based `q`.
    pub fn gain(&self, q: usize) -> &Matrix {
        &self.gains[q - 1]
    }

    pub fn gains(&self) -> &[Matrix] {
        &self.gains
    }

    pub fn check_compatible(&self, plant: &SwitchedPlant) -> Result<(), ModelError> {
        if self.gains.len() != plant.n_drop() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} gains for n_drop = {}",
                self.gains.len(),
                plant.n_drop()
            )));
        }
        let expected = (plant.inputs(), plant.states());
        if self.gains[0].shape() != expected {
            return Err(ModelError::DimensionMismatch(format!(
                "gains are {}x{}, plant needs {}x{}",
                self.gains[0].rows(),
                self.gains[0].cols(),
                expected.0,
                expected.1
            )));
        }
        Ok(())
    }
}

/// Zero-order-hold discretization through one exponential of the
/// augmented matrix `[[A, B], [0, 0]]·h`, whose top row of blocks is
/// `[F, G]`.
pub fn discretize(mode: &ContinuousMode, h: f64) -> Result<PlantMode, ModelError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(ModelError::InvalidPlant(format!("sample period must be positive, got {h}")));
    }
    let n = mode.a.rows();
    let m = mode.b.cols();
    let mut aug = Matrix::zeros(n + m, n + m);
    aug.set_block(0, 0, &mode.a.scale(h));
    aug.set_block(0, n, &mode.b.scale(h));
    let e = densela::matexp(&aug)?;
    PlantMode::new(e.block(0, 0, n, n), e.block(0, n, n, m), mode.label.clone())
}

/// `F^η + Σ_{t=0}^{η-1} F^t·G·K_{η-t}`.
pub fn closed_loop_top_block(mode: &PlantMode, gains: &GainSchedule, eta: usize) -> Result<Matrix, ModelError> {
    if eta == 0 || eta > gains.len() {
        return Err(ModelError::EtaOutOfRange {
            eta,
            n_drop: gains.len(),
        });
    }
    if gains.gain(1).shape() != (mode.inputs(), mode.states()) {
        return Err(ModelError::DimensionMismatch(format!(
            "gain is {}x{}, mode {} needs {}x{}",
            gains.gain(1).rows(),
            gains.gain(1).cols(),
            mode.label,
            mode.inputs(),
            mode.states()
        )));
    }
    let mut top = mode.f.pow(eta as u32)?;
    let mut f_t = Matrix::identity(mode.states());
    for t in 0..eta {
        let term = matmul(&matmul(&f_t, &mode.g)?, gains.gain(eta - t))?;
        top.axpy(1.0, &term);
        f_t = matmul(&f_t, &mode.f)?;
    }
    Ok(top)
}

/// Places `top` in the top-left corner of an `nN × nN` block shift.
fn augment(top: &Matrix, n_drop: usize) -> Matrix {
    let n = top.rows();
    let big = n * n_drop;
    let mut phi = Matrix::zeros(big, big);
    phi.set_block(0, 0, top);
    for k in 1..n_drop {
        for d in 0..n {
            phi[(k * n + d, (k - 1) * n + d)] = 1.0;
        }
    }
    phi
}

/// All `Φ_{l,η}` for a plant and gain schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedClosedLoop {
    n: usize,
    n_drop: usize,
    /// `phis[l][η - 1]`.
    phis: Vec<Vec<Matrix>>,
}

impl AugmentedClosedLoop {
    /// `Φ` for 0-based mode `l` and drop count `eta ∈ 1..=N_drop`.
    pub fn phi(&self, mode: usize, eta: usize) -> &Matrix {
        &self.phis[mode][eta - 1]
    }

    pub fn modes(&self) -> usize {
        self.phis.len()
    }

    pub fn n_drop(&self) -> usize {
        self.n_drop
    }

    pub fn states(&self) -> usize {
        self.n
    }

    /// Iterates `((mode, eta), Φ)` in mode-major order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &Matrix)> {
        self.phis
            .iter()
            .enumerate()
            .flat_map(|(l, row)| row.iter().enumerate().map(move |(i, phi)| ((l, i + 1), phi)))
    }
}

pub fn build_phi(plant: &SwitchedPlant, gains: &GainSchedule) -> Result<AugmentedClosedLoop, ModelError> {
    gains.check_compatible(plant)?;
    let n_drop = plant.n_drop();
    let phis = plant
        .modes()
        .iter()
        .map(|mode| {
            (1..=n_drop)
                .map(|eta| Ok(augment(&closed_loop_top_block(mode, gains, eta)?, n_drop)))
                .collect::<Result<Vec<_>, ModelError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AugmentedClosedLoop {
        n: plant.states(),
        n_drop,
        phis,
    })
}

/// Symmetric basis matrix for the upper-triangle entry `k` of an
/// `order × order` matrix (row-major over `i ≤ j`).
fn sym_basis(order: usize, i: usize, j: usize) -> Matrix {
    let mut e = Matrix::zeros(order, order);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

fn upper_pairs(order: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..order).flat_map(move |i| (i..order).map(move |j| (i, j)))
}

fn sym_from_upper(order: usize, values: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(order, order);
    for ((i, j), &v) in upper_pairs(order).zip(values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

fn upper_of(m: &Matrix) -> Vec<f64> {
    upper_pairs(m.rows()).map(|(i, j)| m[(i, j)]).collect()
}

/// A common quadratic Lyapunov function for every `Φ_{l,η}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub p: Matrix,
    /// Largest eigenvalue of `ΦᵀPΦ − P` over all pairs; negative when valid.
    pub worst_margin: f64,
    /// `((mode, eta), Schur stable)` for every pair.
    pub per_pair_schur: Vec<((usize, usize), bool)>,
    pub phase1_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationFailure {
    pub phase1_margin: f64,
    /// `ΦᵀPΦ − P` margin at the best `P` found, for diagnostics.
    pub worst_margin: f64,
    pub per_pair_schur: Vec<((usize, usize), bool)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verification {
    Certified(StabilityCertificate),
    Failed(VerificationFailure),
}

impl Verification {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verification::Certified(_))
    }

    pub fn certificate(&self) -> Option<&StabilityCertificate> {
        match self {
            Verification::Certified(c) => Some(c),
            Verification::Failed(_) => None,
        }
    }

    pub fn per_pair_schur(&self) -> &[((usize, usize), bool)] {
        match self {
            Verification::Certified(c) => &c.per_pair_schur,
            Verification::Failed(f) => &f.per_pair_schur,
        }
    }

    pub fn worst_margin(&self) -> f64 {
        match self {
            Verification::Certified(c) => c.worst_margin,
            Verification::Failed(f) => f.worst_margin,
        }
    }

    pub fn phase1_margin(&self) -> f64 {
        match self {
            Verification::Certified(c) => c.phase1_margin,
            Verification::Failed(f) => f.phase1_margin,
        }
    }
}

/// Largest eigenvalue of `ΦᵀPΦ − P` over every pair, recomputed densely.
pub fn lyapunov_margin(closed_loop: &AugmentedClosedLoop, p: &Matrix) -> Result<f64, ModelError> {
    let mut worst = f64::NEG_INFINITY;
    for (_, phi) in closed_loop.iter() {
        let mut d = matmul(&matmul(&phi.transpose(), p)?, phi)?.sub(p)?;
        d.symmetrize();
        worst = worst.max(eig_sym(&d)?.max());
    }
    Ok(worst)
}

/// Searches for `P ⪰ ε·I` with `Φᵀ P Φ − P ⪯ −ε·I` for every pair.
pub fn verify_stability(
    plant: &SwitchedPlant,
    gains: &GainSchedule,
    epsilon: f64,
    settings: &SdpSettings,
) -> Result<Verification, ModelError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ModelError::InvalidEpsilon(epsilon));
    }
    let closed_loop = build_phi(plant, gains)?;
    let order = plant.augmented_order();
    let basis: Vec<Matrix> = upper_pairs(order).map(|(i, j)| sym_basis(order, i, j)).collect();
    let shift = Matrix::identity(order).scale(-epsilon);

    let mut blocks = Vec::with_capacity(1 + closed_loop.modes() * plant.n_drop());
    blocks.push(AffineBlock::new(shift.clone(), basis.clone())?);
    for (_, phi) in closed_loop.iter() {
        let phi_t = phi.transpose();
        let coeffs = basis
            .iter()
            .map(|e| {
                let mut c = e.sub(&matmul(&matmul(&phi_t, e)?, phi)?)?;
                c.symmetrize();
                Ok(c)
            })
            .collect::<Result<Vec<_>, LinAlgError>>()?;
        blocks.push(AffineBlock::new(shift.clone(), coeffs)?);
    }

    let phase1 = sdp_phase1(&blocks, settings)?;
    let p = sym_from_upper(order, &phase1.z);
    let worst_margin = lyapunov_margin(&closed_loop, &p)?;
    let per_pair_schur = closed_loop
        .iter()
        .map(|(key, phi)| (key, is_schur_stable(phi)))
        .collect();

    let certified = phase1.margin > 0.0 && worst_margin < 0.0 && cholesky(&p).is_ok();
    Ok(if certified {
        Verification::Certified(StabilityCertificate {
            p,
            worst_margin,
            per_pair_schur,
            phase1_margin: phase1.margin,
        })
    } else {
        Verification::Failed(VerificationFailure {
            phase1_margin: phase1.margin,
            worst_margin,
            per_pair_schur,
        })
    })
}

/// Layout of the synthesis decision vector
/// `z = (upper(P), upper(Q), K_1, …, K_{N_drop})`, gains row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableMap {
    pub states: usize,
    pub inputs: usize,
    pub n_drop: usize,
}

impl VariableMap {
    pub fn for_plant(plant: &SwitchedPlant) -> Self {
        Self {
            states: plant.states(),
            inputs: plant.inputs(),
            n_drop: plant.n_drop(),
        }
    }

    pub fn order(&self) -> usize {
        self.states * self.n_drop
    }

    pub fn sym_count(&self) -> usize {
        let o = self.order();
        o * (o + 1) / 2
    }

    pub fn gain_count(&self) -> usize {
        self.inputs * self.states * self.n_drop
    }

    pub fn dimension(&self) -> usize {
        2 * self.sym_count() + self.gain_count()
    }

    pub fn p_offset(&self) -> usize {
        0
    }

    pub fn q_offset(&self) -> usize {
        self.sym_count()
    }

    /// Index of `K_q[row, col]`, 1-based `q`.
    pub fn gain_index(&self, q: usize, row: usize, col: usize) -> usize {
        2 * self.sym_count() + (q - 1) * self.inputs * self.states + row * self.states + col
    }

    pub fn extract(&self, z: &[f64]) -> (Matrix, Matrix, GainSchedule) {
        assert_eq!(z.len(), self.dimension(), "decision vector length");
        let s = self.sym_count();
        let p = sym_from_upper(self.order(), &z[..s]);
        let q = sym_from_upper(self.order(), &z[s..2 * s]);
        let per_gain = self.inputs * self.states;
        let gains = (0..self.n_drop)
            .map(|k| {
                let start = 2 * s + k * per_gain;
                Matrix::new(self.inputs, self.states, z[start..start + per_gain].to_vec())
                    .expect("finite decision vector")
            })
            .collect();
        (p, q, GainSchedule { gains })
    }

    pub fn pack(&self, p: &Matrix, q: &Matrix, gains: &GainSchedule) -> Vec<f64> {
        let mut z = upper_of(p);
        z.extend(upper_of(q));
        for k in gains.gains() {
            z.extend_from_slice(k.as_slice());
        }
        z
    }

    /// Objective coefficients of `trace(P·Q_k) + trace(P_k·Q)`.
    pub fn linearized_trace_objective(&self, p_k: &Matrix, q_k: &Matrix) -> Vec<f64> {
        let mut c = vec![0.0; self.dimension()];
        let s = self.sym_count();
        for (idx, (i, j)) in upper_pairs(self.order()).enumerate() {
            let w = if i == j { 1.0 } else { 2.0 };
            c[idx] = w * q_k[(i, j)];
            c[s + idx] = w * p_k[(i, j)];
        }
        c
    }
}

/// LMIs of the synthesis problem, all affine in the decision vector:
///
/// - per `(l, η)`: `[P, −Φᵀ; −Φ, Q] − ε·I ⪰ 0`
/// - `[P, I; I, Q] ⪰ 0`
/// - `P − ε·I ⪰ 0`, `Q − ε·I ⪰ 0`
pub fn assemble_synthesis_blocks(
    plant: &SwitchedPlant,
    epsilon: f64,
) -> Result<(Vec<AffineBlock>, VariableMap), ModelError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ModelError::InvalidEpsilon(epsilon));
    }
    let map = VariableMap::for_plant(plant);
    let (n, m, n_drop) = (map.states, map.inputs, map.n_drop);
    let order = map.order();
    let d = map.dimension();
    let big = 2 * order;

    let sym: Vec<Matrix> = upper_pairs(order).map(|(i, j)| sym_basis(order, i, j)).collect();
    let lifted = |e: &Matrix, off: usize, size: usize| {
        let mut b = Matrix::zeros(size, size);
        b.set_block(off, off, e);
        b
    };

    let mut blocks = Vec::new();
    let zero_gains = GainSchedule::zeros(plant);
    for mode in plant.modes() {
        // F^t·G for t = 0..N_drop-1.
        let mut fg = Vec::with_capacity(n_drop);
        let mut f_t = Matrix::identity(n);
        for _ in 0..n_drop {
            fg.push(matmul(&f_t, &mode.g)?);
            f_t = matmul(&f_t, &mode.f)?;
        }
        for eta in 1..=n_drop {
            let phi0 = augment(&closed_loop_top_block(mode, &zero_gains, eta)?, n_drop);
            let mut f0 = Matrix::identity(big).scale(-epsilon);
            let neg = phi0.scale(-1.0);
            f0.set_block(order, 0, &neg);
            f0.set_block(0, order, &neg.transpose());

            let mut coeffs = vec![Matrix::zeros(big, big); d];
            for (k, e) in sym.iter().enumerate() {
                coeffs[map.p_offset() + k] = lifted(e, 0, big);
                coeffs[map.q_offset() + k] = lifted(e, order, big);
            }
            // K_q enters Φ's top-left block through F^{η-q}·G, for q ≤ η.
            for q in 1..=eta {
                let fgq = &fg[eta - q];
                for row in 0..m {
                    for col in 0..n {
                        let mut c = Matrix::zeros(big, big);
                        for r in 0..n {
                            let v = -fgq[(r, row)];
                            c[(order + r, col)] = v;
                            c[(col, order + r)] = v;
                        }
                        coeffs[map.gain_index(q, row, col)] = c;
                    }
                }
            }
            blocks.push(AffineBlock::new(f0, coeffs)?);
        }
    }

    let mut coupling = Matrix::zeros(big, big);
    coupling.set_block(0, order, &Matrix::identity(order));
    coupling.set_block(order, 0, &Matrix::identity(order));
    let mut coeffs = vec![Matrix::zeros(big, big); d];
    for (k, e) in sym.iter().enumerate() {
        coeffs[map.p_offset() + k] = lifted(e, 0, big);
        coeffs[map.q_offset() + k] = lifted(e, order, big);
    }
    blocks.push(AffineBlock::new(coupling, coeffs)?);

    for offset in [map.p_offset(), map.q_offset()] {
        let mut coeffs = vec![Matrix::zeros(order, order); d];
        for (k, e) in sym.iter().enumerate() {
            coeffs[offset + k] = e.clone();
        }
        blocks.push(AffineBlock::new(Matrix::identity(order).scale(-epsilon), coeffs)?);
    }
    Ok((blocks, map))
}

/// `V = Γᵀ·P·Γ`.
pub fn lyapunov_value(p: &Matrix, gamma: &[f64]) -> Result<f64, ModelError> {
    if !p.is_square() || p.rows() != gamma.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "P is {}x{}, Γ has length {}",
            p.rows(),
            p.cols(),
            gamma.len()
        )));
    }
    let pg = p.mul_vec(gamma);
    Ok(gamma.iter().zip(&pg).map(|(a, b)| a * b).sum())
}
