//! The cascaded CDC plan: placement, assignment, encoder matrices, decoders.
//!
//! For admissible (n, t) with 3t >= 2n and n > t, node c is block
//! B_c = {c, ..., c+t-1} mod n of the cyclic design; it stores files Z_c = B_c
//! and computes functions Q_c = B_c. For each IV group i (the index shared by
//! file w_i and function phi_i), the n-t nodes whose block excludes i each
//! multicast one coded combination of (v_{i,x}) and the t nodes whose block
//! contains i solve for their n-t missing IVs.
//!
//! All encoder systems are index rotations of the canonical group i = n-1,
//! whose (n-t) x (n-1) matrix has, in row j: ones on columns [j, n-t-1] and
//! [t-1, j+t-1], and a_m^j on column n-t+m-1 for the middle band. Receivers
//! split into five structural cases (two triangular, one pure Vandermonde,
//! two bordered-Vandermonde) solved exactly without elimination; a generic
//! Gaussian path over the same residual system serves as the oracle.

use std::collections::{BTreeMap, BTreeSet};

use num::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designs::{cyclic_blocks, Design, DesignError};
use crate::finite_field::{
    distinct_coefficients, solve_linear_system, FieldElement, FieldError, FieldMatrix, FieldSpec,
};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("constraint {name} violated: {detail}")]
    ConstraintViolation { name: &'static str, detail: String },
    #[error("coefficient list invalid: {0}")]
    BadCoefficients(String),
    #[error("node index {node} out of range [0, {max}]")]
    NodeOutOfRange { node: u32, max: u32 },
    #[error("file index {file} out of range [0, {max}]")]
    FileOutOfRange { file: u32, max: u32 },
    #[error("nothing to decode: block {node} excludes index {file}, so node {node} neither computes function {file} nor misses any IV of that group")]
    NothingMissing { node: u32, file: u32 },
    #[error("map phase incomplete: node {node} lacks local IV v[{q},{x}]")]
    IncompleteMapPhase { node: u32, q: u32, x: u32 },
    #[error("signal set for file {file} is incomplete: missing slot {slot}")]
    MissingSignal { file: u32, slot: u32 },
    #[error("signal set for file {file} has duplicate slot {slot}")]
    DuplicateSignal { file: u32, slot: u32 },
    #[error("signal metadata mismatch for file {file} slot {slot}: {detail}")]
    SignalMismatch { file: u32, slot: u32, detail: String },
    #[error("scheme invariant violated decoding (node {node}, file {file}): {detail}")]
    InvariantViolation {
        node: u32,
        file: u32,
        detail: String,
    },
    #[error("plan document invalid: {0}")]
    BadPlanDocument(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

// ---------------------------------------------------------------------------
// Parameters and plan
// ---------------------------------------------------------------------------

/// Admissible parameter pair plus the signal alphabet.
///
/// K = N = Q = n and r = s = t throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    n: u32,
    t: u32,
    field: FieldSpec,
}

impl SchemeParams {
    pub fn new(n: u32, t: u32, field: FieldSpec) -> Result<Self, SchemeError> {
        if t < 1 || n < 2 {
            return Err(SchemeError::ConstraintViolation {
                name: "n > t >= 1",
                detail: format!("n = {n}, t = {t}"),
            });
        }
        if n <= t {
            return Err(SchemeError::ConstraintViolation {
                name: "n > t",
                detail: format!("n = {n}, t = {t}"),
            });
        }
        if 3 * t < 2 * n {
            return Err(SchemeError::ConstraintViolation {
                name: "3t >= 2n",
                detail: format!("3t = {} < 2n = {}", 3 * t, 2 * n),
            });
        }
        let needed = (2 * t - n + 1) as u64;
        if field.order() < needed {
            return Err(SchemeError::ConstraintViolation {
                name: "2^T >= 2t - n + 1",
                detail: format!("2^{} = {} < {}", field.width_bits(), field.order(), needed),
            });
        }
        Ok(SchemeParams { n, t, field })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Computation load r = replication s = t.
    pub fn replication(&self) -> u32 {
        self.t
    }

    /// Length of the coefficient list (1, a_1, ..., a_{2t-1-n}).
    pub fn coeff_count(&self) -> u32 {
        2 * self.t - self.n
    }
}

/// An intermediate value key: function index q applied to file index x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IVKey {
    pub q: u32,
    pub x: u32,
}

/// One multicast symbol: row `slot` of the `file` group system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodedSignal {
    pub sender: u32,
    pub file: u32,
    pub slot: u32,
    pub payload: FieldElement,
}

/// Encoder for one IV group: who sends which row, and which IV index each
/// canonical column refers to. The matrix itself is shared by all groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEncoder {
    pub file: u32,
    pub senders: Vec<u32>,
    pub column_files: Vec<u32>,
    pub matrix: FieldMatrix,
}

/// The full (K, N, Q, r, s) plan, deterministic given (n, t, field).
#[derive(Debug, Clone)]
pub struct SchemePlan {
    params: SchemeParams,
    design: Design,
    placement: Vec<Vec<u32>>,
    assignment: Vec<Vec<u32>>,
    coeffs: Vec<FieldElement>,
    encoders: Vec<FileEncoder>,
}

impl SchemePlan {
    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn n(&self) -> u32 {
        self.params.n
    }

    pub fn t(&self) -> u32 {
        self.params.t
    }

    pub fn field(&self) -> FieldSpec {
        self.params.field
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    /// Files stored by node c (Z_c = B_c).
    pub fn placement(&self, node: u32) -> &[u32] {
        &self.placement[node as usize]
    }

    /// Functions assigned to node c (Q_c = B_c).
    pub fn assignment(&self, node: u32) -> &[u32] {
        &self.assignment[node as usize]
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn encoder(&self, file: u32) -> &FileEncoder {
        &self.encoders[file as usize]
    }

    pub fn stores(&self, node: u32, file: u32) -> bool {
        self.design.block_contains(node as usize, file)
    }

    pub fn computes(&self, node: u32, q: u32) -> bool {
        self.design.block_contains(node as usize, q)
    }

    /// Row index of `node` in the group-`file` system, if it is a sender:
    /// the j with node = (j + file + 1) mod n, when j < n - t.
    pub fn sender_row(&self, node: u32, file: u32) -> Option<u32> {
        let n = self.params.n;
        let rotation = (file + 1) % n;
        let j = (node + n - rotation) % n;
        (j < n - self.params.t).then_some(j)
    }

    /// Receiver position m in [n-t, n-1] of `node` in the group-`file`
    /// system, if the node needs that group.
    pub fn receiver_position(&self, node: u32, file: u32) -> Option<u32> {
        let n = self.params.n;
        let rotation = (file + 1) % n;
        let m = (node + n - rotation) % n;
        (m >= n - self.params.t).then_some(m)
    }

    fn check_node(&self, node: u32) -> Result<(), SchemeError> {
        if node >= self.params.n {
            return Err(SchemeError::NodeOutOfRange {
                node,
                max: self.params.n - 1,
            });
        }
        Ok(())
    }

    fn check_file(&self, file: u32) -> Result<(), SchemeError> {
        if file >= self.params.n {
            return Err(SchemeError::FileOutOfRange {
                file,
                max: self.params.n - 1,
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

fn validate_coeffs(n: u32, t: u32, coeffs: &[FieldElement]) -> Result<(), SchemeError> {
    let expected = (2 * t - n) as usize;
    if coeffs.len() != expected {
        return Err(SchemeError::BadCoefficients(format!(
            "expected {expected} coefficients (1, a_1, ..., a_{}), got {}",
            2 * t as i64 - 1 - n as i64,
            coeffs.len()
        )));
    }
    let spec = coeffs[0].spec();
    if coeffs[0] != spec.one() {
        return Err(SchemeError::BadCoefficients(
            "first coefficient must be 1".into(),
        ));
    }
    for (i, a) in coeffs.iter().enumerate() {
        if a.spec() != spec {
            return Err(SchemeError::BadCoefficients(
                "coefficients must share one field".into(),
            ));
        }
        if a.is_zero() {
            return Err(SchemeError::BadCoefficients(format!(
                "coefficient a_{i} is zero"
            )));
        }
        for b in &coeffs[i + 1..] {
            if a == b {
                return Err(SchemeError::BadCoefficients(format!(
                    "coefficients are not pairwise distinct (value {})",
                    a.value()
                )));
            }
        }
    }
    Ok(())
}

/// Entry (j, x) of the canonical group i = n-1 encoder matrix.
///
/// Row j is sender B_j's combination; its support is exactly B_j's stored
/// files [j, j+t-1]. Columns n-t-1 and t-1 carry constant 1, which the
/// middle band extends as a_0 = a_{2t-n} = 1.
fn canonical_coeff(
    n: u32,
    t: u32,
    coeffs: &[FieldElement],
    j: u32,
    x: u32,
) -> FieldElement {
    let spec = coeffs[0].spec();
    if x < j || x > j + t - 1 {
        return spec.zero();
    }
    if x < n - t || x >= t - 1 {
        return spec.one();
    }
    let m = (x - (n - t) + 1) as usize;
    coeffs[m].pow(j as u64)
}

/// The canonical (n-t) x (n-1) encoder matrix for group i = n-1.
pub fn encoder_matrix(
    n: u32,
    t: u32,
    coeffs: &[FieldElement],
) -> Result<FieldMatrix, SchemeError> {
    if t >= n || 3 * t < 2 * n {
        return Err(SchemeError::ConstraintViolation {
            name: "3t >= 2n and n > t",
            detail: format!("n = {n}, t = {t}"),
        });
    }
    validate_coeffs(n, t, coeffs)?;
    let spec = coeffs[0].spec();
    Ok(FieldMatrix::from_fn(
        spec,
        (n - t) as usize,
        (n - 1) as usize,
        |j, x| canonical_coeff(n, t, coeffs, j as u32, x as u32),
    )?)
}

/// Builds the full plan for (n, t): cyclic design, block placement and
/// assignment, ascending coefficient list, and one encoder per group.
pub fn build_scheme(n: u32, t: u32, field: FieldSpec) -> Result<SchemePlan, SchemeError> {
    let params = SchemeParams::new(n, t, field)?;
    let design = cyclic_blocks(n, t)?;
    let coeffs = distinct_coefficients(params.coeff_count() as u64, field)?;
    let canonical = encoder_matrix(n, t, &coeffs)?;
    let encoders = (0..n)
        .map(|file| {
            let rotation = (file + 1) % n;
            FileEncoder {
                file,
                senders: (0..n - t).map(|j| (j + rotation) % n).collect(),
                column_files: (0..n - 1).map(|x| (x + rotation) % n).collect(),
                matrix: canonical.clone(),
            }
        })
        .collect();
    let placement: Vec<Vec<u32>> = design.blocks().to_vec();
    Ok(SchemePlan {
        params,
        design: design.clone(),
        placement: placement.clone(),
        assignment: placement,
        coeffs,
        encoders,
    })
}

// ---------------------------------------------------------------------------
// Shuffle-phase operations
// ---------------------------------------------------------------------------

/// IVs node c needs but cannot compute locally: q in B_c, x not in B_c.
pub fn required_iv_set(plan: &SchemePlan, node: u32) -> Result<BTreeSet<IVKey>, SchemeError> {
    plan.check_node(node)?;
    let n = plan.n();
    let mut out = BTreeSet::new();
    for &q in plan.assignment(node) {
        for x in 0..n {
            if !plan.stores(node, x) {
                out.insert(IVKey { q, x });
            }
        }
    }
    Ok(out)
}

/// The IV keys node c can compute in the map phase: all q, stored x.
pub fn local_iv_domain(plan: &SchemePlan, node: u32) -> Result<BTreeSet<IVKey>, SchemeError> {
    plan.check_node(node)?;
    let n = plan.n();
    let mut out = BTreeSet::new();
    for q in 0..n {
        for &x in plan.placement(node) {
            out.insert(IVKey { q, x });
        }
    }
    Ok(out)
}

/// One coded signal per group the node does not store: the inner product of
/// the node's encoder row with its locally computed IVs of that group.
pub fn encode_signals(
    plan: &SchemePlan,
    node: u32,
    local_ivs: &BTreeMap<IVKey, FieldElement>,
) -> Result<Vec<CodedSignal>, SchemeError> {
    plan.check_node(node)?;
    let n = plan.n();
    let mut signals = Vec::with_capacity((n - plan.t()) as usize);
    for file in 0..n {
        let Some(slot) = plan.sender_row(node, file) else {
            continue;
        };
        let enc = plan.encoder(file);
        debug_assert_eq!(enc.senders[slot as usize], node);
        let mut payload = plan.field().zero();
        for x in 0..(n - 1) as usize {
            let coeff = enc.matrix.get(slot as usize, x);
            if coeff.is_zero() {
                continue;
            }
            let key = IVKey {
                q: file,
                x: enc.column_files[x],
            };
            let iv = local_ivs
                .get(&key)
                .ok_or(SchemeError::IncompleteMapPhase {
                    node,
                    q: key.q,
                    x: key.x,
                })?;
            payload = payload.add(&coeff.mul(iv)?)?;
        }
        signals.push(CodedSignal {
            sender: node,
            file,
            slot,
            payload,
        });
    }
    Ok(signals)
}

/// Structural shape of a receiver's residual system, by position m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeCase {
    /// m = n-t: unknowns form an upper-triangular all-ones system.
    UpperTriangular,
    /// n-t+1 <= m <= 2n-2t-2: triangular block bordered by a Vandermonde one.
    BorderedLow,
    /// 2n-2t-1 <= m <= t: pure Vandermonde in distinct generators.
    Vandermonde,
    /// t+1 <= m <= n-2: mirror image of the bordered-low case.
    BorderedHigh,
    /// m = n-1: lower-triangular all-ones system.
    LowerTriangular,
}

/// Case dispatch for receiver position m in [n-t, n-1]. The five ranges
/// partition the receiver positions; ranges can be empty for small n.
pub fn decode_case(n: u32, t: u32, m: u32) -> DecodeCase {
    debug_assert!((n - t..n).contains(&m));
    let (n, t, m) = (n as i64, t as i64, m as i64);
    if m == n - t {
        DecodeCase::UpperTriangular
    } else if m <= 2 * n - 2 * t - 2 {
        DecodeCase::BorderedLow
    } else if m <= t {
        DecodeCase::Vandermonde
    } else if m <= n - 2 {
        DecodeCase::BorderedHigh
    } else {
        DecodeCase::LowerTriangular
    }
}

/// Which decoder backs `decode_missing_ivs_with`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMethod {
    /// Case-dispatched triangular / Vandermonde solves.
    Structural,
    /// Generic exact Gaussian elimination over the same residual system.
    GaussianOracle,
}

/// Canonical columns of the group-`file` system that `node` cannot compute,
/// in ascending column order. Always the contiguous range [m+t-n, m-1].
pub fn unknown_columns(
    plan: &SchemePlan,
    node: u32,
    file: u32,
) -> Result<Vec<usize>, SchemeError> {
    plan.check_node(node)?;
    plan.check_file(file)?;
    let m = plan
        .receiver_position(node, file)
        .ok_or(SchemeError::NothingMissing { node, file })?;
    let (n, t) = (plan.n(), plan.t());
    let lo = (m + t - n) as usize;
    let hi = (m - 1) as usize;
    let cols: Vec<usize> = (lo..=hi).collect();
    debug_assert!(cols.iter().all(|&x| {
        let actual = plan.encoder(file).column_files[x];
        !plan.stores(node, actual)
    }));
    Ok(cols)
}

/// The (n-t) x (n-t) residual matrix a receiver must invert: the encoder
/// columns it cannot compute locally.
pub fn receiver_submatrix(
    plan: &SchemePlan,
    node: u32,
    file: u32,
) -> Result<FieldMatrix, SchemeError> {
    let cols = unknown_columns(plan, node, file)?;
    let enc = plan.encoder(file);
    let rows = enc.matrix.rows();
    Ok(FieldMatrix::from_fn(
        plan.field(),
        rows,
        cols.len(),
        |r, c| enc.matrix.get(r, cols[c]),
    )?)
}

/// Recovers the n-t missing IVs v_{file, x} of a receiver from the group's
/// n-t signals, subtracting locally known terms and solving the residual
/// system (structural case dispatch; see [`decode_missing_ivs_with`]).
pub fn decode_missing_ivs(
    plan: &SchemePlan,
    node: u32,
    file: u32,
    signals: &[CodedSignal],
    local_ivs: &BTreeMap<IVKey, FieldElement>,
) -> Result<BTreeMap<IVKey, FieldElement>, SchemeError> {
    decode_missing_ivs_with(plan, node, file, signals, local_ivs, DecodeMethod::Structural)
}

pub fn decode_missing_ivs_with(
    plan: &SchemePlan,
    node: u32,
    file: u32,
    signals: &[CodedSignal],
    local_ivs: &BTreeMap<IVKey, FieldElement>,
    method: DecodeMethod,
) -> Result<BTreeMap<IVKey, FieldElement>, SchemeError> {
    plan.check_node(node)?;
    plan.check_file(file)?;
    let (n, t) = (plan.n(), plan.t());
    let m = plan
        .receiver_position(node, file)
        .ok_or(SchemeError::NothingMissing { node, file })?;
    let enc = plan.encoder(file);
    let rows = (n - t) as usize;

    // Collect the group's signals by slot; callers may pass a full transcript.
    let mut by_slot: Vec<Option<&CodedSignal>> = vec![None; rows];
    for sig in signals.iter().filter(|s| s.file == file) {
        let slot = sig.slot as usize;
        if slot >= rows {
            return Err(SchemeError::SignalMismatch {
                file,
                slot: sig.slot,
                detail: format!("slot out of range [0, {}]", rows - 1),
            });
        }
        if by_slot[slot].is_some() {
            return Err(SchemeError::DuplicateSignal { file, slot: sig.slot });
        }
        if sig.sender != enc.senders[slot] {
            return Err(SchemeError::SignalMismatch {
                file,
                slot: sig.slot,
                detail: format!(
                    "sender {} does not match plan sender {}",
                    sig.sender, enc.senders[slot]
                ),
            });
        }
        if sig.payload.spec() != plan.field() {
            return Err(SchemeError::SignalMismatch {
                file,
                slot: sig.slot,
                detail: "payload field spec differs from plan field".into(),
            });
        }
        by_slot[slot] = Some(sig);
    }

    // Residuals: subtract every locally computable term from each signal.
    let unknowns = unknown_columns(plan, node, file)?;
    let unknown_set: BTreeSet<usize> = unknowns.iter().copied().collect();
    let mut residuals = Vec::with_capacity(rows);
    for (slot, maybe_sig) in by_slot.iter().enumerate() {
        let sig = maybe_sig.ok_or(SchemeError::MissingSignal {
            file,
            slot: slot as u32,
        })?;
        let mut acc = sig.payload;
        for x in 0..(n - 1) as usize {
            if unknown_set.contains(&x) {
                continue;
            }
            let coeff = enc.matrix.get(slot, x);
            if coeff.is_zero() {
                continue;
            }
            let key = IVKey {
                q: file,
                x: enc.column_files[x],
            };
            let iv = local_ivs
                .get(&key)
                .ok_or(SchemeError::IncompleteMapPhase {
                    node,
                    q: key.q,
                    x: key.x,
                })?;
            acc = acc.add(&coeff.mul(iv)?)?;
        }
        residuals.push(acc);
    }

    let solution = match method {
        DecodeMethod::GaussianOracle => {
            let sub = receiver_submatrix(plan, node, file)?;
            solve_linear_system(&sub, &residuals).map_err(|e| match e {
                FieldError::Singular { rank, dim } => SchemeError::InvariantViolation {
                    node,
                    file,
                    detail: format!("residual system singular, rank {rank} of {dim}"),
                },
                other => SchemeError::Field(other),
            })?
        }
        DecodeMethod::Structural => {
            solve_structural(plan, node, file, m, &residuals)?
        }
    };

    Ok(unknowns
        .iter()
        .zip(solution)
        .map(|(&x, v)| {
            (
                IVKey {
                    q: file,
                    x: enc.column_files[x],
                },
                v,
            )
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Structural solvers
// ---------------------------------------------------------------------------

/// Generator of canonical column x within the band [n-t-1, t-1]: the a-list
/// extended by a_{2t-n} = 1 at the right edge (the left edge is a_0 = 1).
fn band_generator(plan: &SchemePlan, x: usize) -> FieldElement {
    let (n, t) = (plan.n() as usize, plan.t() as usize);
    debug_assert!((n - t - 1..=t - 1).contains(&x));
    let idx = x - (n - t - 1);
    if idx == 2 * t - n {
        plan.field().one()
    } else {
        plan.coeffs()[idx]
    }
}

/// Solves sum_c gens[c]^(e0 + j) * u[c] = rhs[j] for j = 0..d-1, where the
/// generators are pairwise distinct and nonzero.
///
/// This is the dual Vandermonde problem, solved by the Bjorck-Pereyra
/// recurrences, which stay exact over GF(2^T): the only divisions are by
/// differences of distinct generators and by powers of nonzero generators.
fn solve_dual_vandermonde(
    gens: &[FieldElement],
    rhs: &[FieldElement],
    e0: u64,
) -> Result<Vec<FieldElement>, FieldError> {
    let d = gens.len();
    debug_assert_eq!(rhs.len(), d);
    let mut b: Vec<FieldElement> = rhs.to_vec();
    for k in 0..d.saturating_sub(1) {
        for i in (k + 1..d).rev() {
            b[i] = b[i].add(&gens[k].mul(&b[i - 1])?)?;
        }
    }
    for k in (0..d.saturating_sub(1)).rev() {
        for i in k + 1..d {
            let diff = gens[i].add(&gens[i - k - 1])?;
            b[i] = b[i].mul(&diff.inv()?)?;
        }
        for i in k..d - 1 {
            b[i] = b[i].add(&b[i + 1])?;
        }
    }
    if e0 > 0 {
        for (u, g) in b.iter_mut().zip(gens) {
            *u = u.mul(&g.pow(e0).inv()?)?;
        }
    }
    Ok(b)
}

/// Case-dispatched exact solve of the receiver's residual system. Returns
/// unknown values ordered by ascending canonical column [m+t-n, m-1].
fn solve_structural(
    plan: &SchemePlan,
    node: u32,
    file: u32,
    m: u32,
    residuals: &[FieldElement],
) -> Result<Vec<FieldElement>, SchemeError> {
    let (n, t) = (plan.n() as usize, plan.t() as usize);
    let m = m as usize;
    let d = n - t;
    let p = m + t - n; // first unknown column
    let fail = |e: FieldError| match e {
        FieldError::DivisionByZero(_) | FieldError::Singular { .. } => {
            SchemeError::InvariantViolation {
                node,
                file,
                detail: format!("structural solve hit a zero divisor: {e}"),
            }
        }
        other => SchemeError::Field(other),
    };
    match decode_case(plan.n(), plan.t(), m as u32) {
        DecodeCase::UpperTriangular => {
            // unknowns x in [0, n-t-1]; row j sums u_x for x >= j
            let mut u = vec![plan.field().zero(); d];
            for j in (0..d).rev() {
                let mut acc = residuals[j];
                for x in j + 1..d {
                    acc = acc.add(&u[x]).map_err(fail)?;
                }
                u[j] = acc;
            }
            Ok(u)
        }
        DecodeCase::LowerTriangular => {
            // unknowns x in [t-1, n-2]; row j sums the first j+1 of them
            let mut u = vec![plan.field().zero(); d];
            for j in 0..d {
                let mut acc = residuals[j];
                for k in 0..j {
                    acc = acc.add(&u[k]).map_err(fail)?;
                }
                u[j] = acc;
            }
            Ok(u)
        }
        DecodeCase::Vandermonde => {
            // unknowns sit inside the generator band; rows are powers 0..d-1
            let gens: Vec<FieldElement> = (p..m).map(|x| band_generator(plan, x)).collect();
            solve_dual_vandermonde(&gens, residuals, 0).map_err(fail)
        }
        DecodeCase::BorderedLow => {
            // Unknowns [p, n-t-1] lie in the all-ones triangle, [n-t, m-1] in
            // the generator band. Rows 0..=p see the whole triangle part, so
            // its sum U joins the band unknowns in a (p+1)-point Vandermonde
            // system with generators (1, a_1, ..., a_p); the remaining rows
            // then peel the triangle by back substitution.
            let band_gens: Vec<FieldElement> =
                (n - t..m).map(|x| band_generator(plan, x)).collect();
            debug_assert_eq!(band_gens.len(), p);
            let mut gens = vec![plan.field().one()];
            gens.extend_from_slice(&band_gens);
            let head = solve_dual_vandermonde(&gens, &residuals[..=p], 0).map_err(fail)?;
            let aggregate = head[0];
            let band_values = &head[1..];
            // u[x] for x in [p+1, n-t-1], from row x downward-up
            let mut tri = vec![plan.field().zero(); d - p]; // index x - p
            for j in (p + 1..d).rev() {
                let mut acc = residuals[j];
                for (g, v) in band_gens.iter().zip(band_values) {
                    acc = acc.add(&g.pow(j as u64).mul(v).map_err(fail)?).map_err(fail)?;
                }
                for x in j + 1..d {
                    acc = acc.add(&tri[x - p]).map_err(fail)?;
                }
                tri[j - p] = acc;
            }
            let mut first = aggregate;
            for x in p + 1..d {
                first = first.add(&tri[x - p]).map_err(fail)?;
            }
            tri[0] = first;
            tri.extend_from_slice(band_values);
            Ok(tri)
        }
        DecodeCase::BorderedHigh => {
            // Mirror image: unknowns [p, t-2] in the generator band,
            // [t-1, m-1] in the all-ones triangle. Rows [m-t, n-t-1] see the
            // whole triangle sum S'; shifted powers factor out exactly.
            let band_gens: Vec<FieldElement> =
                (p..t - 1).map(|x| band_generator(plan, x)).collect();
            let na = band_gens.len(); // = n - m - 1
            debug_assert_eq!(na, n - m - 1);
            let mut gens = band_gens.clone();
            gens.push(plan.field().one());
            let head = solve_dual_vandermonde(&gens, &residuals[m - t..], (m - t) as u64)
                .map_err(fail)?;
            let band_values = &head[..na];
            let aggregate = head[na];
            // u[x] for x in [t-1, m-2], from rows 0..m-t-1 upward
            let mut tri = vec![plan.field().zero(); m - t + 1]; // index x - (t-1)
            for j in 0..m - t {
                let mut acc = residuals[j];
                for (g, v) in band_gens.iter().zip(band_values) {
                    acc = acc.add(&g.pow(j as u64).mul(v).map_err(fail)?).map_err(fail)?;
                }
                for k in 0..j {
                    acc = acc.add(&tri[k]).map_err(fail)?;
                }
                tri[j] = acc;
            }
            let mut last = aggregate;
            for k in 0..m - t {
                last = last.add(&tri[k]).map_err(fail)?;
            }
            tri[m - t] = last;
            let mut out = band_values.to_vec();
            out.extend_from_slice(&tri);
            Ok(out)
        }
    }
}

/// Exact communication load of the plan: (n - t) / n.
pub fn communication_load(plan: &SchemePlan) -> BigRational {
    BigRational::new(
        ((plan.n() - plan.t()) as i64).into(),
        (plan.n() as i64).into(),
    )
}

// ---------------------------------------------------------------------------
// Symbolic rendering
// ---------------------------------------------------------------------------

/// The signal of (sender, file) as a symbolic sum like
/// `v[5,1] + a1*v[5,2] + v[5,3] + v[5,4]`, in canonical column order.
pub fn signal_expression(
    plan: &SchemePlan,
    sender: u32,
    file: u32,
) -> Result<String, SchemeError> {
    plan.check_node(sender)?;
    plan.check_file(file)?;
    let (n, t) = (plan.n(), plan.t());
    let Some(j) = plan.sender_row(sender, file) else {
        return Err(SchemeError::SignalMismatch {
            file,
            slot: 0,
            detail: format!("node {sender} stores file {file} and sends nothing for it"),
        });
    };
    let enc = plan.encoder(file);
    let mut terms = Vec::new();
    for x in 0..n - 1 {
        if x < j || x > j + t - 1 {
            continue;
        }
        let iv = format!("v[{},{}]", file, enc.column_files[x as usize]);
        if x < n - t || x >= t - 1 {
            terms.push(iv);
        } else {
            let m = x - (n - t) + 1;
            match j {
                0 => terms.push(iv),
                1 => terms.push(format!("a{m}*{iv}")),
                _ => terms.push(format!("a{m}^{j}*{iv}")),
            }
        }
    }
    Ok(terms.join(" + "))
}

// ---------------------------------------------------------------------------
// Serialization (schema_version 1)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<u16>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EncoderDoc {
    file: u32,
    senders: Vec<u32>,
    column_files: Vec<u32>,
    matrix: MatrixDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanDoc {
    schema_version: u32,
    params: SchemeParams,
    blocks: Vec<Vec<u32>>,
    placement: Vec<Vec<u32>>,
    assignment: Vec<Vec<u32>>,
    coeffs: Vec<u16>,
    encoders: Vec<EncoderDoc>,
}

impl SchemePlan {
    pub fn to_json(&self) -> String {
        let doc = PlanDoc {
            schema_version: 1,
            params: self.params,
            blocks: self.design.blocks().to_vec(),
            placement: self.placement.clone(),
            assignment: self.assignment.clone(),
            coeffs: self.coeffs.iter().map(|c| c.value()).collect(),
            encoders: self
                .encoders
                .iter()
                .map(|e| EncoderDoc {
                    file: e.file,
                    senders: e.senders.clone(),
                    column_files: e.column_files.clone(),
                    matrix: MatrixDoc {
                        rows: e.matrix.rows(),
                        cols: e.matrix.cols(),
                        entries: (0..e.matrix.rows()).map(|r| e.matrix.row_values(r)).collect(),
                    },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("plan serialization cannot fail")
    }

    /// Parses and fully revalidates a plan document: the design must be the
    /// cyclic one, placement and assignment must equal the blocks, and the
    /// encoders must match the matrices the coefficient list generates.
    pub fn from_json(text: &str) -> Result<Self, SchemeError> {
        let doc: PlanDoc = serde_json::from_str(text)
            .map_err(|e| SchemeError::BadPlanDocument(e.to_string()))?;
        if doc.schema_version != 1 {
            return Err(SchemeError::BadPlanDocument(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        let params = SchemeParams::new(doc.params.n, doc.params.t, doc.params.field)?;
        let field = params.field();
        let coeffs: Vec<FieldElement> = doc
            .coeffs
            .iter()
            .map(|&v| field.element(v as u64))
            .collect::<Result<_, _>>()?;
        let rebuilt = {
            let mut plan = build_scheme(params.n(), params.t(), field)?;
            if coeffs != plan.coeffs {
                validate_coeffs(params.n(), params.t(), &coeffs)?;
                let canonical = encoder_matrix(params.n(), params.t(), &coeffs)?;
                for enc in &mut plan.encoders {
                    enc.matrix = canonical.clone();
                }
                plan.coeffs = coeffs;
            }
            plan
        };
        let same_blocks = rebuilt.design.blocks() == doc.blocks.as_slice()
            && rebuilt.placement == doc.placement
            && rebuilt.assignment == doc.assignment;
        if !same_blocks {
            return Err(SchemeError::BadPlanDocument(
                "blocks, placement, and assignment must equal the cyclic design".into(),
            ));
        }
        for (enc, enc_doc) in rebuilt.encoders.iter().zip(&doc.encoders) {
            let matrix_entries: Vec<Vec<u16>> = (0..enc.matrix.rows())
                .map(|r| enc.matrix.row_values(r))
                .collect();
            if enc.file != enc_doc.file
                || enc.senders != enc_doc.senders
                || enc.column_files != enc_doc.column_files
                || matrix_entries != enc_doc.matrix.entries
            {
                return Err(SchemeError::BadPlanDocument(format!(
                    "encoder for file {} does not match its coefficient list",
                    enc_doc.file
                )));
            }
        }
        Ok(rebuilt)
    }
}
