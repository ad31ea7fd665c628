//! Exact arithmetic and linear algebra over GF(2^T) in polynomial basis.
//!
//! Elements are bit patterns of polynomials over GF(2) reduced modulo an
//! irreducible polynomial of degree T. Addition is XOR, multiplication is
//! carry-less shift-and-add with reduction. Everything is exact; the solver
//! needs no numerical pivoting.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("field width must be in [1, 16], got {0}")]
    InvalidWidth(u32),
    #[error("reduction polynomial {poly:#x} does not have degree {width}")]
    WrongDegree { poly: u32, width: u32 },
    #[error("reduction polynomial {poly:#x} is reducible over GF(2) (divisible by {divisor:#x})")]
    Reducible { poly: u32, divisor: u32 },
    #[error("value {value} out of range for {spec}")]
    ValueOutOfRange { value: u64, spec: FieldSpec },
    #[error("field spec mismatch: {left} vs {right}")]
    SpecMismatch { left: FieldSpec, right: FieldSpec },
    #[error("division by zero in {0}")]
    DivisionByZero(FieldSpec),
    #[error("singular matrix: rank {rank} < dimension {dim}")]
    Singular { rank: usize, dim: usize },
    #[error("field too small: need {requested} distinct nonzero elements, {spec} has {available}")]
    FieldTooSmall {
        requested: u64,
        available: u64,
        spec: FieldSpec,
    },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
}

/// Degree T and reduction polynomial of a binary field GF(2^T).
///
/// The polynomial is stored as a bit pattern with bit T set, e.g.
/// `x^8 + x^4 + x^3 + x + 1` is `0x11B`. Irreducibility is checked at
/// construction by exhaustive trial division (T <= 16 keeps this instant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    width_bits: u32,
    reduction_poly: u32,
}

/// Known irreducible polynomials, index T-1 for T in [1, 16].
const DEFAULT_POLYS: [u32; 16] = [
    0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11B, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

impl FieldSpec {
    pub fn new(width_bits: u32, reduction_poly: u32) -> Result<Self, FieldError> {
        if !(1..=16).contains(&width_bits) {
            return Err(FieldError::InvalidWidth(width_bits));
        }
        if reduction_poly >> width_bits != 1 {
            return Err(FieldError::WrongDegree {
                poly: reduction_poly,
                width: width_bits,
            });
        }
        if let Some(divisor) = find_divisor(reduction_poly, width_bits) {
            return Err(FieldError::Reducible {
                poly: reduction_poly,
                divisor,
            });
        }
        Ok(FieldSpec {
            width_bits,
            reduction_poly,
        })
    }

    /// GF(2^T) with a fixed well-known reduction polynomial for T in [1, 16].
    pub fn with_width(width_bits: u32) -> Result<Self, FieldError> {
        if !(1..=16).contains(&width_bits) {
            return Err(FieldError::InvalidWidth(width_bits));
        }
        Self::new(width_bits, DEFAULT_POLYS[width_bits as usize - 1])
    }

    /// GF(2^8) with x^8 + x^4 + x^3 + x + 1, the crate-wide default.
    pub fn gf256() -> Self {
        Self::with_width(8).expect("default polynomial is irreducible")
    }

    pub fn width_bits(&self) -> u32 {
        self.width_bits
    }

    pub fn reduction_poly(&self) -> u32 {
        self.reduction_poly
    }

    /// Number of field elements, 2^T.
    pub fn order(&self) -> u64 {
        1u64 << self.width_bits
    }

    pub fn element(&self, value: u64) -> Result<FieldElement, FieldError> {
        if value >= self.order() {
            return Err(FieldError::ValueOutOfRange { value, spec: *self });
        }
        Ok(FieldElement {
            value: value as u16,
            spec: *self,
        })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            value: 0,
            spec: *self,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            value: 1,
            spec: *self,
        }
    }

    fn mul_raw(&self, a: u16, b: u16) -> u16 {
        let mut acc: u32 = 0;
        let mut shifted = a as u32;
        for i in 0..self.width_bits {
            if (b >> i) & 1 == 1 {
                acc ^= shifted;
            }
            shifted <<= 1;
            if (shifted >> self.width_bits) & 1 == 1 {
                shifted ^= self.reduction_poly;
            }
        }
        acc as u16
    }

    fn pow_raw(&self, a: u16, mut k: u64) -> u16 {
        let mut base = a;
        let mut acc: u16 = 1;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            k >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by exponentiation to 2^T - 2.
    fn inv_raw(&self, a: u16) -> Result<u16, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero(*self));
        }
        Ok(self.pow_raw(a, self.order() - 2))
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})", self.width_bits)
    }
}

/// A field element: value in [0, 2^T - 1] tagged with its field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u16,
    spec: FieldSpec,
}

impl FieldElement {
    pub fn value(&self) -> u16 {
        self.value
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check_spec(&self, other: &FieldElement) -> Result<(), FieldError> {
        if self.spec != other.spec {
            return Err(FieldError::SpecMismatch {
                left: self.spec,
                right: other.spec,
            });
        }
        Ok(())
    }

    /// Characteristic-2 addition: bitwise XOR. Doubles as subtraction.
    pub fn add(&self, rhs: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check_spec(rhs)?;
        Ok(FieldElement {
            value: self.value ^ rhs.value,
            spec: self.spec,
        })
    }

    /// Polynomial product reduced modulo the field's reduction polynomial.
    pub fn mul(&self, rhs: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check_spec(rhs)?;
        Ok(FieldElement {
            value: self.spec.mul_raw(self.value, rhs.value),
            spec: self.spec,
        })
    }

    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        Ok(FieldElement {
            value: self.spec.inv_raw(self.value)?,
            spec: self.spec,
        })
    }

    /// a^k with a^0 = 1.
    pub fn pow(&self, k: u64) -> FieldElement {
        FieldElement {
            value: self.spec.pow_raw(self.value, k),
            spec: self.spec,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Returns a divisor of `poly` with degree in [1, width/2], or None if irreducible.
fn find_divisor(poly: u32, width: u32) -> Option<u32> {
    for d in 1..=width / 2 {
        for candidate in (1u32 << d)..(1u32 << (d + 1)) {
            if poly_mod_gf2(poly as u64, candidate as u64) == 0 {
                return Some(candidate);
            }
        }
    }
    None
}

fn poly_mod_gf2(mut a: u64, m: u64) -> u64 {
    let dm = 63 - m.leading_zeros();
    while a != 0 {
        let da = 63 - a.leading_zeros();
        if da < dm {
            break;
        }
        a ^= m << (da - dm);
    }
    a
}

// ---------------------------------------------------------------------------
// Matrices and solving
// ---------------------------------------------------------------------------

/// Row-major matrix over one GF(2^T).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    spec: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u16>,
}

impl FieldMatrix {
    pub fn zeros(spec: FieldSpec, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            spec,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_fn<F>(spec: FieldSpec, rows: usize, cols: usize, mut f: F) -> Result<Self, FieldError>
    where
        F: FnMut(usize, usize) -> FieldElement,
    {
        let mut m = FieldMatrix::zeros(spec, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c))?;
            }
        }
        Ok(m)
    }

    pub fn identity(spec: FieldSpec, n: usize) -> Self {
        let mut m = FieldMatrix::zeros(spec, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Vandermonde matrix: entry (j, c) = generators[c]^j.
    pub fn vandermonde(generators: &[FieldElement], rows: usize) -> Result<Self, FieldError> {
        let spec = generators
            .first()
            .map(|g| g.spec())
            .ok_or_else(|| FieldError::DimensionMismatch {
                context: "vandermonde needs at least one generator".into(),
            })?;
        FieldMatrix::from_fn(spec, rows, generators.len(), |j, c| {
            generators[c].pow(j as u64)
        })
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        assert!(r < self.rows && c < self.cols);
        FieldElement {
            value: self.data[r * self.cols + c],
            spec: self.spec,
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) -> Result<(), FieldError> {
        assert!(r < self.rows && c < self.cols);
        if v.spec != self.spec {
            return Err(FieldError::SpecMismatch {
                left: self.spec,
                right: v.spec,
            });
        }
        self.data[r * self.cols + c] = v.value;
        Ok(())
    }

    /// Row values as raw integers, for serialization.
    pub fn row_values(&self, r: usize) -> Vec<u16> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn mul_vec(&self, v: &[FieldElement]) -> Result<Vec<FieldElement>, FieldError> {
        if v.len() != self.cols {
            return Err(FieldError::DimensionMismatch {
                context: format!("matrix has {} cols, vector has {}", self.cols, v.len()),
            });
        }
        for x in v {
            if x.spec != self.spec {
                return Err(FieldError::SpecMismatch {
                    left: self.spec,
                    right: x.spec,
                });
            }
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc: u16 = 0;
            for (&entry, x) in row.iter().zip(v) {
                acc ^= self.spec.mul_raw(entry, x.value);
            }
            out.push(FieldElement {
                value: acc,
                spec: self.spec,
            });
        }
        Ok(out)
    }

    /// Rank by forward elimination (exact, first-nonzero pivoting).
    pub fn rank(&self) -> usize {
        let mut data = self.data.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut pivot_row = 0;
        for col in 0..cols {
            if pivot_row == rows {
                break;
            }
            let found = (pivot_row..rows).find(|&r| data[r * cols + col] != 0);
            let Some(r) = found else { continue };
            data.swap_ranges(pivot_row, r, cols);
            let inv = self
                .spec
                .inv_raw(data[pivot_row * cols + col])
                .expect("pivot is nonzero");
            for r in pivot_row + 1..rows {
                let factor = self.spec.mul_raw(data[r * cols + col], inv);
                if factor == 0 {
                    continue;
                }
                for c in col..cols {
                    let sub = self.spec.mul_raw(factor, data[pivot_row * cols + c]);
                    data[r * cols + c] ^= sub;
                }
            }
            pivot_row += 1;
        }
        pivot_row
    }

    pub fn is_nonsingular(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }
}

trait SwapRanges {
    fn swap_ranges(&mut self, row_a: usize, row_b: usize, cols: usize);
}

impl SwapRanges for Vec<u16> {
    fn swap_ranges(&mut self, row_a: usize, row_b: usize, cols: usize) {
        if row_a == row_b {
            return;
        }
        for c in 0..cols {
            self.swap(row_a * cols + c, row_b * cols + c);
        }
    }
}

/// Solves m*x = rhs for square nonsingular m by Gaussian elimination.
///
/// Pivoting takes the first nonzero entry in each column; arithmetic is exact
/// so no numerical considerations apply. A singular system reports the rank
/// that elimination reached.
pub fn solve_linear_system(
    m: &FieldMatrix,
    rhs: &[FieldElement],
) -> Result<Vec<FieldElement>, FieldError> {
    let n = m.rows;
    if m.cols != n {
        return Err(FieldError::DimensionMismatch {
            context: format!("matrix is {}x{}, expected square", m.rows, m.cols),
        });
    }
    if rhs.len() != n {
        return Err(FieldError::DimensionMismatch {
            context: format!("rhs has length {}, expected {}", rhs.len(), n),
        });
    }
    for x in rhs {
        if x.spec != m.spec {
            return Err(FieldError::SpecMismatch {
                left: m.spec,
                right: x.spec,
            });
        }
    }
    let spec = m.spec;
    // Augmented [A | b] elimination.
    let cols = n + 1;
    let mut data = vec![0u16; n * cols];
    for r in 0..n {
        data[r * cols..r * cols + n].copy_from_slice(&m.data[r * n..(r + 1) * n]);
        data[r * cols + n] = rhs[r].value;
    }
    let mut pivot_row = 0;
    let mut pivot_cols = Vec::with_capacity(n);
    for col in 0..n {
        let Some(r) = (pivot_row..n).find(|&r| data[r * cols + col] != 0) else {
            continue;
        };
        data.swap_ranges(pivot_row, r, cols);
        let inv = spec.inv_raw(data[pivot_row * cols + col])?;
        for r in pivot_row + 1..n {
            let factor = spec.mul_raw(data[r * cols + col], inv);
            if factor == 0 {
                continue;
            }
            for c in col..cols {
                let sub = spec.mul_raw(factor, data[pivot_row * cols + c]);
                data[r * cols + c] ^= sub;
            }
        }
        pivot_cols.push(col);
        pivot_row += 1;
        if pivot_row == n {
            break;
        }
    }
    if pivot_row < n {
        return Err(FieldError::Singular {
            rank: pivot_row,
            dim: n,
        });
    }
    // Back substitution; pivot_cols[i] == i because rank is full.
    let mut x = vec![0u16; n];
    for i in (0..n).rev() {
        let mut acc = data[i * cols + n];
        for c in i + 1..n {
            acc ^= spec.mul_raw(data[i * cols + c], x[c]);
        }
        let inv = spec.inv_raw(data[i * cols + i])?;
        x[i] = spec.mul_raw(acc, inv);
    }
    Ok(x.into_iter().map(|value| FieldElement { value, spec }).collect())
}

/// The deterministic coefficient list (1, a_1, ..., a_{count-1}).
///
/// Pairwise-distinct nonzero elements with the first fixed to 1 and the rest
/// ascending by value, so repeated runs produce identical plans.
pub fn distinct_coefficients(count: u64, spec: FieldSpec) -> Result<Vec<FieldElement>, FieldError> {
    let available = spec.order() - 1;
    if count > available {
        return Err(FieldError::FieldTooSmall {
            requested: count,
            available,
            spec,
        });
    }
    (1..=count).map(|v| spec.element(v)).collect()
}
