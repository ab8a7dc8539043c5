//! Linear algebra over GF(2).
//!
//! Vectors are packed into `u64` words, bit `i` living in word `i / 64` at
//! position `i % 64`. Integer encodings of vectors (see
//! [`BitVector::from_index`]) are little-endian: coordinate `i` is bit `i` of
//! the integer.
//!
//! Subspaces are always stored through a reduced row echelon basis, so two
//! [`Subspace`] values are equal exactly when they span the same set.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;

use crate::budget;
use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A vector in GF(2)^len.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Unit vector with a single one at `index`.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(index, true);
        v
    }

    /// Builds the vector whose coordinate `i` is bit `i` of `value`.
    pub fn from_index(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "index encoding supports at most 64 coordinates");
        let mask = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = value & mask;
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Parses a string of `0`/`1` characters; character `i` is coordinate `i`.
    /// Whitespace and underscores are ignored.
    pub fn parse(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidLabel(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_bools(&bits))
    }

    /// Inverse of [`BitVector::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= WORD, "index encoding supports at most 64 coordinates");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Lowest index holding a one.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * WORD + w.trailing_zeros() as usize)
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Checked sum, erroring on length mismatch.
    pub fn try_xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        Ok(self.xor(other))
    }

    /// Standard dot product mod 2.
    pub fn dot(&self, other: &BitVector) -> bool {
        debug_assert_eq!(self.len, other.len);
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    pub fn try_dot(&self, other: &BitVector) -> Result<bool> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        Ok(self.dot(other))
    }

    /// Coordinates `start..end` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> BitVector {
        assert!(start <= end && end <= self.len);
        let mut out = BitVector::zeros(end - start);
        for i in start..end {
            if self.get(i) {
                out.set(i - start, true);
            }
        }
        out
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the coordinates equal to one, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * WORD + b)
                }
            })
        })
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

/// All vectors of GF(2)^len in increasing index order.
pub fn all_vectors(len: usize) -> impl Iterator<Item = BitVector> {
    assert!(len < WORD, "cannot enumerate GF(2)^{len}");
    (0..1u64 << len).map(move |i| BitVector::from_index(i, len))
}

/// Rank of a set of vectors of at most 64 coordinates given as words.
/// The slice is used as scratch space.
pub fn rank_of_words(rows: &mut [u64]) -> usize {
    let mut rank = 0;
    for i in 0..rows.len() {
        let pivot_row = rows[i];
        if pivot_row == 0 {
            continue;
        }
        rank += 1;
        let low = pivot_row & pivot_row.wrapping_neg();
        for r in rows[i + 1..].iter_mut() {
            if *r & low != 0 {
                *r ^= pivot_row;
            }
        }
    }
    rank
}

/// A dense matrix over GF(2), stored by rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(size: usize) -> Self {
        BitMatrix {
            cols: size,
            rows: (0..size).map(|i| BitVector::unit(size, i)).collect(),
        }
    }

    /// Builds a matrix from rows of equal length `cols`.
    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Ok(BitMatrix { cols, rows })
    }

    /// Parses rows given as `0`/`1` strings.
    pub fn parse_rows(rows: &[&str]) -> Result<Self> {
        let parsed: Vec<BitVector> = rows.iter().map(|r| BitVector::parse(r)).collect::<Result<_>>()?;
        let cols = parsed.first().map_or(0, BitVector::len);
        Self::from_rows(cols, parsed)
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[BitVector]) -> Result<Self> {
        let mut m = BitMatrix::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
            for i in c.ones() {
                m.rows[i].set(j, true);
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value)
    }

    pub fn row(&self, r: usize) -> &BitVector {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<BitVector> {
        self.rows
    }

    pub fn column(&self, c: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            if r.get(c) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            for j in r.ones() {
                t.rows[j].set(i, true);
            }
        }
        t
    }

    /// Submatrix made of the listed columns, in order.
    pub fn select_columns(&self, columns: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows.len(), columns.len());
        for (i, r) in self.rows.iter().enumerate() {
            for (k, &c) in columns.iter().enumerate() {
                if r.get(c) {
                    out.rows[i].set(k, true);
                }
            }
        }
        out
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &BitVector) -> Result<BitVector> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut out = BitVector::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            if r.dot(x) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// `self * other`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows(),
                self.cols,
                other.nrows(),
                other.ncols()
            )));
        }
        let mut out = BitMatrix::zeros(self.rows.len(), other.cols);
        for (i, r) in self.rows.iter().enumerate() {
            for k in r.ones() {
                out.rows[i].xor_assign(&other.rows[k]);
            }
        }
        Ok(out)
    }

    /// Reduced row echelon form and the pivot column of each nonzero row.
    /// Zero rows are dropped.
    pub fn rref(&self) -> (BitMatrix, Vec<usize>) {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..self.cols {
            let Some(found) = (next..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(next, found);
            let pivot = rows[next].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != next && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivots.push(col);
            next += 1;
            if next == rows.len() {
                break;
            }
        }
        rows.truncate(next);
        (BitMatrix { cols: self.cols, rows }, pivots)
    }

    /// Row rank over GF(2).
    pub fn rank(&self) -> usize {
        if self.cols <= WORD {
            let mut words: Vec<u64> = self.rows.iter().map(|r| r.words.first().copied().unwrap_or(0)).collect();
            rank_of_words(&mut words)
        } else {
            self.rref().1.len()
        }
    }

    /// Null space `{x : self * x = 0}`.
    pub fn kernel(&self) -> Subspace {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let basis = (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = BitVector::unit(self.cols, free);
                for (row, &p) in r.rows.iter().zip(&pivots) {
                    if row.get(free) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect::<Vec<_>>();
        Subspace::span(self.cols, basis).expect("kernel vectors have the ambient length")
    }

    /// Solves `self * x = rhs`, returning one solution if the system is
    /// consistent.
    pub fn solve(&self, rhs: &BitVector) -> Result<Option<BitVector>> {
        if rhs.len() != self.rows.len() {
            return Err(Error::LengthMismatch {
                expected: self.rows.len(),
                found: rhs.len(),
            });
        }
        // Augment with the right-hand side as an extra column.
        let aug_rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut v = r.concat(&BitVector::zeros(1));
                v.set(self.cols, rhs.get(i));
                v
            })
            .collect();
        let aug = BitMatrix {
            cols: self.cols + 1,
            rows: aug_rows,
        };
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = BitVector::zeros(self.cols);
        for (row, &p) in r.rows.iter().zip(&pivots) {
            if row.get(self.cols) {
                x.set(p, true);
            }
        }
        Ok(Some(x))
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

/// A linear subspace of GF(2)^ambient held by its canonical RREF basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    basis: BitMatrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: BitMatrix::zeros(0, ambient),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: BitMatrix::identity(ambient),
        }
    }

    /// Span of arbitrary (possibly dependent) generators.
    pub fn span<I>(ambient: usize, generators: I) -> Result<Self>
    where
        I: IntoIterator<Item = BitVector>,
    {
        let rows: Vec<BitVector> = generators.into_iter().collect();
        let m = BitMatrix::from_rows(ambient, rows)?;
        Ok(Subspace {
            ambient,
            basis: m.rref().0,
        })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Canonical RREF basis, one vector per row.
    pub fn basis(&self) -> &BitMatrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> &[BitVector] {
        self.basis.rows()
    }

    /// Number of elements, `2^dim`.
    pub fn size(&self) -> u128 {
        budget::pow2(self.dim())
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        if v.len() != self.ambient {
            return false;
        }
        // Reduce against the RREF basis using each row's pivot.
        let mut r = v.clone();
        for row in self.basis.rows() {
            let p = row.first_one().expect("RREF rows are nonzero");
            if r.get(p) {
                r.xor_assign(row);
            }
        }
        r.is_zero()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient && self.basis.rows().iter().all(|b| other.contains(b))
    }

    /// Sum `self + other`.
    pub fn join(&self, other: &Subspace) -> Result<Subspace> {
        if self.ambient != other.ambient {
            return Err(Error::LengthMismatch {
                expected: self.ambient,
                found: other.ambient,
            });
        }
        Subspace::span(
            self.ambient,
            self.basis.rows().iter().chain(other.basis.rows()).cloned(),
        )
    }

    /// Span of `self` and one more vector.
    pub fn extend(&self, v: &BitVector) -> Result<Subspace> {
        Subspace::span(
            self.ambient,
            self.basis.rows().iter().cloned().chain(std::iter::once(v.clone())),
        )
    }

    /// The element with coefficient vector `coeffs` over the canonical basis.
    pub fn combination(&self, coeffs: u64) -> BitVector {
        let mut v = BitVector::zeros(self.ambient);
        for (i, row) in self.basis.rows().iter().enumerate() {
            if (coeffs >> i) & 1 == 1 {
                v.xor_assign(row);
            }
        }
        v
    }

    /// All `2^dim` elements.
    pub fn elements(&self) -> impl Iterator<Item = BitVector> + '_ {
        assert!(self.dim() < WORD, "subspace too large to enumerate");
        (0..1u64 << self.dim()).map(move |c| self.combination(c))
    }

    /// Greedy completion of the basis to a basis of the ambient space using
    /// standard unit vectors in increasing order. Returns only the added
    /// vectors.
    pub fn complement_basis(&self) -> Vec<BitVector> {
        let mut current = self.clone();
        let mut added = Vec::new();
        for i in 0..self.ambient {
            let e = BitVector::unit(self.ambient, i);
            if !current.contains(&e) {
                current = current.extend(&e).expect("same ambient");
                added.push(e);
            }
        }
        added
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(ambient={}, span{{", self.ambient)?;
        for (i, r) in self.basis.rows().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("})")
    }
}

/// The bilinear form `<x, y> = x^T B y` over GF(2).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BilinearPairing {
    matrix: BitMatrix,
}

impl BilinearPairing {
    pub fn new(matrix: BitMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "pairing matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(BilinearPairing { matrix })
    }

    /// The plain dot product on GF(2)^m.
    pub fn standard(m: usize) -> Self {
        BilinearPairing {
            matrix: BitMatrix::identity(m),
        }
    }

    /// Symplectic form on GF(2)^(2n) for labels `x = (a, b)`:
    /// `[x, y] = a.d + b.c` where `y = (c, d)`.
    pub fn symplectic(n: usize) -> Self {
        let mut m = BitMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m.set(i, n + i, true);
            m.set(n + i, i, true);
        }
        BilinearPairing { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn is_invertible(&self) -> bool {
        self.matrix.rank() == self.dim()
    }

    /// `x^T B y`.
    pub fn value(&self, x: &BitVector, y: &BitVector) -> Result<bool> {
        let by = self.matrix.mul_vec(y)?;
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.dot(&by))
    }

    /// `{y : <x, y> = 0 for all x in space}`.
    pub fn dual(&self, space: &Subspace) -> Result<Subspace> {
        if space.ambient() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: space.ambient(),
            });
        }
        if !self.is_invertible() {
            return Err(Error::SingularPairing);
        }
        // Rows b^T B for each basis vector b; the dual is their kernel.
        let constraints = BitMatrix::from_rows(self.dim(), space.basis_vectors().to_vec())?.mul(&self.matrix)?;
        Ok(constraints.kernel())
    }
}

/// `x^T B y`, free-function form.
pub fn pairing_value(x: &BitVector, y: &BitVector, pairing: &BilinearPairing) -> Result<bool> {
    pairing.value(x, y)
}

/// Dual subspace under `pairing`.
pub fn dual_subspace(space: &Subspace, pairing: &BilinearPairing) -> Result<Subspace> {
    pairing.dual(space)
}

/// Probability, exact when the arithmetic stays small enough.
#[derive(Clone, Debug, PartialEq)]
pub enum Probability {
    Exact(BigRational),
    Approx(f64),
}

impl Probability {
    pub fn to_f64(&self) -> f64 {
        match self {
            Probability::Exact(r) => ratio_to_f64(r),
            Probability::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Probability::Exact(r) => Some(r),
            Probability::Approx(_) => None,
        }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    // Direct conversion overflows for huge numerators/denominators; scale first.
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let shift = r.denom().bits().saturating_sub(60) as i64;
    let n = r.numer() >> (shift as usize);
    let d = r.denom() >> (shift as usize);
    n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
}

/// Largest `n` and `k` for which [`lin_indep_prob`] returns an exact value.
pub const EXACT_LIN_INDEP_LIMIT: usize = 32;

/// Probability that `k` uniform draws from GF(2)^n span exactly an
/// `alpha`-dimensional space:
///
/// `prod_{i<alpha} (2^n - 2^i)(2^k - 2^i) / (2^{nk} prod_{i<alpha} (2^alpha - 2^i))`.
///
/// `alpha = 0` gives `2^{-nk}` (every draw zero), so the values over
/// `alpha = 0..=min(n, k)` sum to one.
pub fn lin_indep_prob(n: usize, k: usize, alpha: usize) -> Result<Probability> {
    if alpha > n.min(k) {
        return Err(Error::OutOfRange(format!(
            "alpha = {alpha} must be at most min(n, k) = {}",
            n.min(k)
        )));
    }
    if n <= EXACT_LIN_INDEP_LIMIT && k <= EXACT_LIN_INDEP_LIMIT {
        let two = BigInt::from(2);
        let pow = |e: usize| -> BigInt { num_traits::pow(two.clone(), e) };
        let mut num = BigInt::one();
        let mut den = pow(n * k);
        for i in 0..alpha {
            num *= (pow(n) - pow(i)) * (pow(k) - pow(i));
            den *= pow(alpha) - pow(i);
        }
        Ok(Probability::Exact(BigRational::new(num, den)))
    } else {
        // Factor out the powers of two: the ratio equals
        // 2^{-(n-alpha)(k-alpha)} prod (1-2^{i-n})(1-2^{i-k}) / (1-2^{i-alpha}).
        let mut log2 = -(((n - alpha) * (k - alpha)) as f64);
        let mut prod = 1.0f64;
        for i in 0..alpha {
            let term = (1.0 - (2.0f64).powi(i as i32 - n as i32)) * (1.0 - (2.0f64).powi(i as i32 - k as i32))
                / (1.0 - (2.0f64).powi(i as i32 - alpha as i32));
            prod *= term;
        }
        // Keep the power of two separate until the end to avoid underflow
        // in the intermediate product.
        if log2 < -1074.0 {
            log2 = -1075.0;
        }
        Ok(Probability::Approx(prod * log2.exp2()))
    }
}

/// `prod_{i=1}^n (1 - 2^{-i})`, the probability that `n` uniform vectors of
/// GF(2)^n form a basis.
pub fn full_rank_prob(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 - (-(i as f64)).exp2()).product()
}

/// Gaussian binomial coefficient `[m choose k]_2`, the number of
/// `k`-dimensional subspaces of GF(2)^m.
pub fn gaussian_binomial(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= (BigInt::one() << (m - i)) - BigInt::one();
        den *= (BigInt::one() << (i + 1)) - BigInt::one();
    }
    let q = num / den;
    q.to_u128().unwrap_or(u128::MAX)
}

/// Every `dim`-dimensional subspace of GF(2)^ambient, each in canonical form.
pub fn enumerate_subspaces(ambient: usize, dim: usize) -> Result<Vec<Subspace>> {
    let limits = budget::limits();
    if dim > ambient {
        return Err(Error::OutOfRange(format!("dim {dim} exceeds ambient {ambient}")));
    }
    budget::check("subspace ambient dimension", ambient as u128, limits.subspace_ambient as u128)?;
    let count = gaussian_binomial(ambient, dim);
    budget::check("subspace count", count, limits.subspaces)?;

    let mut out = Vec::with_capacity(count as usize);
    let mut pivots = Vec::with_capacity(dim);
    enumerate_pivots(ambient, dim, 0, &mut pivots, &mut out);
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

fn enumerate_pivots(ambient: usize, dim: usize, start: usize, pivots: &mut Vec<usize>, out: &mut Vec<Subspace>) {
    if pivots.len() == dim {
        // Free positions: columns right of a row's pivot that are not pivots.
        let free: Vec<(usize, usize)> = pivots
            .iter()
            .enumerate()
            .flat_map(|(r, &p)| ((p + 1)..ambient).filter(|c| !pivots.contains(c)).map(move |c| (r, c)))
            .collect();
        for fill in 0u64..(1u64 << free.len()) {
            let mut rows: Vec<BitVector> = pivots.iter().map(|&p| BitVector::unit(ambient, p)).collect();
            for (bit, &(r, c)) in free.iter().enumerate() {
                if (fill >> bit) & 1 == 1 {
                    rows[r].set(c, true);
                }
            }
            out.push(Subspace {
                ambient,
                basis: BitMatrix { cols: ambient, rows },
            });
        }
        return;
    }
    let remaining = dim - pivots.len();
    for p in start..=(ambient - remaining) {
        pivots.push(p);
        enumerate_pivots(ambient, dim, p + 1, pivots, out);
        pivots.pop();
    }
}

/// Uniform vector of GF(2)^n.
pub fn random_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitVector {
    let mut v = BitVector::zeros(n);
    for (k, w) in v.words.iter_mut().enumerate() {
        let bits = (n - k * WORD).min(WORD);
        let r: u64 = rng.random();
        *w = if bits == WORD { r } else { r & ((1u64 << bits) - 1) };
    }
    v
}

/// Uniform `dim`-dimensional subspace of GF(2)^ambient.
///
/// Draws vectors until `dim` independent ones are collected. Every subspace
/// has the same number of ordered bases, so the span is uniform.
pub fn random_subspace<R: Rng + ?Sized>(ambient: usize, dim: usize, rng: &mut R) -> Result<Subspace> {
    if dim > ambient {
        return Err(Error::OutOfRange(format!("dim {dim} exceeds ambient {ambient}")));
    }
    let mut current = Subspace::zero(ambient);
    while current.dim() < dim {
        let v = random_vector(ambient, rng);
        if !current.contains(&v) {
            current = current.extend(&v)?;
        }
    }
    Ok(current)
}

/// Exact fraction `num / 2^bits` as a rational.
pub fn dyadic(num: u128, bits: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::one() << bits)
}
