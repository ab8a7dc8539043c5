//! Dense state-vector and density-matrix simulation.
//!
//! Qubit 0 is the most significant bit of a basis index, so tensor factors
//! read left to right. Weyl operators are the real operators
//! `V_x = Z^{a_1} X^{b_1} (x) ... (x) Z^{a_n} X^{b_n}` for labels
//! `x = (a, b)` in GF(2)^(2n); Bell states `|Phi_y> = (V_y (x) I)|Phi_0>`
//! pair qubit `i` of the first register with qubit `i` of the second.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::budget;
use crate::error::{Error, Result};
use crate::gf2::{BilinearPairing, BitVector};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance for treating an operator as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Cap on Jacobi sweeps.
pub const MAX_SWEEPS: usize = 100;

/// Off-diagonal threshold of the eigensolver, relative to `max(1, |A|_F)`.
pub const JACOBI_TOL: f64 = 1e-13;

fn check_state_qubits(q: usize) -> Result<()> {
    budget::check("state qubits", q as u128, budget::limits().state_qubits as u128)
}

fn check_operator_qubits(q: usize) -> Result<()> {
    budget::check("operator qubits", q as u128, budget::limits().operator_qubits as u128)
}

/// A vector of `2^q` amplitudes.
#[derive(Clone, PartialEq)]
pub struct DenseState {
    qubits: usize,
    amps: Vec<C64>,
}

impl DenseState {
    pub fn new(qubits: usize, amps: Vec<C64>) -> Result<Self> {
        check_state_qubits(qubits)?;
        if amps.len() != 1 << qubits {
            return Err(Error::LengthMismatch {
                expected: 1 << qubits,
                found: amps.len(),
            });
        }
        Ok(DenseState { qubits, amps })
    }

    pub fn zeros(qubits: usize) -> Result<Self> {
        Self::new(qubits, vec![ZERO; 1 << qubits])
    }

    /// Computational basis state `|index>`.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zeros(qubits)?;
        s.amps[index] = ONE;
        Ok(s)
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Result<Self> {
        let amps = (0..1usize << qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let mut s = Self::new(qubits, amps)?;
        s.normalize();
        Ok(s)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &DenseState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch(format!("{} vs {} amplitudes", self.dim(), other.dim())));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn tensor(&self, other: &DenseState) -> Result<DenseState> {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        DenseState::new(self.qubits + other.qubits, amps)
    }

    /// `self^{(x) t}`.
    pub fn tensor_power(&self, t: usize) -> Result<DenseState> {
        let mut out = DenseState::new(0, vec![ONE])?;
        for _ in 0..t {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    /// `|self><self|`.
    pub fn density(&self) -> Result<DenseOperator> {
        check_operator_qubits(self.qubits)?;
        let d = self.dim();
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            if self.amps[i] == ZERO {
                continue;
            }
            for j in 0..d {
                data[i * d + j] = self.amps[i] * self.amps[j].conj();
            }
        }
        Ok(DenseOperator {
            qubits: self.qubits,
            dim: d,
            data,
        })
    }

    pub fn scale(&self, c: C64) -> DenseState {
        DenseState {
            qubits: self.qubits,
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &DenseState) -> Result<DenseState> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch(format!("{} vs {} amplitudes", self.dim(), other.dim())));
        }
        Ok(DenseState {
            qubits: self.qubits,
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
        })
    }

    /// Largest entrywise deviation.
    pub fn max_abs_diff(&self, other: &DenseState) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for DenseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseState({} qubits) {:?}", self.qubits, self.amps)
    }
}

/// A `2^q x 2^q` complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseOperator {
    qubits: usize,
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseOperator({} qubits) [", self.qubits)?;
        for r in 0..self.dim.min(16) {
            let row: Vec<String> = (0..self.dim.min(16))
                .map(|c| {
                    let z = self.get(r, c);
                    format!("{:+.3}{:+.3}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl DenseOperator {
    pub fn zeros(qubits: usize) -> Result<Self> {
        check_operator_qubits(qubits)?;
        let dim = 1 << qubits;
        Ok(DenseOperator {
            qubits,
            dim,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn identity(qubits: usize) -> Result<Self> {
        let mut m = Self::zeros(qubits)?;
        for i in 0..m.dim {
            m.data[i * m.dim + i] = ONE;
        }
        Ok(m)
    }

    /// `I / 2^q`.
    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        let m = Self::identity(qubits)?;
        let d = m.dim as f64;
        Ok(m.scale(C64::new(1.0 / d, 0.0)))
    }

    pub fn from_fn(qubits: usize, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let mut m = Self::zeros(qubits)?;
        for r in 0..m.dim {
            for c in 0..m.dim {
                m.data[r * m.dim + c] = f(r, c);
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if !dim.is_power_of_two() || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch("rows must form a 2^q square".into()));
        }
        let qubits = dim.trailing_zeros() as usize;
        Self::from_fn(qubits, |r, c| rows[r][c])
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Random density matrix `G G^dagger / tr(G G^dagger)` with a complex
    /// Gaussian `G` of full rank.
    pub fn random_density<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Result<Self> {
        let g = Self::from_fn(qubits, |_, _| ZERO)?;
        let g = DenseOperator {
            data: g
                .data
                .iter()
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
            ..g
        };
        let rho = g.mul(&g.adjoint())?;
        let tr = rho.trace().re;
        Ok(rho.scale(C64::new(1.0 / tr, 0.0)))
    }

    /// Random Hermitian matrix with Gaussian entries.
    pub fn random_hermitian<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Result<Self> {
        let mut g = Self::zeros(qubits)?;
        for z in g.data.iter_mut() {
            *z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        let h = g.add(&g.adjoint())?;
        Ok(h.scale(C64::new(0.5, 0.0)))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    fn same_shape(&self, other: &DenseOperator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!("{}x{} vs {}x{}", self.dim, self.dim, other.dim, other.dim)));
        }
        Ok(())
    }

    pub fn add(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.same_shape(other)?;
        Ok(DenseOperator {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.same_shape(other)?;
        Ok(DenseOperator {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: C64, other: &DenseOperator) -> Result<()> {
        self.same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn scale(&self, c: C64) -> DenseOperator {
        DenseOperator {
            data: self.data.iter().map(|a| a * c).collect(),
            ..self.clone()
        }
    }

    pub fn scale_real(&self, c: f64) -> DenseOperator {
        self.scale(C64::new(c, 0.0))
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.same_shape(other)?;
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        for i in 0..d {
            let row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * d..(k + 1) * d];
                for (o, b) in row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(DenseOperator {
            qubits: self.qubits,
            dim: d,
            data: out,
        })
    }

    pub fn apply(&self, state: &DenseState) -> Result<DenseState> {
        if state.dim() != self.dim {
            return Err(Error::ShapeMismatch(format!("{}x{} on {} amplitudes", self.dim, self.dim, state.dim())));
        }
        let d = self.dim;
        let amps = (0..d)
            .map(|i| {
                self.data[i * d..(i + 1) * d]
                    .iter()
                    .zip(&state.amps)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        DenseState::new(state.qubits, amps)
    }

    pub fn adjoint(&self) -> DenseOperator {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        DenseOperator { data, ..self.clone() }
    }

    pub fn transpose(&self) -> DenseOperator {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c];
            }
        }
        DenseOperator { data, ..self.clone() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> Result<C64> {
        self.same_shape(other)?;
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.data[i * d + k] * other.data[k * d + i];
            }
        }
        Ok(acc)
    }

    /// `<psi|self|psi>`.
    pub fn expectation(&self, psi: &DenseState) -> Result<C64> {
        psi.inner(&self.apply(psi)?)
    }

    /// Kronecker product `self (x) other`.
    pub fn tensor(&self, other: &DenseOperator) -> Result<DenseOperator> {
        check_operator_qubits(self.qubits + other.qubits)?;
        let (d1, d2) = (self.dim, other.dim);
        let d = d1 * d2;
        let mut data = vec![ZERO; d * d];
        for r1 in 0..d1 {
            for c1 in 0..d1 {
                let a = self.data[r1 * d1 + c1];
                if a == ZERO {
                    continue;
                }
                for r2 in 0..d2 {
                    let base = (r1 * d2 + r2) * d + c1 * d2;
                    for c2 in 0..d2 {
                        data[base + c2] = a * other.data[r2 * d2 + c2];
                    }
                }
            }
        }
        Ok(DenseOperator {
            qubits: self.qubits + other.qubits,
            dim: d,
            data,
        })
    }

    /// `self^{(x) t}`.
    pub fn tensor_power(&self, t: usize) -> Result<DenseOperator> {
        let mut out = DenseOperator::identity(0)?;
        for _ in 0..t {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    /// `U self U^dagger`.
    pub fn conjugate(&self, u: &DenseOperator) -> Result<DenseOperator> {
        u.mul(self)?.mul(&u.adjoint())
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A - A^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Checks the density-matrix invariants: Hermitian, unit trace, and
    /// smallest eigenvalue at least `-1e-9`.
    pub fn check_density(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::OutOfRange(format!("trace {tr} differs from 1")));
        }
        let (eig, _) = hermitian_eigen(self)?;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::OutOfRange(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Position of `q`'s bit within a basis index.
    fn bit_of(&self, qubit: usize) -> usize {
        self.qubits - 1 - qubit
    }

    /// Traces out every qubit not listed in `keep`. Kept qubits retain
    /// their relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DenseOperator> {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.iter().any(|&q| q >= self.qubits) {
            return Err(Error::OutOfRange(format!("kept qubit outside 0..{}", self.qubits)));
        }
        let traced: Vec<usize> = (0..self.qubits).filter(|q| !keep.contains(q)).collect();
        let kept_bits: Vec<usize> = keep.iter().map(|&q| self.bit_of(q)).collect();
        let traced_bits: Vec<usize> = traced.iter().map(|&q| self.bit_of(q)).collect();
        // Scatter a compact index onto the given bit positions (most
        // significant listed qubit first).
        let scatter = |value: usize, bits: &[usize]| -> usize {
            bits.iter()
                .enumerate()
                .fold(0, |acc, (i, &b)| acc | (((value >> (bits.len() - 1 - i)) & 1) << b))
        };
        let dk = 1usize << keep.len();
        let dt = 1usize << traced.len();
        let kept_idx: Vec<usize> = (0..dk).map(|v| scatter(v, &kept_bits)).collect();
        let traced_idx: Vec<usize> = (0..dt).map(|v| scatter(v, &traced_bits)).collect();
        let mut out = DenseOperator::zeros(keep.len())?;
        for r in 0..dk {
            for c in 0..dk {
                let mut acc = ZERO;
                for &e in &traced_idx {
                    acc += self.data[(kept_idx[r] | e) * self.dim + (kept_idx[c] | e)];
                }
                out.data[r * dk + c] = acc;
            }
        }
        Ok(out)
    }

    /// Permutes tensor factors: output qubit `i` is input qubit `order[i]`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<DenseOperator> {
        let map = qubit_permutation(self.qubits, order)?;
        let d = self.dim;
        let mut out = DenseOperator::zeros(self.qubits)?;
        for r in 0..d {
            for c in 0..d {
                out.data[map[r] * d + map[c]] = self.data[r * d + c];
            }
        }
        Ok(out)
    }
}

/// Basis-index map for a qubit permutation: input index `j` goes to
/// `map[j]`, where output qubit `i` carries input qubit `order[i]`.
fn qubit_permutation(qubits: usize, order: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; qubits];
    if order.len() != qubits || order.iter().any(|&q| q >= qubits || std::mem::replace(&mut seen[q], true)) {
        return Err(Error::InvalidLabel(format!("{order:?} is not a permutation of 0..{qubits}")));
    }
    Ok((0..1usize << qubits)
        .map(|j| {
            order.iter().enumerate().fold(0, |acc, (i, &src)| {
                let bit = (j >> (qubits - 1 - src)) & 1;
                acc | (bit << (qubits - 1 - i))
            })
        })
        .collect())
}

impl DenseState {
    /// Permutes tensor factors: output qubit `i` is input qubit `order[i]`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<DenseState> {
        let map = qubit_permutation(self.qubits, order)?;
        let mut amps = vec![ZERO; self.dim()];
        for (j, a) in self.amps.iter().enumerate() {
            amps[map[j]] = *a;
        }
        DenseState::new(self.qubits, amps)
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator::add(self, rhs).expect("shapes match")
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator::sub(self, rhs).expect("shapes match")
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator::mul(self, rhs).expect("shapes match")
    }
}

/// Eigen-decomposition `A = V diag(w) V^dagger` of a Hermitian matrix by
/// cyclic complex Jacobi rotations. Eigenvalues are sorted ascending and
/// the columns of `V` hold the matching eigenvectors.
pub fn hermitian_eigen(a: &DenseOperator) -> Result<(Vec<f64>, DenseOperator)> {
    let defect = a.hermiticity_defect();
    let scale = a.frobenius_norm().max(1.0);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    let n = a.dim;
    let mut m = a.data.clone();
    // Symmetrize exactly so rounding cannot accumulate.
    for r in 0..n {
        m[r * n + r] = C64::new(m[r * n + r].re, 0.0);
        for c in r + 1..n {
            let avg = (m[r * n + c] + m[c * n + r].conj()) * 0.5;
            m[r * n + c] = avg;
            m[c * n + r] = avg.conj();
        }
    }
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = ONE;
    }
    let threshold = JACOBI_TOL * scale;
    let off_norm = |m: &[C64]| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += m[r * n + c].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = diag phase fix followed by a real rotation.
                let upp = C64::new(c, 0.0);
                let upq = C64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = akp * upp + akq * uqp;
                    m[k * n + q] = akp * upq + akq * uqq;
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * upp + vkq * uqp;
                    v[k * n + q] = vkp * upq + vkq * uqq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = upp.conj() * apk + uqp.conj() * aqk;
                    m[q * n + k] = upq.conj() * apk + uqq.conj() * aqk;
                }
                m[p * n + q] = ZERO;
                m[q * n + p] = ZERO;
                m[p * n + p] = C64::new(m[p * n + p].re, 0.0);
                m[q * n + q] = C64::new(m[q * n + q].re, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].re.total_cmp(&m[j * n + j].re));
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i].re).collect();
    let mut vecs = DenseOperator::zeros(a.qubits)?;
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vecs.data[r * n + col] = v[r * n + src];
        }
    }
    Ok((values, vecs))
}

/// Eigenvalues only.
pub fn hermitian_eigenvalues(a: &DenseOperator) -> Result<Vec<f64>> {
    hermitian_eigen(a).map(|(w, _)| w)
}

/// `(1/2) sum |eig(A - B)|`.
pub fn trace_distance(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok(hermitian_eigenvalues(&diff)?.iter().map(|x| x.abs()).sum::<f64>() / 2.0)
}

/// `Re <target|rho|target>`, clipped to `[0, 1]`.
pub fn fidelity_pure(target: &DenseState, rho: &DenseOperator) -> Result<f64> {
    Ok(rho.expectation(target)?.re.clamp(0.0, 1.0))
}

/// Symplectic parts `(a, b)` of a label as qubit masks: qubit `i` maps to
/// bit `n - 1 - i`.
fn label_masks(x: &BitVector) -> Result<(usize, usize, usize)> {
    if !x.len().is_multiple_of(2) {
        return Err(Error::InvalidLabel(format!("label length {} is odd", x.len())));
    }
    let n = x.len() / 2;
    let (mut a, mut b) = (0usize, 0usize);
    for i in 0..n {
        if x.get(i) {
            a |= 1 << (n - 1 - i);
        }
        if x.get(n + i) {
            b |= 1 << (n - 1 - i);
        }
    }
    Ok((n, a, b))
}

/// Dense `V_x`.
pub fn weyl_operator(x: &BitVector) -> Result<DenseOperator> {
    let (n, a, b) = label_masks(x)?;
    let mut m = DenseOperator::zeros(n)?;
    let d = 1usize << n;
    for j in 0..d {
        let r = j ^ b;
        let sign = if (a & r).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m.data[r * d + j] = C64::new(sign, 0.0);
    }
    Ok(m)
}

/// `V_x |psi>` without forming the matrix; `x` acts on qubits
/// `offset..offset + n` of `psi`.
pub fn apply_weyl_at(x: &BitVector, offset: usize, psi: &DenseState) -> Result<DenseState> {
    let (n, a, b) = label_masks(x)?;
    if offset + n > psi.qubits {
        return Err(Error::ShapeMismatch(format!(
            "{n}-qubit Weyl at offset {offset} on {} qubits",
            psi.qubits
        )));
    }
    let shift = psi.qubits - offset - n;
    let (a, b) = (a << shift, b << shift);
    let mut amps = vec![ZERO; psi.dim()];
    for (j, amp) in psi.amps.iter().enumerate() {
        let r = j ^ b;
        let sign = if (a & r).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        amps[r] = amp * sign;
    }
    DenseState::new(psi.qubits, amps)
}

/// `|Phi_y>` on `2n` qubits.
pub fn bell_state(y: &BitVector) -> Result<DenseState> {
    let (n, _, _) = label_masks(y)?;
    let mut phi0 = DenseState::zeros(2 * n)?;
    let amp = C64::new((-(n as f64) / 2.0).exp2(), 0.0);
    for x in 0..1usize << n {
        phi0.amps[(x << n) | x] = amp;
    }
    apply_weyl_at(y, 0, &phi0)
}

/// `sum_i E_i` must equal the identity within `1e-9`.
pub fn check_povm(elements: &[DenseOperator]) -> Result<()> {
    let first = elements
        .first()
        .ok_or(Error::IncompletePovm(f64::INFINITY))?;
    let mut sum = DenseOperator::zeros(first.qubits)?;
    for e in elements {
        sum.add_scaled(ONE, e)?;
    }
    let dev = sum.max_abs_diff(&DenseOperator::identity(first.qubits)?)?;
    if dev > 1e-9 {
        return Err(Error::IncompletePovm(dev));
    }
    Ok(())
}

/// Outcome probabilities `tr(rho E_i)`.
pub fn povm_probabilities(rho: &DenseOperator, elements: &[DenseOperator]) -> Result<Vec<f64>> {
    check_povm(elements)?;
    elements
        .iter()
        .map(|e| rho.trace_product(e).map(|z| z.re.max(0.0)))
        .collect()
}

/// Samples an index from unnormalized nonnegative weights.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // Rounding left `u` past the end: return the last positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Measures `rho` with a POVM, returning outcome `i` with probability
/// `tr(rho E_i)`.
pub fn povm_sample<R: Rng + ?Sized>(rho: &DenseOperator, elements: &[DenseOperator], rng: &mut R) -> Result<usize> {
    let probs = povm_probabilities(rho, elements)?;
    Ok(sample_index(&probs, rng))
}

/// `C(d + t - 1, t)`, the dimension of the symmetric subspace of
/// `(C^d)^{(x) t}`.
pub fn symmetric_dimension(d: u64, t: u64) -> f64 {
    (0..t).fold(1.0, |acc, i| acc * (d + i) as f64 / (i + 1) as f64)
}

fn permutations(t: usize) -> Vec<Vec<usize>> {
    if t == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(t - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, t - 1);
            out.push(q);
        }
    }
    out
}

/// Projector `(1/t!) sum_pi P_pi` onto the symmetric subspace of `t`
/// copies of a `2^copy_qubits`-dimensional system. Copy 0 occupies the
/// most significant digits.
pub fn symmetric_projector(copy_qubits: usize, t: usize) -> Result<DenseOperator> {
    let qubits = copy_qubits * t;
    check_operator_qubits(qubits)?;
    let d = 1usize << copy_qubits;
    let mut p = DenseOperator::zeros(qubits)?;
    let perms = permutations(t);
    let w = C64::new(1.0 / perms.len() as f64, 0.0);
    let dim = p.dim;
    for j in 0..dim {
        let digits: Vec<usize> = (0..t).map(|k| (j >> (copy_qubits * (t - 1 - k))) & (d - 1)).collect();
        for perm in &perms {
            let r = perm
                .iter()
                .fold(0usize, |acc, &src| (acc << copy_qubits) | digits[src]);
            p.data[r * dim + j] += w;
        }
    }
    Ok(p)
}

/// A Weyl operator with a sign, `+-V_x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhasedWeyl {
    label: BitVector,
    negative: bool,
}

impl PhasedWeyl {
    pub fn new(label: BitVector, negative: bool) -> Result<Self> {
        if !label.len().is_multiple_of(2) {
            return Err(Error::InvalidLabel(format!("label length {} is odd", label.len())));
        }
        Ok(PhasedWeyl { label, negative })
    }

    pub fn positive(label: BitVector) -> Result<Self> {
        Self::new(label, false)
    }

    pub fn identity(qubits: usize) -> Self {
        PhasedWeyl {
            label: BitVector::zeros(2 * qubits),
            negative: false,
        }
    }

    pub fn label(&self) -> &BitVector {
        &self.label
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn qubits(&self) -> usize {
        self.label.len() / 2
    }

    fn parts(&self) -> (BitVector, BitVector) {
        let n = self.qubits();
        (self.label.slice(0, n), self.label.slice(n, 2 * n))
    }

    /// `V_x V_y = (-1)^{b . c} V_{x + y}` for `x = (a, b)`, `y = (c, d)`.
    pub fn compose(&self, other: &PhasedWeyl) -> Result<PhasedWeyl> {
        if self.label.len() != other.label.len() {
            return Err(Error::LengthMismatch {
                expected: self.label.len(),
                found: other.label.len(),
            });
        }
        let (_, b) = self.parts();
        let (c, _) = other.parts();
        Ok(PhasedWeyl {
            label: self.label.xor(&other.label),
            negative: self.negative ^ other.negative ^ b.dot(&c),
        })
    }

    /// Whether `P^2 = +I`, i.e. `a . b = 0`.
    pub fn squares_to_identity(&self) -> bool {
        let (a, b) = self.parts();
        !a.dot(&b)
    }

    /// Symplectic product; zero iff the operators commute.
    pub fn symplectic(&self, other: &PhasedWeyl) -> bool {
        BilinearPairing::symplectic(self.qubits())
            .value(&self.label, &other.label)
            .expect("equal lengths")
    }

    pub fn commutes_with(&self, other: &PhasedWeyl) -> bool {
        !self.symplectic(other)
    }

    /// `self (x) other`.
    pub fn tensor(&self, other: &PhasedWeyl) -> PhasedWeyl {
        let (a1, b1) = self.parts();
        let (a2, b2) = other.parts();
        PhasedWeyl {
            label: a1.concat(&a2).concat(&b1.concat(&b2)),
            negative: self.negative ^ other.negative,
        }
    }

    /// `g P g^dagger = (-1)^{[g, P]} P` for a Weyl operator `g`.
    pub fn conjugated_by(&self, g: &PhasedWeyl) -> PhasedWeyl {
        PhasedWeyl {
            label: self.label.clone(),
            negative: self.negative ^ self.symplectic(g),
        }
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        Ok(weyl_operator(&self.label)?.scale_real(self.sign()))
    }

    pub fn apply(&self, psi: &DenseState) -> Result<DenseState> {
        Ok(apply_weyl_at(&self.label, 0, psi)?.scale(C64::new(self.sign(), 0.0)))
    }
}

/// Label of `V_{x_1} (x) ... (x) V_{x_r}` from per-register labels.
pub fn tensor_label(parts: &[&BitVector]) -> Result<BitVector> {
    let mut out = PhasedWeyl::identity(0);
    for p in parts {
        out = out.tensor(&PhasedWeyl::positive((*p).clone())?);
    }
    Ok(out.label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::all_vectors;
    use crate::rng;

    fn bv(s: &str) -> BitVector {
        BitVector::parse(s).unwrap()
    }

    fn real(rows: &[&[f64]]) -> DenseOperator {
        DenseOperator::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn weyl_examples() {
        assert_eq!(weyl_operator(&bv("0000")).unwrap(), DenseOperator::identity(2).unwrap());
        assert_eq!(weyl_operator(&bv("01")).unwrap(), real(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_eq!(weyl_operator(&bv("10")).unwrap(), real(&[&[1.0, 0.0], &[0.0, -1.0]]));
        assert_eq!(weyl_operator(&bv("11")).unwrap(), real(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        assert!(weyl_operator(&bv("101")).is_err());
        // Qubit 0 is the left tensor factor: Z on qubit 0, X on qubit 1.
        let zx = weyl_operator(&bv("1001")).unwrap();
        let expected = weyl_operator(&bv("10"))
            .unwrap()
            .tensor(&weyl_operator(&bv("01")).unwrap())
            .unwrap();
        assert_eq!(zx, expected);
    }

    #[test]
    fn symbolic_products_match_dense() {
        for n in 1..=2 {
            for x in all_vectors(2 * n) {
                for y in all_vectors(2 * n) {
                    let px = PhasedWeyl::positive(x.clone()).unwrap();
                    let py = PhasedWeyl::positive(y.clone()).unwrap();
                    let dense = weyl_operator(&x).unwrap().mul(&weyl_operator(&y).unwrap()).unwrap();
                    let sym = px.compose(&py).unwrap().to_dense().unwrap();
                    assert!(dense.max_abs_diff(&sym).unwrap() < 1e-12);
                    // Commutation law.
                    let yx = weyl_operator(&y).unwrap().mul(&weyl_operator(&x).unwrap()).unwrap();
                    let sign = if px.symplectic(&py) { -1.0 } else { 1.0 };
                    assert!(dense.max_abs_diff(&yx.scale_real(sign)).unwrap() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transpose_and_conjugation_signs() {
        for x in all_vectors(4) {
            let v = weyl_operator(&x).unwrap();
            let p = PhasedWeyl::positive(x.clone()).unwrap();
            let sign = if p.squares_to_identity() { 1.0 } else { -1.0 };
            assert_eq!(v.transpose(), v.scale_real(sign));
            for g in all_vectors(4) {
                let pg = PhasedWeyl::positive(g.clone()).unwrap();
                let vg = weyl_operator(&g).unwrap();
                let conj = v.conjugate(&vg).unwrap();
                assert!(conj.max_abs_diff(&p.conjugated_by(&pg).to_dense().unwrap()).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_basis_properties() {
        let phi0 = bell_state(&bv("00")).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(phi0.max_abs_diff(&DenseState::new(2, vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]).unwrap()) < 1e-15);
        for n in 1..=2 {
            let sp = BilinearPairing::symplectic(n);
            let states: Vec<DenseState> = all_vectors(2 * n).map(|y| bell_state(&y).unwrap()).collect();
            for (i, a) in states.iter().enumerate() {
                for (j, b) in states.iter().enumerate() {
                    let ip = a.inner(b).unwrap();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - C64::new(expected, 0.0)).norm() < 1e-12);
                }
            }
            for x in all_vectors(2 * n) {
                let vv = weyl_operator(&x).unwrap().tensor(&weyl_operator(&x).unwrap()).unwrap();
                for (j, y) in all_vectors(2 * n).enumerate() {
                    let sign = if sp.value(&x, &y).unwrap() { -1.0 } else { 1.0 };
                    let out = vv.apply(&states[j]).unwrap();
                    assert!(out.max_abs_diff(&states[j].scale(C64::new(sign, 0.0))) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn partial_traces() {
        let mut r = rng::seeded(3);
        let rho = DenseOperator::random_density(2, &mut r).unwrap();
        let tau = DenseOperator::random_density(1, &mut r).unwrap();
        let joint = rho.tensor(&tau).unwrap();
        assert!(joint.partial_trace(&[0, 1]).unwrap().max_abs_diff(&rho).unwrap() < 1e-12);
        assert!(joint.partial_trace(&[2]).unwrap().max_abs_diff(&tau).unwrap() < 1e-12);
        let phi = bell_state(&bv("0000")).unwrap().density().unwrap();
        let half = DenseOperator::maximally_mixed(2).unwrap();
        assert!(phi.partial_trace(&[0, 1]).unwrap().max_abs_diff(&half).unwrap() < 1e-12);
        assert!(phi.partial_trace(&[2, 3]).unwrap().max_abs_diff(&half).unwrap() < 1e-12);
        // Non-contiguous kept qubits keep their order.
        let a = DenseOperator::random_density(1, &mut r).unwrap();
        let b = DenseOperator::random_density(1, &mut r).unwrap();
        let c = DenseOperator::random_density(1, &mut r).unwrap();
        let abc = a.tensor(&b).unwrap().tensor(&c).unwrap();
        let ac = abc.partial_trace(&[0, 2]).unwrap();
        assert!(ac.max_abs_diff(&a.tensor(&c).unwrap()).unwrap() < 1e-12);
        let big = DenseOperator::random_density(4, &mut r).unwrap();
        let pt = big.partial_trace(&[1, 3]).unwrap();
        assert!((pt.trace() - big.trace()).norm() < 1e-12);
        assert!(pt.is_hermitian(1e-12));
    }

    #[test]
    fn permuting_qubits() {
        let mut r = rng::seeded(8);
        let a = DenseOperator::random_density(1, &mut r).unwrap();
        let b = DenseOperator::random_density(2, &mut r).unwrap();
        let ab = a.tensor(&b).unwrap();
        let ba = ab.permute_qubits(&[1, 2, 0]).unwrap();
        assert!(ba.max_abs_diff(&b.tensor(&a).unwrap()).unwrap() < 1e-15);
        assert!(ab.permute_qubits(&[0, 0, 1]).is_err());
    }

    #[test]
    fn trace_is_cyclic() {
        let mut r = rng::seeded(5);
        let a = DenseOperator::random_hermitian(3, &mut r).unwrap();
        let b = DenseOperator::random_density(3, &mut r).unwrap();
        let ab = a.mul(&b).unwrap().trace();
        let ba = b.mul(&a).unwrap().trace();
        assert!((ab - ba).norm() < 1e-10);
        assert!((a.trace_product(&b).unwrap() - ab).norm() < 1e-10);
    }

    #[test]
    fn jacobi_reconstructs() {
        let mut r = rng::seeded(21);
        for _ in 0..5 {
            let a = DenseOperator::random_hermitian(4, &mut r).unwrap();
            let (w, v) = hermitian_eigen(&a).unwrap();
            let mut diag = DenseOperator::zeros(4).unwrap();
            for (i, x) in w.iter().enumerate() {
                diag.set(i, i, C64::new(*x, 0.0));
            }
            let rebuilt = v.mul(&diag).unwrap().mul(&v.adjoint()).unwrap();
            assert!(rebuilt.max_abs_diff(&a).unwrap() <= 1e-9);
            assert!((w.iter().sum::<f64>() - a.trace().re).abs() <= 1e-10);
            let unitary = v.mul(&v.adjoint()).unwrap();
            assert!(unitary.max_abs_diff(&DenseOperator::identity(4).unwrap()).unwrap() < 1e-10);
            assert!(w.windows(2).all(|p| p[0] <= p[1]));
        }
        // Already diagonal and degenerate inputs.
        let (w, _) = hermitian_eigen(&DenseOperator::identity(3).unwrap()).unwrap();
        assert!(w.iter().all(|x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn jacobi_rejects_non_hermitian() {
        let m = real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eigen(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn jacobi_handles_larger_matrices() {
        let mut r = rng::seeded(22);
        let a = DenseOperator::random_hermitian(7, &mut r).unwrap();
        let (w, v) = hermitian_eigen(&a).unwrap();
        let mut diag = DenseOperator::zeros(7).unwrap();
        for (i, x) in w.iter().enumerate() {
            diag.set(i, i, C64::new(*x, 0.0));
        }
        assert!(v.mul(&diag).unwrap().mul(&v.adjoint()).unwrap().max_abs_diff(&a).unwrap() <= 1e-9);
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DenseState::basis(1, 0).unwrap().density().unwrap();
        let one = DenseState::basis(1, 1).unwrap().density().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DenseState::new(1, vec![C64::new(h, 0.0), C64::new(h, 0.0)])
            .unwrap()
            .density()
            .unwrap();
        assert!(trace_distance(&zero, &zero).unwrap() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!((trace_distance(&zero, &plus).unwrap() - h).abs() < 1e-12);
        let mut r = rng::seeded(6);
        let (a, b, c) = (
            DenseOperator::random_density(3, &mut r).unwrap(),
            DenseOperator::random_density(3, &mut r).unwrap(),
            DenseOperator::random_density(3, &mut r).unwrap(),
        );
        let ab = trace_distance(&a, &b).unwrap();
        let bc = trace_distance(&b, &c).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        assert!(ac <= ab + bc + 1e-9);
        assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let mut r = rng::seeded(9);
        let psi = DenseState::random(2, &mut r).unwrap();
        assert!((fidelity_pure(&psi, &psi.density().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity_pure(&psi, &DenseOperator::maximally_mixed(2).unwrap()).unwrap() - 0.25).abs() < 1e-12);
        let zero = DenseState::basis(1, 0).unwrap();
        let one = DenseState::basis(1, 1).unwrap().density().unwrap();
        assert!(fidelity_pure(&zero, &one).unwrap() < 1e-15);
    }

    #[test]
    fn symmetric_projectors() {
        assert!(symmetric_projector(2, 1)
            .unwrap()
            .max_abs_diff(&DenseOperator::identity(2).unwrap())
            .unwrap()
            < 1e-15);
        for (q, t) in [(1, 2), (1, 3), (2, 2), (1, 4), (2, 3)] {
            let p = symmetric_projector(q, t).unwrap();
            let d = 1u64 << q;
            assert!((p.trace().re - symmetric_dimension(d, t as u64)).abs() < 1e-10);
            assert!(p.mul(&p).unwrap().max_abs_diff(&p).unwrap() < 1e-12);
        }
        assert!((symmetric_projector(1, 2).unwrap().trace().re - 3.0).abs() < 1e-12);
        assert!(matches!(symmetric_projector(5, 3), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn povm_examples() {
        let mut r = rng::seeded(13);
        let comp: Vec<DenseOperator> = (0..2).map(|i| DenseState::basis(1, i).unwrap().density().unwrap()).collect();
        let zero = comp[0].clone();
        for _ in 0..100 {
            assert_eq!(povm_sample(&zero, &comp, &mut r).unwrap(), 0);
        }
        let bell: Vec<DenseOperator> = all_vectors(4).map(|y| bell_state(&y).unwrap().density().unwrap()).collect();
        for (i, b) in bell.iter().enumerate() {
            assert_eq!(povm_sample(b, &bell, &mut r).unwrap(), i);
        }
        assert!(matches!(povm_sample(&zero, &comp[..1], &mut r), Err(Error::IncompletePovm(_))));
    }

    #[test]
    fn tensor_labels_concatenate_registers() {
        let x = bv("10");
        let y = bv("01");
        let joint = tensor_label(&[&x, &y]).unwrap();
        let dense = weyl_operator(&x).unwrap().tensor(&weyl_operator(&y).unwrap()).unwrap();
        assert_eq!(weyl_operator(&joint).unwrap(), dense);
    }

    #[test]
    fn apply_weyl_matches_dense() {
        let mut r = rng::seeded(17);
        let psi = DenseState::random(3, &mut r).unwrap();
        for x in all_vectors(4) {
            let full = weyl_operator(&x).unwrap().tensor(&DenseOperator::identity(1).unwrap()).unwrap();
            let a = full.apply(&psi).unwrap();
            let b = apply_weyl_at(&x, 0, &psi).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-14);
            let shifted = DenseOperator::identity(1).unwrap().tensor(&weyl_operator(&x).unwrap()).unwrap();
            assert!(shifted.apply(&psi).unwrap().max_abs_diff(&apply_weyl_at(&x, 1, &psi).unwrap()) < 1e-14);
        }
    }
}
