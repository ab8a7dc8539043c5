//! Elementary-Abelian state hidden subgroup instances over `G = Z_2^m`.
//!
//! A representation is fixed by an orthonormal eigenbasis `{|lambda>}` and
//! an invertible pairing `B`: `mu(g) = sum_lambda chi_lambda(g) |lambda><lambda|`
//! with `chi_lambda(g) = (-1)^{lambda^T B g}`. The hidden subgroup `H` is
//! witnessed by `sigma_H`, the uniform mixture over `H^perp`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::budget;
use crate::error::{Error, Result};
use crate::gf2::{all_vectors, enumerate_subspaces, gaussian_binomial, BilinearPairing, BitMatrix, BitVector, Subspace};
use crate::qsim::{apply_weyl_at, bell_state, weyl_operator, DenseOperator, DenseState, PhasedWeyl, C64};

const ONE: C64 = C64::new(1.0, 0.0);

/// Numerical tolerance for orthonormality checks.
const BASIS_TOL: f64 = 1e-10;

fn sign(bit: bool) -> f64 {
    if bit {
        -1.0
    } else {
        1.0
    }
}

fn check_group(m: usize) -> Result<()> {
    budget::check("group elements", budget::pow2(m), budget::limits().enumeration)
}

/// A unitary representation of `Z_2^m`.
pub trait Representation {
    fn group_dim(&self) -> usize;
    fn operator(&self, g: &BitVector) -> Result<DenseOperator>;
}

#[derive(Clone, Debug)]
enum RepKind {
    /// `mu(g) = V_g (x) V_g`; evaluated from Weyl matrices directly.
    DoubledWeyl { n: usize },
    /// `mu(g)` assembled from the eigenbasis.
    EigenSum,
}

#[derive(Clone, Debug)]
pub struct StateHspInstance {
    pairing: BilinearPairing,
    /// `pairing` with the arguments swapped, so that `H^perp` is a dual.
    left_pairing: BilinearPairing,
    eigenbasis: Vec<DenseState>,
    hidden: Subspace,
    kind: RepKind,
}

impl StateHspInstance {
    /// Instance with eigenvector `eigenbasis[lambda.to_index()]` for each
    /// `lambda in Z_2^m`.
    pub fn new(pairing: BilinearPairing, eigenbasis: Vec<DenseState>, hidden: Subspace) -> Result<Self> {
        let m = pairing.dim();
        check_group(m)?;
        if !pairing.is_invertible() {
            return Err(Error::SingularPairing);
        }
        if hidden.ambient() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                found: hidden.ambient(),
            });
        }
        if eigenbasis.len() != 1 << m {
            return Err(Error::InvalidBasis(format!("{} eigenvectors for a group of order {}", eigenbasis.len(), 1 << m)));
        }
        let qubits = eigenbasis[0].qubits();
        if qubits != m || eigenbasis.iter().any(|v| v.qubits() != qubits) {
            return Err(Error::InvalidBasis(format!("eigenvectors must live on {m} qubits")));
        }
        for (i, a) in eigenbasis.iter().enumerate() {
            for (j, b) in eigenbasis.iter().enumerate().skip(i) {
                let want = if i == j { ONE } else { C64::new(0.0, 0.0) };
                if (a.inner(b)? - want).norm() > BASIS_TOL {
                    return Err(Error::InvalidBasis(format!("eigenvectors {i} and {j} are not orthonormal")));
                }
            }
        }
        let left_pairing = BilinearPairing::new(pairing.matrix().transpose())?;
        Ok(StateHspInstance {
            pairing,
            left_pairing,
            eigenbasis,
            hidden,
            kind: RepKind::EigenSum,
        })
    }

    /// `mu(x) = V_x (x) V_x` on `2n` qubits with the Bell eigenbasis and the
    /// symplectic pairing; `L` must be `n`-dimensional in `Z_2^{2n}`.
    pub fn phaseless(n: usize, hidden: Subspace) -> Result<Self> {
        if hidden.ambient() != 2 * n || hidden.dim() != n {
            return Err(Error::WrongDimension(format!(
                "expected an {n}-dimensional subspace of Z_2^{}, got dim {} in Z_2^{}",
                2 * n,
                hidden.dim(),
                hidden.ambient()
            )));
        }
        let eigenbasis = (0..1u64 << (2 * n))
            .map(|i| bell_state(&BitVector::from_index(i, 2 * n)))
            .collect::<Result<Vec<_>>>()?;
        let mut inst = Self::new(BilinearPairing::symplectic(n), eigenbasis, hidden)?;
        inst.kind = RepKind::DoubledWeyl { n };
        Ok(inst)
    }

    /// Diagonal instance: eigenvector of `lambda` is the computational state
    /// whose qubit `i` is `lambda_i`.
    pub fn diagonal(pairing: BilinearPairing, hidden: Subspace) -> Result<Self> {
        let m = pairing.dim();
        let eigenbasis = (0..1u64 << m)
            .map(|i| {
                let lambda = BitVector::from_index(i, m);
                let idx = (0..m).fold(0usize, |acc, k| acc | ((lambda.get(k) as usize) << (m - 1 - k)));
                DenseState::basis(m, idx)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairing, eigenbasis, hidden)
    }

    pub fn group_dim(&self) -> usize {
        self.pairing.dim()
    }

    pub fn qubits(&self) -> usize {
        self.eigenbasis[0].qubits()
    }

    pub fn pairing(&self) -> &BilinearPairing {
        &self.pairing
    }

    pub fn hidden(&self) -> &Subspace {
        &self.hidden
    }

    /// Same representation with a different hidden subgroup.
    pub fn with_hidden(&self, hidden: Subspace) -> Result<Self> {
        if hidden.ambient() != self.group_dim() {
            return Err(Error::LengthMismatch {
                expected: self.group_dim(),
                found: hidden.ambient(),
            });
        }
        Ok(StateHspInstance { hidden, ..self.clone() })
    }

    pub fn eigenvector(&self, lambda: &BitVector) -> &DenseState {
        &self.eigenbasis[lambda.to_index() as usize]
    }

    /// `chi_lambda(g) = (-1)^{lambda^T B g}`.
    pub fn character(&self, lambda: &BitVector, g: &BitVector) -> Result<f64> {
        Ok(sign(self.pairing.value(lambda, g)?))
    }

    /// `H^perp = {lambda : lambda^T B h = 0 for all h in H}`.
    pub fn annihilator(&self, space: &Subspace) -> Result<Subspace> {
        self.left_pairing.dual(space)
    }

    /// Subgroups `K` with `lambda^T B k = 0` for every `lambda` in `span`.
    fn annihilated_by(&self, span: &Subspace) -> Result<Subspace> {
        self.pairing.dual(span)
    }

    /// `mu(g)` from the eigenbasis.
    pub fn rep_from_eigenbasis(&self, g: &BitVector) -> Result<DenseOperator> {
        let mut out = DenseOperator::zeros(self.qubits())?;
        for lambda in all_vectors(self.group_dim()) {
            let proj = self.eigenvector(&lambda).density()?;
            out.add_scaled(C64::new(self.character(&lambda, g)?, 0.0), &proj)?;
        }
        Ok(out)
    }

    /// `mu(g)`.
    pub fn rep(&self, g: &BitVector) -> Result<DenseOperator> {
        if g.len() != self.group_dim() {
            return Err(Error::LengthMismatch {
                expected: self.group_dim(),
                found: g.len(),
            });
        }
        match self.kind {
            RepKind::DoubledWeyl { .. } => {
                let v = weyl_operator(g)?;
                v.tensor(&v)
            }
            RepKind::EigenSum => self.rep_from_eigenbasis(g),
        }
    }

    /// `mu(g)` applied to the `qubits()` qubits of `psi` starting at `offset`.
    pub fn apply_rep(&self, g: &BitVector, offset: usize, psi: &DenseState) -> Result<DenseState> {
        match self.kind {
            RepKind::DoubledWeyl { n } => {
                let once = apply_weyl_at(g, offset, psi)?;
                apply_weyl_at(g, offset + n, &once)
            }
            RepKind::EigenSum => {
                let q = self.qubits();
                let total = psi.qubits();
                if offset + q > total {
                    return Err(Error::ShapeMismatch(format!("{q}-qubit operator at offset {offset} on {total} qubits")));
                }
                let mu = self.rep(g)?;
                let low = total - offset - q;
                let block = 1usize << q;
                let low_dim = 1usize << low;
                let mut out = psi.clone();
                let amps = out.amps_mut();
                let src = psi.amps();
                for high in 0..1usize << offset {
                    for l in 0..low_dim {
                        let at = |k: usize| (((high << q) | k) << low) | l;
                        for r in 0..block {
                            amps[at(r)] = (0..block).map(|c| mu.get(r, c) * src[at(c)]).sum();
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// `sigma_H` for the instance's hidden subgroup.
    pub fn sigma(&self) -> Result<SigmaState<'_>> {
        self.sigma_for(&self.hidden)
    }

    /// `sigma_K` for an arbitrary subgroup `K`.
    pub fn sigma_for(&self, subgroup: &Subspace) -> Result<SigmaState<'_>> {
        Ok(SigmaState {
            instance: self,
            support: self.annihilator(subgroup)?,
        })
    }
}

impl Representation for StateHspInstance {
    fn group_dim(&self) -> usize {
        StateHspInstance::group_dim(self)
    }

    fn operator(&self, g: &BitVector) -> Result<DenseOperator> {
        self.rep(g)
    }
}

/// `sigma_H = (1/|H^perp|) sum_{lambda in H^perp} |lambda><lambda|`.
#[derive(Clone, Debug)]
pub struct SigmaState<'a> {
    instance: &'a StateHspInstance,
    support: Subspace,
}

impl<'a> SigmaState<'a> {
    pub fn instance(&self) -> &'a StateHspInstance {
        self.instance
    }

    pub fn support(&self) -> &Subspace {
        &self.support
    }

    /// Weight `a_lambda` of `lambda`.
    pub fn weight(&self, lambda: &BitVector) -> f64 {
        if self.support.contains(lambda) {
            1.0 / self.support.size() as f64
        } else {
            0.0
        }
    }

    pub fn dense(&self) -> Result<DenseOperator> {
        let mut out = DenseOperator::zeros(self.instance.qubits())?;
        let w = C64::new(1.0 / self.support.size() as f64, 0.0);
        for lambda in self.support.elements() {
            out.add_scaled(w, &self.instance.eigenvector(&lambda).density()?)?;
        }
        Ok(out)
    }

    /// Draws a character-measurement outcome: uniform over the support.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        let coeffs: u64 = if self.support.dim() == 0 {
            0
        } else {
            rng.random::<u64>() & (u64::MAX >> (64 - self.support.dim()))
        };
        self.support.combination(coeffs)
    }
}

/// Uniform sample from `H^perp` without dense arithmetic.
pub fn bell_sample_fast<R: Rng + ?Sized>(sigma: &SigmaState<'_>, rng: &mut R) -> BitVector {
    sigma.sample(rng)
}

/// Extremes of `tr(mu(g) rho)` inside and outside a subgroup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HidingProfile {
    /// `min_{h in H} Re tr(mu(h) rho)`.
    pub min_in: f64,
    /// `max_{g not in H} |tr(mu(g) rho)|`; `None` when `H = G`.
    pub max_out: Option<f64>,
}

impl HidingProfile {
    /// `min_in - max_out`, or `min_in` when nothing lies outside.
    pub fn gap(&self) -> f64 {
        self.min_in - self.max_out.unwrap_or(0.0)
    }
}

/// Enumerates the group to find how well `rho` hides `hidden` under `rep`.
pub fn hiding_profile<R: Representation + ?Sized>(rho: &DenseOperator, rep: &R, hidden: &Subspace) -> Result<HidingProfile> {
    let m = rep.group_dim();
    check_group(m)?;
    if hidden.ambient() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            found: hidden.ambient(),
        });
    }
    let mut min_in = f64::INFINITY;
    let mut max_out: Option<f64> = None;
    for g in all_vectors(m) {
        let value = rep.operator(&g)?.trace_product(rho)?;
        if hidden.contains(&g) {
            min_in = min_in.min(value.re);
        } else {
            max_out = Some(max_out.unwrap_or(0.0).max(value.norm()));
        }
    }
    Ok(HidingProfile { min_in, max_out })
}

/// Character POVM element `Pi_lambda = |lambda><lambda|`.
pub fn character_povm_projector(inst: &StateHspInstance, lambda: &BitVector) -> Result<DenseOperator> {
    inst.eigenvector(lambda).density()
}

/// Character POVM element as the group average
/// `(1/|G|) sum_g conj(chi_lambda(g)) mu(g)`.
pub fn character_povm_sum(inst: &StateHspInstance, lambda: &BitVector) -> Result<DenseOperator> {
    let m = inst.group_dim();
    check_group(m)?;
    let mut out = DenseOperator::zeros(inst.qubits())?;
    let w = 1.0 / (1u64 << m) as f64;
    for g in all_vectors(m) {
        out.add_scaled(C64::new(w * inst.character(lambda, &g)?, 0.0), &inst.rep(&g)?)?;
    }
    Ok(out)
}

/// All character POVM elements, indexed by `lambda.to_index()`.
pub fn character_povm(inst: &StateHspInstance) -> Result<Vec<DenseOperator>> {
    all_vectors(inst.group_dim())
        .map(|lambda| character_povm_projector(inst, &lambda))
        .collect()
}

/// Group average `(1/|G|) sum_g mu(g)^{(x) t} rho mu(g)^{(x) t, dagger}`.
pub fn twirl(rho: &DenseOperator, inst: &StateHspInstance, copies: usize) -> Result<DenseOperator> {
    let m = inst.group_dim();
    check_group(m)?;
    if rho.qubits() != inst.qubits() * copies {
        return Err(Error::ShapeMismatch(format!(
            "{}-qubit state for {copies} copies of {} qubits",
            rho.qubits(),
            inst.qubits()
        )));
    }
    let mut out = DenseOperator::zeros(rho.qubits())?;
    let w = C64::new(1.0 / (1u64 << m) as f64, 0.0);
    for g in all_vectors(m) {
        let u = inst.rep(&g)?.tensor_power(copies)?;
        out.add_scaled(w, &rho.conjugate(&u)?)?;
    }
    Ok(out)
}

/// `E_g[chi_lambda(g) chi_lambda'(g)]` for every pair; the identity matrix
/// when characters are orthonormal.
pub fn character_gram(inst: &StateHspInstance) -> Result<Vec<Vec<f64>>> {
    let m = inst.group_dim();
    check_group(2 * m)?;
    let w = 1.0 / (1u64 << m) as f64;
    let lambdas: Vec<BitVector> = all_vectors(m).collect();
    let mut out = vec![vec![0.0; lambdas.len()]; lambdas.len()];
    for (i, a) in lambdas.iter().enumerate() {
        for (j, b) in lambdas.iter().enumerate() {
            let mut acc = 0.0;
            for g in all_vectors(m) {
                acc += inst.character(a, &g)? * inst.character(b, &g)?;
            }
            out[i][j] = acc * w;
        }
    }
    Ok(out)
}

/// Every subgroup of the hidden subgroup's dimension that is consistent
/// with the observed characters, i.e. every `K` with `observed in K^perp`.
pub fn consistent_subgroups(observed: &[BitVector], inst: &StateHspInstance) -> Result<Vec<Subspace>> {
    let span = Subspace::span(inst.group_dim(), observed.iter().cloned())?;
    let allowed = inst.annihilated_by(&span)?;
    Ok(enumerate_subspaces(inst.group_dim(), inst.hidden().dim())?
        .into_iter()
        .filter(|k| k.is_subspace_of(&allowed))
        .collect())
}

/// Number of consistent subgroups, counted without enumeration.
pub fn consistent_count(span: &Subspace, inst: &StateHspInstance) -> Result<u128> {
    let allowed = inst.annihilated_by(span)?;
    Ok(gaussian_binomial(allowed.dim(), inst.hidden().dim()))
}

/// `sum_lambda sqrt(a_lambda) chi_lambda(g) |lambda> (x) |lambda>`, which is
/// `(I (x) mu(g))` applied to the base purification.
pub fn g_purification(sigma: &SigmaState<'_>, g: &BitVector) -> Result<DenseState> {
    let inst = sigma.instance();
    let q = inst.qubits();
    let mut out = DenseState::zeros(2 * q)?;
    for lambda in sigma.support().elements() {
        let amp = sigma.weight(&lambda).sqrt() * inst.character(&lambda, g)?;
        let v = inst.eigenvector(&lambda);
        let pair = v.tensor(v)?;
        out = out.add(&pair.scale(C64::new(amp, 0.0)))?;
    }
    Ok(out)
}

/// `sum_lambda sqrt(a_lambda) |lambda> (x) |lambda>`.
pub fn base_purification(sigma: &SigmaState<'_>) -> Result<DenseState> {
    g_purification(sigma, &BitVector::zeros(sigma.instance().group_dim()))
}

/// `E_g (|sigma_g><sigma_g|)^{(x) t}` by direct averaging over the group.
pub fn direct_purification_average(sigma: &SigmaState<'_>, t: usize) -> Result<DenseOperator> {
    let inst = sigma.instance();
    let m = inst.group_dim();
    check_group(m)?;
    let mut out = DenseOperator::zeros(2 * inst.qubits() * t)?;
    let w = C64::new(1.0 / (1u64 << m) as f64, 0.0);
    for g in all_vectors(m) {
        let psi = g_purification(sigma, &g)?.tensor_power(t)?;
        out.add_scaled(w, &psi.density()?)?;
    }
    Ok(out)
}

/// Multinomial `t! / prod(multiplicity!)` of a sorted tuple.
fn permutation_count(sorted: &[u64]) -> f64 {
    let t = sorted.len();
    let mut count: f64 = (1..=t).map(|i| i as f64).product();
    let mut i = 0;
    while i < t {
        let mut j = i;
        while j < t && sorted[j] == sorted[i] {
            j += 1;
        }
        count /= (1..=j - i).map(|k| k as f64).product::<f64>();
        i = j;
    }
    count
}

/// The structured random purification channel on `t` copies.
///
/// Measures every copy in the eigenbasis up to permutation of the copies,
/// and for the class of outcome tuple `lambda-bar` prepares
/// `(1/f) sum_{eta, eta' ~ lambda-bar} |eta eta><eta' eta'|`, where `f` is
/// the class size. Output registers are interleaved per copy as
/// (system, purifier). The map is linear in `rho`.
pub fn purification_channel(inst: &StateHspInstance, rho: &DenseOperator, t: usize) -> Result<DenseOperator> {
    let q = inst.qubits();
    let m = inst.group_dim();
    if rho.qubits() != q * t {
        return Err(Error::ShapeMismatch(format!("{}-qubit input for {t} copies of {q} qubits", rho.qubits())));
    }
    let out_qubits = 2 * q * t;
    budget::check("operator qubits", out_qubits as u128, budget::limits().operator_qubits as u128)?;
    budget::check("outcome tuples", budget::pow2(m * t), budget::limits().enumeration)?;

    let mask = (1u64 << m) - 1;
    let tuple_of = |code: u64| -> Vec<u64> { (0..t).map(|i| (code >> (m * (t - 1 - i))) & mask).collect() };
    let mut classes: BTreeMap<Vec<u64>, Vec<Vec<u64>>> = BTreeMap::new();
    for code in 0..1u64 << (m * t) {
        let tuple = tuple_of(code);
        let mut key = tuple.clone();
        key.sort_unstable();
        classes.entry(key).or_default().push(tuple);
    }

    let vector = |idx: u64| inst.eigenvector(&BitVector::from_index(idx, m));
    let mut out = DenseOperator::zeros(out_qubits)?;
    for (key, members) in &classes {
        let f = permutation_count(key);
        debug_assert_eq!(f as usize, members.len());
        let mut weight = C64::new(0.0, 0.0);
        let mut v = DenseState::zeros(out_qubits)?;
        for tuple in members {
            let mut sys = DenseState::new(0, vec![ONE])?;
            let mut doubled = DenseState::new(0, vec![ONE])?;
            for &idx in tuple {
                let e = vector(idx);
                sys = sys.tensor(e)?;
                doubled = doubled.tensor(&e.tensor(e)?)?;
            }
            weight += rho.expectation(&sys)?;
            v = v.add(&doubled)?;
        }
        if weight.norm() < 1e-300 {
            continue;
        }
        out.add_scaled(weight / f, &v.density()?)?;
    }
    Ok(out)
}

/// The purification channel applied to `sigma^{(x) t}`.
pub fn purify_copies(sigma: &SigmaState<'_>, t: usize) -> Result<DenseOperator> {
    let rho = sigma.dense()?.tensor_power(t)?;
    purification_channel(sigma.instance(), &rho, t)
}

/// `mu'(g1, g2) = mu(g1) (x) mu(g2)^dagger (x) mu(g1)^dagger (x) mu(g2)` on two
/// copies of a purification laid out as (sys, pur, sys, pur).
#[derive(Clone, Copy, Debug)]
pub struct PurifiedRepresentation<'a> {
    pub base: &'a StateHspInstance,
}

impl Representation for PurifiedRepresentation<'_> {
    fn group_dim(&self) -> usize {
        2 * self.base.group_dim()
    }

    fn operator(&self, g: &BitVector) -> Result<DenseOperator> {
        let m = self.base.group_dim();
        if g.len() != 2 * m {
            return Err(Error::LengthMismatch {
                expected: 2 * m,
                found: g.len(),
            });
        }
        let mu1 = self.base.rep(&g.slice(0, m))?;
        let mu2 = self.base.rep(&g.slice(m, 2 * m))?;
        mu1.tensor(&mu2.adjoint())?.tensor(&mu1.adjoint())?.tensor(&mu2)
    }
}

/// The subgroup hidden by two-copy g-purifications, computed both ways.
#[derive(Clone, Debug, PartialEq)]
pub struct PurifiedSubgroup {
    /// Pairs `(g1, g2)` on which every character product is 1.
    pub brute_force: Subspace,
    /// `{(g1, g2) : g1 + g2 in H}`.
    pub closed_form: Subspace,
}

impl PurifiedSubgroup {
    pub fn agree(&self) -> bool {
        self.brute_force == self.closed_form
    }
}

/// `H' = {(g1, g2) : chi_l1(g1) chi_l2(g1) chi_l1(g2) chi_l2(g2) = 1 for all
/// l1, l2 in H^perp}` (characters are real), alongside its closed form.
pub fn purified_subgroup(inst: &StateHspInstance, hidden: &Subspace) -> Result<PurifiedSubgroup> {
    let m = inst.group_dim();
    check_group(2 * m)?;
    let perp = inst.annihilator(hidden)?;
    let lambdas: Vec<BitVector> = perp.elements().collect();
    let mut members = Vec::new();
    for pair in all_vectors(2 * m) {
        let (g1, g2) = (pair.slice(0, m), pair.slice(m, 2 * m));
        let mut ok = true;
        'outer: for l1 in &lambdas {
            for l2 in &lambdas {
                let p = inst.character(l1, &g1)? * inst.character(l2, &g1)? * inst.character(l1, &g2)? * inst.character(l2, &g2)?;
                if p != 1.0 {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            members.push(pair);
        }
    }
    let brute_force = Subspace::span(2 * m, members.iter().cloned())?;
    if brute_force.size() != members.len() as u128 {
        return Err(Error::InvalidBasis("character condition did not cut out a subgroup".into()));
    }
    let mut generators: Vec<BitVector> = Vec::new();
    for h in hidden.basis_vectors() {
        generators.push(h.concat(&BitVector::zeros(m)));
    }
    for i in 0..m {
        let e = BitVector::unit(m, i);
        generators.push(e.concat(&e));
    }
    let closed_form = Subspace::span(2 * m, generators)?;
    Ok(PurifiedSubgroup { brute_force, closed_form })
}

/// A set of independent, commuting, sign-consistent Weyl generators.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerGroup {
    qubits: usize,
    generators: Vec<PhasedWeyl>,
}

impl StabilizerGroup {
    /// Validates commutation, independence and that each generator squares
    /// to `+I`. Together with independence of labels this excludes `-I`.
    pub fn new(qubits: usize, generators: Vec<PhasedWeyl>) -> Result<Self> {
        for (i, g) in generators.iter().enumerate() {
            if g.qubits() != qubits {
                return Err(Error::InvalidBasis(format!("generator {i} acts on {} qubits, expected {qubits}", g.qubits())));
            }
            if !g.squares_to_identity() {
                return Err(Error::InvalidBasis(format!("generator {i} squares to -I")));
            }
            for (j, h) in generators.iter().enumerate().skip(i + 1) {
                if !g.commutes_with(h) {
                    return Err(Error::InvalidBasis(format!("generators {i} and {j} anticommute")));
                }
            }
        }
        let group = StabilizerGroup { qubits, generators };
        if group.label_rank() != group.generators.len() {
            return Err(Error::InvalidBasis("generator labels are dependent".into()));
        }
        Ok(group)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn generators(&self) -> &[PhasedWeyl] {
        &self.generators
    }

    pub fn label_matrix(&self) -> BitMatrix {
        BitMatrix::from_rows(2 * self.qubits, self.generators.iter().map(|g| g.label().clone()).collect())
            .expect("labels have length 2q")
    }

    pub fn label_rank(&self) -> usize {
        self.label_matrix().rank()
    }

    /// Every generator conjugated by the Weyl operator `p`.
    pub fn conjugated_by(&self, p: &PhasedWeyl) -> StabilizerGroup {
        StabilizerGroup {
            qubits: self.qubits,
            generators: self.generators.iter().map(|g| g.conjugated_by(p)).collect(),
        }
    }

    /// Largest `|P psi - psi|_max` over generators.
    pub fn max_violation(&self, psi: &DenseState) -> Result<f64> {
        let mut worst = 0.0f64;
        for g in &self.generators {
            worst = worst.max(g.apply(psi)?.max_abs_diff(psi));
        }
        Ok(worst)
    }

    /// The stabilized state, for a full set of `q` generators: the
    /// projector `prod (I + P)/2` applied to a basis state it does not kill.
    pub fn state(&self) -> Result<DenseState> {
        if self.generators.len() != self.qubits {
            return Err(Error::InvalidBasis(format!("{} generators on {} qubits", self.generators.len(), self.qubits)));
        }
        for start in 0..1usize << self.qubits {
            let mut psi = DenseState::basis(self.qubits, start)?;
            for g in &self.generators {
                psi = psi.add(&g.apply(&psi)?)?.scale(C64::new(0.5, 0.0));
            }
            if psi.norm() > 1e-6 {
                psi.normalize();
                return Ok(psi);
            }
        }
        Err(Error::InvalidBasis("no stabilized state".into()))
    }
}

/// `{g (x) I} + {I^{(x) q} (x) Z}` on `q + 1` qubits.
pub fn embed_stabilizer(group: &StabilizerGroup) -> Result<StabilizerGroup> {
    let pad = PhasedWeyl::identity(1);
    let mut generators: Vec<PhasedWeyl> = group.generators.iter().map(|g| g.tensor(&pad)).collect();
    let z = PhasedWeyl::positive(BitVector::parse("10")?)?;
    generators.push(PhasedWeyl::identity(group.qubits).tensor(&z));
    StabilizerGroup::new(group.qubits + 1, generators)
}

fn four_register_label(parts: [&BitVector; 4]) -> Result<PhasedWeyl> {
    let mut out = PhasedWeyl::identity(0);
    for p in parts {
        out = out.tensor(&PhasedWeyl::positive(p.clone())?);
    }
    Ok(out)
}

/// Generators stabilizing the base purification of `sigma_L` on registers
/// (A, B, C, D) of `n` qubits each, where AB holds the system and CD the
/// purifier:
/// `V_u (x) I (x) V_u (x) I` for `u` in a basis of `L^perp`,
/// `V_h (x) V_h (x) I (x) I` and `I (x) I (x) V_h (x) V_h` for `h` in a basis of `L`,
/// and `V_s^{(x) 4}` for `s` completing `L` to the whole space.
pub fn purification_stabilizers(hidden: &Subspace) -> Result<StabilizerGroup> {
    let m = hidden.ambient();
    if !m.is_multiple_of(2) || hidden.dim() != m / 2 {
        return Err(Error::WrongDimension(format!(
            "expected a half-dimensional subspace, got dim {} in Z_2^{m}",
            hidden.dim()
        )));
    }
    let n = m / 2;
    let pairing = BilinearPairing::symplectic(n);
    let perp = pairing.dual(hidden)?;
    let zero = BitVector::zeros(m);
    let mut generators = Vec::with_capacity(4 * n);
    for u in perp.basis_vectors() {
        generators.push(four_register_label([u, &zero, u, &zero])?);
    }
    for h in hidden.basis_vectors() {
        generators.push(four_register_label([h, h, &zero, &zero])?);
    }
    for h in hidden.basis_vectors() {
        generators.push(four_register_label([&zero, &zero, h, h])?);
    }
    for s in hidden.complement_basis() {
        generators.push(four_register_label([&s, &s, &s, &s])?);
    }
    StabilizerGroup::new(4 * m / 2, generators)
}

/// Stabilizers of the g-purification: conjugates by `I (x) I (x) V_g (x) V_g`.
pub fn g_purification_stabilizers(hidden: &Subspace, g: &BitVector) -> Result<StabilizerGroup> {
    let base = purification_stabilizers(hidden)?;
    let zero = BitVector::zeros(hidden.ambient());
    let shift = four_register_label([&zero, &zero, g, g])?;
    Ok(base.conjugated_by(&shift))
}

/// A state written in the Bell basis of two register pairs, AB and CD:
/// `sum c_{p,q} |Phi_p>_AB |Phi_q>_CD`.
#[derive(Clone, Debug, PartialEq)]
pub struct BellPairState {
    n: usize,
    coeffs: BTreeMap<(BitVector, BitVector), f64>,
}

impl BellPairState {
    /// `|sigma_{L,g}> = 2^{-n/2} sum_{l in L^perp} (-1)^{[g,l]} |Phi_l>|Phi_l>`.
    pub fn purification(hidden: &Subspace, g: &BitVector) -> Result<Self> {
        let n = hidden.ambient() / 2;
        let pairing = BilinearPairing::symplectic(n);
        let perp = pairing.dual(hidden)?;
        let amp = 1.0 / (perp.size() as f64).sqrt();
        let mut coeffs = BTreeMap::new();
        for l in perp.elements() {
            coeffs.insert((l.clone(), l.clone()), amp * sign(pairing.value(g, &l)?));
        }
        Ok(BellPairState { n, coeffs })
    }

    /// Dense vector on `4n` qubits.
    pub fn to_dense(&self) -> Result<DenseState> {
        let mut out = DenseState::zeros(4 * self.n)?;
        for ((p, q), c) in &self.coeffs {
            let term = bell_state(p)?.tensor(&bell_state(q)?)?;
            out = out.add(&term.scale(C64::new(*c, 0.0)))?;
        }
        Ok(out)
    }

    /// Applies `P = +-V_a (x) V_b (x) V_c (x) V_d` symbolically, using
    /// `(V_a (x) V_b)|Phi_p> = (-1)^{a_b . b_b} V_a V_p V_b (x) I |Phi_0>`.
    pub fn apply(&self, op: &PhasedWeyl) -> Result<BellPairState> {
        let n = self.n;
        if op.qubits() != 4 * n {
            return Err(Error::ShapeMismatch(format!("{}-qubit operator on {} qubits", op.qubits(), 4 * n)));
        }
        let label = op.label();
        let q = 4 * n;
        let register = |r: usize| -> BitVector {
            label.slice(r * n, (r + 1) * n).concat(&label.slice(q + r * n, q + (r + 1) * n))
        };
        let regs: Vec<BitVector> = (0..4).map(register).collect();
        let act = |left: &BitVector, right: &BitVector, p: &BitVector| -> Result<(BitVector, bool)> {
            let l = PhasedWeyl::positive(left.clone())?;
            let r = PhasedWeyl::positive(right.clone())?;
            let moved = l.compose(&PhasedWeyl::positive(p.clone())?)?.compose(&r)?;
            let transpose_sign = !r.squares_to_identity();
            Ok((moved.label().clone(), moved.is_negative() ^ transpose_sign))
        };
        let mut coeffs = BTreeMap::new();
        for ((p, qq), c) in &self.coeffs {
            let (p2, s1) = act(&regs[0], &regs[1], p)?;
            let (q2, s2) = act(&regs[2], &regs[3], qq)?;
            let flip = s1 ^ s2 ^ op.is_negative();
            *coeffs.entry((p2, q2)).or_insert(0.0) += c * sign(flip);
        }
        coeffs.retain(|_, c: &mut f64| c.abs() > 1e-15);
        Ok(BellPairState { n, coeffs })
    }

    /// Largest coefficient difference.
    pub fn max_abs_diff(&self, other: &BellPairState) -> f64 {
        let keys: std::collections::BTreeSet<_> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.into_iter()
            .map(|k| (self.coeffs.get(k).copied().unwrap_or(0.0) - other.coeffs.get(k).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }
}

/// Largest symbolic violation `|P psi - psi|` over the generators of `group`
/// acting on the g-purification of `sigma_L`.
pub fn symbolic_violation(group: &StabilizerGroup, hidden: &Subspace, g: &BitVector) -> Result<f64> {
    let psi = BellPairState::purification(hidden, g)?;
    let mut worst = 0.0f64;
    for p in group.generators() {
        worst = worst.max(psi.apply(p)?.max_abs_diff(&psi));
    }
    Ok(worst)
}

/// Dense `q_rho(lambda-bar) = tr(rho (Pi_l1 (x) ... (x) Pi_lt))` for every
/// tuple, keyed by the tuple of outcomes.
pub fn outcome_distribution(inst: &StateHspInstance, rho: &DenseOperator, t: usize) -> Result<Vec<(Vec<BitVector>, f64)>> {
    Ok(outcome_weights(inst, rho, t)?
        .into_iter()
        .map(|(tuple, w)| (tuple, w.re.max(0.0)))
        .collect())
}

/// `tr(X (Pi_l1 (x) ... (x) Pi_lt))` for an arbitrary operator `X`.
pub fn outcome_weights(inst: &StateHspInstance, rho: &DenseOperator, t: usize) -> Result<Vec<(Vec<BitVector>, C64)>> {
    let m = inst.group_dim();
    let q = inst.qubits();
    if rho.qubits() != q * t {
        return Err(Error::ShapeMismatch(format!("{}-qubit input for {t} copies of {q} qubits", rho.qubits())));
    }
    budget::check("outcome tuples", budget::pow2(m * t), budget::limits().enumeration)?;
    // Sparse eigenvectors keep each tuple's cost at the product of supports.
    let sparse: Vec<Vec<(usize, Complex64)>> = all_vectors(m)
        .map(|l| {
            inst.eigenvector(&l)
                .amps()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm() > 0.0)
                .map(|(i, a)| (i, *a))
                .collect()
        })
        .collect();
    let mask = (1u64 << m) - 1;
    let mut out = Vec::with_capacity(1 << (m * t));
    for code in 0..1u64 << (m * t) {
        let idx: Vec<usize> = (0..t).map(|i| ((code >> (m * (t - 1 - i))) & mask) as usize).collect();
        let mut vec: Vec<(usize, Complex64)> = vec![(0, ONE)];
        for &k in &idx {
            let mut next = Vec::with_capacity(vec.len() * sparse[k].len());
            for &(i, a) in &vec {
                for &(j, b) in &sparse[k] {
                    next.push(((i << q) | j, a * b));
                }
            }
            vec = next;
        }
        let mut acc = C64::new(0.0, 0.0);
        for &(i, a) in &vec {
            for &(j, b) in &vec {
                acc += a.conj() * rho.get(i, j) * b;
            }
        }
        let tuple = idx.iter().map(|&k| BitVector::from_index(k as u64, m)).collect();
        out.push((tuple, acc));
    }
    Ok(out)
}
