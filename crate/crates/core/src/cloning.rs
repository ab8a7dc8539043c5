//! Structured quantum cloning: channels from `t` to `t + m` copies, their
//! exact cloning error, and the character-measurement distinguisher game.
//!
//! Copies are tensor factors laid out left to right, each on
//! `copy_qubits()` qubits. For the phaseless family a copy of `sigma_L`
//! occupies `2n` qubits.

use std::collections::HashMap;

use rand::Rng;

use crate::budget;
use crate::error::{Error, Result};
use crate::gf2::{enumerate_subspaces, full_rank_prob, BitVector, Subspace};
use crate::qsim::{sample_index, symmetric_dimension, symmetric_projector, trace_distance, DenseOperator, DenseState, C64};
use crate::report::{EvalMode, GameReport, Z95};
use crate::rng::{self, StreamRng};
use crate::statehsp::{self, consistent_count, consistent_subgroups, outcome_distribution, outcome_weights, StateHspInstance};

/// A linear map from `input_copies` to `output_copies` copies of a
/// `copy_qubits`-qubit system, completely positive and trace preserving.
pub trait CloningChannel {
    fn name(&self) -> String;
    fn copy_qubits(&self) -> usize;
    fn input_copies(&self) -> usize;
    fn output_copies(&self) -> usize;
    /// Acts on any operator of the input shape, not only states.
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator>;
}

impl<C: CloningChannel + ?Sized> CloningChannel for &C {
    fn name(&self) -> String {
        (**self).name()
    }
    fn copy_qubits(&self) -> usize {
        (**self).copy_qubits()
    }
    fn input_copies(&self) -> usize {
        (**self).input_copies()
    }
    fn output_copies(&self) -> usize {
        (**self).output_copies()
    }
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        (**self).apply(x)
    }
}

impl<C: CloningChannel + ?Sized> CloningChannel for Box<C> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn copy_qubits(&self) -> usize {
        (**self).copy_qubits()
    }
    fn input_copies(&self) -> usize {
        (**self).input_copies()
    }
    fn output_copies(&self) -> usize {
        (**self).output_copies()
    }
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        (**self).apply(x)
    }
}

fn check_input<C: CloningChannel + ?Sized>(channel: &C, x: &DenseOperator) -> Result<()> {
    let want = channel.copy_qubits() * channel.input_copies();
    if x.qubits() != want {
        return Err(Error::ShapeMismatch(format!(
            "{} expects {want} input qubits, got {}",
            channel.name(),
            x.qubits()
        )));
    }
    Ok(())
}

fn check_output_budget(qubits: usize) -> Result<()> {
    budget::check("operator qubits", qubits as u128, budget::limits().operator_qubits as u128)
}

/// `d[t] = C(2^q + t - 1, t)`.
pub fn symmetric_dim(copy_qubits: usize, t: usize) -> f64 {
    symmetric_dimension(1u64 << copy_qubits, t as u64)
}

/// Optimal pure-state cloning fidelity `d[t] / d[t + m]`.
pub fn werner_fidelity_formula(copy_qubits: usize, t: usize, m: usize) -> f64 {
    symmetric_dim(copy_qubits, t) / symmetric_dim(copy_qubits, t + m)
}

/// Symmetric-subspace cloner: `c P_{t+m} (P_t X P_t (x) I) P_{t+m}` with
/// `c = d[t]/d[t+m]`, plus `tr((I - P_t) X) I / D` for the part of the
/// input outside the symmetric subspace.
#[derive(Clone, Debug)]
pub struct WernerCloner {
    copy_qubits: usize,
    t: usize,
    m: usize,
    p_in: DenseOperator,
    p_out: DenseOperator,
}

impl WernerCloner {
    pub fn new(copy_qubits: usize, t: usize, m: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::OutOfRange("the Werner cloner needs at least one input copy".into()));
        }
        check_output_budget(copy_qubits * (t + m))?;
        Ok(WernerCloner {
            copy_qubits,
            t,
            m,
            p_in: symmetric_projector(copy_qubits, t)?,
            p_out: symmetric_projector(copy_qubits, t + m)?,
        })
    }
}

impl CloningChannel for WernerCloner {
    fn name(&self) -> String {
        "werner".into()
    }
    fn copy_qubits(&self) -> usize {
        self.copy_qubits
    }
    fn input_copies(&self) -> usize {
        self.t
    }
    fn output_copies(&self) -> usize {
        self.t + self.m
    }
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        check_input(self, x)?;
        let sym = self.p_in.mul(x)?.mul(&self.p_in)?;
        let outside = x.trace() - sym.trace();
        let padded = sym.tensor(&DenseOperator::identity(self.copy_qubits * self.m)?)?;
        let c = werner_fidelity_formula(self.copy_qubits, self.t, self.m);
        let mut out = self.p_out.mul(&padded)?.mul(&self.p_out)?.scale_real(c);
        let mixed = DenseOperator::maximally_mixed(out.qubits())?;
        out.add_scaled(outside, &mixed)?;
        Ok(out)
    }
}

/// `<psi^{(x) t+m}| L(psi^{(x) t}) |psi^{(x) t+m}>`.
pub fn clone_fidelity<C: CloningChannel + ?Sized>(channel: &C, psi: &DenseState) -> Result<f64> {
    let input = psi.tensor_power(channel.input_copies())?.density()?;
    let out = channel.apply(&input)?;
    let target = psi.tensor_power(channel.output_copies())?;
    Ok(out.expectation(&target)?.re)
}

/// Smallest fidelity over `samples` Haar-random pure states.
pub fn worst_case_fidelity<C: CloningChannel + ?Sized>(channel: &C, samples: usize, seed: u64) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        let mut r = rng::stream(seed, i as u64);
        let psi = DenseState::random(channel.copy_qubits(), &mut r)?;
        worst = worst.min(clone_fidelity(channel, &psi)?);
    }
    Ok(worst)
}

/// Appends `I / 2^q` copies.
#[derive(Clone, Debug)]
pub struct AppendMaximallyMixed {
    copy_qubits: usize,
    t: usize,
    m: usize,
}

impl AppendMaximallyMixed {
    pub fn new(copy_qubits: usize, t: usize, m: usize) -> Result<Self> {
        check_output_budget(copy_qubits * (t + m))?;
        Ok(AppendMaximallyMixed { copy_qubits, t, m })
    }
}

impl CloningChannel for AppendMaximallyMixed {
    fn name(&self) -> String {
        "append_maximally_mixed".into()
    }
    fn copy_qubits(&self) -> usize {
        self.copy_qubits
    }
    fn input_copies(&self) -> usize {
        self.t
    }
    fn output_copies(&self) -> usize {
        self.t + self.m
    }
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        check_input(self, x)?;
        x.tensor(&DenseOperator::maximally_mixed(self.copy_qubits * self.m)?)
    }
}

/// Appends fresh copies of a known state. Not a legitimate cloner: it is
/// handed the answer, and serves as the zero-error reference.
#[derive(Clone, Debug)]
pub struct TrueCopyOracle {
    state: DenseOperator,
    t: usize,
    m: usize,
}

impl TrueCopyOracle {
    pub fn new(state: DenseOperator, t: usize, m: usize) -> Result<Self> {
        check_output_budget(state.qubits() * (t + m))?;
        Ok(TrueCopyOracle { state, t, m })
    }
}

impl CloningChannel for TrueCopyOracle {
    fn name(&self) -> String {
        "true_copy_oracle".into()
    }
    fn copy_qubits(&self) -> usize {
        self.state.qubits()
    }
    fn input_copies(&self) -> usize {
        self.t
    }
    fn output_copies(&self) -> usize {
        self.t + self.m
    }
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        check_input(self, x)?;
        x.tensor(&self.state.tensor_power(self.m)?)
    }
}

/// Any fixed `n`-dimensional subspace; measurement-based channels only use
/// the instance for its eigenbasis and the dimension of candidates.
fn reference_instance(n: usize) -> Result<StateHspInstance> {
    let hidden = Subspace::span(2 * n, (0..n).map(|i| BitVector::unit(2 * n, i)))?;
    StateHspInstance::phaseless(n, hidden)
}

/// Bell-measures every input copy, picks a uniformly random subspace
/// consistent with the outcomes and prepares `sigma_L-hat` on every output
/// copy. Outputs the maximally mixed state when nothing is consistent.
#[derive(Clone, Debug)]
pub struct MeasureAndPrepare {
    inst: StateHspInstance,
    t: usize,
    m: usize,
}

impl MeasureAndPrepare {
    pub fn new(n: usize, t: usize, m: usize) -> Result<Self> {
        check_output_budget(2 * n * (t + m))?;
        Ok(MeasureAndPrepare {
            inst: reference_instance(n)?,
            t,
            m,
        })
    }

    /// The prepared state after observing outcomes spanning `span`.
    pub fn prepared(&self, span: &Subspace) -> Result<DenseOperator> {
        let copies = self.t + self.m;
        let observed = span.basis_vectors().to_vec();
        let candidates = consistent_subgroups(&observed, &self.inst)?;
        if candidates.is_empty() {
            return DenseOperator::maximally_mixed(self.inst.qubits() * copies);
        }
        let mut out = DenseOperator::zeros(self.inst.qubits() * copies)?;
        let w = C64::new(1.0 / candidates.len() as f64, 0.0);
        for l in &candidates {
            let sigma = self.inst.sigma_for(l)?.dense()?;
            out.add_scaled(w, &sigma.tensor_power(copies)?)?;
        }
        Ok(out)
    }
}

impl CloningChannel for MeasureAndPrepare {
    fn name(&self) -> String {
        "measure_and_prepare".into()
    }
    fn copy_qubits(&self) -> usize {
        self.inst.qubits()
    }
    fn input_copies(&self) -> usize {
        self.t
    }
    fn output_copies(&self) -> usize {
        self.t + self.m
    }
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        check_input(self, x)?;
        let m = self.inst.group_dim();
        let mut by_span: HashMap<Subspace, C64> = HashMap::new();
        for (tuple, w) in outcome_weights(&self.inst, x, self.t)? {
            let span = Subspace::span(m, tuple)?;
            *by_span.entry(span).or_insert(C64::new(0.0, 0.0)) += w;
        }
        let mut out = DenseOperator::zeros(self.inst.qubits() * (self.t + self.m))?;
        for (span, w) in &by_span {
            if w.norm() < 1e-300 {
                continue;
            }
            out.add_scaled(*w, &self.prepared(span)?)?;
        }
        Ok(out)
    }
}

/// Purifies the input copies with the structured purification channel,
/// clones the purified copies with a pure-state cloner, and traces out the
/// purifying registers.
pub struct PurifyThenClone<C> {
    inst: StateHspInstance,
    t: usize,
    cloner: C,
}

impl<C: CloningChannel> PurifyThenClone<C> {
    pub fn new(n: usize, t: usize, cloner: C) -> Result<Self> {
        let inst = reference_instance(n)?;
        let q = inst.qubits();
        if cloner.copy_qubits() != 2 * q || cloner.input_copies() != t {
            return Err(Error::ShapeMismatch(format!(
                "inner cloner must take {t} copies of {} qubits, takes {} of {}",
                2 * q,
                cloner.input_copies(),
                cloner.copy_qubits()
            )));
        }
        check_output_budget(2 * q * cloner.output_copies())?;
        Ok(PurifyThenClone { inst, t, cloner })
    }
}

impl<C: CloningChannel> CloningChannel for PurifyThenClone<C> {
    fn name(&self) -> String {
        format!("purify_then_clone({})", self.cloner.name())
    }
    fn copy_qubits(&self) -> usize {
        self.inst.qubits()
    }
    fn input_copies(&self) -> usize {
        self.t
    }
    fn output_copies(&self) -> usize {
        self.cloner.output_copies()
    }
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        check_input(self, x)?;
        let purified = statehsp::purification_channel(&self.inst, x, self.t)?;
        let cloned = self.cloner.apply(&purified)?;
        let q = self.inst.qubits();
        let keep: Vec<usize> = (0..self.output_copies())
            .flat_map(|c| (2 * q * c)..(2 * q * c + q))
            .collect();
        cloned.partial_trace(&keep)
    }
}

/// `inner (x) id` on extra true copies placed after the inner channel's
/// input.
pub struct Lifted<C> {
    inner: C,
    extra: usize,
}

impl<C: CloningChannel> Lifted<C> {
    pub fn new(inner: C, extra: usize) -> Result<Self> {
        check_output_budget(inner.copy_qubits() * (inner.output_copies() + extra))?;
        Ok(Lifted { inner, extra })
    }
}

impl<C: CloningChannel> CloningChannel for Lifted<C> {
    fn name(&self) -> String {
        format!("lifted({}, +{})", self.inner.name(), self.extra)
    }
    fn copy_qubits(&self) -> usize {
        self.inner.copy_qubits()
    }
    fn input_copies(&self) -> usize {
        self.inner.input_copies() + self.extra
    }
    fn output_copies(&self) -> usize {
        self.inner.output_copies() + self.extra
    }
    fn apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        check_input(self, x)?;
        let qa = self.inner.copy_qubits() * self.inner.input_copies();
        let qb = self.inner.copy_qubits() * self.extra;
        let db = 1usize << qb;
        let out_qa = self.inner.copy_qubits() * self.inner.output_copies();
        let out_da = 1usize << out_qa;
        let mut out = DenseOperator::zeros(out_qa + qb)?;
        for i in 0..db {
            for j in 0..db {
                let block = DenseOperator::from_fn(qa, |r, c| x.get(r * db + i, c * db + j))?;
                let image = self.inner.apply(&block)?;
                for r in 0..out_da {
                    for c in 0..out_da {
                        out.set(r * db + i, c * db + j, image.get(r, c));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `d_TD(L(rho^{(x) t}), rho^{(x) t+m})`.
pub fn cloning_error<C: CloningChannel + ?Sized>(channel: &C, rho: &DenseOperator) -> Result<f64> {
    let input = rho.tensor_power(channel.input_copies())?;
    let out = channel.apply(&input)?;
    trace_distance(&out, &rho.tensor_power(channel.output_copies())?)
}

/// Cloning error on every `sigma_L` of the phaseless family, with the
/// worst case.
pub fn cloning_error_family<C: CloningChannel + ?Sized>(channel: &C, n: usize) -> Result<(f64, Vec<(Subspace, f64)>)> {
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for l in enumerate_subspaces(2 * n, n)? {
        let inst = StateHspInstance::phaseless(n, l.clone())?;
        let e = cloning_error(channel, &inst.sigma()?.dense()?)?;
        worst = worst.max(e);
        rows.push((l, e));
    }
    Ok((worst, rows))
}

/// Character-measurement distinguisher: picks a uniformly random subgroup
/// consistent with the outcomes and accepts iff it is the truth.
pub fn distinguisher_alg3<R: Rng + ?Sized>(
    outcomes: &[BitVector],
    truth: &Subspace,
    inst: &StateHspInstance,
    rng: &mut R,
) -> Result<bool> {
    let candidates = consistent_subgroups(outcomes, inst)?;
    if candidates.is_empty() {
        return Ok(false);
    }
    let pick = rng.random_range(0..candidates.len());
    Ok(&candidates[pick] == truth)
}

/// Acceptance probability of the distinguisher given outcomes spanning
/// `span`: `1/|consistent|` when the truth is consistent, else 0.
pub fn alg3_accept_prob(span: &Subspace, truth: &Subspace, inst: &StateHspInstance) -> Result<f64> {
    let allowed = inst.annihilator(truth)?;
    if !span.is_subspace_of(&allowed) {
        return Ok(0.0);
    }
    Ok(1.0 / consistent_count(span, inst)? as f64)
}

/// Exact acceptance of the distinguisher on `t` copies in state `rho`,
/// against the instance's hidden subgroup.
pub fn alg3_acceptance_exact(inst: &StateHspInstance, rho: &DenseOperator, t: usize) -> Result<f64> {
    let m = inst.group_dim();
    let mut cache: HashMap<Subspace, f64> = HashMap::new();
    let mut acc = 0.0;
    for (tuple, p) in outcome_distribution(inst, rho, t)? {
        if p == 0.0 {
            continue;
        }
        let span = Subspace::span(m, tuple)?;
        let a = match cache.get(&span) {
            Some(a) => *a,
            None => {
                let a = alg3_accept_prob(&span, inst.hidden(), inst)?;
                cache.insert(span, a);
                a
            }
        };
        acc += p * a;
    }
    Ok(acc)
}

/// Exact acceptance on `t` true copies of `sigma_H`, without dense algebra.
pub fn alg3_acceptance_true(inst: &StateHspInstance, t: usize) -> Result<f64> {
    let perp = inst.annihilator(inst.hidden())?;
    let k = perp.dim();
    budget::check("outcome tuples", budget::pow2(k * t), budget::limits().enumeration)?;
    let mut counts: HashMap<Subspace, u64> = HashMap::new();
    for code in 0..1u64 << (k * t) {
        let mask = (1u64 << k) - 1;
        let tuple = (0..t).map(|i| perp.combination((code >> (k * i)) & mask));
        *counts.entry(Subspace::span(inst.group_dim(), tuple)?).or_insert(0) += 1;
    }
    let total = (1u64 << (k * t)) as f64;
    let mut acc = 0.0;
    for (span, c) in counts {
        acc += c as f64 / total * alg3_accept_prob(&span, inst.hidden(), inst)?;
    }
    Ok(acc)
}

fn sample_alg3(inst: &StateHspInstance, law: &[(Vec<BitVector>, f64)], weights: &[f64], r: &mut StreamRng) -> Result<bool> {
    let (tuple, _) = &law[sample_index(weights, r)];
    distinguisher_alg3(tuple, inst.hidden(), inst, r)
}

/// Outcome of the cloning game on one hidden subgroup.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceOutcome {
    pub hidden: Subspace,
    /// `|Pr[accept | true copies] - Pr[accept | cloned copies]|`.
    pub advantage: GameReport,
    pub true_acceptance: f64,
    pub cloned_acceptance: f64,
}

/// Advantage of the distinguisher against a cloner over a family of
/// instances.
#[derive(Clone, Debug, PartialEq)]
pub struct CloneGameReport {
    pub channel: String,
    pub per_instance: Vec<InstanceOutcome>,
}

impl CloneGameReport {
    /// Largest advantage over the family.
    pub fn worst_case(&self) -> f64 {
        self.per_instance.iter().map(|o| o.advantage.value).fold(0.0, f64::max)
    }

    /// Smallest advantage over the family.
    pub fn min_advantage(&self) -> f64 {
        self.per_instance
            .iter()
            .map(|o| o.advantage.value)
            .fold(f64::INFINITY, f64::min)
    }

    /// The worst-case instance as a plain report.
    pub fn summary(&self) -> Option<GameReport> {
        self.per_instance
            .iter()
            .max_by(|a, b| a.advantage.value.total_cmp(&b.advantage.value))
            .map(|o| o.advantage.clone())
    }
}

/// Plays the distinguisher against `channel`: true copies are
/// `sigma^{(x) out}`, cloned copies are `L(sigma^{(x) in})`.
pub fn clone_game_instance<C: CloningChannel + ?Sized>(
    channel: &C,
    inst: &StateHspInstance,
    mode: EvalMode,
) -> Result<InstanceOutcome> {
    if channel.copy_qubits() != inst.qubits() {
        return Err(Error::ShapeMismatch(format!(
            "{} clones {}-qubit copies, instance has {} qubits",
            channel.name(),
            channel.copy_qubits(),
            inst.qubits()
        )));
    }
    let sigma = inst.sigma()?.dense()?;
    let (t_in, t_out) = (channel.input_copies(), channel.output_copies());
    let cloned = channel.apply(&sigma.tensor_power(t_in)?)?;
    match mode {
        EvalMode::Exact => {
            let genuine = alg3_acceptance_true(inst, t_out)?;
            let fake = alg3_acceptance_exact(inst, &cloned, t_out)?;
            Ok(InstanceOutcome {
                hidden: inst.hidden().clone(),
                advantage: GameReport::exact((genuine - fake).abs()),
                true_acceptance: genuine,
                cloned_acceptance: fake,
            })
        }
        EvalMode::MonteCarlo { trials, seed } => {
            let law = outcome_distribution(inst, &cloned, t_out)?;
            let weights: Vec<f64> = law.iter().map(|(_, p)| *p).collect();
            let sigma_state = inst.sigma()?;
            let (mut hits_true, mut hits_fake) = (0u64, 0u64);
            for i in 0..trials {
                let mut r = rng::stream(seed, i);
                let outcomes: Vec<BitVector> = (0..t_out).map(|_| sigma_state.sample(&mut r)).collect();
                hits_true += distinguisher_alg3(&outcomes, inst.hidden(), inst, &mut r)? as u64;
                hits_fake += sample_alg3(inst, &law, &weights, &mut r)? as u64;
            }
            let n = trials.max(1) as f64;
            let (p1, p2) = (hits_true as f64 / n, hits_fake as f64 / n);
            Ok(InstanceOutcome {
                hidden: inst.hidden().clone(),
                advantage: GameReport {
                    mode,
                    value: (p1 - p2).abs(),
                    ci_halfwidth: Z95 * ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / n).sqrt(),
                },
                true_acceptance: p1,
                cloned_acceptance: p2,
            })
        }
    }
}

/// The game on a single instance.
pub fn clone_game_advantage<C: CloningChannel + ?Sized>(
    channel: &C,
    inst: &StateHspInstance,
    mode: EvalMode,
) -> Result<CloneGameReport> {
    Ok(CloneGameReport {
        channel: channel.name(),
        per_instance: vec![clone_game_instance(channel, inst, mode)?],
    })
}

/// The game on every `n`-dimensional subspace of `Z_2^{2n}`. Monte Carlo
/// instances use consecutive seeds.
pub fn clone_game_family<C: CloningChannel + ?Sized>(channel: &C, n: usize, mode: EvalMode) -> Result<CloneGameReport> {
    let mut per_instance = Vec::new();
    for (k, l) in enumerate_subspaces(2 * n, n)?.into_iter().enumerate() {
        let inst = StateHspInstance::phaseless(n, l)?;
        let mode = match mode {
            EvalMode::Exact => EvalMode::Exact,
            EvalMode::MonteCarlo { trials, seed } => EvalMode::MonteCarlo {
                trials,
                seed: seed.wrapping_add(k as u64),
            },
        };
        per_instance.push(clone_game_instance(channel, &inst, mode)?);
    }
    Ok(CloneGameReport {
        channel: channel.name(),
        per_instance,
    })
}

/// `prod_{i=1}^n (1 - 2^{-i}) / 2`: no cloner of the phaseless family
/// from fewer than `n` copies does better.
pub fn lower_bound_cloning(n: usize) -> f64 {
    full_rank_prob(n) / 2.0
}

/// Names accepted by [`cloner_by_name`].
pub const CLONER_NAMES: [&str; 4] = ["measure_and_prepare", "append_maximally_mixed", "werner", "purify_then_clone"];

/// A built-in cloner for the phaseless family from `t` to `t + 1` copies.
pub fn cloner_by_name(name: &str, n: usize, t: usize) -> Result<Box<dyn CloningChannel>> {
    let q = 2 * n;
    Ok(match name {
        "measure_and_prepare" => Box::new(MeasureAndPrepare::new(n, t, 1)?),
        "append_maximally_mixed" => Box::new(AppendMaximallyMixed::new(q, t, 1)?),
        "werner" => Box::new(WernerCloner::new(q, t, 1)?),
        "purify_then_clone" => Box::new(PurifyThenClone::new(n, t, WernerCloner::new(2 * q, t, 1)?)?),
        other => return Err(Error::InvalidLabel(format!("unknown cloner {other:?}"))),
    })
}

/// Every built-in cloner that fits the dense budget at this size.
pub fn builtin_cloners(n: usize, t: usize) -> Vec<Box<dyn CloningChannel>> {
    CLONER_NAMES
        .iter()
        .filter_map(|name| cloner_by_name(name, n, t).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::all_vectors;

    fn lagrangians(n: usize) -> Vec<Subspace> {
        enumerate_subspaces(2 * n, n).unwrap()
    }

    #[test]
    fn werner_fidelities_match_formula() {
        for (q, t) in [(1, 1), (1, 2), (2, 1)] {
            let w = WernerCloner::new(q, t, 1).unwrap();
            let want = (t + 1) as f64 / (t + (1 << q)) as f64;
            assert!((werner_fidelity_formula(q, t, 1) - want).abs() < 1e-12);
            let f = worst_case_fidelity(&w, 50, 3).unwrap();
            assert!((f - want).abs() < 1e-9, "q={q} t={t}: {f} vs {want}");
        }
        assert!((werner_fidelity_formula(1, 2, 1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn werner_preserves_trace_and_positivity() {
        let mut r = rng::seeded(5);
        let w = WernerCloner::new(1, 2, 1).unwrap();
        for _ in 0..5 {
            let rho = DenseOperator::random_density(2, &mut r).unwrap();
            let out = w.apply(&rho).unwrap();
            assert!((out.trace().re - 1.0).abs() < 1e-10);
            out.check_density().unwrap();
        }
    }

    #[test]
    fn oracle_has_zero_error() {
        let inst = StateHspInstance::phaseless(1, lagrangians(1).remove(0)).unwrap();
        let sigma = inst.sigma().unwrap().dense().unwrap();
        let oracle = TrueCopyOracle::new(sigma.clone(), 1, 1).unwrap();
        assert!(cloning_error(&oracle, &sigma).unwrap() < 1e-12);
        let game = clone_game_advantage(&oracle, &inst, EvalMode::Exact).unwrap();
        assert!(game.worst_case() < 1e-12);
    }

    #[test]
    fn append_mixed_error_on_pure_qubit() {
        let zero = DenseState::basis(1, 0).unwrap().density().unwrap();
        let ch = AppendMaximallyMixed::new(1, 1, 1).unwrap();
        assert!((cloning_error(&ch, &zero).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn append_mixed_error_matches_direct_formula() {
        let l = lagrangians(2).remove(5);
        let inst = StateHspInstance::phaseless(2, l).unwrap();
        let sigma = inst.sigma().unwrap().dense().unwrap();
        let ch = AppendMaximallyMixed::new(4, 1, 1).unwrap();
        let direct = trace_distance(
            &sigma.tensor(&DenseOperator::maximally_mixed(4).unwrap()).unwrap(),
            &sigma.tensor(&sigma).unwrap(),
        )
        .unwrap();
        // Both are diagonal in the Bell basis: 1/2 * (4 * 4 * |1/16 - 1/64| + 12 * 4 / 64).
        assert!((direct - 0.75).abs() < 1e-9);
        assert!((cloning_error(&ch, &sigma).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn alg3_examples() {
        let l = lagrangians(2).remove(0);
        let inst = StateHspInstance::phaseless(2, l.clone()).unwrap();
        let perp = inst.annihilator(&l).unwrap();
        let mut r = rng::seeded(1);
        let spanning = perp.basis_vectors().to_vec();
        for _ in 0..20 {
            assert!(distinguisher_alg3(&spanning, &l, &inst, &mut r).unwrap());
        }
        let none = Subspace::zero(4);
        assert!((alg3_accept_prob(&none, &l, &inst).unwrap() - 1.0 / 35.0).abs() < 1e-15);
        let outside = all_vectors(4).find(|v| !perp.contains(v)).unwrap();
        assert!(!distinguisher_alg3(std::slice::from_ref(&outside), &l, &inst, &mut r).unwrap());
        let s = Subspace::span(4, [outside]).unwrap();
        assert_eq!(alg3_accept_prob(&s, &l, &inst).unwrap(), 0.0);
    }

    #[test]
    fn true_acceptance_dense_and_analytic_agree() {
        for l in lagrangians(2).into_iter().step_by(7) {
            let inst = StateHspInstance::phaseless(2, l).unwrap();
            let sigma = inst.sigma().unwrap().dense().unwrap();
            for t in 1..=2 {
                let dense = alg3_acceptance_exact(&inst, &sigma.tensor_power(t).unwrap(), t).unwrap();
                let analytic = alg3_acceptance_true(&inst, t).unwrap();
                assert!((dense - analytic).abs() < 1e-12);
            }
        }
        let inst = StateHspInstance::phaseless(2, lagrangians(2).remove(0)).unwrap();
        assert!((alg3_acceptance_true(&inst, 2).unwrap() - 16.0 / 35.0).abs() < 1e-12);
        assert!((alg3_acceptance_true(&inst, 1).unwrap() - 4.0 / 35.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_constants() {
        assert!((lower_bound_cloning(2) - 3.0 / 16.0).abs() < 1e-15);
        for n in 1..=64 {
            assert!(lower_bound_cloning(n) >= 0.14);
        }
        assert!((lower_bound_cloning(64) - 0.144_394).abs() < 1e-5);
    }

    #[test]
    fn measure_and_prepare_beats_nothing() {
        let l = lagrangians(2).remove(3);
        let inst = StateHspInstance::phaseless(2, l).unwrap();
        let mp = MeasureAndPrepare::new(2, 1, 1).unwrap();
        let out = clone_game_advantage(&mp, &inst, EvalMode::Exact).unwrap();
        assert!(out.min_advantage() >= 3.0 / 16.0 - 1e-9);
        let o = &out.per_instance[0];
        assert!(o.cloned_acceptance <= alg3_acceptance_true(&inst, 1).unwrap() + 1e-12);
    }

    #[test]
    fn measure_and_prepare_is_exact_once_outcomes_span() {
        // With n = 1 and two copies, spanning outcomes fix L, so the output
        // on that event is exactly sigma_L^{(x) 3}.
        for l in lagrangians(1) {
            let inst = StateHspInstance::phaseless(1, l.clone()).unwrap();
            let mp = MeasureAndPrepare::new(1, 2, 1).unwrap();
            let perp = inst.annihilator(&l).unwrap();
            let sigma = inst.sigma().unwrap().dense().unwrap();
            assert!(mp.prepared(&perp).unwrap().max_abs_diff(&sigma.tensor_power(3).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn channels_preserve_trace() {
        let mut r = rng::seeded(9);
        let rho = DenseOperator::random_density(2, &mut r).unwrap();
        for ch in builtin_cloners(1, 1) {
            let out = ch.apply(&rho).unwrap();
            assert!((out.trace().re - 1.0).abs() < 1e-10, "{}", ch.name());
            out.check_density().unwrap();
        }
        assert_eq!(builtin_cloners(1, 1).len(), 4);
        assert_eq!(builtin_cloners(2, 1).len(), 3);
    }

    #[test]
    fn purify_then_clone_rejects_large_instances() {
        assert!(matches!(
            cloner_by_name("purify_then_clone", 2, 1),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn lifting_preserves_error() {
        for l in lagrangians(1) {
            let inst = StateHspInstance::phaseless(1, l).unwrap();
            let sigma = inst.sigma().unwrap().dense().unwrap();
            for name in ["measure_and_prepare", "append_maximally_mixed", "werner"] {
                let base = cloner_by_name(name, 1, 1).unwrap();
                let e = cloning_error(&base, &sigma).unwrap();
                let lifted = Lifted::new(base, 1).unwrap();
                let e2 = cloning_error(&lifted, &sigma).unwrap();
                assert!((e - e2).abs() < 1e-10, "{name}: {e} vs {e2}");
            }
        }
    }

    #[test]
    fn lifted_acts_blockwise() {
        let mut r = rng::seeded(2);
        let a = DenseOperator::random_density(2, &mut r).unwrap();
        let b = DenseOperator::random_density(2, &mut r).unwrap();
        let w = WernerCloner::new(2, 1, 1).unwrap();
        let lifted = Lifted::new(&w, 1).unwrap();
        let out = lifted.apply(&a.tensor(&b).unwrap()).unwrap();
        let want = w.apply(&a).unwrap().tensor(&b).unwrap();
        assert!(out.max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn advantage_bounded_by_cloning_error() {
        for l in lagrangians(1) {
            let inst = StateHspInstance::phaseless(1, l).unwrap();
            let sigma = inst.sigma().unwrap().dense().unwrap();
            for ch in builtin_cloners(1, 1) {
                let adv = clone_game_advantage(&ch, &inst, EvalMode::Exact).unwrap().worst_case();
                let err = cloning_error(&ch, &sigma).unwrap();
                assert!(adv <= err + 1e-9, "{}: {adv} > {err}", ch.name());
            }
        }
    }

    #[test]
    fn monte_carlo_tracks_exact() {
        let l = lagrangians(2).remove(0);
        let inst = StateHspInstance::phaseless(2, l).unwrap();
        let mp = MeasureAndPrepare::new(2, 1, 1).unwrap();
        let exact = clone_game_instance(&mp, &inst, EvalMode::Exact).unwrap();
        let mc = clone_game_instance(&mp, &inst, EvalMode::monte_carlo(4000, 11)).unwrap();
        assert!((mc.advantage.value - exact.advantage.value).abs() <= 2.0 * mc.advantage.ci_halfwidth + 0.01);
        let again = clone_game_instance(&mp, &inst, EvalMode::monte_carlo(4000, 11)).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn bell_sampling_matches_dense_measurement() {
        let l = lagrangians(2).remove(0);
        let inst = StateHspInstance::phaseless(2, l.clone()).unwrap();
        let sigma = inst.sigma().unwrap();
        let dense = sigma.dense().unwrap();
        let povm = statehsp::character_povm(&inst).unwrap();
        let mut r = rng::seeded(77);
        let draws = 10_000;
        let (mut fast, mut slow) = ([0u32; 16], [0u32; 16]);
        for _ in 0..draws {
            fast[statehsp::bell_sample_fast(&sigma, &mut r).to_index() as usize] += 1;
            slow[crate::qsim::povm_sample(&dense, &povm, &mut r).unwrap()] += 1;
        }
        // Two-sample chi-square over the 4 support cells (3 dof); the 0.001
        // critical value is 16.27.
        let mut chi2 = 0.0;
        for k in 0..16 {
            let (a, b) = (fast[k] as f64, slow[k] as f64);
            if a + b > 0.0 {
                chi2 += (a - b).powi(2) / (a + b);
            }
        }
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }
}
