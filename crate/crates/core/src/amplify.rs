//! The sample amplification game for linear function classes.
//!
//! Samples live in `X = GF(2)^n x GF(2)`: a uniform input and its label
//! under the hidden member `f`. An amplifier turns `t` samples into `t + 1`
//! (repeated for `m` extra samples). The consistent-learner distinguisher
//! accepts a dataset when a uniformly random consistent hypothesis equals
//! `f`; its acceptance gap between genuine and amplified data lower-bounds
//! the amplifier's total variation error.

use std::collections::BTreeMap;

use rand::Rng;

use crate::budget;
use crate::error::{Error, Result};
use crate::funclass::{self, Dataset, Hypothesis, LabeledSample, LinearFunctionClass};
use crate::gf2::{self, BitVector, Subspace};
use crate::report::{EvalMode, GameReport, Z95};
use crate::rng::{self, StreamRng};

/// Uniform inputs labeled by a fixed class member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuredDistribution {
    class: LinearFunctionClass,
    truth: Hypothesis,
}

impl StructuredDistribution {
    pub fn new(class: LinearFunctionClass, truth: Hypothesis) -> Result<Self> {
        if truth.coeffs().len() != class.dim() {
            return Err(Error::LengthMismatch {
                expected: class.dim(),
                found: truth.coeffs().len(),
            });
        }
        Ok(StructuredDistribution { class, truth })
    }

    pub fn class(&self) -> &LinearFunctionClass {
        &self.class
    }

    pub fn truth(&self) -> &Hypothesis {
        &self.truth
    }

    pub fn label(&self, x: u64) -> bool {
        self.class.feature(x).dot(self.truth.coeffs())
    }

    fn labeled(&self, x: u64) -> LabeledSample {
        LabeledSample::new(BitVector::from_index(x, self.class.input_bits()), self.label(x))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LabeledSample {
        let x = self.class.random_input(rng);
        self.labeled(x)
    }
}

/// `t` i.i.d. samples.
pub fn sample_dataset<R: Rng + ?Sized>(dist: &StructuredDistribution, t: usize, rng: &mut R) -> Dataset {
    (0..t).map(|_| dist.sample(rng)).collect()
}

/// Acceptance probability of the consistent-learner test on `z`:
/// `1 / n_F(z)` when `truth` is consistent, otherwise zero.
pub fn alg1_accept_prob(class: &LinearFunctionClass, z: &[LabeledSample], truth: &Hypothesis) -> Result<f64> {
    Ok(match funclass::consistent_set(class, z)? {
        Some(set) if set.contains(truth) => (-(set.dim() as f64)).exp2(),
        _ => 0.0,
    })
}

/// One run of the consistent-learner test: draw a uniformly random
/// consistent hypothesis and accept iff it is `truth`. Datasets with no
/// consistent hypothesis are rejected.
pub fn distinguisher_alg1<R: Rng + ?Sized>(
    class: &LinearFunctionClass,
    z: &[LabeledSample],
    truth: &Hypothesis,
    rng: &mut R,
) -> Result<bool> {
    Ok(match funclass::consistent_set(class, z)? {
        Some(set) => set.sample(rng) == *truth,
        None => false,
    })
}

/// Exact acceptance on `t` genuine samples, `E[2^(rank - k)]` over the rank
/// of the sampled feature vectors.
pub fn acceptance_prob_exact(dist: &StructuredDistribution, t: usize) -> Result<f64> {
    let k = dist.class.dim();
    let ranks = funclass::rank_distribution(&dist.class, t)?;
    Ok(ranks
        .iter()
        .enumerate()
        .map(|(r, p)| p * (r as f64 - k as f64).exp2())
        .sum())
}

/// A stochastic map from `t` samples to `t + 1`.
///
/// Amplifiers see the class but not the hidden member, except for
/// [`PerfectOracle`], which exists as a reference point.
pub trait Amplifier {
    fn name(&self) -> String;

    fn amplify(&self, class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset;

    /// Exact output law given `z`, as `(output, probability)` pairs.
    /// `None` if the amplifier has no exact form.
    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>>;
}

fn with_appended(z: &[LabeledSample], s: LabeledSample) -> Dataset {
    let mut out = z.to_vec();
    out.push(s);
    out
}

fn uniform_element(class: &LinearFunctionClass, rng: &mut StreamRng) -> LabeledSample {
    let x = class.random_input(rng);
    LabeledSample::new(BitVector::from_index(x, class.input_bits()), rng.random())
}

fn uniform_element_kernel(class: &LinearFunctionClass, z: &[LabeledSample]) -> Vec<(Dataset, f64)> {
    let w = 1.0 / (2 * class.domain_size()) as f64;
    (0..class.domain_size())
        .flat_map(|x| [false, true].map(|y| (x, y)))
        .map(|(x, y)| {
            let s = LabeledSample::new(BitVector::from_index(x, class.input_bits()), y);
            (with_appended(z, s), w)
        })
        .collect()
}

/// Appends a copy of a uniformly chosen existing sample. With no samples it
/// appends a uniform element of `X`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PadRepeat;

impl Amplifier for PadRepeat {
    fn name(&self) -> String {
        "pad_repeat".into()
    }

    fn amplify(&self, class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset {
        if z.is_empty() {
            return vec![uniform_element(class, rng)];
        }
        let i = rng.random_range(0..z.len());
        with_appended(z, z[i].clone())
    }

    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>> {
        if z.is_empty() {
            return Some(uniform_element_kernel(class, z));
        }
        let w = 1.0 / z.len() as f64;
        Some(z.iter().map(|s| (with_appended(z, s.clone()), w)).collect())
    }
}

/// Appends a uniform element of `X`, ignoring the data.
#[derive(Clone, Copy, Debug, Default)]
pub struct ObliviousUniform;

impl Amplifier for ObliviousUniform {
    fn name(&self) -> String {
        "oblivious_uniform".into()
    }

    fn amplify(&self, class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset {
        with_appended(z, uniform_element(class, rng))
    }

    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>> {
        Some(uniform_element_kernel(class, z))
    }
}

/// Picks a uniformly random consistent hypothesis (any hypothesis if none is
/// consistent) and appends a fresh input labeled by it.
#[derive(Clone, Copy, Debug, Default)]
pub struct LearnThenSample;

fn consistent_or_all(class: &LinearFunctionClass, z: &[LabeledSample]) -> funclass::ConsistentSet {
    funclass::consistent_set(class, z)
        .ok()
        .flatten()
        .unwrap_or_else(|| funclass::consistent_set(class, &[]).ok().flatten().expect("empty data is consistent"))
}

impl Amplifier for LearnThenSample {
    fn name(&self) -> String {
        "learn_then_sample".into()
    }

    fn amplify(&self, class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset {
        let guess = consistent_or_all(class, z).sample(rng);
        let x = class.random_input(rng);
        let y = class.feature(x).dot(guess.coeffs());
        with_appended(z, LabeledSample::new(BitVector::from_index(x, class.input_bits()), y))
    }

    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>> {
        let set = consistent_or_all(class, z);
        let w = 1.0 / class.domain_size() as f64;
        let mut out = Vec::new();
        for x in 0..class.domain_size() {
            let y = class.feature(x);
            let xv = BitVector::from_index(x, class.input_bits());
            if set.determines(&y) {
                out.push((with_appended(z, LabeledSample::new(xv, set.particular_value(&y))), w));
            } else {
                // The label is a nonconstant linear function on the coset.
                for label in [false, true] {
                    out.push((with_appended(z, LabeledSample::new(xv.clone(), label)), w / 2.0));
                }
            }
        }
        Some(out)
    }
}

/// Inserts a copy of a uniformly chosen existing sample at a uniformly
/// chosen position. With no samples it appends a uniform element of `X`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BirthdayRepeat;

fn insert_at(z: &[LabeledSample], pos: usize, s: LabeledSample) -> Dataset {
    let mut out = z.to_vec();
    out.insert(pos, s);
    out
}

impl Amplifier for BirthdayRepeat {
    fn name(&self) -> String {
        "birthday_repeat_allfn".into()
    }

    fn amplify(&self, class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset {
        if z.is_empty() {
            return vec![uniform_element(class, rng)];
        }
        let i = rng.random_range(0..z.len());
        let pos = rng.random_range(0..=z.len());
        insert_at(z, pos, z[i].clone())
    }

    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>> {
        if z.is_empty() {
            return Some(uniform_element_kernel(class, z));
        }
        let w = 1.0 / (z.len() * (z.len() + 1)) as f64;
        let mut out = Vec::new();
        for s in z {
            for pos in 0..=z.len() {
                out.push((insert_at(z, pos, s.clone()), w));
            }
        }
        Some(out)
    }
}

/// Appends a fresh genuine sample. It knows the hidden member, so it is a
/// reference point rather than a real amplifier.
#[derive(Clone, Debug)]
pub struct PerfectOracle {
    dist: StructuredDistribution,
}

impl PerfectOracle {
    pub fn new(dist: StructuredDistribution) -> Self {
        PerfectOracle { dist }
    }
}

impl Amplifier for PerfectOracle {
    fn name(&self) -> String {
        "perfect_oracle".into()
    }

    fn amplify(&self, _class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset {
        with_appended(z, self.dist.sample(rng))
    }

    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>> {
        let w = 1.0 / class.domain_size() as f64;
        Some(
            (0..class.domain_size())
                .map(|x| (with_appended(z, self.dist.labeled(x)), w))
                .collect(),
        )
    }
}

/// Runs `inner` on the first `prefix` samples and appends the rest
/// untouched.
pub struct Lifted<A> {
    inner: A,
    prefix: usize,
}

impl<A: Amplifier> Lifted<A> {
    pub fn new(inner: A, prefix: usize) -> Self {
        Lifted { inner, prefix }
    }
}

impl<A: Amplifier> Amplifier for Lifted<A> {
    fn name(&self) -> String {
        format!("lifted({}, prefix={})", self.inner.name(), self.prefix)
    }

    fn amplify(&self, class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset {
        let cut = self.prefix.min(z.len());
        let mut out = self.inner.amplify(class, &z[..cut], rng);
        out.extend_from_slice(&z[cut..]);
        out
    }

    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>> {
        let cut = self.prefix.min(z.len());
        let inner = self.inner.kernel(class, &z[..cut])?;
        Some(
            inner
                .into_iter()
                .map(|(mut d, p)| {
                    d.extend_from_slice(&z[cut..]);
                    (d, p)
                })
                .collect(),
        )
    }
}

/// The amplifiers that do not know the hidden member.
pub fn builtin_amplifiers() -> Vec<Box<dyn Amplifier>> {
    vec![
        Box::new(PadRepeat),
        Box::new(ObliviousUniform),
        Box::new(LearnThenSample),
        Box::new(BirthdayRepeat),
    ]
}

/// Looks up a built-in amplifier by name.
pub fn amplifier_by_name(name: &str) -> Option<Box<dyn Amplifier>> {
    builtin_amplifiers().into_iter().find(|a| a.name() == name)
}

impl<A: Amplifier + ?Sized> Amplifier for &A {
    fn name(&self) -> String {
        (**self).name()
    }

    fn amplify(&self, class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset {
        (**self).amplify(class, z, rng)
    }

    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>> {
        (**self).kernel(class, z)
    }
}

impl<A: Amplifier + ?Sized> Amplifier for Box<A> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn amplify(&self, class: &LinearFunctionClass, z: &[LabeledSample], rng: &mut StreamRng) -> Dataset {
        (**self).amplify(class, z, rng)
    }

    fn kernel(&self, class: &LinearFunctionClass, z: &[LabeledSample]) -> Option<Vec<(Dataset, f64)>> {
        (**self).kernel(class, z)
    }
}

/// An exact law over datasets.
pub type DatasetLaw = BTreeMap<Dataset, f64>;

fn check_dataset_budget(dist: &StructuredDistribution, len: usize) -> Result<()> {
    let bits = (dist.class.input_bits() + 1) * len;
    budget::check("dataset enumeration", budget::pow2(bits), budget::limits().enumeration)
}

/// Exact law of `t` genuine samples.
pub fn true_law(dist: &StructuredDistribution, t: usize) -> Result<DatasetLaw> {
    check_dataset_budget(dist, t)?;
    let size = dist.class.domain_size();
    let w = (size as f64).powi(-(t as i32));
    let mut law = DatasetLaw::new();
    for seq in 0..size.pow(t as u32) {
        let z: Dataset = (0..t).map(|i| dist.labeled((seq / size.pow(i as u32)) % size)).collect();
        law.insert(z, w);
    }
    Ok(law)
}

/// Pushes a law through one amplifier step.
pub fn push_forward<A: Amplifier + ?Sized>(amp: &A, class: &LinearFunctionClass, law: &DatasetLaw) -> Result<DatasetLaw> {
    let mut out = DatasetLaw::new();
    for (z, p) in law {
        let kernel = amp
            .kernel(class, z)
            .ok_or_else(|| Error::OutOfRange(format!("{} has no exact kernel", amp.name())))?;
        for (d, q) in kernel {
            *out.entry(d).or_default() += p * q;
        }
    }
    Ok(out)
}

/// Exact law of `amp` applied `m` times to `t` genuine samples.
pub fn amplified_law<A: Amplifier + ?Sized>(
    dist: &StructuredDistribution,
    amp: &A,
    t: usize,
    m: usize,
) -> Result<DatasetLaw> {
    check_dataset_budget(dist, t + m)?;
    let mut law = true_law(dist, t)?;
    for _ in 0..m {
        law = push_forward(amp, &dist.class, &law)?;
    }
    Ok(law)
}

/// Exact acceptance of the consistent-learner test under `law`.
pub fn law_acceptance(dist: &StructuredDistribution, law: &DatasetLaw) -> Result<f64> {
    let mut acc = 0.0;
    for (z, p) in law {
        acc += p * alg1_accept_prob(&dist.class, z, &dist.truth)?;
    }
    Ok(acc)
}

/// Total variation distance between two laws.
pub fn tv_distance(p: &DatasetLaw, q: &DatasetLaw) -> f64 {
    let mut sum = 0.0;
    for (z, a) in p {
        sum += (a - q.get(z).copied().unwrap_or(0.0)).abs();
    }
    for (z, b) in q {
        if !p.contains_key(z) {
            sum += b;
        }
    }
    sum / 2.0
}

/// Exact TV distance between `amp` applied `m` times to `t` samples and
/// `t + m` genuine samples.
pub fn tv_error_exact<A: Amplifier + ?Sized>(dist: &StructuredDistribution, amp: &A, t: usize, m: usize) -> Result<f64> {
    let amplified = amplified_law(dist, amp, t, m)?;
    let genuine = true_law(dist, t + m)?;
    Ok(tv_distance(&amplified, &genuine))
}

/// Acceptance gap of the consistent-learner test between `t + 1` genuine
/// samples and `amp` applied to `t` samples, in absolute value.
pub fn advantage<A: Amplifier + ?Sized>(
    dist: &StructuredDistribution,
    amp: &A,
    t: usize,
    mode: EvalMode,
) -> Result<GameReport> {
    match mode {
        EvalMode::Exact => {
            let genuine = acceptance_prob_exact(dist, t + 1)?;
            let amplified = law_acceptance(dist, &amplified_law(dist, amp, t, 1)?)?;
            Ok(GameReport::exact((genuine - amplified).abs()))
        }
        EvalMode::MonteCarlo { trials, seed } => {
            let (mut hits_true, mut hits_amp) = (0u64, 0u64);
            for i in 0..trials {
                let mut r = rng::stream(seed, i);
                let z = sample_dataset(dist, t + 1, &mut r);
                hits_true += distinguisher_alg1(&dist.class, &z, &dist.truth, &mut r)? as u64;
                let z = sample_dataset(dist, t, &mut r);
                let out = amp.amplify(&dist.class, &z, &mut r);
                hits_amp += distinguisher_alg1(&dist.class, &out, &dist.truth, &mut r)? as u64;
            }
            let n = trials.max(1) as f64;
            let (p1, p2) = (hits_true as f64 / n, hits_amp as f64 / n);
            let ci = Z95 * ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / n).sqrt();
            Ok(GameReport {
                mode,
                value: (p1 - p2).abs(),
                ci_halfwidth: ci,
            })
        }
    }
}

/// `p^t` for the class (the same for every member).
fn unique_id_exact(class: &LinearFunctionClass, t: usize) -> Result<f64> {
    let a = Hypothesis::new(BitVector::zeros(class.dim()));
    Ok(funclass::unique_id_prob(class, &a, t, EvalMode::Exact)?.value)
}

/// `p_F / 2` with `p_F` the identification probability at the teaching
/// dimension: no amplifier from `t < b_F` samples has smaller error.
pub fn lower_bound_teaching(class: &LinearFunctionClass) -> Result<f64> {
    let b = funclass::teaching_dimension(class)?;
    Ok(unique_id_exact(class, b)? / 2.0)
}

/// `p^d / 2 - p^(d-1)`, valid for every `t <= d - 1`.
pub fn lower_bound_general(class: &LinearFunctionClass, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::OutOfRange("sample count d must be at least 1".into()));
    }
    Ok(unique_id_exact(class, d)? / 2.0 - unique_id_exact(class, d - 1)?)
}

/// `prod_{i=1}^n (1 - 2^-i) / 2`, the parity bound at width `n`.
pub fn parity_lower_bound(n: usize) -> f64 {
    gf2::full_rank_prob(n) / 2.0
}

/// Bracket on the minimax error of one-step amplification from `t`
/// samples: the any-amplifier lower bound (zero when `t` reaches the
/// teaching dimension) and the smallest exact TV among built-in amplifiers.
pub fn minimax_bracket(dist: &StructuredDistribution, t: usize) -> Result<(f64, f64, String)> {
    let b = funclass::teaching_dimension(&dist.class)?;
    let lower = if t < b { lower_bound_teaching(&dist.class)? } else { 0.0 };
    let mut best = (f64::INFINITY, String::new());
    for amp in builtin_amplifiers() {
        let tv = tv_error_exact(dist, &amp, t, 1)?;
        if tv < best.0 {
            best = (tv, amp.name());
        }
    }
    Ok((lower, best.0, best.1))
}

/// Inputs uniform on a subspace `V` of GF(2)^m, labeled by parities: as a
/// class on `V` this is the parity class on `dim V` coordinates.
pub fn restricted_parity_class(support: &Subspace) -> Result<LinearFunctionClass> {
    let dim = support.dim();
    let m = support.ambient();
    // Input j of the restricted class is the element with coefficients j.
    let tables: Vec<BitVector> = (0..m)
        .map(|i| {
            let mut t = BitVector::zeros(1 << dim);
            for j in 0..(1u64 << dim) {
                if support.combination(j).get(i) {
                    t.set(j as usize, true);
                }
            }
            t
        })
        .collect();
    // Coordinate functions restricted to V span a dim-dimensional space;
    // keep an independent subset.
    let mut kept: Vec<BitVector> = Vec::new();
    let mut span = Subspace::zero(1 << dim);
    for t in tables {
        if !span.contains(&t) {
            span = span.extend(&t)?;
            kept.push(t);
        }
    }
    LinearFunctionClass::from_truth_tables(dim, kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funclass::{all_functions_class, constant_class, parity_class, reed_muller_class};

    fn parity_dist(n: usize, truth: u64) -> StructuredDistribution {
        StructuredDistribution::new(parity_class(n).unwrap(), Hypothesis::from_index(truth, n)).unwrap()
    }

    fn linear_dists() -> Vec<StructuredDistribution> {
        let mut out = Vec::new();
        for n in 1..=3 {
            for truth in 0..(1u64 << n) {
                out.push(parity_dist(n, truth));
            }
        }
        let rm = reed_muller_class(2, 1).unwrap();
        out.push(StructuredDistribution::new(rm.clone(), Hypothesis::from_index(5, 3)).unwrap());
        out.push(StructuredDistribution::new(constant_class(2).unwrap(), Hypothesis::from_index(1, 1)).unwrap());
        out
    }

    #[test]
    fn sampling_is_consistent_and_uniform() {
        let d = parity_dist(3, 0b101);
        let mut r = rng::seeded(4);
        assert!(sample_dataset(&d, 0, &mut r).is_empty());
        for s in sample_dataset(&d, 10_000, &mut r) {
            assert_eq!(s.y, funclass::evaluate(d.class(), d.truth(), &s.x).unwrap());
        }
        let draws = 100_000;
        let mut counts = [0usize; 8];
        for s in sample_dataset(&d, draws, &mut r) {
            counts[s.x.to_index() as usize] += 1;
        }
        let p = 1.0 / 8.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn distinguisher_examples() {
        let d = parity_dist(2, 0b10);
        let c = d.class();
        let mut r = rng::seeded(1);
        let z = vec![
            LabeledSample::new(BitVector::parse("10").unwrap(), false),
            LabeledSample::new(BitVector::parse("01").unwrap(), true),
        ];
        for _ in 0..100 {
            assert!(distinguisher_alg1(c, &z, d.truth(), &mut r).unwrap());
        }
        assert_eq!(alg1_accept_prob(c, &[], d.truth()).unwrap(), 0.25);
        let hits = (0..40_000)
            .filter(|_| distinguisher_alg1(c, &[], d.truth(), &mut r).unwrap())
            .count() as f64;
        assert!((hits / 40_000.0 - 0.25).abs() < 0.01);
        let wrong = vec![LabeledSample::new(BitVector::parse("01").unwrap(), false)];
        assert_eq!(alg1_accept_prob(c, &wrong, d.truth()).unwrap(), 0.0);
        for _ in 0..100 {
            assert!(!distinguisher_alg1(c, &wrong, d.truth(), &mut r).unwrap());
        }
    }

    #[test]
    fn acceptance_examples() {
        let d = parity_dist(2, 3);
        assert_eq!(acceptance_prob_exact(&d, 0).unwrap(), 0.25);
        assert_eq!(acceptance_prob_exact(&d, 1).unwrap(), 0.4375);
        assert_eq!(acceptance_prob_exact(&d, 2).unwrap(), 0.671875);
        // Agrees with the enumerated law.
        for t in 0..=3 {
            let by_law = law_acceptance(&d, &true_law(&d, t).unwrap()).unwrap();
            assert!((by_law - acceptance_prob_exact(&d, t).unwrap()).abs() < 1e-15);
        }
        // Only the full sample set is certain to identify.
        let c = StructuredDistribution::new(constant_class(1).unwrap(), Hypothesis::from_index(0, 1)).unwrap();
        assert_eq!(acceptance_prob_exact(&c, 1).unwrap(), 1.0);
    }

    #[test]
    fn kernels_are_stochastic() {
        let d = parity_dist(2, 1);
        let oracle = PerfectOracle::new(d.clone());
        let lifted = Lifted::new(PadRepeat, 1);
        let builtins = builtin_amplifiers();
        let mut amps: Vec<&dyn Amplifier> = builtins.iter().map(|b| b.as_ref()).collect();
        amps.push(&oracle);
        amps.push(&lifted);
        for t in 0..=2 {
            for (z, _) in true_law(&d, t).unwrap() {
                for a in &amps {
                    let k = a.kernel(d.class(), &z).unwrap();
                    let total: f64 = k.iter().map(|(_, p)| p).sum();
                    assert!((total - 1.0).abs() < 1e-12, "{}", a.name());
                    assert!(k.iter().all(|(out, _)| out.len() == t + 1));
                }
            }
        }
    }

    #[test]
    fn sampling_matches_kernels() {
        let d = parity_dist(2, 2);
        let z = sample_dataset(&d, 2, &mut rng::seeded(10));
        for amp in builtin_amplifiers() {
            let mut exact = DatasetLaw::new();
            for (out, p) in amp.kernel(d.class(), &z).unwrap() {
                *exact.entry(out).or_default() += p;
            }
            let trials = 20_000;
            let mut counts: BTreeMap<Dataset, usize> = BTreeMap::new();
            let mut r = rng::seeded(77);
            for _ in 0..trials {
                *counts.entry(amp.amplify(d.class(), &z, &mut r)).or_default() += 1;
            }
            for (out, c) in counts {
                let p = *exact.get(&out).expect("sampled output lies in the kernel support");
                let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
                assert!((c as f64 - trials as f64 * p).abs() < 4.0 * sigma + 1.0, "{}", amp.name());
            }
        }
    }

    #[test]
    fn pad_repeat_always_duplicates() {
        let d = parity_dist(3, 6);
        let mut r = rng::seeded(2);
        for t in 1..5 {
            let out = PadRepeat.amplify(d.class(), &sample_dataset(&d, t, &mut r), &mut r);
            let distinct: std::collections::BTreeSet<_> = out.iter().collect();
            assert!(distinct.len() < out.len());
        }
    }

    #[test]
    fn perfect_oracle_has_no_error() {
        for d in linear_dists().into_iter().take(6) {
            let o = PerfectOracle::new(d.clone());
            for t in 0..=2 {
                assert!(tv_error_exact(&d, &o, t, 1).unwrap() < 1e-15);
                assert!(tv_error_exact(&d, &o, t, 2).unwrap() < 1e-15);
                assert!(advantage(&d, &o, t, EvalMode::Exact).unwrap().value < 1e-15);
            }
        }
    }

    #[test]
    fn advantage_examples() {
        let d2 = parity_dist(2, 3);
        let adv = advantage(&d2, &PadRepeat, 1, EvalMode::Exact).unwrap().value;
        // Two genuine samples accept w.p. 0.671875; a padded single sample
        // carries the information of one sample, 0.4375.
        assert!((adv - (0.671875 - 0.4375)).abs() < 1e-15);
        assert!(adv >= 3.0 / 16.0 - 1e-9);
        let d3 = parity_dist(3, 5);
        let adv3 = advantage(&d3, &ObliviousUniform, 2, EvalMode::Exact).unwrap().value;
        assert!(adv3 >= 21.0 / 128.0 - 1e-9);
    }

    #[test]
    fn lower_bound_holds_for_every_builtin() {
        for n in 2..=3 {
            let bound = parity_lower_bound(n);
            for truth in 0..(1u64 << n) {
                let d = parity_dist(n, truth);
                for amp in builtin_amplifiers() {
                    let adv = advantage(&d, &amp, n - 1, EvalMode::Exact).unwrap().value;
                    assert!(adv >= bound - 1e-9, "{} n={n}: {adv} < {bound}", amp.name());
                }
            }
        }
    }

    #[test]
    fn amplified_data_never_helps_the_test() {
        for d in linear_dists() {
            let b = funclass::teaching_dimension(d.class()).unwrap();
            for t in 0..=b {
                let base = acceptance_prob_exact(&d, t).unwrap();
                for amp in builtin_amplifiers() {
                    let acc = law_acceptance(&d, &amplified_law(&d, &amp, t, 1).unwrap()).unwrap();
                    assert!(acc <= base + 1e-12, "{} {} t={t}: {acc} > {base}", d.class().name(), amp.name());
                }
            }
        }
    }

    #[test]
    fn advantage_never_exceeds_tv() {
        for d in linear_dists().into_iter().step_by(3) {
            for t in 0..=2 {
                for amp in builtin_amplifiers() {
                    let adv = advantage(&d, &amp, t, EvalMode::Exact).unwrap().value;
                    let tv = tv_error_exact(&d, &amp, t, 1).unwrap();
                    assert!(adv <= tv + 1e-12);
                }
            }
        }
    }

    #[test]
    fn lifting_preserves_tv() {
        let d = parity_dist(2, 1);
        for amp in builtin_amplifiers() {
            for prefix in 0..=2 {
                let base = tv_error_exact(&d, &amp, prefix, 1).unwrap();
                for extra in 0..=1 {
                    let lifted = Lifted::new(&amp, prefix);
                    let tv = tv_error_exact(&d, &lifted, prefix + extra, 1).unwrap();
                    assert!((tv - base).abs() < 1e-12, "{} prefix={prefix} extra={extra}", amp.name());
                }
            }
        }
    }

    #[test]
    fn learn_then_sample_error_is_bounded_by_misidentification() {
        let d = parity_dist(2, 3);
        let tv = tv_error_exact(&d, &LearnThenSample, 2, 1).unwrap();
        let p = funclass::unique_id_prob(d.class(), d.truth(), 2, EvalMode::Exact).unwrap().value;
        assert!(tv <= 1.0 - p + 1e-12);
        assert!(tv > 0.0);
    }

    #[test]
    fn lower_bound_formulas() {
        for n in 1..=63 {
            let lb = lower_bound_teaching(&parity_class(n).unwrap()).unwrap();
            assert!((lb - parity_lower_bound(n)).abs() < 1e-15);
            assert!(lb >= 0.14);
        }
        assert_eq!(lower_bound_teaching(&parity_class(2).unwrap()).unwrap(), 3.0 / 16.0);
        let p2 = parity_class(2).unwrap();
        assert_eq!(lower_bound_general(&p2, 2).unwrap(), 3.0 / 16.0);
        assert_eq!(lower_bound_general(&constant_class(3).unwrap(), 1).unwrap(), 0.5);
        for n in 1..=5 {
            let c = parity_class(n).unwrap();
            assert_eq!(lower_bound_general(&c, n).unwrap(), lower_bound_teaching(&c).unwrap());
        }
        assert!(lower_bound_general(&p2, 0).is_err());
    }

    #[test]
    fn subspace_supported_inputs_give_the_same_bound() {
        let mut r = rng::seeded(31);
        for (m, n) in [(3, 2), (4, 2), (5, 3)] {
            let v = gf2::random_subspace(m, n, &mut r).unwrap();
            let class = restricted_parity_class(&v).unwrap();
            assert_eq!(class.dim(), n);
            let lb = lower_bound_teaching(&class).unwrap();
            assert!((lb - parity_lower_bound(n)).abs() < 1e-15);
        }
    }

    #[test]
    fn monte_carlo_advantage_tracks_exact() {
        let d = parity_dist(3, 3);
        let exact = advantage(&d, &LearnThenSample, 2, EvalMode::Exact).unwrap().value;
        let mc = advantage(&d, &LearnThenSample, 2, EvalMode::monte_carlo(40_000, 12)).unwrap();
        assert!((mc.value - exact).abs() < 2.0 * mc.ci_halfwidth + 1e-3, "{} vs {exact}", mc.value);
        assert_eq!(mc, advantage(&d, &LearnThenSample, 2, EvalMode::monte_carlo(40_000, 12)).unwrap());
    }

    #[test]
    fn bracket_orders_bounds() {
        for n in 2..=3 {
            let d = parity_dist(n, 1);
            let (lo, hi, name) = minimax_bracket(&d, n - 1).unwrap();
            assert!(lo <= hi + 1e-12);
            assert!(!name.is_empty());
        }
    }

    #[test]
    fn birthday_repeat_runs_on_all_functions() {
        let class = all_functions_class(4).unwrap();
        let d = StructuredDistribution::new(class.clone(), Hypothesis::from_index(0xbeef, 16)).unwrap();
        let mc = advantage(&d, &BirthdayRepeat, 8, EvalMode::monte_carlo(2_000, 5)).unwrap();
        assert!((0.0..=1.0).contains(&mc.value));
    }

    #[test]
    fn budget_guards_enumeration() {
        let d = parity_dist(8, 1);
        assert!(matches!(true_law(&d, 4), Err(Error::BudgetExceeded { .. })));
    }
}
