//! Linear spaces of Boolean functions and the codes they generate.
//!
//! A class of dimension `k` on `n` input bits is described by its feature
//! map `x -> y(x)` in GF(2)^k: member `f_a` evaluates to `a . y(x)`. The
//! generator matrix of the induced code has the feature vectors as columns,
//! column `j` belonging to the input whose bit `i` is `(j >> i) & 1`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;

use crate::budget;
use crate::error::{Error, Result};
use crate::gf2::{self, BitMatrix, BitVector, Subspace};
use crate::report::{self, EvalMode, GameReport};

/// Largest input width for which truth tables and generator matrices are
/// materialized.
pub const MAX_TABLE_BITS: usize = 16;

/// Largest input width accepted by the built-in classes.
pub const MAX_INPUT_BITS: usize = 63;

/// Largest class dimension accepted by the built-in classes.
pub const MAX_DIMENSION: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Features {
    /// `y(x) = x`.
    Parity,
    /// Monomials given as variable masks.
    Monomials(Vec<u64>),
    /// Indicator of each input.
    Deltas,
    /// Arbitrary independent truth tables.
    Tables(Vec<BitVector>),
}

/// A `k`-dimensional linear space of Boolean functions on `n` bits with a
/// fixed basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFunctionClass {
    name: String,
    n: usize,
    k: usize,
    features: Features,
}

/// Coefficient vector selecting `f_a` within a class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hypothesis {
    coeffs: BitVector,
}

impl Hypothesis {
    pub fn new(coeffs: BitVector) -> Self {
        Hypothesis { coeffs }
    }

    /// Hypothesis whose coefficient `i` is bit `i` of `index`.
    pub fn from_index(index: u64, k: usize) -> Self {
        Hypothesis {
            coeffs: BitVector::from_index(index, k),
        }
    }

    pub fn coeffs(&self) -> &BitVector {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_zero()
    }
}

/// One labeled example `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledSample {
    pub x: BitVector,
    pub y: bool,
}

impl LabeledSample {
    pub fn new(x: BitVector, y: bool) -> Self {
        LabeledSample { x, y }
    }
}

pub type Dataset = Vec<LabeledSample>;

fn check_input_bits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_INPUT_BITS {
        return Err(Error::OutOfRange(format!(
            "input width must be in 1..={MAX_INPUT_BITS}, got {n}"
        )));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Parities `x -> s . x` on `n` bits, basis the coordinate functions.
pub fn parity_class(n: usize) -> Result<LinearFunctionClass> {
    check_input_bits(n)?;
    Ok(LinearFunctionClass {
        name: format!("parity(n={n})"),
        n,
        k: n,
        features: Features::Parity,
    })
}

/// Polynomials of degree at most `d`, basis the monomials ordered by degree
/// and then lexicographically by variable set.
pub fn reed_muller_class(n: usize, d: usize) -> Result<LinearFunctionClass> {
    check_input_bits(n)?;
    if d > n {
        return Err(Error::OutOfRange(format!("degree {d} exceeds input width {n}")));
    }
    let k: u128 = (0..=d).map(|j| binomial(n, j)).sum();
    budget::check("Reed-Muller dimension", k, MAX_DIMENSION as u128)?;
    let mut monomials = Vec::with_capacity(k as usize);
    for deg in 0..=d {
        push_combinations(n, deg, 0, 0, &mut monomials);
    }
    Ok(LinearFunctionClass {
        name: format!("reed_muller(n={n}, d={d})"),
        n,
        k: monomials.len(),
        features: Features::Monomials(monomials),
    })
}

fn push_combinations(n: usize, remaining: usize, start: usize, mask: u64, out: &mut Vec<u64>) {
    if remaining == 0 {
        out.push(mask);
        return;
    }
    for v in start..=(n - remaining) {
        push_combinations(n, remaining - 1, v + 1, mask | (1u64 << v), out);
    }
}

/// The constant functions, i.e. polynomials of degree zero.
pub fn constant_class(n: usize) -> Result<LinearFunctionClass> {
    reed_muller_class(n, 0)
}

/// Every Boolean function on `n` bits, basis the point indicators.
pub fn all_functions_class(n: usize) -> Result<LinearFunctionClass> {
    check_input_bits(n)?;
    budget::check("all-functions dimension", budget::pow2(n), MAX_DIMENSION as u128)?;
    Ok(LinearFunctionClass {
        name: format!("all_functions(n={n})"),
        n,
        k: 1 << n,
        features: Features::Deltas,
    })
}

impl LinearFunctionClass {
    /// Class spanned by the given truth tables, which must be independent.
    pub fn from_truth_tables(n: usize, tables: Vec<BitVector>) -> Result<Self> {
        check_input_bits(n)?;
        budget::check("truth table input width", n as u128, MAX_TABLE_BITS as u128)?;
        if let Some(bad) = tables.iter().find(|t| t.len() != 1 << n) {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                found: bad.len(),
            });
        }
        let m = BitMatrix::from_rows(1 << n, tables.clone())?;
        if m.rank() != tables.len() {
            return Err(Error::InvalidBasis("truth tables are linearly dependent".into()));
        }
        Ok(LinearFunctionClass {
            name: format!("custom(n={n}, k={})", tables.len()),
            n,
            k: tables.len(),
            features: Features::Tables(tables),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Input width `n`.
    pub fn input_bits(&self) -> usize {
        self.n
    }

    /// Dimension `k` of the class.
    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn is_parity(&self) -> bool {
        self.features == Features::Parity
    }

    /// Number of inputs, `2^n`.
    pub fn domain_size(&self) -> u64 {
        1u64 << self.n
    }

    /// Feature vector `y(x)` of the input with index `x`.
    pub fn feature(&self, x: u64) -> BitVector {
        match &self.features {
            Features::Parity => BitVector::from_index(x, self.n),
            Features::Monomials(ms) => {
                let mut v = BitVector::zeros(self.k);
                for (i, &m) in ms.iter().enumerate() {
                    if x & m == m {
                        v.set(i, true);
                    }
                }
                v
            }
            Features::Deltas => BitVector::unit(self.k, x as usize),
            Features::Tables(ts) => {
                let mut v = BitVector::zeros(self.k);
                for (i, t) in ts.iter().enumerate() {
                    if t.get(x as usize) {
                        v.set(i, true);
                    }
                }
                v
            }
        }
    }

    /// Feature vector packed in one word; requires `k <= 64`.
    pub fn feature_word(&self, x: u64) -> u64 {
        debug_assert!(self.k <= 64);
        match &self.features {
            Features::Parity => x,
            Features::Monomials(ms) => ms
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &m)| if x & m == m { acc | 1 << i } else { acc }),
            Features::Deltas => 1u64 << x,
            Features::Tables(_) => self.feature(x).to_index(),
        }
    }

    fn check_input(&self, x: &BitVector) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_hypothesis(&self, a: &Hypothesis) -> Result<()> {
        if a.coeffs.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                found: a.coeffs.len(),
            });
        }
        Ok(())
    }

    /// Truth tables of the basis functions; requires `n <= 16`.
    pub fn basis_tables(&self) -> Result<Vec<BitVector>> {
        budget::check("truth table input width", self.n as u128, MAX_TABLE_BITS as u128)?;
        let size = 1usize << self.n;
        let mut tables = vec![BitVector::zeros(size); self.k];
        for x in 0..size {
            for i in self.feature(x as u64).ones() {
                tables[i].set(x, true);
            }
        }
        Ok(tables)
    }

    /// Truth table of `f_a`.
    pub fn truth_table(&self, a: &Hypothesis) -> Result<BitVector> {
        self.check_hypothesis(a)?;
        budget::check("truth table input width", self.n as u128, MAX_TABLE_BITS as u128)?;
        let size = 1usize << self.n;
        let mut t = BitVector::zeros(size);
        for x in 0..size {
            if self.feature(x as u64).dot(&a.coeffs) {
                t.set(x, true);
            }
        }
        Ok(t)
    }

    /// All `2^k` hypotheses in index order.
    pub fn hypotheses(&self) -> Result<impl Iterator<Item = Hypothesis> + '_> {
        budget::check("hypothesis enumeration", budget::pow2(self.k), budget::limits().enumeration)?;
        Ok((0..1u64 << self.k).map(move |i| Hypothesis::from_index(i, self.k)))
    }

    /// Uniform input.
    pub fn random_input<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(0..self.domain_size())
    }

    /// Uniform hypothesis.
    pub fn random_hypothesis<R: Rng + ?Sized>(&self, rng: &mut R) -> Hypothesis {
        Hypothesis::new(gf2::random_vector(self.k, rng))
    }
}

/// `f_a(x)`.
pub fn evaluate(class: &LinearFunctionClass, a: &Hypothesis, x: &BitVector) -> Result<bool> {
    class.check_hypothesis(a)?;
    class.check_input(x)?;
    Ok(class.feature(x.to_index()).dot(&a.coeffs))
}

/// The affine set of hypotheses consistent with a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistentSet {
    particular: BitVector,
    kernel: Subspace,
}

impl ConsistentSet {
    /// `log2` of the number of consistent hypotheses.
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn contains(&self, a: &Hypothesis) -> bool {
        self.kernel.contains(&a.coeffs.xor(&self.particular))
    }

    /// Whether every member agrees on the feature vector `y`.
    pub fn determines(&self, y: &BitVector) -> bool {
        self.kernel.basis_vectors().iter().all(|b| !b.dot(y))
    }

    /// The common value `a . y` when [`ConsistentSet::determines`] holds.
    pub fn particular_value(&self, y: &BitVector) -> bool {
        self.particular.dot(y)
    }

    /// Uniform member.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Hypothesis {
        let mut a = self.particular.clone();
        for b in self.kernel.basis_vectors() {
            if rng.random::<bool>() {
                a.xor_assign(b);
            }
        }
        Hypothesis::new(a)
    }
}

/// Solves the labels of `z` for the class coefficients.
pub fn consistent_set(class: &LinearFunctionClass, z: &[LabeledSample]) -> Result<Option<ConsistentSet>> {
    let mut rows = Vec::with_capacity(z.len());
    let mut rhs = BitVector::zeros(z.len());
    for (i, s) in z.iter().enumerate() {
        class.check_input(&s.x)?;
        rows.push(class.feature(s.x.to_index()));
        rhs.set(i, s.y);
    }
    let e = BitMatrix::from_rows(class.k, rows)?;
    Ok(e.solve(&rhs)?.map(|particular| ConsistentSet {
        particular,
        kernel: e.kernel(),
    }))
}

/// `n_F(z)`: number of hypotheses consistent with `z`.
pub fn consistent_count(class: &LinearFunctionClass, z: &[LabeledSample]) -> Result<BigUint> {
    Ok(match consistent_set(class, z)? {
        Some(set) => BigUint::from(1u8) << set.dim(),
        None => BigUint::from(0u8),
    })
}

/// Rank of the generator matrix, computed from its columns.
fn generator_rank(class: &LinearFunctionClass) -> Result<usize> {
    budget::check("truth table input width", class.n as u128, MAX_TABLE_BITS as u128)?;
    let cols = (0..class.domain_size()).map(|x| class.feature(x));
    Ok(Subspace::span(class.k, cols)?.dim())
}

/// Minimum dataset size that pins down `f_a`.
///
/// A dataset identifies `f_a` exactly when its feature vectors span
/// GF(2)^k, so the answer is the rank of the generator matrix whenever
/// that rank is `k`, and the same for every hypothesis.
pub fn teaching_number(class: &LinearFunctionClass, a: &Hypothesis) -> Result<usize> {
    class.check_hypothesis(a)?;
    teaching_dimension(class)
}

/// Largest teaching number over the class.
pub fn teaching_dimension(class: &LinearFunctionClass) -> Result<usize> {
    if class.n > MAX_TABLE_BITS {
        // The basis is independent by construction, so the columns span.
        return Ok(class.k);
    }
    let r = generator_rank(class)?;
    if r != class.k {
        return Err(Error::InvalidBasis(format!("generator rank {r} below dimension {}", class.k)));
    }
    Ok(r)
}

/// Canonical span of words in fully reduced echelon form, sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
struct WordSpan(Vec<u64>);

impl WordSpan {
    fn reduce(&self, mut v: u64) -> u64 {
        for &b in &self.0 {
            let lead = 63 - b.leading_zeros();
            if (v >> lead) & 1 == 1 {
                v ^= b;
            }
        }
        v
    }

    fn contains(&self, v: u64) -> bool {
        self.reduce(v) == 0
    }

    fn insert(&self, v: u64) -> WordSpan {
        let r = self.reduce(v);
        if r == 0 {
            return self.clone();
        }
        let lead = 63 - r.leading_zeros();
        let mut rows: Vec<u64> = self
            .0
            .iter()
            .map(|&b| if (b >> lead) & 1 == 1 { b ^ r } else { b })
            .collect();
        rows.push(r);
        // Descending leading bit keeps `reduce` a single pass.
        rows.sort_unstable_by(|a, b| b.cmp(a));
        WordSpan(rows)
    }

    fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Distribution of `rank` of `t` columns drawn i.i.d. uniformly from
/// `columns` (entries may repeat), by dynamic programming over spans.
fn column_rank_distribution(columns: &[u64], k: usize, t: usize) -> Result<Vec<f64>> {
    let limit = budget::limits().enumeration;
    let weight = 1.0 / columns.len() as f64;
    let mut states: BTreeMap<WordSpan, f64> = BTreeMap::new();
    states.insert(WordSpan::default(), 1.0);
    for _ in 0..t {
        let mut next: BTreeMap<WordSpan, f64> = BTreeMap::new();
        for (span, p) in &states {
            if span.dim() == k {
                *next.entry(span.clone()).or_default() += p;
                continue;
            }
            let mut stay = 0usize;
            let mut grown: BTreeMap<WordSpan, usize> = BTreeMap::new();
            for &c in columns {
                if span.contains(c) {
                    stay += 1;
                } else {
                    *grown.entry(span.insert(c)).or_default() += 1;
                }
            }
            if stay > 0 {
                *next.entry(span.clone()).or_default() += p * stay as f64 * weight;
            }
            for (s, count) in grown {
                *next.entry(s).or_default() += p * count as f64 * weight;
            }
        }
        budget::check("span states", next.len() as u128, limit)?;
        states = next;
    }
    let mut dist = vec![0.0; k.min(t) + 1];
    for (span, p) in states {
        dist[span.dim()] += p;
    }
    Ok(dist)
}

/// Distribution of the rank of the feature vectors of `t` i.i.d. uniform
/// inputs; entry `r` is `Pr[rank = r]` for `r = 0..=min(k, t)`.
pub fn rank_distribution(class: &LinearFunctionClass, t: usize) -> Result<Vec<f64>> {
    if class.is_parity() {
        // Features are uniform over GF(2)^n.
        return (0..=class.n.min(t))
            .map(|a| gf2::lin_indep_prob(class.n, t, a).map(|p| p.to_f64()))
            .collect();
    }
    budget::check("feature word width", class.k as u128, 64)?;
    budget::check("truth table input width", class.n as u128, MAX_TABLE_BITS as u128)?;
    let columns: Vec<u64> = (0..class.domain_size()).map(|x| class.feature_word(x)).collect();
    column_rank_distribution(&columns, class.k, t)
}

fn rank_of_features(class: &LinearFunctionClass, xs: impl Iterator<Item = u64>) -> usize {
    if class.k <= 64 {
        let mut words: Vec<u64> = xs.map(|x| class.feature_word(x)).collect();
        gf2::rank_of_words(&mut words)
    } else {
        let rows: Vec<BitVector> = xs.map(|x| class.feature(x)).collect();
        BitMatrix::from_rows(class.k, rows).map(|m| m.rank()).unwrap_or(0)
    }
}

/// `p^t_F(f_a)`: probability that `t` i.i.d. uniform inputs, labeled by
/// `f_a`, leave `f_a` as the only consistent hypothesis.
pub fn unique_id_prob(class: &LinearFunctionClass, a: &Hypothesis, t: usize, mode: EvalMode) -> Result<GameReport> {
    class.check_hypothesis(a)?;
    match mode {
        EvalMode::Exact => {
            if t < class.k {
                return Ok(GameReport::exact(0.0));
            }
            let dist = rank_distribution(class, t)?;
            Ok(GameReport::exact(dist[class.k]))
        }
        EvalMode::MonteCarlo { trials, seed } => Ok(report::run_bernoulli(trials, seed, |rng| {
            let xs: Vec<u64> = (0..t).map(|_| class.random_input(rng)).collect();
            rank_of_features(class, xs.into_iter()) == class.k
        })),
    }
}

/// The code whose codewords are the truth tables of the class members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFunctionCode {
    n: usize,
    generator: BitMatrix,
    distance: Option<usize>,
}

/// How erased positions are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// A uniform `s`-subset of the positions.
    Subset,
    /// `s` positions drawn i.i.d. uniformly, with replacement.
    Iid,
}

/// Generator matrix `G(i, j) = e_i(x_j)` of the class's code.
pub fn code_from_class(class: &LinearFunctionClass) -> Result<LinearFunctionCode> {
    budget::check("code length exponent", class.n as u128, MAX_TABLE_BITS as u128)?;
    let generator = BitMatrix::from_rows(1 << class.n, class.basis_tables()?)?;
    let mut code = LinearFunctionCode {
        n: class.n,
        generator,
        distance: None,
    };
    if budget::pow2(class.k) <= budget::limits().enumeration {
        code.distance = Some(min_distance(&code)?);
    }
    Ok(code)
}

impl LinearFunctionCode {
    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    /// Block length `2^n`.
    pub fn length(&self) -> usize {
        self.generator.ncols()
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    pub fn input_bits(&self) -> usize {
        self.n
    }

    /// Minimum distance, computing it if it was not cached.
    pub fn distance(&self) -> Result<usize> {
        match self.distance {
            Some(d) => Ok(d),
            None => min_distance(self),
        }
    }

    fn columns(&self) -> Result<Vec<u64>> {
        budget::check("code dimension for word columns", self.dim() as u128, 64)?;
        Ok((0..self.length()).map(|j| self.generator.column(j).to_index()).collect())
    }

    /// Visits every nonzero codeword in Gray-code order.
    fn for_each_nonzero_codeword(&self, mut visit: impl FnMut(&BitVector)) -> Result<()> {
        budget::check("codeword enumeration", budget::pow2(self.dim()), budget::limits().enumeration)?;
        let mut word = BitVector::zeros(self.length());
        for i in 1u64..(1u64 << self.dim()) {
            word.xor_assign(self.generator.row(i.trailing_zeros() as usize));
            visit(&word);
        }
        Ok(())
    }
}

/// Minimum Hamming weight of a nonzero codeword.
pub fn min_distance(code: &LinearFunctionCode) -> Result<usize> {
    let mut best = usize::MAX;
    code.for_each_nonzero_codeword(|w| best = best.min(w.weight()))?;
    Ok(if best == usize::MAX { 0 } else { best })
}

/// Probability that `s` drawn positions carry independent generator columns.
pub fn erasure_rank_prob(code: &LinearFunctionCode, s: usize, sampling: Sampling, mode: EvalMode) -> Result<GameReport> {
    let len = code.length();
    if sampling == Sampling::Subset && s > len {
        return Err(Error::OutOfRange(format!("cannot pick {s} of {len} positions")));
    }
    if s == 0 {
        return Ok(GameReport::exact(1.0));
    }
    if s > code.dim() {
        return Ok(GameReport::exact(0.0));
    }
    let columns = code.columns()?;
    match (mode, sampling) {
        (EvalMode::Exact, Sampling::Iid) => {
            let dist = column_rank_distribution(&columns, code.dim(), s)?;
            Ok(GameReport::exact(dist[s]))
        }
        (EvalMode::Exact, Sampling::Subset) => {
            let total = binomial(len, s);
            budget::check("erasure subsets", total, budget::limits().subsets)?;
            let good = count_independent_subsets(&columns, s, 0, &WordSpan::default());
            Ok(GameReport::exact(good as f64 / total as f64))
        }
        (EvalMode::MonteCarlo { trials, seed }, Sampling::Iid) => Ok(report::run_bernoulli(trials, seed, |rng| {
            let mut ws: Vec<u64> = (0..s).map(|_| columns[rng.random_range(0..len)]).collect();
            gf2::rank_of_words(&mut ws) == s
        })),
        (EvalMode::MonteCarlo { trials, seed }, Sampling::Subset) => Ok(report::run_bernoulli(trials, seed, |rng| {
            let mut ws: Vec<u64> = rand::seq::index::sample(rng, len, s).iter().map(|j| columns[j]).collect();
            gf2::rank_of_words(&mut ws) == s
        })),
    }
}

/// Number of `remaining`-subsets of `columns[start..]` independent of each
/// other and of `span`. Dependent prefixes are pruned.
fn count_independent_subsets(columns: &[u64], remaining: usize, start: usize, span: &WordSpan) -> u128 {
    if remaining == 0 {
        return 1;
    }
    let mut total = 0;
    for j in start..=(columns.len() - remaining) {
        if !span.contains(columns[j]) {
            total += count_independent_subsets(columns, remaining - 1, j + 1, &span.insert(columns[j]));
        }
    }
    total
}

/// The two guarantees for erasure-based learning: `p1 / 2` and
/// `p2 * d / 2^(n+1)`.
pub fn coding_bounds(code: &LinearFunctionCode, p1: f64, p2: f64) -> Result<(f64, f64)> {
    let d = code.distance()?;
    Ok((p1 / 2.0, p2 * d as f64 / (2.0f64).powi(code.n as i32 + 1)))
}

/// Whether every nonzero member satisfies `Pr_x[f(x) = 0] <= 1 - d / 2^n`.
pub fn check_nonzero_bias(code: &LinearFunctionCode) -> Result<bool> {
    let d = code.distance()?;
    let len = code.length();
    let mut ok = true;
    code.for_each_nonzero_codeword(|w| {
        // Pr[f = 0] = (len - wt) / len.
        ok &= len - w.weight() <= len - d;
    })?;
    Ok(ok)
}
