use ampliclone_core::funclass::{consistent_count, evaluate, parity_class, reed_muller_class};
use ampliclone_core::gf2::{gaussian_binomial, lin_indep_prob, rank_of_words};
use ampliclone_core::qsim::{hermitian_eigen, DenseOperator, PhasedWeyl, C64};
use ampliclone_core::rng;
use ampliclone_core::statehsp::StateHspInstance;
use ampliclone_core::{BilinearPairing, BitMatrix, BitVector, Hypothesis, LabeledSample, Subspace};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn vector(len: usize) -> impl Strategy<Value = BitVector> {
    (0..(1u64 << len)).prop_map(move |v| BitVector::from_index(v, len))
}

fn vectors(len: usize, max: usize) -> impl Strategy<Value = Vec<BitVector>> {
    prop::collection::vec(vector(len), 0..=max)
}

proptest! {
    #[test]
    fn xor_and_dot_are_bilinear(a in vector(9), b in vector(9), c in vector(9)) {
        prop_assert_eq!(a.xor(&b).dot(&c), a.dot(&c) ^ b.dot(&c));
        prop_assert_eq!(a.xor(&a), BitVector::zeros(9));
        prop_assert_eq!(BitVector::from_index(a.to_index(), 9), a);
    }

    #[test]
    fn rank_is_transpose_invariant(rows in prop::collection::vec(vector(7), 1..7)) {
        let m = BitMatrix::from_rows(7, rows.clone()).unwrap();
        prop_assert_eq!(m.rank(), m.transpose().rank());
        let mut words: Vec<u64> = rows.iter().map(BitVector::to_index).collect();
        prop_assert_eq!(rank_of_words(&mut words), m.rank());
    }

    #[test]
    fn span_is_closed_and_canonical(gens in vectors(6, 5), extra in vector(6)) {
        let s = Subspace::span(6, gens.clone()).unwrap();
        for g in &gens {
            prop_assert!(s.contains(g));
        }
        let shuffled: Vec<BitVector> = gens.iter().rev().cloned().collect();
        prop_assert_eq!(&Subspace::span(6, shuffled).unwrap(), &s);
        let grown = s.extend(&extra).unwrap();
        prop_assert!(s.is_subspace_of(&grown));
        prop_assert_eq!(grown.dim(), s.dim() + usize::from(!s.contains(&extra)));
    }

    #[test]
    fn dual_is_an_involution(gens in vectors(6, 5)) {
        let s = Subspace::span(6, gens).unwrap();
        for pairing in [BilinearPairing::standard(6), BilinearPairing::symplectic(3)] {
            let d = pairing.dual(&s).unwrap();
            prop_assert_eq!(d.dim(), 6 - s.dim());
            prop_assert_eq!(&pairing.dual(&d).unwrap(), &s);
            for x in s.elements() {
                for y in d.elements() {
                    prop_assert!(!pairing.value(&x, &y).unwrap());
                }
            }
        }
    }

    #[test]
    fn parity_labels_are_linear(a in vector(5), b in vector(5), x in vector(5)) {
        let class = parity_class(5).unwrap();
        let fa = evaluate(&class, &Hypothesis::new(a.clone()), &x).unwrap();
        let fb = evaluate(&class, &Hypothesis::new(b.clone()), &x).unwrap();
        let fab = evaluate(&class, &Hypothesis::new(a.xor(&b)), &x).unwrap();
        prop_assert_eq!(fab, fa ^ fb);
    }

    #[test]
    fn consistent_count_matches_kernel(a in vector(5), xs in vectors(5, 7)) {
        let class = parity_class(5).unwrap();
        let z: Vec<LabeledSample> = xs.iter().map(|x| LabeledSample::new(x.clone(), a.dot(x))).collect();
        let rank = Subspace::span(5, xs.clone()).unwrap().dim();
        prop_assert_eq!(consistent_count(&class, &z).unwrap().to_u64().unwrap(), 1u64 << (5 - rank));
    }

    #[test]
    fn weyl_composition_matches_dense(x in vector(4), y in vector(4), sx in any::<bool>(), sy in any::<bool>()) {
        let p = PhasedWeyl::new(x, sx).unwrap();
        let q = PhasedWeyl::new(y, sy).unwrap();
        let dense = p.to_dense().unwrap().mul(&q.to_dense().unwrap()).unwrap();
        prop_assert!(p.compose(&q).unwrap().to_dense().unwrap().max_abs_diff(&dense).unwrap() < 1e-12);
        let conj = q.to_dense().unwrap().conjugate(&p.to_dense().unwrap()).unwrap();
        prop_assert!(q.conjugated_by(&p).to_dense().unwrap().max_abs_diff(&conj).unwrap() < 1e-12);
        prop_assert_eq!(p.commutes_with(&q), !p.symplectic(&q));
    }

    #[test]
    fn jacobi_reconstructs_hermitian(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 0);
        let a = DenseOperator::random_hermitian(3, &mut r).unwrap();
        let (vals, v) = hermitian_eigen(&a).unwrap();
        let diag = DenseOperator::from_fn(3, |i, j| if i == j { C64::new(vals[i], 0.0) } else { C64::new(0.0, 0.0) }).unwrap();
        let back = v.mul(&diag).unwrap().mul(&v.adjoint()).unwrap();
        prop_assert!(back.max_abs_diff(&a).unwrap() < 1e-10);
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn consistent_count_is_gaussian_binomial(obs in vectors(4, 3)) {
        let l = ampliclone_core::gf2::enumerate_subspaces(4, 2).unwrap().remove(0);
        let inst = StateHspInstance::phaseless(2, l).unwrap();
        let span = Subspace::span(4, obs).unwrap();
        let count = ampliclone_core::statehsp::consistent_count(&span, &inst).unwrap();
        let listed = ampliclone_core::statehsp::consistent_subgroups(span.basis_vectors(), &inst).unwrap();
        prop_assert_eq!(count, listed.len() as u128);
        let dual_dim = inst.annihilator(&span).unwrap().dim();
        prop_assert_eq!(count, gaussian_binomial(dual_dim, 2));
    }
}

#[test]
fn lin_indep_distribution_sums_to_one() {
    for n in 1..=5 {
        for k in 0..=6 {
            let total: f64 = (0..=n.min(k)).map(|a| lin_indep_prob(n, k, a).unwrap().to_f64()).sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n} k={k}: {total}");
        }
    }
}

#[test]
fn reed_muller_labels_agree_with_truth_tables() {
    let class = reed_muller_class(3, 1).unwrap();
    for a in class.hypotheses().unwrap() {
        let table = class.truth_table(&a).unwrap();
        for x in 0..8u64 {
            let bit = evaluate(&class, &a, &BitVector::from_index(x, 3)).unwrap();
            assert_eq!(table.get(x as usize), bit);
        }
    }
}
