use ampliclone_core::cloning::{
    alg3_acceptance_exact, alg3_acceptance_true, builtin_cloners, clone_game_family, cloning_error, Lifted,
    WernerCloner,
};
use ampliclone_core::gf2::enumerate_subspaces;
use ampliclone_core::statehsp::StateHspInstance;
use ampliclone_core::EvalMode;

fn check_monotone(n: usize, t: usize) {
    let cloners = builtin_cloners(n, t);
    assert!(!cloners.is_empty());
    for l in enumerate_subspaces(2 * n, n).unwrap() {
        let inst = StateHspInstance::phaseless(n, l).unwrap();
        let sigma = inst.sigma().unwrap().dense().unwrap();
        let fewer = alg3_acceptance_true(&inst, t).unwrap();
        for c in &cloners {
            let cloned = c.apply(&sigma.tensor_power(t).unwrap()).unwrap();
            let acc = alg3_acceptance_exact(&inst, &cloned, t + 1).unwrap();
            assert!(
                acc <= fewer + 1e-12,
                "{} n={n} t={t}: cloned {acc} > true {fewer}",
                c.name()
            );
        }
    }
}

#[test]
fn cloned_copies_never_help_the_distinguisher() {
    check_monotone(1, 1);
    check_monotone(1, 2);
    check_monotone(2, 1);
}

#[test]
fn every_builtin_cloner_loses_the_game_at_two_qubits() {
    for c in builtin_cloners(2, 1) {
        let report = clone_game_family(&c, 2, EvalMode::Exact).unwrap();
        assert!(report.min_advantage() >= 3.0 / 16.0 - 1e-9, "{}: {}", c.name(), report.min_advantage());
    }
}

#[test]
fn true_acceptance_grows_with_copies() {
    let l = enumerate_subspaces(4, 2).unwrap().remove(3);
    let inst = StateHspInstance::phaseless(2, l).unwrap();
    let one = alg3_acceptance_true(&inst, 1).unwrap();
    let two = alg3_acceptance_true(&inst, 2).unwrap();
    assert!((one - 4.0 / 35.0).abs() < 1e-12);
    assert!((two - 16.0 / 35.0).abs() < 1e-12);
}

#[test]
fn lifting_keeps_cloning_error_at_one_qubit_pair() {
    for l in enumerate_subspaces(2, 1).unwrap() {
        let inst = StateHspInstance::phaseless(1, l).unwrap();
        let sigma = inst.sigma().unwrap().dense().unwrap();
        let base = WernerCloner::new(2, 1, 1).unwrap();
        let lifted = Lifted::new(&base, 1).unwrap();
        let e1 = cloning_error(&base, &sigma).unwrap();
        let e2 = cloning_error(&lifted, &sigma).unwrap();
        assert!((e1 - e2).abs() <= 1e-10, "{e1} vs {e2}");
    }
}
