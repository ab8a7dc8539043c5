use ampliclone_core::amplify::{
    advantage, amplifier_by_name, builtin_amplifiers, lower_bound_teaching, minimax_bracket, parity_lower_bound,
    Amplifier, StructuredDistribution,
};
use ampliclone_core::cloning::{
    builtin_cloners, clone_game_family, cloner_by_name, lower_bound_cloning, werner_fidelity_formula,
    worst_case_fidelity, CloningChannel, WernerCloner,
};
use ampliclone_core::funclass::{check_nonzero_bias, code_from_class, erasure_rank_prob, parity_class, Sampling};
use ampliclone_core::gf2::{all_vectors, enumerate_subspaces, lin_indep_prob, random_vector, rank_of_words};
use ampliclone_core::qsim::{trace_distance, DenseOperator, C64};
use ampliclone_core::rng;
use ampliclone_core::statehsp::{
    base_purification, character_povm_projector, character_povm_sum, direct_purification_average, g_purification,
    g_purification_stabilizers, hiding_profile, purification_stabilizers, purified_subgroup, purify_copies,
    symbolic_violation, twirl, PurifiedRepresentation, StateHspInstance,
};
use ampliclone_core::{EvalMode, GameReport, Hypothesis};

use crate::{CliError, Experiment, Metric, Metrics, Mode, RunConfig};

pub const DEFAULT_TRIALS: u64 = 100_000;
const DEFAULT_SEED: u64 = 0;
const TWIRL_STATES: u64 = 20;
const FIDELITY_SAMPLES: usize = 200;

type Res<T> = Result<T, CliError>;

fn invalid<T>(msg: impl Into<String>) -> Res<T> {
    Err(CliError::Invalid(msg.into()))
}

fn eval_mode(config: &RunConfig) -> EvalMode {
    match config.mode {
        Mode::Exact => EvalMode::Exact,
        Mode::Mc => EvalMode::monte_carlo(
            config.trials.unwrap_or(DEFAULT_TRIALS),
            config.seed.unwrap_or(DEFAULT_SEED),
        ),
    }
}

/// Re-seeds a Monte Carlo mode for the `i`-th of several estimates.
fn offset(mode: EvalMode, i: u64) -> EvalMode {
    match mode {
        EvalMode::Exact => EvalMode::Exact,
        EvalMode::MonteCarlo { trials, seed } => EvalMode::monte_carlo(trials, seed.wrapping_add(i)),
    }
}

pub fn run(config: &RunConfig) -> Res<Metrics> {
    let n = config.n;
    let t = config.t;
    let seed = config.seed.unwrap_or(DEFAULT_SEED);
    let mode = eval_mode(config);
    let mut out = Metrics::new();
    match config.subcommand {
        Experiment::Linindep => linindep(&mut out, "", n.unwrap_or(20), mode)?,
        Experiment::AmplifyGame => {
            let n = positive(n.unwrap_or(2), "--n")?;
            amplify_game(&mut out, "", n, t.unwrap_or(n - 1), config.amplifier.as_deref(), mode)?
        }
        Experiment::AmplifyBounds => {
            let n = positive(n.unwrap_or(3), "--n")?;
            amplify_bounds(&mut out, "", n, t.unwrap_or(n - 1))?
        }
        Experiment::Codes => codes(&mut out, "", positive(n.unwrap_or(3), "--n")?, mode)?,
        Experiment::PovmVerify => povm(&mut out, "", positive(n.unwrap_or(2), "--n")?)?,
        Experiment::HidingVerify => hiding(&mut out, "", positive(n.unwrap_or(2), "--n")?)?,
        Experiment::TwirlVerify => twirl_check(
            &mut out,
            "",
            positive(n.unwrap_or(2), "--n")?,
            positive(t.unwrap_or(1), "--t")?,
            seed,
        )?,
        Experiment::PurifyVerify => purify(
            &mut out,
            "",
            positive(n.unwrap_or(1), "--n")?,
            positive(t.unwrap_or(1), "--t")?,
        )?,
        Experiment::StabgenVerify => stabilizers(&mut out, "", positive(n.unwrap_or(2), "--n")?)?,
        Experiment::WernerVerify => {
            let samples = match config.mode {
                Mode::Exact => FIDELITY_SAMPLES,
                Mode::Mc => config.trials.unwrap_or(DEFAULT_TRIALS) as usize,
            };
            werner(
                &mut out,
                "",
                positive(n.unwrap_or(1), "--n")?,
                positive(t.unwrap_or(1), "--t")?,
                samples,
                seed,
            )?
        }
        Experiment::CloneGame => {
            let n = positive(n.unwrap_or(2), "--n")?;
            clone_game(&mut out, "", n, t.unwrap_or(2), config.cloner.as_deref(), mode)?
        }
        Experiment::AllAcceptance => all_acceptance(&mut out, seed)?,
    }
    Ok(out)
}

fn positive(v: usize, flag: &str) -> Res<usize> {
    if v == 0 {
        return invalid(format!("{flag} must be positive"));
    }
    Ok(v)
}

fn put(out: &mut Metrics, prefix: &str, name: &str, m: Metric) {
    out.insert(format!("{prefix}{name}"), m);
}

/// Tolerance for a thresholded game figure: exact slack plus the sampling
/// half-width in Monte Carlo mode.
fn game_tolerance(r: &GameReport) -> f64 {
    1e-9 + r.ci_halfwidth
}

fn linindep(out: &mut Metrics, p: &str, n: usize, mode: EvalMode) -> Res<()> {
    let formula = lin_indep_prob(n, n, n)?.to_f64();
    put(out, p, "full_rank_prob", Metric::at_least(formula, 0.2887, 0.0));
    if let EvalMode::MonteCarlo { trials, seed } = mode {
        if n > 64 {
            return invalid("Monte Carlo rank estimates need n <= 64");
        }
        let mut hits = 0u64;
        for i in 0..trials {
            let mut r = rng::stream(seed, i);
            let mut rows: Vec<u64> = (0..n).map(|_| random_vector(n, &mut r).to_index()).collect();
            hits += (rank_of_words(&mut rows) == n) as u64;
        }
        let mc = hits as f64 / trials as f64;
        put(out, p, "full_rank_prob_mc", Metric::close_to(mc, formula, 0.01));
    }
    Ok(())
}

fn amplify_game(out: &mut Metrics, p: &str, n: usize, t: usize, only: Option<&str>, mode: EvalMode) -> Res<()> {
    let amps: Vec<Box<dyn Amplifier>> = match only {
        Some(name) => match amplifier_by_name(name) {
            Some(a) => vec![a],
            None => return invalid(format!("unknown amplifier {name:?}")),
        },
        None => builtin_amplifiers(),
    };
    let class = parity_class(n)?;
    let bound = parity_lower_bound(n);
    put(out, p, "lower_bound", Metric::info(bound));
    for amp in &amps {
        // Smallest advantage over every truth.
        let mut worst: Option<GameReport> = None;
        for (i, a) in class.hypotheses()?.enumerate() {
            let dist = StructuredDistribution::new(class.clone(), a)?;
            let r = advantage(&dist, amp, t, offset(mode, i as u64))?;
            if worst.as_ref().is_none_or(|w| r.value < w.value) {
                worst = Some(r);
            }
        }
        let worst = worst.expect("the class has a member");
        let name = format!("advantage.{}", amp.name());
        let metric = if t < n {
            Metric::at_least(worst.value, bound, game_tolerance(&worst))
        } else {
            Metric::info(worst.value)
        };
        put(out, p, &name, metric);
    }
    Ok(())
}

fn amplify_bounds(out: &mut Metrics, p: &str, n: usize, t: usize) -> Res<()> {
    let class = parity_class(n)?;
    put(out, p, "parity_lower_bound", Metric::at_least(parity_lower_bound(n), 0.14, 0.0));
    put(out, p, "teaching_lower_bound", Metric::info(lower_bound_teaching(&class)?));
    let dist = StructuredDistribution::new(class, Hypothesis::from_index(0, n))?;
    let (lower, upper, _) = minimax_bracket(&dist, t)?;
    put(out, p, "bracket_lower", Metric::info(lower));
    put(out, p, "bracket_upper", Metric::at_least(upper, lower, 1e-12));
    Ok(())
}

fn codes(out: &mut Metrics, p: &str, n: usize, mode: EvalMode) -> Res<()> {
    let class = parity_class(n)?;
    let code = code_from_class(&class)?;
    let d = code.distance()?;
    let k = code.dim();
    let full = erasure_rank_prob(&code, k, Sampling::Iid, mode)?;
    let short = erasure_rank_prob(&code, k - 1, Sampling::Iid, offset(mode, 1))?;
    let subset = erasure_rank_prob(&code, k, Sampling::Subset, offset(mode, 2))?;
    let (b1, b2) = ampliclone_core::funclass::coding_bounds(&code, full.value, short.value)?;
    put(out, p, "distance", Metric::info(d as f64));
    put(out, p, "erasure_iid", Metric::info(full.value));
    put(out, p, "erasure_iid_short", Metric::info(short.value));
    put(out, p, "erasure_subset", Metric::info(subset.value));
    put(out, p, "coding_bound_1", Metric::info(b1));
    put(out, p, "coding_bound_2", Metric::info(b2));
    put(out, p, "nonzero_bias", Metric::check(check_nonzero_bias(&code)?));
    let step = short.value * d as f64 / (1u64 << n) as f64;
    put(
        out,
        p,
        "rank_step",
        Metric::at_least(full.value, step, game_tolerance(&full) + game_tolerance(&short)),
    );
    Ok(())
}

fn instance(n: usize) -> Res<StateHspInstance> {
    let l = enumerate_subspaces(2 * n, n)?.remove(0);
    Ok(StateHspInstance::phaseless(n, l)?)
}

fn povm(out: &mut Metrics, p: &str, n: usize) -> Res<()> {
    let inst = instance(n)?;
    let mut worst = 0.0f64;
    let mut sum = DenseOperator::zeros(2 * n)?;
    for lambda in all_vectors(2 * n) {
        let proj = character_povm_projector(&inst, &lambda)?;
        worst = worst.max(proj.max_abs_diff(&character_povm_sum(&inst, &lambda)?)?);
        sum.add_scaled(C64::new(1.0, 0.0), &proj)?;
    }
    let complete = sum.max_abs_diff(&DenseOperator::identity(2 * n)?)?;
    put(out, p, "projector_vs_sum", Metric::at_most(worst, 0.0, 1e-12));
    put(out, p, "completeness", Metric::at_most(complete, 0.0, 1e-12));
    Ok(())
}

fn hiding(out: &mut Metrics, p: &str, n: usize) -> Res<()> {
    let subspaces = enumerate_subspaces(2 * n, n)?;
    let (mut on, mut off) = (0.0f64, 0.0f64);
    for l in &subspaces {
        let inst = StateHspInstance::phaseless(n, l.clone())?;
        let sigma = inst.sigma()?.dense()?;
        let prof = hiding_profile(&sigma, &inst, l)?;
        on = on.max((prof.min_in - 1.0).abs());
        off = off.max(prof.max_out.unwrap_or(0.0));
    }
    put(out, p, "subspaces", Metric::info(subspaces.len() as f64));
    put(out, p, "on_subgroup_defect", Metric::at_most(on, 0.0, 1e-12));
    put(out, p, "off_subgroup_max", Metric::at_most(off, 0.0, 1e-12));
    Ok(())
}

fn twirl_check(out: &mut Metrics, p: &str, n: usize, copies: usize, seed: u64) -> Res<()> {
    let inst = instance(n)?;
    let qubits = 2 * n * copies;
    let (mut comm, mut pres) = (0.0f64, 0.0f64);
    for i in 0..TWIRL_STATES {
        let mut r = rng::stream(seed, i);
        let rho = DenseOperator::random_density(qubits, &mut r)?;
        let tw = twirl(&rho, &inst, copies)?;
        for g in all_vectors(2 * n) {
            let mu = inst.rep(&g)?.tensor_power(copies)?;
            comm = comm.max(tw.commutator(&mu)?.max_abs());
            pres = pres.max((mu.trace_product(&tw)? - mu.trace_product(&rho)?).norm());
        }
    }
    put(out, p, "commutator", Metric::at_most(comm, 0.0, 1e-12));
    put(out, p, "expectation_change", Metric::at_most(pres, 0.0, 1e-12));
    Ok(())
}

fn purify(out: &mut Metrics, p: &str, n: usize, t: usize) -> Res<()> {
    let mut worst = 0.0f64;
    for l in enumerate_subspaces(2 * n, n)? {
        let inst = StateHspInstance::phaseless(n, l)?;
        let sigma = inst.sigma()?;
        let channel = purify_copies(&sigma, t)?;
        let direct = direct_purification_average(&sigma, t)?;
        worst = worst.max(trace_distance(&channel, &direct)?);
    }
    put(out, p, "trace_distance", Metric::at_most(worst, 0.0, 1e-10));
    Ok(())
}

fn stabilizers(out: &mut Metrics, p: &str, n: usize) -> Res<()> {
    let (mut ranks, mut symbolic, mut dense) = (true, 0.0f64, 0.0f64);
    for l in enumerate_subspaces(2 * n, n)? {
        let base = purification_stabilizers(&l)?;
        ranks &= base.label_rank() == 4 * n && base.generators().len() == 4 * n;
        let inst = StateHspInstance::phaseless(n, l.clone())?;
        let sigma = inst.sigma()?;
        if n <= 2 {
            dense = dense.max(base.max_violation(&base_purification(&sigma)?)?);
        }
        for g in all_vectors(2 * n) {
            let group = g_purification_stabilizers(&l, &g)?;
            symbolic = symbolic.max(symbolic_violation(&group, &l, &g)?);
            if n == 1 {
                dense = dense.max(group.max_violation(&g_purification(&sigma, &g)?)?);
            }
        }
    }
    put(out, p, "label_rank", Metric::check(ranks));
    put(out, p, "symbolic_violation", Metric::at_most(symbolic, 0.0, 1e-12));
    if n <= 2 {
        put(out, p, "dense_violation", Metric::at_most(dense, 0.0, 1e-12));
    }
    Ok(())
}

fn werner(out: &mut Metrics, p: &str, q: usize, t: usize, samples: usize, seed: u64) -> Res<()> {
    let w = WernerCloner::new(q, t, 1)?;
    let want = werner_fidelity_formula(q, t, 1);
    put(out, p, "formula", Metric::info(want));
    put(
        out,
        p,
        "worst_fidelity",
        Metric::close_to(worst_case_fidelity(&w, samples, seed)?, want, 1e-9),
    );
    Ok(())
}

fn clone_game(out: &mut Metrics, p: &str, n: usize, t: usize, only: Option<&str>, mode: EvalMode) -> Res<()> {
    if t < 2 {
        return invalid("clone-game needs --t >= 2 output copies");
    }
    let inputs = t - 1;
    let cloners: Vec<Box<dyn CloningChannel>> = match only {
        Some(name) => vec![cloner_by_name(name, n, inputs).map_err(|e| match e {
            ampliclone_core::Error::InvalidLabel(_) => CliError::Invalid(format!("unknown cloner {name:?}")),
            other => CliError::Core(other),
        })?],
        None => builtin_cloners(n, inputs),
    };
    let bound = lower_bound_cloning(n);
    put(out, p, "lower_bound", Metric::info(bound));
    for c in &cloners {
        let report = clone_game_family(c, n, mode)?;
        let worst = report
            .per_instance
            .iter()
            .min_by(|a, b| a.advantage.value.total_cmp(&b.advantage.value))
            .map(|o| o.advantage.clone())
            .expect("the family is nonempty");
        let metric = if inputs < n {
            Metric::at_least(worst.value, bound, game_tolerance(&worst))
        } else {
            Metric::info(worst.value)
        };
        put(out, p, &format!("advantage.{}", c.name()), metric);
    }
    Ok(())
}

fn purified_subgroup_check(out: &mut Metrics, p: &str) -> Res<()> {
    let (mut agree, mut gap) = (true, f64::INFINITY);
    for l in enumerate_subspaces(2, 1)? {
        let inst = StateHspInstance::phaseless(1, l.clone())?;
        let h = purified_subgroup(&inst, &l)?;
        agree &= h.agree();
        let sigma = inst.sigma()?;
        let rep = PurifiedRepresentation { base: &inst };
        for g in all_vectors(2) {
            let psi = g_purification(&sigma, &g)?.tensor_power(2)?;
            let prof = hiding_profile(&psi.density()?, &rep, &h.closed_form)?;
            agree &= (prof.min_in - 1.0).abs() <= 1e-12;
            gap = gap.min(1.0 - prof.max_out.unwrap_or(0.0));
        }
    }
    put(out, p, "closed_form_agrees", Metric::check(agree));
    put(out, p, "hiding_gap", Metric::at_least(gap, 0.0, 0.0));
    Ok(())
}

fn all_acceptance(out: &mut Metrics, seed: u64) -> Res<()> {
    let mc = |s: u64| EvalMode::monte_carlo(DEFAULT_TRIALS, s);
    for n in [3usize, 16, 64] {
        let mode = if n <= 16 { mc(seed.wrapping_add(n as u64)) } else { EvalMode::Exact };
        linindep(out, &format!("c01.n{n:02}."), n, mode)?;
    }
    for n in [2usize, 3] {
        amplify_game(out, &format!("c02.n{n}."), n, n - 1, None, EvalMode::Exact)?;
    }
    let floor = (1..=64).map(parity_lower_bound).fold(f64::INFINITY, f64::min);
    put(out, "c02.", "lower_bound_min_n64", Metric::at_least(floor, 0.14, 0.0));
    monotonicity(out, "c03.")?;
    codes(out, "c04.", 3, EvalMode::Exact)?;
    for n in [1usize, 2] {
        povm(out, &format!("c05.n{n}."), n)?;
    }
    hiding(out, "c06.", 2)?;
    twirl_check(out, "c07.n1t2.", 1, 2, seed)?;
    twirl_check(out, "c07.n2t1.", 2, 1, seed)?;
    purify(out, "c08.t1.", 1, 1)?;
    purify(out, "c08.t2.", 1, 2)?;
    stabilizers(out, "c09.n1.", 1)?;
    stabilizers(out, "c09.n2.", 2)?;
    for (q, t) in [(1usize, 1usize), (1, 2), (2, 1)] {
        werner(out, &format!("c10.q{q}t{t}."), q, t, FIDELITY_SAMPLES, seed)?;
    }
    for name in ["measure_and_prepare", "append_maximally_mixed"] {
        clone_game(out, "c11.", 2, 2, Some(name), EvalMode::Exact)?;
    }
    let floor = (1..=64).map(lower_bound_cloning).fold(f64::INFINITY, f64::min);
    put(out, "c11.", "lower_bound_min_n64", Metric::at_least(floor, 0.14, 0.0));
    purified_subgroup_check(out, "c12.")?;
    Ok(())
}

fn monotonicity(out: &mut Metrics, p: &str) -> Res<()> {
    use ampliclone_core::amplify::{acceptance_prob_exact, amplified_law, law_acceptance};
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=3usize {
        let class = parity_class(n)?;
        for a in class.hypotheses()? {
            let dist = StructuredDistribution::new(class.clone(), a)?;
            for t in 0..=n {
                let base = acceptance_prob_exact(&dist, t)?;
                for amp in builtin_amplifiers() {
                    let law = amplified_law(&dist, &amp, t, 1)?;
                    worst = worst.max(law_acceptance(&dist, &law)? - base);
                }
            }
        }
    }
    put(out, p, "amplified_minus_true", Metric::at_most(worst, 0.0, 1e-12));
    Ok(())
}
