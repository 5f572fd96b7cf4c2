mod common;

use common::oracle::{self, q, Q};
use genshift::approx::{
    assemble_one_shift, build_chains, chain_length, random_nilpotent_block,
    shift_mixture_correction, ChainBuilder, ChainFamily, MixtureSpec, Provider,
};
use genshift::{
    ChainIndex, Error, Exact, Float, NormMode, OperatorExpr, Scalar, SpanBasis, SparseVector,
    TailRule, WeightSequence,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Model {
    dim: usize,
    op: OperatorExpr<Exact>,
    family: ChainFamily<Exact>,
}

/// A random nilpotent block on `1..=d` followed by zero, with chains built
/// from `e_1, ..., e_{d + 2}`.
fn model(seed: u64, max_dim: usize) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(1..=max_dim);
    let op = random_nilpotent_block::<Exact, _>(d, 1, &mut rng);
    let provider = Provider::Sequence((1..=d as i64 + 2).map(SparseVector::basis).collect());
    let mut builder = ChainBuilder::new(&op, provider, d + 3);
    builder.build_all().unwrap();
    let family = builder.finish().unwrap();
    Model {
        dim: d + 2,
        op,
        family,
    }
}

fn chain_columns(m: &Model, l: usize) -> Vec<Vec<Q>> {
    m.family.chains[l - 1]
        .vectors
        .iter()
        .map(|v| oracle::dense(v, m.dim))
        .collect()
}

fn e_columns(m: &Model, upto: usize) -> Vec<Vec<Q>> {
    (1..=upto).flat_map(|l| chain_columns(m, l)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn construction_conditions_hold_on_dense_oracle(seed in any::<u64>()) {
        let m = model(seed, 8);
        let a = oracle::matrix_of(&m.op, m.dim);
        let provided: Vec<Vec<Q>> = m.family.provided.iter().map(|v| oracle::dense(v, m.dim)).collect();
        let all = e_columns(&m, m.family.len());
        prop_assert_eq!(oracle::rank(&all), all.len());
        prop_assert_eq!(all.len(), m.dim);
        for l in 1..=m.family.len() {
            let chain = chain_columns(&m, l);
            for j in 0..chain.len() - 1 {
                prop_assert_eq!(oracle::mat_vec(&a, &chain[j]), chain[j + 1].clone());
            }
            let previous = e_columns(&m, l - 1);
            let last = oracle::mat_vec(&a, chain.last().unwrap());
            prop_assert!(oracle::in_span(&previous, &last));
            let mut stacked = previous.clone();
            stacked.extend(chain.iter().cloned());
            prop_assert_eq!(oracle::rank(&stacked), previous.len() + chain.len());
            let source = m.family.chains[l - 1].source;
            prop_assert_eq!(&chain[0], &provided[source - 1]);
            // every earlier provided vector was already covered
            for x in &provided[..source - 1] {
                prop_assert!(oracle::in_span(&previous, x));
            }
            prop_assert!(!oracle::in_span(&previous, &provided[source - 1]));
        }
        for x in &provided {
            prop_assert!(oracle::in_span(&all, x));
        }
        let flat = m.family.flattened();
        for (i, _) in &flat {
            for (j, w) in &flat {
                let expected = Exact::from_int(i64::from(i == j));
                prop_assert_eq!(m.family.functional(i.chain, i.position).eval(w), expected);
            }
        }
        m.family.check_invariants(&m.op).unwrap();
    }

    #[test]
    fn chain_length_lands_in_previous_span(seed in any::<u64>(), y in common::dense_vector(6), chains in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_nilpotent_block::<Exact, _>(6, 1, &mut rng);
        let a = oracle::matrix_of(&op, 6);
        let family = build_chains(&op, Provider::Standard, 1, 10).unwrap();
        let members: Vec<SparseVector<Exact>> = family.chains.iter().take(chains).flat_map(|c| c.vectors.clone()).collect();
        let previous = SpanBasis::from_members(&members).unwrap();
        let prev_cols: Vec<Vec<Q>> = members.iter().map(|v| oracle::dense(v, 6)).collect();
        match chain_length(&op, &oracle::sparse(&y), &previous, 20) {
            Ok(d) => {
                prop_assert!(oracle::in_span(&prev_cols, &oracle::power_vec(&a, &y, d)));
                let mut krylov = prev_cols.clone();
                for r in 0..d {
                    let power = oracle::power_vec(&a, &y, r);
                    prop_assert!(!oracle::in_span(&krylov, &power), "S^{r} y already dependent");
                    krylov.push(power);
                }
            }
            Err(Error::AlreadyInSpan) => prop_assert!(oracle::in_span(&prev_cols, &y)),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn corrections_act_locally_with_exact_junctions(seed in any::<u64>(), tenth in any::<bool>()) {
        let m = model(seed, 8);
        let eps = if tenth { q(1, 10) } else { q(1, 100) };
        let r = assemble_one_shift(&m.op, &m.family, &eps, NormMode::L2).unwrap();
        prop_assert!(r.distance.bound <= &eps * q(9, 10));
        for mm in 1..=m.family.len() {
            for v in m.family.e_basis(mm) {
                let diff = &r.output.apply(v).unwrap() - &m.op.apply(v).unwrap();
                let mut expected = SparseVector::zero();
                for l in 2..=(mm + 1).min(m.family.len()) {
                    let entry = r.plan.entries.iter().find(|e| e.chain == l).unwrap();
                    if !entry.skipped {
                        let f = m.family.functional(l, m.family.depth(l));
                        expected.axpy(&(Exact::from_real(&entry.epsilon) * f.eval(v)), m.family.vector(l - 1, 1));
                    }
                }
                prop_assert_eq!(diff, expected);
            }
        }
        for entry in &r.plan.entries {
            let l = entry.chain;
            let coefficient = r.junction_coefficient(l).unwrap();
            if entry.skipped {
                let end = m.family.vector(l, m.family.depth(l));
                prop_assert_eq!(coefficient, m.family.functional(l - 1, 1).eval(&m.op.apply(end).unwrap()));
            } else {
                prop_assert_eq!(coefficient, Exact::from_real(&entry.epsilon));
            }
        }
        // a second pass finds nothing to correct
        let again = assemble_one_shift(&r.output, &m.family, &eps, NormMode::L2).unwrap();
        prop_assert_eq!(again.plan.skipped().count(), m.family.len() - 1);
        prop_assert_eq!(&again.distance.bound, &Q::from_integer(0.into()));
        prop_assert_eq!(&again.output, &r.output);
        for l in 2..=m.family.len() {
            prop_assert_eq!(again.junction_coefficient(l), r.junction_coefficient(l));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sampled_distance_stays_under_bound(seed in any::<u64>()) {
        let m = model(seed, 8);
        let r = assemble_one_shift(&m.op, &m.family, &q(1, 10), NormMode::L2).unwrap();
        let (input, output): (OperatorExpr<Float>, OperatorExpr<Float>) = (r.input.convert(), r.output.convert());
        let bound = r.distance.value();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..500 {
            let v = SparseVector::from_entries((1..=m.dim as i64).map(|c| {
                (c, Float::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            }));
            let norm = v.norm(NormMode::L2).value();
            let diff = &output.apply(&v).unwrap() - &input.apply(&v).unwrap();
            prop_assert!(diff.norm(NormMode::L2).value() <= bound * norm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mixture_exponents_follow_cut_distance(
        prefix in proptest::collection::vec(prop_oneof![Just(0i64), 1i64..=4], 0..6),
        second in any::<bool>(),
    ) {
        let weights = WeightSequence::new(
            prefix.iter().map(|&n| Exact::from_ratio(n, 2)).collect(),
            Some(TailRule::one_over_n()),
        );
        let mut spec = MixtureSpec::forward(weights.clone());
        if second {
            spec.forward.push(WeightSequence::new(vec![], Some(TailRule::geometric(Exact::from_int(1), Exact::from_ratio(1, 2)))));
        }
        let horizon = 40;
        let k = shift_mixture_correction(&spec, &q(1, 5), horizon, 2_000).unwrap();
        prop_assert!(k.norm.bound < q(1, 10));
        prop_assert!(k.density.dense_on_horizon);
        prop_assert!(k.exponent_mismatches.is_empty());
        for (c, cuts) in k.cuts.iter().enumerate() {
            for p in 1..=horizon {
                let cut = cuts.cuts.iter().copied().find(|&x| x >= p).unwrap();
                let w = spec.weights(c);
                let stop = (p..cut).find(|&t| w.weight(t).unwrap().is_zero()).unwrap_or(cut);
                let expected = (stop - p + 1) as usize;
                let x = SparseVector::basis(spec.coordinate(c, p));
                prop_assert!(k.s_minus_k.power_apply(&x, expected).unwrap().is_zero());
                prop_assert!(!k.s_minus_k.power_apply(&x, expected - 1).unwrap().is_zero());
                let index = ChainIndex::new(c + 1, p as usize);
                prop_assert_eq!(k.expected_exponent(c, p), Some(expected), "{}", index);
            }
            for &cut in &cuts.cuts {
                prop_assert!(k.s_minus_k.apply(&SparseVector::basis(spec.coordinate(c, cut))).unwrap().is_zero());
            }
        }
    }
}
