use memcode::codec::{conditional_likelihood, Activation, Codec, MlpCodec, TabularCodec};
use memcode::info::{
    conservation_check, cross_entropy, entropy, kl_divergence, redundancy, ProbDist,
};
use memcode::loss::{expected_loss, pushforward_memory_probs, sample_loss, LossWeights};
use memcode::memory::{lattice_ball_size, MemoryStore, NeighborhoodSpec};
use memcode::BitVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dist(max_len: usize) -> impl Strategy<Value = ProbDist> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], 1..=max_len).prop_map(|mut w| {
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        ProbDist::from_weights(&w).unwrap()
    })
}

fn dist_pair(max_len: usize) -> impl Strategy<Value = (ProbDist, ProbDist)> {
    (1..=max_len).prop_flat_map(|n| {
        let side = || {
            prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n).prop_map(|mut w| {
                if w.iter().all(|&x| x == 0.0) {
                    w[0] = 1.0;
                }
                ProbDist::from_weights(&w).unwrap()
            })
        };
        (side(), side())
    })
}

fn bits(dim: usize) -> impl Strategy<Value = BitVector> {
    prop::collection::vec(any::<bool>(), dim).prop_map(|b| BitVector::from_bools(&b))
}

fn four_events() -> Vec<BitVector> {
    (0..4).map(|i| BitVector::from_index(i, 2)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gibbs_inequality((p, q) in dist_pair(64)) {
        let h = entropy(&p);
        prop_assert!(cross_entropy(&p, &q).unwrap() >= h - 1e-12);
        prop_assert!((cross_entropy(&p, &p).unwrap() - h).abs() <= 1e-9);
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
    }

    #[test]
    fn entropy_range(p in dist(64)) {
        let h = entropy(&p);
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
        prop_assert!(redundancy(&p) >= 0.0);
    }

    #[test]
    fn conservation_of_self_information(pm in 1e-9..=1.0f64, pem in 1e-9..=1.0f64) {
        let residual = conservation_check(pm * pem, pm, pem).unwrap();
        prop_assert!(residual <= 1e-10);
    }

    #[test]
    fn loss_is_monotone_in_weights(
        pm in 1e-9..=1.0f64,
        pem in 1e-9..=1.0f64,
        a in 0.0..2.0f64,
        b in 0.0..2.0f64,
        da in 0.0..1.0f64,
        db in 0.0..1.0f64,
    ) {
        let lo = sample_loss(pm, pem, LossWeights::new(a, b).unwrap()).unwrap();
        let hi = sample_loss(pm, pem, LossWeights::new(a + da, b + db).unwrap()).unwrap();
        prop_assert!(hi.total >= lo.total);
        prop_assert!(lo.total >= 0.0);
        prop_assert!((lo.total - lo.memory_term - lo.reconstruction_term).abs() <= 1e-12);
    }

    #[test]
    fn expected_loss_bounds_entropy(
        weights in prop::collection::vec(0.0..1.0f64, 4),
        map in prop::collection::vec(0usize..4, 4),
        alpha in 0.0..1.0f64,
        beta in 0.0..1.0f64,
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let d = ProbDist::from_weights(&weights).unwrap();
        let events = four_events();
        let codec = TabularCodec::with_optimal_decoder(events.clone(), &d, map, 4).unwrap();
        let push = pushforward_memory_probs(&codec, &d, &events).unwrap();
        let h = entropy(&d);
        let plain = expected_loss(&codec, &d, &events, &push, LossWeights::default()).unwrap();
        prop_assert!(plain >= h - 1e-10);
        let weighted =
            expected_loss(&codec, &d, &events, &push, LossWeights::new(alpha, beta).unwrap())
                .unwrap();
        prop_assert!(weighted >= plain - 1e-12);
    }

    #[test]
    fn bernoulli_likelihood_normalizes(probs in prop::collection::vec(0.0..=1.0f64, 1..=7)) {
        let d = probs.len();
        let total: f64 = (0..1u64 << d)
            .map(|i| conditional_likelihood(&probs, &BitVector::from_index(i, d)).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn mlp_decoder_normalizes(seed in any::<u64>(), m in bits(3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let codec = MlpCodec::new(4, 3, &[5], &[5], Activation::Relu, &mut rng).unwrap();
        let probs = codec.decode_probs(&m).unwrap();
        let total: f64 = (0..16)
            .map(|i| conditional_likelihood(&probs, &BitVector::from_index(i, 4)).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert_eq!(codec.encode(&BitVector::from_index(seed % 16, 4)).unwrap().dim(), 3);
    }

    #[test]
    fn store_counts_and_round_trip(
        records in prop::collection::vec(bits(5), 1..200),
        capacity in prop::option::of(1usize..50),
        n in 1usize..10,
    ) {
        let mut store = match capacity {
            Some(c) => MemoryStore::with_capacity(5, c).unwrap(),
            None => MemoryStore::new(5),
        };
        for r in &records {
            store.record(r.clone()).unwrap();
        }
        let expected_len = capacity.map_or(records.len(), |c| records.len().min(c));
        prop_assert_eq!(store.len(), expected_len);
        let kept = &records[records.len() - expected_len..];
        prop_assert!(store.records().map(|r| &r.vector).eq(kept.iter()));
        let total: usize = store.counts().map(|(_, c)| c).sum();
        prop_assert_eq!(total, store.len());
        let mass: f64 = store
            .counts()
            .map(|(m, _)| store.exact_probability(m).unwrap())
            .sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12);

        let spec = NeighborhoodSpec::new(n).unwrap();
        for (m, _) in store.counts() {
            match store.smoothed_probability(m, spec) {
                Ok(p) => prop_assert!(n <= store.len() && p > 0.0 && p <= 1.0),
                Err(_) => prop_assert!(n > store.len()),
            }
        }

        let mut buf = Vec::new();
        store.save(&mut buf).unwrap();
        let back = MemoryStore::load(&buf[..]).unwrap();
        prop_assert_eq!(&back, &store);
    }

    #[test]
    fn store_load_never_panics(text in "\\PC{0,200}") {
        let _ = MemoryStore::load(text.as_bytes());
    }

    #[test]
    fn store_load_rejects_truncation(records in prop::collection::vec(bits(4), 1..20), cut in 1usize..4) {
        let mut store = MemoryStore::new(4);
        for r in records {
            store.record(r).unwrap();
        }
        let mut buf = Vec::new();
        store.save(&mut buf).unwrap();
        buf.truncate(buf.len() - cut);
        prop_assert!(MemoryStore::load(&buf[..]).is_err());
    }

    #[test]
    fn lattice_ball_is_monotone(d in 1usize..20, r in 0.0..5.0f64) {
        let small = lattice_ball_size(d, r);
        let big = lattice_ball_size(d, r + 0.5);
        prop_assert!(small >= 1 && big >= small);
        prop_assert!(lattice_ball_size(d, d as f64) == 1u128 << d);
    }

    #[test]
    fn bit_vector_index_round_trip(i in any::<u32>(), d in 32usize..70) {
        let v = BitVector::from_index(u64::from(i), d);
        prop_assert_eq!(v.to_index(), u64::from(i));
        let back: BitVector = v.to_string().parse().unwrap();
        prop_assert_eq!(back, v);
    }
}
