use qonsensus::consensus::{decode, ConsensusConfig};
use qonsensus::ising::{spins_from_bits, to_ising, Rational};
use qonsensus::metrics::{adjusted_rand_index, mean_ari};
use qonsensus::qubo::eval_qubo;
use qonsensus::similarity::build_similarity;
use qonsensus::{
    generate_ensemble, run_consensus, AnnealParams, Dataset, Ensemble, EnsembleConfig, Method,
    Partition, QuboModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three tight, well separated blobs of `per` points each.
fn blobs(per: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per {
            rows.push(
                center
                    .iter()
                    .map(|x| x + rng.random_range(-1.0..1.0))
                    .collect(),
            );
            labels.push(c);
        }
    }
    Dataset::new("blobs", rows, Some(labels)).unwrap()
}

/// Models this small (under ~200 variables) need a finer offset step: the
/// default overshoots the one-hot barrier and picks escapes almost at random.
fn small_model() -> AnnealParams {
    AnnealParams {
        offset_increment: 300.0,
        ..AnnealParams::default()
    }
}

#[test]
fn separated_blobs_are_recovered_by_one_hot_methods_and_hac() {
    let ds = blobs(8, 1);
    let ens = generate_ensemble(
        &ds,
        &EnsembleConfig {
            m: 30,
            ..EnsembleConfig::new(3, 5)
        },
    )
    .unwrap();
    let truth = ds.labels().unwrap();
    for method in [Method::DaCr, Method::DaSm, Method::Hac] {
        let mut cfg = ConsensusConfig::new(method, 3);
        cfg.anneal = small_model();
        let result = run_consensus(&ens, &cfg).unwrap();
        assert_eq!(
            adjusted_rand_index(&result.partition, truth).unwrap(),
            1.0,
            "{method}"
        );
        assert!(mean_ari(&result.partition, &ens).unwrap() > 0.0);
        if method == Method::Hac {
            assert!(result.solve.is_none());
        } else {
            assert_eq!(result.solve.as_ref().unwrap().violations, 0);
        }
    }
}

#[test]
fn correlation_model_leaves_spare_slots_empty() {
    let truth = Partition::from_labels(&[0, 0, 1, 1, 1, 2, 2, 0, 2, 1, 0, 2]);
    let ens = Ensemble::new(vec![truth.clone(); 5], 0).unwrap();
    let mut cfg = ConsensusConfig::new(Method::DaCr, 8);
    cfg.anneal = small_model();
    let result = run_consensus(&ens, &cfg).unwrap();
    assert_eq!(result.partition, truth);
    assert_eq!(result.solve.unwrap().violations, 0);
}

#[test]
fn model_text_ising_and_decode_agree() {
    let ds = blobs(4, 3);
    let ens = generate_ensemble(
        &ds,
        &EnsembleConfig {
            m: 10,
            ..EnsembleConfig::new(3, 1)
        },
    )
    .unwrap();
    let sim = build_similarity(&ens).unwrap();
    for method in [Method::DaSm, Method::DaCr, Method::DaBin] {
        let model = ConsensusConfig::new(method, 3)
            .build_model(&sim)
            .unwrap()
            .unwrap();
        let mut text = Vec::new();
        model.write_text(&mut text).unwrap();
        let reread = QuboModel::read_text(text.as_slice()).unwrap();
        let ising = to_ising(&model);

        let encoded = model.encode(ds.labels().unwrap()).unwrap();
        let (decoded, violations) = decode(&encoded, &model).unwrap();
        assert_eq!(violations, 0);
        assert_eq!(&decoded, ds.labels().unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let bits: Vec<bool> = (0..model.num_vars())
                .map(|_| rng.random_bool(0.3))
                .collect();
            let e = eval_qubo(&bits, &model).unwrap();
            assert_eq!(eval_qubo(&bits, &reread).unwrap(), e, "{method}");
            let spin_energy = ising.energy(&spins_from_bits(&bits)).unwrap() + ising.offset;
            assert_eq!(
                spin_energy,
                Rational::from_integer(i128::from(e)),
                "{method}"
            );
        }
    }
}
