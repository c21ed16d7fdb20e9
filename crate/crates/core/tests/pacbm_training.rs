mod common;

use std::collections::BTreeMap;

use polcbm::concepts::CONCEPT_COUNT;
use polcbm::optim::Parameters;
use polcbm::pacbm::{
    argmax, evaluate, loss_and_gradient, train, Checkpoint, LabeledSet, ModelConfig, Normalization, Objective,
    PaCBMModel, Strategy, TrainConfig,
};
use polcbm::par::Exec;

fn cfg(strategy: Strategy, epochs: usize) -> TrainConfig {
    TrainConfig {
        strategy,
        epochs,
        batch: 32,
        seed: 9,
        ..Default::default()
    }
}

fn subset(set: &LabeledSet, idx: &[usize]) -> LabeledSet {
    LabeledSet {
        stats: idx.iter().map(|&i| set.stats[i]).collect(),
        labels: idx.iter().map(|&i| set.labels[i]).collect(),
        anchors: idx.iter().map(|&i| set.anchors[i]).collect(),
    }
}

#[test]
fn joint_loss_strictly_decreases_over_ten_epochs() {
    let (split, table) = common::toy_data();
    let out = train(&split.train, table, &cfg(Strategy::Joint, 10), Exec::Parallel).unwrap();
    let losses: Vec<f64> = out.log.iter().map(|l| l.loss.total).collect();
    assert_eq!(losses.len(), 10);
    for w in losses.windows(2) {
        assert!(w[1] < w[0], "{losses:?}");
    }
}

#[test]
fn training_is_deterministic_and_policy_independent() {
    let (split, table) = common::toy_data();
    for strategy in [Strategy::Joint, Strategy::Sequential, Strategy::Independent, Strategy::Baseline] {
        let c = cfg(strategy, 3);
        let a = train(&split.train, table.clone(), &c, Exec::Parallel).unwrap().model;
        let b = train(&split.train, table.clone(), &c, Exec::Parallel).unwrap().model;
        let s = train(&split.train, table.clone(), &c, Exec::Sequential).unwrap().model;
        let ja = Checkpoint::from_model(&a).to_json().unwrap();
        assert_eq!(ja, Checkpoint::from_model(&b).to_json().unwrap(), "{strategy:?}");
        assert_eq!(ja, Checkpoint::from_model(&s).to_json().unwrap(), "{strategy:?}");
    }
}

#[test]
fn stage_two_leaves_stage_one_parameters_untouched() {
    let (split, table) = common::toy_data();
    for strategy in [Strategy::Sequential, Strategy::Independent] {
        let out = train(&split.train, table.clone(), &cfg(strategy, 4), Exec::Parallel).unwrap();
        let before = out.stage_one.expect("two-stage strategy");
        let after = &out.model.params;
        assert_eq!(before.encoder.flatten(), after.encoder.flatten());
        assert_eq!(before.direct_head.flatten(), after.direct_head.flatten());
        assert_eq!(before.kan_f2c.flatten(), after.kan_f2c.flatten());
        assert_ne!(before.kan_c2t.flatten(), after.kan_c2t.flatten());
        assert!(out.log.iter().any(|l| l.stage == 2));
    }
}

#[test]
fn independent_concept_to_label_interpolates_class_vectors() {
    let (split, table) = common::toy_data();
    let out = train(&split.train, table.clone(), &cfg(Strategy::Independent, 20), Exec::Parallel).unwrap();
    let m = &out.model;
    for y in 0..table.len() {
        let c = table.concepts_for_class(y).unwrap().values();
        assert_eq!(argmax(&m.concept_path(c).unwrap()), y);
    }
    let correct = split
        .val
        .labels
        .iter()
        .filter(|&&y| argmax(&m.concept_path(table.concepts_for_class(y).unwrap().values()).unwrap()) == y)
        .count();
    assert_eq!(correct, split.val.len());
}

#[test]
fn sequential_beats_chance_on_the_toy_set() {
    let (split, table) = common::toy_data();
    let out = train(&split.train, table, &cfg(Strategy::Sequential, 10), Exec::Parallel).unwrap();
    let r = evaluate(&out.model, &split.val, Exec::Parallel).unwrap();
    assert!(r.concept_path.oa >= 0.5, "{}", r.concept_path.oa);
}

#[test]
fn detached_joint_without_concept_loss_reduces_to_the_baseline() {
    let (split, table) = common::toy_data();
    let mut joint = cfg(Strategy::Joint, 5);
    joint.lambda = 0.0;
    joint.detach_concepts = true;
    let mut base = joint.clone();
    base.strategy = Strategy::Baseline;
    let j = train(&split.train, table.clone(), &joint, Exec::Parallel).unwrap().model;
    let b = train(&split.train, table, &base, Exec::Parallel).unwrap().model;
    assert_eq!(j.params.encoder, b.params.encoder);
    assert_eq!(j.params.direct_head, b.params.direct_head);
    for s in &split.val.stats {
        let (x, y) = (j.forward_stats(s).unwrap(), b.forward_stats(s).unwrap());
        assert_eq!(x.direct_logits, y.direct_logits);
        assert_eq!(x.direct_label, y.direct_label);
    }
}

#[test]
fn concept_supervision_does_not_raise_concept_loss() {
    let (split, table) = common::toy_data();
    let bce = |lambda: f64| {
        let mut c = cfg(Strategy::Joint, 10);
        c.lambda = lambda;
        let m = train(&split.train, table.clone(), &c, Exec::Parallel).unwrap().model;
        loss_and_gradient(&m, Objective::Joint { lambda, detach: false }, &split.train, Exec::Parallel)
            .unwrap()
            .0
            .bce
    };
    let (without, with) = (bce(0.0), bce(0.7));
    assert!(with <= without * 1.05, "bce with λ=0.7 {with}, λ=0 {without}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let (split, table) = common::toy_data();
    let mut c = cfg(Strategy::Joint, 1);
    c.lambda = -0.1;
    assert!(train(&split.train, table.clone(), &c, Exec::Parallel).is_err());
    let mut c = cfg(Strategy::Joint, 1);
    c.batch = 0;
    assert!(train(&split.train, table.clone(), &c, Exec::Parallel).is_err());
    assert!(train(&LabeledSet::default(), table, &cfg(Strategy::Joint, 1), Exec::Parallel).is_err());
}

#[test]
fn intervention_contract() {
    let (split, table) = common::toy_data();
    let m = train(&split.train, table, &cfg(Strategy::Joint, 5), Exec::Parallel).unwrap().model;
    let out = m.forward_stats(&split.val.stats[0]).unwrap();
    let same = m.intervene(&out.concept_probs, &BTreeMap::new()).unwrap();
    assert_eq!(same.logits, out.concept_path_logits);
    assert_eq!(same.label, out.label);

    let edit = BTreeMap::from([(3, 0.0), (10, 1.0)]);
    let r = m.intervene(&out.concept_probs, &edit).unwrap();
    assert_eq!(r.concepts[3], 0.0);
    assert_eq!(r.concepts[10], 1.0);
    assert_eq!(r.logits, m.concept_path(&r.concepts).unwrap());

    assert!(m.intervene(&out.concept_probs, &BTreeMap::from([(CONCEPT_COUNT, 0.5)])).is_err());
    assert!(m.intervene(&out.concept_probs, &BTreeMap::from([(0, 1.5)])).is_err());
    assert!(m.intervene(&out.concept_probs, &BTreeMap::from([(0, -0.1)])).is_err());
    assert!(m.intervene(&out.concept_probs[..5], &BTreeMap::new()).is_err());
}

#[test]
fn forward_outputs_are_well_formed() {
    let (split, table) = common::toy_data();
    let norm = Normalization::fit(&split.train.stats).unwrap();
    let m = PaCBMModel::new(table, norm, ModelConfig::new(Strategy::Joint, 0.7, 1)).unwrap();
    for s in &split.val.stats {
        let o = m.forward_stats(s).unwrap();
        assert_eq!(o.concept_probs.len(), CONCEPT_COUNT);
        assert!(o.concept_probs.iter().all(|&p| p > 0.0 && p < 1.0));
        assert!(o.features.iter().all(|&f| f > -1.0 && f < 1.0));
        assert!(o.concept_path_logits.iter().chain(&o.direct_logits).all(|v| v.is_finite()));
        // The decision rule only depends on the ordering of the logits.
        let warped: Vec<f64> = o.concept_path_logits.iter().map(|&v| v.exp() * 3.0 + 1.0).collect();
        assert_eq!(argmax(&warped), o.label);
    }
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let (split, table) = common::toy_data();
    let m = train(&split.train, table, &cfg(Strategy::Sequential, 2), Exec::Parallel).unwrap().model;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    polcbm::pacbm::write_checkpoint(&path, &m).unwrap();
    let back = polcbm::pacbm::read_checkpoint(&path).unwrap();
    assert_eq!(back, m);
    for s in &split.val.stats {
        assert_eq!(back.forward_stats(s).unwrap(), m.forward_stats(s).unwrap());
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(Checkpoint::from_model(&back).to_json().unwrap() + "\n", text);

    let mut bad = Checkpoint::from_model(&m);
    bad.version = "2".into();
    assert!(bad.into_model().is_err());
    assert!(Checkpoint::from_json("{\"format\":\"PACBM\"}").is_err());
}

#[test]
fn full_loss_gradient_matches_finite_differences() {
    let (split, table) = common::toy_data();
    let norm = Normalization::fit(&split.train.stats).unwrap();
    let mut model = PaCBMModel::new(table, norm, ModelConfig::new(Strategy::Joint, 0.7, 4)).unwrap();
    let set = subset(&split.train, &[0, 150]);
    let objective = Objective::Joint { lambda: 0.7, detach: false };
    let (_, grads) = loss_and_gradient(&model, objective, &set, Exec::Sequential).unwrap();
    let mut params = model.params.clone();
    let (checked, bad) = common::finite_difference_mismatches(&mut params, &grads, 1e-4, 1e-3, 1e-6, |p| {
        model.params = p.clone();
        loss_and_gradient(&model, objective, &set, Exec::Sequential).unwrap().0.total
    });
    assert_eq!(checked, grads.parameter_count());
    assert!(bad.is_empty(), "{} of {checked} mismatches, first {:?}", bad.len(), &bad[..bad.len().min(5)]);
}
