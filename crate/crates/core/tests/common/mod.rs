#![allow(dead_code)]

use polcbm::optim::Parameters;

/// Mismatch between an analytic and a central-difference derivative.
#[derive(Debug)]
pub struct GradientMismatch {
    pub group: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Compares every entry of `analytic` with a central difference of `loss`
/// at step `h`. An entry passes when the absolute difference is within
/// `rel·max(|a|, |n|)` or within `abs`.
pub fn finite_difference_mismatches<P, F>(params: &mut P, analytic: &P, h: f64, rel: f64, abs: f64, mut loss: F) -> (usize, Vec<GradientMismatch>)
where
    P: Parameters,
    F: FnMut(&P) -> f64,
{
    let layout: Vec<usize> = params.groups().iter().map(|g| g.len()).collect();
    let grads: Vec<Vec<f64>> = analytic.groups().iter().map(|g| g.to_vec()).collect();
    let mut checked = 0;
    let mut bad = Vec::new();
    for (g, &len) in layout.iter().enumerate() {
        for j in 0..len {
            let v = params.groups()[g][j];
            params.groups_mut()[g][j] = v + h;
            let up = loss(params);
            params.groups_mut()[g][j] = v - h;
            let down = loss(params);
            params.groups_mut()[g][j] = v;
            let numeric = (up - down) / (2.0 * h);
            let a = grads[g][j];
            let diff = (a - numeric).abs();
            if diff > abs && diff > rel * a.abs().max(numeric.abs()) {
                bad.push(GradientMismatch {
                    group: g,
                    index: j,
                    analytic: a,
                    numeric,
                });
            }
            checked += 1;
        }
    }
    (checked, bad)
}

use polcbm::concepts::ClassConceptTable;
use polcbm::pacbm::{sample_split, Split};
use polcbm::par::Exec;
use polcbm::synthgen::{build_prototypes, class_table, default_prototype_specs, generate_scene, Region, SceneSpec};

/// Two-class scene (Water | Developed), 40×30, with its class table.
pub fn toy_scene_spec() -> SceneSpec {
    let specs = default_prototype_specs();
    SceneSpec {
        width: 40,
        height: 30,
        looks: 8,
        seed: 11,
        regions: vec![
            Region { class: 0, row: 0, col: 0, height: 30, width: 20 },
            Region { class: 1, row: 0, col: 20, height: 30, width: 20 },
        ],
        prototypes: vec![specs[0].clone(), specs[5].clone()],
    }
}

pub fn toy_data() -> (Split, ClassConceptTable) {
    let spec = toy_scene_spec();
    let scene = generate_scene(&spec, Exec::Parallel).unwrap();
    let split = sample_split(&scene, 100, 40, 5, Exec::Parallel).unwrap();
    let table = class_table(&build_prototypes(&spec.prototypes).unwrap()).unwrap();
    (split, table)
}
