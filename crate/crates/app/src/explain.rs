use polcbm::concepts::CONCEPT_COUNT;
use polcbm::kan::{extract_formulas, EdgeFit, Expr};
use polcbm::pacbm::PaCBMModel;
use polcbm::rng::{stream, Domain};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::AppResult;

/// Random concept vectors drawn in addition to the class vectors.
pub const EXPLAIN_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFormula {
    pub class: usize,
    pub name: String,
    /// Rendered in concept values `c1..c33` in `[0, 1]`.
    pub formula: String,
    pub r2: f64,
    pub expr: Expr,
    /// Per-edge fits in the network's own input coordinates (`2c − 1`).
    pub edges: Vec<EdgeFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaReport {
    pub seed: u64,
    pub samples: usize,
    /// `variables[i]` names input `i`, e.g. `c1`.
    pub variables: Vec<String>,
    pub formulas: Vec<ClassFormula>,
}

pub fn variable_name(i: usize) -> String {
    format!("c{}", i + 1)
}

/// Symbolic concept-to-label formulas for every class.
pub fn explain(model: &PaCBMModel, seed: u64) -> AppResult<FormulaReport> {
    let mut concepts: Vec<Vec<f64>> = (0..model.class_count())
        .map(|y| model.class_table.concepts_for_class(y).map(|c| c.values().to_vec()))
        .collect::<Result<_, _>>()?;
    let mut rng = stream(seed, Domain::Explain, 0);
    for _ in 0..EXPLAIN_SAMPLES {
        concepts.push((0..CONCEPT_COUNT).map(|_| rng.random::<f64>()).collect());
    }
    let inputs: Vec<Vec<f64>> = concepts
        .iter()
        .map(|c| c.iter().map(|&v| 2.0 * v - 1.0).collect())
        .collect();
    let names = model.class_table.class_names();
    let formulas = extract_formulas(&model.params.kan_c2t, &inputs)?
        .into_iter()
        .map(|f| {
            let expr = f.expr.substitute_affine_inputs(2.0, -1.0);
            ClassFormula {
                class: f.output,
                name: names[f.output].clone(),
                formula: expr.render(&variable_name),
                r2: f.r2,
                expr,
                edges: f.edges,
            }
        })
        .collect();
    Ok(FormulaReport {
        seed,
        samples: concepts.len(),
        variables: (0..CONCEPT_COUNT).map(variable_name).collect(),
        formulas,
    })
}
