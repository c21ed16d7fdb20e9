//! Kolmogorov–Arnold networks with B-spline edge functions.

mod bspline;
mod layer;
mod fit;
mod network;
mod symbolic;

pub use bspline::{BSplineGrid, MAX_ORDER};
pub use layer::{sigmoid, silu, KanEdge, KanLayer, LayerCache};
pub use fit::{fit_mse, mse_gradient, rmse};
pub use network::{KanNetwork, NetworkCache};
pub use symbolic::{extract_formulas, EdgeFit, Expr, Primitive, SymbolicFormula};
