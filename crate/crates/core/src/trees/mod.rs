//! CART regression trees with Random-Forest and Bagging ensembles.

mod cart;
mod forest;

pub use cart::{fit_cart, fit_cart_on, Node, RegressionTree, TreeParams, TIE_TOLERANCE};
pub use forest::{
    fit_bagging, fit_ensemble, fit_random_forest, EnsembleKind, EnsembleParams, ForestModel,
    FOREST_FORMAT_VERSION,
};
