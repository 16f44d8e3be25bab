//! Cox proportional-hazards regression.

mod concordance;
mod encode;
mod fit;
mod likelihood;
mod predict;

pub use concordance::c_index;
pub use encode::{encode, Column, DesignMatrix, Encoding, Schema};
pub use fit::{
    breslow_baseline, fit_cox, fit_matrix, CoxModel, FitDiagnostics, DEFAULT_L2,
    GRADIENT_TOLERANCE, MAX_ABS_BETA, MAX_ITERATIONS, RELATIVE_TOLERANCE,
};
pub use likelihood::neg_log_partial_likelihood;
pub use predict::{
    average_survival, average_survival_lenient, conditioned_curves, predict_cumhazard,
    predict_survival, AveragedCurve,
};
