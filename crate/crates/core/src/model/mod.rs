//! LSTM sequence classifier: one recurrent layer feeding a sigmoid unit
//! read from the last hidden state. Parameters live in a single flat buffer
//! so the optimizer and the gradient check can treat them uniformly.

mod gradcheck;
mod io;
mod lstm;
mod params;
mod train;

pub use gradcheck::{
    analytic_gradient, gradient_check, gradient_check_with_step, relative_error, GradCheckReport, TensorError,
    DEFAULT_STEP,
};
pub use io::{load_model, model_from_str, model_to_string, save_model, Provenance, SavedModel, GATE_ORDER, MODEL_FORMAT, MODEL_VERSION};
pub use lstm::{forward, Prediction, Tape};
pub use params::{LstmParams, Tensor};
pub use train::{loss, predict_scores, train, RmsProp, TrainConfig, TrainOutcome};
