//! Trained color models and their on-disk format.

mod file;
mod gmm;
mod histogram;

pub use file::{load_model, read_model_file, save_model, write_model_file, Model, FORMAT_VERSION, MAGIC};
pub use gmm::{
    fit_mixture, gmm_posterior, train_gmm, train_gmm_traced, GmmConfig, GmmModel, GmmTrace, Mixture, Reservoir,
};
pub use histogram::{
    spl_accepts, train_histogram, train_histogram_from_pairs, HistogramModel, LogRatioLut, PosteriorLut,
    DEFAULT_BINS, SMOOTHING,
};
