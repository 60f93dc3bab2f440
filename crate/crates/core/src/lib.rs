//! Nonparametric calibration of two-dimensional pure-jump Lévy processes and
//! symmetric α-stable processes by characteristic-function matching.

pub mod calib;
pub mod charfn;
pub mod error;
pub mod funcform;
pub mod io;
pub mod market;
pub mod optimizer;
pub mod quadrature;
pub mod simulate;

pub use calib::{calibrate, CalibProblem, CalibResult, FormConfig, FormKind, Mode};
pub use charfn::{ComplexValue, EcfEstimate, IncrementSeries};
pub use error::{Error, Result};
pub use funcform::{Form, FormSpec, FunctionalForm, ParamVector};
pub use market::{ingest_prices, pairwise_alpha, AlphaMatrix, PairwiseConfig, PriceTable};
pub use optimizer::{minimize, OptimizerOptions};
pub use quadrature::{Domain, QuadratureRule};
pub use simulate::RngState;
