//! Locally competitive algorithm: dictionaries with lateral inhibition and
//! the spiking layer dynamics that solve the sparse coding problem
//! min ½‖x − Da‖² + λ‖a‖₁ over a ≥ 0.

mod dictionary;
mod layer;

pub(crate) use dictionary::gaussian;
pub use dictionary::{Dictionary, InhibitionMatrix, UNIT_NORM_TOL};
pub use layer::{
    rectified_softshrink, BitWidth, LcaConfig, LcaLayer, LifReset, NeuronModel, SparseCode,
};
