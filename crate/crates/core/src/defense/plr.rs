use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::ModelParams;

/// Penultimate-layer representation: the weight matrix of the second-to-last
/// dense layer. Each row is one output unit's incoming weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PlrMatrix(pub Matrix);

impl PlrMatrix {
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Copies the second-to-last layer's weights (bias excluded).
pub fn extract_plr(model: &ModelParams) -> Result<PlrMatrix> {
    let n = model.layers.len();
    if n < 2 {
        return Err(Error::Structure(format!(
            "a penultimate layer needs at least two layers, model has {n}"
        )));
    }
    Ok(PlrMatrix(model.layers[n - 2].weights.clone()))
}
