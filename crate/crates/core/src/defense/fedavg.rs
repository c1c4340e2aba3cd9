use crate::error::{Error, Result};
use crate::nn::ModelParams;

pub type ClientId = usize;

/// One client's contribution to a round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: ClientId,
    pub params: ModelParams,
    pub n_samples: usize,
}

/// Sample-weighted parameter average, `sum_i (n_i / n) w_i`.
pub fn fedavg<'a, I>(updates: I) -> Result<ModelParams>
where
    I: IntoIterator<Item = &'a ClientUpdate>,
{
    let updates: Vec<&ClientUpdate> = updates.into_iter().collect();
    let first = updates
        .first()
        .ok_or_else(|| Error::Aggregation("no updates to average".into()))?;
    let total: usize = updates.iter().map(|u| u.n_samples).sum();
    if total == 0 {
        return Err(Error::Aggregation("updates carry zero samples in total".into()));
    }
    let mut out = first.params.zeros_like();
    for u in &updates {
        if !u.params.same_shape(&out) {
            return Err(Error::dim(
                format!("update from client {}", u.client_id),
                "the shape of the first update",
                "a different shape",
            ));
        }
        out.axpy(u.n_samples as f64 / total as f64, &u.params)?;
    }
    Ok(out)
}
