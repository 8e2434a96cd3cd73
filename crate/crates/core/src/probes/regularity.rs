use super::resolvent::Resolvent;
use crate::error::{Error, Result};
use crate::lattice::{deform, Depth, Region};
use crate::operators::{OperatorMatrix, Selector};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum RegularityWitness {
    /// An eigenvalue within the threshold of the energy.
    Eigenvalue(f64),
    /// A site whose dressed resolvent exceeds the threshold, with that value.
    Site(i64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Regularity {
    pub regular: bool,
    /// `exp(-m r)`.
    pub threshold: f64,
    /// Distance from the energy to the spectrum.
    pub distance: f64,
    /// `max_i ||N_i R P+^{[i]_r}||`; absent when the distance test already fails.
    pub max_block: Option<f64>,
    pub witness: Option<RegularityWitness>,
}

/// Decides `(m, E, r)`-regularity of `h` with sites taken from `k_set`.
///
/// `h` is either the Hamiltonian of `k_set` on its own space or a decoupled compression
/// on a larger region containing `k_set`.
pub fn regularity(
    h: &OperatorMatrix,
    k_set: &Region,
    m: f64,
    energy: f64,
    r: u64,
) -> Result<Regularity> {
    if k_set.is_empty() {
        return Err(Error::EmptyRegion("K".into()));
    }
    k_set.require_subset_of(h.region(), "K")?;
    let threshold = (-m * r as f64).exp();
    let spectrum = h.eigenvalues()?;
    let nearest = spectrum
        .iter()
        .copied()
        .min_by(|x, y| (x - energy).abs().total_cmp(&(y - energy).abs()))
        .ok_or_else(|| Error::EmptyRegion("spectrum".into()))?;
    let distance = (nearest - energy).abs();
    if distance <= threshold {
        return Ok(Regularity {
            regular: false,
            threshold,
            distance,
            max_block: None,
            witness: Some(RegularityWitness::Eigenvalue(nearest)),
        });
    }
    let res = Resolvent::new(h, energy)?;
    let mut worst = (k_set.sites()[0], 0.0f64);
    for i in k_set.iter() {
        let ball = deform(k_set, &Region::new([i])?, Depth::Finite(r as i64))?;
        let v = res
            .dressed_panel(&[Selector::Site(i)], &[Selector::Empty(ball)])?
            .norm()?;
        if v > worst.1 {
            worst = (i, v);
        }
    }
    let regular = worst.1 <= threshold;
    Ok(Regularity {
        regular,
        threshold,
        distance,
        max_block: Some(worst.1),
        witness: (!regular).then_some(RegularityWitness::Site(worst.0, worst.1)),
    })
}
