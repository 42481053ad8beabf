//! Discretized sets and measures, and the generators that build them.

mod frostman;
mod generators;
mod measure;
pub(crate) mod set;

pub use frostman::{frostman_fit, window_maxima, FrostmanFit, FROSTMAN_STEP};
pub use generators::{
    make_cantor, make_product, make_sphere_subset, AngularSpec, Budget, CantorSpec, SphereSubsetSpec,
    DEFAULT_CELL_BUDGET,
};
pub use measure::{point_mass, uniform_measure, WeightedMeasure, MASS_TOLERANCE};
pub use set::{divisor_chain, GridSet};

/// Resolution ladder of one set: `coarsen` applied along the divisor chain,
/// finest first.
pub fn coarsen_ladder(set: &GridSet) -> crate::Result<Vec<GridSet>> {
    let chain = divisor_chain(set.resolution());
    let mut out = vec![set.clone()];
    for pair in chain.windows(2) {
        let next = out.last().expect("nonempty").coarsen(pair[1] / pair[0])?;
        out.push(next);
    }
    Ok(out)
}
