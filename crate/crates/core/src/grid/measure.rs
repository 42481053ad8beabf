use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::numeric::neumaier_sum;

/// Tolerance on the total mass of a [`WeightedMeasure`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A probability measure on the cells of a [`GridSet`]; weight `k` belongs
/// to cell `support.cells()[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMeasure {
    support: GridSet,
    weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(support: GridSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != support.len() {
            return Err(Error::pre(format!(
                "{} weights for {} cells",
                weights.len(),
                support.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::pre(format!("weight {w} is not a nonnegative number")));
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::pre(format!("weights sum to {total}, expected 1")));
        }
        Ok(WeightedMeasure { support, weights })
    }

    /// Normalizes nonnegative masses to total 1 and drops zero-mass cells.
    pub fn from_masses(support: &GridSet, masses: &[f64]) -> Result<Self> {
        let total = neumaier_sum(masses.iter().copied());
        if !(total > 0.0) {
            return Err(Error::Degenerate("measure has no mass".into()));
        }
        let keep: Vec<usize> = (0..masses.len()).filter(|&k| masses[k] > 0.0).collect();
        let cells = keep.iter().map(|&k| support.cells()[k]).collect();
        let weights = keep.iter().map(|&k| masses[k] / total).collect();
        let support = GridSet::new(
            support.resolution(),
            support.origin().to_vec(),
            support.extent().to_vec(),
            cells,
        )?;
        Ok(WeightedMeasure { support, weights })
    }

    pub(crate) fn from_parts_unchecked(support: GridSet, weights: Vec<f64>) -> Self {
        WeightedMeasure { support, weights }
    }

    pub fn support(&self) -> &GridSet {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn resolution(&self) -> u64 {
        self.support.resolution()
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    /// Mass of the blocks of `factor` cells per axis, keyed like the cells
    /// of `support().coarsen(factor)`.
    pub fn coarsen(&self, factor: u64) -> Result<WeightedMeasure> {
        let coarse = self.support.coarsen(factor)?;
        let k = factor as i64;
        let d = self.dim();
        let mut t = vec![0u64; d];
        let mut ct = vec![0u64; d];
        let mut masses = vec![0.0; coarse.len()];
        for (w, &c) in self.weights.iter().zip(self.support.cells()) {
            self.support.decode(c, &mut t);
            for a in 0..d {
                let abs = self.support.origin()[a] + t[a] as i64;
                ct[a] = (abs.div_euclid(k) - coarse.origin()[a]) as u64;
            }
            let flat = super::set::flatten(coarse.extent(), &ct);
            let pos = coarse.cells().binary_search(&flat).expect("coarse cell present");
            masses[pos] += w;
        }
        Ok(WeightedMeasure::from_parts_unchecked(coarse, masses))
    }
}

/// Uniform weights `1/|cells|` on a nonempty set.
pub fn uniform_measure(set: &GridSet) -> Result<WeightedMeasure> {
    if set.is_empty() {
        return Err(Error::pre("uniform measure on an empty set"));
    }
    let w = 1.0 / set.len() as f64;
    Ok(WeightedMeasure {
        support: set.clone(),
        weights: vec![w; set.len()],
    })
}

/// A unit point mass on the single cell with absolute index `cell`.
pub fn point_mass(resolution: u64, cell: &[i64]) -> Result<WeightedMeasure> {
    let set = GridSet::new(resolution, cell.to_vec(), vec![1; cell.len()], vec![0])?;
    Ok(WeightedMeasure {
        support: set,
        weights: vec![1.0],
    })
}
