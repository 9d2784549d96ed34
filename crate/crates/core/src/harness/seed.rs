//! Seed profile generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::quantize;
use crate::error::{QosError, Result};
use crate::profile::Profile;
use crate::scalar::Scalar;
use crate::search::SearchGrid;

/// Draws `n_records` distinct grid allocations spread from low to high total
/// bandwidth and labels each with the level its ERAB would have at the
/// nominal rate, `quantize(|x| - R0)`.
///
/// Grid points are ranked by total (enumeration order breaking ties) and cut
/// into `n_records` equal strata; one point is drawn uniformly from each.
/// The returned profile is unbounded; the controller applies its capacity.
pub fn seed_profile_generate<T: Scalar>(
    grid: &SearchGrid<T>,
    thresholds: &[T],
    n_records: usize,
    nominal_rate: T,
    rng_seed: u64,
) -> Result<Profile<T>> {
    let size = grid.cardinality();
    if n_records == 0 {
        return Err(QosError::invalid("seed profile needs at least one record"));
    }
    if n_records > size {
        return Err(QosError::invalid(format!(
            "{n_records} seed records requested from a grid of {size} points"
        )));
    }
    let mut ranked: Vec<(usize, usize, Vec<usize>)> = grid
        .points()
        .enumerate()
        .map(|(i, (steps, _))| (steps.iter().sum(), i, steps))
        .collect();
    ranked.sort_by_key(|&(sum, i, _)| (sum, i));

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let levels = thresholds.len() as u32 + 1;
    let mut profile = Profile::unbounded(grid.links(), levels)?;
    for s in 0..n_records {
        let lo = s * size / n_records;
        let hi = (s + 1) * size / n_records;
        let pick = rng.random_range(lo..hi);
        let x = grid.point(&ranked[pick].2);
        let response = quantize(x.total() - nominal_rate, thresholds);
        profile.push(x, response)?;
    }
    Ok(profile)
}
