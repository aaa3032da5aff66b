use alloc::vec::Vec;

use rand::Rng;

use super::Matrix;

/// Compares analytic gradients to central differences on sampled coordinates.
///
/// `loss` is evaluated on perturbed copies of `params`; `analytic` holds one
/// gradient per parameter tensor. Returns the largest
/// `|analytic − numeric| / max(1, |numeric|)` seen. At most
/// `max_coords_per_tensor` coordinates are sampled from each tensor.
pub fn finite_diff_check<F>(
    mut loss: F,
    params: &[Matrix],
    analytic: &[Matrix],
    step: f64,
    max_coords_per_tensor: usize,
    rng: &mut impl Rng,
) -> f64
where
    F: FnMut(&[Matrix]) -> f64,
{
    let mut work: Vec<Matrix> = params.to_vec();
    let mut worst: f64 = 0.0;
    for (t, p) in params.iter().enumerate() {
        let n = p.as_slice().len();
        let coords: Vec<usize> = if n <= max_coords_per_tensor {
            (0..n).collect()
        } else {
            (0..max_coords_per_tensor)
                .map(|_| rng.random_range(0..n))
                .collect()
        };
        for c in coords {
            let orig = work[t].as_slice()[c];
            work[t].as_mut_slice()[c] = orig + step;
            let up = loss(&work);
            work[t].as_mut_slice()[c] = orig - step;
            let down = loss(&work);
            work[t].as_mut_slice()[c] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[t].as_slice()[c];
            worst = worst.max((a - numeric).abs() / numeric.abs().max(1.0));
        }
    }
    worst
}
