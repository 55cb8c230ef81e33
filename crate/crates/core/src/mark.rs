//! Dörfler marking.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Smallest set `M` (up to ties) with `θ Σ η² ≤ Σ_{T∈M} η²`.
///
/// Indicators are sorted descending with ties broken by ascending index and
/// the shortest satisfying prefix is returned, in ascending index order.
pub fn mark_doerfler(eta2: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidTheta(theta));
    }
    let mut order: Vec<usize> = (0..eta2.len()).collect();
    order.sort_by(|&a, &b| eta2[b].total_cmp(&eta2[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&t| eta2[t]).sum();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let goal = theta * total;
    let mut sum = 0.0;
    let mut count = 0;
    for &t in &order {
        if sum >= goal {
            break;
        }
        sum += eta2[t];
        count += 1;
    }
    let mut marked = order[..count].to_vec();
    marked.sort_unstable();
    Ok(marked)
}
