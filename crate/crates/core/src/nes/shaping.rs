use crate::error::{Error, Result};

/// Rank-based utilities, best rank first:
///
/// `u_n = max(0, ln(k/2 + 1) − ln n) / Σ_j max(0, ln(k/2 + 1) − ln j) − 1/k`
pub fn compute_utilities(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidPopulation(format!(
            "fitness shaping needs at least 2 walkers, got {k}"
        )));
    }
    let cutoff = (k as f64 / 2.0 + 1.0).ln();
    let raw: Vec<f64> = (1..=k).map(|n| (cutoff - (n as f64).ln()).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    let offset = 1.0 / k as f64;
    Ok(raw.into_iter().map(|w| w / total - offset).collect())
}

/// Walker indices ordered by ascending fitness; ties keep index order.
pub fn rank_ascending(fitness: &[f64]) -> Result<Vec<usize>> {
    if let Some((i, f)) = fitness.iter().enumerate().find(|(_, f)| !f.is_finite()) {
        return Err(Error::Evaluation(format!("walker {i} returned non-finite fitness {f}")));
    }
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    Ok(order)
}
