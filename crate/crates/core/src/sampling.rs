//! Seeded sampling of interior points, so every experiment is reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::polytope::DelzantPolytope;

/// Uniform samples from `{x ∈ P : l_j(x) ≥ margin ∀j}` by rejection from the
/// bounding box.
pub fn interior_points(p: &DelzantPolytope, count: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
    let (lo, hi) = p.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| rng.gen_range(*a..*b))
            .collect();
        if p.facet_values(&x).iter().all(|&l| l >= margin) {
            out.push(x);
        }
    }
    out
}

/// Uniform samples from an axis-aligned box.
pub fn box_points(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            lo.iter()
                .zip(hi)
                .map(|(a, b)| rng.gen_range(*a..*b))
                .collect()
        })
        .collect()
}

/// Points approaching each facet along the ray from the barycenter to the
/// facet's vertex barycenter, at facet distances `10^-2 … 10^-8`.
pub fn boundary_approach_points(p: &DelzantPolytope) -> Vec<Vec<f64>> {
    let centre = p.barycenter();
    let mut out = Vec::new();
    for j in 0..p.num_facets() {
        let on_facet: Vec<Vec<f64>> = p
            .vertices()
            .iter()
            .filter(|v| v.active_facets.contains(&j))
            .map(|v| v.point_f64())
            .collect();
        if on_facet.is_empty() {
            continue;
        }
        let mid: Vec<f64> = (0..p.dim())
            .map(|i| on_facet.iter().map(|v| v[i]).sum::<f64>() / on_facet.len() as f64)
            .collect();
        let height = p.facet_values(&centre)[j];
        for e in 2..=8 {
            let s = 10f64.powi(-e) / height;
            out.push(
                mid.iter()
                    .zip(&centre)
                    .map(|(m, c)| m + s * (c - m))
                    .collect(),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn deterministic_and_interior() {
        let p = fixtures::unit_simplex();
        let a = interior_points(&p, 20, 7, 1e-3);
        assert_eq!(a, interior_points(&p, 20, 7, 1e-3));
        assert!(a
            .iter()
            .all(|x| p.facet_values(x).iter().all(|&l| l >= 1e-3)));
    }

    #[test]
    fn boundary_rays_hit_requested_heights() {
        let p = fixtures::interval();
        let pts = boundary_approach_points(&p);
        assert_eq!(pts.len(), 14);
        assert!((pts[0][0] - 1e-2).abs() < 1e-15);
        assert!((p.facet_values(&pts[13])[1] - 1e-8).abs() < 1e-15);
    }
}
