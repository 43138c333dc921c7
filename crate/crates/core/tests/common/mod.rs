#![allow(dead_code)]

use std::sync::Arc;

use toric_quant::fixtures;
use toric_quant::subtorus::{pullback, Quadratic};
use toric_quant::{DelzantPolytope, SubtorusProjection, SymplecticPotential};

/// Every fixture with a rank-one (rank-two for the cube) projection.
pub fn cases() -> Vec<(&'static str, DelzantPolytope, SubtorusProjection)> {
    let p = |rows: Vec<Vec<i64>>| SubtorusProjection::new(rows).unwrap();
    vec![
        ("interval", fixtures::interval(), p(vec![vec![1]])),
        ("unit-square", fixtures::unit_square(), p(vec![vec![1, 0]])),
        ("square2", fixtures::square(2), p(vec![vec![1, 0]])),
        ("simplex", fixtures::unit_simplex(), p(vec![vec![1, 0]])),
        ("trapezoid", fixtures::trapezoid(), p(vec![vec![0, 1]])),
        (
            "cube",
            fixtures::cube(),
            p(vec![vec![1, 0, 0], vec![0, 1, 0]]),
        ),
    ]
}

pub fn family(p: &DelzantPolytope, proj: &SubtorusProjection, t: f64) -> SymplecticPotential {
    let phi = Arc::new(Quadratic::half_norm_squared(proj.rank()));
    let psi = Arc::new(pullback(phi, proj).unwrap());
    SymplecticPotential::new(p.clone(), psi, t).unwrap()
}
