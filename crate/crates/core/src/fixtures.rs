//! Small polytopes used throughout the tests, the CLI and the demo.

use crate::polytope::{DelzantPolytope, Facet};

fn build(dim: usize, facets: &[(&[i64], i64)]) -> DelzantPolytope {
    DelzantPolytope::new(
        dim,
        facets
            .iter()
            .map(|(n, o)| Facet {
                normal: n.to_vec(),
                offset: *o,
            })
            .collect(),
    )
    .expect("fixture is a valid polytope")
}

/// `[0, 1]`: facets `x ≥ 0`, `1 − x ≥ 0`.
pub fn interval() -> DelzantPolytope {
    build(1, &[(&[1], 0), (&[-1], 1)])
}

pub fn unit_square() -> DelzantPolytope {
    square(1)
}

/// `[0, side]²` with facets ordered `x₁ ≥ 0, side − x₁ ≥ 0, x₂ ≥ 0, side − x₂ ≥ 0`.
pub fn square(side: i64) -> DelzantPolytope {
    build(
        2,
        &[
            (&[1, 0], 0),
            (&[-1, 0], side),
            (&[0, 1], 0),
            (&[0, -1], side),
        ],
    )
}

/// `x ≥ 0, y ≥ 0, 1 − x − y ≥ 0`.
pub fn unit_simplex() -> DelzantPolytope {
    build(2, &[(&[1, 0], 0), (&[0, 1], 0), (&[-1, -1], 1)])
}

pub fn cube() -> DelzantPolytope {
    build(
        3,
        &[
            (&[1, 0, 0], 0),
            (&[-1, 0, 0], 1),
            (&[0, 1, 0], 0),
            (&[0, -1, 0], 1),
            (&[0, 0, 1], 0),
            (&[0, 0, -1], 1),
        ],
    )
}

/// `x ≥ 0, y ≥ 0, 2 − x − 2y ≥ 0`: a lattice triangle that is not Delzant.
pub fn bad_triangle() -> DelzantPolytope {
    build(2, &[(&[1, 0], 0), (&[0, 1], 0), (&[-1, -2], 2)])
}

/// Hirzebruch-type trapezoid `x ≥ 0, y ≥ 0, 1 − y ≥ 0, 3 − x − y ≥ 0`.
pub fn trapezoid() -> DelzantPolytope {
    build(
        2,
        &[(&[1, 0], 0), (&[0, 1], 0), (&[0, -1], 1), (&[-1, -1], 3)],
    )
}

pub fn by_name(name: &str) -> Option<DelzantPolytope> {
    Some(match name {
        "interval" => interval(),
        "unit-square" => unit_square(),
        "square2" => square(2),
        "simplex" => unit_simplex(),
        "cube" => cube(),
        "triangle" => bad_triangle(),
        "trapezoid" => trapezoid(),
        _ => return None,
    })
}
