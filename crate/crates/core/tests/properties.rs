//! Structural invariants over randomized inputs.

mod common;

use proptest::prelude::*;
use toric_quant::polytope::Facet;
use toric_quant::quadrature::{delta_pairing, integrate, QuadratureRule};
use toric_quant::rational::q_int;
use toric_quant::sections::{closed_form_norm_g0, ConcentrationWeight};
use toric_quant::subtorus::adapted_basis;
use toric_quant::{fixtures, linalg, DelzantPolytope, SubtorusProjection};

/// Image of `P` under `x ↦ Ux` for unimodular `U`: normals go to `U⁻ᵀ r`.
fn transform(p: &DelzantPolytope, u_inv_t: [[i64; 2]; 2]) -> DelzantPolytope {
    let facets = p
        .facets()
        .iter()
        .map(|f| Facet {
            normal: (0..2)
                .map(|i| u_inv_t[i][0] * f.normal[0] + u_inv_t[i][1] * f.normal[1])
                .collect(),
            offset: f.offset,
        })
        .collect();
    DelzantPolytope::new(2, facets).unwrap()
}

fn unimodular() -> impl Strategy<Value = [[i64; 2]; 2]> {
    // products of elementary shears and a sign
    (-3i64..=3, -3i64..=3, prop::bool::ANY).prop_map(|(a, b, flip)| {
        let s = [[1, a], [0, 1]];
        let l = [[1, 0], [b, 1]];
        let mut m = [[0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = s[i][0] * l[0][j] + s[i][1] * l[1][j];
            }
        }
        if flip {
            m[0] = [-m[0][0], -m[0][1]];
        }
        m
    })
}

fn polygon() -> impl Strategy<Value = DelzantPolytope> {
    prop_oneof![
        Just(fixtures::unit_square()),
        Just(fixtures::square(2)),
        Just(fixtures::unit_simplex()),
        Just(fixtures::trapezoid()),
        (1i64..=4, 1i64..=4).prop_map(|(a, b)| DelzantPolytope::new(
            2,
            vec![
                Facet {
                    normal: vec![1, 0],
                    offset: 0
                },
                Facet {
                    normal: vec![-1, 0],
                    offset: a
                },
                Facet {
                    normal: vec![0, 1],
                    offset: 0
                },
                Facet {
                    normal: vec![0, -1],
                    offset: b
                },
            ]
        )
        .unwrap()),
    ]
}

fn primitive_row() -> impl Strategy<Value = Vec<i64>> {
    (-3i64..=3, -3i64..=3)
        .prop_filter("primitive", |(a, b)| {
            toric_quant::rational::gcd_all(&[*a, *b]) == 1
        })
        .prop_map(|(a, b)| vec![a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_count_is_unimodular_invariant(p in polygon(), u in unimodular()) {
        let q = transform(&p, u);
        prop_assert_eq!(p.lattice_points().len(), q.lattice_points().len());
        prop_assert!(q.is_delzant().is_delzant);
    }

    #[test]
    fn multiplicities_sum_to_count(p in polygon(), row in primitive_row()) {
        let proj = SubtorusProjection::new(vec![row]).unwrap();
        let total: usize = p.weight_multiplicities(&proj).unwrap().values().sum();
        prop_assert_eq!(total, p.lattice_points().len());
    }

    #[test]
    fn vertices_have_n_active_facets(p in polygon(), u in unimodular()) {
        let q = transform(&p, u);
        for v in q.vertices() {
            prop_assert_eq!(v.active_facets.len(), 2);
            for j in 0..q.num_facets() {
                prop_assert!(q.facet_value_exact(j, &v.point).unwrap() >= q_int(0));
            }
        }
    }

    #[test]
    fn slice_base_point_hits_level(p in polygon(), row in primitive_row(), m_pick in 0usize..64) {
        let proj = SubtorusProjection::new(vec![row]).unwrap();
        let pts = p.lattice_points();
        let m = &pts[m_pick % pts.len()];
        let q: Vec<_> = proj.apply_int(m).into_iter().map(q_int).collect();
        let slice = p.face_chart(&proj, &q).unwrap();
        prop_assert_eq!(proj.apply_rational(&slice.base_point), q);
        prop_assert!(slice.base.hrep().contains(&slice.base_point));
    }

    #[test]
    fn adapted_basis_round_trip(row in primitive_row(), m in prop::collection::vec(-20i64..20, 2)) {
        let proj = SubtorusProjection::new(vec![row.clone()]).unwrap();
        let b = adapted_basis(&proj).unwrap();
        prop_assert_eq!(b.from_adapted_int(&b.to_adapted_int(&m)), m.clone());
        prop_assert_eq!(b.to_adapted_int(&m)[0], proj.apply_int(&m)[0]);
        for k in b.kernel_basis() {
            prop_assert_eq!(proj.apply_int(&k), vec![0]);
        }
    }

    #[test]
    fn hessian_monotone_in_t(t in 0.0f64..100.0, pick in 0usize..6, seed in 0u64..1000) {
        let (_, p, proj) = common::cases().swap_remove(pick);
        let x = &toric_quant::sampling::interior_points(&p, 1, seed, 1e-3)[0];
        let h0 = common::family(&p, &proj, 0.0).hessian(x).unwrap();
        let ht = common::family(&p, &proj, t).hessian(x).unwrap();
        prop_assert!(linalg::min_eigenvalue(&(ht.clone() - h0)) > -1e-9);
        prop_assert!(linalg::min_eigenvalue(&ht) > 0.0);
    }

    #[test]
    fn weight_minimized_on_slice(pick in 0usize..6, seed in 0u64..1000) {
        let (_, p, proj) = common::cases().swap_remove(pick);
        let fam = common::family(&p, &proj, 0.0);
        let pts = p.lattice_points();
        let m = &pts[seed as usize % pts.len()];
        let w = ConcentrationWeight::new(m, fam.perturbation().unwrap().clone()).unwrap();
        let x = &toric_quant::sampling::interior_points(&p, 1, seed, 0.0)[0];
        // ½|Ax|² − ⟨Am, Ax⟩ ≥ −½|Am|² with equality iff Ax = Am
        let am: Vec<f64> = proj.apply(&m.iter().map(|v| *v as f64).collect::<Vec<_>>());
        let floor = -0.5 * am.iter().map(|v| v * v).sum::<f64>();
        prop_assert!(w.value(x) >= floor - 1e-12);
    }

    #[test]
    fn delta_pairing_is_normalized(c in 0.1f64..10.0, a in -2.0f64..2.0) {
        let p = fixtures::square(2);
        let proj = SubtorusProjection::new(vec![vec![1, 0]]).unwrap();
        let base = delta_pairing(&p, &proj, &[1, 0], |x| a + x[1], 32).unwrap();
        let scaled = delta_pairing(&p, &proj, &[1, 0], |x| c * (a + x[1]), 32).unwrap();
        prop_assert!((scaled - c * base).abs() < 1e-10 * (1.0 + scaled.abs()));
        prop_assert!((delta_pairing(&p, &proj, &[1, 0], |_| c, 32).unwrap() - c).abs() < 1e-12);
    }
}

#[test]
fn section_count_matches_lattice_count() {
    for (name, p, _) in common::cases() {
        let pot = toric_quant::SymplecticPotential::canonical(p.clone());
        assert_eq!(
            toric_quant::sections::MonomialSection::all(&pot).len(),
            p.lattice_points().len(),
            "{name}"
        );
    }
}

#[test]
fn quadrature_self_convergence() {
    // doubling the resolution moves the integrals by less than 1e−5
    for (name, p, _) in common::cases().into_iter().filter(|c| c.0 != "cube") {
        let m = p.lattice_points()[0].clone();
        let f = |x: &[f64]| closed_form_norm_g0(&p, &m, x).unwrap();
        let a = integrate(f, &QuadratureRule::for_polytope(&p, 128).unwrap()).unwrap();
        let b = integrate(f, &QuadratureRule::for_polytope(&p, 256).unwrap()).unwrap();
        let tol = if QuadratureRule::for_polytope(&p, 8).unwrap().kind()
            == toric_quant::quadrature::RuleKind::TensorGauss
        {
            1e-5
        } else {
            // midpoint grids on slanted facets converge at O(1/N)
            2e-2
        };
        assert!((a - b).abs() < tol, "{name}: {a} vs {b}");
    }
}

#[test]
fn overflow_guard_for_large_t() {
    let (_, p, proj) = common::cases().swap_remove(2);
    let fam = common::family(&p, &proj, 0.0);
    let r = toric_quant::quadrature::concentration_experiment(
        &fam,
        &proj,
        &[1, 1],
        |x| x[0],
        &[1000.0, 10_000.0],
        64,
    )
    .unwrap();
    assert!(r.ratios.iter().all(|v| v.is_finite()));
}
