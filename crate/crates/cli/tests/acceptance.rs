//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use toric_quant::legendre::{flow_identity_residual, LegendrePair};
use toric_quant::polarization::{
    decay_report, grassmann_distance, kernel_subframe, limit_frame, polarization_frame,
};
use toric_quant::potential::validate_potential;
use toric_quant::quadrature::{concentration_experiment, delta_pairing, QuadratureRule};
use toric_quant::sections::{
    closed_form_norm_g0, l1_norm, norm_factorization_check, pairwise_orthogonality,
    ConcentrationWeight, MonomialSection,
};
use toric_quant::subtorus::{adapted_basis, pullback, Quadratic};
use toric_quant::{
    fixtures, linalg, sampling, DelzantPolytope, SubtorusProjection, SymplecticPotential,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn proj(rows: Vec<Vec<i64>>) -> SubtorusProjection {
    SubtorusProjection::new(rows).unwrap()
}

fn family(p: &DelzantPolytope, pr: &SubtorusProjection, t: f64) -> SymplecticPotential {
    let psi = Arc::new(pullback(Arc::new(Quadratic::half_norm_squared(pr.rank())), pr).unwrap());
    SymplecticPotential::new(p.clone(), psi, t).unwrap()
}

fn all_fixtures() -> Vec<(&'static str, DelzantPolytope, SubtorusProjection)> {
    vec![
        ("interval", fixtures::interval(), proj(vec![vec![1]])),
        (
            "unit-square",
            fixtures::unit_square(),
            proj(vec![vec![1, 0]]),
        ),
        ("square2", fixtures::square(2), proj(vec![vec![1, 0]])),
        ("simplex", fixtures::unit_simplex(), proj(vec![vec![1, 0]])),
        ("trapezoid", fixtures::trapezoid(), proj(vec![vec![0, 1]])),
        (
            "cube",
            fixtures::cube(),
            proj(vec![vec![1, 0, 0], vec![0, 1, 0]]),
        ),
    ]
}

fn delzant_validation() -> Outcome {
    for (name, p) in [
        ("unit square", fixtures::unit_square()),
        ("simplex", fixtures::unit_simplex()),
    ] {
        let c = p.is_delzant();
        ensure(c.is_delzant, || format!("{name} rejected: {c:?}"))?;
    }
    let c = fixtures::bad_triangle().is_delzant();
    ensure(!c.is_delzant, || "triangle accepted".into())?;
    let det = c
        .determinant
        .ok_or("triangle certificate has no determinant")?;
    ensure(det.abs() == 2, || {
        format!("triangle certificate |det| = {}", det.abs())
    })?;
    Ok(format!("triangle certificate det = {det}"))
}

fn lattice_counts() -> Outcome {
    let counts = [
        fixtures::interval().lattice_points().len(),
        fixtures::unit_simplex().lattice_points().len(),
        fixtures::square(2).lattice_points().len(),
    ];
    ensure(counts == [2, 3, 9], || format!("counts {counts:?}"))?;
    let mult = fixtures::square(2)
        .weight_multiplicities(&proj(vec![vec![1, 0]]))
        .unwrap();
    let got: Vec<(i64, usize)> = mult.iter().map(|(k, v)| (k[0], *v)).collect();
    ensure(got == vec![(0, 3), (1, 3), (2, 3)], || {
        format!("multiplicities {got:?}")
    })?;
    Ok(format!("counts {counts:?}, multiplicities {got:?}"))
}

fn potential_validity() -> Outcome {
    let mut detail = Vec::new();
    for (name, p, expected) in [
        ("interval", fixtures::interval(), 0.5),
        ("unit square", fixtures::unit_square(), 0.25),
    ] {
        let boundary = sampling::boundary_approach_points(&p);
        let interior = sampling::interior_points(&p, 1000 - boundary.len(), 1, 1e-9);
        let r = validate_potential(
            &SymplecticPotential::canonical(p.clone()),
            &interior,
            &boundary,
        )
        .unwrap();
        ensure(r.samples == 1000, || {
            format!("{name}: {} samples", r.samples)
        })?;
        ensure(r.positive_definite, || {
            format!("{name}: not positive definite")
        })?;
        let dev = (r.min_product - expected)
            .abs()
            .max((r.max_product - expected).abs());
        ensure(dev < 1e-12, || {
            format!("{name}: product in [{}, {}]", r.min_product, r.max_product)
        })?;
        detail.push(format!("{name} product {expected} ± {dev:.1e}"));

        let mut e1 = vec![0; p.dim()];
        e1[0] = 1;
        let pr = proj(vec![e1]);
        for t in [1.0, 10.0, 100.0] {
            let r = validate_potential(&family(&p, &pr, t), &interior, &boundary).unwrap();
            ensure(r.is_valid(), || format!("{name} t={t}: {r:?}"))?;
        }
    }
    Ok(detail.join("; "))
}

fn legendre_round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, p, pr) in all_fixtures() {
        let pts = sampling::interior_points(&p, 100, 2, 1e-6);
        for t in [0.0, 1.0, 10.0, 100.0] {
            let pair = LegendrePair::new(family(&p, &pr, t));
            for x in &pts {
                let y = pair.forward(x).map_err(|e| format!("{name}: {e}"))?;
                let back = pair
                    .inverse(y.as_slice())
                    .map_err(|e| format!("{name} t={t}: {e}"))?;
                worst = worst.max((back - DVector::from_column_slice(x)).amax());
            }
        }
    }
    ensure(worst < 1e-8, || format!("round-trip error {worst:e}"))?;
    let pair = LegendrePair::new(SymplecticPotential::canonical(fixtures::interval()));
    let mut analytic: f64 = 0.0;
    for k in -40..=40 {
        let y = 0.25 * k as f64;
        let x = pair.inverse(&[y]).map_err(|e| e.to_string())?[0];
        analytic = analytic.max((x - 1.0 / (1.0 + (-2.0 * y).exp())).abs());
    }
    ensure(analytic < 1e-10, || {
        format!("interval inverse error {analytic:e}")
    })?;
    Ok(format!(
        "round-trip {worst:.1e}, interval inverse {analytic:.1e}"
    ))
}

fn flow_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, p, pr) in all_fixtures() {
        let pair0 = LegendrePair::new(family(&p, &pr, 0.0));
        let pts = sampling::interior_points(&p, 20, 3, 1e-4);
        for t in [1.0, 5.0, 10.0] {
            let pair_t = LegendrePair::new(family(&p, &pr, t));
            for x in &pts {
                worst = worst.max(
                    flow_identity_residual(&pair0, &pair_t, x)
                        .map_err(|e| format!("{name}: {e}"))?,
                );
            }
        }
    }
    ensure(worst < 1e-8, || format!("flow residual {worst:e}"))?;
    Ok(format!("max residual {worst:.1e}"))
}

fn polarization_degeneration() -> Outcome {
    let p = fixtures::square(2);
    let pr = proj(vec![vec![1, 0]]);
    let basis = adapted_basis(&pr).unwrap();
    let fam = family(&p, &pr, 0.0);
    let t_list = [8.0, 16.0, 32.0, 64.0, 128.0];
    let pts = sampling::box_points(&[0.5, 0.5], &[1.5, 1.5], 10, 6);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut drift: f64 = 0.0;
    let mut isotropy: f64 = 0.0;
    for x in &pts {
        let rep = decay_report(&fam, &basis, x, &t_list).map_err(|e| e.to_string())?;
        let s = rep.slope.ok_or("no slope")?;
        lo = lo.min(s);
        hi = hi.max(s);
        let limit = limit_frame(&basis, &fam, x).unwrap();
        isotropy = isotropy.max(limit.isotropy_defect());
        let rank = limit.degenerate_rank(1e-10);
        ensure(rank == 1, || {
            format!("limit degenerate rank {rank} at {x:?}")
        })?;
        let sub0 = kernel_subframe(&fam, &basis, x).unwrap();
        for &t in &t_list {
            let pot = fam.at_time(t).unwrap();
            isotropy = isotropy.max(
                polarization_frame(&pot, &basis, x)
                    .unwrap()
                    .isotropy_defect(),
            );
            drift = drift.max(
                grassmann_distance(&kernel_subframe(&pot, &basis, x).unwrap(), &sub0).unwrap(),
            );
        }
    }
    ensure(lo >= -1.1 && hi <= -0.9, || {
        format!("slopes in [{lo:.3}, {hi:.3}]")
    })?;
    ensure(drift < 1e-10, || format!("sub-frame drift {drift:e}"))?;
    ensure(isotropy < 1e-10, || format!("isotropy defect {isotropy:e}"))?;
    Ok(format!(
        "slopes in [{lo:.3}, {hi:.3}], drift {drift:.1e}, isotropy {isotropy:.1e}, limit rank 1"
    ))
}

fn section_algebra() -> Outcome {
    let mut agree: f64 = 0.0;
    for (_, p, _) in all_fixtures() {
        let pot = SymplecticPotential::canonical(p.clone());
        let pts = sampling::interior_points(&p, 20, 4, 1e-3);
        for s in MonomialSection::all(&pot) {
            for x in &pts {
                agree = agree.max(
                    (s.pointwise_norm(x).unwrap() - closed_form_norm_g0(&p, s.m(), x).unwrap())
                        .abs(),
                );
            }
        }
    }
    ensure(agree < 1e-10, || {
        format!("closed form disagreement {agree:e}")
    })?;

    let i = fixtures::interval();
    let s0 = MonomialSection::new(vec![0], SymplecticPotential::canonical(i.clone())).unwrap();
    let l1 = l1_norm(&s0, &QuadratureRule::for_polytope(&i, 256).unwrap()).unwrap();
    ensure((l1 - 2.0 / 3.0).abs() < 1e-6, || {
        format!("interval L1 norm {l1}")
    })?;

    // absolute on t ∈ [0, 1]; relative to max(1, |σ_t|) on t ∈ [0, 10]
    let mut fact: f64 = 0.0;
    let mut fact_rel: f64 = 0.0;
    for (_, p, pr) in all_fixtures() {
        let fam = family(&p, &pr, 0.0);
        let lattice = p.lattice_points();
        let xs = sampling::interior_points(&p, 100, 5, 1e-3);
        let ts = sampling::box_points(&[0.0], &[1.0], 100, 6);
        for (k, (x, t)) in xs.iter().zip(&ts).enumerate() {
            let m = &lattice[k % lattice.len()];
            fact = fact.max(norm_factorization_check(&fam, m, t[0], x).unwrap());
            let t = 10.0 * t[0];
            let size = MonomialSection::new(m.clone(), fam.at_time(t).unwrap())
                .unwrap()
                .pointwise_norm(x)
                .unwrap();
            fact_rel =
                fact_rel.max(norm_factorization_check(&fam, m, t, x).unwrap() / size.max(1.0));
        }
    }
    ensure(fact_rel < 1e-10, || {
        format!("relative factorization residual {fact_rel:e}")
    })?;
    ensure(fact < 1e-10, || format!("factorization residual {fact:e}"))?;

    let sq = fixtures::square(2);
    let pot = SymplecticPotential::canonical(sq.clone());
    let lattice = sq.lattice_points();
    let mut ortho: f64 = 0.0;
    for a in &lattice {
        for b in &lattice {
            if a != b {
                ortho = ortho.max(
                    pairwise_orthogonality(&pot, a, b, 3, &[1.0, 1.0])
                        .unwrap()
                        .norm(),
                );
            }
        }
    }
    ensure(ortho < 1e-12, || {
        format!("orthogonality residual {ortho:e}")
    })?;
    Ok(format!(
        "closed form {agree:.1e}, L1 {l1:.9}, factorization {fact:.1e} (relative {fact_rel:.1e}), orthogonality {ortho:.1e}"
    ))
}

fn ratio_band(errors: &[f64], t: &[f64]) -> Vec<f64> {
    t.windows(2)
        .zip(errors.windows(2))
        .filter(|(tw, _)| tw[0] >= 32.0)
        .map(|(_, e)| e[1] / e[0])
        .collect()
}

fn concentration() -> Outcome {
    let p = fixtures::square(2);
    let pr = proj(vec![vec![1, 0]]);
    let fam = family(&p, &pr, 0.0);
    let t_list = [16.0, 32.0, 64.0, 128.0];
    let mut problems = Vec::new();
    let mut detail = Vec::new();

    let r_inf = delta_pairing(&p, &pr, &[1, 1], |x| x[1], 256).map_err(|e| e.to_string())?;
    if (r_inf - 1.0).abs() >= 1e-5 {
        problems.push(format!("slice pairing for x2 is {r_inf}"));
    }
    detail.push(format!("slice pairing for x2 {r_inf:.9}"));
    for (label, coord) in [("x2", 1usize), ("x1", 0usize)] {
        let res = concentration_experiment(&fam, &pr, &[1, 1], |x| x[coord], &t_list, 256)
            .map_err(|e| e.to_string())?;
        let ratios = ratio_band(&res.errors, &res.t_values);
        detail.push(format!(
            "u={label}: errors {:?}, ratios {:?}",
            short(&res.errors),
            short(&ratios)
        ));
        if !ratios.iter().all(|q| (0.3..=0.7).contains(q)) {
            problems.push(format!(
                "u={label} error ratios {:?} outside [0.3, 0.7]",
                short(&ratios)
            ));
        }
    }

    // k = n on the interval with m = 0: mean of x under e^{−t f₀}/‖e^{−t f₀}‖₁
    let i = fixtures::interval();
    let id = proj(vec![vec![1]]);
    let w = ConcentrationWeight::new(&[0], family(&i, &id, 0.0).perturbation().unwrap().clone())
        .unwrap();
    let rule = QuadratureRule::for_polytope(&i, 256).unwrap();
    let mut means = Vec::new();
    for t in [32.0, 64.0, 128.0] {
        let wts: Vec<f64> = rule
            .points()
            .iter()
            .zip(rule.weights())
            .map(|(x, q)| (-t * w.value(x)).exp() * q)
            .collect();
        let num: Vec<f64> = wts
            .iter()
            .zip(rule.points())
            .map(|(a, x)| a * x[0])
            .collect();
        let mean = linalg::pairwise_sum(&num) / linalg::pairwise_sum(&wts);
        means.push(mean);
        if mean > 2.0 / t {
            problems.push(format!(
                "interval mean {mean:.4} at t={t} exceeds 2/t = {:.4}",
                2.0 / t
            ));
        }
    }
    detail.push(format!("interval means {:?}", short(&means)));
    if problems.is_empty() {
        Ok(detail.join("; "))
    } else {
        Err(format!("{} | {}", problems.join("; "), detail.join("; ")))
    }
}

fn short(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.3e}")).collect()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn full_suite_json(threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_toric-quant"))
        .args([
            "full-suite",
            fixture("square2.json").to_str().unwrap(),
            "--resolution",
            "64",
        ])
        .env("TORIC_QUANT_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.stdout.is_empty() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let a = full_suite_json("1")?;
    let b = full_suite_json("1")?;
    ensure(a == b, || "two runs differ".into())?;
    let c = full_suite_json("4")?;
    ensure(a == c, || "output depends on the thread count".into())?;
    Ok(format!("{} identical bytes across 3 runs", a.len()))
}

type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            1,
            "Delzant validation",
            delzant_validation,
            Duration::from_secs(1),
        ),
        (
            2,
            "lattice points and weights",
            lattice_counts,
            Duration::from_secs(1),
        ),
        (
            3,
            "potential validity",
            potential_validity,
            Duration::from_secs(5),
        ),
        (
            4,
            "Legendre round trip",
            legendre_round_trip,
            Duration::from_secs(5),
        ),
        (5, "flow identity", flow_identity, Duration::from_secs(5)),
        (
            6,
            "polarization degeneration",
            polarization_degeneration,
            Duration::from_secs(10),
        ),
        (
            7,
            "section algebra",
            section_algebra,
            Duration::from_secs(10),
        ),
        (8, "concentration", concentration, Duration::from_secs(60)),
        // full suite runs three times; the budget is per-run overhead on top of the work
        (9, "determinism", determinism, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (n, name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > budget => {
                Err(format!("{d} but took {elapsed:.2?} (budget {budget:?})"))
            }
            other => other,
        };
        match outcome {
            Ok(d) => println!("criterion {n} ({name}): PASS [{elapsed:.2?}] {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL [{elapsed:.2?}] {d}");
            }
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
