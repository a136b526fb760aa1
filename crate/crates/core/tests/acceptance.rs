//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use common::*;
use leech_core::linalg::{self, real};
use leech_core::spectral::outer_spectral_factor;
use leech_core::subspace::{inner_from_subspace, InvariantSubspace};
use leech_core::symbols::defect_symbol;
use leech_core::toeplitz::{self, projection_positivity_check, random_projection_instance};
use leech_core::{solve, Config, Cx, Evaluate, LaurentSymbol, Mat, MatrixPolynomial, Solution};
use rand::Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = (&'static str, fn() -> Outcome);

struct Instance {
    g: MatrixPolynomial,
    solution: Result<Solution, String>,
}

fn positive_instances() -> &'static Vec<Instance> {
    static CELL: OnceLock<Vec<Instance>> = OnceLock::new();
    CELL.get_or_init(|| {
        (0..20)
            .map(|i| {
                let (g, k) = positive_instance(1000 + i);
                let solution = solve(&g, &k, &Config::default()).map_err(|e| e.to_string());
                Instance { g, solution }
            })
            .collect()
    })
}

fn solved() -> Result<Vec<(&'static Instance, &'static Solution)>, String> {
    positive_instances()
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            inst.solution
                .as_ref()
                .map(|s| (inst, s))
                .map_err(|e| format!("instance {i}: {e}"))
        })
        .collect()
}

fn identity_battery() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, m, p, q) = (
            r.gen_range(1..=3),
            r.gen_range(1..=3),
            r.gen_range(1..=3),
            r.gen_range(1..=3),
        );
        let (du, dv, dw) = (r.gen_range(0..=3), r.gen_range(0..=3), r.gen_range(0..=3));
        let u = random_poly(&mut r, n, p, du);
        let v = random_poly(&mut r, m, p, dv);
        let w = random_poly(&mut r, m, q, dw);
        let res = toeplitz::verify_symbol_identities(&u, &v, &w, 12).unwrap();
        let defect = toeplitz::verify_defect_identity(&v, &w, 12).unwrap();
        worst = worst.max(res.max()).max(defect);
    }
    outcome(
        worst < 1e-10,
        format!("max residual {worst:.2e} over 50 triples"),
    )
}

fn projection_positivity() -> Outcome {
    let mut r = rng(2);
    let mut agree = 0;
    let mut rank_ok = 0;
    let mut positives = 0;
    for _ in 0..50 {
        let inst = random_projection_instance(&mut r, 8);
        let v = projection_positivity_check(&inst, 1e-8, 1e-9).unwrap();
        agree += v.agree() as usize;
        rank_ok += (v.projected_rank <= v.dim_v1) as usize;
        positives += v.full_positive as usize;
    }
    outcome(
        agree == 50 && rank_ok == 50,
        format!("verdicts agree {agree}/50, rank bound {rank_ok}/50 ({positives} positive)"),
    )
}

fn spectral_factor() -> Outcome {
    let cfg = Config::default();
    let one = Mat::from_element(1, 1, real(1.0));
    let two = Mat::from_element(1, 1, real(2.0));
    let r = LaurentSymbol::new(1, 1, -1, vec![one.clone(), two, one])
        .unwrap()
        .into_selfadjoint(0.0)
        .unwrap();
    let f = outer_spectral_factor(&r, &cfg).unwrap();
    let c = f.phi.coeffs();
    let coef_err = if c.len() == 2 {
        (c[0][(0, 0)] - real(1.0))
            .norm()
            .max((c[1][(0, 0)] - real(1.0)).norm())
    } else {
        f64::INFINITY
    };
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    let mut degree_ok = 0;
    let mut errors = 0;
    for _ in 0..20 {
        let m = r.gen_range(1..=3);
        let c = r.gen_range(1..=3);
        let d = r.gen_range(0..=3);
        let g = random_poly(&mut r, m, c, d);
        let rr = defect_symbol(&g, &MatrixPolynomial::zero(m, 1)).unwrap();
        match outer_spectral_factor(&rr, &cfg) {
            Ok(f) => {
                worst = worst.max(f.diagnostics.sample_residual);
                degree_ok += (2 * f.diagnostics.degree_phi == f.diagnostics.degree_r) as usize;
            }
            Err(_) => errors += 1,
        }
    }
    outcome(
        coef_err < 1e-6 && worst < 1e-8 && degree_ok == 20 && errors == 0,
        format!("|1+e^it|^2 coefficient error {coef_err:.2e}; random: residual {worst:.2e}, degree law {degree_ok}/20, errors {errors}"),
    )
}

fn inner_function() -> Outcome {
    let cfg = Config::default();
    let mut blaschke_unit: f64 = 0.0;
    let mut blaschke_zero: f64 = 0.0;
    for a in [Cx::new(0.0, 0.0), Cx::new(0.5, 0.0), Cx::new(0.3, -0.4)] {
        let v = Mat::from_fn(64, 1, |j, _| a.conj().powi(j as i32));
        let sub = InvariantSubspace::from_spanning(&v, 1, 64, 1e-12);
        let inner = inner_from_subspace(&sub, &cfg).unwrap();
        for z in leech_core::circle_points(512) {
            blaschke_unit =
                blaschke_unit.max((inner.theta.evaluate(z).unwrap()[(0, 0)].norm() - 1.0).abs());
        }
        blaschke_zero = blaschke_zero.max(inner.theta.evaluate(a).unwrap()[(0, 0)].norm());
    }
    let sols = match solved() {
        Ok(s) => s,
        Err(e) => return outcome(false, e),
    };
    let mut proj: f64 = 0.0;
    let mut degree_ok = 0;
    for (_, s) in &sols {
        let inner = s.inner.as_ref().unwrap();
        proj = proj.max(inner.diagnostics.hankel_projection_residual);
        degree_ok += (inner.diagnostics.degree == s.report.dim_m) as usize;
    }
    outcome(
        blaschke_unit < 1e-8 && blaschke_zero < 1e-6 && proj < 1e-6 && degree_ok == sols.len(),
        format!(
            "Blaschke: unimodular {blaschke_unit:.2e}, |Θ(a)| {blaschke_zero:.2e}; pipeline: H_ΘH_Θ* - P_M {proj:.2e}, degree {degree_ok}/{}",
            sols.len()
        ),
    )
}

fn augmented_positivity() -> Outcome {
    let sols = match solved() {
        Ok(s) => s,
        Err(e) => return outcome(false, e),
    };
    let mut min_eig = f64::INFINITY;
    let mut rank_ok = 0;
    for (inst, s) in &sols {
        let level = inst.g.degree().max(s.k_tilde.degree()).max(1);
        let d = toeplitz::hankel_difference(&inst.g, &s.k_tilde, level).unwrap();
        min_eig = min_eig.min(linalg::min_eigenvalue(&d));
        rank_ok += (s.kolmogorov.nu <= s.n_space.dim()) as usize;
    }
    outcome(
        min_eig >= -1e-8 && rank_ok == sols.len(),
        format!(
            "min eigenvalue {min_eig:.2e}, ν ≤ dim N on {rank_ok}/{}",
            sols.len()
        ),
    )
}

fn factorization_identities() -> Outcome {
    let sols = match solved() {
        Ok(s) => s,
        Err(e) => return outcome(false, e),
    };
    let mut gram: f64 = 0.0;
    let mut phi: f64 = 0.0;
    let mut verified = 0;
    for (_, s) in &sols {
        verified += s.report.pass as usize;
        let f = s.f.as_ref().unwrap();
        gram = gram.max(f.gram_residual);
        phi = phi.max(f.phi_residual);
    }
    outcome(
        gram < 1e-6 && phi < 1e-6,
        format!(
            "FF* - R {gram:.2e}, Φ - ΘF* {phi:.2e}, solved and verified {verified}/{}",
            sols.len()
        ),
    )
}

fn corona_instance() -> Outcome {
    let g = corona_g();
    let s = match solve(&g, &MatrixPolynomial::identity(1), &Config::default()) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let rep = &s.report;
    let phi = &s.factor.as_ref().unwrap().phi;
    let phi_ok = phi.degree() == 0 && (phi.coeffs()[0][(0, 0)] - real(2.0)).norm() < 1e-10;
    let theta = &s.inner.as_ref().unwrap().theta;
    let theta_ok = [Cx::new(0.0, 0.0), Cx::new(0.3, 0.4), Cx::new(-0.7, 0.1)]
        .iter()
        .all(|&z| (theta.evaluate(z).unwrap()[(0, 0)].norm() - z.norm()).abs() < 1e-10);
    let f = &s.f.as_ref().unwrap().f;
    let f_ok = f.degree() == 1
        && f.coeffs()[0].norm() < 1e-10
        && (f.coeffs()[1][(0, 0)].norm() - 2.0).abs() < 1e-10;
    let s3 = 3f64.sqrt();
    let m1 = Mat::from_row_slice(3, 3, &[3.0, 0.0, s3, 0.0, 4.0, 0.0, s3, 0.0, 1.0].map(real));
    let ms = Mat::from_row_slice(
        3,
        3,
        &[0.0, 0.0, 2.0 * s3, 2.0 * s3, 2.0, 0.0, 0.0, 0.0, 2.0].map(real),
    );
    let m_err = linalg::max_abs(&(&s.colligation.m1 - m1))
        .max(linalg::max_abs(&(&s.colligation.m_star - ms)));
    let aug = &rep.augmented;
    let pass = rep.r == 1
        && phi_ok
        && rep.dim_m == 1
        && theta_ok
        && f_ok
        && rep.nu == 1
        && m_err < 1e-10
        && aug.residual < 1e-7
        && aug.norm <= 1.0 + 1e-7;
    outcome(
        pass,
        format!(
            "r={} Φ≡2:{phi_ok} dim M={} Θ=z:{theta_ok} F=2z:{f_ok} ν={} M₁,M⋆ err {m_err:.2e}, |GX̃-[1,2z]| {:.2e}, |X̃| {:.9}",
            rep.r, rep.dim_m, rep.nu, aug.residual, aug.norm
        ),
    )
}

fn equal_data() -> Outcome {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for _ in 0..5 {
        let g = random_poly(&mut r, 2, 2, 3);
        match solve(&g, &g, &Config::default()) {
            Ok(s) => {
                worst = worst.max(s.report.augmented.residual);
                ok += (s.report.degenerate
                    && s.report.dim_m == 0
                    && s.x_tilde.state_dim() == 0
                    && s.report.augmented.degree == 0) as usize;
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    outcome(
        ok == 5 && worst < 1e-10,
        format!("R ≡ 0 and constant X̃ on {ok}/5, residual {worst:.2e}"),
    )
}

fn degree_bound() -> Outcome {
    let mut worst_degree = 0;
    let mut passed = 0;
    let mut errors = Vec::new();
    for i in 0..10 {
        let (g, k) = degree_bound_instance(2000 + i);
        match solve(&g, &k, &Config::default()) {
            Ok(s) => {
                worst_degree = worst_degree.max(s.report.augmented.degree);
                passed += s.report.verification.pass as usize;
            }
            Err(e) => errors.push(format!("{i}: {e}")),
        }
    }
    outcome(
        errors.is_empty() && worst_degree <= 4,
        format!(
            "max δ(X̃) = {worst_degree} (bound 4), verified {passed}/10 {}",
            errors.join("; ")
        ),
    )
}

fn finite_rank_coherence() -> Outcome {
    let cfg = Config::default();
    let mut pairs: Vec<(MatrixPolynomial, MatrixPolynomial)> = Vec::new();
    let mut r = rng(10);
    for _ in 0..5 {
        let g = random_poly(&mut r, 2, 3, 2);
        pairs.push((g.clone(), g));
    }
    pairs.push((
        MatrixPolynomial::constant(Mat::from_row_slice(1, 2, &[real(0.6), real(0.8)])),
        MatrixPolynomial::identity(1),
    ));
    if let Ok(sols) = solved() {
        for (inst, s) in sols {
            pairs.push((inst.g.clone(), s.k_tilde.clone()));
        }
    }
    for i in 0..5 {
        pairs.push(positive_instance(3000 + i));
    }
    let mut finite = 0;
    let mut worst: f64 = 0.0;
    let mut bounds = 0;
    for (g, k) in &pairs {
        let Ok(rep) = toeplitz::finite_rank_test(g, k, &cfg) else {
            continue;
        };
        if rep.finite {
            finite += 1;
            worst = worst.max(rep.coherence_residual.unwrap());
            bounds += rep.rank_bounds_hold.unwrap() as usize;
        }
    }
    outcome(
        finite > 0 && worst < 1e-10 && bounds == finite,
        format!(
            "{finite} finite of {} pairs, coherence {worst:.2e}, rank bounds {bounds}/{finite}",
            pairs.len()
        ),
    )
}

fn quadrature_cross_check() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut record = |s: &Solution| {
        worst = worst.max(s.colligation.quad_discrepancy);
        count += 1;
    };
    if let Ok(sols) = solved() {
        sols.iter().for_each(|(_, s)| record(s));
    } else {
        return outcome(false, "pipeline instances failed".into());
    }
    if let Ok(s) = solve(
        &corona_g(),
        &MatrixPolynomial::identity(1),
        &Config::default(),
    ) {
        record(&s);
    }
    for i in 0..10 {
        let (g, k) = degree_bound_instance(2000 + i);
        if let Ok(s) = solve(&g, &k, &Config::default()) {
            record(&s);
        }
    }
    outcome(
        worst < 1e-12,
        format!("max discrepancy {worst:.2e} over {count} instances"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("identity battery", identity_battery),
        ("projection positivity", projection_positivity),
        ("spectral factor", spectral_factor),
        ("inner function", inner_function),
        ("augmented defect positivity and rank", augmented_positivity),
        ("factorization identities", factorization_identities),
        ("corona instance", corona_instance),
        ("equal data", equal_data),
        ("degree bound", degree_bound),
        ("finite-rank coherence", finite_rank_coherence),
        ("quadrature cross-check", quadrature_cross_check),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += !out.pass as usize;
        println!(
            "criterion {:>2} {} {name}: {} ({:.2}s)",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
