//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! lines always show up in `cargo test` output.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use soliton_lab::chart::ChartPoint;
use soliton_lab::decay::{
    comparison_bound, main_exponents, measure_decay, sigma_select, term_orders, DecayQuantity,
    TheoremParams, Verdict,
};
use soliton_lab::levelset::frame_at;
use soliton_lab::models::{
    bryant_integrate, bryant_model, cigar_cross_line_model, cigar_model, BryantModel, SolitonModel,
};
use soliton_lab::verify::{
    run_suite, IdentityId, IdentitySuite, PointSampler, ResidualReport, Status, VerifyOptions,
};

type Criterion = (&'static str, fn() -> Check);

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Check {
    Check { pass, detail }
}

fn suite(ids: &[IdentityId], count: usize, seed: u64, region: Option<(f64, f64)>) -> IdentitySuite {
    IdentitySuite {
        identities: ids.to_vec(),
        sampler: PointSampler {
            count,
            seed,
            region,
        },
        options: VerifyOptions::default(),
    }
}

fn rows(model: &dyn SolitonModel, s: &IdentitySuite) -> Vec<ResidualReport> {
    run_suite(&[model], s).expect("suite runs").reports
}

fn max_rel<'a>(rows: impl IntoIterator<Item = &'a ResidualReport>) -> f64 {
    rows.into_iter()
        .map(|r| r.rel_residual.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

fn within(elapsed: Duration, budget_s: u64) -> bool {
    elapsed <= Duration::from_secs(budget_s)
}

fn bryant_to(r_max: f64, tol: f64) -> BryantModel {
    bryant_model(bryant_integrate(r_max, tol).expect("profile integrates"))
}

fn soliton_fixtures() -> Check {
    let t = Instant::now();
    let s = suite(&[IdentityId::Soliton], 100, 7, None);
    let mut worst = Vec::new();
    let mut ok = true;
    for m in [
        &cigar_model() as &dyn SolitonModel,
        &cigar_cross_line_model(),
    ] {
        let r = rows(m, &s);
        let rel = max_rel(&r);
        ok &= r.len() == 100 && rel < 1e-10;
        worst.push(format!("{} {rel:.1e}", m.name()));
    }
    let tol = 1e-10;
    let b = bryant_to(110.0, tol);
    let mut bryant_rel: f64 = 0.0;
    for r in [1.0, 10.0, 100.0] {
        for p in [b.ray_point(r).unwrap(), ChartPoint::new(vec![r, 1.0, 2.0])] {
            let row =
                soliton_lab::verify::verify_soliton_equation(&b, &p, &VerifyOptions::default());
            bryant_rel = bryant_rel.max(row.rel_residual.unwrap_or(f64::INFINITY));
        }
    }
    ok &= bryant_rel < 10.0 * tol;
    let el = t.elapsed();
    worst.push(format!("bryant {bryant_rel:.1e} (< {:.0e})", 10.0 * tol));
    check(
        ok && within(el, 5),
        format!("max rel {}; {el:.2?}", worst.join(", ")),
    )
}

fn lemma1_suite() -> Check {
    let t = Instant::now();
    let s = suite(&[IdentityId::Lemma1], 50, 7, None);
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, tol) in [
        (&cigar_model() as &dyn SolitonModel, 1e-8),
        (&cigar_cross_line_model(), 1e-8),
    ] {
        let r = rows(m, &s);
        let rel = max_rel(&r);
        let c0_ok = m.hamilton_constant() == Some(4.0)
            && r.iter()
                .filter(|x| x.identity == "lemma1.d")
                .all(|x| x.rhs == vec![4.0]);
        ok &= r.len() == 250 && rel < tol && c0_ok;
        parts.push(format!("{} {rel:.1e} C0=4 {c0_ok}", m.name()));
    }
    let b = bryant_to(110.0, 1e-10);
    let r = rows(&b, &s);
    let rel = max_rel(&r);
    ok &= r.len() == 250 && rel < 1e-6;
    parts.push(format!("bryant {rel:.1e}"));
    let el = t.elapsed();
    check(
        ok && within(el, 10),
        format!("max rel {}; {el:.2?}", parts.join(", ")),
    )
}

fn flow_equations() -> Check {
    let s = suite(&[IdentityId::Lsf], 100, 7, None);
    let mut ok = true;
    let mut parts = Vec::new();
    let product = cigar_cross_line_model();
    let bryant = bryant_to(110.0, 1e-10);
    for m in [&product as &dyn SolitonModel, &bryant] {
        let r = rows(m, &s);
        let judged: Vec<&ResidualReport> = r.iter().filter(|x| x.status != Status::Info).collect();
        let h_rows = judged.iter().filter(|x| x.identity == "lsf").count();
        let s_rows = judged.iter().filter(|x| x.identity == "lsf.s").count();
        let rel = max_rel(judged.iter().copied());
        ok &= h_rows == 100 && s_rows == 100 && rel < 1e-8;
        parts.push(format!(
            "{} {h_rows}+{s_rows} rows, max rel {rel:.1e}",
            m.name()
        ));
    }
    check(ok, parts.join("; "))
}

fn evolution_sweep() -> Check {
    let t = Instant::now();
    let ids = [
        IdentityId::EvoH,
        IdentityId::EvoA2,
        IdentityId::Prop2,
        IdentityId::LemmaB,
        IdentityId::LemmaD,
        IdentityId::Prop3,
    ];
    let r = rows(
        &cigar_cross_line_model(),
        &suite(&ids, 20, 7, Some((0.3, 3.0))),
    );
    let judged: Vec<&ResidualReport> = r.iter().filter(|x| x.status != Status::Info).collect();
    let failed: Vec<&&ResidualReport> =
        judged.iter().filter(|x| x.status != Status::Pass).collect();
    let el = t.elapsed();
    let mut detail = format!(
        "{} of {} judged rows pass; {el:.2?}",
        judged.len() - failed.len(),
        judged.len()
    );
    if let Some(w) = failed
        .iter()
        .max_by(|a, b| a.rel_residual.partial_cmp(&b.rel_residual).unwrap())
    {
        detail.push_str(&format!(
            "; worst {} sigma {:?} rel {:.1e}",
            w.identity,
            w.sigma,
            w.rel_residual.unwrap_or(f64::NAN)
        ));
    }
    check(failed.is_empty() && within(el, 60), detail)
}

fn h_tensor() -> Check {
    let r = rows(
        &cigar_cross_line_model(),
        &suite(&[IdentityId::EvohH], 5, 7, Some((0.3, 3.0))),
    );
    let comps: Vec<&ResidualReport> = r
        .iter()
        .filter(|x| ["evoh_h.11", "evoh_h.12", "evoh_h.22"].contains(&x.identity.as_str()))
        .collect();
    let trace: Vec<&ResidualReport> = r.iter().filter(|x| x.identity == "evoh_h.trace").collect();
    let (rc, rt) = (
        max_rel(comps.iter().copied()),
        max_rel(trace.iter().copied()),
    );
    let ok = comps.len() == 15
        && trace.len() == 5
        && rc < 1e-3
        && comps.iter().chain(&trace).all(|x| x.status == Status::Pass);
    check(
        ok,
        format!("components max rel {rc:.1e}, trace vs H rows max rel {rt:.1e}"),
    )
}

fn bryant_profile() -> Check {
    let t = Instant::now();
    let profile = bryant_integrate(1e4, 1e-10).expect("profile integrates");
    let drift = profile.conservation_drift();
    let b = bryant_model(profile);
    let fit = measure_decay(&b, DecayQuantity::Scalar, (1e2, 1e4), 32).expect("fit");
    let exponent = fit.exponent.unwrap_or(f64::NAN);
    let c0 = b.hamilton_constant().unwrap_or(f64::NAN);
    let theta = frame_at(&b, &b.ray_point(1e3).unwrap())
        .expect("frame")
        .theta;
    let theta_err = (theta * c0 - 1.0).abs();
    let mut s2: f64 = 0.0;
    for k in 0..40 {
        let r = 10f64.powf(k as f64 / 10.0);
        for (th, ph) in [(std::f64::consts::FRAC_PI_2, 0.0), (0.7, 1.3), (2.4, 4.0)] {
            let fr = frame_at(&b, &ChartPoint::new(vec![r, th, ph])).expect("frame");
            s2 = s2.max(fr.s2.abs());
        }
    }
    let el = t.elapsed();
    let ok = drift < 1e-8
        && (exponent + 1.0).abs() <= 0.05
        && fit.verdict == Verdict::PowerLaw
        && theta_err < 0.02
        && s2 < 1e-10
        && within(el, 30);
    check(
        ok,
        format!(
            "drift {drift:.1e}, R ~ r^{exponent:.4}, theta(1e3) C0 - 1 = {theta_err:.1e}, max S^2 {s2:.1e}; {el:.2?}"
        ),
    )
}

fn exponent_calculus() -> Check {
    let p = |a, b| TheoremParams::exponents(a, b).unwrap();
    let m11 = main_exponents(&p(1.0, 1.0));
    let m15 = main_exponents(&p(1.0, 1.5));
    let mut ok = sigma_select(&p(1.0, 1.0)) == 2.0
        && (m11.e1, m11.e2) == (-2.0, -2.0)
        && (m15.e1 - 2.0 / 3.0).abs() < 1e-12
        && m15.e2 == -1.0
        && m15.asymptotically_round
        && !main_exponents(&p(0.5, 1.0)).asymptotically_round
        && !main_exponents(&p(1.0, 2.0)).asymptotically_round;
    let (mut worst_iii, mut worst_e1): (f64, f64) = (0.0, 0.0);
    for i in 1..=10 {
        let a = i as f64 / 10.0;
        for j in 0..10 {
            let params = p(a, a * (1.0 + 0.5 * j as f64));
            let sigma = sigma_select(&params);
            worst_iii = worst_iii.max(term_orders(&params, sigma).order_iii.abs());
            worst_e1 = worst_e1.max((main_exponents(&params).e1 + a * sigma).abs());
        }
    }
    ok &= worst_iii <= 1e-12 && worst_e1 <= 1e-12;
    check(
        ok,
        format!("10x10 grid: max |order_III| {worst_iii:.1e}, max |e1 + a sigma| {worst_e1:.1e}"),
    )
}

fn comparison_ode() -> Check {
    let (mut diff, mut over): (f64, f64) = (0.0, 0.0);
    for c in [0.0, 1.0, 2.0] {
        for u0 in [0.0, 1.0, 9.0] {
            let s = comparison_bound(c, u0).unwrap();
            for k in 0..=100 {
                let tau = 0.5 * k as f64;
                let (closed, num) = (s.eval(tau), s.integrate_numerically(tau).unwrap());
                diff = diff.max((closed - num).abs());
                over = over.max(closed.max(num) - s.sup_bound);
            }
        }
    }
    check(
        diff < 1e-8 && over <= 0.0,
        format!("max |closed - numerical| {diff:.1e}, max excess over sup bound {over:.1e}"),
    )
}

fn u0_formula() -> Check {
    let s = suite(&[IdentityId::MainU0], 50, 7, None);
    let product = rows(&cigar_cross_line_model(), &s);
    let judged: Vec<&ResidualReport> = product.iter().filter(|x| x.identity == "main_u0").collect();
    let rel = max_rel(judged.iter().copied());
    let b = bryant_to(110.0, 1e-10);
    let br = rows(&b, &s);
    let bmax = br
        .iter()
        .filter(|x| x.identity == "main_u0")
        .flat_map(|x| x.lhs.iter().chain(&x.rhs))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let nb = br.iter().filter(|x| x.identity == "main_u0").count();
    let ok = judged.len() == 50 && rel < 1e-8 && nb == 50 && bmax < 1e-10;
    check(
        ok,
        format!("cigarxr max rel {rel:.1e}; bryant max |U0|, formula {bmax:.1e}"),
    )
}

fn determinism() -> Check {
    let b = bryant_to(110.0, 1e-10);
    let (c, p) = (cigar_model(), cigar_cross_line_model());
    let models: [&dyn SolitonModel; 3] = [&c, &p, &b];
    let s = suite(&IdentityId::ALL, 4, 11, None);
    let json = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            serde_json::to_string_pretty(&run_suite(&models, &s).unwrap().reports).unwrap()
        })
    };
    let runs = [json(4), json(4), json(1)];
    let ok = runs.windows(2).all(|w| w[0] == w[1]);
    check(
        ok,
        format!(
            "3 runs (4, 4, 1 threads), {} bytes each, identical: {ok}",
            runs[0].len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("soliton equation on fixtures", soliton_fixtures),
        ("soliton identities suite", lemma1_suite),
        ("level-set flow equations", flow_equations),
        ("evolution equations on cigar x R", evolution_sweep),
        ("full h_ij evolution", h_tensor),
        ("Bryant integration and asymptotics", bryant_profile),
        ("exponent calculus", exponent_calculus),
        ("comparison ODE", comparison_ode),
        ("U0 formula", u0_formula),
        ("deterministic reports", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("acceptance {:>2} {tag}  {name}: {}", k + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
