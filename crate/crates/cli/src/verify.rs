use serde::Serialize;
use soliton_lab::models::SolitonModel;
use soliton_lab::verify::{
    run_suite, write_csv, IdentityId, IdentitySuite, IdentitySummary, Interpretation, PointSampler,
    ResidualReport, Tolerances, VerifyOptions,
};

use crate::config::Settings;
use crate::output::{build_model, csv_header, write_json, write_text};
use crate::{CliError, Outcome};

#[derive(Serialize)]
struct Body<'a> {
    summary: &'a [IdentitySummary],
    reports: &'a [ResidualReport],
}

fn parse_interpretation(s: &str) -> Result<Interpretation, CliError> {
    match s {
        "intrinsic" => Ok(Interpretation::Intrinsic),
        "ambient" => Ok(Interpretation::Ambient),
        other => Err(CliError::Usage(format!(
            "interpretation must be intrinsic or ambient, got `{other}`"
        ))),
    }
}

fn suite_from(s: &mut Settings) -> Result<IdentitySuite, CliError> {
    s.set_default(
        "identities",
        IdentityId::ALL
            .iter()
            .map(|i| i.as_str())
            .collect::<Vec<_>>()
            .join(","),
    );
    s.set_default("points", 20);
    s.set_default("seed", 7);
    s.set_default("sigmas", "-1,0,2");
    s.set_default_real("fd_step", 1e-3);
    s.set_default("interpretation", "intrinsic");
    let d = Tolerances::default();
    for (key, v) in [
        ("tol_soliton", d.soliton),
        ("tol_lemma1", d.lemma1),
        ("tol_lsf", d.lsf),
        ("tol_evolution", d.evolution),
        ("tol_main_u0", d.main_u0),
        ("min_order", d.min_order),
    ] {
        s.set_default_real(key, v);
    }
    let identities = s
        .list::<String>("identities")?
        .iter()
        .map(|i| i.parse::<IdentityId>())
        .collect::<Result<Vec<_>, _>>()?;
    let region = match s.list::<f64>("region")?.as_slice() {
        [] => None,
        [lo, hi] => Some((*lo, *hi)),
        _ => return Err(CliError::Usage("region expects `lo,hi`".into())),
    };
    let sampler = PointSampler {
        count: s.parse_or("points", 20)?,
        seed: s.parse_or("seed", 7)?,
        region,
    };
    let tolerances = Tolerances {
        soliton: s.parse_or("tol_soliton", d.soliton)?,
        lemma1: s.parse_or("tol_lemma1", d.lemma1)?,
        lsf: s.parse_or("tol_lsf", d.lsf)?,
        evolution: s.parse_or("tol_evolution", d.evolution)?,
        main_u0: s.parse_or("tol_main_u0", d.main_u0)?,
        min_order: s.parse_or("min_order", d.min_order)?,
    };
    let mut options = VerifyOptions {
        tolerances,
        sigmas: s.list("sigmas")?,
        interpretation: parse_interpretation(s.str("interpretation").unwrap_or("intrinsic"))?,
        ..VerifyOptions::default()
    };
    let step: f64 = s.parse_or("fd_step", 1e-3)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(CliError::Usage(format!(
            "fd_step must be positive, got {step}"
        )));
    }
    options.fd.step = step;
    Ok(IdentitySuite {
        identities,
        sampler,
        options,
    })
}

pub fn run(s: &mut Settings) -> Outcome {
    s.set_default("model", "cigar,cigarxr,bryant");
    let suite = suite_from(s)?;
    let bryant_rmax = match s.parse::<f64>("bryant_rmax")? {
        Some(r) => r,
        None => suite
            .sampler
            .region
            .map_or(110.0, |(_, hi)| (1.1 * hi).max(110.0)),
    };
    s.set_default_real("bryant_rmax", bryant_rmax);
    s.set_default_real("bryant_tol", 1e-10);
    let bryant_tol: f64 = s.parse_or("bryant_tol", 1e-10)?;
    let names: Vec<String> = s.list("model")?;
    if names.is_empty() {
        return Err(CliError::Usage("no model given".into()));
    }
    let models = names
        .iter()
        .map(|n| build_model(n, bryant_rmax, bryant_tol))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&dyn SolitonModel> = models.iter().map(|m| m.as_ref()).collect();
    let result = run_suite(&refs, &suite)?;

    let json = s.str("json").map(str::to_owned);
    let csv = s.str("csv").map(str::to_owned);
    let body = Body {
        summary: &result.summary,
        reports: &result.reports,
    };
    if json.is_some() || csv.is_none() {
        write_json(json.as_deref(), "verify", s, body)?;
    }
    if let Some(path) = &csv {
        let mut buf = Vec::new();
        write_csv(&mut buf, &csv_header("verify", s), &result.reports)?;
        write_text(Some(path), &String::from_utf8_lossy(&buf))?;
    }
    for row in &result.summary {
        eprintln!(
            "{:<10} pass {:>5}  fail {:>5}  skipped {:>5}  info {:>5}",
            row.identity, row.pass, row.fail, row.skipped, row.info
        );
    }
    let failures = result.failures();
    eprintln!("{} rows, {} failures", result.reports.len(), failures);
    Ok(failures == 0)
}
