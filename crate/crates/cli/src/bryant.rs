use soliton_lab::decay::{fit_power_law, MIN_SAMPLES};
use soliton_lab::models::bryant_integrate;

use crate::config::Settings;
use crate::output::write_text;
use crate::{CliError, Outcome};

/// Conservation drift above this counts as a failed integration.
const DRIFT_LIMIT: f64 = 1e-8;

pub fn run(s: &mut Settings) -> Outcome {
    s.set_default_real("rmax", 1e4);
    s.set_default_real("tol", 1e-10);
    let rmax: f64 = s.parse_or("rmax", 1e4)?;
    let tol: f64 = s.parse_or("tol", 1e-10)?;
    let profile = match bryant_integrate(rmax, tol) {
        Ok(p) => p,
        Err(soliton_lab::Error::InvalidInput(m)) => return Err(CliError::Usage(m)),
        Err(e) => return Err(CliError::Runtime(format!("integration failed: {e}"))),
    };
    let mut buf = Vec::new();
    profile.write_csv(&mut buf)?;
    write_text(s.str("out"), &String::from_utf8_lossy(&buf))?;

    let drift = profile.conservation_drift();
    eprintln!(
        "{} grid points on [{:e}, {:e}]",
        profile.len(),
        profile.r_min(),
        profile.r_max()
    );
    eprintln!(
        "R + |df|^2 at seed {:.15}, max drift from 1: {drift:.3e}",
        profile.hamilton_constant()
    );
    let last = profile.samples().last().expect("non-empty profile");
    eprintln!(
        "at r = {:e}: R = {:.6e}, r R = {:.6}, phi^2 / r = {:.6}",
        last.r,
        last.scalar,
        last.r * last.scalar,
        last.phi * last.phi / last.r
    );
    let tail: Vec<(f64, f64)> = profile
        .samples()
        .filter(|p| p.r >= 0.01 * rmax)
        .map(|p| (p.r, p.scalar))
        .collect();
    if tail.len() >= MIN_SAMPLES {
        if let Ok(fit) = fit_power_law(&tail) {
            if let Some(e) = fit.exponent {
                eprintln!(
                    "R ~ r^{e:.4} over [{:e}, {:e}] ({})",
                    tail[0].0, rmax, fit.verdict
                );
            }
        }
    }
    Ok(drift < DRIFT_LIMIT)
}
