//! Model lookup and report files.

use std::fs::File;
use std::io::{BufWriter, Write};

use serde::Serialize;
use soliton_lab::models::{
    bryant_integrate, bryant_model, cigar_cross_line_model, cigar_model, euclidean_model,
    flat_spheres_fixture, perturbed_fixture, SolitonModel,
};
use soliton_lab::verify::FORMAT_VERSION;

use crate::config::Settings;
use crate::CliError;

pub const MODEL_NAMES: &str = "cigar, cigarxr, bryant, euclidean, flat-spheres, perturbed";

/// Builds a model by name; Bryant is integrated out to `bryant_rmax`.
pub fn build_model(
    name: &str,
    bryant_rmax: f64,
    bryant_tol: f64,
) -> Result<Box<dyn SolitonModel>, CliError> {
    Ok(match name {
        "cigar" => Box::new(cigar_model()),
        "cigarxr" => Box::new(cigar_cross_line_model()),
        "bryant" => Box::new(bryant_model(bryant_integrate(bryant_rmax, bryant_tol)?)),
        "euclidean" => Box::new(euclidean_model(3)?),
        "flat-spheres" => Box::new(flat_spheres_fixture()),
        "perturbed" => Box::new(perturbed_fixture()),
        other => {
            return Err(CliError::Usage(format!(
                "unknown model `{other}`; valid models: {MODEL_NAMES}"
            )))
        }
    })
}

/// Document wrapper shared by every JSON report.
#[derive(Serialize)]
pub struct Document<'a, T: Serialize> {
    pub format_version: &'a str,
    pub command: &'a str,
    pub config: &'a std::collections::BTreeMap<String, String>,
    #[serde(flatten)]
    pub body: T,
}

/// Writes the JSON document to `path`, or stdout when `None`.
pub fn write_json<T: Serialize>(
    path: Option<&str>,
    command: &str,
    settings: &Settings,
    body: T,
) -> Result<(), CliError> {
    let doc = Document {
        format_version: FORMAT_VERSION,
        command,
        config: settings.entries(),
        body,
    };
    let mut text =
        serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// Header lines for CSV files: format version, command, then the config.
pub fn csv_header(command: &str, settings: &Settings) -> Vec<String> {
    let mut lines = vec![
        format!("format_version = {FORMAT_VERSION}"),
        format!("command = {command}"),
    ];
    lines.extend(settings.header_lines());
    lines
}

/// Writes to `path`, or stdout when `None`.
pub fn write_text(path: Option<&str>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut out = BufWriter::new(
                File::create(p)
                    .map_err(|e| CliError::Runtime(format!("cannot create {p}: {e}")))?,
            );
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()?;
        }
    }
    Ok(())
}
