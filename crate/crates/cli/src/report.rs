use soliton_lab::decay::{DecayFit, DECAY_CSV_COLUMNS};
use soliton_lab::verify::{reports_from_json, write_csv};

use crate::config::Settings;
use crate::output::write_text;
use crate::{CliError, Outcome};

/// Header lines rebuilt from the document's echoed config.
fn header_of(doc: &serde_json::Value) -> Vec<String> {
    let mut lines = Vec::new();
    for key in ["format_version", "command"] {
        if let Some(v) = doc.get(key).and_then(|v| v.as_str()) {
            lines.push(format!("{key} = {v}"));
        }
    }
    if let Some(cfg) = doc.get("config").and_then(|c| c.as_object()) {
        for (k, v) in cfg {
            lines.push(format!(
                "{k} = {}",
                v.as_str().map_or_else(|| v.to_string(), str::to_owned)
            ));
        }
    }
    lines
}

pub fn run(s: &Settings) -> Outcome {
    let input = s
        .str("input")
        .ok_or_else(|| CliError::Usage("report needs --input".into()))?;
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Usage(format!("cannot read {input}: {e}")))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{input}: {e}")))?;
    let header = header_of(&doc);
    let out = match doc.get("fits") {
        Some(fits) => {
            let fits: Vec<DecayFit> = serde_json::from_value(fits.clone())
                .map_err(|e| CliError::Usage(format!("{input}: {e}")))?;
            let mut out: String = header.iter().map(|l| format!("# {l}\n")).collect();
            out.push_str(DECAY_CSV_COLUMNS);
            out.push('\n');
            for f in &fits {
                out.push_str(&f.csv_row());
                out.push('\n');
            }
            out
        }
        None => {
            let reports = reports_from_json(&text)?;
            let mut buf = Vec::new();
            write_csv(&mut buf, &header, &reports)?;
            String::from_utf8_lossy(&buf).into_owned()
        }
    };
    write_text(s.str("csv"), &out)?;
    Ok(true)
}
