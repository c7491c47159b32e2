//! `key = value` config files merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::CliError;

/// Effective settings for one command; flags already override file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// Config keys accept `-` and `_` interchangeably.
pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {}: expected `key = value`, got `{raw}`",
                n + 1
            ))
        })?;
        let key = normalize_key(k);
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!(
                "config line {}: duplicate key `{key}`",
                n + 1
            )));
        }
    }
    Ok(out)
}

impl Settings {
    /// File values overlaid by flag values; every key must be in `valid`.
    pub fn merge(
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
        valid: &[String],
    ) -> Result<Self, CliError> {
        let mut values = file;
        values.extend(flags);
        if let Some(bad) = values.keys().find(|k| !valid.contains(k)) {
            return Err(CliError::Usage(format!(
                "unknown config key `{bad}`; valid keys: {}",
                valid.join(", ")
            )));
        }
        Ok(Self { values })
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Fills in a default so it shows up in the echoed config.
    pub fn set_default(&mut self, key: &str, value: impl Display) {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| value.to_string());
    }

    /// Like `set_default`, with small or large reals echoed as `1e-10`.
    pub fn set_default_real(&mut self, key: &str, value: f64) {
        let a = value.abs();
        if a != 0.0 && !(1e-3..1e6).contains(&a) {
            self.set_default(key, format!("{value:e}"));
        } else {
            self.set_default(key, value);
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.str(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid value `{v}` for `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// Comma-separated list; empty when absent.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        match self.str(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>().map_err(|e| {
                        CliError::Usage(format!("invalid entry `{s}` in `{key}`: {e}"))
                    })
                })
                .collect(),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.str(key) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(v) => Err(CliError::Usage(format!(
                "`{key}` expects true or false, got `{v}`"
            ))),
        }
    }

    /// `key=value` lines for report headers.
    pub fn header_lines(&self) -> Vec<String> {
        self.values
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let m = parse_config("# run\nmodel = cigar  # trailing\n\nfd-step=2e-3\n").unwrap();
        assert_eq!(m.get("model").unwrap(), "cigar");
        assert_eq!(m.get("fd_step").unwrap(), "2e-3");
        assert!(parse_config("model cigar").is_err());
        assert!(parse_config("a = 1\na = 2").is_err());
    }

    #[test]
    fn flags_override_file_and_unknown_keys_fail() {
        let valid: Vec<String> = ["model", "points"].iter().map(|s| s.to_string()).collect();
        let file = parse_config("model = cigar\npoints = 5").unwrap();
        let flags = BTreeMap::from([("points".to_string(), "9".to_string())]);
        let s = Settings::merge(file, flags, &valid).unwrap();
        assert_eq!(s.parse::<usize>("points").unwrap(), Some(9));
        assert_eq!(s.str("model"), Some("cigar"));
        assert!(
            Settings::merge(parse_config("bogus = 1").unwrap(), BTreeMap::new(), &valid).is_err()
        );
    }

    #[test]
    fn lists_and_flags() {
        let valid: Vec<String> = ["b", "t"].iter().map(|s| s.to_string()).collect();
        let s = Settings::merge(
            parse_config("b = 1, 1.5,2\nt = true").unwrap(),
            BTreeMap::new(),
            &valid,
        )
        .unwrap();
        assert_eq!(s.list::<f64>("b").unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(s.flag("t").unwrap());
        assert!(s.list::<f64>("missing").unwrap().is_empty());
    }
}
