//! Flat `key = value` documents with dotted section names.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear once.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::CliError;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

#[derive(Debug, Clone, Default)]
pub struct KvDoc {
    source: String,
    entries: BTreeMap<String, Entry>,
}

impl KvDoc {
    /// `source` names the document in diagnostics.
    pub fn parse(source: &str, text: &str) -> Result<Self, CliError> {
        let mut doc = KvDoc {
            source: source.to_string(),
            entries: BTreeMap::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(doc.error_at(i + 1, "expected `key = value`"));
            };
            doc.insert(k.trim(), v.trim(), i + 1)?;
        }
        Ok(doc)
    }

    /// Adds `key=value` given on the command line; later settings win.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--set expects key=value, got `{assignment}`"))
        })?;
        let key = k.trim();
        check_key(key).map_err(|m| CliError::Usage(format!("--set {key}: {m}")))?;
        self.entries.insert(
            key.to_string(),
            Entry {
                value: v.trim().to_string(),
                line: 0,
                used: false,
            },
        );
        Ok(())
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<(), CliError> {
        check_key(key).map_err(|m| self.error_at(line, &m))?;
        if let Some(prev) = self.entries.get(key) {
            return Err(self.error_at(
                line,
                &format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
                used: false,
            },
        );
        Ok(())
    }

    fn error_at(&self, line: usize, message: &str) -> CliError {
        CliError::Config {
            file: self.source.clone(),
            line,
            message: message.to_string(),
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn has_section(&self, section: &str) -> bool {
        let prefix = format!("{section}.");
        self.entries.keys().any(|k| k.starts_with(&prefix))
    }

    pub fn str(&mut self, key: &str) -> Option<String> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            e.value.clone()
        })
    }

    pub fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        let Some(entry) = self.entries.get_mut(key) else {
            return Ok(None);
        };
        entry.used = true;
        let (value, line) = (entry.value.clone(), entry.line);
        value
            .parse()
            .map(Some)
            .map_err(|_| self.error_at(line, &format!("`{key}`: cannot parse `{value}`")))
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        self.get(key)?.ok_or_else(|| CliError::Config {
            file: self.source.clone(),
            line: 0,
            message: format!("missing required key `{key}`"),
        })
    }

    pub fn flag(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list of numbers.
    pub fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(raw) = self.str(key) else {
            return Ok(None);
        };
        let line = self.entries[key].line;
        raw.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|_| self.error_at(line, &format!("`{key}`: expected comma-separated numbers")))
    }

    /// Reports a key that was never read, so typos do not pass silently.
    pub fn finish(&self) -> Result<(), CliError> {
        match self.entries.iter().find(|(_, e)| !e.used) {
            Some((k, e)) => Err(self.error_at(e.line, &format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn check_key(key: &str) -> Result<(), String> {
    let ok = !key.is_empty()
        && key.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        });
    if ok {
        Ok(())
    } else {
        Err(format!("malformed key `{key}`"))
    }
}
