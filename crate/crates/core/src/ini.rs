//! Line-oriented `key = value` text with `[section]` headers.
//!
//! Shared by the cable parameter file and the scenario configuration.
//! Blank lines and lines starting with `#` or `;` are ignored. Keys that
//! appear before the first header belong to the section named by the
//! caller (`implicit_section`), or are rejected when there is none.

use std::collections::BTreeMap;

use crate::error::{Result, SimError};

/// One `key = value` entry with the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

/// Parsed document: section name -> key -> entry. Section order is not kept.
#[derive(Debug, Clone, Default)]
pub struct Document {
    pub source_name: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    section_lines: BTreeMap<String, usize>,
}

impl Document {
    pub fn parse(source_name: &str, text: &str, implicit_section: Option<&str>) -> Result<Self> {
        let mut doc = Document {
            source_name: source_name.to_string(),
            ..Default::default()
        };
        let mut current: Option<String> = implicit_section.map(str::to_string);
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| doc.err(line_no, "unterminated section header"))?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(doc.err(line_no, format!("bad section name `{name}`")));
                }
                if doc.section_lines.contains_key(name) {
                    return Err(doc.err(line_no, format!("duplicate section `[{name}]`")));
                }
                doc.section_lines.insert(name.to_string(), line_no);
                doc.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| doc.err(line_no, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(doc.err(line_no, "empty key"));
            }
            let Some(section) = current.clone() else {
                return Err(doc.err(line_no, format!("key `{key}` outside of any section")));
            };
            let entries = doc.sections.entry(section.clone()).or_default();
            if entries.contains_key(key) {
                return Err(doc.err(line_no, format!("duplicate key `{key}` in [{section}]")));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line: line_no,
                },
            );
        }
        Ok(doc)
    }

    fn err(&self, line: usize, message: impl Into<String>) -> SimError {
        SimError::Parse {
            source_name: self.source_name.clone(),
            line,
            message: message.into(),
        }
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, Entry>> {
        self.sections.get(name)
    }

    /// Rejects any section not in `allowed`.
    pub fn check_sections(&self, allowed: &[&str]) -> Result<()> {
        for name in self.sections.keys() {
            if !allowed.contains(&name.as_str()) {
                let line = self.section_lines.get(name).copied().unwrap_or(0);
                return Err(self.err(line, format!("unknown section `[{name}]`")));
            }
        }
        Ok(())
    }

    /// Rejects any key in `section` not in `allowed`.
    pub fn check_keys(&self, section: &str, allowed: &[&str]) -> Result<()> {
        if let Some(entries) = self.sections.get(section) {
            for (key, entry) in entries {
                if !allowed.contains(&key.as_str()) {
                    return Err(self.err(entry.line, format!("unknown key `{key}` in [{section}]")));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    /// Parses `section.key` with `FromStr`, reporting the line on failure.
    pub fn parse_value<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(entry) => entry.value.parse::<T>().map(Some).map_err(|_| {
                self.err(
                    entry.line,
                    format!("cannot parse `{}` as a value for `{key}`", entry.value),
                )
            }),
        }
    }

    /// Parses a comma-separated list.
    pub fn parse_list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        let Some(entry) = self.get(section, key) else {
            return Ok(None);
        };
        entry
            .value
            .split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<T>().map_err(|_| {
                    self.err(entry.line, format!("cannot parse list item `{item}` for `{key}`"))
                })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}
