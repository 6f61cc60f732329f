//! Minimal INI reader: `[section]` headers, `key = value` lines and `#`
//! comments. Keys are unique within a section; section names may repeat
//! only when they differ.

use super::ConfigError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

pub fn parse(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::syntax(line, "unterminated section header"))?
                .trim();
            if name.is_empty() {
                return Err(ConfigError::syntax(line, "empty section name"));
            }
            if sections.iter().any(|sec| sec.name == name) {
                return Err(ConfigError::syntax(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::syntax(line, "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::syntax(line, "empty key"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| ConfigError::syntax(line, "key outside of any section"))?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::syntax(
                line,
                format!("duplicate key `{key}` in [{}]", section.name),
            ));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}
