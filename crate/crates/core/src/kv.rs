//! Flat `key = value` text files, used for device profiles and pipeline
//! configs. One pair per line, `#` starts a comment, keys are
//! case-sensitive, later duplicates win.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: cannot parse `{value}` as {kind}")]
    BadValue {
        key: String,
        value: String,
        kind: &'static str,
    },
}

/// Parsed key=value document. Keys are kept sorted so serialization is
/// reproducible.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(KvError::Malformed {
                    line: idx + 1,
                    text: raw.trim().to_string(),
                });
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KvFile { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingKey(key.into()))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, KvError> {
        self.get(key).map(|v| parse_num(key, v, "a real number")).transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, KvError> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| KvError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    kind: "an unsigned integer",
                })
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, KvError> {
        Ok(self.get_u64(key)?.map(|v| v as usize))
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, KvError> {
        self.get(key)
            .map(|v| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(KvError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    kind: "a boolean",
                }),
            })
            .transpose()
    }

    /// Render back to text, keys sorted, one pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

fn parse_num(key: &str, value: &str, kind: &'static str) -> Result<f64, KvError> {
    value.parse::<f64>().map_err(|_| KvError::BadValue {
        key: key.into(),
        value: value.into(),
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let kv = KvFile::parse("# header\nname = idraw2\nfeed = 1500 # mm/min\n\n").unwrap();
        assert_eq!(kv.get("name"), Some("idraw2"));
        assert_eq!(kv.get_f64("feed").unwrap(), Some(1500.0));
    }

    #[test]
    fn rejects_bare_words() {
        assert!(KvFile::parse("feed\n").is_err());
    }

    #[test]
    fn round_trips_sorted(){
        let mut kv = KvFile::default();
        kv.set("b", 2);
        kv.set("a", 1);
        let text = kv.to_text();
        assert_eq!(text, "a = 1\nb = 2\n");
        let back = KvFile::parse(&text).unwrap();
        assert_eq!(back.get("a"), Some("1"));
    }
}
