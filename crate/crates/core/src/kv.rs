//! Flat `key=value` text blocks used for configuration files and reports.
//! Blank lines and lines starting with `#` are ignored; keys keep their
//! order of appearance.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KvBlock {
    entries: Vec<(String, String, usize)>,
}

impl KvBlock {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected key=value, found {line:?}"),
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            if entries.iter().any(|(existing, _, _)| *existing == key) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate key {key}"),
                });
            }
            entries.push((key, v.trim().to_string(), i + 1));
        }
        Ok(Self { entries })
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string(), 0));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _, _)| k == key).map(|(_, v, _)| v.as_str())
    }

    /// Source line of `key`, 0 for entries added programmatically.
    pub fn line_of(&self, key: &str) -> usize {
        self.entries.iter().find(|(k, _, _)| k == key).map_or(0, |e| e.2)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _, _)| k.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing key {key}"),
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        v.parse().map_err(|_| Error::Parse {
            line: self.line_of(key),
            message: format!("{key}: {v:?} is not a number"),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v, _) in &self.entries {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

/// Shortest text that parses back to exactly `x`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_serialize() {
        let b = KvBlock::parse("# c\n a = 1.5\n\nb=x=y\n").unwrap();
        assert_eq!(b.get("a"), Some("1.5"));
        assert_eq!(b.get("b"), Some("x=y"));
        assert_eq!(b.line_of("b"), 4);
        assert_eq!(KvBlock::parse(&b.to_text()).unwrap().get("b"), Some("x=y"));
    }

    #[test]
    fn errors_carry_lines() {
        assert!(matches!(KvBlock::parse("a=1\nnope"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(KvBlock::parse("a=1\na=2"), Err(Error::Parse { line: 2, .. })));
        let b = KvBlock::parse("x=abc").unwrap();
        assert!(matches!(b.f64("x"), Err(Error::Parse { line: 1, .. })));
        assert!(b.f64("y").is_err());
    }

    #[test]
    fn float_text_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
