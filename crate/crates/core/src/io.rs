//! Float formatting and small text helpers shared by the CSV writers.

/// Formats with 17 significant digits; the text re-parses to the same bits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(field: &str) -> Result<f64, String> {
    let f = field.trim();
    f.parse::<f64>().map_err(|_| format!("cannot parse {f:?} as a number"))
}

/// A named output produced by a run, written by the caller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<Vec<u8>>) -> Self {
        Self { name: name.into(), contents: contents.into() }
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.contents).unwrap_or("")
    }
}
