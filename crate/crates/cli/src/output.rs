//! CSV with `#`-prefixed metadata lines.

use bosebridge::BridgeConfig;

pub struct Report {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    /// Starts with the tool version, the probe amplitude and the config echo.
    pub fn new(config: &BridgeConfig, alpha: f64) -> Self {
        let mut meta = vec![format!("bosebridge {}", env!("CARGO_PKG_VERSION"))];
        meta.extend(
            config
                .to_toml_string(Some(alpha))
                .lines()
                .map(|l| format!("config {l}")),
        );
        Self {
            meta,
            header: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl AsRef<str>) {
        self.meta.push(format!("{key} = {}", value.as_ref()));
    }

    pub fn header(&mut self, names: &[&str]) {
        self.header = names.iter().map(|s| s.to_string()).collect();
    }

    pub fn row(&mut self, fields: Vec<String>) {
        self.rows.push(fields);
    }

    pub fn to_bytes(&self) -> anyhow::Result<Vec<u8>> {
        let mut buf = Vec::new();
        for line in &self.meta {
            buf.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(buf);
        if !self.header.is_empty() {
            w.write_record(&self.header)?;
        }
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// Shortest round-trip representation.
pub fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}
