/// 17 significant digits: enough to round-trip any f64. −0 prints as 0.
pub(crate) fn data(v: f64) -> String {
    let v = v + 0.0;
    format!("{v:.16e}")
}

/// 6 significant digits for human-facing summaries.
pub(crate) fn human(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", v + 0.0);
    }
    format!("{v:.5e}")
}

/// Sectioned `key = value` text.
#[derive(Debug, Default)]
pub(crate) struct KeyValues {
    text: String,
}

impl KeyValues {
    pub fn section(&mut self, name: &str) {
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        self.text.push_str(&format!("[{name}]\n"));
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        self.text.push_str(&format!("{key} = {value}\n"));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.kv(key, human(value));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// A CSV table with a fixed header.
pub(crate) fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
