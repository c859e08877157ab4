//! Locale-independent number formatting and CSV assembly.

/// `v` with 12 significant digits, `%g` style: fixed notation for decimal
/// exponents in `[-5, 12)`, scientific otherwise, trailing zeros removed.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// A header plus rows of already formatted cells; an `error` column is added
/// as soon as any row carries an error message.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<(Vec<String>, Option<String>)>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push((cells, None));
    }

    /// A failed row: the level is kept, every other value is left empty.
    pub fn push_error(&mut self, eps: f64, message: String) {
        let mut cells = vec![String::new(); self.header.len()];
        cells[0] = num(eps);
        self.rows.push((cells, Some(message)));
    }

    pub fn render(&self) -> String {
        let with_error = self.rows.iter().any(|r| r.1.is_some());
        let mut out = self.header.join(",");
        if with_error {
            out.push_str(",error");
        }
        out.push('\n');
        for (cells, err) in &self.rows {
            out.push_str(&cells.join(","));
            if with_error {
                out.push(',');
                if let Some(e) = err {
                    out.push_str(&quote(e));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
