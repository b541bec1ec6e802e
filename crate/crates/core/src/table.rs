//! Observed and expected McDonald–Kreitman style count tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, PrfError, Result};

/// Cell layout: 2×2 (fixed, polymorphic) or 2×3 (fixed, one-sided, shared).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Layout {
    Dprs,
    Dohrs,
}

impl Layout {
    /// Cell names in canonical order, silent class first.
    pub fn cell_names(self) -> &'static [&'static str] {
        match self {
            Layout::Dprs => &["K_s", "V_s", "K_r", "V_r"],
            Layout::Dohrs => &["K_s", "O_s", "H_s", "K_r", "O_r", "H_r"],
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Layout::Dprs => &["K", "V"],
            Layout::Dohrs => &["K", "O", "H"],
        }
    }

    pub fn len(self) -> usize {
        self.cell_names().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Layout::Dprs => "DPRS",
            Layout::Dohrs => "DOHRS",
        }
    }
}

impl std::str::FromStr for Layout {
    type Err = PrfError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DPRS" => Ok(Layout::Dprs),
            "DOHRS" => Ok(Layout::Dohrs),
            other => Err(invalid(format!("unknown table layout '{other}'"))),
        }
    }
}

pub const CLASSES: [&str; 2] = ["silent", "replacement"];

/// Counts (observed integers) or Poisson means (expected reals) per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locus: Option<String>,
    pub layout: Layout,
    pub m: usize,
    pub n: usize,
    #[serde(serialize_with = "ser_counts", deserialize_with = "de_counts")]
    pub counts: Vec<(String, f64)>,
    pub observed: bool,
}

fn ser_counts<S: Serializer>(counts: &[(String, f64)], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(counts.len()))?;
    for (k, v) in counts {
        map.serialize_entry(k, v)?;
    }
    map.end()
}

fn de_counts<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<(String, f64)>, D::Error> {
    let map = BTreeMap::<String, f64>::deserialize(d)?;
    let layout = if map.len() == 4 { Layout::Dprs } else { Layout::Dohrs };
    let mut out = Vec::with_capacity(map.len());
    for name in layout.cell_names() {
        let v = map
            .get(*name)
            .ok_or_else(|| D::Error::custom(format!("missing cell '{name}'")))?;
        out.push((name.to_string(), *v));
    }
    if out.len() != map.len() {
        return Err(D::Error::custom("unexpected cell names"));
    }
    Ok(out)
}

impl CountTable {
    pub fn observed(layout: Layout, m: usize, n: usize, counts: &[u64]) -> Result<Self> {
        Self::build(layout, m, n, counts.iter().map(|&c| c as f64).collect(), true)
    }

    pub fn expected(layout: Layout, m: usize, n: usize, means: &[f64]) -> Result<Self> {
        Self::build(layout, m, n, means.to_vec(), false)
    }

    fn build(layout: Layout, m: usize, n: usize, values: Vec<f64>, observed: bool) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(invalid(format!("{} table needs {} cells", layout.name(), layout.len())));
        }
        let t = Self {
            locus: None,
            layout,
            m,
            n,
            counts: layout.cell_names().iter().map(|s| s.to_string()).zip(values).collect(),
            observed,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_locus(mut self, locus: impl Into<String>) -> Self {
        self.locus = Some(locus.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(invalid("sample sizes m and n must be >= 1"));
        }
        let names = self.layout.cell_names();
        if self.counts.len() != names.len() || self.counts.iter().zip(names).any(|((k, _), n)| k != n) {
            return Err(invalid(format!("cells must be {}", names.join(","))));
        }
        for (k, v) in &self.counts {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("cell {k} must be finite and >= 0, got {v}")));
            }
            if self.observed && v.fract() != 0.0 {
                return Err(invalid(format!("observed cell {k} must be an integer, got {v}")));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|(_, v)| *v).collect()
    }

    pub fn get(&self, cell: &str) -> Option<f64> {
        self.counts.iter().find(|(k, _)| k == cell).map(|(_, v)| *v)
    }

    /// Collapse a 2×3 table to 2×2 with `V = O + H`, or `V = O + 2H` when
    /// shared polymorphisms are counted once per species.
    pub fn to_dprs(&self, double_count_shared: bool) -> CountTable {
        if self.layout == Layout::Dprs {
            return self.clone();
        }
        let v = self.values();
        let w = if double_count_shared { 2.0 } else { 1.0 };
        let collapsed = [v[0], v[1] + w * v[2], v[3], v[4] + w * v[5]];
        CountTable {
            locus: self.locus.clone(),
            layout: Layout::Dprs,
            m: self.m,
            n: self.n,
            counts: Layout::Dprs.cell_names().iter().map(|s| s.to_string()).zip(collapsed).collect(),
            observed: self.observed,
        }
    }

    /// Tab-separated form with `#` metadata lines and a `class` header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if let Some(locus) = &self.locus {
            writeln!(out, "# locus\t{locus}").unwrap();
        }
        writeln!(out, "# layout\t{}", self.layout.name()).unwrap();
        writeln!(out, "# m\t{}", self.m).unwrap();
        writeln!(out, "# n\t{}", self.n).unwrap();
        writeln!(out, "# kind\t{}", if self.observed { "observed" } else { "expected" }).unwrap();
        writeln!(out, "class\t{}", self.layout.columns().join("\t")).unwrap();
        let width = self.layout.columns().len();
        let values = self.values();
        for (row, class) in CLASSES.iter().enumerate() {
            out.push_str(class);
            for v in &values[row * width..(row + 1) * width] {
                if self.observed {
                    write!(out, "\t{}", *v as u64).unwrap();
                } else {
                    write!(out, "\t{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parse one table; see [`parse_tables_tsv`].
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut tables = parse_tables_tsv(text)?;
        match tables.len() {
            1 => Ok(tables.remove(0)),
            k => Err(invalid(format!("expected one table, found {k}"))),
        }
    }
}

/// Parse any number of tables written by [`CountTable::to_tsv`].
///
/// Metadata lines (`# key<TAB>value`) apply to the next `class` block; `m`
/// and `n` are required. Unknown metadata keys are ignored.
pub fn parse_tables_tsv(text: &str) -> Result<Vec<CountTable>> {
    let mut tables = Vec::new();
    let mut meta: BTreeMap<String, String> = BTreeMap::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((i, raw)) = lines.next() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.trim().splitn(2, '\t');
            if let (Some(k), Some(v)) = (parts.next(), parts.next()) {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let header: Vec<&str> = line.split('\t').collect();
        if header.first() != Some(&"class") {
            return Err(PrfError::Parse { line: i + 1, message: "expected a 'class' header".into() });
        }
        let layout = match &header[1..] {
            ["K", "V"] => Layout::Dprs,
            ["K", "O", "H"] => Layout::Dohrs,
            _ => {
                return Err(PrfError::Parse { line: i + 1, message: "header must be class/K/V or class/K/O/H".into() })
            }
        };
        if let Some(declared) = meta.get("layout") {
            if declared.parse::<Layout>()? != layout {
                return Err(PrfError::Parse { line: i + 1, message: "layout metadata disagrees with header".into() });
            }
        }
        let size = |key: &str| -> Result<usize> {
            meta.get(key)
                .ok_or_else(|| PrfError::Parse { line: i + 1, message: format!("missing '# {key}' metadata") })?
                .parse()
                .map_err(|_| PrfError::Parse { line: i + 1, message: format!("bad '{key}' metadata") })
        };
        let (m, n) = (size("m")?, size("n")?);
        let observed = meta.get("kind").map(|k| k != "expected").unwrap_or(true);
        let mut values = Vec::new();
        for class in CLASSES {
            let (j, row) = lines
                .next()
                .ok_or_else(|| PrfError::Parse { line: i + 1, message: format!("missing '{class}' row") })?;
            let fields: Vec<&str> = row.trim_end_matches('\r').split('\t').collect();
            if fields.len() != header.len() || fields[0] != class {
                return Err(PrfError::Parse { line: j + 1, message: format!("expected '{class}' row") });
            }
            for f in &fields[1..] {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| PrfError::Parse { line: j + 1, message: format!("bad number '{f}'") })?;
                values.push(v);
            }
        }
        let mut table = CountTable::build(layout, m, n, values, observed)
            .map_err(|e| PrfError::Parse { line: i + 1, message: e.to_string() })?;
        table.locus = meta.get("locus").cloned();
        tables.push(table);
        meta.clear();
    }
    Ok(tables)
}

/// Parse tables from JSON: a single table or an array of tables.
pub fn parse_tables_json(text: &str) -> Result<Vec<CountTable>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let tables: Vec<CountTable> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    for t in &tables {
        t.validate()?;
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let t = CountTable::observed(Layout::Dohrs, 5, 7, &[3, 1, 0, 2, 4, 1]).unwrap().with_locus("adh");
        let text = t.to_tsv();
        assert!(text.contains("class\tK\tO\tH\nsilent\t3\t1\t0\nreplacement\t2\t4\t1\n"));
        assert_eq!(CountTable::from_tsv(&text).unwrap(), t);
    }

    #[test]
    fn json_round_trip_keeps_cell_order() {
        let t = CountTable::expected(Layout::Dprs, 2, 3, &[0.5, 1.25, 2.0, 0.0]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains(r#""counts":{"K_s":0.5,"V_s":1.25,"K_r":2.0,"V_r":0.0}"#));
        assert_eq!(parse_tables_json(&s).unwrap(), vec![t]);
    }

    #[test]
    fn collapse_adds_shared_polymorphisms() {
        let t = CountTable::observed(Layout::Dohrs, 5, 5, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(t.to_dprs(false).values(), vec![1.0, 5.0, 4.0, 11.0]);
        assert_eq!(t.to_dprs(true).values(), vec![1.0, 8.0, 4.0, 17.0]);
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(CountTable::expected(Layout::Dprs, 2, 2, &[1.0, -1.0, 0.0, 0.0]).is_err());
        assert!(CountTable::observed(Layout::Dprs, 0, 2, &[1, 1, 0, 0]).is_err());
        assert!(CountTable::from_tsv("class\tK\tV\nsilent\t1\t2\nreplacement\t3\t4\n").is_err());
    }

    #[test]
    fn several_blocks() {
        let a = CountTable::observed(Layout::Dprs, 4, 4, &[1, 2, 3, 4]).unwrap();
        let b = CountTable::observed(Layout::Dprs, 6, 4, &[0, 0, 1, 0]).unwrap();
        let text = format!("{}\n{}", a.to_tsv(), b.to_tsv());
        assert_eq!(parse_tables_tsv(&text).unwrap(), vec![a, b]);
    }
}
