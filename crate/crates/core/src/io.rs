//! File formats: `data.csv`, `sequences.json` and complex-matrix CSV.
//!
//! Reals are written as `%.17g`. Every file carries the tool version and the
//! config hash it was produced from.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{TOOL, VERSION};
use crate::error::{Error, Result};
use crate::simulator::{Cell, DataMatrix, SequenceTable};
use crate::{CMatrix, C64};

/// Tolerance when checking a stored product against its recomputed value.
const PRODUCT_TOL: f64 = 1e-9;

/// C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    fmt_g(x, 17)
}

/// C's `%.<prec>g` (trailing zeros removed, two-digit minimum exponent).
pub fn fmt_g(x: f64, prec: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = prec.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `re+imj` with `%.17g` parts.
pub fn fmt_complex(z: C64) -> String {
    let im = fmt_g17(z.im);
    if im.starts_with('-') {
        format!("{}{}j", fmt_g17(z.re), im)
    } else {
        format!("{}+{}j", fmt_g17(z.re), im)
    }
}

/// Parses `a`, `bj`, `a+bj`, `a-bj` (also with `i`, spaces, and `j` alone).
pub fn parse_complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Format(format!("cannot parse complex number {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) else {
        return t.parse::<f64>().map(|r| C64::new(r, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

/// Reads a complex matrix: one row per line, entries `re+imj` separated by commas.
pub fn parse_complex_matrix(text: &str) -> Result<CMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Format(format!("matrix csv: {e}")))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(parse_complex).collect::<Result<_>>()?);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Format("matrix csv is empty".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Format("matrix csv rows have different lengths".into()));
    }
    Ok(CMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}

pub fn read_complex_matrix(path: &Path) -> Result<CMatrix> {
    parse_complex_matrix(&read(path)?)
}

pub fn complex_matrix_csv(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_complex(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Where a file came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_sha256: Option<String>,
}

impl Provenance {
    pub fn current(config_sha256: Option<String>) -> Self {
        Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_sha256,
        }
    }

    fn comment_line(&self) -> String {
        format!(
            "# tool={} version={} config_sha256={}",
            self.tool,
            self.version,
            self.config_sha256.as_deref().unwrap_or("none")
        )
    }

    fn from_comment(line: &str) -> Self {
        let mut p = Provenance::default();
        for tok in line.trim_start_matches('#').split_whitespace() {
            match tok.split_once('=') {
                Some(("tool", v)) => p.tool = v.into(),
                Some(("version", v)) => p.version = v.into(),
                Some(("config_sha256", v)) if v != "none" => p.config_sha256 = Some(v.into()),
                _ => {}
            }
        }
        p
    }
}

/// `data.csv`: a provenance comment, a `depth,s0,…` header and one row per depth.
pub fn data_csv(data: &DataMatrix, prov: &Provenance) -> String {
    let (_, k) = data.shape();
    let mut out = String::new();
    let _ = writeln!(out, "{} shots={}", prov.comment_line(), data.shots);
    out.push_str("depth");
    for s in 0..k {
        let _ = write!(out, ",s{s}");
    }
    out.push('\n');
    for (g, row) in data.depths.iter().zip(&data.values) {
        let _ = write!(out, "{g}");
        for v in row {
            out.push(',');
            out.push_str(&fmt_g17(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_data_csv(text: &str) -> Result<(DataMatrix, Provenance)> {
    let first = text.lines().next().unwrap_or("");
    let (prov, shots) = if first.starts_with('#') {
        let shots = first
            .split_whitespace()
            .find_map(|t| t.strip_prefix("shots="))
            .map(|v| v.parse::<u64>())
            .transpose()
            .map_err(|e| Error::Format(format!("data csv shots field: {e}")))?
            .unwrap_or(0);
        (Provenance::from_comment(first), shots)
    } else {
        (Provenance::default(), 0)
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("data csv header: {e}")))?
        .clone();
    if headers.get(0) != Some("depth") || headers.len() < 2 {
        return Err(Error::Format("data csv must start with a `depth,s0,...` header".into()));
    }
    let k = headers.len() - 1;
    let mut depths = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("data csv row {line}: {e}")))?;
        if rec.len() != k + 1 {
            return Err(Error::Format(format!("data csv row {line} has {} fields", rec.len())));
        }
        let g: u32 = rec[0]
            .parse()
            .map_err(|_| Error::Format(format!("bad depth {:?}", &rec[0])))?;
        let row = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad value {f:?} at depth {g}")))
            })
            .collect::<Result<Vec<_>>>()?;
        depths.push(g);
        values.push(row);
    }
    if depths.is_empty() {
        return Err(Error::Format("data csv has no rows".into()));
    }
    Ok((DataMatrix { depths, values, shots }, prov))
}

pub fn write_data_csv(path: &Path, data: &DataMatrix, prov: &Provenance) -> Result<()> {
    write(path, &data_csv(data, prov))
}

pub fn read_data_csv(path: &Path) -> Result<(DataMatrix, Provenance)> {
    parse_data_csv(&read(path)?)
}

/// Rows of `[re, im]` pairs.
type JsonMatrix = Vec<Vec<[f64; 2]>>;

fn to_json_matrix(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn from_json_matrix(rows: &JsonMatrix, n: usize) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Format(format!("expected a {n}x{n} matrix")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsonCell {
    gates: Vec<JsonMatrix>,
    product: JsonMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SequencesFile {
    #[serde(flatten)]
    provenance: Provenance,
    modes: usize,
    depths: Vec<u32>,
    sequences: u32,
    /// `[depth index][s]`.
    cells: Vec<Vec<JsonCell>>,
}

pub fn sequences_json(table: &SequenceTable, prov: &Provenance) -> Result<String> {
    let file = SequencesFile {
        provenance: prov.clone(),
        modes: table.modes,
        depths: table.depths.clone(),
        sequences: table.sequences,
        cells: table
            .cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| JsonCell {
                        gates: c.gates.iter().map(to_json_matrix).collect(),
                        product: to_json_matrix(&c.product),
                    })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string(&file).map_err(|e| Error::Format(format!("sequences json: {e}")))
}

/// Parses `sequences.json`. Products are recomputed from the gates and must
/// agree with the stored ones; the stored values are kept so filters are
/// bit-identical to the run that wrote the file.
pub fn parse_sequences_json(text: &str) -> Result<(SequenceTable, Provenance)> {
    let file: SequencesFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("sequences json: {e}")))?;
    let n = file.modes;
    let gates = file
        .cells
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| c.gates.iter().map(|g| from_json_matrix(g, n)).collect())
                .collect()
        })
        .collect::<Result<Vec<Vec<Vec<CMatrix>>>>>()?;
    let mut table = SequenceTable::from_gates(n, file.depths, gates)?;
    if table.sequences != file.sequences {
        return Err(Error::Format(format!(
            "sequences json declares K = {} but holds {}",
            file.sequences, table.sequences
        )));
    }
    for (row, jrow) in table.cells.iter_mut().zip(&file.cells) {
        for (cell, jcell) in row.iter_mut().zip(jrow) {
            let stored = from_json_matrix(&jcell.product, n)?;
            if (&stored - &cell.product).norm() > PRODUCT_TOL {
                return Err(Error::Format("stored sequence product disagrees with its gates".into()));
            }
            *cell = Cell {
                gates: std::mem::take(&mut cell.gates),
                product: stored,
            };
        }
    }
    Ok((table, file.provenance))
}

pub fn write_sequences_json(path: &Path, table: &SequenceTable, prov: &Provenance) -> Result<()> {
    write(path, &sequences_json(table, prov)?)
}

pub fn read_sequences_json(path: &Path) -> Result<(SequenceTable, Provenance)> {
    parse_sequences_json(&read(path)?)
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{build_sequences, ExperimentConfig};

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (0.95, "0.94999999999999996"),
            (123456.0, "123456"),
            (1e-5, "1.0000000000000001e-05"),
            (2.5e-7, "2.4999999999999999e-07"),
            (1e17, "1e+17"),
            (-0.5, "-0.5"),
            (0.0, "0"),
            (1.0 / 3.0, "0.33333333333333331"),
            (12345678901234567.0, "12345678901234568"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g17(x), want, "{x}");
        }
        assert_eq!(fmt_g(0.0001, 6), "0.0001");
        assert_eq!(fmt_g(1234567.0, 6), "1.23457e+06");
    }

    #[test]
    fn g17_roundtrips() {
        for x in [0.1, 0.7, 1.0 / 7.0, 1e-300, 6.02e23, -3.3e-9, f64::MIN_POSITIVE] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn complex_parsing() {
        let c = |re, im| C64::new(re, im);
        assert_eq!(parse_complex("1+2j").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex(" -0.5 - 1.5j ").unwrap(), c(-0.5, -1.5));
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("-2j").unwrap(), c(0.0, -2.0));
        assert_eq!(parse_complex("1e-3-2e+2i").unwrap(), c(1e-3, -200.0));
        assert_eq!(parse_complex("1-j").unwrap(), c(1.0, -1.0));
        assert_eq!(parse_complex("j").unwrap(), c(0.0, 1.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
        let z = c(0.1, -1.0 / 3.0);
        assert_eq!(parse_complex(&fmt_complex(z)).unwrap(), z);
    }

    #[test]
    fn matrix_csv_roundtrip() {
        let m = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 * 0.1, -(j as f64) / 7.0));
        let text = complex_matrix_csv(&m);
        assert_eq!(parse_complex_matrix(&text).unwrap(), m);
        assert!(parse_complex_matrix("1,2\n3").is_err());
        let with_comment = format!("# a comment\n{text}");
        assert_eq!(parse_complex_matrix(&with_comment).unwrap(), m);
    }

    #[test]
    fn data_csv_roundtrip() {
        let data = DataMatrix {
            depths: vec![1, 2, 5],
            values: vec![vec![0.1, 0.2], vec![1.0 / 3.0, 0.0], vec![1e-9, 0.999]],
            shots: 100,
        };
        let prov = Provenance::current(Some("abc".into()));
        let text = data_csv(&data, &prov);
        assert!(text.starts_with("# tool=immrb version="));
        assert!(text.contains("\ndepth,s0,s1\n"));
        let (back, p) = parse_data_csv(&text).unwrap();
        assert_eq!(back, data);
        assert_eq!(p, prov);
        assert_eq!(data_csv(&back, &p), text);
        assert!(parse_data_csv("depth,s0\n1,x\n").is_err());
        assert!(parse_data_csv("g,s0\n1,1\n").is_err());
    }

    #[test]
    fn sequences_json_roundtrip() {
        let mut c = ExperimentConfig::new(1, 3, 3, 4);
        c.seed = 5;
        let table = build_sequences(&c).unwrap();
        let prov = Provenance::current(None);
        let text = sequences_json(&table, &prov).unwrap();
        let (back, p) = parse_sequences_json(&text).unwrap();
        assert_eq!(back, table);
        assert_eq!(p, prov);
        let tampered = text.replacen("\"modes\":3", "\"modes\":2", 1);
        assert!(parse_sequences_json(&tampered).is_err());
    }
}
