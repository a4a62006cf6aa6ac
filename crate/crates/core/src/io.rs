//! Text and binary export formats.
//!
//! Tables render to CSV (comma separated, `#`-prefixed `key=value` header
//! lines) or JSON (`{"meta": {...}, "rows": [...]}`). Two-dimensional fields
//! and joint distributions also have a little-endian binary dump whose
//! header carries the grid and the same metadata.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::classical::{BinStat, ClassicalEnsemble};
use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::measurement::{ConvergenceReport, JointDistribution};
use crate::quasiprob::{FieldKind, QuasiprobField};
use crate::state::{Basis, WaveFunction};
use crate::weak::WeakValueProfile;

/// Ordered `key=value` metadata.
pub type Meta = Vec<(String, String)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
}

impl Cell {
    fn csv(self) -> String {
        match self {
            Cell::Num(v) => format_float(v),
            Cell::Int(v) => v.to_string(),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(v)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Cell::Int(v) => Value::from(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

/// Shortest representation that round-trips; `nan` for missing values.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    meta: Meta,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidParameter(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Metadata entries are emitted in insertion order.
    pub fn with_meta(mut self, meta: &[(String, String)]) -> Self {
        self.meta.extend_from_slice(meta);
        self
    }

    pub fn add_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.csv()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let meta: Map<String, Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.clone(), v.json()))
                        .collect(),
                )
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("meta".into(), Value::Object(meta));
        doc.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
        s.push('\n');
        s
    }
}

/// `q, re_cw, im_cw, density, valid`; masked values are `nan`.
pub fn profile_table(profile: &WeakValueProfile) -> Table {
    let mut t = Table::new(&["q", "re_cw", "im_cw", "density", "valid"]);
    let grid = profile.grid();
    for k in 0..grid.len() {
        let v = profile.values()[k];
        t.rows.push(vec![
            grid.q(k).into(),
            v.re.into(),
            v.im.into(),
            profile.postselection_density()[k].into(),
            profile.valid_mask()[k].into(),
        ]);
    }
    t
}

/// `q, p, re, im`, row-major in `q` then `p`.
pub fn field_table(field: &QuasiprobField) -> Table {
    let mut t = Table::new(&["q", "p", "re", "im"]);
    let grid = field.grid();
    for k in 0..grid.len() {
        for j in 0..grid.len() {
            let v = field.get(k, j);
            t.rows.push(vec![
                grid.q(k).into(),
                grid.p(j).into(),
                v.re.into(),
                v.im.into(),
            ]);
        }
    }
    t
}

/// `q, Q, density` for each requested `q` (nearest grid slice).
pub fn joint_slices_table(joint: &JointDistribution, qs: &[f64]) -> Table {
    let mut t = Table::new(&["q", "Q", "density"]);
    let object = joint.object_grid();
    let pointer = joint.pointer_grid();
    for &q in qs {
        let k = object.nearest_q_index(q);
        for l in 0..pointer.len() {
            t.rows.push(vec![
                object.q(k).into(),
                pointer.q(l).into(),
                joint.get(k, l).into(),
            ]);
        }
    }
    t
}

/// `epsilon, max_error, ratio_to_prev`.
pub fn convergence_table(report: &ConvergenceReport) -> Table {
    let mut t = Table::new(&["epsilon", "max_error", "ratio_to_prev"]);
    for row in &report.rows {
        t.rows.push(vec![
            row.epsilon.into(),
            row.max_error.into(),
            row.ratio_to_prev.unwrap_or(f64::NAN).into(),
        ]);
    }
    t
}

/// `q, p, Q, P, weight`.
pub fn ensemble_table(ensemble: &ClassicalEnsemble) -> Table {
    let mut t = Table::new(&["q", "p", "Q", "P", "weight"]);
    for (x, w) in ensemble.particles().iter().zip(ensemble.weights()) {
        t.rows.push(vec![
            x.q.into(),
            x.p.into(),
            x.pointer_q.into(),
            x.pointer_p.into(),
            (*w).into(),
        ]);
    }
    t
}

/// `q_center, mean_Q, stderr, count, eps_times_cw`.
pub fn bin_table(stats: &[BinStat]) -> Table {
    let mut t = Table::new(&["q_center", "mean_Q", "stderr", "count", "eps_times_cw"]);
    for s in stats {
        t.rows.push(vec![
            s.q_center.into(),
            s.mean_pointer_q.into(),
            s.stderr.into(),
            s.count.into(),
            s.eps_times_cw.unwrap_or(f64::NAN).into(),
        ]);
    }
    t
}

/// `# basis=… q_min=… q_max=… n=…` followed by `index,re,im` rows.
pub fn write_state(state: &WaveFunction) -> String {
    let grid = state.grid();
    let mut out = format!(
        "# basis={} q_min={} q_max={} n={}\n",
        state.basis().name(),
        format_float(grid.q_min()),
        format_float(grid.q_max()),
        grid.len()
    );
    for (i, a) in state.amplitudes().iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", format_float(a.re), format_float(a.im));
    }
    out
}

pub fn read_state(text: &str) -> Result<WaveFunction> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty state file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("missing `#` header line".into()))?;
    let (mut basis, mut q_min, mut q_max, mut n) = (None, None, None, None);
    for token in header.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("malformed header token `{token}`")))?;
        match key {
            "basis" => {
                basis = Some(match value {
                    "position" => Basis::Position,
                    "momentum" => Basis::Momentum,
                    other => return Err(Error::Parse(format!("unknown basis `{other}`"))),
                })
            }
            "q_min" => q_min = Some(parse_f64(value)?),
            "q_max" => q_max = Some(parse_f64(value)?),
            "n" => {
                n = Some(
                    value
                        .parse::<usize>()
                        .map_err(|e| Error::Parse(format!("n: {e}")))?,
                )
            }
            other => return Err(Error::Parse(format!("unknown header key `{other}`"))),
        }
    }
    let missing = |name: &str| Error::Parse(format!("header lacks `{name}`"));
    let grid = QuadratureGrid::new(
        q_min.ok_or_else(|| missing("q_min"))?,
        q_max.ok_or_else(|| missing("q_max"))?,
        n.ok_or_else(|| missing("n"))?,
    )?;
    let mut amplitudes = vec![None; grid.len()];
    for line in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [index, re, im] = fields[..] else {
            return Err(Error::Parse(format!(
                "expected `index,re,im`, got `{line}`"
            )));
        };
        let index: usize = index
            .parse()
            .map_err(|e| Error::Parse(format!("index `{index}`: {e}")))?;
        let slot = amplitudes
            .get_mut(index)
            .ok_or_else(|| Error::Parse(format!("index {index} outside grid")))?;
        if slot.is_some() {
            return Err(Error::Parse(format!("duplicate index {index}")));
        }
        *slot = Some(Complex64::new(parse_f64(re)?, parse_f64(im)?));
    }
    let amplitudes = amplitudes
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| Error::Parse(format!("missing index {i}"))))
        .collect::<Result<Vec<_>>>()?;
    WaveFunction::from_amplitudes(grid, amplitudes, basis.ok_or_else(|| missing("basis"))?)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Parse(format!("number `{s}`: {e}")))
}

const FIELD_MAGIC: &[u8; 8] = b"WKVFLD01";
const JOINT_MAGIC: &[u8; 8] = b"WKVJNT01";

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn grid(&mut self, g: &QuadratureGrid) {
        self.f64(g.q_min());
        self.f64(g.q_max());
        self.u64(g.len() as u64);
    }
    fn meta(&mut self, meta: &[(String, String)]) {
        let text: String = meta.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        self.u64(text.len() as u64);
        self.0.extend_from_slice(text.as_bytes());
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(Error::Parse("truncated binary dump".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("four bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("eight bytes"),
        ))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("eight bytes"),
        ))
    }
    fn grid(&mut self) -> Result<QuadratureGrid> {
        let q_min = self.f64()?;
        let q_max = self.f64()?;
        let n =
            usize::try_from(self.u64()?).map_err(|_| Error::Parse("grid size overflow".into()))?;
        QuadratureGrid::new(q_min, q_max, n)
    }
    fn meta(&mut self) -> Result<Meta> {
        let len = usize::try_from(self.u64()?)
            .map_err(|_| Error::Parse("metadata length overflow".into()))?;
        let text = std::str::from_utf8(self.take(len)?)
            .map_err(|e| Error::Parse(format!("metadata: {e}")))?;
        text.lines()
            .map(|l| {
                l.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Parse(format!("metadata line `{l}`")))
            })
            .collect()
    }
    fn magic(&mut self, magic: &[u8; 8]) -> Result<()> {
        if self.take(8)? != magic {
            return Err(Error::Parse("bad magic".into()));
        }
        Ok(())
    }
    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Parse(format!("{} trailing bytes", self.0.len())))
        }
    }
}

/// Layout: magic `WKVFLD01`; field kind `u32`; component count `u32` (1 for
/// real kinds, 2 otherwise); grid as `q_min f64, q_max f64, n u64`;
/// metadata length `u64` and UTF-8 `key=value` lines; then `n²` real parts
/// followed by `n²` imaginary parts when present, row-major in `q`.
pub fn write_field_binary(field: &QuasiprobField, meta: &[(String, String)]) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(64 + 16 * field.values().len()));
    w.0.extend_from_slice(FIELD_MAGIC);
    let kind = field.kind();
    w.u32(kind.code());
    w.u32(if kind.is_real() { 1 } else { 2 });
    w.grid(field.grid());
    w.meta(meta);
    for v in field.values() {
        w.f64(v.re);
    }
    if !kind.is_real() {
        for v in field.values() {
            w.f64(v.im);
        }
    }
    w.0
}

pub fn read_field_binary(bytes: &[u8]) -> Result<(QuasiprobField, Meta)> {
    let mut r = Reader(bytes);
    r.magic(FIELD_MAGIC)?;
    let kind =
        FieldKind::from_code(r.u32()?).ok_or_else(|| Error::Parse("unknown field kind".into()))?;
    let components = r.u32()?;
    if components != if kind.is_real() { 1 } else { 2 } {
        return Err(Error::Parse(format!(
            "{components} components for a {} field",
            kind.name()
        )));
    }
    let grid = r.grid()?;
    let meta = r.meta()?;
    let n = grid.len() * grid.len();
    let re = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let im = if components == 2 {
        (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?
    } else {
        vec![0.0; n]
    };
    r.finish()?;
    let values = re
        .into_iter()
        .zip(im)
        .map(|(a, b)| Complex64::new(a, b))
        .collect();
    Ok((QuasiprobField::from_values(grid, values, kind)?, meta))
}

/// Layout: magic `WKVJNT01`; object grid; pointer grid; `ε`, pre-coupling
/// pointer mean and neglected tail mass as `f64`; metadata; then the
/// density row-major in `q`.
pub fn write_joint_binary(joint: &JointDistribution, meta: &[(String, String)]) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(128 + 8 * joint.values().len()));
    w.0.extend_from_slice(JOINT_MAGIC);
    w.grid(joint.object_grid());
    w.grid(joint.pointer_grid());
    w.f64(joint.epsilon());
    w.f64(joint.pointer_mean());
    w.f64(joint.neglected_tail_mass());
    w.meta(meta);
    for v in joint.values() {
        w.f64(*v);
    }
    w.0
}

pub fn read_joint_binary(bytes: &[u8]) -> Result<(JointDistribution, Meta)> {
    let mut r = Reader(bytes);
    r.magic(JOINT_MAGIC)?;
    let object = r.grid()?;
    let pointer = r.grid()?;
    let epsilon = r.f64()?;
    let mean = r.f64()?;
    let tail = r.f64()?;
    let meta = r.meta()?;
    let values = (0..object.len() * pointer.len())
        .map(|_| r.f64())
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok((
        JointDistribution::from_raw(object, pointer, values, epsilon, mean, tail)?,
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{evolve_joint, PointerState};
    use crate::observable::ObservableSpec;
    use crate::quasiprob::{margenau_hill, standard_ordered};
    use crate::state::{coherent_state, vacuum, CoherentAmplitude, MixedState};
    use crate::weak::weak_value;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::symmetric(8.0, 64).unwrap()
    }

    #[test]
    fn state_round_trip() {
        let psi = coherent_state(CoherentAmplitude::from_quadratures(1.0, -0.5), &grid()).unwrap();
        for state in [psi.clone(), psi.to_momentum().unwrap()] {
            let text = write_state(&state);
            assert!(text.starts_with(&format!(
                "# basis={} q_min=-8.0 q_max=8.0 n=64\n",
                state.basis().name()
            )));
            assert_eq!(read_state(&text).unwrap(), state);
        }
    }

    #[test]
    fn state_parse_errors() {
        let good = write_state(&vacuum(&grid()).unwrap());
        assert!(matches!(read_state(""), Err(Error::Parse(_))));
        assert!(matches!(
            read_state(&good.replace("basis=position", "basis=spin")),
            Err(Error::Parse(_))
        ));
        let truncated: String = good.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_state(&truncated), Err(Error::Parse(_))));
        assert!(matches!(
            read_state(&good.replace("\n3,", "\n2,")),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_state(&good.replace("q_min=-8.0", "q_min=9.0")),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn profile_csv_and_json() {
        let state = MixedState::pure(vacuum(&grid()).unwrap());
        let profile = weak_value(&ObservableSpec::PSquared, &state).unwrap();
        let mut t = profile_table(&profile);
        t.add_meta("command", "weakvalue");
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# command=weakvalue"));
        assert_eq!(lines.next(), Some("q,re_cw,im_cw,density,valid"));
        assert_eq!(csv.lines().count(), 2 + 64);
        let row: Vec<&str> = csv.lines().nth(2 + 40).unwrap().split(',').collect();
        assert_eq!(row[0], "2.0");
        assert!((row[1].parse::<f64>().unwrap() + 3.0).abs() < 1e-6);
        let json: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(json["meta"]["command"], "weakvalue");
        assert_eq!(json["rows"].as_array().unwrap().len(), 64);
        assert_eq!(json["rows"][40]["q"], 2.0);
        // masked rows serialize as null
        assert!(json["rows"][0]["re_cw"].is_null());
    }

    #[test]
    fn field_binary_round_trip() {
        let state = MixedState::pure(
            coherent_state(CoherentAmplitude::from_quadratures(0.5, 0.5), &grid()).unwrap(),
        );
        let meta = vec![("command".to_string(), "fig2".to_string())];
        for field in [standard_ordered(&state), margenau_hill(&state)] {
            let bytes = write_field_binary(&field, &meta);
            let (back, m) = read_field_binary(&bytes).unwrap();
            assert_eq!(back, field);
            assert_eq!(m, meta);
            assert!(read_field_binary(&bytes[..bytes.len() - 1]).is_err());
        }
        let csv = field_table(&margenau_hill(&state)).to_csv();
        assert_eq!(csv.lines().count(), 1 + 64 * 64);
        assert!(csv.starts_with("q,p,re,im\n-8.0,-"));
    }

    #[test]
    fn joint_binary_round_trip() {
        let object = MixedState::pure(vacuum(&grid()).unwrap());
        let pointer =
            PointerState::gaussian(1.0, &QuadratureGrid::symmetric(12.0, 64).unwrap()).unwrap();
        let joint = evolve_joint(&object, &pointer, &ObservableSpec::PSquared, 0.01).unwrap();
        let bytes = write_joint_binary(&joint, &[]);
        let (back, meta) = read_joint_binary(&bytes).unwrap();
        assert_eq!(back, joint);
        assert!(meta.is_empty());
        let slices = joint_slices_table(&joint, &[0.0, 2.0]);
        assert_eq!(slices.rows().len(), 128);
        assert!(read_field_binary(&bytes).is_err());
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(-3.0), "-3.0");
        assert_eq!(format_float(1e-300), "1e-300");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!("1e-300".parse::<f64>().unwrap(), 1e-300);
    }
}
