//! CSV tables with a `# key,value` preamble and 17-significant-digit floats.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::asymptotics::LogSlopeFit;
use crate::error::Result;
use crate::evolution::{DriftReport, SimState};
use crate::kinetics::{Equilibrium, StableManifold};
use crate::stationary::{GammaScan, LayerProfile, LimitRow, UniquenessReport};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(x) => f.write_str(&fmt_f64(*x)),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// `{:.16e}`; non-finite values spelled `nan`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.meta.push((key.to_string(), value.into().to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[j] {
                    Cell::Num(x) => *x,
                    Cell::Int(i) => *i as f64,
                    Cell::Text(s) => s.parse().unwrap_or(f64::NAN),
                })
                .collect(),
        )
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k},{v}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns)?;
        for r in &self.rows {
            csv.write_record(r.iter().map(|c| c.to_string()))?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    /// Parses what [`Table::write_to`] produced.
    pub fn read_str(s: &str) -> Result<Self> {
        let mut meta = Vec::new();
        let mut body = String::new();
        for line in s.lines() {
            match line.strip_prefix("# ") {
                Some(kv) if body.is_empty() => {
                    let (k, v) = kv.split_once(',').unwrap_or((kv, ""));
                    meta.push((k.to_string(), v.to_string()));
                }
                _ => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let columns = rdr.headers()?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| {
                r.map(|r| {
                    r.iter()
                        .map(|c| match c.parse::<f64>() {
                            Ok(x) if c.contains(['.', 'e', 'n', 'i']) => Cell::Num(x),
                            _ => c.parse::<i64>().map(Cell::Int).unwrap_or_else(|_| Cell::Text(c.to_string())),
                        })
                        .collect()
                })
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { meta, columns, rows })
    }
}

pub fn profile_table(p: &LayerProfile) -> Table {
    let h = &p.header;
    let mut t = Table::new(&["x", "u", "v", "branch_id"])
        .meta("beta", h.beta)
        .meta("m", h.m)
        .meta("k", h.k)
        .meta("p", h.p)
        .meta("M", h.m_half)
        .meta("N", h.n_half)
        .meta("gamma", h.gamma)
        .meta("l", h.l)
        .meta("mode", h.mode)
        .meta("orientation", format!("{:?}", h.orientation).to_lowercase());
    for i in 0..p.len() {
        t.push(vec![p.x[i].into(), p.u[i].into(), p.v[i].into(), Cell::Int(p.branch[i].id() as i64)]);
    }
    t
}

pub fn limit_table(rows: &[LimitRow]) -> Table {
    let mut t = Table::new(&["m", "gap", "gamma", "l", "k", "p", "sup_u_left", "inf_u_right"]);
    for r in rows {
        t.push(vec![
            r.m.into(),
            r.gap.into(),
            r.gamma.into(),
            r.l.into(),
            r.k.into(),
            r.p.into(),
            r.sup_u_left.into(),
            r.inf_u_right.into(),
        ]);
    }
    t
}

pub fn gamma_scan_table(scan: &GammaScan) -> Table {
    let mut t = Table::new(&["s", "m", "gap", "gamma"]).meta("points_per_decade", scan.points_per_decade);
    for s in &scan.samples {
        t.push(vec![s.s.into(), s.m.into(), s.gap.into(), s.gamma.into()]);
    }
    t
}

pub fn uniqueness_table(r: &UniquenessReport) -> Table {
    let mut t = Table::new(&["k", "p", "M", "N", "T", "dpdk", "dpdk_fd"])
        .meta("beta", r.beta)
        .meta("beta_window_lo", r.beta_window.0)
        .meta("beta_window_hi", r.beta_window.1)
        .meta("monotone", r.monotone)
        .meta("gamma_star", r.gamma_star);
    for s in &r.samples {
        t.push(vec![
            s.k.into(),
            s.p.into(),
            s.m_half.into(),
            s.n_half.into(),
            s.t.into(),
            s.dpdk.into(),
            s.dpdk_fd.into(),
        ]);
    }
    t
}

pub fn fit_table(fit: &LogSlopeFit) -> Table {
    let mut t = Table::new(&["a", "I", "log_inv_a", "residual"])
        .meta("slope", fit.slope)
        .meta("intercept", fit.intercept)
        .meta("law_slope", fit.law_slope)
        .meta("band_lo", fit.band.0)
        .meta("band_hi", fit.band.1);
    for r in &fit.rows {
        t.push(vec![r.a.into(), r.value.into(), r.log_inv_a.into(), r.residual.into()]);
    }
    t
}

pub fn equilibria_table(eq: &[Equilibrium]) -> Table {
    let mut t = Table::new(&["u", "v", "kind"]);
    for e in eq {
        t.push(vec![e.u.into(), e.v.into(), format!("{:?}", e.kind).to_lowercase().into()]);
    }
    t
}

pub fn manifold_table(m: &StableManifold) -> Table {
    let mut t = Table::new(&["u", "v"])
        .meta("U_s", m.u_s)
        .meta("V_s", m.v_s)
        .meta("drift", m.drift);
    for &(u, v) in &m.points {
        t.push(vec![u.into(), v.into()]);
    }
    t
}

/// One row per cell with every field; the time goes in the preamble.
pub fn snapshot_wide(s: &SimState) -> Table {
    let names = s.kind.field_names();
    let mut cols = vec!["x"];
    cols.extend_from_slice(names);
    let mut t = Table::new(&cols)
        .meta("time", s.time)
        .meta("dt", s.meta.dt)
        .meta("steps", s.meta.steps);
    for (i, x) in s.grid.nodes().into_iter().enumerate() {
        let mut row = vec![x.into()];
        row.extend(s.fields.iter().map(|f| Cell::Num(f[i])));
        t.push(row);
    }
    t
}

/// One `(x, value)` table per field.
pub fn snapshot_per_field(s: &SimState) -> Vec<(&'static str, Table)> {
    s.kind
        .field_names()
        .iter()
        .enumerate()
        .map(|(j, &name)| {
            let mut t = Table::new(&["x", name]).meta("time", s.time);
            for (i, x) in s.grid.nodes().into_iter().enumerate() {
                t.push(vec![x.into(), s.fields[j][i].into()]);
            }
            (name, t)
        })
        .collect()
}

/// Filename-safe time stamp, e.g. `t0001.250000`.
pub fn time_tag(t: f64) -> String {
    format!("t{t:011.6}")
}

pub fn drift_table(r: &DriftReport) -> Table {
    let mut t = Table::new(&["time", "sup_drift_u", "jump_proxy", "v_jump"])
        .meta("amplitude", r.amplitude)
        .meta("seed", r.seed as usize);
    for row in &r.rows {
        t.push(vec![row.time.into(), row.sup_drift_u.into(), row.jump_proxy.into(), row.v_jump.into()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        let x = 1.0 / 3.0;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn round_trip() {
        let mut t = Table::new(&["a", "b", "c"]).meta("beta", 3.5).meta("mode", 2usize);
        t.push(vec![0.25.into(), Cell::Int(3), "x,y".into()]);
        t.push(vec![f64::INFINITY.into(), Cell::Int(-1), "z".into()]);
        let s = t.to_csv_string();
        assert!(s.starts_with("# beta,3.5000000000000000e0\n# mode,2\na,b,c\n"));
        assert!(s.contains("\"x,y\""));
        let back = Table::read_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("a").unwrap()[0], 0.25);
    }

    #[test]
    fn time_tags_sort_lexically() {
        let tags: Vec<String> = [0.5, 2.0, 10.0, 150.25].iter().map(|&t| time_tag(t)).collect();
        let mut sorted = tags.clone();
        sorted.sort();
        assert_eq!(tags, sorted);
        assert!(tags.iter().all(|t| !t.contains(['/', ' ', ':'])));
    }
}
