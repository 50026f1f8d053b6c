//! Summary and answer tables: bound formulas over a grid of graphs, and the
//! downloaded bits of small schemes run with [`FixedSource`].

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bounds::{bound_report, tightness_of, BoundEntry, BoundKind};
use crate::error::{Error, Result};
use crate::graph::{FileId, GraphSpec};
use crate::protocol::{Coordinate, LinearForm};
use crate::random::FixedSource;
use crate::schemes::{build_scheme, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TableName {
    /// Bounds for simple graphs.
    TableI,
    /// Bounds for multigraphs.
    TableII,
    /// Answers of the complete-graph scheme on three servers.
    TableIII,
    /// Answers of the lifted path scheme on three servers, two copies.
    TableIV,
}

impl TableName {
    pub const ALL: [TableName; 4] = [TableName::TableI, TableName::TableII, TableName::TableIII, TableName::TableIV];
}

impl fmt::Display for TableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableName::TableI => "tableI",
            TableName::TableII => "tableII",
            TableName::TableIII => "tableIII",
            TableName::TableIV => "tableIV",
        })
    }
}

impl FromStr for TableName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("table").unwrap_or(&key);
        match key {
            "i" | "1" => Ok(TableName::TableI),
            "ii" | "2" => Ok(TableName::TableII),
            "iii" | "3" => Ok(TableName::TableIII),
            "iv" | "4" => Ok(TableName::TableIV),
            _ => Err(Error::Parse(format!("unknown table `{s}`, expected tableI, tableII, tableIII or tableIV"))),
        }
    }
}

/// A rendered table: header plus string cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_markdown(&self) -> String {
        let mut out = format!("### {}\n\n", self.title);
        out.push_str(&format!("| {} |\n", self.header.join(" | ")));
        out.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 cells")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables always serialize")
    }
}

pub fn render(name: TableName) -> Result<Table> {
    match name {
        TableName::TableI => Ok(summary_table(name, "Capacity bounds for simple graphs", &table_i_grid())),
        TableName::TableII => Ok(summary_table(name, "Capacity bounds for r-multigraphs", &table_ii_grid())),
        TableName::TableIII => Ok(answer_table("complete", "complete:3")?.to_table(name, "Answer table for complete:3")),
        TableName::TableIV => Ok(answer_table("lift:path", "path:3^2")?.to_table(name, "Answer table for path:3^2")),
    }
}

fn table_i_grid() -> Vec<String> {
    let mut g = Vec::new();
    g.extend((2..=8).map(|n| format!("path:{n}")));
    g.extend((3..=6).map(|n| format!("cycle:{n}")));
    g.extend((3..=6).map(|n| format!("star:{n}")));
    g.extend(["complete_bipartite:2,2", "complete_bipartite:2,3", "complete_bipartite:3,3"].map(String::from));
    g.extend((3..=6).map(|n| format!("complete:{n}")));
    g
}

fn table_ii_grid() -> Vec<String> {
    let mut g = Vec::new();
    for r in 2..=3 {
        g.extend((2..=6).map(|n| format!("path:{n}^{r}")));
        g.extend((3..=6).map(|n| format!("cycle:{n}^{r}")));
        g.extend((3..=6).map(|n| format!("star:{n}^{r}")));
        g.extend((3..=5).map(|n| format!("complete:{n}^{r}")));
    }
    g
}

/// One summary line: strongest applicable finite lower and upper bound,
/// float formulas included, and the exact tightness verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub graph: String,
    pub lower: Option<BoundEntry>,
    pub upper: Option<BoundEntry>,
    pub status: String,
}

pub fn summary_row(spec: &str) -> Result<SummaryRow> {
    let g = GraphSpec::parse(spec)?;
    let entries = bound_report(&g);
    let finite = |kind: BoundKind| {
        entries
            .iter()
            .filter(move |e| e.kind == kind && e.applicable && !e.asymptotic && e.value.is_some())
    };
    let key = |e: &&BoundEntry| (e.value.unwrap().as_f64(), e.exact().is_some());
    let lower = finite(BoundKind::Lower).max_by(|a, b| key(a).partial_cmp(&key(b)).unwrap()).cloned();
    // on a float tie the exact entry should win, so flip the exactness flag
    let ukey = |e: &&BoundEntry| (e.value.unwrap().as_f64(), e.exact().is_none());
    let upper = finite(BoundKind::Upper).min_by(|a, b| ukey(a).partial_cmp(&ukey(b)).unwrap()).cloned();
    Ok(SummaryRow { graph: spec.to_string(), lower, upper, status: tightness_of(&entries).to_string() })
}

fn summary_table(name: TableName, title: &str, grid: &[String]) -> Table {
    let header = ["graph", "lower bound", "lower source", "upper bound", "upper source", "status"];
    let cell = |e: &Option<BoundEntry>| match e {
        Some(e) => (e.value.unwrap().to_string(), e.source.clone()),
        None => ("-".into(), "-".into()),
    };
    let rows = grid
        .iter()
        .map(|spec| {
            let row = summary_row(spec).expect("grid graphs are valid");
            let (lv, ls) = cell(&row.lower);
            let (uv, us) = cell(&row.upper);
            vec![row.graph, lv, ls, uv, us, row.status]
        })
        .collect();
    Table { name: name.to_string(), title: title.into(), header: header.map(String::from).to_vec(), rows }
}

/// Requests of every server for one desired file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnswerRow {
    pub theta: FileId,
    pub label: String,
    pub servers: Vec<Vec<LinearForm>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnswerTable {
    pub graph: String,
    pub scheme: String,
    pub rows: Vec<AnswerRow>,
}

/// Runs `scheme` on `graph` for every file with [`FixedSource`] randomness.
pub fn answer_table(scheme: &str, graph: &str) -> Result<AnswerTable> {
    let g = GraphSpec::parse(graph)?;
    let s: Box<dyn Scheme> = build_scheme(scheme, &g)?;
    let rows = s
        .thetas()
        .into_iter()
        .map(|theta| {
            let t = s.run(theta, &mut FixedSource)?;
            let servers = (1..=t.n_servers()).map(|k| t.server_requests(k).to_vec()).collect();
            Ok(AnswerRow { theta, label: theta_label(&g, theta), servers })
        })
        .collect::<Result<_>>()?;
    Ok(AnswerTable { graph: graph.into(), scheme: s.name(), rows })
}

/// `(u,v)` endpoints for simple graphs, `(e,j)` edge and copy otherwise.
pub fn theta_label(g: &GraphSpec, theta: FileId) -> String {
    if g.multiplicity() == 1 {
        let (a, b) = g.endpoints(theta.edge);
        format!("({a},{b})")
    } else {
        format!("({},{})", theta.edge, theta.copy)
    }
}

impl AnswerTable {
    pub fn to_table(&self, name: TableName, title: &str) -> Table {
        let n = self.rows.first().map_or(0, |r| r.servers.len());
        let mut header = vec!["theta".to_string()];
        header.extend((1..=n).map(|s| format!("S{s}")));
        let mut rows = Vec::new();
        for row in &self.rows {
            let depth = row.servers.iter().map(Vec::len).max().unwrap_or(0);
            for k in 0..depth {
                let mut line = vec![row.label.clone()];
                line.extend(row.servers.iter().map(|list| list.get(k).map(render_form).unwrap_or_default()));
                rows.push(line);
            }
        }
        Table { name: name.to_string(), title: title.into(), header, rows }
    }
}

fn letter(edge: u32) -> String {
    match edge {
        1..=26 => char::from(b'a' + (edge - 1) as u8).to_string(),
        _ => format!("w{edge}"),
    }
}

/// `a_3` for bit 3 of edge 1, `b'_2` for bit 2 of copy 2 of edge 2.
pub fn symbol(c: Coordinate) -> String {
    format!("{}{}_{}", letter(c.file.edge), "'".repeat(c.file.copy as usize - 1), c.bit)
}

pub fn render_form(form: &LinearForm) -> String {
    form.coords().iter().map(|&c| symbol(c)).collect::<Vec<_>>().join("+")
}

/// Inverse of [`render_form`].
pub fn parse_form(text: &str) -> Result<LinearForm> {
    let bad = || Error::Parse(format!("invalid answer cell `{text}`"));
    let coords = text
        .split('+')
        .map(|term| {
            let (name, bit) = term.trim().split_once('_').ok_or_else(bad)?;
            let primes = name.chars().rev().take_while(|&c| c == '\'').count();
            let base = &name[..name.len() - primes];
            let edge = match base.strip_prefix('w') {
                Some(num) if !num.is_empty() => num.parse().map_err(|_| bad())?,
                _ => {
                    let mut chars = base.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c @ 'a'..='z'), None) => c as u32 - 'a' as u32 + 1,
                        _ => return Err(bad()),
                    }
                }
            };
            let bit: u32 = bit.parse().map_err(|_| bad())?;
            Ok(Coordinate::new(FileId::new(edge, primes as u32 + 1), bit))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearForm::from_coords(coords))
}
