//! Analysis reports and their table, CSV and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use posdiv_core::pipeline::Analysis;
use posdiv_core::positive::Wk2Deduction;
use posdiv_core::zlinalg::AbelianGroupType;
use posdiv_core::Error;

use crate::ingest::IngestError;

pub const SCHEMA: &str = "posdiv-report/1";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const UNSUPPORTED: i32 = 2;
    pub const GROSS: i32 = 3;
    pub const INGESTION: i32 = 4;
    pub const PRECISION: i32 = 5;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Signed places without an exceptional one.
    Unsupported,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

/// One analysed field. Group types are rendered like `[ 2,2 ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub schema: String,
    pub field: String,
    pub degree: Option<usize>,
    pub status: Status,
    pub error: Option<ErrorInfo>,
    pub cl: Option<String>,
    pub p: Option<usize>,
    pub pe: Option<usize>,
    pub cl_prime: Option<String>,
    pub cl_tilde: Option<String>,
    pub cl_pos: Option<String>,
    pub cl_pos_oracle: Option<String>,
    pub cl_tilde_pos: Option<String>,
    pub cl_tilde_pos_oracle: Option<String>,
    pub cl_tilde_pos_agree: Option<bool>,
    pub rk2: Option<usize>,
    pub case: Option<String>,
    pub primitive: Option<bool>,
    pub wk2: Option<String>,
    pub precision: Option<u32>,
    pub time_ms: Option<f64>,
}

/// `[ 2,12 ]` style rendering of invariant factors.
pub fn render_orders(orders: &[u64]) -> String {
    if orders.is_empty() {
        return "[ ]".into();
    }
    let parts: Vec<String> = orders.iter().map(u64::to_string).collect();
    format!("[ {} ]", parts.join(","))
}

fn render(t: &AbelianGroupType) -> String {
    t.to_string()
}

fn render_wk2(w: &Wk2Deduction) -> String {
    match w {
        Wk2Deduction::Determined(s) => s.to_string(),
        Wk2Deduction::Ambiguous(c) if c.is_empty() => "ambiguous".into(),
        Wk2Deduction::Ambiguous(c) => {
            let parts: Vec<String> = c.iter().map(render).collect();
            format!("ambiguous {}", parts.join(" | "))
        }
    }
}

impl AnalysisReport {
    fn empty(field: String) -> Self {
        AnalysisReport {
            schema: SCHEMA.into(),
            field,
            degree: None,
            status: Status::Ok,
            error: None,
            cl: None,
            p: None,
            pe: None,
            cl_prime: None,
            cl_tilde: None,
            cl_pos: None,
            cl_pos_oracle: None,
            cl_tilde_pos: None,
            cl_tilde_pos_oracle: None,
            cl_tilde_pos_agree: None,
            rk2: None,
            case: None,
            primitive: None,
            wk2: None,
            precision: None,
            time_ms: None,
        }
    }

    pub fn from_analysis(a: &Analysis, time_ms: Option<f64>) -> Self {
        let mut r = AnalysisReport::empty(a.label.clone());
        r.degree = Some(a.degree);
        r.status = if a.rk2.is_some() { Status::Ok } else { Status::Unsupported };
        r.cl = a.class_group.as_deref().map(render_orders);
        r.p = Some(a.dyadic);
        r.pe = Some(a.exceptional);
        r.cl_prime = Some(render(&a.cl_prime));
        r.cl_tilde = Some(render(&a.cl_tilde));
        r.cl_pos = a.cl_pos.as_ref().map(render);
        r.cl_pos_oracle = a.cl_pos_oracle.as_ref().map(render);
        if let Some(d) = &a.cl_pos_deg0 {
            r.cl_tilde_pos = Some(render(&d.group_type));
            r.cl_tilde_pos_oracle = Some(render(&d.oracle));
            r.cl_tilde_pos_agree = Some(d.agree());
        }
        r.rk2 = a.rk2;
        r.case = Some(a.case.to_string());
        r.primitive = a.primitive;
        r.wk2 = a.wk2.as_ref().map(render_wk2);
        r.precision = Some(a.precision);
        r.time_ms = time_ms;
        r
    }

    pub fn from_error(field: String, e: &RunError) -> Self {
        let mut r = AnalysisReport::empty(field);
        r.status = Status::Error;
        r.error = Some(ErrorInfo { kind: e.kind().into(), message: e.to_string() });
        r
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => exit::OK,
            Status::Unsupported => exit::UNSUPPORTED,
            Status::Error => match self.error.as_ref().map(|e| e.kind.as_str()) {
                Some("gross") => exit::GROSS,
                Some("ingestion") => exit::INGESTION,
                Some("precision") => exit::PRECISION,
                _ => exit::USAGE,
            },
        }
    }

    fn cells(&self) -> Vec<String> {
        let s = |x: &Option<String>| x.clone().unwrap_or_default();
        let n = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let b = |x: Option<bool>| x.map(|v| if v { "yes" } else { "no" }.to_string()).unwrap_or_default();
        vec![
            self.field.clone(),
            match self.status {
                Status::Ok => "ok".into(),
                Status::Unsupported => "unsupported".into(),
                Status::Error => "error".into(),
            },
            s(&self.cl),
            n(self.p),
            n(self.pe),
            s(&self.cl_prime),
            s(&self.cl_tilde),
            s(&self.cl_pos),
            s(&self.cl_tilde_pos),
            s(&self.cl_tilde_pos_oracle),
            b(self.cl_tilde_pos_agree),
            n(self.rk2),
            s(&self.case),
            b(self.primitive),
            s(&self.wk2),
            self.precision.map(|p| p.to_string()).unwrap_or_default(),
            self.time_ms.map(|t| format!("{t:.1}")).unwrap_or_default(),
            self.error.as_ref().map(|e| e.message.clone()).unwrap_or_default(),
        ]
    }
}

pub const COLUMNS: [&str; 18] = [
    "field", "status", "Cl", "|P|", "|PE|", "Cl'", "Cl~", "Cl^pos", "Cl~^pos", "Cl~^pos(oracle)", "agree", "rk2", "case", "primitive",
    "WK2", "eta", "ms", "error",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Incremental writer: the table and CSV headers are emitted once.
pub struct Renderer {
    format: Format,
    header_done: bool,
}

impl Renderer {
    pub fn new(format: Format) -> Self {
        Renderer { format, header_done: false }
    }

    pub fn render(&mut self, r: &AnalysisReport) -> String {
        let mut out = String::new();
        match self.format {
            Format::Json => {
                out.push_str(&serde_json::to_string(r).expect("reports serialize"));
                out.push('\n');
            }
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
                if !self.header_done {
                    w.write_record(COLUMNS).expect("in-memory csv");
                }
                w.write_record(r.cells()).expect("in-memory csv");
                out.push_str(&String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8"));
            }
            Format::Table => {
                if !self.header_done {
                    out.push_str(&table_row(&COLUMNS.map(String::from)));
                }
                out.push_str(&table_row(&r.cells()));
            }
        }
        self.header_done = true;
        out
    }
}

const WIDTHS: [usize; 18] = [14, 11, 12, 3, 4, 10, 10, 12, 12, 15, 5, 3, 4, 9, 12, 3, 8, 0];

fn table_row(cells: &[String]) -> String {
    let mut line = String::new();
    for (c, w) in cells.iter().zip(WIDTHS) {
        let _ = write!(line, "{c:<w$}  ");
    }
    let mut line = line.trim_end().to_string();
    line.push('\n');
    line
}

/// Anything that can stop the analysis of one field.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

impl RunError {
    /// Stable error class used for exit codes and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Ingest(IngestError::Io { .. }) => "io",
            RunError::Ingest(_) => "ingestion",
            RunError::Core(e) => match e {
                Error::GrossViolation { .. } | Error::UnitRankMismatch { .. } | Error::InfiniteAtPrecision { .. } => "gross",
                Error::PrecisionExhausted { .. } | Error::Undecidable { .. } => "precision",
                Error::WitnessInvalid(_) | Error::LocalFactorMismatch(_) | Error::InvalidField(_) => "ingestion",
                Error::NonFundamentalDiscriminant(_) | Error::InvalidPolicy(_) => "usage",
                _ => "error",
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use posdiv_core::fields::quadratic_field;
    use posdiv_core::pipeline::{analyze, AnalysisOptions};

    fn report(d: i64) -> AnalysisReport {
        let f = quadratic_field(d).unwrap();
        AnalysisReport::from_analysis(&analyze(&f, &AnalysisOptions::default()).unwrap(), None)
    }

    #[test]
    fn orders_render_like_tables() {
        assert_eq!(render_orders(&[2, 12]), "[ 2,12 ]");
        assert_eq!(render_orders(&[]), "[ ]");
    }

    #[test]
    fn json_round_trip() {
        let r = report(-184);
        let text = serde_json::to_string(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.cl_pos.as_deref(), Some("[ 2 ]"));
        assert_eq!(r.exit_code(), exit::OK);
    }

    #[test]
    fn renderers_agree() {
        let r = report(29665);
        let csv_text = Renderer::new(Format::Csv).render(&r);
        let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
        let row: Vec<String> = rd.records().next().unwrap().unwrap().iter().map(String::from).collect();
        assert_eq!(row, r.cells());
        let table = Renderer::new(Format::Table).render(&r);
        for c in r.cells().iter().filter(|c| !c.is_empty()) {
            assert!(table.contains(c.as_str()), "{c}");
        }
    }

    #[test]
    fn error_kinds() {
        let e = RunError::Core(Error::GrossViolation { eta: 96, detail: "x".into() });
        let r = AnalysisReport::from_error("1".into(), &e);
        assert_eq!(r.exit_code(), exit::GROSS);
        let e = RunError::Core(Error::Undecidable { eta: 96 });
        assert_eq!(AnalysisReport::from_error("1".into(), &e).exit_code(), exit::PRECISION);
    }
}
