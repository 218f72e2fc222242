//! Text, CSV and JSON renderings of convergence and lemma reports.
//!
//! CSV and JSON output contain no timing information, so identical runs
//! produce identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::Value;

use crate::analysis::{ConvergenceReport, ErrorSet, LevelRecord};
use crate::error::Error;
use crate::exactmath::{fraction_string, monomial_name};
use crate::orthogonality::LemmaReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Which error blocks a rendering includes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum View {
    #[default]
    All,
    LiftOnly,
}

/// `0.XXXE±YY`: three significant digits with a mantissa in `[0.1, 1)`.
pub fn sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0.000E+00".to_string();
    }
    // `{:.2e}` rounds to three significant digits as d.dd e k
    let s = format!("{:.2e}", v.abs());
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let e = exp + 1;
    let sign = if v < 0.0 { "-" } else { "" };
    format!("{sign}0.{digits}E{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn rate_str(r: f64) -> String {
    if r.is_finite() {
        format!("{r:.2}")
    } else {
        "-".to_string()
    }
}

struct Block {
    heads: [&'static str; 2],
    pick: fn(&ErrorSet) -> [Option<f64>; 2],
}

const BLOCKS: [Block; 3] = [
    Block { heads: ["||I_h u-u_h||_0", "|I_h u-u_h|_1"], pick: |e| [Some(e.interp_l2), Some(e.interp_h1)] },
    Block { heads: ["||u-u_h||_0", "|u-u_h|_1"], pick: |e| [Some(e.fe_l2), Some(e.fe_h1)] },
    Block { heads: ["||u-L3 u_h||_0", "|u-L3 u_h|_1"], pick: |e| [e.lift_l2, e.lift_h1] },
];

fn blocks(view: View) -> &'static [Block] {
    match view {
        View::All => &BLOCKS,
        View::LiftOnly => &BLOCKS[2..],
    }
}

/// Fixed-width table: one block per error pair, value and rate columns.
pub fn convergence_table(report: &ConvergenceReport, view: View) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "problem {}", report.problem);
    for (b, block) in blocks(view).iter().enumerate() {
        if b > 0 {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{:>3} | {:>16} {:>6} | {:>16} {:>6}",
            "G", block.heads[0], "O(h^r)", block.heads[1], "O(h^r)"
        );
        for l in &report.levels {
            let _ = write!(out, "{:>3} |", l.level);
            match (&l.errors, &l.rates) {
                (Some(e), Some(r)) => {
                    let ev = (block.pick)(e);
                    let rv = (block.pick)(r);
                    for k in 0..2 {
                        let v = ev[k].map_or("-".to_string(), sci);
                        let q = rv[k].map_or("-".to_string(), rate_str);
                        let _ = write!(out, " {v:>16} {q:>6}");
                        if k == 0 {
                            out.push_str(" |");
                        }
                    }
                    out.push('\n');
                }
                _ => {
                    let _ = writeln!(out, " {}", l.failure.as_deref().unwrap_or("failed"));
                }
            }
        }
    }
    out
}

const ERROR_FIELDS: [&str; 6] = ["interp_l2", "interp_h1", "fe_l2", "fe_h1", "lift_l2", "lift_h1"];

fn fields(e: &ErrorSet) -> [Option<f64>; 6] {
    [Some(e.interp_l2), Some(e.interp_h1), Some(e.fe_l2), Some(e.fe_h1), e.lift_l2, e.lift_h1]
}

fn keep(view: View, name: &str) -> bool {
    view == View::All || name.starts_with("lift_")
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// One row per level; empty cells for unavailable values.
pub fn convergence_csv(report: &ConvergenceReport, view: View) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["problem".to_string(), "level".into(), "n".into(), "h".into(), "dofs".into()];
    header.extend(["cg_iterations".into(), "cg_relative_residual".into()]);
    for f in ERROR_FIELDS.iter().filter(|f| keep(view, f)) {
        header.push(f.to_string());
    }
    for f in ERROR_FIELDS.iter().filter(|f| keep(view, f)) {
        header.push(format!("rate_{f}"));
    }
    header.push("status".into());
    w.write_record(&header).expect("in-memory write");
    for l in &report.levels {
        let mut row = vec![
            report.problem.to_string(),
            l.level.to_string(),
            l.n.to_string(),
            l.h.to_string(),
            l.dofs.to_string(),
            l.cg.iterations.to_string(),
            format!("{:e}", l.cg.relative_residual),
        ];
        for set in [&l.errors, &l.rates] {
            let vals = set.as_ref().map(fields).unwrap_or([None; 6]);
            for (name, v) in ERROR_FIELDS.iter().zip(vals) {
                if keep(view, name) {
                    row.push(opt(v));
                }
            }
        }
        row.push(if l.failure.is_some() { "not-converged" } else { "ok" }.into());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn level_json(l: &LevelRecord, view: View) -> Value {
    let mut v = serde_json::to_value(l).expect("record serializes");
    if view == View::LiftOnly {
        for key in ["errors", "rates"] {
            if let Some(Value::Object(m)) = v.get_mut(key) {
                m.retain(|k, _| k.starts_with("lift_"));
            }
        }
    }
    v
}

/// `{"problem": …, "levels": [{"level", "n", "h", "dofs", "cg", "errors", "rates"}]}`.
pub fn convergence_json(report: &ConvergenceReport, view: View) -> String {
    let levels: Vec<Value> = report.levels.iter().map(|l| level_json(l, view)).collect();
    let doc = serde_json::json!({ "problem": report.problem, "levels": levels });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}

pub fn render_convergence(report: &ConvergenceReport, format: Format, view: View) -> String {
    match format {
        Format::Table => convergence_table(report, view),
        Format::Csv => convergence_csv(report, view),
        Format::Json => convergence_json(report, view),
    }
}

pub fn lemma_csv(report: &LemmaReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "monomial", "total", "per_tet"]).expect("in-memory write");
    for r in &report.records {
        let per: Vec<String> = r.per_tet.iter().map(fraction_string).collect();
        w.write_record([r.kind.name(), &monomial_name(r.monomial), &fraction_string(&r.total), &per.join(" ")])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn render_lemmas(report: &LemmaReport, format: Format) -> String {
    match format {
        Format::Table => report.to_table(),
        Format::Csv => lemma_csv(report),
        Format::Json => report.to_json() + "\n",
    }
}
