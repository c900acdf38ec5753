//! Fixed-format MPS dump of a [`LinearProgram`], for cross-checking against
//! external solvers.
//!
//! Field layout (1-based character columns, classic fixed MPS):
//! field 1 at 2-3, field 2 at 5-12, field 3 at 15-22, field 4 at 25-36,
//! field 5 at 40-47, field 6 at 50-61. Rows are named `R<i>`, variables
//! `X<j>`, the cost row `COST`. Every variable gets explicit bound records,
//! so the reader's default-bound convention never matters.

use super::{LinearProgram, Relation};
use std::fmt::Write as _;

fn field(buf: &mut String, start: usize, text: &str) {
    while buf.len() < start {
        buf.push(' ');
    }
    buf.push_str(text);
}

fn num(v: f64) -> String {
    let s = format!("{v:.10}");
    if s.len() <= 12 {
        s
    } else {
        format!("{v:.6e}")
    }
}

fn record(f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) -> String {
    let mut line = String::new();
    field(&mut line, 1, f1);
    field(&mut line, 4, f2);
    field(&mut line, 14, f3);
    field(&mut line, 24, f4);
    field(&mut line, 39, f5);
    field(&mut line, 49, f6);
    line.truncate(line.trim_end().len());
    line
}

pub fn write_mps(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n");
    out.push_str(&record("N", "COST", "", "", "", ""));
    out.push('\n');
    for (i, row) in lp.rows.iter().enumerate() {
        let tag = match row.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        out.push_str(&record(tag, &format!("R{i}"), "", "", "", ""));
        out.push('\n');
    }

    // column-major entries: objective first, then rows in index order
    out.push_str("COLUMNS\n");
    let mut col_entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); lp.num_vars];
    for (j, &c) in lp.objective.iter().enumerate() {
        if c != 0.0 {
            col_entries[j].push(("COST".to_string(), c));
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let mut coeffs = row.coeffs.clone();
        coeffs.sort_by_key(|t| t.0);
        for (j, a) in coeffs {
            col_entries[j].push((format!("R{i}"), a));
        }
    }
    for (j, entries) in col_entries.iter().enumerate() {
        let name = format!("X{j}");
        for pair in entries.chunks(2) {
            let (r1, v1) = &pair[0];
            if let Some((r2, v2)) = pair.get(1) {
                out.push_str(&record("", &name, r1, &num(*v1), r2, &num(*v2)));
            } else {
                out.push_str(&record("", &name, r1, &num(*v1), "", ""));
            }
            out.push('\n');
        }
    }

    out.push_str("RHS\n");
    for (i, row) in lp.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            out.push_str(&record("", "RHS", &format!("R{i}"), &num(row.rhs), "", ""));
            out.push('\n');
        }
    }

    out.push_str("BOUNDS\n");
    for j in 0..lp.num_vars {
        let name = format!("X{j}");
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l == u {
            out.push_str(&record("FX", "BND", &name, &num(l), "", ""));
            out.push('\n');
        } else if l.is_infinite() && u.is_infinite() {
            out.push_str(&record("FR", "BND", &name, "", "", ""));
            out.push('\n');
        } else {
            if l.is_infinite() {
                out.push_str(&record("MI", "BND", &name, "", "", ""));
            } else {
                out.push_str(&record("LO", "BND", &name, &num(l), "", ""));
            }
            out.push('\n');
            if u.is_infinite() {
                out.push_str(&record("PL", "BND", &name, "", "", ""));
            } else {
                out.push_str(&record("UP", "BND", &name, &num(u), "", ""));
            }
            out.push('\n');
        }
    }
    out.push_str("ENDATA\n");
    out
}
