//! Free-format MPS reading and writing.
//!
//! Binary columns are written inside `MARKER INTORG/INTEND` pairs with a `BV`
//! bound. The objective constant is stored as the negated right-hand side of
//! the objective row, the convention most solvers follow.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{LinearProgram, RowSense};
use crate::error::{Error, Result};

const OBJ: &str = "OBJ";

fn clean(name: &str) -> String {
    name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect()
}

pub fn write_mps(name: &str, lp: &LinearProgram, binaries: &[usize]) -> String {
    let mut is_bin = vec![false; lp.num_vars()];
    for &j in binaries {
        is_bin[j] = true;
    }
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            if a != 0.0 {
                cols[j].push((i, a));
            }
        }
    }
    let row_names: Vec<String> = lp.rows.iter().map(|r| clean(&r.name)).collect();
    let col_names: Vec<String> = lp.names.iter().map(|n| clean(n)).collect();

    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", clean(name));
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ}");
    for (row, rn) in lp.rows.iter().zip(&row_names) {
        let tag = match row.sense {
            RowSense::Eq => "E",
            RowSense::Ge => "G",
            RowSense::Le => "L",
        };
        let _ = writeln!(out, " {tag}  {rn}");
    }
    out.push_str("COLUMNS\n");
    let mut marker = 0;
    for j in 0..lp.num_vars() {
        if is_bin[j] {
            let _ = writeln!(out, "    MARKER{marker} 'MARKER' 'INTORG'");
        }
        if lp.cost[j] != 0.0 {
            let _ = writeln!(out, "    {} {OBJ} {}", col_names[j], lp.cost[j]);
        }
        for &(i, a) in &cols[j] {
            let _ = writeln!(out, "    {} {} {}", col_names[j], row_names[i], a);
        }
        if lp.cost[j] == 0.0 && cols[j].is_empty() {
            let _ = writeln!(out, "    {} {OBJ} 0", col_names[j]);
        }
        if is_bin[j] {
            let _ = writeln!(out, "    MARKER{marker} 'MARKER' 'INTEND'");
            marker += 1;
        }
    }
    out.push_str("RHS\n");
    if lp.offset != 0.0 {
        let _ = writeln!(out, "    RHS {OBJ} {}", -lp.offset);
    }
    for (row, rn) in lp.rows.iter().zip(&row_names) {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {rn} {}", row.rhs);
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..lp.num_vars() {
        let (lo, up) = (lp.lower[j], lp.upper[j]);
        let n = &col_names[j];
        if is_bin[j] && lo == 0.0 && up == 1.0 {
            let _ = writeln!(out, " BV BND {n}");
            continue;
        }
        if lo == up {
            let _ = writeln!(out, " FX BND {n} {lo}");
            continue;
        }
        if lo == f64::NEG_INFINITY && up == f64::INFINITY {
            let _ = writeln!(out, " FR BND {n}");
            continue;
        }
        if lo == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND {n}");
        } else if lo != 0.0 {
            let _ = writeln!(out, " LO BND {n} {lo}");
        }
        if up.is_finite() {
            let _ = writeln!(out, " UP BND {n} {up}");
        } else if is_bin[j] {
            let _ = writeln!(out, " PL BND {n}");
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

/// Parses a free-format MPS document into a problem plus binary column list.
pub fn read_mps(text: &str) -> Result<(LinearProgram, Vec<usize>)> {
    let err = |line: usize, msg: &str| Error::Parse(format!("MPS line {}: {msg}", line + 1));
    let mut lp = LinearProgram::new();
    let mut obj_name: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut integer = Vec::new();
    let mut in_int = false;
    let mut section = Section::None;

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if !line.starts_with(' ') && !line.starts_with('\t') {
            let head = line.split_whitespace().next().unwrap_or("");
            section = match head {
                "NAME" => Section::None,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                "RANGES" => return Err(err(ln, "RANGES section is not supported")),
                other => return Err(err(ln, &format!("unknown section {other}"))),
            };
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Rows => {
                if f.len() != 2 {
                    return Err(err(ln, "expected `<type> <name>`"));
                }
                let sense = match f[0] {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(f[1].to_string());
                        }
                        continue;
                    }
                    "E" => RowSense::Eq,
                    "G" => RowSense::Ge,
                    "L" => RowSense::Le,
                    t => return Err(err(ln, &format!("unknown row type {t}"))),
                };
                row_index.insert(f[1].to_string(), lp.num_rows());
                lp.add_row(f[1], Vec::new(), sense, 0.0);
            }
            Section::Columns => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    match f[2] {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        m => return Err(err(ln, &format!("unknown marker {m}"))),
                    }
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "expected `<col> <row> <value> [<row> <value>]`"));
                }
                let j = match col_index.get(f[0]) {
                    Some(&j) => j,
                    None => {
                        let j = lp.add_var(f[0], 0.0, 0.0, f64::INFINITY);
                        col_index.insert(f[0].to_string(), j);
                        if in_int {
                            integer.push(j);
                        }
                        j
                    }
                };
                for pair in f[1..].chunks(2) {
                    let v: f64 = pair[1].parse().map_err(|_| err(ln, "bad number"))?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        lp.cost[j] += v;
                    } else {
                        let &i = row_index.get(pair[0]).ok_or_else(|| err(ln, &format!("unknown row {}", pair[0])))?;
                        lp.rows[i].coeffs.push((j, v));
                    }
                }
            }
            Section::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "expected `<set> <row> <value> [<row> <value>]`"));
                }
                for pair in f[1..].chunks(2) {
                    let v: f64 = pair[1].parse().map_err(|_| err(ln, "bad number"))?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        lp.offset = -v;
                    } else {
                        let &i = row_index.get(pair[0]).ok_or_else(|| err(ln, &format!("unknown row {}", pair[0])))?;
                        lp.rows[i].rhs = v;
                    }
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(err(ln, "expected `<type> <set> <col> [<value>]`"));
                }
                let &j = col_index.get(f[2]).ok_or_else(|| err(ln, &format!("unknown column {}", f[2])))?;
                let val = || -> Result<f64> {
                    f.get(3).ok_or_else(|| err(ln, "missing bound value"))?.parse().map_err(|_| err(ln, "bad number"))
                };
                match f[0] {
                    "LO" => lp.lower[j] = val()?,
                    "UP" => lp.upper[j] = val()?,
                    "FX" => {
                        let v = val()?;
                        lp.lower[j] = v;
                        lp.upper[j] = v;
                    }
                    "FR" => {
                        lp.lower[j] = f64::NEG_INFINITY;
                        lp.upper[j] = f64::INFINITY;
                    }
                    "MI" => lp.lower[j] = f64::NEG_INFINITY,
                    "PL" => lp.upper[j] = f64::INFINITY,
                    "BV" => {
                        lp.lower[j] = 0.0;
                        lp.upper[j] = 1.0;
                    }
                    t => return Err(err(ln, &format!("unsupported bound type {t}"))),
                }
            }
            Section::None => {}
        }
    }
    for &j in &integer {
        if lp.lower[j] < 0.0 || lp.upper[j] > 1.0 {
            return Err(Error::Parse(format!(
                "integer column {} is not binary; only binary integers are supported",
                lp.names[j]
            )));
        }
    }
    Ok((lp, integer))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_problem() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var("a", 3.0, 0.0, 1.0);
        let t = lp.add_var("theta", 0.0, f64::NEG_INFINITY, f64::INFINITY);
        let z = lp.add_var("z", 0.5, -2.0, 4.5);
        lp.add_row("balance_s1_j1_h1", vec![(a, 1.0), (t, -2.5)], RowSense::Eq, 1.25);
        lp.add_row("gen_cap", vec![(z, 1.0), (a, 0.1)], RowSense::Ge, -3.0);
        lp.add_row("cap", vec![(z, 2.0)], RowSense::Le, 7.0);
        lp.offset = 12.5;
        let text = write_mps("toy", &lp, &[a]);
        let (back, bins) = read_mps(&text).unwrap();
        assert_eq!(bins, vec![a]);
        let mut expect = lp.clone();
        for row in &mut expect.rows {
            row.coeffs.sort_by_key(|&(j, _)| j);
        }
        assert_eq!(back, expect);
    }

    #[test]
    fn rejects_general_integers() {
        let text = "NAME x\nROWS\n N OBJ\nCOLUMNS\n    M 'MARKER' 'INTORG'\n    k OBJ 1\n    M 'MARKER' 'INTEND'\nRHS\nBOUNDS\n UP BND k 5\nENDATA\n";
        assert!(read_mps(text).is_err());
    }
}
