//! Reader for the subset of the MATPOWER case layout used by standard test
//! systems: `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch` with the
//! canonical column order. Other fields (`gencost`, `bus_name`, ...) are
//! skipped. Loads, shunts and limits are converted to per-unit here.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::case::{Branch, Bus, BusType, Generator, NetworkCase};
use crate::error::{Error, Result};

const BUS_MIN_COLS: usize = 9;
const BUS_COLS: usize = 13;
const GEN_MIN_COLS: usize = 8;
const GEN_COLS: usize = 21;
const BRANCH_MIN_COLS: usize = 11;
const BRANCH_COLS: usize = 13;

#[derive(Debug)]
enum Value {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
    Other,
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: self.line,
            column: self.col,
            message: message.into(),
        })
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == b'\n' {
                break;
            }
            self.bump();
        }
    }

    /// Skips blanks and comments; newlines too when `newlines` is set.
    fn skip_space(&mut self, newlines: bool) {
        while let Some(c) = self.peek() {
            match c {
                b' ' | b'\t' | b'\r' => {
                    self.bump();
                }
                b'\n' if newlines => {
                    self.bump();
                }
                b'%' | b'#' => self.skip_comment(),
                b'.' if self.src[self.pos..].starts_with(b"...") => {
                    // line continuation
                    self.skip_comment();
                    self.bump();
                }
                _ => break,
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' {
                self.bump();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<f64> {
        let (line, col) = (self.line, self.col);
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, b'.' | b'+' | b'-') {
                // a sign only continues a number right after an exponent marker
                if matches!(c, b'+' | b'-') && self.pos > start {
                    let prev = self.src[self.pos - 1];
                    if prev != b'e' && prev != b'E' {
                        break;
                    }
                }
                self.bump();
            } else {
                break;
            }
        }
        let tok = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        parse_number(tok).ok_or_else(|| Error::Syntax {
            line,
            column: col,
            message: format!("invalid number '{tok}'"),
        })
    }

    fn matrix(&mut self) -> Result<Vec<Vec<f64>>> {
        // opening '[' already consumed
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            self.skip_space(false);
            match self.peek() {
                None => return self.error("unterminated matrix"),
                Some(b']') => {
                    self.bump();
                    if !row.is_empty() {
                        rows.push(row);
                    }
                    return Ok(rows);
                }
                Some(b';') | Some(b'\n') => {
                    self.bump();
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                }
                Some(b',') => {
                    self.bump();
                }
                Some(c) if c.is_ascii_digit() || matches!(c, b'.' | b'+' | b'-' | b'I' | b'N' | b'i' | b'n') => {
                    row.push(self.number()?);
                }
                Some(c) => return self.error(format!("unexpected character '{}' in matrix", c as char)),
            }
        }
    }

    fn skip_delimited(&mut self, close: u8) -> Result<()> {
        let mut depth = 1;
        let open = self.src[self.pos - 1];
        while depth > 0 {
            match self.bump() {
                None => return self.error(format!("missing '{}'", close as char)),
                Some(b'%') => self.skip_comment(),
                Some(c) if c == close => depth -= 1,
                Some(c) if c == open => depth += 1,
                _ => {}
            }
        }
        Ok(())
    }

    fn value(&mut self) -> Result<Value> {
        self.skip_space(false);
        match self.peek() {
            Some(b'[') => {
                self.bump();
                Ok(Value::Matrix(self.matrix()?))
            }
            Some(b'{') => {
                self.bump();
                self.skip_delimited(b'}')?;
                Ok(Value::Other)
            }
            Some(b'\'') | Some(b'"') => {
                let q = self.bump().unwrap_or(b'\'');
                loop {
                    match self.bump() {
                        None | Some(b'\n') => return self.error("unterminated string"),
                        Some(c) if c == q => break,
                        _ => {}
                    }
                }
                Ok(Value::Other)
            }
            Some(c) if c.is_ascii_digit() || matches!(c, b'.' | b'+' | b'-') => {
                Ok(Value::Scalar(self.number()?))
            }
            _ => self.error("expected a value"),
        }
    }

    fn statements(&mut self) -> Result<Vec<(String, Value, usize)>> {
        let mut out = Vec::new();
        loop {
            self.skip_space(true);
            let Some(c) = self.peek() else { break };
            if c == b';' {
                self.bump();
                continue;
            }
            if !(c.is_ascii_alphabetic() || c == b'_') {
                return self.error(format!("unexpected character '{}'", c as char));
            }
            let line = self.line;
            let name = self.ident();
            if name == "function" || name == "end" || name == "return" {
                self.skip_comment();
                continue;
            }
            self.skip_space(false);
            if self.peek() != Some(b'=') {
                return self.error(format!("expected '=' after '{name}'"));
            }
            self.bump();
            let v = self.value()?;
            self.skip_space(false);
            match self.peek() {
                Some(b';') | Some(b'\n') | None => {
                    self.bump();
                }
                Some(c) => {
                    return self.error(format!("unexpected '{}' after value of '{name}'", c as char))
                }
            }
            out.push((name, v, line));
        }
        Ok(out)
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok {
        "Inf" | "inf" | "+Inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().ok(),
    }
}

/// Parses MATPOWER text into a per-unit case. Non-fatal oddities are
/// returned as warnings rather than failing the parse.
pub fn parse(text: &str) -> Result<(NetworkCase, Vec<String>)> {
    let mut sc = Scanner::new(text);
    let stmts = sc.statements()?;
    let mut warnings = Vec::new();

    let mut base_mva = None;
    let mut bus = None;
    let mut gen = None;
    let mut branch = None;
    for (name, value, line) in stmts {
        let field = name.rsplit('.').next().unwrap_or(&name).to_string();
        match (field.as_str(), value) {
            ("baseMVA", Value::Scalar(v)) => base_mva = Some(v),
            ("bus", Value::Matrix(m)) => bus = Some((m, line)),
            ("gen", Value::Matrix(m)) => gen = Some((m, line)),
            ("branch", Value::Matrix(m)) => branch = Some((m, line)),
            ("baseMVA" | "bus" | "gen" | "branch", _) => {
                return Err(Error::Syntax {
                    line,
                    column: 1,
                    message: format!("field '{field}' has the wrong shape"),
                })
            }
            ("version", _) => {}
            _ => log::debug!("ignoring field '{name}' at line {line}"),
        }
    }

    let base = base_mva.ok_or_else(|| Error::InvalidCase("missing baseMVA".into()))?;
    let (bus, bus_line) = bus.ok_or_else(|| Error::InvalidCase("missing bus matrix".into()))?;
    let (gen, gen_line) = gen.unwrap_or((Vec::new(), 0));
    let (branch, br_line) =
        branch.ok_or_else(|| Error::InvalidCase("missing branch matrix".into()))?;

    check_columns("bus", &bus, bus_line, BUS_MIN_COLS, BUS_COLS, &mut warnings)?;
    check_columns("gen", &gen, gen_line, GEN_MIN_COLS, GEN_COLS, &mut warnings)?;
    check_columns("branch", &branch, br_line, BRANCH_MIN_COLS, BRANCH_COLS, &mut warnings)?;

    let generators: Vec<Generator> = gen
        .iter()
        .map(|r| Generator {
            bus: r[0] as usize,
            p_gen: r[1] / base,
            q_min: r[4] / base,
            q_max: r[3] / base,
            status: r[7] > 0.0,
        })
        .collect();

    // voltage setpoint of a regulated bus comes from its first in-service generator
    let mut setpoint: HashMap<usize, f64> = HashMap::new();
    for r in &gen {
        if r[7] > 0.0 {
            setpoint.entry(r[0] as usize).or_insert(r[5]);
        }
    }

    let mut buses = Vec::with_capacity(bus.len());
    for (k, r) in bus.iter().enumerate() {
        let id = r[0] as usize;
        if r[0] < 1.0 || r[0].fract() != 0.0 {
            return Err(Error::Syntax {
                line: bus_line,
                column: 1,
                message: format!("bus row {}: invalid bus number {}", k + 1, r[0]),
            });
        }
        let mut btype = match r[1] as i64 {
            1 => BusType::PQ,
            2 => BusType::PV,
            3 => BusType::Swing,
            4 => {
                return Err(Error::InvalidCase(format!(
                    "bus {id} is isolated (type 4); isolated buses are not supported"
                )))
            }
            t => {
                return Err(Error::InvalidCase(format!("bus {id} has unknown type {t}")))
            }
        };
        let vm = r[7];
        let v_sp = match btype {
            BusType::PQ => vm,
            BusType::PV => match setpoint.get(&id) {
                Some(&vg) => vg,
                None => {
                    warnings.push(format!(
                        "bus {id} is PV without an in-service generator; treated as PQ"
                    ));
                    btype = BusType::PQ;
                    vm
                }
            },
            BusType::Swing => setpoint.get(&id).copied().unwrap_or(vm),
        };
        buses.push(Bus {
            id,
            btype,
            p_load: r[2] / base,
            q_load: r[3] / base,
            g_shunt: r[4] / base,
            b_shunt: r[5] / base,
            v_sp,
            v_angle_sp: if btype == BusType::Swing { r[8] * PI / 180.0 } else { 0.0 },
        });
    }

    let branches = branch
        .iter()
        .map(|r| Branch {
            from: r[0] as usize,
            to: r[1] as usize,
            r: r[2],
            x: r[3],
            b_charging: r[4],
            tap: if r[8] == 0.0 { 1.0 } else { r[8] },
            shift: r[9] * PI / 180.0,
            status: r[10] > 0.0,
        })
        .collect();

    let case = NetworkCase {
        base_mva: base,
        buses,
        generators,
        branches,
    };
    case.validate()?;
    Ok((case, warnings))
}

fn check_columns(
    name: &str,
    rows: &[Vec<f64>],
    line: usize,
    min: usize,
    canonical: usize,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let mut extra = false;
    for (k, r) in rows.iter().enumerate() {
        if r.len() < min {
            return Err(Error::Syntax {
                line: line + k + 1,
                column: 1,
                message: format!("{name} row {} has {} columns, need at least {min}", k + 1, r.len()),
            });
        }
        extra |= r.len() > canonical;
    }
    if extra {
        warnings.push(format!(
            "{name}: columns beyond the first {canonical} are ignored"
        ));
    }
    Ok(())
}
