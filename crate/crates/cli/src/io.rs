//! Text formats for instances and solutions.
//!
//! Instance: a header `model m n kappa`, then `m` lines of `n` characters from
//! `{+,-}`. Solution: one line of `n` such characters. Lines end in `\n`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use perceptron::{Instance, ModelKind, SpinVector};

use crate::{CliError, Result};

pub fn format_instance(inst: &Instance) -> String {
    let mut out = String::with_capacity(inst.m() * (inst.n() + 1) + 64);
    writeln!(out, "{} {} {} {}", inst.model(), inst.m(), inst.n(), inst.kappa()).unwrap();
    for r in 0..inst.m() {
        out.extend(inst.row(r).iter().map(|&g| if g > 0 { '+' } else { '-' }));
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse { line, msg: msg.into() }
}

fn parse_signs(line: &str, lineno: usize, n: usize, out: &mut Vec<i8>) -> Result<()> {
    if line.len() != n {
        return Err(parse_err(lineno, format!("expected {n} characters, found {}", line.len())));
    }
    for ch in line.bytes() {
        out.push(match ch {
            b'+' => 1,
            b'-' => -1,
            other => return Err(parse_err(lineno, format!("unexpected character {:?}", other as char))),
        });
    }
    Ok(())
}

/// Parses an instance; the loaded instance has seed 0.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or_default();
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 4 {
        return Err(parse_err(1, "header must be `model m n kappa`"));
    }
    let model: ModelKind = fields[0].parse().map_err(|e: perceptron::Error| parse_err(1, e.to_string()))?;
    let m: usize = fields[1].parse().map_err(|_| parse_err(1, format!("bad row count {:?}", fields[1])))?;
    let n: usize = fields[2].parse().map_err(|_| parse_err(1, format!("bad column count {:?}", fields[2])))?;
    let kappa: f64 = fields[3].parse().map_err(|_| parse_err(1, format!("bad kappa {:?}", fields[3])))?;
    let mut entries = Vec::with_capacity(m * n);
    for r in 0..m {
        let line = lines.next().ok_or_else(|| parse_err(r + 2, format!("expected {m} rows, found {r}")))?;
        parse_signs(line, r + 2, n, &mut entries)?;
    }
    if lines.any(|l| !l.is_empty()) {
        return Err(parse_err(m + 2, "trailing content after the last row"));
    }
    Ok(Instance::new(model, m, n, kappa, entries, 0)?)
}

pub fn format_solution(x: &SpinVector) -> String {
    format!("{x}\n")
}

pub fn parse_solution(text: &str) -> Result<SpinVector> {
    let line = text.strip_suffix('\n').unwrap_or(text);
    let mut v = Vec::with_capacity(line.len());
    parse_signs(line, 1, line.len(), &mut v)?;
    Ok(SpinVector::new(v)?)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read_text(path)?)
}

pub fn load_solution(path: &Path) -> Result<SpinVector> {
    parse_solution(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use perceptron::sample_with_rows;

    #[test]
    fn roundtrip() {
        let inst = sample_with_rows(ModelKind::Abp, 3, 70, -0.35, 4).unwrap();
        let text = format_instance(&inst);
        assert!(text.starts_with("abp 3 70 -0.35\n"));
        let back = parse_instance(&text).unwrap();
        assert_eq!(back.entries(), inst.entries());
        assert_eq!(back.kappa().to_bits(), inst.kappa().to_bits());
        assert_eq!(format_instance(&back), text);
    }

    #[test]
    fn kappa_shortest_decimal() {
        let inst = Instance::new(ModelKind::Sbp, 1, 2, 0.1 + 0.2, vec![1, -1], 0).unwrap();
        let text = format_instance(&inst);
        assert_eq!(text, "sbp 1 2 0.30000000000000004\n+-\n");
        assert_eq!(parse_instance(&text).unwrap().kappa(), 0.1 + 0.2);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_instance("sbp 1 2 1\n+\n").is_err());
        assert!(parse_instance("sbp 1 2 1\n+x\n").is_err());
        assert!(parse_instance("sbp 2 2 1\n++\n").is_err());
        assert!(parse_instance("sbp 1 2\n++\n").is_err());
        assert!(parse_instance("xbp 1 2 1\n++\n").is_err());
        assert!(parse_instance("sbp 1 2 1\n++ \n").is_err());
        let e = parse_instance("sbp 1 2 1\n++\n--\n").unwrap_err();
        assert_eq!(e.name(), "Parse");
    }

    #[test]
    fn solution_roundtrip() {
        let x: SpinVector = "+--+".parse().unwrap();
        assert_eq!(parse_solution(&format_solution(&x)).unwrap(), x);
        assert!(parse_solution("+-?\n").is_err());
    }
}
