//! FCIDUMP reader and writer.
//!
//! The accepted dialect: a namelist header opening with `&FCI` and carrying
//! at least `NORB` and `NELEC` (plus optional `MS2`), terminated by `&END`
//! or `/`; then one record per line, `value i j k l` with 1-based indices.
//! `k = l = 0` marks a one-body integral `t_ij`, all-zero indices mark the
//! core energy, anything else is `(ij|kl)` in chemists' notation. Fortran
//! `D` exponents are accepted.

use super::{Interaction, ManyBodyModel, ModelError, TwoBodyTensor};
use crate::mat::Mat;
use std::io::Write;

fn parse_float(token: &str, line: usize) -> Result<f64, ModelError> {
    let cleaned = token.replace(['D', 'd'], "E");
    cleaned.parse().map_err(|_| ModelError::ParseError {
        line,
        message: format!("bad float `{token}`"),
    })
}

fn parse_index(token: &str, norb: usize, line: usize) -> Result<usize, ModelError> {
    let v: usize = token.parse().map_err(|_| ModelError::ParseError {
        line,
        message: format!("bad index `{token}`"),
    })?;
    if v > norb {
        return Err(ModelError::ParseError {
            line,
            message: format!("index {v} exceeds NORB = {norb}"),
        });
    }
    Ok(v)
}

/// Parse an FCIDUMP text into a [`ManyBodyModel`] with a full two-body
/// tensor.
pub fn parse_fcidump(text: &str) -> Result<ManyBodyModel, ModelError> {
    let mut norb: Option<usize> = None;
    let mut nelec: Option<i64> = None;
    let mut ms2: i64 = 0;

    // Header: collect tokens until &END or a bare '/'.
    let mut body_start = 0;
    let mut header = String::new();
    let mut found_end = false;
    for (idx, line) in text.lines().enumerate() {
        header.push(' ');
        header.push_str(line);
        body_start = idx + 1;
        let upper = line.to_uppercase();
        if upper.contains("&END") || line.contains('/') {
            found_end = true;
            break;
        }
    }
    if !found_end {
        return Err(ModelError::HeaderError {
            message: "missing &END or / terminator".into(),
        });
    }
    let upper = header.to_uppercase();
    if !upper.contains("&FCI") {
        return Err(ModelError::HeaderError {
            message: "missing &FCI namelist opener".into(),
        });
    }
    for assignment in upper.split(|c: char| c.is_whitespace() || c == ',') {
        if let Some((key, value)) = assignment.split_once('=') {
            let value = value.trim_end_matches('/').trim();
            match key.trim() {
                "NORB" => {
                    norb = Some(value.parse().map_err(|_| ModelError::HeaderError {
                        message: format!("bad NORB `{value}`"),
                    })?)
                }
                "NELEC" => {
                    nelec = Some(value.parse().map_err(|_| ModelError::HeaderError {
                        message: format!("bad NELEC `{value}`"),
                    })?)
                }
                "MS2" => {
                    ms2 = value.parse().map_err(|_| ModelError::HeaderError {
                        message: format!("bad MS2 `{value}`"),
                    })?
                }
                _ => {}
            }
        }
    }
    let norb = norb.ok_or(ModelError::HeaderError {
        message: "NORB missing".into(),
    })?;
    let nelec = nelec.ok_or(ModelError::HeaderError {
        message: "NELEC missing".into(),
    })?;
    if norb == 0 {
        return Err(ModelError::HeaderError {
            message: "NORB = 0".into(),
        });
    }
    if (nelec + ms2) % 2 != 0 || nelec < ms2.abs() {
        return Err(ModelError::HeaderError {
            message: format!("inconsistent NELEC = {nelec}, MS2 = {ms2}"),
        });
    }
    let n_up = ((nelec + ms2) / 2) as usize;
    let n_down = ((nelec - ms2) / 2) as usize;

    let mut one_body = Mat::zeros(norb, norb);
    let mut tensor = TwoBodyTensor::zeros(norb);
    let mut core_energy = 0.0;

    for (idx, line) in text.lines().enumerate().skip(body_start) {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(ModelError::ParseError {
                line: line_no,
                message: format!("expected `value i j k l`, got {} tokens", tokens.len()),
            });
        }
        let value = parse_float(tokens[0], line_no)?;
        let i = parse_index(tokens[1], norb, line_no)?;
        let j = parse_index(tokens[2], norb, line_no)?;
        let k = parse_index(tokens[3], norb, line_no)?;
        let l = parse_index(tokens[4], norb, line_no)?;
        match (i, j, k, l) {
            (0, 0, 0, 0) => core_energy = value,
            (i, j, 0, 0) if i > 0 && j > 0 => {
                one_body[(i - 1, j - 1)] = value;
                one_body[(j - 1, i - 1)] = value;
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                tensor.set_symmetric(i - 1, j - 1, k - 1, l - 1, value);
            }
            _ => {
                return Err(ModelError::ParseError {
                    line: line_no,
                    message: format!("unsupported index pattern {i} {j} {k} {l}"),
                });
            }
        }
    }

    Ok(ManyBodyModel {
        n_spatial: norb,
        one_body,
        interaction: Interaction::FullTensor(tensor),
        n_electrons: (n_up, n_down),
        core_energy,
    })
}

/// Write a model back out in FCIDUMP form. Values are printed with 17
/// significant digits so a parse/write/parse cycle reproduces every stored
/// value bit-exactly.
pub fn write_fcidump(model: &ManyBodyModel, out: &mut impl Write) -> std::io::Result<()> {
    let n = model.n_spatial;
    let nelec = model.n_electrons.0 + model.n_electrons.1;
    let ms2 = model.n_electrons.0 as i64 - model.n_electrons.1 as i64;
    writeln!(out, "&FCI NORB={n},NELEC={nelec},MS2={ms2},")?;
    writeln!(out, "&END")?;
    if let Interaction::FullTensor(tensor) = &model.interaction {
        for (i, j, k, l, v) in tensor.canonical_entries() {
            writeln!(out, "{:.16e} {} {} {} {}", v, i + 1, j + 1, k + 1, l + 1)?;
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = model.one_body[(i, j)];
            if v != 0.0 {
                writeln!(out, "{:.16e} {} {} 0 0", v, i + 1, j + 1)?;
            }
        }
    }
    if model.core_energy != 0.0 {
        writeln!(out, "{:.16e} 0 0 0 0", model.core_energy)?;
    }
    Ok(())
}
