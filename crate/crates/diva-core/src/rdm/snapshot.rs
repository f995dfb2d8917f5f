//! Plain-text matrix snapshots used for CLI checkpointing.
//!
//! Format: a header line `N s` (block dimension, number of spin blocks),
//! then each block row-major with one row per line, entries printed with 17
//! significant digits so values round-trip bit-exactly.

use super::{DensityMatrix, RdmError, Spin};
use crate::mat::Mat;
use std::io::{BufRead, Write};

pub fn write_snapshot(gamma: &DensityMatrix, out: &mut impl Write) -> Result<(), RdmError> {
    let n = gamma.n_spatial();
    writeln!(out, "{n} 2")?;
    for spin in [Spin::Up, Spin::Down] {
        let b = gamma.block(spin);
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:.16e}", b[(i, j)])).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_snapshot(input: &mut impl BufRead) -> Result<DensityMatrix, RdmError> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(RdmError::SnapshotFormat {
        line: 1,
        message: "empty file".into(),
    })?;
    let header = header?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(RdmError::SnapshotFormat {
            line: 1,
            message: "expected header `N s`".into(),
        })?;
    let s: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(RdmError::SnapshotFormat {
            line: 1,
            message: "expected header `N s`".into(),
        })?;
    if s != 2 {
        return Err(RdmError::SnapshotFormat {
            line: 1,
            message: format!("expected 2 spin blocks, got {s}"),
        });
    }
    if n == 0 {
        return Err(RdmError::SnapshotFormat {
            line: 1,
            message: "zero dimension".into(),
        });
    }

    let mut blocks = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut block = Mat::zeros(n, n);
        for i in 0..n {
            let (idx, row) = lines.next().ok_or(RdmError::SnapshotFormat {
                line: 0,
                message: "unexpected end of file".into(),
            })?;
            let row = row?;
            let entries: Vec<&str> = row.split_whitespace().collect();
            if entries.len() != n {
                return Err(RdmError::SnapshotFormat {
                    line: idx + 1,
                    message: format!("expected {n} entries, got {}", entries.len()),
                });
            }
            for (j, tok) in entries.iter().enumerate() {
                block[(i, j)] = tok.parse().map_err(|_| RdmError::SnapshotFormat {
                    line: idx + 1,
                    message: format!("bad float `{tok}`"),
                })?;
            }
        }
        blocks.push(block);
    }
    let down = blocks.pop().unwrap();
    let up = blocks.pop().unwrap();
    DensityMatrix::new(up, down)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::frobenius_distance;
    use std::io::BufReader;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let up = Mat::from_row_slice(
            2,
            2,
            &[0.123456789012345678, 0.3, 0.3, 1.0 / 3.0],
        );
        let dn = Mat::from_row_slice(2, 2, &[0.9, -0.111, -0.111, 0.25]);
        let g = DensityMatrix::new(up, dn).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&g, &mut buf).unwrap();
        let back = read_snapshot(&mut BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(frobenius_distance(&g, &back).unwrap(), 0.0);
        for spin in [Spin::Up, Spin::Down] {
            assert_eq!(g.block(spin), back.block(spin));
        }
    }

    #[test]
    fn truncated_snapshot_reports_line() {
        let text = "2 2\n1.0 0.0\n";
        let err = read_snapshot(&mut BufReader::new(text.as_bytes())).unwrap_err();
        assert!(matches!(err, RdmError::SnapshotFormat { .. }));
    }
}
