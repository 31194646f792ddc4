//! Spin-sample text format.
//!
//! ```text
//! # n=<n> beta=<beta> p=<p> seed=<seed>
//! +1 -1 -1 +1 ...
//! ```
//!
//! One configuration per line, `n` space-separated `+1`/`-1` tokens.

use serde::Serialize;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleHeader {
    pub n: usize,
    pub beta: f64,
    pub p: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub header: SampleHeader,
    pub configurations: Vec<Vec<i8>>,
}

impl SampleFile {
    /// Average spin of every configuration.
    pub fn xbars(&self) -> Vec<f64> {
        self.configurations
            .iter()
            .map(|c| c.iter().map(|&v| v as f64).sum::<f64>() / c.len() as f64)
            .collect()
    }
}

pub fn write_samples<W: Write>(
    out: &mut W,
    header: &SampleHeader,
    configs: &[Vec<i8>],
) -> Result<()> {
    writeln!(
        out,
        "# n={} beta={} p={} seed={}",
        header.n, header.beta, header.p, header.seed
    )?;
    for c in configs {
        let line: Vec<&str> = c.iter().map(|&v| if v > 0 { "+1" } else { "-1" }).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<SampleHeader> {
    let bad = |reason: String| Error::SampleFormat { line: 1, reason };
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| bad("missing '#' header".into()))?;
    let (mut n, mut beta, mut p, mut seed) = (None, None, None, None);
    for tok in body.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("token '{tok}' is not key=value")))?;
        let perr = |_| bad(format!("cannot parse {key}={val}"));
        match key {
            "n" => n = Some(val.parse::<usize>().map_err(|e| perr(e.to_string()))?),
            "beta" => beta = Some(val.parse::<f64>().map_err(|e| perr(e.to_string()))?),
            "p" => p = Some(val.parse::<u32>().map_err(|e| perr(e.to_string()))?),
            "seed" => seed = Some(val.parse::<u64>().map_err(|e| perr(e.to_string()))?),
            other => return Err(bad(format!("unknown header key '{other}'"))),
        }
    }
    match (n, beta, p, seed) {
        (Some(n), Some(beta), Some(p), Some(seed)) => Ok(SampleHeader { n, beta, p, seed }),
        _ => Err(bad("header needs n, beta, p and seed".into())),
    }
}

pub fn read_samples<R: BufRead>(input: R) -> Result<SampleFile> {
    let mut lines = input.lines();
    let first = lines.next().ok_or(Error::SampleFormat {
        line: 1,
        reason: "empty file".into(),
    })??;
    let header = parse_header(first.trim())?;
    let mut configurations = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let spins = line
            .split_whitespace()
            .map(|t| match t {
                "+1" | "1" => Ok(1i8),
                "-1" => Ok(-1i8),
                other => Err(Error::SampleFormat {
                    line: lineno,
                    reason: format!("bad spin token '{other}'"),
                }),
            })
            .collect::<Result<Vec<i8>>>()?;
        if spins.len() != header.n {
            return Err(Error::SampleFormat {
                line: lineno,
                reason: format!("expected {} spins, found {}", header.n, spins.len()),
            });
        }
        configurations.push(spins);
    }
    Ok(SampleFile {
        header,
        configurations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let header = SampleHeader {
            n: 3,
            beta: 0.8,
            p: 3,
            seed: 42,
        };
        let configs = vec![vec![1, -1, 1], vec![-1, -1, -1]];
        let mut buf = Vec::new();
        write_samples(&mut buf, &header, &configs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "# n=3 beta=0.8 p=3 seed=42\n+1 -1 +1\n-1 -1 -1\n");
        let back = read_samples(buf.as_slice()).unwrap();
        assert_eq!(back.header, header);
        assert_eq!(back.configurations, configs);
        assert!((back.xbars()[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_samples("".as_bytes()).is_err());
        assert!(read_samples("n=3 beta=1 p=3 seed=0\n".as_bytes()).is_err());
        assert!(read_samples("# n=3 beta=1 p=3\n".as_bytes()).is_err());
        let e = read_samples("# n=2 beta=1 p=3 seed=0\n+1 0\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::SampleFormat { line: 2, .. }));
        let e = read_samples("# n=2 beta=1 p=3 seed=0\n+1 -1 +1\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::SampleFormat { line: 2, .. }));
    }
}
