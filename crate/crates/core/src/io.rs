//! Plain-text file formats: SFT descriptions, measures, and carpet specs.
//! Serialization is canonical so parse/serialize round-trips are bit-exact.

use crate::carpet::CarpetSpec;
use crate::error::{Error, Result};
use crate::measures::{BernoulliMeasure, MarkovMeasure, Measure};
use crate::symbolic::{make_sft, Sft, SymbolicSystem};

/// Parse an SFT description: first line the alphabet size, then the 0/1
/// transition matrix rows, then optionally one line with the factor table
/// (space-separated target symbols). Without a factor line the system is
/// its own factor under the identity code.
pub fn parse_system(text: &str) -> Result<SymbolicSystem> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() {
        return Err(Error::Parse("empty system file".to_string()));
    }
    let size: usize = lines[0]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad alphabet size {:?}", lines[0])))?;
    if lines.len() < 1 + size {
        return Err(Error::Parse(format!(
            "expected {size} transition rows, found {}",
            lines.len() - 1
        )));
    }
    let mut transitions = Vec::with_capacity(size);
    for row_line in &lines[1..1 + size] {
        let row: Vec<bool> = row_line
            .split_whitespace()
            .map(|tok| match tok {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Parse(format!("bad transition entry {other:?}"))),
            })
            .collect::<Result<_>>()?;
        transitions.push(row);
    }
    let source = make_sft(size, transitions)?;

    let rest: Vec<&str> = lines[1 + size..]
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect();
    match rest.len() {
        0 => Ok(SymbolicSystem::identity(source)),
        1 => {
            let table: Vec<u8> = rest[0]
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u8>()
                        .map_err(|_| Error::Parse(format!("bad factor entry {tok:?}")))
                })
                .collect::<Result<_>>()?;
            if table.len() != size {
                return Err(Error::Parse(format!(
                    "factor table has {} entries for alphabet size {size}",
                    table.len()
                )));
            }
            let target = induced_target(&source, &table)?;
            SymbolicSystem::new(source, target, table)
        }
        n => Err(Error::Parse(format!("unexpected trailing content ({n} lines)"))),
    }
}

/// The canonical image SFT of a one-block code: `cd` allowed iff some
/// allowed `ij` maps onto it.
pub fn induced_target(source: &Sft, table: &[u8]) -> Result<Sft> {
    let m = table
        .iter()
        .map(|&t| t as usize + 1)
        .max()
        .ok_or_else(|| Error::Parse("empty factor table".to_string()))?;
    let mut t = vec![vec![false; m]; m];
    for i in 0..source.size() {
        for j in 0..source.size() {
            if source.allowed(i as u8, j as u8) {
                t[table[i] as usize][table[j] as usize] = true;
            }
        }
    }
    make_sft(m, t)
}

/// Canonical rendering of [`parse_system`]'s format.
pub fn serialize_system(system: &SymbolicSystem) -> String {
    let mut out = String::new();
    out.push_str(&system.source().size().to_string());
    out.push('\n');
    for row in system.source().transitions() {
        let toks: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&toks.join(" "));
        out.push('\n');
    }
    if !system.code().is_identity() || system.target().size() != system.source().size() {
        let toks: Vec<String> = system.code().table().iter().map(|t| t.to_string()).collect();
        out.push_str(&toks.join(" "));
        out.push('\n');
    }
    out
}

/// Parse a measure file: `bernoulli p0 p1 ...` or `markov` followed by the
/// row-stochastic matrix, one row per line. Probability vectors that miss
/// the simplex by more than 1e-9 are refused outright; drift below that is
/// normalized exactly.
pub fn parse_measure(text: &str) -> Result<Measure> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let head = lines
        .next()
        .ok_or_else(|| Error::Parse("empty measure file".to_string()))?;
    let mut toks = head.split_whitespace();
    match toks.next() {
        Some("bernoulli") => {
            let mut probs: Vec<f64> = toks
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad probability {t:?}")))
                })
                .collect::<Result<_>>()?;
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Parse(format!(
                    "probabilities sum to {sum}; renormalization refused"
                )));
            }
            probs.iter_mut().for_each(|p| *p /= sum);
            Ok(Measure::Bernoulli(BernoulliMeasure::new(probs)?))
        }
        Some("markov") => {
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for line in lines {
                let row: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad probability {t:?}")))
                    })
                    .collect::<Result<_>>()?;
                rows.push(row);
            }
            if rows.is_empty() {
                return Err(Error::Parse("markov measure needs matrix rows".to_string()));
            }
            for row in &mut rows {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Parse(format!(
                        "matrix row sums to {sum}; renormalization refused"
                    )));
                }
                row.iter_mut().for_each(|p| *p /= sum);
            }
            Ok(Measure::Markov(MarkovMeasure::new(rows)?))
        }
        other => Err(Error::Parse(format!(
            "expected 'bernoulli' or 'markov', found {other:?}"
        ))),
    }
}

pub fn serialize_measure(m: &Measure) -> String {
    match m {
        Measure::Bernoulli(b) => {
            let toks: Vec<String> = b.probs().iter().map(|p| format!("{p}")).collect();
            format!("bernoulli {}\n", toks.join(" "))
        }
        Measure::Markov(mk) => {
            let mut out = String::from("markov\n");
            for row in mk.stochastic() {
                let toks: Vec<String> = row.iter().map(|p| format!("{p}")).collect();
                out.push_str(&toks.join(" "));
                out.push('\n');
            }
            out
        }
    }
}

/// Parse a carpet spec: `carpet m1 m2` then one `i j` digit pair per line.
pub fn parse_carpet(text: &str) -> Result<CarpetSpec> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let head = lines
        .next()
        .ok_or_else(|| Error::Parse("empty carpet file".to_string()))?;
    let toks: Vec<&str> = head.split_whitespace().collect();
    if toks.len() != 3 || toks[0] != "carpet" {
        return Err(Error::Parse(format!("expected 'carpet m1 m2', found {head:?}")));
    }
    let m1: u32 = toks[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad m1 {:?}", toks[1])))?;
    let m2: u32 = toks[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad m2 {:?}", toks[2])))?;
    let mut digits = Vec::new();
    for line in lines {
        let pair: Vec<&str> = line.split_whitespace().collect();
        if pair.len() != 2 {
            return Err(Error::Parse(format!("expected 'i j', found {line:?}")));
        }
        let i: u32 = pair[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad digit {:?}", pair[0])))?;
        let j: u32 = pair[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad digit {:?}", pair[1])))?;
        digits.push((i, j));
    }
    CarpetSpec::new(m1, m2, digits)
}

pub fn serialize_carpet(spec: &CarpetSpec) -> String {
    let mut out = format!("carpet {} {}\n", spec.m1, spec.m2);
    for (i, j) in &spec.digits {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_roundtrip_bit_exact() {
        let texts = [
            "2\n1 1\n1 1\n",
            "2\n1 1\n1 0\n",
            "3\n1 1 1\n1 1 1\n1 1 1\n0 1 1\n",
        ];
        for text in texts {
            let sys = parse_system(text).unwrap();
            let rendered = serialize_system(&sys);
            assert_eq!(rendered, text, "round trip differs");
            let reparsed = parse_system(&rendered).unwrap();
            assert_eq!(serialize_system(&reparsed), rendered);
        }
    }

    #[test]
    fn system_parse_errors() {
        assert!(parse_system("").is_err());
        assert!(parse_system("2\n1 1\n").is_err());
        assert!(parse_system("2\n1 1\nx 0\n").is_err());
        // stranded symbol via the underlying validator
        assert!(parse_system("2\n0 0\n1 1\n").is_err());
        // bad factor table length
        assert!(parse_system("2\n1 1\n1 1\n0\n").is_err());
    }

    #[test]
    fn measure_roundtrip_and_refusal() {
        let texts = [
            "bernoulli 0.5 0.5\n",
            "bernoulli 0.25 0.25 0.5\n",
            "markov\n0.5 0.5\n0.25 0.75\n",
        ];
        for text in texts {
            let m = parse_measure(text).unwrap();
            let rendered = serialize_measure(&m);
            assert_eq!(rendered, text);
        }
        assert!(parse_measure("bernoulli 0.5 0.6\n").is_err());
        assert!(parse_measure("markov\n0.9 0.2\n0.5 0.5\n").is_err());
        assert!(parse_measure("dirichlet 1 1\n").is_err());
    }

    #[test]
    fn carpet_roundtrip() {
        let text = "carpet 2 3\n0 0\n1 1\n1 2\n";
        let spec = parse_carpet(text).unwrap();
        assert_eq!(serialize_carpet(&spec), text);
        assert!(parse_carpet("carpet 1 3\n0 0\n").is_err());
        assert!(parse_carpet("square 2 3\n0 0\n").is_err());
    }
}
