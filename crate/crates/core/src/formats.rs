//! Text formats: seed files, ground truth and CSV outputs.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::detect::{AffinityMatrix, SeedSet};
use crate::error::{Error, Result};
use crate::eval::{Bin, CellSummary};
use crate::graph::Graph;

/// Formats like C's `%.9g`: nine significant digits, trailing zeros dropped.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(e.into())),
            Ok(line) => {
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, t.to_string())))
                }
            }
        })
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Reads `node-label community-index affinity` lines.
///
/// The number of communities is one past the largest index seen. Entries
/// not listed for a seed default to zero; listing the same pair twice is an
/// error.
pub fn read_seeds<R: BufRead>(reader: R, graph: &Graph) -> Result<SeedSet> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let [label, community, value] = tokens[..] else {
            return Err(parse_err(
                line,
                format!("expected 3 fields, found {}", tokens.len()),
            ));
        };
        let node = graph
            .node_id(label)
            .ok_or_else(|| parse_err(line, format!("unknown node {label:?}")))?;
        let community: usize = community
            .parse()
            .map_err(|_| parse_err(line, format!("bad community index {community:?}")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| parse_err(line, format!("bad affinity {value:?}")))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(parse_err(line, format!("affinity {value} outside [0, 1]")));
        }
        if !seen.insert((node, community)) {
            return Err(parse_err(
                line,
                format!("duplicate entry for node {label:?}, community {community}"),
            ));
        }
        entries.push((node, community, value));
    }
    let Some(l) = entries.iter().map(|e| e.1 + 1).max() else {
        return Err(Error::EmptySeedSet);
    };
    let mut seeds = SeedSet::new(l)?;
    for (node, community, value) in entries {
        seeds.set(node, community, value)?;
    }
    Ok(seeds)
}

/// Writes seeds in the format [`read_seeds`] accepts, zero entries included.
pub fn write_seeds<W: Write>(mut out: W, graph: &Graph, seeds: &SeedSet) -> Result<()> {
    for (node, row) in seeds.iter() {
        for (c, &v) in row.iter().enumerate() {
            writeln!(out, "{} {} {}", graph.label(node), c, format_sig(v))?;
        }
    }
    Ok(())
}

/// Reads `node-label community` lines covering every node of `graph`.
pub fn read_truth<R: BufRead>(reader: R, graph: &Graph) -> Result<Vec<usize>> {
    let mut membership = vec![None; graph.node_count()];
    for item in data_lines(reader) {
        let (line, text) = item?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let [label, community] = tokens[..] else {
            return Err(parse_err(
                line,
                format!("expected 2 fields, found {}", tokens.len()),
            ));
        };
        let node = graph
            .node_id(label)
            .ok_or_else(|| parse_err(line, format!("unknown node {label:?}")))?;
        let community: usize = community
            .parse()
            .map_err(|_| parse_err(line, format!("bad community index {community:?}")))?;
        if membership[node].replace(community).is_some() {
            return Err(parse_err(line, format!("node {label:?} listed twice")));
        }
    }
    membership
        .into_iter()
        .enumerate()
        .map(|(v, c)| {
            c.ok_or_else(|| {
                Error::InvalidParameter(format!("no community given for node {:?}", graph.label(v)))
            })
        })
        .collect()
}

pub fn write_truth<W: Write>(mut out: W, graph: &Graph, membership: &[usize]) -> Result<()> {
    for (v, c) in membership.iter().enumerate() {
        writeln!(out, "{} {}", graph.label(v), c)?;
    }
    Ok(())
}

/// `node,c0,...` with one row per node in id order. Seeds carry their given
/// affinities, other nodes their detected ones clamped into `[0, 1]`.
pub fn write_affinity_csv<W: Write>(
    mut out: W,
    graph: &Graph,
    affinities: &AffinityMatrix,
    seeds: &SeedSet,
) -> Result<()> {
    let l = seeds.communities();
    let header: Vec<String> = (0..l).map(|c| format!("c{c}")).collect();
    writeln!(out, "node,{}", header.join(","))?;
    let mut detected = affinities.rows().peekable();
    for v in 0..graph.node_count() {
        let row: Vec<f64> = if let Some(beta) = seeds.affinities(v) {
            beta.to_vec()
        } else if detected.peek().is_some_and(|(node, _)| *node == v) {
            let (_, row) = detected.next().expect("peeked");
            row.iter().map(|x| x.clamp(0.0, 1.0)).collect()
        } else {
            return Err(Error::InvalidParameter(format!(
                "no affinity for node {:?}",
                graph.label(v)
            )));
        };
        let cells: Vec<String> = row.into_iter().map(format_sig).collect();
        writeln!(out, "{},{}", graph.label(v), cells.join(","))?;
    }
    Ok(())
}

/// `node,community`; nodes without an assignment are skipped.
pub fn write_crisp_csv<W: Write>(
    mut out: W,
    graph: &Graph,
    membership: &[Option<usize>],
) -> Result<()> {
    writeln!(out, "node,community")?;
    for (v, c) in membership.iter().enumerate() {
        if let Some(c) = c {
            writeln!(out, "{},{}", graph.label(v), c)?;
        }
    }
    Ok(())
}

pub const RESULTS_HEADER: &str =
    "N,avg_k,gamma,beta_exp,mu,sigma,trials,q_mean,q_std,q_min,q_max,seconds_mean";

/// One row per sweep cell. `trials` counts completed trials. Wall-clock
/// time is written only when `timing` is set, so that untimed output is
/// reproducible byte for byte.
pub fn write_results_csv<W: Write>(mut out: W, cells: &[CellSummary], timing: bool) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for s in cells {
        let p = &s.cell.params;
        let seconds = if timing {
            format_sig(s.seconds_mean)
        } else {
            String::new()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.n,
            format_sig(p.avg_k),
            format_sig(p.gamma),
            format_sig(p.beta_exp),
            format_sig(p.mu),
            format_sig(s.cell.sigma),
            s.completed,
            format_sig(s.q_mean),
            format_sig(s.q_std),
            format_sig(s.q_min),
            format_sig(s.q_max),
            seconds
        )?;
    }
    Ok(())
}

pub fn write_histogram_csv<W: Write>(mut out: W, bins: &[Bin]) -> Result<()> {
    writeln!(out, "bin_lo,bin_hi,freq")?;
    for b in bins {
        writeln!(
            out,
            "{},{},{}",
            format_sig(b.lo),
            format_sig(b.hi),
            format_sig(b.freq)
        )?;
    }
    Ok(())
}
