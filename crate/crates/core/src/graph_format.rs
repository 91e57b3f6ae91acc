//! Line-oriented graph interchange format.
//!
//! ```text
//! vertices 4 boundary 1
//! 3
//! 0 1 1
//! 1 2 2
//! 2 3 4
//! ```
//!
//! The header is followed by `k` lines holding one boundary vertex id each,
//! then one `u v m` line per undirected edge bundle. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{LabError, Result};
use crate::graph::MultiGraph;

pub fn write_graph<W: Write>(g: &MultiGraph, mut out: W) -> Result<()> {
    let mut buf = String::new();
    writeln!(buf, "vertices {} boundary {}", g.vertex_count(), g.boundary_count()).unwrap();
    for b in g.boundary() {
        writeln!(buf, "{b}").unwrap();
    }
    for (u, v, m) in g.edges() {
        writeln!(buf, "{u} {v} {m}").unwrap();
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn read_graph<R: BufRead>(input: R) -> Result<MultiGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut boundary = Vec::new();
    let mut edges = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let parse = |s: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|e| LabError::Parse {
                line: line_no,
                msg: format!("`{s}`: {e}"),
            })
        };
        match header {
            None => {
                if tokens.len() != 4 || tokens[0] != "vertices" || tokens[2] != "boundary" {
                    return Err(LabError::Parse {
                        line: line_no,
                        msg: "expected header `vertices N boundary k`".into(),
                    });
                }
                header = Some((parse(tokens[1])? as usize, parse(tokens[3])? as usize));
            }
            Some((_, k)) if boundary.len() < k => {
                if tokens.len() != 1 {
                    return Err(LabError::Parse {
                        line: line_no,
                        msg: format!("expected boundary vertex id ({} of {k})", boundary.len() + 1),
                    });
                }
                boundary.push(parse(tokens[0])? as usize);
            }
            Some(_) => {
                if tokens.len() != 3 {
                    return Err(LabError::Parse {
                        line: line_no,
                        msg: "expected edge line `u v m`".into(),
                    });
                }
                edges.push((
                    parse(tokens[0])? as usize,
                    parse(tokens[1])? as usize,
                    parse(tokens[2])?,
                ));
            }
        }
    }
    let (n, k) = header.ok_or(LabError::Parse {
        line: 0,
        msg: "missing header".into(),
    })?;
    if boundary.len() != k {
        return Err(LabError::Parse {
            line: 0,
            msg: format!("header promises {k} boundary vertices, found {}", boundary.len()),
        });
    }
    MultiGraph::from_edges(n, &edges, &boundary)
}
