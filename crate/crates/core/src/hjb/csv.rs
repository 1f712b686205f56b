//! CSV export and import of value fields and feedback policies.
//!
//! Layout: `#`-prefixed header lines (config hash, optional timestamp, grid
//! metadata), a column header `t,ray,x,l,value,control`, then one row per
//! `(ray, k, m, n)`. Vertex rows (`m = 0`) repeat the shared vertex value
//! for every ray. `control` is the ray-control value for `m >= 1` and the
//! vertex-control grid index for `m = 0`. Floats use the shortest
//! round-tripping representation, so import reproduces the field bit-exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::field::{ray_offset, vertex_offset};
use super::{FeedbackPolicy, Grid, ValueField};
use crate::error::{Error, Result};
use crate::model::ControlSets;

pub const COLUMNS: &str = "t,ray,x,l,value,control";

/// Header metadata written above the columns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvHeader {
    pub config_hash: String,
    pub timestamp: Option<String>,
}

pub(crate) fn write_preamble<W: Write>(out: &mut W, header: &CsvHeader) -> Result<()> {
    writeln!(out, "# config_sha256={}", header.config_hash)?;
    if let Some(ts) = &header.timestamp {
        writeln!(out, "# generated={ts}")?;
    }
    Ok(())
}

fn grid_line(g: &Grid) -> String {
    format!(
        "# grid ray_count={} horizon={} n_t={} n_x={} x_max={} n_l={} l_max={}",
        g.ray_count, g.horizon, g.n_t, g.n_x, g.x_max, g.n_l, g.l_max
    )
}

/// Writes the field together with the policy controls.
pub fn write_field_csv<W: Write>(
    out: &mut W,
    field: &ValueField,
    policy: &FeedbackPolicy,
    header: &CsvHeader,
) -> Result<()> {
    let g = field.grid;
    if policy.grid != g {
        return Err(Error::InvalidInput("field and policy grids differ".into()));
    }
    write_preamble(out, header)?;
    writeln!(out, "{}", grid_line(&g))?;
    writeln!(out, "{COLUMNS}")?;
    let mut line = String::with_capacity(96);
    for i in 0..g.ray_count {
        let points = policy.controls.ray_points(i);
        for k in 0..g.time_slices() {
            let t = g.time(k);
            for m in 0..g.n_x {
                let x = g.space(m);
                for n in 0..g.n_l {
                    line.clear();
                    let l = g.local_time(n);
                    if m == 0 {
                        let v = field.vertex[vertex_offset(&g, k, n)];
                        let c = policy.vertex[vertex_offset(&g, k, n)];
                        let _ = write!(line, "{t},{},{x},{l},{v},{c}", i + 1);
                    } else {
                        let o = ray_offset(&g, k, i, n, m);
                        let v = field.rays[o];
                        let c = points[policy.rays[o] as usize];
                        let _ = write!(line, "{t},{},{x},{l},{v},{c}", i + 1);
                    }
                    writeln!(out, "{line}")?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Format {
        line,
        detail: format!("bad {what} '{s}'"),
    })
}

fn parse_usize(s: &str, line: usize, what: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Format {
        line,
        detail: format!("bad {what} '{s}'"),
    })
}

fn parse_grid(rest: &str, line: usize) -> Result<Grid> {
    let mut vals = std::collections::BTreeMap::new();
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Format {
            line,
            detail: format!("bad grid entry '{kv}'"),
        })?;
        vals.insert(k, v);
    }
    let get = |k: &str| {
        vals.get(k).copied().ok_or_else(|| Error::Format {
            line,
            detail: format!("grid metadata lacks '{k}'"),
        })
    };
    Grid::from_parts(
        parse_usize(get("ray_count")?, line, "ray_count")?,
        parse_f64(get("horizon")?, line, "horizon")?,
        parse_usize(get("n_t")?, line, "n_t")?,
        parse_usize(get("n_x")?, line, "n_x")?,
        parse_f64(get("x_max")?, line, "x_max")?,
        parse_usize(get("n_l")?, line, "n_l")?,
        parse_f64(get("l_max")?, line, "l_max")?,
    )
}

/// Reads a file written by [`write_field_csv`]. Ray controls are mapped back
/// to indices in `controls`, which must be the grids used for solving.
pub fn read_field_csv<R: BufRead>(input: R, controls: &ControlSets) -> Result<(ValueField, FeedbackPolicy, CsvHeader)> {
    let mut header = CsvHeader::default();
    let mut grid = None;
    let mut lines = input.lines().enumerate();
    for (idx, line) in lines.by_ref() {
        let line = line?;
        let no = idx + 1;
        if let Some(rest) = line.strip_prefix("# config_sha256=") {
            header.config_hash = rest.to_string();
        } else if let Some(rest) = line.strip_prefix("# generated=") {
            header.timestamp = Some(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("# grid ") {
            grid = Some(parse_grid(rest, no)?);
        } else if line.starts_with('#') {
            continue;
        } else if line == COLUMNS {
            break;
        } else {
            return Err(Error::Format {
                line: no,
                detail: format!("expected column header '{COLUMNS}'"),
            });
        }
    }
    let g = grid.ok_or(Error::Format {
        line: 0,
        detail: "missing grid metadata line".into(),
    })?;
    if controls.ray_count() != g.ray_count {
        return Err(Error::Config("control sets do not match the grid ray count".into()));
    }
    let mut field = ValueField::zeros(g);
    let mut policy = FeedbackPolicy::zeros(g, controls.clone());
    let expected = g.ray_count * g.time_slices() * g.n_x * g.n_l;
    let mut count = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::Format {
                line: no,
                detail: format!("expected 6 columns, found {}", cols.len()),
            });
        }
        if count >= expected {
            return Err(Error::Format {
                line: no,
                detail: "more rows than the grid holds".into(),
            });
        }
        // Rows follow the write order; the coordinates are checked as well.
        let n = count % g.n_l;
        let m = (count / g.n_l) % g.n_x;
        let k = (count / (g.n_l * g.n_x)) % g.time_slices();
        let i = count / (g.n_l * g.n_x * g.time_slices());
        let ray = parse_usize(cols[1], no, "ray")?;
        let coords = [
            (parse_f64(cols[0], no, "t")?, g.time(k)),
            (parse_f64(cols[2], no, "x")?, g.space(m)),
            (parse_f64(cols[3], no, "l")?, g.local_time(n)),
        ];
        if ray != i + 1 || coords.iter().any(|(a, b)| a != b) {
            return Err(Error::Format {
                line: no,
                detail: "row coordinates out of order".into(),
            });
        }
        let v = parse_f64(cols[4], no, "value")?;
        if m == 0 {
            let c = parse_usize(cols[5], no, "vertex control index")?;
            if c >= controls.vertex_points().len() {
                return Err(Error::Format {
                    line: no,
                    detail: format!("vertex control index {c} out of range"),
                });
            }
            let o = vertex_offset(&g, k, n);
            if i == 0 {
                field.vertex[o] = v;
                policy.vertex[o] = c as u16;
            } else if field.vertex[o].to_bits() != v.to_bits() {
                return Err(Error::Format {
                    line: no,
                    detail: "vertex value differs across rays".into(),
                });
            }
        } else {
            let c = parse_f64(cols[5], no, "control")?;
            let index = controls
                .ray_points(i)
                .iter()
                .position(|&b| b == c)
                .ok_or_else(|| Error::Format {
                    line: no,
                    detail: format!("control {c} is not in the ray-{} grid", i + 1),
                })?;
            let o = ray_offset(&g, k, i, n, m);
            field.rays[o] = v;
            policy.rays[o] = index as u16;
        }
        count += 1;
    }
    if count != expected {
        return Err(Error::Format {
            line: 0,
            detail: format!("expected {expected} rows, found {count}"),
        });
    }
    Ok((field, policy, header))
}
