//! Text checkpoints:
//!
//! ```text
//! rlsgan-mlp v1
//! layers <count>
//! layer <in> <out> <activation>
//! <in rows of out comma-separated weights>
//! <one row of out comma-separated biases>
//! ...
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use super::{Layer, Mlp};
use crate::error::{Error, Result};
use crate::io::{read_lines, write_atomic, LineReader};
use crate::linalg::Matrix;

const MAGIC: &str = "rlsgan-mlp v1";

pub fn write_checkpoint(mut w: impl Write, net: &Mlp) -> std::io::Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "layers {}", net.layers().len())?;
    for l in net.layers() {
        writeln!(w, "layer {} {} {}", l.input_dim(), l.output_dim(), l.activation)?;
        for row in l.weights.row_iter() {
            write_row(&mut w, row)?;
        }
        write_row(&mut w, &l.bias)?;
    }
    Ok(())
}

fn write_row(w: &mut impl Write, row: &[f64]) -> std::io::Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            w.write_all(b",")?;
        }
        first = false;
        write!(w, "{v}")?;
    }
    writeln!(w)
}

pub fn read_checkpoint(r: impl BufRead, path: &Path) -> Result<Mlp> {
    let mut lines = LineReader::new(r, path);
    let header = lines.expect_line()?;
    if header.trim() != MAGIC {
        return Err(lines.error(format!("expected header '{MAGIC}'")));
    }
    let count: usize = parse_tagged(&mut lines, "layers")?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.expect_line()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "layer" {
            return Err(lines.error("expected 'layer <in> <out> <activation>'".into()));
        }
        let fan_in: usize = parts[1].parse().map_err(|_| lines.error("bad input width".into()))?;
        let fan_out: usize = parts[2].parse().map_err(|_| lines.error("bad output width".into()))?;
        let activation = parts[3].parse().map_err(|e: Error| lines.error(e.to_string()))?;
        let mut data = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in {
            data.extend(lines.expect_row(fan_out)?);
        }
        let bias = lines.expect_row(fan_out)?;
        layers.push(Layer {
            weights: Matrix::from_vec(fan_in, fan_out, data)?,
            bias,
            activation,
        });
    }
    Mlp::from_layers(layers)
}

fn parse_tagged<R: BufRead>(lines: &mut LineReader<'_, R>, tag: &str) -> Result<usize> {
    let line = lines.expect_line()?;
    line.strip_prefix(tag)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| lines.error(format!("expected '{tag} <count>'")))
}

pub fn save_checkpoint(path: &Path, net: &Mlp) -> Result<()> {
    write_atomic(path, |w| write_checkpoint(w, net))
}

pub fn load_checkpoint(path: &Path) -> Result<Mlp> {
    read_lines(path, read_checkpoint)
}
