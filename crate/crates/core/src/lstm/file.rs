//! Plain-text model file.
//!
//! ```text
//! slipcal-lstm 1
//! scalar f64
//! hidden 20
//! input 1
//! output 2
//! window 50                      # or "none"
//! config 0123456789abcdef        # training-config fingerprint, hex
//! norm_p_low -1.25e-3
//! norm_p_high 1.31e-3
//! W_z 20 1
//! <20 values, row-major, one row per line>
//! ...                            # W_i W_f W_o R_z R_i R_f R_o b_z b_i b_f b_o W_y b_y
//! end
//! ```
//!
//! Values are shortest round-trip decimal (Rust `{:e}`), so write/read is
//! exact. Lines starting with `#` are ignored. The `scalar` line records the
//! writer's precision; a reader may parse into either precision.

use std::io::{BufRead, Write};

use thiserror::Error;

use super::{Dims, LstmModel, LstmParams};
use crate::scalar::Real;
use crate::signal::NormalizationStats;

pub const MODEL_MAGIC: &str = "slipcal-lstm";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("model file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_model<T: Real, W: Write>(model: &LstmModel<T>, mut out: W) -> Result<(), ModelFileError> {
    let d = model.dims();
    writeln!(out, "{MODEL_MAGIC} {VERSION}")?;
    writeln!(out, "scalar {}", T::NAME)?;
    writeln!(out, "hidden {}", d.hidden)?;
    writeln!(out, "input {}", d.input)?;
    writeln!(out, "output {}", d.output)?;
    match model.window_size {
        Some(w) => writeln!(out, "window {w}")?,
        None => writeln!(out, "window none")?,
    }
    writeln!(out, "config {:016x}", model.config_fingerprint)?;
    writeln!(out, "norm_p_low {:e}", model.norm_stats.p_low())?;
    writeln!(out, "norm_p_high {:e}", model.norm_stats.p_high())?;
    for (name, rows, cols, values) in model.params.blocks() {
        writeln!(out, "{name} {rows} {cols}")?;
        for row in values.chunks(cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    writeln!(out, "end")?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, ModelFileError> {
        loop {
            self.line += 1;
            match self.inner.next() {
                None => return Err(self.err("unexpected end of file")),
                Some(l) => {
                    let l = l?;
                    let t = l.trim();
                    if t.is_empty() || t.starts_with('#') {
                        continue;
                    }
                    return Ok(t.to_string());
                }
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> ModelFileError {
        ModelFileError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<String, ModelFileError> {
        let l = self.next()?;
        let mut it = l.splitn(2, char::is_whitespace);
        match (it.next(), it.next()) {
            (Some(k), Some(v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(self.err(format!("expected '{key} <value>', found '{l}'"))),
        }
    }

    fn parse<V: std::str::FromStr>(&self, s: &str, what: &str) -> Result<V, ModelFileError> {
        s.parse().map_err(|_| self.err(format!("invalid {what} '{s}'")))
    }
}

pub fn read_model<T: Real, R: BufRead>(input: R) -> Result<LstmModel<T>, ModelFileError> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    let header = lines.next()?;
    if header != format!("{MODEL_MAGIC} {VERSION}") {
        return Err(lines.err(format!("unsupported header '{header}'")));
    }
    let scalar = lines.keyed("scalar")?;
    if scalar != "f32" && scalar != "f64" {
        return Err(lines.err(format!("unknown scalar '{scalar}'")));
    }
    let hidden: usize = {
        let v = lines.keyed("hidden")?;
        lines.parse(&v, "hidden size")?
    };
    let input: usize = {
        let v = lines.keyed("input")?;
        lines.parse(&v, "input size")?
    };
    let output: usize = {
        let v = lines.keyed("output")?;
        lines.parse(&v, "output size")?
    };
    let window = lines.keyed("window")?;
    let window_size = if window == "none" {
        None
    } else {
        Some(lines.parse::<usize>(&window, "window size")?)
    };
    let config = lines.keyed("config")?;
    let config_fingerprint =
        u64::from_str_radix(&config, 16).map_err(|_| lines.err(format!("invalid fingerprint '{config}'")))?;
    let lo: T = {
        let v = lines.keyed("norm_p_low")?;
        lines.parse(&v, "norm_p_low")?
    };
    let hi: T = {
        let v = lines.keyed("norm_p_high")?;
        lines.parse(&v, "norm_p_high")?
    };
    let norm_stats = NormalizationStats::new(lo, hi).map_err(|e| lines.err(e.to_string()))?;

    let dims = Dims::new(hidden, input, output);
    let template = LstmParams::<T>::zeros(dims);
    let mut data = Vec::with_capacity(dims.len());
    for (name, rows, cols, _) in template.blocks() {
        let head = lines.next()?;
        let expect = format!("{name} {rows} {cols}");
        if head.split_whitespace().collect::<Vec<_>>().join(" ") != expect {
            return Err(lines.err(format!("expected block '{expect}', found '{head}'")));
        }
        for _ in 0..rows {
            let row = lines.next()?;
            let vals: Vec<&str> = row.split_whitespace().collect();
            if vals.len() != cols {
                return Err(lines.err(format!("{name}: expected {cols} values, found {}", vals.len())));
            }
            for v in vals {
                let x: T = lines.parse(v, name.as_str())?;
                if !x.is_finite() {
                    return Err(lines.err(format!("{name}: non-finite weight")));
                }
                data.push(x);
            }
        }
    }
    if lines.next()? != "end" {
        return Err(lines.err("expected 'end'"));
    }
    let params = LstmParams::from_vec(dims, data).expect("block sizes sum to dims.len()");
    Ok(LstmModel {
        params,
        norm_stats,
        window_size,
        config_fingerprint,
    })
}
