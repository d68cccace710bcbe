//! Plain-text structured-grid dump: a header `dims nx ny nz` followed by one
//! value per line in x-fastest order. Values use the shortest round-trip
//! exponent notation, so a dump read back is bit-identical.

use std::io::{self, BufRead, Write};

use crate::real::Real;

pub fn write_dump<T: Real + std::fmt::LowerExp, W: Write>(
    out: &mut W,
    dims: [usize; 3],
    values: &[T],
) -> io::Result<()> {
    if values.len() != dims[0] * dims[1] * dims[2] {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "value count does not match dims"));
    }
    writeln!(out, "dims {} {} {}", dims[0], dims[1], dims[2])?;
    for v in values {
        writeln!(out, "{v:e}")?;
    }
    Ok(())
}

pub fn read_dump<T: Real + std::str::FromStr, R: BufRead>(input: R) -> io::Result<([usize; 3], Vec<T>)> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("missing header"))??;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("dims") {
        return Err(bad("header must start with `dims`"));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        *d = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed dims"))?;
    }
    let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(t.parse::<T>().map_err(|_| bad("malformed value"))?);
    }
    if values.len() != dims[0] * dims[1] * dims[2] {
        return Err(bad("value count does not match dims"));
    }
    Ok((dims, values))
}
