//! CSV export of paths and wealth snapshots.
//!
//! Floats are written with `{}` (shortest representation that parses back
//! to the same `f64`), `,` separated, LF line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::agents::WealthSnapshot;
use super::two_sector::PathPoint;
use crate::error::{Error, Result};

pub fn write_path<W: Write + ?Sized>(out: &mut W, points: &[PathPoint]) -> std::io::Result<()> {
    writeln!(out, "time,h,H,delta")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.time, p.h, p.big_h, p.delta)?;
    }
    Ok(())
}

pub fn write_snapshots<W: Write + ?Sized>(
    out: &mut W,
    snapshots: &[WealthSnapshot],
) -> std::io::Result<()> {
    writeln!(out, "time,agent_id,wealth")?;
    for s in snapshots {
        for (id, w) in s.absolute_wealth().enumerate() {
            writeln!(out, "{},{},{}", s.time, id, w)?;
        }
    }
    Ok(())
}

pub fn write_public<W: Write + ?Sized>(
    out: &mut W,
    snapshots: &[WealthSnapshot],
) -> std::io::Result<()> {
    writeln!(out, "time,public_wealth")?;
    for s in snapshots {
        writeln!(out, "{},{}", s.time, s.absolute_public())?;
    }
    Ok(())
}

/// Creates `path` and runs `body` on a buffered writer, mapping failures
/// to [`Error::Io`].
pub fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    body(&mut out).map_err(io)?;
    out.flush().map_err(io)
}
