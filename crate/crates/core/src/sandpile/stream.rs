//! Avalanche stream CSV: `timestep,size_S,area,duration,dissipated,trigger_row,trigger_col`.

use std::io::{BufRead, Write};

use super::{AvalancheRecord, Cell};
use crate::error::{Error, Result};

pub const HEADER: &str = "timestep,size_S,area,duration,dissipated,trigger_row,trigger_col";

pub fn write_records<W: Write>(mut w: W, records: &[AvalancheRecord]) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in records {
        let (row, col) = match r.trigger {
            Some(c) => (c.row.to_string(), c.col.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.timestep, r.size, r.area, r.duration, r.dissipated, row, col
        )?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<AvalancheRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<avalanche stream>", e))?;
        let line = line.trim();
        if i == 0 {
            if line != HEADER {
                return Err(Error::Config(format!("unexpected avalanche stream header {line:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Config(format!("malformed avalanche stream line {}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
        let trigger = match (f[5], f[6]) {
            ("", "") => None,
            (r, c) => Some(Cell::new(
                r.parse().map_err(|_| bad())?,
                c.parse().map_err(|_| bad())?,
            )),
        };
        out.push(AvalancheRecord {
            timestep: num(f[0])?,
            size: num(f[1])?,
            area: num(f[2])?,
            duration: num(f[3])?,
            dissipated: num(f[4])?,
            trigger,
        });
    }
    Ok(out)
}
