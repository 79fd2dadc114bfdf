//! CSV form of simulation traces.
//!
//! Columns: `slot, uav, slot_type, x, y, z, granted, rate_bits, residual_bits`.
//! `slot_type` is one of `sensing`, `transmission`, `empty`; `granted` is
//! `0` or `1`. Floats are written in shortest round-trip form, so a trace
//! read back is bit-identical to the one written.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position3;
use crate::simulator::{SlotType, TraceRecord};

pub const TRACE_HEADER: [&str; 9] =
    ["slot", "uav", "slot_type", "x", "y", "z", "granted", "rate_bits", "residual_bits"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    slot: u32,
    uav: usize,
    slot_type: String,
    x: f64,
    y: f64,
    z: f64,
    granted: u8,
    rate_bits: f64,
    residual_bits: f64,
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse { line: p.line() as usize, reason: e.to_string() },
        None => Error::Io(e.to_string()),
    }
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(Row {
            slot: r.slot,
            uav: r.uav,
            slot_type: r.slot_type.as_str().to_string(),
            x: r.position.x,
            y: r.position.y,
            z: r.position.z,
            granted: r.granted as u8,
            rate_bits: r.rate_bits,
            residual_bits: r.residual_bits,
        })
        .map_err(csv_err)?;
    }
    if trace.is_empty() {
        w.write_record(TRACE_HEADER).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Parse { line: 1, reason: format!("unexpected header {:?}", header) });
    }
    let mut out = Vec::new();
    for (n, row) in rd.deserialize::<Row>().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = n + 2;
        let slot_type = SlotType::parse(&row.slot_type)
            .ok_or_else(|| Error::Parse { line, reason: format!("unknown slot type `{}`", row.slot_type) })?;
        let granted = match row.granted {
            0 => false,
            1 => true,
            g => return Err(Error::Parse { line, reason: format!("granted must be 0 or 1, got {g}") }),
        };
        out.push(TraceRecord {
            slot: row.slot,
            uav: row.uav,
            slot_type,
            position: Position3::new(row.x, row.y, row.z),
            granted,
            rate_bits: row.rate_bits,
            residual_bits: row.residual_bits,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bits() {
        let trace = vec![
            TraceRecord {
                slot: 1,
                uav: 0,
                slot_type: SlotType::Empty,
                position: Position3::new(0.1, 1.0 / 3.0, 10.0),
                granted: false,
                rate_bits: 0.0,
                residual_bits: 0.0,
            },
            TraceRecord {
                slot: 2,
                uav: 0,
                slot_type: SlotType::Transmission,
                position: Position3::new(std::f64::consts::PI, 2.0, 11.5),
                granted: true,
                rate_bits: 13516975.997860484,
                residual_bits: 6483024.002139516,
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("slot,uav,slot_type,x,y,z,granted,rate_bits,residual_bits\n"));
        assert_eq!(read_trace(&buf[..]).unwrap(), trace);
    }

    #[test]
    fn rejects_bad_rows() {
        let h = "slot,uav,slot_type,x,y,z,granted,rate_bits,residual_bits\n";
        assert!(read_trace(format!("{h}1,0,hover,0,0,10,0,0,0\n").as_bytes()).is_err());
        assert!(read_trace(format!("{h}1,0,empty,0,0,10,2,0,0\n").as_bytes()).is_err());
        assert!(read_trace("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_trace(h.as_bytes()).unwrap().is_empty());
    }
}
