//! GUE trace files: CSV with the header `t,gue_id,x,y`, rows sorted by
//! `(gue_id, t)`, `t` counting up from 0 for every GUE.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use uabs_core::scenario::{Area, GueTrace, Position};
use uabs_core::SimConfig;

use crate::error::{SimError, SimResult};

const HEADER: [&str; 4] = ["t", "gue_id", "x", "y"];

pub fn load_traces(path: &Path, config: &SimConfig) -> SimResult<Vec<GueTrace>> {
    let file = File::open(path).map_err(|e| SimError::io(path, e))?;
    read_traces(file, config)
}

pub fn read_traces<R: Read>(reader: R, config: &SimConfig) -> SimResult<Vec<GueTrace>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let area = Area::of(config);
    let mut traces: Vec<GueTrace> = Vec::new();
    let mut saw_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| SimError::TraceParse {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !saw_header {
            if rec.iter().ne(HEADER) {
                return Err(SimError::TraceParse { line, reason: format!("expected header `{}`", HEADER.join(",")) });
            }
            saw_header = true;
            continue;
        }
        let bad = |reason: String| SimError::TraceParse { line, reason };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", rec.len())));
        }
        let t: usize = rec[0].parse().map_err(|_| bad(format!("bad step {:?}", &rec[0])))?;
        let gue_id: usize = rec[1].parse().map_err(|_| bad(format!("bad gue_id {:?}", &rec[1])))?;
        let x: f64 = rec[2].parse().map_err(|_| bad(format!("bad x {:?}", &rec[2])))?;
        let y: f64 = rec[3].parse().map_err(|_| bad(format!("bad y {:?}", &rec[3])))?;
        let p = Position::new(x, y);
        if !p.is_finite() {
            return Err(bad(format!("non-finite position ({x}, {y})")));
        }
        if !area.contains(p) {
            return Err(SimError::TraceBounds { line, x, y, width: area.width, height: area.height });
        }
        match traces.last_mut() {
            Some(tr) if tr.gue_id == gue_id => {
                if t != tr.positions.len() {
                    return Err(bad(format!("gue {gue_id}: expected t = {}, got {t}", tr.positions.len())));
                }
                tr.positions.push(p);
            }
            last => {
                if let Some(prev) = last {
                    if gue_id < prev.gue_id {
                        return Err(bad(format!("rows must be sorted by gue_id; {gue_id} follows {}", prev.gue_id)));
                    }
                }
                if t != 0 {
                    return Err(bad(format!("gue {gue_id}: first row must have t = 0, got {t}")));
                }
                traces.push(GueTrace { gue_id, positions: vec![p] });
            }
        }
    }
    if traces.is_empty() {
        return Err(SimError::TraceCoverage("0 traces, expected ≥ 1".into()));
    }
    let need = config.episode_len + 1;
    for tr in &traces {
        if tr.positions.len() < need {
            return Err(SimError::TraceCoverage(format!(
                "gue {} covers {} steps, expected ≥ {need}",
                tr.gue_id,
                tr.positions.len()
            )));
        }
        tr.validate(config)?;
    }
    Ok(traces)
}

pub fn write_traces<W: Write>(writer: W, traces: &[GueTrace]) -> SimResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for tr in traces {
        for (t, p) in tr.positions.iter().enumerate() {
            w.write_record(&[t.to_string(), tr.gue_id.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
    }
    w.flush().map_err(|e| SimError::Csv(e.into()))?;
    Ok(())
}

pub fn save_traces(path: &Path, traces: &[GueTrace]) -> SimResult<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    write_traces(file, traces)
}
