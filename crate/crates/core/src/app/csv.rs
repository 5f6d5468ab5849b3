//! CSV output of a [`TimeSeries`].

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::network::PortRecord;
use crate::timeloop::{Sample, TimeSeries};

/// Twelve significant digits.
fn number(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn write_timeseries(ts: &TimeSeries, mut out: impl Write) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::Config("cannot write an empty time series".into()));
    }
    let mut buf = io::BufWriter::new(&mut out);
    writeln!(buf, "{}", ts.column_names().join(","))?;
    for i in 0..ts.len() {
        let row: Vec<String> = ts.row(i).into_iter().map(number).collect();
        writeln!(buf, "{}", row.join(","))?;
    }
    buf.flush()?;
    Ok(())
}

pub fn timeseries_to_string(ts: &TimeSeries) -> Result<String> {
    let mut out = Vec::new();
    write_timeseries(ts, &mut out)?;
    String::from_utf8(out).map_err(|e| Error::Semantic(e.to_string()))
}

/// Reads back a file written by [`write_timeseries`].
pub fn read_timeseries(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Semantic("empty CSV".into()))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.first() != Some(&"time_s") {
        return Err(Error::Semantic("CSV header must start with `time_s`".into()));
    }
    let h = names
        .iter()
        .position(|n| *n == "H_total")
        .ok_or_else(|| Error::Semantic("CSV header lacks `H_total`".into()))?;
    if (h - 1) % 4 != 0 {
        return Err(Error::Semantic("CSV header has an incomplete pipe column group".into()));
    }
    let mut pipe_ids = Vec::new();
    for group in names[1..h].chunks(4) {
        let id = group[0]
            .strip_suffix(".in.p_Pa")
            .ok_or_else(|| Error::Semantic(format!("unexpected column `{}`", group[0])))?;
        let expected = [
            format!("{id}.in.p_Pa"),
            format!("{id}.in.m"),
            format!("{id}.out.p_Pa"),
            format!("{id}.out.m"),
        ];
        if group.iter().zip(&expected).any(|(a, b)| a != b) {
            return Err(Error::Semantic(format!("unexpected column group for pipe `{id}`")));
        }
        pipe_ids.push(id.to_string());
    }
    let compressor_ids = names[h + 1..]
        .iter()
        .map(|n| {
            n.strip_suffix(".power")
                .map(str::to_string)
                .ok_or_else(|| Error::Semantic(format!("unexpected column `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ts = TimeSeries::new(pipe_ids, compressor_ids);
    for (line, text) in lines {
        let values = text
            .split(',')
            .enumerate()
            .map(|(col, v)| {
                v.parse::<f64>().map_err(|e| Error::Syntax {
                    line: line + 1,
                    column: col + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != names.len() {
            return Err(Error::Semantic(format!(
                "line {} has {} fields, expected {}",
                line + 1,
                values.len(),
                names.len()
            )));
        }
        let ports = values[1..h]
            .chunks(4)
            .map(|c| PortRecord {
                inlet_pressure: c[0],
                inlet_momentum: c[1],
                outlet_pressure: c[2],
                outlet_momentum: c[3],
            })
            .collect();
        ts.samples.push(Sample {
            time: values[0],
            ports,
            hamiltonian: values[h],
            compressor_power: values[h + 1..].to_vec(),
        });
    }
    Ok(ts)
}
