//! CSV ingestion and export for quarterly frames.
//!
//! Layout: a header row whose first column is `period`, then one column per
//! series. Periods are written `YYYYQn` and must be consecutive quarters.
//! Cells are decimal numbers with `.` as the separator.

use std::io::{Read, Write};
use std::path::Path;

use super::{Frame, Period, QuarterlySeries};
use crate::error::{Error, Result};

/// Parses a frame. In strict mode every cell must be present; otherwise
/// each column may have leading or trailing blanks but no interior gaps.
pub fn read_frame<R: Read>(reader: R, strict: bool) -> Result<Frame> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr
        .headers()
        .map_err(|e| csv_err(1, e))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    if header.first().map(String::as_str) != Some("period") {
        return Err(Error::Csv {
            line: 1,
            message: "first column must be named `period`".into(),
        });
    }
    if header.len() < 2 {
        return Err(Error::Csv {
            line: 1,
            message: "no data columns".into(),
        });
    }
    let names = &header[1..];

    let mut first: Option<Period> = None;
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| csv_err(line, e))?;
        let period: Period = record[0].parse().map_err(|_| Error::Csv {
            line,
            message: format!("bad period {:?}", &record[0]),
        })?;
        match first {
            None => first = Some(period),
            Some(p0) if p0.advance(row as i64) != period => {
                return Err(Error::Csv {
                    line,
                    message: format!("period {period} does not follow {}", p0.advance(row as i64 - 1)),
                })
            }
            _ => {}
        }
        for (j, col) in columns.iter_mut().enumerate() {
            let cell = record.get(j + 1).unwrap_or("");
            if cell.is_empty() {
                if strict {
                    return Err(Error::Csv {
                        line,
                        message: format!("missing value in column {:?}", names[j]),
                    });
                }
                col.push(None);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Csv {
                line,
                message: format!("cannot parse {cell:?} in column {:?}", names[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    line,
                    message: format!("non-finite value in column {:?}", names[j]),
                });
            }
            col.push(Some(v));
        }
    }
    let start = first.ok_or_else(|| Error::Csv {
        line: 2,
        message: "no data rows".into(),
    })?;

    let mut frame = Frame::new();
    for (name, col) in names.iter().zip(columns) {
        let lo = col.iter().position(Option::is_some);
        let hi = col.iter().rposition(Option::is_some);
        let (Some(lo), Some(hi)) = (lo, hi) else {
            return Err(Error::Csv {
                line: 2,
                message: format!("column {name:?} has no values"),
            });
        };
        let mut values = Vec::with_capacity(hi - lo + 1);
        for (t, cell) in col[lo..=hi].iter().enumerate() {
            match cell {
                Some(v) => values.push(*v),
                None => {
                    return Err(Error::Csv {
                        line: lo + t + 2,
                        message: format!("interior gap in column {name:?}"),
                    })
                }
            }
        }
        frame.insert(name.clone(), QuarterlySeries::new(start.advance(lo as i64), values)?)?;
    }
    Ok(frame)
}

pub fn read_frame_path(path: &Path, strict: bool) -> Result<Frame> {
    let file = std::fs::File::open(path).map_err(|e| {
        std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
    })?;
    read_frame(std::io::BufReader::new(file), strict)
}

/// Writes every series over the frame's full span; absent cells are blank.
pub fn write_frame<W: Write>(frame: &Frame, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let Some((lo, hi)) = frame.span() else {
        w.write_record(["period"]).map_err(|e| csv_err(1, e))?;
        w.flush()?;
        return Ok(());
    };
    let mut header = vec!["period".to_string()];
    header.extend(frame.names().map(str::to_string));
    w.write_record(&header).map_err(|e| csv_err(1, e))?;
    let n = lo.quarters_until(hi) + 1;
    for t in 0..n {
        let p = lo.advance(t);
        let mut row = vec![p.to_string()];
        for (_, s) in frame.iter() {
            row.push(s.get(p).map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&row).map_err(|e| csv_err(t as usize + 2, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_frame_path(frame: &Frame, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_frame(frame, std::io::BufWriter::new(file))
}

fn csv_err(line: usize, e: csv::Error) -> Error {
    Error::Csv {
        line,
        message: e.to_string(),
    }
}
