//! Readers and writers for the on-disk trace formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::response::ResponseMap;
use crate::stream::MetricSample;
use crate::supervised::BoundingBox;

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Reads a headed CSV, skipping `#` comments, and hands each record with its
/// line number to `row`. Frames must run 1, 2, 3, ...
fn read_framed_csv<T>(
    path: &Path,
    columns: &[&str],
    mut row: impl FnMut(u64, usize, &[f64]) -> Result<T>,
) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != columns {
        return Err(parse_err(
            path,
            1,
            format!(
                "expected header '{}', got '{}'",
                columns.join(","),
                header.join(",")
            ),
        ));
    }

    let mut out = Vec::new();
    let mut fields = Vec::with_capacity(columns.len());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != columns.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, got {}", columns.len(), rec.len()),
            ));
        }
        let frame: usize = rec[0]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad frame index '{}'", &rec[0])))?;
        if frame != i + 1 {
            return Err(parse_err(
                path,
                line,
                format!("frame {frame} found where frame {} was expected", i + 1),
            ));
        }
        fields.clear();
        for (name, raw) in columns[1..].iter().zip(rec.iter().skip(1)) {
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad {name} value '{raw}'")))?;
            fields.push(v);
        }
        out.push(row(line, frame, &fields)?);
    }
    Ok(out)
}

/// `frame,value` stream; values must lie in `[0, 1]`.
pub fn read_metric_csv(path: &Path) -> Result<Vec<MetricSample>> {
    read_framed_csv(path, &["frame", "value"], |line, frame, f| {
        let value = f[0];
        if !(0.0..=1.0).contains(&value) {
            return Err(parse_err(
                path,
                line,
                format!("frame {frame}: value {value} is outside [0, 1]"),
            ));
        }
        Ok(MetricSample { t: frame, value })
    })
}

pub fn read_boxes_csv(path: &Path) -> Result<Vec<BoundingBox>> {
    read_framed_csv(path, &["frame", "x", "y", "w", "h"], |line, frame, f| {
        BoundingBox::new(f[0], f[1], f[2], f[3])
            .map_err(|e| parse_err(path, line, format!("frame {frame}: {e}")))
    })
}

fn csv_writer(path: &Path) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    writeln!(w, "# format_version={FORMAT_VERSION}").map_err(io_err(path))?;
    Ok(w)
}

pub fn write_metric_csv(path: &Path, samples: &[MetricSample]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut body = String::from("frame,value\n");
    for s in samples {
        body.push_str(&format!("{},{}\n", s.t, s.value));
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_boxes_csv(path: &Path, boxes: &[BoundingBox]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut body = String::from("frame,x,y,w,h\n");
    for (i, b) in boxes.iter().enumerate() {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            b.x(),
            b.y(),
            b.w(),
            b.h()
        ));
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Serialize, Deserialize)]
struct MapRecord {
    t: usize,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlHeader {
    format_version: u32,
    kind: String,
}

/// Reads response maps from JSONL. With `normalize` each map is min-max
/// rescaled into `[0, 1]`; otherwise out-of-range cells are rejected.
pub fn read_response_maps(path: &Path, normalize: bool) -> Result<Vec<ResponseMap>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut maps = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(io_err(path))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| parse_err(path, lineno, e.to_string()))?;
        if value.get("format_version").is_some() && value.get("t").is_none() {
            let header: JsonlHeader = serde_json::from_value(value)
                .map_err(|e| parse_err(path, lineno, e.to_string()))?;
            if header.format_version != FORMAT_VERSION {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("unsupported format_version {}", header.format_version),
                ));
            }
            continue;
        }
        let rec: MapRecord =
            serde_json::from_value(value).map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let expected = maps.len() + 1;
        if rec.t != expected {
            return Err(parse_err(
                path,
                lineno,
                format!("frame {} found where frame {expected} was expected", rec.t),
            ));
        }
        let map = if normalize {
            ResponseMap::normalized(rec.rows, rec.cols, rec.data)
        } else {
            ResponseMap::new(rec.rows, rec.cols, rec.data)
        }
        .map_err(|e| parse_err(path, lineno, format!("frame {}: {e}", rec.t)))?;
        maps.push(map);
    }
    Ok(maps)
}

pub fn write_response_maps(path: &Path, maps: &[ResponseMap]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let header = JsonlHeader {
        format_version: FORMAT_VERSION,
        kind: "response_maps".into(),
    };
    writeln!(w, "{}", serde_json::to_string(&header)?).map_err(io_err(path))?;
    for (i, m) in maps.iter().enumerate() {
        let rec = MapRecord {
            t: i + 1,
            rows: m.rows(),
            cols: m.cols(),
            data: m.values().to_vec(),
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn metric_csv_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let samples = vec![
            MetricSample { t: 1, value: 0.1 },
            MetricSample {
                t: 2,
                value: 1.0 / 3.0,
            },
        ];
        write_metric_csv(&p, &samples).unwrap();
        assert!(fs::read_to_string(&p)
            .unwrap()
            .starts_with("# format_version=1\n"));
        assert_eq!(read_metric_csv(&p).unwrap(), samples);

        fs::write(&p, "frame,value\n1,0.5\n2,1.2\n").unwrap();
        let err = read_metric_csv(&p).unwrap_err().to_string();
        assert!(err.contains(":3:") && err.contains("frame 2"), "{err}");

        fs::write(&p, "frame,value\n1,0.5\n3,0.5\n").unwrap();
        let err = read_metric_csv(&p).unwrap_err().to_string();
        assert!(err.contains("frame 3 found where frame 2"), "{err}");

        fs::write(&p, "frame,value\n1,abc\n").unwrap();
        let err = read_metric_csv(&p).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("bad value"), "{err}");

        fs::write(&p, "f,v\n1,0.5\n").unwrap();
        assert!(read_metric_csv(&p).is_err());

        fs::write(&p, "frame,value\n1,0.5,7\n").unwrap();
        assert!(read_metric_csv(&p).is_err());
    }

    #[test]
    fn box_csv_rejects_degenerate_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        fs::write(&p, "# comment\nframe,x,y,w,h\n1,0,0,2,2\n2,0,0,0,2\n").unwrap();
        let err = read_boxes_csv(&p).unwrap_err().to_string();
        assert!(err.contains("frame 2"), "{err}");

        let boxes = vec![BoundingBox::new(1.5, 2.0, 3.25, 4.0).unwrap()];
        write_boxes_csv(&p, &boxes).unwrap();
        assert_eq!(read_boxes_csv(&p).unwrap(), boxes);
    }

    #[test]
    fn response_map_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("maps.jsonl");
        fs::write(&p, r#"{"t":1,"rows":2,"cols":2,"data":[0.2,0.4,0.6,1.0]}"#).unwrap();
        let maps = read_response_maps(&p, false).unwrap();
        assert_eq!(maps.len(), 1);
        assert_eq!(maps[0].values(), &[0.2, 0.4, 0.6, 1.0]);

        fs::write(&p, r#"{"t":1,"rows":1,"cols":2,"data":[-1.0,3.0]}"#).unwrap();
        assert!(read_response_maps(&p, false).is_err());
        let maps = read_response_maps(&p, true).unwrap();
        assert_eq!(maps[0].values(), &[0.0, 1.0]);

        fs::write(&p, "{\"t\":2,\"rows\":1,\"cols\":2,\"data\":[0,1]}\n").unwrap();
        assert!(read_response_maps(&p, false).is_err());

        fs::write(&p, "{\"format_version\":9,\"kind\":\"response_maps\"}\n").unwrap();
        assert!(read_response_maps(&p, false).is_err());

        fs::write(
            &p,
            "{\"t\":1,\"rows\":1,\"cols\":2,\"data\":[0,1]}\nnot json\n",
        )
        .unwrap();
        let err = read_response_maps(&p, false).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }
}
