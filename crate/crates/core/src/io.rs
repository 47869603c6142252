//! File formats: CSV traces and binary PGM figures.
//!
//! Trace CSV layout:
//!
//! ```text
//! # sample_rate_hz=100
//! # carrier_hz=5280000000
//! # label=free text
//! t_us,rx,sc,re,im
//! 0,0,0,9.9999999999999989e-1,-1.2246467991473532e-16
//! ...
//! ```
//!
//! One row per (frame, antenna, subcarrier), antenna-major within a frame.
//! Floats are written in scientific notation with 17 significant digits so
//! a read of a written file reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::csi::{CsiFrame, CsiTrace, SubcarrierRow, SUBCARRIERS};
use crate::error::{Error, Result};
use crate::figure::{PoseFigure, FIGURE_COLS, FIGURE_PIXELS, FIGURE_ROWS};

pub const TRACE_HEADER: &str = "t_us,rx,sc,re,im";

pub fn write_trace(trace: &CsiTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    file.write_all(format_trace(trace).as_bytes())?;
    file.flush()?;
    Ok(())
}

pub fn format_trace(trace: &CsiTrace) -> String {
    let mut out = String::with_capacity(trace.len() * trace.antennas() * SUBCARRIERS * 56);
    let _ = writeln!(out, "# sample_rate_hz={}", trace.sample_rate_hz());
    let _ = writeln!(out, "# carrier_hz={}", trace.carrier_hz());
    let _ = writeln!(out, "# label={}", trace.label().replace('\n', " "));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for frame in trace.frames() {
        for (a, row) in frame.values().iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{a},{k},{:.16e},{:.16e}",
                    frame.timestamp_us(),
                    v.re,
                    v.im
                );
            }
        }
    }
    out
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<CsiTrace> {
    parse_trace(BufReader::new(fs::File::open(path)?))
}

struct PendingFrame {
    t_us: u64,
    index: usize,
    first_line: usize,
    rows: Vec<Vec<Complex64>>,
}

impl PendingFrame {
    fn finish(self) -> Result<CsiFrame> {
        let mut values = Vec::with_capacity(self.rows.len());
        for (a, row) in self.rows.into_iter().enumerate() {
            let row: SubcarrierRow = row.try_into().map_err(|row: Vec<Complex64>| Error::Format {
                line: self.first_line,
                msg: format!(
                    "frame {} (t_us={}) has {} subcarriers on antenna {a}, expected {SUBCARRIERS}",
                    self.index,
                    self.t_us,
                    row.len()
                ),
            })?;
            values.push(row);
        }
        CsiFrame::new(self.t_us, values).map_err(|e| Error::Format {
            line: self.first_line,
            msg: format!("frame {} (t_us={}): {e}", self.index, self.t_us),
        })
    }
}

/// Parses the CSV trace format from any reader.
pub fn parse_trace(reader: impl BufRead) -> Result<CsiTrace> {
    let mut sample_rate = None;
    let mut carrier = None;
    let mut label = String::new();
    let mut seen_header = false;
    let mut frames = Vec::new();
    let mut pending: Option<PendingFrame> = None;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        let fmt_err = |msg: String| Error::Format { line: line_no, msg };
        if let Some(meta) = line.strip_prefix('#') {
            if seen_header {
                return Err(fmt_err("comment after header".into()));
            }
            if let Some((key, value)) = meta.trim_start().split_once('=') {
                match key.trim() {
                    "sample_rate_hz" => {
                        sample_rate = Some(value.trim().parse::<f64>().map_err(|e| {
                            fmt_err(format!("bad sample_rate_hz: {e}"))
                        })?)
                    }
                    "carrier_hz" => {
                        carrier = Some(
                            value
                                .trim()
                                .parse::<f64>()
                                .map_err(|e| fmt_err(format!("bad carrier_hz: {e}")))?,
                        )
                    }
                    "label" => label = value.to_string(),
                    _ => {}
                }
            }
            continue;
        }
        if !seen_header {
            if line.trim().is_empty() {
                continue;
            }
            if line.trim() != TRACE_HEADER {
                return Err(fmt_err(format!("expected header `{TRACE_HEADER}`")));
            }
            seen_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(fmt_err(format!("expected 5 fields, found {}", fields.len())));
        }
        let t_us: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|e| fmt_err(format!("bad t_us: {e}")))?;
        let rx: usize = fields[1]
            .trim()
            .parse()
            .map_err(|e| fmt_err(format!("bad rx: {e}")))?;
        let sc: usize = fields[2]
            .trim()
            .parse()
            .map_err(|e| fmt_err(format!("bad sc: {e}")))?;
        let re: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|e| fmt_err(format!("bad re: {e}")))?;
        let im: f64 = fields[4]
            .trim()
            .parse()
            .map_err(|e| fmt_err(format!("bad im: {e}")))?;

        let starts_new = pending.as_ref().is_none_or(|p| p.t_us != t_us);
        if starts_new {
            if let Some(p) = pending.take() {
                if t_us < p.t_us {
                    return Err(fmt_err(format!(
                        "timestamp {t_us} precedes previous frame at {}",
                        p.t_us
                    )));
                }
                frames.push(p.finish()?);
            }
            pending = Some(PendingFrame {
                t_us,
                index: frames.len(),
                first_line: line_no,
                rows: Vec::new(),
            });
        }
        let p = pending.as_mut().expect("pending frame");
        if rx == p.rows.len() && sc == 0 {
            p.rows.push(Vec::with_capacity(SUBCARRIERS));
        } else if rx + 1 != p.rows.len() || sc != p.rows[rx].len() {
            return Err(fmt_err(format!(
                "frame {} (t_us={t_us}): row rx={rx}, sc={sc} out of order",
                p.index
            )));
        }
        p.rows[rx].push(Complex64::new(re, im));
    }
    if let Some(p) = pending.take() {
        frames.push(p.finish()?);
    }
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    let sample_rate = sample_rate.ok_or_else(|| Error::Format {
        line: 1,
        msg: "missing `# sample_rate_hz=` comment".into(),
    })?;
    let carrier = carrier.ok_or_else(|| Error::Format {
        line: 1,
        msg: "missing `# carrier_hz=` comment".into(),
    })?;
    CsiTrace::new(frames, sample_rate, carrier, label)
}

/// Writes a figure as binary PGM (P5, 160×120, maxval 255).
pub fn write_pgm(figure: &PoseFigure, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(figure))?;
    Ok(())
}

pub fn encode_pgm(figure: &PoseFigure) -> Vec<u8> {
    let mut out = format!("P5\n{FIGURE_COLS} {FIGURE_ROWS}\n255\n").into_bytes();
    out.extend(figure.pixels().iter().map(|p| (255.0 * p).round() as u8));
    out
}

/// Writes an arbitrary `[0,1]` grayscale matrix as P5 (used for CSI map dumps).
pub fn write_gray_pgm(rows: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for row in rows {
        out.extend(row.iter().map(|p| (255.0 * p.clamp(0.0, 1.0)).round() as u8));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<PoseFigure> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_pgm(&bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<PoseFigure> {
    let bad = |msg: &str| Error::InvalidFigure(format!("PGM: {msg}"));
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    if tokens[0] != "P5" {
        return Err(bad("magic is not P5"));
    }
    let dims: Vec<usize> = tokens[1..]
        .iter()
        .map(|t| t.parse().map_err(|_| bad("bad number in header")))
        .collect::<Result<_>>()?;
    if dims != [FIGURE_COLS, FIGURE_ROWS, 255] {
        return Err(bad("expected 160x120 with maxval 255"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes.get(pos..pos + FIGURE_PIXELS).ok_or_else(|| bad("truncated raster"))?;
    PoseFigure::from_pixels(raster.iter().map(|&b| f64::from(b) / 255.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_trace() -> CsiTrace {
        let frames = (0..4)
            .map(|i| {
                let rows = (0..3)
                    .map(|a| {
                        std::array::from_fn(|k| {
                            Complex64::new(
                                (i * 7 + a * 3 + k) as f64 / 3.0,
                                -((k + 1) as f64).sqrt() * 1e-7,
                            )
                        })
                    })
                    .collect();
                CsiFrame::new(i as u64 * 10_000, rows).unwrap()
            })
            .collect();
        CsiTrace::new(frames, 100.0, 5.68e9, "unit test").unwrap()
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let t = small_trace();
        let text = format_trace(&t);
        let back = parse_trace(text.as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(format_trace(&back), text);
    }

    #[test]
    fn written_decimals_carry_enough_digits() {
        let text = format_trace(&small_trace());
        let row = text.lines().nth(4).unwrap();
        let re = row.split(',').nth(3).unwrap();
        let mantissa = re.split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 12, "{re}");
    }

    #[test]
    fn missing_subcarrier_names_frame() {
        let text = format_trace(&small_trace());
        let mut lines: Vec<&str> = text.lines().collect();
        // frame 2 starts after 4 header lines + 2*90 rows; drop its antenna-0 last subcarrier
        let drop = 4 + 2 * 90 + 29;
        assert!(lines[drop].starts_with("20000,0,29,"));
        lines.remove(drop);
        let err = parse_trace(lines.join("\n").as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("frame 2"), "{msg}");
    }

    #[test]
    fn empty_input_has_no_frames() {
        let err = parse_trace("".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::NoFrames));
        let err = parse_trace("# sample_rate_hz=100\nt_us,rx,sc,re,im\n".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "no frames");
    }

    #[test]
    fn malformed_and_backwards_rows_are_rejected() {
        let text = format_trace(&small_trace());
        let broken = text.replacen("10000,1,5,", "10000,1,5,abc,", 1);
        assert!(matches!(
            parse_trace(broken.as_bytes()),
            Err(Error::Format { line: _, .. })
        ));
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let idx = lines.iter().position(|l| l.starts_with("30000,")).unwrap();
        for l in lines.iter_mut().skip(idx) {
            *l = l.replacen("30000,", "5000,", 1);
        }
        let err = parse_trace(lines.join("\n").as_bytes()).unwrap_err();
        assert!(err.to_string().contains("precedes"), "{err}");
    }

    #[test]
    fn pgm_round_trip_quantizes() {
        let mut fig = PoseFigure::zeros();
        fig.brighten(60, 80, 1.0);
        fig.brighten(0, 0, 0.5);
        let bytes = encode_pgm(&fig);
        assert!(bytes.starts_with(b"P5\n160 120\n255\n"));
        assert_eq!(bytes.len(), 15 + FIGURE_PIXELS);
        let back = decode_pgm(&bytes).unwrap();
        assert_eq!(back.get(60, 80), 1.0);
        assert_eq!(back.get(0, 0), 128.0 / 255.0);
        assert_eq!(encode_pgm(&back), bytes);
    }
}
