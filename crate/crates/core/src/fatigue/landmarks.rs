use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

pub const NUM_LANDMARKS: usize = 68;

/// 68 facial points for one video frame, stored in the usual face-annotation
/// order. [`LandmarkFrame::point`] takes the 1-based index used by that
/// scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkFrame {
    pub frame_index: u64,
    pub timestamp_ms: i64,
    points: [[f64; 2]; NUM_LANDMARKS],
}

impl LandmarkFrame {
    pub fn new(frame_index: u64, timestamp_ms: i64, points: Vec<[f64; 2]>) -> Result<Self> {
        let points: [[f64; 2]; NUM_LANDMARKS] = points.try_into().map_err(|p: Vec<[f64; 2]>| Error::Frame {
            frame: frame_index,
            message: format!("expected {NUM_LANDMARKS} points, found {}", p.len()),
        })?;
        if let Some(i) = points.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::Frame {
                frame: frame_index,
                message: format!("point {} is not finite", i + 1),
            });
        }
        Ok(Self { frame_index, timestamp_ms, points })
    }

    /// The point with 1-based index `i`.
    pub fn point(&self, i: usize) -> [f64; 2] {
        assert!((1..=NUM_LANDMARKS).contains(&i), "landmark index {i} outside 1..=68");
        self.points[i - 1]
    }

    pub fn points(&self) -> &[[f64; 2]; NUM_LANDMARKS] {
        &self.points
    }

    /// Applies `f` to every point.
    pub fn map_points(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self {
            points: self.points.map(f),
            ..self.clone()
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("{what}: cannot parse {tok:?}")))
}

struct Pending {
    index: u64,
    timestamp: i64,
    points: Vec<[f64; 2]>,
}

/// Streaming reader for landmark files: each frame is a `frame <index>
/// <timestamp_ms>` header, then 68 `<x> <y>` lines; frames are separated by
/// blank lines. Frame indices must increase strictly.
pub struct LandmarkReader<R> {
    input: R,
    line: usize,
    buf: String,
    pending: Option<Pending>,
    last_index: Option<u64>,
    done: bool,
}

impl<R: BufRead> LandmarkReader<R> {
    pub fn new(input: R) -> Self {
        Self {
            input,
            line: 0,
            buf: String::new(),
            pending: None,
            last_index: None,
            done: false,
        }
    }

    fn finish(&mut self) -> Result<Option<LandmarkFrame>> {
        match self.pending.take() {
            None => Ok(None),
            Some(p) => LandmarkFrame::new(p.index, p.timestamp, p.points).map(Some),
        }
    }

    fn next_frame(&mut self) -> Result<Option<LandmarkFrame>> {
        loop {
            self.buf.clear();
            if self.input.read_line(&mut self.buf)? == 0 {
                return self.finish();
            }
            self.line += 1;
            let line = self.line;
            let mut toks = self.buf.split_whitespace();
            let Some(first) = toks.next() else {
                // blank separator
                if self.pending.is_some() {
                    return self.finish();
                }
                continue;
            };
            if first == "frame" {
                let (Some(idx), Some(ts), None) = (toks.next(), toks.next(), toks.next()) else {
                    return Err(parse_err(line, "expected `frame <index> <timestamp_ms>`"));
                };
                let index: u64 = number(idx, line, "frame index")?;
                let timestamp: i64 = number(ts, line, "timestamp")?;
                if let Some(prev) = self.last_index {
                    if index <= prev {
                        return Err(Error::InputOrder(format!("frame index {index} on line {line} follows frame {prev}")));
                    }
                }
                self.last_index = Some(index);
                let finished = self.finish()?;
                self.pending = Some(Pending {
                    index,
                    timestamp,
                    points: Vec::with_capacity(NUM_LANDMARKS),
                });
                if finished.is_some() {
                    return Ok(finished);
                }
                continue;
            }
            let Some(p) = self.pending.as_mut() else {
                return Err(parse_err(line, format!("expected a frame header, found {first:?}")));
            };
            let (Some(ytok), None) = (toks.next(), toks.next()) else {
                return Err(parse_err(line, "expected `<x> <y>`"));
            };
            let x: f64 = number(first, line, "x")?;
            let y: f64 = number(ytok, line, "y")?;
            if !(x.is_finite() && y.is_finite()) {
                return Err(parse_err(line, "coordinates must be finite"));
            }
            if p.points.len() == NUM_LANDMARKS {
                return Err(Error::Frame {
                    frame: p.index,
                    message: format!("more than {NUM_LANDMARKS} points (line {line})"),
                });
            }
            p.points.push([x, y]);
        }
    }
}

impl<R: BufRead> Iterator for LandmarkReader<R> {
    type Item = Result<LandmarkFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_frame() {
            Ok(Some(f)) => Some(Ok(f)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub fn parse_landmarks(text: &str) -> Result<Vec<LandmarkFrame>> {
    LandmarkReader::new(text.as_bytes()).collect()
}

/// Renders frames in the format read by [`parse_landmarks`]. Coordinates use
/// the shortest decimal form that parses back to the same value.
pub fn write_landmarks(frames: &[LandmarkFrame]) -> String {
    let mut out = String::new();
    for (i, f) in frames.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        writeln!(out, "frame {} {}", f.frame_index, f.timestamp_ms).unwrap();
        for [x, y] in f.points {
            writeln!(out, "{x} {y}").unwrap();
        }
    }
    out
}
