//! Text formats: the instance file and PGM images.
//!
//! Instance file layout:
//!
//! ```text
//! POTTS 1
//! n m k
//! <n cost lines, k whitespace-separated values each; token "inf" allowed>
//! <m edge lines "u v w", nodes 1-indexed, w > 0>
//! ```
//!
//! Lines starting with `#` (and blank lines) are ignored anywhere. "inf"
//! tokens become the configurable big-M value at parse time, which keeps
//! every downstream LP finite. Serialization prints floats with Rust's
//! shortest round-trip formatting, so parse -> serialize -> parse is the
//! identity on the numeric content. Node indices are 1-based only in files;
//! everything in memory is 0-based.

use potts_core::instance::{Instance, InstanceError, Labeling};
use thiserror::Error;

pub const DEFAULT_BIG_M: f64 = 1e6;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("missing header \"POTTS 1\"")]
    MissingHeader,
    #[error("unexpected end of file: {0}")]
    Truncated(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("pgm: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn significant_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_instance(text: &str, big_m: f64) -> Result<Instance, FormatError> {
    let mut lines = significant_lines(text);
    let (ln, header) = lines.next().ok_or(FormatError::MissingHeader)?;
    if header.split_whitespace().collect::<Vec<_>>() != ["POTTS", "1"] {
        return Err(FormatError::Parse(ln, format!("bad header {header:?}")));
    }
    let (ln, dims) = lines
        .next()
        .ok_or_else(|| FormatError::Truncated("n m k line".into()))?;
    let parts: Vec<&str> = dims.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(FormatError::Parse(ln, "expected \"n m k\"".into()));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| FormatError::Parse(ln, format!("bad n {:?}", parts[0])))?;
    let m: usize = parts[1]
        .parse()
        .map_err(|_| FormatError::Parse(ln, format!("bad m {:?}", parts[1])))?;
    let k: usize = parts[2]
        .parse()
        .map_err(|_| FormatError::Parse(ln, format!("bad k {:?}", parts[2])))?;

    let mut costs = Vec::with_capacity(n * k);
    for row in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| FormatError::Truncated(format!("cost line for node {}", row + 1)))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != k {
            return Err(FormatError::Parse(
                ln,
                format!("expected {k} costs, found {}", tokens.len()),
            ));
        }
        for tok in tokens {
            let v = if tok.eq_ignore_ascii_case("inf") {
                big_m
            } else {
                tok.parse::<f64>()
                    .map_err(|_| FormatError::Parse(ln, format!("bad cost {tok:?}")))?
            };
            costs.push(v);
        }
    }

    let mut edges = Vec::with_capacity(m);
    for e in 0..m {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| FormatError::Truncated(format!("edge line {}", e + 1)))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(FormatError::Parse(ln, "expected \"u v w\"".into()));
        }
        let u: usize = tokens[0]
            .parse()
            .map_err(|_| FormatError::Parse(ln, format!("bad node {:?}", tokens[0])))?;
        let v: usize = tokens[1]
            .parse()
            .map_err(|_| FormatError::Parse(ln, format!("bad node {:?}", tokens[1])))?;
        let w: f64 = tokens[2]
            .parse()
            .map_err(|_| FormatError::Parse(ln, format!("bad weight {:?}", tokens[2])))?;
        if u == 0 || v == 0 {
            return Err(FormatError::Parse(ln, "nodes are 1-indexed".into()));
        }
        edges.push((u - 1, v - 1, w));
    }
    if let Some((ln, line)) = lines.next() {
        return Err(FormatError::Parse(ln, format!("trailing content {line:?}")));
    }
    Ok(Instance::new(n, k, costs, edges)?)
}

pub fn serialize_instance(inst: &Instance) -> String {
    let k = inst.label_count();
    let mut out = String::from("POTTS 1\n");
    out.push_str(&format!(
        "{} {} {}\n",
        inst.node_count(),
        inst.edge_count(),
        k
    ));
    for u in 0..inst.node_count() {
        let row: Vec<String> = (0..k).map(|i| format!("{}", inst.cost(u, i))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    for (e, &(u, v)) in inst.edges().iter().enumerate() {
        out.push_str(&format!("{} {} {}\n", u + 1, v + 1, inst.weight(e)));
    }
    out
}

/// Labeling file: whitespace-separated 1-indexed labels, `#` comments
/// allowed.
pub fn parse_labeling(text: &str, inst: &Instance) -> Result<Labeling, FormatError> {
    let mut labels = Vec::new();
    for (ln, line) in significant_lines(text) {
        for tok in line.split_whitespace() {
            let v: usize = tok
                .parse()
                .map_err(|_| FormatError::Parse(ln, format!("bad label {tok:?}")))?;
            if v == 0 {
                return Err(FormatError::Parse(ln, "labels are 1-indexed".into()));
            }
            labels.push(v - 1);
        }
    }
    let labeling = Labeling::new(labels);
    labeling.validate(inst)?;
    Ok(labeling)
}

pub fn serialize_labeling(x: &Labeling) -> String {
    let labels: Vec<String> = x.as_slice().iter().map(|l| (l + 1).to_string()).collect();
    labels.join(" ") + "\n"
}

/// Grayscale image, row-major, values `0..=255`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// PGM reader accepting ASCII (P2) and binary (P5) with maxval <= 255.
/// Anything else is rejected with a message naming the offending field.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, FormatError> {
    let mut pos = 0usize;

    fn skip_separators(bytes: &[u8], pos: &mut usize) {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn token(bytes: &[u8], pos: &mut usize, what: &str) -> Result<String, FormatError> {
        skip_separators(bytes, pos);
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(FormatError::Pgm(format!("missing {what}")));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    }

    let magic = token(bytes, &mut pos, "magic number")?;
    if magic != "P2" && magic != "P5" {
        return Err(FormatError::Pgm(format!(
            "unsupported magic {magic:?}: only P2 and P5 grayscale are accepted"
        )));
    }
    let width: usize = token(bytes, &mut pos, "width")?
        .parse()
        .map_err(|_| FormatError::Pgm("bad width".into()))?;
    let height: usize = token(bytes, &mut pos, "height")?
        .parse()
        .map_err(|_| FormatError::Pgm("bad height".into()))?;
    let maxval: usize = token(bytes, &mut pos, "maxval")?
        .parse()
        .map_err(|_| FormatError::Pgm("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(FormatError::Pgm(format!(
            "maxval {maxval} unsupported: need 1..=255"
        )));
    }

    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if magic == "P2" {
        for i in 0..count {
            let v: usize = token(bytes, &mut pos, "pixel")?
                .parse()
                .map_err(|_| FormatError::Pgm(format!("bad pixel {i}")))?;
            if v > maxval {
                return Err(FormatError::Pgm(format!("pixel {i} exceeds maxval")));
            }
            pixels.push(v as u8);
        }
    } else {
        // single whitespace byte separates maxval from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(FormatError::Pgm("missing raster separator".into()));
        }
        pos += 1;
        if bytes.len() < pos + count {
            return Err(FormatError::Pgm(format!(
                "raster truncated: need {count} bytes, have {}",
                bytes.len() - pos
            )));
        }
        pixels.extend_from_slice(&bytes[pos..pos + count]);
        if let Some(bad) = pixels.iter().position(|&p| p as usize > maxval) {
            return Err(FormatError::Pgm(format!("pixel {bad} exceeds maxval")));
        }
    }
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

pub fn write_pgm_p5(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}
