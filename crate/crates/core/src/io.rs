//! Point cloud ingestion (PLY ascii / binary-little-endian, XYZ text) and
//! result emission (JSON document, CSV convergence trace).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bb_rotation::TraceRecord;
use crate::error::{AlignError, Result};
use crate::mixtures::WeightedCloud;
use crate::numerics::Vec3;
use crate::pipeline::AlignmentResult;

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> AlignError {
    AlignError::Parse { location: location.into(), message: message.into() }
}

/// Reads a cloud from a `.ply` (ascii or binary-little-endian) or `.xyz`
/// file, dispatching on the extension. Normals are normalized when present;
/// weights are always left for the pipeline to derive.
pub fn read_cloud(path: &Path) -> Result<WeightedCloud> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "ply" => read_ply(path),
        "xyz" | "txt" => read_xyz(path),
        other => Err(AlignError::UnsupportedFormat(format!(
            "unrecognized extension '{other}' (expected .ply or .xyz)"
        ))),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum PlyFormat {
    Ascii,
    BinaryLe,
}

#[derive(Clone, Copy, PartialEq)]
enum PropType {
    F32,
    F64,
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl PropType {
    fn size(self) -> usize {
        match self {
            PropType::I8 | PropType::U8 => 1,
            PropType::I16 | PropType::U16 => 2,
            PropType::F32 | PropType::I32 | PropType::U32 => 4,
            PropType::F64 => 8,
        }
    }

    fn parse(name: &str) -> Option<PropType> {
        Some(match name {
            "float" | "float32" => PropType::F32,
            "double" | "float64" => PropType::F64,
            "char" | "int8" => PropType::I8,
            "uchar" | "uint8" => PropType::U8,
            "short" | "int16" => PropType::I16,
            "ushort" | "uint16" => PropType::U16,
            "int" | "int32" => PropType::I32,
            "uint" | "uint32" => PropType::U32,
            _ => return None,
        })
    }
}

struct PlyHeader {
    format: PlyFormat,
    vertex_count: usize,
    /// (name, type) in declaration order
    properties: Vec<(String, PropType)>,
    /// elements declared after the vertex element
    trailing_elements: bool,
    /// byte offset of the first body byte
    body_offset: usize,
    /// line count of the header including end_header
    header_lines: usize,
}

fn parse_ply_header(bytes: &[u8]) -> Result<PlyHeader> {
    let mut offset = 0usize;
    let mut lineno = 0usize;
    let mut next_line = || -> Result<(usize, String)> {
        if offset >= bytes.len() {
            return Err(parse_err(format!("byte {offset}"), "unexpected end of header"));
        }
        let start = offset;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| start + p)
            .unwrap_or(bytes.len());
        offset = end + 1;
        lineno += 1;
        let line = std::str::from_utf8(&bytes[start..end])
            .map_err(|_| parse_err(format!("line {lineno}"), "header is not UTF-8"))?
            .trim_end_matches('\r')
            .to_string();
        Ok((lineno, line))
    };

    let (_, magic) = next_line()?;
    if magic.trim() != "ply" {
        return Err(parse_err("line 1", "missing 'ply' magic"));
    }
    let mut format = None;
    let mut vertex_count = None;
    let mut properties = Vec::new();
    let mut in_vertex_element = false;
    let mut trailing_elements = false;
    loop {
        let (ln, line) = next_line()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.first().copied() {
            Some("comment") | Some("obj_info") | None => {}
            Some("format") => {
                format = Some(match tokens.get(1).copied() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLe,
                    Some(other) => {
                        return Err(AlignError::UnsupportedFormat(format!(
                            "PLY format '{other}'"
                        )))
                    }
                    None => return Err(parse_err(format!("line {ln}"), "bare 'format' line")),
                });
            }
            Some("element") => {
                let name = tokens.get(1).copied().unwrap_or("");
                if name == "vertex" {
                    if vertex_count.is_some() {
                        return Err(parse_err(
                            format!("line {ln}"),
                            "duplicate vertex element",
                        ));
                    }
                    let count: usize = tokens
                        .get(2)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| {
                            parse_err(format!("line {ln}"), "bad vertex element count")
                        })?;
                    vertex_count = Some(count);
                    in_vertex_element = true;
                } else {
                    if vertex_count.is_none() {
                        return Err(AlignError::UnsupportedFormat(format!(
                            "element '{name}' precedes the vertex element"
                        )));
                    }
                    in_vertex_element = false;
                    trailing_elements = true;
                }
            }
            Some("property") => {
                if !in_vertex_element {
                    continue;
                }
                if tokens.get(1).copied() == Some("list") {
                    return Err(AlignError::UnsupportedFormat(
                        "list property inside vertex element".into(),
                    ));
                }
                let ty = tokens
                    .get(1)
                    .and_then(|t| PropType::parse(t))
                    .ok_or_else(|| {
                        AlignError::UnsupportedFormat(format!(
                            "vertex property type '{}'",
                            tokens.get(1).copied().unwrap_or("")
                        ))
                    })?;
                let name = tokens
                    .get(2)
                    .copied()
                    .ok_or_else(|| parse_err(format!("line {ln}"), "property missing name"))?;
                properties.push((name.to_string(), ty));
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(parse_err(
                    format!("line {ln}"),
                    format!("unrecognized header keyword '{other}'"),
                ))
            }
        }
    }
    let format = format.ok_or_else(|| parse_err("header", "missing format line"))?;
    let vertex_count =
        vertex_count.ok_or_else(|| parse_err("header", "missing vertex element"))?;
    Ok(PlyHeader {
        format,
        vertex_count,
        properties,
        trailing_elements,
        body_offset: offset,
        header_lines: lineno,
    })
}

/// Column indices of x, y, z and optionally nx, ny, nz.
fn locate_columns(props: &[(String, PropType)]) -> Result<([usize; 3], Option<[usize; 3]>)> {
    let find = |name: &str| props.iter().position(|(n, _)| n == name);
    let xyz = match (find("x"), find("y"), find("z")) {
        (Some(a), Some(b), Some(c)) => [a, b, c],
        _ => {
            return Err(AlignError::UnsupportedFormat(
                "vertex element lacks x, y, z properties".into(),
            ))
        }
    };
    for &i in &xyz {
        if !matches!(props[i].1, PropType::F32 | PropType::F64) {
            return Err(AlignError::UnsupportedFormat(
                "coordinates must be float32 or float64".into(),
            ));
        }
    }
    let normals = match (find("nx"), find("ny"), find("nz")) {
        (Some(a), Some(b), Some(c)) => {
            for &i in &[a, b, c] {
                if !matches!(props[i].1, PropType::F32 | PropType::F64) {
                    return Err(AlignError::UnsupportedFormat(
                        "normals must be float32 or float64".into(),
                    ));
                }
            }
            Some([a, b, c])
        }
        _ => None,
    };
    Ok((xyz, normals))
}

fn check_finite(v: f64, location: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(location, "non-finite coordinate"))
    }
}

fn normalize_or_err(v: Vec3, location: &str) -> Result<Vec3> {
    let n = v.norm();
    if n < 1e-30 {
        return Err(parse_err(location, "zero-length normal"));
    }
    // already-unit normals pass through untouched so binary round-trips
    // stay bit-exact
    if (n - 1.0).abs() <= 1e-12 {
        Ok(v)
    } else {
        Ok(v / n)
    }
}

fn read_ply(path: &Path) -> Result<WeightedCloud> {
    let bytes = fs::read(path)?;
    let header = parse_ply_header(&bytes)?;
    let (xyz, nrm) = locate_columns(&header.properties)?;
    let mut points = Vec::with_capacity(header.vertex_count);
    let mut normals = nrm.map(|_| Vec::with_capacity(header.vertex_count));

    match header.format {
        PlyFormat::Ascii => {
            let body = std::str::from_utf8(&bytes[header.body_offset..])
                .map_err(|_| parse_err("body", "ascii body is not UTF-8"))?;
            let mut lines = body.lines();
            for i in 0..header.vertex_count {
                let ln = header.header_lines + 1 + i;
                let location = format!("line {ln}");
                let line = lines.next().ok_or_else(|| {
                    parse_err(
                        &location,
                        format!(
                            "vertex row {i} missing (declared {})",
                            header.vertex_count
                        ),
                    )
                })?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(&location, format!("bad number: {e}")))?;
                if vals.len() != header.properties.len() {
                    return Err(parse_err(
                        &location,
                        format!(
                            "expected {} values, found {}",
                            header.properties.len(),
                            vals.len()
                        ),
                    ));
                }
                points.push(Vec3::new(
                    check_finite(vals[xyz[0]], &location)?,
                    check_finite(vals[xyz[1]], &location)?,
                    check_finite(vals[xyz[2]], &location)?,
                ));
                if let (Some(cols), Some(out)) = (nrm, normals.as_mut()) {
                    let v = Vec3::new(
                        check_finite(vals[cols[0]], &location)?,
                        check_finite(vals[cols[1]], &location)?,
                        check_finite(vals[cols[2]], &location)?,
                    );
                    out.push(normalize_or_err(v, &location)?);
                }
            }
            if !header.trailing_elements {
                if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
                    return Err(parse_err(
                        "body",
                        format!(
                            "more vertex rows than the declared {} (first extra: '{}')",
                            header.vertex_count,
                            extra.trim()
                        ),
                    ));
                }
            }
        }
        PlyFormat::BinaryLe => {
            let stride: usize = header.properties.iter().map(|(_, t)| t.size()).sum();
            let offsets: Vec<usize> = header
                .properties
                .iter()
                .scan(0usize, |acc, (_, t)| {
                    let o = *acc;
                    *acc += t.size();
                    Some(o)
                })
                .collect();
            let body = &bytes[header.body_offset..];
            let need = stride * header.vertex_count;
            if body.len() < need {
                return Err(parse_err(
                    format!("byte {}", header.body_offset + body.len()),
                    format!(
                        "binary body truncated: need {need} bytes for {} vertices, found {}",
                        header.vertex_count,
                        body.len()
                    ),
                ));
            }
            if !header.trailing_elements && body.len() > need {
                return Err(parse_err(
                    format!("byte {}", header.body_offset + need),
                    format!("{} trailing bytes after vertex data", body.len() - need),
                ));
            }
            let read_f = |row: usize, col: usize| -> f64 {
                let base = row * stride + offsets[col];
                match header.properties[col].1 {
                    PropType::F32 => f32::from_le_bytes(
                        body[base..base + 4].try_into().unwrap(),
                    ) as f64,
                    PropType::F64 => {
                        f64::from_le_bytes(body[base..base + 8].try_into().unwrap())
                    }
                    _ => unreachable!("coordinate columns are float typed"),
                }
            };
            for i in 0..header.vertex_count {
                let location = format!("byte {}", header.body_offset + i * stride);
                points.push(Vec3::new(
                    check_finite(read_f(i, xyz[0]), &location)?,
                    check_finite(read_f(i, xyz[1]), &location)?,
                    check_finite(read_f(i, xyz[2]), &location)?,
                ));
                if let (Some(cols), Some(out)) = (nrm, normals.as_mut()) {
                    let v = Vec3::new(
                        check_finite(read_f(i, cols[0]), &location)?,
                        check_finite(read_f(i, cols[1]), &location)?,
                        check_finite(read_f(i, cols[2]), &location)?,
                    );
                    out.push(normalize_or_err(v, &location)?);
                }
            }
        }
    }
    Ok(WeightedCloud { points, normals, weights: None })
}

fn read_xyz(path: &Path) -> Result<WeightedCloud> {
    let text = fs::read_to_string(path)?;
    let mut points = Vec::new();
    let mut normals: Option<Vec<Vec3>> = None;
    let mut arity: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let location = format!("line {}", i + 1);
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(&location, format!("bad number: {e}")))?;
        if !matches!(vals.len(), 3 | 6) {
            return Err(parse_err(
                &location,
                format!("expected 3 or 6 values per line, found {}", vals.len()),
            ));
        }
        match arity {
            None => {
                arity = Some(vals.len());
                if vals.len() == 6 {
                    normals = Some(Vec::new());
                }
            }
            Some(a) if a != vals.len() => {
                return Err(parse_err(&location, "inconsistent column count"))
            }
            _ => {}
        }
        points.push(Vec3::new(
            check_finite(vals[0], &location)?,
            check_finite(vals[1], &location)?,
            check_finite(vals[2], &location)?,
        ));
        if let Some(out) = normals.as_mut() {
            let v = Vec3::new(
                check_finite(vals[3], &location)?,
                check_finite(vals[4], &location)?,
                check_finite(vals[5], &location)?,
            );
            out.push(normalize_or_err(v, &location)?);
        }
    }
    Ok(WeightedCloud { points, normals, weights: None })
}

/// Writes an ascii PLY with x,y,z and, when present, nx,ny,nz (float64).
pub fn write_ply_ascii(cloud: &WeightedCloud, path: &Path) -> Result<()> {
    let mut out = String::new();
    let with_normals = cloud.normals.is_some();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.points.len());
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    if with_normals {
        out.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
        if let Some(ns) = &cloud.normals {
            let n = ns[i];
            let _ = write!(out, " {} {} {}", n.x, n.y, n.z);
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a binary-little-endian PLY with float64 columns; reading it back
/// reproduces every coordinate bit for bit.
pub fn write_ply_binary(cloud: &WeightedCloud, path: &Path) -> Result<()> {
    let with_normals = cloud.normals.is_some();
    let mut out = Vec::new();
    out.extend_from_slice(b"ply\nformat binary_little_endian 1.0\n");
    out.extend_from_slice(format!("element vertex {}\n", cloud.points.len()).as_bytes());
    out.extend_from_slice(b"property double x\nproperty double y\nproperty double z\n");
    if with_normals {
        out.extend_from_slice(
            b"property double nx\nproperty double ny\nproperty double nz\n",
        );
    }
    out.extend_from_slice(b"end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        for v in [p.x, p.y, p.z] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(ns) = &cloud.normals {
            let n = ns[i];
            for v in [n.x, n.y, n.z] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes "x y z [nx ny nz]" text.
pub fn write_xyz(cloud: &WeightedCloud, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
        if let Some(ns) = &cloud.normals {
            let n = ns[i];
            let _ = write!(out, " {} {} {}", n.x, n.y, n.z);
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// JSON document schema for an alignment result.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultDocument {
    pub q_ijkr: [f64; 4],
    pub t: [f64; 3],
    pub rot_lower: f64,
    pub rot_upper: f64,
    pub trans_lower: f64,
    pub trans_upper: f64,
    pub depths: DepthsDocument,
    pub candidates: Vec<CandidateDocument>,
    pub timings_ms: TimingsDocument,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DepthsDocument {
    pub rot: u32,
    pub trans: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CandidateDocument {
    pub q_ijkr: [f64; 4],
    pub t: [f64; 3],
    pub lambda_deg: f64,
    pub mw_index: Option<usize>,
    pub rot_lower: f64,
    pub rot_upper: f64,
    pub trans_lower: f64,
    pub trans_upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TimingsDocument {
    pub normals: f64,
    pub clustering: f64,
    pub rot_bb: f64,
    pub trans_bb: f64,
    pub total: f64,
}

impl From<&AlignmentResult> for ResultDocument {
    fn from(r: &AlignmentResult) -> Self {
        ResultDocument {
            q_ijkr: r.q.as_array(),
            t: [r.t.x, r.t.y, r.t.z],
            rot_lower: r.rot_lower,
            rot_upper: r.rot_upper,
            trans_lower: r.trans_lower,
            trans_upper: r.trans_upper,
            depths: DepthsDocument { rot: r.rot_depth, trans: r.trans_depth },
            candidates: r
                .candidates
                .iter()
                .map(|c| CandidateDocument {
                    q_ijkr: c.q.as_array(),
                    t: [c.t.x, c.t.y, c.t.z],
                    lambda_deg: c.lambda_deg,
                    mw_index: c.mw_index,
                    rot_lower: c.rot_lower,
                    rot_upper: c.rot_upper,
                    trans_lower: c.trans_lower,
                    trans_upper: c.trans_upper,
                })
                .collect(),
            timings_ms: TimingsDocument {
                normals: r.timings.normals_ms,
                clustering: r.timings.clustering_ms,
                rot_bb: r.timings.rot_bb_ms,
                trans_bb: r.timings.trans_bb_ms,
                total: r.timings.total_ms,
            },
        }
    }
}

/// Serializes the result as pretty JSON; float formatting is shortest
/// round-trip so a re-parse reproduces every value exactly.
pub fn write_result(result: &AlignmentResult, path: &Path) -> Result<()> {
    write_result_document(&ResultDocument::from(result), path)
}

pub fn write_result_document(doc: &ResultDocument, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(doc)
        .map_err(|e| AlignError::Internal(format!("result serialization: {e}")))?;
    let mut f = fs::File::create(path)?;
    f.write_all(json.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_result(path: &Path) -> Result<ResultDocument> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| parse_err(format!("line {}", e.line()), e.to_string()))
}

/// CSV trace: one row per branch-and-bound iteration.
pub fn write_trace(trace: &[TraceRecord], path: &Path) -> Result<()> {
    let mut out = String::from("iter,stage,depth,nodes_active,best_L,best_U,gap\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iter,
            r.stage.as_str(),
            r.depth,
            r.nodes_active,
            r.best_l,
            r.best_u,
            r.gap
        );
    }
    fs::write(path, out)?;
    Ok(())
}
