//! Point cloud file formats: whitespace separated ASCII `xyz` and
//! `binary_little_endian` PLY with a single `vertex` element of float32
//! `x`, `y`, `z` properties.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    Ply,
}

impl CloudFormat {
    /// `.ply` files are PLY, everything else is treated as ASCII xyz.
    pub fn from_path(path: &Path) -> CloudFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ply") => CloudFormat::Ply,
            _ => CloudFormat::Xyz,
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        CloudFormat::Xyz => read_xyz(reader, path),
        CloudFormat::Ply => read_ply(reader, path),
    }
}

pub fn store_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    match format {
        CloudFormat::Xyz => write_xyz(cloud, &mut writer),
        CloudFormat::Ply => write_ply(cloud, &mut writer),
    }
    .and_then(|()| writer.flush())
    .map_err(|e| Error::io(path, e))
}

/// Load using the format implied by the file extension.
pub fn load_auto(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    load_cloud(path, CloudFormat::from_path(path))
}

pub fn store_auto(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    store_cloud(cloud, path, CloudFormat::from_path(path))
}

pub fn read_xyz<R: BufRead>(reader: R, name: &Path) -> Result<PointCloud> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: name.to_path_buf(),
        line,
        message,
    };
    let mut points = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(name, e))?;
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 coordinates, found {}", fields.len()),
            ));
        }
        let mut xyz = [0.0; 3];
        for (slot, field) in xyz.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("invalid number {field:?}")))?;
            if !slot.is_finite() {
                return Err(parse_err(lineno, format!("non-finite coordinate {field:?}")));
            }
        }
        points.push(Point3::from_array(xyz));
    }
    if points.is_empty() {
        return Err(parse_err(0, "file contains no points".into()));
    }
    Ok(PointCloud::from_vec_unchecked(points))
}

pub fn write_xyz<W: Write>(cloud: &PointCloud, w: &mut W) -> std::io::Result<()> {
    for p in cloud {
        // `{}` prints the shortest representation that parses back exactly.
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

pub fn write_ply<W: Write>(cloud: &PointCloud, w: &mut W) -> std::io::Result<()> {
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\ncomment generated by cloudmorph\n\
         element vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        cloud.len()
    )?;
    let mut buf = Vec::with_capacity(cloud.len() * 12);
    for p in cloud {
        for c in p.to_array() {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    w.write_all(&buf)
}

pub fn read_ply<R: BufRead>(mut reader: R, name: &Path) -> Result<PointCloud> {
    let mut offset: u64 = 0;
    let fmt_err = |offset: u64, message: String| Error::Format {
        path: name.to_path_buf(),
        offset,
        message,
    };

    let header_line = |reader: &mut R, offset: &mut u64| -> Result<String> {
        let mut raw = Vec::new();
        let read = reader.read_until(b'\n', &mut raw).map_err(|e| Error::io(name, e))?;
        if read == 0 {
            return Err(fmt_err(*offset, "unexpected end of header".into()));
        }
        *offset += read as u64;
        String::from_utf8(raw)
            .map(|s| s.trim_end_matches(['\n', '\r']).to_string())
            .map_err(|_| fmt_err(*offset, "header is not valid text".into()))
    };

    if header_line(&mut reader, &mut offset)?.trim() != "ply" {
        return Err(fmt_err(0, "missing 'ply' magic".into()));
    }

    let mut vertex_count: Option<usize> = None;
    let mut in_vertex = false;
    let mut order: Vec<usize> = Vec::new();
    let mut format_ok = false;
    loop {
        let start = offset;
        let line = header_line(&mut reader, &mut offset)?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            ["comment", ..] | ["obj_info", ..] => continue,
            ["format", "binary_little_endian", "1.0"] => format_ok = true,
            ["format", other, ..] => return Err(fmt_err(start, format!("unsupported PLY format '{other}'"))),
            ["element", "vertex", count] => {
                if vertex_count.is_some() {
                    return Err(fmt_err(start, "duplicate vertex element".into()));
                }
                let n = count
                    .parse::<usize>()
                    .map_err(|_| fmt_err(start, format!("invalid vertex count {count:?}")))?;
                vertex_count = Some(n);
                in_vertex = true;
            }
            ["element", other, ..] => return Err(fmt_err(start, format!("unsupported PLY element '{other}'"))),
            ["property", ty, prop] if in_vertex => {
                if !matches!(*ty, "float" | "float32") {
                    return Err(fmt_err(start, format!("unsupported type '{ty}' for property '{prop}'")));
                }
                let axis = match *prop {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    _ => return Err(fmt_err(start, format!("unsupported vertex property '{prop}'"))),
                };
                if order.contains(&axis) {
                    return Err(fmt_err(start, format!("duplicate property '{prop}'")));
                }
                order.push(axis);
            }
            ["end_header"] => break,
            _ => return Err(fmt_err(start, format!("malformed header line {line:?}"))),
        }
    }
    if !format_ok {
        return Err(fmt_err(offset, "missing format line".into()));
    }
    let n = vertex_count.ok_or_else(|| fmt_err(offset, "missing vertex element".into()))?;
    if order.len() != 3 {
        return Err(fmt_err(offset, "vertex element must have x, y and z".into()));
    }
    if n == 0 {
        return Err(fmt_err(offset, "vertex element is empty".into()));
    }

    let mut body = vec![0u8; n * 12];
    let mut filled = 0;
    while filled < body.len() {
        let got = reader.read(&mut body[filled..]).map_err(|e| Error::io(name, e))?;
        if got == 0 {
            return Err(fmt_err(
                offset + filled as u64,
                format!("truncated vertex data: expected {} bytes, found {filled}", body.len()),
            ));
        }
        filled += got;
    }
    let mut points = Vec::with_capacity(n);
    for (i, chunk) in body.chunks_exact(12).enumerate() {
        let mut xyz = [0.0; 3];
        for (slot, bytes) in order.iter().zip(chunk.chunks_exact(4)) {
            xyz[*slot] = f32::from_le_bytes(bytes.try_into().unwrap()) as f64;
        }
        let p = Point3::from_array(xyz);
        if !p.is_finite() {
            return Err(fmt_err(
                offset + 12 * i as u64,
                format!("non-finite coordinate in vertex {i}"),
            ));
        }
        points.push(p);
    }
    Ok(PointCloud::from_vec_unchecked(points))
}
