//! Solution field files.
//!
//! One JSON header line followed by `nx·ny` little-endian `f64` values over the
//! full grid, row by row (`j` outer, `i` inner). Non-interior nodes hold 0.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LmmError, Result};
use crate::hilbert::mesh::{DomainKind, Mesh};
use crate::hilbert::operator::GridFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    /// Mesh fingerprint as 16 hex digits.
    pub mesh: String,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub domain_kind: DomainKind,
    #[serde(default)]
    pub origin: [f64; 2],
}

impl FieldHeader {
    pub fn for_mesh(mesh: &Mesh) -> Self {
        Self {
            mesh: format!("{:016x}", mesh.id()),
            nx: mesh.nx(),
            ny: mesh.ny(),
            h: mesh.h(),
            domain_kind: mesh.kind(),
            origin: mesh.origin(),
        }
    }
}

pub fn write_field_to(mut w: impl Write, mesh: &Mesh, u: &GridFunction) -> Result<()> {
    u.check_mesh(mesh.id())?;
    let header = serde_json::to_string(&FieldHeader::for_mesh(mesh))?;
    writeln!(w, "{header}")?;
    let mut full = vec![0.0f64; mesh.nx() * mesh.ny()];
    for (k, &v) in u.values().iter().enumerate() {
        let (i, j) = mesh.grid_index(k);
        full[j * mesh.nx() + i] = v;
    }
    let mut bytes = Vec::with_capacity(full.len() * 8);
    for v in full {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_field(path: impl AsRef<Path>, mesh: &Mesh, u: &GridFunction) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_field_to(&mut w, mesh, u)?;
    w.flush()?;
    Ok(())
}

/// Reads a header and the full-grid values.
pub fn read_field_raw(r: impl Read) -> Result<(FieldHeader, Vec<f64>)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let expected = header.nx * header.ny * 8;
    if bytes.len() != expected {
        return Err(LmmError::LengthMismatch {
            expected: header.nx * header.ny,
            found: bytes.len() / 8,
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, values))
}

/// Reads a field and restricts it to the interior nodes of `mesh`.
pub fn read_field(path: impl AsRef<Path>, mesh: &Mesh) -> Result<GridFunction> {
    let (header, full) = read_field_raw(std::fs::File::open(path)?)?;
    field_on_mesh(&header, &full, mesh)
}

pub fn field_on_mesh(header: &FieldHeader, full: &[f64], mesh: &Mesh) -> Result<GridFunction> {
    if header.nx != mesh.nx()
        || header.ny != mesh.ny()
        || (header.h - mesh.h()).abs() > 1e-12 * mesh.h()
        || header.domain_kind != mesh.kind()
    {
        return Err(LmmError::Mesh(format!(
            "field grid {}x{} h={} ({}) does not match mesh {}x{} h={} ({})",
            header.nx,
            header.ny,
            header.h,
            header.domain_kind,
            mesh.nx(),
            mesh.ny(),
            mesh.h(),
            mesh.kind()
        )));
    }
    let values = (0..mesh.len())
        .map(|k| {
            let (i, j) = mesh.grid_index(k);
            full[j * mesh.nx() + i]
        })
        .collect();
    GridFunction::from_values(mesh, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::mesh::{build_mesh, DomainSpec};

    #[test]
    fn write_then_read() {
        let mesh = build_mesh(&DomainSpec::Dumbbell, 21).unwrap();
        let u = GridFunction::from_fn(&mesh, |x| x[0] - 2.0 * x[1]);
        let mut buf = Vec::new();
        write_field_to(&mut buf, &mesh, &u).unwrap();
        let first_newline = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(buf.len() - first_newline - 1, mesh.nx() * mesh.ny() * 8);
        let (header, full) = read_field_raw(&buf[..]).unwrap();
        assert_eq!(header.domain_kind, DomainKind::Dumbbell);
        let back = field_on_mesh(&header, &full, &mesh).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let mesh = build_mesh(&DomainSpec::Square, 9).unwrap();
        let other = build_mesh(&DomainSpec::Square, 11).unwrap();
        let u = GridFunction::zeros(&mesh);
        let mut buf = Vec::new();
        write_field_to(&mut buf, &mesh, &u).unwrap();
        let (header, full) = read_field_raw(&buf[..]).unwrap();
        assert!(field_on_mesh(&header, &full, &other).is_err());
        assert!(read_field_raw(&buf[..buf.len() - 3]).is_err());
    }
}
