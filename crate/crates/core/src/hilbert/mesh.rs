//! Masked uniform grids.
//!
//! A mesh is a uniform `nx × ny` lattice with spacing `h` together with the
//! set of *interior* nodes: nodes strictly inside the domain. Every other node
//! carries the homogeneous Dirichlet value. Interior nodes are numbered
//! densely, with the fast index running along the shorter grid axis so that
//! the five-point operator has bandwidth of at most one grid line.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LmmError, Result};

/// Points closer than this to a domain boundary count as boundary nodes.
const BOUNDARY_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Square,
    Dumbbell,
    CustomMask,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainKind::Square => "square",
            DomainKind::Dumbbell => "dumbbell",
            DomainKind::CustomMask => "custom-mask",
        };
        f.write_str(s)
    }
}

/// A 0/1 node mask read from a text file.
///
/// The file starts with a header line `nx ny h` followed by `ny` rows of `nx`
/// characters. The first row is `j = 0` (smallest `x2`); node `(i, j)` sits at
/// `(i·h, j·h)`. A `1` marks an interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskGrid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub cells: Vec<bool>,
}

impl MaskGrid {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| LmmError::Mesh("mask file is empty".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(LmmError::Mesh(format!(
                "mask header must be `nx ny h`, got `{header}`"
            )));
        }
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| LmmError::Mesh(format!("bad mask dimension `{s}`")))
        };
        let nx = parse_usize(fields[0])?;
        let ny = parse_usize(fields[1])?;
        let h: f64 = fields[2]
            .parse()
            .map_err(|_| LmmError::Mesh(format!("bad mask spacing `{}`", fields[2])))?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(LmmError::Mesh(format!("mask spacing must be positive, got {h}")));
        }
        let mut cells = Vec::with_capacity(nx * ny);
        let mut rows = 0;
        for (row, line) in lines.enumerate() {
            if line.chars().count() != nx {
                return Err(LmmError::Mesh(format!(
                    "mask row {row} has {} characters, expected {nx}",
                    line.chars().count()
                )));
            }
            for c in line.chars() {
                match c {
                    '0' => cells.push(false),
                    '1' => cells.push(true),
                    other => {
                        return Err(LmmError::Mesh(format!(
                            "mask row {row}: unexpected character `{other}`"
                        )))
                    }
                }
            }
            rows += 1;
        }
        if rows != ny {
            return Err(LmmError::Mesh(format!("mask has {rows} rows, expected {ny}")));
        }
        Ok(Self { nx, ny, h, cells })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.nx, self.ny, self.h);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(if self.cells[j * self.nx + i] { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    /// The square `(-1, 1)²`.
    Square,
    /// Disks of radius 0.5 at `(-1, 0)` and radius 1 at `(2, 0)`, joined by
    /// the corridor `[-1, 2] × (-0.2, 0.2)`.
    Dumbbell,
    Mask(MaskGrid),
}

impl DomainSpec {
    pub fn kind(&self) -> DomainKind {
        match self {
            DomainSpec::Square => DomainKind::Square,
            DomainSpec::Dumbbell => DomainKind::Dumbbell,
            DomainSpec::Mask(_) => DomainKind::CustomMask,
        }
    }
}

/// Open-set membership test for the dumbbell domain.
pub fn dumbbell_contains(x: [f64; 2]) -> bool {
    let [x1, x2] = x;
    let small = (x1 + 1.0).powi(2) + x2 * x2 < 0.25 - BOUNDARY_EPS;
    let large = (x1 - 2.0).powi(2) + x2 * x2 < 1.0 - BOUNDARY_EPS;
    let corridor = (-1.0..=2.0).contains(&x1) && x2.abs() < 0.2 - BOUNDARY_EPS;
    small || large || corridor
}

/// Open-set membership test for the square `(-1, 1)²`.
pub fn square_contains(x: [f64; 2]) -> bool {
    x[0].abs() < 1.0 - BOUNDARY_EPS && x[1].abs() < 1.0 - BOUNDARY_EPS
}

#[derive(Debug, Clone)]
pub struct Mesh {
    kind: DomainKind,
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    nodes: Vec<(usize, usize)>,
    coords: Vec<[f64; 2]>,
    lookup: Vec<u32>,
    id: u64,
}

const NONE: u32 = u32::MAX;

impl Mesh {
    fn from_membership(
        kind: DomainKind,
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        inside: impl Fn(usize, usize, [f64; 2]) -> bool,
    ) -> Result<Self> {
        let coord = |i: usize, j: usize| [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
        let mut lookup = vec![NONE; nx * ny];
        let mut nodes = Vec::new();
        let mut coords = Vec::new();
        let mut visit = |i: usize, j: usize| {
            let x = coord(i, j);
            if inside(i, j, x) {
                lookup[j * nx + i] = nodes.len() as u32;
                nodes.push((i, j));
                coords.push(x);
            }
        };
        if ny <= nx {
            for i in 0..nx {
                for j in 0..ny {
                    visit(i, j);
                }
            }
        } else {
            for j in 0..ny {
                for i in 0..nx {
                    visit(i, j);
                }
            }
        }
        if nodes.is_empty() {
            return Err(LmmError::Mesh("domain has no interior nodes".into()));
        }
        let id = fingerprint(kind, nx, ny, h, origin, &nodes);
        Ok(Self {
            kind,
            nx,
            ny,
            h,
            origin,
            nodes,
            coords,
            lookup,
            id,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    /// Stable fingerprint of the grid geometry and interior set.
    pub fn id(&self) -> u64 {
        self.id
    }
    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }
    /// Grid position `(i, j)` of interior node `k`.
    pub fn grid_index(&self, k: usize) -> (usize, usize) {
        self.nodes[k]
    }
    /// Interior index of grid node `(i, j)`, if it is interior.
    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.nx || j >= self.ny {
            return None;
        }
        match self.lookup[j * self.nx + i] {
            NONE => None,
            k => Some(k as usize),
        }
    }
    /// Interior indices of the four stencil neighbours of node `k`
    /// (west, east, south, north). `None` is a Dirichlet node.
    pub fn neighbors(&self, k: usize) -> [Option<usize>; 4] {
        let (i, j) = self.nodes[k];
        let west = i.checked_sub(1).and_then(|i| self.interior_index(i, j));
        let east = self.interior_index(i + 1, j);
        let south = j.checked_sub(1).and_then(|j| self.interior_index(i, j));
        let north = self.interior_index(i, j + 1);
        [west, east, south, north]
    }
}

fn fingerprint(
    kind: DomainKind,
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    nodes: &[(usize, usize)],
) -> u64 {
    // FNV-1a
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(kind as u64);
    feed(nx as u64);
    feed(ny as u64);
    feed(h.to_bits());
    feed(origin[0].to_bits());
    feed(origin[1].to_bits());
    feed(nodes.len() as u64);
    for &(i, j) in nodes {
        feed(((i as u64) << 32) | j as u64);
    }
    hash
}

/// Builds the interior-node mesh for a domain.
///
/// For the built-in domains `resolution` is the number of grid nodes across
/// the `x2`-extent `[-1, 1]`, so `h = 2 / (resolution - 1)`. For a mask the
/// grid comes from the file and `resolution` is ignored.
pub fn build_mesh(spec: &DomainSpec, resolution: usize) -> Result<Mesh> {
    match spec {
        DomainSpec::Square => {
            check_resolution(resolution)?;
            let h = 2.0 / (resolution - 1) as f64;
            let n = resolution;
            Mesh::from_membership(DomainKind::Square, n, n, h, [-1.0, -1.0], |i, j, _| {
                i > 0 && j > 0 && i + 1 < n && j + 1 < n
            })
        }
        DomainSpec::Dumbbell => {
            check_resolution(resolution)?;
            let h = 2.0 / (resolution - 1) as f64;
            let nx = (4.5 / h - 1e-9).ceil() as usize + 1;
            let ny = resolution;
            Mesh::from_membership(DomainKind::Dumbbell, nx, ny, h, [-1.5, -1.0], |_, _, x| {
                dumbbell_contains(x)
            })
        }
        DomainSpec::Mask(mask) => {
            if mask.cells.len() != mask.nx * mask.ny {
                return Err(LmmError::Mesh("mask size does not match its header".into()));
            }
            Mesh::from_membership(
                DomainKind::CustomMask,
                mask.nx,
                mask.ny,
                mask.h,
                [0.0, 0.0],
                |i, j, _| mask.cells[j * mask.nx + i],
            )
        }
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 3 {
        return Err(LmmError::Mesh(format!(
            "resolution {resolution} too small: at least 3 nodes per axis are needed"
        )));
    }
    Ok(())
}
