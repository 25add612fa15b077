use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Square,
    Triangular,
    Honeycomb,
    SimpleCubic,
    Fcc,
}

impl Geometry {
    pub const ALL: [Geometry; 5] = [
        Geometry::Square,
        Geometry::Triangular,
        Geometry::Honeycomb,
        Geometry::SimpleCubic,
        Geometry::Fcc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Square => "square",
            Geometry::Triangular => "triangular",
            Geometry::Honeycomb => "honeycomb",
            Geometry::SimpleCubic => "simple-cubic",
            Geometry::Fcc => "fcc",
        }
    }

    /// Infinite-lattice bond percolation threshold.
    pub fn threshold(self) -> f64 {
        let tri = 2.0 * (std::f64::consts::PI / 18.0).sin();
        match self {
            Geometry::Square => 0.5,
            Geometry::Triangular => tri,
            Geometry::Honeycomb => 1.0 - tri,
            Geometry::SimpleCubic => 0.249,
            Geometry::Fcc => 0.120,
        }
    }

    pub fn coordination(self) -> usize {
        match self {
            Geometry::Square => 4,
            Geometry::Triangular => 6,
            Geometry::Honeycomb => 3,
            Geometry::SimpleCubic => 6,
            Geometry::Fcc => 12,
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Geometry::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnsupportedSize(format!("unknown geometry `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Open,
    /// Wraps every axis except the spanning one.
    PeriodicTransverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub geometry: Geometry,
    pub linear_size: usize,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(geometry: Geometry, linear_size: usize, boundary: Boundary) -> Result<Self> {
        let min = match boundary {
            Boundary::Open => 2,
            Boundary::PeriodicTransverse => 3,
        };
        if linear_size < min {
            return Err(Error::UnsupportedSize(format!(
                "linear size {linear_size} below {min} for {boundary:?} boundary"
            )));
        }
        if linear_size > 1 << 12 {
            return Err(Error::UnsupportedSize(format!("linear size {linear_size} too large")));
        }
        Ok(Self {
            geometry,
            linear_size,
            boundary,
        })
    }

    pub fn open(geometry: Geometry, linear_size: usize) -> Result<Self> {
        Self::new(geometry, linear_size, Boundary::Open)
    }
}

/// Face membership bits: the spanning axis runs from `LOW` to `HIGH`.
pub const FACE_LOW: u8 = 1;
pub const FACE_HIGH: u8 = 2;

/// Nodes, bonds and the two faces used for the spanning test.
///
/// Layouts (spanning along the last coordinate):
/// * square / triangular: `(x, y)` at `y·L + x`; triangular adds the
///   `(x,y)–(x+1,y+1)` diagonal, giving a rhombic patch.
/// * honeycomb: two sublattices `A(i,j)` at `2(j·L+i)` and `B(i,j)` at
///   `2(j·L+i)+1`; `A(i,j)` bonds to `B(i,j)`, `B(i−1,j)` and `B(i,j−1)`.
/// * simple cubic: `(x, y, z)` at `(z·L + y)·L + x`.
/// * fcc: integer points of `[0,2L)³` with even coordinate sum (4 sites
///   per conventional cell); `(x,y,z)` with `x = 2i + ((y+z) & 1)` at
///   `(z·2L + y)·L + i`.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub num_nodes: usize,
    pub bonds: Vec<(u32, u32)>,
    pub faces: Vec<u8>,
}

impl Lattice {
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(u, v) in &self.bonds {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }
}

fn wrap(coord: isize, size: usize, periodic: bool) -> Option<usize> {
    if (0..size as isize).contains(&coord) {
        Some(coord as usize)
    } else if periodic {
        Some(coord.rem_euclid(size as isize) as usize)
    } else {
        None
    }
}

fn face(coord: usize, size: usize) -> u8 {
    let mut f = 0;
    if coord == 0 {
        f |= FACE_LOW;
    }
    if coord + 1 == size {
        f |= FACE_HIGH;
    }
    f
}

pub fn generate_lattice(spec: &LatticeSpec) -> Result<Lattice> {
    let l = spec.linear_size;
    let periodic = spec.boundary == Boundary::PeriodicTransverse;
    let mut bonds = Vec::new();
    let (num_nodes, faces) = match spec.geometry {
        Geometry::Square | Geometry::Triangular => {
            let idx = |x: usize, y: usize| (y * l + x) as u32;
            let mut steps = vec![(1isize, 0isize), (0, 1)];
            if spec.geometry == Geometry::Triangular {
                steps.push((1, 1));
            }
            for y in 0..l {
                for x in 0..l {
                    for &(dx, dy) in &steps {
                        let ny = y as isize + dy;
                        if ny >= l as isize {
                            continue;
                        }
                        if let Some(nx) = wrap(x as isize + dx, l, periodic) {
                            bonds.push((idx(x, y), idx(nx, ny as usize)));
                        }
                    }
                }
            }
            let faces = (0..l * l).map(|i| face(i / l, l)).collect();
            (l * l, faces)
        }
        Geometry::Honeycomb => {
            let a = |i: usize, j: usize| (2 * (j * l + i)) as u32;
            let b = |i: usize, j: usize| (2 * (j * l + i) + 1) as u32;
            for j in 0..l {
                for i in 0..l {
                    bonds.push((a(i, j), b(i, j)));
                    if let Some(pi) = wrap(i as isize - 1, l, periodic) {
                        bonds.push((a(i, j), b(pi, j)));
                    }
                    if j > 0 {
                        bonds.push((a(i, j), b(i, j - 1)));
                    }
                }
            }
            let faces = (0..2 * l * l).map(|n| face(n / 2 / l, l)).collect();
            (2 * l * l, faces)
        }
        Geometry::SimpleCubic => {
            let idx = |x: usize, y: usize, z: usize| ((z * l + y) * l + x) as u32;
            for z in 0..l {
                for y in 0..l {
                    for x in 0..l {
                        if let Some(nx) = wrap(x as isize + 1, l, periodic) {
                            bonds.push((idx(x, y, z), idx(nx, y, z)));
                        }
                        if let Some(ny) = wrap(y as isize + 1, l, periodic) {
                            bonds.push((idx(x, y, z), idx(x, ny, z)));
                        }
                        if z + 1 < l {
                            bonds.push((idx(x, y, z), idx(x, y, z + 1)));
                        }
                    }
                }
            }
            let faces = (0..l * l * l).map(|n| face(n / (l * l), l)).collect();
            (l * l * l, faces)
        }
        Geometry::Fcc => {
            let side = 2 * l;
            let idx = |x: usize, y: usize, z: usize| ((z * side + y) * l + x / 2) as u32;
            const FORWARD: [(isize, isize, isize); 6] =
                [(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)];
            for z in 0..side {
                for y in 0..side {
                    for i in 0..l {
                        let x = 2 * i + ((y + z) & 1);
                        for &(dx, dy, dz) in &FORWARD {
                            let nz = z as isize + dz;
                            if !(0..side as isize).contains(&nz) {
                                continue;
                            }
                            let (Some(nx), Some(ny)) = (
                                wrap(x as isize + dx, side, periodic),
                                wrap(y as isize + dy, side, periodic),
                            ) else {
                                continue;
                            };
                            bonds.push((idx(x, y, z), idx(nx, ny, nz as usize)));
                        }
                    }
                }
            }
            let n = 4 * l * l * l;
            let faces = (0..n).map(|k| face(k / (side * l), side)).collect();
            (n, faces)
        }
    };
    Ok(Lattice {
        spec: *spec,
        num_nodes,
        bonds,
        faces,
    })
}
