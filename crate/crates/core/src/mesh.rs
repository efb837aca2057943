//! Uniform rectangular partitions of axis-aligned domains.
//!
//! Elements are numbered row by row from the bottom-left corner. Horizontal
//! edges come first in the edge list (row by row, bottom to top), followed by
//! vertical edges. Every edge carries one fixed global normal: `(0, 1)` for
//! horizontal edges and `(1, 0)` for vertical ones.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// An axis-aligned rectangle `(x_min, x_max) x (y_min, y_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidDomain(format!(
                "({x_min}, {x_max}) x ({y_min}, {y_max})"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    pub fn unit_square() -> Self {
        Self { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        [0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max)]
    }

    /// Closed containment with a tolerance relative to the rectangle size.
    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-12 * self.diameter();
        p[0] >= self.x_min - tol
            && p[0] <= self.x_max + tol
            && p[1] >= self.y_min - tol
            && p[1] <= self.y_max + tol
    }

    /// Maps a physical point to reference coordinates in `[0, 1]^2`.
    pub fn to_reference(&self, p: Point) -> Point {
        [(p[0] - self.x_min) / self.width(), (p[1] - self.y_min) / self.height()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Single,
    Stokes,
    Darcy,
}

/// Local position of an edge on its element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Sign relating the element's outward normal to the edge's global normal.
    pub fn orientation(self) -> f64 {
        match self {
            Side::Bottom | Side::Left => -1.0,
            Side::Right | Side::Top => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    pub id: usize,
    pub bounds: Domain,
    /// Diameter `h_K` of the rectangle.
    pub h: f64,
    pub subdomain: Subdomain,
    /// Incident edges in `Side::ALL` order.
    pub edges: [usize; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Interior,
    Boundary,
    Interface,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: usize,
    /// Lexicographically smaller endpoint; the edge parameter `t = 0` here.
    pub start: Point,
    pub end: Point,
    pub normal: Point,
    pub length: f64,
    /// Elements on the side the normal points away from, then towards.
    pub neighbors: Vec<usize>,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn point_at(&self, t: f64) -> Point {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }

    pub fn is_horizontal(&self) -> bool {
        self.normal[1] != 0.0
    }

    /// Edge parameter of a point assumed to lie on the edge.
    pub fn parameter_of(&self, p: Point) -> f64 {
        if self.is_horizontal() {
            (p[0] - self.start[0]) / (self.end[0] - self.start[0])
        } else {
            (p[1] - self.start[1]) / (self.end[1] - self.start[1])
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-12 * self.length.max(1.0);
        let t = self.parameter_of(p);
        let q = self.point_at(t.clamp(0.0, 1.0));
        (-tol..=1.0 + tol).contains(&t) && (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Domain,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    /// Largest element diameter.
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Horizontal Stokes/Darcy dividing line, when present.
    pub divider: Option<f64>,
}

impl Mesh {
    /// Builds an `nx x ny` uniform partition. With a divider `y = y_d`,
    /// elements above it are labelled Stokes and those below Darcy.
    pub fn uniform(domain: Domain, nx: usize, ny: usize, divider: Option<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidDomain(format!("subdivision counts {nx} x {ny}")));
        }
        let xs: Vec<f64> = (0..=nx)
            .map(|i| domain.x_min + domain.width() * i as f64 / nx as f64)
            .collect();
        let ys: Vec<f64> = (0..=ny)
            .map(|j| domain.y_min + domain.height() * j as f64 / ny as f64)
            .collect();

        let divider_row = match divider {
            None => None,
            Some(yd) => {
                let tol = 1e-10 * domain.height();
                let row = (1..ny).find(|&j| (ys[j] - yd).abs() <= tol);
                Some(row.ok_or(Error::Alignment(yd))?)
            }
        };

        let h_index = |i: usize, j: usize| j * nx + i;
        let v_index = |i: usize, j: usize| nx * (ny + 1) + j * (nx + 1) + i;

        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let bounds = Domain { x_min: xs[i], x_max: xs[i + 1], y_min: ys[j], y_max: ys[j + 1] };
                let subdomain = match divider_row {
                    None => Subdomain::Single,
                    Some(row) if j >= row => Subdomain::Stokes,
                    Some(_) => Subdomain::Darcy,
                };
                elements.push(Element {
                    id: j * nx + i,
                    h: bounds.diameter(),
                    bounds,
                    subdomain,
                    edges: [h_index(i, j), v_index(i + 1, j), h_index(i, j + 1), v_index(i, j)],
                });
            }
        }

        let mut edges = Vec::with_capacity(nx * (ny + 1) + ny * (nx + 1));
        for j in 0..=ny {
            for i in 0..nx {
                let mut neighbors = Vec::with_capacity(2);
                if j > 0 {
                    neighbors.push((j - 1) * nx + i);
                }
                if j < ny {
                    neighbors.push(j * nx + i);
                }
                let kind = if neighbors.len() == 1 {
                    EdgeKind::Boundary
                } else if divider_row == Some(j) {
                    EdgeKind::Interface
                } else {
                    EdgeKind::Interior
                };
                edges.push(Edge {
                    id: h_index(i, j),
                    start: [xs[i], ys[j]],
                    end: [xs[i + 1], ys[j]],
                    normal: [0.0, 1.0],
                    length: xs[i + 1] - xs[i],
                    neighbors,
                    kind,
                });
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                let mut neighbors = Vec::with_capacity(2);
                if i > 0 {
                    neighbors.push(j * nx + i - 1);
                }
                if i < nx {
                    neighbors.push(j * nx + i);
                }
                let kind = if neighbors.len() == 1 { EdgeKind::Boundary } else { EdgeKind::Interior };
                edges.push(Edge {
                    id: v_index(i, j),
                    start: [xs[i], ys[j]],
                    end: [xs[i], ys[j + 1]],
                    normal: [1.0, 0.0],
                    length: ys[j + 1] - ys[j],
                    neighbors,
                    kind,
                });
            }
        }

        let h = elements.iter().map(|e| e.h).fold(0.0, f64::max);
        Ok(Self { domain, elements, edges, h, nx, ny, divider: divider_row.map(|j| ys[j]) })
    }

    pub fn side_of(&self, element: usize, edge: usize) -> Result<Side> {
        let el = self.elements.get(element).ok_or(Error::Topology { element, edge })?;
        el.edges
            .iter()
            .position(|&e| e == edge)
            .map(|k| Side::ALL[k])
            .ok_or(Error::Topology { element, edge })
    }

    /// Sign `s` with `n_K = s * n_e` on the given element face.
    pub fn orientation(&self, element: usize, edge: usize) -> Result<f64> {
        Ok(self.side_of(element, edge)?.orientation())
    }

    /// Unit outward normal of `element` on `edge`.
    pub fn outward_normal(&self, element: usize, edge: usize) -> Result<Point> {
        let s = self.orientation(element, edge)?;
        let n = self.edges[edge].normal;
        Ok([s * n[0], s * n[1]])
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Boundary)
    }

    pub fn interface_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Interface)
    }

    /// Element whose closure contains `p`, preferring the lowest id.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let d = self.domain;
        if !d.contains(p) {
            return None;
        }
        let i = (((p[0] - d.x_min) / d.width() * self.nx as f64).floor() as isize)
            .clamp(0, self.nx as isize - 1) as usize;
        let j = (((p[1] - d.y_min) / d.height() * self.ny as f64).floor() as isize)
            .clamp(0, self.ny as isize - 1) as usize;
        Some(j * self.nx + i)
    }

    /// Whether an element belongs to the given part of a (possibly coupled) mesh.
    pub fn in_part(&self, element: usize, part: Subdomain) -> bool {
        part == Subdomain::Single || self.elements[element].subdomain == part
    }
}
