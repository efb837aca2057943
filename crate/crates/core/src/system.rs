//! Column layouts, dense row assembly, and pivoted-QR least squares.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::householder;
use faer::linalg::qr::col_pivoting::factor as cpqr;
use faer::linalg::qr::no_pivoting::factor::recommended_block_size;
use faer::linalg::triangular_solve;
use faer::{Conj, Mat, MatMut, MatRef, Par};

use crate::error::{Error, Result};
use crate::features::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockKey {
    pub field: Field,
    pub entity: usize,
    pub component: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub key: BlockKey,
    pub offset: usize,
    pub size: usize,
}

/// Contiguous column blocks keyed by `(field, entity, component)`.
#[derive(Debug, Clone, Default)]
pub struct ColumnLayout {
    blocks: Vec<Block>,
    index: HashMap<BlockKey, usize>,
    dof: usize,
}

impl ColumnLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build(blocks: impl IntoIterator<Item = (Field, usize, usize, usize)>) -> Result<Self> {
        let mut layout = Self::new();
        for (field, entity, component, size) in blocks {
            layout.push(field, entity, component, size)?;
        }
        if layout.blocks.is_empty() {
            return Err(Error::Layout("empty block list".into()));
        }
        Ok(layout)
    }

    /// Appends a block and returns its first column.
    pub fn push(&mut self, field: Field, entity: usize, component: usize, size: usize) -> Result<usize> {
        let key = BlockKey { field, entity, component };
        if self.index.contains_key(&key) {
            return Err(Error::Layout(format!("{}[{entity}].{component}", field.name())));
        }
        let offset = self.dof;
        self.index.insert(key, self.blocks.len());
        self.blocks.push(Block { key, offset, size });
        self.dof += size;
        Ok(offset)
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, field: Field, entity: usize, component: usize) -> Option<&Block> {
        self.index
            .get(&BlockKey { field, entity, component })
            .map(|&i| &self.blocks[i])
    }

    pub fn offset(&self, field: Field, entity: usize, component: usize) -> Option<usize> {
        self.block(field, entity, component).map(|b| b.offset)
    }

    /// Coefficients of one block, read from a full solution vector.
    pub fn slice<'a>(&self, x: &'a [f64], field: Field, entity: usize, component: usize) -> Option<&'a [f64]> {
        self.block(field, entity, component).map(|b| &x[b.offset..b.offset + b.size])
    }
}

/// Weak-form equation that produced a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Equation {
    DarcyFlux,
    DarcyTrace,
    DarcyMass,
    StokesConstitutive,
    StokesTrace,
    StokesMomentum,
    MeanTrace,
    InterfaceMass,
    InterfaceNormalStress,
    InterfaceTangential,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::DarcyFlux => "darcy-flux",
            Equation::DarcyTrace => "darcy-trace",
            Equation::DarcyMass => "darcy-mass",
            Equation::StokesConstitutive => "stokes-constitutive",
            Equation::StokesTrace => "stokes-trace",
            Equation::StokesMomentum => "stokes-momentum",
            Equation::MeanTrace => "mean-trace",
            Equation::InterfaceMass => "interface-mass",
            Equation::InterfaceNormalStress => "interface-normal-stress",
            Equation::InterfaceTangential => "interface-tangential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowTag {
    pub equation: Equation,
    /// Element, edge, or sampling-point index.
    pub entity: usize,
}

/// Row-major dense least-squares system.
#[derive(Debug, Clone)]
pub struct DenseSystem {
    cols: usize,
    data: Vec<f64>,
    pub rhs: Vec<f64>,
    pub tags: Vec<RowTag>,
}

impl DenseSystem {
    pub fn new(cols: usize) -> Self {
        Self { cols, data: Vec::new(), rhs: Vec::new(), tags: Vec::new() }
    }

    /// Appends a zero row and returns it for filling.
    pub fn push_row(&mut self, tag: RowTag, rhs: f64) -> &mut [f64] {
        let start = self.data.len();
        self.data.resize(start + self.cols, 0.0);
        self.rhs.push(rhs);
        self.tags.push(tag);
        &mut self.data[start..]
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Adds `scale * block` with its top-left corner at `(row, col)`.
    pub fn add_block(&mut self, row: usize, col: usize, block: MatRef<'_, f64>, scale: f64) {
        assert!(row + block.nrows() <= self.rows() && col + block.ncols() <= self.cols);
        for i in 0..block.nrows() {
            let dst = &mut self.data[(row + i) * self.cols + col..][..block.ncols()];
            for (j, d) in dst.iter_mut().enumerate() {
                *d += scale * block[(i, j)];
            }
        }
    }

    /// Appends `n` zero rows with a common tag; returns the first row index.
    pub fn push_rows(&mut self, n: usize, tag: RowTag) -> usize {
        let first = self.rows();
        self.data.resize(self.data.len() + n * self.cols, 0.0);
        self.rhs.resize(first + n, 0.0);
        self.tags.resize(first + n, tag);
        first
    }

    /// Column-major copy of the matrix.
    pub fn to_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.rows(), self.cols, |i, j| self.data[i * self.cols + j])
    }

    /// `A x - b`, row by row.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows())
            .map(|i| {
                let row = self.row(i);
                let ax: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                ax - self.rhs[i]
            })
            .collect()
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.residual(x).iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// Writes `row col value` triples for nonzero entries; the right-hand side
    /// is written as column `cols`.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for i in 0..self.rows() {
            for (j, &v) in self.row(i).iter().enumerate() {
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v:e}")?;
                }
            }
            if self.rhs[i] != 0.0 {
                writeln!(out, "{i} {} {:e}", self.cols, self.rhs[i])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquaresSolution {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub rank: usize,
}

/// Basic least-squares solution of `A X = B` from a column-pivoted QR of `A`.
///
/// Columns beyond the numerical rank are set to zero. The default tolerance
/// is `max(m, n) * eps * |R_00|`. Returns the solution and the rank.
pub fn lstsq(a: Mat<f64>, b: Mat<f64>, rank_tol: Option<f64>) -> (Mat<f64>, usize) {
    match rank_tol {
        Some(t) => lstsq_with(a, b, RankTolerance::Absolute(t)),
        None => lstsq_with(a, b, RankTolerance::Default),
    }
}

/// How the numerical rank of the pivoted triangular factor is cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankTolerance {
    /// `max(m, n) * eps * |R_00|`.
    Default,
    Absolute(f64),
    /// `factor * |R_00|`.
    Relative(f64),
}

pub fn lstsq_with(a: Mat<f64>, b: Mat<f64>, rank_tol: RankTolerance) -> (Mat<f64>, usize) {
    let mut a = a;
    let mut b = b;
    let (m, n) = a.shape();
    assert!(m >= 1 && n >= 1, "empty least-squares system");
    assert_eq!(b.nrows(), m);
    let size = m.min(n);
    let nrhs = b.ncols();
    let par = Par::Seq;

    let bs = recommended_block_size::<f64>(m, n);
    let mut q_coeff = Mat::<f64>::zeros(bs, size);
    let mut fwd = vec![0usize; n];
    let mut bwd = vec![0usize; n];
    {
        let req = cpqr::qr_in_place_scratch::<usize, f64>(m, n, bs, par, Default::default());
        let mut buf = MemBuffer::new(req);
        cpqr::qr_in_place(
            a.as_mut(),
            q_coeff.as_mut(),
            &mut fwd,
            &mut bwd,
            par,
            MemStack::new(&mut buf),
            Default::default(),
        );
    }

    let r00 = a[(0, 0)].abs();
    let tol = match rank_tol {
        RankTolerance::Default => m.max(n) as f64 * f64::EPSILON * r00,
        RankTolerance::Absolute(t) => t,
        RankTolerance::Relative(f) => f * r00,
    };
    let rank = (0..size).take_while(|&i| a[(i, i)].abs() > tol).count();

    let r = Mat::from_fn(rank, rank, |i, j| if j >= i { a[(i, j)] } else { 0.0 });

    // Turn the packed factor into a unit lower-trapezoidal Householder basis.
    let mut basis: MatMut<'_, f64> = a.as_mut().get_mut(.., ..size);
    for j in 0..size {
        for i in 0..j {
            basis[(i, j)] = 0.0;
        }
        basis[(j, j)] = 1.0;
    }
    {
        let req = householder::apply_block_householder_sequence_transpose_on_the_left_in_place_scratch::<f64>(
            m, bs, nrhs,
        );
        let mut buf = MemBuffer::new(req);
        householder::apply_block_householder_sequence_transpose_on_the_left_in_place_with_conj(
            basis.as_ref(),
            q_coeff.as_ref(),
            Conj::No,
            b.as_mut(),
            par,
            MemStack::new(&mut buf),
        );
    }

    let mut x = Mat::<f64>::zeros(n, nrhs);
    if rank > 0 {
        let mut z = b.as_mut().get_mut(..rank, ..);
        triangular_solve::solve_upper_triangular_in_place(r.as_ref(), z.as_mut(), par);
        for c in 0..nrhs {
            for i in 0..rank {
                x[(fwd[i], c)] = z[(i, c)];
            }
        }
    }
    (x, rank)
}

/// Copying convenience wrapper around [`lstsq`].
pub fn lstsq_ref(a: MatRef<'_, f64>, b: MatRef<'_, f64>, rank_tol: Option<f64>) -> (Mat<f64>, usize) {
    lstsq(a.to_owned(), b.to_owned(), rank_tol)
}

pub fn solve_least_squares(system: &DenseSystem, rank_tol: Option<f64>) -> Result<LeastSquaresSolution> {
    if system.rows() == 0 || system.cols() == 0 {
        return Err(Error::NumericInput("empty system".into()));
    }
    if let Some(k) = system.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericInput(format!("matrix entry ({}, {})", k / system.cols, k % system.cols)));
    }
    if let Some(i) = system.rhs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericInput(format!("right-hand side row {i}")));
    }
    let b = Mat::from_fn(system.rows(), 1, |i, _| system.rhs[i]);
    let (x, rank) = lstsq(system.to_mat(), b, rank_tol);
    let coefficients: Vec<f64> = (0..system.cols()).map(|i| x[(i, 0)]).collect();
    let residual_norm = system.residual_norm(&coefficients);
    Ok(LeastSquaresSolution { coefficients, residual_norm, rank })
}

/// Residual norm of each equation's row block. The squares sum to the
/// squared total residual.
pub fn residual_by_provenance(system: &DenseSystem, x: &[f64]) -> BTreeMap<Equation, f64> {
    let mut acc: BTreeMap<Equation, f64> = BTreeMap::new();
    for (r, tag) in system.residual(x).iter().zip(&system.tags) {
        *acc.entry(tag.equation).or_default() += r * r;
    }
    acc.into_iter().map(|(k, v)| (k, v.sqrt())).collect()
}
