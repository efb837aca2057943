//! Darcy discretizations: the hybridized scheme with a normal-flux trace
//! (optionally stabilized), its DoF-reduced and global-trace variants, the
//! square HDG variant, and the second hybridization with a pressure trace.

use faer::Mat;

use crate::assembly::{gram, hcat, moment, orthonormalizer, vcat, EdgeFns, ElementFns, Tab};
use crate::error::{Error, Result};
use crate::features::{EdgeFeatureSpace, ElementFeatureSpace, FeatureSpaceConfig, Field, GLOBAL_ENTITY};
use crate::mesh::{Edge, EdgeKind, Mesh, Point, Subdomain};
use crate::poly::{scalar_dim, EdgePolyBasis, ElementPolyBasis};
use crate::problems::{DarcyProblem, Matrix2};
use crate::quadrature::{edge_rule, gauss_line, tensor_rect, LineRule};
use crate::system::{lstsq, lstsq_with, ColumnLayout, RankTolerance, DenseSystem, Equation, RowTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DarcyVariant {
    Hdpg,
    HdpgReduced,
    HdpgGlobalTrace,
    Hdg,
    HdpgFlux2,
}

impl DarcyVariant {
    pub fn name(self) -> &'static str {
        match self {
            DarcyVariant::Hdpg => "hdpg",
            DarcyVariant::HdpgReduced => "hdpg-reduced",
            DarcyVariant::HdpgGlobalTrace => "hdpg-global-trace",
            DarcyVariant::Hdg => "hdg",
            DarcyVariant::HdpgFlux2 => "hdpg-flux2",
        }
    }

    fn eliminates_velocity(self) -> bool {
        matches!(self, DarcyVariant::HdpgReduced | DarcyVariant::Hdg)
    }
}

impl std::str::FromStr for DarcyVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            DarcyVariant::Hdpg,
            DarcyVariant::HdpgReduced,
            DarcyVariant::HdpgGlobalTrace,
            DarcyVariant::Hdg,
            DarcyVariant::HdpgFlux2,
        ]
        .into_iter()
        .find(|v| v.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown Darcy variant '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarcySchemeConfig {
    pub n_u: usize,
    /// Trace neurons: normal flux per edge, the global trace, or the
    /// pressure trace for the flux2 variant.
    pub n_uhat: usize,
    pub n_p: usize,
    /// Degree of the vector tests; scalar tests have degree `k + 1`.
    pub k: usize,
    pub eta: f64,
    pub tau: f64,
    pub variant: DarcyVariant,
    pub half_width: f64,
    pub seed: u64,
    pub shared_weights: bool,
    /// Gauss points per direction; `k + 5` when unset.
    pub quad_points: Option<usize>,
    /// Relative rank cutoff of the local velocity elimination.
    pub elimination_tol: f64,
    /// Relative cutoff when orthonormalizing the hybridized test basis.
    pub test_tol: f64,
}

impl DarcySchemeConfig {
    /// Default neuron counts for test degree `k`.
    pub fn from_degree(k: usize, variant: DarcyVariant) -> Self {
        Self {
            n_u: (k + 1) * (k + 2) / 2,
            n_uhat: k + 1,
            n_p: (k + 2) * (k + 3) / 2,
            k,
            eta: 0.0,
            tau: 1.0,
            variant,
            half_width: 1.0,
            seed: 0,
            shared_weights: false,
            quad_points: None,
            elimination_tol: f64::EPSILON,
            test_tol: 1e-13,
        }
    }

    pub fn quadrature(&self) -> usize {
        self.quad_points.unwrap_or(self.k + 5)
    }

    fn features(&self, neurons: usize) -> FeatureSpaceConfig {
        FeatureSpaceConfig { neurons, half_width: self.half_width, seed: self.seed, shared: self.shared_weights }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_u == 0 || self.n_uhat == 0 || self.n_p == 0 {
            return Err(Error::Config("neuron counts must be positive".into()));
        }
        if !(self.eta >= 0.0 && self.tau >= 0.0) {
            return Err(Error::Config(format!("eta = {}, tau = {} must be non-negative", self.eta, self.tau)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::Config(format!("half-width {} must be positive", self.half_width)));
        }
        if self.variant == DarcyVariant::HdpgGlobalTrace && self.n_uhat % 2 != 0 {
            return Err(Error::Config(format!(
                "the global trace has two components sharing features; n_uhat = {} must be even",
                self.n_uhat
            )));
        }
        if self.quadrature() == 0 {
            return Err(Error::Config("quadrature needs at least one point".into()));
        }
        Ok(())
    }
}

/// Per-element velocity recovery `u = R p` of the eliminating variants.
#[derive(Debug, Clone)]
pub struct Elimination {
    /// `2 n_u x n_p`; rows are the first then the second velocity component.
    pub map: Mat<f64>,
}

/// Trial spaces and auxiliary data needed to evaluate a Darcy solution.
#[derive(Debug, Clone)]
pub struct DarcySpaces {
    pub variant: DarcyVariant,
    pub part: Subdomain,
    pub velocity: Vec<Option<ElementFeatureSpace>>,
    pub pressure: Vec<Option<ElementFeatureSpace>>,
    pub trace: Vec<Option<EdgeFeatureSpace>>,
    pub global_trace: Option<ElementFeatureSpace>,
    pub elimination: Vec<Option<Elimination>>,
    /// Projected boundary pressure traces of the flux2 variant.
    pub boundary_trace: Vec<Option<Vec<f64>>>,
    pub k_inv: Matrix2,
}

#[derive(Debug, Clone)]
pub struct DarcyDiscretization {
    pub system: DenseSystem,
    pub layout: ColumnLayout,
    pub spaces: DarcySpaces,
}

/// Pressure, its gradient, and velocity at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DarcyValue {
    pub p: f64,
    pub grad_p: [f64; 2],
    pub u: [f64; 2],
}

struct Face {
    edge: usize,
    s: f64,
    normal: Point,
    w: Vec<f64>,
    pts: Vec<Point>,
    params: Vec<f64>,
}

/// Builds the columns and rows of one Darcy subproblem. Used on its own and
/// as the Darcy half of the coupled system.
pub(crate) struct DarcyAssembler<'a> {
    mesh: &'a Mesh,
    problem: &'a DarcyProblem,
    config: DarcySchemeConfig,
    line: LineRule,
    spaces: DarcySpaces,
    elements: Vec<usize>,
    edges: Vec<usize>,
}

impl<'a> DarcyAssembler<'a> {
    pub fn new(mesh: &'a Mesh, problem: &'a DarcyProblem, config: &DarcySchemeConfig, part: Subdomain) -> Result<Self> {
        config.validate()?;
        if config.variant == DarcyVariant::HdpgFlux2 && part != Subdomain::Single {
            return Err(Error::Config("the pressure-trace variant is not available in coupled problems".into()));
        }
        let line = gauss_line(config.quadrature())?;
        let elements: Vec<usize> = (0..mesh.elements.len()).filter(|&e| mesh.in_part(e, part)).collect();
        if elements.is_empty() {
            return Err(Error::Config("no elements in the Darcy region".into()));
        }
        let edges: Vec<usize> = mesh
            .edges
            .iter()
            .filter(|e| e.neighbors.iter().any(|&k| mesh.in_part(k, part)))
            .map(|e| e.id)
            .collect();

        let trace_field = if config.variant == DarcyVariant::HdpgFlux2 { Field::PressureTrace } else { Field::FluxTrace };
        let cu = config.features(config.n_u);
        let cp = config.features(config.n_p);
        let ct = config.features(config.n_uhat);
        let ne = mesh.elements.len();
        let mut velocity = vec![None; ne];
        let mut pressure = vec![None; ne];
        for &e in &elements {
            velocity[e] = Some(ElementFeatureSpace::new(&cu, Field::Velocity, e));
            pressure[e] = Some(ElementFeatureSpace::new(&cp, Field::Pressure, e));
        }
        let mut trace = vec![None; mesh.edges.len()];
        let mut global_trace = None;
        if config.variant == DarcyVariant::HdpgGlobalTrace {
            global_trace = Some(ElementFeatureSpace::global(&config.features(config.n_uhat / 2), Field::FluxTrace));
        } else {
            for &e in &edges {
                trace[e] = Some(EdgeFeatureSpace::new(&ct, trace_field, e));
            }
        }
        let spaces = DarcySpaces {
            variant: config.variant,
            part,
            velocity,
            pressure,
            trace,
            global_trace,
            elimination: vec![None; ne],
            boundary_trace: vec![None; mesh.edges.len()],
            k_inv: problem.k_inv(),
        };
        Ok(Self { mesh, problem, config: config.clone(), line, spaces, elements, edges })
    }

    fn has_trace_unknown(&self, edge: usize) -> bool {
        self.config.variant != DarcyVariant::HdpgFlux2 || self.mesh.edges[edge].kind != EdgeKind::Boundary
    }

    pub fn add_columns(&self, layout: &mut ColumnLayout) -> Result<()> {
        let c = &self.config;
        for &e in &self.elements {
            if !c.variant.eliminates_velocity() {
                layout.push(Field::Velocity, e, 0, c.n_u)?;
                layout.push(Field::Velocity, e, 1, c.n_u)?;
            }
            layout.push(Field::Pressure, e, 0, c.n_p)?;
        }
        if c.variant == DarcyVariant::HdpgGlobalTrace {
            layout.push(Field::FluxTrace, GLOBAL_ENTITY, 0, c.n_uhat)?;
        } else {
            let field = if c.variant == DarcyVariant::HdpgFlux2 { Field::PressureTrace } else { Field::FluxTrace };
            for &e in &self.edges {
                if self.has_trace_unknown(e) {
                    layout.push(field, e, 0, c.n_uhat)?;
                }
            }
        }
        Ok(())
    }

    fn trace_col(&self, layout: &ColumnLayout, edge: usize) -> Option<usize> {
        match self.config.variant {
            DarcyVariant::HdpgGlobalTrace => layout.offset(Field::FluxTrace, GLOBAL_ENTITY, 0),
            DarcyVariant::HdpgFlux2 => layout.offset(Field::PressureTrace, edge, 0),
            _ => layout.offset(Field::FluxTrace, edge, 0),
        }
    }

    fn trace_fns(&self, edge: usize) -> EdgeFns<'_> {
        match &self.spaces.global_trace {
            Some(g) => EdgeFns::Global(g, self.mesh.edges[edge].normal),
            None => EdgeFns::Features(self.spaces.trace[edge].as_ref().expect("trace space on a Darcy edge")),
        }
    }

    fn velocity(&self, e: usize) -> &ElementFeatureSpace {
        self.spaces.velocity[e].as_ref().expect("velocity space on a Darcy element")
    }

    fn pressure(&self, e: usize) -> &ElementFeatureSpace {
        self.spaces.pressure[e].as_ref().expect("pressure space on a Darcy element")
    }

    fn faces(&self, element: usize) -> Result<Vec<Face>> {
        self.mesh.elements[element]
            .edges
            .iter()
            .map(|&edge| {
                let rule = edge_rule(&self.line, &self.mesh.edges[edge]);
                Ok(Face {
                    edge,
                    s: self.mesh.orientation(element, edge)?,
                    normal: self.mesh.outward_normal(element, edge)?,
                    w: rule.weights,
                    pts: rule.points,
                    params: rule.params,
                })
            })
            .collect()
    }

    /// Polynomial vector and scalar tests.
    fn element_tests(&self, element: usize) -> (ElementPolyBasis, ElementPolyBasis) {
        let b = self.mesh.elements[element].bounds;
        (ElementPolyBasis::new(self.config.k, b), ElementPolyBasis::new(self.config.k + 1, b))
    }

    /// Edge tests; the square variant tests with its own (orthonormalized)
    /// trace features, using the combination matrix in `hdg`.
    fn edge_tests<'s>(&'s self, edge: usize, hdg: &'s Mat<f64>) -> EdgeFns<'s> {
        match self.config.variant {
            DarcyVariant::Hdg => EdgeFns::Combined(self.spaces.trace[edge].as_ref().expect("trace space"), hdg),
            DarcyVariant::HdpgFlux2 => EdgeFns::Poly(EdgePolyBasis::new(self.config.k + 1)),
            _ => EdgeFns::Poly(EdgePolyBasis::new(self.config.k)),
        }
    }

    pub fn add_rows(&mut self, layout: &ColumnLayout, system: &mut DenseSystem) -> Result<()> {
        if self.config.variant == DarcyVariant::HdpgFlux2 {
            self.project_boundary()?;
        }
        let elements = self.elements.clone();
        for &e in &elements {
            self.flux_rows(e, layout, system)?;
        }
        for &edge in &self.edges.clone() {
            let kind = self.mesh.edges[edge].kind;
            let rows_here = match self.config.variant {
                DarcyVariant::HdpgFlux2 => kind == EdgeKind::Interior,
                _ => kind != EdgeKind::Interface,
            };
            if rows_here {
                self.trace_rows(edge, layout, system)?;
            }
        }
        for &e in &elements {
            self.mass_rows(e, layout, system)?;
        }
        Ok(())
    }

    fn project_boundary(&mut self) -> Result<()> {
        let n = self.line.len().max(self.config.n_uhat + 2);
        let line = gauss_line(n)?;
        for &edge in &self.edges {
            let e = &self.mesh.edges[edge];
            if e.kind == EdgeKind::Boundary {
                let space = self.spaces.trace[edge].as_ref().expect("trace space");
                let c = project_boundary_trace(space, e, &line, |x| (self.problem.boundary)(x))?;
                self.spaces.boundary_trace[edge] = Some(c);
            }
        }
        Ok(())
    }

    /// First equation: the constitutive law tested with vector functions.
    fn flux_rows(&mut self, element: usize, layout: &ColumnLayout, system: &mut DenseSystem) -> Result<()> {
        let el = &self.mesh.elements[element];
        let rect = tensor_rect(&self.line, &el.bounds);
        let w = &rect.weights;
        let variant = self.config.variant;
        let kinv = self.spaces.k_inv;
        let (vtest, _) = self.element_tests(element);
        let u_fns = ElementFns::Features(self.velocity(element));
        let p_fns = ElementFns::Features(self.pressure(element));
        let v_fns = if variant == DarcyVariant::Hdg { u_fns } else { ElementFns::Poly(&vtest) };
        let nv = v_fns.len();
        let v_tab = v_fns.tab(&rect.points);
        let u_vals = u_fns.values(&rect.points);
        let p_tab: Tab = p_fns.tab(&rect.points);
        let g = gram(w, v_tab.vals.as_ref(), u_vals.as_ref());
        let col_p = layout.offset(Field::Pressure, element, 0).ok_or(Error::Layout("pressure block".into()))?;

        if variant.eliminates_velocity() {
            let (a_u, a_p) = if variant == DarcyVariant::Hdg {
                // With the trial features as tests the local equation is the
                // K^-1-weighted projection of -K grad p onto the feature span.
                // Solving it as a sampled least-squares fit avoids squaring
                // the condition number of the feature Gram matrix.
                local_projection(w, &u_vals, &p_tab, problem_cholesky(self.problem.k))
            } else {
                let a_u = vcat(&[
                    hcat(&[(&g * faer::Scale(kinv[0][0])).as_ref(), (&g * faer::Scale(kinv[0][1])).as_ref()]).as_ref(),
                    hcat(&[(&g * faer::Scale(kinv[1][0])).as_ref(), (&g * faer::Scale(kinv[1][1])).as_ref()]).as_ref(),
                ]);
                let a_p = vcat(&[
                    gram(w, v_tab.vals.as_ref(), p_tab.dx.as_ref()).as_ref(),
                    gram(w, v_tab.vals.as_ref(), p_tab.dy.as_ref()).as_ref(),
                ]);
                (a_u, a_p)
            };
            let cols = a_u.ncols();
            let (map, rank) = lstsq_with(a_u, -a_p, RankTolerance::Relative(self.config.elimination_tol));
            // The minimum-norm map is used when the local block is rank
            // deficient; the velocity values it produces are still unique.
            if rank == 0 {
                return Err(Error::Elimination { element, rank, cols });
            }
            self.spaces.elimination[element] = Some(Elimination { map });
            return Ok(());
        }

        let r0 = system.push_rows(2 * nv, RowTag { equation: Equation::DarcyFlux, entity: element });
        let col_u = [
            layout.offset(Field::Velocity, element, 0).ok_or(Error::Layout("velocity block".into()))?,
            layout.offset(Field::Velocity, element, 1).ok_or(Error::Layout("velocity block".into()))?,
        ];
        for c in 0..2 {
            for d in 0..2 {
                if kinv[c][d] != 0.0 {
                    system.add_block(r0 + c * nv, col_u[d], g.as_ref(), kinv[c][d]);
                }
            }
        }
        let h = el.h;
        let faces = self.faces(element)?;
        if variant == DarcyVariant::HdpgFlux2 {
            for c in 0..2 {
                let b = gram(w, v_tab.d(c).as_ref(), p_tab.vals.as_ref());
                system.add_block(r0 + c * nv, col_p, b.as_ref(), -1.0);
            }
            for f in &faces {
                let vf = v_fns.values(&f.pts);
                let chi = self.trace_fns(f.edge).values(&f.pts, &f.params);
                match self.spaces.boundary_trace[f.edge].as_ref() {
                    Some(coef) => {
                        let gh = mat_vec(&chi, coef);
                        let m = moment(&f.w, vf.as_ref(), &gh);
                        for c in 0..2 {
                            for (j, mj) in m.iter().enumerate() {
                                system.rhs[r0 + c * nv + j] -= f.normal[c] * mj;
                            }
                        }
                    }
                    None => {
                        let col = self.trace_col(layout, f.edge).ok_or(Error::Layout("trace block".into()))?;
                        let b = gram(&f.w, vf.as_ref(), chi.as_ref());
                        for c in 0..2 {
                            system.add_block(r0 + c * nv, col, b.as_ref(), f.normal[c]);
                        }
                    }
                }
            }
            return Ok(());
        }

        for c in 0..2 {
            let b = gram(w, v_tab.vals.as_ref(), p_tab.d(c).as_ref());
            system.add_block(r0 + c * nv, col_p, b.as_ref(), 1.0);
        }
        let eta = self.config.eta;
        if eta > 0.0 {
            for f in &faces {
                let vf = v_fns.values(&f.pts);
                let uf = u_fns.values(&f.pts);
                let chi = self.trace_fns(f.edge).values(&f.pts, &f.params);
                let col_t = self.trace_col(layout, f.edge).ok_or(Error::Layout("trace block".into()))?;
                let bu = gram(&f.w, vf.as_ref(), uf.as_ref());
                let bt = gram(&f.w, vf.as_ref(), chi.as_ref());
                for c in 0..2 {
                    for d in 0..2 {
                        let a = eta * h * f.normal[c] * f.normal[d];
                        if a != 0.0 {
                            system.add_block(r0 + c * nv, col_u[d], bu.as_ref(), a);
                        }
                    }
                    if f.normal[c] != 0.0 {
                        system.add_block(r0 + c * nv, col_t, bt.as_ref(), -eta * h * f.s * f.normal[c]);
                    }
                }
            }
        }
        Ok(())
    }

    /// Second equation: one block of rows per edge with both neighbours.
    fn trace_rows(&self, edge: usize, layout: &ColumnLayout, system: &mut DenseSystem) -> Result<()> {
        let e = &self.mesh.edges[edge];
        let rule = edge_rule(&self.line, e);
        let hdg = match self.config.variant {
            DarcyVariant::Hdg => {
                let raw = self.trace_fns(edge).values(&rule.points, &rule.params);
                orthonormalizer(&rule.weights, raw.as_ref(), self.config.test_tol)
            }
            _ => Mat::zeros(0, 0),
        };
        let tests = self.edge_tests(edge, &hdg).values(&rule.points, &rule.params);
        let nt = tests.ncols();
        let r0 = system.push_rows(nt, RowTag { equation: Equation::DarcyTrace, entity: edge });
        let chi = self.trace_fns(edge).values(&rule.points, &rule.params);
        let bt = gram(&rule.weights, tests.as_ref(), chi.as_ref());
        let col_t = self.trace_col(layout, edge);
        let variant = self.config.variant;
        let eta = if variant.eliminates_velocity() { 0.0 } else { self.config.eta };
        for &k in e.neighbors.iter().filter(|&&k| self.mesh.in_part(k, self.spaces.part)) {
            let s = self.mesh.orientation(k, edge)?;
            let n = self.mesh.outward_normal(k, edge)?;
            let h = self.mesh.elements[k].h;
            let pf = ElementFns::Features(self.pressure(k)).values(&rule.points);
            let bp = gram(&rule.weights, tests.as_ref(), pf.as_ref());
            let col_p = layout.offset(Field::Pressure, k, 0).ok_or(Error::Layout("pressure block".into()))?;
            let col_t = col_t.ok_or(Error::Layout("trace block".into()))?;
            if variant == DarcyVariant::HdpgFlux2 {
                let tau_h = self.config.tau / h;
                let uf = ElementFns::Features(self.velocity(k)).values(&rule.points);
                let bu = gram(&rule.weights, tests.as_ref(), uf.as_ref());
                for d in 0..2 {
                    if n[d] != 0.0 {
                        let col = layout.offset(Field::Velocity, k, d).ok_or(Error::Layout("velocity block".into()))?;
                        system.add_block(r0, col, bu.as_ref(), n[d]);
                    }
                }
                if tau_h != 0.0 {
                    system.add_block(r0, col_p, bp.as_ref(), tau_h);
                    system.add_block(r0, col_t, bt.as_ref(), -tau_h);
                }
                continue;
            }
            system.add_block(r0, col_p, bp.as_ref(), -s);
            if eta > 0.0 {
                let uf = ElementFns::Features(self.velocity(k)).values(&rule.points);
                let bu = gram(&rule.weights, tests.as_ref(), uf.as_ref());
                for d in 0..2 {
                    if n[d] != 0.0 {
                        let col = layout.offset(Field::Velocity, k, d).ok_or(Error::Layout("velocity block".into()))?;
                        system.add_block(r0, col, bu.as_ref(), -eta * h * s * n[d]);
                    }
                }
                system.add_block(r0, col_t, bt.as_ref(), eta * h);
            }
            if e.kind == EdgeKind::Boundary {
                let g: Vec<f64> = rule.points.iter().map(|&x| (self.problem.boundary)(x)).collect();
                for (j, m) in moment(&rule.weights, tests.as_ref(), &g).into_iter().enumerate() {
                    system.rhs[r0 + j] -= s * m;
                }
            }
        }
        Ok(())
    }

    /// Third equation: mass conservation tested with scalar functions.
    fn mass_rows(&self, element: usize, layout: &ColumnLayout, system: &mut DenseSystem) -> Result<()> {
        let el = &self.mesh.elements[element];
        let rect = tensor_rect(&self.line, &el.bounds);
        let w = &rect.weights;
        let variant = self.config.variant;
        let (_, qtest) = self.element_tests(element);
        let hdg = match variant {
            DarcyVariant::Hdg => {
                let raw = ElementFns::Features(self.pressure(element)).values(&rect.points);
                orthonormalizer(w, raw.as_ref(), self.config.test_tol)
            }
            _ => Mat::zeros(0, 0),
        };
        let q_fns = match variant {
            DarcyVariant::Hdg => ElementFns::Combined(self.pressure(element), &hdg),
            _ => ElementFns::Poly(&qtest),
        };
        let nq = q_fns.len();
        let q_tab = q_fns.tab(&rect.points);
        let u_fns = ElementFns::Features(self.velocity(element));
        let col_p = layout.offset(Field::Pressure, element, 0).ok_or(Error::Layout("pressure block".into()))?;
        let r0 = system.push_rows(nq, RowTag { equation: Equation::DarcyMass, entity: element });
        let f: Vec<f64> = rect.points.iter().map(|&x| (self.problem.source)(x)).collect();
        let fm = moment(w, q_tab.vals.as_ref(), &f);
        let faces = self.faces(element)?;

        if variant == DarcyVariant::HdpgFlux2 {
            let u_tab = u_fns.tab(&rect.points);
            for d in 0..2 {
                let col = layout.offset(Field::Velocity, element, d).ok_or(Error::Layout("velocity block".into()))?;
                let b = gram(w, q_tab.vals.as_ref(), u_tab.d(d).as_ref());
                system.add_block(r0, col, b.as_ref(), -1.0);
            }
            // -(div u, q) = -(f, q) for the exact flux.
            for (j, m) in fm.iter().enumerate() {
                system.rhs[r0 + j] -= m;
            }
            let tau_h = self.config.tau / el.h;
            if tau_h != 0.0 {
                for face in &faces {
                    let qf = q_fns.values(&face.pts);
                    let pf = ElementFns::Features(self.pressure(element)).values(&face.pts);
                    system.add_block(r0, col_p, gram(&face.w, qf.as_ref(), pf.as_ref()).as_ref(), -tau_h);
                    let chi = self.trace_fns(face.edge).values(&face.pts, &face.params);
                    match self.spaces.boundary_trace[face.edge].as_ref() {
                        Some(coef) => {
                            let gh = mat_vec(&chi, coef);
                            for (j, m) in moment(&face.w, qf.as_ref(), &gh).into_iter().enumerate() {
                                system.rhs[r0 + j] -= tau_h * m;
                            }
                        }
                        None => {
                            let col = self.trace_col(layout, face.edge).ok_or(Error::Layout("trace block".into()))?;
                            system.add_block(r0, col, gram(&face.w, qf.as_ref(), chi.as_ref()).as_ref(), tau_h);
                        }
                    }
                }
            }
            return Ok(());
        }

        let u_vals = u_fns.values(&rect.points);
        let bx = gram(w, q_tab.dx.as_ref(), u_vals.as_ref());
        let by = gram(w, q_tab.dy.as_ref(), u_vals.as_ref());
        match &self.spaces.elimination[element] {
            Some(elim) => {
                let b = hcat(&[bx.as_ref(), by.as_ref()]) * &elim.map;
                system.add_block(r0, col_p, b.as_ref(), 1.0);
            }
            None => {
                for (d, b) in [bx, by].iter().enumerate() {
                    let col = layout.offset(Field::Velocity, element, d).ok_or(Error::Layout("velocity block".into()))?;
                    system.add_block(r0, col, b.as_ref(), 1.0);
                }
            }
        }
        for face in &faces {
            let qf = q_fns.values(&face.pts);
            let chi = self.trace_fns(face.edge).values(&face.pts, &face.params);
            let col = self.trace_col(layout, face.edge).ok_or(Error::Layout("trace block".into()))?;
            system.add_block(r0, col, gram(&face.w, qf.as_ref(), chi.as_ref()).as_ref(), -face.s);
        }
        for (j, m) in fm.iter().enumerate() {
            system.rhs[r0 + j] -= m;
        }
        Ok(())
    }

    pub fn into_spaces(self) -> DarcySpaces {
        self.spaces
    }
}

/// Lower Cholesky factor of an SPD `2 x 2` matrix.
fn problem_cholesky(k: Matrix2) -> Matrix2 {
    let l00 = k[0][0].sqrt();
    let l10 = k[1][0] / l00;
    [[l00, 0.0], [l10, (k[1][1] - l10 * l10).sqrt()]]
}

/// Rows `sqrt(w) L^-1 u` and `sqrt(w) L^T grad p` at each quadrature point,
/// where `K = L L^T`; minimizing their sum over `u` solves
/// `(K^-1 u, v) + (grad p, v) = 0` on the span of `u`.
fn local_projection(w: &[f64], u_vals: &Mat<f64>, p_tab: &Tab, l: Matrix2) -> (Mat<f64>, Mat<f64>) {
    let nq = w.len();
    let (nu, np) = (u_vals.ncols(), p_tab.vals.ncols());
    let det = l[0][0] * l[1][1];
    let linv = [[l[1][1] / det, 0.0], [-l[1][0] / det, l[0][0] / det]];
    let mut a = Mat::zeros(2 * nq, 2 * nu);
    let mut b = Mat::zeros(2 * nq, np);
    for q in 0..nq {
        let sw = w[q].sqrt();
        for c in 0..2 {
            let row = c * nq + q;
            for d in 0..2 {
                if linv[c][d] != 0.0 {
                    for i in 0..nu {
                        a[(row, d * nu + i)] = sw * linv[c][d] * u_vals[(q, i)];
                    }
                }
                // (L^T)_{cd} = L_{dc}
                if l[d][c] != 0.0 {
                    let g = p_tab.d(d);
                    for i in 0..np {
                        b[(row, i)] += sw * l[d][c] * g[(q, i)];
                    }
                }
            }
        }
    }
    (a, b)
}

fn mat_vec(m: &Mat<f64>, c: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|q| (0..m.ncols()).map(|i| m[(q, i)] * c[i]).sum()).collect()
}

/// L2 projection of `g` onto an edge feature span, computed as a weighted
/// least-squares fit at the points of `line` mapped to the edge.
pub fn project_boundary_trace(
    space: &EdgeFeatureSpace,
    edge: &Edge,
    line: &LineRule,
    g: impl Fn(Point) -> f64,
) -> Result<Vec<f64>> {
    let rule = edge_rule(line, edge);
    let n = space.len();
    let nq = rule.weights.len();
    let mut a = Mat::zeros(nq, n);
    let mut b = Mat::zeros(nq, 1);
    let mut v = vec![0.0; n];
    for q in 0..nq {
        let sw = rule.weights[q].sqrt();
        space.eval_into(rule.params[q], &mut v);
        for i in 0..n {
            a[(q, i)] = sw * v[i];
        }
        b[(q, 0)] = sw * g(rule.points[q]);
    }
    let (x, rank) = lstsq(a, b, None);
    if rank < n {
        return Err(Error::Projection { edge: edge.id, rank, cols: n });
    }
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

fn assemble(mesh: &Mesh, problem: &DarcyProblem, config: &DarcySchemeConfig) -> Result<DarcyDiscretization> {
    let mut asm = DarcyAssembler::new(mesh, problem, config, Subdomain::Single)?;
    let mut layout = ColumnLayout::new();
    asm.add_columns(&mut layout)?;
    let mut system = DenseSystem::new(layout.dof());
    asm.add_rows(&layout, &mut system)?;
    Ok(DarcyDiscretization { system, layout, spaces: asm.into_spaces() })
}

fn expect_variant(config: &DarcySchemeConfig, variant: DarcyVariant) -> Result<()> {
    if config.variant != variant {
        return Err(Error::Config(format!(
            "expected the {} variant, got {}",
            variant.name(),
            config.variant.name()
        )));
    }
    Ok(())
}

/// Assembles whichever variant `config` selects.
pub fn assemble_darcy(mesh: &Mesh, problem: &DarcyProblem, config: &DarcySchemeConfig) -> Result<DarcyDiscretization> {
    assemble(mesh, problem, config)
}

pub fn assemble_hdpg_darcy(mesh: &Mesh, problem: &DarcyProblem, config: &DarcySchemeConfig) -> Result<DarcyDiscretization> {
    expect_variant(config, DarcyVariant::Hdpg)?;
    assemble(mesh, problem, config)
}

pub fn assemble_hdpg_darcy_reduced(
    mesh: &Mesh,
    problem: &DarcyProblem,
    config: &DarcySchemeConfig,
) -> Result<DarcyDiscretization> {
    expect_variant(config, DarcyVariant::HdpgReduced)?;
    assemble(mesh, problem, config)
}

pub fn assemble_hdpg_darcy_global_trace(
    mesh: &Mesh,
    problem: &DarcyProblem,
    config: &DarcySchemeConfig,
) -> Result<DarcyDiscretization> {
    expect_variant(config, DarcyVariant::HdpgGlobalTrace)?;
    assemble(mesh, problem, config)
}

pub fn assemble_hdg_darcy(mesh: &Mesh, problem: &DarcyProblem, config: &DarcySchemeConfig) -> Result<DarcyDiscretization> {
    expect_variant(config, DarcyVariant::Hdg)?;
    assemble(mesh, problem, config)
}

pub fn assemble_hdpg_darcy_flux2(
    mesh: &Mesh,
    problem: &DarcyProblem,
    config: &DarcySchemeConfig,
) -> Result<DarcyDiscretization> {
    expect_variant(config, DarcyVariant::HdpgFlux2)?;
    assemble(mesh, problem, config)
}

impl DarcySpaces {
    /// Velocity coefficients of an element: read from the solution, or
    /// recovered from the pressure through the local elimination map.
    pub fn velocity_coefficients(&self, layout: &ColumnLayout, x: &[f64], element: usize) -> Result<Vec<f64>> {
        match &self.elimination[element] {
            Some(elim) => {
                let p = layout.slice(x, Field::Pressure, element, 0).ok_or(Error::Layout("pressure block".into()))?;
                Ok(mat_vec(&elim.map, p))
            }
            None => {
                let a = layout.slice(x, Field::Velocity, element, 0).ok_or(Error::Layout("velocity block".into()))?;
                let b = layout.slice(x, Field::Velocity, element, 1).ok_or(Error::Layout("velocity block".into()))?;
                Ok([a, b].concat())
            }
        }
    }

    /// Recovered velocity coefficients of every eliminated element.
    pub fn recover_velocity(&self, layout: &ColumnLayout, x: &[f64]) -> Result<Vec<Option<Vec<f64>>>> {
        (0..self.elimination.len())
            .map(|e| match self.elimination[e] {
                Some(_) => self.velocity_coefficients(layout, x, e).map(Some),
                None => Ok(None),
            })
            .collect()
    }
}

/// Evaluates pressure, pressure gradient and velocity at `x` in `element`.
pub fn eval_darcy_solution(
    mesh: &Mesh,
    spaces: &DarcySpaces,
    layout: &ColumnLayout,
    coefficients: &[f64],
    x: Point,
    element: usize,
) -> Result<DarcyValue> {
    let el = mesh.elements.get(element).ok_or(Error::PointOutside { element, x: x[0], y: x[1] })?;
    if !el.bounds.contains(x) {
        return Err(Error::PointOutside { element, x: x[0], y: x[1] });
    }
    let (Some(ps), Some(us)) = (&spaces.pressure[element], &spaces.velocity[element]) else {
        return Err(Error::PointOutside { element, x: x[0], y: x[1] });
    };
    let pc = layout.slice(coefficients, Field::Pressure, element, 0).ok_or(Error::Layout("pressure block".into()))?;
    let mut vals = vec![0.0; ps.len()];
    let mut grads = vec![[0.0; 2]; ps.len()];
    ps.eval_with_gradients_into(x, &mut vals, &mut grads);
    let mut out = DarcyValue::default();
    for i in 0..ps.len() {
        out.p += pc[i] * vals[i];
        out.grad_p[0] += pc[i] * grads[i][0];
        out.grad_p[1] += pc[i] * grads[i][1];
    }
    let uc = spaces.velocity_coefficients(layout, coefficients, element)?;
    let phi = us.eval(x);
    let n = us.len();
    for i in 0..n {
        out.u[0] += uc[i] * phi[i];
        out.u[1] += uc[n + i] * phi[i];
    }
    Ok(out)
}

/// Number of rows each variant produces on a single-region mesh.
pub fn expected_rows(mesh: &Mesh, config: &DarcySchemeConfig) -> usize {
    let ne = mesh.elements.len();
    let k = config.k;
    let interior = mesh.edges.iter().filter(|e| e.kind == EdgeKind::Interior).count();
    match config.variant {
        DarcyVariant::Hdpg | DarcyVariant::HdpgGlobalTrace => {
            ne * (2 * scalar_dim(k) + scalar_dim(k + 1)) + mesh.edges.len() * (k + 1)
        }
        DarcyVariant::HdpgReduced => ne * scalar_dim(k + 1) + mesh.edges.len() * (k + 1),
        DarcyVariant::Hdg => ne * config.n_p + mesh.edges.len() * config.n_uhat,
        DarcyVariant::HdpgFlux2 => ne * (2 * scalar_dim(k) + scalar_dim(k + 1)) + interior * (k + 2),
    }
}
