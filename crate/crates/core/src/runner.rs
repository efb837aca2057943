//! Experiment driver: flat `key = value` configs, seed loops, averaged
//! error reports and CSV output.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::coupled::{assemble_stokes_darcy, CoupledSchemeConfig};
use crate::darcy::{assemble_darcy, eval_darcy_solution, DarcySchemeConfig, DarcyVariant};
use crate::metrics::{relative_l1, relative_l2, relative_semi_h1, tensor_components, ErrorReport};
use crate::problems::{example1, example2, example3, example4, example5, InterfaceLaw};
use crate::stokes::{assemble_brinkman, assemble_hdpg_stokes, eval_stokes_solution, StokesSchemeConfig};
use crate::system::{solve_least_squares, DenseSystem};
use crate::{Domain, Error, Mesh, Point, Result, Subdomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Darcy(DarcyVariant),
    Stokes,
    Brinkman,
    Coupled,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Darcy(v) => v.name(),
            Scheme::Stokes => "stokes",
            Scheme::Brinkman => "brinkman",
            Scheme::Coupled => "coupled",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hdpg" => Scheme::Darcy(DarcyVariant::Hdpg),
            "hdpg-reduced" => Scheme::Darcy(DarcyVariant::HdpgReduced),
            "hdpg-global-trace" => Scheme::Darcy(DarcyVariant::HdpgGlobalTrace),
            "hdg" => Scheme::Darcy(DarcyVariant::Hdg),
            "hdpg-flux2" => Scheme::Darcy(DarcyVariant::HdpgFlux2),
            "stokes" => Scheme::Stokes,
            "brinkman" => Scheme::Brinkman,
            "coupled" => Scheme::Coupled,
            _ => return Err(Error::Config(format!("unknown scheme `{s}`"))),
        })
    }
}

/// One parameter row of an experiment. Neuron counts left unset follow the
/// degree `k0` the same way the scheme constructors do.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Benchmark example, 1 to 5.
    pub example: u8,
    pub scheme: Scheme,
    /// Oscillation index of example 2.
    pub m: u32,
    pub alpha: f64,
    pub nu: f64,
    pub law: InterfaceLaw,
    pub nx: usize,
    pub ny: usize,
    pub k0: usize,
    pub n_u: Option<usize>,
    pub n_uhat: Option<usize>,
    pub n_p: Option<usize>,
    pub n_sigma: Option<usize>,
    pub n_sigmahat: Option<usize>,
    pub r: f64,
    pub r_s: f64,
    pub r_d: f64,
    pub eta: f64,
    pub tau: f64,
    /// Interface sampling points of the coupled scheme.
    pub points: usize,
    pub quad_order: Option<usize>,
    pub shared_weights: bool,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    /// Writes the first seed's system in triplet form.
    pub dump_system: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            example: 1,
            scheme: Scheme::Darcy(DarcyVariant::Hdpg),
            m: 1,
            alpha: 1.0,
            nu: 0.1,
            law: InterfaceLaw::Bj,
            nx: 3,
            ny: 3,
            k0: 6,
            n_u: None,
            n_uhat: None,
            n_p: None,
            n_sigma: None,
            n_sigmahat: None,
            r: 1.0,
            r_s: 1.0,
            r_d: 1.0,
            eta: 0.0,
            tau: 1.0,
            points: 30,
            quad_order: None,
            shared_weights: false,
            seeds: (0..10).collect(),
            out: None,
            dump_system: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

/// Parses `1,2,5` or a range `0..10`.
pub fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        (parse::<u64>("seeds", a.trim())?..parse::<u64>("seeds", b.trim())?).collect()
    } else {
        s.split(',').map(|t| parse("seeds", t.trim())).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    Ok(seeds)
}

impl RunConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "example" => self.example = parse(key, value)?,
            "scheme" => self.scheme = value.parse()?,
            "m" => self.m = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "nu" => self.nu = parse(key, value)?,
            "law" => {
                self.law = match value {
                    "bj" => InterfaceLaw::Bj,
                    "bjs" => InterfaceLaw::Bjs,
                    _ => return Err(Error::Config(format!("unknown interface law `{value}`"))),
                }
            }
            "n" => {
                self.nx = parse(key, value)?;
                self.ny = self.nx;
            }
            "nx" => self.nx = parse(key, value)?,
            "ny" => self.ny = parse(key, value)?,
            "k0" | "k" => self.k0 = parse(key, value)?,
            "N_u" | "n_u" => self.n_u = Some(parse(key, value)?),
            "N_uhat" | "n_uhat" => self.n_uhat = Some(parse(key, value)?),
            "N_p" | "n_p" => self.n_p = Some(parse(key, value)?),
            "N_sigma" | "n_sigma" => self.n_sigma = Some(parse(key, value)?),
            "N_sigmahat" | "n_sigmahat" => self.n_sigmahat = Some(parse(key, value)?),
            "r" => self.r = parse(key, value)?,
            "r_S" | "r_s" => self.r_s = parse(key, value)?,
            "r_D" | "r_d" => self.r_d = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "M" | "points" => self.points = parse(key, value)?,
            "quad" | "quad_order" => self.quad_order = Some(parse(key, value)?),
            "shared_weights" => self.shared_weights = parse(key, value)?,
            "seeds" => self.seeds = parse_seed_list(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "dump_system" => self.dump_system = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match (self.example, self.scheme) {
            (1 | 2, Scheme::Darcy(_)) => true,
            (3, Scheme::Stokes | Scheme::Brinkman) => true,
            (4, Scheme::Coupled) => true,
            (5, Scheme::Brinkman) => true,
            (1..=5, _) => false,
            _ => return Err(Error::Config(format!("unknown example {}", self.example))),
        };
        if !ok {
            return Err(Error::Config(format!(
                "scheme {} does not apply to example {}",
                self.scheme.name(),
                self.example
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config("mesh needs at least one element per direction".into()));
        }
        Ok(())
    }

    fn domain(&self) -> Domain {
        if self.example == 4 {
            Domain { x_min: 0.0, x_max: PI, y_min: -PI, y_max: PI }
        } else {
            Domain::unit_square()
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        let divider = (self.example == 4).then_some(0.0);
        Mesh::uniform(self.domain(), self.nx, self.ny, divider)
    }

    /// Mesh spacing in x.
    pub fn h(&self) -> f64 {
        self.domain().width() / self.nx as f64
    }

    pub fn darcy_config(&self, seed: u64) -> Result<DarcySchemeConfig> {
        let Scheme::Darcy(variant) = self.scheme else {
            return Err(Error::Config(format!("{} is not a Darcy scheme", self.scheme.name())));
        };
        let base = DarcySchemeConfig::from_degree(self.k0, variant);
        Ok(DarcySchemeConfig {
            n_u: self.n_u.unwrap_or(base.n_u),
            n_uhat: self.n_uhat.unwrap_or(base.n_uhat),
            n_p: self.n_p.unwrap_or(base.n_p),
            eta: self.eta,
            tau: self.tau,
            half_width: self.r,
            seed,
            shared_weights: self.shared_weights,
            quad_points: self.quad_order,
            ..base
        })
    }

    pub fn stokes_config(&self, seed: u64) -> StokesSchemeConfig {
        let base = StokesSchemeConfig::from_degree(self.k0);
        StokesSchemeConfig {
            n_sigma: self.n_sigma.unwrap_or(base.n_sigma),
            n_sigmahat: self.n_sigmahat.unwrap_or(base.n_sigmahat),
            n_u: self.n_u.unwrap_or(base.n_u),
            eta: self.eta,
            half_width: self.r,
            seed,
            shared_weights: self.shared_weights,
            quad_points: self.quad_order,
            ..base
        }
    }

    pub fn coupled_config(&self, seed: u64) -> CoupledSchemeConfig {
        let mut c = CoupledSchemeConfig::from_degree(self.k0, self.points);
        c.stokes.half_width = self.r_s;
        c.darcy.half_width = self.r_d;
        for (s, q) in [(&mut c.stokes.seed, &mut c.stokes.quad_points), (&mut c.darcy.seed, &mut c.darcy.quad_points)] {
            *s = seed;
            *q = self.quad_order;
        }
        c.stokes.shared_weights = self.shared_weights;
        c.darcy.shared_weights = self.shared_weights;
        c
    }

    /// Neuron counts reported in the CSV: `(N_u, N_uhat, N_p, N_sigma, N_sigmahat)`.
    fn neurons(&self) -> [Option<usize>; 5] {
        match self.scheme {
            Scheme::Darcy(_) => {
                let c = self.darcy_config(0).expect("darcy scheme");
                [Some(c.n_u), Some(c.n_uhat), Some(c.n_p), None, None]
            }
            Scheme::Stokes | Scheme::Brinkman => {
                let c = self.stokes_config(0);
                [Some(c.n_u), None, None, Some(c.n_sigma), Some(c.n_sigmahat)]
            }
            Scheme::Coupled => {
                let c = self.coupled_config(0);
                [Some(c.darcy.n_u), Some(c.darcy.n_uhat), Some(c.darcy.n_p), Some(c.stokes.n_sigma), Some(c.stokes.n_sigmahat)]
            }
        }
    }
}

/// Errors of every seed of one parameter row and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub reports: Vec<ErrorReport>,
    pub mean: ErrorReport,
}

fn maybe_dump(system: &DenseSystem, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => system.dump(p),
        None => Ok(()),
    }
}

/// Assembles, solves and measures one seed.
pub fn solve_seed(config: &RunConfig, seed: u64, dump: Option<&Path>) -> Result<ErrorReport> {
    config.validate()?;
    let mesh = config.mesh()?;
    let q = config.k0 + 8;
    let start = Instant::now();
    let mut report = ErrorReport::default();
    let no_exact = || Error::Problem("example has no exact solution".into());
    match config.scheme {
        Scheme::Darcy(_) => {
            let problem = if config.example == 1 { example1() } else { example2(config.m)? };
            let d = assemble_darcy(&mesh, &problem, &config.darcy_config(seed)?)?;
            maybe_dump(&d.system, dump)?;
            let sol = solve_least_squares(&d.system, None)?;
            report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            (report.dof, report.rows, report.rank, report.residual_norm) =
                (d.layout.dof(), d.system.rows(), sol.rank, sol.residual_norm);
            let ex = problem.exact.as_ref().ok_or_else(no_exact)?;
            let ev = |e: usize, x: Point| eval_darcy_solution(&mesh, &d.spaces, &d.layout, &sol.coefficients, x, e);
            let s = Subdomain::Single;
            report.e0_p = Some(relative_l2(&mesh, s, q, |e, x| Ok(vec![ev(e, x)?.p]), |x| vec![(ex.p)(x)])?);
            report.e1_p = Some(relative_semi_h1(&mesh, s, q, |e, x| Ok(ev(e, x)?.grad_p.to_vec()), |x| (ex.grad_p)(x).to_vec())?);
            report.eps1_p = Some(relative_l1(&mesh, s, q, |e, x| Ok(vec![ev(e, x)?.p]), |x| vec![(ex.p)(x)])?);
            report.e0_u = Some(relative_l2(&mesh, s, q, |e, x| Ok(ev(e, x)?.u.to_vec()), |x| (ex.u)(x).to_vec())?);
        }
        Scheme::Stokes | Scheme::Brinkman => {
            let problem = if config.example == 3 { example3(config.nu)? } else { example5(config.alpha)? };
            let c = config.stokes_config(seed);
            let d = if config.scheme == Scheme::Stokes {
                assemble_hdpg_stokes(&mesh, &problem, &c)?
            } else {
                assemble_brinkman(&mesh, &problem, &c)?
            };
            maybe_dump(&d.system, dump)?;
            let sol = solve_least_squares(&d.system, None)?;
            report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            (report.dof, report.rows, report.rank, report.residual_norm) =
                (d.layout.dof(), d.system.rows(), sol.rank, sol.residual_norm);
            let ex = problem.exact.as_ref().ok_or_else(no_exact)?;
            let ev = |e: usize, x: Point| eval_stokes_solution(&mesh, &d.spaces, &d.layout, &sol.coefficients, x, e);
            let s = Subdomain::Single;
            report.e0_u = Some(relative_l2(&mesh, s, q, |e, x| Ok(ev(e, x)?.u.to_vec()), |x| (ex.u)(x).to_vec())?);
            report.e0_sigma = Some(relative_l2(
                &mesh,
                s,
                q,
                |e, x| Ok(tensor_components(ev(e, x)?.sigma)),
                |x| tensor_components((ex.sigma)(x)),
            )?);
            report.e0_p = Some(relative_l2(&mesh, s, q, |e, x| Ok(vec![ev(e, x)?.p]), |x| vec![(ex.p)(x)])?);
        }
        Scheme::Coupled => {
            let mut problem = example4(config.alpha, config.nu)?;
            problem.law = config.law;
            let d = assemble_stokes_darcy(&mesh, &problem, &config.coupled_config(seed))?;
            maybe_dump(&d.system, dump)?;
            let sol = solve_least_squares(&d.system, None)?;
            report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            (report.dof, report.rows, report.rank, report.residual_norm) =
                (d.layout.dof(), d.system.rows(), sol.rank, sol.residual_norm);
            let es = problem.stokes.exact.as_ref().ok_or_else(no_exact)?;
            let ed = problem.darcy.exact.as_ref().ok_or_else(no_exact)?;
            let sv = |e: usize, x: Point| eval_stokes_solution(&mesh, &d.stokes, &d.layout, &sol.coefficients, x, e);
            let dv = |e: usize, x: Point| eval_darcy_solution(&mesh, &d.darcy, &d.layout, &sol.coefficients, x, e);
            let (st, da) = (Subdomain::Stokes, Subdomain::Darcy);
            report.e0_u_stokes = Some(relative_l2(&mesh, st, q, |e, x| Ok(sv(e, x)?.u.to_vec()), |x| (es.u)(x).to_vec())?);
            report.e0_p_stokes = Some(relative_l2(&mesh, st, q, |e, x| Ok(vec![sv(e, x)?.p]), |x| vec![(es.p)(x)])?);
            report.e0_u_darcy = Some(relative_l2(&mesh, da, q, |e, x| Ok(dv(e, x)?.u.to_vec()), |x| (ed.u)(x).to_vec())?);
            report.e0_p_darcy = Some(relative_l2(&mesh, da, q, |e, x| Ok(vec![dv(e, x)?.p]), |x| vec![(ed.p)(x)])?);
        }
    }
    Ok(report)
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Arithmetic mean of the errors, residuals and runtimes. Sizes come from the
/// first report; the rank is the smallest seen.
pub fn mean_report(reports: &[ErrorReport]) -> ErrorReport {
    let Some(first) = reports.first() else { return ErrorReport::default() };
    let n = reports.len() as f64;
    let m = |f: fn(&ErrorReport) -> Option<f64>| mean_of(reports.iter().map(f));
    ErrorReport {
        e0_p: m(|r| r.e0_p),
        e1_p: m(|r| r.e1_p),
        eps1_p: m(|r| r.eps1_p),
        e0_u: m(|r| r.e0_u),
        e0_sigma: m(|r| r.e0_sigma),
        e0_u_stokes: m(|r| r.e0_u_stokes),
        e0_p_stokes: m(|r| r.e0_p_stokes),
        e0_u_darcy: m(|r| r.e0_u_darcy),
        e0_p_darcy: m(|r| r.e0_p_darcy),
        dof: first.dof,
        rows: first.rows,
        rank: reports.iter().map(|r| r.rank).min().unwrap_or(0),
        residual_norm: reports.iter().map(|r| r.residual_norm).sum::<f64>() / n,
        runtime_ms: reports.iter().map(|r| r.runtime_ms).sum::<f64>() / n,
    }
}

/// Runs every seed of one parameter row.
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut reports = Vec::with_capacity(config.seeds.len());
    for (i, &seed) in config.seeds.iter().enumerate() {
        let dump = if i == 0 { config.dump_system.as_deref() } else { None };
        reports.push(solve_seed(config, seed, dump)?);
    }
    let mean = mean_report(&reports);
    Ok(RunRecord { config: config.clone(), reports, mean })
}

/// Runs the rows in order, calling `progress` after each.
pub fn run_all(configs: &[RunConfig], mut progress: impl FnMut(usize, &RunRecord)) -> Result<Vec<RunRecord>> {
    let mut out = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        let rec = run(c)?;
        progress(i, &rec);
        out.push(rec);
    }
    Ok(out)
}

pub const CSV_COLUMNS: [&str; 36] = [
    "example", "scheme", "h", "k0", "N_u", "N_uhat", "N_p", "r", "eta", "tau", "M", "dof", "rows", "seeds",
    "e0_p", "e1_p", "eps1_p", "e0_u", "e0_sigma", "residual", "runtime_ms", "e0_uS", "e0_pS", "e0_uD", "e0_pD",
    "rank", "N_sigma", "N_sigmahat", "nx", "ny", "m", "alpha", "nu", "law", "r_S", "r_D",
];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn record_fields(rec: &RunRecord) -> Vec<String> {
    let c = &rec.config;
    let m = &rec.mean;
    let [n_u, n_uhat, n_p, n_sigma, n_sigmahat] = c.neurons();
    let coupled = c.scheme == Scheme::Coupled;
    let e = |v: Option<f64>| v.map(num).unwrap_or_default();
    vec![
        c.example.to_string(),
        c.scheme.name().into(),
        num(c.h()),
        c.k0.to_string(),
        opt(n_u),
        opt(n_uhat),
        opt(n_p),
        if coupled { String::new() } else { num(c.r) },
        num(c.eta),
        if matches!(c.scheme, Scheme::Darcy(DarcyVariant::Hdg)) { num(c.tau) } else { String::new() },
        if coupled { c.points.to_string() } else { String::new() },
        m.dof.to_string(),
        m.rows.to_string(),
        c.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
        e(m.e0_p),
        e(m.e1_p),
        e(m.eps1_p),
        e(m.e0_u),
        e(m.e0_sigma),
        num(m.residual_norm),
        num(m.runtime_ms),
        e(m.e0_u_stokes),
        e(m.e0_p_stokes),
        e(m.e0_u_darcy),
        e(m.e0_p_darcy),
        m.rank.to_string(),
        opt(n_sigma),
        opt(n_sigmahat),
        c.nx.to_string(),
        c.ny.to_string(),
        if c.example == 2 { c.m.to_string() } else { String::new() },
        if matches!(c.example, 4 | 5) { num(c.alpha) } else { String::new() },
        if matches!(c.example, 3 | 4) { num(c.nu) } else { String::new() },
        if coupled { format!("{:?}", c.law).to_lowercase() } else { String::new() },
        if coupled { num(c.r_s) } else { String::new() },
        if coupled { num(c.r_d) } else { String::new() },
    ]
}

/// Header plus one line per record; numbers carry 17 significant digits.
pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(records, file)
}

pub fn write_csv_to<W: std::io::Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.into());
    out.write_record(CSV_COLUMNS).map_err(io)?;
    for rec in records {
        out.write_record(record_fields(rec)).map_err(io)?;
    }
    out.flush()?;
    Ok(())
}
