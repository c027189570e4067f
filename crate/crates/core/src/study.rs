//! Convergence and conditioning studies built on top of the solver.

use std::sync::Arc;

use crate::assembly::AssemblyOptions;
use crate::mesh::{
    geometric_time_partition, symmetric_graded_nodes, DegreeRule, SpaceTimeMesh, SpatialMesh, TimePartition,
};
use crate::norms::{eoc, evaluate_with, NormReport};
use crate::problems::{HeatProblem, Homogeneous};
use crate::solve::{slab_condition_number, solve, SolveReport, SolverMode};
use crate::space::DiscreteSpace;
use crate::{Error, Result, SpaceKind};

/// Discretisation choices shared by every run of a study.
#[derive(Clone, Copy, Debug)]
pub struct RunSettings {
    pub kind: SpaceKind,
    pub opts: AssemblyOptions,
    pub mode: SolverMode,
    /// Whether to compute the `LDG,N` norm, which needs one extra global solve.
    pub newton: bool,
}

impl RunSettings {
    pub fn new(kind: SpaceKind) -> Self {
        Self { kind, opts: AssemblyOptions::default(), mode: SolverMode::Slab, newton: true }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub report: NormReport,
    pub solve: SolveReport,
    pub slabs: usize,
}

/// Solves `problem` on `mesh` and measures every error norm.
pub fn run(problem: &dyn HeatProblem, mesh: SpaceTimeMesh, settings: &RunSettings) -> Result<RunResult> {
    settings.opts.validate()?;
    let slabs = mesh.time_slabs().map(|s| s.len()).unwrap_or(0);
    let space = Arc::new(DiscreteSpace::for_problem(Arc::new(mesh), settings.kind, problem)?);
    let (sol, report) = solve(space, problem, &settings.opts, settings.mode)?;
    let norms = evaluate_with(&sol, Some(problem), &settings.opts, settings.newton)?;
    Ok(RunResult { report: norms, solve: report, slabs })
}

/// Space-time mesh of the problem domain with `nx` cells per axis and
/// uniform time steps no longer than the spatial cell width.
pub fn uniform_mesh(problem: &dyn HeatProblem, nx: usize, degree: usize) -> Result<SpaceTimeMesh> {
    if nx == 0 {
        return Err(Error::InvalidParameter("refinement level needs at least one cell".into()));
    }
    let domain = problem.domain();
    let width = domain.upper[0] - domain.lower[0];
    let t = problem.final_time();
    let n = ((t * nx as f64 / width) - 1e-9).ceil().max(1.0) as usize;
    let partition = TimePartition::uniform(t, n)?;
    SpaceTimeMesh::extrude(domain.spatial_mesh(nx)?, &partition, &DegreeRule::Uniform(degree))
}

/// One CSV row of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub method: String,
    pub h: f64,
    pub p: usize,
    pub ndofs: usize,
    pub slabs: usize,
    pub error_l2: f64,
    pub eoc_l2: Option<f64>,
    pub error_ldg: f64,
    pub eoc_ldg: Option<f64>,
    pub error_ldg_plus: f64,
    pub eoc_ldg_plus: Option<f64>,
    pub error_ldgn: Option<f64>,
    pub eoc_ldgn: Option<f64>,
}

pub const STUDY_HEADER: [&str; 17] = [
    "method",
    "h",
    "p",
    "ndofs",
    "slabs",
    "error_L2",
    "eoc_L2",
    "error_LDG",
    "eoc_LDG",
    "error_LDGp",
    "eoc_LDGp",
    "error_LDGN",
    "eoc_LDGN",
    "totaldofs",
    "totaldofs2",
    "totaldofs3",
    "totaldofs4",
];

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

impl StudyRow {
    /// Row for a single run, with the EOC columns left blank.
    pub fn from_result(method: &str, r: &RunResult) -> Self {
        let n = &r.report;
        Self {
            method: method.to_string(),
            h: n.h,
            p: n.p,
            ndofs: n.n_dofs,
            slabs: r.slabs,
            error_l2: n.error_l2,
            eoc_l2: None,
            error_ldg: n.error_ldg,
            eoc_ldg: None,
            error_ldg_plus: n.error_ldg_plus,
            eoc_ldg_plus: None,
            error_ldgn: n.error_ldgn,
            eoc_ldgn: None,
        }
    }

    /// `ndofs^{1/k}`.
    pub fn dofs_root(&self, k: u32) -> f64 {
        (self.ndofs as f64).powf(1.0 / k as f64)
    }

    /// Fields in `STUDY_HEADER` order.
    pub fn record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            fmt(self.h),
            self.p.to_string(),
            self.ndofs.to_string(),
            self.slabs.to_string(),
            fmt(self.error_l2),
            fmt_opt(self.eoc_l2),
            fmt(self.error_ldg),
            fmt_opt(self.eoc_ldg),
            fmt(self.error_ldg_plus),
            fmt_opt(self.eoc_ldg_plus),
            self.error_ldgn.map(fmt).unwrap_or_default(),
            fmt_opt(self.eoc_ldgn),
            self.ndofs.to_string(),
            fmt(self.dofs_root(2)),
            fmt(self.dofs_root(3)),
            fmt(self.dofs_root(4)),
        ]
    }
}

fn fill_eocs(rows: &mut [StudyRow]) {
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let column = |f: fn(&StudyRow) -> f64, rows: &[StudyRow]| eoc(&rows.iter().map(f).collect::<Vec<_>>(), &h);
    let l2 = column(|r| r.error_l2, rows);
    let ldg = column(|r| r.error_ldg, rows);
    let ldgp = column(|r| r.error_ldg_plus, rows);
    let ldgn = if rows.iter().all(|r| r.error_ldgn.is_some()) {
        column(|r| r.error_ldgn.unwrap_or(f64::NAN), rows)
    } else {
        vec![None; rows.len()]
    };
    for (i, r) in rows.iter_mut().enumerate() {
        r.eoc_l2 = l2[i];
        r.eoc_ldg = ldg[i];
        r.eoc_ldg_plus = ldgp[i];
        r.eoc_ldgn = ldgn[i];
    }
}

/// Uniform `h`-refinement: one run per entry of `levels` (cells per axis).
pub fn converge_h(
    problem: &dyn HeatProblem,
    settings: &RunSettings,
    degree: usize,
    levels: &[usize],
) -> Result<Vec<StudyRow>> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter("no refinement levels given".into()));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &nx in levels {
        let r = run(problem, uniform_mesh(problem, nx, degree)?, settings)?;
        log::info!(
            "{} h-level nx={nx}: {} dofs, L2 error {:.3e}",
            settings.kind.label(),
            r.report.n_dofs,
            r.report.error_l2
        );
        rows.push(StudyRow::from_result(settings.kind.label(), &r));
    }
    fill_eocs(&mut rows);
    Ok(rows)
}

/// `p`-refinement on the fixed mesh with `nx` cells per axis.
pub fn converge_p(
    problem: &dyn HeatProblem,
    settings: &RunSettings,
    degrees: &[usize],
    nx: usize,
) -> Result<Vec<StudyRow>> {
    if degrees.is_empty() {
        return Err(Error::InvalidParameter("no polynomial degrees given".into()));
    }
    let mut rows = Vec::with_capacity(degrees.len());
    for &p in degrees {
        let r = run(problem, uniform_mesh(problem, nx, p)?, settings)?;
        log::info!("{} p={p}: {} dofs, L2 error {:.3e}", settings.kind.label(), r.report.n_dofs, r.report.error_l2);
        rows.push(StudyRow::from_result(settings.kind.label(), &r));
    }
    Ok(rows)
}

/// Geometric grading towards `t = 0` (and towards `∂Ω` in 1D when
/// `sigma_x` is set), with slab degrees `⌊μ(n+1)⌋`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HpSchedule {
    pub sigma_t: f64,
    pub sigma_x: Option<f64>,
    pub mu: f64,
    /// Degree forced on the first slab.
    pub first_degree: Option<usize>,
    /// Cells per axis of the spatial mesh when it is not graded.
    pub nx: usize,
}

impl HpSchedule {
    /// Temporal grading with `p = 2` on the initial slab.
    pub fn initial_layer(sigma: f64, mu: f64, nx: usize) -> Self {
        Self { sigma_t: sigma, sigma_x: None, mu, first_degree: Some(2), nx }
    }

    /// Space and time grading with `p_n = n + 1`.
    pub fn corner(sigma_x: f64, sigma_t: f64) -> Self {
        Self { sigma_t, sigma_x: Some(sigma_x), mu: 1.0, first_degree: None, nx: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let graded = |s: f64| s > 0.0 && s < 1.0;
        if !graded(self.sigma_t) || self.sigma_x.is_some_and(|s| !graded(s)) {
            return Err(Error::InvalidParameter("grading factors must lie in (0, 1)".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!("degree slope must be positive, got {}", self.mu)));
        }
        if self.sigma_x.is_none() && self.nx == 0 {
            return Err(Error::InvalidParameter("ungraded spatial mesh needs at least one cell".into()));
        }
        Ok(())
    }

    /// Degrees of slabs `1..=n`.
    pub fn degrees(&self, n: usize) -> Vec<usize> {
        (1..=n)
            .map(|k| match self.first_degree {
                Some(p) if k == 1 => p,
                _ => ((self.mu * (k + 1) as f64).floor() as usize).max(1),
            })
            .collect()
    }

    pub fn mesh(&self, problem: &dyn HeatProblem, n: usize) -> Result<SpaceTimeMesh> {
        self.validate()?;
        let domain = problem.domain();
        let partition = geometric_time_partition(problem.final_time(), n, self.sigma_t)?;
        let spatial = match self.sigma_x {
            Some(s) => {
                if domain.dim() != 1 {
                    return Err(Error::InvalidParameter("spatial grading is only available in 1D".into()));
                }
                SpatialMesh::from_nodes_1d(&symmetric_graded_nodes(domain.lower[0], domain.upper[0], n, s)?)?
            }
            None => domain.spatial_mesh(self.nx)?,
        };
        SpaceTimeMesh::extrude(spatial, &partition, &DegreeRule::PerSlab(self.degrees(n)))
    }
}

/// One run per stage count in `stages`.
pub fn converge_hp(
    problem: &dyn HeatProblem,
    settings: &RunSettings,
    schedule: &HpSchedule,
    stages: &[usize],
) -> Result<Vec<StudyRow>> {
    if stages.is_empty() {
        return Err(Error::InvalidParameter("no hp stages given".into()));
    }
    let mut rows = Vec::with_capacity(stages.len());
    for &n in stages {
        let r = run(problem, schedule.mesh(problem, n)?, settings)?;
        log::info!("{} hp N={n}: {} dofs, L2 error {:.3e}", settings.kind.label(), r.report.n_dofs, r.report.error_l2);
        rows.push(StudyRow::from_result(settings.kind.label(), &r));
    }
    Ok(rows)
}

/// Least-squares line `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("a line fit needs at least two paired samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter("line fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LineFit { slope, intercept: my - slope * mx, r_squared })
}

/// Fit of `log(error_L2)` against `ndofs^{1/root}`.
pub fn exponential_fit(rows: &[StudyRow], root: u32) -> Result<LineFit> {
    let x: Vec<f64> = rows.iter().map(|r| r.dofs_root(root)).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.error_l2.ln()).collect();
    fit_line(&x, &y)
}

/// Condition number of the first slab matrix on one refinement level.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionRow {
    pub method: String,
    pub h: f64,
    pub p: usize,
    pub ndofs: usize,
    pub kappa: f64,
    /// Log-log slope over the finest three levels of this method and degree.
    pub slope: f64,
}

pub const CONDITION_HEADER: [&str; 6] = ["method", "h", "p", "ndofs", "kappa", "slope"];

impl ConditionRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            fmt(self.h),
            self.p.to_string(),
            self.ndofs.to_string(),
            fmt(self.kappa),
            format!("{:.6}", self.slope),
        ]
    }
}

/// `κ₂` of the first slab matrix on 1+1D meshes with `h_x = h_t = 2^{−i}`.
/// Only the first slab enters, so the mesh is cut to one slab.
pub fn condition_study(
    kinds: &[SpaceKind],
    degrees: &[usize],
    exponents: &[u32],
    opts: &AssemblyOptions,
) -> Result<Vec<ConditionRow>> {
    if exponents.len() < 2 {
        return Err(Error::InvalidParameter("a conditioning study needs at least two levels".into()));
    }
    opts.validate()?;
    let zero = Homogeneous { dim: 1, final_time: 1.0 };
    let mut rows = Vec::new();
    for &kind in kinds {
        for &p in degrees {
            let mut group = Vec::with_capacity(exponents.len());
            for &i in exponents {
                let nx = 1usize << i;
                let h = 1.0 / nx as f64;
                let partition = TimePartition::new(vec![0.0, h])?;
                let mesh =
                    SpaceTimeMesh::extrude(SpatialMesh::interval(0.0, 1.0, nx)?, &partition, &DegreeRule::Uniform(p))?;
                let space = DiscreteSpace::for_problem(Arc::new(mesh), kind, &zero)?;
                let kappa = slab_condition_number(&space, opts)?.kappa;
                log::info!("{} p={p} h=2^-{i}: kappa {kappa:.3e}", kind.label());
                group.push(ConditionRow {
                    method: kind.label().into(),
                    h,
                    p,
                    ndofs: space.ndofs(),
                    kappa,
                    slope: f64::NAN,
                });
            }
            let tail = &group[group.len().saturating_sub(3)..];
            let fit = fit_line(
                &tail.iter().map(|r| r.h.ln()).collect::<Vec<_>>(),
                &tail.iter().map(|r| r.kappa.ln()).collect::<Vec<_>>(),
            )?;
            group.iter_mut().for_each(|r| r.slope = fit.slope);
            rows.extend(group);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| -0.5 * v + 2.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(fit_line(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn hp_degrees() {
        let s = HpSchedule::initial_layer(0.25, 1.0, 4);
        assert_eq!(s.degrees(3), vec![2, 3, 4]);
        assert_eq!(s.degrees(1), vec![2]);
        let s = HpSchedule::initial_layer(0.25, 0.5, 4);
        assert_eq!(s.degrees(4), vec![2, 1, 2, 2]);
        assert_eq!(HpSchedule::corner(0.35, 0.35).degrees(3), vec![2, 3, 4]);
    }

    #[test]
    fn condition_study_rejects_single_level() {
        let err = condition_study(&[SpaceKind::Standard], &[2], &[0], &AssemblyOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn single_level_has_blank_eocs() {
        let problem = crate::problems::smooth_1d();
        let rows = converge_h(&problem, &RunSettings::new(SpaceKind::TensorProduct), 1, &[2]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].eoc_l2.is_none());
        assert_eq!(rows[0].record()[6], "");
    }
}
