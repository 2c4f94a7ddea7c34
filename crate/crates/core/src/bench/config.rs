//! Experiment configuration: plain-text `key = value` sections.
//!
//! ```text
//! [mesh]
//! nx = 20
//! ny = 20
//! targets = 50, 100      # agglomeration targets, one table column each
//! seed = 1
//! neumann = right        # left, right, bottom, top, none
//!
//! [discretisation]
//! degree = 3
//! alpha = 10
//! mu = 1
//!
//! [experiment]
//! dt = 1e-6, 1e-7, 1e-8
//! solvers = cg, dcg, pcg-bj, pcg-cbj
//! tol = 1e-8
//! maxit = 50000
//! repetitions = 10
//! seed = 42
//! output = results/run
//!
//! [convergence]
//! study = spatial        # or temporal
//! refinements = 2, 4, 8
//! dt = 1e-6
//! steps = 1
//! final_time = 0.5
//! ```
//!
//! Every key is optional; missing keys take the defaults above.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::krylov::SolverKind;
use crate::mesh::{agglomerate, build_cartesian_mesh, read_mesh, PolyMesh, Rect};

/// Drops a trailing `# ...` comment that follows whitespace.
fn strip_comment(line: &str) -> &str {
    let b = line.as_bytes();
    match (1..b.len()).find(|&i| b[i] == b'#' && b[i - 1].is_ascii_whitespace()) {
        Some(i) => line[..i].trim_end(),
        None => line,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub(crate) fn contains(self, x: [f64; 2], tol: f64) -> bool {
        match self {
            Side::Left => x[0].abs() < tol,
            Side::Right => (x[0] - 1.0).abs() < tol,
            Side::Bottom => x[1].abs() < tol,
            Side::Top => (x[1] - 1.0).abs() < tol,
        }
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            other => Err(Error::Config(format!("unknown boundary side '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Cartesian { nx: usize, ny: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    pub source: MeshSource,
    /// Agglomeration targets; empty means the base mesh is used as is.
    pub targets: Vec<usize>,
    pub seed: u64,
    /// Sides of the unit square carrying Neumann conditions.
    pub neumann: Vec<Side>,
}

impl MeshSpec {
    fn base(&self) -> Result<PolyMesh> {
        match &self.source {
            MeshSource::Cartesian { nx, ny } => build_cartesian_mesh(*nx, *ny, Rect::unit()),
            MeshSource::File(p) => read_mesh(p),
        }
    }

    fn classify(&self, mesh: PolyMesh) -> PolyMesh {
        if let MeshSource::File(_) = self.source {
            if self.neumann.is_empty() {
                return mesh;
            }
        }
        let sides = self.neumann.clone();
        mesh.classify_boundary(move |x| sides.iter().any(|s| s.contains(x, 1e-12)))
    }

    /// One mesh per table column, with boundary tags applied.
    pub fn build(&self) -> Result<Vec<PolyMesh>> {
        let base = self.base()?;
        if self.targets.is_empty() {
            return Ok(vec![self.classify(base)]);
        }
        self.targets
            .iter()
            .map(|&t| {
                Ok(self.classify(agglomerate(&base, t, self.seed)?.mesh))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Spatial,
    Temporal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSpec {
    pub study: Study,
    /// Cartesian `n × n` meshes for the spatial study.
    pub refinements: Vec<usize>,
    /// Fixed step of the spatial study.
    pub dt: f64,
    /// Steps taken in the spatial study.
    pub steps: usize,
    /// Final time of the temporal study, whose steps come from `dt_list`.
    pub final_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mesh: MeshSpec,
    pub degree: usize,
    pub alpha: f64,
    pub mu: f64,
    pub dt_list: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    pub tol: f64,
    pub maxit: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub convergence: ConvergenceSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSpec {
                source: MeshSource::Cartesian { nx: 20, ny: 20 },
                targets: vec![50, 100],
                seed: 1,
                neumann: vec![Side::Right],
            },
            degree: 3,
            alpha: crate::assembly::DEFAULT_ALPHA,
            mu: crate::assembly::DEFAULT_MU,
            dt_list: vec![1e-6, 1e-7, 1e-8],
            solvers: SolverKind::ALL.to_vec(),
            tol: 1e-8,
            maxit: 50_000,
            repetitions: 10,
            seed: 42,
            output: None,
            convergence: ConvergenceSpec {
                study: Study::Spatial,
                refinements: vec![2, 4, 8],
                dt: 1e-6,
                steps: 1,
                final_time: 0.5,
            },
        }
    }
}

fn parse_value<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse '{v}'")))
}

fn parse_list<T: FromStr>(section: &str, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(section, key, s))
        .collect()
}

fn parse_solvers(v: &str) -> Result<Vec<SolverKind>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(SolverKind::from_str).collect()
}

fn parse_sides(v: &str) -> Result<Vec<Side>> {
    if v.trim() == "none" {
        return Ok(Vec::new());
    }
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(Side::from_str).collect()
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub degree: Option<usize>,
    pub dt_list: Option<Vec<f64>>,
    pub solvers: Option<Vec<SolverKind>>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub targets: Option<Vec<usize>>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses a configuration, resolving relative mesh paths against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let text: String = text.lines().map(|l| strip_comment(l).to_string() + "\n").collect();
        let ini = Ini::load_from_str_noescape(&text).map_err(|e| Error::Config(e.to_string()))?;
        let mut c = Self::default();
        const KNOWN: [(&str, &[&str]); 4] = [
            ("mesh", &["nx", "ny", "file", "targets", "seed", "neumann"]),
            ("discretisation", &["degree", "alpha", "mu"]),
            ("experiment", &["dt", "solvers", "tol", "maxit", "repetitions", "seed", "output"]),
            ("convergence", &["study", "refinements", "dt", "steps", "final_time"]),
        ];
        for (sec, props) in ini.iter() {
            let Some(name) = sec else {
                if !props.is_empty() {
                    return Err(Error::Config("keys must appear inside a [section]".into()));
                }
                continue;
            };
            let keys = KNOWN
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| Error::Config(format!("unknown section [{name}]")))?
                .1;
            for (k, v) in props.iter() {
                if !keys.contains(&k) {
                    return Err(Error::Config(format!("unknown key '{k}' in [{name}]")));
                }
                c.set(name, k, v, base_dir)?;
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn set(&mut self, sec: &str, key: &str, v: &str, base_dir: &Path) -> Result<()> {
        match (sec, key) {
            ("mesh", "nx") | ("mesh", "ny") => {
                let n: usize = parse_value(sec, key, v)?;
                let (mut nx, mut ny) = match self.mesh.source {
                    MeshSource::Cartesian { nx, ny } => (nx, ny),
                    MeshSource::File(_) => (n, n),
                };
                if key == "nx" {
                    nx = n;
                } else {
                    ny = n;
                }
                if !matches!(self.mesh.source, MeshSource::File(_)) {
                    self.mesh.source = MeshSource::Cartesian { nx, ny };
                }
            }
            ("mesh", "file") => self.mesh.source = MeshSource::File(base_dir.join(v.trim())),
            ("mesh", "targets") => self.mesh.targets = parse_list(sec, key, v)?,
            ("mesh", "seed") => self.mesh.seed = parse_value(sec, key, v)?,
            ("mesh", "neumann") => self.mesh.neumann = parse_sides(v)?,
            ("discretisation", "degree") => self.degree = parse_value(sec, key, v)?,
            ("discretisation", "alpha") => self.alpha = parse_value(sec, key, v)?,
            ("discretisation", "mu") => self.mu = parse_value(sec, key, v)?,
            ("experiment", "dt") => self.dt_list = parse_list(sec, key, v)?,
            ("experiment", "solvers") => self.solvers = parse_solvers(v)?,
            ("experiment", "tol") => self.tol = parse_value(sec, key, v)?,
            ("experiment", "maxit") => self.maxit = parse_value(sec, key, v)?,
            ("experiment", "repetitions") => self.repetitions = parse_value(sec, key, v)?,
            ("experiment", "seed") => self.seed = parse_value(sec, key, v)?,
            ("experiment", "output") => self.output = Some(base_dir.join(v.trim())),
            ("convergence", "study") => {
                self.convergence.study = match v.trim() {
                    "spatial" => Study::Spatial,
                    "temporal" => Study::Temporal,
                    other => return Err(Error::Config(format!("unknown study '{other}'"))),
                }
            }
            ("convergence", "refinements") => self.convergence.refinements = parse_list(sec, key, v)?,
            ("convergence", "dt") => self.convergence.dt = parse_value(sec, key, v)?,
            ("convergence", "steps") => self.convergence.steps = parse_value(sec, key, v)?,
            ("convergence", "final_time") => self.convergence.final_time = parse_value(sec, key, v)?,
            _ => unreachable!("keys are checked against the known list"),
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = o.degree {
            self.degree = v;
        }
        if let Some(v) = &o.dt_list {
            self.dt_list = v.clone();
        }
        if let Some(v) = &o.solvers {
            self.solvers = v.clone();
        }
        if let Some(v) = o.tol {
            self.tol = v;
        }
        if let Some(v) = o.maxit {
            self.maxit = v;
        }
        if let Some(v) = o.repetitions {
            self.repetitions = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.targets {
            self.mesh.targets = v.clone();
        }
        if let Some(v) = &o.output {
            self.output = Some(v.clone());
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.degree == 0 {
            return bad("degree must be at least 1".into());
        }
        if !(self.alpha > 0.0) || !(self.mu > 0.0) {
            return bad("alpha and mu must be positive".into());
        }
        if self.dt_list.is_empty() || self.dt_list.iter().any(|&d| !(d > 0.0)) {
            return bad("dt list must be non-empty and positive".into());
        }
        if self.solvers.is_empty() {
            return bad("solver list is empty".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) || self.maxit == 0 {
            return bad("tol must lie in (0, 1) and maxit be positive".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        match &self.mesh.source {
            MeshSource::Cartesian { nx, ny } if *nx == 0 || *ny == 0 => {
                return bad("mesh dimensions must be positive".into())
            }
            MeshSource::File(p) if !p.is_file() => return bad(format!("mesh file {} not found", p.display())),
            _ => {}
        }
        let cv = &self.convergence;
        if cv.refinements.is_empty() || cv.refinements.contains(&0) || !(cv.dt > 0.0) || cv.steps == 0 {
            return bad("convergence refinements, dt and steps must be positive".into());
        }
        if !(cv.final_time > 0.0) {
            return bad("convergence final_time must be positive".into());
        }
        Ok(())
    }

    /// Canonical text of every setting that influences results.
    pub fn canonical(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|d| format!("{d:e}")).collect::<Vec<_>>().join(",");
        let source = match &self.mesh.source {
            MeshSource::Cartesian { nx, ny } => format!("cartesian:{nx}x{ny}"),
            MeshSource::File(p) => {
                let text = std::fs::read(p).unwrap_or_default();
                format!("file:{}", hex(&Sha256::digest(&text)))
            }
        };
        format!(
            "mesh={source};targets={:?};mesh_seed={};neumann={:?};degree={};alpha={:e};mu={:e};dt={};\
             solvers={};tol={:e};maxit={};repetitions={};seed={};study={:?};refinements={:?};conv_dt={:e};\
             steps={};final_time={:e}",
            self.mesh.targets,
            self.mesh.seed,
            self.mesh.neumann,
            self.degree,
            self.alpha,
            self.mu,
            list(&self.dt_list),
            self.solvers.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
            self.tol,
            self.maxit,
            self.repetitions,
            self.seed,
            self.convergence.study,
            self.convergence.refinements,
            self.convergence.dt,
            self.convergence.steps,
            self.convergence.final_time,
        )
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))[..16].to_string()
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
