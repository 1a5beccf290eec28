//! Experiment files.
//!
//! ```toml
//! seed = 0
//!
//! [kernel]
//! name = "matern-exp"
//!
//! [domain]
//! kind = "interval"
//! lower = [0.0]
//! upper = [1.0]
//!
//! [nodes]
//! rule = "equidistant"
//! counts = [5, 9, 17, 33, 65]
//!
//! [functions]
//! omegas = [0.41, 0.81]
//! expressions = ["sin(3 * x)"]
//! ```
//!
//! Every table is optional and unknown keys are rejected.

use serde::{Deserialize, Serialize};

use rbf_lab::functions::{Expression, TargetFunction};
use rbf_lab::geometry::{Domain, DomainKind};
use rbf_lab::kernels::{lookup_kernel, RadialKernel};
use rbf_lab::rates::{L2Scheme, NodeRule, StudyOptions};
use rbf_lab::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Greedy start as a candidate-grid index; also seeds random sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub nodes: NodesConfig,
    #[serde(default)]
    pub functions: FunctionsConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub subsample: SubsampleConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            name: "matern-exp".into(),
            tau: None,
            length_scale: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainShape {
    #[default]
    Interval,
    Box,
    Disk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainShape,
    /// Interval or box corners.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_spacing: Option<f64>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            kind: DomainShape::Interval,
            lower: None,
            upper: None,
            center: None,
            radius: None,
            cone_angle: None,
            cone_radius: None,
            grid_spacing: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRuleName {
    #[default]
    Equidistant,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodesConfig {
    pub rule: NodeRuleName,
    pub counts: Vec<usize>,
    /// Explicit greedy start point; takes precedence over `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
}

impl Default for NodesConfig {
    fn default() -> Self {
        Self {
            rule: NodeRuleName::Equidistant,
            counts: vec![5, 9, 17, 33, 65, 129, 257, 513, 1025],
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionsConfig {
    /// Builtin family `x^omega (1 - x)^omega`.
    #[serde(default)]
    pub omegas: Vec<f64>,
    /// Expressions in `x`, `y`, `z`.
    #[serde(default)]
    pub expressions: Vec<String>,
}

impl Default for FunctionsConfig {
    fn default() -> Self {
        Self {
            omegas: vec![0.81],
            expressions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Graded,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default)]
    pub scheme: SchemeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// Sample count of the uniform scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linf_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsampleConfig {
    pub levels: usize,
    pub h0: f64,
    /// Run a single subsampling step at this scale instead of a sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            h0: 0.25,
            q: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub rank: usize,
    /// Quadrature nodes of the Nystrom discretization.
    pub nodes: usize,
    /// Random pairs for the Mercer check.
    pub pairs: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            rank: 256,
            nodes: 1024,
            pairs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks that every referenced builtin exists and every value is usable.
    pub fn validate(&self) -> Result<()> {
        self.kernel()?;
        self.domain()?;
        self.functions()?;
        if self.nodes.counts.contains(&0) {
            return Err(Error::Parse("node counts must be positive".into()));
        }
        if let Some(start) = &self.nodes.start {
            if start.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse("start point must be finite".into()));
            }
        }
        let sc = &self.subsample;
        if !(sc.h0.is_finite() && sc.h0 > 0.0) || sc.q.is_some_and(|q| !(q.is_finite() && q > 0.0)) {
            return Err(Error::Parse("subsample h0 and q must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<RadialKernel> {
        let mut k = lookup_kernel(&self.kernel.name)?;
        if let Some(tau) = self.kernel.tau {
            k = k.with_tau(tau)?;
        }
        if let Some(l) = self.kernel.length_scale {
            k = k.with_length_scale(l)?;
        }
        Ok(k)
    }

    pub fn domain(&self) -> Result<Domain> {
        let c = &self.domain;
        let kind = match c.kind {
            DomainShape::Interval => {
                let a = corner(&c.lower, 0.0)?;
                let b = corner(&c.upper, 1.0)?;
                DomainKind::Interval { a, b }
            }
            DomainShape::Box => {
                let (Some(lower), Some(upper)) = (&c.lower, &c.upper) else {
                    return Err(Error::Parse("a box needs `lower` and `upper`".into()));
                };
                DomainKind::Box {
                    lower: lower.clone(),
                    upper: upper.clone(),
                }
            }
            DomainShape::Disk => DomainKind::Disk {
                center: c.center.unwrap_or([0.0, 0.0]),
                radius: c.radius.unwrap_or(1.0),
            },
        };
        let mut domain = Domain::new(kind)?;
        if c.cone_angle.is_some() || c.cone_radius.is_some() {
            let angle = c.cone_angle.unwrap_or(domain.cone_angle());
            let radius = c.cone_radius.unwrap_or(domain.cone_radius());
            domain = domain.with_cone(angle, radius)?;
        }
        if let Some(s) = c.grid_spacing {
            domain = domain.with_grid_spacing(s)?;
        }
        Ok(domain)
    }

    pub fn functions(&self) -> Result<Vec<TargetFunction>> {
        let mut out: Vec<TargetFunction> = Vec::new();
        for &w in &self.functions.omegas {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Parse(format!("omega must be positive, got {w}")));
            }
            out.push(TargetFunction::Omega(w));
        }
        for e in &self.functions.expressions {
            out.push(TargetFunction::Expression(Expression::parse(e)?));
        }
        Ok(out)
    }

    /// Greedy start point: explicit `start`, else the seed-th grid point.
    pub fn greedy_start(&self, domain: &Domain) -> Result<Option<Vec<f64>>> {
        if let Some(s) = &self.nodes.start {
            return Ok(Some(s.clone()));
        }
        let Some(seed) = self.seed else {
            return Ok(None);
        };
        let grid = domain.candidate_grid().points();
        let i = usize::try_from(seed)
            .ok()
            .filter(|&i| i < grid.len())
            .ok_or_else(|| Error::Parse(format!("seed {seed} exceeds the {} candidate grid points", grid.len())))?;
        Ok(Some(grid.point(i).to_vec()))
    }

    pub fn node_rule(&self, domain: &Domain) -> Result<NodeRule> {
        Ok(match self.nodes.rule {
            NodeRuleName::Equidistant => NodeRule::Equidistant,
            NodeRuleName::Greedy => NodeRule::Greedy {
                seed: self.greedy_start(domain)?,
            },
        })
    }

    pub fn study_options(&self) -> StudyOptions {
        let q = &self.quadrature;
        let defaults = StudyOptions::default();
        let scheme = match q.scheme {
            SchemeName::Graded => {
                let L2Scheme::Graded { order, levels } = L2Scheme::default() else {
                    unreachable!("graded is the default scheme")
                };
                L2Scheme::Graded {
                    order: q.order.unwrap_or(order),
                    levels: q.levels.unwrap_or(levels),
                }
            }
            SchemeName::Uniform => L2Scheme::UniformGrid {
                points: q.points.unwrap_or(rbf_lab::rates::FIGURE2_GRID),
            },
        };
        StudyOptions {
            scheme,
            linf_points: q.linf_points.unwrap_or(defaults.linf_points),
        }
    }
}

fn corner(v: &Option<Vec<f64>>, default: f64) -> Result<f64> {
    match v.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(other) => Err(Error::Parse(format!(
            "an interval bound has one coordinate, got {}",
            other.len()
        ))),
    }
}
