use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dias::{CompositionConfig, CompositionMode};
use crate::dynamics::{Bounds, ConnectConfig, DoubleIntegrator, PlanarArm, SystemModel, Unicycle};
use crate::formula::{
    parse_formula_with, Formula, ParseOptions, Predicate, PredicateFn, RegionHint,
};
use crate::planner::PlannerConfig;

use super::{HarnessError, Heuristic};

/// Scenarios shipped with the crate, by name.
pub const BUNDLED: [(&str, &str); 3] = [
    (
        "double_integrator_nav",
        include_str!("../../scenarios/double_integrator_nav.json"),
    ),
    (
        "unicycle_reach_avoid",
        include_str!("../../scenarios/unicycle_reach_avoid.json"),
    ),
    (
        "arm_cascade",
        include_str!("../../scenarios/arm_cascade.json"),
    ),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Unicycle,
    DoubleIntegrator,
    PlanarArm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    /// Full state for the mobile systems, joint angles for the arm.
    pub state: Bounds,
    pub control: Bounds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Ball {
        axes: Vec<usize>,
        center: Vec<f64>,
        radius: f64,
        inside: bool,
    },
    Box {
        axes: Vec<usize>,
        min: Vec<f64>,
        max: Vec<f64>,
        inside: bool,
    },
}

/// A predicate entry: either affine (`coeffs`, `offset`, `threshold`) or a
/// `shape`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_hint: Option<RegionHint>,
}

fn one() -> f64 {
    1.0
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Planner settings as written in a scenario file. The composition fields
/// sit at the same level as the search parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSpec {
    pub max_iters: usize,
    pub k_near: usize,
    pub p_bias: f64,
    pub shots: usize,
    pub refine_iters: usize,
    pub max_gap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition: Option<CompositionMode>,
    pub p_and: f64,
    pub p_or: f64,
    pub beta: f64,
    pub connect: ConnectConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_weights: Option<Vec<f64>>,
}

impl Default for PlannerSpec {
    fn default() -> Self {
        let c = PlannerConfig::default();
        PlannerSpec {
            max_iters: c.max_iters,
            k_near: c.k_near,
            p_bias: c.p_bias,
            shots: c.shots,
            refine_iters: c.refine_iters,
            max_gap: c.max_gap,
            composition: None,
            p_and: c.composition.p_and,
            p_or: c.composition.p_or,
            beta: c.composition.beta,
            connect: c.connect,
            distance_weights: None,
        }
    }
}

/// On-disk scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub system: SystemKind,
    /// Seconds per step.
    pub dt: f64,
    pub bounds: BoundsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<Vec<f64>>,
    /// Seconds; the formula horizon must fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    pub predicates: Vec<PredicateSpec>,
    #[serde(default)]
    pub definitions: BTreeMap<String, String>,
    pub formula: String,
    /// Joint angles only for the arm; the pose is appended.
    pub q_init: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heuristic: Option<Heuristic>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub planner: PlannerSpec,
}

/// A loaded scenario with its system and both formula variants.
pub struct Scenario {
    pub file: ScenarioFile,
    pub system: Box<dyn SystemModel>,
    pub predicates: HashMap<String, Predicate>,
    /// Formula over the declared predicate scales.
    pub formula: Formula,
    /// Same formula with every predicate rescaled by the min-max divisor.
    pub minmax_formula: Formula,
    pub minmax_divisor: f64,
    pub q_init: Vec<f64>,
    pub heuristic: Heuristic,
    pub planner: PlannerConfig,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.file.name)
            .field("system", &self.system.name())
            .field("formula", &self.formula.to_string())
            .field("heuristic", &self.heuristic)
            .finish()
    }
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn seeds(&self) -> &[u64] {
        &self.file.seeds
    }

    pub fn horizon(&self) -> usize {
        self.formula.horizon()
    }

    /// The formula a heuristic plans and reports with.
    pub fn formula_for(&self, h: Heuristic) -> &Formula {
        match h {
            Heuristic::Minmax => &self.minmax_formula,
            _ => &self.formula,
        }
    }

    pub fn config_for(&self, h: Heuristic, seed: u64) -> PlannerConfig {
        let mut cfg = self.planner.clone();
        cfg.semantics = h.semantics();
        cfg.composition.mode = h.composition();
        cfg.seed = seed;
        cfg
    }

    pub fn from_json(text: &str) -> Result<Scenario, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de)
            .map_err(|e| HarnessError::schema(e.path().to_string(), e.inner().to_string()))?;
        Scenario::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Scenario, HarnessError> {
        let system = build_system(&file)?;
        let dim = system.state_dim();

        let mut predicates = HashMap::new();
        for (k, spec) in file.predicates.iter().enumerate() {
            let p = build_predicate(spec)
                .map_err(|m| HarnessError::schema(format!("predicates[{k}]"), m))?;
            p.validate()
                .map_err(|m| HarnessError::schema(format!("predicates[{k}]"), m))?;
            if p.min_dim() > dim || p.required_dim().is_some_and(|d| d != dim) {
                return Err(HarnessError::schema(
                    format!("predicates[{k}]"),
                    format!(
                        "predicate `{}` does not fit the {dim}-dimensional state",
                        p.id
                    ),
                ));
            }
            if predicates.insert(p.id.clone(), p).is_some() {
                return Err(HarnessError::schema(
                    format!("predicates[{k}].id"),
                    format!("duplicate predicate `{}`", spec.id),
                ));
            }
        }

        let opts = ParseOptions {
            dt: file.dt,
            definitions: file.definitions.clone(),
        };
        let formula = parse_formula_with(&file.formula, &predicates, &opts)?;
        if let Some(d) = file.duration {
            let needed = formula.horizon() as f64 * file.dt;
            if needed > d + 1e-9 {
                return Err(HarnessError::schema(
                    "duration",
                    format!("formula horizon {needed} s exceeds the scenario duration {d} s"),
                ));
            }
        }

        let divisor = minmax_divisor(predicates.values(), system.state_bounds());
        let rescaled: HashMap<String, Predicate> = predicates
            .iter()
            .map(|(k, p)| (k.clone(), p.clone().with_scale(divisor / 2.0)))
            .collect();
        let minmax_formula = parse_formula_with(&file.formula, &rescaled, &opts)?;

        let q_init = match system.as_planar_arm() {
            Some(arm) if file.q_init.len() == arm.n_joints() => arm.augment(&file.q_init),
            _ => file.q_init.clone(),
        };
        if !system.state_bounds().contains(&q_init) {
            return Err(HarnessError::schema(
                "q_init",
                "initial state is outside the state bounds",
            ));
        }

        let heuristic = match (file.heuristic, file.planner.composition) {
            (Some(h), Some(c)) if h != Heuristic::Minmax && h.composition() != c => {
                return Err(HarnessError::schema(
                    "planner.composition",
                    format!("composition disagrees with heuristic `{h}`"),
                ))
            }
            (Some(h), _) => h,
            (None, Some(CompositionMode::Stochastic)) => Heuristic::AgmStochastic,
            (None, _) => Heuristic::AgmFpl,
        };

        let ps = &file.planner;
        let planner = PlannerConfig {
            max_iters: ps.max_iters,
            k_near: ps.k_near,
            p_bias: ps.p_bias,
            shots: ps.shots,
            refine_iters: ps.refine_iters,
            max_gap: ps.max_gap,
            composition: CompositionConfig {
                mode: heuristic.composition(),
                p_and: ps.p_and,
                p_or: ps.p_or,
                beta: ps.beta,
            },
            semantics: heuristic.semantics(),
            connect: ps.connect.clone(),
            distance_weights: ps.distance_weights.clone(),
            seed: file.seeds.first().copied().unwrap_or(0),
        };
        planner
            .validate(dim)
            .map_err(|e| HarnessError::schema("planner", e.to_string()))?;
        if file.seeds.is_empty() {
            return Err(HarnessError::schema(
                "seeds",
                "at least one seed is required",
            ));
        }

        Ok(Scenario {
            file,
            system,
            predicates,
            formula,
            minmax_formula,
            minmax_divisor: divisor,
            q_init,
            heuristic,
            planner,
        })
    }
}

fn build_system(file: &ScenarioFile) -> Result<Box<dyn SystemModel>, HarnessError> {
    let (state, control) = (file.bounds.state.clone(), file.bounds.control.clone());
    Bounds::new(state.min.clone(), state.max.clone())
        .map_err(|e| HarnessError::schema("bounds.state", e.to_string()))?;
    Bounds::new(control.min.clone(), control.max.clone())
        .map_err(|e| HarnessError::schema("bounds.control", e.to_string()))?;
    if file.links.is_some() && file.system != SystemKind::PlanarArm {
        return Err(HarnessError::schema(
            "links",
            "only the planar arm takes links",
        ));
    }
    Ok(match file.system {
        SystemKind::Unicycle => Box::new(Unicycle::with_bounds(state, control, file.dt)?),
        SystemKind::DoubleIntegrator => Box::new(DoubleIntegrator::new(state, control, file.dt)?),
        SystemKind::PlanarArm => {
            let links = file.links.clone().ok_or_else(|| {
                HarnessError::schema("links", "the planar arm needs link lengths")
            })?;
            Box::new(PlanarArm::new(links, state, control, file.dt)?)
        }
    })
}

fn build_predicate(spec: &PredicateSpec) -> Result<Predicate, String> {
    let p = match (&spec.coeffs, &spec.shape) {
        (Some(coeffs), None) => {
            Predicate::affine(spec.id.clone(), coeffs.clone(), spec.offset, spec.threshold)
        }
        (None, Some(shape)) => {
            if spec.offset != 0.0 || spec.threshold != 0.0 {
                return Err(format!(
                    "predicate `{}`: offset/threshold apply to affine predicates only",
                    spec.id
                ));
            }
            match shape.clone() {
                ShapeSpec::Ball {
                    axes,
                    center,
                    radius,
                    inside,
                } => {
                    if !(radius > 0.0) {
                        return Err(format!("predicate `{}`: radius must be positive", spec.id));
                    }
                    Predicate::ball(spec.id.clone(), axes, center, radius, inside)
                }
                ShapeSpec::Box {
                    axes,
                    min,
                    max,
                    inside,
                } => Predicate::boxed(spec.id.clone(), axes, min, max, inside),
            }
        }
        _ => {
            return Err(format!(
                "predicate `{}` needs exactly one of `coeffs` or `shape`",
                spec.id
            ))
        }
    };
    let p = p.with_scale(spec.scale);
    Ok(match &spec.region_hint {
        Some(h) => p.with_hint(h.clone()),
        None => p,
    })
}

/// Largest `|h(s) − ς|` over the state box, across all predicates.
pub fn minmax_divisor<'p>(predicates: impl Iterator<Item = &'p Predicate>, bounds: &Bounds) -> f64 {
    predicates
        .map(|p| max_abs_margin(p, bounds))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

fn max_abs_margin(p: &Predicate, b: &Bounds) -> f64 {
    match &p.h {
        PredicateFn::Affine { coeffs, offset } => {
            let base = offset - p.threshold;
            let hi: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (c * b.min[i]).max(c * b.max[i]))
                .sum();
            let lo: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (c * b.min[i]).min(c * b.max[i]))
                .sum();
            (base + hi).abs().max((base + lo).abs())
        }
        PredicateFn::Distance { axes, center, .. } => {
            // ς = 2·sign·r, so |h − ς| = 2|d − r|.
            let r = p.threshold.abs() / 2.0;
            let far: f64 = axes
                .iter()
                .zip(center)
                .map(|(&a, c)| (b.min[a] - c).abs().max((b.max[a] - c).abs()).powi(2))
                .sum::<f64>()
                .sqrt();
            let near: f64 = axes
                .iter()
                .zip(center)
                .map(|(&a, c)| (c.clamp(b.min[a], b.max[a]) - c).powi(2))
                .sum::<f64>()
                .sqrt();
            2.0 * (far - r).max(r - near)
        }
        PredicateFn::BoxDistance { axes, min, max, .. } => {
            // Signed distance is convex, so its maximum is at a corner; the
            // deepest interior point is at most the smallest half-width in.
            let mut far: f64 = 0.0;
            for corner in 0..(1usize << axes.len()) {
                let d2: f64 = axes
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| {
                        let x = if corner >> k & 1 == 1 {
                            b.max[a]
                        } else {
                            b.min[a]
                        };
                        (min[k] - x).max(x - max[k]).max(0.0).powi(2)
                    })
                    .sum();
                far = far.max(d2.sqrt());
            }
            let depth = min
                .iter()
                .zip(max)
                .map(|(lo, hi)| (hi - lo) / 2.0)
                .fold(f64::INFINITY, f64::min);
            2.0 * far.max(depth)
        }
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json(&text)
}

pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn load_bundled(name: &str) -> Result<Scenario, HarnessError> {
    let text = bundled_scenario(name)
        .ok_or_else(|| HarnessError::schema("name", format!("no bundled scenario `{name}`")))?;
    Scenario::from_json(text)
}
