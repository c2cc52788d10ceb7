//! Closed-form probability generators for three families of sequential
//! experiments, each producing a distribution tagged with its own context.
//!
//! * photon chains — a polarized photon meets a sequence of filters; passing
//!   projects the polarization onto the filter axis (Malus's law), failing
//!   absorbs the photon for good.
//! * spin chains — a spin-½ particle traverses Stern–Gerlach magnets whose
//!   axes share one plane; outcome probabilities follow the Born rule
//!   cos²(Δ/2) and the spin collapses onto (or opposite) the measured axis.
//! * ball drawing — uniform draws from a box of attributed balls, with the
//!   box rebuilt between observations by refilling, removal, or replacement.
//!   These are enumerated in exact rational arithmetic and rendered to
//!   doubles only at the end, so e.g. ¾ · ⅔ is exactly ½.
//!
//! Angles are stored in degrees. Conversions keep the common eighth- and
//! quarter-turn angles exact, and the probability kernels snap those angles
//! to their exact probabilities, so the reference arrangements come out as
//! exact dyadic numbers rather than values a few ulps away.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_rational::Rational64;
use thiserror::Error;

use crate::prob::{AlternativeSet, Context, Distribution, JointDistribution, ProbError, StageDistribution};

/// Default tilt of the first spin axis: an eighth of a turn.
pub const DEFAULT_ALPHA: f64 = std::f64::consts::FRAC_PI_4;

/// Names of the built-in experimental arrangements, lookup order.
pub const BUILTIN_NAMES: [&str; 11] = [
    "l_one", "l_two", "m", "m_inv", "n", "n_inv", "k", "k_inv", "q", "q_inv", "l_u",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("experiment has no stages")]
    NoStages,
    #[error("angle {0} is not finite")]
    NonFiniteAngle(f64),
    #[error("initial selection matches no ball")]
    EmptyInitialSelection,
    #[error("box is empty before stage '{stage}'")]
    EmptyBoxReached { stage: String },
    #[error("ball '{ball}' has no attribute '{attribute}'")]
    UnknownAttribute { attribute: String, ball: String },
}

/// Degrees → radians; exact for dyadic fractions of a half-turn.
pub fn deg_to_rad(deg: f64) -> f64 {
    (deg / 180.0) * PI
}

/// Radians → degrees; inverse of [`deg_to_rad`] on the same angles.
pub fn rad_to_deg(rad: f64) -> f64 {
    (rad / PI) * 180.0
}

/// cos² of an angle given in degrees, with the quarter- and eighth-turn
/// values snapped to their exact probabilities.
pub(crate) fn cos2_deg(delta_deg: f64) -> f64 {
    let r = delta_deg.rem_euclid(180.0);
    if r == 0.0 {
        1.0
    } else if r == 90.0 {
        0.0
    } else if r == 45.0 || r == 135.0 {
        0.5
    } else {
        let c = ((r / 180.0) * PI).cos();
        c * c
    }
}

/// Born rule for spin-½ along coplanar axes: P(up) = cos²(Δ/2) for a new
/// axis at Δ degrees from the current spin direction, snapped like
/// [`cos2_deg`].
pub(crate) fn born_up_deg(delta_deg: f64) -> f64 {
    let r = delta_deg.rem_euclid(360.0);
    if r == 0.0 {
        1.0
    } else if r == 180.0 {
        0.0
    } else if r == 90.0 || r == 270.0 {
        0.5
    } else {
        let c = ((r / 360.0) * PI).cos();
        c * c
    }
}

/// A named measurement stage with its axis or filter angle.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAngle {
    pub label: String,
    pub angle_deg: f64,
}

impl LabeledAngle {
    pub fn new(label: impl Into<String>, angle_deg: f64) -> Self {
        Self {
            label: label.into(),
            angle_deg,
        }
    }
}

/// A photon of fixed initial polarization meeting a chain of filters.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonChainSpec {
    pub init_angle_deg: f64,
    pub filters: Vec<LabeledAngle>,
}

/// A spin-½ particle, initially up along `init_angle_deg`, measured along a
/// chain of Stern–Gerlach axes in the same plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinChainSpec {
    pub init_angle_deg: f64,
    pub axes: Vec<LabeledAngle>,
}

/// One ball with named attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub id: String,
    pub attributes: BTreeMap<String, String>,
}

impl Ball {
    pub fn new<I, K, V>(id: impl Into<String>, attributes: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self {
            id: id.into(),
            attributes: attributes
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }
}

/// Which universe balls go into the box before the first draw.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSelection {
    All,
    /// Conjunction of attribute=value requirements.
    Where(Vec<(String, String)>),
}

/// How the box is rebuilt after a draw, before the next stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Refill {
    /// Box becomes every universe ball whose `attr` equals the observed value.
    ByOutcome(String),
    /// The drawn ball stays out.
    RemoveDrawn,
    /// The drawn ball goes back; the box is unchanged.
    None,
}

/// One draw: observe `observe` on a uniformly drawn ball, then refill.
#[derive(Debug, Clone, PartialEq)]
pub struct BallStage {
    pub label: String,
    pub observe: String,
    pub refill: Refill,
}

/// A box of balls observed over a sequence of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct BallsProcessSpec {
    pub universe: Vec<Ball>,
    pub init: InitSelection,
    pub stages: Vec<BallStage>,
}

/// The model family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Photon(PhotonChainSpec),
    Spin(SpinChainSpec),
    Balls(BallsProcessSpec),
}

/// A complete experiment: the context id plus the model behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: String,
    pub model: ModelSpec,
}

impl ExperimentSpec {
    pub fn model_name(&self) -> &'static str {
        match self.model {
            ModelSpec::Photon(_) => "photon",
            ModelSpec::Spin(_) => "spin",
            ModelSpec::Balls(_) => "balls",
        }
    }

    /// Number of measurement stages.
    pub fn stage_count(&self) -> usize {
        match &self.model {
            ModelSpec::Photon(p) => p.filters.len(),
            ModelSpec::Spin(s) => s.axes.len(),
            ModelSpec::Balls(b) => b.stages.len(),
        }
    }

    /// The context this experiment defines.
    pub fn context(&self) -> Result<Context, ProbError> {
        Context::new(&self.id, self.describe())
    }

    fn describe(&self) -> String {
        match &self.model {
            ModelSpec::Photon(p) => format!(
                "photon at {}° through {} filter(s)",
                p.init_angle_deg,
                p.filters.len()
            ),
            ModelSpec::Spin(s) => format!(
                "spin-1/2 up along {}° through {} Stern-Gerlach stage(s)",
                s.init_angle_deg,
                s.axes.len()
            ),
            ModelSpec::Balls(b) => format!(
                "{} ball(s), {} draw(s)",
                b.universe.len(),
                b.stages.len()
            ),
        }
    }

    /// Exact outcome probabilities over all stages of this experiment.
    pub fn generate(&self) -> Result<StageDistribution, ModelError> {
        let context = self.context()?;
        match &self.model {
            ModelSpec::Photon(p) => photon_joint(p, context),
            ModelSpec::Spin(s) => spin_joint(s, context),
            ModelSpec::Balls(b) => balls_joint(b, context),
        }
    }
}

/// Walk every outcome path of a two-outcome chain, depth first, filling the
/// row-major probability table. `step` maps (stage, state) to the first
/// outcome's probability and the successor states of both outcomes.
fn binary_chain<S: Copy>(
    stages: usize,
    init: S,
    step: impl Fn(usize, S) -> (f64, S, S),
) -> Vec<f64> {
    fn walk<S: Copy>(
        probs: &mut [f64],
        stages: usize,
        depth: usize,
        cell: usize,
        state: S,
        weight: f64,
        step: &impl Fn(usize, S) -> (f64, S, S),
    ) {
        if depth == stages {
            probs[cell] = weight;
            return;
        }
        let (p, on_first, on_second) = step(depth, state);
        walk(probs, stages, depth + 1, cell << 1, on_first, weight * p, step);
        walk(
            probs,
            stages,
            depth + 1,
            (cell << 1) | 1,
            on_second,
            weight * (1.0 - p),
            step,
        );
    }

    let mut probs = vec![0.0; 1usize << stages];
    walk(&mut probs, stages, 0, 0, init, 1.0, &step);
    probs
}

fn require_finite(angle: f64) -> Result<(), ModelError> {
    if angle.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFiniteAngle(angle))
    }
}

fn assemble(
    sets: Vec<AlternativeSet>,
    context: Context,
    probs: Vec<f64>,
) -> Result<StageDistribution, ModelError> {
    Ok(if sets.len() == 1 {
        let set = sets.into_iter().next().expect("one set");
        StageDistribution::Single(Distribution::new(set, context, probs)?)
    } else {
        StageDistribution::Joint(JointDistribution::new(sets, context, probs)?)
    })
}

/// Photon filter chain: outcomes {out, not-out} per filter. The photon state
/// is a polarization angle until a filter absorbs it; from the absorbed state
/// every later "out" has probability exactly zero.
pub fn photon_joint(
    spec: &PhotonChainSpec,
    context: Context,
) -> Result<StageDistribution, ModelError> {
    if spec.filters.is_empty() {
        return Err(ModelError::NoStages);
    }
    require_finite(spec.init_angle_deg)?;
    for filter in &spec.filters {
        require_finite(filter.angle_deg)?;
    }
    let sets = spec
        .filters
        .iter()
        .map(|f| AlternativeSet::new(&f.label, ["out", "not-out"]))
        .collect::<Result<Vec<_>, _>>()?;

    let probs = binary_chain(spec.filters.len(), Some(spec.init_angle_deg), |i, state| {
        match state {
            Some(polarization) => {
                let theta = spec.filters[i].angle_deg;
                (cos2_deg(theta - polarization), Some(theta), None)
            }
            // absorbed: never passes another filter
            None => (0.0, None, None),
        }
    });
    assemble(sets, context, probs)
}

/// Stern–Gerlach chain: outcomes {up, down} per axis. Measuring along θ
/// collapses the spin onto θ (up) or θ + half a turn (down).
pub fn spin_joint(spec: &SpinChainSpec, context: Context) -> Result<StageDistribution, ModelError> {
    if spec.axes.is_empty() {
        return Err(ModelError::NoStages);
    }
    require_finite(spec.init_angle_deg)?;
    for axis in &spec.axes {
        require_finite(axis.angle_deg)?;
    }
    let sets = spec
        .axes
        .iter()
        .map(|a| AlternativeSet::new(&a.label, ["up", "down"]))
        .collect::<Result<Vec<_>, _>>()?;

    let probs = binary_chain(spec.axes.len(), spec.init_angle_deg, |i, spin| {
        let theta = spec.axes[i].angle_deg;
        (born_up_deg(theta - spin), theta, theta + 180.0)
    });
    assemble(sets, context, probs)
}

/// Universe indices selected by the init filter.
pub(crate) fn initial_box(spec: &BallsProcessSpec) -> Vec<usize> {
    spec.universe
        .iter()
        .enumerate()
        .filter(|(_, ball)| match &spec.init {
            InitSelection::All => true,
            InitSelection::Where(wanted) => wanted
                .iter()
                .all(|(attr, value)| ball.attributes.get(attr) == Some(value)),
        })
        .map(|(i, _)| i)
        .collect()
}

/// The box for the next stage, given what was just drawn and observed.
pub(crate) fn refill_box(
    universe: &[Ball],
    current: &[usize],
    drawn_pos: usize,
    observed: &str,
    refill: &Refill,
) -> Vec<usize> {
    match refill {
        Refill::ByOutcome(attr) => universe
            .iter()
            .enumerate()
            .filter(|(_, ball)| ball.attributes.get(attr).map(String::as_str) == Some(observed))
            .map(|(i, _)| i)
            .collect(),
        Refill::RemoveDrawn => current
            .iter()
            .enumerate()
            .filter(|&(pos, _)| pos != drawn_pos)
            .map(|(_, &i)| i)
            .collect(),
        Refill::None => current.to_vec(),
    }
}

/// Outcome labels of one stage: the observed attribute's values in universe
/// first-appearance order. Refilling can reach balls outside the initial
/// selection, so the whole universe defines the outcome space.
fn stage_outcomes(spec: &BallsProcessSpec, observe: &str) -> Vec<String> {
    let mut values: Vec<String> = Vec::new();
    for ball in &spec.universe {
        if let Some(v) = ball.attributes.get(observe) {
            if !values.iter().any(|seen| seen == v) {
                values.push(v.clone());
            }
        }
    }
    values
}

/// Ball-drawing process: outcomes are observed attribute values per stage.
/// Enumerates every draw sequence exactly in rational arithmetic; the only
/// rounding happens once per cell when converting to doubles.
pub fn balls_joint(
    spec: &BallsProcessSpec,
    context: Context,
) -> Result<StageDistribution, ModelError> {
    if spec.stages.is_empty() {
        return Err(ModelError::NoStages);
    }
    let start = initial_box(spec);
    if start.is_empty() {
        return Err(ModelError::EmptyInitialSelection);
    }

    let mut sets = Vec::new();
    let mut indices: Vec<BTreeMap<String, usize>> = Vec::new();
    for stage in &spec.stages {
        let values = stage_outcomes(spec, &stage.observe);
        if values.is_empty() {
            let ball = spec
                .universe
                .first()
                .map(|b| b.id.clone())
                .unwrap_or_default();
            return Err(ModelError::UnknownAttribute {
                attribute: stage.observe.clone(),
                ball,
            });
        }
        indices.push(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), i))
                .collect(),
        );
        sets.push(AlternativeSet::new(&stage.label, values)?);
    }

    let size: usize = sets.iter().map(AlternativeSet::len).product();
    let mut cells = vec![Rational64::new(0, 1); size];
    walk_draws(spec, &indices, &sets, 0, &start, Rational64::new(1, 1), 0, &mut cells)?;
    debug_assert_eq!(
        cells.iter().copied().sum::<Rational64>(),
        Rational64::new(1, 1)
    );

    let probs = cells
        .iter()
        .map(|q| *q.numer() as f64 / *q.denom() as f64)
        .collect();
    assemble(sets, context, probs)
}

#[allow(clippy::too_many_arguments)]
fn walk_draws(
    spec: &BallsProcessSpec,
    indices: &[BTreeMap<String, usize>],
    sets: &[AlternativeSet],
    stage: usize,
    current: &[usize],
    weight: Rational64,
    cell: usize,
    cells: &mut [Rational64],
) -> Result<(), ModelError> {
    if stage == spec.stages.len() {
        cells[cell] += weight;
        return Ok(());
    }
    let st = &spec.stages[stage];
    if current.is_empty() {
        return Err(ModelError::EmptyBoxReached {
            stage: st.label.clone(),
        });
    }
    let draw = weight * Rational64::new(1, current.len() as i64);
    for (pos, &ball_index) in current.iter().enumerate() {
        let ball = &spec.universe[ball_index];
        let observed =
            ball.attributes
                .get(&st.observe)
                .ok_or_else(|| ModelError::UnknownAttribute {
                    attribute: st.observe.clone(),
                    ball: ball.id.clone(),
                })?;
        let outcome = indices[stage][observed];
        let next = refill_box(&spec.universe, current, pos, observed, &st.refill);
        walk_draws(
            spec,
            indices,
            sets,
            stage + 1,
            &next,
            draw,
            cell * sets[stage].len() + outcome,
            cells,
        )?;
    }
    Ok(())
}

/// Whether a built-in arrangement depends on the tilt parameter α.
pub fn alpha_parameterized(name: &str) -> bool {
    matches!(name, "m" | "m_inv" | "q" | "q_inv")
}

/// Look up a built-in arrangement by name. `alpha` (radians) sets the tilt of
/// the first spin axis in the arrangements that use it.
pub fn builtin(name: &str, alpha: f64) -> Option<ExperimentSpec> {
    let alpha_deg = rad_to_deg(alpha);
    // spin prepared along the bisector of the two measured axes
    let bisector_deg = 45.0 + alpha_deg / 2.0;

    let four_balls = || {
        vec![
            Ball::new("b1", [("colour", "black"), ("composition", "plastic")]),
            Ball::new("b2", [("colour", "black"), ("composition", "plastic")]),
            Ball::new("b3", [("colour", "white"), ("composition", "plastic")]),
            Ball::new("b4", [("colour", "white"), ("composition", "wood")]),
        ]
    };
    let sized_balls = || {
        vec![
            Ball::new(
                "b1",
                [
                    ("colour", "black"),
                    ("composition", "plastic"),
                    ("size", "big"),
                ],
            ),
            Ball::new(
                "b2",
                [
                    ("colour", "black"),
                    ("composition", "plastic"),
                    ("size", "small"),
                ],
            ),
            Ball::new(
                "b3",
                [
                    ("colour", "white"),
                    ("composition", "plastic"),
                    ("size", "small"),
                ],
            ),
            Ball::new(
                "b4",
                [
                    ("colour", "white"),
                    ("composition", "wood"),
                    ("size", "small"),
                ],
            ),
        ]
    };
    let colour_first = || {
        vec![
            BallStage {
                label: "A".into(),
                observe: "colour".into(),
                refill: Refill::ByOutcome("colour".into()),
            },
            BallStage {
                label: "B".into(),
                observe: "composition".into(),
                refill: Refill::None,
            },
        ]
    };
    let composition_first = || {
        vec![
            BallStage {
                label: "B".into(),
                observe: "composition".into(),
                refill: Refill::ByOutcome("composition".into()),
            },
            BallStage {
                label: "A".into(),
                observe: "colour".into(),
                refill: Refill::None,
            },
        ]
    };

    let model = match name {
        "l_one" => ModelSpec::Photon(PhotonChainSpec {
            init_angle_deg: 90.0,
            filters: vec![LabeledAngle::new("B", 0.0)],
        }),
        "l_two" => ModelSpec::Photon(PhotonChainSpec {
            init_angle_deg: 90.0,
            filters: vec![LabeledAngle::new("A", 45.0), LabeledAngle::new("B", 0.0)],
        }),
        "m" => ModelSpec::Spin(SpinChainSpec {
            init_angle_deg: 0.0,
            axes: vec![
                LabeledAngle::new("A", alpha_deg),
                LabeledAngle::new("B", 90.0),
            ],
        }),
        "m_inv" => ModelSpec::Spin(SpinChainSpec {
            init_angle_deg: 0.0,
            axes: vec![
                LabeledAngle::new("B", 90.0),
                LabeledAngle::new("A", alpha_deg),
            ],
        }),
        "n" => ModelSpec::Balls(BallsProcessSpec {
            universe: four_balls(),
            init: InitSelection::All,
            stages: colour_first(),
        }),
        "n_inv" => ModelSpec::Balls(BallsProcessSpec {
            universe: four_balls(),
            init: InitSelection::All,
            stages: composition_first(),
        }),
        "k" => ModelSpec::Balls(BallsProcessSpec {
            universe: sized_balls(),
            init: InitSelection::Where(vec![("size".into(), "small".into())]),
            stages: colour_first(),
        }),
        "k_inv" => ModelSpec::Balls(BallsProcessSpec {
            universe: sized_balls(),
            init: InitSelection::Where(vec![("size".into(), "small".into())]),
            stages: composition_first(),
        }),
        "q" => ModelSpec::Spin(SpinChainSpec {
            init_angle_deg: bisector_deg,
            axes: vec![
                LabeledAngle::new("A", alpha_deg),
                LabeledAngle::new("B", 90.0),
            ],
        }),
        "q_inv" => ModelSpec::Spin(SpinChainSpec {
            init_angle_deg: bisector_deg,
            axes: vec![
                LabeledAngle::new("B", 90.0),
                LabeledAngle::new("A", alpha_deg),
            ],
        }),
        "l_u" => ModelSpec::Balls(BallsProcessSpec {
            universe: vec![
                Ball::new("r", [("colour", "red")]),
                Ball::new("g", [("colour", "green")]),
                Ball::new("y", [("colour", "yellow")]),
            ],
            init: InitSelection::All,
            stages: vec![
                BallStage {
                    label: "A".into(),
                    observe: "colour".into(),
                    refill: Refill::RemoveDrawn,
                },
                BallStage {
                    label: "B".into(),
                    observe: "colour".into(),
                    refill: Refill::None,
                },
            ],
        }),
        _ => return None,
    };
    Some(ExperimentSpec {
        id: name.to_owned(),
        model,
    })
}

/// All built-in arrangements, in [`BUILTIN_NAMES`] order.
pub fn builtin_contexts(alpha: f64) -> Vec<(String, ExperimentSpec)> {
    BUILTIN_NAMES
        .iter()
        .map(|name| {
            (
                (*name).to_owned(),
                builtin(name, alpha).expect("every listed name resolves"),
            )
        })
        .collect()
}
