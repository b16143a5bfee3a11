use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{controller_for, reward, sample_expression, train_step, Dataset, DsrError, Prior, SrConfig};
use crate::latex::{parse_plain, Normalizer};
use crate::mlm::MlmModel;
use crate::nn::Adam;
use crate::{Eval, ExprTree, Library, Token, Traversal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    #[default]
    Uniform,
    /// `n_points` evenly spaced values per variable, crossed.
    Grid,
}

/// A target expression with its data and search library. Stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: String,
    /// Target in the plain infix grammar, using only library tokens.
    pub expression: String,
    pub variables: Vec<String>,
    pub n_points: usize,
    pub range: [f64; 2],
    /// Library token names, in logit order.
    pub library: Vec<String>,
    #[serde(default)]
    pub sampling: Sampling,
}

const KOZA: [&str; 8] = ["add", "sub", "mul", "div", "sin", "cos", "exp", "log"];

fn spec(name: &str, expression: &str, variables: &[&str], range: [f64; 2]) -> BenchmarkSpec {
    BenchmarkSpec {
        name: name.to_owned(),
        expression: expression.to_owned(),
        variables: variables.iter().map(|v| v.to_string()).collect(),
        n_points: 20,
        range,
        library: KOZA.iter().chain(variables).map(|t| t.to_string()).collect(),
        sampling: Sampling::Uniform,
    }
}

/// The twelve Nguyen targets. The library has no constants, so constants are
/// written as `x/x`; `sqrt(x)` and `x^y` are written through `exp` and `log`.
pub fn builtin_specs() -> Vec<BenchmarkSpec> {
    let unit = [-1.0, 1.0];
    vec![
        spec("nguyen-1", "x*x*x + x*x + x", &["x"], unit),
        spec("nguyen-2", "x*x*x*x + x*x*x + x*x + x", &["x"], unit),
        spec("nguyen-3", "x*x*x*x*x + x*x*x*x + x*x*x + x*x + x", &["x"], unit),
        spec("nguyen-4", "x*x*x*x*x*x + x*x*x*x*x + x*x*x*x + x*x*x + x*x + x", &["x"], unit),
        spec("nguyen-5", "sin(x*x)*cos(x) - x/x", &["x"], unit),
        spec("nguyen-6", "sin(x) + sin(x + x*x)", &["x"], unit),
        spec("nguyen-7", "log(x + x/x) + log(x*x + x/x)", &["x"], [0.0, 2.0]),
        spec("nguyen-8", "exp(log(x) / (x/x + x/x))", &["x"], [0.0, 4.0]),
        spec("nguyen-9", "sin(x) + sin(y*y)", &["x", "y"], [0.0, 1.0]),
        spec("nguyen-10", "(sin(x) + sin(x))*cos(y)", &["x", "y"], [0.0, 1.0]),
        spec("nguyen-11", "exp(y*log(x))", &["x", "y"], [0.0, 1.0]),
        spec("nguyen-12", "x*x*x*x - x*x*x + y*y/(y/y + y/y) - y", &["x", "y"], [0.0, 1.0]),
    ]
}

/// Dense check points per variable for the numeric recovery test.
const CHECK_POINTS_PER_VARIABLE: usize = 1000;
const CHECK_TOLERANCE: f64 = 1e-10;
/// Candidates below this reward cannot pass the numeric check.
const RECOVERY_REWARD_FLOOR: f64 = 1.0 - 1e-6;

/// A validated spec with its library, target and data.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub spec: BenchmarkSpec,
    pub lib: Library,
    pub target: ExprTree,
    pub data: Dataset,
    canonical: ExprTree,
    check_points: Vec<Vec<f64>>,
    check_values: Vec<Option<f64>>,
}

fn evaluate(t: &Traversal, lib: &Library, x: &[f64]) -> Option<f64> {
    match t.evaluate(lib, x) {
        Ok(Eval::Value(v)) => Some(v),
        _ => None,
    }
}

impl Benchmark {
    /// Builds the library, parses the target and draws the training points
    /// from `data_seed`.
    pub fn new(spec: BenchmarkSpec, data_seed: u64) -> Result<Benchmark, DsrError> {
        let mismatch = |reason: String| DsrError::SpecMismatch { name: spec.name.clone(), reason };
        let tokens: Vec<Token> = spec.library.iter().map(|n| Token::infer(n)).collect();
        let lib = Library::new(spec.name.clone(), tokens).map_err(|e| mismatch(e.to_string()))?;
        let mut lib_vars: Vec<&str> = lib.variable_names();
        let mut spec_vars: Vec<&str> = spec.variables.iter().map(String::as_str).collect();
        lib_vars.sort_unstable();
        spec_vars.sort_unstable();
        if lib_vars != spec_vars {
            return Err(mismatch(format!(
                "variables {spec_vars:?} differ from library variables {lib_vars:?}"
            )));
        }
        let [lo, hi] = spec.range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || spec.n_points == 0 {
            return Err(mismatch("need a finite range lo < hi and n_points >= 1".into()));
        }
        let target = parse_plain(&spec.expression, &lib)
            .map_err(|e| mismatch(format!("target does not parse: {e}")))?;
        let target_t = crate::expr::tree_to_traversal(&target, &lib)
            .map_err(|e| mismatch(format!("target is not over the library: {e}")))?;
        let canonical = Normalizer::for_library(&lib).apply(&target);

        let k = lib.variables().len();
        let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
        let points: Vec<Vec<f64>> = match spec.sampling {
            Sampling::Uniform => {
                (0..spec.n_points).map(|_| (0..k).map(|_| rng.random_range(lo..hi)).collect()).collect()
            }
            Sampling::Grid => {
                let axis: Vec<f64> = if spec.n_points == 1 {
                    vec![(lo + hi) / 2.0]
                } else {
                    (0..spec.n_points)
                        .map(|i| lo + (hi - lo) * i as f64 / (spec.n_points - 1) as f64)
                        .collect()
                };
                let mut pts = vec![Vec::new()];
                for _ in 0..k {
                    pts = pts
                        .into_iter()
                        .flat_map(|p| axis.iter().map(move |&a| [p.clone(), vec![a]].concat()))
                        .collect();
                }
                pts
            }
        };
        let y: Vec<f64> = points
            .iter()
            .map(|x| evaluate(&target_t, &lib, x))
            .collect::<Option<_>>()
            .ok_or_else(|| mismatch("target is invalid at a training point".into()))?;
        let data = Dataset::new(points, y).map_err(|_| mismatch("target is constant on the data".into()))?;

        let mut check_rng = ChaCha8Rng::seed_from_u64(data_seed ^ 0x5eed_c0de);
        let check_points: Vec<Vec<f64>> = (0..CHECK_POINTS_PER_VARIABLE * k)
            .map(|_| (0..k).map(|_| check_rng.random_range(lo..hi)).collect())
            .collect();
        let check_values = check_points.iter().map(|x| evaluate(&target_t, &lib, x)).collect();
        Ok(Benchmark { spec, lib, target, data, canonical, check_points, check_values })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    /// Exact recovery: the normalized trees agree, or the candidate matches
    /// the target within `1e-10` everywhere on dense held-out points inside
    /// the training range (points where the target itself is invalid are
    /// skipped).
    pub fn recovered(&self, candidate: &ExprTree) -> bool {
        if Normalizer::for_library(&self.lib).apply(candidate) == self.canonical {
            return true;
        }
        let Ok(t) = crate::expr::tree_to_traversal(candidate, &self.lib) else { return false };
        self.numerically_equal(&t)
    }

    fn numerically_equal(&self, t: &Traversal) -> bool {
        self.check_points.iter().zip(&self.check_values).all(|(x, target)| match target {
            None => true,
            Some(y) => evaluate(t, &self.lib, x).is_some_and(|v| (v - y).abs() < CHECK_TOLERANCE),
        })
    }
}

/// Result of one independent search.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub benchmark: String,
    pub run: usize,
    pub seed: u64,
    pub lambda: f64,
    pub with_mlm: bool,
    pub recovered: bool,
    /// Training iterations until recovery, or `max_steps`.
    pub steps: usize,
    /// Invalid samples over all samples of the run.
    pub invalid_fraction: f64,
    pub best_expression: String,
    pub best_reward: f64,
    /// Best reward of each iteration's batch.
    pub reward_trace: Vec<f64>,
    /// Every sampled traversal, in order; kept only when requested.
    pub trajectory: Option<Vec<Vec<usize>>>,
}

/// One search run with seed `config.seed + run`.
pub fn run_single(
    bench: &Benchmark,
    config: &SrConfig,
    prior: Option<&MlmModel<f64>>,
    run: usize,
    record_trajectory: bool,
) -> Result<RunMetrics, DsrError> {
    config.validate()?;
    if let Some(m) = prior {
        m.check_alignment(&bench.lib)?;
    }
    let lib = &bench.lib;
    let seed = config.seed.wrapping_add(run as u64);
    let (mut controller, mut rng) = controller_for(lib, config, seed);
    let mut opt = Adam::new(config.learning_rate, controller.params.len());
    let cs = config.constraint_set();
    let prior = prior.map(|model| Prior { model, lambda: config.lambda });

    let (mut n_invalid, mut n_total) = (0usize, 0usize);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut trace = Vec::new();
    let mut trajectory = record_trajectory.then(Vec::new);
    let mut checked: HashSet<Vec<usize>> = HashSet::new();
    let mut solved = None;
    for step in 1..=config.max_steps {
        let episodes = (0..config.batch_size)
            .map(|_| sample_expression(&controller, prior.as_ref(), &cs, lib, config, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        let outcomes: Vec<_> = episodes.iter().map(|e| reward(&e.traversal(), lib, &bench.data)).collect();
        let rewards: Vec<f64> = outcomes.iter().map(|o| o.reward).collect();
        n_invalid += outcomes.iter().filter(|o| o.invalid).count();
        n_total += episodes.len();
        let mut step_best = f64::NEG_INFINITY;
        for (e, &r) in episodes.iter().zip(&rewards) {
            step_best = step_best.max(r);
            if r > best.0 {
                best = (r, e.tokens.clone());
            }
            if solved.is_none() && r >= RECOVERY_REWARD_FLOOR && checked.insert(e.tokens.clone()) {
                let tree = e.traversal().to_tree(lib).expect("sampled traversals are complete");
                if bench.recovered(&tree) {
                    solved = Some(step);
                    best = (r, e.tokens.clone());
                }
            }
        }
        trace.push(step_best);
        if let Some(t) = trajectory.as_mut() {
            t.extend(episodes.iter().map(|e| e.tokens.clone()));
        }
        if solved.is_some() {
            break;
        }
        train_step(&mut controller, &mut opt, &episodes, &rewards, config);
    }
    let best_expression = Traversal(best.1).to_tree(lib).map(|t| t.render_infix()).unwrap_or_default();
    Ok(RunMetrics {
        benchmark: bench.spec.name.clone(),
        run,
        seed,
        lambda: if prior.is_some() { config.lambda } else { 0.0 },
        with_mlm: prior.is_some(),
        recovered: solved.is_some(),
        steps: solved.unwrap_or(config.max_steps),
        invalid_fraction: n_invalid as f64 / n_total as f64,
        best_expression,
        best_reward: best.0,
        reward_trace: trace,
        trajectory,
    })
}

/// Independent runs in parallel, returned in run order.
pub fn run_benchmark(
    bench: &Benchmark,
    config: &SrConfig,
    n_runs: usize,
    prior: Option<&MlmModel<f64>>,
) -> Result<Vec<RunMetrics>, DsrError> {
    if n_runs == 0 {
        return Err(DsrError::InvalidConfig("n_runs must be at least 1".into()));
    }
    config.validate()?;
    (0..n_runs).into_par_iter().map(|run| run_single(bench, config, prior, run, false)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nguyen(k: usize) -> Benchmark {
        Benchmark::new(builtin_specs()[k - 1].clone(), 0).unwrap()
    }

    #[test]
    fn builtins_are_valid() {
        for s in builtin_specs() {
            let b = Benchmark::new(s.clone(), 1).unwrap();
            assert_eq!(b.data.len(), 20, "{}", s.name);
        }
    }

    #[test]
    fn builtin_targets_match_their_closed_forms() {
        let closed: [fn(f64, f64) -> f64; 12] = [
            |x, _| x.powi(3) + x.powi(2) + x,
            |x, _| x.powi(4) + x.powi(3) + x.powi(2) + x,
            |x, _| (1..=5).map(|k| x.powi(k)).sum(),
            |x, _| (1..=6).map(|k| x.powi(k)).sum(),
            |x, _| (x * x).sin() * x.cos() - 1.0,
            |x, _| x.sin() + (x + x * x).sin(),
            |x, _| (x + 1.0).ln() + (x * x + 1.0).ln(),
            |x, _| x.sqrt(),
            |x, y| x.sin() + (y * y).sin(),
            |x, y| 2.0 * x.sin() * y.cos(),
            |x, y| x.powf(y),
            |x, y| x.powi(4) - x.powi(3) + 0.5 * y * y - y,
        ];
        for (k, f) in closed.iter().enumerate() {
            let b = nguyen(k + 1);
            for (p, y) in b.data.points.iter().zip(&b.data.y) {
                let yv = if p.len() > 1 { p[1] } else { 0.0 };
                assert!((f(p[0], yv) - y).abs() < 1e-12, "nguyen-{}", k + 1);
            }
        }
    }

    #[test]
    fn recovery_checks() {
        let b = nguyen(1);
        let lib = &b.lib;
        let parse = |s: &str| parse_plain(s, lib).unwrap();
        assert!(b.recovered(&b.target));
        assert!(b.recovered(&parse("x + x*x + x*x*x")));
        assert!(b.recovered(&parse("x*(x*x + x + x/x)")));
        assert!(!b.recovered(&parse("x*x*x + x*x")));
    }

    #[test]
    fn one_step_run_is_well_formed() {
        let b = nguyen(1);
        let cfg = SrConfig { max_steps: 1, batch_size: 50, ..SrConfig::default() };
        let runs = run_benchmark(&b, &cfg, 1, None).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].steps, 1);
        assert!((0.0..=1.0).contains(&runs[0].invalid_fraction));
        assert!(matches!(run_benchmark(&b, &cfg, 0, None), Err(DsrError::InvalidConfig(_))));
    }

    #[test]
    fn spec_errors() {
        let mut s = builtin_specs()[0].clone();
        s.expression = "x^3".into();
        assert!(matches!(Benchmark::new(s, 0), Err(DsrError::SpecMismatch { .. })));
        let mut s = builtin_specs()[0].clone();
        s.variables = vec!["y".into()];
        assert!(matches!(Benchmark::new(s, 0), Err(DsrError::SpecMismatch { .. })));
    }

    #[test]
    fn spec_json_shape() {
        let s = &builtin_specs()[10];
        let v = serde_json::to_value(s).unwrap();
        for key in ["name", "expression", "variables", "n_points", "range", "library"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: BenchmarkSpec = serde_json::from_value(v).unwrap();
        assert_eq!(&back, s);
    }
}
