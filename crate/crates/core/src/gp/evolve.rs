use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::program::{Function, Gene, GpProgram};
use crate::data::{shuffled_indices, QualityDataset};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

pub const GP_FORMAT_VERSION: u32 = 1;

/// Attempts a variation operator makes to respect the depth cap before
/// falling back to a copy of the parent.
const DEPTH_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpParams {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub stopping_fitness: f64,
    /// Inclusive range the full-method depth is drawn from.
    pub init_depth: (usize, usize),
    pub parsimony_coefficient: f64,
    pub p_crossover: f64,
    pub p_subtree_mutation: f64,
    pub p_hoist_mutation: f64,
    pub p_point_mutation: f64,
    pub p_point_replace: f64,
    pub max_samples: f64,
    pub const_range: (f64, f64),
    /// Variation operators never produce deeper programs. `None` disables.
    pub max_depth: Option<usize>,
    pub function_set: Vec<Function>,
    pub seed: u64,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            population_size: 5000,
            generations: 200,
            tournament_size: 20,
            stopping_fitness: 0.0,
            init_depth: (2, 6),
            parsimony_coefficient: 0.001,
            p_crossover: 0.9,
            p_subtree_mutation: 0.01,
            p_hoist_mutation: 0.01,
            p_point_mutation: 0.01,
            p_point_replace: 0.05,
            max_samples: 0.8,
            const_range: (-1.0, 1.0),
            max_depth: Some(17),
            function_set: Function::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if self.population_size == 0 || self.generations == 0 || self.tournament_size == 0 {
            return bad("population_size, generations and tournament_size must be positive");
        }
        let probs = [
            self.p_crossover,
            self.p_subtree_mutation,
            self.p_hoist_mutation,
            self.p_point_mutation,
        ];
        if probs.iter().any(|p| !(*p >= 0.0)) || probs.iter().sum::<f64>() > 1.0 + 1e-12 {
            return bad("operator probabilities must be non-negative and sum to at most 1");
        }
        if !(0.0..=1.0).contains(&self.p_point_replace) {
            return bad("p_point_replace must lie in [0,1]");
        }
        if !(self.max_samples > 0.0 && self.max_samples <= 1.0) {
            return bad("max_samples must lie in (0,1]");
        }
        if self.init_depth.0 > self.init_depth.1 {
            return bad("init_depth range is empty");
        }
        if !(self.const_range.0 <= self.const_range.1) {
            return bad("const_range is empty");
        }
        if self.function_set.is_empty() {
            return bad("function_set is empty");
        }
        if !(self.parsimony_coefficient >= 0.0) {
            return bad("parsimony_coefficient must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    /// RMSE; `+inf` when any prediction is non-finite.
    pub raw: f64,
    /// `raw + parsimony * size`, the quantity selection minimises.
    pub penalized: f64,
    pub size: usize,
}

/// RMSE of `p` against `y` on column-major `columns`, plus the parsimony term.
pub fn fitness(p: &GpProgram, columns: &[Vec<f64>], y: &[f64], parsimony: f64) -> Fitness {
    let pred = p.evaluate_columns(columns, y.len());
    let mse = pred.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    let raw = if mse.is_finite() { mse.sqrt() } else { f64::INFINITY };
    Fitness {
        raw,
        penalized: raw + parsimony * p.len() as f64,
        size: p.len(),
    }
}

fn better(a: &Fitness, ia: usize, b: &Fitness, ib: usize) -> bool {
    (a.penalized, a.size, ia) < (b.penalized, b.size, ib)
}

fn argmin(fit: &[Fitness]) -> usize {
    (1..fit.len()).fold(0, |best, i| if better(&fit[i], i, &fit[best], best) { i } else { best })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tournament {
    pub size: usize,
    /// Draws are with replacement in evolution; without replacement and
    /// `size == n` gives an exhaustive tournament.
    pub replacement: bool,
}

/// Index of the tournament winner. Ties go to the smaller program, then the
/// earlier index.
pub fn tournament_select(fit: &[Fitness], t: Tournament, rng: &mut Rng) -> usize {
    assert!(!fit.is_empty() && t.size >= 1, "tournament needs a population and k >= 1");
    let contenders: Vec<usize> = if t.replacement {
        (0..t.size).map(|_| rng.random_range(0..fit.len())).collect()
    } else {
        rand::seq::index::sample(rng, fit.len(), t.size.min(fit.len())).into_vec()
    };
    contenders
        .into_iter()
        .reduce(|best, i| if better(&fit[i], i, &fit[best], best) { i } else { best })
        .expect("non-empty tournament")
}

fn random_terminal(feature_count: usize, const_range: (f64, f64), rng: &mut Rng) -> Gene {
    // Constants occupy one slot next to the features.
    let pick = rng.random_range(0..=feature_count);
    if pick == feature_count {
        Gene::Const(if const_range.0 == const_range.1 {
            const_range.0
        } else {
            rng.random_range(const_range.0..=const_range.1)
        })
    } else {
        Gene::Feature(pick)
    }
}

/// A full tree: every leaf at exactly `depth`.
pub fn full_tree(
    depth: usize,
    feature_count: usize,
    functions: &[Function],
    const_range: (f64, f64),
    rng: &mut Rng,
) -> GpProgram {
    fn grow(
        d: usize,
        f: usize,
        fs: &[Function],
        cr: (f64, f64),
        rng: &mut Rng,
        out: &mut Vec<Gene>,
    ) {
        if d == 0 {
            out.push(random_terminal(f, cr, rng));
            return;
        }
        let func = fs[rng.random_range(0..fs.len())];
        out.push(Gene::Func(func));
        for _ in 0..func.arity() {
            grow(d - 1, f, fs, cr, rng, out);
        }
    }
    let mut nodes = Vec::new();
    grow(depth, feature_count, functions, const_range, rng, &mut nodes);
    GpProgram { nodes }
}

fn random_depth(params: &GpParams, rng: &mut Rng) -> usize {
    rng.random_range(params.init_depth.0..=params.init_depth.1)
}

pub fn init_population(params: &GpParams, feature_count: usize) -> Result<Vec<GpProgram>> {
    params.validate()?;
    if feature_count == 0 {
        return Err(Error::InvalidParam("feature_count must be at least 1".into()));
    }
    let init_tag = seed::tag("gp-init");
    Ok((0..params.population_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::derived_rng(params.seed, &[init_tag, i as u64]);
            let d = random_depth(params, &mut rng);
            full_tree(d, feature_count, &params.function_set, params.const_range, &mut rng)
        })
        .collect())
}

fn splice(a: &GpProgram, i: usize, donor: &[Gene]) -> GpProgram {
    let end = a.subtree_end(i);
    let mut nodes = Vec::with_capacity(a.len() - (end - i) + donor.len());
    nodes.extend_from_slice(&a.nodes[..i]);
    nodes.extend_from_slice(donor);
    nodes.extend_from_slice(&a.nodes[end..]);
    GpProgram { nodes }
}

/// Replaces the subtree of `a` rooted at `i` with the subtree of `b` rooted at `j`.
pub fn crossover_at(a: &GpProgram, i: usize, b: &GpProgram, j: usize) -> GpProgram {
    splice(a, i, &b.nodes[j..b.subtree_end(j)])
}

fn within_cap(p: &GpProgram, cap: Option<usize>) -> bool {
    cap.is_none_or(|c| p.depth() <= c)
}

pub fn crossover(a: &GpProgram, b: &GpProgram, max_depth: Option<usize>, rng: &mut Rng) -> GpProgram {
    for _ in 0..DEPTH_RETRIES {
        let i = rng.random_range(0..a.len());
        let j = rng.random_range(0..b.len());
        let child = crossover_at(a, i, b, j);
        if within_cap(&child, max_depth) {
            return child;
        }
    }
    a.clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationKind {
    Subtree,
    Hoist,
    Point,
}

impl FromStr for MutationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subtree" => Ok(MutationKind::Subtree),
            "hoist" => Ok(MutationKind::Hoist),
            "point" => Ok(MutationKind::Point),
            _ => Err(Error::OutOfRange {
                what: "mutation kind",
                value: s.into(),
                allowed: "subtree, hoist, point".into(),
            }),
        }
    }
}

pub fn mutate(
    p: &GpProgram,
    kind: MutationKind,
    params: &GpParams,
    feature_count: usize,
    rng: &mut Rng,
) -> GpProgram {
    match kind {
        MutationKind::Subtree => {
            for _ in 0..DEPTH_RETRIES {
                let i = rng.random_range(0..p.len());
                let d = random_depth(params, rng);
                let fresh = full_tree(d, feature_count, &params.function_set, params.const_range, rng);
                let child = splice(p, i, &fresh.nodes);
                if within_cap(&child, params.max_depth) {
                    return child;
                }
            }
            p.clone()
        }
        MutationKind::Hoist => {
            let i = rng.random_range(0..p.len());
            let end = p.subtree_end(i);
            let j = rng.random_range(i..end);
            let inner = &p.nodes[j..p.subtree_end(j)];
            splice(p, i, inner)
        }
        MutationKind::Point => {
            let mut child = p.clone();
            for g in child.nodes.iter_mut() {
                if rng.random::<f64>() >= params.p_point_replace {
                    continue;
                }
                *g = match *g {
                    Gene::Func(f) => {
                        let same: Vec<Function> = params
                            .function_set
                            .iter()
                            .copied()
                            .filter(|h| h.arity() == f.arity())
                            .collect();
                        if same.is_empty() {
                            Gene::Func(f)
                        } else {
                            Gene::Func(same[rng.random_range(0..same.len())])
                        }
                    }
                    _ => random_terminal(feature_count, params.const_range, rng),
                };
            }
            child
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Crossover,
    Mutation(MutationKind),
    Reproduction,
}

pub fn choose_operator(params: &GpParams, rng: &mut Rng) -> Operator {
    let u: f64 = rng.random();
    let mut acc = params.p_crossover;
    if u < acc {
        return Operator::Crossover;
    }
    for (p, kind) in [
        (params.p_subtree_mutation, MutationKind::Subtree),
        (params.p_hoist_mutation, MutationKind::Hoist),
        (params.p_point_mutation, MutationKind::Point),
    ] {
        acc += p;
        if u < acc {
            return Operator::Mutation(kind);
        }
    }
    Operator::Reproduction
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    /// Best and mean penalized fitness on this generation's row subsample.
    pub best_penalized: f64,
    /// Mean over finite entries; `non_finite` counts the rest.
    pub mean_penalized: f64,
    pub non_finite: usize,
    pub best_raw: f64,
    pub mean_size: f64,
    /// Running best on the full training set.
    pub best_ever_penalized: f64,
    pub best_ever_raw: f64,
}

/// Trained program bundled with what is needed to score new rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub program: GpProgram,
    pub sexpr: String,
    pub infix: String,
    pub params: GpParams,
    pub train_rmse: f64,
}

impl GpModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_names.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.feature_names.len(),
            });
        }
        self.program.evaluate(x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: GpModel = serde_json::from_str(s)?;
        if m.format_version != GP_FORMAT_VERSION {
            return Err(Error::Version(m.format_version));
        }
        GpProgram::new(m.program.nodes.clone())?;
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub model: GpModel,
    pub best: Fitness,
    pub log: Vec<GenerationLog>,
}

fn gather(columns: &[Vec<f64>], rows: &[usize]) -> Vec<Vec<f64>> {
    columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect()
}

/// Generational loop. Generation 0 is the initial population; the loop stops
/// after `generations` entries or once the best-ever raw RMSE reaches
/// `stopping_fitness`.
pub fn evolve(ds: &QualityDataset, params: &GpParams) -> Result<Evolution> {
    params.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let f = ds.feature_count();
    let columns = ds.columns();
    let y = ds.mos();
    let n = y.len();
    let n_sub = ((params.max_samples * n as f64).round() as usize).clamp(1, n);
    let (rows_tag, breed_tag) = (seed::tag("gp-rows"), seed::tag("gp-breed"));
    let tournament = Tournament {
        size: params.tournament_size,
        replacement: true,
    };

    let mut pop = init_population(params, f)?;
    let mut best: Option<(GpProgram, Fitness)> = None;
    let mut log = Vec::with_capacity(params.generations);
    let mut prev_fit: Vec<Fitness> = Vec::new();

    for gen in 0..params.generations {
        if gen > 0 {
            let (parents, fit) = (&pop, &prev_fit);
            pop = (0..params.population_size)
                .into_par_iter()
                .map(|i| {
                    let mut rng = seed::derived_rng(params.seed, &[breed_tag, gen as u64, i as u64]);
                    let op = choose_operator(params, &mut rng);
                    let a = &parents[tournament_select(fit, tournament, &mut rng)];
                    match op {
                        Operator::Crossover => {
                            let b = &parents[tournament_select(fit, tournament, &mut rng)];
                            crossover(a, b, params.max_depth, &mut rng)
                        }
                        Operator::Mutation(kind) => mutate(a, kind, params, f, &mut rng),
                        Operator::Reproduction => a.clone(),
                    }
                })
                .collect();
        }

        let (sub_cols, sub_y) = if n_sub == n {
            (columns.clone(), y.clone())
        } else {
            let mut rows = shuffled_indices(n, seed::derive(params.seed, &[rows_tag, gen as u64]));
            rows.truncate(n_sub);
            let sy = rows.iter().map(|&r| y[r]).collect();
            (gather(&columns, &rows), sy)
        };
        let fit: Vec<Fitness> = pop
            .par_iter()
            .map(|p| fitness(p, &sub_cols, &sub_y, params.parsimony_coefficient))
            .collect();

        let gi = argmin(&fit);
        let full = fitness(&pop[gi], &columns, &y, params.parsimony_coefficient);
        if best.as_ref().is_none_or(|(_, b)| full.penalized < b.penalized) {
            best = Some((pop[gi].clone(), full));
        }
        let (_, bf) = best.as_ref().expect("set above");
        let finite: Vec<f64> = fit.iter().map(|x| x.penalized).filter(|v| v.is_finite()).collect();
        log.push(GenerationLog {
            generation: gen,
            best_penalized: fit[gi].penalized,
            mean_penalized: if finite.is_empty() {
                f64::INFINITY
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            },
            non_finite: fit.len() - finite.len(),
            best_raw: fit[gi].raw,
            mean_size: pop.iter().map(|p| p.len() as f64).sum::<f64>() / pop.len() as f64,
            best_ever_penalized: bf.penalized,
            best_ever_raw: bf.raw,
        });
        prev_fit = fit;
        if bf.raw <= params.stopping_fitness {
            break;
        }
    }

    let (program, best) = best.expect("at least one generation");
    Ok(Evolution {
        model: GpModel {
            format_version: GP_FORMAT_VERSION,
            feature_names: ds.column_names().to_vec(),
            sexpr: program.to_sexpr(),
            infix: program.to_infix(),
            program,
            params: params.clone(),
            train_rmse: best.raw,
        },
        best,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;

    fn fit_of(pen: &[f64], sizes: &[usize]) -> Vec<Fitness> {
        pen.iter()
            .zip(sizes)
            .map(|(&p, &s)| Fitness { raw: p, penalized: p, size: s })
            .collect()
    }

    fn two_feature_ds(n: usize, seed_: u64, target: impl Fn(f64, f64) -> f64) -> QualityDataset {
        let mut rng = seed::rng(seed_);
        let samples = (0..n)
            .map(|_| {
                let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
                Sample { features: vec![a, b], mos: target(a, b), ci95: None }
            })
            .collect();
        QualityDataset::new(vec!["x0".into(), "x1".into()], samples).unwrap()
    }

    #[test]
    fn perfect_program_pays_only_parsimony() {
        let p = GpProgram::new(vec![Gene::Func(Function::Add), Gene::Feature(0), Gene::Feature(1)]).unwrap();
        let cols = vec![vec![1.0, 2.0], vec![0.5, 1.0]];
        let f = fitness(&p, &cols, &[1.5, 3.0], 0.001);
        assert_eq!(f.raw, 0.0);
        assert!((f.penalized - 0.003).abs() < 1e-15);
    }

    #[test]
    fn constant_mean_program_scores_population_std() {
        let y = [1.0, 2.0, 4.0, 5.0, 3.5];
        let mean = y.iter().sum::<f64>() / 5.0;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
        let p = GpProgram::new(vec![Gene::Const(mean)]).unwrap();
        let f = fitness(&p, &[vec![0.0; 5]], &y, 0.0);
        assert!((f.raw - sd).abs() < 1e-12);
    }

    #[test]
    fn equal_error_smaller_program_wins() {
        let fit = fit_of(&[0.5, 0.5], &[9, 5]);
        let mut rng = seed::rng(1);
        let t = Tournament { size: 2, replacement: false };
        assert_eq!(tournament_select(&fit, t, &mut rng), 1);
    }

    #[test]
    fn exhaustive_tournament_finds_global_best() {
        let pen: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64).collect();
        let fit = fit_of(&pen, &[3; 50]);
        let best = pen.iter().position(|&v| v == 0.0).unwrap();
        let mut rng = seed::rng(2);
        for _ in 0..20 {
            let t = Tournament { size: 50, replacement: false };
            assert_eq!(tournament_select(&fit, t, &mut rng), best);
        }
    }

    #[test]
    fn tournament_of_one_is_uniform() {
        let fit = fit_of(&[1.0, 2.0, 3.0, 4.0], &[1; 4]);
        let mut rng = seed::rng(3);
        let mut counts = [0usize; 4];
        let draws = 40_000;
        for _ in 0..draws {
            counts[tournament_select(&fit, Tournament { size: 1, replacement: true }, &mut rng)] += 1;
        }
        // binomial 4 sigma around draws/4
        let sd = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 / 4.0).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn tournament_of_twenty_favours_the_better() {
        let fit = fit_of(&[1.0, 2.0], &[1, 1]);
        let mut rng = seed::rng(4);
        let wins = (0..10_000)
            .filter(|_| tournament_select(&fit, Tournament { size: 20, replacement: true }, &mut rng) == 0)
            .count();
        assert!(wins as f64 / 10_000.0 >= 0.99);
    }

    #[test]
    fn full_init_has_uniform_leaf_depth() {
        let params = GpParams { population_size: 200, init_depth: (2, 2), seed: 5, ..GpParams::default() };
        let pop = init_population(&params, 4).unwrap();
        assert_eq!(pop.len(), 200);
        for p in &pop {
            let depths = p.node_depths();
            for (g, d) in p.nodes.iter().zip(depths) {
                if g.arity() == 0 {
                    assert_eq!(d, 2, "{}", p.to_sexpr());
                } else {
                    assert!(d < 2);
                }
            }
        }
    }

    #[test]
    fn default_population_size_and_determinism() {
        let params = GpParams { seed: 6, ..GpParams::default() };
        let a = init_population(&params, 10).unwrap();
        assert_eq!(a.len(), 5000);
        assert_eq!(a, init_population(&params, 10).unwrap());
        assert!(a.iter().all(|p| (2..=6).contains(&p.depth())));
    }

    #[test]
    fn crossover_structural_cases() {
        use Function::*;
        use Gene::*;
        let a = GpProgram::new(vec![Func(Add), Feature(0), Func(Neg), Feature(1)]).unwrap();
        let b = GpProgram::new(vec![Func(Mul), Const(0.5), Feature(2)]).unwrap();
        assert_eq!(crossover_at(&a, 0, &b, 0), b);
        let leaf = crossover_at(&a, 1, &b, 2);
        let diff = a.nodes.iter().zip(&leaf.nodes).filter(|(x, y)| x != y).count();
        assert_eq!((leaf.len(), diff), (a.len(), 1));
        let mut rng = seed::rng(7);
        for _ in 0..200 {
            let c = crossover(&a, &b, Some(17), &mut rng);
            assert!(c.len() <= a.len() + b.len());
            GpProgram::new(c.nodes).unwrap();
        }
    }

    #[test]
    fn depth_cap_falls_back_to_parent() {
        let mut rng = seed::rng(8);
        let deep = full_tree(5, 3, &[Function::Add], (-1.0, 1.0), &mut rng);
        let other = full_tree(5, 3, &[Function::Add], (-1.0, 1.0), &mut rng);
        for _ in 0..50 {
            let c = crossover(&deep, &other, Some(5), &mut rng);
            assert!(c.depth() <= 5);
        }
        // A cap below the parent's own depth can only be met by a copy or a
        // shrinking splice; either way the cap or the parent is returned.
        for _ in 0..50 {
            let c = crossover(&deep, &other, Some(0), &mut rng);
            assert!(c == deep || c.depth() == 0);
        }
    }

    #[test]
    fn mutation_contracts() {
        let params = GpParams { p_point_replace: 0.0, ..GpParams::default() };
        let mut rng = seed::rng(9);
        for _ in 0..100 {
            let d = rng.random_range(0..6);
            let p = full_tree(d, 5, &Function::ALL, (-1.0, 1.0), &mut rng);
            let h = mutate(&p, MutationKind::Hoist, &params, 5, &mut rng);
            assert!(h.len() <= p.len());
            assert_eq!(mutate(&p, MutationKind::Point, &params, 5, &mut rng), p);
            let all = GpParams { p_point_replace: 1.0, ..params.clone() };
            let q = mutate(&p, MutationKind::Point, &all, 5, &mut rng);
            let arities = |x: &GpProgram| x.nodes.iter().map(Gene::arity).collect::<Vec<_>>();
            assert_eq!(arities(&q), arities(&p));
            let s = mutate(&p, MutationKind::Subtree, &params, 5, &mut rng);
            assert!(s.depth() <= 17);
            GpProgram::new(s.nodes).unwrap();
        }
        assert!("shrink".parse::<MutationKind>().is_err());
        assert_eq!("hoist".parse::<MutationKind>().unwrap(), MutationKind::Hoist);
    }

    #[test]
    fn operator_mix_within_three_sigma() {
        let params = GpParams::default();
        let mut rng = seed::rng(10);
        let n = 100_000usize;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            let k = match choose_operator(&params, &mut rng) {
                Operator::Crossover => 0,
                Operator::Mutation(MutationKind::Subtree) => 1,
                Operator::Mutation(MutationKind::Hoist) => 2,
                Operator::Mutation(MutationKind::Point) => 3,
                Operator::Reproduction => 4,
            };
            counts[k] += 1;
        }
        let expect = [0.9, 0.01, 0.01, 0.01, 0.07];
        for (c, p) in counts.iter().zip(expect) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn recovers_sum_of_two_features() {
        let ds = two_feature_ds(100, 11, |a, b| a + b);
        let params = GpParams { population_size: 500, generations: 30, seed: 3, ..GpParams::default() };
        let evo = evolve(&ds, &params).unwrap();
        assert!(evo.best.raw < 0.05, "{} {}", evo.best.raw, evo.model.sexpr);
        let again = evolve(&ds, &params).unwrap();
        assert_eq!(evo.model.program, again.model.program);
    }

    #[test]
    fn loop_length_contract() {
        let ds = two_feature_ds(40, 12, |a, b| a * b + 1.0);
        let base = GpParams { population_size: 50, generations: 7, seed: 1, ..GpParams::default() };
        let unreachable = GpParams { stopping_fitness: -1.0, ..base.clone() };
        assert_eq!(evolve(&ds, &unreachable).unwrap().log.len(), 7);
        let trivial = GpParams { stopping_fitness: 1e300, ..base };
        assert_eq!(evolve(&ds, &trivial).unwrap().log.len(), 1);
    }

    #[test]
    fn model_json_round_trip() {
        let ds = two_feature_ds(30, 13, |a, _| a + 1.0);
        let params = GpParams { population_size: 40, generations: 3, ..GpParams::default() };
        let m = evolve(&ds, &params).unwrap().model;
        let back = GpModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(m.predict(&[1.0]).is_err());
    }
}
