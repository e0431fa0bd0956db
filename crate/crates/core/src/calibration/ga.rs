//! Real-coded genetic algorithm: tournament selection, blend crossover, Gaussian mutation
//! scaled to the bounds, and elitism. The best point can be polished with a bounded
//! Nelder-Mead search afterwards.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    /// Mutation standard deviation as a fraction of each parameter range.
    pub mutation_sigma: f64,
    pub elites: usize,
    /// Blend crossover extension factor.
    pub blend_alpha: f64,
    /// Nelder-Mead iterations spent refining the GA's best point (0 disables).
    pub polish_iters: u64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 60,
            generations: 200,
            tournament: 3,
            crossover_prob: 0.9,
            mutation_prob: 0.1,
            mutation_sigma: 0.05,
            elites: 2,
            blend_alpha: 0.5,
            polish_iters: 400,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("ga: {m}")));
        if self.population < 2 || self.tournament == 0 {
            return bad("population must be at least 2 and tournament at least 1");
        }
        if self.elites >= self.population {
            return bad("elites must be fewer than the population");
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.crossover_prob) || !unit.contains(&self.mutation_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.mutation_sigma > 0.0) || !(self.blend_alpha >= 0.0) {
            return bad("mutation_sigma must be positive and blend_alpha nonnegative");
        }
        Ok(())
    }
}

/// Box constraints, one `(low, high)` pair per parameter.
pub fn validate_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("no parameters to search".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidArgument(format!("bound {i} = [{lo}, {hi}] is empty or not finite")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best value after each generation, starting with the initial population.
    pub history: Vec<f64>,
}

fn score<F>(objective: &F, pop: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    pop.par_iter().map(|x| objective(x).filter(|v| v.is_finite()).unwrap_or(f64::INFINITY)).collect()
}

fn tournament(rng: &mut ChaCha8Rng, fitness: &[f64], k: usize) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..k {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] < fitness[best] {
            best = c;
        }
    }
    best
}

/// Minimizes `objective` over the box. `None` or non-finite values mark infeasible points.
/// Deterministic for a given seed regardless of thread count.
pub fn ga_minimize<F>(objective: F, bounds: &[(f64, f64)], cfg: &GaConfig) -> Result<GaResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    cfg.validate()?;
    validate_bounds(bounds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clamp = |x: f64, (lo, hi): (f64, f64)| x.clamp(lo, hi);

    let mut pop: Vec<Vec<f64>> =
        (0..cfg.population).map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()).collect();
    let mut fitness = score(&objective, &pop);
    if fitness.iter().all(|f| f.is_infinite()) {
        return Err(Error::AllInfeasible);
    }

    let best_index = |fit: &[f64]| (0..fit.len()).min_by(|&a, &b| fit[a].total_cmp(&fit[b])).expect("nonempty");
    let mut b = best_index(&fitness);
    let (mut best, mut best_value) = (pop[b].clone(), fitness[b]);
    let mut history = vec![best_value];

    for _ in 0..cfg.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        let mut next: Vec<Vec<f64>> = order[..cfg.elites].iter().map(|&i| pop[i].clone()).collect();

        while next.len() < cfg.population {
            let p1 = &pop[tournament(&mut rng, &fitness, cfg.tournament)];
            let p2 = &pop[tournament(&mut rng, &fitness, cfg.tournament)];
            let (mut c1, mut c2) = (p1.clone(), p2.clone());
            if rng.gen::<f64>() < cfg.crossover_prob {
                for (i, &bd) in bounds.iter().enumerate() {
                    let (lo, hi) = (p1[i].min(p2[i]), p1[i].max(p2[i]));
                    let ext = cfg.blend_alpha * (hi - lo);
                    let (a, b) = (lo - ext, hi + ext);
                    let draw = |rng: &mut ChaCha8Rng| if b > a { rng.gen_range(a..=b) } else { a };
                    c1[i] = clamp(draw(&mut rng), bd);
                    c2[i] = clamp(draw(&mut rng), bd);
                }
            }
            for child in [&mut c1, &mut c2] {
                for (i, &(lo, hi)) in bounds.iter().enumerate() {
                    if rng.gen::<f64>() < cfg.mutation_prob {
                        let noise = Normal::new(0.0, cfg.mutation_sigma * (hi - lo)).expect("positive sigma");
                        child[i] = clamp(child[i] + noise.sample(&mut rng), (lo, hi));
                    }
                }
            }
            next.push(c1);
            if next.len() < cfg.population {
                next.push(c2);
            }
        }

        // elites keep their scores
        let mut new_fit: Vec<f64> = order[..cfg.elites].iter().map(|&i| fitness[i]).collect();
        new_fit.extend(score(&objective, &next[cfg.elites..]));
        pop = next;
        fitness = new_fit;
        b = best_index(&fitness);
        if fitness[b] < best_value {
            best_value = fitness[b];
            best = pop[b].clone();
        }
        history.push(best_value);
    }
    if cfg.polish_iters > 0 {
        if let Some((x, v)) = polish(&objective, bounds, &best, cfg.polish_iters) {
            if v < best_value {
                best = x;
                best_value = v;
            }
        }
    }
    Ok(GaResult { best, best_value, history })
}

struct Boxed<'a, F> {
    objective: &'a F,
    bounds: &'a [(f64, f64)],
}

impl<F> CostFunction for Boxed<'_, F>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let inside = x.iter().zip(self.bounds).all(|(v, &(lo, hi))| (lo..=hi).contains(v));
        let value = if inside { (self.objective)(x).filter(|v| v.is_finite()) } else { None };
        Ok(value.unwrap_or(f64::MAX))
    }
}

/// Nelder-Mead from `start` with an initial simplex of 5% of each range, staying in the box.
fn polish<F>(objective: &F, bounds: &[(f64, f64)], start: &[f64], iters: u64) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut simplex = vec![start.to_vec()];
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        let mut x = start.to_vec();
        let step = 0.05 * (hi - lo);
        x[i] = if x[i] + step <= hi { x[i] + step } else { x[i] - step };
        simplex.push(x);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-12).ok()?;
    let res = Executor::new(Boxed { objective, bounds }, solver).configure(|s| s.max_iters(iters)).run().ok()?;
    let state = res.state();
    let x = state.best_param.clone()?;
    let v = state.best_cost;
    (v < f64::MAX).then_some((x, v))
}
