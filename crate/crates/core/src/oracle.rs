//! Exact ground truth on a discretized unit interval.
//!
//! The interval is cut into `N` cells; cell `i` is occupied with probability
//! `g(v_<i)` given the occupancy of the earlier cells. For small `N` the law
//! of the occupancy vector conditioned on a set of occupied cells can be
//! enumerated exactly and compared with the particle sampler run on the same
//! chain viewed as a point process whose events sit at the cell right ends.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{InterArrival, SequenceModel};
use crate::rng::StreamFactory;
use crate::smc::{conditional_sample, ConstraintSet, SmcConfig};

/// Largest grid the enumeration accepts.
pub const MAX_ENUMERATION_CELLS: usize = 20;

/// Bernoulli occupancy chain over `N` cells.
pub trait GridModel: Sync {
    fn resolution(&self) -> usize;

    /// Probability that the next cell is occupied given `history` (`v_<i`).
    fn occupancy(&self, history: &[bool]) -> f64;
}

/// Occupancy depends on the last `order` cells (cells before the start count
/// as empty). `table[k]` is used when bit `j` of `k` holds `v_{i-1-j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovGrid {
    cells: usize,
    order: usize,
    table: Vec<f64>,
}

impl MarkovGrid {
    pub fn new(cells: usize, order: usize, table: Vec<f64>) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Oracle("grid needs at least one cell".into()));
        }
        if order > 16 || table.len() != 1 << order {
            return Err(Error::Oracle(format!(
                "order {order} needs a table of {} probabilities, got {}",
                1usize << order.min(16),
                table.len()
            )));
        }
        if table.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Oracle(
                "occupancy probabilities must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            cells,
            order,
            table,
        })
    }

    pub fn constant(cells: usize, p: f64) -> Result<Self> {
        Self::new(cells, 0, vec![p])
    }
}

impl GridModel for MarkovGrid {
    fn resolution(&self) -> usize {
        self.cells
    }

    fn occupancy(&self, history: &[bool]) -> f64 {
        let key = history
            .iter()
            .rev()
            .take(self.order)
            .enumerate()
            .fold(0usize, |k, (j, &v)| k | (usize::from(v) << j));
        self.table[key]
    }
}

/// Conditional law of the occupancy vector, indexed by bitmask (bit `i` is `v_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactConditional {
    cells: usize,
    probs: Vec<f64>,
}

impl ExactConditional {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, mask: usize) -> f64 {
        self.probs[mask]
    }
}

fn mask_probability<G: GridModel + ?Sized>(model: &G, mask: usize, history: &mut Vec<bool>) -> f64 {
    history.clear();
    let mut p = 1.0;
    for i in 0..model.resolution() {
        let g = model.occupancy(history);
        let v = mask >> i & 1 == 1;
        p *= if v { g } else { 1.0 - g };
        if p == 0.0 {
            break;
        }
        history.push(v);
    }
    p
}

/// Enumerates all `2^N` occupancy vectors and conditions on every cell in
/// `observed` being occupied.
pub fn enumerate_conditional<G: GridModel + ?Sized>(
    model: &G,
    observed: &[usize],
) -> Result<ExactConditional> {
    let n = model.resolution();
    if n > MAX_ENUMERATION_CELLS {
        return Err(Error::Oracle(format!(
            "enumeration is limited to {MAX_ENUMERATION_CELLS} cells, got {n}"
        )));
    }
    if let Some(&j) = observed.iter().find(|&&j| j >= n) {
        return Err(Error::Oracle(format!("observed cell {j} outside [0, {n})")));
    }
    let required = observed.iter().fold(0usize, |m, &j| m | 1 << j);
    let mut history = Vec::with_capacity(n);
    let mut probs: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            if mask & required == required {
                mask_probability(model, mask, &mut history)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::Oracle(
            "conditioning event has probability zero".into(),
        ));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(ExactConditional { cells: n, probs })
}

/// Draws the occupancy chain forward.
pub fn sample_chain<G: GridModel + ?Sized, R: Rng + ?Sized>(model: &G, rng: &mut R) -> Vec<bool> {
    let mut v = Vec::with_capacity(model.resolution());
    for _ in 0..model.resolution() {
        let g = model.occupancy(&v);
        v.push(rng.random::<f64>() < g);
    }
    v
}

/// Rejection sampler for the conditioned chain; gives up after `max_tries`.
pub fn rejection_sample<G: GridModel + ?Sized, R: Rng + ?Sized>(
    model: &G,
    observed: &[usize],
    rng: &mut R,
    max_tries: usize,
) -> Result<Vec<bool>> {
    for _ in 0..max_tries {
        let v = sample_chain(model, rng);
        if observed.iter().all(|&j| v.get(j).copied().unwrap_or(false)) {
            return Ok(v);
        }
    }
    Err(Error::Oracle(format!(
        "no accepted draw in {max_tries} tries"
    )))
}

pub fn to_mask(v: &[bool]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |m, (i, &b)| m | (usize::from(b) << i))
}

/// `1/2 sum |p - q|` against the empirical law of `counts`.
pub fn total_variation(p: &[f64], counts: &[u64]) -> f64 {
    assert_eq!(
        p.len(),
        counts.len(),
        "distributions over different supports"
    );
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 1.0;
    }
    0.5 * p
        .iter()
        .zip(counts)
        .map(|(&pi, &c)| (pi - c as f64 / n as f64).abs())
        .sum::<f64>()
}

/// The occupancy chain as a point process with events at `(i + 1) / N`.
#[derive(Debug, Clone)]
pub struct GridSequenceModel<G> {
    grid: G,
}

impl<G: GridModel> GridSequenceModel<G> {
    pub fn new(grid: G) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn time_of_cell(&self, cell: usize) -> f64 {
        (cell + 1) as f64 / self.grid.resolution() as f64
    }

    pub fn cell_of_time(&self, t: f64) -> usize {
        ((t * self.grid.resolution() as f64).round() as usize).saturating_sub(1)
    }

    /// Required times for occupied `observed` cells, all flags true.
    pub fn constraints(&self, observed: &[usize]) -> Result<ConstraintSet> {
        let mut cells = observed.to_vec();
        cells.sort_unstable();
        cells.dedup();
        ConstraintSet::allowing_all(cells.into_iter().map(|c| self.time_of_cell(c)).collect())
    }

    pub fn occupancy_of(&self, times: &[f64]) -> Vec<bool> {
        let mut v = vec![false; self.grid.resolution()];
        for &t in times {
            v[self.cell_of_time(t)] = true;
        }
        v
    }
}

/// Law of the number of cells to the next occupied one; the last entry is
/// the mass of no further event inside the grid.
#[derive(Debug, Clone)]
pub struct GridGap {
    cells: usize,
    probs: Vec<f64>,
}

impl GridGap {
    fn steps(&self, gap: f64) -> Option<usize> {
        let s = (gap * self.cells as f64).round();
        (s >= 1.0 && s as usize <= self.probs.len()).then_some(s as usize)
    }
}

impl InterArrival for GridGap {
    fn pdf(&self, gap: f64) -> f64 {
        self.steps(gap).map_or(0.0, |s| self.probs[s - 1])
    }

    fn cdf(&self, gap: f64) -> f64 {
        let s = (gap * self.cells as f64).round();
        if s < 1.0 {
            return 0.0;
        }
        let upto = (s as usize).min(self.probs.len());
        self.probs[..upto].iter().sum()
    }

    fn survival(&self, gap: f64) -> f64 {
        let s = (gap * self.cells as f64).round().max(1.0) as usize;
        self.probs
            .get(s - 1..)
            .map_or(0.0, |tail| tail.iter().sum())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut steps = self.probs.len();
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                steps = i + 1;
                break;
            }
        }
        steps as f64 / self.cells as f64
    }
}

impl<G: GridModel> SequenceModel for GridSequenceModel<G> {
    type Gap = GridGap;

    fn next_gap(&self, history: &[f64]) -> Result<GridGap> {
        let n = self.grid.resolution();
        let mut v = self.occupancy_of(history);
        let start = history.last().map_or(0, |&t| self.cell_of_time(t) + 1);
        let mut probs = Vec::with_capacity(n + 1 - start);
        let mut reach = 1.0;
        for cell in start..n {
            let g = self.grid.occupancy(&v[..cell]);
            probs.push(reach * g);
            reach *= 1.0 - g;
            v[cell] = false;
        }
        // no further event inside the grid: the next one lands past 1
        probs.push(reach);
        Ok(GridGap { cells: n, probs })
    }

    fn quantize(&self, t: f64) -> f64 {
        let n = self.grid.resolution() as f64;
        (t * n).round() / n
    }
}

/// Summary of one oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    #[serde(rename = "N")]
    pub cells: usize,
    pub observed: Vec<usize>,
    #[serde(rename = "S")]
    pub particles: usize,
    pub runs: usize,
    pub died: usize,
    pub tv: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Runs the particle sampler `runs` times on the grid chain, pools every
/// particle, and measures the total variation to the exact conditional.
pub fn compare_with_smc<G: GridModel>(
    grid: G,
    observed: &[usize],
    particles: usize,
    runs: usize,
    seed: u64,
    threshold: f64,
) -> Result<OracleReport> {
    let exact = enumerate_conditional(&grid, observed)?;
    let model = GridSequenceModel::new(grid);
    let constraints = model.constraints(observed)?;
    let streams = StreamFactory::new(seed);
    let config = SmcConfig::new(particles);

    let outcomes = (0..runs)
        .into_par_iter()
        .map(|r| {
            let res = conditional_sample(&model, &constraints, &config, &streams.run(r as u64))?;
            Ok(res
                .samples
                .iter()
                .map(|x| to_mask(&model.occupancy_of(x.as_slice())))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![0u64; exact.probs().len()];
    let mut died = 0;
    for masks in &outcomes {
        if masks.is_empty() {
            died += 1;
        }
        for &m in masks {
            counts[m] += 1;
        }
    }
    let tv = total_variation(exact.probs(), &counts);
    Ok(OracleReport {
        cells: exact.cells(),
        observed: observed.to_vec(),
        particles,
        runs,
        died,
        tv,
        threshold,
        pass: tv < threshold,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::process::{sample_restricted, DEFAULT_MAX_EVENTS};
    use crate::smc::barrier_weight;

    fn order2() -> MarkovGrid {
        MarkovGrid::new(8, 2, vec![0.3, 0.6, 0.15, 0.45]).unwrap()
    }

    #[test]
    fn independent_cells_condition_trivially() {
        let p = 0.3;
        let grid = MarkovGrid::constant(5, p).unwrap();
        let exact = enumerate_conditional(&grid, &[2]).unwrap();
        for mask in 0..32usize {
            let expected = if mask & 4 == 0 {
                0.0
            } else {
                (0..5)
                    .filter(|&i| i != 2)
                    .map(|i| if mask >> i & 1 == 1 { p } else { 1.0 - p })
                    .product()
            };
            assert!((exact.prob(mask) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn unconditional_table_sums_to_one() {
        let exact = enumerate_conditional(&order2(), &[]).unwrap();
        assert!((exact.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let cond = enumerate_conditional(&order2(), &[1, 6]).unwrap();
        assert!((cond.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_errors() {
        assert!(enumerate_conditional(&MarkovGrid::constant(21, 0.5).unwrap(), &[]).is_err());
        assert!(enumerate_conditional(&order2(), &[8]).is_err());
        assert!(enumerate_conditional(&MarkovGrid::constant(4, 0.0).unwrap(), &[1]).is_err());
        assert!(MarkovGrid::new(4, 1, vec![0.5]).is_err());
        assert!(MarkovGrid::new(4, 0, vec![1.5]).is_err());
    }

    #[test]
    fn rejection_sampling_agrees_with_enumeration() {
        let grid = order2();
        let exact = enumerate_conditional(&grid, &[4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 40_000;
        let mut counts = vec![0u64; 256];
        for _ in 0..n {
            counts[to_mask(&rejection_sample(&grid, &[4], &mut rng, 10_000).unwrap())] += 1;
        }
        // every cell frequency within 3 binomial standard errors (plus slack for 256 cells)
        for (mask, &c) in counts.iter().enumerate() {
            let p = exact.prob(mask);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (c as f64 / n as f64 - p).abs() <= 4.5 * se + 1e-12,
                "mask {mask}"
            );
        }
    }

    #[test]
    fn adapter_matches_chain_without_constraints() {
        let grid = MarkovGrid::constant(4, 0.5).unwrap();
        let model = GridSequenceModel::new(grid.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 32_000;
        let mut via_adapter = vec![0u64; 16];
        let mut via_chain = vec![0u64; 16];
        for _ in 0..n {
            let x = sample_restricted(&model, &mut rng, DEFAULT_MAX_EVENTS).unwrap();
            via_adapter[to_mask(&model.occupancy_of(x.as_slice()))] += 1;
            via_chain[to_mask(&sample_chain(&grid, &mut rng))] += 1;
        }
        let uniform = vec![1.0 / 16.0; 16];
        assert!(total_variation(&uniform, &via_adapter) < 0.02);
        assert!(total_variation(&uniform, &via_chain) < 0.02);
    }

    #[test]
    fn gap_law_is_normalized() {
        let model = GridSequenceModel::new(order2());
        for hist in [vec![], vec![0.25], vec![0.125, 0.5, 0.75], vec![1.0]] {
            let gap = model.next_gap(&hist).unwrap();
            assert!((gap.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for s in 1..=gap.probs.len() {
                let d = s as f64 / 8.0;
                assert!((gap.survival(d) - (1.0 - gap.cdf(d) + gap.pdf(d))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn barrier_weight_is_occupancy_probability() {
        let grid = order2();
        let model = GridSequenceModel::new(grid.clone());
        // history: cells 0 and 2 occupied; barrier at observed cell 5
        let hist = [model.time_of_cell(0), model.time_of_cell(2)];
        let z = model.time_of_cell(5);
        let w = barrier_weight(&model, &[hist[0], hist[1], z], z - hist[1], true, false).unwrap();
        let v = [true, false, true, false, false];
        assert!((w - grid.occupancy(&v)).abs() < 1e-12);
        // unobserved steps: the proposal is the model itself, weights stay at one
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&[0.5, 0.5], &[5, 5]), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0, 3]), 1.0);
        assert!((total_variation(&[0.75, 0.25], &[1, 1]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn report_serializes_with_short_names() {
        let r = OracleReport {
            cells: 8,
            observed: vec![4],
            particles: 10,
            runs: 2,
            died: 0,
            tv: 0.01,
            threshold: 0.05,
            pass: true,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"N\":8") && s.contains("\"S\":10") && s.contains("\"pass\":true"));
    }
}
