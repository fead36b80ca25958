//! Per-slot genetic search over UAV and IRS positions.
//!
//! A candidate is a bitstring holding five fixed-point coordinates
//! `(x_uav, y_uav, z_uav, x_irs, y_irs)`, most significant bit first. Because
//! every code decodes inside its interval, the geometry constraints hold by
//! construction; only the SINR threshold is handled by a penalty.
//!
//! RNG consumption order (fitness evaluation never touches the RNG, so the
//! result is independent of how evaluation is parallelized):
//!
//! 1. initial population: one bit draw per bit, individual by individual
//!    (a warm-start individual, when present, is placed first and drawn
//!    from nothing);
//! 2. per generation, until the population is full: tournament for parent
//!    A, tournament for parent B, crossover, mutation of child A, mutation
//!    of child B.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::Placement;
use crate::mobility::MobilityTrace;
use crate::noma::{noma_from_gains, oma_from_gains, Access, Scheme, SlotResult};
use crate::scenario::{GaParams, ScenarioConfig};
use crate::{channel, Error, Result};

/// Fixed-length bitstring, MSB-first per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genome(Vec<bool>);

impl Genome {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Genome(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Genome((0..len).map(|_| rng.gen_bool(0.5)).collect())
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Format(format!("genome digit {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Genome)
    }
}

impl Serialize for Genome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Genome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps placements to genomes and back.
#[derive(Debug, Clone, PartialEq)]
pub struct GenomeCodec {
    /// `(lo, hi)` for x_uav, y_uav, z_uav, x_irs, y_irs.
    pub bounds: [(f64, f64); 5],
    pub bits: u32,
}

impl GenomeCodec {
    pub fn new(bounds: [(f64, f64); 5], bits: u32) -> Self {
        assert!(
            (1..=32).contains(&bits),
            "bits per coordinate must lie in [1, 32]"
        );
        GenomeCodec { bounds, bits }
    }

    pub fn for_config(config: &ScenarioConfig) -> Self {
        let r = &config.region;
        let g = &config.ga;
        GenomeCodec::new(
            [
                (r.x_min, r.x_max),
                (r.y_min, r.y_max),
                (g.uav_alt_min, g.uav_alt_max),
                (r.x_min, r.x_max),
                (r.y_min, r.y_max),
            ],
            g.bits_per_coordinate,
        )
    }

    pub fn len(&self) -> usize {
        5 * self.bits as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn max_code(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    /// Largest decode error of a round trip on coordinate `i`.
    pub fn half_step(&self, i: usize) -> f64 {
        let (lo, hi) = self.bounds[i];
        (hi - lo) / self.max_code() as f64 / 2.0
    }

    pub fn from_codes(&self, codes: [u64; 5]) -> Genome {
        let b = self.bits as usize;
        let mut bits = Vec::with_capacity(self.len());
        for code in codes {
            debug_assert!(code <= self.max_code());
            for k in (0..b).rev() {
                bits.push((code >> k) & 1 == 1);
            }
        }
        Genome(bits)
    }

    pub fn codes(&self, genome: &Genome) -> Result<[u64; 5]> {
        if genome.len() != self.len() {
            return Err(Error::Format(format!(
                "genome has {} bits, expected {}",
                genome.len(),
                self.len()
            )));
        }
        let b = self.bits as usize;
        let mut out = [0u64; 5];
        for (i, chunk) in genome.0.chunks(b).enumerate() {
            out[i] = chunk
                .iter()
                .fold(0u64, |acc, &bit| (acc << 1) | u64::from(bit));
        }
        Ok(out)
    }

    pub fn encode(&self, placement: &Placement) -> Result<Genome> {
        let vals = [
            placement.uav[0],
            placement.uav[1],
            placement.uav[2],
            placement.irs[0],
            placement.irs[1],
        ];
        let max = self.max_code() as f64;
        let mut codes = [0u64; 5];
        for (i, (&v, &(lo, hi))) in vals.iter().zip(&self.bounds).enumerate() {
            if !(v >= lo && v <= hi) {
                return Err(Error::Domain(format!(
                    "coordinate {i} = {v} outside [{lo}, {hi}]"
                )));
            }
            codes[i] = if hi > lo {
                ((v - lo) / (hi - lo) * max).round() as u64
            } else {
                0
            };
        }
        Ok(self.from_codes(codes))
    }

    pub fn decode(&self, genome: &Genome) -> Result<Placement> {
        let codes = self.codes(genome)?;
        let max = self.max_code() as f64;
        let v: Vec<f64> = codes
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &(lo, hi))| {
                if c == self.max_code() {
                    hi
                } else {
                    lo + c as f64 / max * (hi - lo)
                }
            })
            .collect();
        Ok(Placement {
            uav: [v[0], v[1], v[2]],
            irs: [v[3], v[4]],
        })
    }

    /// Moves a placement into the box so it can be encoded.
    pub fn clamp(&self, p: &Placement) -> Placement {
        let c = |v: f64, i: usize| v.clamp(self.bounds[i].0, self.bounds[i].1);
        Placement {
            uav: [c(p.uav[0], 0), c(p.uav[1], 1), c(p.uav[2], 2)],
            irs: [c(p.irs[0], 3), c(p.irs[1], 4)],
        }
    }
}

/// How the IRS coordinates of a candidate are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IrsMode {
    /// The vehicle position is searched together with the UAV.
    Mobile,
    /// The vehicle stays at this position; genome IRS bits are ignored.
    Fixed([f64; 2]),
    /// No IRS: the reflected link is zeroed and IRS bits are ignored.
    Disabled,
}

/// Everything the fitness of one slot depends on.
#[derive(Debug, Clone)]
pub struct SlotProblem<'a> {
    pub users: &'a [[f64; 2]],
    pub config: &'a ScenarioConfig,
    pub irs: IrsMode,
    pub access: Access,
    /// Previous slot's placement, used for the warm start and the optional
    /// displacement cap.
    pub previous: Option<Placement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub penalty: f64,
    pub result: SlotResult,
}

impl<'a> SlotProblem<'a> {
    pub fn new(users: &'a [[f64; 2]], config: &'a ScenarioConfig) -> Self {
        SlotProblem {
            users,
            config,
            irs: IrsMode::Mobile,
            access: Access::Noma,
            previous: None,
        }
    }

    pub fn with_irs(mut self, irs: IrsMode) -> Self {
        self.irs = irs;
        self
    }

    pub fn with_access(mut self, access: Access) -> Self {
        self.access = access;
        self
    }

    pub fn with_previous(mut self, previous: Option<Placement>) -> Self {
        self.previous = previous;
        self
    }

    /// Applies the IRS mode to a decoded placement.
    pub fn resolve(&self, mut p: Placement) -> Placement {
        if let IrsMode::Fixed(pos) = self.irs {
            p.irs = pos;
        }
        p
    }

    pub fn evaluate(&self, placement: &Placement) -> Result<Evaluation> {
        let placement = self.resolve(*placement);
        let mut gains = channel::compute_link_gains(&placement, self.users, self.config)?;
        if self.irs == IrsMode::Disabled {
            gains = gains.without_irs();
        }
        let result = match self.access {
            Access::Noma => noma_from_gains(&gains, self.config)?,
            Access::Oma => oma_from_gains(&gains, self.config)?,
        };
        let ga = &self.config.ga;
        let gamma_th = self.config.derived().gamma_th;
        let deficit: f64 = result
            .users
            .iter()
            .map(|u| (gamma_th - u.sinr).max(0.0))
            .sum();
        let mut penalty = ga.penalty_weight * deficit;
        if let (Some(limit), Some(prev)) = (ga.max_displacement_m, self.previous) {
            let uav_move = channel::distance_3d(
                [
                    placement.uav[0] - prev.uav[0],
                    placement.uav[1] - prev.uav[1],
                    placement.uav[2] - prev.uav[2],
                ],
                [0.0, 0.0],
            );
            let mut excess = (uav_move - limit).max(0.0);
            if self.irs == IrsMode::Mobile {
                let irs_move =
                    (placement.irs[0] - prev.irs[0]).hypot(placement.irs[1] - prev.irs[1]);
                excess += (irs_move - limit).max(0.0);
            }
            penalty += ga.penalty_weight * excess;
        }
        Ok(Evaluation {
            fitness: result.sum_rate - penalty,
            penalty,
            result,
        })
    }
}

/// Sum rate at the decoded placement minus the SINR-deficit penalty.
/// Unevaluable candidates score negative infinity.
pub fn fitness(genome: &Genome, codec: &GenomeCodec, problem: &SlotProblem<'_>) -> f64 {
    codec
        .decode(genome)
        .and_then(|p| problem.evaluate(&p))
        .map_or(f64::NEG_INFINITY, |e| e.fitness)
}

/// Index of the fittest of `size` distinct uniformly drawn candidates; ties
/// go to the lowest index.
pub fn tournament_index<R: Rng + ?Sized>(
    fitnesses: &[f64],
    size: usize,
    rng: &mut R,
) -> Result<usize> {
    if fitnesses.is_empty() {
        return Err(Error::Domain("tournament over an empty population".into()));
    }
    if size == 0 || size > fitnesses.len() {
        return Err(Error::Domain(format!(
            "tournament size {size} not in [1, {}]",
            fitnesses.len()
        )));
    }
    let mut best: Option<usize> = None;
    for i in sample(rng, fitnesses.len(), size).iter() {
        best = match best {
            None => Some(i),
            Some(b) if fitnesses[i] > fitnesses[b] || (fitnesses[i] == fitnesses[b] && i < b) => {
                Some(i)
            }
            keep => keep,
        };
    }
    Ok(best.expect("size >= 1"))
}

pub fn tournament_select<'p, R: Rng + ?Sized>(
    population: &'p [Genome],
    fitnesses: &[f64],
    size: usize,
    rng: &mut R,
) -> Result<&'p Genome> {
    if population.len() != fitnesses.len() {
        return Err(Error::Domain(
            "population and fitness lengths differ".into(),
        ));
    }
    Ok(&population[tournament_index(fitnesses, size, rng)?])
}

/// Swaps the suffixes starting at bit `cut`.
pub fn crossover_at(a: &Genome, b: &Genome, cut: usize) -> (Genome, Genome) {
    let mut ca = a.0[..cut].to_vec();
    ca.extend_from_slice(&b.0[cut..]);
    let mut cb = b.0[..cut].to_vec();
    cb.extend_from_slice(&a.0[cut..]);
    (Genome(ca), Genome(cb))
}

/// Single-point crossover applied with probability `prob`; the cut is
/// uniform in `[1, len - 1]`.
pub fn crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    prob: f64,
    rng: &mut R,
) -> Result<(Genome, Genome)> {
    if a.len() != b.len() {
        return Err(Error::Format(format!(
            "crossover of genomes with {} and {} bits",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 || !rng.gen_bool(prob) {
        return Ok((a.clone(), b.clone()));
    }
    let cut = rng.gen_range(1..a.len());
    Ok(crossover_at(a, b, cut))
}

/// Independent bit flips with probability `prob`.
pub fn mutate<R: Rng + ?Sized>(genome: &Genome, prob: f64, rng: &mut R) -> Genome {
    Genome(genome.0.iter().map(|&b| b ^ rng.gen_bool(prob)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaRunRecord {
    /// Generation 0 is the initial population.
    pub generations: Vec<GenerationStats>,
    pub best_genome: Genome,
    pub best_fitness: f64,
    pub evaluations: usize,
}

impl GaRunRecord {
    pub const CSV_HEADER: [&'static str; 3] = ["generation", "best_fitness", "mean_fitness"];

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for g in &self.generations {
            w.write_record(&[
                g.generation.to_string(),
                g.best_fitness.to_string(),
                g.mean_fitness.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn evaluate_all(population: &[Genome], codec: &GenomeCodec, problem: &SlotProblem<'_>) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        population
            .par_iter()
            .map(|g| fitness(g, codec, problem))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        population
            .iter()
            .map(|g| fitness(g, codec, problem))
            .collect()
    }
}

fn stats(generation: usize, fit: &[f64]) -> GenerationStats {
    let best = fit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let finite: Vec<f64> = fit.iter().cloned().filter(|f| f.is_finite()).collect();
    let mean = if finite.is_empty() {
        f64::NEG_INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    GenerationStats {
        generation,
        best_fitness: best,
        mean_fitness: mean,
    }
}

/// Indices sorted by descending fitness, ties by index.
fn ranking(fit: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fit.len()).collect();
    idx.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
    idx
}

/// Runs the GA from a given initial population.
pub fn optimize_from<R: Rng + ?Sized>(
    problem: &SlotProblem<'_>,
    codec: &GenomeCodec,
    params: &GaParams,
    initial: Vec<Genome>,
    rng: &mut R,
) -> Result<(Placement, GaRunRecord)> {
    if initial.is_empty() {
        return Err(Error::Domain("empty initial population".into()));
    }
    if let Some(g) = initial.iter().find(|g| g.len() != codec.len()) {
        return Err(Error::Format(format!(
            "initial genome has {} bits, expected {}",
            g.len(),
            codec.len()
        )));
    }
    let pop_size = initial.len();
    let tsize = params.tournament_size.clamp(1, pop_size);
    let elites = params.elitism_count.min(pop_size - 1);
    let pm = params.mutation_rate();

    let mut population = initial;
    let mut fit = evaluate_all(&population, codec, problem);
    let mut evaluations = fit.len();
    let mut generations = vec![stats(0, &fit)];
    let mut best_idx = ranking(&fit)[0];
    let mut best = (population[best_idx].clone(), fit[best_idx]);

    for gen in 1..=params.max_iterations {
        let order = ranking(&fit);
        let mut next: Vec<Genome> = order[..elites]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < pop_size {
            let a = tournament_index(&fit, tsize, rng)?;
            let b = tournament_index(&fit, tsize, rng)?;
            let (ca, cb) = crossover(&population[a], &population[b], params.crossover_prob, rng)?;
            let ca = mutate(&ca, pm, rng);
            let cb = mutate(&cb, pm, rng);
            next.push(ca);
            if next.len() < pop_size {
                next.push(cb);
            }
        }
        population = next;
        fit = evaluate_all(&population, codec, problem);
        evaluations += fit.len();
        generations.push(stats(gen, &fit));
        best_idx = ranking(&fit)[0];
        if fit[best_idx] > best.1 {
            best = (population[best_idx].clone(), fit[best_idx]);
        }
    }

    let placement = problem.resolve(codec.decode(&best.0)?);
    Ok((
        placement,
        GaRunRecord {
            generations,
            best_genome: best.0,
            best_fitness: best.1,
            evaluations,
        },
    ))
}

/// Uniform random population, with the previous slot's optimum as the first
/// individual when the problem carries one.
pub fn initial_population<R: Rng + ?Sized>(
    problem: &SlotProblem<'_>,
    codec: &GenomeCodec,
    size: usize,
    rng: &mut R,
) -> Result<Vec<Genome>> {
    let mut pop = Vec::with_capacity(size);
    if let Some(prev) = problem.previous {
        pop.push(codec.encode(&codec.clamp(&prev))?);
    }
    while pop.len() < size {
        pop.push(Genome::random(codec.len(), rng));
    }
    Ok(pop)
}

/// Searches one slot's placement with the config's GA parameters.
pub fn optimize_slot<R: Rng + ?Sized>(
    problem: &SlotProblem<'_>,
    rng: &mut R,
) -> Result<(Placement, GaRunRecord)> {
    let codec = GenomeCodec::for_config(problem.config);
    let params = &problem.config.ga;
    let initial = initial_population(problem, &codec, params.population_size, rng)?;
    optimize_from(problem, &codec, params, initial, rng)
}

/// Placements, GA records and slot outcomes of one scheme over a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRun {
    pub scheme: Scheme,
    pub placements: Vec<Placement>,
    pub records: Vec<GaRunRecord>,
    pub results: Vec<SlotResult>,
}

/// Optimizes every slot of `trace` in order for `scheme`.
///
/// * M-IRS: UAV and vehicle searched jointly each slot.
/// * S-IRS: slot 1 is searched jointly (unless the config pins the IRS);
///   the vehicle then stays where slot 1 put it.
/// * No-IRS: UAV only, reflected link zeroed.
/// * M-IRS-OMA: as M-IRS with orthogonal access.
pub fn optimize_trajectory<R: Rng + ?Sized>(
    trace: &MobilityTrace,
    config: &ScenarioConfig,
    scheme: Scheme,
    rng: &mut R,
) -> Result<TrajectoryRun> {
    let slots = config.mobility.num_slots.min(trace.num_slots());
    let mut run = TrajectoryRun {
        scheme,
        placements: Vec::with_capacity(slots),
        records: Vec::with_capacity(slots),
        results: Vec::with_capacity(slots),
    };
    let mut static_irs = config.experiment.static_irs_position;
    for t in 0..slots {
        let irs = match scheme {
            Scheme::MobileIrsNoma | Scheme::MobileIrsOma => IrsMode::Mobile,
            Scheme::StaticIrsNoma => static_irs.map_or(IrsMode::Mobile, IrsMode::Fixed),
            Scheme::NoIrsNoma => IrsMode::Disabled,
        };
        let problem = SlotProblem::new(trace.slot(t), config)
            .with_irs(irs)
            .with_access(scheme.access())
            .with_previous(run.placements.last().copied());
        let (placement, record) = optimize_slot(&problem, rng)?;
        if scheme == Scheme::StaticIrsNoma && static_irs.is_none() {
            static_irs = Some(placement.irs);
        }
        let eval = problem.evaluate(&placement)?;
        run.placements.push(placement);
        run.records.push(record);
        run.results.push(eval.result);
    }
    Ok(run)
}
