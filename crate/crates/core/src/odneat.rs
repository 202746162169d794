//! Per-robot embodied evolution engine.
//!
//! Each robot runs one of these, fully confined to its own state: a
//! deployed genome driving the wheels, a virtual energy level scoring it,
//! a bounded internal population of genomes speciated by compatibility, a
//! tabu list of recently retired controllers, and its own innovation
//! registry and RNG stream. Robots exchange genomes only by value through
//! inbox/outbox messages the simulator ferries between steps; nothing here
//! reads another robot's internals.
//!
//! Per step the engine (1) decides whether to broadcast its genome,
//! (2) admits inbox genomes past the tabu and population-acceptance rules,
//! then after the robot has sensed/acted/moved (3) updates energy from
//! what happened and (4) replaces an exhausted controller with locally
//! generated offspring once past its maturation age.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neat::{
    compatibility, crossover, minimal_genome, mutate, Genome, InnovationRegistry, NeatParams,
};

/// Energy model, lifecycle, exchange, and population bounds. None of these
/// are pinned by the underlying method; all are configurable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OdNeatParams {
    pub initial_energy: f64,
    pub max_energy: f64,
    pub min_energy_threshold: f64,
    /// Flat per-step energy loss.
    pub energy_decay: f64,
    /// Extra loss on a step whose move was clamped by a collision.
    pub crash_penalty: f64,
    /// Gain per step spent as a correctly spaced chain member.
    pub chain_reward: f64,
    /// Whether the chain reward also requires optimal spacing, or mere
    /// longest-home-route membership suffices.
    pub chain_reward_requires_range: bool,
    /// Minimum controller age (steps) before it may be replaced.
    pub maturation_steps: u64,
    /// The deployed genome is broadcast every this many steps of its age.
    pub broadcast_period: u64,
    /// Geometric range of genome broadcast; infinite by default. Does not
    /// affect route learning, which uses comm_range.
    pub broadcast_range: f64,
    pub population_capacity: usize,
    pub tabu_capacity: usize,
    /// Minimum compatibility distance to every tabu entry for admission.
    pub tabu_similarity_threshold: f64,
    /// Compatibility threshold for species assignment.
    pub species_threshold: f64,
    /// Probability that offspring comes from crossover of two parents
    /// rather than a clone of the fitter one.
    pub crossover_prob: f64,
    /// Offspring generation retries before giving up on tabu approval.
    pub offspring_retry_limit: u32,
}

impl Default for OdNeatParams {
    /// Defaults are calibrated so controller turnover happens at task
    /// scale: an idle controller exhausts its budget in ~70 steps past
    /// maturation, a correctly spaced chain member gains energy and
    /// persists, and a crashing controller dies noticeably faster than an
    /// idle one. Slower decay rates starve the evolutionary loop of
    /// selection events within a 10k-step run.
    fn default() -> Self {
        OdNeatParams {
            initial_energy: 20.0,
            max_energy: 150.0,
            min_energy_threshold: 0.0,
            energy_decay: 0.3,
            crash_penalty: 0.5,
            chain_reward: 0.4,
            chain_reward_requires_range: true,
            maturation_steps: 50,
            broadcast_period: 50,
            broadcast_range: f64::INFINITY,
            population_capacity: 40,
            tabu_capacity: 40,
            tabu_similarity_threshold: 1.0,
            species_threshold: 3.0,
            crossover_prob: 0.25,
            offspring_retry_limit: 8,
        }
    }
}

impl OdNeatParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_energy >= self.initial_energy && self.initial_energy > 0.0) {
            return Err(Error::Config(
                "energy must satisfy 0 < initial_energy <= max_energy".into(),
            ));
        }
        if self.min_energy_threshold >= self.initial_energy {
            return Err(Error::Config(
                "min_energy_threshold must be below initial_energy".into(),
            ));
        }
        if self.broadcast_period == 0 {
            return Err(Error::Config("broadcast_period must be >= 1".into()));
        }
        if self.population_capacity == 0 || self.tabu_capacity == 0 {
            return Err(Error::Config("population and tabu capacities must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(Error::Config("crossover_prob must be in [0, 1]".into()));
        }
        if self.broadcast_range < 0.0 {
            return Err(Error::Config("broadcast_range must be non-negative".into()));
        }
        Ok(())
    }
}

/// What happened to a robot during one step, as far as energy is concerned.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyEvents {
    pub collided: bool,
    pub on_lhr: bool,
    pub in_optimal_range: bool,
}

/// Energy after one step: flat decay, crash penalty, chain reward, clamped
/// to [0, max_energy].
pub fn update_energy(energy: f64, events: &EnergyEvents, params: &OdNeatParams) -> f64 {
    let chain_member = events.on_lhr
        && (!params.chain_reward_requires_range || events.in_optimal_range);
    let mut delta = -params.energy_decay;
    if events.collided {
        delta -= params.crash_penalty;
    }
    if chain_member {
        delta += params.chain_reward;
    }
    (energy + delta).clamp(0.0, params.max_energy)
}

/// A genome in transit between robots.
#[derive(Debug, Clone)]
pub struct GenomeMessage {
    pub sender: u32,
    pub genome: Genome,
}

/// Bounded FIFO of recently retired controllers. A candidate is approved
/// only if it is at least `threshold` away from every entry.
#[derive(Debug, Clone)]
pub struct TabuList {
    entries: VecDeque<Genome>,
    capacity: usize,
    threshold: f64,
}

impl TabuList {
    pub fn new(capacity: usize, threshold: f64) -> TabuList {
        TabuList {
            entries: VecDeque::new(),
            capacity,
            threshold,
        }
    }

    pub fn approves(&self, genome: &Genome, neat: &NeatParams) -> bool {
        self.entries
            .iter()
            .all(|e| compatibility(genome, e, neat) >= self.threshold)
    }

    pub fn push(&mut self, genome: Genome) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(genome);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Genome> {
        self.entries.iter()
    }
}

/// Bounded genome store partitioned into species by compatibility to each
/// species' first member. When full, an incoming genome must beat the
/// current worst fitness to replace it.
#[derive(Debug, Clone)]
pub struct InternalPopulation {
    members: Vec<Genome>,
    species: Vec<Vec<usize>>,
    capacity: usize,
}

impl InternalPopulation {
    pub fn new(capacity: usize) -> InternalPopulation {
        InternalPopulation {
            members: Vec::new(),
            species: Vec::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Genome] {
        &self.members
    }

    pub fn species(&self) -> &[Vec<usize>] {
        &self.species
    }

    /// Replace-worst acceptance rule; re-speciates on every change.
    pub fn try_insert(&mut self, genome: Genome, threshold: f64, neat: &NeatParams) -> bool {
        if self.members.len() < self.capacity {
            self.members.push(genome);
        } else {
            let worst = self
                .members
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| a.fitness.total_cmp(&b.fitness))
                .map(|(i, _)| i)
                .expect("population is non-empty at capacity");
            if genome.fitness <= self.members[worst].fitness {
                return false;
            }
            self.members[worst] = genome;
        }
        self.respeciate(threshold, neat);
        true
    }

    fn respeciate(&mut self, threshold: f64, neat: &NeatParams) {
        self.species.clear();
        for i in 0..self.members.len() {
            let mut assigned = false;
            for species in &mut self.species {
                let representative = &self.members[species[0]];
                if compatibility(&self.members[i], representative, neat) < threshold {
                    species.push(i);
                    assigned = true;
                    break;
                }
            }
            if !assigned {
                self.species.push(vec![i]);
            }
        }
    }

    pub fn species_mean_fitness(&self, species: &[usize]) -> f64 {
        species.iter().map(|&i| self.members[i].fitness).sum::<f64>() / species.len() as f64
    }
}

/// Fitness-proportionate roulette over non-negative weights; uniform when
/// all weights are zero.
pub fn roulette<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    debug_assert!(!weights.is_empty());
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return rng.gen_range(0..weights.len());
    }
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Where a deployed genome came from; init happens once at spawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeployOrigin {
    Init,
    Offspring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Malformed,
    Tabu,
    Population,
}

/// One line of the evolution event log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRecord {
    pub step: u64,
    pub robot: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Deploy {
        origin: DeployOrigin,
        genome: String,
    },
    Replace {
        retired: String,
        retired_fitness: f64,
        offspring: String,
        tabu_approved: bool,
    },
    TabuAdd {
        genome: String,
    },
    InboxAccept {
        sender: u32,
        genome: String,
    },
    InboxReject {
        sender: u32,
        genome: String,
        reason: RejectReason,
    },
}

fn hash_of(genome: &Genome) -> String {
    format!("{:016x}", genome.content_hash())
}

/// The per-robot evolution state machine.
#[derive(Debug, Clone)]
pub struct OdNeatEngine {
    pub robot_id: u32,
    registry: InnovationRegistry,
    rng: ChaCha8Rng,
    deployed: Genome,
    energy: f64,
    age_steps: u64,
    energy_sum: f64,
    population: InternalPopulation,
    tabu: TabuList,
    pub replacements: u64,
    pub dropped_malformed: u64,
    neat: NeatParams,
    params: OdNeatParams,
}

impl OdNeatEngine {
    /// Deploy a minimal genome built from this robot's own registry.
    pub fn new(
        robot_id: u32,
        seed: u64,
        neat: NeatParams,
        params: OdNeatParams,
        log: &mut Vec<EventRecord>,
    ) -> OdNeatEngine {
        let mut registry = InnovationRegistry::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let deployed = minimal_genome(&mut registry, &mut rng, &neat, robot_id);
        log.push(EventRecord {
            step: 0,
            robot: robot_id,
            kind: EventKind::Deploy {
                origin: DeployOrigin::Init,
                genome: hash_of(&deployed),
            },
        });
        let initial_energy = params.initial_energy;
        OdNeatEngine {
            robot_id,
            registry,
            rng,
            deployed,
            energy: initial_energy,
            age_steps: 0,
            energy_sum: 0.0,
            population: InternalPopulation::new(params.population_capacity),
            tabu: TabuList::new(params.tabu_capacity, params.tabu_similarity_threshold),
            replacements: 0,
            dropped_malformed: 0,
            neat,
            params,
        }
    }

    pub fn deployed(&self) -> &Genome {
        &self.deployed
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn age_steps(&self) -> u64 {
        self.age_steps
    }

    pub fn population(&self) -> &InternalPopulation {
        &self.population
    }

    pub fn tabu(&self) -> &TabuList {
        &self.tabu
    }

    /// Running fitness estimate of the deployed controller: mean energy
    /// over its deployment so far (current energy until it has aged).
    pub fn fitness_estimate(&self) -> f64 {
        if self.age_steps == 0 {
            self.energy
        } else {
            self.energy_sum / self.age_steps as f64
        }
    }

    /// Pre-move phase: broadcast decision, then inbox admission. Returns
    /// the genome to broadcast, stamped with the current fitness estimate;
    /// the simulator delivers it to robots within broadcast range at the
    /// next step boundary.
    pub fn communicate(
        &mut self,
        step: u64,
        mut inbox: Vec<GenomeMessage>,
        log: &mut Vec<EventRecord>,
    ) -> Option<Genome> {
        let broadcast = if self.age_steps % self.params.broadcast_period == 0 {
            let mut genome = self.deployed.clone();
            genome.fitness = self.fitness_estimate();
            Some(genome)
        } else {
            None
        };
        // deterministic admission under simultaneous receipt
        inbox.sort_by_key(|m| m.sender);
        for message in inbox {
            self.receive(step, message, log);
        }
        broadcast
    }

    fn receive(&mut self, step: u64, message: GenomeMessage, log: &mut Vec<EventRecord>) {
        let genome_hash = hash_of(&message.genome);
        let reason = if message.genome.validate(&self.neat).is_err() {
            self.dropped_malformed += 1;
            Some(RejectReason::Malformed)
        } else if !self.tabu.approves(&message.genome, &self.neat) {
            Some(RejectReason::Tabu)
        } else if !self.population.try_insert(
            message.genome.clone(),
            self.params.species_threshold,
            &self.neat,
        ) {
            Some(RejectReason::Population)
        } else {
            None
        };
        let kind = match reason {
            None => EventKind::InboxAccept {
                sender: message.sender,
                genome: genome_hash,
            },
            Some(reason) => EventKind::InboxReject {
                sender: message.sender,
                genome: genome_hash,
                reason,
            },
        };
        log.push(EventRecord {
            step,
            robot: self.robot_id,
            kind,
        });
    }

    /// Post-move phase: update energy from this step's events, age the
    /// controller, and replace it when exhausted past maturation.
    pub fn absorb_outcome(
        &mut self,
        step: u64,
        events: EnergyEvents,
        log: &mut Vec<EventRecord>,
    ) {
        self.energy = update_energy(self.energy, &events, &self.params);
        self.energy_sum += self.energy;
        self.age_steps += 1;
        if self.energy <= self.params.min_energy_threshold
            && self.age_steps >= self.params.maturation_steps
        {
            self.replace_controller(step, log);
        }
    }

    /// Retire the deployed genome (fitness = mean energy over deployment)
    /// into tabu and population, deploy locally generated offspring, and
    /// reset the energy budget.
    fn replace_controller(&mut self, step: u64, log: &mut Vec<EventRecord>) {
        let mut retired = self.deployed.clone();
        retired.fitness = self.energy_sum / self.age_steps as f64;
        let retired_hash = hash_of(&retired);
        self.tabu.push(retired.clone());
        log.push(EventRecord {
            step,
            robot: self.robot_id,
            kind: EventKind::TabuAdd {
                genome: retired_hash.clone(),
            },
        });
        self.population
            .try_insert(retired, self.params.species_threshold, &self.neat);

        let (offspring, tabu_approved) = self.generate_offspring();
        let offspring_hash = hash_of(&offspring);
        log.push(EventRecord {
            step,
            robot: self.robot_id,
            kind: EventKind::Replace {
                retired: retired_hash,
                retired_fitness: self.energy_sum / self.age_steps as f64,
                offspring: offspring_hash.clone(),
                tabu_approved,
            },
        });
        log.push(EventRecord {
            step,
            robot: self.robot_id,
            kind: EventKind::Deploy {
                origin: DeployOrigin::Offspring,
                genome: offspring_hash,
            },
        });
        self.deployed = offspring;
        self.energy = self.params.initial_energy;
        self.age_steps = 0;
        self.energy_sum = 0.0;
        self.replacements += 1;
    }

    /// Select parents from the speciated population (species by roulette
    /// over mean fitness, parents by roulette within), cross or clone,
    /// mutate, and retry until the tabu list approves. After the retry
    /// budget the last candidate is returned regardless, flagged false.
    pub fn generate_offspring(&mut self) -> (Genome, bool) {
        let mut candidate = self.spawn_candidate();
        for _ in 0..self.params.offspring_retry_limit {
            if self.tabu.approves(&candidate, &self.neat) {
                return (candidate, true);
            }
            candidate = self.spawn_candidate();
        }
        let approved = self.tabu.approves(&candidate, &self.neat);
        (candidate, approved)
    }

    fn spawn_candidate(&mut self) -> Genome {
        let base = if self.population.is_empty() {
            self.deployed.clone()
        } else {
            let means: Vec<f64> = self
                .population
                .species()
                .iter()
                .map(|s| self.population.species_mean_fitness(s))
                .collect();
            let species = &self.population.species()[roulette(&means, &mut self.rng)];
            let weights: Vec<f64> = species
                .iter()
                .map(|&i| self.population.members()[i].fitness)
                .collect();
            let first = species[roulette(&weights, &mut self.rng)];
            let second = species[roulette(&weights, &mut self.rng)];
            let a = &self.population.members()[first];
            let b = &self.population.members()[second];
            if first != second && self.rng.gen::<f64>() < self.params.crossover_prob {
                crossover(a, b, &mut self.rng, &self.neat)
            } else if b.fitness > a.fitness {
                b.clone()
            } else {
                a.clone()
            }
        };
        let mut child = mutate(&base, &mut self.registry, &mut self.rng, &self.neat);
        child.owner = self.robot_id;
        child.fitness = 0.0;
        child
    }
}
