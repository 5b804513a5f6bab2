//! Episode harness: runs the full multi-agent learning loop over
//! Q-iterations, subcarriers and agents, with an in-process cooperation
//! bus, deterministic seeding, checkpointing and trace recording.
//!
//! One Q-iteration = every agent picks an action on every subcarrier,
//! then capacities, rewards, next states and table updates are all
//! computed from the resulting joint allocation. That simultaneous-commit
//! ordering is what makes every agent's reward reflect the same
//! environment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{
    encode_state, select_action_cl, ActionSet, AgentState, PowerLevelBands, RewardSpec, SharedQRow,
};
use crate::error::{Error, Result};
use crate::metrics::{self, ConvergenceReport};
use crate::qlearn::{exploration_active, q_update, select_action_greedy, LearningParams, QTable};
use crate::radio::{
    capacity_report, channel_gains, femto_capacity, generate_topology_with, macro_capacity,
    CapacityReport, ChannelMatrix, PlacementShape, PowerAllocation, Topology,
    DEFAULT_PLACEMENT_ATTEMPTS,
};

/// Independent or cooperative learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    Il,
    Cl,
}

impl Paradigm {
    pub fn label(&self) -> &'static str {
        match self {
            Paradigm::Il => "il",
            Paradigm::Cl => "cl",
        }
    }
}

/// Full configuration of one episode. Defaults are the standard
/// experiment values; a TOML config file may override any subset and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_femto: usize,
    pub n_sub: usize,
    pub q_iterations: usize,
    pub paradigm: Paradigm,
    pub reward: RewardSpec,
    pub learning: LearningParams,
    /// Noise power in linear milliwatts.
    pub sigma2: f64,
    pub path_loss_exponent: f64,
    pub rng_seed: u64,
    /// Starting transmit power of every femtocell on every subcarrier.
    pub initial_power_dbm: f64,
    pub p_max_femto_dbm: f64,
    pub p_max_macro_dbm: f64,
    /// Width of the near-budget power-level band (dB below the budget).
    pub power_level_margin_db: f64,
    /// Transmit-power action grid in dBm, strictly ascending.
    pub action_levels_dbm: Vec<f64>,
    pub max_placement_attempts: usize,
    /// Where the femtocell neighborhood and its users fall within the
    /// hard distance constraints.
    pub placement: PlacementShape,
    /// When each agent's reward and table update happen within an
    /// iteration (see [`UpdateTiming`]).
    pub update_timing: UpdateTiming,
}

/// Within-iteration reward/update ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateTiming {
    /// All agents commit on all subcarriers, then every reward, next state
    /// and update is computed from the final joint allocation.
    Joint,
    /// Each agent receives its reward and updates immediately after
    /// committing, before the next agent acts.
    Sequential,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_femto: 4,
            n_sub: 6,
            q_iterations: 3000,
            paradigm: Paradigm::Il,
            reward: RewardSpec::default(),
            learning: LearningParams::default(),
            sigma2: 1e-7,
            path_loss_exponent: 2.0,
            rng_seed: 0,
            initial_power_dbm: -20.0,
            p_max_femto_dbm: 15.0,
            p_max_macro_dbm: 43.0,
            power_level_margin_db: 5.0,
            action_levels_dbm: ActionSet::default_grid().levels().to_vec(),
            max_placement_attempts: DEFAULT_PLACEMENT_ATTEMPTS,
            placement: PlacementShape::default(),
            update_timing: UpdateTiming::Joint,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_femto == 0 {
            return Err(Error::Config("n_femto must be at least 1".into()));
        }
        if self.n_sub == 0 {
            return Err(Error::Config("n_sub must be at least 1".into()));
        }
        if self.q_iterations == 0 {
            return Err(Error::Config("q_iterations must be at least 1".into()));
        }
        if self.sigma2 <= 0.0 {
            return Err(Error::Config(format!(
                "sigma2 {} must be positive",
                self.sigma2
            )));
        }
        self.learning.validate()?;
        self.reward.validate()?;
        self.placement.validate()?;
        let actions = self.action_set()?;
        if actions.len() > u8::MAX as usize {
            return Err(Error::Config("action grid larger than 255 levels".into()));
        }
        Ok(())
    }

    pub fn action_set(&self) -> Result<ActionSet> {
        ActionSet::from_levels(self.action_levels_dbm.clone())
    }

    pub fn power_level_bands(&self) -> PowerLevelBands {
        PowerLevelBands::from_budget(self.p_max_femto_dbm, self.power_level_margin_db)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Content digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// What one agent did on one subcarrier during one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    /// State id the action was selected from.
    pub state: u8,
    /// Transmit power committed, dBm (always a grid member).
    pub action_dbm: f64,
    pub reward: f64,
}

/// Everything recorded for one Q-iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Macro-user capacity per subcarrier after all commits.
    pub macro_capacity: Vec<f64>,
    /// Per-femtocell per-subcarrier capacity, row-major `[i][n]`.
    pub femto_capacity: Vec<f64>,
    /// Per-agent per-subcarrier steps, row-major `[i][n]`.
    pub steps: Vec<AgentStep>,
    /// Cumulative count of Q-row entries shared so far (0 for IL runs).
    pub shared_entries: u64,
}

/// Post-run summary metrics (measured over the final 10% of iterations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub aggregate_femto_capacity: f64,
    pub jain_index: f64,
    pub convergence: ConvergenceReport,
    pub shared_entries: u64,
}

/// Full record of one episode (or, after a resume, of its remaining
/// iterations; `start_iteration` keeps the numbering honest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: SimConfig,
    pub start_iteration: usize,
    pub records: Vec<IterationRecord>,
    pub summary: TraceSummary,
}

impl RunTrace {
    pub fn new(config: SimConfig, records: Vec<IterationRecord>) -> Result<Self> {
        Self::with_start(config, 0, records)
    }

    pub fn with_start(
        config: SimConfig,
        start_iteration: usize,
        records: Vec<IterationRecord>,
    ) -> Result<Self> {
        let summary = metrics::summarize(&records, &config)?;
        Ok(Self {
            config,
            start_iteration,
            records,
            summary,
        })
    }
}

/// Lossless zero-delay all-to-all exchange of current-state Q-rows, with
/// overhead accounting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CooperationBus {
    pub rows_delivered: u64,
    pub entries_delivered: u64,
}

impl CooperationBus {
    /// Delivers every agent's row to every other agent. Expects exactly one
    /// row per agent, all for the same subcarrier and of equal length.
    pub fn exchange(&mut self, rows: &[SharedQRow]) -> Result<Vec<Vec<SharedQRow>>> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.sender != i {
                return Err(Error::CooperationBusFault(format!(
                    "slot {i} holds a row from sender {}",
                    row.sender
                )));
            }
            if row.subcarrier != rows[0].subcarrier || row.row.len() != rows[0].row.len() {
                return Err(Error::CooperationBusFault(
                    "mixed subcarriers or row lengths in one exchange".into(),
                ));
            }
        }
        let mut received = vec![Vec::with_capacity(n.saturating_sub(1)); n];
        for (i, inbox) in received.iter_mut().enumerate() {
            for (j, row) in rows.iter().enumerate() {
                if i != j {
                    inbox.push(row.clone());
                }
            }
        }
        let delivered = (n * n.saturating_sub(1)) as u64;
        self.rows_delivered += delivered;
        self.entries_delivered += delivered * rows.first().map_or(0, |r| r.row.len() as u64);
        Ok(received)
    }
}

/// Convenience alias used by the public exchange entry point.
pub fn cooperation_bus_exchange(
    bus: &mut CooperationBus,
    rows: &[SharedQRow],
) -> Result<Vec<Vec<SharedQRow>>> {
    bus.exchange(rows)
}

/// Sets every femtocell to the configured initial power, evaluates the
/// resulting capacities and encodes each agent's starting state.
pub fn initial_state(
    cfg: &SimConfig,
    _topo: &Topology,
    channels: &ChannelMatrix,
) -> Result<(PowerAllocation, Vec<AgentState>)> {
    let allocation = PowerAllocation::new(
        channels.n_femto(),
        cfg.n_sub,
        cfg.initial_power_dbm,
        cfg.p_max_femto_dbm,
        cfg.p_max_macro_dbm,
    );
    let report = capacity_report(channels, &allocation, cfg.sigma2);
    let states = observe_states(cfg, &allocation, &report);
    Ok((allocation, states))
}

fn observe_states(
    cfg: &SimConfig,
    allocation: &PowerAllocation,
    report: &CapacityReport,
) -> Vec<AgentState> {
    let bands = cfg.power_level_bands();
    let n = allocation.n_femto();
    let mut states = Vec::with_capacity(n * cfg.n_sub);
    for i in 0..n {
        let total = allocation.total_femto_linear(i);
        for s in 0..cfg.n_sub {
            states.push(encode_state(
                report.macro_capacity[s],
                total,
                &cfg.reward,
                &bands,
            ));
        }
    }
    states
}

/// Serialized pause point: together with the config (which regenerates the
/// topology deterministically) this is enough to resume an episode
/// bit-for-bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub config: SimConfig,
    pub iteration: usize,
    pub q_tables: Vec<QTable>,
    pub femto_power_dbm: Vec<f64>,
    pub rng: ChaCha8Rng,
    pub shared_entries: u64,
}

pub const CHECKPOINT_SCHEMA: &str = "femtoq.checkpoint.v1";

/// A running episode. Stepping is strictly sequential; distinct episodes
/// are independent and can run on different threads.
#[derive(Debug, Clone)]
pub struct Episode {
    cfg: SimConfig,
    actions: ActionSet,
    bands: PowerLevelBands,
    topology: Topology,
    channels: ChannelMatrix,
    allocation: PowerAllocation,
    tables: Vec<QTable>,
    /// Current state id per `[agent][subcarrier]`, row-major.
    states: Vec<u8>,
    rng: ChaCha8Rng,
    t: usize,
    bus: CooperationBus,
    updates_performed: u64,
}

impl Episode {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let actions = cfg.action_set()?;
        // Independent streams for placement and for the learning loop, both
        // derived from the one seed.
        let mut master = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let topo_seed = master.gen::<u64>();
        let loop_seed = master.gen::<u64>();
        let topology = generate_topology_with(
            cfg.n_femto,
            topo_seed,
            cfg.max_placement_attempts,
            &cfg.placement,
        )?;
        let channels = channel_gains(&topology, cfg.path_loss_exponent, cfg.n_sub)?;
        let (allocation, states) = initial_state(cfg, &topology, &channels)?;
        let tables = vec![QTable::zeros(AgentState::COUNT, actions.len()); cfg.n_femto];
        Ok(Self {
            bands: cfg.power_level_bands(),
            cfg: cfg.clone(),
            actions,
            topology,
            channels,
            allocation,
            tables,
            states: states.iter().map(|s| s.id() as u8).collect(),
            rng: ChaCha8Rng::seed_from_u64(loop_seed),
            t: 0,
            bus: CooperationBus::default(),
            updates_performed: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.cfg.q_iterations
    }

    pub fn q_tables(&self) -> &[QTable] {
        &self.tables
    }

    pub fn updates_performed(&self) -> u64 {
        self.updates_performed
    }

    pub fn shared_entries(&self) -> u64 {
        self.bus.entries_delivered
    }

    fn state_id(&self, agent: usize, subcarrier: usize) -> usize {
        self.states[agent * self.cfg.n_sub + subcarrier] as usize
    }

    /// Runs one Q-iteration: all agents act on all subcarriers, then
    /// rewards, next states and table updates are computed from the
    /// committed joint allocation.
    pub fn step(&mut self) -> Result<IterationRecord> {
        match self.cfg.update_timing {
            UpdateTiming::Joint => self.step_joint(),
            UpdateTiming::Sequential => self.step_sequential(),
        }
    }

    fn step_joint(&mut self) -> Result<IterationRecord> {
        let n = self.cfg.n_femto;
        let n_sub = self.cfg.n_sub;

        let mut chosen = vec![0usize; n * n_sub];
        for sub in 0..n_sub {
            let received = self.broadcast_rows(sub)?;
            for i in 0..n {
                let action = self.select_action(i, sub, &received)?;
                chosen[i * n_sub + sub] = action;
                self.allocation
                    .set_femto_dbm(i, sub, self.actions.dbm(action));
            }
        }

        // Joint allocation committed: evaluate the environment once.
        let report = capacity_report(&self.channels, &self.allocation, self.cfg.sigma2);
        let totals: Vec<f64> = (0..n)
            .map(|i| self.allocation.total_femto_linear(i))
            .collect();
        let budget_ok: Vec<bool> = (0..n).map(|i| self.allocation.femto_budget_ok(i)).collect();

        let mut steps = Vec::with_capacity(n * n_sub);
        for i in 0..n {
            for sub in 0..n_sub {
                let c_o = report.macro_capacity[sub];
                let c_i = report.femto(i, sub, n_sub);
                let idx = i * n_sub + sub;
                let step =
                    self.learn_one(i, sub, chosen[idx], c_o, c_i, totals[i], budget_ok[i])?;
                steps.push(step);
            }
        }

        self.t += 1;
        Ok(IterationRecord {
            macro_capacity: report.macro_capacity,
            femto_capacity: report.femto_capacity,
            steps,
            shared_entries: self.bus.entries_delivered,
        })
    }

    /// One Q-iteration in per-agent order: each agent commits its power and
    /// immediately receives its reward and next state from the environment
    /// as it stands, before the next agent acts.
    fn step_sequential(&mut self) -> Result<IterationRecord> {
        let n = self.cfg.n_femto;
        let n_sub = self.cfg.n_sub;

        let mut steps = vec![
            AgentStep {
                state: 0,
                action_dbm: 0.0,
                reward: 0.0,
            };
            n * n_sub
        ];
        for sub in 0..n_sub {
            let received = self.broadcast_rows(sub)?;
            for i in 0..n {
                let action = self.select_action(i, sub, &received)?;
                self.allocation
                    .set_femto_dbm(i, sub, self.actions.dbm(action));
                let c_o = macro_capacity(&self.channels, &self.allocation, self.cfg.sigma2, sub);
                let c_i = femto_capacity(&self.channels, &self.allocation, self.cfg.sigma2, i, sub);
                let total = self.allocation.total_femto_linear(i);
                let budget_ok = self.allocation.femto_budget_ok(i);
                steps[i * n_sub + sub] =
                    self.learn_one(i, sub, action, c_o, c_i, total, budget_ok)?;
            }
        }

        // Record the capacities of the fully committed allocation.
        let report = capacity_report(&self.channels, &self.allocation, self.cfg.sigma2);
        self.t += 1;
        Ok(IterationRecord {
            macro_capacity: report.macro_capacity,
            femto_capacity: report.femto_capacity,
            steps,
            shared_entries: self.bus.entries_delivered,
        })
    }

    /// Cooperative runs broadcast each agent's current-state row before
    /// anyone acts on the subcarrier.
    #[allow(clippy::type_complexity)]
    fn broadcast_rows(
        &mut self,
        sub: usize,
    ) -> Result<Option<(Vec<Vec<SharedQRow>>, Vec<SharedQRow>)>> {
        if self.cfg.paradigm != Paradigm::Cl {
            return Ok(None);
        }
        let rows: Vec<SharedQRow> = (0..self.cfg.n_femto)
            .map(|i| SharedQRow {
                sender: i,
                subcarrier: sub,
                row: self.tables[i].row(self.state_id(i, sub)).to_vec(),
            })
            .collect();
        Ok(Some((self.bus.exchange(&rows)?, rows)))
    }

    /// The exploration gate applies first, then the paradigm rule.
    fn select_action(
        &mut self,
        i: usize,
        sub: usize,
        received: &Option<(Vec<Vec<SharedQRow>>, Vec<SharedQRow>)>,
    ) -> Result<usize> {
        let params = self.cfg.learning;
        let explore = exploration_active(&params, self.t, self.cfg.q_iterations);
        if explore && self.rng.gen::<f64>() < params.epsilon {
            return Ok(self.rng.gen_range(0..self.actions.len()));
        }
        match received {
            None => Ok(select_action_greedy(&self.tables[i], self.state_id(i, sub))),
            Some((inboxes, rows)) => select_action_cl(i, self.cfg.n_femto, &rows[i], &inboxes[i]),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn learn_one(
        &mut self,
        i: usize,
        sub: usize,
        action: usize,
        c_o: f64,
        c_i: f64,
        total_linear: f64,
        budget_ok: bool,
    ) -> Result<AgentStep> {
        let reward = self.cfg.reward.reward(c_o, c_i, budget_ok);
        let next = encode_state(c_o, total_linear, &self.cfg.reward, &self.bands);
        let idx = i * self.cfg.n_sub + sub;
        let prev = self.states[idx];
        q_update(
            &mut self.tables[i],
            prev as usize,
            action,
            reward,
            next.id(),
            &self.cfg.learning,
        )?;
        self.updates_performed += 1;
        self.states[idx] = next.id() as u8;
        Ok(AgentStep {
            state: prev,
            action_dbm: self.actions.dbm(action),
            reward,
        })
    }

    /// Steps until the configured iteration count, collecting the records.
    pub fn run_remaining(&mut self) -> Result<Vec<IterationRecord>> {
        let mut records = Vec::with_capacity(self.cfg.q_iterations - self.t);
        while !self.is_done() {
            records.push(self.step()?);
        }
        Ok(records)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            schema: CHECKPOINT_SCHEMA.to_string(),
            config: self.cfg.clone(),
            iteration: self.t,
            q_tables: self.tables.clone(),
            femto_power_dbm: self.allocation.femto_dbm_matrix().to_vec(),
            rng: self.rng.clone(),
            shared_entries: self.bus.entries_delivered,
        }
    }

    /// Rebuilds a paused episode. The topology is regenerated from the
    /// config seed and the per-agent states are re-derived from the stored
    /// power matrix, so the resumed run is bit-identical to an
    /// uninterrupted one.
    pub fn restore(cp: Checkpoint) -> Result<Self> {
        if cp.schema != CHECKPOINT_SCHEMA {
            return Err(Error::Format(format!(
                "unknown checkpoint schema {}",
                cp.schema
            )));
        }
        let mut episode = Episode::new(&cp.config)?;
        if cp.femto_power_dbm.len() != cp.config.n_femto * cp.config.n_sub {
            return Err(Error::Format(
                "checkpoint power matrix size mismatch".into(),
            ));
        }
        for i in 0..cp.config.n_femto {
            for s in 0..cp.config.n_sub {
                episode
                    .allocation
                    .set_femto_dbm(i, s, cp.femto_power_dbm[i * cp.config.n_sub + s]);
            }
        }
        let report = capacity_report(&episode.channels, &episode.allocation, cp.config.sigma2);
        episode.states = observe_states(&cp.config, &episode.allocation, &report)
            .iter()
            .map(|s| s.id() as u8)
            .collect();
        episode.tables = cp.q_tables;
        episode.rng = cp.rng;
        episode.t = cp.iteration;
        episode.bus.entries_delivered = cp.shared_entries;
        episode.bus.rows_delivered = 0; // not tracked across pauses
        Ok(episode)
    }
}

/// Runs one full episode from a config. Deterministic: the same config
/// (including seed) always produces the same trace.
pub fn run_episode(cfg: &SimConfig) -> Result<RunTrace> {
    let mut episode = Episode::new(cfg)?;
    let records = episode.run_remaining()?;
    RunTrace::new(cfg.clone(), records)
}

pub const TRACE_SCHEMA: &str = "femtoq.trace.v1";

/// Writes the per-step trace CSV: one row per
/// (iteration, subcarrier, agent), preceded by a schema comment line.
pub fn write_trace_csv<W: std::io::Write>(trace: &RunTrace, mut out: W) -> Result<()> {
    writeln!(out, "# schema: {TRACE_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "subcarrier",
        "agent",
        "state",
        "action",
        "reward",
        "c_o",
        "c_i",
        "shared_entries",
    ])?;
    let n_sub = trace.config.n_sub;
    for (t, rec) in trace.records.iter().enumerate() {
        for sub in 0..n_sub {
            for agent in 0..trace.config.n_femto {
                let step = &rec.steps[agent * n_sub + sub];
                w.write_record([
                    (trace.start_iteration + t).to_string(),
                    sub.to_string(),
                    agent.to_string(),
                    step.state.to_string(),
                    format!("{}", step.action_dbm),
                    format!("{}", step.reward),
                    format!("{}", rec.macro_capacity[sub]),
                    format!("{}", rec.femto_capacity[agent * n_sub + sub]),
                    rec.shared_entries.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn trace_csv_string(trace: &RunTrace) -> Result<String> {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// A trace reconstructed from CSV; enough for metric recomputation.
#[derive(Debug, Clone)]
pub struct LoadedTrace {
    pub n_femto: usize,
    pub n_sub: usize,
    pub start_iteration: usize,
    pub records: Vec<IterationRecord>,
}

/// Parses a trace CSV produced by [`write_trace_csv`].
pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<LoadedTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    #[derive(Deserialize)]
    struct Row {
        iteration: usize,
        subcarrier: usize,
        agent: usize,
        state: u8,
        action: f64,
        reward: f64,
        c_o: f64,
        c_i: f64,
        shared_entries: u64,
    }
    let mut rows: Vec<Row> = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Format("trace has no data rows".into()));
    }
    let n_sub = rows.iter().map(|r| r.subcarrier).max().unwrap() + 1;
    let n_femto = rows.iter().map(|r| r.agent).max().unwrap() + 1;
    let start = rows.iter().map(|r| r.iteration).min().unwrap();
    let n_iter = rows.iter().map(|r| r.iteration).max().unwrap() + 1 - start;
    if rows.len() != n_sub * n_femto * n_iter {
        return Err(Error::Format(format!(
            "expected {} rows for {} iterations x {} subcarriers x {} agents, found {}",
            n_sub * n_femto * n_iter,
            n_iter,
            n_sub,
            n_femto,
            rows.len()
        )));
    }
    let mut records = vec![
        IterationRecord {
            macro_capacity: vec![0.0; n_sub],
            femto_capacity: vec![0.0; n_femto * n_sub],
            steps: vec![
                AgentStep {
                    state: 0,
                    action_dbm: 0.0,
                    reward: 0.0
                };
                n_femto * n_sub
            ],
            shared_entries: 0,
        };
        n_iter
    ];
    for r in rows {
        let rec = &mut records[r.iteration - start];
        rec.macro_capacity[r.subcarrier] = r.c_o;
        rec.femto_capacity[r.agent * n_sub + r.subcarrier] = r.c_i;
        rec.steps[r.agent * n_sub + r.subcarrier] = AgentStep {
            state: r.state,
            action_dbm: r.action,
            reward: r.reward,
        };
        rec.shared_entries = r.shared_entries;
    }
    Ok(LoadedTrace {
        n_femto,
        n_sub,
        start_iteration: start,
        records,
    })
}
