//! Per-femtocell learning agents: the coarse (interference, power-level)
//! state, the discrete transmit-power action grid, the three reward
//! functions, and independent / cooperative action selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlearn::{argmax_lowest, QTable};
use crate::radio::dbm_to_linear_mw;

/// Agent state: a binary macro-interference flag and a three-way bucket of
/// the femtocell's total transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    /// 1 when the macro user's capacity on this subcarrier is below target.
    pub interference: bool,
    /// 0 = comfortably under budget, 1 = near budget, 2 = over budget.
    pub power_level: u8,
}

impl AgentState {
    pub const COUNT: usize = 6;

    /// Packs the pair into `[0, 6)` as `I * 3 + P`.
    pub fn id(&self) -> usize {
        (self.interference as usize) * 3 + self.power_level as usize
    }

    pub fn from_id(id: usize) -> Result<Self> {
        if id >= Self::COUNT {
            return Err(Error::IndexOutOfRange(format!(
                "state id {id} >= {}",
                Self::COUNT
            )));
        }
        Ok(Self {
            interference: id >= 3,
            power_level: (id % 3) as u8,
        })
    }
}

/// Discrete transmit-power grid in dBm: the 18 levels stepped 2 dBm from
/// -20 toward the 15 dBm budget (the step sequence tops out at 14).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    levels_dbm: Vec<f64>,
}

impl Default for ActionSet {
    fn default() -> Self {
        Self::default_grid()
    }
}

impl ActionSet {
    pub fn default_grid() -> Self {
        let levels: Vec<f64> = (0..18).map(|k| -20.0 + 2.0 * k as f64).collect();
        Self { levels_dbm: levels }
    }

    pub fn from_levels(levels_dbm: Vec<f64>) -> Result<Self> {
        if levels_dbm.is_empty() {
            return Err(Error::InvalidParameter("empty action set".into()));
        }
        if levels_dbm.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite action level".into()));
        }
        if levels_dbm.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "action levels must be strictly ascending".into(),
            ));
        }
        Ok(Self { levels_dbm })
    }

    pub fn len(&self) -> usize {
        self.levels_dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels_dbm.is_empty()
    }

    pub fn dbm(&self, action: usize) -> f64 {
        self.levels_dbm[action]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels_dbm
    }

    pub fn contains(&self, dbm: f64) -> bool {
        self.levels_dbm.contains(&dbm)
    }
}

/// Which reward shape drives the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// Exponential macro-protection reward, -1 on budget violation.
    Rf1,
    /// Offset-quadratic macro-protection reward with constant `k`,
    /// 0 on budget violation.
    Rf2,
    /// Macro protection plus own-capacity term, -3 on budget violation.
    Rf3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSpec {
    pub kind: RewardKind,
    /// Target macro capacity (bits/sec/Hz) that defines macro QoS.
    pub target_capacity: f64,
    /// Offset constant, meaningful for `Rf2` only.
    pub k: Option<f64>,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self {
            kind: RewardKind::Rf1,
            target_capacity: 6.0,
            k: None,
        }
    }
}

impl RewardSpec {
    pub fn rf1(target_capacity: f64) -> Self {
        Self {
            kind: RewardKind::Rf1,
            target_capacity,
            k: None,
        }
    }

    pub fn rf2(target_capacity: f64, k: f64) -> Self {
        Self {
            kind: RewardKind::Rf2,
            target_capacity,
            k: Some(k),
        }
    }

    pub fn rf3(target_capacity: f64) -> Self {
        Self {
            kind: RewardKind::Rf3,
            target_capacity,
            k: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_capacity <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "target capacity {} must be positive",
                self.target_capacity
            )));
        }
        if self.kind == RewardKind::Rf2 {
            match self.k {
                Some(k) if k > 0.0 => {}
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "rf2 requires a positive k, got {other:?}"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Evaluates the configured reward for post-action capacities.
    pub fn reward(&self, c_o: f64, c_i: f64, budget_ok: bool) -> f64 {
        let r = match self.kind {
            RewardKind::Rf1 => reward_rf1(c_o, budget_ok, self.target_capacity),
            RewardKind::Rf2 => {
                reward_rf2(c_o, budget_ok, self.target_capacity, self.k.unwrap_or(80.0))
            }
            RewardKind::Rf3 => reward_rf3(c_o, c_i, budget_ok, self.target_capacity),
        };
        debug_assert!(self.bounds_ok(r), "reward {r} out of bounds for {self:?}");
        r
    }

    /// Range check for an emitted reward. The analytic ranges are
    /// {-1} u (0,1] for RF1, {0} u (-inf,K] for RF2 and {-3} u (-1,1)
    /// for RF3; the open ends are widened to closed ones here because
    /// `exp` underflows to zero for extreme capacity deviations.
    pub fn bounds_ok(&self, r: f64) -> bool {
        match self.kind {
            RewardKind::Rf1 => r == -1.0 || (0.0..=1.0).contains(&r),
            RewardKind::Rf2 => r == 0.0 || r <= self.k.unwrap_or(80.0),
            RewardKind::Rf3 => r == -3.0 || ((-1.0..=1.0).contains(&r)),
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            RewardKind::Rf1 => "rf1".to_string(),
            RewardKind::Rf2 => format!("rf2-k{}", self.k.unwrap_or(80.0)),
            RewardKind::Rf3 => "rf3".to_string(),
        }
    }
}

/// `exp(-(C_o - target)^2)` while within budget, -1 otherwise.
pub fn reward_rf1(c_o: f64, budget_ok: bool, target: f64) -> f64 {
    if budget_ok {
        (-(c_o - target).powi(2)).exp()
    } else {
        -1.0
    }
}

/// `k - (C_o - target)^2` while within budget, 0 otherwise.
pub fn reward_rf2(c_o: f64, budget_ok: bool, target: f64, k: f64) -> f64 {
    if budget_ok {
        k - (c_o - target).powi(2)
    } else {
        0.0
    }
}

/// `exp(-(C_o - target)^2) - exp(-C_i)` while within budget, -3 otherwise.
pub fn reward_rf3(c_o: f64, c_i: f64, budget_ok: bool, target: f64) -> f64 {
    if budget_ok {
        (-(c_o - target).powi(2)).exp() - (-c_i).exp()
    } else {
        -3.0
    }
}

/// Boundaries of the three-way total-power bucketing, in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLevelBands {
    pub low_dbm: f64,
    pub high_dbm: f64,
}

impl Default for PowerLevelBands {
    fn default() -> Self {
        Self::from_budget(15.0, 5.0)
    }
}

impl PowerLevelBands {
    /// Bands derived from the budget: level 0 below `p_max - margin`,
    /// level 1 up to `p_max`, level 2 above.
    pub fn from_budget(p_max_dbm: f64, margin_db: f64) -> Self {
        Self {
            low_dbm: p_max_dbm - margin_db,
            high_dbm: p_max_dbm,
        }
    }
}

/// Buckets a total linear power (mW) into level 0, 1 or 2. The comparison
/// happens in linear milliwatts against the linearized dBm thresholds;
/// boundary totals land in the higher level.
pub fn power_level(total_linear_mw: f64, bands: &PowerLevelBands) -> u8 {
    let low = dbm_to_linear_mw(bands.low_dbm);
    let high = dbm_to_linear_mw(bands.high_dbm);
    if total_linear_mw < low {
        0
    } else if total_linear_mw <= high {
        1
    } else {
        2
    }
}

/// Encodes the agent state from the macro capacity on one subcarrier and
/// the femtocell's total transmit power.
pub fn encode_state(
    c_o_n: f64,
    total_femto_power_linear_mw: f64,
    spec: &RewardSpec,
    bands: &PowerLevelBands,
) -> AgentState {
    AgentState {
        interference: c_o_n < spec.target_capacity,
        power_level: power_level(total_femto_power_linear_mw, bands),
    }
}

/// One agent's current-state Q-row as shared on the cooperation bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedQRow {
    pub sender: usize,
    pub subcarrier: usize,
    pub row: Vec<f64>,
}

impl SharedQRow {
    pub fn entry_count(&self) -> usize {
        self.row.len()
    }

    /// Canonical flat record (sender, subcarrier, then one field per
    /// action value) used for overhead accounting and trace dumps.
    pub fn canonical_record(&self) -> Vec<String> {
        let mut rec = vec![self.sender.to_string(), self.subcarrier.to_string()];
        rec.extend(self.row.iter().map(|v| format!("{v}")));
        rec
    }
}

/// Independent-learning greedy choice on the agent's own Q-row.
pub fn select_action_il(table: &QTable, state: AgentState) -> usize {
    argmax_lowest(table.row(state.id()))
}

/// Independent-learning choice with the exploration gate: same contract
/// as the epsilon-greedy core selection, applied to the agent's own
/// table.
pub fn select_action_il_epsilon<R: rand::Rng>(
    table: &QTable,
    state: AgentState,
    params: &crate::qlearn::LearningParams,
    t: usize,
    t_total: usize,
    rng: &mut R,
) -> usize {
    crate::qlearn::select_action_epsilon(table, state.id(), params, t, t_total, rng)
}

/// Cooperative choice: the argmax of the elementwise sum of every agent's
/// current-state row (own plus one received row per peer), lowest index on
/// ties. Every agent evaluating the same row set picks the same action.
pub fn select_action_cl(
    agent: usize,
    n_agents: usize,
    own: &SharedQRow,
    received: &[SharedQRow],
) -> Result<usize> {
    if own.sender != agent {
        return Err(Error::CooperationBusFault(format!(
            "own row sender {} does not match agent {agent}",
            own.sender
        )));
    }
    if received.len() != n_agents.saturating_sub(1) {
        return Err(Error::CooperationBusFault(format!(
            "agent {agent} received {} rows, expected {}",
            received.len(),
            n_agents.saturating_sub(1)
        )));
    }
    let mut seen = vec![false; n_agents];
    seen[agent] = true;
    let mut sum = own.row.clone();
    for shared in received {
        if shared.sender >= n_agents || seen[shared.sender] {
            return Err(Error::CooperationBusFault(format!(
                "missing or duplicate sender {}",
                shared.sender
            )));
        }
        if shared.subcarrier != own.subcarrier {
            return Err(Error::CooperationBusFault(format!(
                "row for subcarrier {} mixed into exchange on subcarrier {}",
                shared.subcarrier, own.subcarrier
            )));
        }
        if shared.row.len() != sum.len() {
            return Err(Error::CooperationBusFault(format!(
                "row length {} != {}",
                shared.row.len(),
                sum.len()
            )));
        }
        seen[shared.sender] = true;
        for (acc, v) in sum.iter_mut().zip(shared.row.iter()) {
            *acc += v;
        }
    }
    Ok(argmax_lowest(&sum))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_id_bijection_over_all_six_states() {
        for id in 0..AgentState::COUNT {
            let s = AgentState::from_id(id).unwrap();
            assert_eq!(s.id(), id);
        }
        assert!(AgentState::from_id(6).is_err());
    }

    #[test]
    fn default_grid_is_18_levels_stepped_2_dbm() {
        let grid = ActionSet::default_grid();
        assert_eq!(grid.len(), 18);
        assert_eq!(grid.dbm(0), -20.0);
        assert_eq!(grid.dbm(grid.len() - 1), 14.0);
        for w in grid.levels().windows(2) {
            assert_eq!(w[1] - w[0], 2.0);
        }
    }

    #[test]
    fn custom_grids_must_be_ascending() {
        assert!(ActionSet::from_levels(vec![0.0, 2.0, 2.0]).is_err());
        assert!(ActionSet::from_levels(vec![]).is_err());
        let seventeen: Vec<f64> = (0..17).map(|k| -20.0 + 2.0 * k as f64).collect();
        assert_eq!(ActionSet::from_levels(seventeen).unwrap().len(), 17);
    }

    #[test]
    fn encode_state_reference_points() {
        let spec = RewardSpec::rf1(6.0);
        let bands = PowerLevelBands::default();
        // Capacity exactly at target takes the >= branch.
        let s = encode_state(6.0, dbm_to_linear_mw(-20.0), &spec, &bands);
        assert!(!s.interference);
        assert_eq!(s.power_level, 0);

        // 6 dBm total with interference present: state {1, 0}.
        let s = encode_state(5.0, dbm_to_linear_mw(6.0), &spec, &bands);
        assert!(s.interference);
        assert_eq!(s.power_level, 0);
        assert_eq!(s.id(), 3);

        // 16 dBm total is over budget.
        let s = encode_state(7.0, dbm_to_linear_mw(16.0), &spec, &bands);
        assert_eq!(s.power_level, 2);
    }

    #[test]
    fn power_level_partition_boundaries() {
        let bands = PowerLevelBands::default();
        assert_eq!(power_level(dbm_to_linear_mw(10.0), &bands), 1);
        assert_eq!(power_level(dbm_to_linear_mw(10.0) - 1e-9, &bands), 0);
        assert_eq!(power_level(dbm_to_linear_mw(15.0), &bands), 1);
        assert_eq!(power_level(dbm_to_linear_mw(15.0) + 1e-9, &bands), 2);
        assert_eq!(power_level(0.0, &bands), 0);
    }

    #[test]
    fn rf1_reference_values() {
        assert_eq!(reward_rf1(6.0, true, 6.0), 1.0);
        assert_eq!(reward_rf1(6.0, false, 6.0), -1.0);
        assert!((reward_rf1(7.0, true, 6.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rf2_reference_values() {
        assert_eq!(reward_rf2(6.0, true, 6.0, 80.0), 80.0);
        assert_eq!(reward_rf2(6.0, false, 6.0, 80.0), 0.0);
        assert_eq!(reward_rf2(8.0, true, 6.0, 80.0), 76.0);
    }

    #[test]
    fn rf3_reference_values() {
        assert_eq!(reward_rf3(6.0, 0.0, true, 6.0), 0.0);
        assert_eq!(reward_rf3(6.0, 0.0, false, 6.0), -3.0);
        let r = reward_rf3(6.0, 2.0f64.ln(), true, 6.0);
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rf1_rewards_order_by_deviation() {
        let mut prev = f64::INFINITY;
        for dev in [0.0, 0.1, 0.5, 1.0, 2.0, 4.0] {
            let r = reward_rf1(6.0 + dev, true, 6.0);
            assert!(r < prev || dev == 0.0);
            prev = r;
        }
    }

    #[test]
    fn reward_dispatch_checks_bounds() {
        let specs = [
            RewardSpec::rf1(6.0),
            RewardSpec::rf2(6.0, 80.0),
            RewardSpec::rf3(6.0),
        ];
        for spec in specs {
            for c_o in [0.0, 3.0, 6.0, 9.0, 20.0] {
                for c_i in [0.0, 0.5, 4.0] {
                    for ok in [true, false] {
                        let r = spec.reward(c_o, c_i, ok);
                        assert!(spec.bounds_ok(r), "{spec:?} produced {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn il_selection_matches_greedy_row() {
        let mut table = QTable::zeros(6, 3);
        let state = AgentState::from_id(0).unwrap();
        table.set(0, 0, 1.0);
        table.set(0, 1, 2.0);
        table.set(0, 2, 3.0);
        assert_eq!(select_action_il(&table, state), 2);

        // All-zero row falls back to the lowest index.
        let other = AgentState::from_id(1).unwrap();
        assert_eq!(select_action_il(&table, other), 0);
    }

    #[test]
    fn il_epsilon_wrapper_is_greedy_when_exploration_is_off() {
        use rand::SeedableRng;
        let mut table = QTable::zeros(6, 3);
        let state = AgentState::from_id(2).unwrap();
        table.set(2, 1, 4.0);
        let params = crate::qlearn::LearningParams {
            epsilon: 0.0,
            ..Default::default()
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for t in 0..50 {
            assert_eq!(
                select_action_il_epsilon(&table, state, &params, t, 50, &mut rng),
                1
            );
        }
    }

    #[test]
    fn cl_selection_uses_the_row_sum() {
        // Two agents, rows (1,2,3) and (4,6,4.5): the sum peaks at the
        // middle action for both agents even though agent 0 alone would
        // pick the last one.
        let own0 = SharedQRow {
            sender: 0,
            subcarrier: 0,
            row: vec![1.0, 2.0, 3.0],
        };
        let own1 = SharedQRow {
            sender: 1,
            subcarrier: 0,
            row: vec![4.0, 6.0, 4.5],
        };
        let a0 = select_action_cl(0, 2, &own0, std::slice::from_ref(&own1)).unwrap();
        let a1 = select_action_cl(1, 2, &own1, std::slice::from_ref(&own0)).unwrap();
        assert_eq!(a0, 1);
        assert_eq!(a1, 1);
        assert_eq!(
            select_action_il(&row_table(&own0.row), AgentState::from_id(0).unwrap()),
            2
        );
    }

    fn row_table(row: &[f64]) -> QTable {
        let mut t = QTable::zeros(6, row.len());
        for (a, v) in row.iter().enumerate() {
            t.set(0, a, *v);
        }
        t
    }

    #[test]
    fn cl_with_zero_peers_rows_reduces_to_own_greedy() {
        let own = SharedQRow {
            sender: 0,
            subcarrier: 2,
            row: vec![0.5, 0.1, 0.4],
        };
        let peers = [
            SharedQRow {
                sender: 1,
                subcarrier: 2,
                row: vec![0.0; 3],
            },
            SharedQRow {
                sender: 2,
                subcarrier: 2,
                row: vec![0.0; 3],
            },
        ];
        assert_eq!(select_action_cl(0, 3, &own, &peers).unwrap(), 0);
    }

    #[test]
    fn cl_is_invariant_to_per_row_constant_shifts() {
        let own = SharedQRow {
            sender: 0,
            subcarrier: 0,
            row: vec![1.0, 5.0, 2.0],
        };
        let peer = SharedQRow {
            sender: 1,
            subcarrier: 0,
            row: vec![0.0, 1.0, 3.5],
        };
        let base = select_action_cl(0, 2, &own, std::slice::from_ref(&peer)).unwrap();
        let shift = |r: &SharedQRow, c: f64| SharedQRow {
            sender: r.sender,
            subcarrier: r.subcarrier,
            row: r.row.iter().map(|v| v + c).collect(),
        };
        let shifted = select_action_cl(0, 2, &shift(&own, 7.0), &[shift(&peer, -2.0)]).unwrap();
        assert_eq!(base, shifted);
    }

    #[test]
    fn cl_rejects_missing_duplicate_or_mismatched_rows() {
        let own = SharedQRow {
            sender: 0,
            subcarrier: 0,
            row: vec![0.0; 3],
        };
        // Missing peer.
        assert!(select_action_cl(0, 3, &own, &[]).is_err());
        // Duplicate sender.
        let dup = vec![
            SharedQRow {
                sender: 1,
                subcarrier: 0,
                row: vec![0.0; 3],
            },
            SharedQRow {
                sender: 1,
                subcarrier: 0,
                row: vec![0.0; 3],
            },
        ];
        assert!(select_action_cl(0, 3, &own, &dup).is_err());
        // Wrong subcarrier.
        let wrong_sub = vec![SharedQRow {
            sender: 1,
            subcarrier: 1,
            row: vec![0.0; 3],
        }];
        assert!(select_action_cl(0, 2, &own, &wrong_sub).is_err());
        // Ragged row.
        let ragged = vec![SharedQRow {
            sender: 1,
            subcarrier: 0,
            row: vec![0.0; 2],
        }];
        assert!(select_action_cl(0, 2, &own, &ragged).is_err());
    }

    #[test]
    fn canonical_record_layout() {
        let row = SharedQRow {
            sender: 3,
            subcarrier: 1,
            row: vec![0.25, -1.5],
        };
        assert_eq!(row.canonical_record(), vec!["3", "1", "0.25", "-1.5"]);
        assert_eq!(row.entry_count(), 2);
    }
}
