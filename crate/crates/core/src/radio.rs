//! Radio environment: network topology, path-loss channel gains, and
//! SINR capacities for a macrocell underlaid with femtocells.
//!
//! One macro base station (MBS) serves a single macro user while `N`
//! femto base stations (FBS) each serve one femto user on the same
//! `n_sub` downlink subcarriers. Channel gains follow a pure path-loss
//! model `h = d^-k`, so gains carry a subcarrier index only for
//! interface generality.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum MBS to macro-user distance (meters).
pub const MAX_MBS_TO_MACRO_USER_M: f64 = 1000.0;
/// Maximum MBS to femto-user distance (meters).
pub const MAX_MBS_TO_FEMTO_USER_M: f64 = 800.0;
/// Maximum FBS to its own user distance (meters).
pub const MAX_FBS_TO_OWN_USER_M: f64 = 80.0;
/// Maximum FBS to another femtocell's user distance (meters).
pub const MAX_FBS_TO_OTHER_USER_M: f64 = 300.0;
/// Maximum FBS to macro-user distance (meters).
pub const MAX_FBS_TO_MACRO_USER_M: f64 = 800.0;
/// Minimum separation between any two placed nodes (meters); keeps every
/// path-loss gain finite.
pub const MIN_SEPARATION_M: f64 = 1.0;

/// Slack used when re-validating a topology that went through the
/// 6-significant-digit text round trip.
const DIST_TOL_M: f64 = 1e-3;

/// Milliwatts for a dBm value. `-inf` dBm maps to 0 mW.
pub fn dbm_to_linear_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// dBm for a linear milliwatt value. 0 mW maps to `-inf` dBm.
pub fn linear_mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Node positions for one deployment: the MBS at a fixed position, its
/// macro user, and one (FBS, femto user) pair per femtocell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub mbs: Point,
    pub macro_user: Point,
    pub fbs: Vec<Point>,
    pub femto_users: Vec<Point>,
}

impl Topology {
    pub fn n_femto(&self) -> usize {
        self.fbs.len()
    }

    /// Checks every distance constraint plus strictly positive distances on
    /// all links used by the gain computation.
    pub fn validate(&self) -> Result<()> {
        if self.fbs.len() != self.femto_users.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} FBS but {} femto users",
                self.fbs.len(),
                self.femto_users.len()
            )));
        }
        let check_max = |d: f64, max: f64, what: &str| -> Result<()> {
            if d > max + DIST_TOL_M {
                return Err(Error::InvalidGeometry(format!(
                    "{what} distance {d:.3} m exceeds {max} m"
                )));
            }
            if d <= 0.0 {
                return Err(Error::InvalidGeometry(format!("{what} distance is zero")));
            }
            Ok(())
        };
        check_max(
            self.mbs.distance(&self.macro_user),
            MAX_MBS_TO_MACRO_USER_M,
            "MBS to macro user",
        )?;
        for (i, user) in self.femto_users.iter().enumerate() {
            check_max(
                self.mbs.distance(user),
                MAX_MBS_TO_FEMTO_USER_M,
                &format!("MBS to femto user {i}"),
            )?;
        }
        for (i, fbs) in self.fbs.iter().enumerate() {
            check_max(
                fbs.distance(&self.macro_user),
                MAX_FBS_TO_MACRO_USER_M,
                &format!("FBS {i} to macro user"),
            )?;
            for (j, user) in self.femto_users.iter().enumerate() {
                let max = if i == j {
                    MAX_FBS_TO_OWN_USER_M
                } else {
                    MAX_FBS_TO_OTHER_USER_M
                };
                check_max(
                    fbs.distance(user),
                    max,
                    &format!("FBS {i} to femto user {j}"),
                )?;
            }
        }
        Ok(())
    }

    /// Serializes positions (meters, 6 significant digits) to JSON so a
    /// deployment can be stored next to its traces and replayed.
    pub fn to_json(&self) -> Result<String> {
        let rounded = Topology {
            mbs: round_point(self.mbs),
            macro_user: round_point(self.macro_user),
            fbs: self.fbs.iter().copied().map(round_point).collect(),
            femto_users: self.femto_users.iter().copied().map(round_point).collect(),
        };
        Ok(serde_json::to_string_pretty(&rounded)?)
    }

    pub fn from_json(text: &str) -> Result<Topology> {
        let topo: Topology = serde_json::from_str(text)?;
        topo.validate()?;
        Ok(topo)
    }
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn round_point(p: Point) -> Point {
    Point::new(round_sig(p.x, 6), round_sig(p.y, 6))
}

fn sample_in_disc(center: Point, radius: f64, rng: &mut ChaCha8Rng) -> Point {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = TAU * rng.gen::<f64>();
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

fn min_distance_to(p: &Point, placed: &[Point]) -> f64 {
    placed
        .iter()
        .map(|q| p.distance(q))
        .fold(f64::INFINITY, f64::min)
}

/// Default cap on total candidate draws during placement.
pub const DEFAULT_PLACEMENT_ATTEMPTS: usize = 200_000;

/// Candidate draws for a single node before the whole deployment restarts.
const PER_NODE_DRAWS: usize = 2_000;

/// Default distance of the femtocell neighborhood from the macro user,
/// relative to the macro user's own range.
///
/// The femtocell tier is a compact block of cells placed a distance
/// `scale * d(MBS, macro user)` from the macro user. A tier scattered
/// uniformly over the whole 800 m disc is usually too far away to move
/// the macro user's SINR at femto power budgets, which would make the
/// interference-control experiments vacuous; a compact neighborhood at a
/// range-proportional offset keeps the tier influential at any macro-user
/// position and gives the cells comparable interference roles.
pub const DEFAULT_FBS_CLUSTER_SCALE: f64 = 0.35;

/// Default radius (meters) of the femtocell neighborhood around its
/// center point.
pub const DEFAULT_FBS_CLUSTER_RADIUS_M: f64 = 30.0;

/// Default radius (meters) within which a femtocell's user is placed.
pub const DEFAULT_FEMTO_USER_RADIUS_M: f64 = MAX_FBS_TO_OWN_USER_M;

/// Places the MBS at the origin, the macro user uniformly in its 1000 m
/// disc, and each (FBS, user) pair uniformly subject to the distance
/// constraints, via rejection sampling. Deterministic for a fixed seed.
pub fn generate_topology(n_femto: usize, rng_seed: u64) -> Result<Topology> {
    generate_topology_with(
        n_femto,
        rng_seed,
        DEFAULT_PLACEMENT_ATTEMPTS,
        &PlacementShape::default(),
    )
}

/// Distribution parameters of the deployment; the hard distance
/// constraints stay fixed, these only shape where nodes fall inside them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementShape {
    /// Neighborhood offset from the macro user, relative to its range.
    pub fbs_cluster_scale: f64,
    /// Neighborhood radius in meters.
    pub fbs_cluster_radius_m: f64,
    /// Femto-user tether radius in meters (at most 80).
    pub femto_user_radius_m: f64,
    /// Minimum femto-user link distance in meters.
    pub femto_user_min_m: f64,
}

impl Default for PlacementShape {
    fn default() -> Self {
        Self {
            fbs_cluster_scale: DEFAULT_FBS_CLUSTER_SCALE,
            fbs_cluster_radius_m: DEFAULT_FBS_CLUSTER_RADIUS_M,
            femto_user_radius_m: DEFAULT_FEMTO_USER_RADIUS_M,
            femto_user_min_m: MIN_SEPARATION_M,
        }
    }
}

impl PlacementShape {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64, floor: f64| x.is_finite() && x > floor;
        if !positive(self.fbs_cluster_scale, 0.0)
            || !positive(self.fbs_cluster_radius_m, MIN_SEPARATION_M)
            || !positive(self.femto_user_radius_m, MIN_SEPARATION_M)
        {
            return Err(Error::InvalidParameter(
                "placement shape parameters must be positive".into(),
            ));
        }
        if self.femto_user_radius_m > MAX_FBS_TO_OWN_USER_M {
            return Err(Error::InvalidParameter(format!(
                "femto_user_radius_m {} exceeds the {} m tether",
                self.femto_user_radius_m, MAX_FBS_TO_OWN_USER_M
            )));
        }
        if self.femto_user_min_m < MIN_SEPARATION_M
            || self.femto_user_min_m >= self.femto_user_radius_m
        {
            return Err(Error::InvalidParameter(
                "femto_user_min_m must lie in [1, femto_user_radius_m)".into(),
            ));
        }
        Ok(())
    }
}

pub fn generate_topology_with(
    n_femto: usize,
    rng_seed: u64,
    max_attempts: usize,
    shape: &PlacementShape,
) -> Result<Topology> {
    if n_femto == 0 {
        return Err(Error::InvalidParameter("n_femto must be at least 1".into()));
    }
    shape.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mbs = Point::new(0.0, 0.0);
    let mut draws = 0usize;
    // An FBS farther than this from the MBS cannot have a user satisfying
    // both the 80 m tether and the 800 m MBS range.
    let max_fbs_to_mbs = MAX_MBS_TO_FEMTO_USER_M + MAX_FBS_TO_OWN_USER_M - MIN_SEPARATION_M;

    'deployment: while draws < max_attempts {
        draws += 1;
        let macro_user = sample_in_disc(mbs, MAX_MBS_TO_MACRO_USER_M, &mut rng);
        if mbs.distance(&macro_user) < MIN_SEPARATION_M {
            continue;
        }
        // The femtocell neighborhood: a compact disc offset from the macro
        // user in a uniformly random direction.
        let offset = shape.fbs_cluster_scale * mbs.distance(&macro_user);
        let theta = TAU * rng.gen::<f64>();
        let center = Point::new(
            macro_user.x + offset * theta.cos(),
            macro_user.y + offset * theta.sin(),
        );

        let mut fbs: Vec<Point> = Vec::with_capacity(n_femto);
        let mut users: Vec<Point> = Vec::with_capacity(n_femto);
        for _ in 0..n_femto {
            // FBS_i: uniform in the neighborhood disc, within 800 m of the
            // macro user and 300 m of every already-placed femto user.
            let mut placed_fbs = None;
            for _ in 0..PER_NODE_DRAWS {
                if draws >= max_attempts {
                    break;
                }
                draws += 1;
                let p = sample_in_disc(center, shape.fbs_cluster_radius_m, &mut rng);
                let near_all_users = users
                    .iter()
                    .all(|u| p.distance(u) <= MAX_FBS_TO_OTHER_USER_M);
                let separated = p.distance(&mbs) >= MIN_SEPARATION_M
                    && p.distance(&macro_user) >= MIN_SEPARATION_M
                    && min_distance_to(&p, &fbs) >= MIN_SEPARATION_M
                    && min_distance_to(&p, &users) >= MIN_SEPARATION_M;
                if p.distance(&macro_user) <= MAX_FBS_TO_MACRO_USER_M
                    && p.distance(&mbs) <= max_fbs_to_mbs
                    && near_all_users
                    && separated
                {
                    placed_fbs = Some(p);
                    break;
                }
            }
            let Some(new_fbs) = placed_fbs else {
                continue 'deployment;
            };

            // Its user: uniform in the 80 m disc, within 800 m of the MBS and
            // 300 m of every already-placed FBS.
            let mut placed_user = None;
            for _ in 0..PER_NODE_DRAWS {
                if draws >= max_attempts {
                    break;
                }
                draws += 1;
                let p = sample_in_disc(new_fbs, shape.femto_user_radius_m, &mut rng);
                if p.distance(&new_fbs) < shape.femto_user_min_m {
                    continue;
                }
                let in_macro_range = p.distance(&mbs) <= MAX_MBS_TO_FEMTO_USER_M;
                let near_other_fbs = fbs.iter().all(|f| p.distance(f) <= MAX_FBS_TO_OTHER_USER_M);
                let separated = p.distance(&mbs) >= MIN_SEPARATION_M
                    && p.distance(&macro_user) >= MIN_SEPARATION_M
                    && p.distance(&new_fbs) >= MIN_SEPARATION_M
                    && min_distance_to(&p, &fbs) >= MIN_SEPARATION_M
                    && min_distance_to(&p, &users) >= MIN_SEPARATION_M;
                if in_macro_range && near_other_fbs && separated {
                    placed_user = Some(p);
                    break;
                }
            }
            let Some(new_user) = placed_user else {
                continue 'deployment;
            };

            fbs.push(new_fbs);
            users.push(new_user);
        }

        let topo = Topology {
            mbs,
            macro_user,
            fbs,
            femto_users: users,
        };
        topo.validate()?;
        return Ok(topo);
    }

    Err(Error::PlacementFailed {
        attempts: draws,
        reason: format!("could not place {n_femto} femtocells under the distance constraints"),
    })
}

/// Path-loss gain `d^-k` for a link of length `d` meters.
pub fn path_gain(distance_m: f64, exponent: f64) -> Result<f64> {
    if distance_m <= 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "non-positive link distance {distance_m}"
        )));
    }
    Ok(distance_m.powf(-exponent))
}

/// Per-link channel gains for every link the capacity formulas need.
///
/// Gains are identical across subcarriers under the path-loss model; the
/// subcarrier argument on the accessors is kept for interface generality
/// and bounds-checked only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    n_femto: usize,
    n_sub: usize,
    path_loss_exponent: f64,
    mbs_to_macro_user: f64,
    /// Gain from the MBS to femto user `i`.
    mbs_to_femto_user: Vec<f64>,
    /// Gain from FBS `i` to the macro user.
    fbs_to_macro_user: Vec<f64>,
    /// Gain from FBS `j` to the user of femtocell `i`, row-major `[j][i]`.
    fbs_to_femto_user: Vec<f64>,
}

/// Computes `h = d^-k` for every link in the topology.
pub fn channel_gains(topo: &Topology, exponent: f64, n_sub: usize) -> Result<ChannelMatrix> {
    ChannelMatrix::from_topology(topo, exponent, n_sub)
}

impl ChannelMatrix {
    pub fn from_topology(topo: &Topology, exponent: f64, n_sub: usize) -> Result<Self> {
        let n = topo.n_femto();
        let mbs_to_macro_user = path_gain(topo.mbs.distance(&topo.macro_user), exponent)?;
        let mut mbs_to_femto_user = Vec::with_capacity(n);
        let mut fbs_to_macro_user = Vec::with_capacity(n);
        let mut fbs_to_femto_user = vec![0.0; n * n];
        for i in 0..n {
            mbs_to_femto_user.push(path_gain(
                topo.mbs.distance(&topo.femto_users[i]),
                exponent,
            )?);
            fbs_to_macro_user.push(path_gain(topo.fbs[i].distance(&topo.macro_user), exponent)?);
        }
        for j in 0..n {
            for i in 0..n {
                fbs_to_femto_user[j * n + i] =
                    path_gain(topo.fbs[j].distance(&topo.femto_users[i]), exponent)?;
            }
        }
        let ch = Self {
            n_femto: n,
            n_sub,
            path_loss_exponent: exponent,
            mbs_to_macro_user,
            mbs_to_femto_user,
            fbs_to_macro_user,
            fbs_to_femto_user,
        };
        debug_assert!(ch.all_finite_positive());
        Ok(ch)
    }

    /// Builds a matrix from raw per-link gains; used for hand-crafted
    /// scenarios and tests.
    #[allow(clippy::too_many_arguments)]
    pub fn from_gains(
        n_femto: usize,
        n_sub: usize,
        path_loss_exponent: f64,
        mbs_to_macro_user: f64,
        mbs_to_femto_user: Vec<f64>,
        fbs_to_macro_user: Vec<f64>,
        fbs_to_femto_user: Vec<f64>,
    ) -> Result<Self> {
        if mbs_to_femto_user.len() != n_femto
            || fbs_to_macro_user.len() != n_femto
            || fbs_to_femto_user.len() != n_femto * n_femto
        {
            return Err(Error::InvalidParameter(
                "gain vector lengths do not match n_femto".into(),
            ));
        }
        Ok(Self {
            n_femto,
            n_sub,
            path_loss_exponent,
            mbs_to_macro_user,
            mbs_to_femto_user,
            fbs_to_macro_user,
            fbs_to_femto_user,
        })
    }

    fn all_finite_positive(&self) -> bool {
        let one = |g: &f64| g.is_finite() && *g > 0.0;
        one(&self.mbs_to_macro_user)
            && self.mbs_to_femto_user.iter().all(one)
            && self.fbs_to_macro_user.iter().all(one)
            && self.fbs_to_femto_user.iter().all(one)
    }

    pub fn n_femto(&self) -> usize {
        self.n_femto
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }

    pub fn mbs_to_macro_user(&self, subcarrier: usize) -> f64 {
        debug_assert!(subcarrier < self.n_sub);
        self.mbs_to_macro_user
    }

    pub fn mbs_to_femto_user(&self, i: usize, subcarrier: usize) -> f64 {
        debug_assert!(subcarrier < self.n_sub);
        self.mbs_to_femto_user[i]
    }

    pub fn fbs_to_macro_user(&self, i: usize, subcarrier: usize) -> f64 {
        debug_assert!(subcarrier < self.n_sub);
        self.fbs_to_macro_user[i]
    }

    /// Gain from FBS `j` to the user served by femtocell `i`.
    pub fn fbs_to_femto_user(&self, j: usize, i: usize, subcarrier: usize) -> f64 {
        debug_assert!(subcarrier < self.n_sub);
        self.fbs_to_femto_user[j * self.n_femto + i]
    }
}

/// Per-transmitter, per-subcarrier powers. dBm is the primary field and a
/// linear milliwatt mirror is kept in lockstep; `-inf` dBm represents a
/// silent transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    n_femto: usize,
    n_sub: usize,
    femto_dbm: Vec<f64>,
    femto_linear: Vec<f64>,
    macro_dbm: Vec<f64>,
    macro_linear: Vec<f64>,
    p_max_femto_dbm: f64,
    p_max_macro_dbm: f64,
}

impl PowerAllocation {
    /// All femtocells start at `initial_femto_dbm` on every subcarrier; the
    /// macro budget is split equally in linear power across subcarriers.
    pub fn new(
        n_femto: usize,
        n_sub: usize,
        initial_femto_dbm: f64,
        p_max_femto_dbm: f64,
        p_max_macro_dbm: f64,
    ) -> Self {
        let macro_linear_per_sub = dbm_to_linear_mw(p_max_macro_dbm) / n_sub as f64;
        Self {
            n_femto,
            n_sub,
            femto_dbm: vec![initial_femto_dbm; n_femto * n_sub],
            femto_linear: vec![dbm_to_linear_mw(initial_femto_dbm); n_femto * n_sub],
            macro_dbm: vec![linear_mw_to_dbm(macro_linear_per_sub); n_sub],
            macro_linear: vec![macro_linear_per_sub; n_sub],
            p_max_femto_dbm,
            p_max_macro_dbm,
        }
    }

    pub fn n_femto(&self) -> usize {
        self.n_femto
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn p_max_femto_dbm(&self) -> f64 {
        self.p_max_femto_dbm
    }

    pub fn p_max_macro_dbm(&self) -> f64 {
        self.p_max_macro_dbm
    }

    pub fn set_femto_dbm(&mut self, i: usize, subcarrier: usize, dbm: f64) {
        let idx = i * self.n_sub + subcarrier;
        self.femto_dbm[idx] = dbm;
        self.femto_linear[idx] = dbm_to_linear_mw(dbm);
    }

    pub fn femto_dbm(&self, i: usize, subcarrier: usize) -> f64 {
        self.femto_dbm[i * self.n_sub + subcarrier]
    }

    pub fn femto_linear(&self, i: usize, subcarrier: usize) -> f64 {
        self.femto_linear[i * self.n_sub + subcarrier]
    }

    pub fn macro_dbm(&self, subcarrier: usize) -> f64 {
        self.macro_dbm[subcarrier]
    }

    pub fn macro_linear(&self, subcarrier: usize) -> f64 {
        self.macro_linear[subcarrier]
    }

    /// Total linear transmit power of femtocell `i` across subcarriers (mW).
    pub fn total_femto_linear(&self, i: usize) -> f64 {
        (0..self.n_sub).map(|n| self.femto_linear(i, n)).sum()
    }

    /// Whether femtocell `i` currently respects its total power budget.
    pub fn femto_budget_ok(&self, i: usize) -> bool {
        self.total_femto_linear(i) <= dbm_to_linear_mw(self.p_max_femto_dbm)
    }

    pub fn femto_dbm_matrix(&self) -> &[f64] {
        &self.femto_dbm
    }
}

/// Capacities (bits/sec/Hz) for one joint allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// `log2(1 + SINR)` at the macro user, one entry per subcarrier.
    pub macro_capacity: Vec<f64>,
    /// Per-femtocell per-subcarrier capacity, row-major `[i][n]`.
    pub femto_capacity: Vec<f64>,
    pub noise_power: f64,
}

impl CapacityReport {
    pub fn femto(&self, i: usize, subcarrier: usize, n_sub: usize) -> f64 {
        self.femto_capacity[i * n_sub + subcarrier]
    }
}

/// Macro-user capacity on one subcarrier: the femtocell transmissions on
/// that subcarrier are the interference.
pub fn macro_capacity(
    ch: &ChannelMatrix,
    pa: &PowerAllocation,
    sigma2: f64,
    subcarrier: usize,
) -> f64 {
    let signal = ch.mbs_to_macro_user(subcarrier) * pa.macro_linear(subcarrier);
    let interference: f64 = (0..ch.n_femto())
        .map(|i| ch.fbs_to_macro_user(i, subcarrier) * pa.femto_linear(i, subcarrier))
        .sum();
    (1.0 + signal / (interference + sigma2)).log2()
}

/// Femto-user capacity on one subcarrier: the other femtocells plus the
/// MBS transmission are the interference.
pub fn femto_capacity(
    ch: &ChannelMatrix,
    pa: &PowerAllocation,
    sigma2: f64,
    i: usize,
    subcarrier: usize,
) -> f64 {
    let signal = ch.fbs_to_femto_user(i, i, subcarrier) * pa.femto_linear(i, subcarrier);
    let cross: f64 = (0..ch.n_femto())
        .filter(|&j| j != i)
        .map(|j| ch.fbs_to_femto_user(j, i, subcarrier) * pa.femto_linear(j, subcarrier))
        .sum();
    let macro_interf = ch.mbs_to_femto_user(i, subcarrier) * pa.macro_linear(subcarrier);
    (1.0 + signal / (cross + macro_interf + sigma2)).log2()
}

/// Evaluates every capacity for the given allocation.
pub fn capacity_report(ch: &ChannelMatrix, pa: &PowerAllocation, sigma2: f64) -> CapacityReport {
    let n_sub = ch.n_sub();
    let n = ch.n_femto();
    let macro_capacity_v: Vec<f64> = (0..n_sub)
        .map(|s| macro_capacity(ch, pa, sigma2, s))
        .collect();
    let mut femto_capacity_v = vec![0.0; n * n_sub];
    for i in 0..n {
        for s in 0..n_sub {
            femto_capacity_v[i * n_sub + s] = femto_capacity(ch, pa, sigma2, i, s);
        }
    }
    CapacityReport {
        macro_capacity: macro_capacity_v,
        femto_capacity: femto_capacity_v,
        noise_power: sigma2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_femto_matrix(h_oo: f64, h_io: f64, h_ii: f64, h_oi: f64) -> ChannelMatrix {
        ChannelMatrix::from_gains(1, 1, 2.0, h_oo, vec![h_oi], vec![h_io], vec![h_ii]).unwrap()
    }

    #[test]
    fn path_gain_reference_values() {
        assert_eq!(path_gain(100.0, 2.0).unwrap(), 1e-4);
        assert_eq!(path_gain(1.0, 2.0).unwrap(), 1.0);
        let g = path_gain(80.0, 2.0).unwrap();
        assert!((g - 1.5625e-4).abs() < 1e-18);
    }

    #[test]
    fn path_gain_rejects_zero_distance() {
        assert!(path_gain(0.0, 2.0).is_err());
        assert!(path_gain(-1.0, 2.0).is_err());
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-20.0, -3.0, 0.0, 7.5, 15.0, 43.0] {
            let mw = dbm_to_linear_mw(dbm);
            assert!((linear_mw_to_dbm(mw) - dbm).abs() < 1e-12);
        }
        assert_eq!(dbm_to_linear_mw(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn topology_constraints_hold_for_small_and_large_counts() {
        for (n, seed) in [(4usize, 42u64), (15, 7)] {
            let topo = generate_topology(n, seed).unwrap();
            assert_eq!(topo.n_femto(), n);
            topo.validate().unwrap();
        }
    }

    #[test]
    fn topology_is_deterministic() {
        let a = generate_topology(4, 42).unwrap();
        let b = generate_topology(4, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_topology(4, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn topology_rejects_zero_femto() {
        assert!(generate_topology(0, 1).is_err());
    }

    #[test]
    fn placement_cap_produces_diagnostic() {
        // 15 femtocells need at least 31 candidate draws, so a budget of
        // 20 must fail regardless of geometry luck.
        let err = generate_topology_with(15, 1, 20, &PlacementShape::default()).unwrap_err();
        match err {
            Error::PlacementFailed { attempts, .. } => assert!(attempts <= 20),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn topology_json_round_trip() {
        let topo = generate_topology(5, 11).unwrap();
        let text = topo.to_json().unwrap();
        let back = Topology::from_json(&text).unwrap();
        assert_eq!(back.n_femto(), 5);
        // 6 significant digits on meter-scale coordinates.
        for (a, b) in topo.fbs.iter().zip(back.fbs.iter()) {
            assert!((a.x - b.x).abs() < 1e-2);
            assert!((a.y - b.y).abs() < 1e-2);
        }
    }

    #[test]
    fn gains_do_not_depend_on_subcarrier() {
        let topo = generate_topology(3, 9).unwrap();
        let ch = channel_gains(&topo, 2.0, 6).unwrap();
        for s in 1..6 {
            assert_eq!(ch.mbs_to_macro_user(s), ch.mbs_to_macro_user(0));
            for i in 0..3 {
                assert_eq!(ch.fbs_to_macro_user(i, s), ch.fbs_to_macro_user(i, 0));
                for j in 0..3 {
                    assert_eq!(ch.fbs_to_femto_user(j, i, s), ch.fbs_to_femto_user(j, i, 0));
                }
            }
        }
    }

    #[test]
    fn macro_capacity_reference_points() {
        let sigma2 = 1e-7;
        // No interference, h_oo * P_o / sigma2 == 1 => log2(2) = 1.
        let ch = single_femto_matrix(1.0, 1.0, 1.0, 0.5);
        let mut pa = PowerAllocation::new(1, 1, f64::NEG_INFINITY, 15.0, linear_mw_to_dbm(sigma2));
        assert!((macro_capacity(&ch, &pa, sigma2, 0) - 1.0).abs() < 1e-12);

        // Zero macro signal => capacity 0.
        let pa_zero = PowerAllocation::new(1, 1, f64::NEG_INFINITY, 15.0, f64::NEG_INFINITY);
        assert_eq!(macro_capacity(&ch, &pa_zero, sigma2, 0), 0.0);

        // Single interferer with h_io * P_i == sigma2 and h_oo * P_o == 2 sigma2:
        // SINR = 2s / (s + s) = 1 => capacity 1.
        let ch2 = single_femto_matrix(1.0, 1.0, 1.0, 0.5);
        let mut pa2 = PowerAllocation::new(
            1,
            1,
            f64::NEG_INFINITY,
            15.0,
            linear_mw_to_dbm(2.0 * sigma2),
        );
        pa2.set_femto_dbm(0, 0, linear_mw_to_dbm(sigma2));
        assert!((macro_capacity(&ch2, &pa2, sigma2, 0) - 1.0).abs() < 1e-12);

        // Monotonicity: raising the interferer's power cannot raise C_o.
        let before = macro_capacity(&ch2, &pa2, sigma2, 0);
        pa.set_femto_dbm(0, 0, 0.0);
        pa2.set_femto_dbm(0, 0, linear_mw_to_dbm(2.0 * sigma2));
        assert!(macro_capacity(&ch2, &pa2, sigma2, 0) < before);
    }

    #[test]
    fn femto_capacity_reference_points() {
        let sigma2 = 1e-7;
        // P_i = 0 => C_i = 0.
        let ch = single_femto_matrix(1.0, 1.0, 1.0, 1.0);
        let pa = PowerAllocation::new(1, 1, f64::NEG_INFINITY, 15.0, 43.0);
        assert_eq!(femto_capacity(&ch, &pa, sigma2, 0, 0), 0.0);

        // No cross interference, no macro power, h_ii * P_i = 3 sigma2 => log2(4) = 2.
        let ch2 = single_femto_matrix(1.0, 1.0, 1.0, 1.0);
        let mut pa2 = PowerAllocation::new(1, 1, f64::NEG_INFINITY, 15.0, f64::NEG_INFINITY);
        pa2.set_femto_dbm(0, 0, linear_mw_to_dbm(3.0 * sigma2));
        assert!((femto_capacity(&ch2, &pa2, sigma2, 0, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cross_interference_strictly_reduces_victim_capacity() {
        let sigma2 = 1e-7;
        let ch = ChannelMatrix::from_gains(
            2,
            1,
            2.0,
            1e-6,
            vec![1e-6, 1e-6],
            vec![1e-6, 1e-6],
            vec![1e-4, 1e-5, 1e-5, 1e-4],
        )
        .unwrap();
        let mut pa = PowerAllocation::new(2, 1, 0.0, 15.0, 43.0);
        let before = femto_capacity(&ch, &pa, sigma2, 0, 0);
        // Double femto 1's linear power (+ ~3.01 dB).
        pa.set_femto_dbm(1, 0, linear_mw_to_dbm(2.0 * pa.femto_linear(1, 0)));
        let after = femto_capacity(&ch, &pa, sigma2, 0, 0);
        assert!(after < before);
    }

    #[test]
    fn macro_budget_split_uses_full_budget() {
        let pa = PowerAllocation::new(2, 6, -20.0, 15.0, 43.0);
        let total: f64 = (0..6).map(|s| pa.macro_linear(s)).sum();
        let budget = dbm_to_linear_mw(43.0);
        assert!((total - budget).abs() / budget < 1e-12);
    }

    #[test]
    fn linear_mirror_stays_consistent() {
        let mut pa = PowerAllocation::new(2, 3, -20.0, 15.0, 43.0);
        pa.set_femto_dbm(1, 2, 7.0);
        for i in 0..2 {
            for s in 0..3 {
                let from_dbm = dbm_to_linear_mw(pa.femto_dbm(i, s));
                let rel = (from_dbm - pa.femto_linear(i, s)).abs() / from_dbm.max(1e-300);
                assert!(rel < 1e-12);
            }
        }
    }

    #[test]
    fn capacities_stay_finite_on_the_action_grid() {
        let topo = generate_topology(4, 3).unwrap();
        let ch = channel_gains(&topo, 2.0, 6).unwrap();
        let mut pa = PowerAllocation::new(4, 6, -20.0, 15.0, 43.0);
        for (i, dbm) in [(0usize, 15.0), (1, -20.0), (2, 14.0), (3, 0.0)] {
            for s in 0..6 {
                pa.set_femto_dbm(i, s, dbm);
            }
        }
        let report = capacity_report(&ch, &pa, 1e-7);
        assert!(report
            .macro_capacity
            .iter()
            .all(|c| c.is_finite() && *c >= 0.0));
        assert!(report
            .femto_capacity
            .iter()
            .all(|c| c.is_finite() && *c >= 0.0));
    }
}
