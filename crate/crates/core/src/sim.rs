//! Grid network, protocol-model interference, clustering and TDMA
//! scheduling.
//!
//! Nodes sit on a regular square lattice in the unit square. A set of
//! simultaneously active links is feasible when every receiver is within
//! range `r` of its own transmitter and at least `(1 + delta) r` away from
//! every other transmitter. Spatial reuse divides the grid into equal
//! squarelet clusters, each holding a full copy of the library across its
//! caches, and activates one multicast transmission per cluster under a
//! reuse-K TDMA coloring: time is split into frames of `K` channel uses
//! and color `c` owns use `c` of every frame, so clusters of the same
//! color run concurrently and differently colored clusters never overlap.

use crate::bounds::frac_to_f64;
use crate::cache::{achievable_rate, Codeword};
use crate::error::{Error, Result};
use crate::Frac;

use num_traits::Zero;

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// A regular sqrt(n) x sqrt(n) lattice on the unit square with spacing
/// `1 / sqrt(n)`. Node ids are row-major.
#[derive(Clone, Debug)]
pub struct GridNetwork {
    n: usize,
    side: usize,
    spacing: f64,
    positions: Vec<(f64, f64)>,
}

pub fn build_grid(n: usize) -> Result<GridNetwork> {
    if n == 0 {
        return Err(Error::Parameter("node count must be positive".into()));
    }
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(Error::Parameter(format!(
            "node count {n} is not a perfect square; the grid model needs one"
        )));
    }
    let spacing = 1.0 / side as f64;
    let positions = (0..n)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            (col as f64 * spacing, row as f64 * spacing)
        })
        .collect();
    Ok(GridNetwork {
        n,
        side,
        spacing,
        positions,
    })
}

impl GridNetwork {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn position(&self, node: usize) -> (f64, f64) {
        self.positions[node]
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (xa, ya) = self.positions[a];
        let (xb, yb) = self.positions[b];
        ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt()
    }
}

/// Interference-model parameters. The link rate is an integer number of
/// bits per channel use so that channel-use accounting stays exact.
#[derive(Clone, Copy, Debug)]
pub struct ProtocolParams {
    /// Transmission range in unit-square lengths.
    pub range: f64,
    /// Interference guard factor.
    pub delta: f64,
    /// Link rate in bits per channel use.
    pub rate_bits_per_use: u64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let positive = self.range > 0.0 && self.delta > 0.0 && self.rate_bits_per_use > 0;
        if !positive {
            return Err(Error::Parameter(format!(
                "protocol parameters must be positive (r={}, delta={}, C_r={})",
                self.range, self.delta, self.rate_bits_per_use
            )));
        }
        Ok(())
    }
}

/// Literal protocol-model check on a set of concurrently active directed
/// links: every link shorter than `r`, and every receiver at distance at
/// least `(1 + delta) r` from every *other* transmitter.
pub fn feasible_set(links: &[(usize, usize)], net: &GridNetwork, params: &ProtocolParams) -> bool {
    let guard = (1.0 + params.delta) * params.range;
    for &(tx, rx) in links {
        if net.distance(tx, rx) >= params.range {
            return false;
        }
        for &(other_tx, _) in links {
            if other_tx != tx && net.distance(other_tx, rx) < guard {
                return false;
            }
        }
    }
    true
}

/// TDMA reuse factor guaranteeing protocol feasibility of one active link
/// per same-color cluster: `(ceil(sqrt(2) (1 + delta)) + 1)^2`.
pub fn tdma_reuse_factor(delta: f64) -> u64 {
    let k_side = (2f64.sqrt() * (1.0 + delta)).ceil() as u64 + 1;
    k_side * k_side
}

// ---------------------------------------------------------------------------
// Clustering
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Cluster {
    pub id: usize,
    /// Position in the cluster lattice.
    pub row: usize,
    pub col: usize,
    /// Global node ids, row-major; local index within the cluster is the
    /// node id the per-cluster caching scheme sees.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Clustering {
    pub g_c: usize,
    /// Clusters per grid side.
    pub side_clusters: usize,
    pub clusters: Vec<Cluster>,
    /// Common transmission range covering any in-cluster pair: the
    /// squarelet diagonal `sqrt(2 g_c / n)` (strictly larger than the
    /// farthest in-cluster node pair).
    pub range: f64,
}

/// Splits the grid into equal squarelet clusters of `g_c` nodes. Requires
/// `g_c` to tile the grid exactly and every cluster to hold the library:
/// `g_c * M >= m`.
pub fn clusterize(net: &GridNetwork, g_c: usize, m: usize, mem: Frac) -> Result<Clustering> {
    if g_c == 0 || g_c > net.n() {
        return Err(Error::Parameter(format!(
            "cluster size {g_c} out of range for {} nodes",
            net.n()
        )));
    }
    let cs = (g_c as f64).sqrt().round() as usize;
    let valid_sizes = || {
        (1..=net.side())
            .filter(|d| net.side().is_multiple_of(*d))
            .map(|d| (d * d).to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    if cs * cs != g_c || !net.side().is_multiple_of(cs) {
        return Err(Error::Parameter(format!(
            "cluster size {g_c} does not tile a {0}x{0} grid; valid sizes: {1}",
            net.side(),
            valid_sizes()
        )));
    }
    if Frac::from_integer(g_c as i64) * mem < Frac::from_integer(m as i64) {
        return Err(Error::Infeasible(format!(
            "cluster of {g_c} nodes with M={mem} cannot hold m={m} files"
        )));
    }
    let side_clusters = net.side() / cs;
    let mut clusters = Vec::with_capacity(side_clusters * side_clusters);
    for row in 0..side_clusters {
        for col in 0..side_clusters {
            let mut members = Vec::with_capacity(g_c);
            for r in 0..cs {
                for c in 0..cs {
                    members.push((row * cs + r) * net.side() + (col * cs + c));
                }
            }
            clusters.push(Cluster {
                id: clusters.len(),
                row,
                col,
                members,
            });
        }
    }
    let range = (2.0 * g_c as f64 / net.n() as f64).sqrt();
    Ok(Clustering {
        g_c,
        side_clusters,
        clusters,
        range,
    })
}

// ---------------------------------------------------------------------------
// TDMA schedule
// ---------------------------------------------------------------------------

/// One codeword transmission: the sender multicasts to its recipients for
/// `frames` of the cluster's channel uses (one use per TDMA frame).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub cluster: usize,
    pub color: u64,
    pub sender: usize,
    pub recipients: Vec<usize>,
    pub codeword_id: String,
    pub payload_bits: u64,
    pub start_frame: u64,
    pub frames: u64,
}

/// One active link during one channel use, for traces and feasibility
/// checks.
#[derive(Clone, Debug)]
pub struct ActiveLink {
    pub tx: usize,
    pub rx: usize,
    pub cluster: usize,
    pub codeword_id: String,
    /// Bits moved over this link during this channel use.
    pub bits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TdmaSchedule {
    pub reuse_k: u64,
    pub rate_bits_per_use: u64,
    /// Color class per cluster, `(row mod sqrt(K)) * sqrt(K) + col mod sqrt(K)`.
    pub cluster_colors: Vec<u64>,
    pub transmissions: Vec<Transmission>,
    /// Channel uses per cluster (its codewords quantized to whole uses).
    pub cluster_loads: Vec<u64>,
    /// Total channel uses until every cluster finishes: whole TDMA frames
    /// of `K` uses each, `K * max(cluster_loads)`.
    pub t_s: u64,
}

impl TdmaSchedule {
    /// Links active during channel use `use_idx` (frame `use_idx / K`,
    /// color `use_idx % K`).
    pub fn active_links_at(&self, use_idx: u64) -> Vec<ActiveLink> {
        let frame = use_idx / self.reuse_k;
        let color = use_idx % self.reuse_k;
        let mut out = Vec::new();
        for t in &self.transmissions {
            if t.color != color || frame < t.start_frame || frame >= t.start_frame + t.frames {
                continue;
            }
            let done = (frame - t.start_frame) * self.rate_bits_per_use;
            let bits = self.rate_bits_per_use.min(t.payload_bits - done);
            for &rx in &t.recipients {
                out.push(ActiveLink {
                    tx: t.sender,
                    rx,
                    cluster: t.cluster,
                    codeword_id: t.codeword_id.clone(),
                    bits,
                });
            }
        }
        out
    }

    /// Every channel use in which at least one link is active.
    pub fn occupied_slots(&self) -> impl Iterator<Item = (u64, Vec<ActiveLink>)> + '_ {
        (0..self.t_s).filter_map(|u| {
            let links = self.active_links_at(u);
            if links.is_empty() {
                None
            } else {
                Some((u, links))
            }
        })
    }
}

fn transmissions_for_cluster(
    cluster: &Cluster,
    color: u64,
    codewords: &[Codeword],
    rate: u64,
) -> (Vec<Transmission>, u64) {
    let mut out = Vec::with_capacity(codewords.len());
    let mut frame = 0u64;
    for cw in codewords {
        let bits = cw.payload.len_bits() as u64;
        let frames = bits.div_ceil(rate);
        out.push(Transmission {
            cluster: cluster.id,
            color,
            sender: cluster.members[cw.sender],
            recipients: cw
                .recipients()
                .iter()
                .map(|&v| cluster.members[v])
                .collect(),
            codeword_id: cw.id(),
            payload_bits: bits,
            start_frame: frame,
            frames,
        });
        frame += frames;
    }
    (out, frame)
}

/// Schedules every cluster's codewords under reuse factor `reuse_k`.
/// Clusters transmit their codewords sequentially in the given order, one
/// channel use per TDMA frame; same-color clusters run concurrently.
/// Every emitted slot is verified against the protocol model.
pub fn schedule_delivery(
    clustering: &Clustering,
    per_cluster: &[Vec<Codeword>],
    reuse_k: u64,
    params: &ProtocolParams,
    net: &GridNetwork,
) -> Result<TdmaSchedule> {
    params.validate()?;
    if per_cluster.len() != clustering.clusters.len() {
        return Err(Error::Integrity(format!(
            "{} codeword lists for {} clusters",
            per_cluster.len(),
            clustering.clusters.len()
        )));
    }
    let k_side = (reuse_k as f64).sqrt().round() as u64;
    if k_side * k_side != reuse_k || reuse_k == 0 {
        return Err(Error::Parameter(format!(
            "reuse factor {reuse_k} must be a positive perfect square"
        )));
    }
    let mut transmissions = Vec::new();
    let mut loads = Vec::with_capacity(clustering.clusters.len());
    let mut colors = Vec::with_capacity(clustering.clusters.len());
    for (cluster, codewords) in clustering.clusters.iter().zip(per_cluster) {
        let color = (cluster.row as u64 % k_side) * k_side + cluster.col as u64 % k_side;
        let (ts, load) =
            transmissions_for_cluster(cluster, color, codewords, params.rate_bits_per_use);
        transmissions.extend(ts);
        loads.push(load);
        colors.push(color);
    }
    let t_s = reuse_k * loads.iter().copied().max().unwrap_or(0);
    let schedule = TdmaSchedule {
        reuse_k,
        rate_bits_per_use: params.rate_bits_per_use,
        cluster_colors: colors,
        transmissions,
        cluster_loads: loads,
        t_s,
    };
    for (use_idx, links) in schedule.occupied_slots() {
        let pairs: Vec<(usize, usize)> = links.iter().map(|l| (l.tx, l.rx)).collect();
        if !feasible_set(&pairs, net, params) {
            return Err(Error::Integrity(format!(
                "scheduling bug: slot {use_idx} violates the protocol model ({pairs:?})"
            )));
        }
    }
    Ok(schedule)
}

/// Sequential schedule with a network-wide transmission range and no
/// concurrency: one codeword after another, each taking
/// `ceil(bits / C_r)` channel uses.
pub fn schedule_no_reuse(
    codewords: &[Codeword],
    net: &GridNetwork,
    params: &ProtocolParams,
) -> Result<TdmaSchedule> {
    params.validate()?;
    if params.range < 2f64.sqrt() {
        return Err(Error::Parameter(format!(
            "network-wide delivery needs range >= sqrt(2) (got {})",
            params.range
        )));
    }
    let whole = Cluster {
        id: 0,
        row: 0,
        col: 0,
        members: (0..net.n()).collect(),
    };
    let (transmissions, load) =
        transmissions_for_cluster(&whole, 0, codewords, params.rate_bits_per_use);
    let schedule = TdmaSchedule {
        reuse_k: 1,
        rate_bits_per_use: params.rate_bits_per_use,
        cluster_colors: vec![0],
        transmissions,
        cluster_loads: vec![load],
        t_s: load,
    };
    for (use_idx, links) in schedule.occupied_slots() {
        let pairs: Vec<(usize, usize)> = links.iter().map(|l| (l.tx, l.rx)).collect();
        if !feasible_set(&pairs, net, params) {
            return Err(Error::Integrity(format!(
                "scheduling bug: slot {use_idx} violates the protocol model ({pairs:?})"
            )));
        }
    }
    Ok(schedule)
}

// ---------------------------------------------------------------------------
// Throughput
// ---------------------------------------------------------------------------

/// Per-user throughput in useful bits per channel use. The all-cached case
/// consumes zero channel uses and is reported as an explicit sentinel
/// rather than a division by zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Throughput {
    Infinite,
    Finite(Frac),
}

impl Throughput {
    pub fn as_f64(&self) -> f64 {
        match self {
            Throughput::Infinite => f64::INFINITY,
            Throughput::Finite(v) => frac_to_f64(*v),
        }
    }
}

impl std::fmt::Display for Throughput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Throughput::Infinite => write!(f, "inf"),
            Throughput::Finite(v) => write!(f, "{}", frac_to_f64(*v)),
        }
    }
}

/// Measured throughput `B * L' / t_s`.
pub fn throughput_measured(packet_bits: usize, l_prime: usize, t_s: u64) -> Throughput {
    if t_s == 0 {
        return Throughput::Infinite;
    }
    Throughput::Finite(Frac::new((packet_bits * l_prime) as i64, t_s as i64))
}

/// Which delivery regime a prediction is for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReuseMode {
    /// Range at least sqrt(2): one active link in the whole network.
    NoReuse,
    /// Clustered delivery with TDMA reuse.
    Reuse { g_c: usize, delta: f64 },
}

/// Closed-form throughput: `C_r / R(M)` without reuse, `(C_r / K) / R(M)`
/// with reuse (rate evaluated on a cluster of `g_c` nodes, memory sharing
/// applied when `t` is fractional).
pub fn throughput_predicted(
    mode: ReuseMode,
    n: usize,
    m: usize,
    mem: Frac,
    c_r: u64,
) -> Result<Throughput> {
    if c_r == 0 {
        return Err(Error::Parameter("C_r must be positive".into()));
    }
    let (n_eff, k) = match mode {
        ReuseMode::NoReuse => (n, 1),
        ReuseMode::Reuse { g_c, delta } => {
            if delta <= 0.0 {
                return Err(Error::Parameter("delta must be positive".into()));
            }
            (g_c, tdma_reuse_factor(delta))
        }
    };
    let rate = achievable_rate(n_eff, m, mem)?;
    if rate.is_zero() {
        return Ok(Throughput::Infinite);
    }
    Ok(Throughput::Finite(Frac::new(c_r as i64, k as i64) / rate))
}

/// Throughput of the uncoded comparator that stores whole files and
/// serves them without coding under the same reuse pattern:
/// `(C_r / K) * (M / m)`.
pub fn throughput_uncoded_baseline(m: usize, mem: Frac, delta: f64, c_r: u64) -> Result<Frac> {
    if delta <= 0.0 || c_r == 0 || m == 0 {
        return Err(Error::Parameter("m, delta and C_r must be positive".into()));
    }
    let k = tdma_reuse_factor(delta);
    Ok(Frac::new(c_r as i64, k as i64) * mem / Frac::from_integer(m as i64))
}
