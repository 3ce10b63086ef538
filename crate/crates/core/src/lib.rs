//! Coded caching for single-hop device-to-device networks.
//!
//! Nodes on a grid each cache a designed fraction of a file library so
//! that, at delivery time, every transmission is an XOR of sub-packets
//! useful to several receivers at once. This crate implements the
//! placement/delivery/decoding scheme, the matching information-theoretic
//! bounds (cut-set lower bound, optimality gap, throughput limits), and a
//! protocol-model grid simulator with clustered TDMA spatial reuse that
//! measures throughput in channel uses and cross-checks it against the
//! closed forms.

pub mod bits;
pub mod bounds;
pub mod cache;
pub mod error;
pub mod library;
pub mod rng;
pub mod sim;
pub mod subsets;

/// Exact rational used for cache sizes, rates and bound arithmetic.
pub type Frac = num_rational::Ratio<i64>;

pub use bits::BitBlock;
pub use bounds::{
    base_station_rate, bound_report, convex_lower_envelope, cutset_lower_bound, gap_upper_bound,
    no_reuse_throughput_bound, throughput_upper_bound_reuse, BoundReport, CutsetBound,
    CutsetBranch, Envelope, ThroughputBound,
};
pub use cache::{
    achievable_rate, decode, deliver, measured_rate, place, subpacketization_count, subpacketize,
    CacheContents, CachingScheme, Codeword, PlacementSpec,
};
pub use error::{Error, Result};
pub use library::{
    draw_demands, validate_feasibility, DemandVector, FileLibrary, FilePattern, SegmentRequest,
};
pub use sim::{
    build_grid, clusterize, feasible_set, schedule_delivery, schedule_no_reuse, tdma_reuse_factor,
    throughput_measured, throughput_predicted, throughput_uncoded_baseline, Cluster, Clustering,
    GridNetwork, ProtocolParams, ReuseMode, TdmaSchedule, Throughput,
};
