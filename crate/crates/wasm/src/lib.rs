//! Browser bindings for the cachecast demo page.
//!
//! Every export is a pure function taking plain numbers and returning a
//! JSON string, so the page needs no shared state and the functions stay
//! directly testable on native targets. Failures come back as
//! `{"error": "..."}` rather than thrown exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use cachecast::bounds::{base_station_rate, bound_report, cutset_lower_bound, frac_to_f64};
use cachecast::cache::{decode, deliver, measured_rate, place, CachingScheme};
use cachecast::library::draw_demands;
use cachecast::sim::{
    build_grid, clusterize, schedule_delivery, tdma_reuse_factor, throughput_measured,
    throughput_predicted, throughput_uncoded_baseline, ProtocolParams, ReuseMode,
};
use cachecast::{achievable_rate, Codeword, FileLibrary, FilePattern, Frac};

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::to_string(&serde_json::json!({ "error": msg.to_string() }))
        .unwrap_or_else(|_| "{\"error\":\"serialization failure\"}".into())
}

fn ok_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(err_json)
}

fn parse_mem(num: i64, den: i64) -> Result<Frac, String> {
    if den <= 0 {
        return Err("cache size denominator must be positive".into());
    }
    Ok(Frac::new(num, den))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

// ---------------------------------------------------------------------------
// Rate and bound curves
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CurvePoint {
    mem: f64,
    achievable: f64,
    lower_bound: f64,
    base_station: f64,
    gap_ratio: Option<f64>,
    gap_bound: Option<f64>,
}

#[derive(Serialize)]
struct Curves {
    n: usize,
    m: usize,
    points: Vec<CurvePoint>,
}

/// Rate-versus-cache-size curves for plotting: the achievable rate (with
/// its memory-sharing envelope), the cut-set lower bound, the
/// base-station comparator and the analytic gap bound, sampled at
/// `samples` points across the feasible cache range.
#[wasm_bindgen]
pub fn bounds_curves(n: usize, m: usize, samples: usize) -> String {
    if n == 0 || m == 0 || n > 64 || m > 64 {
        return err_json("need 1 <= n, m <= 64");
    }
    let samples = samples.clamp(2, 512) as i64;
    let lo = Frac::new(m as i64, n as i64);
    let hi = Frac::from_integer(m as i64);
    let mut points = Vec::with_capacity(samples as usize);
    for i in 0..=samples {
        let mem = lo + (hi - lo) * Frac::new(i, samples);
        let achievable = match achievable_rate(n, m, mem) {
            Ok(v) => v,
            Err(e) => return err_json(e),
        };
        let lower = match cutset_lower_bound(n, m, mem) {
            Ok(v) => v.value,
            Err(e) => return err_json(e),
        };
        let bs = match base_station_rate(n, m, mem) {
            Ok(v) => v,
            Err(e) => return err_json(e),
        };
        let report = match bound_report(n, m, mem) {
            Ok(r) => r,
            Err(e) => return err_json(e),
        };
        points.push(CurvePoint {
            mem: frac_to_f64(mem),
            achievable: frac_to_f64(achievable),
            lower_bound: frac_to_f64(lower),
            base_station: frac_to_f64(bs),
            gap_ratio: report.gap_ratio,
            gap_bound: report.gap_bound,
        });
    }
    ok_json(&Curves { n, m, points })
}

// ---------------------------------------------------------------------------
// Placement and delivery walkthrough
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LabelInfo {
    index: usize,
    group: Vec<usize>,
    member: usize,
}

#[derive(Serialize)]
struct PartInfo {
    t: usize,
    bit_lo: usize,
    bit_hi: usize,
    subpackets: usize,
    labels: Vec<LabelInfo>,
    /// Flat sub-packet indices each user caches.
    cached_by_user: Vec<Vec<usize>>,
}

#[derive(Serialize)]
struct ConstituentInfo {
    recipient: usize,
    file: usize,
    packet: usize,
    group: Vec<usize>,
    member: usize,
    label_index: usize,
}

#[derive(Serialize)]
struct CodewordInfo {
    part: usize,
    sender: usize,
    subset: Vec<usize>,
    constituents: Vec<ConstituentInfo>,
    payload_hex: String,
    payload_bits: usize,
}

#[derive(Serialize)]
struct DeliveryDemo {
    n: usize,
    m: usize,
    mem: f64,
    packet_bits: usize,
    demanded_files: Vec<usize>,
    parts: Vec<PartInfo>,
    codewords: Vec<CodewordInfo>,
    measured_rate: f64,
    achievable_rate: f64,
    decode_ok: bool,
}

fn label_index(spec: &cachecast::PlacementSpec, group: &[usize], member: usize) -> usize {
    let rank = cachecast::subsets::colex_rank(group) as usize;
    let pos = spec.groups()[rank]
        .iter()
        .position(|&v| v == member)
        .unwrap_or(0);
    rank * spec.t() + pos
}

fn codeword_info(cw: &Codeword, scheme: &CachingScheme) -> CodewordInfo {
    let spec = &scheme.parts()[cw.part].spec;
    CodewordInfo {
        part: cw.part,
        sender: cw.sender,
        subset: cw.subset.clone(),
        constituents: cw
            .constituents
            .iter()
            .map(|c| ConstituentInfo {
                recipient: c.recipient,
                file: c.file,
                packet: c.packet,
                group: c.group.clone(),
                member: c.member,
                label_index: label_index(spec, &c.group, c.member),
            })
            .collect(),
        payload_hex: cw.payload.to_hex(),
        payload_bits: cw.payload.len_bits(),
    }
}

/// Runs placement, delivery and decoding on one small instance with
/// round-robin demands and reports everything the page needs to draw the
/// cache tables and codeword list.
#[wasm_bindgen]
pub fn delivery_demo(n: usize, m: usize, mem_num: i64, mem_den: i64, seed: u64) -> String {
    let mem = match parse_mem(mem_num, mem_den) {
        Ok(v) => v,
        Err(e) => return err_json(e),
    };
    if n == 0 || n > 8 || m == 0 || m > 12 {
        return err_json("the walkthrough is limited to n <= 8 and m <= 12");
    }
    let scheme_probe = match CachingScheme::new(n, m, mem, 8) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let spp_total: usize = scheme_probe
        .parts()
        .iter()
        .map(|p| p.spec.subpackets_per_packet())
        .sum();
    if spp_total > 256 {
        return err_json(format!(
            "sub-packetization too fine to display ({spp_total} pieces); pick a smaller n or t"
        ));
    }
    // one byte per sub-packet keeps payload hex short and padding-free
    let b = scheme_probe
        .parts()
        .iter()
        .map(|p| p.spec.subpackets_per_packet())
        .fold(1usize, lcm)
        * 8;
    let scheme = match CachingScheme::new(n, m, mem, b) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let lib = match FileLibrary::generate(m, 1, b, seed) {
        Ok(l) => l,
        Err(e) => return err_json(e),
    };
    let demand = match draw_demands(n, m, 1, 1, FilePattern::RoundRobin, seed) {
        Ok(d) => d,
        Err(e) => return err_json(e),
    };
    let caches: Vec<_> = match (0..n).map(|u| place(&lib, u, &scheme)).collect() {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let codewords = match deliver(&caches, &demand, &scheme) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let mut decode_ok = true;
    for (u, cache) in caches.iter().enumerate() {
        match decode(u, &codewords, cache, &demand, &scheme) {
            Ok(packets) => {
                let req = demand.request(u);
                if packets[0] != *lib.packet(req.file, req.start) {
                    decode_ok = false;
                }
            }
            Err(_) => decode_ok = false,
        }
    }
    let parts = scheme
        .parts()
        .iter()
        .map(|part| {
            let spec = &part.spec;
            let labels: Vec<LabelInfo> = spec
                .groups()
                .iter()
                .enumerate()
                .flat_map(|(g, group)| {
                    group.iter().enumerate().map(move |(i, &member)| LabelInfo {
                        index: g * spec.t() + i,
                        group: group.clone(),
                        member,
                    })
                })
                .collect();
            let cached_by_user = (0..n)
                .map(|u| {
                    labels
                        .iter()
                        .filter(|l| l.group.contains(&u))
                        .map(|l| l.index)
                        .collect()
                })
                .collect();
            PartInfo {
                t: spec.t(),
                bit_lo: part.bit_lo,
                bit_hi: part.bit_hi,
                subpackets: spec.subpackets_per_packet(),
                labels,
                cached_by_user,
            }
        })
        .collect();
    let measured = measured_rate(&codewords, b, 1);
    let demo = DeliveryDemo {
        n,
        m,
        mem: frac_to_f64(mem),
        packet_bits: b,
        demanded_files: demand.requests().iter().map(|r| r.file).collect(),
        parts,
        codewords: codewords
            .iter()
            .map(|c| codeword_info(c, &scheme))
            .collect(),
        measured_rate: frac_to_f64(measured),
        achievable_rate: achievable_rate(n, m, mem)
            .map(frac_to_f64)
            .unwrap_or(f64::NAN),
        decode_ok,
    };
    ok_json(&demo)
}

// ---------------------------------------------------------------------------
// Grid, clusters and TDMA animation
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ClusterInfo {
    id: usize,
    row: usize,
    col: usize,
    color: u64,
    members: Vec<usize>,
}

#[derive(Serialize)]
struct SlotInfo {
    slot: u64,
    links: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct TdmaDemo {
    n: usize,
    side: usize,
    positions: Vec<(f64, f64)>,
    g_c: usize,
    m: usize,
    mem: f64,
    delta: f64,
    c_r: u64,
    range: f64,
    reuse_k: u64,
    cluster_side: usize,
    clusters: Vec<ClusterInfo>,
    t_s: u64,
    throughput_measured: f64,
    throughput_predicted: f64,
    throughput_uncoded: f64,
    c_r_over_k: f64,
    slots: Vec<SlotInfo>,
    slots_truncated: bool,
}

/// Builds the clustered network, runs per-cluster delivery and the TDMA
/// schedule, and returns geometry plus the per-slot active links for
/// animation.
#[allow(clippy::too_many_arguments)] // flat numeric ABI for the page
#[wasm_bindgen]
pub fn tdma_demo(
    n: usize,
    g_c: usize,
    m: usize,
    mem_num: i64,
    mem_den: i64,
    delta: f64,
    c_r: u64,
    seed: u64,
) -> String {
    let mem = match parse_mem(mem_num, mem_den) {
        Ok(v) => v,
        Err(e) => return err_json(e),
    };
    if n > 1024 {
        return err_json("grid demo capped at 1024 nodes");
    }
    if g_c > 16 {
        return err_json("cluster demo capped at g_c <= 16");
    }
    let net = match build_grid(n) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let clustering = match clusterize(&net, g_c, m, mem) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let b = {
        let probe = match CachingScheme::new(g_c, m, mem, 8) {
            Ok(s) => s,
            Err(e) => return err_json(e),
        };
        probe
            .parts()
            .iter()
            .map(|p| p.spec.subpackets_per_packet())
            .fold(1usize, lcm)
            * 8
    };
    let scheme = match CachingScheme::new(g_c, m, mem, b) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let lib = match FileLibrary::generate(m, 1, b, seed) {
        Ok(l) => l,
        Err(e) => return err_json(e),
    };
    let reuse_k = tdma_reuse_factor(delta);
    let mut per_cluster = Vec::with_capacity(clustering.clusters.len());
    for cluster in &clustering.clusters {
        let caches: Vec<_> = match (0..g_c).map(|u| place(&lib, u, &scheme)).collect() {
            Ok(c) => c,
            Err(e) => return err_json(e),
        };
        let demand = match draw_demands(
            g_c,
            m,
            1,
            1,
            FilePattern::RoundRobin,
            seed.wrapping_add(cluster.id as u64),
        ) {
            Ok(d) => d,
            Err(e) => return err_json(e),
        };
        match deliver(&caches, &demand, &scheme) {
            Ok(c) => per_cluster.push(c),
            Err(e) => return err_json(e),
        }
    }
    let params = ProtocolParams {
        range: clustering.range,
        delta,
        rate_bits_per_use: c_r,
    };
    let schedule = match schedule_delivery(&clustering, &per_cluster, reuse_k, &params, &net) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    const MAX_SLOTS: usize = 2048;
    let mut slots = Vec::new();
    let mut truncated = false;
    for (slot, links) in schedule.occupied_slots() {
        if slots.len() >= MAX_SLOTS {
            truncated = true;
            break;
        }
        slots.push(SlotInfo {
            slot,
            links: links.iter().map(|l| (l.tx, l.rx)).collect(),
        });
    }
    let measured = throughput_measured(b, 1, schedule.t_s);
    let predicted = match throughput_predicted(ReuseMode::Reuse { g_c, delta }, n, m, mem, c_r) {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    let uncoded = match throughput_uncoded_baseline(m, mem, delta, c_r) {
        Ok(u) => frac_to_f64(u),
        Err(e) => return err_json(e),
    };
    let cluster_side = (g_c as f64).sqrt().round() as usize;
    let demo = TdmaDemo {
        n,
        side: net.side(),
        positions: net.positions().to_vec(),
        g_c,
        m,
        mem: frac_to_f64(mem),
        delta,
        c_r,
        range: clustering.range,
        reuse_k,
        cluster_side,
        clusters: clustering
            .clusters
            .iter()
            .zip(&schedule.cluster_colors)
            .map(|(c, &color)| ClusterInfo {
                id: c.id,
                row: c.row,
                col: c.col,
                color,
                members: c.members.clone(),
            })
            .collect(),
        t_s: schedule.t_s,
        throughput_measured: measured.as_f64(),
        throughput_predicted: predicted.as_f64(),
        throughput_uncoded: uncoded,
        c_r_over_k: c_r as f64 / reuse_k as f64,
        slots,
        slots_truncated: truncated,
    };
    ok_json(&demo)
}
