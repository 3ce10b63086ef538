//! Coded cache placement, XOR multicast delivery, and decoding.
//!
//! For `n_eff` participating nodes with per-node cache size `M` files out
//! of a library of `m`, the reuse parameter is `t = M * n_eff / m`. When
//! `t` is a positive integer, every packet is divided into `C(n_eff, t)`
//! groups indexed by the t-subsets of the nodes, and every group into `t`
//! sub-packets labelled by the group members. Node `u` caches exactly the
//! sub-packets whose group contains `u`, which fills its cache to
//! `M * L * B` bits with equality.
//!
//! Delivery walks the (t+1)-subsets `S` of nodes. Every node `u` in `S`
//! sends one codeword per requested packet position: the XOR over the
//! other members `v` of `S` of sub-packet `(group = S \ {v}, label = u)`
//! of the packet `v` asked for. Each recipient caches every constituent
//! except exactly the one addressed to it, so one transmission serves `t`
//! nodes at once. Counting bits, the total traffic normalized by a
//! segment's `B * L'` bits is `(m / M) * (1 - M / m)` whatever the
//! demands are.
//!
//! Non-integer `t` is realized by memory sharing: each packet is split
//! into two spans placed with the neighboring integer parameters `floor t`
//! and `floor t + 1`, sized so the cache budget is never exceeded (and met
//! exactly when the split lands on a whole bit). The resulting rate is the
//! linear interpolation between the two integer operating points, i.e. the
//! lower convex envelope of the integer-t rate.

use std::collections::HashMap;

use num_traits::Zero;

use crate::bits::{concat_bits, BitBlock};
use crate::error::{Error, Result};
use crate::library::{DemandVector, FileLibrary};
use crate::subsets::{binomial, binomial_checked, colex_rank, k_subsets};
use crate::Frac;

// ---------------------------------------------------------------------------
// Placement specification
// ---------------------------------------------------------------------------

/// Integer-t placement layout for `n_eff` nodes: the group subsets, their
/// canonical (colexicographic) order, and the per-group sub-packet labels.
#[derive(Clone, Debug)]
pub struct PlacementSpec {
    n_eff: usize,
    m: usize,
    mem: Frac,
    t: usize,
    groups: Vec<Vec<usize>>,
}

impl PlacementSpec {
    /// Builds the layout for integer `t = mem * n_eff / m`.
    ///
    /// Fails with a contract error when `t` is not an integer; callers
    /// wanting arbitrary `mem` should go through [`CachingScheme`], which
    /// realizes the memory-sharing split.
    pub fn new(n_eff: usize, m: usize, mem: Frac) -> Result<Self> {
        if n_eff == 0 || m == 0 {
            return Err(Error::Parameter("n_eff and m must be positive".into()));
        }
        if mem <= Frac::zero() || mem > Frac::from_integer(m as i64) {
            return Err(Error::Parameter(format!(
                "cache size M={mem} must satisfy 0 < M <= m={m}"
            )));
        }
        let t_frac = mem * Frac::from_integer(n_eff as i64) / Frac::from_integer(m as i64);
        if t_frac < Frac::from_integer(1) {
            return Err(Error::Infeasible(format!(
                "aggregate cache too small: M*n = {} < m = {m}",
                mem * Frac::from_integer(n_eff as i64)
            )));
        }
        if !t_frac.is_integer() {
            return Err(Error::Contract(format!(
                "t = M*n/m = {t_frac} is not an integer; use memory sharing"
            )));
        }
        let t = t_frac.to_integer() as usize;
        // refuse instances whose sub-packetization would not fit in memory
        const MAX_SUBPACKETS: u64 = 1 << 20;
        let per_packet = binomial_checked(n_eff, t)
            .and_then(|c| c.checked_mul(t as u64))
            .filter(|&spp| spp <= MAX_SUBPACKETS);
        if per_packet.is_none() {
            return Err(Error::Parameter(format!(
                "sub-packetization t*C({n_eff},{t}) exceeds {MAX_SUBPACKETS} pieces \
                 per packet; cluster the network instead of coding across all nodes"
            )));
        }
        Ok(Self {
            n_eff,
            m,
            mem,
            t,
            groups: k_subsets(n_eff, t),
        })
    }

    pub fn n_eff(&self) -> usize {
        self.n_eff
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mem(&self) -> Frac {
        self.mem
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Group subsets in canonical order; index = colexicographic rank.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Sub-packets per packet: `t * C(n_eff, t)`.
    pub fn subpackets_per_packet(&self) -> usize {
        self.t * self.groups.len()
    }
}

/// Codeword-index count `C(n_eff, t)` and sub-packets per packet
/// `t * C(n_eff, t)` for a given integer reuse parameter.
pub fn subpacketization_count(n_eff: usize, t: usize) -> Result<(u64, u64)> {
    if t == 0 || t > n_eff {
        return Err(Error::Parameter(format!(
            "reuse parameter t={t} must satisfy 1 <= t <= n_eff={n_eff}"
        )));
    }
    let c = binomial(n_eff, t);
    Ok((c, t as u64 * c))
}

// ---------------------------------------------------------------------------
// Memory-sharing scheme
// ---------------------------------------------------------------------------

/// One span of every packet, placed with a single integer-t layout.
#[derive(Clone, Debug)]
pub struct SchemePart {
    pub spec: PlacementSpec,
    /// Bit range of each packet this part covers.
    pub bit_lo: usize,
    pub bit_hi: usize,
}

impl SchemePart {
    pub fn width_bits(&self) -> usize {
        self.bit_hi - self.bit_lo
    }

    /// Physical (padded) sub-packet size in bits.
    pub fn padded_subpacket_bits(&self) -> usize {
        self.width_bits()
            .div_ceil(self.spec.subpackets_per_packet())
    }

    /// Exact information content of one codeword payload, excluding any
    /// padding introduced to equalize sub-packet sizes.
    pub fn info_bits_per_codeword(&self) -> Frac {
        Frac::new(
            self.width_bits() as i64,
            self.spec.subpackets_per_packet() as i64,
        )
    }
}

/// Full caching scheme for one set of participating nodes: a single part
/// when `t` is an integer, two parts under memory sharing otherwise.
#[derive(Clone, Debug)]
pub struct CachingScheme {
    n_eff: usize,
    m: usize,
    mem: Frac,
    packet_bits: usize,
    parts: Vec<SchemePart>,
}

impl CachingScheme {
    pub fn new(n_eff: usize, m: usize, mem: Frac, packet_bits: usize) -> Result<Self> {
        if packet_bits == 0 {
            return Err(Error::Parameter("packet size must be positive".into()));
        }
        let n_frac = Frac::from_integer(n_eff as i64);
        let m_frac = Frac::from_integer(m as i64);
        if n_eff == 0 || m == 0 || mem <= Frac::zero() || mem > m_frac {
            return Err(Error::Parameter(format!(
                "need n_eff, m >= 1 and 0 < M <= m (got n_eff={n_eff}, m={m}, M={mem})"
            )));
        }
        if mem * n_frac < m_frac {
            return Err(Error::Infeasible(format!(
                "aggregate cache too small: M*n = {} < m = {m}",
                mem * n_frac
            )));
        }
        let t_real = mem * n_frac / m_frac;
        if t_real.is_integer() {
            let spec = PlacementSpec::new(n_eff, m, mem)?;
            return Ok(Self {
                n_eff,
                m,
                mem,
                packet_bits,
                parts: vec![SchemePart {
                    spec,
                    bit_lo: 0,
                    bit_hi: packet_bits,
                }],
            });
        }
        // Memory sharing: fraction alpha of every packet uses t_lo, the
        // rest t_lo + 1, with alpha solving M = alpha*M_lo + (1-alpha)*M_hi.
        let t_lo = t_real.floor().to_integer() as usize;
        let t_hi = t_lo + 1;
        let alpha = Frac::from_integer(t_hi as i64) - t_real;
        let lo_bits_exact = alpha * Frac::from_integer(packet_bits as i64);
        // Rounding up keeps the stored volume at or below M*L*B: per
        // packet a node stores (B*t_hi - lo_bits)/n bits, so lo_bits must
        // not fall below alpha*B. Exact when alpha*B is integral.
        let lo_bits = lo_bits_exact.ceil().to_integer() as usize;
        let mem_lo = Frac::new((t_lo * m) as i64, n_eff as i64);
        let mem_hi = Frac::new((t_hi * m) as i64, n_eff as i64);
        let mut parts = Vec::new();
        if lo_bits > 0 {
            parts.push(SchemePart {
                spec: PlacementSpec::new(n_eff, m, mem_lo)?,
                bit_lo: 0,
                bit_hi: lo_bits,
            });
        }
        if lo_bits < packet_bits {
            parts.push(SchemePart {
                spec: PlacementSpec::new(n_eff, m, mem_hi)?,
                bit_lo: lo_bits,
                bit_hi: packet_bits,
            });
        }
        Ok(Self {
            n_eff,
            m,
            mem,
            packet_bits,
            parts,
        })
    }

    pub fn n_eff(&self) -> usize {
        self.n_eff
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mem(&self) -> Frac {
        self.mem
    }

    pub fn packet_bits(&self) -> usize {
        self.packet_bits
    }

    pub fn parts(&self) -> &[SchemePart] {
        &self.parts
    }

    pub fn is_integer_split(&self) -> bool {
        self.parts.len() == 1
    }

    /// Exact delivery rate of this scheme as realized: the width-weighted
    /// combination of the parts' integer-t rates. Equals the envelope rate
    /// whenever the memory-sharing split lands on a whole bit, and exceeds
    /// it by less than (one bit / B) * rate otherwise.
    pub fn scheme_rate(&self) -> Frac {
        let n = self.n_eff as i64;
        self.parts
            .iter()
            .filter(|p| p.spec.t() < self.n_eff)
            .map(|p| {
                Frac::new(p.width_bits() as i64, self.packet_bits as i64)
                    * Frac::new(n - p.spec.t() as i64, p.spec.t() as i64)
            })
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Caches
// ---------------------------------------------------------------------------

/// Identifies one sub-packet: part, file, packet, group (colex rank within
/// the part's layout) and the member label inside the group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubpacketKey {
    pub part: usize,
    pub file: usize,
    pub packet: usize,
    pub group: usize,
    pub member: usize,
}

/// Everything one node stores under the coded placement.
#[derive(Clone, Debug)]
pub struct CacheContents {
    user: usize,
    packets_per_file: usize,
    entries: HashMap<SubpacketKey, BitBlock>,
}

impl CacheContents {
    pub fn user(&self) -> usize {
        self.user
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &SubpacketKey) -> Option<&BitBlock> {
        self.entries.get(key)
    }

    /// Exact stored information in bits (padding excluded). Equals
    /// `M * L * B` whenever the scheme's cache budget is met exactly.
    pub fn size_bits(&self, scheme: &CachingScheme) -> Frac {
        let mut total = Frac::zero();
        for (part_idx, part) in scheme.parts().iter().enumerate() {
            let per_sub = Frac::new(
                part.width_bits() as i64,
                part.spec.subpackets_per_packet() as i64,
            );
            let count = self.entries.keys().filter(|k| k.part == part_idx).count();
            total += per_sub * Frac::from_integer(count as i64);
        }
        total
    }
}

// ---------------------------------------------------------------------------
// Sub-packetization and placement
// ---------------------------------------------------------------------------

/// Splits one packet span into `t * C(n_eff, t)` equal labelled pieces in
/// canonical order (groups colexicographic, members ascending). The span
/// is zero-padded up to a multiple of the piece count; concatenating the
/// pieces in order and truncating reproduces the input exactly.
pub fn subpacketize(packet: &BitBlock, spec: &PlacementSpec) -> Vec<((usize, usize), BitBlock)> {
    let spp = spec.subpackets_per_packet();
    let sp_bits = packet.len_bits().div_ceil(spp);
    let padded = packet.padded_to(sp_bits * spp);
    let mut out = Vec::with_capacity(spp);
    let mut cursor = 0;
    for (g_idx, group) in spec.groups().iter().enumerate() {
        for &member in group {
            out.push(((g_idx, member), padded.slice(cursor, sp_bits)));
            cursor += sp_bits;
        }
    }
    out
}

/// Fills one node's cache: every sub-packet of every packet whose group
/// contains the node, across all parts of the scheme.
pub fn place(library: &FileLibrary, user: usize, scheme: &CachingScheme) -> Result<CacheContents> {
    if user >= scheme.n_eff() {
        return Err(Error::Parameter(format!(
            "user {user} out of range for n_eff={}",
            scheme.n_eff()
        )));
    }
    if library.m() != scheme.m() || library.packet_bits() != scheme.packet_bits() {
        return Err(Error::Integrity(format!(
            "library (m={}, B={}) does not match scheme (m={}, B={})",
            library.m(),
            library.packet_bits(),
            scheme.m(),
            scheme.packet_bits()
        )));
    }
    let mut entries = HashMap::new();
    for (part_idx, part) in scheme.parts().iter().enumerate() {
        for file in 0..library.m() {
            for packet in 0..library.packets_per_file() {
                let span = library
                    .packet(file, packet)
                    .slice(part.bit_lo, part.width_bits());
                for ((group, member), block) in subpacketize(&span, &part.spec) {
                    if part.spec.groups()[group].contains(&user) {
                        entries.insert(
                            SubpacketKey {
                                part: part_idx,
                                file,
                                packet,
                                group,
                                member,
                            },
                            block,
                        );
                    }
                }
            }
        }
    }
    Ok(CacheContents {
        user,
        packets_per_file: library.packets_per_file(),
        entries,
    })
}

// ---------------------------------------------------------------------------
// Delivery
// ---------------------------------------------------------------------------

/// One XORed constituent of a codeword and the node it is addressed to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constituent {
    pub recipient: usize,
    pub file: usize,
    pub packet: usize,
    /// Group subset (sorted node ids); its colex rank is the group index.
    pub group: Vec<usize>,
    pub member: usize,
}

impl Constituent {
    pub fn key(&self, part: usize) -> SubpacketKey {
        SubpacketKey {
            part,
            file: self.file,
            packet: self.packet,
            group: colex_rank(&self.group) as usize,
            member: self.member,
        }
    }
}

/// One multicast transmission: the XOR of one sub-packet per recipient.
#[derive(Clone, Debug)]
pub struct Codeword {
    pub part: usize,
    /// The (t+1)-subset of nodes this codeword serves, sorted.
    pub subset: Vec<usize>,
    pub sender: usize,
    /// Packet position within the recipients' segments, `0..L'`.
    pub offset: usize,
    pub payload: BitBlock,
    pub constituents: Vec<Constituent>,
    /// Exact payload information in bits, excluding sub-packet padding.
    pub info_bits: Frac,
}

impl Codeword {
    pub fn recipients(&self) -> Vec<usize> {
        self.subset
            .iter()
            .copied()
            .filter(|&v| v != self.sender)
            .collect()
    }

    /// Stable id string: part, subset colex rank, sender, offset.
    pub fn id(&self) -> String {
        format!(
            "{}.{}.{}.{}",
            self.part,
            colex_rank(&self.subset),
            self.sender,
            self.offset
        )
    }
}

/// Runs the delivery phase for one demand vector. Codewords are emitted in
/// canonical order: part, then (t+1)-subset in colex order, then sender
/// ascending, then packet offset. Every constituent is read from the
/// sender's own cache.
pub fn deliver(
    caches: &[CacheContents],
    demand: &DemandVector,
    scheme: &CachingScheme,
) -> Result<Vec<Codeword>> {
    let n = scheme.n_eff();
    if demand.n() != n || caches.len() != n {
        return Err(Error::Integrity(format!(
            "scheme has n_eff={n} but {} caches and {} demands were supplied",
            caches.len(),
            demand.n()
        )));
    }
    for (u, cache) in caches.iter().enumerate() {
        if cache.user() != u {
            return Err(Error::Integrity(format!(
                "cache at position {u} belongs to user {}",
                cache.user()
            )));
        }
    }
    demand.validate_against(scheme.m(), caches[0].packets_per_file)?;

    let l_prime = demand.segment_len();
    let mut out = Vec::new();
    for (part_idx, part) in scheme.parts().iter().enumerate() {
        let t = part.spec.t();
        if t >= n {
            // full local caching in this part: nothing to transmit
            continue;
        }
        let sp_bits = part.padded_subpacket_bits();
        let info = part.info_bits_per_codeword();
        for subset in k_subsets(n, t + 1) {
            for &sender in &subset {
                for offset in 0..l_prime {
                    let mut payload = BitBlock::zeros(sp_bits);
                    let mut constituents = Vec::with_capacity(t);
                    for &v in &subset {
                        if v == sender {
                            continue;
                        }
                        let req = demand.request(v);
                        let group: Vec<usize> =
                            subset.iter().copied().filter(|&w| w != v).collect();
                        let c = Constituent {
                            recipient: v,
                            file: req.file,
                            packet: req.start + offset,
                            group,
                            member: sender,
                        };
                        let block = caches[sender].get(&c.key(part_idx)).ok_or_else(|| {
                            Error::Integrity(format!(
                                "sender {sender} is missing sub-packet {:?}",
                                c.key(part_idx)
                            ))
                        })?;
                        payload.xor_assign(block);
                        constituents.push(c);
                    }
                    out.push(Codeword {
                        part: part_idx,
                        subset: subset.clone(),
                        sender,
                        offset,
                        payload,
                        constituents,
                        info_bits: info,
                    });
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

/// Reconstructs one user's requested segment from its cache plus the
/// codewords addressed to it. Returns the `L'` packets in order,
/// bit-identical to the library contents the caches were placed from.
pub fn decode(
    user: usize,
    codewords: &[Codeword],
    cache: &CacheContents,
    demand: &DemandVector,
    scheme: &CachingScheme,
) -> Result<Vec<BitBlock>> {
    if cache.user() != user {
        return Err(Error::Integrity(format!(
            "cache belongs to user {}, not {user}",
            cache.user()
        )));
    }
    let req = demand.request(user);
    let l_prime = demand.segment_len();

    // Index received codewords by (part, subset rank, sender, offset).
    let mut by_key: HashMap<(usize, u64, usize, usize), &Codeword> = HashMap::new();
    for cw in codewords {
        if cw.subset.contains(&user) && cw.sender != user {
            by_key.insert((cw.part, colex_rank(&cw.subset), cw.sender, cw.offset), cw);
        }
    }

    let mut packets = Vec::with_capacity(l_prime);
    for offset in 0..l_prime {
        let mut whole = BitBlock::zeros(0);
        for (part_idx, part) in scheme.parts().iter().enumerate() {
            let sp_bits = part.padded_subpacket_bits();
            let mut pieces = Vec::with_capacity(part.spec.subpackets_per_packet());
            for (g_idx, group) in part.spec.groups().iter().enumerate() {
                for &member in group {
                    if group.contains(&user) {
                        let key = SubpacketKey {
                            part: part_idx,
                            file: req.file,
                            packet: req.start + offset,
                            group: g_idx,
                            member,
                        };
                        let block = cache.get(&key).ok_or_else(|| {
                            Error::Integrity(format!("cache missing own sub-packet {key:?}"))
                        })?;
                        pieces.push(block.clone());
                    } else {
                        // Served by the codeword for subset `group + user`
                        // whose sender carries this member label.
                        let mut subset = group.clone();
                        subset.push(user);
                        subset.sort_unstable();
                        let cw = by_key
                            .get(&(part_idx, colex_rank(&subset), member, offset))
                            .ok_or(Error::DecodeIncomplete {
                                subset: subset.clone(),
                                sender: member,
                            })?;
                        let mut block = cw.payload.clone();
                        for c in &cw.constituents {
                            if c.recipient != user {
                                let cached = cache.get(&c.key(part_idx)).ok_or_else(|| {
                                    Error::Integrity(format!(
                                        "cache missing cancellation sub-packet {:?}",
                                        c.key(part_idx)
                                    ))
                                })?;
                                block.xor_assign(cached);
                            }
                        }
                        debug_assert_eq!(block.len_bits(), sp_bits);
                        pieces.push(block);
                    }
                }
            }
            let span = concat_bits(pieces.iter()).truncated(part.width_bits());
            whole.append(&span);
        }
        packets.push(whole);
    }
    Ok(packets)
}

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

/// Worst-case delivery rate in transmissions normalized by a segment of
/// `B * L'` bits: `(m / M) * (1 - M / m)` at integer `t = M * n_eff / m`,
/// and the lower convex envelope through the integer-t points otherwise.
pub fn achievable_rate(n_eff: usize, m: usize, mem: Frac) -> Result<Frac> {
    let n_frac = Frac::from_integer(n_eff as i64);
    let m_frac = Frac::from_integer(m as i64);
    if n_eff == 0 || m == 0 || mem <= Frac::zero() || mem > m_frac {
        return Err(Error::Parameter(format!(
            "need n_eff, m >= 1 and 0 < M <= m (got n_eff={n_eff}, m={m}, M={mem})"
        )));
    }
    if mem * n_frac < m_frac {
        return Err(Error::Infeasible(format!(
            "aggregate cache too small: M*n = {} < m = {m}",
            mem * n_frac
        )));
    }
    let rate_at = |t: usize| Frac::new((n_eff - t) as i64, t as i64);
    let t_real = mem * n_frac / m_frac;
    if t_real.is_integer() {
        return Ok(rate_at(t_real.to_integer() as usize));
    }
    let t_lo = t_real.floor().to_integer() as usize;
    let alpha = Frac::from_integer((t_lo + 1) as i64) - t_real;
    Ok(alpha * rate_at(t_lo) + (Frac::from_integer(1) - alpha) * rate_at(t_lo + 1))
}

/// Total transmitted information divided by `B * L'`, counting each
/// codeword at its exact unpadded payload size.
pub fn measured_rate(codewords: &[Codeword], packet_bits: usize, l_prime: usize) -> Frac {
    let total: Frac = codewords.iter().map(|c| c.info_bits).sum();
    total / Frac::from_integer((packet_bits * l_prime) as i64)
}
