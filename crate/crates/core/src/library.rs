//! File library, segments and demand vectors.
//!
//! The library holds `m` files of `L` packets, each packet `B` bits, with
//! contents generated deterministically from a seed. Users request a
//! segment of `L'` consecutive packets of one file, starting at an
//! arbitrary in-range offset, which models asynchronous streaming: no two
//! users are assumed to want the same packet at the same time, so there is
//! no free multicast gain to exploit without coding.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::Frac;

const LIB_HEADER_FIELDS: usize = 3; // m, L, B as little-endian u64

/// Ground-truth file library: `m` files x `L` packets x `B` bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileLibrary {
    m: usize,
    l: usize,
    b: usize,
    packets: Vec<BitBlock>, // file-major, packet-minor
}

impl FileLibrary {
    /// Deterministically generates library contents from a seed.
    ///
    /// `b` must be a positive multiple of 8: packets are byte strings on
    /// disk and in memory; only sub-packets go below byte granularity.
    pub fn generate(m: usize, l: usize, b: usize, seed: u64) -> Result<Self> {
        if m == 0 || l == 0 || b == 0 {
            return Err(Error::Parameter(format!(
                "library dimensions must be positive (m={m}, L={l}, B={b})"
            )));
        }
        if !b.is_multiple_of(8) {
            return Err(Error::Parameter(format!(
                "packet size B={b} must be a multiple of 8 bits"
            )));
        }
        let mut rng = SplitMix64::new(seed);
        let packets = (0..m * l).map(|_| BitBlock::random(b, &mut rng)).collect();
        Ok(Self { m, l, b, packets })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn packets_per_file(&self) -> usize {
        self.l
    }

    pub fn packet_bits(&self) -> usize {
        self.b
    }

    pub fn packet(&self, file: usize, packet: usize) -> &BitBlock {
        assert!(
            file < self.m && packet < self.l,
            "packet index out of range"
        );
        &self.packets[file * self.l + packet]
    }

    /// The packets a request resolves to, in order.
    pub fn segment(&self, req: &SegmentRequest) -> Vec<&BitBlock> {
        (req.start..req.start + req.length)
            .map(|j| self.packet(req.file, j))
            .collect()
    }

    /// Flat binary snapshot: header (m, L, B as little-endian u64) followed
    /// by the packets in file-major, packet-minor order.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        for v in [self.m as u64, self.l as u64, self.b as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for p in &self.packets {
            w.write_all(p.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; 8 * LIB_HEADER_FIELDS];
        r.read_exact(&mut header)?;
        let field =
            |i: usize| u64::from_le_bytes(header[8 * i..8 * (i + 1)].try_into().unwrap()) as usize;
        let (m, l, b) = (field(0), field(1), field(2));
        if m == 0 || l == 0 || b == 0 || b % 8 != 0 {
            return Err(Error::Parameter(format!(
                "corrupt library header (m={m}, L={l}, B={b})"
            )));
        }
        let mut packets = Vec::with_capacity(m * l);
        for _ in 0..m * l {
            let mut buf = vec![0u8; b / 8];
            r.read_exact(&mut buf)?;
            packets.push(BitBlock::from_bytes(buf));
        }
        Ok(Self { m, l, b, packets })
    }
}

/// One user's request: `length` consecutive packets of `file` starting at
/// packet `start` (all indices zero-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub user: usize,
    pub file: usize,
    pub start: usize,
    pub length: usize,
}

/// A request per user, indexed by user id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandVector {
    requests: Vec<SegmentRequest>,
}

impl DemandVector {
    /// Requires exactly one request per user `0..n`, in order, with a
    /// common segment length.
    pub fn new(requests: Vec<SegmentRequest>) -> Result<Self> {
        if requests.is_empty() {
            return Err(Error::Parameter("demand vector is empty".into()));
        }
        let l_prime = requests[0].length;
        for (u, r) in requests.iter().enumerate() {
            if r.user != u {
                return Err(Error::Parameter(format!(
                    "request {u} has user id {} (must be exactly one request per user, in order)",
                    r.user
                )));
            }
            if r.length != l_prime {
                return Err(Error::Parameter(
                    "all requests must share the same segment length".into(),
                ));
            }
            if r.length == 0 {
                return Err(Error::Parameter("segment length must be positive".into()));
            }
        }
        Ok(Self { requests })
    }

    pub fn n(&self) -> usize {
        self.requests.len()
    }

    pub fn segment_len(&self) -> usize {
        self.requests[0].length
    }

    pub fn requests(&self) -> &[SegmentRequest] {
        &self.requests
    }

    pub fn request(&self, user: usize) -> &SegmentRequest {
        &self.requests[user]
    }

    /// Checks every referenced packet lies inside a library of `m` files
    /// with `l` packets each.
    pub fn validate_against(&self, m: usize, l: usize) -> Result<()> {
        for r in &self.requests {
            if r.file >= m {
                return Err(Error::Parameter(format!(
                    "user {} requests file {} but the library has {m} files",
                    r.user, r.file
                )));
            }
            if r.start + r.length > l {
                return Err(Error::Parameter(format!(
                    "user {} requests packets {}..{} but files have {l} packets",
                    r.user,
                    r.start,
                    r.start + r.length
                )));
            }
        }
        Ok(())
    }
}

/// How files are assigned to users when drawing demands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilePattern {
    /// User `u` requests file `u mod m`. This exercises maximally distinct
    /// demands, the worst case the delivery rate is stated for.
    RoundRobin,
    /// Independent uniform file choice per user.
    Uniform,
}

/// Draws a demand vector with seeded segment starts uniform on
/// `0..=L-L'` and files chosen per `pattern`.
pub fn draw_demands(
    n: usize,
    m: usize,
    l: usize,
    l_prime: usize,
    pattern: FilePattern,
    seed: u64,
) -> Result<DemandVector> {
    if n == 0 || m == 0 {
        return Err(Error::Parameter("n and m must be positive".into()));
    }
    if l_prime == 0 || l_prime > l {
        return Err(Error::Parameter(format!(
            "segment length L'={l_prime} must satisfy 1 <= L' <= L={l}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let starts = l - l_prime + 1;
    let requests = (0..n)
        .map(|u| SegmentRequest {
            user: u,
            file: match pattern {
                FilePattern::RoundRobin => u % m,
                FilePattern::Uniform => rng.next_below(m as u64) as usize,
            },
            start: rng.next_below(starts as u64) as usize,
            length: l_prime,
        })
        .collect();
    DemandVector::new(requests)
}

/// True iff the aggregate cache can hold the library: `M * n >= m`.
pub fn validate_feasibility(n: usize, mem: Frac, m: usize) -> bool {
    mem * Frac::from_integer(n as i64) >= Frac::from_integer(m as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = FileLibrary::generate(3, 3, 48, 7).unwrap();
        let b = FileLibrary::generate(3, 3, 48, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.packet(2, 2).len_bits(), 48);
    }

    #[test]
    fn different_seeds_differ_somewhere() {
        let a = FileLibrary::generate(3, 3, 48, 7).unwrap();
        let b = FileLibrary::generate(3, 3, 48, 8).unwrap();
        let differs = (0..3).any(|f| (0..3).any(|j| a.packet(f, j) != b.packet(f, j)));
        assert!(differs, "seeds 7 and 8 produced identical libraries");
    }

    #[test]
    fn minimal_library() {
        let lib = FileLibrary::generate(1, 1, 8, 0).unwrap();
        assert_eq!(lib.packet(0, 0).len_bits(), 8);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            FileLibrary::generate(0, 1, 8, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            FileLibrary::generate(1, 1, 12, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn binary_snapshot_roundtrip() {
        let lib = FileLibrary::generate(2, 3, 16, 99).unwrap();
        let mut buf = Vec::new();
        lib.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 2 * 3 * 2);
        let back = FileLibrary::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(lib, back);
    }

    #[test]
    fn demand_starts_stay_in_range() {
        let d = draw_demands(3, 3, 3, 1, FilePattern::RoundRobin, 5).unwrap();
        assert_eq!(
            d.requests().iter().map(|r| r.file).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        for r in d.requests() {
            assert!(r.start <= 2);
        }
        d.validate_against(3, 3).unwrap();
    }

    #[test]
    fn full_length_segments_start_at_zero() {
        let d = draw_demands(4, 2, 5, 5, FilePattern::Uniform, 123).unwrap();
        assert!(d.requests().iter().all(|r| r.start == 0));
    }

    #[test]
    fn demand_draw_is_deterministic() {
        let a = draw_demands(5, 3, 4, 2, FilePattern::Uniform, 11).unwrap();
        let b = draw_demands(5, 3, 4, 2, FilePattern::Uniform, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_segment_rejected() {
        assert!(matches!(
            draw_demands(2, 2, 3, 4, FilePattern::RoundRobin, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn feasibility_boundary() {
        assert!(validate_feasibility(3, Frac::from_integer(2), 3));
        assert!(!validate_feasibility(2, Frac::from_integer(1), 3));
        assert!(validate_feasibility(3, Frac::from_integer(1), 3));
    }

    #[test]
    fn demand_json_shape() {
        let d = DemandVector::new(vec![
            SegmentRequest {
                user: 0,
                file: 2,
                start: 1,
                length: 2,
            },
            SegmentRequest {
                user: 1,
                file: 0,
                start: 0,
                length: 2,
            },
        ])
        .unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(
            json,
            "[{\"user\":0,\"file\":2,\"start\":1,\"length\":2},\
             {\"user\":1,\"file\":0,\"start\":0,\"length\":2}]"
        );
        let back: DemandVector = serde_json::from_str(&json).unwrap();
        assert_eq!(d, back);
    }
}
