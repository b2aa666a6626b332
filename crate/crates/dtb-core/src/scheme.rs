//! Bit-level delivery schemes realized from rate allocations.
//!
//! A rate allocation says how many levels each stream gets per use; this
//! module turns that into concrete signals: which file bit (or XOR of two
//! bits) sits on which stack level of which transmitter at which use,
//! what the cache holds, and what the fronthaul carries when. Fractional
//! per-use rates are realized by mixing a few integer stack patterns
//! whose time average is exact.

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::rat::{rint, Rat};
use crate::ratelp::{
    parallel_rate_lp, serial_fill_target, serial_rate_lp, LpCache, RateAllocParallel,
    RateAllocSerial,
};
use crate::regime::Crosslink;

/// Which demanded file a symbol belongs to: `U` is the file U1 asked
/// for, `V` the one U2 asked for. Binding to library indices happens at
/// delivery time, so one synthesized scheme serves every demand pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitRef {
    pub role: Role,
    pub pos: usize,
}

/// One occupied stack level: a raw file bit or an XOR of one bit from
/// each demanded file (the neutralization trick).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelSym {
    Bit(BitRef),
    Xor(BitRef, BitRef),
}

/// A transmit word: `levels[0]` is the top of the stack. `None` is a
/// zero pad.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub levels: Vec<Option<LevelSym>>,
}

/// One wireless use: `x1` is the HeNB word (heard by U1 only), `x2` the
/// eNB word (heard by both users).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelUse {
    pub x1: Word,
    pub x2: Word,
}

/// Payload of one fronthaul use. Raw bits and pre-formed XOR bits both
/// count one bit of capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FronthaulUse {
    pub items: Vec<LevelSym>,
}

/// Demand-agnostic cache: the same position prefix of every file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub file_len: usize,
    pub cached_prefix: usize,
}

impl Placement {
    pub fn cache_bits_per_file(&self) -> usize {
        self.cached_prefix
    }

    pub fn is_cached(&self, pos: usize) -> bool {
        pos < self.cached_prefix
    }
}

/// Block structure of a parallel scheme: `b` blocks of `t_b` uses plus a
/// startup offset of `t_o` uses for the first fronthaul message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockParams {
    pub b: usize,
    pub t_b: usize,
    pub t_o: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeMode {
    SerialCacheOnly,
    SerialWithFronthaul,
    ParallelBlockMarkov,
}

/// An executable delivery scheme for one channel and file size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheme {
    pub mode: SchemeMode,
    pub channel: ChannelParams,
    pub l: usize,
    pub mu: Rat,
    /// Effective cache size the wireless phase runs at; the gap to `mu`
    /// is what the fronthaul carried.
    pub mu_g: Rat,
    pub t_f: usize,
    pub t_e: usize,
    pub channel_uses: Vec<ChannelUse>,
    pub fronthaul_plan: Vec<FronthaulUse>,
    pub placement: Placement,
    pub block_params: Option<BlockParams>,
}

impl Scheme {
    /// Total parallel delivery time, counting the startup offset.
    pub fn t_p(&self) -> Option<usize> {
        self.block_params.map(|bp| bp.t_b * bp.b + bp.t_o)
    }

    /// Fraction of the HeNB's delivery content that came over the
    /// fronthaul rather than from its cache.
    pub fn cloud_share(&self) -> Rat {
        if self.mu_g.is_zero() {
            Rat::zero()
        } else {
            (&self.mu_g - &self.mu) / &self.mu_g
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemeError {
    /// The file size does not meet the divisibility the allocation
    /// needs; `required` is the granularity that works.
    IndivisibleFileSize { required: usize },
    /// No finite-time policy exists: the cache is below every
    /// achievable corner and there is no fronthaul to make up the gap.
    InsufficientFronthaul,
    /// The fronthaul cannot deliver the HeNB's feed in time.
    CapacityExceeded,
    /// A requested bit is occluded or delivered twice; indicates an
    /// infeasible allocation and should be unreachable for LP output.
    PlanConflict,
}

impl std::fmt::Display for SchemeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeError::IndivisibleFileSize { required } => {
                write!(f, "file size must be a multiple of {required}")
            }
            SchemeError::InsufficientFronthaul => {
                write!(f, "no fronthaul available below the achievable corner")
            }
            SchemeError::CapacityExceeded => write!(f, "fronthaul capacity exceeded"),
            SchemeError::PlanConflict => write!(f, "decode plan conflict"),
        }
    }
}

impl std::error::Error for SchemeError {}

/// Where one recovered bit is read: a received-word level at some use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitSource {
    pub use_idx: usize,
    pub level: usize,
}

/// Per-user read maps: entry `pos` says where bit `pos` of that user's
/// demanded file appears, already interference-resolved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodePlan {
    pub u1: Vec<BitSource>,
    pub u2: Vec<BitSource>,
}

fn wq(n: &ChannelParams) -> usize {
    n.nd1.max(n.nd2).max(n.nd3) as usize
}

fn frac(r: &Rat) -> Rat {
    r - r.floor()
}

fn to_usize(b: &BigInt) -> usize {
    b.to_usize().expect("size fits the address space")
}

/// Integer stack patterns whose mix realizes fractional prefix heights.
///
/// Every per-use constraint of the rate programs is a difference of two
/// stack prefixes bounded by an integer (word fits, receive windows,
/// neutralizer alignment). Rounding all prefixes with one common
/// threshold preserves every such row, so each returned pattern is
/// feasible on its own; the counts make the time average exact.
fn stair_patterns(prefixes: &[Rat], uses: usize) -> Vec<(Vec<usize>, usize)> {
    let mut cuts: Vec<Rat> = prefixes.iter().map(frac).collect();
    cuts.push(Rat::zero());
    cuts.push(Rat::one());
    cuts.sort();
    cuts.dedup();
    let t = rint(uses as i64);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let count = (&w[1] - &w[0]) * &t;
        assert!(count.is_integer(), "divisibility precondition violated");
        let count = to_usize(&count.to_integer());
        if count == 0 {
            continue;
        }
        let heights: Vec<usize> = prefixes
            .iter()
            .map(|p| {
                let up = if frac(p) >= w[1] { 1 } else { 0 };
                to_usize(&p.floor().to_integer()) + up
            })
            .collect();
        out.push((heights, count));
    }
    // The mix must reproduce the exact totals.
    for (i, p) in prefixes.iter().enumerate() {
        let total: usize = out.iter().map(|(h, c)| h[i] * c).sum();
        assert_eq!(rint(total as i64), p * &t, "pattern mix is exact");
    }
    out
}

/// Expand patterns into a per-use sequence, spreading the heavier HeNB
/// emissions evenly so the pipelined fronthaul never falls behind.
fn schedule_patterns(
    patterns: &[(Vec<usize>, usize)],
    emission: impl Fn(&[usize]) -> usize,
) -> Vec<usize> {
    let total: usize = patterns.iter().map(|(_, c)| c).sum();
    let esum: usize = patterns.iter().map(|(h, c)| emission(h) * c).sum();
    let mut remaining: Vec<usize> = patterns.iter().map(|(_, c)| *c).collect();
    let mut order = Vec::with_capacity(total);
    let mut cum = 0usize;
    for t in 0..total {
        // Target cumulative emissions after t+1 uses, scaled by total.
        let target = esum * (t + 1);
        let mut best: Option<(u128, usize)> = None;
        for (k, (h, _)) in patterns.iter().enumerate() {
            if remaining[k] == 0 {
                continue;
            }
            let cand = (cum + emission(h)) * total;
            let dist = (cand as i128 - target as i128).unsigned_abs();
            if best.map(|(d, _)| dist < d).unwrap_or(true) {
                best = Some((dist, k));
            }
        }
        let (_, k) = best.expect("counts sum to the use total");
        remaining[k] -= 1;
        cum += emission(&patterns[k].0);
        order.push(k);
    }
    order
}

struct Cursor {
    next: usize,
    end: usize,
}

impl Cursor {
    fn new(start: usize, end: usize) -> Self {
        Cursor { next: start, end }
    }

    fn take(&mut self) -> usize {
        assert!(self.next < self.end, "content pool exhausted");
        let p = self.next;
        self.next += 1;
        p
    }

    fn done(&self) -> bool {
        self.next == self.end
    }
}

/// Least common multiple of the denominators of `xs`: the file-size
/// granularity that makes every derived bit count an integer.
fn lcm_denoms(xs: &[Rat]) -> usize {
    let mut acc = BigInt::one();
    for x in xs {
        acc = acc.lcm(&x.denom().abs());
    }
    to_usize(&acc)
}

// Segment indices into the serial prefix vector: x2 carries
// [rc_u | rc_v | rin_v | r1p | pad], x1 carries [l4 | r2p | l3 | rin_n | pad].
const NSEG: usize = 8;
const XRCU: usize = 0;
const XRCV: usize = 1;
const XRINV: usize = 2;
const XR1P: usize = 3;
const HL4: usize = 4;
const HR2P: usize = 5;
const HL3: usize = 6;
const HRINN: usize = 7;

fn serial_prefixes(a: &RateAllocSerial) -> Vec<Rat> {
    let q2 = [&a.rc_u, &a.rc_v, &a.rin_v, &a.r1p_w];
    let q1 = [&a.l4, &a.r2p_u, &a.l3, &a.rin_n];
    let mut out = Vec::with_capacity(NSEG);
    for chain in [&q2[..], &q1[..]] {
        let mut acc = Rat::zero();
        for seg in chain {
            acc += *seg;
            out.push(acc.clone());
        }
    }
    out
}

fn seg_lens(heights: &[usize]) -> [usize; NSEG] {
    let mut lens = [0usize; NSEG];
    for (i, len) in lens.iter_mut().enumerate() {
        let base = if i == 0 || i == HL4 { 0 } else { heights[i - 1] };
        *len = heights[i] - base;
    }
    lens
}

struct UsePlan {
    lens: [usize; NSEG],
    emissions: usize,
}

fn plan_uses(prefixes: &[Rat], order_uses: usize, n: &ChannelParams) -> Vec<UsePlan> {
    let pats = stair_patterns(prefixes, order_uses);
    let emission = |h: &[usize]| (h[HR2P] - h[HL4]) + (h[HRINN] - h[HL3]);
    let order = schedule_patterns(&pats, emission);
    order
        .into_iter()
        .map(|k| {
            let lens = seg_lens(&pats[k].0);
            // Neutralizer levels must pair off exactly at U1.
            assert_eq!(lens[XRINV], lens[HRINN]);
            if lens[XRINV] > 0 {
                let start_gap = (pats[k].0[XRCV] + n.nd1 as usize) as i64
                    - (pats[k].0[HL3] + n.nd2 as usize) as i64;
                assert_eq!(start_gap, 0, "neutralizer misaligned");
            }
            UsePlan { lens, emissions: emission(&pats[k].0) }
        })
        .collect()
}

/// Content pools: positions of each file routed to the streams. The
/// cache holds the position prefix, so cached HeNB content draws from
/// the front of the file and cloud-fed content from just after it.
struct Pools {
    u_cached: Cursor,
    u_fed: Cursor,
    u_clean: Cursor,
    v_partner: Cursor,
    v_clean: Cursor,
}

impl Pools {
    fn new(l: usize, henb_total: usize, cached_total: usize, partner_total: usize) -> Self {
        Pools {
            u_cached: Cursor::new(0, cached_total),
            u_fed: Cursor::new(cached_total, henb_total),
            u_clean: Cursor::new(henb_total, l),
            v_partner: Cursor::new(0, partner_total),
            v_clean: Cursor::new(partner_total, l),
        }
    }

    fn assert_drained(&self) {
        assert!(self.u_cached.done() && self.u_fed.done() && self.u_clean.done());
        assert!(self.v_partner.done() && self.v_clean.done());
    }
}

fn bit(role: Role, pos: usize) -> Option<LevelSym> {
    Some(LevelSym::Bit(BitRef { role, pos }))
}

/// Lay out one wireless use. `fed` of this use's HeNB emissions come
/// over the fronthaul (the rest from cache); returns the emitted
/// fronthaul items in stack order.
fn build_use(
    plan: &UsePlan,
    q: usize,
    crosslink: Crosslink,
    pools: &mut Pools,
    fed: usize,
) -> (ChannelUse, Vec<LevelSym>) {
    let lens = &plan.lens;
    let mut x2 = vec![None; q];
    let mut x1 = vec![None; q];
    let mut fh = Vec::new();

    let mut lvl = 0;
    for _ in 0..lens[XRCU] {
        x2[lvl] = bit(Role::U, pools.u_clean.take());
        lvl += 1;
    }
    for _ in 0..lens[XRCV] {
        x2[lvl] = bit(Role::V, pools.v_clean.take());
        lvl += 1;
    }
    let mut partners = Vec::with_capacity(lens[XRINV]);
    for _ in 0..lens[XRINV] {
        let p = pools.v_partner.take();
        partners.push(p);
        x2[lvl] = bit(Role::V, p);
        lvl += 1;
    }
    let r1p_role = match crosslink {
        Crosslink::Scl => Role::U,
        Crosslink::Wcl => Role::V,
    };
    for _ in 0..lens[XR1P] {
        let p = match r1p_role {
            Role::U => pools.u_clean.take(),
            Role::V => pools.v_clean.take(),
        };
        x2[lvl] = bit(r1p_role, p);
        lvl += 1;
    }

    // HeNB word: emissions are numbered in stack order; the first `fed`
    // of them ride the fronthaul, the rest come from the cache prefix.
    let mut emitted = 0;
    let take_u = |pools: &mut Pools, emitted: &mut usize| {
        let pos = if *emitted < fed {
            pools.u_fed.take()
        } else {
            pools.u_cached.take()
        };
        *emitted += 1;
        pos
    };
    let mut lvl = lens[HL4];
    for _ in 0..lens[HR2P] {
        let fed_now = emitted < fed;
        let pos = take_u(pools, &mut emitted);
        let sym = LevelSym::Bit(BitRef { role: Role::U, pos });
        if fed_now {
            fh.push(sym);
        }
        x1[lvl] = Some(sym);
        lvl += 1;
    }
    lvl += lens[HL3];
    for &vpos in &partners {
        let fed_now = emitted < fed;
        let upos = take_u(pools, &mut emitted);
        let sym = LevelSym::Xor(
            BitRef { role: Role::U, pos: upos },
            BitRef { role: Role::V, pos: vpos },
        );
        if fed_now {
            fh.push(sym);
        }
        x1[lvl] = Some(sym);
        lvl += 1;
    }
    assert_eq!(emitted, plan.emissions);

    (ChannelUse { x1: Word { levels: x1 }, x2: Word { levels: x2 } }, fh)
}

/// Divisibility granularity for a serial allocation: every per-use
/// prefix height times the use count, the cache size, and the fronthaul
/// payload must all come out integral.
fn serial_required(mu: &Rat, mu_g: &Rat, alloc: &RateAllocSerial) -> usize {
    let mut xs = vec![mu.clone(), mu_g.clone(), Rat::one() / &alloc.lbar];
    for p in serial_prefixes(alloc) {
        xs.push(p / &alloc.lbar);
    }
    lcm_denoms(&xs)
}

/// Returns the channel uses, fronthaul items, use count, and the total
/// HeNB emission count.
fn synth_serial(
    mu: &Rat,
    mu_g: &Rat,
    alloc: &RateAllocSerial,
    n: &ChannelParams,
    l: usize,
) -> Result<(Vec<ChannelUse>, Vec<LevelSym>, usize, usize), SchemeError> {
    let required = serial_required(mu, mu_g, alloc);
    if l == 0 || l % required != 0 {
        return Err(SchemeError::IndivisibleFileSize { required });
    }
    let t_e = {
        let t = rint(l as i64) / &alloc.lbar;
        assert!(t.is_integer());
        to_usize(&t.to_integer())
    };
    let uses = plan_uses(&serial_prefixes(alloc), t_e, n);

    let cache_cap = to_usize(&(mu * rint(l as i64)).to_integer());
    let henb_total: usize = uses.iter().map(|u| u.emissions).sum();
    let cached_total = cache_cap.min(henb_total);
    let partner_total: usize = uses.iter().map(|u| u.lens[XRINV]).sum();

    let mut pools = Pools::new(l, henb_total, cached_total, partner_total);
    let mut channel_uses = Vec::with_capacity(t_e);
    let mut fh_items = Vec::new();
    // Cache-first: the cache prefix funds the earliest emissions, the
    // fronthaul the remainder, so cached positions stay below mu*L.
    let mut remaining_cache = cached_total;
    for plan in &uses {
        let from_cache = remaining_cache.min(plan.emissions);
        remaining_cache -= from_cache;
        let fed = plan.emissions - from_cache;
        let (cu, fh) = build_use(plan, wq(n), alloc.crosslink, &mut pools, fed);
        channel_uses.push(cu);
        fh_items.extend(fh);
    }
    pools.assert_drained();
    assert_eq!(fh_items.len(), henb_total - cached_total);

    Ok((channel_uses, fh_items, t_e, henb_total))
}

/// Build the cache-only serial scheme: one wireless phase, everything
/// the HeNB sends comes from its cache.
pub fn synth_serial_cache_only(
    mu: &Rat,
    n: &ChannelParams,
    l: usize,
) -> Result<Scheme, SchemeError> {
    let alloc = serial_rate_lp(mu, n);
    if alloc.lbar.is_zero() {
        return Err(SchemeError::InsufficientFronthaul);
    }
    let (channel_uses, fh_items, t_e, _) = synth_serial(mu, mu, &alloc, n, l)?;
    assert!(fh_items.is_empty(), "cache-only scheme needs no fronthaul");
    Ok(Scheme {
        mode: SchemeMode::SerialCacheOnly,
        channel: *n,
        l,
        mu: mu.clone(),
        mu_g: mu.clone(),
        t_f: 0,
        t_e,
        channel_uses,
        fronthaul_plan: Vec::new(),
        placement: Placement {
            file_len: l,
            cached_prefix: to_usize(&(mu * rint(l as i64)).to_integer()),
        },
        block_params: None,
    })
}

/// Build the serial scheme with a fronthaul prefix phase: the cloud
/// first lifts the effective cache to the best corner, then the corner
/// scheme runs over the wireless segment.
pub fn synth_serial_with_fronthaul(
    mu: &Rat,
    n: &ChannelParams,
    l: usize,
) -> Result<Scheme, SchemeError> {
    let nf = rint(n.nf as i64);
    let mut cache = LpCache::new();
    let (mu_g, _) = serial_fill_target(&mut cache, mu, &nf, n)
        .ok_or(SchemeError::InsufficientFronthaul)?;
    let alloc = cache.serial(&mu_g, n);
    let (channel_uses, fh_items, t_e, henb_total) = synth_serial(mu, &mu_g, &alloc, n, l)?;
    // At a fill target above mu the corner exhausts its budget, so the
    // fronthaul carries exactly the lift.
    debug_assert!(
        mu_g == *mu || rint(henb_total as i64) == &mu_g * rint(l as i64),
        "corner allocation must saturate the cache budget"
    );

    let t_f = if fh_items.is_empty() {
        0
    } else {
        (fh_items.len() + n.nf as usize - 1) / n.nf as usize
    };
    let mut fronthaul_plan = Vec::with_capacity(t_f);
    let mut rest = fh_items.as_slice();
    while !rest.is_empty() {
        let take = rest.len().min(n.nf as usize);
        fronthaul_plan.push(FronthaulUse { items: rest[..take].to_vec() });
        rest = &rest[take..];
    }
    assert_eq!(fronthaul_plan.len(), t_f);

    Ok(Scheme {
        mode: SchemeMode::SerialWithFronthaul,
        channel: *n,
        l,
        mu: mu.clone(),
        mu_g,
        t_f,
        t_e,
        channel_uses,
        fronthaul_plan,
        placement: Placement {
            file_len: l,
            cached_prefix: to_usize(&(mu * rint(l as i64)).to_integer()),
        },
        block_params: None,
    })
}

// Parallel prefix segments: x2 carries
// [r2c_u | r2c_v | r1c_u | r1c_v | rin_v | r1p | pad], x1 as in serial.
const PNSEG: usize = 10;
const PX_R2CU: usize = 0;
const PX_R2CV: usize = 1;
const PX_R1CU: usize = 2;
const PX_R1CV: usize = 3;
const PX_RINV: usize = 4;
const PX_R1P: usize = 5;
const PH_L4: usize = 6;
const PH_R2P: usize = 7;
const PH_L3: usize = 8;
const PH_RINN: usize = 9;

fn parallel_prefixes(a: &RateAllocParallel, slot: usize) -> Vec<Rat> {
    let s = &a.slots[slot];
    let x2 = [&s.r2c_u, &s.r2c_v, &s.r1c_u, &s.r1c_v, &s.rin_v, &a.r1p_w];
    let x1 = [&s.l4, &s.r2p_u, &s.l3, &s.rin_n];
    let mut out = Vec::with_capacity(PNSEG);
    for chain in [&x2[..], &x1[..]] {
        let mut acc = Rat::zero();
        for seg in chain {
            acc += *seg;
            out.push(acc.clone());
        }
    }
    out
}

struct ParUsePlan {
    lens: [usize; PNSEG],
    emissions: usize,
}

fn plan_parallel_slot(prefixes: &[Rat], blocks: usize, n: &ChannelParams) -> Vec<ParUsePlan> {
    let pats = stair_patterns(prefixes, blocks);
    let emission = |h: &[usize]| (h[PH_R2P] - h[PH_L4]) + (h[PH_RINN] - h[PH_L3]);
    let order = schedule_patterns(&pats, emission);
    order
        .into_iter()
        .map(|k| {
            let h = &pats[k].0;
            let mut lens = [0usize; PNSEG];
            for (i, len) in lens.iter_mut().enumerate() {
                let base = if i == 0 || i == PH_L4 { 0 } else { h[i - 1] };
                *len = h[i] - base;
            }
            assert_eq!(lens[PX_RINV], lens[PH_RINN]);
            if lens[PX_RINV] > 0 {
                let start_gap = (h[PX_R1CV] + n.nd1 as usize) as i64
                    - (h[PH_L3] + n.nd2 as usize) as i64;
                assert_eq!(start_gap, 0, "neutralizer misaligned");
            }
            ParUsePlan { lens, emissions: emission(h) }
        })
        .collect()
}

fn build_parallel_use(
    plan: &ParUsePlan,
    q: usize,
    crosslink: Crosslink,
    pools: &mut Pools,
    fed: usize,
) -> (ChannelUse, Vec<LevelSym>) {
    let lens = &plan.lens;
    let mut x2 = vec![None; q];
    let mut x1 = vec![None; q];
    let mut fh = Vec::new();

    let mut lvl = 0;
    for seg in [PX_R2CU, PX_R2CV, PX_R1CU, PX_R1CV] {
        let role = if seg == PX_R2CU || seg == PX_R1CU { Role::U } else { Role::V };
        for _ in 0..lens[seg] {
            let p = match role {
                Role::U => pools.u_clean.take(),
                Role::V => pools.v_clean.take(),
            };
            x2[lvl] = bit(role, p);
            lvl += 1;
        }
    }
    let mut partners = Vec::with_capacity(lens[PX_RINV]);
    for _ in 0..lens[PX_RINV] {
        let p = pools.v_partner.take();
        partners.push(p);
        x2[lvl] = bit(Role::V, p);
        lvl += 1;
    }
    let r1p_role = match crosslink {
        Crosslink::Scl => Role::U,
        Crosslink::Wcl => Role::V,
    };
    for _ in 0..lens[PX_R1P] {
        let p = match r1p_role {
            Role::U => pools.u_clean.take(),
            Role::V => pools.v_clean.take(),
        };
        x2[lvl] = bit(r1p_role, p);
        lvl += 1;
    }

    let mut emitted = 0;
    let mut lvl = lens[PH_L4];
    for _ in 0..lens[PH_R2P] {
        let fed_now = emitted < fed;
        let pos = if fed_now { pools.u_fed.take() } else { pools.u_cached.take() };
        emitted += 1;
        let sym = LevelSym::Bit(BitRef { role: Role::U, pos });
        if fed_now {
            fh.push(sym);
        }
        x1[lvl] = Some(sym);
        lvl += 1;
    }
    lvl += lens[PH_L3];
    for &vpos in &partners {
        let fed_now = emitted < fed;
        let upos = if fed_now { pools.u_fed.take() } else { pools.u_cached.take() };
        emitted += 1;
        let sym = LevelSym::Xor(
            BitRef { role: Role::U, pos: upos },
            BitRef { role: Role::V, pos: vpos },
        );
        if fed_now {
            fh.push(sym);
        }
        x1[lvl] = Some(sym);
        lvl += 1;
    }
    assert_eq!(emitted, plan.emissions);

    (ChannelUse { x1: Word { levels: x1 }, x2: Word { levels: x2 } }, fh)
}

/// Build the parallel block-Markov scheme: `b` blocks of two uses, the
/// fronthaul running alongside and one use ahead of the wireless
/// segment, plus the initial offset use that primes the pipeline.
pub fn synth_parallel(
    mu: &Rat,
    n: &ChannelParams,
    l: usize,
    b: usize,
) -> Result<Scheme, SchemeError> {
    assert!(b >= 1);
    let nf = rint(n.nf as i64);
    let alloc = parallel_rate_lp(mu, &nf, n);
    if alloc.ltilde.is_zero() {
        return Err(SchemeError::InsufficientFronthaul);
    }

    // Granularity: per-chain totals over the blocks and the cache size
    // must be integral, and the file must match the delivered payload.
    let mut xs = vec![alloc.ltilde.clone(), mu * &alloc.ltilde];
    for slot in 0..2 {
        xs.extend(parallel_prefixes(&alloc, slot));
    }
    let m = lcm_denoms(&xs);
    let payload = rint(b as i64) * &alloc.ltilde;
    let fits = b % m == 0 && payload.is_integer() && rint(l as i64) == payload;
    if !fits {
        let required = to_usize(&(rint(m as i64) * &alloc.ltilde).to_integer());
        return Err(SchemeError::IndivisibleFileSize { required });
    }

    let slot_plans = [
        plan_parallel_slot(&parallel_prefixes(&alloc, 0), b, n),
        plan_parallel_slot(&parallel_prefixes(&alloc, 1), b, n),
    ];
    // Wireless use w = 2*block + slot.
    let use_plan = |w: usize| &slot_plans[w % 2][w / 2];
    let uses = 2 * b;

    // Split each use's HeNB feed between cache and fronthaul. The
    // fronthaul is greedy: it funds as much as its cumulative capacity
    // allows (one use of head start), and the cache covers the rest.
    let cache_cap = to_usize(&(mu * rint(l as i64)).to_integer());
    let mut fed = Vec::with_capacity(uses);
    let mut fh_sent = 0usize;
    let mut cache_used = 0usize;
    for w in 0..uses {
        let e = use_plan(w).emissions;
        let capacity = (w + 1) * n.nf as usize - fh_sent;
        let f = e.min(capacity);
        fh_sent += f;
        cache_used += e - f;
        fed.push(f);
    }
    if cache_used > cache_cap {
        return Err(SchemeError::CapacityExceeded);
    }

    let henb_total = fh_sent + cache_used;
    let partner_total: usize = (0..uses).map(|w| use_plan(w).lens[PX_RINV]).sum();
    let mut pools = Pools::new(l, henb_total, cache_used, partner_total);

    let mut channel_uses = Vec::with_capacity(uses);
    let mut fronthaul_plan: Vec<FronthaulUse> =
        (0..uses).map(|_| FronthaulUse { items: Vec::new() }).collect();
    let mut backlog: Vec<LevelSym> = Vec::new();
    for w in 0..uses {
        let (cu, fh) = build_parallel_use(use_plan(w), wq(n), alloc.crosslink, &mut pools, fed[w]);
        channel_uses.push(cu);
        // Items for wireless use w ride fronthaul uses <= w; pack the
        // backlog forward, never exceeding the per-use capacity.
        backlog.extend(fh);
        let room = n.nf as usize - fronthaul_plan[w].items.len();
        let take = backlog.len().min(room);
        let mut moved: Vec<LevelSym> = backlog.drain(..take).collect();
        fronthaul_plan[w].items.append(&mut moved);
        // Anything still pending must fit strictly earlier; greedy
        // capacity accounting already guaranteed it cannot happen.
        if !backlog.is_empty() {
            let mut earlier = w;
            while !backlog.is_empty() && earlier > 0 {
                earlier -= 1;
                let room = n.nf as usize - fronthaul_plan[earlier].items.len();
                let take = backlog.len().min(room);
                let mut moved: Vec<LevelSym> = backlog.drain(..take).collect();
                fronthaul_plan[earlier].items.append(&mut moved);
            }
            if !backlog.is_empty() {
                return Err(SchemeError::CapacityExceeded);
            }
        }
    }
    pools.assert_drained();

    Ok(Scheme {
        mode: SchemeMode::ParallelBlockMarkov,
        channel: *n,
        l,
        mu: mu.clone(),
        mu_g: mu.clone(),
        t_f: uses,
        t_e: uses,
        channel_uses,
        fronthaul_plan,
        placement: Placement { file_len: l, cached_prefix: cache_cap },
        block_params: Some(BlockParams { b, t_b: 2, t_o: 1 }),
    })
}

/// GF(2) sum of the symbols on one received level, reduced: paired
/// references cancel, so a neutralized level resolves to the surviving
/// bit.
fn resolve(syms: &[&LevelSym]) -> Option<BitRef> {
    let mut acc: Vec<BitRef> = Vec::new();
    let mut toggle = |b: BitRef| {
        if let Some(i) = acc.iter().position(|x| *x == b) {
            acc.swap_remove(i);
        } else {
            acc.push(b);
        }
    };
    for s in syms {
        match s {
            LevelSym::Bit(b) => toggle(*b),
            LevelSym::Xor(a, b) => {
                toggle(*a);
                toggle(*b);
            }
        }
    }
    match acc.len() {
        1 => Some(acc[0]),
        _ => None,
    }
}

fn claim(
    map: &mut [Option<BitSource>],
    pos: usize,
    src: BitSource,
) -> Result<(), SchemeError> {
    let slot = map.get_mut(pos).ok_or(SchemeError::PlanConflict)?;
    if slot.is_some() {
        return Err(SchemeError::PlanConflict);
    }
    *slot = Some(src);
    Ok(())
}

/// Derive the per-user read maps from the scheme structure: walk the
/// received words symbolically, keep the levels that resolve to a single
/// bit, and require every requested bit to appear exactly once.
pub fn decode_plan(s: &Scheme) -> Result<DecodePlan, SchemeError> {
    let n = &s.channel;
    let q = wq(n) as i64;
    let mut u1: Vec<Option<BitSource>> = vec![None; s.l];
    let mut u2: Vec<Option<BitSource>> = vec![None; s.l];

    for (use_idx, cu) in s.channel_uses.iter().enumerate() {
        for lvl in 0..q {
            // U1 sees x1 shifted by q-nd1 and x2 shifted by q-nd2.
            let mut syms: Vec<&LevelSym> = Vec::new();
            for (word, nd) in [(&cu.x1, n.nd1 as i64), (&cu.x2, n.nd2 as i64)] {
                let j = lvl - (q - nd);
                if j >= 0 {
                    if let Some(Some(sym)) = word.levels.get(j as usize) {
                        syms.push(sym);
                    }
                }
            }
            if let Some(bref) = resolve(&syms) {
                if bref.role == Role::U {
                    claim(&mut u1, bref.pos, BitSource { use_idx, level: lvl as usize })?;
                }
            }
            // U2 sees only x2, shifted by q-nd3.
            let j = lvl - (q - n.nd3 as i64);
            if j >= 0 {
                if let Some(Some(sym)) = cu.x2.levels.get(j as usize) {
                    if let LevelSym::Bit(bref) = sym {
                        if bref.role == Role::V {
                            claim(&mut u2, bref.pos, BitSource { use_idx, level: lvl as usize })?;
                        }
                    }
                }
            }
        }
    }

    let unwrap_all = |v: Vec<Option<BitSource>>| -> Result<Vec<BitSource>, SchemeError> {
        v.into_iter().map(|o| o.ok_or(SchemeError::PlanConflict)).collect()
    };
    Ok(DecodePlan { u1: unwrap_all(u1)?, u2: unwrap_all(u2)? })
}
