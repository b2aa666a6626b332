//! Optimal per-use rate allocations for the wireless segment.
//!
//! The delivery scheme stacks private, common, and neutralization streams
//! into the two transmit words. How many levels each stream gets is the
//! solution of a small exact LP: maximize the per-use file length subject
//! to fit, decodability, alignment, and cache-budget rows. This module
//! builds those programs for the serial (one word per use) and parallel
//! (block-Markov, two uses per block) modes, extracts canonical optimal
//! vertices, and reproduces the published corner-point allocations.

use std::collections::HashMap;

use num::{One, Zero};

use crate::channel::ChannelParams;
use crate::converse::lb_parallel;
use crate::lp::{solve_maximin, solve_minimize, LpError, LpRow, LpSpec, Rel};
use crate::rat::{clamp01, rint, Dtb, Rat};
use crate::regime::{crosslink, thresholds, wireless_bottleneck, Crosslink};

/// Serial per-use allocation at the optimum. All lengths are in levels;
/// fractional values are fine because schemes scale the file until every
/// stream boundary lands on an integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateAllocSerial {
    /// Desired bits delivered to each user per channel use.
    pub lbar: Rat,
    pub crosslink: Crosslink,
    /// Top-of-stack private stream in the eNB word; serves U1 under a
    /// strong cross link and U2 under a weak one.
    pub r1p_w: Rat,
    /// HeNB private stream for U1.
    pub r2p_u: Rat,
    /// Common stream carrying U1 bits.
    pub rc_u: Rat,
    /// Common stream carrying U2 bits.
    pub rc_v: Rat,
    /// Neutralization stream in the eNB word (U2 bits).
    pub rin_v: Rat,
    /// Matching neutralizer in the HeNB word.
    pub rin_n: Rat,
    pub l1: Rat,
    pub l2: Rat,
    pub l3: Rat,
    pub l4: Rat,
}

/// One wireless use of a parallel block. The shared top private stream
/// and the shared eNB pad live on [`RateAllocParallel`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelSlot {
    /// Fronthaul-fed common stream carrying U1 bits.
    pub r1c_u: Rat,
    /// Cache-independent common stream carrying U1 bits.
    pub r2c_u: Rat,
    pub r2p_u: Rat,
    pub rin_v: Rat,
    /// Fronthaul-fed common stream carrying U2 bits.
    pub r1c_v: Rat,
    /// Cache-independent common stream carrying U2 bits.
    pub r2c_v: Rat,
    pub rin_n: Rat,
    pub l2: Rat,
    pub l3: Rat,
    pub l4: Rat,
}

/// Parallel block allocation: two consecutive uses sharing one private
/// stream and one eNB pad.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateAllocParallel {
    /// Desired bits delivered to each user per block of two uses.
    pub ltilde: Rat,
    pub crosslink: Crosslink,
    pub r1p_w: Rat,
    pub l1: Rat,
    pub slots: [ParallelSlot; 2],
}

// Serial variable order.
const ST: usize = 0;
const SR1P: usize = 1;
const SR2P: usize = 2;
const SRCU: usize = 3;
const SRCV: usize = 4;
const SRINV: usize = 5;
const SRINN: usize = 6;
const SL1: usize = 7;
const SL2: usize = 8;
const SL3: usize = 9;
const SL4: usize = 10;
const SNV: usize = 11;

fn row(nv: usize, entries: &[(usize, Rat)], rel: Rel, rhs: Rat) -> LpRow {
    let mut coeffs = vec![Rat::zero(); nv];
    for (i, v) in entries {
        coeffs[*i] = v.clone();
    }
    LpRow::new(coeffs, rel, rhs)
}

fn wireless_q(n: &ChannelParams) -> u32 {
    n.nd1.max(n.nd2).max(n.nd3)
}

/// Rows shared by both neutralization branches of the serial program.
/// `with_in` keeps the alignment equality and ties the two neutralizer
/// lengths together; without it both neutralizers are pinned to zero.
fn serial_spec(mu: &Rat, n: &ChannelParams, cl: Crosslink, with_in: bool) -> LpSpec {
    let q = rint(wireless_q(n) as i64);
    let one = Rat::one();
    let neg = -one.clone();
    let (s, w) = match cl {
        Crosslink::Scl => (one.clone(), Rat::zero()),
        Crosslink::Wcl => (Rat::zero(), one.clone()),
    };
    let mut rows = vec![
        // U1 per-use tally.
        row(
            SNV,
            &[
                (ST, one.clone()),
                (SR1P, -s.clone()),
                (SR2P, neg.clone()),
                (SRCU, neg.clone()),
                (SRINN, neg.clone()),
            ],
            Rel::Le,
            Rat::zero(),
        ),
        // U2 per-use tally.
        row(
            SNV,
            &[
                (ST, one.clone()),
                (SR1P, -w.clone()),
                (SRCV, neg.clone()),
                (SRINV, neg.clone()),
            ],
            Rel::Le,
            Rat::zero(),
        ),
        // eNB word fits in q levels.
        row(
            SNV,
            &[
                (SL1, one.clone()),
                (SR1P, one.clone()),
                (SRINV, one.clone()),
                (SRCV, one.clone()),
                (SRCU, one.clone()),
            ],
            Rel::Le,
            q.clone(),
        ),
        // HeNB word fits in q levels.
        row(
            SNV,
            &[
                (SL2, one.clone()),
                (SL3, one.clone()),
                (SL4, one.clone()),
                (SR2P, one.clone()),
                (SRINN, one.clone()),
            ],
            Rel::Le,
            q,
        ),
        // HeNB sends only cached bits: mu * lbar per use.
        row(
            SNV,
            &[(SR2P, one.clone()), (SRINN, one.clone()), (ST, -mu.clone())],
            Rel::Le,
            Rat::zero(),
        ),
        // U2 sees the top nd3 levels of the eNB word.
        row(
            SNV,
            &[
                (SRCU, one.clone()),
                (SRCV, one.clone()),
                (SRINV, one.clone()),
                (SR1P, w),
            ],
            Rel::Le,
            rint(n.nd3 as i64),
        ),
        // U1 sees the top nd1 levels of the HeNB word.
        row(
            SNV,
            &[
                (SL3, one.clone()),
                (SL4, one.clone()),
                (SR2P, one.clone()),
                (SRINN, one.clone()),
            ],
            Rel::Le,
            rint(n.nd1 as i64),
        ),
        // U1 sees the top nd2 levels of the eNB word.
        row(
            SNV,
            &[
                (SR1P, s),
                (SRINV, one.clone()),
                (SRCV, one.clone()),
                (SRCU, one.clone()),
            ],
            Rel::Le,
            rint(n.nd2 as i64),
        ),
        // HeNB content above U1's eNB image must not collide.
        row(
            SNV,
            &[(SL4, one.clone()), (SR2P, one.clone())],
            Rel::Le,
            rint(n.nd1.saturating_sub(n.nd2) as i64),
        ),
    ];
    if with_in {
        // The neutralizer must land exactly on the interfering stream at
        // U1, which fixes the height difference of the two words.
        rows.push(row(
            SNV,
            &[
                (SRCU, one.clone()),
                (SRCV, one.clone()),
                (SRINV, one.clone()),
                (SL3, neg.clone()),
                (SL4, neg.clone()),
                (SRINN, neg.clone()),
                (SR2P, neg.clone()),
            ],
            Rel::Eq,
            rint(n.nd2 as i64) - rint(n.nd1 as i64),
        ));
        rows.push(row(
            SNV,
            &[(SRINV, one.clone()), (SRINN, neg)],
            Rel::Eq,
            Rat::zero(),
        ));
    } else {
        rows.push(row(SNV, &[(SRINV, one.clone())], Rel::Eq, Rat::zero()));
        rows.push(row(SNV, &[(SRINN, one.clone())], Rel::Eq, Rat::zero()));
    }
    let mut objective = vec![Rat::zero(); SNV];
    objective[ST] = one;
    LpSpec { num_vars: SNV, objective, rows }
}

fn serial_branch_value(mu: &Rat, n: &ChannelParams, cl: Crosslink, with_in: bool) -> Option<Rat> {
    match solve_maximin(&serial_spec(mu, n, cl, with_in)) {
        Ok(sol) => Some(sol.objective),
        Err(LpError::Infeasible) => None,
        Err(LpError::Unbounded) => unreachable!("rate programs are bounded by the fit rows"),
    }
}

/// Solve one crosslink assignment: pick the better neutralization branch
/// (plain wins ties), then canonicalize the vertex by re-solving with the
/// objective pinned and the HeNB load minimized, and fill both pads up.
fn serial_solve_cl(mu: &Rat, n: &ChannelParams, cl: Crosslink) -> RateAllocSerial {
    let plain = serial_branch_value(mu, n, cl, false)
        .expect("the zero allocation satisfies every plain-branch row");
    let neut = serial_branch_value(mu, n, cl, true);
    let (with_in, lbar) = match neut {
        Some(v) if v > plain => (true, v),
        _ => (false, plain),
    };

    let mut spec = serial_spec(mu, n, cl, with_in);
    spec.rows
        .push(row(SNV, &[(ST, Rat::one())], Rel::Eq, lbar.clone()));
    spec.objective = vec![Rat::zero(); SNV];
    spec.objective[SR2P] = Rat::one();
    spec.objective[SRINN] = Rat::one();
    let sol = solve_minimize(&spec).expect("the optimal face is nonempty");
    let x = sol.x;

    let q = rint(wireless_q(n) as i64);
    let l1 = q.clone() - (&x[SR1P] + &x[SRINV] + &x[SRCV] + &x[SRCU]);
    let l2 = q - (&x[SL3] + &x[SL4] + &x[SR2P] + &x[SRINN]);
    RateAllocSerial {
        lbar,
        crosslink: cl,
        r1p_w: x[SR1P].clone(),
        r2p_u: x[SR2P].clone(),
        rc_u: x[SRCU].clone(),
        rc_v: x[SRCV].clone(),
        rin_v: x[SRINV].clone(),
        rin_n: x[SRINN].clone(),
        l1,
        l2,
        l3: x[SL3].clone(),
        l4: x[SL4].clone(),
    }
}

/// Per-use rate allocation for the serial cache-only scheme. When the two
/// eNB links tie, both crosslink readings must agree and the strong-link
/// form is returned.
pub fn serial_rate_lp(mu: &Rat, n: &ChannelParams) -> RateAllocSerial {
    if n.nd2 == n.nd3 {
        let scl = serial_solve_cl(mu, n, Crosslink::Scl);
        let wcl = serial_solve_cl(mu, n, Crosslink::Wcl);
        assert_eq!(
            scl.lbar, wcl.lbar,
            "tied eNB links must give one optimum"
        );
        scl
    } else {
        serial_solve_cl(mu, n, crosslink(n))
    }
}

// Parallel variable order: shared head then one slot (collapsed form).
const PT: usize = 0;
const PR1P: usize = 1;
const PL1: usize = 2;
const PSLOT: usize = 3;
// Offsets inside a slot block.
const OR1CU: usize = 0;
const OR2CU: usize = 1;
const OR2P: usize = 2;
const ORINV: usize = 3;
const OR1CV: usize = 4;
const OR2CV: usize = 5;
const ORINN: usize = 6;
const OL2: usize = 7;
const OL3: usize = 8;
const OL4: usize = 9;
const SLOT_LEN: usize = 10;

/// Per-slot fronthaul budget: what the HeNB may emit beyond its cache
/// share. Forwarding saturates at the channel's own ceiling, and a
/// ceiling below zero just means the fronthaul is useless here.
fn fronthaul_cap(nf: &Rat, n: &ChannelParams) -> Rat {
    let th = thresholds(n, nf);
    nf.clone().min(th.nf_max).max(Rat::zero())
}

/// Build the parallel block program. `slots` is 1 for the collapsed
/// symmetric form (slot terms count twice in the tallies) or 2 for the
/// explicit form; `branch_in[i]` picks the neutralization branch per slot.
fn parallel_spec(
    mu: &Rat,
    nf: &Rat,
    n: &ChannelParams,
    cl: Crosslink,
    slots: usize,
    branch_in: &[bool],
) -> LpSpec {
    let nv = PSLOT + slots * SLOT_LEN;
    let q = rint(wireless_q(n) as i64);
    let one = Rat::one();
    let neg = -one.clone();
    let (s, w) = match cl {
        Crosslink::Scl => (one.clone(), Rat::zero()),
        Crosslink::Wcl => (Rat::zero(), one.clone()),
    };
    // Slot terms appear once per physical use: doubled when collapsed.
    let per_slot = if slots == 1 { rint(2) } else { one.clone() };
    let cap = fronthaul_cap(nf, n);

    let mut rows = Vec::new();
    // U1 and U2 block tallies.
    let mut u1 = vec![(PT, one.clone()), (PR1P, -(rint(2) * &s))];
    let mut u2 = vec![(PT, one.clone()), (PR1P, -(rint(2) * &w))];
    for b in 0..slots {
        let base = PSLOT + b * SLOT_LEN;
        for off in [OR1CU, OR2CU, ORINN, OR2P] {
            u1.push((base + off, -per_slot.clone()));
        }
        for off in [ORINV, OR1CV, OR2CV] {
            u2.push((base + off, -per_slot.clone()));
        }
    }
    rows.push(row(nv, &u1, Rel::Le, Rat::zero()));
    rows.push(row(nv, &u2, Rel::Le, Rat::zero()));

    for b in 0..slots {
        let base = PSLOT + b * SLOT_LEN;
        let commons = [OR1CU, OR2CU, OR1CV, OR2CV];
        // eNB word fit.
        let mut enb = vec![(PL1, one.clone()), (PR1P, one.clone()), (base + ORINV, one.clone())];
        for off in commons {
            enb.push((base + off, one.clone()));
        }
        rows.push(row(nv, &enb, Rel::Le, q.clone()));
        // HeNB word fit.
        rows.push(row(
            nv,
            &[
                (base + OL2, one.clone()),
                (base + OL3, one.clone()),
                (base + OL4, one.clone()),
                (base + OR2P, one.clone()),
                (base + ORINN, one.clone()),
            ],
            Rel::Le,
            q.clone(),
        ));
        // HeNB emission budget: half the cache share per use plus the
        // usable fronthaul rate.
        rows.push(row(
            nv,
            &[
                (base + OR2P, one.clone()),
                (base + ORINN, one.clone()),
                (PT, -(mu / rint(2))),
            ],
            Rel::Le,
            cap.clone(),
        ));
        // U2 sees the top nd3 levels of the eNB word.
        let mut u2v = vec![(base + ORINV, one.clone()), (PR1P, w.clone())];
        for off in commons {
            u2v.push((base + off, one.clone()));
        }
        rows.push(row(nv, &u2v, Rel::Le, rint(n.nd3 as i64)));
        // U1 sees the top nd1 levels of the HeNB word.
        rows.push(row(
            nv,
            &[
                (base + OL3, one.clone()),
                (base + OL4, one.clone()),
                (base + OR2P, one.clone()),
                (base + ORINN, one.clone()),
            ],
            Rel::Le,
            rint(n.nd1 as i64),
        ));
        // U1 sees the top nd2 levels of the eNB word.
        let mut u1v = vec![(base + ORINV, one.clone()), (PR1P, s.clone())];
        for off in commons {
            u1v.push((base + off, one.clone()));
        }
        rows.push(row(nv, &u1v, Rel::Le, rint(n.nd2 as i64)));
        // No collision above U1's eNB image.
        rows.push(row(
            nv,
            &[(base + OL4, one.clone()), (base + OR2P, one.clone())],
            Rel::Le,
            rint(n.nd1.saturating_sub(n.nd2) as i64),
        ));
        if branch_in[b] {
            let mut align = vec![
                (base + ORINV, one.clone()),
                (base + OL3, neg.clone()),
                (base + OL4, neg.clone()),
                (base + ORINN, neg.clone()),
                (base + OR2P, neg.clone()),
            ];
            for off in commons {
                align.push((base + off, one.clone()));
            }
            rows.push(row(
                nv,
                &align,
                Rel::Eq,
                rint(n.nd2 as i64) - rint(n.nd1 as i64),
            ));
            rows.push(row(
                nv,
                &[(base + ORINV, one.clone()), (base + ORINN, neg.clone())],
                Rel::Eq,
                Rat::zero(),
            ));
        } else {
            rows.push(row(nv, &[(base + ORINV, one.clone())], Rel::Eq, Rat::zero()));
            rows.push(row(nv, &[(base + ORINN, one.clone())], Rel::Eq, Rat::zero()));
        }
    }

    let mut objective = vec![Rat::zero(); nv];
    objective[PT] = one;
    LpSpec { num_vars: nv, objective, rows }
}

fn parallel_value(spec: &LpSpec) -> Option<Rat> {
    match solve_maximin(spec) {
        Ok(sol) => Some(sol.objective),
        Err(LpError::Infeasible) => None,
        Err(LpError::Unbounded) => unreachable!("rate programs are bounded by the fit rows"),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ParShape {
    PlainSym,
    NeutSym,
    Mixed,
}

/// Block optimum for one crosslink assignment. The two symmetric branch
/// programs cover every published optimum; the split-slot program runs
/// only when they fall short of the converse ceiling.
fn parallel_best_cl(mu: &Rat, nf: &Rat, n: &ChannelParams, cl: Crosslink) -> (Rat, ParShape) {
    let plain = parallel_value(&parallel_spec(mu, nf, n, cl, 1, &[false]))
        .expect("the zero allocation satisfies every plain-branch row");
    let neut = parallel_value(&parallel_spec(mu, nf, n, cl, 1, &[true]));
    let (mut best, mut shape) = match neut {
        Some(v) if v > plain => (v, ParShape::NeutSym),
        _ => (plain, ParShape::PlainSym),
    };
    if let Dtb::Finite(lb) = lb_parallel(mu, nf, n) {
        let ceiling = rint(2) / lb;
        if best < ceiling {
            if let Some(v) = parallel_value(&parallel_spec(mu, nf, n, cl, 2, &[true, false])) {
                if v > best {
                    best = v;
                    shape = ParShape::Mixed;
                }
            }
        }
    }
    (best, shape)
}

fn slot_from(x: &[Rat], base: usize) -> ParallelSlot {
    ParallelSlot {
        r1c_u: x[base + OR1CU].clone(),
        r2c_u: x[base + OR2CU].clone(),
        r2p_u: x[base + OR2P].clone(),
        rin_v: x[base + ORINV].clone(),
        r1c_v: x[base + OR1CV].clone(),
        r2c_v: x[base + OR2CV].clone(),
        rin_n: x[base + ORINN].clone(),
        l2: x[base + OL2].clone(),
        l3: x[base + OL3].clone(),
        l4: x[base + OL4].clone(),
    }
}

fn parallel_solve_cl(mu: &Rat, nf: &Rat, n: &ChannelParams, cl: Crosslink) -> RateAllocParallel {
    let (ltilde, shape) = parallel_best_cl(mu, nf, n, cl);
    let (slots, branches): (usize, &[bool]) = match shape {
        ParShape::PlainSym => (1, &[false]),
        ParShape::NeutSym => (1, &[true]),
        ParShape::Mixed => (2, &[true, false]),
    };
    let mut spec = parallel_spec(mu, nf, n, cl, slots, branches);
    let nv = spec.num_vars;
    spec.rows
        .push(row(nv, &[(PT, Rat::one())], Rel::Eq, ltilde.clone()));
    spec.objective = vec![Rat::zero(); nv];
    for b in 0..slots {
        let base = PSLOT + b * SLOT_LEN;
        spec.objective[base + OR2P] = Rat::one();
        spec.objective[base + ORINN] = Rat::one();
    }
    let sol = solve_minimize(&spec).expect("the optimal face is nonempty");
    let x = sol.x;

    let q = rint(wireless_q(n) as i64);
    let mut pair = [slot_from(&x, PSLOT), slot_from(&x, PSLOT + (slots - 1) * SLOT_LEN)];
    // Fill the HeNB pad per slot and the shared eNB pad to the taller slot.
    let mut enb_need = Rat::zero();
    for slot in pair.iter_mut() {
        slot.l2 = q.clone() - (&slot.l3 + &slot.l4 + &slot.r2p_u + &slot.rin_n);
        let content =
            &x[PR1P] + &slot.rin_v + &slot.r1c_v + &slot.r1c_u + &slot.r2c_v + &slot.r2c_u;
        enb_need = enb_need.max(content);
    }
    RateAllocParallel {
        ltilde,
        crosslink: cl,
        r1p_w: x[PR1P].clone(),
        l1: q - enb_need,
        slots: pair,
    }
}

/// Bits per block delivered to each user under parallel operation.
pub fn parallel_ltilde(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Rat {
    if n.nd2 == n.nd3 {
        let (a, _) = parallel_best_cl(mu, nf, n, Crosslink::Scl);
        let (b, _) = parallel_best_cl(mu, nf, n, Crosslink::Wcl);
        assert_eq!(a, b, "tied eNB links must give one optimum");
        a
    } else {
        let (v, _) = parallel_best_cl(mu, nf, n, crosslink(n));
        v
    }
}

/// Full parallel block allocation at the optimum.
pub fn parallel_rate_lp(mu: &Rat, nf: &Rat, n: &ChannelParams) -> RateAllocParallel {
    if n.nd2 == n.nd3 {
        let scl = parallel_solve_cl(mu, nf, n, Crosslink::Scl);
        let wcl = parallel_solve_cl(mu, nf, n, Crosslink::Wcl);
        assert_eq!(scl.ltilde, wcl.ltilde, "tied eNB links must give one optimum");
        scl
    } else {
        parallel_solve_cl(mu, nf, n, crosslink(n))
    }
}

/// Memo for serial allocations, keyed by channel and cache size. Sweeps
/// revisit the same corner cache sizes for every fronthaul setting, so
/// this cuts the LP count by roughly the sweep width.
#[derive(Default)]
pub struct LpCache {
    serial: HashMap<(u32, u32, u32, Rat), RateAllocSerial>,
}

impl LpCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn serial(&mut self, mu: &Rat, n: &ChannelParams) -> RateAllocSerial {
        let key = (n.nd1, n.nd2, n.nd3, mu.clone());
        self.serial
            .entry(key)
            .or_insert_with(|| serial_rate_lp(mu, n))
            .clone()
    }
}

/// Where the serial fronthaul phase should lift the effective cache
/// before edge delivery starts, and the delivery time per bit that
/// results. The candidates are the kinks of the cache-only curve; ties
/// prefer the larger target because it shortens the edge phase and eases
/// the file-divisibility step. `None` means no finite-time policy exists.
pub fn serial_fill_target(
    cache: &mut LpCache,
    mu: &Rat,
    nf: &Rat,
    n: &ChannelParams,
) -> Option<(Rat, Rat)> {
    let one = Rat::one();
    let mut cands = vec![mu.clone()];
    if nf > &Rat::zero() {
        let dp = wireless_bottleneck(n);
        let m = rint(n.nd2.max(n.nd3) as i64);
        let nd2 = rint(n.nd2 as i64);
        let mut kinks = vec![
            rint(2) - &m * &dp,
            one.clone() - &nd2 * &dp,
        ];
        if m != nd2 {
            kinks.push((&m - rint(2) * &nd2) / (&m - &nd2));
        }
        kinks.push(one.clone());
        for k in kinks {
            let k = clamp01(k);
            if &k > mu {
                cands.push(k);
            }
        }
        cands.sort();
        cands.dedup();
    }

    let mut best: Option<(Rat, Rat)> = None;
    for cand in cands {
        let lbar = cache.serial(&cand, n).lbar;
        if lbar.is_zero() {
            continue;
        }
        let mut value = one.clone() / lbar;
        if &cand > mu {
            value += (&cand - mu) / nf;
        }
        let better = match &best {
            None => true,
            Some((bc, bv)) => value < *bv || (value == *bv && cand > *bc),
        };
        if better {
            best = Some((cand, value));
        }
    }
    best
}

/// Achievable serial delivery time per bit: spend the fronthaul lifting
/// the cache to the best corner, then run the cache-only allocation.
pub fn ach_serial(cache: &mut LpCache, mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    match serial_fill_target(cache, mu, nf, n) {
        Some((_, value)) => Dtb::Finite(value),
        None => Dtb::Unbounded,
    }
}

/// Achievable parallel delivery time per bit: two uses per block.
pub fn ach_parallel(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    let lt = parallel_ltilde(mu, nf, n);
    if lt.is_zero() {
        Dtb::Unbounded
    } else {
        Dtb::Finite(rint(2) / lt)
    }
}

/// Published corner points of the latency-cache tradeoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    /// Serial cache-only corner where the broadcast cut saturates.
    B2,
    /// Serial cache-only corner of the direct-route regimes.
    B1,
    /// Serial cache-only corner of the relay-limited regimes.
    C1,
    /// Parallel zero-cache corner, fronthaul feeding the neutralizer.
    A1Par,
    /// Parallel zero-cache corner, fronthaul feeding the HeNB private
    /// stream.
    A2Par,
}

/// A published allocation: serial corners fix the cache size, parallel
/// corners fix the fronthaul rate.
#[derive(Debug, Clone)]
pub enum TableAlloc {
    Serial { mu: Rat, alloc: RateAllocSerial },
    Parallel { nf: Rat, alloc: RateAllocParallel },
}

/// The requested corner's table has no column for this channel (or, for
/// parallel corners, not at this fronthaul rate).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeNotCovered {
    pub corner: Corner,
}

impl std::fmt::Display for RegimeNotCovered {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no published {:?} column covers this channel", self.corner)
    }
}

impl std::error::Error for RegimeNotCovered {}

struct SerialCol {
    mu: Rat,
    lbar: Rat,
    r1p_w: Rat,
    r2p_u: Rat,
    rc_u: Rat,
    rc_v: Rat,
    rin: Rat,
    l1: Rat,
    l2: Rat,
    l3: Rat,
    l4: Rat,
}

fn serial_table(corner: Corner, n: &ChannelParams) -> Option<SerialCol> {
    let (d1, d2, d3) = (n.nd1 as i64, n.nd2 as i64, n.nd3 as i64);
    let r = rint;
    let half = |v: i64| rint(v) / rint(2);
    match corner {
        Corner::B2 if d2 >= d3 => {
            if d1 + d3 >= d2 && d3 >= d1 {
                Some(SerialCol {
                    mu: r(2) - rint(2 * d2) / rint(d1 + d3),
                    lbar: half(d1 + d3),
                    r1p_w: r(d2 - d3),
                    r2p_u: r(0),
                    rc_u: half(d3 - d1),
                    rc_v: half(2 * d2 - d1 - d3),
                    rin: r(d1 + d3 - d2),
                    l1: r(0),
                    l2: r(2 * d2 - d1 - d3),
                    l3: r(0),
                    l4: r(0),
                })
            } else if 2 * d3 >= d2 && d2 >= d1 && d1 >= d3 {
                Some(SerialCol {
                    mu: r(2) - rint(d2) / rint(d3),
                    lbar: r(d3),
                    r1p_w: r(d2 - d3),
                    r2p_u: r(0),
                    rc_u: r(0),
                    rc_v: r(d2 - d3),
                    rin: r(2 * d3 - d2),
                    l1: r(0),
                    l2: r(2 * d2 - d1 - d3),
                    l3: r(d1 - d3),
                    l4: r(0),
                })
            } else if d1 >= d2 && 2 * d3 >= d2 {
                Some(SerialCol {
                    mu: r(2) - rint(d2) / rint(d3),
                    lbar: r(d3),
                    r1p_w: r(d2 - d3),
                    r2p_u: r(0),
                    rc_u: r(0),
                    rc_v: r(d2 - d3),
                    rin: r(2 * d3 - d2),
                    l1: r(d1 - d2),
                    l2: r(d2 - d3),
                    l3: r(d2 - d3),
                    l4: r(d1 - d2),
                })
            } else {
                None
            }
        }
        Corner::B2 => {
            // Weak cross link columns.
            if d1 >= d3 {
                Some(SerialCol {
                    mu: r(1),
                    lbar: r(d3),
                    r1p_w: r(d3 - d2),
                    r2p_u: r(d3 - d2),
                    rc_u: r(0),
                    rc_v: r(0),
                    rin: r(d2),
                    l1: r(d1 - d3),
                    l2: r(0),
                    l3: r(0),
                    l4: r(d1 - d3),
                })
            } else if d2 >= d1 && d1 + d3 >= 2 * d2 && 2 * d2 >= d3 {
                Some(SerialCol {
                    mu: r(2) - rint(d3) / rint(d2),
                    lbar: r(d2),
                    r1p_w: r(d3 - d2),
                    r2p_u: r(0),
                    rc_u: r(d3 - d2),
                    rc_v: r(0),
                    rin: r(2 * d2 - d3),
                    l1: r(0),
                    l2: r(d3 - d1),
                    l3: r(d1 + d3 - 2 * d2),
                    l4: r(0),
                })
            } else if d2 >= d1 && 2 * d2 >= d1 + d3 {
                Some(SerialCol {
                    mu: r(2) - rint(2 * d3) / rint(d1 + d3),
                    lbar: half(d1 + d3),
                    r1p_w: r(d3 - d2),
                    r2p_u: r(0),
                    rc_u: half(d3 - d1),
                    rc_v: half(2 * d2 - d1 - d3),
                    rin: r(d1),
                    l1: r(0),
                    l2: r(d3 - d1),
                    l3: r(0),
                    l4: r(0),
                })
            } else if d1 + d2 >= d3 && d3 >= d1 && d1 >= d2 {
                Some(SerialCol {
                    mu: r(2) - rint(d3) / rint(d1),
                    lbar: r(d1),
                    r1p_w: r(d3 - d2),
                    r2p_u: r(d1 - d2),
                    rc_u: r(d3 - d1),
                    rc_v: r(0),
                    rin: r(d1 + d2 - d3),
                    l1: r(0),
                    l2: r(d3 - d1),
                    l3: r(d3 - d1),
                    l4: r(0),
                })
            } else {
                None
            }
        }
        Corner::B1 => {
            let covered = (d1 >= d3 && d3 >= 2 * d2)
                || (d1 + d2 >= d3 && d3 >= d1 && d1 >= d2 && d3 >= 2 * d2);
            if !covered {
                return None;
            }
            Some(SerialCol {
                mu: rint(d3 - 2 * d2) / rint(d3 - d2),
                lbar: r(d3 - d2),
                r1p_w: r(d3 - d2),
                r2p_u: r(d3 - 2 * d2),
                rc_u: r(d2),
                rc_v: r(0),
                rin: r(0),
                l1: r((d1 - d3).max(0)),
                l2: r((d3 - d1).max(0)),
                l3: r(d2),
                l4: r(d1 + d2 - d3),
            })
        }
        Corner::C1 => {
            if d3 >= d1 + d2 && d1 >= d2 {
                Some(SerialCol {
                    mu: rint(d1 - d2) / rint(d1),
                    lbar: r(d1),
                    r1p_w: r(d3 - d2),
                    r2p_u: r(d1 - d2),
                    rc_u: r(d2),
                    rc_v: r(0),
                    rin: r(0),
                    l1: r(0),
                    l2: r(d3 - d1),
                    l3: r(d2),
                    l4: r(0),
                })
            } else {
                None
            }
        }
        _ => None,
    }
}

fn pos(v: Rat) -> Rat {
    v.max(Rat::zero())
}

struct ParallelCol {
    ltilde: Rat,
    r1p_w: Rat,
    l1: Rat,
    slots: [ParallelSlot; 2],
}

fn symmetric_slots(slot: ParallelSlot) -> [ParallelSlot; 2] {
    [slot.clone(), slot]
}

fn parallel_table(corner: Corner, nf: &Rat, n: &ChannelParams) -> Option<ParallelCol> {
    let (d1, d2, d3) = (n.nd1 as i64, n.nd2 as i64, n.nd3 as i64);
    let r = rint;
    let zero = Rat::zero();
    match corner {
        Corner::A1Par => {
            if d2 >= d3 {
                // Strong cross link: one table, three regime columns that
                // differ in the capacity-free common stream and the pads.
                let nf_max_t = if d1 + d3 >= d2 && d2 >= d3 && d3 >= d1 {
                    r(d1 + d3 - d2)
                } else if (2 * d3 >= d2 && d2 >= d1 && d1 >= d3) || (d1 >= d2 && 2 * d3 >= d2) {
                    r(2 * d3 - d2)
                } else {
                    return None;
                };
                let surplus = pos(nf_max_t.clone() - nf);
                let rin = nf.clone().min(nf_max_t.clone());
                let (r2cu1, r2cv2, l1, l2, l3) = if d3 >= d1 {
                    (r(d3 - d1), r(d2 - d1), r(0), r(2 * d2 - d1 - d3), surplus.clone())
                } else if d2 >= d1 {
                    (r(0), r(d2 - d3), r(0), r(2 * d2 - d1 - d3), r(d1 - d3) + &surplus)
                } else {
                    (r(0), r(d2 - d3), r(d1 - d2), r(d2 - d3), r(d2 - d3) + &surplus)
                };
                let l4 = l1.clone();
                let base = ParallelSlot {
                    r1c_u: zero.clone(),
                    r2c_u: zero.clone(),
                    r2p_u: zero.clone(),
                    rin_v: rin.clone(),
                    r1c_v: zero.clone(),
                    r2c_v: zero.clone(),
                    rin_n: rin.clone(),
                    l2,
                    l3,
                    l4,
                };
                let mut first = base.clone();
                first.r1c_u = surplus.clone();
                first.r2c_u = r2cu1;
                first.r2c_v = r(d2 - d3);
                let mut second = base;
                second.r1c_v = surplus;
                second.r2c_v = r2cv2;
                Some(ParallelCol {
                    ltilde: r(d2) + nf.clone().min(nf_max_t),
                    r1p_w: r(d2 - d3),
                    l1,
                    slots: [first, second],
                })
            } else if d3 >= d2 && d2 >= d1 {
                // Weak cross link, relay at least as weak as the direct
                // route: two columns split by the sum cut.
                let (nf_max_t, r2cu1, r2cu2, r2cv1, l3_base) = if d1 + d3 >= 2 * d2 {
                    if 2 * d2 < d3 {
                        return None;
                    }
                    (r(2 * d2 - d3), r(d3 - d2), r(d3 - d2), r(0), r(d1 + d3 - 2 * d2))
                } else {
                    (r(d1), r(d3 - d2), r(d2 - d1), r(2 * d2 - d1 - d3), r(0))
                };
                let surplus = pos(nf_max_t.clone() - nf);
                let rin = nf.clone().min(nf_max_t.clone());
                let base = ParallelSlot {
                    r1c_u: zero.clone(),
                    r2c_u: zero.clone(),
                    r2p_u: zero.clone(),
                    rin_v: rin.clone(),
                    r1c_v: zero.clone(),
                    r2c_v: zero.clone(),
                    rin_n: rin.clone(),
                    l2: r(d3 - d1),
                    l3: l3_base + &surplus,
                    l4: zero.clone(),
                };
                let mut first = base.clone();
                first.r1c_u = surplus.clone();
                first.r2c_u = r2cu1;
                first.r2c_v = r2cv1;
                let mut second = base;
                second.r1c_v = surplus;
                second.r2c_u = r2cu2;
                Some(ParallelCol {
                    ltilde: r(d3) + nf.clone().min(nf_max_t),
                    r1p_w: r(d3 - d2),
                    l1: zero,
                    slots: [first, second],
                })
            } else {
                // Weak cross link with a strong relay; published for
                // fronthaul rates past the private-stream regime.
                if nf < &pos(r(d3 - 2 * d2)) {
                    return None;
                }
                let in_c1 = d1 >= d3 && d3 >= d2;
                let in_c2 = d1 + d2 >= d3 && d3 >= d1 && d1 >= d2;
                if !in_c1 && !in_c2 {
                    return None;
                }
                let (nf_max_t, first, second, l1, l2);
                if in_c1 {
                    nf_max_t = r(d3);
                    l1 = r(d1 - d3);
                    l2 = zero.clone();
                    let rin1 = pos(Rat::min(r(d2) + nf - r(d3), r(d2)));
                    first = ParallelSlot {
                        r1c_u: Rat::min(r(d2), pos(r(d3) - nf)),
                        r2c_u: zero.clone(),
                        r2p_u: Rat::min(r(d3 - d2), nf.clone()),
                        rin_v: rin1.clone(),
                        r1c_v: zero.clone(),
                        r2c_v: zero.clone(),
                        rin_n: rin1,
                        l2: l2.clone(),
                        l3: Rat::min(r(d2), pos(r(d3) - nf)),
                        l4: r(d1 - d3) + pos(r(d3 - d2) - nf),
                    };
                    let rin2 = Rat::min(r(2 * d2 - d3) + nf, Rat::min(r(d2), nf.clone()));
                    second = ParallelSlot {
                        r1c_u: pos(r(d3 - d2) - nf),
                        r2c_u: zero.clone(),
                        r2p_u: Rat::min(pos(Rat::max(r(d3 - 2 * d2), nf - r(d2))), r(d3 - d2)),
                        rin_v: rin2.clone(),
                        r1c_v: pos(Rat::min(r(2 * d2 - d3), r(d2) - nf)),
                        r2c_v: zero.clone(),
                        rin_n: rin2,
                        l2: l2.clone(),
                        l3: pos(Rat::max(r(d3 - d2) - nf, r(d2) - nf)),
                        l4: Rat::max(
                            Rat::min(r(d1 + d2 - d3), Rat::min(r(d1) - nf, r(d1 - d2))),
                            r(d1 - d3),
                        ),
                    };
                } else {
                    nf_max_t = r(2 * d1 - d3);
                    l1 = zero.clone();
                    l2 = r(d3 - d1);
                    let rin1 = pos(Rat::min(r(d2) + nf - r(d1), r(d1 + d2 - d3)));
                    first = ParallelSlot {
                        r1c_u: Rat::min(r(d2), Rat::max(r(d1) - nf, r(d3 - d1))),
                        r2c_u: zero.clone(),
                        r2p_u: Rat::min(nf.clone(), r(d1 - d2)),
                        rin_v: rin1.clone(),
                        r1c_v: zero.clone(),
                        r2c_v: zero.clone(),
                        rin_n: rin1,
                        l2: l2.clone(),
                        l3: Rat::min(r(d2), Rat::max(r(d1) - nf, r(d3 - d1))),
                        l4: pos(r(d1 - d2) - nf),
                    };
                    let rin2 = Rat::min(
                        r(2 * d2 - d3) + nf,
                        Rat::min(r(d1 + d2 - d3), nf.clone()),
                    );
                    second = ParallelSlot {
                        r1c_u: Rat::max(r(d3 - d2) - nf, r(d3 - d1)),
                        r2c_u: zero.clone(),
                        r2p_u: Rat::min(
                            pos(Rat::max(r(d3 - 2 * d2), nf - r(d1 + d2 - d3))),
                            r(d1 - d2),
                        ),
                        rin_v: rin2.clone(),
                        r1c_v: pos(Rat::min(r(2 * d2 - d3), r(d1 + d2 - d3) - nf)),
                        r2c_v: zero.clone(),
                        rin_n: rin2,
                        l2: l2.clone(),
                        l3: Rat::max(r(d3 - d2) - nf, Rat::max(r(d3 - d1), r(d2) - nf)),
                        l4: pos(Rat::min(
                            r(d1 + d2 - d3),
                            Rat::min(nf_max_t.clone() - nf, r(d1 - d2)),
                        )),
                    };
                }
                Some(ParallelCol {
                    ltilde: r(d3) + nf.clone().min(nf_max_t),
                    r1p_w: r(d3 - d2),
                    l1,
                    slots: [first, second],
                })
            }
        }
        Corner::A2Par => {
            let class2 = (d1 >= d3 && d3 >= 2 * d2)
                || (d1 + d2 >= d3 && d3 >= d1 && d1 >= d2 && d3 >= 2 * d2);
            let class3 = d3 >= d1 + d2 && d1 >= d2;
            // On the d3 == d1 + d2 boundary both columns apply; the
            // first one is only published up to its fronthaul ceiling,
            // so past that the lookup falls through to the second.
            let use2 = class2 && nf <= &r(d3 - 2 * d2);
            let cap = if use2 {
                r(d3 - 2 * d2)
            } else if class3 {
                r(d1 - d2)
            } else {
                return None;
            };
            let sent = nf.clone().min(cap.clone());
            let l4 = if use2 {
                Rat::max(r(d1 - d2) - nf, r(d1 + d2 - d3))
            } else {
                pos(cap - nf)
            };
            let slot = ParallelSlot {
                r1c_u: zero.clone(),
                r2c_u: r(d2),
                r2p_u: sent.clone(),
                rin_v: zero.clone(),
                r1c_v: zero.clone(),
                r2c_v: zero.clone(),
                rin_n: zero.clone(),
                l2: r((d3 - d1).max(0)),
                l3: r(d2),
                l4,
            };
            Some(ParallelCol {
                ltilde: rint(2) * (r(d2) + sent),
                r1p_w: r(d3 - d2),
                l1: r((d1 - d3).max(0)),
                slots: symmetric_slots(slot),
            })
        }
        _ => None,
    }
}

/// Look up the published allocation for a corner on this channel. Serial
/// corners are cache-only policies: the result carries the corner cache
/// size and ignores `nf`. Parallel corners take the fronthaul rate as an
/// input and saturate it at the column ceiling.
pub fn table_allocation(
    corner: Corner,
    nf: &Rat,
    n: &ChannelParams,
) -> Result<TableAlloc, RegimeNotCovered> {
    match corner {
        Corner::B2 | Corner::B1 | Corner::C1 => {
            let col = serial_table(corner, n).ok_or(RegimeNotCovered { corner })?;
            Ok(TableAlloc::Serial {
                mu: clamp01(col.mu.clone()),
                alloc: RateAllocSerial {
                    lbar: col.lbar,
                    crosslink: crosslink(n),
                    r1p_w: col.r1p_w,
                    r2p_u: col.r2p_u,
                    rc_u: col.rc_u,
                    rc_v: col.rc_v,
                    rin_v: col.rin.clone(),
                    rin_n: col.rin,
                    l1: col.l1,
                    l2: col.l2,
                    l3: col.l3,
                    l4: col.l4,
                },
            })
        }
        Corner::A1Par | Corner::A2Par => {
            let col = parallel_table(corner, nf, n).ok_or(RegimeNotCovered { corner })?;
            Ok(TableAlloc::Parallel {
                nf: nf.clone(),
                alloc: RateAllocParallel {
                    ltilde: col.ltilde,
                    crosslink: crosslink(n),
                    r1p_w: col.r1p_w,
                    l1: col.l1,
                    slots: col.slots,
                },
            })
        }
    }
}

/// Evaluate the serial constraint rows against a concrete allocation.
/// Published columns sometimes idle the neutralizer; the alignment row is
/// then waived exactly as the plain branch of the program does.
pub fn serial_alloc_satisfies(alloc: &RateAllocSerial, mu: &Rat, n: &ChannelParams) -> bool {
    let q = rint(wireless_q(n) as i64);
    let (s, w) = match alloc.crosslink {
        Crosslink::Scl => (Rat::one(), Rat::zero()),
        Crosslink::Wcl => (Rat::zero(), Rat::one()),
    };
    let a = alloc;
    let vars = [
        &a.r1p_w, &a.r2p_u, &a.rc_u, &a.rc_v, &a.rin_v, &a.rin_n, &a.l1, &a.l2, &a.l3, &a.l4,
    ];
    if vars.iter().any(|v| **v < Rat::zero()) {
        return false;
    }
    let u1 = &s * &a.r1p_w + &a.r2p_u + &a.rc_u + &a.rin_n;
    let u2 = &w * &a.r1p_w + &a.rc_v + &a.rin_v;
    let tally = u1.min(u2);
    let fits = [
        &a.l1 + &a.r1p_w + &a.rin_v + &a.rc_v + &a.rc_u <= q,
        &a.l2 + &a.l3 + &a.l4 + &a.r2p_u + &a.rin_n <= q,
        &a.r2p_u + &a.rin_n <= mu * &a.lbar,
        &a.rc_u + &a.rc_v + &a.rin_v + &w * &a.r1p_w <= rint(n.nd3 as i64),
        &a.l3 + &a.l4 + &a.r2p_u + &a.rin_n <= rint(n.nd1 as i64),
        &s * &a.r1p_w + &a.rin_v + &a.rc_v + &a.rc_u <= rint(n.nd2 as i64),
        &a.l4 + &a.r2p_u <= rint(n.nd1.saturating_sub(n.nd2) as i64),
        a.rin_v == a.rin_n,
        tally == a.lbar,
    ];
    if !fits.into_iter().all(|ok| ok) {
        return false;
    }
    if a.rin_v.is_zero() {
        return true;
    }
    &a.rc_u + &a.rc_v + &a.rin_v - &a.l3 - &a.l4 - &a.rin_n - &a.r2p_u
        == rint(n.nd2 as i64) - rint(n.nd1 as i64)
}

/// Evaluate the parallel constraint rows against a concrete block
/// allocation, slot by slot.
pub fn parallel_alloc_satisfies(
    alloc: &RateAllocParallel,
    mu: &Rat,
    nf: &Rat,
    n: &ChannelParams,
) -> bool {
    let q = rint(wireless_q(n) as i64);
    let (s, w) = match alloc.crosslink {
        Crosslink::Scl => (Rat::one(), Rat::zero()),
        Crosslink::Wcl => (Rat::zero(), Rat::one()),
    };
    if alloc.r1p_w < Rat::zero() || alloc.l1 < Rat::zero() {
        return false;
    }
    let cap = fronthaul_cap(nf, n);
    let mut u1 = rint(2) * &s * &alloc.r1p_w;
    let mut u2 = rint(2) * &w * &alloc.r1p_w;
    for sl in &alloc.slots {
        let vars = [
            &sl.r1c_u, &sl.r2c_u, &sl.r2p_u, &sl.rin_v, &sl.r1c_v, &sl.r2c_v, &sl.rin_n, &sl.l2,
            &sl.l3, &sl.l4,
        ];
        if vars.iter().any(|v| **v < Rat::zero()) {
            return false;
        }
        u1 += &sl.r1c_u + &sl.r2c_u + &sl.rin_n + &sl.r2p_u;
        u2 += &sl.rin_v + &sl.r1c_v + &sl.r2c_v;
        let commons = &sl.r1c_u + &sl.r2c_u + &sl.r1c_v + &sl.r2c_v;
        let fits = [
            &alloc.l1 + &alloc.r1p_w + &sl.rin_v + &commons <= q,
            &sl.l2 + &sl.l3 + &sl.l4 + &sl.r2p_u + &sl.rin_n <= q,
            &sl.r2p_u + &sl.rin_n <= mu / rint(2) * &alloc.ltilde + &cap,
            &commons + &sl.rin_v + &w * &alloc.r1p_w <= rint(n.nd3 as i64),
            &sl.l3 + &sl.l4 + &sl.r2p_u + &sl.rin_n <= rint(n.nd1 as i64),
            &s * &alloc.r1p_w + &sl.rin_v + &commons <= rint(n.nd2 as i64),
            &sl.l4 + &sl.r2p_u <= rint(n.nd1.saturating_sub(n.nd2) as i64),
            sl.rin_v == sl.rin_n,
        ];
        if !fits.into_iter().all(|ok| ok) {
            return false;
        }
        if !sl.rin_v.is_zero()
            && &commons + &sl.rin_v - &sl.l3 - &sl.l4 - &sl.rin_n - &sl.r2p_u
                != rint(n.nd2 as i64) - rint(n.nd1 as i64)
        {
            return false;
        }
    }
    u1.min(u2) == alloc.ltilde
}
