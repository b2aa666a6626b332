//! Closed-form delivery-time bounds, the interference bottleneck, and the
//! channel-regime taxonomy that organizes the piecewise formulas.

use crate::channel::ChannelParams;
use crate::rat::{clamp01, max_of, max_term, rat_u, rint, Dtb, Rat};
use num::{One, Signed, Zero};

/// Which broadcast-phase constraint binds with an empty cache and no
/// fronthaul. The two-character names mirror the interference pattern:
/// `I0`/`I0C` when the cross link dominates the direct eNB link,
/// `I1`/`I1C` when it does not, with `C` marking the complement where a
/// single stream saturates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BroadcastCond {
    I0,
    I0C,
    I1,
    I1C,
}

/// Whether the eNB-to-U1 route is at least as strong as the eNB-to-U2
/// route. Several scheme layouts depend only on this orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Crosslink {
    /// Strong cross link: nd2 >= nd3.
    Scl,
    /// Weak cross link: nd2 < nd3.
    Wcl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    I,
    II,
    III,
    IV,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Classification {
    pub class: ClassTag,
    pub crosslink: Crosslink,
}

/// All cache- and fronthaul-independent cut values plus the corner cache
/// sizes at which each fractional term stops binding. The parallel
/// corners depend on the fronthaul rate, hence the `nf` argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thresholds {
    /// Interference floor: no amount of cache or fronthaul beats this.
    pub delta_lb_prime: Rat,
    /// Floor sharpened by the cross-link gap, used while fronthaul is
    /// scarcer than the eNB direct link.
    pub delta_lb_dprime: Rat,
    /// Cache size closing the two-user cut (serial).
    pub mu_prime: Rat,
    /// Cache size aligning the helper stream with the cross-link gap.
    pub mu_dprime: Rat,
    /// Cache size closing the helper direct-link cut.
    pub mu_tprime: Rat,
    pub mu_prime_p: Rat,
    pub mu_dprime_p: Rat,
    pub mu_tprime_p: Rat,
    /// Fronthaul rate where the single-user cut overtakes the two-user
    /// cut; reported raw (may be negative).
    pub nf_im: Rat,
    /// Fronthaul rate beyond which extra capacity is useless; raw.
    pub nf_max: Rat,
    /// Serial piecewise breakpoints in nF: (nd2, max(nd2, nd3)).
    pub serial_nf_cuts: (u32, u32),
}

fn m_of(n: &ChannelParams) -> u32 {
    n.nd2.max(n.nd3)
}

pub fn crosslink(n: &ChannelParams) -> Crosslink {
    if n.nd2 >= n.nd3 {
        Crosslink::Scl
    } else {
        Crosslink::Wcl
    }
}

/// Interference floor of the wireless segment: max of the single-user
/// cuts and the two-user sum cut. Finite for every valid channel.
pub fn wireless_bottleneck(n: &ChannelParams) -> Rat {
    let one = Rat::one();
    let two = rint(2);
    max_of([
        max_term(one.clone(), n.nd3 as u64),
        max_term(one, n.nd1.max(n.nd2) as u64),
        max_term(two, (n.nd1 + n.nd3).max(n.nd2) as u64),
    ])
    .finite()
    .expect("valid channels have a finite bottleneck")
    .clone()
}

fn delta_dprime(n: &ChannelParams, dp: &Rat) -> Rat {
    if n.nd3 > n.nd2 {
        dp.clone().max(rat_u(1, (n.nd3 - n.nd2) as u64))
    } else {
        dp.clone()
    }
}

/// Empty-cache, no-fronthaul delivery time: the binding broadcast cut.
pub fn broadcast_dtb(n: &ChannelParams) -> Dtb {
    let m = m_of(n);
    max_of([
        max_term(rint(2), m as u64),
        max_term(Rat::one(), n.nd2 as u64),
        max_term(Rat::one(), n.nd3 as u64),
    ])
}

/// The broadcast regime condition that holds, with ties resolved in
/// declaration order. `admissible_broadcast_conditions` lists every
/// non-strict match for boundary points.
pub fn broadcast_condition(n: &ChannelParams) -> BroadcastCond {
    *admissible_broadcast_conditions(n)
        .first()
        .expect("conditions cover all valid channels")
}

pub fn admissible_broadcast_conditions(n: &ChannelParams) -> Vec<BroadcastCond> {
    let (nd2, nd3) = (n.nd2, n.nd3);
    let mut out = Vec::new();
    if 2 * nd3 >= nd2 && nd2 >= nd3 {
        out.push(BroadcastCond::I0);
    }
    if nd2 >= 2 * nd3 {
        out.push(BroadcastCond::I0C);
    }
    if 2 * nd2 >= nd3 && nd3 >= nd2 {
        out.push(BroadcastCond::I1);
    }
    if nd3 >= 2 * nd2 {
        out.push(BroadcastCond::I1C);
    }
    out
}

/// The broadcast value promised under one condition. Equals
/// `broadcast_dtb` whenever the condition actually holds.
pub fn broadcast_dtb_for(cond: BroadcastCond, n: &ChannelParams) -> Dtb {
    let (num, den) = match cond {
        BroadcastCond::I0 => (rint(2), n.nd2),
        BroadcastCond::I0C => (Rat::one(), n.nd3),
        BroadcastCond::I1 => (rint(2), n.nd3),
        BroadcastCond::I1C => (Rat::one(), n.nd2),
    };
    max_of([max_term(num, den as u64)])
}

fn class_predicates(n: &ChannelParams) -> [bool; 4] {
    let dp = wireless_bottleneck(n);
    let conds = admissible_broadcast_conditions(n);
    let has = |c: BroadcastCond| conds.contains(&c);
    let gap_tight = n.nd3 > n.nd2 && rint((n.nd3 - n.nd2) as i64) * &dp >= Rat::one();
    let gap_loose = n.nd3 <= n.nd2 || rint((n.nd3 - n.nd2) as i64) * &dp <= Rat::one();
    let direct_loose = rint(n.nd2 as i64) * &dp <= Rat::one();
    let direct_tight = rint(n.nd2 as i64) * &dp >= Rat::one();

    let i = (has(BroadcastCond::I0) && n.nd1 + n.nd3 >= n.nd2) || has(BroadcastCond::I1);
    let ii = has(BroadcastCond::I1C) && gap_loose && direct_loose;
    let iii = has(BroadcastCond::I1C) && gap_tight && direct_loose;
    let iv = has(BroadcastCond::I0C)
        || n.nd2 >= n.nd1 + n.nd3
        || (has(BroadcastCond::I1C) && direct_tight);
    [i, ii, iii, iv]
}

/// Channel class by how the delivery time responds to cache and
/// fronthaul: I needs both cuts closed, II and III track the helper
/// stream, IV is pinned at the interference floor regardless.
pub fn classify(n: &ChannelParams) -> Classification {
    let tags = [ClassTag::I, ClassTag::II, ClassTag::III, ClassTag::IV];
    let flags = class_predicates(n);
    let class = tags
        .into_iter()
        .zip(flags)
        .find_map(|(t, f)| f.then_some(t))
        .expect("classes cover all valid channels");
    Classification { class, crosslink: crosslink(n) }
}

/// Every class whose defining (closed) conditions hold; more than one on
/// regime boundaries.
pub fn admissible_classes(n: &ChannelParams) -> Vec<ClassTag> {
    let tags = [ClassTag::I, ClassTag::II, ClassTag::III, ClassTag::IV];
    tags.into_iter()
        .zip(class_predicates(n))
        .filter_map(|(t, f)| f.then_some(t))
        .collect()
}

pub fn thresholds(n: &ChannelParams, nf: &Rat) -> Thresholds {
    let dp = wireless_bottleneck(n);
    let m = m_of(n) as i64;
    let (nd1, nd2, nd3) = (n.nd1 as i64, n.nd2 as i64, n.nd3 as i64);
    let two = rint(2);
    let one = Rat::one();

    let mu_dprime_at = |f: &Rat| {
        if nd3 > nd2 {
            clamp01((rint(nd3 - 2 * nd2) - f) / rint(nd3 - nd2))
        } else {
            Rat::zero()
        }
    };
    let mu_tprime_at = |f: &Rat| {
        if nd1 >= 1 {
            clamp01((rint(nd1 - nd2) - f) / rint(nd1))
        } else {
            Rat::zero()
        }
    };

    Thresholds {
        delta_lb_dprime: delta_dprime(n, &dp),
        mu_prime: clamp01(&two - rint(m) * &dp),
        mu_dprime: mu_dprime_at(&Rat::zero()),
        mu_tprime: mu_tprime_at(&Rat::zero()),
        mu_prime_p: clamp01(&two - (nf + rint(m)) * &dp),
        mu_dprime_p: mu_dprime_at(nf),
        mu_tprime_p: mu_tprime_at(nf),
        nf_im: rint(nd3 - 2 * nd2),
        nf_max: (&two / &dp - rint(m)).max(&one / &dp - rint(nd2)),
        serial_nf_cuts: (n.nd2, m_of(n)),
        delta_lb_prime: dp,
    }
}

/// A max-term whose denominator is a rational expression; zero
/// denominators follow the same binding/vacuous rule as `max_term`.
fn frac_term(num: Rat, den: Rat) -> Option<Dtb> {
    if den.is_zero() {
        num.is_positive().then_some(Dtb::Unbounded)
    } else {
        Some(Dtb::Finite(num / den))
    }
}

/// Optimal delivery time per bit when the fronthaul phase must finish
/// before the wireless phase starts.
pub fn dtb_serial(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    let dp = wireless_bottleneck(n);
    let m = m_of(n);
    let one_less = Rat::one() - mu;
    let two_less = rint(2) - mu;

    if *nf <= rint(n.nd2 as i64) {
        max_of([
            frac_term(one_less, rint(n.nd2 as i64)),
            frac_term(two_less, rint(m as i64)),
            Some(Dtb::Finite(dp)),
        ])
    } else if *nf <= rint(m as i64) {
        // nf > nd2 and nf <= m force nd3 > nd2 here.
        let ddp = delta_dprime(n, &dp);
        let scaled = &one_less / nf + (Rat::one() - rint(n.nd2 as i64) / nf) * ddp;
        max_of([
            Some(Dtb::Finite(scaled)),
            frac_term(two_less, rint(m as i64)),
            Some(Dtb::Finite(dp)),
        ])
    } else {
        let a = &two_less / nf + (Rat::one() - rint(m as i64) / nf) * &dp;
        let b = &one_less / nf + (Rat::one() - rint(n.nd2 as i64) / nf) * &dp;
        Dtb::Finite(a.max(b).max(dp))
    }
}

/// Optimal delivery time per bit when fronthaul and wireless resources
/// run simultaneously.
pub fn dtb_parallel(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    let dp = wireless_bottleneck(n);
    let m = m_of(n);
    max_of([
        frac_term(Rat::one() - mu, nf + rint(n.nd2 as i64)),
        frac_term(rint(2) - mu, nf + rint(m as i64)),
        Some(Dtb::Finite(dp)),
    ])
}

/// The labeled cut terms whose maximum is `dtb_serial`, for reports
/// that name the binding constraint. Vacuous terms (zero-strength cuts
/// with nothing to carry) are omitted.
pub fn serial_cut_terms(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Vec<(&'static str, Dtb)> {
    let dp = wireless_bottleneck(n);
    let m = m_of(n);
    let one_less = Rat::one() - mu;
    let two_less = rint(2) - mu;
    let mut out = Vec::new();
    if *nf <= rint(n.nd2 as i64) {
        if let Some(v) = frac_term(one_less, rint(n.nd2 as i64)) {
            out.push(("single-user cut", v));
        }
        if let Some(v) = frac_term(two_less, rint(m as i64)) {
            out.push(("two-user cut", v));
        }
    } else if *nf <= rint(m as i64) {
        let ddp = delta_dprime(n, &dp);
        let scaled = &one_less / nf + (Rat::one() - rint(n.nd2 as i64) / nf) * ddp;
        out.push(("fronthaul-limited single-user cut", Dtb::Finite(scaled)));
        if let Some(v) = frac_term(two_less, rint(m as i64)) {
            out.push(("two-user cut", v));
        }
    } else {
        let a = &two_less / nf + (Rat::one() - rint(m as i64) / nf) * &dp;
        let b = &one_less / nf + (Rat::one() - rint(n.nd2 as i64) / nf) * &dp;
        out.push(("fronthaul-limited two-user cut", Dtb::Finite(a)));
        out.push(("fronthaul-limited single-user cut", Dtb::Finite(b)));
    }
    out.push(("wireless floor", Dtb::Finite(dp)));
    out
}

/// Parallel counterpart of `serial_cut_terms`: the maximum of these is
/// `dtb_parallel`.
pub fn parallel_cut_terms(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Vec<(&'static str, Dtb)> {
    let dp = wireless_bottleneck(n);
    let m = m_of(n);
    let mut out = Vec::new();
    if let Some(v) = frac_term(Rat::one() - mu, nf + rint(n.nd2 as i64)) {
        out.push(("single-user cut", v));
    }
    if let Some(v) = frac_term(rint(2) - mu, nf + rint(m as i64)) {
        out.push(("two-user cut", v));
    }
    out.push(("wireless floor", Dtb::Finite(dp)));
    out
}

/// Serial delivery time via the per-class reduced formula. Identical to
/// `dtb_serial` whenever `tag` is admissible for `n`.
pub fn dtb_serial_for_class(tag: ClassTag, mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    let dp = wireless_bottleneck(n);
    let m = m_of(n);
    let one_less = Rat::one() - mu;
    let two_less = rint(2) - mu;
    let floor = Some(Dtb::Finite(dp.clone()));
    match tag {
        ClassTag::I => {
            if *nf <= rint(m as i64) {
                max_of([frac_term(two_less, rint(m as i64)), floor])
            } else {
                let a = &two_less / nf + (Rat::one() - rint(m as i64) / nf) * &dp;
                Dtb::Finite(a.max(dp))
            }
        }
        ClassTag::II => {
            if *nf <= rint(n.nd2 as i64) {
                max_of([
                    frac_term(one_less, rint(n.nd2 as i64)),
                    frac_term(two_less, rint(n.nd3 as i64)),
                    floor,
                ])
            } else if *nf <= rint(n.nd3 as i64) {
                let ddp = delta_dprime(n, &dp);
                let a = &one_less / nf + (Rat::one() - rint(n.nd2 as i64) / nf) * ddp;
                max_of([
                    Some(Dtb::Finite(a)),
                    frac_term(two_less, rint(n.nd3 as i64)),
                    floor,
                ])
            } else {
                let a = &two_less / nf + (Rat::one() - rint(n.nd3 as i64) / nf) * &dp;
                Dtb::Finite(a.max(dp))
            }
        }
        ClassTag::III => {
            if *nf <= rint(n.nd2 as i64) {
                max_of([frac_term(one_less, rint(n.nd2 as i64)), floor])
            } else {
                let a = &one_less / nf + (Rat::one() - rint(n.nd2 as i64) / nf) * &dp;
                Dtb::Finite(a.max(dp))
            }
        }
        ClassTag::IV => Dtb::Finite(dp),
    }
}

/// Parallel counterpart of `dtb_serial_for_class`.
pub fn dtb_parallel_for_class(tag: ClassTag, mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    let dp = wireless_bottleneck(n);
    let m = m_of(n);
    let one_less = Rat::one() - mu;
    let two_less = rint(2) - mu;
    let floor = Some(Dtb::Finite(dp.clone()));
    match tag {
        ClassTag::I => max_of([frac_term(two_less, nf + rint(m as i64)), floor]),
        ClassTag::II => max_of([
            frac_term(one_less, nf + rint(n.nd2 as i64)),
            frac_term(two_less, nf + rint(n.nd3 as i64)),
            floor,
        ]),
        ClassTag::III => max_of([frac_term(one_less, nf + rint(n.nd2 as i64)), floor]),
        ClassTag::IV => Dtb::Finite(dp),
    }
}
