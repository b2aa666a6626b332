//! Lower bounds on the delivery time per bit: the cache-only cut bound,
//! a two-resource program splitting time between fronthaul and wireless
//! phases (solved by exact vertex enumeration), its closed-form
//! specializations by fronthaul range, and the parallel-operation bound.

use crate::channel::ChannelParams;
use crate::rat::{max_term, max_of, rint, Dtb, Rat};
use crate::regime::{admissible_broadcast_conditions, thresholds, wireless_bottleneck, BroadcastCond};
use num::{One, Signed, Zero};

/// Cut bound with no fronthaul phase: the wireless segment alone must
/// deliver the uncached shares.
pub fn lb_serial_cache_only(mu: &Rat, n: &ChannelParams) -> Dtb {
    let m = n.nd2.max(n.nd3);
    max_of([
        max_term(Rat::one() - mu, n.nd2 as u64),
        max_term(rint(2) - mu, m as u64),
        Some(Dtb::Finite(wireless_bottleneck(n))),
    ])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConverseLpSolution {
    /// Minimal per-bit time split: wireless share plus fronthaul share.
    pub total: Rat,
    pub delta_e: Rat,
    pub delta_f: Rat,
}

/// Serial two-resource bound: minimize dE + dF subject to the two-user
/// cut, the helper-path cut, and the interference floor, where the
/// fronthaul phase contributes nF bits per use.
///
///   max(nd2,nd3) dE + nF dF >= 2 - mu
///   nd2 dE + nF dF >= 1 - mu
///   dE >= bottleneck, dF >= 0
///
/// Two variables, four constraints: enumerate constraint-pair vertices
/// exactly and keep the feasible minimum (ties prefer less fronthaul).
/// `None` means even infinite time cannot satisfy the cuts (no route to
/// U1 at all).
pub fn lb_serial_lp(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Option<ConverseLpSolution> {
    let m = rint(n.nd2.max(n.nd3) as i64);
    let nd2 = rint(n.nd2 as i64);
    let dp = wireless_bottleneck(n);
    let two_less = rint(2) - mu;
    let one_less = Rat::one() - mu;

    // Constraint rows as (a, b, c): a*dE + b*dF >= c.
    let rows = [
        (m, nf.clone(), two_less),
        (nd2, nf.clone(), one_less),
        (Rat::one(), Rat::zero(), dp),
        (Rat::zero(), Rat::one(), Rat::zero()),
    ];

    let feasible = |de: &Rat, df: &Rat| {
        rows.iter().all(|(a, b, c)| &(a * de + b * df) >= c)
    };

    let mut best: Option<ConverseLpSolution> = None;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let (a1, b1, c1) = &rows[i];
            let (a2, b2, c2) = &rows[j];
            let det = a1 * b2 - a2 * b1;
            if det.is_zero() {
                continue;
            }
            let de = (c1 * b2 - c2 * b1) / &det;
            let df = (a1 * c2 - a2 * c1) / &det;
            if de.is_negative() || df.is_negative() || !feasible(&de, &df) {
                continue;
            }
            let cand = ConverseLpSolution { total: &de + &df, delta_e: de, delta_f: df };
            let better = match &best {
                None => true,
                Some(b) => {
                    cand.total < b.total || (cand.total == b.total && cand.delta_f < b.delta_f)
                }
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best
}

pub fn lb_serial_lp_total(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    match lb_serial_lp(mu, nf, n) {
        Some(sol) => Dtb::Finite(sol.total),
        None => Dtb::Unbounded,
    }
}

/// Closed forms of `lb_serial_lp` by fronthaul range: equal to the
/// cache-only bound while the fronthaul is no wider than the helper
/// path, and to explicit expressions above that.
pub fn lb_serial_corollaries(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    let m = n.nd2.max(n.nd3);
    let dp = wireless_bottleneck(n);
    let th = thresholds(n, &Rat::zero());
    let one_less = Rat::one() - mu;
    let two_less = rint(2) - mu;

    if *nf <= rint(n.nd2 as i64) {
        return lb_serial_cache_only(mu, n);
    }
    if *nf <= rint(m as i64) {
        // Here nd3 > nd2, so the channel satisfies one of the two
        // conditions with a stronger eNB-to-U2 route.
        let conds = admissible_broadcast_conditions(n);
        let flat = Dtb::Finite((&two_less / rint(n.nd3 as i64)).max(dp.clone()));
        if conds.contains(&BroadcastCond::I1) {
            return flat;
        }
        // I1C: below the kink cache size the helper stream still binds.
        if mu <= &th.mu_dprime {
            let v = &one_less / nf
                + (Rat::one() - rint(n.nd2 as i64) / nf) * &th.delta_lb_dprime;
            return Dtb::Finite(v.max(dp));
        }
        return flat;
    }
    let a = &two_less / nf + (Rat::one() - rint(m as i64) / nf) * &dp;
    let b = &one_less / nf + (Rat::one() - rint(n.nd2 as i64) / nf) * &dp;
    Dtb::Finite(a.max(b).max(dp))
}

/// Parallel-operation bound: fronthaul capacity adds to both cuts.
pub fn lb_parallel(mu: &Rat, nf: &Rat, n: &ChannelParams) -> Dtb {
    let m = n.nd2.max(n.nd3);
    let term = |num: Rat, den: Rat| {
        if den.is_zero() {
            num.is_positive().then_some(Dtb::Unbounded)
        } else {
            Some(Dtb::Finite(num / den))
        }
    };
    max_of([
        term(Rat::one() - mu, nf + rint(n.nd2 as i64)),
        term(rint(2) - mu, nf + rint(m as i64)),
        Some(Dtb::Finite(wireless_bottleneck(n))),
    ])
}
