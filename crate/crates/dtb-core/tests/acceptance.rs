//! Acceptance suite. Each test covers one release criterion and prints a
//! single summary line, so the test log doubles as a checklist. All
//! comparisons are exact; there are no tolerances anywhere.

use std::time::{Duration, Instant};

use dtb_core::channel::{make_channel, ChannelParams, QMode};
use dtb_core::converse::{lb_parallel, lb_serial_corollaries, lb_serial_lp_total};
use dtb_core::rat::{rat, rint, Dtb, Rat};
use dtb_core::ratelp::{
    ach_parallel, ach_serial, parallel_ltilde, parallel_rate_lp, serial_rate_lp,
    parallel_alloc_satisfies, serial_alloc_satisfies, table_allocation, Corner, LpCache,
    TableAlloc,
};
use dtb_core::regime::{
    admissible_broadcast_conditions, admissible_classes, broadcast_dtb_for, classify,
    dtb_parallel, dtb_parallel_for_class, dtb_serial, dtb_serial_for_class, thresholds, ClassTag,
};
use dtb_core::scheme::{
    synth_parallel, synth_serial_cache_only, synth_serial_with_fronthaul, Scheme, SchemeError,
};
use dtb_core::sim::{empirical_dtb, random_library, run_delivery, Demand, Mode};
use num::integer::gcd;
use num::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every valid channel with link strengths in 0..=8. The fronthaul rate
/// is threaded separately, so it is zeroed here.
fn grid_channels() -> Vec<ChannelParams> {
    let mut out = Vec::new();
    for a in 0..=8 {
        for b in 0..=8 {
            for c in 0..=8 {
                if let Ok(n) = make_channel(a, b, c, 0, QMode::Wireless) {
                    out.push(n);
                }
            }
        }
    }
    out
}

/// Grid cache sizes: eighths, plus every corner threshold that lands in
/// [0, 1] for this channel and fronthaul rate.
fn mu_grid(n: &ChannelParams, nf: &Rat) -> Vec<Rat> {
    let mut mus: Vec<Rat> = (0..=8).map(|k| rat(k, 8)).collect();
    let th = thresholds(n, nf);
    for v in [
        th.mu_prime,
        th.mu_dprime,
        th.mu_tprime,
        th.mu_prime_p,
        th.mu_dprime_p,
        th.mu_tprime_p,
    ] {
        if v >= Rat::zero() && v <= Rat::one() {
            mus.push(v);
        }
    }
    mus.sort();
    mus.dedup();
    mus
}

#[test]
fn criterion_1_certificate_grid() {
    let t0 = Instant::now();
    let channels = grid_channels();
    let mut cache = LpCache::new();
    let mut points = 0usize;
    for n in &channels {
        for nf_i in 0..=10i64 {
            let nf = rint(nf_i);
            for mu in mu_grid(n, &nf) {
                let serial = dtb_serial(&mu, &nf, n);
                assert_eq!(
                    lb_serial_lp_total(&mu, &nf, n),
                    serial,
                    "serial converse vs closed form at mu={mu} nf={nf_i} n={n:?}"
                );
                assert_eq!(
                    ach_serial(&mut cache, &mu, &nf, n),
                    serial,
                    "serial construction vs closed form at mu={mu} nf={nf_i} n={n:?}"
                );
                let parallel = dtb_parallel(&mu, &nf, n);
                assert_eq!(
                    lb_parallel(&mu, &nf, n),
                    parallel,
                    "parallel converse vs closed form at mu={mu} nf={nf_i} n={n:?}"
                );
                assert_eq!(
                    ach_parallel(&mu, &nf, n),
                    parallel,
                    "parallel construction vs closed form at mu={mu} nf={nf_i} n={n:?}"
                );
                points += 1;
            }
        }
    }
    let dt = t0.elapsed();
    assert!(dt < Duration::from_secs(300), "grid took {dt:?}");
    println!(
        "criterion 1: PASS ({} channels x 11 fronthaul rates, {points} points, both modes, {dt:.2?})",
        channels.len()
    );
}

#[test]
fn criterion_2_worked_examples() {
    let zero = rint(0);
    let a = make_channel(2, 5, 4, 0, QMode::Wireless).unwrap();
    assert_eq!(dtb_serial(&rint(0), &zero, &a), Dtb::Finite(rat(2, 5)));
    assert_eq!(dtb_serial(&rat(1, 3), &zero, &a), Dtb::Finite(rat(1, 3)));
    let th = thresholds(&a, &zero);
    assert_eq!(th.mu_prime, rat(1, 3));
    assert_eq!(th.delta_lb_prime, rat(1, 3));
    assert_eq!(th.nf_max, rint(1));

    let b = make_channel(2, 5, 6, 0, QMode::Wireless).unwrap();
    assert_eq!(dtb_serial(&rint(0), &zero, &b), Dtb::Finite(rat(1, 3)));
    assert_eq!(thresholds(&b, &zero).mu_prime, rat(1, 2));
    assert_eq!(dtb_serial(&rat(1, 2), &zero, &b), Dtb::Finite(rat(1, 4)));
    println!("criterion 2: PASS (worked examples on (2,5,4) and (2,5,6))");
}

/// One published corner column: the inequalities delimiting its regime,
/// and for parallel corners the admissible integer fronthaul rates.
struct Column {
    name: &'static str,
    corner: Corner,
    member: fn(i64, i64, i64) -> bool,
    nf_bounds: fn(i64, i64, i64) -> (i64, i64),
}

fn col(
    name: &'static str,
    corner: Corner,
    member: fn(i64, i64, i64) -> bool,
    nf_bounds: fn(i64, i64, i64) -> (i64, i64),
) -> Column {
    Column { name, corner, member, nf_bounds }
}

#[test]
fn criterion_3_published_tables() {
    let any_nf = |_: i64, _: i64, _: i64| (0i64, 12i64);
    let columns = [
        // Cache corner, strong cross link.
        col("B2 scl weak helper", Corner::B2, |a, b, c| b >= c && a + c >= b && c >= a, any_nf),
        col("B2 scl mid helper", Corner::B2, |a, b, c| b >= c && 2 * c >= b && b >= a && a >= c, any_nf),
        col("B2 scl strong helper", Corner::B2, |a, b, c| b >= c && a >= b && 2 * c >= b, any_nf),
        // Cache corner, weak cross link.
        col("B2 wcl strong helper", Corner::B2, |a, b, c| c > b && a >= c, any_nf),
        col("B2 wcl balanced", Corner::B2, |a, b, c| c > b && b >= a && a + c >= 2 * b && 2 * b >= c, any_nf),
        col("B2 wcl cross limited", Corner::B2, |a, b, c| c > b && b >= a && 2 * b >= a + c, any_nf),
        col("B2 wcl mid helper", Corner::B2, |a, b, c| c > b && a + b >= c && c >= a && a >= b, any_nf),
        // Cache corner closing the relay direct-link cut.
        col("B1 strong helper", Corner::B1, |a, b, c| a >= c && c >= 2 * b, any_nf),
        col("B1 mid helper", Corner::B1, |a, b, c| a + b >= c && c >= a && a >= b && c >= 2 * b, any_nf),
        // Cache corner for a dominant relay link.
        col("C1", Corner::C1, |a, b, c| c >= a + b && a >= b, any_nf),
        // Cloud corner, strong cross link.
        col("A1 scl weak helper", Corner::A1Par, |a, b, c| b >= c && a + c >= b && c >= a, any_nf),
        col("A1 scl mid helper", Corner::A1Par, |a, b, c| b >= c && 2 * c >= b && b >= a && a >= c, any_nf),
        col("A1 scl strong helper", Corner::A1Par, |a, b, c| b >= c && a >= b && 2 * c >= b, any_nf),
        // Cloud corner, weak cross link, relay no stronger than the
        // direct route.
        col("A1 wcl balanced", Corner::A1Par, |a, b, c| c > b && b >= a && a + c >= 2 * b && 2 * b >= c, any_nf),
        col("A1 wcl cross limited", Corner::A1Par, |a, b, c| c > b && b >= a && a + c < 2 * b, any_nf),
        // Cloud corner, weak cross link, strong relay; published above
        // the private-stream fronthaul rate.
        col(
            "A1 wcl strong helper",
            Corner::A1Par,
            |a, b, c| c > b && a > b && a >= c,
            |_, b, c| ((c - 2 * b).max(0), 12),
        ),
        col(
            "A1 wcl mid helper",
            Corner::A1Par,
            |a, b, c| c > b && a > b && a + b >= c && c >= a,
            |_, b, c| ((c - 2 * b).max(0), 12),
        ),
        // Cloud corner below the private-stream fronthaul rate.
        col(
            "A2 strong helper",
            Corner::A2Par,
            |a, b, c| a >= c && c >= 2 * b,
            |_, b, c| (0, c - 2 * b),
        ),
        col(
            "A2 mid helper",
            Corner::A2Par,
            |a, b, c| a + b >= c && c >= a && a >= b && c >= 2 * b,
            |_, b, c| (0, c - 2 * b),
        ),
        col("A2 dominant relay", Corner::A2Par, |a, b, c| c >= a + b && a >= b, any_nf),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(0x7AB1E5);
    let mut samples = 0usize;
    for column in &columns {
        let mut accepted = 0usize;
        let mut tries = 0usize;
        while accepted < 50 {
            tries += 1;
            assert!(tries < 500_000, "column {:?} is unsampleable", column.name);
            let (a, b, c) = (
                rng.gen_range(0..=12i64),
                rng.gen_range(0..=12i64),
                rng.gen_range(0..=12i64),
            );
            if !(column.member)(a, b, c) {
                continue;
            }
            let Ok(n) = make_channel(a as u32, b as u32, c as u32, 0, QMode::Wireless) else {
                continue;
            };
            let (lo, hi) = (column.nf_bounds)(a, b, c);
            let nf = rint(rng.gen_range(lo..=hi.max(lo)));
            let alloc = table_allocation(column.corner, &nf, &n).unwrap_or_else(|e| {
                panic!("column {:?} must cover ({a},{b},{c}) at nf={nf}: {e}", column.name)
            });
            match alloc {
                TableAlloc::Serial { mu, alloc } => {
                    assert!(
                        serial_alloc_satisfies(&alloc, &mu, &n),
                        "column {:?} infeasible on ({a},{b},{c})",
                        column.name
                    );
                    assert_eq!(
                        alloc.lbar,
                        serial_rate_lp(&mu, &n).lbar,
                        "column {:?} misses the LP objective on ({a},{b},{c})",
                        column.name
                    );
                }
                TableAlloc::Parallel { nf, alloc } => {
                    let mu0 = rint(0);
                    assert!(
                        parallel_alloc_satisfies(&alloc, &mu0, &nf, &n),
                        "column {:?} infeasible on ({a},{b},{c}) at nf={nf}",
                        column.name
                    );
                    assert_eq!(
                        alloc.ltilde,
                        parallel_rate_lp(&mu0, &nf, &n).ltilde,
                        "column {:?} misses the LP objective on ({a},{b},{c}) at nf={nf}",
                        column.name
                    );
                }
            }
            accepted += 1;
            samples += 1;
        }
    }
    println!(
        "criterion 3: PASS ({} columns x 50 random channels = {samples} allocations re-checked)",
        columns.len()
    );
}

#[test]
fn criterion_4_corollaries_match_lp() {
    let channels = grid_channels();
    let mut points = 0usize;
    for n in &channels {
        for nf_i in 0..=10i64 {
            let nf = rint(nf_i);
            for mu in mu_grid(n, &nf) {
                assert_eq!(
                    lb_serial_corollaries(&mu, &nf, n),
                    lb_serial_lp_total(&mu, &nf, n),
                    "corollary vs LP at mu={mu} nf={nf_i} n={n:?}"
                );
                points += 1;
            }
        }
    }
    println!("criterion 4: PASS ({points} grid points)");
}

#[test]
fn criterion_5_structural_properties() {
    let channels = grid_channels();
    let modes: [(&str, fn(&Rat, &Rat, &ChannelParams) -> Dtb); 2] =
        [("serial", dtb_serial), ("parallel", dtb_parallel)];
    let mut contrast_checked = 0usize;
    for n in &channels {
        let class = classify(n).class;
        let floor = Dtb::Finite(thresholds(n, &rint(0)).delta_lb_prime.clone());

        // Union of all cache-size grids, for the fronthaul sweeps.
        let mut mu_all: Vec<Rat> = Vec::new();
        for nf_i in 0..=10i64 {
            mu_all.extend(mu_grid(n, &rint(nf_i)));
        }
        mu_all.sort();
        mu_all.dedup();

        for nf_i in 0..=10i64 {
            let nf = rint(nf_i);
            let th = thresholds(n, &nf);
            let mus = mu_grid(n, &nf);
            for (label, f) in &modes {
                let vals: Vec<Dtb> = mus.iter().map(|mu| f(mu, &nf, n)).collect();
                // Monotone nonincreasing in the cache size.
                for w in vals.windows(2) {
                    assert!(w[0] >= w[1], "{label} not monotone in mu at nf={nf_i} n={n:?}");
                }
                // Convex on the grid: secant slopes nondecreasing over
                // the finite tail (the infinite head, if any, is a
                // valid convex prefix).
                let mut prev_slope: Option<Rat> = None;
                for i in 0..mus.len().saturating_sub(1) {
                    let (Dtb::Finite(v0), Dtb::Finite(v1)) = (&vals[i], &vals[i + 1]) else {
                        continue;
                    };
                    let slope = (v1 - v0) / (&mus[i + 1] - &mus[i]);
                    if let Some(p) = &prev_slope {
                        assert!(
                            p <= &slope,
                            "{label} not convex in mu at nf={nf_i} n={n:?}"
                        );
                    }
                    prev_slope = Some(slope);
                }
                // Class IV: the wireless floor binds everywhere.
                if class == ClassTag::IV {
                    for v in &vals {
                        assert_eq!(v, &floor, "{label} not constant for a floor-bound channel n={n:?}");
                    }
                }
            }
            // Parallel never worse than serial, pointwise.
            for mu in &mus {
                assert!(
                    dtb_parallel(mu, &nf, n) <= dtb_serial(mu, &nf, n),
                    "parallel beats serial violated at mu={mu} nf={nf_i} n={n:?}"
                );
            }
            // Saturation: past the useful fronthaul rate the parallel
            // curve sits exactly on the wireless floor.
            if nf >= th.nf_max {
                for mu in &mus {
                    assert_eq!(
                        dtb_parallel(mu, &nf, n),
                        floor,
                        "parallel not saturated at mu={mu} nf={nf_i} n={n:?}"
                    );
                }
            }
            // Contrast: with a positive serial cache corner, no finite
            // fronthaul rate lets the serial mode reach the floor for
            // every cache size.
            if class != ClassTag::IV && th.mu_prime > Rat::zero() {
                assert!(
                    mus.iter().any(|mu| dtb_serial(mu, &nf, n) > floor),
                    "serial collapsed to the floor at finite nf={nf_i} n={n:?}"
                );
                contrast_checked += 1;
            }
        }
        // Monotone nonincreasing in the fronthaul rate, per cache size.
        for mu in &mu_all {
            for (label, f) in &modes {
                let series: Vec<Dtb> = (0..=10i64).map(|i| f(mu, &rint(i), n)).collect();
                for w in series.windows(2) {
                    assert!(w[0] >= w[1], "{label} not monotone in nf at mu={mu} n={n:?}");
                }
            }
        }
    }
    println!(
        "criterion 5: PASS ({} channels; monotone, convex, mode order, floor, saturation, {contrast_checked} contrast points)",
        channels.len()
    );
}

/// Synthesize a serial scheme at the smallest accepted file length,
/// then stretch it so the fronthaul phase divides evenly and the
/// empirical delivery time is exact, not rounded up.
fn serial_scheme_exact(mu: &Rat, n: &ChannelParams) -> Result<Scheme, SchemeError> {
    let synth = |l: usize| {
        if n.nf == 0 {
            synth_serial_cache_only(mu, n, l)
        } else {
            synth_serial_with_fronthaul(mu, n, l)
        }
    };
    let base = match synth(1) {
        Ok(s) => s,
        Err(SchemeError::IndivisibleFileSize { required }) => synth(required)?,
        Err(e) => return Err(e),
    };
    if n.nf == 0 {
        return Ok(base);
    }
    let items: usize = base.fronthaul_plan.iter().map(|u| u.items.len()).sum();
    let stretch = (n.nf as usize) / gcd(n.nf as usize, items);
    if stretch == 1 {
        Ok(base)
    } else {
        synth(base.l * stretch)
    }
}

#[test]
fn criterion_6_end_to_end_simulation() {
    let t0 = Instant::now();
    let channels = grid_channels();
    let mut rng = ChaCha8Rng::seed_from_u64(0x51AB);
    let mut cache = LpCache::new();

    // Serial: exact empirical agreement after length normalization.
    let mut serial_points = 0usize;
    let mut deliveries = 0usize;
    let mut tries = 0usize;
    while serial_points < 200 {
        tries += 1;
        assert!(tries < 50_000, "serial sampling starved");
        let n0 = channels[rng.gen_range(0..channels.len())];
        let nf_i = rng.gen_range(0..=10u32);
        let n = make_channel(n0.nd1, n0.nd2, n0.nd3, nf_i, QMode::Wireless).unwrap();
        let mu = rat(rng.gen_range(0..=8), 8);
        let nf = rint(nf_i as i64);
        let Dtb::Finite(value) = ach_serial(&mut cache, &mu, &nf, &n) else {
            continue;
        };
        let s = serial_scheme_exact(&mu, &n).unwrap_or_else(|e| {
            panic!("serial synthesis failed at mu={mu} n={n:?}: {e}")
        });
        for lib_i in 0..100u64 {
            let lib = random_library(2, s.l, rng.gen());
            let demand = if lib_i % 2 == 0 { Demand { d1: 0, d2: 1 } } else { Demand { d1: 1, d2: 0 } };
            let t = run_delivery(&s, &lib, demand, &n).expect("delivery must run");
            assert_eq!(t.errors, 0, "bit errors at mu={mu} nf={nf_i} n={n:?}");
            assert_eq!(
                empirical_dtb(&t, s.l, Mode::Serial),
                value,
                "serial empirical vs analytic at mu={mu} nf={nf_i} n={n:?} l={}",
                s.l
            );
            deliveries += 1;
        }
        serial_points += 1;
    }

    // Parallel: zero errors and the exact one-use offset identity at
    // block counts 1, 4, and 32.
    let mut parallel_points = 0usize;
    let mut per_b = [0usize; 3];
    let b_menu = [1usize, 4, 32];
    tries = 0;
    while parallel_points < 200 {
        tries += 1;
        assert!(tries < 50_000, "parallel sampling starved");
        let n0 = channels[rng.gen_range(0..channels.len())];
        let nf_i = rng.gen_range(0..=10u32);
        let n = make_channel(n0.nd1, n0.nd2, n0.nd3, nf_i, QMode::Wireless).unwrap();
        let mu = rat(rng.gen_range(0..=8), 8);
        let nf = rint(nf_i as i64);
        let lt = parallel_ltilde(&mu, &nf, &n);
        if lt.is_zero() {
            continue;
        }
        // Block granularity, learned from the synthesizer itself.
        let unit = match synth_parallel(&mu, &n, 1, 1) {
            Ok(_) => 1usize,
            Err(SchemeError::IndivisibleFileSize { required }) => {
                let blocks = rint(required as i64) / &lt;
                assert!(blocks.is_integer());
                blocks.to_integer().to_usize().unwrap()
            }
            Err(e) => panic!("parallel probe failed at mu={mu} n={n:?}: {e}"),
        };
        // Rotate preference so every block count gets exercised.
        let start = parallel_points % 3;
        let Some((slot, b)) = (0..3)
            .map(|k| (start + k) % 3)
            .map(|slot| (slot, b_menu[slot]))
            .find(|(_, b)| b % unit == 0)
        else {
            continue;
        };
        let l = (rint(b as i64) * &lt).to_integer().to_usize().unwrap();
        let s = synth_parallel(&mu, &n, l, b).unwrap_or_else(|e| {
            panic!("parallel synthesis failed at mu={mu} nf={nf_i} n={n:?} b={b}: {e}")
        });
        let analytic = rint(2) / &lt;
        let offset = rint(1) / (rint(b as i64) * &lt);
        for lib_i in 0..100u64 {
            let lib = random_library(2, l, rng.gen());
            let demand = if lib_i % 2 == 0 { Demand { d1: 0, d2: 1 } } else { Demand { d1: 1, d2: 0 } };
            let t = run_delivery(&s, &lib, demand, &n).expect("delivery must run");
            assert_eq!(t.errors, 0, "bit errors at mu={mu} nf={nf_i} n={n:?} b={b}");
            let emp = empirical_dtb(&t, l, Mode::Parallel);
            assert_eq!(
                &emp - &analytic,
                offset,
                "offset identity at mu={mu} nf={nf_i} n={n:?} b={b}"
            );
            deliveries += 1;
        }
        per_b[slot] += 1;
        parallel_points += 1;
    }
    assert!(per_b.iter().all(|&c| c > 0), "every block count must be exercised: {per_b:?}");

    let dt = t0.elapsed();
    assert!(dt < Duration::from_secs(120), "simulation took {dt:?}");
    println!(
        "criterion 6: PASS ({serial_points} serial + {parallel_points} parallel points, blocks 1/4/32 = {per_b:?}, {deliveries} deliveries, zero bit errors, {dt:.2?})"
    );
}

#[test]
fn criterion_7_boundary_assignments_agree() {
    let mut class_boundary = 0usize;
    let mut cond_boundary = 0usize;
    for n in grid_channels() {
        let classes = admissible_classes(&n);
        if classes.len() > 1 {
            class_boundary += 1;
            for nf_i in 0..=10i64 {
                let nf = rint(nf_i);
                for mu in mu_grid(&n, &nf) {
                    let serial: Vec<Dtb> = classes
                        .iter()
                        .map(|t| dtb_serial_for_class(*t, &mu, &nf, &n))
                        .collect();
                    assert!(
                        serial.windows(2).all(|w| w[0] == w[1]),
                        "serial class assignments disagree at mu={mu} nf={nf_i} n={n:?}: {classes:?}"
                    );
                    let parallel: Vec<Dtb> = classes
                        .iter()
                        .map(|t| dtb_parallel_for_class(*t, &mu, &nf, &n))
                        .collect();
                    assert!(
                        parallel.windows(2).all(|w| w[0] == w[1]),
                        "parallel class assignments disagree at mu={mu} nf={nf_i} n={n:?}: {classes:?}"
                    );
                }
            }
        }
        let conds = admissible_broadcast_conditions(&n);
        if conds.len() > 1 {
            cond_boundary += 1;
            let vals: Vec<Dtb> = conds.iter().map(|c| broadcast_dtb_for(*c, &n)).collect();
            assert!(
                vals.windows(2).all(|w| w[0] == w[1]),
                "broadcast conditions disagree on n={n:?}: {conds:?}"
            );
        }
    }
    assert!(class_boundary > 0, "the grid must contain class boundaries");
    assert!(cond_boundary > 0, "the grid must contain condition boundaries");
    println!(
        "criterion 7: PASS ({class_boundary} class-boundary and {cond_boundary} condition-boundary channels)"
    );
}
