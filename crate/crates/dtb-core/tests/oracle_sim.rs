//! Frozen end-to-end expectations: delivery transcripts, empirical rates,
//! and optimality certificates.

use dtb_core::channel::{make_channel, ChannelParams, QMode};
use dtb_core::rat::{rat, rint, Dtb};
use dtb_core::scheme::{synth_parallel, synth_serial_cache_only, synth_serial_with_fronthaul};
use dtb_core::sim::{
    empirical_dtb, random_library, run_delivery, verify_optimality, Demand, Mode, Verdict,
};

fn ch(nd1: u32, nd2: u32, nd3: u32, nf: u32) -> ChannelParams {
    make_channel(nd1, nd2, nd3, nf, QMode::Wireless).unwrap()
}

fn bits(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

#[test]
fn corner_scheme_delivers_both_files_in_one_use() {
    let n = ch(2, 5, 4, 0);
    let s = synth_serial_cache_only(&rat(1, 3), &n, 3).unwrap();
    let lib = vec![bits("101"), bits("011")];
    let t = run_delivery(&s, &lib, Demand { d1: 0, d2: 1 }, &n).unwrap();
    assert_eq!(t.errors, 0);
    assert_eq!(t.t_e, 1);
    assert_eq!(t.decoded[0], lib[0]);
    assert_eq!(t.decoded[1], lib[1]);
    assert_eq!(empirical_dtb(&t, 3, Mode::Serial), rat(1, 3));

    // Placement is demand-agnostic: the swapped demand decodes too.
    let t2 = run_delivery(&s, &lib, Demand { d1: 1, d2: 0 }, &n).unwrap();
    assert_eq!(t2.errors, 0);
    assert_eq!(t2.decoded[1], lib[1]);
}

#[test]
fn broadcast_scheme_repeats_until_done() {
    let n = ch(2, 5, 4, 0);
    let s = synth_serial_cache_only(&rint(0), &n, 5).unwrap();
    let lib = random_library(2, 5, 7);
    let t = run_delivery(&s, &lib, Demand { d1: 0, d2: 1 }, &n).unwrap();
    assert_eq!(t.errors, 0);
    assert_eq!(t.t_e, 2);
    assert_eq!(t.decoded[0].len(), 5);
    assert_eq!(empirical_dtb(&t, 5, Mode::Serial), rat(2, 5));
}

#[test]
fn fronthaul_scheme_empirical_rate_matches_analysis() {
    let n = ch(2, 5, 4, 10);
    let s = synth_serial_with_fronthaul(&rint(0), &n, 30).unwrap();
    let lib = random_library(2, 30, 11);
    let t = run_delivery(&s, &lib, Demand { d1: 0, d2: 1 }, &n).unwrap();
    assert_eq!(t.errors, 0);
    assert_eq!((t.t_f, t.t_e), (1, 10));
    assert_eq!(empirical_dtb(&t, 30, Mode::Serial), rat(11, 30));
}

#[test]
fn parallel_scheme_overhead_is_one_offset_slot() {
    let n = ch(2, 5, 4, 1);
    let s = synth_parallel(&rint(0), &n, 60, 10).unwrap();
    let lib = random_library(2, 60, 13);
    let t = run_delivery(&s, &lib, Demand { d1: 0, d2: 1 }, &n).unwrap();
    assert_eq!(t.errors, 0);
    assert_eq!(t.t_p, Some(21));
    let emp = empirical_dtb(&t, 60, Mode::Parallel);
    assert_eq!(emp, rat(21, 60));
    // Excess over the analytic limit is exactly the offset amortized
    // over the block structure: 1/(B * Ltilde).
    assert_eq!(emp - rat(1, 3), rat(1, 60));
}

#[test]
fn certificates_are_tight_at_the_worked_points() {
    let c = verify_optimality(&rat(1, 3), 0, &ch(2, 5, 4, 0), Mode::Serial);
    assert_eq!(c.verdict, Verdict::Tight);
    assert_eq!(c.closed_form, Dtb::Finite(rat(1, 3)));
    assert_eq!(c.converse, c.closed_form);
    assert_eq!(c.achievability, c.closed_form);

    let c = verify_optimality(&rint(0), 1, &ch(2, 5, 4, 1), Mode::Parallel);
    assert_eq!(c.verdict, Verdict::Tight);
    assert_eq!(c.closed_form, Dtb::Finite(rat(1, 3)));

    // Class IV point: constant in mu, pinned at the interference bound.
    let c = verify_optimality(&rint(0), 0, &ch(1, 8, 2, 0), Mode::Serial);
    assert_eq!(c.verdict, Verdict::Tight);
    assert_eq!(c.closed_form, Dtb::Finite(rat(1, 2)));
}

#[test]
fn severed_network_certificate_is_unbounded_everywhere() {
    let c = verify_optimality(&rat(1, 2), 0, &ch(3, 0, 2, 0), Mode::Serial);
    assert_eq!(c.verdict, Verdict::Tight);
    assert_eq!(c.closed_form, Dtb::Unbounded);
    assert_eq!(c.converse, Dtb::Unbounded);
    assert_eq!(c.achievability, Dtb::Unbounded);
}
