//! Frozen structural expectations for synthesized delivery schemes: phase
//! lengths, cache footprints, divisibility failures, and decode plans.

use dtb_core::channel::{make_channel, ChannelParams, QMode};
use dtb_core::rat::{rat, rint, Rat};
use dtb_core::scheme::{
    decode_plan, synth_parallel, synth_serial_cache_only, synth_serial_with_fronthaul,
    SchemeError, SchemeMode,
};

fn ch(nd1: u32, nd2: u32, nd3: u32, nf: u32) -> ChannelParams {
    make_channel(nd1, nd2, nd3, nf, QMode::Wireless).unwrap()
}

fn third() -> Rat {
    rat(1, 3)
}

#[test]
fn corner_scheme_is_one_shot() {
    // n = (2,5,4), mu = 1/3, L = 3: everything fits in one channel use,
    // with exactly one bit of each file cached.
    let s = synth_serial_cache_only(&third(), &ch(2, 5, 4, 0), 3).unwrap();
    assert_eq!(s.mode, SchemeMode::SerialCacheOnly);
    assert_eq!(s.t_e, 1);
    assert_eq!(s.t_f, 0);
    assert_eq!(s.channel_uses.len(), 1);
    assert_eq!(s.placement.cache_bits_per_file(), 1);

    // The single use must carry an aligned XOR: the HeNB top region pairs a
    // cached bit of the first file against an eNB-sent bit of the second.
    let u = &s.channel_uses[0];
    let xors = u
        .x1
        .levels
        .iter()
        .filter(|l| matches!(l, Some(dtb_core::scheme::LevelSym::Xor(_, _))))
        .count();
    assert_eq!(xors, 1);

    let plan = decode_plan(&s).unwrap();
    assert_eq!(plan.u1.len(), 3);
    assert_eq!(plan.u2.len(), 3);
}

#[test]
fn weak_cross_link_corner_scheme() {
    // n = (2,5,6), mu = 1/2, L = 4: one use, two cached bits per file.
    let s = synth_serial_cache_only(&rat(1, 2), &ch(2, 5, 6, 0), 4).unwrap();
    assert_eq!(s.t_e, 1);
    assert_eq!(s.placement.cache_bits_per_file(), 2);
    let plan = decode_plan(&s).unwrap();
    assert_eq!(plan.u1.len(), 4);
    assert_eq!(plan.u2.len(), 4);
}

#[test]
fn zero_cache_broadcast_takes_two_uses() {
    // mu = 0 on (2,5,4): per-use length 5/2, so L = 5 needs T_E = 2.
    let s = synth_serial_cache_only(&rint(0), &ch(2, 5, 4, 0), 5).unwrap();
    assert_eq!(s.t_e, 2);
    assert_eq!(s.placement.cache_bits_per_file(), 0);
}

#[test]
fn indivisible_file_size_reports_step() {
    let err = synth_serial_cache_only(&third(), &ch(2, 5, 4, 0), 4).unwrap_err();
    let SchemeError::IndivisibleFileSize { required } = err else {
        panic!("expected divisibility error, got {err:?}")
    };
    assert_eq!(required, 3);
    assert!(synth_serial_cache_only(&third(), &ch(2, 5, 4, 0), 2 * required).is_ok());
}

#[test]
fn fronthaul_scheme_splits_phases() {
    // mu = 0, nF = 10 on (2,5,4): fronthaul feeds the corner scheme of
    // cache size 1/3; L = 30 gives T_F = 1 and T_E = 10.
    let s = synth_serial_with_fronthaul(&rint(0), &ch(2, 5, 4, 10), 30).unwrap();
    assert_eq!(s.mode, SchemeMode::SerialWithFronthaul);
    assert_eq!(s.t_f, 1);
    assert_eq!(s.t_e, 10);
    assert_eq!(s.fronthaul_plan.len(), 1);
    assert_eq!(s.fronthaul_plan[0].items.len(), 10);
    assert_eq!(s.placement.cache_bits_per_file(), 0);
}

#[test]
fn fronthaul_scheme_with_partial_cache_shares_memory() {
    // mu = 1/6 sits halfway to the corner 1/3: half the file runs on the
    // cached policy, half on the cloud-fed policy.
    let s = synth_serial_with_fronthaul(&rat(1, 6), &ch(2, 5, 4, 5), 30).unwrap();
    assert_eq!(s.cloud_share(), rat(1, 2));
    assert_eq!(s.placement.cache_bits_per_file(), 5);
    // Fronthaul carries the HeNB share of the uncached half: 5 bits.
    let total: usize = s.fronthaul_plan.iter().map(|u| u.items.len()).sum();
    assert_eq!(total, 5);
    assert_eq!(s.t_f, 1);
    assert_eq!(s.t_e, 10);
}

#[test]
fn memory_share_survives_a_short_file() {
    // Same point at L = 6: the split is still half/half; the single
    // fronthauled bit costs a full (mostly idle) fronthaul use.
    let s = synth_serial_with_fronthaul(&rat(1, 6), &ch(2, 5, 4, 5), 6).unwrap();
    assert_eq!(s.cloud_share(), rat(1, 2));
    assert_eq!(s.placement.cache_bits_per_file(), 1);
    assert_eq!(s.t_f, 1);
    assert_eq!(s.t_e, 2);
}

#[test]
fn corner_cache_size_degenerates_to_cache_only() {
    let s = synth_serial_with_fronthaul(&third(), &ch(2, 5, 4, 10), 3).unwrap();
    assert_eq!(s.t_f, 0);
    assert_eq!(s.t_e, 1);
    assert!(s.fronthaul_plan.is_empty());
}

#[test]
fn no_fronthaul_below_corner_is_an_error() {
    // nd2 = 0 and nF = 0: U1 unreachable below full cache.
    let err = synth_serial_with_fronthaul(&rat(1, 2), &ch(3, 0, 2, 0), 2).unwrap_err();
    assert!(matches!(err, SchemeError::InsufficientFronthaul));
}

#[test]
fn parallel_scheme_timing() {
    // mu = 0, nF = 1 on (2,5,4): per-block length 6, B = 10 blocks,
    // L = 60, pipelined fronthaul adds one setup slot: T_P = 21.
    let s = synth_parallel(&rint(0), &ch(2, 5, 4, 1), 60, 10).unwrap();
    assert_eq!(s.mode, SchemeMode::ParallelBlockMarkov);
    let bp = s.block_params.as_ref().expect("block structure");
    assert_eq!(bp.b, 10);
    assert_eq!(bp.t_b, 2);
    assert_eq!(bp.t_o, 1);
    assert_eq!(s.t_p().unwrap(), 21);
    // Every fronthaul slot respects the per-use capacity.
    assert!(s.fronthaul_plan.iter().all(|u| u.items.len() <= 1));
    let plan = decode_plan(&s).unwrap();
    assert_eq!(plan.u1.len(), 60);
    assert_eq!(plan.u2.len(), 60);
}

#[test]
fn parallel_divisibility_error() {
    let err = synth_parallel(&rint(0), &ch(2, 5, 4, 1), 61, 10).unwrap_err();
    assert!(matches!(err, SchemeError::IndivisibleFileSize { .. }));
}
