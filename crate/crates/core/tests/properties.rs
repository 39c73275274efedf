//! Cross-module randomized properties under a fixed master seed: the
//! two-sided comparison on fresh weighted instances, coherence of the three
//! empirical estimators with the exact weighted entropy, and the cover
//! relaxation sandwich away from the acceptance seeds.

use entrolab_core::cover::{
    critical_exponent, fractional_cover_cost, katok_covering_number, min_cover_cost, CoverParams,
};
use entrolab_core::measures::{BernoulliMeasure, Measure};
use entrolab_core::rng::SplitMix64;
use entrolab_core::symbolic::{ball_spec, make_sft, Sft, SymbolicSystem, WeightVector};
use entrolab_core::validate::{brin_katok_series, smb_series};
use entrolab_core::variational::variational_gap_report;

const MASTER_SEED: u64 = 0x1AB0_77E5;

fn random_simplex(rng: &mut SplitMix64, d: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..d).map(|_| rng.next_f64() + 1e-4).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// A random SFT with no stranded symbols, coded onto its induced image.
fn random_coded_system(rng: &mut SplitMix64, max_size: usize) -> SymbolicSystem {
    loop {
        let size = 2 + rng.next_below(max_size - 1);
        let mut rows = vec![vec![false; size]; size];
        for row in rows.iter_mut() {
            for cell in row.iter_mut() {
                *cell = rng.next_f64() < 0.75;
            }
        }
        let Ok(source) = make_sft(size, rows) else {
            continue;
        };
        let targets = 1 + rng.next_below(size.min(2));
        let mut table: Vec<u8> = (0..size)
            .map(|i| if i < targets { i as u8 } else { rng.next_below(targets) as u8 })
            .collect();
        for i in (1..table.len()).rev() {
            let j = rng.next_below(i + 1);
            table.swap(i, j);
        }
        if !(0..targets as u8).all(|t| table.contains(&t)) {
            continue;
        }
        let Ok(target) = entrolab_core::io::induced_target(&source, &table) else {
            continue;
        };
        if let Ok(sys) = SymbolicSystem::new(source, target, table) {
            return sys;
        }
    }
}

#[test]
fn two_sided_comparison_on_fresh_weighted_instances() {
    // Full-shift systems where the closed form is exact: the cover bracket
    // must certify the variational value from above within the truncation
    // slack at depth 20.
    let cases: Vec<(usize, Vec<u8>, f64, f64)> = vec![
        // 4 symbols in two equal columns: value 2 log(2 sqrt 2).
        (4, vec![0, 0, 1, 1], 1.0, 1.0),
        // 3-digit carpet column code with uneven weights.
        (3, vec![0, 1, 1], 0.8, 0.9),
    ];
    for (size, table, a1, a2) in cases {
        let sys = SymbolicSystem::new(
            Sft::full_shift(size).unwrap(),
            Sft::full_shift(1 + *table.iter().max().unwrap() as usize).unwrap(),
            table,
        )
        .unwrap();
        let a = WeightVector::new(a1, a2).unwrap();
        let depth_cap = 20;
        // Deepest admitted order, minus two.
        let mut n_max = 1;
        while ball_spec(a, n_max + 1, 0).unwrap().len2 <= depth_cap {
            n_max += 1;
        }
        let params = CoverParams {
            resolution_k: 0,
            min_order: n_max.saturating_sub(2).max(1),
            depth_cap,
            tol: 1e-3,
        };
        let rep = variational_gap_report(&sys, a, &params).unwrap();
        assert!(
            rep.gap <= 0.05,
            "({size}, {a1}, {a2}): gap {} bracket [{}, {}] vs {}",
            rep.gap,
            rep.exponent.bracket.s_low,
            rep.exponent.bracket.s_high,
            rep.variational.interval.midpoint()
        );
        assert!(
            rep.lower_bound_margin <= 0.01,
            "lower-bound certification failed: margin {}",
            rep.lower_bound_margin
        );
    }
}

#[test]
fn weighted_identity_factor_on_golden_mean() {
    // Identity code, a = (1,1): every quantity doubles the Parry entropy.
    let sys = SymbolicSystem::identity(Sft::golden_mean());
    let a = WeightVector::new(1.0, 1.0).unwrap();
    let params = CoverParams {
        resolution_k: 0,
        min_order: 8,
        depth_cap: 20,
        tol: 1e-3,
    };
    let rep = variational_gap_report(&sys, a, &params).unwrap();
    let expect = 2.0 * 0.4812118250596035;
    assert!(
        (rep.variational.interval.midpoint() - expect).abs() < 1e-9,
        "variational {}",
        rep.variational.interval.midpoint()
    );
    assert!(rep.gap <= 0.05, "gap {}", rep.gap);
}

#[test]
fn estimators_cohere_with_exact_entropy() {
    // SMB and ball-decay tails both land on the weighted entropy of random
    // Bernoulli measures through the column code.
    let mut rng = SplitMix64::new(MASTER_SEED);
    let sys = SymbolicSystem::new(
        Sft::full_shift(3).unwrap(),
        Sft::full_shift(2).unwrap(),
        vec![0, 1, 1],
    )
    .unwrap();
    for trial in 0..5 {
        let m = Measure::Bernoulli(BernoulliMeasure::new(random_simplex(&mut rng, 3)).unwrap());
        let a = WeightVector::new(0.3 + rng.next_f64(), rng.next_f64()).unwrap();
        let target = entrolab_core::measures::weighted_measure_entropy(a, &m, sys.code())
            .unwrap()
            .midpoint();
        let grid = vec![400, 800, 1200, 1600, 2000];
        let smb = smb_series(&m, sys.code(), a, &grid, 120, rng.next_u64()).unwrap();
        assert!(
            (smb.tail_mean() - target).abs() < 0.05,
            "trial {trial}: smb tail {} vs {target}",
            smb.tail_mean()
        );
        let bk = brin_katok_series(&m, sys.code(), a, 1, &grid, 120, rng.next_u64()).unwrap();
        assert!(
            (bk.tail_mean() - target).abs() < 0.05,
            "trial {trial}: ball-decay tail {} vs {target}",
            bk.tail_mean()
        );
    }
}

#[test]
fn fractional_relaxation_never_exceeds_integral_cost() {
    let mut rng = SplitMix64::new(MASTER_SEED ^ 0xF00D);
    let mut compared = 0;
    while compared < 15 {
        let sys = random_coded_system(&mut rng, 3);
        let a = WeightVector::new(0.4 + rng.next_f64(), rng.next_f64()).unwrap();
        let s = 0.2 + 2.0 * rng.next_f64();
        if ball_spec(a, 1, 0).unwrap().len2 > 6 {
            continue;
        }
        let frac = match fractional_cover_cost(&sys, a, s, 0, 1, 6) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let full = min_cover_cost(&sys, a, s, 0, 1, 6).unwrap();
        assert!(frac <= full + 1e-9, "{frac} > {full}");
        compared += 1;
    }
}

#[test]
fn covering_numbers_monotone_on_random_measures() {
    let mut rng = SplitMix64::new(MASTER_SEED ^ 0xCAFE);
    let sys = SymbolicSystem::identity(Sft::full_shift(2).unwrap());
    let a = WeightVector::new(1.0, 0.0).unwrap();
    for _ in 0..8 {
        let m = Measure::Bernoulli(BernoulliMeasure::new(random_simplex(&mut rng, 2)).unwrap());
        let mut prev = 0;
        for n in [2, 4, 6, 8] {
            let c = katok_covering_number(&sys, &m, a, n, 0, 0.3).unwrap();
            assert!(c >= prev);
            prev = c;
        }
        let loose = katok_covering_number(&sys, &m, a, 6, 0, 0.8).unwrap();
        let tight = katok_covering_number(&sys, &m, a, 6, 0, 0.1).unwrap();
        assert!(loose <= tight);
    }
}

#[test]
fn critical_exponent_brackets_are_reproducible_and_ordered() {
    let mut rng = SplitMix64::new(MASTER_SEED ^ 0xBEEF);
    for _ in 0..5 {
        let sys = random_coded_system(&mut rng, 3);
        let a = WeightVector::new(0.5 + rng.next_f64() * 0.5, rng.next_f64() * 0.5).unwrap();
        if ball_spec(a, 1, 0).unwrap().len2 > 10 {
            continue;
        }
        let r1 = critical_exponent(&sys, a, 0, 2, 10, 1e-2).unwrap();
        let r2 = critical_exponent(&sys, a, 0, 2, 10, 1e-2).unwrap();
        assert_eq!(r1.bracket.s_low.to_bits(), r2.bracket.s_low.to_bits());
        assert_eq!(r1.bracket.s_high.to_bits(), r2.bracket.s_high.to_bits());
        assert!(r1.bracket.s_low <= r1.bracket.s_high);
        assert!(r1.bracket.s_low >= 0.0);
    }
}

#[test]
fn random_system_files_roundtrip() {
    let mut rng = SplitMix64::new(MASTER_SEED ^ 0x10);
    for _ in 0..20 {
        let sys = random_coded_system(&mut rng, 4);
        let text = entrolab_core::io::serialize_system(&sys);
        let reparsed = entrolab_core::io::parse_system(&text).unwrap();
        assert_eq!(entrolab_core::io::serialize_system(&reparsed), text);
        assert_eq!(reparsed.source().transitions(), sys.source().transitions());
        assert_eq!(reparsed.code().table(), sys.code().table());
    }
}
