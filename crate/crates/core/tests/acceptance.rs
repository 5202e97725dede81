//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line on stderr
//! (bypassing output capture) and then asserts the criterion.

use std::io::Write;

use graphbox::analysis::{
    estimate_dimension, finite_bounds_check, gm, ratio_series, Counter, EstimateOptions, ScaleSchedule,
    SlopeWindow,
};
use graphbox::grid::{Cap, GridScale, RationalPoint};
use graphbox::lemmas::{run_suite, Suite, TrialConfig, PUBLISHED_SEEDS};
use graphbox::oracles::{brute_force_occupancy, power_g_closed_form, power_n_closed_form, Generator};
use graphbox::polyline::BigRational;
use graphbox::sets::{CountedSet, Exponent, ExplicitSet, PaperSetParams};
use graphbox::witness::{build_witness, iterate_theorem1};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {id}: {verdict} {detail}");
    pass
}

fn exp(n: u32, d: u32) -> Exponent {
    Exponent::new(n, d).unwrap()
}

fn m(v: u64) -> GridScale {
    GridScale::new(v).unwrap()
}

fn power_schedule() -> ScaleSchedule {
    ScaleSchedule::geometric(2, 1 << 4, 1 << 20).unwrap()
}

const SLOPE_TOL: f64 = 0.05;

#[test]
fn criterion_1_power_box_dimension() {
    let mut all = true;
    let mut detail = String::new();
    for p in [exp(1, 2), exp(1, 1), exp(2, 1)] {
        let series = ratio_series(&CountedSet::power(p), &power_schedule(), Counter::Box).unwrap();
        let est = estimate_dimension(&series, EstimateOptions::default()).unwrap();
        let target = 1.0 / (p.value() + 1.0);
        let ok = (est.slope - target).abs() <= SLOPE_TOL;
        all &= ok;
        detail += &format!("[p={p} slope={:.4} target={target:.4}] ", est.slope);
    }
    assert!(report("1 box slope within 0.05 of 1/(p+1)", all, &detail));
}

#[test]
fn criterion_2_power_graph_dimension() {
    let mut all = true;
    let mut detail = String::new();
    for (p, target) in [(exp(1, 2), 4.0 / 3.0), (exp(1, 1), 1.0), (exp(2, 1), 1.0)] {
        let series = ratio_series(&CountedSet::power(p), &power_schedule(), Counter::Gm).unwrap();
        let est = estimate_dimension(&series, EstimateOptions::default()).unwrap();
        let ok = (est.slope - target).abs() <= SLOPE_TOL;
        all &= ok;
        detail += &format!("[p={p} slope={:.4} target={target:.4}] ", est.slope);
    }
    assert!(report("2 g_m slope within 0.05 of max(1, 2/(p+1))", all, &detail));
}

#[test]
fn criterion_3_oracle_equivalence() {
    const M_MAX: u64 = 10_000;
    let mut exact = true;
    let mut n_ok = true;
    let mut g_ok = true;
    let mut detail = String::new();
    for p in [exp(1, 2), exp(1, 1), exp(2, 1), exp(3, 1)] {
        let set = CountedSet::power(p);
        let (mut mismatches, mut n_slack, mut g_slack) = (0u64, 0u64, 0f64);
        for mv in 1..=M_MAX {
            for cap in [Cap::Bounded(1), Cap::Bounded(mv), Cap::Unbounded] {
                let brute = brute_force_occupancy(&Generator::Power(p), m(mv), cap).unwrap();
                if set.occupancy(m(mv), cap).unwrap() != brute {
                    mismatches += 1;
                }
                if cap == Cap::Bounded(mv) && mv >= 2 {
                    n_slack = n_slack.max(power_n_closed_form(p, mv).abs_diff(brute.occupied()));
                    let dg = power_g_closed_form(p, mv).abs_diff(brute.total()) as f64 / mv as f64;
                    g_slack = g_slack.max(dg);
                }
            }
        }
        exact &= mismatches == 0;
        n_ok &= n_slack <= 2;
        g_ok &= g_slack <= 2.0;
        detail += &format!("[p={p} mismatches={mismatches} N_slack={n_slack} g_slack/m={g_slack:.3}] ");
    }
    report("3a analytic occupancy equals enumeration", exact, "");
    report("3b closed-form N within 2", n_ok, "");
    report("3c closed-form g within 2m", g_ok, "");
    assert!(report("3 oracle equivalence and closed-form slack", exact && n_ok && g_ok, &detail));
}

#[test]
fn criterion_4_cantor_saturation() {
    let set = CountedSet::cantor(1, 3, 16).unwrap();
    let mut saturated = true;
    let mut product = true;
    let mut values = Vec::new();
    let mut detail = String::new();
    for j in 1..=6u32 {
        let mv = 3u64.pow(j);
        let occ = set.occupancy(m(mv), Cap::Unbounded).unwrap();
        let thin = occ.entries().iter().filter(|e| e.1 < mv).count();
        let n = occ.occupied();
        let g = gm(&set, m(mv)).unwrap();
        saturated &= thin == 0;
        product &= g == mv * n;
        values.push((mv, g));
        detail += &format!("[m={mv} N={n} g={g} mN={} thin_boxes={thin}] ", mv * n);
    }
    let series = graphbox::analysis::RatioSeries::from_values(Counter::Gm, &values).unwrap();
    let opts = EstimateOptions { slope_window: SlopeWindow::All, ..EstimateOptions::default() };
    let slope = estimate_dimension(&series, opts).unwrap().slope;
    let target = 1.0 + 2f64.ln() / 3f64.ln();
    let slope_ok = (slope - target).abs() <= 0.02;
    detail += &format!("slope={slope:.4} target={target:.4}");
    report("4a every occupied box holds at least m points", saturated, "");
    report("4b g_m = m N exactly", product, "");
    report("4c g slope within 0.02 of 1 + log 2 / log 3", slope_ok, "");
    assert!(report("4 cantor saturation", saturated && product && slope_ok, &detail));
}

fn paper_params() -> PaperSetParams {
    PaperSetParams::new(Ratio::new(1, 2), Ratio::new(1, 3), 3, 2, 4)
}

#[test]
fn criterion_5_finite_bounds() {
    let geo = |b, lo, hi| ScaleSchedule::geometric(b, lo, hi).unwrap();
    let (paper, _) = CountedSet::paper(paper_params()).unwrap();
    let paper_max = paper.valid_scale_range().as_u64().unwrap().min(1 << 20);
    let cases = vec![
        ("power(1/2)", CountedSet::power(exp(1, 2)), geo(2, 4, 1 << 20)),
        ("power(1)", CountedSet::power(exp(1, 1)), geo(2, 4, 1 << 20)),
        ("power(2)", CountedSet::power(exp(2, 1)), geo(2, 4, 1 << 20)),
        ("cantor(1/3,12)", CountedSet::cantor(1, 3, 12).unwrap(), geo(3, 9, 3u64.pow(12))),
        ("paper(1/2,1/3,3)", paper, geo(2, 4, paper_max)),
    ];
    let (mut checks, mut failures) = (0, 0);
    let mut detail = String::new();
    for (name, set, schedule) in &cases {
        for &mv in schedule.scales() {
            let r = finite_bounds_check(set, m(mv)).unwrap();
            checks += 1;
            if !r.pass() {
                failures += 1;
                detail += &format!("[{name} m={mv} N={} g={} g_sqrt={}] ", r.n, r.gm, r.g_sqrt);
            }
        }
    }
    detail = format!("checks={checks} failures={failures} {detail}");
    assert!(report("5 N <= g_m <= min(mN, m^2) and g_sqrt(m) >= N/2", failures == 0, &detail));
}

/// Either uniform points on a random lattice or a tight cluster, so that
/// some boxes exceed the row capacity.
fn random_set(rng: &mut ChaCha8Rng) -> ExplicitSet {
    let size = rng.gen_range(1..=4096u64);
    let den = 1u64 << rng.gen_range(10..=24);
    let points = if rng.gen_bool(0.5) {
        (0..size).map(|_| rng.gen_range(0..=den)).collect::<Vec<_>>()
    } else {
        let width = rng.gen_range(1..=den / 8);
        let start = rng.gen_range(0..=den - width);
        (0..size).map(|_| start + rng.gen_range(0..=width)).collect()
    };
    ExplicitSet::from_points(points.into_iter().map(|n| RationalPoint::new(n, den).unwrap()).collect())
}

#[test]
fn criterion_6_witness_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(PUBLISHED_SEEDS[2]);
    let sets: Vec<ExplicitSet> = (0..50).map(|_| random_set(&mut rng)).collect();
    let heights = [BigRational::new(1.into(), 4.into()), BigRational::new(1.into(), 2.into()), BigRational::from_integer(1.into())];
    let (mut runs, mut failures) = (0, 0);
    for set in &sets {
        for mv in [64u64, 256, 1024] {
            for h in &heights {
                let w = build_witness(set, m(mv), h).unwrap();
                let cap = (h * BigRational::from_integer(mv.into())).to_integer();
                let cap = u64::try_from(cap).unwrap();
                let bound: u64 = set.occupancy(m(mv), Cap::Unbounded).entries().iter().map(|e| e.1.min(cap)).sum();
                runs += 1;
                if !(w.achieved >= bound && w.bound == bound && w.sup_norm() < *h) {
                    failures += 1;
                }
            }
        }
    }
    let detail = format!("runs={runs} failures={failures}");
    assert!(report("6 witness count >= sum min(hm, n_k) and norm < h", failures == 0, &detail));
}

#[test]
fn criterion_7_theorem1_iteration() {
    let cases = [
        ("power(1)", CountedSet::power(exp(1, 1)), ScaleSchedule::geometric(2, 16, 1 << 14).unwrap()),
        ("cantor(1/3,12)", CountedSet::cantor(1, 3, 12).unwrap(), ScaleSchedule::geometric(3, 3, 3u64.pow(8)).unwrap()),
    ];
    let mut verbatim = true;
    let mut constructed = true;
    let mut half = true;
    let mut detail = String::new();
    for (name, set, schedule) in &cases {
        let run = iterate_theorem1(set, 3, schedule).unwrap();
        assert_eq!(run.stages.len(), 3);
        detail += &format!("[{name} a={:.4}", run.a);
        for r in &run.stages {
            verbatim &= r.conditions_verbatim();
            constructed &= r.conditions_as_constructed();
            half &= r.final_half;
            detail += &format!(
                " stage{} m={} ratio={:.3}/{:.3} norm={}<={}:{} cap={}:{} half={}",
                r.stage, r.m, r.ratio, r.target, r.sup_norm, r.norm_bound, r.norm_verbatim, r.height_cap, r.norm_cap, r.final_half
            );
        }
        detail += "] ";
    }
    report("7a conditions (1)-(4) verbatim", verbatim, "");
    report("7b conditions with the construction's norm cap", constructed, "");
    report("7c N(F) >= N(F_i)/2 at every stage scale", half, "");
    assert!(report("7 three-stage iteration", verbatim && half, &detail));
}

#[test]
fn criterion_8_lemma_suites() {
    let mut all = true;
    let mut detail = String::new();
    for suite in Suite::ALL {
        let (mut failures, mut skips, mut trials) = (0, 0, 0);
        for &seed in &PUBLISHED_SEEDS {
            let r = run_suite(suite, &TrialConfig::new(seed, 1000)).unwrap();
            failures += r.failures;
            skips += r.skips;
            trials += r.trials;
        }
        let rate = skips as f64 / trials as f64;
        all &= failures == 0 && rate < 0.05;
        detail += &format!("[{} trials={trials} failures={failures} skip_rate={rate:.4}] ", suite.name());
    }
    assert!(report("8 lemma suites: zero failures, skip rate below 5%", all, &detail));
}

#[test]
fn criterion_9_paper_construction() {
    let (set, generated) = CountedSet::paper(paper_params()).unwrap();
    let blocks = generated.check_blocks();
    let mut bounds = true;
    let mut deepest = None;
    let mut detail = format!(
        "blocks={} within_cell={} diameter={} level_size={} ",
        blocks.blocks_checked, blocks.within_cell, blocks.diameter, blocks.level_size
    );
    for s in generated.special_scales().unwrap() {
        let Some(mv) = s.m.filter(|&v| s.realized && v >= 2) else {
            detail += &format!("[level {} not realized] ", s.level);
            continue;
        };
        let g = gm(&set, m(mv)).unwrap();
        let ok = generated.meets_lower_bound(s.level, g).unwrap();
        bounds &= ok;
        let ratio = (g as f64).ln() / (mv as f64).ln();
        deepest = Some(ratio);
        detail += &format!("[level {} m={mv} g={g} bound={:.2} ok={ok} ratio={ratio:.4}] ", s.level, generated.lower_bound_value(s.level));
    }
    let ratio_ok = deepest.is_some_and(|r| (r - 1.25).abs() <= 0.10);
    report("9a block properties hold for every block", blocks.all_pass(), "");
    report("9b lower bound at every realized special scale", bounds, "");
    report("9c g-ratio at the deepest special scale within 0.10 of 1.25", ratio_ok, "");
    assert!(report("9 construction", blocks.all_pass() && bounds && ratio_ok, &detail));
}
