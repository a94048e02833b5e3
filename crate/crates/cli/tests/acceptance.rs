//! Acceptance suite: one PASS/FAIL line per criterion, each at its stated
//! tolerance and time budget.
//!
//! Run with `cargo test -p rankone-cli --test acceptance -- --nocapture`.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankone::blocks::{abc_decompose_at, cover_threshold, max_run_of_ones, parse_word, word_to_string, BlockDag};
use rankone::construction::heights;
use rankone::correlations::{
    all_pairs, exact_short_lag, verify_katok, verify_pj_prediction, verify_rigid_chacon, Method, ScanOptions,
};
use rankone::limits::{
    analytic_law_j1, classify, disjointness_certificate, limit_distribution, profile_invariants, sets_se,
    tail_checks, Classification, LimitProfile, Verdict,
};
use rankone::odometer::{cocycle_distribution, cycle_values, cycle_window_sums, f_tail, g_function, spacer_cocycle, Columns};
use rankone::rational::{fmt, int, pow2, ratio, to_f64};
use rankone::sarnak::{eigenfunction_sarnak_average, mertens, mobius, suspension_sarnak_sum, CylinderObservable, Suspension};
use rankone::{ConstructionParams, Execution, Stage};

/// Criteria whose stated form is known not to hold. They still run and
/// print FAIL; they are excluded from the final assertion.
const KNOWN_DEVIATIONS: &[(&str, &str)] = &[(
    "5c",
    "the tail bound j 2^(-v/(jR)) fails already for the constant cocycle 1 \
     (profile (3; 1,1,0): mass(>= 1) = 1 > 2^-1); j 2^(1-v/(jR)) is checked as 5c'",
)];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_stage(rng: &mut ChaCha8Rng, cuts: std::ops::RangeInclusive<u64>, spacer_max: u64) -> Stage {
    let p = rng.gen_range(cuts);
    Stage::new(p, (0..p).map(|_| rng.gen_range(0..=spacer_max)).collect()).unwrap()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// 1 ------------------------------------------------------------------------

fn block_identity() -> Check {
    let chacon = BlockDag::new(&ConstructionParams::chacon(20));
    let b3 = word_to_string(&chacon.materialize(3).map_err(|e| e.to_string())?);
    ensure(b3 == "0010001010010", || format!("B_3 = {b3}"))?;
    let cuts: Vec<u64> = (1..=20).map(|n| 2 * n + 2).collect();
    let cols: Vec<u64> = cuts.iter().map(|p| p / 2).collect();
    let katok_cuts: Vec<u64> = (1..=20).map(|n| 2 * n + 2).collect();
    let families = [
        ConstructionParams::chacon(20),
        ConstructionParams::vnk(20),
        ConstructionParams::generalized_chacon(&cuts, &cols).unwrap(),
        ConstructionParams::katok(&katok_cuts).unwrap(),
    ];
    let mut checked = 0;
    for params in &families {
        let dag = BlockDag::new(params);
        let hs = heights(params, 20).unwrap();
        for n in 1..=20 {
            ensure(dag.len(n) == hs.h(n), || format!("{} |B_{n}|", params.family().name()))?;
            if *hs.h(n) <= BigUint::from(2_000_000u32) {
                let len = dag.materialize(n).map_err(|e| e.to_string())?.len();
                ensure(BigUint::from(len) == *hs.h(n), || format!("{} materialized B_{n}", params.family().name()))?;
                checked += 1;
            }
        }
    }
    Ok(format!("B_3 = {b3}; |B_n| = h_n for n <= 20 in 4 families ({checked} blocks materialized)"))
}

// 2 ------------------------------------------------------------------------

fn cocycle_identities(params: &ConstructionParams) -> Result<(), String> {
    let d = params.depth();
    let radices: Vec<u64> = (1..=d).map(|k| params.cut(k)).collect();
    let total: u64 = radices.iter().product();
    let hs = heights(params, d).unwrap();
    let q = |n: usize| radices[..n].iter().product::<u64>();
    let ex = Execution::Parallel;
    for n in 1..d {
        let s = cycle_values(&radices, |y| Some(spacer_cocycle(params, y, n).unwrap() as i64), ex).unwrap();
        let sum = params.stage(n).total_spacers() as i64;
        ensure(cycle_window_sums(&s, q(n)).iter().all(|&v| v == Some(sum)), || format!("s_n^(q_n) at n={n}"))?;
        if 2 * q(n) <= total {
            ensure(
                cycle_window_sums(&s, 2 * q(n)).iter().all(|&v| v == Some(2 * sum)),
                || format!("s_n^(2q_n) at n={n}"),
            )?;
        }
        ensure(*hs.h(n + 1) == hs.h(n) * params.cut(n) + BigUint::from(sum as u64), || format!("h_{} recursion", n + 1))?;
        let head = cycle_values(
            &radices,
            |y| Some(1 + (1..=n).map(|k| spacer_cocycle(params, y, k).unwrap() as i64).sum::<i64>()),
            ex,
        )
        .unwrap();
        let h_next: i64 = hs.h(n + 1).try_into().unwrap();
        ensure(cycle_window_sums(&head, q(n)).iter().all(|&v| v == Some(h_next)), || format!("(1+s)^(q_n) at n={n}"))?;
        let f = cycle_values(&radices, |y| f_tail(params, y, n).unwrap().map(|v| v as i64), ex).unwrap();
        let g = cycle_values(&radices, |y| g_function(params, y, n).unwrap().map(|v| v as i64), ex).unwrap();
        for j in 1..=2u64 {
            if j * q(n) > total {
                break;
            }
            let lhs = cycle_window_sums(&f, j * q(n));
            for x in 0..total as usize {
                let rhs: Option<i64> = (0..j).map(|r| g[(x + (r * q(n)) as usize) % total as usize]).sum();
                if let (Some(a), Some(b)) = (lhs[x], rhs) {
                    ensure(a == b, || format!("f^(jq_n) = g^(j) at n={n} j={j} x={x}"))?;
                }
            }
        }
    }
    Ok(())
}

fn random_cocycle_identities() -> Check {
    let mut r = rng(2);
    let mut sets = 0;
    while sets < 60 {
        let mut stages = Vec::new();
        let mut qn = 1u64;
        loop {
            let st = random_stage(&mut r, 2..=4, 3);
            if qn * st.cut > 100_000 {
                break;
            }
            qn *= st.cut;
            stages.push(st);
        }
        if stages.len() < 3 {
            continue;
        }
        let params = ConstructionParams::custom(stages).unwrap();
        cocycle_identities(&params).map_err(|e| format!("parameter set {sets}: {e}"))?;
        sets += 1;
    }
    Ok(format!("{sets} random bounded parameter sets, q_n <= 10^5, all identities exact"))
}

// 3 ------------------------------------------------------------------------

fn distribution_oracles() -> Check {
    let mut r = rng(3);
    let mut cases = 0;
    for case in 0..44 {
        let depth = 1 + case % 12;
        let stages: Vec<Stage> = (0..depth).map(|_| random_stage(&mut r, 2..=3, 3)).collect();
        let params = ConstructionParams::custom(stages).unwrap();
        let cols = Columns::from_params(&params, 1, depth).unwrap();
        for j in 1..=4u64 {
            let a = cols.law_by_enumeration(j, Execution::Parallel).unwrap();
            let b = cols.law_by_transfer(j).unwrap();
            ensure(a == b, || format!("r={depth} j={j}: enumeration != transfer"))?;
            ensure(a.tail_mass <= int(j as i64) * pow2(-(depth as i64)), || format!("r={depth} j={j}: tail"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (r, j) cases with r <= 12: enumeration = transfer, tail <= j 2^-r"))
}

// 4 ------------------------------------------------------------------------

fn chacon_p1() -> Check {
    let chacon = Stage::new(3, vec![0, 1, 0]).unwrap();
    let analytic = analytic_law_j1(std::slice::from_ref(&chacon)).ok_or("no closed form")?;
    let half = ratio(1, 2);
    ensure(
        analytic.len() == 2 && analytic.get(&0) == Some(&half) && analytic.get(&1) == Some(&half),
        || format!("analytic P_1 = {analytic:?}"),
    )?;
    let params = ConstructionParams::chacon(14);
    let p1 = cocycle_distribution(&params, 1, 1, 12, Execution::Parallel).unwrap();
    let eps = num_traits::pow(ratio(1, 3), 12);
    for v in [0, 1] {
        let gap = (p1.mass(v) - &half).abs();
        ensure(gap <= eps, || format!("|P_1({v}) - 1/2| = {}", fmt(&gap)))?;
    }
    let p2 = cocycle_distribution(&params, 1, 2, 12, Execution::Parallel).unwrap();
    ensure(p2.support() == vec![0, 1, 2], || format!("supp P_2 = {:?}", p2.support()))?;
    Ok(format!("analytic P_1 = {{0: 1/2, 1: 1/2}}; r = 12 masses {} and {}; supp P_2 = {{0,1,2}}", fmt(&p1.mass(0)), fmt(&p1.mass(1))))
}

// 5 ------------------------------------------------------------------------

const R5: usize = 7;

fn random_profile(seed: u64) -> LimitProfile {
    let mut r = rng(seed);
    let stages: Vec<Stage> = (0..=R5 + 1).map(|_| random_stage(&mut r, 2..=3, 3)).collect();
    LimitProfile::new(0, stages, Some(3)).unwrap()
}

fn differences(support: &[i64]) -> BTreeSet<i64> {
    support.iter().flat_map(|a| support.iter().map(move |b| a - b)).collect()
}

fn e_m_differences() -> Check {
    let mut checks = 0;
    for seed in 0..60 {
        let p = random_profile(500 + seed);
        for j in 1..=3u64 {
            let law = limit_distribution(&p, j, R5, Execution::Parallel).unwrap().law;
            let diffs = differences(&law.support());
            for m in 1..R5 as i64 {
                if 1u64 << (m - 1) <= j {
                    continue;
                }
                for d in sets_se(&p, m).unwrap().1.into_iter().filter(|&d| d >= 1) {
                    ensure(diffs.contains(&d), || format!("profile {seed} j={j} m={m}: {d} missing"))?;
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("60 profiles, {checks} differences d in E_m found in supp(P_j) - supp(P_j)"))
}

fn support_lattice() -> Check {
    let mut checks = 0;
    for seed in 0..60 {
        let p = random_profile(600 + seed);
        let d = (1..=R5 as i64)
            .flat_map(|m| sets_se(&p, m).unwrap().1)
            .fold(0, |g, x| gcd(g, x.unsigned_abs()));
        for j in 1..=3u64 {
            let law = limit_distribution(&p, j, R5, Execution::Parallel).unwrap().law;
            for x in differences(&law.support()) {
                let ok = if d == 0 { x == 0 } else { x.rem_euclid(d as i64) == 0 };
                ensure(ok, || format!("profile {seed} j={j}: difference {x} outside {d}Z"))?;
                checks += 1;
            }
        }
    }
    Ok(format!("60 profiles, {checks} support differences in the E_m lattice"))
}

/// Runs the tail inequality with offset `c` (0: stated, 1: corrected) on
/// the random profiles.
fn tail_bound(c: i64) -> Check {
    let mut violations = Vec::new();
    let mut checked = 0;
    for seed in 0..60 {
        let p = random_profile(700 + seed);
        for j in 1..=3u64 {
            let law = limit_distribution(&p, j, R5, Execution::Parallel).unwrap();
            let (stated, corrected) = tail_checks(&law.law, j, 3);
            checked += law.law.masses.len();
            let bad = if c == 0 { stated } else { corrected };
            if let Some(&v) = bad.first() {
                violations.push(format!("profile {seed} j={j} v={v}"));
            }
        }
    }
    if c == 0 {
        // the smallest counterexample, independent of the random draw
        let p = LimitProfile::constant(Stage::new(3, vec![1, 1, 0]).unwrap(), 0, 10).unwrap();
        let law = limit_distribution(&p, 1, 9, Execution::Sequential).unwrap().law;
        if !tail_checks(&law, 1, 1).0.is_empty() {
            violations.push("constant cocycle 1: mass(>= 1) = 1 > 1/2".into());
        }
    }
    if violations.is_empty() {
        Ok(format!("60 profiles, j <= 3, {checked} tail values within bound"))
    } else {
        Err(format!("{} violations, e.g. {}", violations.len(), violations[..violations.len().min(2)].join("; ")))
    }
}

// 6 ------------------------------------------------------------------------

fn certificates() -> Check {
    let verdicts = |p: &LimitProfile, r: usize| -> Vec<Verdict> {
        let d = profile_invariants(p).d_infinity;
        let laws: Vec<_> = (1..=5).map(|j| limit_distribution(p, j, r, Execution::Parallel).unwrap().law).collect();
        let mut out = Vec::new();
        for j1 in 1..=5u64 {
            for j2 in j1 + 1..=5 {
                out.push(disjointness_certificate(&laws[j1 as usize - 1], &laws[j2 as usize - 1], j1, j2, d, Some(r)).verdict);
            }
        }
        out
    };
    let chacon = LimitProfile::constant(Stage::new(3, vec![0, 1, 0]).unwrap(), 0, 13).unwrap();
    let v = verdicts(&chacon, 12);
    ensure(v.iter().all(|&x| x == Verdict::Disjoint), || format!("Chacon: {v:?}"))?;
    let zero = LimitProfile::constant(Stage::new(3, vec![0, 0, 0]).unwrap(), 0, 13).unwrap();
    let z = verdicts(&zero, 12);
    ensure(z.iter().all(|&x| x == Verdict::Inconclusive), || format!("zero spacers: {z:?}"))?;
    Ok("Chacon: 10/10 pairs DISJOINT; zero spacers: 10/10 INCONCLUSIVE".into())
}

// 7 ------------------------------------------------------------------------

fn classification() -> Check {
    let parity = ConstructionParams::from_json(
        r#"{"family":"custom","depth":20,"cuts":[3,3],"spacers":[[1,1,0],[1,1,2]],"generator":{"kind":"thue_morse"}}"#,
    )
    .unwrap();
    let got = [
        classify(&ConstructionParams::vnk(20), (3, 20), 12),
        classify(&ConstructionParams::chacon(20), (3, 20), 12),
        classify(&parity, (3, 20), 12),
    ];
    let want = [
        Classification::Odometer,
        Classification::WeaklyMixingCandidate,
        Classification::FiniteRationalEigenvalues { orders: BTreeSet::from([2]) },
    ];
    let labels: Vec<String> = got.iter().map(|c| c.as_ref().map(|c| c.label()).unwrap_or_else(|e| e.to_string())).collect();
    for (g, w) in got.iter().zip(&want) {
        ensure(g.as_ref().ok() == Some(w), || format!("{labels:?}"))?;
    }
    Ok(format!("vnk, Chacon, parity: {}", labels.join(", ")))
}

// 8 ------------------------------------------------------------------------

fn chacon_weak_limit() -> Check {
    let dag = BlockDag::new(&ConstructionParams::chacon(24));
    let tol = ratio(1, 50);
    let report = verify_pj_prediction(&dag, 12, 1, &all_pairs(3), 10, &tol, &ScanOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(report.passed(), || format!("max error {}", report.max_error()))?;
    let stage = report.scan_stage;
    let zero = [0u8];
    let c0 = to_f64(&exact_short_lag(&dag, &zero, &zero, 0, stage).unwrap());
    let c1 = to_f64(&exact_short_lag(&dag, &zero, &zero, 1, stage).unwrap());
    let row = report.rows.iter().find(|r| r.w1 == "0" && r.w2 == "0").unwrap();
    let pred = to_f64(&row.predicted);
    ensure((c0 - 2.0 / 3.0).abs() < 1e-3 && (c1 - 1.0 / 3.0).abs() < 1e-3, || format!("components {c0} {c1}"))?;
    ensure((pred - 0.5).abs() < 1e-3, || format!("predicted corr(0,0) = {pred}"))?;
    Ok(format!(
        "h_13 = {} lag, scan B_{stage}, {} pairs, max error {:.3e}; corr(0,0): components {c0:.6}, {c1:.6}, predicted {pred:.6}",
        row.lag,
        report.rows.len(),
        report.max_error()
    ))
}

// 9 ------------------------------------------------------------------------

fn rigid_chacon() -> Check {
    let cuts: Vec<u64> = (1..=8).map(|n| 2 * n + 2).collect();
    let cols: Vec<u64> = cuts.iter().map(|p| p / 2).collect();
    let dag = BlockDag::new(&ConstructionParams::generalized_chacon(&cuts, &cols).unwrap());
    let tol = ratio(3, 100);
    let report = verify_rigid_chacon(&dag, &ratio(1, 2), 1, 5, &all_pairs(2), &tol, &ScanOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(report.passed(), || format!("max error {}", report.max_error()))?;
    Ok(format!(
        "p_n = 2n+2, alpha = 1/2, n = 5, lag {}, scan B_{}, {} pairs, max error {:.3e}",
        report.rows[0].lag,
        report.scan_stage,
        report.rows.len(),
        report.max_error()
    ))
}

// 10 -----------------------------------------------------------------------

fn katok() -> Check {
    let dag = BlockDag::new(&ConstructionParams::katok(&[100, 30000]).unwrap());
    let alpha = ratio(1, 2);
    let (a, b) = (parse_word("0").unwrap(), parse_word("1").unwrap());
    let opts = ScanOptions { stage: None, method: Method::Sampled { samples: 1_000_000, seed: 2024 }, exec: Execution::Parallel };
    let report = verify_katok(&dag, &alpha, 1, Some(26), 0.75, &[(a.clone(), b.clone())], &ratio(1, 20), &opts)
        .map_err(|e| e.to_string())?;
    let row = &report.rows[0];
    let stage = report.scan_stage;
    // the cylinders are disjoint, so only the mixing part is predicted
    ensure(exact_short_lag(&dag, &a, &b, 0, stage).unwrap() == int(0), || "corr(A, B, 0) != 0".into())?;
    let fa = dag.frequency(&a, stage).unwrap().frequency;
    let fb = dag.frequency(&b, stage).unwrap().frequency;
    let target: BigRational = &alpha * fa * fb;
    ensure(row.predicted == target, || "prediction is not alpha freq(A) freq(B)".into())?;
    let hw = row.observed.half_width().unwrap();
    let gap = (row.observed.to_f64() - to_f64(&target)).abs();
    ensure(gap <= 0.05, || format!("|observed - predicted| = {gap}"))?;
    Ok(format!(
        "l_1 = 26, lag {}, 10^6 samples in B_{stage}: observed {:.5} +- {:.5}, predicted {:.5}, gap {gap:.4}",
        row.lag,
        row.observed.to_f64(),
        hw,
        to_f64(&target)
    ))
}

// 11 -----------------------------------------------------------------------

fn by_factoring(mut n: u64) -> i8 {
    let mut mu = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

fn mobius_suite() -> Check {
    let mu = mobius(1_000_000);
    for n in 1..=100_000u64 {
        ensure(mu[n as usize] == by_factoring(n), || format!("mu({n})"))?;
    }
    for a in 1..=316u64 {
        for b in 1..=316u64 {
            if gcd(a, b) == 1 {
                ensure(mu[(a * b) as usize] == mu[a as usize] * mu[b as usize], || format!("mu({a}*{b})"))?;
            }
        }
    }
    let m = mertens(&mu, 1_000_000);
    ensure(m == 212, || format!("M(10^6) = {m}"))?;
    let dag = BlockDag::new(&ConstructionParams::chacon(20));
    let n = 1_000_000u64;
    let mut worst = 0.0f64;
    for k in 2..=6u64 {
        let eig = eigenfunction_sarnak_average(k, 0, &mu, n).unwrap();
        worst = worst.max(eig.last().unwrap().1);
        // a real K-periodic observable: the indicator of floor 0, centered
        let mut floors = vec![CylinderObservable::constant(ratio(-1, k as i64)); k as usize];
        floors[0] = CylinderObservable::constant(ratio(k as i64 - 1, k as i64));
        let susp = Suspension::new(floors, 1).unwrap();
        let len = susp.base_len(n);
        let stage = (1..=dag.addressable_stage()).find(|&s| dag.h(s).unwrap() >= len).unwrap();
        let word = dag.segment(stage, 0, len).unwrap();
        let pts = suspension_sarnak_sum(&susp, &word, &mu, n, Execution::Parallel).unwrap();
        worst = worst.max(to_f64(&pts.last().unwrap().average).abs());
    }
    ensure(worst <= 0.01, || format!("max |avg| = {worst}"))?;
    Ok(format!("sieve = factorization to 10^5; M(10^6) = {m}; K = 2..6 periodic averages max |avg| = {worst:.2e}"))
}

// 12 -----------------------------------------------------------------------

/// Recorded on the first run; any change in the pipeline shows up here.
const SARNAK_BASELINE_SHA256: &str = "713f79df71d0b3ee1c52874b0e41b960a0c18503710c99c8b9e1a280ada1150e";
const SARNAK_BASELINE_LAST: &str = "1000000,7034947,59787100000";

fn run_cli(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rankone"))
        .current_dir(dir)
        .env_remove("RANKONE_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn sarnak_regression() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    std::fs::write(dir.join("chacon.json"), r#"{"family":"chacon","depth":20}"#).unwrap();
    let o = run_cli(dir, &["sarnak", "--config", "chacon.json", "--observable", "cyl:0", "--center", "--N", "1000000", "--out", "run"]);
    ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
    let csv = std::fs::read_to_string(dir.join("run/sarnak.csv")).unwrap();
    let manifest = std::fs::read_to_string(dir.join("run/manifest.json")).unwrap();
    ensure(manifest.contains(SARNAK_BASELINE_SHA256), || "digest differs from the recorded baseline".into())?;
    ensure(csv.lines().last() == Some(SARNAK_BASELINE_LAST), || format!("last row {:?}", csv.lines().last()))?;
    let o = run_cli(dir, &["replay", "run/manifest.json", "--out", "replayed"]);
    ensure(o.status.success(), || format!("replay: {}", String::from_utf8_lossy(&o.stdout)))?;
    ensure(std::fs::read_to_string(dir.join("replayed/sarnak.csv")).unwrap() == csv, || "replayed bytes differ".into())?;
    let trend: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("run/trend.json")).unwrap()).unwrap();
    let t = &trend["trend"];
    ensure(t["label"] == "diagnostic only, not a test of the conjecture", || "trend label".into())?;
    Ok(format!(
        "N = 10^6, {} grid points match the baseline and replay byte-identically; trend diagnostic (not a test of the conjecture): |avg| shrinks on {} of {} steps, last {:.3e}",
        csv.lines().count() - 1,
        t["decreasing_steps"],
        t["steps"],
        t["last_abs"].as_f64().unwrap_or(f64::NAN)
    ))
}

// 13 -----------------------------------------------------------------------

fn abc_postcondition() -> Check {
    let eps = ratio(1, 8);
    let mut r = rng(13);
    let mut words = 0;
    let mut constructions = 0;
    let mut worst = 0.0f64;
    let mut blocks = 0;
    while words < 1000 {
        let stages: Vec<Stage> = (0..18).map(|_| random_stage(&mut r, 2..=4, 2)).collect();
        let params = ConstructionParams::custom(stages).unwrap();
        let dag = BlockDag::new(&params);

        let mut bound = 0;
        for n in 1..params.depth() {
            bound += params.stage(n).max_spacer();
            match dag.h(n + 1) {
                Ok(h) if h <= 1_000_000 => {
                    let run = max_run_of_ones(&dag.materialize(n + 1).unwrap());
                    ensure(run <= bound, || format!("run {run} > {bound} in B_{}", n + 1))?;
                    blocks += 1;
                }
                _ => break,
            }
        }

        let ell = 1;
        let Some((_, n_min)) = cover_threshold(&dag, &eps, ell).unwrap() else { continue };
        let n_min: u64 = match n_min.try_into() {
            Ok(v) if v <= 200_000 => v,
            _ => continue,
        };
        constructions += 1;
        for _ in 0..25 {
            let len = n_min + r.gen_range(0..=n_min);
            let Some(m) = (1..=dag.addressable_stage()).find(|&k| dag.h(k).unwrap() >= 4 * len) else { break };
            let start = r.gen_range(0..=dag.h(m).unwrap() - len);
            let d = abc_decompose_at(&dag, m, start, len, ell).unwrap();
            let frac = d.uncovered as f64 / len as f64;
            worst = worst.max(frac);
            ensure(d.uncovered * 8 <= len, || format!("uncovered {} of {len} at B_{m}[{start}..]", d.uncovered))?;
            words += 1;
        }
    }
    Ok(format!(
        "{words} words from {constructions} constructions, |W| >= N(1/8, 1): max uncovered fraction {worst:.4}; run bound exact on {blocks} blocks"
    ))
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, &'static str, u64, fn() -> Check);
    let criteria: Vec<Criterion> = vec![
        ("1", "block identity and lengths", 1, block_identity),
        ("2", "cocycle identities, full enumeration", 60, random_cocycle_identities),
        ("3", "distribution oracles agree", 60, distribution_oracles),
        ("4", "Chacon P_1 and supp P_2", 10, chacon_p1),
        ("5a", "differences of E_m in supp P_j", 100, e_m_differences),
        ("5b", "support differences in the E_m lattice", 100, support_lattice),
        ("5c", "tail mass <= j 2^(-v/(jR))", 100, || tail_bound(0)),
        ("5c'", "tail mass <= j 2^(1-v/(jR))", 100, || tail_bound(1)),
        ("6", "disjointness certificates", 10, certificates),
        ("7", "classification", 10, classification),
        ("8", "Chacon weak-limit correlations", 120, chacon_weak_limit),
        ("9", "rigid generalized Chacon", 300, rigid_chacon),
        ("10", "Katok weak limit", 300, katok),
        ("11", "Möbius suite", 120, mobius_suite),
        ("12", "Sarnak regression and replay", 300, sarnak_regression),
        ("13", "ABC postcondition and run lengths", 300, abc_postcondition),
    ];
    let mut unexpected = Vec::new();
    for (id, name, budget, run) in criteria {
        let t = Instant::now();
        let result = run();
        let took = t.elapsed();
        let over = took > Duration::from_secs(budget);
        let pass = result.is_ok() && !over;
        let detail = match &result {
            Ok(s) => s.clone(),
            Err(e) => e.clone(),
        };
        let known = KNOWN_DEVIATIONS.iter().find(|(k, _)| *k == id);
        println!(
            "ACCEPTANCE {id:<3} {} {name}: {detail} [{:.2}s / {budget}s{}]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            if over { ", over budget" } else { "" }
        );
        match (pass, known) {
            (false, Some((_, why))) => println!("    known deviation: {why}"),
            (false, None) => unexpected.push(id),
            (true, Some(_)) => println!("    note: listed as a known deviation but passed"),
            (true, None) => {}
        }
    }
    assert!(unexpected.is_empty(), "failed criteria: {unexpected:?}");
}
