//! Named check suites behind `ellipsephic verify`.

use ellipsephic::cantor::{pairing_from_fn, DEFAULT_TUPLE_BUDGET};
use ellipsephic::counting::{diagonal_count, DEFAULT_COUNT_BUDGET};
use ellipsephic::exponents::{trivial_cap, DEFAULT_SUPPORT_CAP};
use ellipsephic::optimizer::kkt_residual;
use ellipsephic::restriction::DEFAULT_ENUMERATION_BUDGET;
use ellipsephic::rng::SplitMix64;
use ellipsephic::*;
use serde::Serialize;

use crate::args::Suite;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &'static str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { suite, name: name.into(), passed, detail: detail.into() }
}

fn failed(suite: &'static str, name: impl Into<String>, err: impl std::fmt::Display) -> Check {
    check(suite, name, false, format!("error: {err}"))
}

pub fn render(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.suite.len() + c.name.len() + 1).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let label = format!("{}/{}", c.suite, c.name);
        out.push_str(&format!("{} {label:<width$}  {}\n", if c.passed { "PASS" } else { "FAIL" }, c.detail));
    }
    let failures = checks.iter().filter(|c| !c.passed).count();
    out.push_str(&format!("{} checks, {} failed\n", checks.len(), failures));
    out
}

pub fn run_suite(suite: Suite, cfg: &OptimizerConfig) -> Vec<Check> {
    match suite {
        Suite::KnownAnswers => known_answers(cfg),
        Suite::PowerLaw => power_law(cfg),
        Suite::Freiman => freiman(cfg),
        Suite::Bands => bands(cfg),
        Suite::Cap => cap(cfg),
        Suite::Maximal => maximal(cfg),
        Suite::Counting => counting(),
        Suite::Oracles => oracles(cfg),
        Suite::Squares => squares(cfg),
        Suite::All => [
            Suite::KnownAnswers,
            Suite::PowerLaw,
            Suite::Freiman,
            Suite::Bands,
            Suite::Cap,
            Suite::Maximal,
            Suite::Counting,
            Suite::Oracles,
            Suite::Squares,
        ]
        .into_iter()
        .flat_map(|s| run_suite(s, cfg))
        .collect(),
    }
}

fn ds(text: &str) -> DigitSet {
    text.parse().expect("built-in digit set")
}

/// Largest componentwise gap to `expected`, allowing the reflection
/// `ℓ ↦ max − ℓ`.
fn witness_gap(found: &[f64], expected: &[f64]) -> f64 {
    let direct = found.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let reflected = found.iter().rev().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    direct.min(reflected)
}

fn known_answers(cfg: &OptimizerConfig) -> Vec<Check> {
    const S: &str = "known-answers";
    let cases: [(&[i64], f64, Vec<f64>); 3] = [
        (&[0, 1], 1.5, vec![0.5f64.sqrt(); 2]),
        (&[0, 1, 2], 15.0 / 7.0, vec![(2.0f64 / 7.0).sqrt(), (3.0f64 / 7.0).sqrt(), (2.0f64 / 7.0).sqrt()]),
        (&[0, 1, 3], 5.0 / 3.0, vec![(1.0f64 / 3.0).sqrt(); 3]),
    ];
    let mut out = Vec::new();
    for (points, value, witness) in cases {
        let set = LatticeSet::from_integers(points.iter().copied());
        let label = format!("{points:?}");
        match estimate_restriction(&set, 2, cfg) {
            Ok(est) => {
                let gap = (est.value_2n - value).abs();
                out.push(check(S, format!("value {label}"), gap <= 1e-9, format!("{} (gap {gap:.2e})", est.value_2n)));
                let wgap = witness_gap(est.extremizer.values(), &witness);
                out.push(check(S, format!("extremizer {label}"), wgap <= 1e-5, format!("max gap {wgap:.2e}")));
                match kkt_residual(&est.extremizer, 2) {
                    Ok(r) => out.push(check(S, format!("kkt {label}"), r <= 1e-8, format!("{r:.2e}"))),
                    Err(e) => out.push(failed(S, format!("kkt {label}"), e)),
                }
            }
            Err(e) => out.push(failed(S, format!("value {label}"), e)),
        }
        let ga = estimate_restriction(&set, 2, &OptimizerConfig { method: Method::GradientAscent, ..cfg.clone() });
        let fp = estimate_restriction(&set, 2, &OptimizerConfig { method: Method::FixedPoint, ..cfg.clone() });
        match (ga, fp) {
            (Ok(a), Ok(b)) => {
                let gap = (a.value_2n - b.value_2n).abs();
                out.push(check(S, format!("methods agree {label}"), gap <= 1e-7, format!("gap {gap:.2e}")));
            }
            (Err(e), _) | (_, Err(e)) => out.push(failed(S, format!("methods agree {label}"), e)),
        }
    }
    out
}

fn power_law(cfg: &OptimizerConfig) -> Vec<Check> {
    const S: &str = "power-law";
    let mut out = Vec::new();
    for (spec, n, j_max) in [("3:0,1", 2, 3), ("7:0,1,3", 2, 3), ("5:2", 3, 3)] {
        match verify_power_law(&ds(spec), n, j_max, cfg, DEFAULT_SUPPORT_CAP) {
            Ok(report) => {
                for row in &report.rows {
                    out.push(check(
                        S,
                        format!("{spec} n={n} j={}", row.level),
                        row.passed,
                        format!(
                            "A = {:.12}, A(1)^j = {:.12}, rel {:.1e}, product gap {:.1e}",
                            row.direct, row.predicted, row.relative_error, row.product_gap
                        ),
                    ));
                }
            }
            Err(e) => out.push(failed(S, format!("{spec} n={n}"), e)),
        }
    }
    out
}

fn freiman(cfg: &OptimizerConfig) -> Vec<Check> {
    const S: &str = "freiman";
    let mut out = Vec::new();
    let even = ds("3:0,2");
    let unit = ds("3:0,1");
    for j in 1..=3 {
        let a = enumerate_level(&normalize_digits(&even), j).and_then(|l| estimate_restriction(l.elements(), 2, cfg));
        let b = enumerate_level(&unit, j).and_then(|l| estimate_restriction(l.elements(), 2, cfg));
        match (a, b) {
            (Ok(a), Ok(b)) => out.push(check(
                S,
                format!("normalized constants j={j}"),
                a.value_2n.to_bits() == b.value_2n.to_bits(),
                format!("{} vs {}", a.value_2n, b.value_2n),
            )),
            (Err(e), _) | (_, Err(e)) => out.push(failed(S, format!("normalized constants j={j}"), e)),
        }
        let result = enumerate_level(&even, j).and_then(|l| {
            let domain = l.into_elements();
            let pairing = pairing_from_fn(&domain, |p| vec![p[0] / 2]);
            let codomain = LatticeSet::from_integers(domain.iter().map(|p| p[0] / 2));
            freiman_defect(&domain, &codomain, &pairing, 2, DEFAULT_TUPLE_BUDGET)
        });
        match result {
            Ok(d) => out.push(check(
                S,
                format!("halving defect j={j}"),
                d.defect_points.points() == [vec![0]],
                format!("{:?}", d.defect_points.points()),
            )),
            Err(e) => out.push(failed(S, format!("halving defect j={j}"), e)),
        }
    }
    out
}

fn bands(cfg: &OptimizerConfig) -> Vec<Check> {
    const S: &str = "bands";
    let g = ds("3:1,2");
    let mut out = Vec::new();
    for n in 1..=4u32 {
        let list = match exponents::sweep_banded(&g, n, 1..=5, cfg, DEFAULT_SUPPORT_CAP) {
            Ok(sweep) => sweep.estimates,
            Err(e) => {
                out.push(failed(S, format!("sweep n={n}"), e));
                continue;
            }
        };
        let widths_ok = list.iter().all(|e| {
            let formula = (2.0 * n as f64 + 1.0).ln() / (2.0 * n as f64 * e.t_used as f64 * 2f64.ln());
            (e.half_width() - formula).abs() <= 1e-14 && (e.alpha_point - e.alpha_lower - formula).abs() <= 1e-14
        });
        out.push(check(S, format!("half-widths n={n}"), widths_ok, "ln(2n+1)/(2n t ln 2)"));
        let shrinking = list.windows(2).all(|w| w[1].half_width() < w[0].half_width());
        out.push(check(S, format!("shrinking n={n}"), shrinking, ""));
        let nested = list
            .windows(2)
            .all(|w| (w[0].alpha_point - w[1].alpha_point).abs() <= w[0].half_width() + w[1].half_width());
        let points: Vec<String> = list.iter().map(|e| format!("{:.6}", e.alpha_point)).collect();
        out.push(check(S, format!("consecutive bands intersect n={n}"), nested, points.join(" ")));
        let capped = list.iter().all(|e| e.alpha_point >= 0.0 && e.alpha_point <= trivial_cap(n) + 1e-9);
        out.push(check(S, format!("within [0, cap] n={n}"), capped, ""));
        if n == 1 {
            let zero = list.iter().all(|e| e.alpha_point == 0.0);
            out.push(check(S, "n=1 curve is zero", zero, ""));
        }
    }
    out
}

fn cap(cfg: &OptimizerConfig) -> Vec<Check> {
    const S: &str = "cap";
    let mut out = Vec::new();
    for n in 2..=3u32 {
        for q in u64::from(n) + 1..=7 {
            let g = DigitSet::new(q, (0..q).collect()).expect("full digit set");
            match exponents::exponent_banded(&g, n, 1, cfg, DEFAULT_SUPPORT_CAP) {
                Ok(e) => out.push(check(
                    S,
                    format!("full base {q} n={n} below cap"),
                    e.alpha_point <= trivial_cap(n) + 1e-9 && e.alpha_point >= 0.0,
                    format!("{:.6} <= {:.6}", e.alpha_point, trivial_cap(n)),
                )),
                Err(e) => out.push(failed(S, format!("full base {q} n={n}"), e)),
            }
        }
    }
    match exponents::exponent_banded(&ds("5:0,1,2,3,4"), 2, 1, cfg, DEFAULT_SUPPORT_CAP) {
        Ok(e) => out.push(check(
            S,
            "full base 5 n=2 attains 1/4",
            (e.alpha_point - 0.25).abs() <= 1e-3,
            format!("alpha_point {:.6}", e.alpha_point),
        )),
        Err(e) => out.push(failed(S, "full base 5 n=2 attains 1/4", e)),
    }
    out
}

fn maximal(cfg: &OptimizerConfig) -> Vec<Check> {
    const S: &str = "maximal";
    let mut out = Vec::new();
    match construct_maximal_cantor(2, 3, 2) {
        Ok(m) => {
            out.push(check(
                S,
                "construction (2,3,2)",
                m.power == 2 && m.generator == ds("9:1,2,3,4"),
                format!("T = {}, {}", m.power, m.generator),
            ));
            out.push(check(S, "carry-free", !has_carryover(&m.generator, 2), ""));
            match exponent_no_carryover(&m.generator, 2, cfg) {
                Ok(e) => out.push(check(
                    S,
                    "exponent >= 1/4",
                    e.alpha_point >= 0.25 - 1e-6,
                    format!("alpha {:.6}", e.alpha_point),
                )),
                Err(e) => out.push(failed(S, "exponent >= 1/4", e)),
            }
        }
        Err(e) => out.push(failed(S, "construction (2,3,2)", e)),
    }
    out
}

fn naive_count(values: &[i64], s: usize, moments: &[u32]) -> u64 {
    let k = values.len();
    let mut count = 0;
    for code in 0..k.pow(2 * s as u32) {
        let mut c = code;
        let mut diff = vec![0i64; moments.len()];
        for pos in 0..2 * s {
            let v = values[c % k];
            c /= k;
            for (d, &e) in diff.iter_mut().zip(moments) {
                *d += if pos < s { v.pow(e) } else { -v.pow(e) };
            }
        }
        if diff.iter().all(|&d| d == 0) {
            count += 1;
        }
    }
    count
}

fn counting() -> Vec<Check> {
    const S: &str = "counting";
    let g = ds("3:0,1");
    let mut out = Vec::new();
    for j in 1..=4u32 {
        match count_vinogradov_ellipsephic(&g, j, 2, 1, DEFAULT_COUNT_BUDGET) {
            Ok(r) => out.push(check(S, format!("linear s=2 j={j}"), r.count == 6u64.pow(j), r.count.to_string())),
            Err(e) => out.push(failed(S, format!("linear s=2 j={j}"), e)),
        }
    }
    for j in 1..=2u32 {
        match count_vinogradov_ellipsephic(&g, j, 6, 2, DEFAULT_COUNT_BUDGET) {
            Ok(r) => {
                let floor = offdiagonal_lower_bound(&g, j, 6, 2).unwrap_or(f64::INFINITY);
                let diag = 2u64.pow(6 * j);
                out.push(check(
                    S,
                    format!("quadratic s=6 j={j} floors"),
                    r.count > diag && r.count as f64 > floor && r.count >= r.diagonal_count,
                    format!("count {} vs 2^(6j) = {diag}, bound {floor:.3}", r.count),
                ));
                if j == 1 {
                    let naive = naive_count(&[0, 1], 6, &[1, 2]);
                    out.push(check(S, "quadratic s=6 j=1 naive", naive == r.count, format!("naive {naive}")));
                }
            }
            Err(e) => out.push(failed(S, format!("quadratic s=6 j={j}"), e)),
        }
    }
    out
}

fn oracles(cfg: &OptimizerConfig) -> Vec<Check> {
    const S: &str = "oracles";
    let mut out = Vec::new();
    let mut rng = SplitMix64::new(cfg.rng_seed);

    let mut mismatches = 0;
    for _ in 0..50 {
        let size = 1 + (rng.next_u64() % 8) as usize;
        let n = 1 + (rng.next_u64() % 3) as u32;
        let set = LatticeSet::from_integers((0..size).map(|_| (rng.next_u64() % 41) as i64 - 20));
        let energy = additive_energy(&set, n, DEFAULT_ENUMERATION_BUDGET);
        let count = SystemSpec::linear(n).and_then(|spec| count_solutions(&set, &spec, DEFAULT_COUNT_BUDGET));
        match (energy, count) {
            (Ok(e), Ok(c)) if e == c.count && c.diagonal_count == diagonal_count(set.len(), n).unwrap_or(0) => {}
            _ => mismatches += 1,
        }
    }
    out.push(check(S, "energy equals linear count", mismatches == 0, format!("{mismatches} of 50 differ")));

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let size = 1 + (rng.next_u64() % 10) as usize;
        let n = 1 + (rng.next_u64() % 4) as u32;
        let set = LatticeSet::from_integers((0..size).map(|_| (rng.next_u64() % 61) as i64 - 30));
        let values: Vec<f64> = (0..set.len()).map(|_| 0.05 + rng.next_open01()).collect();
        let raw = |v: &[f64]| {
            let w = WeightVector::new(set.clone(), v.to_vec()).expect("positive weights");
            objective(&w, n).expect("valid") * w.norm().powi(2 * n as i32)
        };
        let w = WeightVector::new(set.clone(), values.clone()).expect("positive weights");
        let g = gradient(&w, n).expect("valid");
        for i in 0..values.len() {
            let (mut up, mut down) = (values.clone(), values.clone());
            up[i] += 1e-5;
            down[i] -= 1e-5;
            let fd = (raw(&up) - raw(&down)) / 2e-5;
            worst = worst.max((fd - g[i]).abs() / g[i].abs());
        }
    }
    out.push(check(S, "gradient vs central differences", worst <= 1e-6, format!("worst relative error {worst:.2e}")));

    for points in [[0i64, 1].as_slice(), &[0, 1, 3], &[0, 1, 2]] {
        let set = LatticeSet::from_integers(points.iter().copied());
        match energy_vs_restriction(&set, 2, cfg) {
            Ok(r) => out.push(check(
                S,
                format!("energy vs restriction {points:?}"),
                r.passed,
                format!("uniform {:.12} optimum {:.12}", r.uniform_value_2n, r.optimized_value_2n),
            )),
            Err(e) => out.push(failed(S, format!("energy vs restriction {points:?}"), e)),
        }
    }
    out
}

fn squares(cfg: &OptimizerConfig) -> Vec<Check> {
    const S: &str = "squares";
    let squares = DigitSet::new(101, (0..=10).map(|x| x * x).collect()).expect("squares below 101");
    let interval = DigitSet::new(101, (0..=10).collect()).expect("interval");
    let a = exponents::exponent_banded(&squares, 2, 1, cfg, DEFAULT_SUPPORT_CAP);
    let b = exponents::exponent_banded(&interval, 2, 1, cfg, DEFAULT_SUPPORT_CAP);
    match (a, b) {
        (Ok(a), Ok(b)) => vec![check(
            S,
            "squares below interval",
            a.alpha_point <= b.alpha_point,
            format!("{:.6} vs {:.6}", a.alpha_point, b.alpha_point),
        )],
        (Err(e), _) | (_, Err(e)) => vec![failed(S, "squares below interval", e)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_gap_allows_reflection() {
        assert_eq!(witness_gap(&[0.1, 0.2, 0.3], &[0.3, 0.2, 0.1]), 0.0);
        assert!(witness_gap(&[0.1, 0.5, 0.3], &[0.3, 0.2, 0.1]) > 0.2);
    }

    #[test]
    fn naive_count_small() {
        assert_eq!(naive_count(&[0, 1], 2, &[1]), 6);
        assert_eq!(naive_count(&[0, 1, 3], 2, &[1]), 15);
    }

    #[test]
    fn render_summarizes() {
        let text = render(&[check("a", "x", true, ""), check("a", "y", false, "bad")]);
        assert!(text.contains("PASS a/x"));
        assert!(text.contains("FAIL a/y"));
        assert!(text.ends_with("2 checks, 1 failed\n"));
    }
}
