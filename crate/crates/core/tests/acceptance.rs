//! Acceptance criteria. Run with `cargo test --test acceptance`; prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use lacuna::lacunary::{count_up_to, cumulative_count, element_at, enumerate_stream};
use lacuna::measures::{
    all_eta_words, dirichlet_check, eta_average_of_l, mu_hat, select_subsequence, theta_of_eta,
    wiener_average, wiener_average_mc, Mode, SubsequenceSelection, DEFAULT_WINDOW,
};
use lacuna::spectral::{
    block_average, block_average_exact, direct_average, h2_diagnostic, limit_l, Classification,
    LimitPolicy,
};
use lacuna::{Angle, Hp256, ModulusFamily, ModulusSequence, RatioRule, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::{Integer, Rational};

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn geometric3() -> ModulusSequence {
    ModulusSequence::new(ModulusFamily::Geometric { base: 3 }).unwrap()
}

fn factorial2() -> ModulusSequence {
    ModulusSequence::new(ModulusFamily::FactorialShift { offset: 2 }).unwrap()
}

/// `m_j = 2^{j²}`: `m_1 = 2`, `m_{j+1}/m_j = 2^{2j+1}`.
fn two_pow_square() -> ModulusSequence {
    ModulusSequence::new(ModulusFamily::Custom {
        first: Integer::from(2),
        ratio: RatioRule::Exponential {
            base: 2,
            scale: 2,
            shift: 1,
        },
    })
    .unwrap()
}

/// `m_1 = 3`, `m_{j+1} = 3 m_j²`.
fn self_multiple3() -> ModulusSequence {
    ModulusSequence::new(ModulusFamily::Custom {
        first: Integer::from(3),
        ratio: RatioRule::SelfMultiple { factor: 3 },
    })
    .unwrap()
}

/// Every `m_b + Σ_{j<b} ω_j m_j` for `b ≤ k`, grouped by block.
fn brute_blocks(m: &[Integer], k: usize) -> Vec<Vec<Integer>> {
    (1..=k)
        .map(|b| {
            let mut sums = vec![m[b - 1].clone()];
            for mj in &m[..b - 1] {
                sums = sums
                    .iter()
                    .flat_map(|s| [Integer::from(s - mj), s.clone(), Integer::from(s + mj)])
                    .collect();
            }
            sums
        })
        .collect()
}

fn dist_to_int(q: &Rational) -> Rational {
    let frac = q - q.clone().floor();
    let other = 1 - frac.clone();
    if frac <= other {
        frac
    } else {
        other
    }
}

fn frac_f64(q: &Rational) -> f64 {
    (q - q.clone().floor()).to_f64()
}

fn criterion_1() -> Check {
    let k = 8;
    for (name, m) in [
        ("3^j", geometric3()),
        ("(j+2)!", factorial2()),
        ("2^{j^2}", two_pow_square()),
    ] {
        let moduli: Vec<Integer> = (1..=k).map(|j| m.get(j).unwrap()).collect();
        let blocks = brute_blocks(&moduli, k);
        let mut all: Vec<Integer> = blocks.iter().flatten().cloned().collect();
        all.sort();
        let before = all.len();
        all.dedup();
        ensure(all.len() == before, || {
            format!("{name}: brute-force expansion has repeats")
        })?;
        let total = cumulative_count(k) as u64;
        ensure(total == (3u64.pow(k as u32) - 1) / 2, || {
            format!("{name}: cumulative_count({k}) = {total}")
        })?;
        let stream = enumerate_stream(&m, total).map_err(err)?;
        ensure(stream == all, || {
            format!("{name}: enumerate_stream differs from the sorted expansion")
        })?;
        let mut prev = Integer::new();
        for (b, block) in blocks.iter().enumerate() {
            let top = block.iter().max().unwrap();
            let c = count_up_to(&m, top).map_err(err)?;
            ensure(c == (3u64.pow(b as u32 + 1) - 1) / 2, || {
                format!("{name}: cumulative count at block {}", b + 1)
            })?;
            let per_block = Integer::from(&c - &prev);
            ensure(per_block == 3u64.pow(b as u32), || {
                format!("{name}: block {} holds {per_block}", b + 1)
            })?;
            prev = c;
        }
    }
    Ok(format!("3 families, blocks 1..={k}"))
}

fn criterion_2() -> Check {
    let m = geometric3();
    let moduli: Vec<Integer> = (1..=10).map(|j| m.get(j).unwrap()).collect();
    let mut brute: Vec<Integer> = brute_blocks(&moduli, 10).into_iter().flatten().collect();
    brute.sort();
    for n in 1..=10_000u64 {
        let s = element_at(&m, n).map_err(err)?;
        ensure(s == 3 * n, || format!("element_at({n}) = {s}"))?;
        ensure(brute[n as usize - 1] == s, || {
            format!("brute force disagrees at n = {n}")
        })?;
    }
    Ok("element_at(n) = 3n for n <= 10^4".into())
}

fn criterion_3() -> Check {
    let families = [
        geometric3(),
        factorial2(),
        two_pow_square(),
        self_multiple3(),
        ModulusSequence::new(ModulusFamily::Geometric { base: 5 }).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..100 {
        let m = &families[rng.gen_range(0..families.len())];
        let q: u64 = rng.gen_range(2..=1_000_000);
        let p: u64 = rng.gen_range(0..q);
        let n: u64 = rng.gen_range(1..=100_000);
        let theta = Angle::rational(p, q).map_err(err)?;
        let direct = direct_average::<f64>(m, &theta, n).map_err(err)?;
        let block = block_average_exact(m, &theta, n).map_err(err)?;
        ensure(direct.exact.as_ref() == Some(&block), || {
            format!("trial {trial}: {} θ = {p}/{q} N = {n}", m.family())
        })?;
    }
    // A 256-bit angle cannot be multiplied by the ~400-bit moduli of the
    // self-multiple family; the others stay under 192 bits for N <= 10^5.
    let dyadic_families = [0, 1, 2, 4];
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let m = &families[dyadic_families[trial % dyadic_families.len()]];
        let mantissa = random_256(&mut rng);
        let theta = Angle::dyadic(mantissa, 256).map_err(err)?;
        let n: u64 = rng.gen_range(1..=100_000);
        let d = direct_average::<Hp256>(m, &theta, n).map_err(err)?;
        let b = block_average::<Hp256>(m, &theta, n).map_err(err)?;
        let diff = ((d.average.re.clone() - b.average.re.clone()).to_f64())
            .hypot((d.average.im.clone() - b.average.im.clone()).to_f64());
        let combined = d.err + b.err;
        ensure(diff <= combined && combined <= 1e-12, || {
            format!("dyadic trial {trial}: |Δ| = {diff:e}, combined err = {combined:e}")
        })?;
        worst = worst.max(combined);
    }
    Ok(format!(
        "100 rational triples exact; 10 dyadic, combined err <= {worst:.1e}"
    ))
}

fn random_256(rng: &mut ChaCha8Rng) -> Integer {
    let limbs: [u64; 4] = rng.gen();
    Integer::from_digits(&limbs, rug::integer::Order::Lsf)
}

/// `Π_{j<k}(1 + 2cos 2πm_jθ)/3` in f64 from exact reductions of `m_j θ`.
fn product_oracle(m: &ModulusSequence, theta: &Rational, k: usize) -> f64 {
    (1..k)
        .map(|j| {
            let t = frac_f64(&Rational::from(theta * m.get(j).unwrap()));
            (1.0 + 2.0 * (2.0 * PI * t).cos()) / 3.0
        })
        .product()
}

fn criterion_4() -> Check {
    let policy = LimitPolicy::default();
    let n = 3u64.pow(8);
    let g = geometric3();
    let mut worst: f64 = 0.0;
    for (q, expected) in [(1u64, 1.0), (3, 1.0), (9, 0.0), (27, 0.0)] {
        let theta = if q == 1 {
            Angle::zero()
        } else {
            Angle::rational(1, q).map_err(err)?
        };
        let l = limit_l::<Hp256>(&g, &theta, &policy).map_err(err)?;
        let lv = l.value.to_f64();
        ensure((lv - expected).abs() <= l.err + l.tail_bound, || {
            format!("L(1/{q}) = {lv}, expected {expected}")
        })?;
        let avg = direct_average::<Hp256>(&g, &theta, n).map_err(err)?;
        let gap = (avg.average.re.to_f64() - lv).hypot(avg.average.im.to_f64());
        ensure(gap <= 1e-3, || {
            format!("3^j, θ = 1/{q}: |avg − L| = {gap:e}")
        })?;
        worst = worst.max(gap);
    }

    let f = factorial2();
    let sel = select_subsequence(&f, Mode::Prop5, 3, DEFAULT_WINDOW).map_err(err)?;
    let point = theta_of_eta(&f, &[true, true, true], &sel).map_err(err)?;
    let l = limit_l::<Hp256>(&f, &point.theta, &policy).map_err(err)?;
    ensure(
        l.classification == Classification::PositiveConverged,
        || format!("(j+2)!: L classified {}", l.classification.as_str()),
    )?;
    let lv = l.value.to_f64();
    let oracle = product_oracle(&f, &point.theta.to_rational(), 60);
    ensure((lv - oracle).abs() <= 1e-12, || {
        format!("(j+2)!: L = {lv}, product oracle {oracle}")
    })?;
    let avg = direct_average::<Hp256>(&f, &point.theta, n).map_err(err)?;
    let gap = (avg.average.re.to_f64() - lv).hypot(avg.average.im.to_f64());
    ensure(gap <= 1e-2, || format!("(j+2)!: |avg − L| = {gap:e}"))?;
    Ok(format!(
        "3^j max gap {worst:.1e}; (j+2)! L = {lv:.6}, gap {gap:.1e}"
    ))
}

fn criterion_5() -> Check {
    let f = factorial2();
    let sel = select_subsequence(&f, Mode::Prop5, 4, DEFAULT_WINDOW).map_err(err)?;
    let idx = sel.indices.clone();
    let fact = |j: usize| Integer::from(Integer::factorial(j as u32 + 2));
    let last = *idx.last().unwrap();
    let mut max_total = Rational::new();
    for eta in all_eta_words(4) {
        let mut theta = Rational::new();
        for (bit, &j) in eta.iter().zip(&idx) {
            if *bit {
                theta += Rational::from((1, fact(j)));
            }
        }
        let point = theta_of_eta(&f, &eta, &sel).map_err(err)?;
        ensure(point.theta.to_rational() == theta, || {
            format!("θ(η) differs from the oracle for {eta:?}")
        })?;
        let quarter = Rational::from((1, 4));
        let mut total = Rational::new();
        for j in 1..=last {
            let d = dist_to_int(&Rational::from(&theta * fact(j)));
            ensure(d <= quarter, || format!("‖m_{j}θ‖ > 1/4 for {eta:?}"))?;
            if j <= 40 {
                let jk = *idx.iter().find(|&&i| i > j).unwrap();
                let bound = Rational::from((2 * fact(j), fact(jk)));
                ensure(d <= bound, || {
                    format!("‖m_{j}θ‖ above 2m_j/m_{{j_k}} for {eta:?}")
                })?;
            }
            total += d.clone() * &d;
        }
        ensure(total < Rational::from((1, 3)), || {
            format!("Σ‖m_jθ‖² = {} for {eta:?}", total.to_f64())
        })?;
        let report = h2_diagnostic(&f, &point.theta, last + 5);
        ensure(report.total() == total, || {
            format!("h2 total disagrees for {eta:?}")
        })?;
        if total > max_total {
            max_total = total;
        }
    }
    Ok(format!(
        "16 words, max Σ‖m_jθ‖² = {:.6}",
        max_total.to_f64()
    ))
}

/// `(1/2^K) Σ_η e(s θ(η))` by direct summation over words.
fn word_average(
    m: &ModulusSequence,
    sel: &SubsequenceSelection,
    s: &Integer,
    k: usize,
) -> (f64, f64) {
    let words = all_eta_words(k);
    let (mut re, mut im) = (0.0, 0.0);
    for w in &words {
        let theta = theta_of_eta(m, w, sel).unwrap().theta.to_rational();
        let t = frac_f64(&(theta * s));
        re += (2.0 * PI * t).cos();
        im += (2.0 * PI * t).sin();
    }
    (re / words.len() as f64, im / words.len() as f64)
}

fn criterion_6() -> Check {
    let k = 4;
    let f = factorial2();
    let sel = select_subsequence(&f, Mode::Prop5, k, DEFAULT_WINDOW).map_err(err)?;
    for s in enumerate_stream(&f, 40).map_err(err)? {
        let mu = mu_hat::<f64>(&f, &sel, &s, k).map_err(err)?;
        let (re, im) = word_average(&f, &sel, &s, k);
        ensure((mu.re - re).hypot(mu.im - im) <= 1e-12, || {
            format!("μ̂({s}) differs from the word average")
        })?;
    }
    let mut last_sq = 0.0;
    let mut worst_sigma: f64 = 0.0;
    for n in [3u64.pow(4), 3u64.pow(6), 3u64.pow(8)] {
        let w = wiener_average::<Hp256>(&f, &sel, n, k).map_err(err)?;
        let c = w.mean_coeff.re.to_f64().hypot(w.mean_coeff.im.to_f64());
        let sq = w.mean_sq.to_f64();
        ensure(sq + w.err >= c * c, || {
            format!("N = {n}: mean_sq {sq} < |mean|² {}", c * c)
        })?;
        let mc = wiener_average_mc::<Hp256>(&f, &sel, n, k, 10_000, 2024).map_err(err)?;
        let dev = (mc.mean_coeff.re.to_f64() - w.mean_coeff.re.to_f64())
            .hypot(mc.mean_coeff.im.to_f64() - w.mean_coeff.im.to_f64());
        ensure(dev <= 4.0 * mc.std_err, || {
            format!("N = {n}: MC off by {dev:e}, σ = {:e}", mc.std_err)
        })?;
        worst_sigma = worst_sigma.max(dev / mc.std_err);
        last_sq = sq;
    }
    let (avg, avg_err) =
        eta_average_of_l::<Hp256>(&f, &sel, k, &LimitPolicy::default()).map_err(err)?;
    let avg = avg.to_f64();
    ensure(avg - avg_err > 0.0, || format!("η-average of L is {avg}"))?;
    ensure(last_sq >= 0.9 * avg * avg, || {
        format!("mean_sq {last_sq} < 0.9·{avg}²")
    })?;
    Ok(format!(
        "mean_sq(3^8) = {last_sq:.6} vs 0.9·{avg:.6}²; MC within {worst_sigma:.2}σ"
    ))
}

/// Rows `n ≤ 3` for the Thm6 point with `η = 1111`.
fn dirichlet_rows(m: &ModulusSequence) -> Check {
    let sel = select_subsequence(m, Mode::Thm6, 4, DEFAULT_WINDOW).map_err(err)?;
    let point = theta_of_eta(m, &[true; 4], &sel).map_err(err)?;
    let rows = dirichlet_check::<Hp256>(m, &point, 3, &LimitPolicy::default()).map_err(err)?;
    let mut prev = f64::NEG_INFINITY;
    let mut values = Vec::new();
    for row in &rows {
        let n = row.n as i32;
        let tail_bound = Rational::from((4, 3 * Integer::from(4).pow(n as u32)));
        ensure(row.tail_sum < tail_bound, || {
            format!("n = {n}: tail_sum {}", row.tail_sum.to_f64())
        })?;
        let lower = 1.0 - 16.0 * PI * PI / 9.0 * 4f64.powi(-n);
        let v = row.l_value.value.to_f64();
        let slack = row.l_value.err + row.l_value.tail_bound;
        ensure(v + slack >= lower, || {
            format!("n = {n}: L = {v} below {lower}")
        })?;
        ensure(v + slack >= prev, || format!("n = {n}: L decreased to {v}"))?;
        prev = v;
        values.push(v);
    }
    ensure(values.len() == 3 && values[2] >= 0.97, || {
        format!("L at n = 3 is {:?}", values.get(2))
    })?;
    Ok(format!("indices {:?}, L = {values:.6?}", sel.indices))
}

fn criterion_7() -> Check {
    dirichlet_rows(&factorial2())
}

fn criterion_7b() -> Check {
    dirichlet_rows(&self_multiple3())
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(args)
        .output()
        .map_err(err)?;
    ensure(out.status.success(), || {
        format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(out.stdout)
}

fn criterion_8() -> Check {
    let custom = r#"{"family":"custom","first":"3","ratio":{"rule":"self_multiple","factor":3}}"#;
    let commands: Vec<Vec<&str>> = vec![
        vec!["gen", "--family", "factorial:2", "--n", "500"],
        vec![
            "scan",
            "--family",
            "factorial:2",
            "--grid",
            "64",
            "--N",
            "729,2187",
            "--check-blocks",
        ],
        vec![
            "scan",
            "--family",
            "factorial:2",
            "--eta-all",
            "--K",
            "4",
            "--N",
            "243",
            "--json",
        ],
        vec![
            "measure",
            "--family",
            "factorial:2",
            "--K",
            "4",
            "--N",
            "81,729",
            "--samples",
            "5000",
            "--seed",
            "11",
        ],
        vec![
            "measure",
            "--family",
            "factorial:2",
            "--K",
            "3",
            "--N",
            "243",
            "--samples",
            "300",
            "--seed",
            "3",
            "--json",
        ],
        vec!["dirichlet", "--family", custom, "--K", "4", "--json"],
    ];
    for cmd in &commands {
        let mut reference: Option<Vec<u8>> = None;
        for threads in ["1", "2", "4", "4", "1"] {
            let mut args = cmd.clone();
            args.extend(["--threads", threads]);
            let out = run_cli(&args)?;
            match &reference {
                None => reference = Some(out),
                Some(r) => ensure(*r == out, || {
                    format!("{cmd:?} differs at --threads {threads}")
                })?,
            }
        }
    }
    Ok(format!(
        "{} commands x 5 runs byte-identical",
        commands.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1", "enumeration matches brute force", 5, criterion_1),
        ("2", "3^j closed form", 1, criterion_2),
        ("3", "block sums equal direct sums", 60, criterion_3),
        ("4", "Cesaro averages approach L", 120, criterion_4),
        ("5", "distance bounds over eta words", 10, criterion_5),
        ("6", "Wiener averages", 120, criterion_6),
        ("7", "Dirichlet rows on (j+2)!", 60, criterion_7),
        (
            "7b",
            "Dirichlet rows on m_{j+1} = 3m_j^2 (supplementary)",
            60,
            criterion_7b,
        ),
        (
            "8",
            "CLI determinism across thread counts",
            120,
            criterion_8,
        ),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= Duration::from_secs(limit) {
                Ok(detail)
            } else {
                Err(format!(
                    "{detail}; took {:.2}s, limit {limit}s",
                    elapsed.as_secs_f64()
                ))
            }
        });
        match result {
            Ok(detail) => println!(
                "criterion {id} PASS: {name} ({detail}) [{:.2}s]",
                elapsed.as_secs_f64()
            ),
            Err(reason) => {
                failed += 1;
                println!(
                    "criterion {id} FAIL: {name}: {reason} [{:.2}s]",
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
