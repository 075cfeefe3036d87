//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always shown:
//! `cargo test -p lipcert --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use common::*;
use lipcert::activations::{
    builtin, catalog, certify_averagedness, estimate_averagedness, gaussian_alpha,
    verify_prox_representation, AlphaEstimate, SamplingPlan,
};
use lipcert::certificates::{
    absolute_bound, beta, linear_bound, positivity_check, theta_combinatorial,
    theta_combinatorial_from, theta_firm, theta_recursive, theta_recursive_from,
    vartheta_exhaustive, vartheta_exhaustive_partitioned, NormTable, SubsetIndex,
    DEFAULT_VARTHETA_BUDGET,
};
use lipcert::experiments::{
    empirical_lipschitz, run_monte_carlo, run_tanh_toy, MonteCarloConfig, DEFAULT_RADIUS,
};
use lipcert::{certify, CertifyOptions, Network, NormSpec};

type Outcome = Result<String, String>;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn le_rel(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * a.abs().max(b.abs())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn l2() -> (NormSpec, NormSpec) {
    (NormSpec::euclidean(), NormSpec::euclidean())
}

fn vartheta(net: &Network) -> f64 {
    let (a, b) = l2();
    vartheta_exhaustive(net, (&a, &b), DEFAULT_VARTHETA_BUDGET)
        .unwrap()
        .value
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let r = run_tanh_toy().map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let targets = [
        ("linear", r.linear, 54.72),
        ("theta", r.theta, 60.50),
        ("vartheta", r.vartheta, 59.54),
        ("naive", r.naive, 66.29),
        ("empirical", r.empirical_ratio, 58.18),
    ];
    for (name, got, want) in targets {
        check((got - want).abs() <= 0.01, || {
            format!("{name} = {got:.4}, expected {want} ± 0.01")
        })?;
    }
    check(r.empirical_ratio > r.linear, || {
        "empirical ratio does not exceed the linear bound".into()
    })?;
    check(secs < 1.0, || format!("took {secs:.3} s (limit 1 s)"))?;
    Ok(format!(
        "linear {:.4}, theta {:.4}, vartheta {:.4}, naive {:.4}, empirical {:.4} in {:.3} s",
        r.linear, r.theta, r.vartheta, r.naive, r.empirical_ratio, secs
    ))
}

fn criterion_2() -> Outcome {
    let means = [0.6699, 0.3747, 0.4528];
    let mins = [0.5112, 0.1208, 0.2424];
    let run = |trials: usize| -> Result<(lipcert::experiments::RatioStats, f64), String> {
        let mut cfg = MonteCarloConfig::new(vec![8, 10, 6, 3], trials, 0);
        cfg.vartheta = true;
        let start = Instant::now();
        let r = run_monte_carlo(&cfg).map_err(|e| e.to_string())?;
        Ok((r.stats, start.elapsed().as_secs_f64()))
    };
    let mut detail = Vec::new();
    for (trials, limit, check_min) in [(200usize, 600.0, false), (1000, 1800.0, true)] {
        let (s, secs) = run(trials)?;
        let v = s.vartheta_ratio.ok_or("vartheta statistics missing")?;
        let got_means = [s.theta_ratio.mean, s.linear_ratio.mean, v.mean];
        let got_mins = [s.theta_ratio.min, s.linear_ratio.min, v.min];
        for (i, name) in ["theta", "linear", "vartheta"].iter().enumerate() {
            check((got_means[i] - means[i]).abs() <= 0.02, || {
                format!(
                    "{trials} trials: mean {name} ratio {:.4}, expected {} ± 0.02",
                    got_means[i], means[i]
                )
            })?;
            if check_min {
                check((got_mins[i] - mins[i]).abs() <= 0.05, || {
                    format!(
                        "{trials} trials: min {name} ratio {:.4}, expected {} ± 0.05",
                        got_mins[i], mins[i]
                    )
                })?;
            }
        }
        check(secs < limit, || {
            format!("{trials} trials took {secs:.1} s (limit {limit} s)")
        })?;
        detail.push(format!(
            "{trials} trials: means {:.4}/{:.4}/{:.4}, mins {:.4}/{:.4}/{:.4} in {:.1} s",
            got_means[0], got_means[1], got_means[2], got_mins[0], got_mins[1], got_mins[2], secs
        ));
    }
    Ok(detail.join("; "))
}

fn criterion_3() -> Outcome {
    let mut with_vartheta = 0;
    for k in 0..500 {
        let mut r = gen(3, k);
        let net = random_alpha_net(&mut r, 6, 8);
        let t = NormTable::new(&net);
        let theta = theta_recursive(&net);
        check(
            le_rel(t.linear(), theta, 1e-9) && le_rel(theta, t.product(), 1e-9),
            || {
                format!(
                    "net {k}: linear {} theta {theta} product {}",
                    t.linear(),
                    t.product()
                )
            },
        )?;
        if hidden_bits(&net) <= 16 {
            let v = vartheta(&net);
            check(
                le_rel(t.linear(), v, 1e-9) && le_rel(v, theta, 1e-9),
                || format!("net {k}: linear {} vartheta {v} theta {theta}", t.linear()),
            )?;
            with_vartheta += 1;
        }
    }
    Ok(format!(
        "500 nets, {with_vartheta} with enumerated vartheta"
    ))
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let mut r = gen(4, k);
        let net = random_alpha_net(&mut r, 10, 8);
        let a = theta_recursive(&net);
        let b = theta_combinatorial(&net).map_err(|e| e.to_string())?;
        let rel = (a - b).abs() / a.abs().max(b.abs());
        worst = worst.max(rel);
        check(rel <= 1e-12, || {
            format!("net {k}: recursive {a} vs combinatorial {b}")
        })?;
    }
    Ok(format!("max relative difference {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    for k in 0..100 {
        let mut r = gen(5, k);
        let net = random_alpha_net(&mut r, 6, 6);
        let m = net.depth();
        let table = NormTable::new(&net);
        let zero = vec![0.0; m - 1];
        let one = vec![1.0; m - 1];
        let half = vec![0.5; m - 1];
        let t0 = theta_recursive_from(&table, &zero);
        let c0 = theta_combinatorial_from(&table, &zero, 1 << 20).unwrap();
        check(
            rel_close(t0, table.linear(), 1e-12) && rel_close(c0, table.linear(), 1e-12),
            || {
                format!(
                    "net {k}: alpha=0 theta {t0} / {c0} vs linear {}",
                    table.linear()
                )
            },
        )?;
        let t1 = theta_recursive_from(&table, &one);
        check(rel_close(t1, table.product(), 1e-12), || {
            format!("net {k}: alpha=1 theta {t1} vs product {}", table.product())
        })?;
        let weights: Vec<_> = net.weights().into_iter().cloned().collect();
        let firm_net = net_with_alphas(weights, &half);
        let tf = theta_firm(&firm_net).map_err(|e| e.to_string())?;
        let tc = theta_combinatorial(&firm_net).unwrap();
        check(rel_close(tf, tc, 1e-12), || {
            format!("net {k}: firm {tf} vs combinatorial {tc}")
        })?;
        let alphas = net.hidden_alphas();
        let sum: f64 = (0u64..1 << (m - 1))
            .map(|mask| {
                let j: Vec<usize> = (1..m).filter(|j| mask >> (j - 1) & 1 == 1).collect();
                beta(&alphas, &SubsetIndex::new(j, m).unwrap()).unwrap()
            })
            .sum();
        check((sum - 1.0).abs() <= 1e-12, || {
            format!("net {k}: beta sum {sum}")
        })?;
    }
    Ok("100 nets: alpha=0, alpha=1, alpha=1/2 and beta sums".into())
}

fn criterion_6() -> Outcome {
    let mut vartheta_checks = 0;
    for k in 0..100 {
        let mut r = gen(6, k);
        let net = random_alpha_net(&mut r, 5, 6);
        let theta = theta_recursive(&net);
        let enumerable = hidden_bits(&net) <= 14;
        let v = enumerable.then(|| vartheta(&net));
        for (i, a) in net.hidden_alphas().iter().enumerate() {
            let raised = net.with_layer_alpha(i, (a + 0.1).min(1.0)).unwrap();
            let t2 = theta_recursive(&raised);
            check(t2 >= theta - 1e-10 * theta, || {
                format!("net {k} layer {i}: theta {theta} -> {t2}")
            })?;
            if let Some(v) = v {
                let v2 = vartheta(&raised);
                check(v2 >= v - 1e-10 * v, || {
                    format!("net {k} layer {i}: vartheta {v} -> {v2}")
                })?;
                vartheta_checks += 1;
            }
        }
    }
    Ok(format!("100 nets, {vartheta_checks} vartheta comparisons"))
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let mut r = gen(7, k);
        let net = random_real_net(&mut r, 4, 5, false);
        let rep = certify(&net, &CertifyOptions::default()).map_err(|e| format!("net {k}: {e}"))?;
        let c = rep.certified;
        let n = net.input_dim();
        for p in 0..1000 {
            let scale = [0.1, 1.0, 10.0][p % 3];
            let x: Vec<f64> = lipcert::rng::normal_vec(&mut r, n)
                .iter()
                .map(|v| scale * v)
                .collect();
            let step = [1e-3, 1e-1, 1.0, 10.0][p % 4];
            let y: Vec<f64> = x
                .iter()
                .map(|v| v + step * lipcert::rng::normal(&mut r))
                .collect();
            let num = l2_dist(&net.forward(&x).unwrap(), &net.forward(&y).unwrap());
            let den = l2_dist(&x, &y);
            worst = worst.max(num / (c * den));
            check(num <= c * den * (1.0 + 1e-9), || {
                format!(
                    "net {k} pair {p}: ratio {} exceeds certified {c}",
                    num / den
                )
            })?;
        }
        let x = lipcert::rng::normal_vec(&mut r, n);
        let e = empirical_lipschitz(&net, &x, 200, DEFAULT_RADIUS, k).unwrap();
        let valid = [
            Some(rep.product_bound),
            rep.theta,
            rep.vartheta,
            rep.positive_collapse,
            rep.absolute_bound,
        ];
        for v in valid.into_iter().flatten() {
            check(e <= v * (1.0 + 1e-9), || {
                format!("net {k}: empirical {e} exceeds certificate {v}")
            })?;
        }
    }
    Ok(format!(
        "50 nets x 1000 pairs, max observed ratio/certified {worst:.4}"
    ))
}

fn criterion_8() -> Outcome {
    let (a, b) = l2();
    for k in 0..100 {
        let mut r = gen(8, k);
        let d = dims(&mut r, 4, 5);
        let weights: Vec<_> = d
            .windows(2)
            .map(|w| {
                let m = normal_matrix(&mut r, w[1], w[0]);
                lipcert::linalg::absolute_matrix(&m)
            })
            .collect();
        let alphas: Vec<f64> = (0..d.len() - 2)
            .map(|_| lipcert::rng::uniform(&mut r, 0.0, 1.0))
            .collect();
        let net = net_with_alphas(weights, &alphas);
        let v = vartheta(&net);
        let lin = linear_bound(&net, (&a, &b)).unwrap();
        check(rel_close(v, lin, 1e-9), || {
            format!("nonnegative net {k}: vartheta {v} vs linear {lin}")
        })?;
        check(positivity_check(&net).holds, || {
            format!("nonnegative net {k}: positivity fails")
        })?;
    }
    for k in 0..100 {
        let mut r = gen(80, k);
        let d = dims(&mut r, 4, 5);
        let weights = sign_factorized_weights(&mut r, &d);
        let alphas: Vec<f64> = (0..d.len() - 2)
            .map(|_| lipcert::rng::uniform(&mut r, 0.0, 1.0))
            .collect();
        let net = net_with_alphas(weights, &alphas);
        check(positivity_check(&net).holds, || {
            format!("sign-factorized net {k}: positivity fails")
        })?;
        let v = vartheta(&net);
        let lin = linear_bound(&net, (&a, &b)).unwrap();
        check(rel_close(v, lin, 1e-9), || {
            format!("sign-factorized net {k}: vartheta {v} vs linear {lin}")
        })?;
    }
    let mut holds = 0;
    for k in 0..200 {
        let mut r = gen(81, k);
        let d = dims(&mut r, 3, 3);
        let weights = if k % 2 == 0 {
            sign_factorized_weights(&mut r, &d)
        } else {
            random_sign_weights(&mut r, &d)
        };
        let oracle = condpos_oracle(&weights);
        let net = net_with_alphas(weights, &vec![0.5; d.len() - 2]);
        let got = positivity_check(&net).holds;
        check(oracle == got, || {
            format!("tiny net {k}: oracle {oracle}, positivity_check {got}")
        })?;
        holds += got as usize;
    }
    Ok(format!("200 nonneg/sign-factorized nets collapse; oracle agrees on 200 tiny nets ({holds} positive)"))
}

fn criterion_9() -> Outcome {
    let (a, b) = l2();
    let mut count = 0;
    let mut k = 0;
    while count < 100 {
        let mut r = gen(9, k);
        k += 1;
        let net = random_alpha_net(&mut r, 5, 6);
        if hidden_bits(&net) > 16 {
            continue;
        }
        let v = vartheta(&net);
        let abs = absolute_bound(&net, (&a, &b)).unwrap();
        check(v <= abs + 1e-9, || {
            format!("net {k}: vartheta {v} exceeds absolute bound {abs}")
        })?;
        count += 1;
    }
    Ok("100 enumerable nets".into())
}

fn criterion_10() -> Outcome {
    let plan = SamplingPlan::new(-20.0, 20.0, 10_000, 10);
    for act in catalog() {
        let rep = certify_averagedness(&act, act.alpha(), &plan).map_err(|e| e.to_string())?;
        check(rep.pass, || {
            format!(
                "{} at alpha {}: quotients [{}, {}]",
                act.name(),
                act.alpha(),
                rep.worst_quotient_low,
                rep.worst_quotient_high
            )
        })?;
    }
    let mut gaps = Vec::new();
    for name in ["elu", "geman_mcclure", "capped_relu", "tanh"] {
        let act = builtin(name, &[]).unwrap();
        let rep = verify_prox_representation(&act, &plan).map_err(|e| e.to_string())?;
        check(rep.max_abs_gap <= 1e-6, || {
            format!("{name}: prox gap {} at {}", rep.max_abs_gap, rep.worst_x)
        })?;
        gaps.push(format!("{name} {:.1e}", rep.max_abs_gap));
    }
    let est = |n: &str| estimate_averagedness(&builtin(n, &[]).unwrap(), &plan).unwrap();
    check(est("relu") == AlphaEstimate::Averaged(0.5), || {
        format!("relu estimate {:?}", est("relu"))
    })?;
    check(est("abs") == AlphaEstimate::Averaged(1.0), || {
        format!("abs estimate {:?}", est("abs"))
    })?;
    let g = match est("gaussian") {
        AlphaEstimate::Averaged(g) => g,
        other => return Err(format!("gaussian estimate {other:?}")),
    };
    check((0.92..=gaussian_alpha() + 0.01).contains(&g), || {
        format!("gaussian estimate {g}")
    })?;
    Ok(format!(
        "14 catalog entries pass; prox gaps {}; gaussian estimate {g:.5}",
        gaps.join(", ")
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lipcert"))
        .args(args)
        .env_remove("LIPCERT_BUDGET")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn criterion_11() -> Outcome {
    let dir = std::env::temp_dir().join(format!("lipcert-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut r = gen(11, 0);
    let net = random_real_net(&mut r, 3, 4, true);
    let net_path = dir.join("random.lipnet");
    std::fs::write(&net_path, net.serialize()).map_err(|e| e.to_string())?;
    let toy = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/tanh_toy.lipnet");
    let p = net_path.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["certify", toy, "--json"],
        vec!["certify", p, "--json", "--seed", "5"],
        vec![
            "certify", p, "--json", "--budget", "1", "--trials", "16", "--seed", "5",
        ],
        vec![
            "certify",
            p,
            "--json",
            "--norm-in",
            "1",
            "--norm-out",
            "inf",
        ],
        vec![
            "experiment",
            "numeric",
            "--trials",
            "20",
            "--seed",
            "3",
            "--vartheta",
            "--json",
        ],
        vec!["experiment", "tanh", "--json"],
        vec!["activations", "certify", "elu", "--json", "--seed", "2"],
        vec!["activations", "list", "--json"],
        vec!["inspect", toy, "--json"],
    ];
    for c in &commands {
        let a = run_cli(c)?;
        let b = run_cli(c)?;
        check(a == b, || format!("{c:?}: outputs differ"))?;
        serde_json::from_slice::<serde_json::Value>(&a)
            .map_err(|e| format!("{c:?}: not JSON: {e}"))?;
    }
    let _ = std::fs::remove_dir_all(&dir);

    let (na, nb) = l2();
    let mut nets: Vec<Network> = (0..20)
        .map(|k| {
            let mut r = gen(110, k);
            random_alpha_net(&mut r, 4, 5)
        })
        .collect();
    let mut r = gen(111, 0);
    let mc: Vec<_> = [8usize, 10, 6, 3]
        .windows(2)
        .map(|w| normal_matrix(&mut r, w[1], w[0]))
        .collect();
    nets.push(net_with_alphas(mc, &[0.5, 0.5]));
    for (k, net) in nets.iter().enumerate() {
        let base =
            vartheta_exhaustive_partitioned(net, (&na, &nb), DEFAULT_VARTHETA_BUDGET, 1).unwrap();
        for parts in [2, 8] {
            let other =
                vartheta_exhaustive_partitioned(net, (&na, &nb), DEFAULT_VARTHETA_BUDGET, parts)
                    .unwrap();
            check(
                other.value.to_bits() == base.value.to_bits() && other.argmax == base.argmax,
                || {
                    format!(
                        "net {k}: {parts} partitions give {} vs {}",
                        other.value, base.value
                    )
                },
            )?;
        }
    }
    Ok(format!("{} CLI invocations byte-identical; vartheta bit-identical over 1/2/8 partitions on {} nets", commands.len(), nets.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("tanh toy constants", criterion_1),
        ("Monte Carlo ratio study", criterion_2),
        ("sandwich property", criterion_3),
        ("theta recursion equivalence", criterion_4),
        ("theta special cases", criterion_5),
        ("monotonicity in alpha", criterion_6),
        ("empirical soundness", criterion_7),
        ("positivity collapse", criterion_8),
        ("absolute-value bound", criterion_9),
        ("activation catalog", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]",
                i + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {:>2} FAIL  {name}: {detail} [{secs:.1} s]",
                    i + 1
                );
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
