//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use serde_json::Value;

use markovscope::checkers::{build_markov_state, check_petz_t, check_ruskai, DEFAULT_T_GRID};
use markovscope::config::{MeasureKind, RunConfig};
use markovscope::entropy::conditional_mutual_information;
use markovscope::io::StateFile;
use markovscope::lab::{pinsker_identity_check, sample_state, Measure, SampleConfig};
use markovscope::linalg::{c64, lie_trotter, matrix_function, trace_norm, MatrixFunction};
use markovscope::markov::{build_m_bundle, petz_map, theorem2_conditions, KrausChannel};
use markovscope::parallel::{map_indexed, with_threads};
use markovscope::random::{hs_density, random_channel, random_hermitian, random_markov_spec, stream_rng};
use markovscope::{CMatrix, Dims, SupportPolicy, TripartiteState};
use markovscope_cli::{cmd_analyze, cmd_scan};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn dims(a: usize, b: usize, c: usize) -> Dims {
    Dims::new(a, b, c).unwrap()
}

fn hs_config(d: Dims, count: usize, seed: u64) -> SampleConfig {
    SampleConfig {
        dims: d,
        measure: Measure::HsInduced { env_dim: d.total() },
        count,
        seed,
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Random 2-block Markov states with dA = dC = 2 and each of bL, bR in {1, 2}.
fn markov_states(n: usize) -> Result<Vec<TripartiteState>, String> {
    map_indexed(n, |i| {
        let mut rng = stream_rng(2002, i as u64);
        let layout: Vec<(usize, usize)> = (0..2)
            .map(|_| (rng.random_range(1..=2), rng.random_range(1..=2)))
            .collect();
        let spec = random_markov_spec(2, 2, &layout, &mut rng)?;
        build_markov_state(&spec)
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(e)
}

fn c1_ssa() -> Outcome {
    let mut worst = f64::INFINITY;
    for (d, count) in [(dims(2, 2, 2), 10_000), (dims(3, 2, 3), 1_000)] {
        let cfg = hs_config(d, count, 101);
        let values: Vec<f64> = map_indexed(count, |i| {
            sample_state(&cfg, i).and_then(|s| conditional_mutual_information(&s))
        })
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(e)?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        ensure(min >= -1e-8, || format!("dims {d}: min cmi {min:e}"))?;
        worst = worst.min(min);
    }
    Ok(format!("min raw cmi {worst:.3e} over 11000 states"))
}

fn c2_markov_forward() -> Outcome {
    let policy = SupportPolicy::default();
    let mut worst = 0.0f64;
    for (i, s) in markov_states(100)?.iter().enumerate() {
        let bundle = build_m_bundle(s, policy).map_err(e)?;
        let t2 = theorem2_conditions(s, &bundle, policy).map_err(e)?;
        let ruskai = check_ruskai(s, policy).map_err(e)?.residual;
        let petz = check_petz_t(s, &DEFAULT_T_GRID, policy).map_err(e)?;
        let m = [t2.cmi, t2.dist_mm, t2.dist_mdm, ruskai, petz].into_iter().fold(0.0, f64::max);
        ensure(m < 1e-7, || format!("state {i}: max residual {m:e}"))?;
        worst = worst.max(m);
    }
    Ok(format!("max residual {worst:.3e} over 100 states"))
}

fn c3_commutator() -> Outcome {
    let policy = SupportPolicy::default();
    let mut worst_comm = 0.0f64;
    for (i, s) in markov_states(100)?.iter().enumerate() {
        let c = build_m_bundle(s, policy).map_err(e)?.commutator_trace_norm;
        ensure(c < 1e-8, || format!("markov state {i}: comm {c:e}"))?;
        worst_comm = worst_comm.max(c);
    }

    let cfg = hs_config(dims(2, 2, 2), 1_000, 303);
    let mut found = 0;
    let mut min_residual = f64::INFINITY;
    for i in 0..cfg.count {
        if found == 100 {
            break;
        }
        let s = sample_state(&cfg, i).map_err(e)?;
        let bundle = build_m_bundle(&s, policy).map_err(e)?;
        let t2 = theorem2_conditions(&s, &bundle, policy).map_err(e)?;
        if t2.cmi <= 0.01 {
            continue;
        }
        found += 1;
        let ruskai = check_ruskai(&s, policy).map_err(e)?.residual;
        let petz = check_petz_t(&s, &DEFAULT_T_GRID, policy).map_err(e)?;
        let m = [t2.cmi, t2.dist_mm, t2.dist_mdm, ruskai, petz].into_iter().fold(f64::INFINITY, f64::min);
        ensure(m > 1e-3, || format!("haar state {i}: a residual is {m:e}"))?;
        min_residual = min_residual.min(m);
    }
    ensure(found == 100, || format!("only {found} Haar states with cmi > 0.01"))?;
    Ok(format!(
        "max markov comm {worst_comm:.3e}; min haar residual {min_residual:.3e}"
    ))
}

fn c4_classical() -> Outcome {
    let policy = SupportPolicy::default();
    let d = dims(2, 2, 2);
    let cfg = SampleConfig {
        dims: d,
        measure: Measure::ClassicalDirichlet,
        count: 1_000,
        seed: 404,
    };
    let rows: Vec<Result<(f64, f64, f64), String>> = map_indexed(cfg.count, |n| {
        let s = sample_state(&cfg, n).map_err(e)?;
        let bundle = build_m_bundle(&s, policy).map_err(e)?;
        let p = |i: usize, j: usize, k: usize| s.rho()[(d.index(i, j, k), d.index(i, j, k))].re;
        let pij = |i: usize, j: usize| (0..d.c).map(|k| p(i, j, k)).sum::<f64>();
        let pjk = |j: usize, k: usize| (0..d.a).map(|i| p(i, j, k)).sum::<f64>();
        let pj = |j: usize| (0..d.a).map(|i| pij(i, j)).sum::<f64>();
        let mut expected = CMatrix::zeros(d.total(), d.total());
        for i in 0..d.a {
            for j in 0..d.b {
                for k in 0..d.c {
                    let x = d.index(i, j, k);
                    expected[(x, x)] = c64(pij(i, j) * pjk(j, k) / pj(j), 0.0);
                }
            }
        }
        let entry_err = (&bundle.mm_dagger - expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pinsker = pinsker_identity_check(&s, policy)
            .map_err(e)?
            .identity_residual
            .ok_or_else(|| format!("sample {n}: identity not applicable"))?;
        Ok((entry_err, bundle.commutator_trace_norm, pinsker))
    });
    let (mut w_entry, mut w_comm, mut w_pinsker) = (0.0f64, 0.0f64, 0.0f64);
    for (n, row) in rows.into_iter().enumerate() {
        let (entry, comm, pinsker) = row?;
        ensure(entry < 1e-10 && comm < 1e-10 && pinsker < 1e-8, || {
            format!("sample {n}: entry {entry:e}, comm {comm:e}, pinsker {pinsker:e}")
        })?;
        w_entry = w_entry.max(entry);
        w_comm = w_comm.max(comm);
        w_pinsker = w_pinsker.max(pinsker);
    }
    Ok(format!(
        "max entry err {w_entry:.3e}, comm {w_comm:.3e}, pinsker {w_pinsker:.3e}"
    ))
}

fn c5_ghz(dir: &Path) -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = vec![c64(0.0, 0.0); 8];
    psi[0] = c64(h, 0.0);
    psi[7] = c64(h, 0.0);
    let s = TripartiteState::from_pure(&psi, dims(2, 2, 2)).map_err(e)?;
    let path = dir.join("ghz.json");
    StateFile::from_state(&s).write(&path).map_err(e)?;
    let cfg = RunConfig::default();
    let runs: Vec<Value> = (0..2)
        .map(|_| {
            cmd_analyze(&path, &cfg)
                .map_err(e)
                .and_then(|out| serde_json::from_str(&out).map_err(e))
        })
        .collect::<Result<_, _>>()?;
    let cmi = runs[0]["cmi"].as_f64().unwrap();
    let label = runs[0]["classification"]["label"].as_str().unwrap().to_string();
    let comm = runs[0]["comm_norm"].as_f64().unwrap();
    ensure((cmi - 1.0).abs() <= 1e-9, || format!("cmi {cmi}"))?;
    ensure(label == "D2" || label == "D3", || format!("class {label}"))?;
    ensure(runs[0] == runs[1], || "two analyze runs differ".into())?;
    Ok(format!("cmi {cmi:.9}, comm_norm {comm:.3e}, class {label} (reproducible)"))
}

fn c6_scan(dir: &Path) -> Outcome {
    let mut parts = Vec::new();
    for measure in [
        MeasureKind::HsInduced,
        MeasureKind::ClassicalDirichlet,
        MeasureKind::MarkovPerturbed,
    ] {
        let out = dir.join(format!("scan-{measure}.jsonl"));
        let cfg = RunConfig {
            count: 10_000,
            measure,
            out: Some(out.clone()),
            ..RunConfig::default()
        };
        let report: Value = serde_json::from_str(&cmd_scan(&cfg).map_err(e)?).map_err(e)?;
        let summary = &report["summary"];
        let conj = summary["min_deficit_conj"].as_f64().unwrap();
        let comm = summary["min_deficit_comm"].as_f64().unwrap();
        let candidates = summary["violation_candidates"].as_u64().unwrap();
        let artifact = out.with_file_name(format!("scan-{measure}.candidates.json"));
        ensure(candidates == 0 || artifact.exists(), || {
            format!("{measure}: {candidates} candidates but no artifact")
        })?;
        ensure(conj >= -1e-6 && comm >= -1e-6, || {
            format!("{measure}: min deficit_conj {conj:e}, deficit_comm {comm:e}")
        })?;
        parts.push(format!("{measure} conj {conj:.2e} comm {comm:.2e}"));
    }
    Ok(parts.join("; "))
}

fn c7_petz_fixed_point() -> Outcome {
    let policy = SupportPolicy::default();
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = stream_rng(707, i);
        let din: usize = rng.random_range(2..=5);
        let dout = rng.random_range(2..=4);
        let kraus = din.div_ceil(dout) + rng.random_range(0..=2);
        let sigma = hs_density(din, din, &mut rng);
        let phi = random_channel(din, dout, kraus, &mut rng).map_err(e)?;
        let image = phi.apply(&sigma).map_err(e)?;
        let back = petz_map(&phi, &sigma, &image, policy).map_err(e)?;
        let err = trace_norm(&(back - &sigma));
        ensure(err < 1e-8, || format!("pair {i} ({din}->{dout}, {kraus} ops): {err:e}"))?;
        worst = worst.max(err);
    }
    let mut worst_id = 0.0f64;
    for i in 0..20u64 {
        let mut rng = stream_rng(708, i);
        let d = 2 + (i as usize % 4);
        let sigma = hs_density(d, d, &mut rng);
        let back = petz_map(&KrausChannel::identity(d), &sigma, &sigma, policy).map_err(e)?;
        let err = trace_norm(&(back - &sigma));
        ensure(err < 1e-10, || format!("identity channel, d={d}: {err:e}"))?;
        worst_id = worst_id.max(err);
    }
    Ok(format!("max error {worst:.3e}; identity channel {worst_id:.3e}"))
}

fn c8_marginal_recovery() -> Outcome {
    let policy = SupportPolicy::default();
    let cfg = hs_config(dims(2, 2, 2), 1_000, 808);
    let errs: Vec<(f64, f64)> = map_indexed(cfg.count, |i| {
        let s = sample_state(&cfg, i)?;
        let b = build_m_bundle(&s, policy)?;
        let d = s.dims().as_array();
        let ab = markovscope::linalg::partial_trace(&b.mm_dagger, &d, &[0, 1])?;
        let bc = markovscope::linalg::partial_trace(&b.m_dagger_m, &d, &[1, 2])?;
        Ok((trace_norm(&(ab - s.rho_ab())), trace_norm(&(bc - s.rho_bc()))))
    })
    .into_iter()
    .collect::<markovscope::Result<_>>()
    .map_err(e)?;
    let w_ab = errs.iter().map(|p| p.0).fold(0.0, f64::max);
    let w_bc = errs.iter().map(|p| p.1).fold(0.0, f64::max);
    ensure(w_ab < 1e-8 && w_bc < 1e-8, || format!("ab {w_ab:e}, bc {w_bc:e}"))?;
    Ok(format!("max ab {w_ab:.3e}, bc {w_bc:.3e} over 1000 states"))
}

fn c9_lie_trotter() -> Outcome {
    let policy = SupportPolicy::default();
    let (mut refine, mut symmetric) = (0, 0);
    for i in 0..50u64 {
        let mut rng = stream_rng(909, i);
        let a = random_hermitian(4, &mut rng);
        let b = random_hermitian(4, &mut rng);
        let exact = matrix_function(&(&a + &b), MatrixFunction::Exp, policy).map_err(e)?;
        let err = |n, sym| lie_trotter(&a, &b, n, sym).map(|x| trace_norm(&(x - &exact))).map_err(e);
        let (e8, e64, s64) = (err(8, false)?, err(64, false)?, err(64, true)?);
        refine += usize::from(e64 < e8);
        symmetric += usize::from(s64 <= e64);
    }
    ensure(refine >= 45 && symmetric >= 45, || {
        format!("n=64 better in {refine}/50, symmetric better in {symmetric}/50")
    })?;
    Ok(format!("n=64 better in {refine}/50; symmetric no worse in {symmetric}/50"))
}

fn jsonl_body(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(e)?;
    Ok(text.split_once('\n').map(|(_, body)| body.to_string()).unwrap_or_default())
}

fn c10_determinism(dir: &Path) -> Outcome {
    let run = |name: &str, threads: usize| -> Result<String, String> {
        let out = dir.join(name);
        let cfg = RunConfig {
            count: 2_000,
            measure: MeasureKind::MarkovPerturbed,
            out: Some(out.clone()),
            ..RunConfig::default()
        };
        with_threads(Some(threads), || cmd_scan(&cfg)).map_err(e)?.map_err(e)?;
        jsonl_body(&out)
    };
    let first = run("det-a.jsonl", 8)?;
    let second = run("det-b.jsonl", 8)?;
    let serial = run("det-c.jsonl", 1)?;
    ensure(!first.is_empty(), || "empty JSONL body".into())?;
    ensure(first == second, || "repeat run differs".into())?;
    ensure(first == serial, || "8 threads differ from 1 thread".into())?;

    // the binary, with the thread count taken from the environment
    let bin = env!("CARGO_BIN_EXE_markovscope");
    let mut files = Vec::new();
    for threads in ["8", "1"] {
        let sub = dir.join(format!("bin-{threads}"));
        std::fs::create_dir_all(&sub).map_err(e)?;
        let status = Command::new(bin)
            .current_dir(&sub)
            .env("MARKOVSCOPE_THREADS", threads)
            .args(["scan", "--count", "500", "--seed", "10", "--out", "scan.jsonl"])
            .output()
            .map_err(e)?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        files.push(std::fs::read(sub.join("scan.jsonl")).map_err(e)?);
    }
    ensure(files[0] == files[1], || "binary output differs between 8 and 1 threads".into())?;
    Ok(format!(
        "{} identical record bytes across runs and thread counts",
        first.len()
    ))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        ("SSA on Haar-induced states", Box::new(c1_ssa)),
        ("Markov states saturate every condition", Box::new(c2_markov_forward)),
        ("self-commutator on Markov states, no saturation on Haar states", Box::new(c3_commutator)),
        ("classical formula for MM†", Box::new(c4_classical)),
        ("GHZ anchor", Box::new(|| c5_ghz(dir.path()))),
        ("conjecture scan, three measures", Box::new(|| c6_scan(dir.path()))),
        ("Petz fixed point", Box::new(c7_petz_fixed_point)),
        ("marginal recovery", Box::new(c8_marginal_recovery)),
        ("Lie-Trotter convergence", Box::new(c9_lie_trotter)),
        ("determinism", Box::new(|| c10_determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
