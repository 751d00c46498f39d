//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rwi::bounds::{k0_bound, theorem_bound, DEFAULT_M};
use rwi::graph::DigraphView;
use rwi::harness::{run_experiment, run_lemma_check, ExperimentConfig, ExperimentResult, Load};
use rwi::output::{emit_csv, emit_json, experiment_tables};
use rwi::rng::derive_seeds;
use rwi::structure::oracle::{census_oracle, compute_s_oracle, ScanOrder};
use rwi::structure::{census, compute_s, NeighborCounting};
use rwi::table::{ScriptedChoices, TableConfig};
use rwi::{BinId, Item, Table};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = out.pass && in_time;
    println!(
        "{} {id} {name}: {} [{:.2}s / limit {}s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    if !in_time {
        println!("     {id}: over time limit");
    }
    pass
}

fn lemma_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut runs = 0;
    let mut bad = Vec::new();
    let mut capped = 0;
    let mut walks = 0u64;
    for cfg_idx in 0..50 {
        let n = rng.gen_range(10..=200usize);
        let d = rng.gen_range(1..=8usize);
        let m = rng.gen_range(0..d * n);
        let seeds = derive_seeds(rng.gen(), 20);
        let config = ExperimentConfig::new(n, d, Load::Items(m), seeds.clone());
        for seed in seeds {
            runs += 1;
            match run_lemma_check(&config, seed) {
                Ok(r) => {
                    capped += r.stopped_by_cap as usize;
                    walks += r.walks.walks;
                    if !r.verdicts.all_hold() {
                        bad.push(format!(
                            "config {cfg_idx} (n={n}, d={d}, m={m}) seed {seed}: {:?}",
                            r.verdicts.failures()
                        ));
                    }
                }
                Err(e) => bad.push(format!("config {cfg_idx} seed {seed}: {e}")),
            }
        }
    }
    for b in bad.iter().take(5) {
        println!("     1: {b}");
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} of {runs} runs hold every invariant ({walks} walks, {capped} stopped at walk cap)",
            runs - bad.len()
        ),
    )
}

fn random_view(rng: &mut ChaCha8Rng) -> (DigraphView, usize) {
    let n = rng.gen_range(2..=1000usize);
    let d = rng.gen_range(1..=8usize);
    let fill: f64 = rng.gen_range(0.05..1.0);
    let m = ((d * n) as f64 * fill) as usize;
    let arcs: Vec<(BinId, BinId)> = (0..m)
        .map(|_| {
            let u = rng.gen_range(0..n as BinId);
            let v = loop {
                let v = rng.gen_range(0..n as BinId);
                if v != u {
                    break v;
                }
            };
            (u, v)
        })
        .collect();
    (DigraphView::from_oriented_edges(n, &arcs), d)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let mut mismatches = Vec::new();
    let mut nonempty = 0;
    let mut layered = 0;
    for g in 0..200 {
        let (view, d) = random_view(&mut rng);
        let counting = if g % 4 == 3 {
            NeighborCounting::Multiplicity
        } else {
            NeighborCounting::Distinct
        };
        let s = compute_s(&view, d, counting);
        nonempty += !s.is_empty() as usize;
        layered += !s.layers().is_empty() as usize;
        let members = s.members();
        let up = compute_s_oracle(&view, d, counting, ScanOrder::Ascending);
        let down = compute_s_oracle(&view, d, counting, ScanOrder::Descending);
        if members != up || members != down {
            mismatches.push(format!("graph {g}: closure differs"));
            continue;
        }
        let report = census(&view.graph, &s);
        let member_set: BTreeSet<BinId> = members.iter().copied().collect();
        let base: BTreeSet<BinId> = s.base().iter().copied().collect();
        let dfs = census_oracle(view.vertex_count(), view.graph.edges(), &member_set, &base);
        let same = dfs.len() == report.components.len()
            && dfs.iter().zip(&report.components).all(|(o, c)| {
                o.vertices == c.vertices
                    && o.edge_count == c.edge_count
                    && o.ell == c.ell
                    && o.cycle_count == c.cycle_count
                    && o.vertices.len() == c.size
            });
        if !same {
            mismatches.push(format!("graph {g}: census differs"));
        }
    }
    for m in mismatches.iter().take(5) {
        println!("     2: {m}");
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} of 200 graphs match ({nonempty} with non-empty S, {layered} with T-layers)",
            200 - mismatches.len()
        ),
    )
}

fn theorem_regime() -> Outcome {
    let (n, d, eps) = (2000, 2048, 0.70);
    let config = ExperimentConfig::new(n, d, Load::Epsilon(eps), vec![1, 2, 3]).with_probes(1000);
    let result = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let a = &result.aggregate;
    let bound = theorem_bound(eps, DEFAULT_M);
    let size_cap = 1usize.max(k0_bound(n, eps, d, DEFAULT_M).ceil() as usize + 2);
    let pass = a.walks.mean <= bound
        && a.max_component_size <= size_cap
        && a.multi_cycle_components == 0
        && a.hard_verdicts_pass;
    outcome(
        pass,
        format!(
            "{} insertions, mean r = {:.6} (bound {bound:.4}), max component {} (cap {size_cap}), \
             multi-cycle {}, hard verdicts {}",
            a.walks.insertions,
            a.walks.mean,
            a.max_component_size,
            a.multi_cycle_components,
            a.hard_verdicts_pass
        ),
    )
}

fn stress_config() -> ExperimentConfig {
    ExperimentConfig::new(100_000, 8, Load::Epsilon(0.2), (1..=10).collect()).with_probes(2000)
}

fn stress_regime(slot: &mut Option<ExperimentResult>) -> Outcome {
    let config = stress_config();
    let result = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    for r in &result.per_seed {
        let c = &r.census;
        let rows: Vec<String> = c
            .bound_rows
            .iter()
            .take(4)
            .map(|row| format!("k={}: {} vs {:.3e}", row.k, row.observed, row.bound))
            .collect();
        println!(
            "     4: seed {}: mean r {:.5}, max r {}, walk fraction {:.5}, |S| {}, components {}, \
             max size {}, multi-cycle {}; {}",
            r.seed,
            r.walks.mean,
            r.walks.max_steps,
            r.walks.walk_fraction,
            c.s_size,
            c.component_count,
            c.max_size,
            c.multi_cycle_count,
            rows.join(", ")
        );
    }
    let a = &result.aggregate;
    let pass = a.hard_verdicts_pass && result.failures.is_empty();
    let detail = format!(
        "{} seeds, mean r {:.5}, max r {}, walk fraction {:.5}, multi-cycle {}, hard verdicts {}",
        a.seeds,
        a.walks.mean,
        a.walks.max_steps,
        a.walks.walk_fraction,
        a.multi_cycle_components,
        a.hard_verdicts_pass
    );
    *slot = Some(result);
    outcome(pass, detail)
}

fn probe_study(result: Option<&ExperimentResult>) -> Outcome {
    let Some(result) = result else {
        return outcome(false, "no stress-regime result");
    };
    let a = &result.aggregate;
    let mut checked = 0;
    let mut over = Vec::new();
    for b in a.probe_buckets.values().filter(|b| b.samples >= 100) {
        checked += 1;
        if b.mean_within > 3.0 * 2.0 * b.k as f64 {
            over.push(format!("k={} mean {:.3}", b.k, b.mean_within));
        }
    }
    let samples: u64 = a.probe_buckets.values().map(|b| b.samples).sum();
    let tree_samples: u64 = a.probe_buckets.values().map(|b| b.tree_samples).sum();
    let worst = a
        .probe_buckets
        .values()
        .filter(|b| b.samples >= 100)
        .map(|b| {
            format!(
                "k={}: mean within {:.3}, max {}",
                b.k, b.mean_within, b.max_within
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(
        over.is_empty() && a.tree_walk_violations == 0,
        format!(
            "{samples} probes ({tree_samples} from trees), {checked} buckets with >= 100 samples \
             [{worst}], over 6k: {:?}, tree violations {}",
            over, a.tree_walk_violations
        ),
    )
}

fn render(result: &ExperimentResult) -> (Vec<u8>, Vec<u8>) {
    let mut json = Vec::new();
    emit_json(result, None, &mut json).expect("json to memory");
    let mut csv = Vec::new();
    emit_csv(&experiment_tables(result), None, &mut csv).expect("csv to memory");
    (json, csv)
}

fn reproducibility(first: Option<&ExperimentResult>) -> Outcome {
    let Some(first) = first else {
        return outcome(false, "no stress-regime result");
    };
    let second = match run_experiment(&stress_config()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (j1, c1) = render(first);
    let (j2, c2) = render(&second);
    outcome(
        j1 == j2 && c1 == c2,
        format!(
            "JSON {} bytes identical: {}, CSV {} bytes identical: {}",
            j1.len(),
            j1 == j2,
            c1.len(),
            c1 == c2
        ),
    )
}

fn hand_trace() -> Outcome {
    let mut table = Table::new(TableConfig::new(3, 1, 0)).expect("valid config");
    table.set_flip_log(true);
    let mut script = ScriptedChoices::new().d_heads([0, 1, 0]).walk_starts([0]);
    let mut steps = Vec::new();
    for item in [Item::new(1, 0, 1), Item::new(2, 1, 2), Item::new(3, 0, 1)] {
        match table.insert_with(item, &mut script) {
            Ok(o) => steps.push(o.walk_steps),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    // Bins are reported 1-based here.
    let placement: Vec<(usize, Vec<u32>)> = (0..3)
        .map(|b| (b as usize + 1, table.residents(b).to_vec()))
        .collect();
    let log = table.graph().flip_log().unwrap_or(&[]);
    let saturated_heads = log.iter().filter(|f| f.old_head_saturated).count();
    let pass = steps == [0, 0, 2]
        && placement == [(1, vec![3]), (2, vec![1]), (3, vec![2])]
        && log.len() == 2
        && saturated_heads == 2;
    outcome(
        pass,
        format!(
            "r = {steps:?}, placement {placement:?}, {} flips ({saturated_heads} with saturated old head)",
            log.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    all &= timed(
        1,
        "deterministic lemma suite",
        Duration::from_secs(30),
        lemma_suite,
    );
    all &= timed(
        2,
        "oracle equivalence",
        Duration::from_secs(60),
        oracle_equivalence,
    );
    all &= timed(
        3,
        "theorem regime",
        Duration::from_secs(300),
        theorem_regime,
    );
    let mut stress = None;
    all &= timed(4, "stress regime", Duration::from_secs(10 * 120), || {
        stress_regime(&mut stress)
    });
    all &= timed(5, "probe-walk study", Duration::from_secs(120), || {
        probe_study(stress.as_ref())
    });
    all &= timed(6, "reproducibility", Duration::from_secs(10 * 120), || {
        reproducibility(stress.as_ref())
    });
    all &= timed(7, "hand trace", Duration::from_secs(1), hand_trace);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
