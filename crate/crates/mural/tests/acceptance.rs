//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if
//! any criterion fails. Run with `cargo test -p mural --test acceptance`.

use std::fs;
use std::path::Path;
use std::time::Instant;

use mural::cli::{cmd_eval, cmd_fit, Common, EvalArgs, FitArgs, ForestFlags};
use mural::eval::experiments::{run_ablation, run_swissroll, Knob, SwissRollExperiment, MEAN_IMPUTATION, MURAL};
use mural::eval::generate::{gen_mixed_clinical, gen_swiss_roll_5d, quantile, ClinicalSpec, MissingnessRecipe, SwissRollConfig};
use mural::eval::spectral::spectral_cluster;
use mural::eval::EvalReport;
use mural::io::{render_schema, write_csv};
use mural::missingness::{detect_mnar, induce_mcar, induce_mnar_threshold, Direction};
use mural::pipeline::{fit_pipeline, mean_imputation_distances, FittedModel, PipelineSettings};
use mural_core::data::Dataset;
use mural_core::distance::{affinity, diffusion, forest_distance_matrix, tree_leaf_distances, Bandwidth, DistanceMatrix};
use mural_core::forest::{
    best_threshold, residual_info_gain, tree_rng, EntropyMode, ForestConfig, MuralForest, NodeKind, SplitSpec, Topology, TreeShape,
};
use mural_core::metrics::{adjusted_rand_index, silhouette};
use mural_core::transport::{brute_force_emd, forest_tswd, tree_wasserstein, CohortDistribution};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_topology(r: &mut ChaCha8Rng, max_leaves: usize) -> Topology {
    let target = r.random_range(2..=max_leaves);
    let mut parents: Vec<Option<usize>> = vec![None];
    let mut weights = vec![0.0];
    let mut leaves = vec![0usize];
    while leaves.len() < target {
        let node = leaves.swap_remove(r.random_range(0..leaves.len()));
        let arity = r.random_range(2..=4).min(target - leaves.len()).max(2);
        for _ in 0..arity {
            leaves.push(parents.len());
            parents.push(Some(node));
            weights.push(if r.random_bool(0.5) { 1.0 } else { r.random_range(0.1..3.0) });
        }
    }
    Topology::new(parents, weights).unwrap()
}

#[allow(clippy::needless_range_loop)]
fn floyd_warshall<T: TreeShape>(tree: &T) -> Vec<Vec<f64>> {
    let n = tree.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        if let Some(p) = tree.parent(i) {
            d[i][p] = tree.edge_weight(i);
            d[p][i] = tree.edge_weight(i);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn random_masses(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut m: Vec<f64> = (0..n).map(|_| if r.random_bool(0.3) { 0.0 } else { r.random::<f64>() }).collect();
    if m.iter().all(|&x| x == 0.0) {
        m[r.random_range(0..n)] = 1.0;
    }
    let s: f64 = m.iter().sum();
    m.iter_mut().for_each(|x| *x /= s);
    m
}

fn distribution(tree: &Topology, leaves: &[usize], leaf_mass: &[f64]) -> CohortDistribution {
    let mut m = vec![0.0; tree.node_count()];
    for (&l, &x) in leaves.iter().zip(leaf_mass) {
        m[l] = x;
    }
    for i in (1..m.len()).rev() {
        let p = tree.parent(i).unwrap();
        m[p] += m[i];
    }
    CohortDistribution::from_masses(tree, m).unwrap()
}

fn margin(report: &EvalReport, metric: &str) -> (f64, f64) {
    let m = report.summary(MURAL, metric).unwrap().mean;
    let b = report.summary(MEAN_IMPUTATION, metric).unwrap().mean;
    (m, b)
}

fn criterion_1() -> Outcome {
    let report = run_swissroll(&SwissRollExperiment::default()).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (metric, need) in [("P@5", 0.15), ("P@10", 0.10), ("P@100", 0.10)] {
        let (m, b) = margin(&report, metric);
        ok &= m - b >= need;
        parts.push(format!("{metric} {m:.3} vs {b:.3} (margin {:+.3}, need {need})", m - b));
    }
    check(ok, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let exp = SwissRollExperiment::default();
    let run = |knob: Knob, values: &[&str]| {
        let values: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        run_ablation(&exp, knob, &values).map_err(|e| e.to_string())
    };
    let stat = |r: &EvalReport, row: &str, metric: &str| {
        let s = r.summary(row, metric).unwrap();
        (s.mean, s.std_dev)
    };
    let trees = run(Knob::Trees, &["10", "100", "500"])?;
    let p: Vec<(f64, f64)> = ["trees=10", "trees=100", "trees=500"].iter().map(|r| stat(&trees, r, "P@5")).collect();
    let trees_ok = p.windows(2).all(|w| w[1].0 >= w[0].0 - w[0].1.max(w[1].1));

    let depth = run(Knob::Depth, &["2", "10"])?;
    let (d2, d10) = (stat(&depth, "depth=2", "P@5").0, stat(&depth, "depth=10", "P@5").0);
    let depth_ok = d10 - d2 >= 0.15;

    let levels = run(Knob::MnarLevels, &["0", "3"])?;
    let (l0, l3) = (stat(&levels, "mnar-levels=0", "P@100").0, stat(&levels, "mnar-levels=3", "P@100").0);
    let levels_ok = l3 >= l0 + 0.10;

    let detail = format!(
        "trees P@5 {:.3}/{:.3}/{:.3} [{}]; depth P@5 2:{d2:.3} 10:{d10:.3} [{}]; mnar-levels P@100 0:{l0:.3} 3:{l3:.3} [{}]",
        p[0].0,
        p[1].0,
        p[2].0,
        if trees_ok { "ok" } else { "fail" },
        if depth_ok { "ok" } else { "fail" },
        if levels_ok { "ok" } else { "fail" },
    );
    check(trees_ok && depth_ok && levels_ok, detail)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let tree = random_topology(&mut r, 32);
        let all = floyd_warshall(&tree);
        let leaves = tree.leaves_dfs();
        let ground = DistanceMatrix::from_fn(leaves.len(), |i, j| all[leaves[i]][leaves[j]]);
        let (mu, nu) = (random_masses(&mut r, leaves.len()), random_masses(&mut r, leaves.len()));
        let closed =
            tree_wasserstein(&tree, &distribution(&tree, &leaves, &mu), &distribution(&tree, &leaves, &nu)).map_err(|e| e.to_string())?;
        let emd = brute_force_emd(&ground, &mu, &nu).map_err(|e| e.to_string())?;
        worst = worst.max((closed - emd).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-9 && secs <= 30.0, format!("max |TW - EMD| = {worst:.2e} over 200 trees in {secs:.2}s"))
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let triples = 10_000;
    let mut failures = Vec::new();

    let mut bad = 0;
    for _ in 0..triples / 100 {
        let tree = random_topology(&mut r, 32);
        let ld = tree_leaf_distances(&tree);
        let leaves = ld.leaves().to_vec();
        for _ in 0..100 {
            let [a, b, c] = [0; 3].map(|_| leaves[r.random_range(0..leaves.len())]);
            bad += usize::from(ld.get(a, b) != ld.get(b, a) || ld.get(a, a) != 0.0 || ld.get(a, c) > ld.get(a, b) + ld.get(b, c) + 1e-9);
        }
    }
    if bad > 0 {
        failures.push(format!("tree {bad}"));
    }

    let sample = gen_mixed_clinical(300, &ClinicalSpec::standard(3), 4).map_err(|e| e.to_string())?;
    let model = fit_pipeline(&sample.dataset, &settings(30, 4)).map_err(|e| e.to_string())?;
    let dm = forest_distance_matrix(&model.forest, model.forest.training_assignments()).map_err(|e| e.to_string())?;
    let mut bad = 0;
    for _ in 0..triples {
        let [a, b, c] = [0; 3].map(|_| r.random_range(0..dm.n()));
        bad += usize::from(dm.get(a, b) != dm.get(b, a) || dm.get(a, a) != 0.0 || dm.get(a, c) > dm.get(a, b) + dm.get(b, c) + 1e-9);
    }
    if bad > 0 {
        failures.push(format!("D_M {bad}"));
    }

    let mut bad = 0;
    for _ in 0..triples / 10 {
        let tree = random_topology(&mut r, 32);
        let leaves = tree.leaves_dfs();
        for _ in 0..10 {
            let ms: Vec<CohortDistribution> = (0..3).map(|_| distribution(&tree, &leaves, &random_masses(&mut r, leaves.len()))).collect();
            let w = |a: usize, b: usize| tree_wasserstein(&tree, &ms[a], &ms[b]).unwrap();
            bad += usize::from(w(0, 1) != w(1, 0) || w(0, 0) != 0.0 || w(0, 1) < 0.0 || w(0, 2) > w(0, 1) + w(1, 2) + 1e-9);
        }
    }
    if bad > 0 {
        failures.push(format!("TW {bad}"));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{triples} triples each for tree distances, D_M and TW")
        } else {
            format!("violations: {}", failures.join(", "))
        },
    )
}

/// Midpoints between consecutive distinct observed values, scored with
/// `residual_info_gain`.
fn exhaustive(d: &Dataset, rows: &[usize], var: usize, residual: &[usize], min_leaf: usize) -> Option<(f64, f64)> {
    let observed: Vec<usize> = rows.iter().copied().filter(|&r| d.value(r, var).is_some()).collect();
    let mut values: Vec<f64> = observed.iter().map(|&r| d.value(r, var).unwrap()).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut best: Option<(f64, f64)> = None;
    for w in values.windows(2) {
        let t = w[0] + (w[1] - w[0]) * 0.5;
        let (left, right): (Vec<usize>, Vec<usize>) = observed.iter().partition(|&&r| d.value(r, var).unwrap() <= t);
        if left.len() < min_leaf || right.len() < min_leaf {
            continue;
        }
        let g = residual_info_gain(d, &observed, &[left, right], residual, EntropyMode::MarginalSum, &mut tree_rng(0, 0)).unwrap();
        if best.is_none_or(|(_, bg)| g > bg + 1e-12) {
            best = Some((t, g));
        }
    }
    best
}

fn gappy_clinical(n: usize, seed: u64) -> Dataset {
    let d = gen_mixed_clinical(n, &ClinicalSpec::standard(3), seed).unwrap().dataset;
    induce_mcar(&d, 6, 0.15, seed).unwrap()
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mut worst = f64::INFINITY;
    for i in 0..10_000u64 {
        let d = gappy_clinical(80, i % 50);
        let mut rows: Vec<usize> = (0..80).collect();
        rows.shuffle(&mut r);
        rows.truncate(r.random_range(4..=80));
        let mut partition = vec![Vec::new(); r.random_range(2..5)];
        for &row in &rows {
            let k = r.random_range(0..partition.len());
            partition[k].push(row);
        }
        let mode = match r.random_range(0..4) {
            0 => EntropyMode::MarginalSum,
            dims => EntropyMode::JointSubset { dims },
        };
        let mut residual: Vec<usize> = (0..8).filter(|_| r.random_bool(0.6)).collect();
        if residual.is_empty() {
            residual.push(r.random_range(0..8));
        }
        let g = residual_info_gain(&d, &rows, &partition, &residual, mode, &mut r).map_err(|e| e.to_string())?;
        worst = worst.min(g);
    }
    let mut mismatches = 0;
    let instances = 2000;
    for i in 0..instances {
        let n = r.random_range(2..=50);
        let d = gappy_clinical(n, 1000 + i);
        let var = [0usize, 1, 6][r.random_range(0..3)];
        let residual: Vec<usize> = (0..8).filter(|&v| v != var).collect();
        let rows: Vec<usize> = (0..n).collect();
        let min_leaf = r.random_range(1..6);
        let cfg = ForestConfig { min_leaf, ..Default::default() };
        let got = best_threshold(&d, &rows, var, &residual, &cfg, &mut tree_rng(0, 0));
        let agree = match (exhaustive(&d, &rows, var, &residual, min_leaf), got) {
            (None, Err(_)) => true,
            (Some((t, g)), Ok(c)) => c.threshold == t && (c.gain - g).abs() < 1e-9,
            _ => false,
        };
        mismatches += usize::from(!agree);
    }
    check(
        worst >= -1e-9 && mismatches == 0,
        format!("min gain {worst:.3e} over 10000 instances; best_threshold mismatches {mismatches}/{instances}"),
    )
}

/// Returns the first structural violation in `forest` fitted on `d`.
fn scan(forest: &MuralForest, d: &Dataset) -> Option<String> {
    let cfg = forest.config();
    let gappy = |v: usize| d.column(v).mask().any();
    for (t, tree) in forest.trees().iter().enumerate() {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
        for i in (0..tree.len()).rev() {
            let node = tree.node(i);
            let fail = |what: &str| Some(format!("tree {t} node {i}: {what}"));
            match &node.kind {
                NodeKind::Leaf { rows: r } => {
                    if node.n_rows < cfg.min_leaf || r.len() != node.n_rows {
                        return fail("leaf size");
                    }
                    rows[i] = r.clone();
                }
                NodeKind::Internal { split, children } => {
                    if node.depth >= cfg.max_depth || children.len() != split.arity() {
                        return fail("depth or arity");
                    }
                    if matches!(split, SplitSpec::MnarFourWay { .. } | SplitSpec::BinaryFourWay { .. }) && children.len() != 4 {
                        return fail("four-way arity");
                    }
                    if node.depth < cfg.mnar_restrict_levels && (gappy(split.var()) || split.aux_var().is_some_and(gappy)) {
                        return fail("MNAR split above the restriction depth");
                    }
                    let sizes: Vec<usize> = children.iter().map(|&c| tree.node(c).n_rows).collect();
                    let mut all = Vec::new();
                    for (pos, &c) in children.iter().enumerate() {
                        if rows[c].iter().any(|&r| split.child_position(|v| d.value(r, v), &sizes) != pos) {
                            return fail("row routed to the wrong child");
                        }
                        all.extend_from_slice(&rows[c]);
                    }
                    all.sort_unstable();
                    let len = all.len();
                    all.dedup();
                    if all.len() != len || len != node.n_rows {
                        return fail("children do not partition the node");
                    }
                    rows[i] = all;
                }
            }
        }
        if rows[0] != (0..d.n_rows()).collect::<Vec<_>>() {
            return Some(format!("tree {t}: root does not hold every row"));
        }
    }
    None
}

fn settings(trees: usize, seed: u64) -> PipelineSettings {
    PipelineSettings { forest: ForestConfig { n_trees: trees, seed, ..Default::default() }, ..Default::default() }
}

fn scan_model(model: &FittedModel, raw: &Dataset) -> Option<String> {
    let prepared = model.prepare(raw).unwrap();
    scan(&model.forest, &prepared)
}

fn criterion_6() -> Outcome {
    let mut forests = 0;
    let sample = gen_swiss_roll_5d(&SwissRollConfig::default(), 0).map_err(|e| e.to_string())?;
    let raw = MissingnessRecipe::default().apply(&sample, 0).map_err(|e| e.to_string())?;
    let model = fit_pipeline(&raw, &settings(100, 0)).map_err(|e| e.to_string())?;
    if let Some(v) = scan_model(&model, &raw) {
        return Err(format!("swiss roll default: {v}"));
    }
    forests += 1;
    for seed in 0..8 {
        let raw = gappy_clinical(400, seed);
        let mut s = settings(20, seed);
        match seed % 4 {
            1 => s.forest.entropy_mode = EntropyMode::JointSubset { dims: 2 },
            2 => {
                s.forest.mnar_restrict_levels = 0;
                s.forest.min_leaf = 12;
            }
            3 => {
                s.forest.max_depth = 4;
                s.forest.n_candidate_vars = 3;
            }
            _ => {}
        }
        let model = fit_pipeline(&raw, &s).map_err(|e| e.to_string())?;
        if let Some(v) = scan_model(&model, &raw) {
            return Err(format!("clinical seed {seed}: {v}"));
        }
        forests += 1;
    }
    Ok(format!("{forests} fitted forests pass the scan"))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_7() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sample = gen_swiss_roll_5d(&SwissRollConfig { n: 600, ..Default::default() }, 7).map_err(|e| e.to_string())?;
    let raw = MissingnessRecipe::default().apply(&sample, 7).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    write_csv(&raw, &mut csv).map_err(|e| e.to_string())?;
    let data = tmp.path().join("data.csv");
    let schema = tmp.path().join("schema.txt");
    fs::write(&data, csv).unwrap();
    fs::write(&schema, render_schema(raw.schema())).unwrap();
    let fit_out = tmp.path().join("fit");
    let eval_out = tmp.path().join("eval");

    let run = |threads: usize| -> Result<Vec<(String, Vec<u8>)>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let fit = FitArgs {
                data: Some(data.clone()),
                schema: Some(schema.clone()),
                forest: ForestFlags { trees: Some(40), seed: Some(7), ..Default::default() },
                common: Common { config: None, out: Some(fit_out.clone()) },
            };
            cmd_fit(&fit, &mut std::io::sink()).map_err(|e| e.to_string())?;
            let eval = EvalArgs {
                experiment: Some("ablation".into()),
                knob: Some("trees".into()),
                values: Some(vec!["5".into(), "20".into()]),
                seeds: Some(3),
                n: Some(400),
                timing: false,
                forest: ForestFlags::default(),
                common: Common { config: None, out: Some(eval_out.clone()) },
            };
            cmd_eval(&eval, &mut std::io::sink()).map_err(|e| e.to_string())?;
            let mut files = snapshot(&fit_out);
            files.extend(snapshot(&eval_out));
            fs::remove_dir_all(&fit_out).unwrap();
            fs::remove_dir_all(&eval_out).unwrap();
            Ok(files)
        })
    };
    let first = run(1)?;
    let again = run(1)?;
    let wide = run(4)?;
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    check(
        first == again && first == wide,
        format!("{} artifacts ({}) identical across reruns and 1 vs 4 threads", first.len(), names.join(", ")),
    )
}

fn random_halves(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut rng(seed ^ 0x5eed));
    let mut b = rows.split_off(n / 2);
    rows.sort_unstable();
    b.sort_unstable();
    (rows, b)
}

fn criterion_8() -> Outcome {
    let seeds = 20;
    let mut wins = 0;
    for seed in 0..seeds {
        let sample = gen_swiss_roll_5d(&SwissRollConfig { n: 1000, ..Default::default() }, seed).map_err(|e| e.to_string())?;
        let raw = MissingnessRecipe::default().apply(&sample, seed).map_err(|e| e.to_string())?;
        let model = fit_pipeline(&raw, &settings(100, seed)).map_err(|e| e.to_string())?;
        let a = model.forest.training_assignments();
        let cut = quantile(&sample.t, 0.5);
        let (low, high): (Vec<usize>, Vec<usize>) = (0..raw.n_rows()).partition(|&i| sample.t[i] <= cut);
        let (ra, rb) = random_halves(raw.n_rows(), seed);
        let structured = forest_tswd(&model.forest, a, &low, &high).map_err(|e| e.to_string())?.mean;
        let random = forest_tswd(&model.forest, a, &ra, &rb).map_err(|e| e.to_string())?.mean;
        wins += usize::from(structured > random);
    }
    let mut ratios = Vec::new();
    for seed in 0..5 {
        let sample = gen_mixed_clinical(600, &ClinicalSpec::standard(2), seed).map_err(|e| e.to_string())?;
        let model = fit_pipeline(&sample.dataset, &settings(100, seed)).map_err(|e| e.to_string())?;
        let a = model.forest.training_assignments();
        let (g0, g1): (Vec<usize>, Vec<usize>) = (0..sample.labels.len()).partition(|&i| sample.labels[i] == 0);
        let (ra, rb) = random_halves(sample.labels.len(), seed);
        let group = forest_tswd(&model.forest, a, &g0, &g1).map_err(|e| e.to_string())?.mean;
        let random = forest_tswd(&model.forest, a, &ra, &rb).map_err(|e| e.to_string())?.mean;
        ratios.push(group / random);
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        wins * 100 >= 95 * seeds as usize && min_ratio >= 2.0,
        format!("swiss roll structured > random in {wins}/{seeds} seeds; clinical group/random ratio min {min_ratio:.2} over 5 seeds"),
    )
}

fn criterion_9() -> Outcome {
    let seeds = 10u64;
    let (mut aris, mut sil_wins) = (Vec::new(), 0);
    for seed in 0..seeds {
        let sample = gen_mixed_clinical(400, &ClinicalSpec::standard(4), seed).map_err(|e| e.to_string())?;
        let model = fit_pipeline(&sample.dataset, &settings(100, seed)).map_err(|e| e.to_string())?;
        let dm = forest_distance_matrix(&model.forest, model.forest.training_assignments()).map_err(|e| e.to_string())?;
        let cluster = |d: &DistanceMatrix| -> Result<(Vec<usize>, f64), String> {
            let p = diffusion(&affinity(d, Bandwidth::default()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let labels = spectral_cluster(&p, 4, seed).map_err(|e| e.to_string())?;
            let s = silhouette(d, &labels).map_err(|e| e.to_string())?;
            Ok((labels, s))
        };
        let (labels, sil) = cluster(&dm)?;
        aris.push(adjusted_rand_index(&labels, &sample.labels).map_err(|e| e.to_string())?);
        let base = mean_imputation_distances(&sample.dataset).map_err(|e| e.to_string())?;
        let (_, base_sil) = cluster(&base)?;
        sil_wins += usize::from(sil >= base_sil);
    }
    let mean_ari = aris.iter().sum::<f64>() / aris.len() as f64;
    let min_ari = aris.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        mean_ari >= 0.8 && sil_wins * 10 >= 8 * seeds as usize,
        format!("ARI mean {mean_ari:.3} (min {min_ari:.3}); MURAL silhouette >= baseline in {sil_wins}/{seeds} seeds"),
    )
}

fn criterion_10() -> Outcome {
    let trials = 100u64;
    let (mut threshold_hits, mut coin_hits) = (0, 0);
    for seed in 0..trials {
        let spec = ClinicalSpec { mnar_rules: Vec::new(), ..ClinicalSpec::standard(2) };
        let complete = gen_mixed_clinical(1000, &spec, seed).map_err(|e| e.to_string())?.dataset;
        let values: Vec<f64> = (0..1000).map(|r| complete.value(r, 1).unwrap()).collect();
        let d = induce_mnar_threshold(&complete, 1, quantile(&values, 0.8), Direction::Above).map_err(|e| e.to_string())?;
        let d = induce_mcar(&d, 2, 0.2, seed + 10_000).map_err(|e| e.to_string())?;
        let p = detect_mnar(&d, 0.05).map_err(|e| e.to_string())?;
        threshold_hits += usize::from(p.is_mnar(1) && p.entry(1).unwrap().p_value <= 0.05);
        coin_hits += usize::from(p.is_mnar(2));
    }
    check(
        threshold_hits >= 99 && coin_hits <= 8,
        format!("threshold-masked flagged {threshold_hits}/{trials}; coin-masked flagged {coin_hits}/{trials}"),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id}: PASS  {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id}: FAIL  {detail} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
