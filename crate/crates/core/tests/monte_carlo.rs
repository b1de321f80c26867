//! Seeded Monte Carlo checks of the individual building blocks at moderate n.

use perturbed_embed_core::almost_spanning::default_retry_budget;
use perturbed_embed_core::graph::{generate_gnp, generate_gnp_with, min_degree};
use perturbed_embed_core::pipeline::{
    embed_spanning_tree, find_template_paths, stage_embed_forest, stage_fix_endpoints, LedgerRow, PipelineConfig,
    SpecialPair, Template,
};
use perturbed_embed_core::regularity::{
    build_partition, certify_dense, certify_super_regular, move_ok_level, subset_inherits, CertifyMode, ClusterId,
    RegularityParams, Verdict,
};
use perturbed_embed_core::rng::{self, tag};
use perturbed_embed_core::stars::{check_hall_condition, find_star_packing, HallMode, StarDemand};
use perturbed_embed_core::tree::{extract_bare_paths, generate_bounded_tree};
use perturbed_embed_core::{embed_forest_greedy, Graph, PerturbationPlan, Tree, TreeShape, VertexSet};
use rand::seq::SliceRandom;
use rand::Rng;

const SAMPLED: CertifyMode = CertifyMode::Sampled { budget: 500 };

fn dense_host(n: usize, p: f64, alpha: f64, seed: u64) -> Graph {
    let mut r = rng::stream(seed, &[tag::HOST]);
    loop {
        let g = generate_gnp_with(n, p, &mut r).unwrap();
        if min_degree(&g).unwrap() as f64 >= alpha * n as f64 {
            return g;
        }
    }
}

fn halves(n: usize) -> (VertexSet, VertexSet) {
    (VertexSet::from_iter(n, 0..n / 2), VertexSet::from_iter(n, n / 2..n))
}

#[test]
fn random_half_density_pairs_certify() {
    let (x, y) = halves(100);
    let passes = (0..100)
        .filter(|&s| {
            let g = generate_gnp(100, 0.5, s).unwrap();
            certify_dense(&g, &x, &y, 0.25, 0.2, SAMPLED, &mut rng::stream(s, &[1])).unwrap().passed()
        })
        .count();
    assert!(passes >= 99, "{passes}");
}

#[test]
fn dense_random_graph_partitions_certify() {
    let params = RegularityParams::new(0.25, 0.15, 500).unwrap();
    let n = 400;
    let passes = (0..50)
        .filter(|&s| {
            let g = dense_host(n, 0.5, 0.4, s);
            match build_partition(&g, 0.4, n / 2, params, &mut rng::stream(s, &[tag::PARTITION])).unwrap() {
                Ok(p) => p.recertify(&g, SAMPLED, &mut rng::stream(s, &[2])).unwrap().iter().all(Verdict::passed),
                Err(_) => false,
            }
        })
        .count();
    assert!(passes >= 48, "{passes} of 50");
}

#[test]
fn half_size_random_subsets_inherit() {
    // At p = 1/2 the worst 20 x 20 block of a 100 x 100 pair already drops
    // below 0.3, so the parent pair needs a higher density to pass.
    let (x, y) = halves(200);
    let mut inherited = 0;
    for s in 0..100 {
        let g = generate_gnp(200, 0.8, 1000 + s).unwrap();
        let mut r = rng::stream(s, &[3]);
        assert!(certify_dense(&g, &x, &y, 0.2, 0.3, SAMPLED, &mut r).unwrap().passed());
        if subset_inherits(&g, &x, &y, (50, 50), 0.3, 0.3, SAMPLED, &mut r).unwrap().passed() {
            inherited += 1;
        }
    }
    assert!(inherited >= 95, "{inherited}");
}

#[test]
fn planted_low_degree_fringe_fails_on_the_worst_subset() {
    // A fifth of x sees y with density 0.05, the rest with density 0.6.
    let n = 200;
    let (x, y) = halves(n);
    let mut r = rng::stream(9, &[]);
    let mut edges = Vec::new();
    for u in 0..n / 2 {
        let p = if u < n / 10 { 0.05 } else { 0.6 };
        edges.extend((n / 2..n).filter(|_| r.gen::<f64>() < p).map(|v| (u, v)));
    }
    let g = Graph::from_edges(n, edges).unwrap();
    // The whole pair is dense, but the fringe at ε = 0.2 is the worst subset.
    let fringe = VertexSet::from_iter(n, 0..n / 10);
    let d = g.density(&fringe, &y).unwrap();
    assert!(d < 0.15, "{d}");
    match certify_dense(&g, &x, &y, 0.2, 0.15, SAMPLED, &mut rng::stream(1, &[])).unwrap() {
        Verdict::Density(c) => assert!(c.reverify(&g, &x, &y, 0.2, 0.15)),
        v => panic!("expected a density counterexample, got {v:?}"),
    }
}

#[test]
fn merged_dense_pairs_keep_density_over_r() {
    // r pairs (X_j, Y) with different densities, each (0.3, 0.3)-dense;
    // their union on the X side is (0.3, 0.3/r)-dense.
    let (r, sx, sy) = (3, 40, 60);
    let n = r * sx + sy;
    let y = VertexSet::from_iter(n, r * sx..n);
    for s in 0..20 {
        let mut g_rng = rng::stream(s, &[6]);
        let mut edges = Vec::new();
        for (j, p) in [0.95, 0.75, 0.65].into_iter().enumerate() {
            for u in j * sx..(j + 1) * sx {
                edges.extend((r * sx..n).filter(|_| g_rng.gen::<f64>() < p).map(|v| (u, v)));
            }
        }
        let g = Graph::from_edges(n, edges).unwrap();
        let mut c = rng::stream(s, &[7]);
        for j in 0..r {
            let xj = VertexSet::from_iter(n, j * sx..(j + 1) * sx);
            assert!(certify_dense(&g, &xj, &y, 0.3, 0.3, SAMPLED, &mut c).unwrap().passed(), "seed {s}, part {j}");
        }
        let merged = VertexSet::from_iter(n, 0..r * sx);
        let delta = perturbed_embed_core::regularity::combine_delta(0.3, r as f64);
        assert!(certify_dense(&g, &merged, &y, 0.3, delta, SAMPLED, &mut c).unwrap().passed(), "seed {s}");
    }
}

#[test]
fn large_forest_into_sparse_random_graph() {
    let (n, m) = (1000, 800);
    let mut ok = 0;
    for s in 0..50 {
        let t = generate_bounded_tree(m, 3, TreeShape::UniformAttachment, &mut rng::stream(s, &[tag::TREE])).unwrap();
        let host = generate_gnp(n, 20.0 / n as f64, 7000 + s).unwrap();
        let f = t.as_forest();
        if embed_forest_greedy(&f, &host, &VertexSet::full(n), &mut rng::stream(s, &[1]), default_retry_budget(n))
            .is_ok()
        {
            ok += 1;
        }
    }
    assert!(ok >= 45, "{ok} of 50");
}

#[test]
fn cross_degree_between_random_centres_and_leaf_slots() {
    // |B| = λn free vertices, |A| = λn/Δ centres, both uniformly random and
    // disjoint; the smallest G-degree from A into B should reach λαn/(2Δ).
    let (n, alpha, lambda, delta) = (500, 0.35, 0.2, 3.0);
    let beta_n = lambda * alpha / (2.0 * delta) * n as f64;
    let host = dense_host(n, 0.5, alpha, 17);
    let mut r = rng::stream(4, &[]);
    let b_size = (lambda * n as f64) as usize;
    let a_size = (b_size as f64 / delta) as usize;
    let good = (0..1000)
        .filter(|_| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut r);
            let b = VertexSet::from_iter(n, perm[..b_size].iter().copied());
            perm[b_size..b_size + a_size].iter().all(|&a| host.degree_into(a, &b) as f64 >= beta_n)
        })
        .count();
    assert!(good >= 990, "{good}");
}

fn path_tree(n: usize) -> Tree {
    Tree::from_parents((0..n).map(|v: usize| v.checked_sub(1)).collect()).unwrap()
}

#[test]
fn path_forest_sizes_follow_the_decomposition() {
    let (n, k) = (500, 9);
    let d = extract_bare_paths(&path_tree(n), k).unwrap();
    let f = d.forest(&path_tree(n));
    assert_eq!(f.len(), n - d.paths.len() * (k - 1));
    assert_eq!(d.special_pairs.len(), d.paths.len());
    let chosen = d.choose(n / (2 * (k - 1)), &mut rng::stream(0, &[]));
    assert_eq!(chosen.forest(&path_tree(n)).len(), n - 31 * 8);
}

struct Stage2 {
    host: Graph,
    tree: Tree,
    partition: perturbed_embed_core::regularity::ClusterPartition,
}

fn stage2(n: usize, s: u64) -> Stage2 {
    let host = dense_host(n, 0.5, 0.35, s);
    let tree = generate_bounded_tree(n, 3, TreeShape::Subdivided, &mut rng::stream(s, &[tag::TREE])).unwrap();
    let params = RegularityParams::new(0.25, 0.15, 200).unwrap();
    let partition =
        build_partition(&host, 0.35, n / 2, params, &mut rng::stream(s, &[tag::PARTITION])).unwrap().unwrap();
    Stage2 { host, tree, partition }
}

#[test]
fn free_vertex_occupancy_within_five_sigma() {
    let n = 500;
    let mut inside = 0;
    for s in 0..100 {
        let st = stage2(n, s);
        let d = extract_bare_paths(&st.tree, 9).unwrap().choose(n / 16, &mut rng::stream(s, &[1]));
        let r2 = generate_gnp(n, 30.0 / n as f64, 100 + s).unwrap();
        let f = stage_embed_forest(&st.tree, &d, &r2, &st.partition, 10 * n, &mut rng::stream(s, &[2]));
        if f.is_ok_and(|f| f.occupancy.outside_five_sigma == 0) {
            inside += 1;
        }
    }
    assert!(inside >= 95, "{inside}");
}

#[test]
fn fixed_endpoints_stay_super_regular_at_move_constants() {
    let n = 500;
    let mut certified = 0;
    for s in 0..50 {
        let st = stage2(n, s);
        let d = extract_bare_paths(&st.tree, 9).unwrap().choose(n / 16, &mut rng::stream(s, &[1]));
        let r2 = generate_gnp(n, 30.0 / n as f64, 100 + s).unwrap();
        let r3 = generate_gnp(n, 20.0 / n as f64, 200 + s).unwrap();
        let Ok(mut f) = stage_embed_forest(&st.tree, &d, &r2, &st.partition, 10 * n, &mut rng::stream(s, &[2])) else {
            continue;
        };
        let Ok(out) = stage_fix_endpoints(
            &f.pairs,
            &mut f.routes,
            &st.host,
            &r3,
            &st.partition,
            &f.clusters,
            &mut rng::stream(s, &[3]),
        ) else {
            continue;
        };
        let p = st.partition.params;
        let level = move_ok_level(p.epsilon, p.delta / 2.0, st.partition.rho, 9);
        let all = st.partition.ids().all(|c| {
            let (x, w) = (&out.clusters.x[c.index()], &out.clusters.w[c.partner().index()]);
            x.is_empty()
                || certify_super_regular(&st.host, x, w, level.epsilon, level.delta, SAMPLED, &mut rng::stream(s, &[4]))
                    .unwrap()
                    .passed()
        });
        certified += usize::from(all);
    }
    assert!(certified >= 48, "{certified} of 50");
}

#[test]
fn pipeline_balance_identity_and_ledger_at_n_500() {
    let n = 500;
    let cfg = PipelineConfig::new(0.35, 3);
    let mut successes = 0;
    for s in 0..20 {
        let st = stage2(n, s);
        let plan = PerturbationPlan::from_budget(n, 30.0, [1.0, 1.0, 2.0, 0.5], s).unwrap();
        let out = embed_spanning_tree(&st.tree, &st.host, &plan, &cfg, s).unwrap();
        if !out.report.success {
            continue;
        }
        successes += 1;
        assert_eq!(out.report.balance_identity, Some(true));
        let ledger = out.report.ledger.unwrap();
        for row in &ledger.rows {
            assert_eq!(*row, LedgerRow::new(row.z, row.w, ledger.k));
        }
    }
    assert!(successes >= 18, "{successes}");
}

#[test]
fn short_templates_route_most_pairs() {
    // k = 3: pools of 20 per cluster, G(80, 1/2) and r4 with c = 40.
    let n = 80;
    let (a, b) = (ClusterId::new(0, 0), ClusterId::new(0, 1));
    let template = Template::new(vec![a, b, a, b]);
    let pools = [VertexSet::from_iter(n, 0..20), VertexSet::from_iter(n, 20..40)];
    let candidates: Vec<SpecialPair> =
        (0..20).map(|j| SpecialPair { x: 40 + j, y: 60 + j, home: 0, route: j, flipped: false }).collect();
    let hits = (0..50u64)
        .filter(|&s| {
            let g = generate_gnp(n, 0.5, s).unwrap();
            let r4 = generate_gnp(n, 40.0 / n as f64, 500 + s).unwrap();
            let Ok(found) =
                find_template_paths(&template, 20, &candidates, &pools, &g, &r4, 0.5, 0.1, &mut rng::stream(s, &[5]))
            else {
                return false;
            };
            // Each interior vertex sits in the cluster its template slot names.
            for (_, path) in &found {
                for (v, c) in path.iter().zip(template.middles()) {
                    assert!(pools[c.index()].contains(*v));
                }
            }
            found.len() >= 18
        })
        .count();
    assert!(hits >= 45, "{hits} of 50");
}

#[test]
fn caterpillars_at_n_200() {
    let n = 200;
    let cfg = PipelineConfig::new(0.35, 3);
    let wins = (0..50u64)
        .filter(|&s| {
            let host = dense_host(n, 0.5, 0.35, s);
            let t = generate_bounded_tree(n, 3, TreeShape::Caterpillar, &mut rng::stream(s, &[tag::TREE])).unwrap();
            let plan = PerturbationPlan::from_budget(n, 30.0, [1.0, 1.0, 2.0, 0.5], s).unwrap();
            embed_spanning_tree(&t, &host, &plan, &cfg, s).unwrap().report.success
        })
        .count();
    assert!(wins >= 45, "{wins} of 50");
}

#[test]
fn random_star_instances_agree_with_hall() {
    let mut r = rng::stream(21, &[]);
    for _ in 0..10_000 {
        let a = r.gen_range(1..=4);
        let demand: Vec<usize> = (0..a).map(|_| r.gen_range(1..=2)).collect();
        let b: usize = demand.iter().sum();
        let n = a + b;
        let p = r.gen_range(0.2..0.9);
        let edges: Vec<(usize, usize)> =
            (0..a).flat_map(|u| (a..n).map(move |v| (u, v))).filter(|_| r.gen::<f64>() < p).collect();
        let g = Graph::from_edges(n, edges).unwrap();
        let d = StarDemand::new(VertexSet::from_iter(n, a..n), demand.into_iter().enumerate().collect()).unwrap();
        let exhaustive = check_hall_condition(&g, &d, HallMode::Exhaustive).unwrap().holds;
        assert_eq!(exhaustive, check_hall_condition(&g, &d, HallMode::Matching).unwrap().holds);
        assert_eq!(exhaustive, find_star_packing(&g, &d).is_ok());
    }
}
