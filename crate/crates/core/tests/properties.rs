use ising_bench::chimera::ChimeraTopology;
use ising_bench::exact::{brute_force, certify_model, eliminate};
use ising_bench::generators::{family, generate};
use ising_bench::harness::{optimality_gap, BenchmarkReport, RawRow};
use ising_bench::ising::spins_to_bits;
use ising_bench::qa::{anneal, lift};
use ising_bench::solvers::hfs::{solve_tree, subproblem_energy, CellLayout};
use ising_bench::solvers::min_sum::MinSum;
use ising_bench::solvers::{run_solver, ClockKind, SolveOptions, SolverKind};
use ising_bench::{Gauge, IsingModel, Spins};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Coefficients on a 1/8 grid in [-2, 2], so sums of a few dozen terms are exact.
fn dyadic() -> impl Strategy<Value = f64> {
    (-16i32..=16).prop_map(|k| f64::from(k) / 8.0)
}

fn model_strategy(max_n: usize, density: f64) -> impl Strategy<Value = IsingModel> {
    (1..=max_n)
        .prop_flat_map(move |n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let k = pairs.len();
            (
                Just(n),
                Just(pairs),
                proptest::collection::vec((proptest::bool::weighted(density), dyadic()), k),
                proptest::collection::vec(dyadic(), n),
            )
        })
        .prop_map(|(n, pairs, picks, fields)| {
            let edges: Vec<(usize, usize, f64)> = pairs
                .into_iter()
                .zip(picks)
                .filter(|(_, (keep, j))| *keep && *j != 0.0)
                .map(|((i, j), (_, c))| (i, j, c))
                .collect();
            IsingModel::new(n, edges, fields).unwrap()
        })
}

fn spectrum(m: &IsingModel) -> Vec<f64> {
    let n = m.node_count();
    (0..1u64 << n).map(|mask| m.energy(&Spins::from_mask(mask, n)).unwrap()).collect()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn argmins(energies: &[f64]) -> Vec<u64> {
    let best = energies.iter().copied().fold(f64::INFINITY, f64::min);
    (0..energies.len() as u64).filter(|&m| energies[m as usize] == best).collect()
}

fn gauge_strategy(n: usize) -> impl Strategy<Value = Gauge> {
    proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], n).prop_map(|s| Gauge::new(s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauge_preserves_spectrum_and_maps_argmin(
        (m, g) in model_strategy(10, 0.5).prop_flat_map(|m| { let n = m.node_count(); (Just(m), gauge_strategy(n)) })
    ) {
        let t = m.gauge_transform(&g).unwrap();
        let es = spectrum(&m);
        let et = spectrum(&t);
        prop_assert_eq!(sorted(es.clone()), sorted(et.clone()));
        let flip = g.flip_mask();
        let mapped: Vec<u64> = sorted(argmins(&es).into_iter().map(|x| (x ^ flip) as f64).collect())
            .into_iter().map(|x| x as u64).collect();
        prop_assert_eq!(mapped, argmins(&et));
        let back = t.gauge_transform(&g).unwrap();
        prop_assert_eq!(back.edges(), m.edges());
    }

    #[test]
    fn boolean_form_matches_energy(m in model_strategy(10, 0.5)) {
        let b = m.to_boolean();
        let n = m.node_count();
        for mask in 0..1u64 << n {
            let s = Spins::from_mask(mask, n);
            let x = spins_to_bits(&s).unwrap();
            prop_assert_eq!(m.energy(&s).unwrap(), b.objective(&x).unwrap());
        }
        let (back, k) = b.to_ising();
        for mask in 0..1u64 << n {
            let s = Spins::from_mask(mask, n);
            prop_assert_eq!(back.energy(&s).unwrap() + k, m.energy(&s).unwrap());
        }
    }

    #[test]
    fn exact_methods_agree(m in model_strategy(12, 0.4)) {
        let b = brute_force(&m).unwrap();
        let e = eliminate(&m).unwrap();
        let (bb, _) = ising_bench::exact::branch_and_bound_from(&m, 10.0, None).unwrap();
        prop_assert!(bb.proof_complete);
        prop_assert_eq!(b.optimal_energy, e.optimal_energy);
        prop_assert_eq!(b.optimal_energy, bb.optimal_energy);
        prop_assert!(b.optimal_configs.contains(&e.optimal_configs[0]));
        prop_assert!(b.optimal_configs.contains(&bb.optimal_configs[0]));
    }

    #[test]
    fn certificates_follow_the_gauge(
        (m, g) in model_strategy(10, 0.5).prop_flat_map(|m| { let n = m.node_count(); (Just(m), gauge_strategy(n)) })
    ) {
        let a = brute_force(&m).unwrap();
        let b = brute_force(&m.gauge_transform(&g).unwrap()).unwrap();
        prop_assert_eq!(a.optimal_energy, b.optimal_energy);
        let mut mapped: Vec<Spins> = a.optimal_configs.iter().map(|c| g.apply(c).unwrap()).collect();
        mapped.sort_by_key(|s| s.to_mask());
        let mut other = b.optimal_configs.clone();
        other.sort_by_key(|s| s.to_mask());
        prop_assert_eq!(mapped, other);
    }

    #[test]
    fn lift_is_the_spectrum(m in model_strategy(10, 0.5)) {
        prop_assert_eq!(lift(&m).unwrap().energies, spectrum(&m));
    }

    #[test]
    fn heuristic_trajectories_are_sound(m in model_strategy(12, 0.4), seed in 0u64..1000, which in 0usize..3) {
        let kind = [SolverKind::Scd, SolverKind::Glauber, SolverKind::MinSum][which];
        let opts = SolveOptions::new(0.001, seed).with_clock(ClockKind::work());
        let t = run_solver(kind, &m, None, &opts).unwrap();
        t.validate(&m).unwrap();
        for imp in &t.improvements {
            prop_assert_eq!(m.energy(&imp.config).unwrap(), imp.energy);
            prop_assert!(imp.elapsed <= opts.time_limit * 1.01);
        }
        let again = run_solver(kind, &m, None, &opts).unwrap();
        let best = t.best().unwrap().energy;
        prop_assert!(best >= brute_force(&m).unwrap().optimal_energy);
        prop_assert_eq!(t, again);
    }
}

fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> (IsingModel, usize) {
    use rand::Rng;
    let mut edges = Vec::new();
    for i in 1..n {
        let p = rng.gen_range(0..i);
        edges.push((p, i, rng.gen_range(-1.0..1.0)));
    }
    let fields = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m = IsingModel::new(n, edges, fields).unwrap();
    // diameter by double sweep
    let far = |start: usize| {
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in m.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let (node, d) = dist.iter().enumerate().max_by_key(|(_, d)| **d).unwrap();
        (node, *d)
    };
    let (a, _) = far(0);
    let (_, diameter) = far(a);
    (m, diameter)
}

#[test]
fn min_sum_fixed_point_within_diameter_plus_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let n = rand::Rng::gen_range(&mut rng, 2..=30);
        let (m, diameter) = random_tree(n, &mut rng);
        let mut ms = MinSum::new(&m);
        let (iters, converged) = ms.run(1000);
        assert!(converged);
        assert!(iters <= diameter + 1, "{iters} iterations on diameter {diameter}");
    }
}

#[test]
fn hfs_moves_are_subproblem_optimal() {
    use rand::Rng;
    let topo = ChimeraTopology::ideal(2, 2, 4).unwrap();
    let fam = family("RANF-1").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..20 {
        let (m, _) = generate(&topo, &fam, true, seed).unwrap();
        let layout = CellLayout::new(&m, &topo).unwrap();
        for _ in 0..5 {
            let order = layout.random_tree(&mut rng, 2);
            let cells: Vec<usize> = order.iter().map(|&(c, _)| c).collect();
            let mut spins: Vec<i8> = (0..m.node_count()).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            let before = spins.clone();
            solve_tree(&m, &layout, &order, &mut spins);
            let got = subproblem_energy(&m, &layout, &spins, &cells);

            let free: Vec<usize> = cells.iter().flat_map(|&c| layout.cell_nodes(c)).collect();
            assert!(free.len() <= 20);
            let mut best = f64::INFINITY;
            let mut trial = before.clone();
            for mask in 0..1u32 << free.len() {
                for (b, &i) in free.iter().enumerate() {
                    trial[i] = if mask >> b & 1 == 1 { -1 } else { 1 };
                }
                best = best.min(subproblem_energy(&m, &layout, &trial, &cells));
            }
            assert!((got - best).abs() <= 1e-9, "dp {got} vs enumeration {best}");
            for i in 0..m.node_count() {
                if !free.contains(&i) {
                    assert_eq!(spins[i], before[i]);
                }
            }
        }
    }
}

#[test]
fn chimera_structure() {
    for (r, c, k) in [(1, 1, 4), (2, 3, 4), (4, 4, 4), (3, 2, 2)] {
        let t = ChimeraTopology::ideal(r, c, k).unwrap();
        assert!(t.max_degree() <= k + 2);
        for &(a, b) in t.edges() {
            let (ca, cb) = (t.coord(a), t.coord(b));
            if (ca.row, ca.col) == (cb.row, cb.col) {
                assert_ne!(ca.half, cb.half);
            }
        }
        assert_eq!(t, ChimeraTopology::ideal(r, c, k).unwrap());
        let o = t.with_random_omissions(0.1, 5).unwrap();
        assert_eq!(o, t.with_random_omissions(0.1, 5).unwrap());
    }
}

#[test]
fn gauge_obfuscation_is_sound() {
    let topo = ChimeraTopology::ideal(2, 2, 4).unwrap();
    for name in ["BFM", "FBFM", "CBFM", "RANF-1"] {
        let fam = family(name).unwrap();
        for seed in 0..10 {
            let (plain, _) = generate(&topo, &fam, false, seed).unwrap();
            let (hidden, truth) = generate(&topo, &fam, true, seed).unwrap();
            let g = Gauge::new(truth.gauge.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let s: Vec<i8> = (0..plain.node_count()).map(|_| if rand::Rng::gen(&mut rng) { 1 } else { -1 }).collect();
                let s = Spins::new(s).unwrap();
                assert_eq!(hidden.energy(&g.apply(&s).unwrap()).unwrap(), plain.energy(&s).unwrap());
            }
            assert_eq!(generate(&topo, &fam, true, seed).unwrap().0, hidden);
        }
    }
}

#[test]
fn unbiased_ferromagnet_planted_state_is_optimal() {
    let topo = ChimeraTopology::build(1, 2, 4, &Default::default()).unwrap();
    let fam = family("BFM").unwrap();
    for seed in 0..50 {
        let (m, truth) = generate(&topo, &fam, false, seed).unwrap();
        assert!(truth.planted_config.iter().all(|&s| s == 1));
        assert!(!m.is_frustrated(&truth.planted()).unwrap());
        let cert = brute_force(&m).unwrap();
        let planted = m.energy(&truth.planted()).unwrap();
        assert_eq!(cert.optimal_energy, planted);
        if truth.degenerate {
            assert_eq!(cert.optimal_configs.len(), 2);
        } else {
            assert_eq!(cert.optimal_configs, vec![truth.planted()]);
        }
    }
}

#[test]
fn annealing_conserves_norm_and_follows_the_gauge() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        use rand::Rng;
        let n = rng.gen_range(2..=6);
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(0.5))
            .map(|(i, j)| (i, j, -1.0))
            .collect();
        let fields = vec![-0.1; n];
        let m = IsingModel::new(n, edges, fields).unwrap();
        let g = Gauge::new((0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect()).unwrap();
        let a = anneal(&m, 5.0, 200).unwrap();
        let b = anneal(&m.gauge_transform(&g).unwrap(), 5.0, 200).unwrap();
        assert!(a.max_norm_error < 1e-6 && b.max_norm_error < 1e-6);
        let flip = g.flip_mask() as usize;
        for (mask, p) in a.final_distribution.iter().enumerate() {
            assert!((p - b.final_distribution[mask ^ flip]).abs() < 1e-6);
        }
    }
}

#[test]
fn certify_picks_a_complete_method() {
    let topo = ChimeraTopology::ideal(3, 3, 4).unwrap();
    let (m, truth) = generate(&topo, &family("CBFM").unwrap(), true, 2).unwrap();
    let cert = certify_model(&m, 30.0, Some(&truth.planted())).unwrap();
    assert!(cert.proof_complete);
    let (bb, _) = ising_bench::exact::branch_and_bound_from(&m, 60.0, Some(&truth.planted())).unwrap();
    assert!(bb.proof_complete);
    assert_eq!(cert.optimal_energy, bb.optimal_energy);
}

#[test]
fn ladder_gaps_never_increase_and_means_recompute() {
    let topo = ChimeraTopology::ideal(2, 2, 4).unwrap();
    let ladder = [1e-5, 1e-4, 1e-3, 1e-2];
    let mut raw = Vec::new();
    for seed in 0..5u64 {
        let (m, _) = generate(&topo, &family("CBFM").unwrap(), true, seed).unwrap();
        let reference = eliminate(&m).unwrap().optimal_energy;
        let t = run_solver(SolverKind::Glauber, &m, None, &SolveOptions::new(0.01, seed).with_clock(ClockKind::work()))
            .unwrap();
        let mut last = f64::INFINITY;
        for &time in &ladder {
            let gap = t.best_at(time).map(|b| optimality_gap(b.energy, reference));
            if let Some(g) = gap {
                assert!(g <= last && g >= -1e-12, "gap {g} after {last}");
                last = g;
            }
            raw.push(RawRow {
                family: "CBFM".into(),
                instance: seed as usize,
                seed,
                solver: "gd".into(),
                time,
                energy: t.best_at(time).map(|b| b.energy),
                gap,
                hamming: gap.map(|_| 0.0),
                optimal: gap.is_some_and(|g| g <= 1e-9),
            });
        }
    }
    for row in BenchmarkReport::aggregate(&raw) {
        let solved: Vec<f64> = raw.iter().filter(|r| r.time == row.time).filter_map(|r| r.gap).collect();
        let mean = solved.iter().sum::<f64>() / solved.len() as f64;
        assert!((row.mean_gap - mean).abs() <= 1e-12);
        assert_eq!(row.n_instances, solved.len());
    }
}
