//! Statistical cross-checks of the samplers against the potential layer
//! and against rejection-sampling oracles.

mod common;

use std::collections::HashMap;

use walklab::compare::{stats, tv_distance};
use walklab::graph::{build_family, FamilySpec};
use walklab::potential::{hitting_family, Measure};
use walklab::samplers::{
    default_rate, walk, walk_no_return_rejection, EntryMode, InterlacementSampler,
    NoReturnWalker, ReflectedSampler, RunBudget, SamplerRng, WalkKernel,
};

#[test]
fn one_step_law_matches_kernel_chi_square() {
    let (g, _) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 2 }).unwrap();
    let center = g.vertex("0,0,0").unwrap();
    let kernel = WalkKernel::new(&g);
    let mut rng = SamplerRng::new(101);
    let n = 100_000usize;
    let nbrs: Vec<usize> = g.neighbors(center).map(|(v, _, _)| v).collect();
    let mut counts = vec![0u64; nbrs.len()];
    for _ in 0..n {
        let v = kernel.step(&g, center, &mut rng.topo);
        counts[nbrs.iter().position(|&x| x == v).unwrap()] += 1;
    }
    let expected: Vec<f64> = nbrs.iter().map(|&v| g.kernel(center, v)).collect();
    let (_, p) = stats::chi_square_gof(&counts, &expected).unwrap();
    assert!(p > 0.01, "one-step law rejected: p = {p}");
}

#[test]
fn escape_frequency_matches_hitting_field() {
    // P[walk from the origin reaches the rim before K] equals the
    // conditioning field h at the origin.
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 6 }).unwrap();
    let k: Vec<usize> = ["2,2,0", "2,2,1"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let walker = NoReturnWalker::new(&g, &e, &k, 1e-11).unwrap();
    let start = g.vertex("0,0,0").unwrap();
    let p = walker.h()[start];

    let kernel = WalkKernel::new(&g);
    let mut rng = SamplerRng::new(2020);
    let n = 100_000usize;
    let mut escaped = 0u64;
    for _ in 0..n {
        let t = walk(
            &g,
            &kernel,
            start,
            |v| e.on_rim(v) || k.contains(&v),
            10_000_000,
            &mut rng.topo,
        )
        .unwrap();
        let last = t.vertices().last().unwrap();
        if e.on_rim(last) {
            escaped += 1;
        }
    }
    let p_hat = escaped as f64 / n as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!(
        (p_hat - p).abs() < 3.0 * sigma,
        "escape {p_hat} vs field {p}"
    );
}

#[test]
fn rejection_acceptance_rate_matches_escape_probability() {
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 6 }).unwrap();
    let k: Vec<usize> = ["0,0,0", "1,0,0", "0,1,0"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let walker = NoReturnWalker::new(&g, &e, &k, 1e-11).unwrap();
    let y = k[0];
    let q = walker.escape_weight(y) / g.pi(y);
    let kernel = WalkKernel::new(&g);
    let mut rng = SamplerRng::new(3030);
    let n = 20_000usize;
    let mut attempts = 0usize;
    for _ in 0..n {
        let (_, a) =
            walk_no_return_rejection(&g, &e, &k, y, 10_000_000, 1_000_000, &kernel, &mut rng.topo)
                .unwrap();
        attempts += a;
    }
    let rate = n as f64 / attempts as f64;
    // Attempts are geometric(q): sd of the mean acceptance ratio ~ q/sqrt(n).
    assert!(
        (rate - q).abs() < 4.0 * q / (n as f64).sqrt(),
        "acceptance {rate} vs escape probability {q}"
    );
}

#[test]
fn h_transform_and_rejection_first_step_laws_agree() {
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 6 }).unwrap();
    let k: Vec<usize> = ["0,0,0", "1,0,0", "0,1,0"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let walker = NoReturnWalker::new(&g, &e, &k, 1e-11).unwrap();
    let kernel = WalkKernel::new(&g);
    let y = k[0];
    let mut rng = SamplerRng::new(4040);
    let n = 50_000usize;
    let mut ha: HashMap<usize, u64> = HashMap::new();
    let mut rj: HashMap<usize, u64> = HashMap::new();
    for _ in 0..n {
        let t = walker.sample(&g, y, 10_000_000, &mut rng.topo).unwrap();
        *ha.entry(t.vertices().nth(1).unwrap()).or_insert(0) += 1;
        let (t2, _) =
            walk_no_return_rejection(&g, &e, &k, y, 10_000_000, 1_000_000, &kernel, &mut rng.topo)
                .unwrap();
        *rj.entry(t2.vertices().nth(1).unwrap()).or_insert(0) += 1;
        // Conditioning support: the first step never re-enters K.
        assert!(!k.contains(&t.vertices().nth(1).unwrap()));
        assert!(!k.contains(&t2.vertices().nth(1).unwrap()));
    }
    let emp_h = Measure::from_counts(ha.into_iter().collect()).unwrap();
    let emp_r = Measure::from_counts(rj.into_iter().collect()).unwrap();
    let tv = tv_distance(&emp_h, &emp_r).unwrap();
    assert!(tv <= 0.02, "first-step TV {tv}");
    // Both also agree with the exact transformed law.
    let exact = walker.first_step_law(&g, y).unwrap();
    assert!(tv_distance(&emp_h, &exact).unwrap() <= 0.02);
}

#[test]
fn free_trace_entry_law_matches_equilibrium_on_lattice() {
    // The equality regime: pooled free-trace re-entries are close to the
    // normalized equilibrium measure of the level.
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 7 }).unwrap();
    let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
    let s = ReflectedSampler::new(&g, &e, 2, EntryMode::FreeTrace, rate, 1e-10).unwrap();
    let mut rng = SamplerRng::new(5050);
    let n = 100_000usize;
    let run = s.run(&RunBudget::excursions(n), &mut rng).unwrap();
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for &v in &run.entries {
        *counts.entry(v).or_insert(0) += 1;
    }
    let emp = Measure::from_counts(counts.into_iter().collect()).unwrap();

    let level_set = e.level(2).unwrap().to_vec();
    let ri_rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
    let ri = InterlacementSampler::new(&g, &e, &level_set, ri_rate, 1e-10).unwrap();
    let etil = ri.equilibrium().normalized().unwrap();
    let tv = tv_distance(&emp, &etil).unwrap();
    assert!(tv <= 0.03, "free-trace entry TV {tv}");
}

#[test]
fn hitting_frequency_matches_field_value() {
    // h^y(x) is the probability that the free-window walk from x first hits
    // K at y (the walk reflects at the rim simply because rim vertices have
    // no outward edges).
    let (g, _) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 6 }).unwrap();
    let k: Vec<usize> = ["0,0,0", "1,1,0"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let fam = hitting_family(&g, &k, 1e-12).unwrap();
    let start = g.vertex("3,0,0").unwrap();
    let p = fam.fields[0][start];
    let kernel = WalkKernel::new(&g);
    let mut rng = SamplerRng::new(6060);
    let n = 20_000usize;
    let mut hits = 0u64;
    for _ in 0..n {
        let t = walk(&g, &kernel, start, |v| k.contains(&v), 10_000_000, &mut rng.topo).unwrap();
        if t.vertices().last().unwrap() == k[0] {
            hits += 1;
        }
    }
    let p_hat = hits as f64 / n as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!(
        (p_hat - p).abs() < 3.0 * sigma,
        "hit frequency {p_hat} vs field {p}"
    );
}

#[test]
fn poisson_count_moments_match_intensity() {
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 6 }).unwrap();
    let k: Vec<usize> = ["0,0,0", "1,0,0"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
    let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-10).unwrap();
    let mut rng = SamplerRng::new(7070);
    let u = 1.5;
    let lambda = u * s.capacity();
    let n = 4000usize;
    let counts: Vec<f64> = (0..n)
        .map(|_| s.sample(u, &mut rng).unwrap().excursions.len() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se_mean = (lambda / n as f64).sqrt();
    let se_var = ((lambda + 2.0 * lambda * lambda) / n as f64).sqrt();
    assert!((mean - lambda).abs() < 3.0 * se_mean, "mean {mean} vs {lambda}");
    assert!((var - lambda).abs() < 3.0 * se_var, "var {var} vs {lambda}");
}

#[test]
fn mean_excursion_duration_is_stable() {
    // With a geometric rate schedule the expected excursion duration is
    // finite and the running mean settles (no heavy-tail blowup at the rim).
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 8 }).unwrap();
    let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
    let s = ReflectedSampler::new(&g, &e, 3, EntryMode::Wired, rate, 1e-10).unwrap();
    let mut rng = SamplerRng::new(8080);
    let run = s.run(&RunBudget::excursions(10_000), &mut rng).unwrap();
    let holds = run.trajectory.holds.as_ref().unwrap();
    let mut durations = Vec::new();
    for r in run.trajectory.excursion_ranges() {
        durations.push(holds[r].iter().sum::<f64>());
    }
    assert_eq!(durations.len(), 10_000);
    let half: f64 = durations[..5000].iter().sum::<f64>() / 5000.0;
    let full: f64 = durations.iter().sum::<f64>() / durations.len() as f64;
    assert!(full.is_finite() && full > 0.0);
    assert!(
        (half - full).abs() / full < 0.25,
        "running mean drifting: {half} vs {full}"
    );
}

#[test]
fn interlacement_visit_probability_grows_to_one() {
    // Windowed recurrence: once the label budget is large every K vertex is
    // hit; coupled label filtering makes the growth exactly monotone.
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 5 }).unwrap();
    let k: Vec<usize> = ["0,0,0", "2,2,2"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
    let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-10).unwrap();
    let mut rng = SamplerRng::new(9090);
    let u_grid = [0.1, 0.4, 1.6, 6.4];
    let reps = 400;
    let mut hit_counts = vec![0u64; u_grid.len()];
    for _ in 0..reps {
        let sample = s.sample(*u_grid.last().unwrap(), &mut rng).unwrap();
        for (i, &u) in u_grid.iter().enumerate() {
            let mut visited: std::collections::HashSet<usize> = Default::default();
            for exc in sample.excursions.iter().filter(|e| e.label <= u) {
                visited.extend(exc.trajectory.vertices().filter(|v| k.contains(v)));
            }
            if visited.len() == k.len() {
                hit_counts[i] += 1;
            }
        }
    }
    for w in hit_counts.windows(2) {
        assert!(w[0] <= w[1], "visit probability not monotone: {hit_counts:?}");
    }
    let last = hit_counts[u_grid.len() - 1] as f64 / reps as f64;
    assert!(last > 0.99, "visit probability at large u only {last}");
    let first = hit_counts[0] as f64 / reps as f64;
    assert!(first < last, "no growth across the label grid");
}

#[test]
fn no_escape_mass_is_an_error() {
    // The origin is enclosed by K: every neighbor is in K, so conditioning
    // on never returning leaves no first step at all.
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 3 }).unwrap();
    let origin = g.vertex("0,0,0").unwrap();
    let mut k: Vec<usize> = g.neighbors(origin).map(|(v, _, _)| v).collect();
    k.push(origin);
    let walker = NoReturnWalker::new(&g, &e, &k, 1e-10).unwrap();
    assert!(walker.escape_weight(origin) < 1e-13);
    let err = walker.sample(&g, origin, 1000, &mut SamplerRng::new(1).topo);
    assert!(err.is_err(), "expected no-escape error");
    assert!(walker.first_step_law(&g, origin).is_err());
    // Boundary atoms of K do escape.
    assert!(walker.escape_weight(k[0]) > 0.1);
}
