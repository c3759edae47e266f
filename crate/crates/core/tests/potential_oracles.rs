//! Cross-checks of the potential-theory layer against independent oracles:
//! dense direct solves, closed-form tree recursions and Monte Carlo.

mod common;

use walklab::graph::{build_family, wire, FamilySpec};
use walklab::potential::{
    dirichlet_energy, effective_resistance, entry_measure_free, equilibrium_measure,
    gradient_flow, green_matrix, hitting_family, solve_harmonic, unit_current,
};
use walklab::samplers::{SamplerRng, WalkKernel};

#[test]
fn harmonic_solve_matches_dense_quadratic_minimizer() {
    let (g, _) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 4 }).unwrap();
    let k: Vec<usize> = ["0,0,0", "2,1,0", "-1,-1,3"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let boundary = vec![(k[0], 1.0), (k[1], -0.5), (k[2], 2.0)];
    let f = solve_harmonic(&g, &boundary, 1e-12).unwrap();
    let dense = common::dense_solve_clamped(&g, &boundary, &[]);
    let max_diff = f
        .values
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max_diff < 1e-9, "cg vs dense: {max_diff}");
    // Energy of the minimizer matches too.
    let dense_energy = dirichlet_energy(&g, &dense);
    assert!((f.energy - dense_energy).abs() < 1e-9);
}

#[test]
fn energy_of_indicator_extension_equals_effective_conductance() {
    let (g, _) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 6 }).unwrap();
    let k: Vec<usize> = ["0,0,0", "1,0,0", "0,1,0"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let fam = hitting_family(&g, &k, 1e-12).unwrap();
    let energy = dirichlet_energy(&g, &fam.fields[0]);
    let r = effective_resistance(&g, k[0], k[1], 1e-12).unwrap();
    // h^{k1} is the voltage of the unit current k1 -> K\{k1} scaled to
    // voltage 1, so its energy is the effective conductance.
    let r_set = unit_current(&g, &[k[0]], &[k[1], k[2]], 1e-12)
        .unwrap()
        .effective_resistance;
    assert!(
        (energy - 1.0 / r_set).abs() < 1e-8,
        "energy {energy} vs conductance {}",
        1.0 / r_set
    );
    assert!(r_set < r, "two-target resistance must not exceed single");
}

#[test]
fn green_matrix_matches_dense_inverse() {
    // Window small enough for a full dense inversion.
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 3 }).unwrap();
    let q = wire(&g, &e, 2).unwrap();
    let k: Vec<usize> = ["0,0,0", "1,0,0", "0,1,1", "-1,0,0"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let gm = green_matrix(&q, &k, 1e-13).unwrap();
    let dense = common::dense_green_inverse(q.graph(), q.z());
    // Map base K indices into the dense block (all quotient vertices except z).
    let keep: Vec<usize> = (0..q.graph().vertex_count()).filter(|&v| v != q.z()).collect();
    let pos: std::collections::HashMap<usize, usize> =
        keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    for (t, &kt) in k.iter().enumerate() {
        for (j, &kj) in k.iter().enumerate() {
            let qt = q.from_base(kt).unwrap();
            let qj = q.from_base(kj).unwrap();
            let oracle = dense[(pos[&qt], pos[&qj])];
            assert!(
                (gm[t][j] - oracle).abs() < 1e-9,
                "G[{t}][{j}] = {} vs dense {oracle}",
                gm[t][j]
            );
        }
    }
}

#[test]
fn green_entries_nondecreasing_in_level() {
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 6 }).unwrap();
    let k: Vec<usize> = ["0,0,0", "1,0,0"]
        .iter()
        .map(|s| g.vertex(s).unwrap())
        .collect();
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for n in 2..=5 {
        let q = wire(&g, &e, n).unwrap();
        let gm = green_matrix(&q, &k, 1e-12).unwrap();
        if let Some(p) = &prev {
            for t in 0..k.len() {
                for j in 0..k.len() {
                    assert!(
                        gm[t][j] >= p[t][j] - 1e-10,
                        "G[{t}][{j}] decreased at level {n}"
                    );
                }
            }
        }
        prev = Some(gm);
    }
}

#[test]
fn capacity_matches_monte_carlo_escape_probability() {
    // cap({o}) = π(o) P_o[hit the rim before returning to o], checked by
    // direct simulation.
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 8 }).unwrap();
    let o = g.vertex("0,0,0").unwrap();
    let q = wire(&g, &e, e.depth() - 1).unwrap();
    let cap = equilibrium_measure(&q, &[o], 1e-12).unwrap().capacity;

    let kernel = WalkKernel::new(&g);
    let mut rng = SamplerRng::new(140);
    let n = 200_000;
    let mut escapes = 0u64;
    for _ in 0..n {
        let mut x = kernel.step(&g, o, &mut rng.topo);
        loop {
            if x == o {
                break;
            }
            if e.on_rim(x) {
                escapes += 1;
                break;
            }
            x = kernel.step(&g, x, &mut rng.topo);
        }
    }
    let p_hat = escapes as f64 / n as f64;
    let p = cap / g.pi(o);
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!(
        (p_hat - p).abs() < 3.0 * sigma,
        "escape {p_hat} vs solver {p} (3sigma {})",
        3.0 * sigma
    );
}

#[test]
fn capacity_sequence_decreases_toward_no_return_value() {
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 10 }).unwrap();
    let o = g.vertex("0,0,0").unwrap();
    let mut caps = Vec::new();
    for n in 4..=9 {
        let q = wire(&g, &e, n).unwrap();
        caps.push(equilibrium_measure(&q, &[o], 1e-11).unwrap().capacity);
    }
    for w in caps.windows(2) {
        assert!(w[1] < w[0], "not decreasing: {caps:?}");
    }
    // The infinite-lattice value is pi(o) * P[no return] with return
    // probability about 0.3405 in three dimensions; the decreasing window
    // sequence must stay above it and the extrapolation must improve on the
    // raw tail.
    let limit = 6.0 * (1.0 - 0.3405);
    let raw_last = *caps.last().unwrap();
    assert!(raw_last > limit, "window capacity crossed the infinite-volume value");
    let extrapolated = walklab::potential::richardson3(&caps).unwrap();
    assert!(
        (extrapolated - limit).abs() < (raw_last - limit).abs(),
        "extrapolation {extrapolated} no better than raw {raw_last} (limit {limit})"
    );
    assert!(
        (extrapolated - limit).abs() < 0.1,
        "extrapolated {extrapolated} vs literature {limit}"
    );
}

#[test]
fn wired_voltage_is_hitting_probability() {
    // v(x)/v(a) = P_x[hit a before the rim]: Monte Carlo cross-check.
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 7 }).unwrap();
    let a = g.vertex("0,0,0").unwrap();
    let x = g.vertex("2,1,0").unwrap();
    let q = wire(&g, &e, e.depth() - 1).unwrap();
    let rep = unit_current(q.graph(), &[q.from_base(a).unwrap()], &[q.z()], 1e-12).unwrap();
    let ratio = rep.voltage.values[q.from_base(x).unwrap()] / rep.voltage.values[q.from_base(a).unwrap()];

    let kernel = WalkKernel::new(&g);
    let mut rng = SamplerRng::new(7171);
    let n = 200_000;
    let mut hits = 0u64;
    for _ in 0..n {
        let mut v = x;
        loop {
            if v == a {
                hits += 1;
                break;
            }
            if e.on_rim(v) {
                break;
            }
            v = kernel.step(&g, v, &mut rng.topo);
        }
    }
    let p_hat = hits as f64 / n as f64;
    let sigma = (ratio * (1.0 - ratio) / n as f64).sqrt();
    assert!(
        (p_hat - ratio).abs() < 3.0 * sigma,
        "MC {p_hat} vs voltage ratio {ratio}"
    );
}

#[test]
fn wired_unit_flow_energy_is_minimal() {
    // Any hand-built unit flow from a to the rim has at least the wired
    // energy. Route everything along one coordinate axis.
    let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 5 }).unwrap();
    let q = wire(&g, &e, e.depth() - 1).unwrap();
    let a = q.from_base(g.vertex("0,0,0").unwrap()).unwrap();
    let rep = unit_current(q.graph(), &[a], &[q.z()], 1e-12).unwrap();
    let wired_energy = rep.flow.energy(q.graph());
    assert!((wired_energy - rep.effective_resistance).abs() < 1e-9);

    // Path flow along one axis out to the wired boundary: the rim ring is
    // already collapsed into z, so the last inside vertex is 4,0,0.
    let mut energy_path = 0.0;
    for i in 0..4 {
        let u = q.from_base(g.vertex(&format!("{i},0,0")).unwrap()).unwrap();
        let v = q
            .from_base(g.vertex(&format!("{},0,0", i + 1)).unwrap())
            .unwrap();
        let id = q.graph().edge_between(u, v).unwrap();
        energy_path += 1.0 / q.graph().edge(id).c;
    }
    let last = q.from_base(g.vertex("4,0,0").unwrap()).unwrap();
    let id = q.graph().edge_between(last, q.z()).unwrap();
    energy_path += 1.0 / q.graph().edge(id).c;
    assert!(
        energy_path >= wired_energy,
        "path energy {energy_path} below wired minimum {wired_energy}"
    );
}

#[test]
fn tree_entry_measure_matches_recursion_oracle() {
    // K = depth-2 vertices in the two root branches; probe inside branch 0
    // but not below the K vertex. No current enters side branches, so the
    // probe reads the voltage at the junction o.0: resistances 1 vs 3 along
    // the series path give masses (3/4, 1/4) at any window depth.
    for depth in 4..=7 {
        let (g, _) = build_family(&FamilySpec::RegularTree {
            branching: 2,
            depth,
        })
        .unwrap();
        let k = vec![g.vertex("o.0.0").unwrap(), g.vertex("o.1.0").unwrap()];
        let probe = g.vertex("o.0.1").unwrap();
        let em = entry_measure_free(&g, &k, probe, 1e-12).unwrap();
        assert!(
            (em.measure.get(k[0]) - 0.75).abs() < 1e-9,
            "depth {depth}: mass {}",
            em.measure.get(k[0])
        );
        assert!((em.measure.get(k[1]) - 0.25).abs() < 1e-9);
    }
}

#[test]
fn tree_wired_resistance_matches_recursion_oracle() {
    let (g, e) = build_family(&FamilySpec::RegularTree {
        branching: 2,
        depth: 9,
    })
    .unwrap();
    let a = g.vertex("o.0").unwrap();
    let b = g.vertex("o.1").unwrap();
    for n in 3..=7 {
        let q = wire(&g, &e, n).unwrap();
        let r = effective_resistance(
            q.graph(),
            q.from_base(a).unwrap(),
            q.from_base(b).unwrap(),
            1e-12,
        )
        .unwrap();
        let oracle = common::tree_wired_resistance_children(2, n);
        assert!(
            (r - oracle).abs() < 1e-9,
            "level {n}: solver {r} vs oracle {oracle}"
        );
    }
    // Free resistance on the tree window is the bare series path.
    let r_free = effective_resistance(&g, a, b, 1e-12).unwrap();
    assert!((r_free - 2.0).abs() < 1e-10);
}

#[test]
fn flow_satisfies_cycle_law_on_fundamental_cycles() {
    let (g, _) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 3 }).unwrap();
    let a = g.vertex("0,0,0").unwrap();
    let b = g.vertex("2,2,0").unwrap();
    let rep = unit_current(&g, &[a], &[b], 1e-12).unwrap();
    // theta/c sums to zero around every unit square of the lattice.
    let deltas = [((1i64, 0i64), (0i64, 1i64))];
    for p in [(0i64, 0i64, 0i64), (1, 1, 0), (-1, 0, 2)] {
        for &((dx1, dy1), (dx2, dy2)) in &deltas {
            let name = |x: i64, y: i64| format!("{x},{y},{}", p.2);
            let v00 = g.vertex(&name(p.0, p.1)).unwrap();
            let v10 = g.vertex(&name(p.0 + dx1, p.1 + dy1)).unwrap();
            let v11 = g.vertex(&name(p.0 + dx1 + dx2, p.1 + dy1 + dy2)).unwrap();
            let v01 = g.vertex(&name(p.0 + dx2, p.1 + dy2)).unwrap();
            let cycle = [v00, v10, v11, v01, v00];
            let mut acc = 0.0;
            for w in cycle.windows(2) {
                let c = g.conductance(w[0], w[1]);
                acc += rep.flow.value(&g, w[0], w[1]) / c;
            }
            assert!(acc.abs() < 1e-9, "cycle law violated: {acc}");
        }
    }
    // Net flux: +1 out of a, -1 into b, 0 elsewhere.
    assert!((rep.flow.flux_out(&g, a) - 1.0).abs() < 1e-9);
    assert!((rep.flow.flux_out(&g, b) + 1.0).abs() < 1e-9);
    let mid = g.vertex("1,1,1").unwrap();
    assert!(rep.flow.flux_out(&g, mid).abs() < 1e-9);
    // Gradient flow of the voltage is the flow itself.
    let grad = gradient_flow(&g, &rep.voltage.values);
    let max_diff = grad
        .edge_flow
        .iter()
        .zip(&rep.flow.edge_flow)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(max_diff < 1e-12);
}
