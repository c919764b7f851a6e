use fedban::topology::{Graph, MixingMatrix, Topology, TopologyError};

fn matrix(t: Topology, m: usize, kappa: f64) -> MixingMatrix {
    MixingMatrix::new(&Graph::build(t, m).unwrap(), kappa).unwrap()
}

/// Induced infinity norm of `P^t - (1/M) 1 1^T` by dense multiplication.
fn consensus_distance_oracle(mm: &MixingMatrix, t: usize) -> f64 {
    let m = mm.len();
    let p = mm.dense();
    let mut acc: Vec<f64> = (0..m * m).map(|i| if i / m == i % m { 1.0 } else { 0.0 }).collect();
    for _ in 0..t {
        let mut next = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                let a = acc[i * m + k];
                if a != 0.0 {
                    for j in 0..m {
                        next[i * m + j] += a * p[k * m + j];
                    }
                }
            }
        }
        acc = next;
    }
    acc.chunks(m).map(|row| row.iter().map(|v| (v - 1.0 / m as f64).abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[test]
fn row_sums_and_symmetry() {
    for t in [Topology::Cycle, Topology::Complete, Topology::Star, Topology::Path] {
        for m in [3, 5, 20] {
            let mm = matrix(t, m, 0.5);
            for s in mm.row_sums() {
                assert!((s - 1.0).abs() <= 1e-12, "{t} M={m}: {s}");
            }
            for i in 0..m {
                for j in 0..m {
                    assert_eq!(mm.get(i, j), mm.get(j, i));
                    assert!(mm.get(i, j) >= 0.0);
                }
            }
        }
    }
}

#[test]
fn eigendecomposition_is_accurate() {
    for t in [Topology::Cycle, Topology::Star, Topology::Path] {
        let mm = matrix(t, 20, 0.5);
        assert!(mm.eigen_residual() < 1e-10, "{t}");
        assert!(mm.orthonormality_error() < 1e-10, "{t}");
        assert!((mm.eigenvalues()[0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn cycle_eigenvalues_closed_form() {
    // Cycle Laplacian eigenvalues are 2 - 2 cos(2 pi k / M); d_max = 2.
    let m = 20;
    let kappa = 0.5;
    let mm = matrix(Topology::Cycle, m, kappa);
    let mut expected: Vec<f64> = (0..m)
        .map(|k| 1.0 - kappa / 2.0 * (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / m as f64).cos()))
        .collect();
    expected.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in mm.eigenvalues().iter().zip(&expected) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn consensus_distance_matches_direct_powers() {
    let mm = matrix(Topology::Cycle, 8, 0.5);
    for t in [1, 5, 40] {
        let a = mm.consensus_distance(t);
        let b = consensus_distance_oracle(&mm, t);
        assert!((a - b).abs() < 1e-12, "t = {t}: {a} vs {b}");
    }
}

#[test]
fn cycle_twenty_reaches_consensus() {
    let mm = matrix(Topology::Cycle, 20, 0.5);
    let t = (1..=10_000).find(|&t| mm.consensus_distance(t) < 1e-6).expect("converges within 1e4 steps");
    assert!(consensus_distance_oracle(&mm, t) < 1e-6);
}

#[test]
fn complete_three_constants() {
    let mm = matrix(Topology::Complete, 3, 1.0);
    let c = mm.spectral_constants().unwrap();
    assert!((c.c0 - 2.0 * 3f64.sqrt()).abs() < 1e-8, "c0 = {}", c.c0);
}

#[test]
fn sparser_graphs_have_larger_ci() {
    let cycle = matrix(Topology::Cycle, 20, 0.5).spectral_constants().unwrap();
    let complete = matrix(Topology::Complete, 20, 0.5).spectral_constants().unwrap();
    for (i, (a, b)) in cycle.ci.iter().zip(&complete.ci).enumerate() {
        assert!(a >= b, "agent {i}: cycle {a} < complete {b}");
    }
    assert!(cycle.c0 > complete.c0);
}

#[test]
fn bipartite_without_laziness_has_no_gap() {
    let mm = matrix(Topology::Cycle, 4, 1.0);
    assert!(matches!(mm.spectral_constants(), Err(TopologyError::SpectralGap { .. })));
}

#[test]
fn edge_list_round_trip() {
    let g = Graph::parse_edge_list("# ring of four\n4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    assert_eq!(g.degrees(), vec![2, 2, 2, 2]);
    let a = MixingMatrix::new(&g, 0.5).unwrap();
    let b = matrix(Topology::Cycle, 4, 0.5);
    assert_eq!(a.dense(), b.dense());
    assert!(matches!(Graph::parse_edge_list("4\n0 1\n2 3\n"), Err(TopologyError::Disconnected(_))));
}
