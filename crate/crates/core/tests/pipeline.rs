//! Cross-module runs: sampled lattices routed end to end, distillation
//! feeding the percolation check, and the strategy comparisons.

use entperc::distillation::{recycling_scp, scheme_scp, Scheme};
use entperc::percolation::{cep_feasible, generate_lattice, sample_bonds, Geometry, LatticeSpec};
use entperc::rng::stream_rng;
use entperc::routing::{burning_route, controller_path, ghz_protocol, SingletGraph};
use entperc::strategies::{pms_strategy_report, square_protocol_prob, BondPair};

#[test]
fn sampled_lattices_route_consistently() {
    let spec = LatticeSpec::open(Geometry::Square, 6).unwrap();
    let lattice = generate_lattice(&spec).unwrap();
    let b = lattice.num_nodes - 1;
    let mut successes = 0;
    for trial in 0..60 {
        let p = 0.3 + 0.01 * trial as f64;
        let config = sample_bonds(&lattice, p, &mut stream_rng(11, "pipeline", trial));
        let graph = SingletGraph::from_bond_config(&lattice, &config, 0, b).unwrap();
        let shortest = controller_path(&graph);
        let burn = burning_route(&graph, false, trial);
        let ghz = ghz_protocol(&graph, &[0, b], trial).unwrap();
        assert_eq!(shortest.is_some(), burn.path.is_some(), "trial {trial}");
        assert_eq!(shortest.is_some(), ghz.success, "trial {trial}");
        if let (Some(s), Some(p)) = (&shortest, &burn.path) {
            successes += 1;
            assert_eq!(s.len(), p.len());
            assert_eq!(burn.rounds_used, 2 * (p.len() - 1));
        }
    }
    assert!(successes > 0 && successes < 60);
}

#[test]
fn fused_burning_saves_distillation_messages() {
    let spec = LatticeSpec::open(Geometry::Triangular, 5).unwrap();
    let lattice = generate_lattice(&spec).unwrap();
    let config = sample_bonds(&lattice, 0.6, &mut stream_rng(3, "pipeline", 0));
    let graph = SingletGraph::from_bond_config(&lattice, &config, 0, lattice.num_nodes - 1).unwrap();
    let plain = burning_route(&graph, false, 1);
    let fused = burning_route(&graph, true, 1);
    assert_eq!(plain.path.is_some(), fused.path.is_some());
    assert_eq!(plain.distillation_messages, 2 * lattice.bonds.len());
    assert_eq!(fused.distillation_messages, 0);
}

#[test]
fn distilled_bonds_feed_percolation() {
    // two copies at the optimum give 1/2: above triangular, not above square
    let two = cep_feasible(2, 0.5, 1.0, Geometry::Square, Scheme::Recycling).unwrap();
    assert!(!two.feasible);
    assert!(cep_feasible(2, 0.5, 1.0, Geometry::Triangular, Scheme::Recycling).unwrap().feasible);
    for geometry in [Geometry::Square, Geometry::Honeycomb, Geometry::SimpleCubic, Geometry::Fcc] {
        let r = cep_feasible(4, 0.5, 1.0, geometry, Scheme::Recycling).unwrap();
        assert_eq!(r.scp, recycling_scp(4, 0.5, 1.0).unwrap());
        assert_eq!(r.feasible, r.scp > geometry.threshold());
    }
    let dss = scheme_scp(Scheme::Dss, 3, 0.5, 1.0).unwrap();
    assert!(dss > Geometry::Square.threshold());
}

#[test]
fn strategies_agree_on_pure_bonds() {
    let bond = BondPair::new(0.7, 1.0, 0.6, 1.0).unwrap();
    let report = pms_strategy_report(&bond, &bond).unwrap();
    assert!(report.p_h + 1e-12 >= report.p_cep);
    let square = square_protocol_prob(&bond);
    assert!(square.p_sq + 1e-12 >= square.p_cep_tilde);
    assert!((0.0..=1.0).contains(&square.p_sq));
}
