#![allow(dead_code)]

use aoi::{topology, AugmentedNetwork, NetworkSpec, SubsetId};

pub fn two_node() -> AugmentedNetwork {
    topology::serial_cascade(1.0, &[1.0]).unwrap()
}

/// Source `s`, relays `x` and `y` that talk to each other, sink `t`.
pub fn diamond_spec(lambda: f64, r: [f64; 6]) -> NetworkSpec {
    NetworkSpec::parse(&format!(
        r#"{{"lambda":{lambda},"source":"s","edges":[
            {{"from":"s","to":"x","rate":{}}},{{"from":"s","to":"y","rate":{}}},
            {{"from":"x","to":"y","rate":{}}},{{"from":"y","to":"x","rate":{}}},
            {{"from":"x","to":"t","rate":{}}},{{"from":"y","to":"t","rate":{}}}]}}"#,
        r[0], r[1], r[2], r[3], r[4], r[5]
    ))
    .unwrap()
}

/// Every small network the property suites sweep over, all with at most six nodes.
pub fn small_nets() -> Vec<(String, AugmentedNetwork)> {
    let mut nets = vec![
        ("two-node".to_string(), two_node()),
        ("serial".to_string(), topology::serial_cascade(1.0, &[2.0; 4]).unwrap()),
        ("triangle-distinct".to_string(), topology::triangle(1.0, 1.0, 2.0, 3.0).unwrap()),
        ("triangle-equal".to_string(), topology::triangle(1.0, 1.0, 1.0, 1.0).unwrap()),
        ("two-triangles".to_string(), topology::triangle_cascade(1.0, &[(1.0, 1.0, 1.0); 2]).unwrap()),
        ("diamond".to_string(), AugmentedNetwork::new(&diamond_spec(0.8, [1.0, 0.6, 2.0, 0.3, 1.4, 0.9])).unwrap()),
    ];
    for (n, extra, seed) in [(3, 2, 1), (4, 3, 2), (5, 4, 3), (6, 5, 4), (6, 9, 5)] {
        nets.push((format!("random-{n}-{seed}"), topology::random_ssn(n, extra, seed).unwrap()));
    }
    nets
}

pub fn all_subsets(net: &AugmentedNetwork) -> impl Iterator<Item = SubsetId> {
    (1u64..1 << net.node_count()).map(SubsetId::from_mask)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
