mod common;

use aoi::closed_forms::{self, TriangleRates};
use aoi::exact::{self, ExactLaw};
use aoi::{cascade, topology, AugmentedNetwork, SubsetId};
use num_complex::Complex64;
use proptest::prelude::*;

use common::{all_subsets, close, small_nets};

fn random_net() -> impl Strategy<Value = AugmentedNetwork> {
    (2usize..=6, 0usize..8, any::<u64>()).prop_map(|(n, extra, seed)| topology::random_ssn(n, extra, seed).unwrap())
}

fn check_subset_monotonicity(net: &AugmentedNetwork) {
    let table = exact::average_age_all(net).unwrap();
    let values: Vec<(u64, f64)> = table.iter().collect();
    for &(a, ea) in &values {
        for &(b, eb) in &values {
            if b & a == a {
                assert!(eb <= ea * (1.0 + 1e-12), "E[{b:b}] = {eb} > E[{a:b}] = {ea}");
            }
        }
    }
}

fn check_source_floor(net: &AugmentedNetwork) {
    let floor = 1.0 / net.lambda();
    let source = net.source();
    for (mask, v) in exact::average_age_all(net).unwrap().iter() {
        if SubsetId::from_mask(mask).contains(source) {
            assert_eq!(v, floor);
        } else {
            assert!(v > floor, "subset {mask:b}: {v} <= {floor}");
        }
    }
}

fn check_mgf_derivative(net: &AugmentedNetwork) {
    let h = 1e-4;
    let table = exact::average_age_all(net).unwrap();
    for a in all_subsets(net) {
        let law = ExactLaw::new(net, &a).unwrap();
        assert!((law.mgf_real(0.0).unwrap() - 1.0).abs() <= f64::EPSILON);
        let slope = (law.mgf_real(h).unwrap() - law.mgf_real(-h).unwrap()) / (2.0 * h);
        let mean = table.get(&a).unwrap();
        assert!(((slope - mean) / mean).abs() < 1e-6, "{}: {slope} vs {mean}", net.subset_label(&a));
    }
}

#[test]
fn subset_monotonicity_on_fixed_nets() {
    for (_, net) in small_nets() {
        check_subset_monotonicity(&net);
    }
}

#[test]
fn source_floor_on_fixed_nets() {
    for (_, net) in small_nets() {
        check_source_floor(&net);
    }
}

#[test]
fn mgf_derivative_matches_mean_on_fixed_nets() {
    for (_, net) in small_nets() {
        check_mgf_derivative(&net);
    }
}

#[test]
fn complex_mgf_agrees_with_real_mgf() {
    for (_, net) in small_nets() {
        for a in all_subsets(&net).take(20) {
            let law = ExactLaw::new(&net, &a).unwrap();
            let s = 0.3 * law.convergence_bound();
            let z = law.mgf(Complex64::new(s, 0.0)).unwrap();
            assert!((z.re - law.mgf_real(s).unwrap()).abs() < 1e-12 * z.re.abs());
            assert!(z.im.abs() < 1e-14);
        }
    }
}

#[test]
fn edge_addition_never_increases_singleton_means() {
    for (_, net) in small_nets() {
        let before = exact::average_age_all(&net).unwrap();
        let labels: Vec<String> = net.labels().to_vec();
        let source = net.label(net.source()).to_string();
        for u in &labels {
            for w in labels.iter().filter(|w| *w != u && **w != source) {
                let bigger = net.with_edge(u, w, 0.7).unwrap();
                let after = exact::average_age_all(&bigger).unwrap();
                for v in net.user_nodes() {
                    assert!(after.singleton(v) <= before.singleton(v) * (1.0 + 1e-12));
                }
            }
        }
    }
}

#[test]
fn closed_forms_match_the_recursion() {
    let cases: [(f64, [f64; 3]); 5] = [
        (1.0, [1.0, 2.0, 3.0]),
        (1.0, [1.0, 1.0, 1.0]),
        (2.0, [1.0, 1.0, 1.0]),
        (0.4, [3.0, 0.2, 0.9]),
        (1.7, [0.5, 0.5, 4.0]),
    ];
    for (lambda, [a, b, c]) in cases {
        let net = topology::triangle(lambda, a, b, c).unwrap();
        let d = net.subset(&["d"]).unwrap();
        let formula = closed_forms::triangle_age(TriangleRates::new(lambda, a, b, c).unwrap()).unwrap();
        assert!(close(exact::average_age(&net, &d).unwrap(), formula, 1e-9));
    }
    for rates in [vec![2.0; 4], vec![1.0], vec![1.0, 4.0], vec![0.3, 1.1, 7.0, 2.2, 0.9]] {
        let net = topology::serial_cascade(0.5, &rates).unwrap();
        let last = net.subset(&[format!("v{}", rates.len())]).unwrap();
        let formula = closed_forms::serial_cascade_age(0.5, &rates).unwrap();
        assert!(close(exact::average_age(&net, &last).unwrap(), formula, 1e-9));
    }
    let triangles = [(1.0, 2.0, 0.5), (0.7, 0.7, 1.3), (2.0, 1.0, 3.0)];
    let net = topology::triangle_cascade(1.2, &triangles).unwrap();
    let formula = closed_forms::triangle_cascade_age(1.2, &triangles).unwrap();
    assert!(close(exact::average_age(&net, &net.subset(&["v6"]).unwrap()).unwrap(), formula, 1e-9));
}

#[test]
fn four_triangles_give_four() {
    let net = topology::triangle_cascade(1.0, &[(1.0, 1.0, 1.0); 4]).unwrap();
    let end = net.subset(&["v8"]).unwrap();
    assert!(close(exact::average_age(&net, &end).unwrap(), 4.0, 1e-9));
    assert!(close(closed_forms::triangle_cascade_age(1.0, &[(1.0, 1.0, 1.0); 4]).unwrap(), 4.0, 1e-9));
}

#[test]
fn triangle_tail_matches_inversion() {
    // Destination age is Exp(lambda) plus the triangle's shortest path.
    let r = TriangleRates::new(1.0, 1.0, 2.0, 3.0).unwrap();
    let net = topology::triangle(1.0, 1.0, 2.0, 3.0).unwrap();
    let law = ExactLaw::new(&net, &net.subset(&["d"]).unwrap()).unwrap();
    for d in [0.5, 1.0, 2.0, 4.0] {
        // P(E + X <= d) = int_0^d f_X(x) (1 - e^{-(d - x)}) dx, with f_X from the tail.
        let steps = 4000;
        let h = d / steps as f64;
        let mut acc = 0.0;
        for k in 0..=steps {
            let x = k as f64 * h;
            let eps = 1e-6;
            let lo = (x - eps).max(0.0);
            let density = (closed_forms::triangle_min_tail(r, lo).unwrap()
                - closed_forms::triangle_min_tail(r, x + eps).unwrap())
                / (x + eps - lo);
            let weight = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += weight * density * (1.0 - (-(d - x)).exp());
        }
        let oracle = acc * h / 3.0;
        assert!(close(law.cdf(d).unwrap().value, oracle, 1e-5), "d = {d}");
    }
}

#[test]
fn cdf_is_monotone_and_interior() {
    for (name, net) in small_nets() {
        for v in net.user_nodes() {
            let law = ExactLaw::new(&net, &SubsetId::singleton(v)).unwrap();
            let mut prev = 0.0;
            for k in 0..=12 {
                let d = 0.5 * k as f64;
                let p = law.cdf(d).unwrap().value;
                assert!((-1e-6..=1.0 + 1e-6).contains(&p), "{name} {}: cdf({d}) = {p}", net.label(v));
                assert!(p >= prev - 1e-6, "{name} {}: cdf not monotone at {d}", net.label(v));
                prev = p;
            }
            let proxy = 1.0 / net.lambda() + net.edges()[1..].iter().map(|e| 1.0 / e.rate).sum::<f64>();
            let p = law.cdf(proxy).unwrap().value;
            assert!(p > 0.0 && p < 1.0, "{name}: cdf at proxy {proxy} = {p}");
        }
    }
}

#[test]
fn chernoff_dominates_the_tail() {
    for (_, net) in small_nets() {
        for v in net.user_nodes() {
            let law = ExactLaw::new(&net, &SubsetId::singleton(v)).unwrap();
            for d in [0.5, 1.0, 2.0, 4.0, 8.0] {
                let tail = 1.0 - law.cdf(d).unwrap().value;
                let bound = law.chernoff(d).unwrap();
                assert!(bound <= 1.0);
                assert!(bound >= tail - 1e-6, "{}: {bound} < {tail} at {d}", net.label(v));
            }
        }
    }
}

fn chain_spec(lambda: f64, blocks: &[(u8, [f64; 6])]) -> aoi::NetworkSpec {
    // Block kinds: 0 = single hop, 1 = triangle, 2 = diamond with a back edge.
    let mut edges = Vec::new();
    let mut next = 1;
    let mut entry = 0;
    let name = |i: usize| format!("b{i}");
    for &(kind, r) in blocks {
        let exit = match kind {
            0 => {
                edges.push((entry, next, r[0]));
                next += 1;
                next - 1
            }
            1 => {
                let (y, z) = (next, next + 1);
                edges.extend([(entry, y, r[0]), (y, z, r[1]), (entry, z, r[2])]);
                next += 2;
                z
            }
            _ => {
                let (x, y, t) = (next, next + 1, next + 2);
                edges.extend([
                    (entry, x, r[0]),
                    (entry, y, r[1]),
                    (x, y, r[2]),
                    (y, x, r[3]),
                    (x, t, r[4]),
                    (y, t, r[5]),
                ]);
                if entry != 0 {
                    edges.push((t, entry, r[3] + r[4]));
                }
                next += 3;
                t
            }
        };
        entry = exit;
    }
    aoi::NetworkSpec {
        lambda,
        source: name(0),
        nodes: (0..next).map(name).collect(),
        edges: edges.into_iter().map(|(u, v, rate)| aoi::EdgeSpec { from: name(u), to: name(v), rate }).collect(),
    }
}

fn chain_blocks() -> impl Strategy<Value = Vec<(u8, [f64; 6])>> {
    prop::collection::vec((0u8..3, prop::array::uniform6(0.2f64..3.0)), 2..6)
        .prop_filter("at most 14 nodes", |bs| bs.iter().map(|(k, _)| [1, 2, 3][*k as usize]).sum::<usize>() < 14)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn prop_subset_monotonicity(net in random_net()) {
        check_subset_monotonicity(&net);
    }

    #[test]
    fn prop_source_floor(net in random_net()) {
        check_source_floor(&net);
    }

    #[test]
    fn prop_mgf_derivative(net in random_net()) {
        check_mgf_derivative(&net);
    }

    #[test]
    fn prop_boundaries_positive(net in random_net()) {
        let total: f64 = net.user_nodes().map(|v| net.boundary(&SubsetId::singleton(v)).unwrap().rate_sum).sum();
        prop_assert!((total - net.total_rate()).abs() <= 1e-12 * net.total_rate());
        for a in all_subsets(&net) {
            prop_assert!(net.boundary(&a).unwrap().rate_sum > 0.0);
        }
    }

    #[test]
    fn prop_edge_addition(net in random_net(), u in 0usize..6, w in 1usize..6, rate in 0.1f64..5.0) {
        let n = net.node_count();
        let (u, w) = (u % n, w % n);
        prop_assume!(u != w && w != net.source().0);
        let bigger = net.with_edge(&net.labels()[u].clone(), &net.labels()[w].clone(), rate).unwrap();
        let before = exact::average_age_all(&net).unwrap();
        let after = exact::average_age_all(&bigger).unwrap();
        for v in net.user_nodes() {
            prop_assert!(after.singleton(v) <= before.singleton(v) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn prop_cascade_equals_exact(lambda in 0.3f64..3.0, blocks in chain_blocks()) {
        let net = AugmentedNetwork::new(&chain_spec(lambda, &blocks)).unwrap();
        let chain = cascade::decompose_chain(&net).unwrap();
        let ages = cascade::chain_average_ages(&net, &chain).unwrap();
        let exact = exact::average_age_all(&net).unwrap();
        for v in net.user_nodes() {
            prop_assert!((ages.get(v) - exact.singleton(v)).abs() <= 1e-9, "{}: {} vs {}", net.label(v), ages.get(v), exact.singleton(v));
        }
    }
}

#[test]
fn cascade_equals_exact_on_triangle_chains() {
    for n in 1..=6 {
        let triangles: Vec<(f64, f64, f64)> =
            (0..n).map(|i| (0.5 + 0.3 * i as f64, 1.7 - 0.2 * i as f64, 0.9 + 0.1 * (i % 3) as f64)).collect();
        let net = topology::triangle_cascade(1.3, &triangles).unwrap();
        let exact = exact::average_age_all(&net).unwrap();
        match cascade::decompose_chain(&net) {
            Ok(chain) => {
                assert_eq!(chain.len(), n);
                let ages = cascade::chain_average_ages(&net, &chain).unwrap();
                for v in net.user_nodes() {
                    assert!(close(ages.get(v), exact.singleton(v), 1e-9));
                }
            }
            Err(e) => assert_eq!(n, 1, "{e}"),
        }
    }
}
