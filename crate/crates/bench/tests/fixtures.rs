use bagcq::inequality::decide_max;
use bagcq::structures::count_homomorphisms;
use bagcq::{decide_containment, ConeId, Outcome, PipelineConfig};
use bagcq_bench::*;

#[test]
fn fixtures_have_their_documented_answers() {
    let cfg = PipelineConfig::default();
    let (a, b) = vee_pair();
    assert_eq!(
        decide_containment(&a, &b, &cfg).unwrap().outcome,
        Outcome::Contained
    );
    let (a, b) = normal_pair();
    assert_eq!(
        decide_containment(&a, &b, &cfg).unwrap().outcome,
        Outcome::NotContained
    );
    for k in [3, 5] {
        let (a, b) = cycle_into_path(k);
        assert_eq!(decide_containment(&a, &b, &cfg).unwrap().homomorphisms, k);
    }
    for m in [chain_inequality(), three_way_max(), chain_submodularity(4)] {
        assert!(decide_max(&m, ConeId::Polymatroid).unwrap().is_valid());
    }
    // n(n-1)(n-2) directed triangles
    assert_eq!(
        count_homomorphisms(&triangle(), &complete_graph(5)).unwrap(),
        60
    );
}
