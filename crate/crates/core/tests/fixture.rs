use nfbsm::bsm::fibonacci_directions;
use nfbsm::field::RigidSphere;
use nfbsm::hrtf::{analytic_sphere_hrtf, load_hrtf, Ear, EarGeometry, SourceModel};
use nfbsm::sphmath::Order;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/sphere_4dir_3freq.hrtf");

// The fixture was written by `bsm-sweep gen-hrtf --grid-size 4
// --frequencies-hz 500,2000,8000 --model point --reference-distance 3.2`.
#[test]
fn fixture_matches_regenerated_set() {
    let stored = load_hrtf(FIXTURE).unwrap();
    let fresh = analytic_sphere_hrtf(
        &RigidSphere::default(),
        &EarGeometry::default(),
        &fibonacci_directions(4),
        &[500.0, 2000.0, 8000.0],
        SourceModel::NearFieldPoint { distance_m: 3.2 },
        Order::new(30).unwrap(),
    )
    .unwrap();
    assert_eq!(stored.reference_distance_m(), 3.2);
    assert_eq!(stored.frequencies_hz(), fresh.frequencies_hz());
    for (a, b) in stored.directions().iter().zip(fresh.directions()) {
        assert!(a.cos_angle_to(b) > 1.0 - 1e-15);
    }
    for ear in Ear::BOTH {
        for q in 0..4 {
            for f in 0..3 {
                let (a, b) = (stored.response(ear, q, f), fresh.response(ear, q, f));
                assert!((a - b).norm() < 1e-9, "{ear:?} {q} {f}");
            }
        }
    }
}
