use gradreg::oracle::seeded_stream;
use gradreg::{ConstraintSet, Vector};
use proptest::prelude::*;
use rand::Rng;

fn sets() -> Vec<ConstraintSet<f64>> {
    vec![
        ConstraintSet::ball(Vector::new(vec![0.5, -1.0, 0.0, 2.0]).unwrap(), 1.5).unwrap(),
        ConstraintSet::boxed(
            Vector::new(vec![-1.0, 0.0, -2.0, 0.5]).unwrap(),
            Vector::new(vec![1.0, 0.5, 3.0, 0.5]).unwrap(),
        )
        .unwrap(),
        ConstraintSet::simplex(4, 2.0).unwrap(),
    ]
}

fn close(a: &Vector<f64>, b: &Vector<f64>) -> f64 {
    a.max_abs_diff(b)
}

#[test]
fn idempotent_and_nonexpansive_on_ten_thousand_pairs() {
    let mut rng = seeded_stream(77);
    for set in sets() {
        for _ in 0..10_000 {
            let scale = rng.gen_range(0.1..10.0);
            let x = Vector::new((0..4).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap();
            let y = Vector::new((0..4).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap();
            let (px, py) = (set.project(&x).unwrap(), set.project(&y).unwrap());
            assert!(close(&set.project(&px).unwrap(), &px) <= 1e-10);
            assert!(px.dist(&py) <= x.dist(&y) + 1e-10);
            assert!(set.contains(&px, 1e-10));
            assert!(px.dist(&py) <= set.diameter() + 1e-10);
        }
    }
}

#[test]
fn projection_is_the_nearest_point() {
    // perturbing the projection inside the set never gets closer
    let mut rng = seeded_stream(5);
    for set in sets() {
        for _ in 0..500 {
            let x = Vector::new((0..4).map(|_| rng.gen_range(-4.0..4.0)).collect()).unwrap();
            let px = set.project(&x).unwrap();
            for _ in 0..10 {
                let z = Vector::new((0..4).map(|_| rng.gen_range(-4.0..4.0)).collect()).unwrap();
                let q = set.project(&z).unwrap();
                let t = rng.gen_range(0.0..1.0);
                let mix = px.lincomb(1.0 - t, t, &q);
                assert!(mix.dist(&x) >= px.dist(&x) - 1e-10);
            }
        }
    }
}

#[test]
fn simplex_projection_matches_grid_search() {
    let set = ConstraintSet::simplex(2, 1.0).unwrap();
    let x = Vector::new(vec![1.0, 1.0]).unwrap();
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=100_000 {
        let t = k as f64 / 100_000.0;
        let d = (t - 1.0).powi(2) + (1.0 - t - 1.0).powi(2);
        if d < best.0 {
            best = (d, t);
        }
    }
    let p = set.project(&x).unwrap();
    assert!((p[0] - best.1).abs() < 1e-5 && (p[1] - (1.0 - best.1)).abs() < 1e-5);
    assert_eq!(p.as_slice(), &[0.5, 0.5]);
}

#[test]
fn diameters_follow_the_closed_forms() {
    assert_eq!(ConstraintSet::ball(Vector::<f64>::zeros(3), 2.0).unwrap().diameter(), 4.0);
    assert_eq!(ConstraintSet::cube(4, 1.0f64).unwrap().diameter(), 4.0);
    assert!((ConstraintSet::simplex(5, 3.0f64).unwrap().diameter() - 3.0 * 2f64.sqrt()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn ball_projection_properties(x in prop::array::uniform3(-50.0f64..50.0), y in prop::array::uniform3(-50.0f64..50.0), r in 0.01f64..10.0) {
        let set = ConstraintSet::ball(Vector::zeros(3), r).unwrap();
        let (x, y) = (Vector::new(x.to_vec()).unwrap(), Vector::new(y.to_vec()).unwrap());
        let (px, py) = (set.project(&x).unwrap(), set.project(&y).unwrap());
        prop_assert!(set.project(&px).unwrap().max_abs_diff(&px) <= 1e-10);
        prop_assert!(px.dist(&py) <= x.dist(&y) + 1e-10);
    }

    #[test]
    fn simplex_projection_properties(x in prop::collection::vec(-20.0f64..20.0, 1..12), s in 0.1f64..5.0) {
        let set = ConstraintSet::simplex(x.len(), s).unwrap();
        let x = Vector::new(x).unwrap();
        let px = set.project(&x).unwrap();
        prop_assert!(set.contains(&px, 1e-10));
        prop_assert!(set.project(&px).unwrap().max_abs_diff(&px) <= 1e-10);
    }
}
