use proptest::prelude::*;
use srb_core::config::RunConfig;
use srb_core::family::apply_motion;
use srb_core::{MapDescriptor, Window};

fn conjugated() -> MapDescriptor {
    MapDescriptor::chebyshev_with_motion(vec![1.0], Window { lo: -0.2, hi: 0.2 }).unwrap()
}

fn shipped(name: &str) -> MapDescriptor {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::load(&path).unwrap().family.build().unwrap()
}

proptest! {
    #[test]
    fn endpoints_map_to_minus_one(t in -0.2f64..=0.2) {
        let m = conjugated();
        for x in [-1.0, 1.0] {
            prop_assert!((m.eval_map(t, x).unwrap() + 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn motion_conjugates_base_to_family(t in -0.2f64..=0.2, x in -1.0f64..=1.0) {
        let m = conjugated();
        let motion = m.motion().unwrap();
        let base = m.base().unwrap();
        let lhs = apply_motion(motion, t, base.eval_map(0.0, x).unwrap()).unwrap();
        let rhs = m.eval_map(t, apply_motion(motion, t, x).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn derivative_matches_central_difference(t in -0.2f64..=0.2, x in -0.99f64..=0.99) {
        let m = conjugated();
        let h = 1e-5;
        let fd = (m.eval_map(t, x + h).unwrap() - m.eval_map(t, x - h).unwrap()) / (2.0 * h);
        let d = m.eval_deriv(t, x, 1).unwrap();
        prop_assert!((fd - d).abs() <= 1e-6, "{fd} vs {d}");
    }

    #[test]
    fn map_preserves_interval(t in -0.2f64..=0.2, x in -1.0f64..=1.0) {
        let y = conjugated().eval_map(t, x).unwrap();
        prop_assert!((-1.0..=1.0).contains(&y));
    }
}

#[test]
fn schwarzian_nonpositive_on_shipped_families() {
    for name in ["chebyshev.json", "chebyshev_motion.json", "attracting.json"] {
        let m = shipped(name);
        for t in m.window().samples(5) {
            for k in 0..=10_000 {
                let x = -1.0 + 2.0 * k as f64 / 10_000.0;
                if x.abs() < 1e-3 {
                    continue;
                }
                match m.schwarzian(t, x) {
                    Ok(s) => assert!(s <= 0.0, "{name}: S({x}) = {s} at t = {t}"),
                    Err(e) => panic!("{name}: {e} at x = {x}, t = {t}"),
                }
            }
        }
    }
}

#[test]
fn observable_examples() {
    use srb_core::Observable;
    let m = MapDescriptor::chebyshev().at(0.0).unwrap();
    assert_eq!(Observable::monomial(2).eval(&m, 0.5).unwrap(), 0.25);
    assert!((Observable::LogAbsDerivative.eval(&m, 0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
    assert_eq!(Observable::monomial(1).eval(&m, -1.0).unwrap(), -1.0);
}
