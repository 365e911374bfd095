use serde_json::Value;
use solcusp_web::{curvature_curve_json, lattice_json, warp_profile_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn profile_of_shifted_exp_has_positive_margins() {
    let v = parse(warp_profile_json("shifted-exp", 0.0, 0.0, -3.0, 3.0, 0.5).unwrap());
    let t = v["t"].as_array().unwrap();
    assert_eq!(t.len(), 13);
    for key in ["margin_a", "margin_b", "margin_c", "margin_d"] {
        assert!(v[key]
            .as_array()
            .unwrap()
            .iter()
            .all(|m| m.as_f64().unwrap() > 0.0));
    }
    let f0 = v["f"][6].as_f64().unwrap();
    assert!((f0 - 2.0).abs() < 1e-15);
}

#[test]
fn interpolated_profile_reports_the_validated_t0() {
    let v = parse(warp_profile_json("interpolated", -4.0, -1.0, -6.0, 1.0, 0.01).unwrap());
    assert_eq!(v["family"], "interpolated");
    assert!(v["widened_t0"].as_f64().unwrap() <= -4.0);
}

#[test]
fn curve_of_shifted_exp_is_negative_and_inside_the_exact_range() {
    let v = parse(curvature_curve_json("shifted-exp", 0.0, 0.0, -2.0, 2.0, 1.0, 2000, 7).unwrap());
    assert_eq!(v["global_negative"], true);
    let get = |k: &str| -> Vec<f64> {
        v[k].as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect()
    };
    let (lo, hi, elo, ehi) = (
        get("k_min"),
        get("k_max"),
        get("exact_min"),
        get("exact_max"),
    );
    for i in 0..lo.len() {
        assert!(elo[i] <= lo[i] + 1e-12 && hi[i] <= ehi[i] + 1e-12);
        assert!(hi[i] < 0.0);
    }
}

#[test]
fn lattice_for_the_golden_matrix() {
    let v = parse(lattice_json(2, 1, 1, 1).unwrap());
    let l = v["stretch"].as_f64().unwrap();
    assert!((l - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(lattice_json(2, 1, 1, 2).is_err());
    assert!(warp_profile_json("cubic", 0.0, 0.0, 0.0, 1.0, 0.1).is_err());
    assert!(warp_profile_json("pure-exp", 0.0, 0.0, 1.0, 0.0, 0.1).is_err());
    assert!(curvature_curve_json("pure-exp", 0.0, 0.0, 0.0, 1.0, 0.1, 10, 1).is_err());
}
