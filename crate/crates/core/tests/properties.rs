use std::f64::consts::PI;

use approx::{abs_diff_eq, relative_eq};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use stefan_kinetic::config::RawConfig;
use stefan_kinetic::io::{fmt_f64, parse_trajectory_csv, trajectory_csv};
use stefan_kinetic::tridiag::Tridiagonal;
use stefan_kinetic::{
    extract_rank_one, run, Grid1D, KernelProfile, LaminateSpec, MollifiedDirac, PhysicalParams, SolverConfig,
    TemperatureField, VelocityLaw, VelocityTable,
};

fn unit_vector() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_map(Vector3::from)
        .prop_filter("not too short", |v| v.norm() > 0.1)
        .prop_map(|v| v.normalize())
}

fn profile() -> impl Strategy<Value = KernelProfile> {
    prop_oneof![Just(KernelProfile::Bump), Just(KernelProfile::Cosine)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mollifier_weights_are_a_probability_density(
        n in 32usize..400,
        width_cells in 2.5f64..20.0,
        centre in 0.0f64..=1.0,
        profile in profile(),
    ) {
        let grid = Grid1D::new(n, 1.0).unwrap();
        let d = MollifiedDirac::new(width_cells * grid.ds(), centre, profile);
        let w = d.evaluate_on_grid(&grid).unwrap();
        let mass: f64 = w.iter().sum::<f64>() * grid.ds();
        prop_assert!(abs_diff_eq!(mass, 1.0, epsilon = 1e-13));
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert_eq!(w[0], 0.0);
        prop_assert_eq!(w[n], 0.0);
    }

    #[test]
    fn rank_one_round_trip(n in unit_vector(), dir in unit_vector(), size in 1e-3f64..10.0) {
        let a = dir * size;
        let m = Matrix3::identity() + a * n.transpose();
        let r = extract_rank_one(&m).unwrap();
        prop_assert!(relative_eq!(r.n.norm(), 1.0, epsilon = 1e-14));
        let rebuilt = Matrix3::identity() + r.a * r.n.transpose();
        prop_assert!((rebuilt - m).amax() <= 1e-12 * (1.0 + size));
    }

    #[test]
    fn incompatible_barycentre_is_rejected(n1 in unit_vector(), n2 in unit_vector(), lambda in 0.05f64..0.95) {
        prop_assume!(n1.cross(&n2).norm() > 0.1);
        let a = Matrix3::identity() + Vector3::new(0.3, 0.1, 0.0) * n1.transpose();
        let b = Matrix3::identity() + Vector3::new(0.0, 0.2, 0.4) * n2.transpose();
        prop_assume!(a.determinant().abs() > 1e-3 && b.determinant().abs() > 1e-3);
        let sv = (a * lambda + b * (1.0 - lambda) - Matrix3::identity()).singular_values();
        let mut s = [sv[0], sv[1], sv[2]];
        s.sort_by(|x, y| y.total_cmp(x));
        prop_assume!(s[1] > 1e-8 * s[0]);
        prop_assert!(LaminateSpec::new(a, b, lambda).is_err());
    }

    #[test]
    fn thomas_matches_residual(
        diag_extra in prop::collection::vec(0.1f64..5.0, 2..60),
        seed in 0u64..1000,
    ) {
        let n = diag_extra.len();
        let off = |i: usize| -0.5 - ((seed + i as u64) % 7) as f64 / 14.0;
        let sub: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { off(i) }).collect();
        let sup: Vec<f64> = (0..n).map(|i| if i + 1 == n { 0.0 } else { off(i + 1) }).collect();
        let diag: Vec<f64> = (0..n).map(|i| sub[i].abs() + sup[i].abs() + diag_extra[i]).collect();
        let x: Vec<f64> = (0..n).map(|i| ((i as f64 + seed as f64) * 0.7).sin()).collect();
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut r = diag[i] * x[i];
                if i > 0 { r += sub[i] * x[i - 1]; }
                if i + 1 < n { r += sup[i] * x[i + 1]; }
                r
            })
            .collect();
        Tridiagonal::new(&sub, &diag, &sup).solve_in_place(&mut rhs);
        for (got, want) in rhs.iter().zip(&x) {
            prop_assert!(abs_diff_eq!(got, want, epsilon = 1e-12));
        }
    }

    #[test]
    fn monotone_tables_satisfy_sign_condition(
        left in prop::collection::vec(0.01f64..2.0, 1..6),
        right in prop::collection::vec(0.01f64..2.0, 1..6),
        theta_t in 0.5f64..2.0,
    ) {
        // decreasing speeds through zero at theta_T
        let mut pts = Vec::new();
        let mut v = 0.0;
        for (i, dv) in left.iter().enumerate() {
            v += dv;
            pts.push((theta_t - 0.1 * (i + 1) as f64, v));
        }
        pts.push((theta_t, 0.0));
        let mut v = 0.0;
        for (i, dv) in right.iter().enumerate() {
            v -= dv;
            pts.push((theta_t + 0.1 * (i + 1) as f64, v));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let law = VelocityLaw::monotone_table(VelocityTable::new(pts).unwrap(), theta_t).unwrap();
        prop_assert!(law.validate_sign_condition(1001, law.default_half_width()).is_ok());
    }

    #[test]
    fn floats_round_trip_through_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn raw_config_round_trips(entries in prop::collection::btree_map("[a-z]{1,6}\\.[a-z_]{1,8}", "[a-z0-9.]{1,10}", 1..10)) {
        let text: String = entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let raw = RawConfig::parse(&text).unwrap();
        prop_assert_eq!(raw.to_map(), entries.clone());
        prop_assert_eq!(RawConfig::parse(&raw.to_text()).unwrap().to_map(), entries);
    }
}

// k stays at or below 10 on this grid; see `coarse_stiff_imex_overshoots_band`
proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_keeps_band_and_monotone_front(
        amplitude in 0.0f64..=1.0,
        u0 in 0.05f64..0.95,
        k in 0.5f64..10.0,
        theta_c_sign in prop_oneof![Just(1.0), Just(-1.0)],
    ) {
        let theta_b = if theta_c_sign > 0.0 { 0.0 } else { 2.0 };
        let params = PhysicalParams::unit(1.0, theta_b).unwrap();
        let theta_c = params.theta_c();
        let law = VelocityLaw::linear(k, 1.0).unwrap();
        let grid = Grid1D::new(64, 1.0).unwrap();
        let init = TemperatureField::from_fn(grid, |s| theta_c * amplitude * (PI * s).sin()).unwrap();
        let r = run(init, u0, &params, &law, &SolverConfig::implicit_default(&grid, 0.5)).unwrap();
        let (lo, hi) = if theta_c > 0.0 { (0.0, theta_c) } else { (theta_c, 0.0) };
        for s in &r.snapshots {
            prop_assert!(s.field.min() >= lo - 1e-10 && s.field.max() <= hi + 1e-10);
        }
        for w in r.trajectory.samples().windows(2) {
            prop_assert!(theta_c_sign * (w[1].u - w[0].u) >= -1e-14);
        }
        let back = parse_trajectory_csv(&trajectory_csv(&r.trajectory), 1.0).unwrap();
        prop_assert_eq!(back.samples(), r.trajectory.samples());
    }
}

/// The explicit interface update uses the old interface temperature, so a
/// latent pulse that one implicit diffusion step cannot spread can push the
/// field past the band. Refining the grid restores it.
#[test]
fn coarse_stiff_imex_overshoots_band() {
    let params = PhysicalParams::unit(1.0, 0.0).unwrap();
    let law = VelocityLaw::linear(20.0, 1.0).unwrap();
    let peak = |n: usize| {
        let grid = Grid1D::new(n, 1.0).unwrap();
        let r = run(TemperatureField::zeros(grid), 0.3, &params, &law, &SolverConfig::implicit_default(&grid, 0.5)).unwrap();
        r.snapshots.iter().map(|s| s.field.max()).fold(f64::NEG_INFINITY, f64::max)
    };
    assert!(peak(64) > 1.1);
    assert!(peak(512) <= 1.0 + 1e-10);
}
