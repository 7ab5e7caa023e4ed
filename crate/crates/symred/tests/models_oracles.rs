//! Closed-form oracles for the concrete models.
//!
//! The three-body geometry in the xxy-gauge and the pendulum geometry both
//! have hand-derivable closed forms. These tests rebuild them from scratch
//! with series arithmetic (or pointwise with dense linear algebra) and
//! compare the embedding-driven pipeline against them coefficient by
//! coefficient.

use nalgebra::{Matrix3, Vector3};
use symred::mech::ReducedChart;
use symred::models::{
    lagrange_triangle_shape, pendulum_system, three_body_system, PendulumParams, ThreeBodyParams,
};
use symred::{Elementary, TruncatedSeries};

fn affine(nv: usize, deg: usize, value: f64, var: usize) -> TruncatedSeries {
    TruncatedSeries::affine(nv, deg, value, var).unwrap()
}

fn constant(nv: usize, deg: usize, value: f64) -> TruncatedSeries {
    TruncatedSeries::constant(nv, deg, value)
}

fn compose(series: &TruncatedSeries, f: Elementary) -> TruncatedSeries {
    series.compose_elementary(f).unwrap()
}

#[track_caller]
fn assert_series_close(label: &str, got: &TruncatedSeries, want: &TruncatedSeries, tol: f64) {
    let scale = 1.0 + want.max_abs_coeff();
    let diff = got.max_coeff_diff(want).unwrap();
    assert!(
        diff <= tol * scale,
        "{label}: max coefficient difference {diff:.3e} at scale {scale:.3e}"
    );
}

/// Jets of the three-body shape functions used by the printed matrices.
struct ThreeBodyJets {
    r1_sq: TruncatedSeries,
    r2_sq: TruncatedSeries,
    sin: TruncatedSeries,
    cos: TruncatedSeries,
    /// `r1^2 + r2^2`
    planar: TruncatedSeries,
    /// `1/(r1^2 + r2^2)`
    planar_inv: TruncatedSeries,
}

impl ThreeBodyJets {
    fn at(q: &[f64; 3], nv: usize, degree: usize) -> Self {
        let r1 = affine(nv, degree, q[0], 0);
        let r2 = affine(nv, degree, q[1], 1);
        let phi = affine(nv, degree, q[2], 2);
        let r1_sq = r1.mul(&r1).unwrap();
        let r2_sq = r2.mul(&r2).unwrap();
        let planar = r1_sq.add(&r2_sq).unwrap();
        ThreeBodyJets {
            planar_inv: compose(&planar, Elementary::Recip),
            planar,
            r1_sq,
            r2_sq,
            sin: compose(&phi, Elementary::Sin),
            cos: compose(&phi, Elementary::Cos),
        }
    }
}

#[test]
fn three_body_inertia_matches_printed_closed_form() {
    let params = ThreeBodyParams::new([1.0; 3], 6.0).unwrap();
    let system = three_body_system(&params).unwrap();
    let q = [4.2, 4.9, 1.3];
    let degree = 4;
    let jets = ThreeBodyJets::at(&q, 3, degree);

    let inertia = system.locked_inertia(&q, degree).unwrap();
    let sin_sq = jets.sin.mul(&jets.sin).unwrap();
    let cos_sq = jets.cos.mul(&jets.cos).unwrap();
    let sin_cos = jets.sin.mul(&jets.cos).unwrap();
    let expected_00 = jets.r2_sq.mul(&sin_sq).unwrap();
    let expected_01 = jets.r2_sq.mul(&sin_cos).unwrap().neg();
    let expected_11 = jets.r1_sq.add(&jets.r2_sq.mul(&cos_sq).unwrap()).unwrap();
    let zero = TruncatedSeries::zero(3, degree);

    assert_series_close("I_11", inertia.entry(0, 0), &expected_00, 1e-11);
    assert_series_close("I_12", inertia.entry(0, 1), &expected_01, 1e-11);
    assert_series_close("I_21", inertia.entry(1, 0), &expected_01, 1e-11);
    assert_series_close("I_22", inertia.entry(1, 1), &expected_11, 1e-11);
    assert_series_close("I_33", inertia.entry(2, 2), &jets.planar, 1e-11);
    for (i, j) in [(0, 2), (2, 0), (1, 2), (2, 1)] {
        assert_series_close("planar I block", inertia.entry(i, j), &zero, 1e-13);
    }
}

#[test]
fn three_body_connection_and_metric_match_printed_closed_forms() {
    let params = ThreeBodyParams::new([1.0; 3], 6.0).unwrap();
    let system = three_body_system(&params).unwrap();
    let q = [4.2, 4.9, 1.3];
    let degree = 4;
    let jets = ThreeBodyJets::at(&q, 3, degree);
    let zero = TruncatedSeries::zero(3, degree);

    // Only the angular shape direction pairs with the vertical generator:
    // A_phi = (0, 0, r2^2/(r1^2 + r2^2)).
    let connection = system.mechanical_connection(&q, degree).unwrap();
    let expected_phi = jets.r2_sq.mul(&jets.planar_inv).unwrap();
    for row in 0..2 {
        for col in 0..3 {
            assert_series_close("A radial rows", connection.entry(row, col), &zero, 1e-12);
        }
    }
    assert_series_close("A_phi,1", connection.entry(2, 0), &zero, 1e-12);
    assert_series_close("A_phi,2", connection.entry(2, 1), &zero, 1e-12);
    assert_series_close("A_phi,3", connection.entry(2, 2), &expected_phi, 1e-11);

    // d = diag(1, 1, r1^2 r2^2/(r1^2 + r2^2)).
    let metric = system.horizontal_metric(&q, degree).unwrap();
    let one = constant(3, degree, 1.0);
    let expected_33 = jets
        .r1_sq
        .mul(&jets.r2_sq)
        .unwrap()
        .mul(&jets.planar_inv)
        .unwrap();
    assert_series_close("d_11", metric.entry(0, 0), &one, 1e-12);
    assert_series_close("d_22", metric.entry(1, 1), &one, 1e-12);
    assert_series_close("d_33", metric.entry(2, 2), &expected_33, 1e-11);
    for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
        assert_series_close("d off-diagonal", metric.entry(i, j), &zero, 1e-12);
    }
}

#[test]
fn lagrange_point_geometry_values() {
    let params = ThreeBodyParams::new([1.0; 3], 6.5).unwrap();
    let system = three_body_system(&params).unwrap();
    let q = lagrange_triangle_shape(&params, 6.5).unwrap().shape();

    let inertia = system.locked_inertia(&q, 0).unwrap();
    let diag = [21.125, 21.125, 42.25];
    for (i, &d) in diag.iter().enumerate() {
        for j in 0..3 {
            let want = if i == j { d } else { 0.0 };
            let got = inertia.entry(i, j).constant_term();
            assert!((got - want).abs() < 1e-10, "I[{i}{j}] = {got}");
        }
    }

    let connection = system.mechanical_connection(&q, 0).unwrap();
    assert!((connection.entry(2, 2).constant_term() - 0.5).abs() < 1e-12);

    let metric = system.horizontal_metric(&q, 0).unwrap();
    assert!((metric.entry(2, 2).constant_term() - 10.5625).abs() < 1e-10);
}

/// Morse pair interaction as a jet in the separation.
fn morse(separation: &TruncatedSeries, d0: f64) -> TruncatedSeries {
    let shifted = separation
        .sub(&constant(separation.num_vars(), separation.max_degree(), d0))
        .unwrap();
    let e = compose(&shifted.scale(-1.0), Elementary::Exp);
    e.mul(&e).unwrap().sub(&e.scale(2.0)).unwrap()
}

#[test]
fn three_body_hamiltonian_matches_independent_assembly() {
    // Assemble h = 1/2 J.I^{-1}J + 1/2 (p - A.J).d^{-1}(p - A.J) + V from
    // the printed closed-form matrices, inverting the planar inertia block
    // by hand, and with the unit-mass scalar distance formulas. Variables:
    // (r1, r2, phi, u, p1, p2, p3, v).
    let radius = 19.8302179854;
    let at = [4.2, 4.9, 1.3, 0.25, 0.31, -0.12, 7.7, 0.6];
    let degree = 4;
    let nv = 8;

    let q = [at[0], at[1], at[2]];
    let jets = ThreeBodyJets::at(&q, nv, degree);
    let p1 = affine(nv, degree, at[4], 4);
    let p2 = affine(nv, degree, at[5], 5);
    let p3 = affine(nv, degree, at[6], 6);
    let momentum =
        symred::lie::deprit_chart_series(at[3], at[7], radius, nv, degree, 3, 7).unwrap();
    let [j1, j2, j3] = &momentum;

    // Planar block: I2 = [[a, b], [b, c]] with a = r2^2 s^2,
    // b = -r2^2 s c, c = r1^2 + r2^2 c^2, det = r1^2 r2^2 s^2, so
    // J.I2^{-1}J = (J1^2 c - 2 J1 J2 b + J2^2 a)/det.
    let sin_sq = jets.sin.mul(&jets.sin).unwrap();
    let cos_sq = jets.cos.mul(&jets.cos).unwrap();
    let sin_cos = jets.sin.mul(&jets.cos).unwrap();
    let det_inv = compose(
        &jets
            .r1_sq
            .mul(&jets.r2_sq)
            .unwrap()
            .mul(&sin_sq)
            .unwrap(),
        Elementary::Recip,
    );
    let j1_sq = j1.mul(j1).unwrap();
    let j2_sq = j2.mul(j2).unwrap();
    let numerator = j1_sq
        .mul(&jets.r1_sq.add(&jets.r2_sq.mul(&cos_sq).unwrap()).unwrap())
        .unwrap()
        .add(
            &j1.mul(j2)
                .unwrap()
                .mul(&jets.r2_sq.mul(&sin_cos).unwrap())
                .unwrap()
                .scale(2.0),
        )
        .unwrap()
        .add(&j2_sq.mul(&jets.r2_sq.mul(&sin_sq).unwrap()).unwrap())
        .unwrap();
    let rotor = numerator
        .mul(&det_inv)
        .unwrap()
        .add(&j3.mul(j3).unwrap().mul(&jets.planar_inv).unwrap())
        .unwrap()
        .scale(0.5);

    // Horizontal part: only p3 couples to J through A_phi; d^{-1} is
    // diag(1, 1, (r1^2 + r2^2)/(r1^2 r2^2)).
    let shifted = p3
        .sub(&j3.mul(&jets.r2_sq).unwrap().mul(&jets.planar_inv).unwrap())
        .unwrap();
    let d33_inv = jets
        .planar
        .mul(&compose(
            &jets.r1_sq.mul(&jets.r2_sq).unwrap(),
            Elementary::Recip,
        ))
        .unwrap();
    let horizontal = p1
        .mul(&p1)
        .unwrap()
        .add(&p2.mul(&p2).unwrap())
        .unwrap()
        .add(&shifted.mul(&shifted).unwrap().mul(&d33_inv).unwrap())
        .unwrap()
        .scale(0.5);

    // Unit-mass scalar distances: r13 = sqrt(2) r1 and
    // r23/r12 = sqrt(r1^2/2 + 3 r2^2/2 +/- sqrt(3) r1 r2 cos phi).
    let r1 = affine(nv, degree, q[0], 0);
    let r2 = affine(nv, degree, q[1], 1);
    let cross = r1
        .mul(&r2)
        .unwrap()
        .mul(&jets.cos)
        .unwrap()
        .scale(3.0_f64.sqrt());
    let base = jets
        .r1_sq
        .scale(0.5)
        .add(&jets.r2_sq.scale(1.5))
        .unwrap();
    let d0 = 6.0;
    let potential = morse(&r1.scale(2.0_f64.sqrt()), d0)
        .add(&morse(
            &compose(&base.add(&cross).unwrap(), Elementary::Sqrt),
            d0,
        ))
        .unwrap()
        .add(&morse(
            &compose(&base.sub(&cross).unwrap(), Elementary::Sqrt),
            d0,
        ))
        .unwrap();

    let expected = rotor.add(&horizontal).unwrap().add(&potential).unwrap();

    let params = ThreeBodyParams::new([1.0; 3], d0).unwrap();
    let system = three_body_system(&params).unwrap();
    let chart = ReducedChart::MomentumSphere { radius };
    let h = system.reduced_hamiltonian(&chart, &at, degree).unwrap();
    assert_series_close("reduced hamiltonian", &h, &expected, 1e-9);
}

/// Jets of the pendulum geometry derived from first principles.
struct PendulumJets {
    inertia: TruncatedSeries,
    momentum_row: [TruncatedSeries; 3],
    shape_metric: [[TruncatedSeries; 3]; 3],
}

impl PendulumJets {
    fn at(params: &PendulumParams, q: &[f64; 3], degree: usize) -> Self {
        let [m1, m2] = params.masses();
        let [l1, l2] = params.lengths();
        let r1 = affine(3, degree, q[0], 0);
        let r2 = affine(3, degree, q[1], 1);
        let phi = affine(3, degree, q[2], 2);
        let sin = compose(&phi, Elementary::Sin);
        let cos = compose(&phi, Elementary::Cos);
        let r1_sq = r1.mul(&r1).unwrap();
        let r2_sq = r2.mul(&r2).unwrap();
        let cross = r1.mul(&r2).unwrap().mul(&cos).unwrap();

        // Slopes of the downward arms: z_i' = r_i / sqrt(l_i^2 - r_i^2).
        let slope = |r: &TruncatedSeries, r_sq: &TruncatedSeries, l: f64| {
            let w = compose(
                &constant(3, degree, l * l).sub(r_sq).unwrap(),
                Elementary::Sqrt,
            );
            r.mul(&compose(&w, Elementary::Recip)).unwrap()
        };
        let z1p = slope(&r1, &r1_sq, l1);
        let z2p = slope(&r2, &r2_sq, l2);

        let inertia = r1_sq
            .scale(m1 + m2)
            .add(&cross.scale(2.0 * m2))
            .unwrap()
            .add(&r2_sq.scale(m2))
            .unwrap();

        let momentum_row = [
            r2.mul(&sin).unwrap().scale(-m2),
            r1.mul(&sin).unwrap().scale(m2),
            r2_sq.add(&cross).unwrap().scale(m2),
        ];

        let one = constant(3, degree, 1.0);
        let h11 = one
            .add(&z1p.mul(&z1p).unwrap())
            .unwrap()
            .scale(m1 + m2);
        let h12 = cos.add(&z1p.mul(&z2p).unwrap()).unwrap().scale(m2);
        let h13 = r2.mul(&sin).unwrap().scale(-m2);
        let h22 = one.add(&z2p.mul(&z2p).unwrap()).unwrap().scale(m2);
        let h23 = TruncatedSeries::zero(3, degree);
        let h33 = r2_sq.scale(m2);
        let shape_metric = [
            [h11, h12.clone(), h13.clone()],
            [h12, h22, h23.clone()],
            [h13, h23, h33],
        ];

        PendulumJets {
            inertia,
            momentum_row,
            shape_metric,
        }
    }
}

#[test]
fn pendulum_geometry_matches_first_principles() {
    let params = PendulumParams::new([1.3, 0.7], [1.1, 0.9], 2.0).unwrap();
    let system = pendulum_system(&params).unwrap();
    let q = [0.4, -0.3, 0.8];
    let degree = 4;
    let jets = PendulumJets::at(&params, &q, degree);

    let geometry = system.reduced_geometry(&q, degree).unwrap();
    assert_series_close("inertia", geometry.inertia.entry(0, 0), &jets.inertia, 1e-11);

    let inertia_inv = compose(&jets.inertia, Elementary::Recip);
    for alpha in 0..3 {
        assert_series_close(
            "momentum coefficients",
            geometry.momentum_coefficients.entry(0, alpha),
            &jets.momentum_row[alpha],
            1e-11,
        );
        let expected_connection = jets.momentum_row[alpha].mul(&inertia_inv).unwrap();
        assert_series_close(
            "connection",
            geometry.connection.entry(alpha, 0),
            &expected_connection,
            1e-11,
        );
    }

    for i in 0..3 {
        for j in 0..3 {
            assert_series_close(
                "shape metric",
                geometry.shape_metric.entry(i, j),
                &jets.shape_metric[i][j],
                1e-11,
            );
            let expected_horizontal = jets.shape_metric[i][j]
                .sub(
                    &jets.momentum_row[i]
                        .mul(&jets.momentum_row[j])
                        .unwrap()
                        .mul(&inertia_inv)
                        .unwrap(),
                )
                .unwrap();
            assert_series_close(
                "horizontal metric",
                geometry.horizontal_metric.entry(i, j),
                &expected_horizontal,
                1e-11,
            );
        }
    }
}

#[test]
fn pendulum_hamiltonian_matches_pointwise_assembly() {
    let params = PendulumParams::new([1.0, 1.0], [1.0, 1.0], 1.0).unwrap();
    let system = pendulum_system(&params).unwrap();
    let momentum = 1.45;
    let chart = ReducedChart::FiberParameter { momentum };

    let points: [[f64; 6]; 4] = [
        [0.44, 0.57, 0.0, 0.1, -0.2, 0.47],
        [0.3, -0.25, 0.9, 0.0, 0.15, 0.3],
        [0.55, 0.4, -1.2, -0.3, 0.05, 0.6],
        [0.1, 0.6, 2.0, 0.2, 0.2, -0.1],
    ];
    for x in points {
        let (r1, r2, phi) = (x[0], x[1], x[2]);
        let p = Vector3::new(x[3], x[4], x[5]);
        let (s, c) = phi.sin_cos();
        let (w1, w2) = ((1.0 - r1 * r1).sqrt(), (1.0 - r2 * r2).sqrt());
        let (z1p, z2p) = (r1 / w1, r2 / w2);

        let inertia = 2.0 * r1 * r1 + 2.0 * r1 * r2 * c + r2 * r2;
        let momentum_row = Vector3::new(-r2 * s, r1 * s, r2 * r2 + r1 * r2 * c);
        let shape_metric = Matrix3::new(
            2.0 * (1.0 + z1p * z1p),
            c + z1p * z2p,
            -r2 * s,
            c + z1p * z2p,
            1.0 + z2p * z2p,
            0.0,
            -r2 * s,
            0.0,
            r2 * r2,
        );
        let horizontal = shape_metric - momentum_row * momentum_row.transpose() / inertia;
        let shifted = p - momentum_row * (momentum / inertia);
        let energy = 0.5 * momentum * momentum / inertia
            + 0.5 * (horizontal.try_inverse().unwrap() * shifted).dot(&shifted)
            - 2.0 * w1
            - w2;

        let h = system.reduced_hamiltonian(&chart, &x, 2).unwrap();
        assert!(
            (h.constant_term() - energy).abs() < 1e-10 * (1.0 + energy.abs()),
            "h({x:?}) = {} vs {energy}",
            h.constant_term()
        );
    }
}

#[test]
fn pendulum_decouples_as_second_mass_vanishes() {
    let tiny = 1e-9;
    let params = PendulumParams::new([1.0, tiny], [1.0, 1.0], 1.0).unwrap();
    let system = pendulum_system(&params).unwrap();
    let q = [0.4, 0.3, 0.9];
    let geometry = system.reduced_geometry(&q, 3).unwrap();

    // Cross couplings between the first arm and the rest scale with m2.
    for (i, j) in [(0, 1), (0, 2)] {
        assert!(geometry.shape_metric.entry(i, j).max_abs_coeff() < 1e-7);
        assert!(geometry.horizontal_metric.entry(i, j).max_abs_coeff() < 1e-7);
    }
    // The locked inertia collapses to the single-arm value m1 r1^2.
    let r1 = affine(3, 3, q[0], 0);
    assert_series_close(
        "inertia limit",
        geometry.inertia.entry(0, 0),
        &r1.mul(&r1).unwrap(),
        1e-7,
    );
}
