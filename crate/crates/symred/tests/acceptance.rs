//! Acceptance gate: one test per release criterion, each printing a single
//! `criterion N PASS/FAIL` line with its measured values. Run with
//! `cargo test --test acceptance -- --nocapture` to see the full report;
//! under the default capture settings only failures are shown.

use std::sync::LazyLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Vector3};
use symred::dynamics::{chart_momentum, integrate_reduced, reconstruct, Rotation, Trajectory};
use symred::equilibria::{solve_effective_potential, EquilibriumProblem, RelativeEquilibrium};
use symred::mech::{MechanicalSystem, ReducedChart};
use symred::models::{
    lagrange_triangle_shape, pendulum_system, three_body_system, PendulumParams, ThreeBodyParams,
};
use symred::nf::{normal_form, NormalForm, DEFAULT_RESONANCE_TOL};
use symred::{ComplexSeries, Error, TruncatedSeries};

// ---------------------------------------------------------------------------
// Pinned reference values and tolerances.
// ---------------------------------------------------------------------------

const POINT_TOL: f64 = 1e-8;
const FREQUENCY_TOL: f64 = 1e-8;
const QUARTIC_REL_TOL: f64 = 1e-6;
const MATRIX_ENTRY_TOL: f64 = 1e-6;
const SYMPLECTIC_TOL: f64 = 1e-10;
const OSCILLATOR_TOL: f64 = 1e-10;
const BRACKET_TOL: f64 = 1e-10;
const OSCILLATOR_COEFF_TOL: f64 = 1e-12;
const ENERGY_DRIFT_TOL: f64 = 1e-8;
const MOMENTUM_DRIFT_TOL: f64 = 1e-7;
const ORTHOGONALITY_TOL: f64 = 1e-10;
const TERM_PRUNE_TOL: f64 = 1e-14;
const EQUILIBRIUM_BUDGET: Duration = Duration::from_secs(1);
const NORMAL_FORM_BUDGET: Duration = Duration::from_secs(30);

const THREE_BODY_R: f64 = 19.8302179854;
const THREE_BODY_P3: f64 = 9.9151089927;
const THREE_BODY_E0: f64 = 2.1181531267;
const THREE_BODY_FREQUENCIES: [f64; 4] =
    [0.2362174000, 0.4693542718, 1.1749259437, 1.1984363284];

const PENDULUM_POINT: [f64; 3] = [0.4425598655, 0.5656579210, 0.4704091824];
const PENDULUM_E0: f64 = -2.2056999577;
const PENDULUM_FREQUENCIES: [f64; 3] = [1.2572610531, 1.4864684140, 2.6603546311];

const THREE_BODY_TERM_COUNT: usize = 212;
const PENDULUM_TERM_COUNT: usize = 186;

/// Quartic action coefficients keyed by (I1..I4) exponents, modes in
/// ascending frequency order.
const THREE_BODY_QUARTIC: [([u8; 4], f64); 10] = [
    ([2, 0, 0, 0], -1.4978871558),
    ([1, 1, 0, 0], -0.2175152611),
    ([1, 0, 1, 0], 6.4183166825),
    ([1, 0, 0, 1], -7.7221894156),
    ([0, 2, 0, 0], 0.0089977794),
    ([0, 1, 1, 0], -0.1815241432),
    ([0, 1, 0, 1], -0.2069751620),
    ([0, 0, 2, 0], -0.8641444715),
    ([0, 0, 1, 1], -8.1361397396),
    ([0, 0, 0, 2], -0.9580186364),
];

const PENDULUM_QUARTIC: [([u8; 3], f64); 6] = [
    ([2, 0, 0], 0.0467015469),
    ([1, 1, 0], 0.1772800788),
    ([1, 0, 1], -5.8213832524),
    ([0, 2, 0], -0.0419637147),
    ([0, 1, 1], -0.0932948515),
    ([0, 0, 2], 0.0875786340),
];

/// Reference normalizing matrix for the three-body equilibrium, rows in
/// the order (u, r1, r2, phi, v, p1, p2, p3).
const THREE_BODY_M: [[f64; 8]; 8] = [
    [0.0, 0.2245619939, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.5952500442, 0.0, 0.5952500442, -0.6459181965, 0.0, 0.0, 0.0, 0.0],
    [-0.5952500442, 0.0, -0.5952500442, -0.6459181965, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.2590186725, 0.0, -0.2590186725, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 4.4531132913, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.1406084178, 0.0, 0.6993747200, -0.7740918318],
    [0.0, 0.0, 0.0, 0.0, -0.1406084178, 0.0, -0.6993747200, -0.7740918318],
    [-3.2144619462, 0.0, 0.6462635772, 0.0, 0.0, 0.0, 0.0, 0.0],
];

/// Rows of the reference matrix above as indices into the library's
/// variable order (r1, r2, phi, u, p1, p2, p3, v).
const THREE_BODY_ROW_ORDER: [usize; 8] = [3, 0, 1, 2, 7, 4, 5, 6];

/// Reference normalizing matrix for the pendulum equilibrium, rows already
/// in the library order (r1, r2, phi, p1, p2, p3).
const PENDULUM_M: [[f64; 6]; 6] = [
    [0.3720476175, -0.3116300067, 0.4202281883, 0.0, 0.0, 0.0],
    [-0.5712604029, -0.3238407419, -0.5369033436, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 2.2390869882, -0.2974563002, -2.2029538091],
    [0.0, 0.0, 0.0, -0.8426837965, -1.6576611267, 1.8964495311],
    [0.0, 0.0, 0.0, 0.3873035344, -1.4365053634, -1.4081719163],
    [-0.6854444155, 0.0612664420, -0.2510237658, 0.0, 0.0, 0.0],
];

// ---------------------------------------------------------------------------
// Shared fixtures.
// ---------------------------------------------------------------------------

struct Fixture {
    system: MechanicalSystem,
    chart: ReducedChart,
    equilibrium: RelativeEquilibrium,
    jet: TruncatedSeries,
    nf: NormalForm,
}

impl Fixture {
    /// Equilibrium displaced by `amplitude` along normal mode `mode`.
    fn excited(&self, mode: usize, amplitude: f64) -> Vec<f64> {
        let column = self.nf.linearization.matrix.column(mode);
        self.equilibrium
            .point
            .iter()
            .zip(column.iter())
            .map(|(x, d)| x + amplitude * d)
            .collect()
    }
}

fn solve_three_body(size: f64) -> (MechanicalSystem, RelativeEquilibrium) {
    let params = ThreeBodyParams::new([1.0; 3], 6.0).unwrap();
    let system = three_body_system(&params).unwrap();
    let problem = EquilibriumProblem::FixedShape {
        shape: lagrange_triangle_shape(&params, size)
            .unwrap()
            .shape()
            .to_vec(),
    };
    let eq = solve_effective_potential(&system, &problem).unwrap();
    (system, eq)
}

static THREE_BODY: LazyLock<Fixture> = LazyLock::new(|| {
    let (system, equilibrium) = solve_three_body(6.5);
    let chart = ReducedChart::MomentumSphere {
        radius: equilibrium.momentum,
    };
    let jet = system
        .reduced_hamiltonian(&chart, &equilibrium.point, 4)
        .unwrap();
    let nf = normal_form(&jet, &[0.0; 8], 4, DEFAULT_RESONANCE_TOL).unwrap();
    Fixture {
        system,
        chart,
        equilibrium,
        jet,
        nf,
    }
});

static PENDULUM: LazyLock<Fixture> = LazyLock::new(|| {
    let system =
        pendulum_system(&PendulumParams::new([1.0, 1.0], [1.0, 1.0], 1.0).unwrap()).unwrap();
    let problem = EquilibriumProblem::FixedMomentum {
        momentum: 1.0,
        guess: vec![0.4, 0.5, 0.0],
    };
    let equilibrium = solve_effective_potential(&system, &problem).unwrap();
    let chart = ReducedChart::FiberParameter { momentum: 1.0 };
    let jet = system
        .reduced_hamiltonian(&chart, &equilibrium.point, 4)
        .unwrap();
    let nf = normal_form(&jet, &[0.0; 6], 4, DEFAULT_RESONANCE_TOL).unwrap();
    Fixture {
        system,
        chart,
        equilibrium,
        jet,
        nf,
    }
});

// ---------------------------------------------------------------------------
// Reporting.
// ---------------------------------------------------------------------------

/// Collects checks for one criterion and prints a single verdict line.
struct Report {
    number: u32,
    description: &'static str,
    failures: Vec<String>,
}

impl Report {
    fn new(number: u32, description: &'static str) -> Report {
        Report {
            number,
            description,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(detail());
        }
    }

    fn close(&mut self, got: f64, want: f64, tol: f64, label: &str) {
        self.check((got - want).abs() <= tol, || {
            format!("{label}: got {got:.12}, want {want:.12} (tol {tol:e})")
        });
    }

    fn close_rel(&mut self, got: f64, want: f64, rel: f64, label: &str) {
        self.check((got - want).abs() <= rel * want.abs(), || {
            format!("{label}: got {got:.12}, want {want:.12} (rel tol {rel:e})")
        });
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("criterion {:2} PASS: {}", self.number, self.description);
        } else {
            let detail = self.failures.join("; ");
            println!(
                "criterion {:2} FAIL: {} [{detail}]",
                self.number, self.description
            );
            panic!("criterion {} failed: {detail}", self.number);
        }
    }
}

// ---------------------------------------------------------------------------
// Shared numerics helpers.
// ---------------------------------------------------------------------------

/// Nonvanishing Taylor terms of the jet in normalized complex coordinates:
/// align the real jet with the normalizing matrix, switch to
/// `z = (q + i p)/sqrt(2)`, and prune below the coefficient floor.
fn normalized_complex_term_count(jet: &TruncatedSeries, nf: &NormalForm) -> usize {
    let aligned = jet
        .substitute_linear(&nf.linearization.matrix)
        .unwrap()
        .truncated(nf.order);
    let complex = ComplexSeries::from_real(&aligned).unwrap();
    complex
        .terms()
        .filter(|(_, c)| c.norm() > TERM_PRUNE_TOL)
        .count()
}

fn symplectic_residual(matrix: &DMatrix<f64>) -> f64 {
    let n = matrix.nrows();
    let dof = n / 2;
    let mut form = DMatrix::zeros(n, n);
    for k in 0..dof {
        form[(k, dof + k)] = 1.0;
        form[(dof + k, k)] = -1.0;
    }
    (matrix.transpose() * &form * matrix - &form).amax()
}

/// Quadratic part pushed through the normalizing matrix, minus the
/// diagonal oscillator it should become.
fn oscillator_residual(jet: &TruncatedSeries, nf: &NormalForm) -> f64 {
    let n = jet.num_vars();
    let dof = n / 2;
    let aligned = jet
        .homogeneous_part(2)
        .substitute_linear(&nf.linearization.matrix)
        .unwrap();
    let mut oscillator_terms = Vec::new();
    for (k, &w) in nf.frequencies.iter().enumerate() {
        let mut q2 = vec![0u8; n];
        q2[k] = 2;
        let mut p2 = vec![0u8; n];
        p2[dof + k] = 2;
        oscillator_terms.push((q2, w / 2.0));
        oscillator_terms.push((p2, w / 2.0));
    }
    let oscillator =
        TruncatedSeries::from_terms(n, aligned.max_degree(), oscillator_terms).unwrap();
    aligned.max_coeff_diff(&oscillator).unwrap()
}

/// Worst entry deviation from a reference matrix after permuting rows into
/// the reference order, allowing one sign per column.
fn matrix_mismatch(matrix: &DMatrix<f64>, reference: &[&[f64]], row_order: &[usize]) -> f64 {
    let n = row_order.len();
    let mut worst = 0.0_f64;
    for col in 0..n {
        let dot: f64 = (0..n)
            .map(|row| reference[row][col] * matrix[(row_order[row], col)])
            .sum();
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            let got = sign * matrix[(row_order[row], col)];
            worst = worst.max((got - reference[row][col]).abs());
        }
    }
    worst
}

fn unit_exponent(n: usize, var: usize, power: u8) -> Vec<u8> {
    let mut e = vec![0u8; n];
    e[var] = power;
    e
}

/// Normal form rebuilt as a real polynomial in the normalized (q, p).
fn action_polynomial(nf: &NormalForm, n: usize, degree: usize) -> TruncatedSeries {
    let dof = n / 2;
    let mut poly = TruncatedSeries::zero(n, degree);
    for (alpha, &coeff) in &nf.action_terms {
        let mut monomial = TruncatedSeries::constant(n, degree, coeff);
        for (k, &power) in alpha.iter().enumerate() {
            for _ in 0..power {
                let action = TruncatedSeries::from_terms(
                    n,
                    degree,
                    [
                        (unit_exponent(n, k, 2), 0.5),
                        (unit_exponent(n, dof + k, 2), 0.5),
                    ],
                )
                .unwrap();
                monomial = monomial.mul(&action).unwrap();
            }
        }
        poly = poly.add(&monomial).unwrap();
    }
    poly
}

/// Hamiltonian vector field of a polynomial: (dW/dp, -dW/dq).
fn hamiltonian_field(w: &TruncatedSeries, point: &[f64]) -> Vec<f64> {
    let grad = w.gradient(point).unwrap();
    let dof = point.len() / 2;
    let mut field = vec![0.0; point.len()];
    for k in 0..dof {
        field[k] = grad[dof + k];
        field[dof + k] = -grad[k];
    }
    field
}

/// Backward time-one flow of a polynomial Hamiltonian.
fn backward_flow(w: &TruncatedSeries, start: &[f64], steps: usize) -> Vec<f64> {
    let dt = -1.0 / steps as f64;
    let mut z = start.to_vec();
    let shifted = |z: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        z.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    for _ in 0..steps {
        let k1 = hamiltonian_field(w, &z);
        let k2 = hamiltonian_field(w, &shifted(&z, &k1, dt / 2.0));
        let k3 = hamiltonian_field(w, &shifted(&z, &k2, dt / 2.0));
        let k4 = hamiltonian_field(w, &shifted(&z, &k3, dt));
        for i in 0..z.len() {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    z
}

// ---------------------------------------------------------------------------
// Criteria.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_three_body_equilibrium() {
    let mut report = Report::new(
        1,
        "three-body relative equilibrium: r and p3 to 1e-8 in under 1 s",
    );
    let start = Instant::now();
    let (_, eq) = solve_three_body(6.5);
    let elapsed = start.elapsed();
    report.close(eq.momentum, THREE_BODY_R, POINT_TOL, "r");
    report.close(eq.point[6], THREE_BODY_P3, POINT_TOL, "p3");
    report.check(elapsed < EQUILIBRIUM_BUDGET, || {
        format!("solve took {elapsed:?}, budget {EQUILIBRIUM_BUDGET:?}")
    });
    report.finish();
}

#[test]
fn criterion_02_three_body_frequencies() {
    let mut report = Report::new(2, "three-body linear mode frequencies to 1e-8");
    let frequencies = &THREE_BODY.equilibrium.frequencies;
    report.check(frequencies.len() == 4, || {
        format!("expected 4 frequencies, got {}", frequencies.len())
    });
    for (k, (&got, want)) in frequencies.iter().zip(THREE_BODY_FREQUENCIES).enumerate() {
        report.close(got, want, FREQUENCY_TOL, &format!("omega{}", k + 1));
    }
    report.finish();
}

#[test]
fn criterion_03_three_body_normal_form() {
    let mut report = Report::new(
        3,
        "three-body fourth-order normal form: E0 and ten quartic coefficients to 1e-6 in under 30 s",
    );
    let start = Instant::now();
    let (system, eq) = solve_three_body(6.5);
    let chart = ReducedChart::MomentumSphere {
        radius: eq.momentum,
    };
    let jet = system.reduced_hamiltonian(&chart, &eq.point, 4).unwrap();
    let nf = normal_form(&jet, &[0.0; 8], 4, DEFAULT_RESONANCE_TOL).unwrap();
    let elapsed = start.elapsed();
    report.close_rel(nf.e0, THREE_BODY_E0, QUARTIC_REL_TOL, "E0");
    for (alpha, want) in THREE_BODY_QUARTIC {
        let got = nf.action_terms[alpha.as_slice()];
        report.close_rel(got, want, QUARTIC_REL_TOL, &format!("I{alpha:?}"));
    }
    report.check(elapsed < NORMAL_FORM_BUDGET, || {
        format!("normal form took {elapsed:?}, budget {NORMAL_FORM_BUDGET:?}")
    });
    report.finish();
}

#[test]
fn criterion_04_taylor_term_counts() {
    let mut report = Report::new(
        4,
        "nonvanishing degree-<=4 Taylor terms after 1e-14 pruning: 212 (three-body), 186 (pendulum)",
    );
    let three_body = normalized_complex_term_count(&THREE_BODY.jet, &THREE_BODY.nf);
    let pendulum = normalized_complex_term_count(&PENDULUM.jet, &PENDULUM.nf);
    report.check(three_body == THREE_BODY_TERM_COUNT, || {
        format!("three-body count {three_body}, want {THREE_BODY_TERM_COUNT}")
    });
    report.check(pendulum == PENDULUM_TERM_COUNT, || {
        format!("pendulum count {pendulum}, want {PENDULUM_TERM_COUNT}")
    });
    report.finish();
}

#[test]
fn criterion_05_pendulum_equilibrium() {
    let mut report = Report::new(
        5,
        "pendulum relative equilibrium: (r1, r2, p3) and frequencies to 1e-8",
    );
    let eq = &PENDULUM.equilibrium;
    report.close(eq.point[0], PENDULUM_POINT[0], POINT_TOL, "r1");
    report.close(eq.point[1], PENDULUM_POINT[1], POINT_TOL, "r2");
    report.close(eq.point[5], PENDULUM_POINT[2], POINT_TOL, "p3");
    report.check(eq.frequencies.len() == 3, || {
        format!("expected 3 frequencies, got {}", eq.frequencies.len())
    });
    for (k, (&got, want)) in eq.frequencies.iter().zip(PENDULUM_FREQUENCIES).enumerate() {
        report.close(got, want, FREQUENCY_TOL, &format!("omega{}", k + 1));
    }
    report.finish();
}

#[test]
fn criterion_06_pendulum_normal_form() {
    let mut report = Report::new(
        6,
        "pendulum fourth-order normal form: E0 and six quartic coefficients to 1e-6",
    );
    let nf = &PENDULUM.nf;
    report.close_rel(nf.e0, PENDULUM_E0, QUARTIC_REL_TOL, "E0");
    for (alpha, want) in PENDULUM_QUARTIC {
        let got = nf.action_terms[alpha.as_slice()];
        report.close_rel(got, want, QUARTIC_REL_TOL, &format!("I{alpha:?}"));
    }
    report.finish();
}

#[test]
fn criterion_07_normalizing_matrices() {
    let mut report = Report::new(
        7,
        "normalizing matrices: symplectic to 1e-10, diagonalizing to 1e-10, reference entries to 1e-6 up to column sign",
    );
    let three_body_rows: Vec<&[f64]> = THREE_BODY_M.iter().map(|r| r.as_slice()).collect();
    let pendulum_rows: Vec<&[f64]> = PENDULUM_M.iter().map(|r| r.as_slice()).collect();
    let mut examine = |name: &str, fixture: &Fixture, reference: &[&[f64]], row_order: &[usize]| {
        let matrix = &fixture.nf.linearization.matrix;
        let symplectic = symplectic_residual(matrix);
        report.check(symplectic < SYMPLECTIC_TOL, || {
            format!("{name} symplectic residual {symplectic:e}")
        });
        let oscillator = oscillator_residual(&fixture.jet, &fixture.nf);
        report.check(oscillator < OSCILLATOR_TOL, || {
            format!("{name} off-diagonal quadratic residual {oscillator:e}")
        });
        let mismatch = matrix_mismatch(matrix, reference, row_order);
        report.check(mismatch < MATRIX_ENTRY_TOL, || {
            format!("{name} worst entry deviation {mismatch:e}")
        });
    };
    examine(
        "three-body",
        &THREE_BODY,
        &three_body_rows,
        &THREE_BODY_ROW_ORDER,
    );
    examine("pendulum", &PENDULUM, &pendulum_rows, &[0, 1, 2, 3, 4, 5]);
    report.finish();
}

#[test]
fn criterion_08_normal_form_algebra() {
    let mut report = Report::new(
        8,
        "normal-form algebra: {H2, H_NF} below 1e-10 and transformation error scaling as eps^5",
    );
    // Bracket with the oscillator part, both systems.
    for (name, fixture, n) in [("three-body", &*THREE_BODY, 8), ("pendulum", &*PENDULUM, 6)] {
        let dof = n / 2;
        let nf_poly = action_polynomial(&fixture.nf, n, 5);
        let mut oscillator_terms = Vec::new();
        for (k, &w) in fixture.nf.frequencies.iter().enumerate() {
            oscillator_terms.push((unit_exponent(n, k, 2), w / 2.0));
            oscillator_terms.push((unit_exponent(n, dof + k, 2), w / 2.0));
        }
        let h2 = TruncatedSeries::from_terms(n, 5, oscillator_terms).unwrap();
        let bracket = h2.poisson_bracket(&nf_poly).unwrap().max_abs_coeff();
        report.check(bracket < BRACKET_TOL, || {
            format!("{name} bracket residual {bracket:e}")
        });
    }

    // Transformation consistency on the nonresonant system: composing the
    // inverse Lie flows and the linear map must reproduce the original jet
    // up to the first dropped degree, so the sampled error scales as the
    // fifth power of the sample amplitude.
    let nf = &PENDULUM.nf;
    let dof = 3;
    let direction = [0.63, -0.24, 0.51, -0.36, 0.44, -0.58];
    let mut errors = Vec::new();
    for scale in [1e-2, 1e-3] {
        let z: Vec<f64> = direction.iter().map(|d| scale * d).collect();
        let mut nf_value = 0.0;
        for (alpha, &coeff) in &nf.action_terms {
            let mut term = coeff;
            for (k, &power) in alpha.iter().enumerate() {
                let action = 0.5 * (z[k] * z[k] + z[dof + k] * z[dof + k]);
                term *= action.powi(i32::from(power));
            }
            nf_value += term;
        }
        let w4 = backward_flow(&nf.generators[1], &z, 400);
        let w3 = backward_flow(&nf.generators[0], &w4, 400);
        let m = &nf.linearization.matrix;
        let original: Vec<f64> = (0..6)
            .map(|i| (0..6).map(|j| m[(i, j)] * w3[j]).sum())
            .collect();
        let direct = PENDULUM.jet.evaluate(&original).unwrap() - nf.e0;
        errors.push((nf_value - direct).abs());
    }
    let exponent = (errors[0] / errors[1]).log10();
    report.check((4.7..=5.3).contains(&exponent), || {
        format!("fitted exponent {exponent:.3} from errors {errors:?}")
    });
    report.finish();
}

#[test]
fn criterion_09_single_oscillator() {
    let mut report = Report::new(
        9,
        "single oscillator w/2 (q^2+p^2) + q^4: quartic action coefficient 3/2 to 1e-12",
    );
    let w = 1.3;
    let h = TruncatedSeries::from_terms(
        2,
        4,
        [
            (vec![2, 0], w / 2.0),
            (vec![0, 2], w / 2.0),
            (vec![4, 0], 1.0),
        ],
    )
    .unwrap();
    let nf = normal_form(&h, &[0.0; 2], 4, DEFAULT_RESONANCE_TOL).unwrap();
    report.close(
        nf.action_terms[[1u8].as_slice()],
        w,
        OSCILLATOR_COEFF_TOL,
        "linear coefficient",
    );
    report.close(
        nf.action_terms[[2u8].as_slice()],
        1.5,
        OSCILLATOR_COEFF_TOL,
        "quartic coefficient",
    );
    report.finish();
}

#[test]
fn criterion_10_conservation_suite() {
    let mut report = Report::new(
        10,
        "conservation: energy drift < 1e-8 over T=100, spatial momentum < 1e-7 over T=10, orthogonality < 1e-10",
    );
    let mut three_body_run: Option<Trajectory> = None;
    for (name, fixture) in [("three-body", &*THREE_BODY), ("pendulum", &*PENDULUM)] {
        let state0 = fixture.excited(0, 1e-2);
        let trajectory =
            integrate_reduced(&fixture.system, &fixture.chart, &state0, 1e-3, 100.0).unwrap();
        report.check(!trajectory.truncated, || format!("{name} run truncated"));
        let reference = trajectory.samples[0].energy;
        let drift = trajectory
            .samples
            .iter()
            .map(|s| (s.energy - reference).abs())
            .fold(0.0_f64, f64::max);
        report.check(drift < ENERGY_DRIFT_TOL, || {
            format!("{name} energy drift {drift:e}")
        });
        if name == "three-body" {
            three_body_run = Some(trajectory);
        }
    }

    // Reconstruct the first ten seconds of the three-body run and follow
    // the spatial momentum g J.
    let mut trajectory = three_body_run.expect("three-body trajectory");
    trajectory.samples.truncate(10_001);
    let fixture = &*THREE_BODY;
    let rotations = reconstruct(&fixture.system, &trajectory, &Rotation::identity()).unwrap();
    let spatial = |k: usize| {
        let j = chart_momentum(&fixture.system, &fixture.chart, &trajectory.samples[k].state)
            .unwrap();
        rotations[k].matrix() * Vector3::new(j[0], j[1], j[2])
    };
    let reference = spatial(0);
    let mut momentum_drift = 0.0_f64;
    let mut orthogonality = 0.0_f64;
    for k in (0..trajectory.samples.len()).step_by(100) {
        momentum_drift = momentum_drift.max((spatial(k) - reference).amax());
        orthogonality = orthogonality.max(rotations[k].orthogonality_residual());
    }
    report.check(momentum_drift < MOMENTUM_DRIFT_TOL, || {
        format!("spatial momentum drift {momentum_drift:e}")
    });
    report.check(orthogonality < ORTHOGONALITY_TOL, || {
        format!("rotation orthogonality residual {orthogonality:e}")
    });
    report.finish();
}

#[test]
fn criterion_11_sweep_shapes() {
    let mut report = Report::new(
        11,
        "sweep shapes: three-body r(b) has one interior maximum with two roots per sub-maximal level; pendulum frequency curves stay separated",
    );

    // Three-body: momentum magnitude as a function of triangle size over
    // b in [5, 9]; sizes without an equilibrium are skipped.
    let params = ThreeBodyParams::new([1.0; 3], 6.0).unwrap();
    let system = three_body_system(&params).unwrap();
    let mut curve = Vec::new();
    for k in 0..=80 {
        let b = 5.0 + 0.05 * k as f64;
        let problem = EquilibriumProblem::FixedShape {
            shape: lagrange_triangle_shape(&params, b).unwrap().shape().to_vec(),
        };
        match solve_effective_potential(&system, &problem) {
            Ok(eq) => curve.push((b, eq.momentum)),
            Err(Error::NoEquilibrium { .. }) => {
                report.check(curve.is_empty(), || {
                    format!("equilibria disappeared mid-curve at b = {b}")
                });
            }
            Err(err) => report.check(false, || format!("solve failed at b = {b}: {err}")),
        }
    }
    report.check(curve.len() > 10, || {
        format!("only {} three-body sweep points", curve.len())
    });
    let peak = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k)
        .unwrap();
    report.check(peak > 0 && peak + 1 < curve.len(), || {
        format!("maximum sits at the window edge (index {peak})")
    });
    let rising = curve[..peak].windows(2).all(|w| w[0].1 < w[1].1);
    let falling = curve[peak..].windows(2).all(|w| w[0].1 > w[1].1);
    report.check(rising && falling, || {
        format!("r(b) is not unimodal (rising {rising}, falling {falling})")
    });
    let low = curve[0].1.max(curve.last().unwrap().1);
    let high = curve[peak].1;
    for t in [0.25, 0.5, 0.75] {
        let level = low + t * (high - low);
        let crossings = curve
            .windows(2)
            .filter(|w| (w[0].1 - level) * (w[1].1 - level) < 0.0)
            .count();
        report.check(crossings == 2, || {
            format!("level r = {level:.4} crossed {crossings} times, want 2")
        });
    }

    // Pendulum: three frequency columns over r in [0.5, 2], tracked by
    // continuation; the columns must vary continuously and never touch.
    let system =
        pendulum_system(&PendulumParams::new([1.0, 1.0], [1.0, 1.0], 1.0).unwrap()).unwrap();
    let mut guess = vec![0.4, 0.5, 0.0];
    // Walk the guess from the reference momentum down to the window start.
    for momentum in [0.75, 0.5] {
        let eq = solve_effective_potential(
            &system,
            &EquilibriumProblem::FixedMomentum {
                momentum,
                guess: guess.clone(),
            },
        )
        .unwrap();
        guess = eq.point[..3].to_vec();
    }
    let mut previous: Option<Vec<f64>> = None;
    for k in 0..=30 {
        let momentum = 0.5 + 0.05 * k as f64;
        let eq = solve_effective_potential(
            &system,
            &EquilibriumProblem::FixedMomentum {
                momentum,
                guess: guess.clone(),
            },
        )
        .unwrap();
        guess = eq.point[..3].to_vec();
        let frequencies = eq.frequencies.clone();
        for pair in frequencies.windows(2) {
            report.check(pair[1] - pair[0] > 1e-3, || {
                format!(
                    "frequencies {:.6} and {:.6} nearly cross at r = {momentum}",
                    pair[0], pair[1]
                )
            });
        }
        if let Some(prev) = &previous {
            for (k, (now, before)) in frequencies.iter().zip(prev).enumerate() {
                report.check((now - before).abs() < 0.1, || {
                    format!(
                        "omega{} jumps from {before:.6} to {now:.6} at r = {momentum}",
                        k + 1
                    )
                });
            }
        }
        previous = Some(frequencies);
    }
    report.finish();
}
