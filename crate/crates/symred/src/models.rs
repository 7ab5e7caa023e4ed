//! Concrete mechanical systems: the translation-reduced three-body problem
//! with a Morse pair potential, and the double spherical pendulum.
//!
//! # Three-body system
//!
//! After reducing translations, the configuration lives in the two
//! mass-weighted Jacobi vectors
//!
//! ```text
//! w1 = sqrt(mu1) (x1 - x3),   mu1 = m1 m3 / (m1 + m3),
//! w2 = sqrt(mu2) (x2 - c13),  mu2 = m2 (m1 + m3) / (m1 + m2 + m3),
//! ```
//!
//! where `c13` is the center of mass of bodies 1 and 3. In these
//! coordinates the kinetic energy is that of two unit-mass particles. The
//! rotation gauge is fixed by placing `w1` on the first body axis and `w2`
//! in the upper half of the (1,2)-plane ("xxy"), giving shape coordinates
//! `(r1, r2, phi) = (|w1|, |w2|, angle(w1, w2))`, admissible for
//! `r1, r2 > 0` and `0 < phi < pi`. Interparticle distances follow from
//! the inverse of the Jacobi map,
//!
//! ```text
//! x1 - x3 = w1/sqrt(mu1),
//! x2 - x3 = w2/sqrt(mu2) + (m1/(m1+m3)) w1/sqrt(mu1),
//! x2 - x1 = w2/sqrt(mu2) - (m3/(m1+m3)) w1/sqrt(mu1),
//! ```
//!
//! and each pair interacts through the Morse potential
//! `exp(-2(r - d0)) - 2 exp(-(r - d0))`, whose minimum is `-1` at
//! separation `d0`.
//!
//! # Double spherical pendulum
//!
//! Two arms of lengths `l1, l2` hang under gravity `a`; each arm is
//! restricted to downward configurations, so with horizontal offsets
//! `(r1, r2)` and relative azimuth `phi` the body vectors are
//!
//! ```text
//! s1 = (r1, 0, -sqrt(l1^2 - r1^2)),
//! s2 = (r2 cos phi, r2 sin phi, -sqrt(l2^2 - r2^2)),
//! ```
//!
//! with particle 1 at `s1` (mass `m1`) and particle 2 at `s1 + s2`
//! (mass `m2`). Rotations about the vertical axis act as the `S^1`
//! symmetry; the potential `V = a (m1 z1 + m2 z2)` does not involve
//! `phi`. Admissible shapes satisfy `|r_i| < l_i` strictly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mech::{MechanicalSystem, ShapeEmbedding, SymmetryGroup};
use crate::series::{Elementary, TruncatedSeries};

// ----- three-body system ----------------------------------------------------

/// Parameters of the three-body system: physical masses and the Morse
/// anchor separation `d0`.
#[derive(Clone, Copy, Debug)]
pub struct ThreeBodyParams {
    masses: [f64; 3],
    d0: f64,
}

/// Parameter validation: strictly positive and finite (rejects NaN and
/// infinities alike).
fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl ThreeBodyParams {
    pub fn new(masses: [f64; 3], d0: f64) -> Result<Self> {
        if let Some(&m) = masses.iter().find(|&&m| !positive_finite(m)) {
            return Err(Error::Invalid(format!(
                "masses must be positive and finite, got {m}"
            )));
        }
        if !positive_finite(d0) {
            return Err(Error::Invalid(format!(
                "Morse anchor separation must be positive and finite, got {d0}"
            )));
        }
        Ok(ThreeBodyParams { masses, d0 })
    }

    pub fn masses(&self) -> [f64; 3] {
        self.masses
    }

    pub fn morse_anchor(&self) -> f64 {
        self.d0
    }

    /// Reduced mass of the (1,3) pair.
    pub fn mu1(&self) -> f64 {
        let [m1, _, m3] = self.masses;
        m1 * m3 / (m1 + m3)
    }

    /// Reduced mass of body 2 against the (1,3) pair.
    pub fn mu2(&self) -> f64 {
        let [m1, m2, m3] = self.masses;
        m2 * (m1 + m3) / (m1 + m2 + m3)
    }

    /// Interparticle distance jets `(r_13, r_23, r_12)` from shape jets.
    fn pair_distance_jets(&self, shape: &[TruncatedSeries]) -> Result<[TruncatedSeries; 3]> {
        let [m1, _, m3] = self.masses;
        let (mu1, mu2) = (self.mu1(), self.mu2());
        let (r1, r2, phi) = (&shape[0], &shape[1], &shape[2]);

        let r1_sq = r1.mul(r1)?;
        let r2_sq = r2.mul(r2)?;
        // w1 . w2 = r1 r2 cos(phi)
        let cross = r1.mul(r2)?.mul(&phi.compose_elementary(Elementary::Cos)?)?;

        let r13 = r1.scale(1.0 / mu1.sqrt());

        let squared_distance = |weight: f64| -> Result<TruncatedSeries> {
            r2_sq
                .scale(1.0 / mu2)
                .add(&r1_sq.scale(weight * weight / mu1))?
                .add(&cross.scale(2.0 * weight / (mu1 * mu2).sqrt()))?
                .compose_elementary(Elementary::Sqrt)
        };
        let r23 = squared_distance(m1 / (m1 + m3))?;
        let r12 = squared_distance(-m3 / (m1 + m3))?;
        Ok([r13, r23, r12])
    }

    /// Physical pair distances `(r_13, r_23, r_12)` at a shape point.
    pub fn pair_distances(&self, shape: &[f64; 3]) -> Result<[f64; 3]> {
        let jets: Vec<TruncatedSeries> = (0..3)
            .map(|k| TruncatedSeries::constant(3, 0, shape[k]))
            .collect();
        let d = self.pair_distance_jets(&jets)?;
        Ok([
            d[0].constant_term(),
            d[1].constant_term(),
            d[2].constant_term(),
        ])
    }
}

struct ThreeBodyEmbedding {
    params: ThreeBodyParams,
}

impl ThreeBodyEmbedding {
    fn check_admissible(&self, shape: &[TruncatedSeries]) -> Result<()> {
        let r1 = shape[0].constant_term();
        let r2 = shape[1].constant_term();
        let phi = shape[2].constant_term();
        if r1 <= 0.0 || r2 <= 0.0 || phi <= 0.0 || phi >= std::f64::consts::PI {
            return Err(Error::ShapeOutOfRange {
                detail: format!(
                    "Jacobi chart needs r1, r2 > 0 and 0 < phi < pi, got \
                     ({r1}, {r2}, {phi})"
                ),
            });
        }
        Ok(())
    }
}

impl ShapeEmbedding for ThreeBodyEmbedding {
    fn shape_dim(&self) -> usize {
        3
    }

    fn particle_count(&self) -> usize {
        2
    }

    fn positions(&self, shape: &[TruncatedSeries]) -> Result<Vec<[TruncatedSeries; 3]>> {
        self.check_admissible(shape)?;
        let (r1, r2, phi) = (&shape[0], &shape[1], &shape[2]);
        let zero = TruncatedSeries::zero(r1.num_vars(), r1.max_degree());
        let w1 = [r1.clone(), zero.clone(), zero.clone()];
        let w2 = [
            r2.mul(&phi.compose_elementary(Elementary::Cos)?)?,
            r2.mul(&phi.compose_elementary(Elementary::Sin)?)?,
            zero,
        ];
        Ok(vec![w1, w2])
    }

    fn potential(&self, shape: &[TruncatedSeries]) -> Result<TruncatedSeries> {
        self.check_admissible(shape)?;
        let distances = self.params.pair_distance_jets(shape)?;
        let d0 = self.params.morse_anchor();
        let mut total = TruncatedSeries::zero(shape[0].num_vars(), shape[0].max_degree());
        for r in &distances {
            // exp(-2(r - d0)) - 2 exp(-(r - d0)) via e = exp(-(r - d0)).
            let e = r
                .sub(&TruncatedSeries::constant(r.num_vars(), r.max_degree(), d0))?
                .scale(-1.0)
                .compose_elementary(Elementary::Exp)?;
            total = total.add(&e.mul(&e)?.sub(&e.scale(2.0))?)?;
        }
        Ok(total)
    }
}

/// The three-body system in mass-weighted Jacobi coordinates: two unit-mass
/// body vectors under the full rotation group.
pub fn three_body_system(params: &ThreeBodyParams) -> Result<MechanicalSystem> {
    MechanicalSystem::new(
        vec![1.0, 1.0],
        SymmetryGroup::So3,
        Box::new(ThreeBodyEmbedding { params: *params }),
    )
}

/// Shape point of the equilateral (Lagrange) triangle with side `b`, with
/// the momentum template of the corresponding relative equilibrium.
#[derive(Clone, Copy, Debug)]
pub struct LagrangeShape {
    shape: [f64; 3],
}

impl LagrangeShape {
    /// Jacobi shape coordinates `(r1, r2, phi)`.
    pub fn shape(&self) -> [f64; 3] {
        self.shape
    }

    /// Shape momenta `(p1, p2, p3)` of the relative equilibrium once the
    /// momentum-sphere radius is known: `p = J . A` with `J = (0, 0, r)`,
    /// so only `p3 = r r2^2/(r1^2 + r2^2)` is nonzero.
    pub fn momenta(&self, momentum_radius: f64) -> [f64; 3] {
        let [r1, r2, _] = self.shape;
        [
            0.0,
            0.0,
            momentum_radius * r2 * r2 / (r1 * r1 + r2 * r2),
        ]
    }

    /// Full reduced phase point `(r1, r2, phi, u, p1, p2, p3, v)` of the
    /// relative equilibrium, with the sphere chart centered at
    /// `(u, v) = (0, 0)`.
    pub fn phase_point(&self, momentum_radius: f64) -> [f64; 8] {
        let [r1, r2, phi] = self.shape;
        let [p1, p2, p3] = self.momenta(momentum_radius);
        [r1, r2, phi, 0.0, p1, p2, p3, 0.0]
    }
}

/// Jacobi shape coordinates of the equilateral triangle of side `b`:
/// `r1 = sqrt(mu1) b`, `r2 = sqrt(mu2) b sqrt(c1^2 + 3/4)` and
/// `phi = atan2(sqrt(3)/2, c1)` with `c1 = (m3 - m1)/(2(m1 + m3))`.
pub fn lagrange_triangle_shape(params: &ThreeBodyParams, b: f64) -> Result<LagrangeShape> {
    if !positive_finite(b) {
        return Err(Error::Invalid(format!(
            "triangle side must be positive and finite, got {b}"
        )));
    }
    let [m1, _, m3] = params.masses();
    let c1 = (m3 - m1) / (2.0 * (m1 + m3));
    let r1 = params.mu1().sqrt() * b;
    let r2 = params.mu2().sqrt() * b * (c1 * c1 + 0.75).sqrt();
    let phi = (0.75_f64.sqrt()).atan2(c1);
    Ok(LagrangeShape {
        shape: [r1, r2, phi],
    })
}

// ----- double spherical pendulum --------------------------------------------

/// Parameters of the double spherical pendulum.
#[derive(Clone, Copy, Debug)]
pub struct PendulumParams {
    masses: [f64; 2],
    lengths: [f64; 2],
    gravity: f64,
}

impl PendulumParams {
    pub fn new(masses: [f64; 2], lengths: [f64; 2], gravity: f64) -> Result<Self> {
        for &x in masses.iter().chain(lengths.iter()).chain([&gravity]) {
            if !positive_finite(x) {
                return Err(Error::Invalid(format!(
                    "pendulum parameters must be positive and finite, got {x}"
                )));
            }
        }
        Ok(PendulumParams {
            masses,
            lengths,
            gravity,
        })
    }

    pub fn masses(&self) -> [f64; 2] {
        self.masses
    }

    pub fn lengths(&self) -> [f64; 2] {
        self.lengths
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }
}

struct PendulumEmbedding {
    params: PendulumParams,
}

impl PendulumEmbedding {
    /// Downward vertical component `-sqrt(l^2 - r^2)` of one arm.
    fn depth(&self, arm: usize, r: &TruncatedSeries) -> Result<TruncatedSeries> {
        let l = self.params.lengths[arm];
        let r0 = r.constant_term();
        if r0.abs() >= l {
            return Err(Error::ShapeOutOfRange {
                detail: format!(
                    "arm {} displaced to |r| = {} beyond its length {l}",
                    arm + 1,
                    r0.abs()
                ),
            });
        }
        TruncatedSeries::constant(r.num_vars(), r.max_degree(), l * l)
            .sub(&r.mul(r)?)?
            .compose_elementary(Elementary::Sqrt)
            .map(|s| s.neg())
    }
}

impl ShapeEmbedding for PendulumEmbedding {
    fn shape_dim(&self) -> usize {
        3
    }

    fn particle_count(&self) -> usize {
        2
    }

    fn positions(&self, shape: &[TruncatedSeries]) -> Result<Vec<[TruncatedSeries; 3]>> {
        let (r1, r2, phi) = (&shape[0], &shape[1], &shape[2]);
        let zero = TruncatedSeries::zero(r1.num_vars(), r1.max_degree());
        let z1 = self.depth(0, r1)?;
        let z2 = self.depth(1, r2)?;
        let first = [r1.clone(), zero, z1.clone()];
        let second = [
            r1.add(&r2.mul(&phi.compose_elementary(Elementary::Cos)?)?)?,
            r2.mul(&phi.compose_elementary(Elementary::Sin)?)?,
            z1.add(&z2)?,
        ];
        Ok(vec![first, second])
    }

    fn potential(&self, shape: &[TruncatedSeries]) -> Result<TruncatedSeries> {
        let [m1, m2] = self.params.masses;
        let a = self.params.gravity;
        let z1 = self.depth(0, &shape[0])?;
        let z2 = self.depth(1, &shape[1])?;
        // V = a (m1 z1 + m2 (z1 + z2))
        z1.scale(a * (m1 + m2)).add(&z2.scale(a * m2))
    }
}

/// The double spherical pendulum as a two-particle system under rotations
/// about the vertical axis.
pub fn pendulum_system(params: &PendulumParams) -> Result<MechanicalSystem> {
    MechanicalSystem::new(
        params.masses().to_vec(),
        SymmetryGroup::S1,
        Box::new(PendulumEmbedding { params: *params }),
    )
}

// ----- configuration --------------------------------------------------------

/// Structured model description, deserializable from configuration files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "system")]
pub enum ModelConfig {
    /// `{"system": "three-body", "masses": [m1, m2, m3], "d0": ...}`
    #[serde(rename = "three-body")]
    ThreeBody { masses: [f64; 3], d0: f64 },
    /// `{"system": "pendulum", "masses": [m1, m2], "lengths": [l1, l2],
    /// "gravity": ...}`
    #[serde(rename = "pendulum")]
    Pendulum {
        masses: [f64; 2],
        lengths: [f64; 2],
        gravity: f64,
    },
}

impl ModelConfig {
    /// Build the described mechanical system.
    pub fn build_system(&self) -> Result<MechanicalSystem> {
        match self {
            ModelConfig::ThreeBody { masses, d0 } => {
                three_body_system(&ThreeBodyParams::new(*masses, *d0)?)
            }
            ModelConfig::Pendulum {
                masses,
                lengths,
                gravity,
            } => pendulum_system(&PendulumParams::new(*masses, *lengths, *gravity)?),
        }
    }
}
