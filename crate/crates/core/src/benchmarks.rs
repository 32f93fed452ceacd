//! Analytic multi-objective test problems.
//!
//! Problems are defined in their native minimization form and exposed to
//! the optimizer in maximization convention over the unit cube: `evaluate`
//! maps a unit-cube input to native units, snaps discrete coordinates,
//! evaluates the native objectives `g` and returns `-g`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{check_dim, Error, Result};
use crate::pareto::ObjectiveVector;

/// Names accepted by [`make_problem`].
pub const PROBLEM_NAMES: [&str; 6] = [
    "zdt3",
    "four_bar_truss",
    "reinforced_concrete_beam",
    "gear_train",
    "welded_beam",
    "disc_brake",
];

/// Admissible reinforcement areas of the concrete beam (square inches).
pub const BEAM_AREAS: [f64; 76] = [
    0.20, 0.31, 0.40, 0.44, 0.60, 0.62, 0.79, 0.80, 0.88, 0.93, 1.0, 1.20, 1.24, 1.32, 1.40, 1.55, 1.58, 1.60, 1.76,
    1.80, 1.86, 2.0, 2.17, 2.20, 2.37, 2.40, 2.48, 2.60, 2.64, 2.79, 2.80, 3.0, 3.08, 3.10, 3.16, 3.41, 3.52, 3.60,
    3.72, 3.95, 3.96, 4.0, 4.03, 4.20, 4.34, 4.40, 4.65, 4.74, 4.80, 4.84, 5.0, 5.28, 5.40, 5.53, 5.72, 6.0, 6.16,
    6.32, 6.60, 7.11, 7.20, 7.80, 7.90, 8.0, 8.40, 8.69, 9.0, 9.48, 10.27, 11.0, 11.06, 11.85, 12.0, 13.0, 14.0, 15.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Zdt3,
    FourBarTruss,
    ConcreteBeam,
    GearTrain,
    WeldedBeam,
    DiscBrake,
}

/// How a discrete input coordinate is snapped before evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discrete {
    Integer,
    Levels(&'static [f64]),
}

impl Discrete {
    fn snap(self, v: f64, lo: f64, hi: f64) -> f64 {
        match self {
            Discrete::Integer => v.round().clamp(lo.ceil(), hi.floor()),
            Discrete::Levels(levels) => {
                let mut best = levels[0];
                for &l in levels {
                    if (l - v).abs() < (best - v).abs() {
                        best = l;
                    }
                }
                best
            }
        }
    }
}

/// Problem metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: &'static str,
    pub d: usize,
    pub k: usize,
    /// Native `(lo, hi)` per input dimension.
    pub bounds: Vec<(f64, f64)>,
    /// Reference point in native (minimization) units.
    pub reference_native: Vec<f64>,
    /// Discrete input coordinates and their snapping rule.
    pub discrete: Vec<(usize, Discrete)>,
    kind: Kind,
}

/// Looks up a problem by name.
pub fn make_problem(name: &str) -> Result<Problem> {
    type Entry = (Kind, Vec<(f64, f64)>, Vec<f64>, Vec<(usize, Discrete)>);
    let (kind, bounds, reference_native, discrete): Entry = match name {
        "zdt3" => (Kind::Zdt3, vec![(0.0, 1.0); 9], vec![11.0, 11.0], vec![]),
        "four_bar_truss" => (
            Kind::FourBarTruss,
            vec![(1.0, 3.0), (SQRT_2, 3.0), (SQRT_2, 3.0), (1.0, 3.0)],
            vec![2967.0243, 0.0383],
            vec![],
        ),
        "reinforced_concrete_beam" => (
            Kind::ConcreteBeam,
            vec![(0.2, 15.0), (0.0, 20.0), (0.0, 40.0)],
            vec![703.6860, 899.2291],
            vec![(0, Discrete::Levels(&BEAM_AREAS))],
        ),
        "gear_train" => (
            Kind::GearTrain,
            vec![(12.0, 60.0); 4],
            vec![6.6764, 59.0, 0.4633],
            (0..4).map(|i| (i, Discrete::Integer)).collect(),
        ),
        "welded_beam" => (
            Kind::WeldedBeam,
            vec![(0.125, 5.0), (0.1, 10.0), (0.1, 10.0), (0.125, 5.0)],
            vec![202.8569, 42.0653, 2111643.6209],
            vec![],
        ),
        "disc_brake" => (
            Kind::DiscBrake,
            vec![(55.0, 80.0), (75.0, 110.0), (1000.0, 3000.0), (11.0, 20.0)],
            vec![6.1356, 6.3421, 12.9737],
            vec![],
        ),
        _ => {
            return Err(Error::UnknownProblem {
                name: name.to_string(),
                supported: PROBLEM_NAMES.join(", "),
            })
        }
    };
    let name = PROBLEM_NAMES
        .iter()
        .copied()
        .find(|n| *n == name)
        .expect("matched above");
    Ok(Problem {
        name,
        d: bounds.len(),
        k: reference_native.len(),
        bounds,
        reference_native,
        discrete,
        kind,
    })
}

impl Problem {
    /// Input coordinates that take discrete values.
    pub fn integer_dims(&self) -> Vec<usize> {
        self.discrete.iter().map(|(i, _)| *i).collect()
    }

    /// Unit-cube input mapped to native units with discrete coordinates
    /// snapped to their nearest admissible value.
    pub fn to_native(&self, x_unit: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x_unit.len())?;
        if x_unit.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input"));
        }
        if x_unit.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("input must lie in the unit cube"));
        }
        Ok(self.map_unit(x_unit))
    }

    fn map_unit(&self, x_unit: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = x_unit
            .iter()
            .zip(&self.bounds)
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect();
        for &(i, rule) in &self.discrete {
            let (lo, hi) = self.bounds[i];
            x[i] = rule.snap(x[i], lo, hi);
        }
        x
    }

    /// Native (minimization) objective values at a native input.
    pub fn native_objectives(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x.len())?;
        Ok(match self.kind {
            Kind::Zdt3 => zdt3(x),
            Kind::FourBarTruss => four_bar_truss(x),
            Kind::ConcreteBeam => concrete_beam(x),
            Kind::GearTrain => gear_train(x),
            Kind::WeldedBeam => welded_beam(x),
            Kind::DiscBrake => disc_brake(x),
        })
    }

    /// Maximization-convention objectives at a unit-cube input.
    pub fn evaluate(&self, x_unit: &[f64]) -> Result<ObjectiveVector> {
        let x = self.to_native(x_unit)?;
        let mut g = self.native_objectives(&x)?;
        if g.iter().any(|v| !v.is_finite()) {
            let inner: Vec<f64> = x_unit.iter().map(|u| u.clamp(1e-9, 1.0 - 1e-9)).collect();
            g = self.native_objectives(&self.map_unit(&inner))?;
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective value"));
        }
        ObjectiveVector::new(g.into_iter().map(|v| -v).collect())
    }

    /// Reference point in maximization convention.
    pub fn reference_max(&self) -> Vec<f64> {
        self.reference_native.iter().map(|v| -v).collect()
    }
}

pub fn evaluate(p: &Problem, x_unit: &[f64]) -> Result<ObjectiveVector> {
    p.evaluate(x_unit)
}

pub fn reference_max(p: &Problem) -> Vec<f64> {
    p.reference_max()
}

fn violation(g: f64) -> f64 {
    if g < 0.0 {
        -g
    } else {
        0.0
    }
}

fn zdt3(x: &[f64]) -> Vec<f64> {
    let f1 = x[0];
    let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (x.len() - 1) as f64;
    let ratio = f1 / g;
    let f2 = g * (1.0 - ratio.sqrt() - ratio * (10.0 * PI * f1).sin());
    vec![f1, f2]
}

fn four_bar_truss(x: &[f64]) -> Vec<f64> {
    let (force, e, l) = (10.0, 2.0e5, 200.0);
    let f1 = l * (2.0 * x[0] + SQRT_2 * x[1] + x[2].sqrt() + x[3]);
    let f2 = (force * l / e) * (2.0 / x[0] + 2.0 * SQRT_2 / x[1] - 2.0 * SQRT_2 / x[2] + 2.0 / x[3]);
    vec![f1, f2]
}

fn concrete_beam(x: &[f64]) -> Vec<f64> {
    let (area, b, h) = (x[0], x[1], x[2]);
    let f1 = 29.4 * area + 0.6 * b * h;
    let g1 = area * h - 7.735 * area * area / b - 180.0;
    let g2 = 4.0 - h / b;
    vec![f1, violation(g1) + violation(g2)]
}

fn gear_train(x: &[f64]) -> Vec<f64> {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    let f1 = (6.931 - (x3 / x1) * (x4 / x2)).abs();
    let f2 = x1.max(x2).max(x3).max(x4);
    let f3 = violation(0.5 - f1 / 6.931);
    vec![f1, f2, f3]
}

fn welded_beam(x: &[f64]) -> Vec<f64> {
    let (h, l_weld, t, b) = (x[0], x[1], x[2], x[3]);
    let (p, l, e, g): (f64, f64, f64, f64) = (6000.0, 14.0, 30e6, 12e6);
    let (tau_max, sigma_max) = (13600.0, 30000.0);

    let f1 = 1.10471 * h * h * l_weld + 0.04811 * t * b * (14.0 + l_weld);
    let f2 = 4.0 * p * l.powi(3) / (e * b * t.powi(3));

    let m = p * (l + l_weld / 2.0);
    let r = (l_weld * l_weld / 4.0 + ((h + t) / 2.0).powi(2)).sqrt();
    let j = 2.0 * SQRT_2 * h * l_weld * (l_weld * l_weld / 12.0 + ((h + t) / 2.0).powi(2));
    let tau2 = m * r / j;
    let tau1 = p / (SQRT_2 * h * l_weld);
    let tau = (tau1 * tau1 + 2.0 * tau1 * tau2 * l_weld / (2.0 * r) + tau2 * tau2).sqrt();
    let sigma = 6.0 * p * l / (b * t * t);
    let pc = 4.013 * e * (t * t * b.powi(6) / 36.0).sqrt() / (l * l) * (1.0 - t / (2.0 * l) * (e / (4.0 * g)).sqrt());

    let f3 = violation(tau_max - tau) + violation(sigma_max - sigma) + violation(b - h) + violation(pc - p);
    vec![f1, f2, f3]
}

fn disc_brake(x: &[f64]) -> Vec<f64> {
    let (ri, ro, force, faces) = (x[0], x[1], x[2], x[3]);
    let sq = ro * ro - ri * ri;
    let cu = ro.powi(3) - ri.powi(3);
    let f1 = 4.9e-5 * sq * (faces - 1.0);
    let f2 = 9.82e6 * sq / (force * faces * cu);
    let g1 = (ro - ri) - 20.0;
    // The published constraint uses 3.14, not pi.
    #[allow(clippy::approx_constant)]
    let g2 = 0.4 - force / (3.14 * sq);
    let g3 = 1.0 - 2.22e-3 * force * cu / (sq * sq);
    let g4 = 2.66e-2 * force * faces * cu / sq - 900.0;
    vec![f1, f2, violation(g1) + violation(g2) + violation(g3) + violation(g4)]
}
