use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The five heightfield families a cut can be drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutFamily {
    Planar,
    Sine,
    Parabolic,
    Square,
    Pulse,
}

impl CutFamily {
    pub const ALL: [CutFamily; 5] = [
        CutFamily::Planar,
        CutFamily::Sine,
        CutFamily::Parabolic,
        CutFamily::Square,
        CutFamily::Pulse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CutFamily::Planar => "planar",
            CutFamily::Sine => "sine",
            CutFamily::Parabolic => "parabolic",
            CutFamily::Square => "square",
            CutFamily::Pulse => "pulse",
        }
    }

    pub fn parse(s: &str) -> Option<CutFamily> {
        CutFamily::ALL.iter().copied().find(|f| f.name() == s)
    }
}

/// A concrete heightfield cut z = f(x, y).
///
/// * `Planar`: f = a x + b y + c
/// * `Sine`: f = h sin(a x + b y + c) + k
/// * `Parabolic`: f = a x^2 + b y^2 + c
/// * `Square`: f = h where t >= x >= -t, else 0
/// * `Pulse`: f = h where t >= x >= -t and t >= y >= -t, else 0
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CutSpec {
    Planar { a: f64, b: f64, c: f64 },
    Sine { a: f64, b: f64, c: f64, h: f64, k: f64 },
    Parabolic { a: f64, b: f64, c: f64 },
    Square { t: f64, h: f64 },
    Pulse { t: f64, h: f64 },
}

/// Which part of the cut a point belongs to. Above the heightfield is `A`;
/// on or below it is `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(&self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Side::A => "a",
            Side::B => "b",
        }
    }
}

impl CutSpec {
    pub fn family(&self) -> CutFamily {
        match self {
            CutSpec::Planar { .. } => CutFamily::Planar,
            CutSpec::Sine { .. } => CutFamily::Sine,
            CutSpec::Parabolic { .. } => CutFamily::Parabolic,
            CutSpec::Square { .. } => CutFamily::Square,
            CutSpec::Pulse { .. } => CutFamily::Pulse,
        }
    }

    /// Heightfield value f(x, y).
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            CutSpec::Planar { a, b, c } => a * x + b * y + c,
            CutSpec::Sine { a, b, c, h, k } => h * (a * x + b * y + c).sin() + k,
            CutSpec::Parabolic { a, b, c } => a * x * x + b * y * y + c,
            CutSpec::Square { t, h } => {
                if x >= -t && x <= t {
                    h
                } else {
                    0.0
                }
            }
            CutSpec::Pulse { t, h } => {
                if x >= -t && x <= t && y >= -t && y <= t {
                    h
                } else {
                    0.0
                }
            }
        }
    }

    /// Signed vertical clearance g(p) = p.z - f(p.x, p.y).
    pub fn margin(&self, p: &Point3<f64>) -> f64 {
        p.z - self.value(p.x, p.y)
    }

    /// Side assignment; the tie g = 0 goes to `B`.
    pub fn side(&self, p: &Point3<f64>) -> Side {
        if self.margin(p) > 0.0 {
            Side::A
        } else {
            Side::B
        }
    }

    /// Gradient (df/dx, df/dy). Zero almost everywhere for the piecewise
    /// constant families (jump locations have measure zero).
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            CutSpec::Planar { a, b, .. } => (a, b),
            CutSpec::Sine { a, b, c, h, .. } => {
                let cosv = (a * x + b * y + c).cos();
                (h * a * cosv, h * b * cosv)
            }
            CutSpec::Parabolic { a, b, .. } => (2.0 * a * x, 2.0 * b * y),
            CutSpec::Square { .. } | CutSpec::Pulse { .. } => (0.0, 0.0),
        }
    }

    /// Area scale factor sqrt(1 + |grad f|^2) of the graph at (x, y).
    pub fn slope_factor(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = self.gradient(x, y);
        (1.0 + gx * gx + gy * gy).sqrt()
    }

    /// Upper bound of [`slope_factor`] over the rectangle
    /// [x0, x1] x [y0, y1] (used as a rejection-sampling envelope).
    pub fn slope_bound(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        match *self {
            CutSpec::Planar { a, b, .. } => (1.0 + a * a + b * b).sqrt(),
            CutSpec::Sine { a, b, h, .. } => {
                (1.0 + (h * a).powi(2) + (h * b).powi(2)).sqrt()
            }
            CutSpec::Parabolic { a, b, .. } => {
                let mx = x0.abs().max(x1.abs());
                let my = y0.abs().max(y1.abs());
                (1.0 + (2.0 * a * mx).powi(2) + (2.0 * b * my).powi(2)).sqrt()
            }
            CutSpec::Square { .. } | CutSpec::Pulse { .. } => 1.0,
        }
    }

    /// Unit normal of the graph pointing toward side A (increasing g).
    pub fn interface_normal_toward_a(&self, x: f64, y: f64) -> Vector3<f64> {
        let (gx, gy) = self.gradient(x, y);
        Vector3::new(-gx, -gy, 1.0).normalize()
    }
}

/// Draws a cut uniformly from the family's coefficient ranges.
pub fn sample_cut_spec<R: Rng + ?Sized>(family: CutFamily, rng: &mut R) -> CutSpec {
    let mut uniform = |lo: f64, hi: f64| lo + rng.random::<f64>() * (hi - lo);
    match family {
        CutFamily::Planar => CutSpec::Planar {
            a: uniform(-10.0, 10.0),
            b: uniform(-10.0, 10.0),
            c: uniform(-1.0, 1.0),
        },
        CutFamily::Sine => CutSpec::Sine {
            a: uniform(-100.0, 100.0),
            b: uniform(-100.0, 100.0),
            c: uniform(-1.0, 1.0),
            h: uniform(-1.0, 1.0),
            k: uniform(-1.0, 1.0),
        },
        CutFamily::Parabolic => CutSpec::Parabolic {
            a: uniform(-10.0, 10.0),
            b: uniform(-10.0, 10.0),
            c: uniform(-1.0, 1.0),
        },
        // t and h are drawn from (0, 1]: 1 - u maps [0, 1) onto (0, 1].
        CutFamily::Square => CutSpec::Square {
            t: 1.0 - rng.random::<f64>(),
            h: 1.0 - rng.random::<f64>(),
        },
        CutFamily::Pulse => CutSpec::Pulse {
            t: 1.0 - rng.random::<f64>(),
            h: 1.0 - rng.random::<f64>(),
        },
    }
}
