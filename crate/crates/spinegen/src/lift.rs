//! Degree-2 branched maps with explicit inverse branches, and path lifting.

use num_complex::Complex64 as C;

use elastica::{Error, Result};

/// A branched self-map of the sphere given by its preimage function.
pub trait BranchedMap {
    /// All preimages of `w` (two of them here).
    fn preimages(&self, w: C) -> [C; 2];
}

/// `f(z) = (a z^2 + b) / (c z^2 + d)`; covers `z^2 + c` and the rational
/// examples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadMobius {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
}

impl QuadMobius {
    pub fn polynomial(c: C) -> Self {
        QuadMobius { a: C::new(1.0, 0.0), b: c, c: C::new(0.0, 0.0), d: C::new(1.0, 0.0) }
    }

    pub fn eval(&self, z: C) -> C {
        let s = z * z;
        (self.a * s + self.b) / (self.c * s + self.d)
    }
}

impl BranchedMap for QuadMobius {
    fn preimages(&self, w: C) -> [C; 2] {
        let s = (self.b - self.d * w) / (self.c * w - self.a);
        let r = s.sqrt();
        [r, -r]
    }
}

/// Formal mating of `z^2 + c1` and `z^2 + c2`: the first plane is squeezed
/// into the unit disk by `z / (1 + |z|)`, the second into its outside by the
/// reciprocal, so angle `t` of the second polynomial sits at angle `-t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormalMating {
    pub c1: C,
    pub c2: C,
}

fn rho(z: C) -> C {
    z / (1.0 + z.norm())
}

fn rho_inv(w: C) -> C {
    w / (1.0 - w.norm())
}

impl FormalMating {
    /// Image of a point of the first plane on the sphere.
    pub fn inner(z: C) -> C {
        rho(z)
    }

    /// Image of a point of the second plane on the sphere.
    pub fn outer(z: C) -> C {
        C::new(1.0, 0.0) / rho(z)
    }

    pub fn eval(&self, w: C) -> C {
        let r = w.norm();
        if (r - 1.0).abs() < 1e-13 {
            let s = w * w;
            return s / s.norm();
        }
        if r < 1.0 {
            let z = rho_inv(w);
            rho(z * z + self.c1)
        } else {
            let z = rho_inv(C::new(1.0, 0.0) / w);
            C::new(1.0, 0.0) / rho(z * z + self.c2)
        }
    }
}

impl BranchedMap for FormalMating {
    fn preimages(&self, w: C) -> [C; 2] {
        let r = w.norm();
        if (r - 1.0).abs() < 1e-13 {
            let s = w.sqrt();
            let s = s / s.norm();
            return [s, -s];
        }
        if r < 1.0 {
            let z = (rho_inv(w) - self.c1).sqrt();
            [rho(z), rho(-z)]
        } else {
            let z = (rho_inv(C::new(1.0, 0.0) / w) - self.c2).sqrt();
            let one = C::new(1.0, 0.0);
            [one / rho(z), one / rho(-z)]
        }
    }
}

/// Lifts the polyline `pts` starting at the preimage `z0` of `pts[0]` by
/// continuation. Steps shrink until the chosen branch is unambiguous and
/// the step stays short compared with the distance to `avoid`.
pub fn lift_path(f: &dyn BranchedMap, pts: &[C], z0: C, avoid: &[C]) -> Result<Vec<C>> {
    let mut out = vec![z0];
    let mut z = z0;
    for win in pts.windows(2) {
        let (p, q) = (win[0], win[1]);
        let mut t = 0.0;
        let mut h: f64 = 0.05;
        while t < 1.0 {
            let tn = (t + h).min(1.0);
            let w = p + (q - p) * tn;
            let pre = f.preimages(w);
            let d: Vec<f64> = pre.iter().map(|x| (x - z).norm()).collect();
            let (i, j) = if d[0] <= d[1] { (0, 1) } else { (1, 0) };
            let clearance = avoid.iter().map(|a| (a - z).norm()).fold(f64::INFINITY, f64::min);
            if d[i] < 0.2 * d[j] && d[i] < 0.2 * clearance && d[i] < 0.05 {
                z = pre[i];
                out.push(z);
                t = tn;
                h = (h * 1.5).min(0.05);
            } else {
                h *= 0.5;
                if h < 1e-14 {
                    return Err(Error::Degenerate(format!("path lifting stalled near {w}")));
                }
            }
        }
    }
    Ok(out)
}
