//! Unit-covolume planar lattices, modular reduction and the special shift points.
//!
//! A lattice is parametrized by `tau = x + iy` in the upper half plane. The
//! canonical generator is `y^{-1/2} [[1, x], [0, y]]`, columns being the basis
//! vectors, so that `det = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Row-major 2x2 matrix; `m[i][j]` is row `i`, column `j`.
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub x: f64,
    pub y: f64,
    pub gen: Mat2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    LatticeCoords,
    Cartesian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub u: f64,
    pub v: f64,
    pub frame: Frame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    J,
    T,
    Tinv,
    Mirror,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub tau_in: Complex64,
    pub tau_out: Complex64,
    pub word: Vec<Generator>,
}

/// A unit-covolume shape scaled by `scale`; covolume is `scale^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledLattice {
    pub shape: Lattice,
    pub scale: f64,
}

fn wrap01(t: f64) -> f64 {
    let r = t - t.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl PhasePoint {
    pub fn lattice(u: f64, v: f64) -> Self {
        Self {
            u,
            v,
            frame: Frame::LatticeCoords,
        }
    }

    pub fn cartesian(u: f64, v: f64) -> Self {
        Self {
            u,
            v,
            frame: Frame::Cartesian,
        }
    }

    /// Lattice coordinates reduced into `[0,1)^2`; Cartesian points are returned unchanged.
    pub fn canonical(&self) -> Self {
        match self.frame {
            Frame::LatticeCoords => Self::lattice(wrap01(self.u), wrap01(self.v)),
            Frame::Cartesian => *self,
        }
    }
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2(m: &Mat2) -> Mat2 {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

pub fn transpose2(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Standard symplectic form `sigma(p, q) = p1 q2 - p2 q1`.
pub fn sigma(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

impl Lattice {
    pub fn square() -> Self {
        lattice_from_tau(0.0, 1.0).unwrap()
    }

    pub fn hexagonal() -> Self {
        lattice_from_tau(0.5, SQRT3_2).unwrap()
    }

    /// Builds a lattice from any generator with determinant 1 (to 1e-10).
    pub fn from_generator(gen: Mat2) -> Result<Self> {
        let d = det2(&gen);
        if !d.is_finite() || (d - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "generator determinant {d} is not 1"
            )));
        }
        let v1 = Complex64::new(gen[0][0], gen[1][0]);
        let v2 = Complex64::new(gen[0][1], gen[1][1]);
        let tau = v2 / v1;
        Ok(Self {
            x: tau.re,
            y: tau.im,
            gen,
        })
    }

    pub fn tau(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn det(&self) -> f64 {
        det2(&self.gen)
    }

    pub fn basis(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.gen[0][0], self.gen[1][0]],
            [self.gen[0][1], self.gen[1][1]],
        )
    }

    /// Gram matrix entries `(g11, g12, g22)` of the quadratic form `|M n|^2`.
    pub fn gram(&self) -> (f64, f64, f64) {
        let y = self.y;
        (1.0 / y, self.x / y, (self.x * self.x + y * y) / y)
    }

    pub fn point(&self, k: f64, l: f64) -> [f64; 2] {
        mat_vec(&self.gen, [k, l])
    }

    pub fn to_cartesian(&self, p: &PhasePoint) -> [f64; 2] {
        match p.frame {
            Frame::LatticeCoords => self.point(p.u, p.v),
            Frame::Cartesian => [p.u, p.v],
        }
    }

    /// Lattice coordinates `(u, v)` of a point, not reduced mod 1.
    pub fn to_lattice_coords(&self, p: &PhasePoint) -> (f64, f64) {
        match p.frame {
            Frame::LatticeCoords => (p.u, p.v),
            Frame::Cartesian => {
                let c = mat_vec(&inv2(&self.gen), [p.u, p.v]);
                (c[0], c[1])
            }
        }
    }

    /// Half the diameter of the fundamental parallelogram.
    pub fn cell_radius(&self) -> f64 {
        let (v1, v2) = self.basis();
        let a = (v1[0] + v2[0]).hypot(v1[1] + v2[1]);
        let b = (v1[0] - v2[0]).hypot(v1[1] - v2[1]);
        0.5 * a.max(b)
    }

    /// Length of a shortest nonzero vector (brute force over a small box).
    pub fn shortest_vector(&self) -> f64 {
        let t = reduce_to_fundamental(self.tau()).expect("lattice tau is in the upper half plane");
        // For a reduced basis the shortest vector has squared length 1/y.
        (1.0 / t.tau_out.im).sqrt()
    }
}

pub fn lattice_from_tau(x: f64, y: f64) -> Result<Lattice> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::NonPositiveY(y));
    }
    let s = 1.0 / y.sqrt();
    Ok(Lattice {
        x,
        y,
        gen: [[s, s * x], [0.0, s * y]],
    })
}

pub fn apply_generator(g: Generator, z: Complex64) -> Complex64 {
    match g {
        Generator::J => -z.inv(),
        Generator::T => z + 1.0,
        Generator::Tinv => z - 1.0,
        Generator::Mirror => Complex64::new(-z.re, z.im),
    }
}

pub fn replay(tau: Complex64, word: &[Generator]) -> Complex64 {
    word.iter().fold(tau, |z, &g| apply_generator(g, z))
}

pub fn in_d_plus(tau: Complex64, tol: f64) -> bool {
    tau.re >= -tol && tau.re <= 0.5 + tol && tau.norm() >= 1.0 - tol && tau.im > 0.0
}

const MAX_GENERATOR_APPLICATIONS: usize = 10_000;

pub fn reduce_to_fundamental(tau: Complex64) -> Result<ReductionTrace> {
    if !(tau.im > 0.0) {
        return Err(Error::NotUpperHalfPlane(tau.im));
    }
    let mut z = tau;
    let mut word = Vec::new();
    loop {
        // shift Re into (-1/2, 1/2]
        let k = (z.re - 0.5).ceil();
        if k.abs() > MAX_GENERATOR_APPLICATIONS as f64 {
            return Err(Error::NoConvergence(MAX_GENERATOR_APPLICATIONS));
        }
        let g = if k > 0.0 { Generator::Tinv } else { Generator::T };
        for _ in 0..(k.abs() as usize) {
            z = apply_generator(g, z);
            word.push(g);
        }
        if z.norm_sqr() < 1.0 - 1e-15 {
            z = apply_generator(Generator::J, z);
            word.push(Generator::J);
        } else {
            break;
        }
        if word.len() > MAX_GENERATOR_APPLICATIONS {
            return Err(Error::NoConvergence(word.len()));
        }
    }
    if z.re < 0.0 {
        z = apply_generator(Generator::Mirror, z);
        word.push(Generator::Mirror);
    }
    Ok(ReductionTrace {
        tau_in: tau,
        tau_out: z,
        word,
    })
}

pub fn dual_lattice(l: &Lattice) -> Lattice {
    Lattice::from_generator(transpose2(&inv2(&l.gen))).expect("inverse transpose keeps det 1")
}

/// For unit covolume the symplectic dual is the lattice itself.
pub fn symplectic_dual(l: &Lattice) -> Lattice {
    *l
}

impl ScaledLattice {
    pub fn generator(&self) -> Mat2 {
        let s = self.scale;
        let g = self.shape.gen;
        [[s * g[0][0], s * g[0][1]], [s * g[1][0], s * g[1][1]]]
    }

    pub fn covolume(&self) -> f64 {
        self.scale * self.scale
    }

    /// `vol^{-1} * Lambda`, i.e. the same shape with reciprocal scale.
    pub fn symplectic_dual(&self) -> ScaledLattice {
        ScaledLattice {
            shape: self.shape,
            scale: 1.0 / self.scale,
        }
    }
}

pub fn special_point_a(x: f64, y: f64) -> Result<PhasePoint> {
    if !(y > 0.0) {
        return Err(Error::NonPositiveY(y));
    }
    let r = x * x + y * y;
    let y2 = 2.0 * y * y;
    Ok(PhasePoint::lattice((1.0 - x) * r / y2, (r - x) / y2))
}

pub fn special_point_b(x: f64, y: f64) -> Result<PhasePoint> {
    if !(y > 0.0) {
        return Err(Error::NonPositiveY(y));
    }
    let y4 = 4.0 * y * y;
    Ok(PhasePoint::lattice(
        (x + (1.0 - x) * y4) / (2.0 * y4),
        (y4 - 1.0) / (2.0 * y4),
    ))
}
