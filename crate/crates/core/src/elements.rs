//! Lagrange bases on the reference triangle and symmetric quadrature rules.
//!
//! Reference triangle: vertices `(0,0)`, `(1,0)`, `(0,1)`, area 1/2.
//!
//! Local DOF ordering for degree `k >= 1`:
//! 1. the three vertices in order;
//! 2. the `k-1` interior points of each edge, edges taken as `v0->v1`,
//!    `v1->v2`, `v2->v0` and points listed from the first vertex to the second;
//! 3. interior lattice points `(a/k, b/k)` row by row (`b` outer, `a` inner).
//!
//! Degree 0 has a single DOF at the centroid.

use alloc::vec::Vec;

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 4;
pub const MAX_QUADRATURE_DEGREE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBasis {
    order: usize,
    /// Barycentric lattice index `(i0, i1, i2)` with `i0 + i1 + i2 = order`,
    /// `i0` belonging to vertex `(0,0)`.
    lattice: Vec<[usize; 3]>,
    dof_points: Vec<[f64; 2]>,
}

/// Builds the Lagrange basis of degree `k` on the equispaced lattice.
pub fn lagrange_basis(k: usize) -> Result<ReferenceBasis> {
    if k > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(k));
    }
    let mut lattice = Vec::new();
    if k == 0 {
        lattice.push([0, 0, 0]);
    } else {
        lattice.extend([[k, 0, 0], [0, k, 0], [0, 0, k]]);
        for m in 1..k {
            lattice.push([k - m, m, 0]);
        }
        for m in 1..k {
            lattice.push([0, k - m, m]);
        }
        for m in 1..k {
            lattice.push([m, 0, k - m]);
        }
        for b in 1..k {
            for a in 1..k - b {
                lattice.push([k - a - b, a, b]);
            }
        }
    }
    let dof_points = if k == 0 {
        alloc::vec![[1.0 / 3.0, 1.0 / 3.0]]
    } else {
        lattice
            .iter()
            .map(|l| [l[1] as f64 / k as f64, l[2] as f64 / k as f64])
            .collect()
    };
    Ok(ReferenceBasis {
        order: k,
        lattice,
        dof_points,
    })
}

/// `prod_{m<i} (k*lambda - m) / (m + 1)` and its derivative in `lambda`.
fn lattice_factor(k: usize, i: usize, lambda: f64) -> (f64, f64) {
    let kl = k as f64 * lambda;
    let mut value = 1.0;
    let mut deriv = 0.0;
    for m in 0..i {
        let denom = (m + 1) as f64;
        let f = (kl - m as f64) / denom;
        deriv = deriv * f + value * (k as f64 / denom);
        value *= f;
    }
    (value, deriv)
}

impl ReferenceBasis {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn node_count(&self) -> usize {
        self.lattice.len()
    }

    pub fn dof_points(&self) -> &[[f64; 2]] {
        &self.dof_points
    }

    pub fn eval(&self, p: [f64; 2]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.node_count()];
        self.eval_into(p, &mut out);
        out
    }

    pub fn eval_into(&self, p: [f64; 2], out: &mut [f64]) {
        let lam = [1.0 - p[0] - p[1], p[0], p[1]];
        for (o, l) in out.iter_mut().zip(&self.lattice) {
            *o = (0..3).map(|c| lattice_factor(self.order, l[c], lam[c]).0).product();
        }
    }

    /// Reference gradients of every basis function at `p`.
    pub fn grad(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        let lam = [1.0 - p[0] - p[1], p[0], p[1]];
        // d lambda_c / d(xi, eta)
        const DLAM: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        self.lattice
            .iter()
            .map(|l| {
                let f: [(f64, f64); 3] = core::array::from_fn(|c| lattice_factor(self.order, l[c], lam[c]));
                let mut g = [0.0; 2];
                for c in 0..3 {
                    let others: f64 = (0..3).filter(|&o| o != c).map(|o| f[o].0).product();
                    g[0] += f[c].1 * others * DLAM[c][0];
                    g[1] += f[c].1 * others * DLAM[c][1];
                }
                g
            })
            .collect()
    }

    /// Local indices of the points strictly inside local edge `l`, ordered from
    /// its first vertex to its second.
    pub fn edge_dofs(&self, l: usize) -> core::ops::Range<usize> {
        if self.order == 0 {
            return 0..0;
        }
        let per = self.order - 1;
        3 + l * per..3 + (l + 1) * per
    }

    pub fn interior_dofs(&self) -> core::ops::Range<usize> {
        if self.order == 0 {
            return 0..1;
        }
        3 + 3 * (self.order - 1)..self.node_count()
    }

    /// Splits the reference triangle into `order^2` lattice sub-triangles,
    /// returned as local DOF triples (counterclockwise). Degree 0 yields the
    /// whole triangle with no DOF mapping and returns an empty list.
    pub fn sub_triangles(&self) -> Vec<[usize; 3]> {
        let k = self.order;
        if k == 0 {
            return Vec::new();
        }
        let find = |a: usize, b: usize| {
            self.lattice
                .iter()
                .position(|l| l[1] == a && l[2] == b)
                .expect("lattice point")
        };
        let mut out = Vec::with_capacity(k * k);
        for b in 0..k {
            for a in 0..k - b {
                out.push([find(a, b), find(a + 1, b), find(a, b + 1)]);
                if a + b + 2 <= k {
                    out.push([find(a + 1, b), find(a + 1, b + 1), find(a, b + 1)]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    /// Weights on the reference triangle (summing to 1/2).
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

enum Orbit {
    Centroid(f64),
    /// `(a, a, 1-2a)` and permutations.
    Single(f64, f64),
    /// `(a, b, 1-a-b)` and permutations.
    Double(f64, f64, f64),
}

// Symmetric positive-weight rules (Dunavant), weights normalized to 1.
const RULE_2: &[Orbit] = &[Orbit::Single(1.0 / 6.0, 1.0 / 3.0)];
const RULE_4: &[Orbit] = &[
    Orbit::Single(0.445_948_490_915_964_886_32, 0.223_381_589_678_011_465_7),
    Orbit::Single(0.091_576_213_509_770_743_46, 0.109_951_743_655_321_867_64),
];
const RULE_5: &[Orbit] = &[
    Orbit::Centroid(0.225),
    Orbit::Single(0.470_142_064_105_115_089_77, 0.132_394_152_788_506_180_74),
    Orbit::Single(0.101_286_507_323_456_338_8, 0.125_939_180_544_827_152_6),
];
const RULE_6: &[Orbit] = &[
    Orbit::Single(0.249_286_745_170_910_421_29, 0.116_786_275_726_379_366_03),
    Orbit::Single(0.063_089_014_491_502_228_34, 0.050_844_906_370_206_816_921),
    Orbit::Double(
        0.053_145_049_844_816_947_353,
        0.310_352_451_033_784_405_42,
        0.082_851_075_618_373_575_194,
    ),
];
const RULE_8: &[Orbit] = &[
    Orbit::Centroid(0.144_315_607_677_787_168_25),
    Orbit::Single(0.459_292_588_292_723_156_03, 0.095_091_634_267_284_624_794),
    Orbit::Single(0.170_569_307_751_760_206_62, 0.103_217_370_534_718_250_28),
    Orbit::Single(0.050_547_228_317_030_975_458, 0.032_458_497_623_198_080_311),
    Orbit::Double(
        0.008_394_777_409_957_605_337_2,
        0.263_112_829_634_638_113_42,
        0.027_230_314_174_434_994_265,
    ),
];

/// Smallest shipped rule integrating every polynomial of total degree
/// `degree` exactly.
pub fn quadrature(degree: usize) -> Result<QuadratureRule> {
    let (orbits, exact_degree): (&[Orbit], usize) = match degree {
        0 | 1 => (&[Orbit::Centroid(1.0)], 1),
        2 => (RULE_2, 2),
        3 | 4 => (RULE_4, 4),
        5 => (RULE_5, 5),
        6 => (RULE_6, 6),
        7 | 8 => (RULE_8, 8),
        d => return Err(Error::UnsupportedQuadrature(d)),
    };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for orbit in orbits {
        match *orbit {
            Orbit::Centroid(w) => {
                points.push([1.0 / 3.0, 1.0 / 3.0]);
                weights.push(w);
            }
            Orbit::Single(a, w) => {
                let c = 1.0 - 2.0 * a;
                points.extend([[a, a], [c, a], [a, c]]);
                weights.extend([w; 3]);
            }
            Orbit::Double(a, b, w) => {
                let c = 1.0 - a - b;
                points.extend([[a, b], [b, a], [a, c], [c, a], [b, c], [c, b]]);
                weights.extend([w; 6]);
            }
        }
    }
    for w in weights.iter_mut() {
        *w *= 0.5;
    }
    Ok(QuadratureRule {
        points,
        weights,
        exact_degree,
    })
}

/// Every distinct rule in the table, lowest degree first.
pub fn shipped_rules() -> Vec<QuadratureRule> {
    [1, 2, 4, 5, 6, 8]
        .into_iter()
        .map(|d| quadrature(d).expect("shipped degree"))
        .collect()
}

/// Exact integral of `x^a y^b` over the reference triangle: `a! b! / (a+b+2)!`.
pub fn monomial_integral(a: u32, b: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    fact(a) * fact(b) / fact(a + b + 2)
}

/// Largest absolute error of `rule` over all monomials up to its exact degree.
pub fn certify(rule: &QuadratureRule) -> f64 {
    let d = rule.exact_degree as u32;
    let mut worst: f64 = 0.0;
    for a in 0..=d {
        for b in 0..=d - a {
            let q: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * libm::pow(p[0], a as f64) * libm::pow(p[1], b as f64))
                .sum();
            worst = worst.max(libm::fabs(q - monomial_integral(a, b)));
        }
    }
    worst
}
