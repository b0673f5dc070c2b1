//! Adaptive Gauss–Kronrod and fixed-order Gauss–Legendre quadrature.

use std::sync::OnceLock;

use crate::error::{Error, Result};

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration to an absolute tolerance.
///
/// Subdivides the interval with the largest error estimate until the summed
/// estimate drops below `abs_tol` or `max_intervals` is reached.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        let total: f64 = parts.iter().map(|p| p.2).sum();
        if !total.is_finite() {
            return Err(Error::Numeric {
                what: "adaptive quadrature (non-finite integrand)".into(),
                achieved: f64::INFINITY,
            });
        }
        if total_err <= abs_tol {
            return Ok(total);
        }
        if parts.len() >= max_intervals {
            return Err(Error::Numeric {
                what: "adaptive quadrature".into(),
                achieved: total_err,
            });
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            // interval cannot be split further in floating point
            return Err(Error::Numeric {
                what: "adaptive quadrature (interval exhausted)".into(),
                achieved: total_err,
            });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Like [`integrate`](Self::integrate) but with a fallible integrand.
    pub fn try_integrate<F: Fn(f64) -> Result<f64>>(&self, a: f64, b: f64, f: F) -> Result<f64> {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x)?;
        }
        Ok(acc * h)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Orders used by the doubling scheme: 64, 128, ..., 4096.
pub const GL_ORDERS: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

/// Shared, lazily built rule for one of [`GL_ORDERS`].
pub fn gauss_legendre(order_index: usize) -> &'static GaussLegendre {
    static RULES: [OnceLock<GaussLegendre>; 7] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    RULES[order_index].get_or_init(|| GaussLegendre::new(GL_ORDERS[order_index]))
}

/// Gauss–Legendre with order doubling from 64 until successive estimates agree
/// to `rel_tol` (relative to `max(1, |estimate|)`).
pub fn integrate_gl_doubling<F: Fn(f64) -> Result<f64>>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut prev = gauss_legendre(0).try_integrate(a, b, &f)?;
    let mut diff = f64::INFINITY;
    for k in 1..GL_ORDERS.len() {
        let next = gauss_legendre(k).try_integrate(a, b, &f)?;
        diff = (next - prev).abs();
        if diff <= rel_tol * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numeric {
        what: "Gauss-Legendre order doubling".into(),
        achieved: diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_smooth_functions() {
        let v = integrate_adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13, 200).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate_adaptive(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 500).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn gl_rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(5);
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4));
        let exact = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10);
        let w: f64 = gauss_legendre(2).weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gl_doubling_converges() {
        let v = integrate_gl_doubling(|x: f64| Ok(x.exp()), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate_adaptive(|x| x, 1.0, 1.0, 1e-12, 10).unwrap(), 0.0);
    }
}
