//! Gauss-Hermite rules for standard-normal expectations and an adaptive
//! Gauss-Kronrod integrator for finite intervals.

use crate::error::{Error, Result};

/// Relative tolerance between a rule and its refinement.
pub const REFINEMENT_TOL: f64 = 1e-8;
pub const DEFAULT_NODES: usize = 96;
pub const MIN_NODES: usize = 16;

/// Gauss-Hermite rule rescaled so that `Σ wᵢ f(zᵢ) ≈ E[f(Z)]`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussQuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussQuadRule {
    pub fn gauss_hermite(count: usize) -> Result<Self> {
        if count < MIN_NODES {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least {MIN_NODES} nodes, got {count}"
            )));
        }
        let (x, w) = hermite_physicists(count)?;
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let nodes = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
        let weights = w.iter().map(|v| v / sqrt_pi).collect();
        Ok(Self { nodes, weights })
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Rule with twice as many nodes.
    pub fn refined(&self) -> Result<Self> {
        Self::gauss_hermite(2 * self.count())
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// [`expect`](Self::expect), confirmed against the refined rule.
    pub fn expect_checked<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let coarse = self.expect(&f);
        let fine = self.refined()?.expect(&f);
        let rel_diff = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
        if rel_diff > REFINEMENT_TOL && (coarse - fine).abs() > 1e-300 {
            return Err(Error::Quadrature {
                coarse,
                fine,
                rel_diff,
            });
        }
        Ok(fine)
    }
}

/// Nodes and weights for weight `exp(-x²)` by Newton iteration on the
/// orthonormal Hermite recurrence.
fn hermite_physicists(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "Hermite root {i} of {n} did not converge"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    Ok((x, w))
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_745_027_500,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights at XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

const MAX_INTERVALS: usize = 400;

/// Adaptive Gauss-Kronrod (G10/K21) integral of `f` over `[a, b]`.
/// Subdivides the interval with the largest error estimate until the total
/// estimate drops below `rel_tol · |I|` (or an absolute floor).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut parts = vec![(a, b, gk21(&f, a, b))];
    loop {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= rel_tol * total.abs() || err <= 1e-300 {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature on [{a}, {b}] stalled at error {err:e} for value {total:e}"
            )));
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk21(&f, lo, mid)));
        parts.push((mid, hi, gk21(&f, mid, hi)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rule_is_normalized() {
        for n in [16, 96, 192] {
            let r = GaussQuadRule::gauss_hermite(n).unwrap();
            assert_eq!(r.count(), n);
            assert!(r.weights().iter().all(|&w| w > 0.0));
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(r.nodes().windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn normal_moments() {
        let r = GaussQuadRule::gauss_hermite(96).unwrap();
        assert!(r.expect(|z| z).abs() < 1e-13);
        assert_relative_eq!(r.expect(|z| z * z), 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.expect(|z| z.powi(4)), 3.0, max_relative = 1e-12);
        assert_relative_eq!(r.expect(|z| z.powi(8)), 105.0, max_relative = 1e-11);
        for s in [0.5, 1.0, 2.0] {
            let v = r.expect_checked(|z| (s * z).exp()).unwrap();
            assert_relative_eq!(v, (s * s / 2.0).exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn too_few_nodes() {
        assert!(GaussQuadRule::gauss_hermite(8).is_err());
    }

    #[test]
    fn kronrod_weights() {
        let k: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-14);
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_integrals() {
        let v = integrate(|x| x.powi(5), 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(v, 64.0 / 6.0, max_relative = 1e-14);
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-11);
        let v = integrate(|x: f64| (-x * x / 2.0).exp(), -10.0, 10.0, 1e-14).unwrap();
        assert_relative_eq!(v, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-13);
    }
}
