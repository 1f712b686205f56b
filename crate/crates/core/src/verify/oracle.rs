//! Closed-form and quadrature oracles for reflected Brownian motion.

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = kronrod(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    let (scale, _) = kronrod(&f, a, b);
    rec(&f, a, b, rel_tol * scale.abs().max(1e-300), 40)
}

/// `E|x + sigma W_s|` and the mean local time `E|x + sigma W_s| - x` of
/// Brownian motion reflected at 0, from Gaussian quadrature.
pub fn reflected_bm_oracle(x: f64, s: f64, sigma: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0) || !(s > 0.0) || !(sigma > 0.0) || !(x + s + sigma).is_finite() {
        return Err(Error::InvalidInput(format!(
            "oracle needs x >= 0, s > 0, sigma > 0; got x={x}, s={s}, sigma={sigma}"
        )));
    }
    let scale = sigma * s.sqrt();
    let z0 = -x / scale;
    let f = |z: f64| (x + scale * z).abs() * INV_SQRT_2PI * (-0.5 * z * z).exp();
    const CUT: f64 = 12.0;
    let lo = -CUT;
    let hi = CUT;
    let mean = if z0 > lo {
        integrate(f, lo, z0, 1e-13) + integrate(f, z0, hi, 1e-13)
    } else {
        // The kink lies beyond the Gaussian tail: |x + scale z| = x + scale z.
        x
    };
    Ok((mean, (mean - x).max(0.0)))
}

/// Mean local time of the reflected motion over `[0, s]` started at `x`.
pub fn mean_local_time(x: f64, s: f64, sigma: f64) -> Result<f64> {
    reflected_bm_oracle(x, s, sigma).map(|(_, l)| l)
}
