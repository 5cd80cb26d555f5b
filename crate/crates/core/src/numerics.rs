//! Small numerical kernels shared across the crate: adaptive Gauss-Kronrod
//! quadrature, compensated summation, and an adaptive Dormand-Prince
//! integrator for scalar ODEs.

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
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive 7/15-point Gauss-Kronrod quadrature of `f` over `[a, b]` to
/// absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth >= 48 || (b - a).abs() < 1e-14 {
            return val;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(&f, a, b, tol, 0)
}

/// Neumaier-compensated running sum. Summation order is the caller's order,
/// so results are reproducible bit-for-bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

/// Integrates the scalar autonomous ODE `y' = f(y)` from `t = 0` to `t_end`
/// with the Dormand-Prince 5(4) pair and relative/absolute tolerance `tol`.
pub fn dopri5<F: Fn(f64) -> f64>(f: F, y0: f64, t_end: f64, tol: f64) -> f64 {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    if t_end <= 0.0 {
        return y0;
    }
    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end / 100.0).min(0.01);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = [0.0; 7];
        for i in 0..7 {
            let mut yi = y;
            for j in 0..i {
                yi += h * A[i][j] * k[j];
            }
            k[i] = f(yi);
        }
        let mut y5 = y;
        let mut y4 = y;
        for i in 0..7 {
            y5 += h * B5[i] * k[i];
            y4 += h * B4[i] * k[i];
        }
        let scale = tol * (1.0 + y.abs().max(y5.abs()));
        let err = (y5 - y4).abs() / scale;
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    y
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let v = integrate(|x| x.cos(), 0.0, 1.0, 1e-14);
        assert!((v - 1f64.sin()).abs() < 1e-14);
        let v = integrate(|x| (-x * x).exp(), -6.0, 6.0, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dopri_matches_exponential() {
        let y = dopri5(|y| -0.5 * y, 2.0, 3.0, 1e-12);
        assert!((y - 2.0 * (-1.5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = compensated_sum([1e16, 1.0, -1e16, 1.0]);
        assert_eq!(v, 2.0);
    }

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        assert!((ls_slope(&xs, &ys) + 2.0).abs() < 1e-14);
    }
}
