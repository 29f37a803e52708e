//! Numerical helpers shared by the channel and persuasion modules.

/// 15-point Kronrod nodes on [-1, 1] (non-negative half, descending).
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
/// 7-point Gauss weights, paired with the odd-indexed Kronrod nodes.
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
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, libm::fabs((kronrod - gauss) * h))
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects until each panel's Gauss/Kronrod disagreement falls below its
/// share of `tol`, reaches rounding level relative to the panel value, or the
/// depth limit is hit.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    integrate_rec(&f, a, b, tol, 40)
}

fn integrate_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || err <= 64.0 * f64::EPSILON * libm::fabs(val) || depth == 0 || (b - a) < 1e-14 {
        return val;
    }
    let m = 0.5 * (a + b);
    integrate_rec(f, a, m, 0.5 * tol, depth - 1) + integrate_rec(f, m, b, 0.5 * tol, depth - 1)
}

/// Natural-log entropy of a probability vector; zero entries contribute nothing.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * libm::log(x))
        .sum()
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * libm::log10(lin)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_gaussian_tail() {
        let v = integrate(|x| libm::exp(-x * x), 0.0, 10.0, 1e-12);
        assert!((v - 0.886_226_925_452_758).abs() < 1e-11);
    }

    #[test]
    fn entropy_of_uniform_pair_is_ln2() {
        assert!((entropy(&[0.5, 0.5]) - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn db_round_trip() {
        assert!((linear_to_db(db_to_linear(7.3)) - 7.3).abs() < 1e-12);
    }
}
