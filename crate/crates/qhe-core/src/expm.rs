//! Dense matrix exponential by Padé approximation with scaling and squaring.
//!
//! Follows Higham's degree-13 scheme with the usual lower-degree shortcuts
//! for small norms. The generators handled here are at most a few hundred
//! rows, so the dense algorithm is both exact enough (relative accuracy near
//! machine precision in the spectral norm) and effectively free.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

type CMat = DMatrix<C64>;

// 1-norm thresholds for the Padé degrees 3, 5, 7, 9, 13.
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
    (13, 5.371_920_351_148_152e0),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled_identity(n: usize, c: f64) -> CMat {
    CMat::identity(n, n) * C64::new(c, 0.0)
}

// U = A * (odd-coefficient polynomial in A^2), V = even-coefficient polynomial.
fn pade_uv(a: &CMat, b: &[f64]) -> (CMat, CMat) {
    let n = a.nrows();
    let a2 = a * a;
    let mut even = scaled_identity(n, b[0]);
    let mut odd = scaled_identity(n, b[1]);
    let mut a_pow = CMat::identity(n, n);
    for k in (2..b.len()).step_by(2) {
        a_pow = &a_pow * &a2;
        even += &a_pow * C64::new(b[k], 0.0);
        if k + 1 < b.len() {
            odd += &a_pow * C64::new(b[k + 1], 0.0);
        }
    }
    (a * odd, even)
}

// Degree-13 evaluation splits the polynomial to save multiplications.
fn pade13_uv(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_hi = &a6 * (&a6 * C64::new(b[13], 0.0)
        + &a4 * C64::new(b[11], 0.0)
        + &a2 * C64::new(b[9], 0.0));
    let u_lo = &a6 * C64::new(b[7], 0.0)
        + &a4 * C64::new(b[5], 0.0)
        + &a2 * C64::new(b[3], 0.0)
        + scaled_identity(n, b[1]);
    let u = a * (u_hi + u_lo);
    let v_hi = &a6 * (&a6 * C64::new(b[12], 0.0)
        + &a4 * C64::new(b[10], 0.0)
        + &a2 * C64::new(b[8], 0.0));
    let v = v_hi
        + &a6 * C64::new(b[6], 0.0)
        + &a4 * C64::new(b[4], 0.0)
        + &a2 * C64::new(b[2], 0.0)
        + scaled_identity(n, b[0]);
    (u, v)
}

fn pade_solve(u: CMat, v: CMat) -> CMat {
    let numer = &v + &u;
    let denom = v - u;
    denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is singular; input matrix is not finite")
}

/// exp(A) for a square complex matrix.
pub fn expm(a: &CMat) -> CMat {
    assert_eq!(a.nrows(), a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);
    if norm == 0.0 {
        return CMat::identity(a.nrows(), a.ncols());
    }
    for &(deg, theta) in &THETA[..4] {
        if norm <= theta {
            let (u, v) = match deg {
                3 => pade_uv(a, &B3),
                5 => pade_uv(a, &B5),
                7 => pade_uv(a, &B7),
                _ => pade_uv(a, &B9),
            };
            return pade_solve(u, v);
        }
    }
    let theta13 = THETA[4].1;
    let squarings = ((norm / theta13).log2().ceil()).max(0.0) as u32;
    let scale = C64::new((0.5f64).powi(squarings as i32), 0.0);
    let a_scaled = a * scale;
    let (u, v) = pade13_uv(&a_scaled);
    let mut r = pade_solve(u, v);
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
