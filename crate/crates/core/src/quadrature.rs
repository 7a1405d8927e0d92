//! Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

use crate::error::{Error, Result};

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
/// Gauss weights for the odd-indexed Kronrod nodes and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Largest number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 2000;

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx)? + f(c + dx)?;
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// `∫_a^b f` to absolute tolerance `tol`; `a > b` gives the negated integral.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut parts = vec![(lo, hi, kronrod(&mut f, lo, hi)?)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol.max(1e-15 * total.abs()) {
            return Ok(sign * total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "error estimate {err:e} above {tol:e} after {MAX_INTERVALS} subintervals on [{lo}, {hi}]"
            )));
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("at least one part");
        let (a, b, _) = parts.swap_remove(i);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Err(Error::Quadrature(format!(
                "interval around {m} cannot be subdivided further"
            )));
        }
        parts.push((a, m, kronrod(&mut f, a, m)?));
        parts.push((m, b, kronrod(&mut f, m, b)?));
    }
}
