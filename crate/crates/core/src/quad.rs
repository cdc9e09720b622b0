//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used by the tests and the validation oracles; the samplers never call it.

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
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: kron * h,
        err: ((kron - gauss) * h).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("integration bounds"));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![gk15(&mut f, a, b)];
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if !total.is_finite() {
            return Err(Error::NonFinite("integrand"));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::InvalidArgument(format!(
                "quadrature did not converge: error estimate {err:e} on {total:e}"
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(&mut f, p.a, mid));
        panels.push(gk15(&mut f, mid, p.b));
    }
}

/// Integrates `f` over the whole real line, split at `center`.
///
/// Each half-line is mapped to `[0, 1)` by `x = center ± t/(1-t)`; the
/// Kronrod nodes never touch `t = 1`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(mut f: F, center: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut half = |sign: f64| {
        integrate(
            |t| {
                let s = 1.0 - t;
                let y = f(center + sign * t / s);
                if y == 0.0 {
                    0.0
                } else {
                    y / (s * s)
                }
            },
            0.0,
            1.0,
            abs_tol * 0.5,
            rel_tol,
        )
    };
    Ok(half(1.0)? + half(-1.0)?)
}
