//! Bracketed root finding, damped fixed-point iteration and adaptive
//! Gauss-Kronrod quadrature shared by the physics modules.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        /// Last iterate; a single entry for scalar root finding.
        last: Vec<f64>,
    },
    #[error("iteration diverged: residual {residual:e} (initial {initial:e})")]
    Diverged { residual: f64, initial: f64 },
    #[error("quadrature tolerance not met: estimate {estimate} with error {error:e}")]
    ToleranceNotMet { estimate: f64, error: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
}

/// Tolerances and iteration limits for every solver in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Mixing factor of the damped fixed-point update.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_iter: 200,
            damping: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol > 0.0) {
            return Err(NumericsError::InvalidConfig("abs_tol must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(NumericsError::InvalidConfig("rel_tol must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(NumericsError::InvalidConfig("damping must lie in (0, 1]"));
        }
        if self.max_iter == 0 {
            return Err(NumericsError::InvalidConfig("max_iter must be at least 1"));
        }
        Ok(())
    }

    /// Tolerances close to machine precision, for inner solves whose error
    /// must not leak into an outer iteration.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-15,
            max_iter: 300,
            damping: 1.0,
        }
    }
}

/// Brent's method on `[lo, hi]`.
///
/// Stops when `|f(x)| <= abs_tol` or the bracket is narrower than
/// `rel_tol * |x|` (floored at a few ulps). The result always lies inside the
/// initial bracket.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, cfg: &SolverConfig) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() || fa * fb > 0.0 {
        return Err(NumericsError::NoBracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * cfg.rel_tol * b.abs() + f64::MIN_POSITIVE;
        let half = 0.5 * (c - b);
        if fb.abs() <= cfg.abs_tol || half.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, or secant when only two points differ.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * half * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(half) };
        fb = f(b);
        if fb.is_nan() {
            return Err(NumericsError::Diverged {
                residual: fb,
                initial: fa,
            });
        }
    }
    Err(NumericsError::MaxIterExceeded {
        iterations: cfg.max_iter,
        residual: fb.abs(),
        last: vec![b],
    })
}

/// Widens `[lo, hi]` geometrically until `f` changes sign, then calls
/// [`find_root`]. `f` must be monotone for the search to be meaningful.
pub fn find_root_expanding<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: &SolverConfig,
) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(lo < hi) {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..64 {
        if fa * fb <= 0.0 {
            return find_root(f, a, b, cfg);
        }
        let width = b - a;
        if fa.abs() < fb.abs() {
            a -= width;
            fa = f(a);
        } else {
            b += width;
            fb = f(b);
        }
    }
    Err(NumericsError::NoBracket {
        lo: a,
        hi: b,
        f_lo: fa,
        f_hi: fb,
    })
}

/// Outcome of a converged fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped iteration `x <- (1 - damping) x + damping map(x)` until
/// `|map(x) - x|_inf <= abs_tol + rel_tol |x|_inf`.
pub fn fixed_point<F>(mut map: F, init: &[f64], cfg: &SolverConfig) -> Result<FixedPoint, NumericsError>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    try_fixed_point::<_, NumericsError>(|x| Ok(map(x)), init, cfg)
}

/// [`fixed_point`] for maps that can fail. Map errors abort the iteration
/// unchanged; solver failures are converted into `E`.
pub fn try_fixed_point<F, E>(mut map: F, init: &[f64], cfg: &SolverConfig) -> Result<FixedPoint, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    E: From<NumericsError>,
{
    cfg.validate()?;
    if init.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::InvalidConfig("initial iterate must be finite").into());
    }
    let mut x = init.to_vec();
    let mut initial_residual = None;
    let mut residual = f64::INFINITY;
    for iteration in 0..cfg.max_iter {
        let mapped = map(&x)?;
        assert_eq!(mapped.len(), x.len(), "fixed-point map changed dimension");
        residual = mapped
            .iter()
            .zip(&x)
            .fold(0.0_f64, |m, (y, x)| m.max((y - x).abs()));
        let first = *initial_residual.get_or_insert(residual);
        if !residual.is_finite() || residual > 1e6 * first.max(f64::MIN_POSITIVE) {
            return Err(NumericsError::Diverged {
                residual,
                initial: first,
            }
            .into());
        }
        if residual <= cfg.abs_tol + cfg.rel_tol * sup_norm(&x) {
            return Ok(FixedPoint {
                x,
                residual,
                iterations: iteration,
            });
        }
        for (xi, yi) in x.iter_mut().zip(&mapped) {
            *xi += cfg.damping * (yi - *xi);
        }
    }
    Err(NumericsError::MaxIterExceeded {
        iterations: cfg.max_iter,
        residual,
        last: x,
    }
    .into())
}

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with the embedded
// 7-point Gauss rule.
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

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive 7/15 Gauss-Kronrod quadrature.
///
/// `hi` may be `f64::INFINITY`; the tail is mapped onto `[0, 1)` with
/// `x = lo + t / (1 - t)`. `cfg.max_iter` bounds the number of subintervals.
/// On failure the best estimate travels inside
/// [`NumericsError::ToleranceNotMet`].
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, cfg: &SolverConfig) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    if !lo.is_finite() || !(lo < hi) {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }
    if hi.is_infinite() {
        let mut g = |t: f64| {
            let s = 1.0 - t;
            f(lo + t / s) / (s * s)
        };
        return adaptive(&mut g, 0.0, 1.0, cfg);
    }
    adaptive(&mut f, lo, hi, cfg)
}

fn adaptive<F: FnMut(f64) -> f64>(
    f: &mut F,
    lo: f64,
    hi: f64,
    cfg: &SolverConfig,
) -> Result<f64, NumericsError> {
    // (a, b, estimate, error)
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(cfg.max_iter);
    let (est, err) = gauss_kronrod(f, lo, hi);
    pieces.push((lo, hi, est, err));
    let mut total = est;
    let mut total_err = err;
    loop {
        if total_err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok(total);
        }
        if pieces.len() >= cfg.max_iter || !total.is_finite() {
            return Err(NumericsError::ToleranceNotMet {
                estimate: total,
                error: total_err,
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one subinterval");
        let (a, b, e0, r0) = pieces.swap_remove(worst);
        let mid = 0.5 * (a + b);
        let (e1, r1) = gauss_kronrod(f, a, mid);
        let (e2, r2) = gauss_kronrod(f, mid, b);
        pieces.push((a, mid, e1, r1));
        pieces.push((mid, b, e2, r2));
        total += e1 + e2 - e0;
        total_err += r1 + r2 - r0;
        // Re-sum occasionally so cancellation in the running totals stays small.
        if pieces.len() % 64 == 0 {
            total = pieces.iter().map(|p| p.2).sum();
            total_err = pieces.iter().map(|p| p.3).sum();
        }
    }
}

/// Composite Simpson rule on uniformly spaced samples. An even number of
/// samples is handled with a 3/8 rule on the last three intervals.
pub fn simpson_uniform(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * step * (values[0] + values[1]),
        3 => step / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let (simpson_end, tail) = if n % 2 == 1 { (n - 1, 0.0) } else { (n - 4, 3.0 * step / 8.0 * (values[n - 4] + 3.0 * values[n - 3] + 3.0 * values[n - 2] + values[n - 1])) };
            let mut sum = values[0] + values[simpson_end];
            for (i, v) in values.iter().enumerate().take(simpson_end).skip(1) {
                sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            step / 3.0 * sum + tail
        }
    }
}
