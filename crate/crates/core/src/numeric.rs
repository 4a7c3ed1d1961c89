//! Scalar root finding and one-dimensional search.

/// Absolute tolerance on arguments for every bisection in the crate.
pub const ARG_TOLERANCE: f64 = 1e-12;

/// Iteration cap shared by all bisections.
pub const MAX_BISECTIONS: usize = 200;

/// Golden-section termination width.
pub const GOLDEN_TOLERANCE: f64 = 1e-10;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Finds `x` in `[lo, hi]` with `f(x) = target` for a non-decreasing `f`.
///
/// The caller guarantees `f(lo) <= target <= f(hi)`. The bracket is halved
/// until it is narrower than [`ARG_TOLERANCE`], then a final linear
/// interpolation is taken inside it so the residual `f(x) - target` is
/// accurate even where `f` is steep.
pub fn bisect_increasing<F>(f: F, mut lo: f64, mut hi: f64, target: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo) - target;
    let mut f_hi = f(hi) - target;
    if f_lo >= 0.0 {
        return lo;
    }
    if f_hi <= 0.0 {
        return hi;
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= ARG_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid) - target;
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let span = f_hi - f_lo;
    if span > 0.0 && span.is_finite() {
        (lo - f_lo * (hi - lo) / span).clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    }
}

/// Same as [`bisect_increasing`] for a non-increasing `f`.
pub fn bisect_decreasing<F>(f: F, lo: f64, hi: f64, target: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    bisect_increasing(|x| -f(x), lo, hi, -target)
}

/// A located maximum of a scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

impl Maximum {
    /// Larger value wins; equal values keep the smaller argument.
    pub fn better(self, other: Maximum) -> Maximum {
        if other.value > self.value || (other.value == self.value && other.x < self.x) {
            other
        } else {
            self
        }
    }
}

/// Maximises `f` over the closed interval `[lo, hi]`.
///
/// A uniform pre-scan of `scan_points` picks the best bracket, then
/// golden-section search refines inside it to [`GOLDEN_TOLERANCE`]. Both
/// endpoints are always evaluated and compete with the interior result.
pub fn maximize_on_interval<F>(f: F, lo: f64, hi: f64, scan_points: usize) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let mut best = Maximum {
        x: lo,
        value: f(lo),
    };
    if hi <= lo {
        return best;
    }
    best = best.better(Maximum {
        x: hi,
        value: f(hi),
    });

    let n = scan_points.max(2);
    let step = (hi - lo) / n as f64;
    let mut scan_best = (0usize, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = if i == n { hi } else { lo + step * i as f64 };
        let v = f(x);
        if v > scan_best.1 {
            scan_best = (i, v);
        }
    }
    let centre = scan_best.0;
    let a = if centre == 0 {
        lo
    } else {
        lo + step * (centre - 1) as f64
    };
    let b = if centre + 1 >= n {
        hi
    } else {
        lo + step * (centre + 1) as f64
    };
    best = best.better(golden_section_max(&f, a, b));
    best
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub fn golden_section_max<F>(f: &F, mut a: f64, mut b: f64) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while b - a > GOLDEN_TOLERANCE && iterations < MAX_BISECTIONS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let mid = 0.5 * (a + b);
    let candidates = [
        Maximum { x: c, value: fc },
        Maximum { x: d, value: fd },
        Maximum {
            x: mid,
            value: f(mid),
        },
    ];
    candidates
        .into_iter()
        .reduce(|acc, m| if m.value > acc.value { m } else { acc })
        .expect("non-empty")
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

/// Formats a number for human and CSV output: 12 significant digits,
/// plain decimal notation, `inf` for infinities.
pub fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x.is_nan() {
        "nan".into()
    } else {
        let r = round_sig(x, 12);
        if r == 0.0 {
            "0".into()
        } else {
            format!("{r}")
        }
    }
}
