//! Scan-and-bisect root finder for smooth scalar functions with known first
//! and second derivatives.
//!
//! Each subinterval is classified by the signs of g, g', g''. A sign change of
//! g'' means g' may vanish twice, so the cell is split 4 ways (up to
//! `max_refine` levels). A sign change of g' without one of g brackets an
//! extremum; bisecting g' and checking g there recovers close root pairs that
//! a plain sign scan would miss.

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub subintervals: usize,
    pub tol: f64,
    pub max_refine: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { subintervals: 20_000, tol: 1e-12, max_refine: 3 }
    }
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol || mid == a || mid == b {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn sign_change(x: f64, y: f64) -> bool {
    (x < 0.0 && y > 0.0) || (x > 0.0 && y < 0.0)
}

pub(crate) fn scan_roots<F>(f: F, lo: f64, hi: f64, opts: &ScanOptions) -> Vec<f64>
where
    F: Fn(f64) -> [f64; 3],
{
    let mut roots = Vec::new();
    if !(hi > lo) {
        if f(lo)[0] == 0.0 {
            roots.push(lo);
        }
        return roots;
    }
    let n = opts.subintervals.max(1);
    let step = (hi - lo) / n as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n {
        let b = if i == n { hi } else { lo + step * i as f64 };
        let fb = f(b);
        process(&f, a, fa, b, fb, 0, opts, &mut roots);
        a = b;
        fa = fb;
    }
    if fa[0] == 0.0 {
        roots.push(hi);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 10.0 * opts.tol.max(f64::EPSILON * y.abs()));
    roots
}

#[allow(clippy::too_many_arguments)]
fn process<F>(f: &F, a: f64, fa: [f64; 3], b: f64, fb: [f64; 3], depth: u32, opts: &ScanOptions, roots: &mut Vec<f64>)
where
    F: Fn(f64) -> [f64; 3],
{
    if fa[0] == 0.0 {
        roots.push(a);
    }
    let curvature_flips = sign_change(fa[2], fb[2]);
    let slope_flips = sign_change(fa[1], fb[1]);
    let value_flips = sign_change(fa[0], fb[0]);
    if depth < opts.max_refine && (curvature_flips || (value_flips && slope_flips)) {
        let h = (b - a) / 4.0;
        let mut xa = a;
        let mut va = fa;
        for i in 1..=4 {
            let xb = if i == 4 { b } else { a + h * i as f64 };
            let vb = if i == 4 { fb } else { f(xb) };
            process(f, xa, va, xb, vb, depth + 1, opts, roots);
            xa = xb;
            va = vb;
        }
        return;
    }
    if value_flips {
        roots.push(bisect(|x| f(x)[0], a, b, opts.tol));
    } else if slope_flips && fa[0] != 0.0 && fb[0] != 0.0 {
        let x = bisect(|x| f(x)[1], a, b, opts.tol);
        let gx = f(x)[0];
        if gx == 0.0 {
            roots.push(x);
        } else if sign_change(gx, fa[0]) {
            roots.push(bisect(|x| f(x)[0], a, x, opts.tol));
            roots.push(bisect(|x| f(x)[0], x, b, opts.tol));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots() {
        let f = |x: f64| [(x - 1.0) * (x + 2.0) * (x - 3.0), 3.0 * x * x - 4.0 * x - 5.0, 6.0 * x - 4.0];
        let r = scan_roots(f, -10.0, 10.0, &ScanOptions { subintervals: 7, ..Default::default() });
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((x - e).abs() < 1e-11);
        }
    }

    #[test]
    fn close_pair_inside_one_cell() {
        // roots at 0.5 +- 1e-4, far below the scan spacing
        let d = 1e-4;
        let f = |x: f64| [(x - 0.5).powi(2) - d * d, 2.0 * (x - 0.5), 2.0];
        let r = scan_roots(f, -3.0, 3.0, &ScanOptions { subintervals: 3, ..Default::default() });
        assert_eq!(r.len(), 2);
        assert!((r[0] - (0.5 - d)).abs() < 1e-11);
        assert!((r[1] - (0.5 + d)).abs() < 1e-11);
    }
}
