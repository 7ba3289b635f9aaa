//! Small derivative-free optimisers on the probability simplex.

/// All points of the `k`-simplex whose coordinates are multiples of `1/m`.
pub(crate) fn simplex_grid(k: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i);
            rec(k - 1, left - i, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, m, m, &mut Vec::new(), &mut out);
    out
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

pub(crate) struct NmOptions {
    pub step: f64,
    pub ftol: f64,
    pub xtol: f64,
    pub max_evals: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self { step: 0.05, ftol: 1e-13, xtol: 1e-10, max_evals: 2000 }
    }
}

/// Nelder-Mead minimisation of `f` over the simplex, with iterates projected
/// back onto the simplex. Returns the best point and value.
pub(crate) fn nelder_mead_simplex(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &NmOptions) -> (Vec<f64>, f64) {
    nm_core(
        |x: &[f64]| {
            let p = project_simplex(x);
            let v = f(&p);
            (p, v)
        },
        x0,
        opts,
    )
}

/// Unconstrained Nelder-Mead minimisation.
pub(crate) fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &NmOptions) -> (Vec<f64>, f64) {
    nm_core(|x: &[f64]| (x.to_vec(), f(x)), x0, opts)
}

fn nm_core(eval: impl Fn(&[f64]) -> (Vec<f64>, f64), x0: &[f64], opts: &NmOptions) -> (Vec<f64>, f64) {
    let k = x0.len();
    let eval = |x: &[f64]| {
        let (p, v) = eval(x);
        (p, if v.is_nan() { f64::INFINITY } else { v })
    };
    let (p0, v0) = eval(x0);
    if k < 2 {
        return (p0, v0);
    }
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(p0.clone(), v0)];
    for i in 0..k {
        let mut x = p0.clone();
        x[i] += if x[i] + opts.step <= 1.0 { opts.step } else { -opts.step };
        pts.push(eval(&x));
    }
    let mut evals = k + 1;
    while evals < opts.max_evals {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = pts[k].1 - pts[0].1;
        let diam = pts.iter().skip(1).map(|(x, _)| max_dist(x, &pts[0].0)).fold(0.0, f64::max);
        if (spread <= opts.ftol && diam <= opts.xtol) || diam <= 1e-14 {
            break;
        }
        let centroid: Vec<f64> = (0..k).map(|j| pts[..k].iter().map(|(x, _)| x[j]).sum::<f64>() / k as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..k).map(|j| centroid[j] + t * (pts[k].0[j] - centroid[j])).collect() };
        let refl = eval(&along(-1.0));
        evals += 1;
        if refl.1 < pts[0].1 {
            let exp = eval(&along(-2.0));
            evals += 1;
            pts[k] = if exp.1 < refl.1 { exp } else { refl };
        } else if refl.1 < pts[k - 1].1 {
            pts[k] = refl;
        } else {
            let con = if refl.1 < pts[k].1 { eval(&along(-0.5)) } else { eval(&along(0.5)) };
            evals += 1;
            if con.1 < pts[k].1.min(refl.1) {
                pts[k] = con;
            } else {
                let best = pts[0].0.clone();
                for pt in pts.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&pt.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    *pt = eval(&x);
                }
                evals += k;
            }
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    pts.swap_remove(0)
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid(2, 100).len(), 101);
        assert_eq!(simplex_grid(3, 10).len(), 66);
        assert!(simplex_grid(3, 10).iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn projection() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn nelder_mead_finds_interior_minimum() {
        let target = [0.2, 0.3, 0.5];
        let f = |p: &[f64]| p.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let (x, v) = nelder_mead_simplex(f, &[1.0 / 3.0; 3], &NmOptions::default());
        assert!(v < 1e-12, "{x:?}");
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, v) = nelder_mead(f, &[-1.0, 1.0], &NmOptions { step: 0.5, max_evals: 5000, ..NmOptions::default() });
        assert!(v < 1e-10, "{x:?}");
    }

    #[test]
    fn golden_section() {
        let (x, v) = golden_max(|t| -(t - 0.3) * (t - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8 && v.abs() < 1e-15);
    }
}
