//! Root finding used by the pole search: Durand-Kerner for polynomials and
//! a winding-number subdivision search for analytic functions on
//! rectangles.

use num_complex::Complex64;

/// All roots of Σ c_k u^k (c in ascending degree), clustered into
/// (root, multiplicity) pairs. Degrees here are small (≤ 64).
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<(Complex64, u32)> {
    let mut c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    while c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    let degree = c.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = *c.last().unwrap();
    let monic: Vec<Complex64> = c.iter().map(|z| z / lead).collect();

    // Cauchy bound on root magnitude.
    let radius = 1.0
        + monic[..degree]
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);

    // Durand-Kerner from a scrambled circle of starting points.
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / degree as f64 + 0.4;
            Complex64::from_polar(radius * 0.7, angle)
        })
        .collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &ck in monic.iter().rev() {
            acc = acc * z + ck;
        }
        acc
    };
    for _ in 0..600 {
        let mut max_step = 0.0f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius.max(1.0) {
            break;
        }
    }

    // Cluster coincident roots and polish each cluster center with the
    // multiplicity-aware Newton step m·p/p'.
    let dmonic: Vec<Complex64> = monic
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, z)| z * k as f64)
        .collect();
    let deval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &ck in dmonic.iter().rev() {
            acc = acc * z + ck;
        }
        acc
    };
    let mut used = vec![false; degree];
    let mut clusters = Vec::new();
    let cluster_tol = 1e-6 * radius.max(1.0);
    for i in 0..degree {
        if used[i] {
            continue;
        }
        let mut members = vec![roots[i]];
        used[i] = true;
        for j in (i + 1)..degree {
            if !used[j] && (roots[j] - roots[i]).norm() < cluster_tol {
                members.push(roots[j]);
                used[j] = true;
            }
        }
        let m = members.len() as u32;
        let mut center = members.iter().sum::<Complex64>() / members.len() as f64;
        for _ in 0..60 {
            let p = eval(center);
            let dp = deval(center);
            if dp.norm() == 0.0 {
                break;
            }
            let step = m as f64 * p / dp;
            center -= step;
            if step.norm() < 1e-15 * radius.max(1.0) {
                break;
            }
        }
        clusters.push((center, m));
    }
    clusters
}

/// Axis-aligned search rectangle in the complex plane.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.re.1 - self.re.0
    }

    pub fn height(&self) -> f64 {
        self.im.1 - self.im.0
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re.0 + self.re.1),
            0.5 * (self.im.0 + self.im.1),
        )
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re.0 - slack
            && z.re <= self.re.1 + slack
            && z.im >= self.im.0 - slack
            && z.im <= self.im.1 + slack
    }

    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re.0, self.im.0),
            Complex64::new(self.re.1, self.im.0),
            Complex64::new(self.re.1, self.im.1),
            Complex64::new(self.re.0, self.im.1),
        ]
    }
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}, {}] x [{}i, {}i]",
            self.re.0, self.re.1, self.im.0, self.im.1
        )
    }
}

#[derive(Debug)]
pub enum WindingError {
    /// |f| dropped below the floor at a boundary sample: a zero (or pole)
    /// sits on or very near the contour.
    ZeroOnContour(Complex64),
    /// Argument tracking failed to stabilize.
    Unresolved,
}

/// Number of zeros (with multiplicity) of an analytic `f` inside the
/// rectangle, by tracking the continuous argument of f along the boundary.
/// Segments are refined until each step turns by less than π/2.
pub fn winding_number<F>(f: &F, rect: Rect, floor: f64) -> Result<i64, WindingError>
where
    F: Fn(Complex64) -> Complex64,
{
    let corners = rect.corners();
    let mut total = 0.0;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        total += edge_argument_change(f, a, b, floor, 0)?;
    }
    let turns = total / (2.0 * std::f64::consts::PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.25 {
        return Err(WindingError::Unresolved);
    }
    Ok(rounded as i64)
}

fn edge_argument_change<F>(
    f: &F,
    a: Complex64,
    b: Complex64,
    floor: f64,
    depth: u32,
) -> Result<f64, WindingError>
where
    F: Fn(Complex64) -> Complex64,
{
    let fa = f(a);
    let fb = f(b);
    if fa.norm() < floor {
        return Err(WindingError::ZeroOnContour(a));
    }
    if fb.norm() < floor {
        return Err(WindingError::ZeroOnContour(b));
    }
    let delta = (fb / fa).arg();
    // The minimum depth keeps samples dense enough that a full turn between
    // samples (which aliases to a small Δarg) cannot hide near a zero.
    if delta.abs() < std::f64::consts::FRAC_PI_2 && depth >= 6 {
        return Ok(delta);
    }
    if depth >= 48 {
        return Err(WindingError::Unresolved);
    }
    let mid = 0.5 * (a + b);
    Ok(edge_argument_change(f, a, mid, floor, depth + 1)?
        + edge_argument_change(f, mid, b, floor, depth + 1)?)
}

#[derive(Debug)]
pub enum SearchError {
    /// Newton refinement failed inside the named rectangle.
    NewtonFailed(Rect),
    /// Winding numbers would not stabilize in the named rectangle.
    CountFailed(Rect),
}

impl std::fmt::Display for SearchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SearchError::NewtonFailed(r) => write!(f, "Newton refinement failed in {r}"),
            SearchError::CountFailed(r) => write!(f, "zero count failed in {r}"),
        }
    }
}

/// Find all zeros of `f` (derivative `df`) in the rectangle by recursive
/// bisection on winding counts, then Newton. Returns (zero, multiplicity)
/// pairs. Contours passing too close to a zero are nudged outward; `notes`
/// records such adjustments.
pub fn zeros_in_rect<F, G>(
    f: &F,
    df: &G,
    rect: Rect,
    notes: &mut Vec<String>,
) -> Result<Vec<(Complex64, u32)>, SearchError>
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    let floor = 1e-13;
    let mut found: Vec<(Complex64, u32)> = Vec::new();
    let mut root_count: Option<i64> = None;
    let mut stack = vec![rect];
    while let Some(mut r) = stack.pop() {
        // Retry the count with slightly inflated rectangles if a zero sits
        // on the contour.
        let mut count = None;
        for attempt in 0..6 {
            match winding_number(f, r, floor) {
                Ok(c) => {
                    count = Some(c);
                    break;
                }
                Err(WindingError::ZeroOnContour(at)) => {
                    let pad = 1e-6 * (1.0 + r.width().max(r.height())) * (attempt + 1) as f64;
                    notes.push(format!(
                        "contour near zero at {:.6}+{:.6}i; inflating {} by {:.1e}",
                        at.re, at.im, r, pad
                    ));
                    r = Rect {
                        re: (r.re.0 - pad, r.re.1 + pad),
                        im: (r.im.0 - pad, r.im.1 + pad),
                    };
                }
                Err(WindingError::Unresolved) => return Err(SearchError::CountFailed(r)),
            }
        }
        let count = count.ok_or(SearchError::CountFailed(r))? as u32;
        if root_count.is_none() {
            root_count = Some(count as i64);
        }
        if count == 0 {
            continue;
        }
        let tiny = r.width().max(r.height()) < 1e-5;
        if count == 1 || tiny {
            // A tiny box with count m holds one zero of multiplicity m;
            // refine with Newton on the multiplicity-corrected step.
            match newton_refine(f, df, r, count) {
                Some(z) => {
                    // Skip duplicates re-found through inflated contours.
                    if found.iter().any(|(w, _)| (w - z).norm() < 1e-7) {
                        continue;
                    }
                    found.push((z, count));
                    continue;
                }
                None if tiny => return Err(SearchError::NewtonFailed(r)),
                // Newton escaped the box; bisect until the zero pins down.
                None => {}
            }
        }
        // Split along the longer side.
        let (lo, hi) = if r.width() > r.height() {
            let mid = 0.5 * (r.re.0 + r.re.1);
            (
                Rect {
                    re: (r.re.0, mid),
                    im: r.im,
                },
                Rect {
                    re: (mid, r.re.1),
                    im: r.im,
                },
            )
        } else {
            let mid = 0.5 * (r.im.0 + r.im.1);
            (
                Rect {
                    re: r.re,
                    im: (r.im.0, mid),
                },
                Rect {
                    re: r.re,
                    im: (mid, r.im.1),
                },
            )
        };
        stack.push(lo);
        stack.push(hi);
    }
    // Every zero the outer contour counted must be accounted for (contour
    // inflation can legitimately add a boundary-adjacent zero, never lose
    // one).
    let total: i64 = found.iter().map(|&(_, m)| m as i64).sum();
    if total < root_count.unwrap_or(0) {
        return Err(SearchError::CountFailed(rect));
    }
    Ok(found)
}

fn newton_refine<F, G>(f: &F, df: &G, rect: Rect, multiplicity: u32) -> Option<Complex64>
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    let starts = [
        rect.center(),
        rect.center() + Complex64::new(0.23 * rect.width(), 0.11 * rect.height()),
        rect.center() - Complex64::new(0.17 * rect.width(), 0.29 * rect.height()),
    ];
    for start in starts {
        let mut z = start;
        for _ in 0..100 {
            let fz = f(z);
            let dz = df(z);
            if fz.norm() == 0.0 || dz.norm() == 0.0 {
                break;
            }
            let step = multiplicity as f64 * fz / dz;
            z -= step;
            if step.norm() < 1e-13 * (1.0 + z.norm()) {
                break;
            }
        }
        // Accept on residual: a multiple root zeroes f' as well, so a small
        // final step cannot be required. The slack stays well below the
        // exclusion gap around the real axis so Newton cannot smuggle in a
        // zero from just outside the box.
        let slack = 1e-9 + 1e-6 * rect.width().min(rect.height());
        if rect.contains(z, slack) && f(z).norm() < 1e-9 {
            return Some(z);
        }
    }
    None
}
