//! The scaling ζ-function ζ(s) = 1/(1 − Σ r_j^s): evaluation with
//! compensated summation, the similarity dimension, lattice detection, and
//! enumeration of the complex-dimension pole set with residues.

mod roots;

pub use roots::Rect;

use num_complex::Complex64;
use thiserror::Error;

use roots::{polynomial_roots, winding_number, zeros_in_rect, SearchError};

#[derive(Debug, Clone, Error)]
pub enum SpectrumError {
    #[error("need at least 2 scaling ratios, got {0}")]
    TooFewRatios(usize),
    #[error("ratio {0} outside (0, 1)")]
    RatioOutOfRange(f64),
    #[error("evaluation too close to a pole: |denominator| = {denominator:e}")]
    PoleProximity { denominator: f64 },
    #[error("zero search failed: {0}")]
    SearchFailed(String),
    #[error("strip [{lo}, {hi}] must contain the similarity dimension {dim}")]
    StripExcludesDimension { lo: f64, hi: f64, dim: f64 },
    #[error("window T = {0} must be positive")]
    BadWindow(f64),
}

/// Minimum |1 − Σ r_j^s| accepted before evaluation reports pole proximity.
pub const POLE_PROXIMITY_FLOOR: f64 = 1e-14;

/// The scaling ζ-function of a ratio list.
#[derive(Debug, Clone)]
pub struct ScalingZeta {
    ratios: Vec<f64>,
    log_ratios: Vec<f64>,
}

impl ScalingZeta {
    pub fn new(ratios: Vec<f64>) -> Result<Self, SpectrumError> {
        if ratios.len() < 2 {
            return Err(SpectrumError::TooFewRatios(ratios.len()));
        }
        for &r in &ratios {
            if !(r > 0.0 && r < 1.0) || !r.is_finite() {
                return Err(SpectrumError::RatioOutOfRange(r));
            }
        }
        let log_ratios = ratios.iter().map(|r| r.ln()).collect();
        Ok(ScalingZeta { ratios, log_ratios })
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// 1 − Σ r_j^s, the denominator, with compensated summation: the terms
    /// cancel almost exactly near a zero.
    pub fn denominator(&self, s: Complex64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for &lr in &self.log_ratios {
            let term = (s * lr).exp();
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        Complex64::new(1.0, 0.0) - sum
    }

    /// d/ds of the denominator: Σ r_j^s · log(1/r_j).
    pub fn denominator_derivative(&self, s: Complex64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for &lr in &self.log_ratios {
            sum += (s * lr).exp() * (-lr);
        }
        sum
    }

    /// ζ(s) on the meromorphic continuation; errors within the pole
    /// proximity floor.
    pub fn eval(&self, s: Complex64) -> Result<Complex64, SpectrumError> {
        let denom = self.denominator(s);
        if denom.norm() <= POLE_PROXIMITY_FLOOR {
            return Err(SpectrumError::PoleProximity {
                denominator: denom.norm(),
            });
        }
        Ok(denom.inv())
    }

    /// The unique real root of 1 − Σ r_j^s = 0, found by bracketed bisection
    /// followed by Newton; the denominator is strictly increasing in real s.
    pub fn similarity_dimension(&self) -> f64 {
        let f = |s: f64| -> f64 {
            1.0 - self
                .ratios
                .iter()
                .map(|r| r.powf(s))
                .sum::<f64>()
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        while f(hi) <= 0.0 {
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..8 {
            let val = f(s);
            let deriv: f64 = self
                .ratios
                .iter()
                .zip(&self.log_ratios)
                .map(|(r, lr)| r.powf(s) * (-lr))
                .sum();
            let step = val / deriv;
            s -= step;
            if step.abs() < 1e-16 * s.abs().max(1.0) {
                break;
            }
        }
        debug_assert!(f(s).abs() <= 1e-14);
        s
    }

    /// Detect a lattice structure: a base r with every ratio an integer
    /// power r^{k_j}. The exponent ratios log r_j / log r_1 must be rational
    /// with denominator at most 64, tested by continued fractions at `tol`.
    pub fn lattice_detect(&self, tol: f64) -> Option<LatticeStructure> {
        const MAX_DEN: u64 = 64;
        let l1 = self.log_ratios[0];
        let mut nums = vec![1u64];
        let mut dens = vec![1u64];
        for &lj in &self.log_ratios[1..] {
            let q = lj / l1;
            let (num, den) = rational_approx(q, MAX_DEN)?;
            if (q - num as f64 / den as f64).abs() > tol * q.abs().max(1.0) {
                return None;
            }
            nums.push(num);
            dens.push(den);
        }
        // log r = l1 / lcm(dens); exponents k_j = q_j · lcm.
        let lcm_all = dens.iter().copied().fold(1u64, lcm);
        let mut exponents: Vec<u64> = nums
            .iter()
            .zip(&dens)
            .map(|(&n, &d)| n * (lcm_all / d))
            .collect();
        let gcd_all = exponents.iter().copied().fold(0u64, gcd).max(1);
        for e in &mut exponents {
            *e /= gcd_all;
        }
        let log_base = l1 * gcd_all as f64 / lcm_all as f64;

        // Least-squares fit of log r against the integer exponents, then
        // verify every ratio reproduces within tol.
        let num: f64 = exponents
            .iter()
            .zip(&self.log_ratios)
            .map(|(&k, &l)| k as f64 * l)
            .sum();
        let den: f64 = exponents.iter().map(|&k| (k * k) as f64).sum();
        let log_base = if den > 0.0 { num / den } else { log_base };
        for (&k, &r) in exponents.iter().zip(&self.ratios) {
            if ((k as f64 * log_base).exp() - r).abs() > tol * r.max(1e-300) {
                return None;
            }
        }
        let base = log_base.exp();
        let mut multiplicities: Vec<(u64, u64)> = Vec::new();
        let mut sorted = exponents.clone();
        sorted.sort_unstable();
        for k in sorted {
            match multiplicities.last_mut() {
                Some((e, m)) if *e == k => *m += 1,
                _ => multiplicities.push((k, 1)),
            }
        }
        Some(LatticeStructure {
            base,
            exponents,
            multiplicities,
            period: 2.0 * std::f64::consts::PI / (1.0 / base).ln(),
        })
    }

    /// Enumerate the complex-dimension poles inside the strip with
    /// |Im s| ≤ window, with ζ-residues and orders.
    ///
    /// Lattice systems reduce to polynomial roots in u = r^s mapped back
    /// through the period lattice; other systems run a winding-number
    /// subdivision search with Newton polishing.
    pub fn complex_dimensions(
        &self,
        window: f64,
        strip: (f64, f64),
    ) -> Result<DimensionSet, SpectrumError> {
        if !(window > 0.0) || !window.is_finite() {
            return Err(SpectrumError::BadWindow(window));
        }
        let dim = self.similarity_dimension();
        let (lo, hi) = strip;
        if !(lo < dim && dim < hi) {
            return Err(SpectrumError::StripExcludesDimension { lo, hi, dim });
        }
        let lattice = self.lattice_detect(1e-9);
        let mut notes = Vec::new();
        let mut poles = match &lattice {
            Some(lat) => self.lattice_poles(lat, window, strip),
            None => self.searched_poles(window, strip, &mut notes)?,
        };
        poles.sort_by(|a, b| {
            (a.omega.im, a.omega.re)
                .partial_cmp(&(b.omega.im, b.omega.re))
                .unwrap()
        });
        let set = DimensionSet {
            dimension: dim,
            lattice,
            poles,
            window,
            strip,
            notes,
        };
        debug_assert!(set.check_invariants(self).is_ok());
        Ok(set)
    }

    fn lattice_poles(
        &self,
        lat: &LatticeStructure,
        window: f64,
        strip: (f64, f64),
    ) -> Vec<PoleEntry> {
        // Denominator as a polynomial in u = base^s: 1 − Σ m_k u^k.
        let max_k = lat.multiplicities.last().map(|&(k, _)| k).unwrap_or(0) as usize;
        let mut coeffs = vec![0.0; max_k + 1];
        coeffs[0] = 1.0;
        for &(k, m) in &lat.multiplicities {
            coeffs[k as usize] -= m as f64;
        }
        let log_base = lat.base.ln();
        let mut poles = Vec::new();
        let slack = 1e-9;
        for (u, order) in polynomial_roots(&coeffs) {
            if u.norm() == 0.0 {
                continue;
            }
            let re = u.norm().ln() / log_base;
            if re < strip.0 - slack || re > strip.1 + slack {
                continue;
            }
            // Pole ladder s = (ln u + 2πik)/ln base for all integers k.
            let base_im = u.arg() / log_base;
            let spacing = 2.0 * std::f64::consts::PI / log_base; // negative
            let bound = window * (1.0 + 1e-12) + 1e-9;
            let k_lo = ((-bound - base_im) / spacing).floor();
            let k_hi = ((bound - base_im) / spacing).ceil();
            let (k_lo, k_hi) = (k_lo.min(k_hi) as i64, k_lo.max(k_hi) as i64);
            for k in k_lo..=k_hi {
                let im = base_im + spacing * k as f64;
                if im.abs() > bound {
                    continue;
                }
                let omega = Complex64::new(re, im);
                poles.push(self.make_pole(omega, order));
            }
        }
        poles
    }

    fn searched_poles(
        &self,
        window: f64,
        strip: (f64, f64),
        notes: &mut Vec<String>,
    ) -> Result<Vec<PoleEntry>, SpectrumError> {
        let f = |s: Complex64| self.denominator(s);
        let df = |s: Complex64| self.denominator_derivative(s);
        // The real axis carries exactly one zero (the denominator is
        // strictly increasing there): the similarity dimension.
        let mut poles = vec![self.make_pole(Complex64::new(self.similarity_dimension(), 0.0), 1)];
        // Upper half; conjugates are mirrored afterwards. The gap keeps the
        // contour (and the Newton acceptance slack) clear of the real-axis
        // zero; vertical pole spacing is far larger at desk scale.
        let gap = 1e-3;
        let upper = Rect {
            re: strip,
            im: (gap, window),
        };
        let zeros = zeros_in_rect(&f, &df, upper, notes)
            .map_err(|e: SearchError| SpectrumError::SearchFailed(e.to_string()))?;
        for (z, order) in zeros {
            if z.im <= gap || z.im > window * (1.0 + 1e-12) + 1e-9 {
                continue;
            }
            poles.push(self.make_pole(z, order));
            poles.push(self.make_pole(z.conj(), order));
        }
        // Count zeros strictly right of the dimension as a residence check;
        // there are none for a denominator of this form.
        let dim = self.similarity_dimension();
        if strip.1 > dim + 1e-6 {
            let right = Rect {
                re: (dim + 1e-6, strip.1),
                im: (-window, window),
            };
            if let Ok(c) = winding_number(&f, right, 1e-13) {
                if c != 0 {
                    notes.push(format!("unexpected zero count {c} right of the dimension"));
                }
            }
        }
        Ok(poles)
    }

    fn make_pole(&self, omega: Complex64, order: u32) -> PoleEntry {
        let zeta_residue = if order == 1 {
            Some(self.denominator_derivative(omega).inv())
        } else {
            None
        };
        PoleEntry {
            omega,
            zeta_residue,
            order,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Best rational approximation p/q to x with q ≤ max_den, by continued
/// fractions. Returns None for non-positive x (ratios of logs of numbers in
/// (0,1) are positive).
fn rational_approx(x: f64, max_den: u64) -> Option<(u64, u64)> {
    if !(x > 0.0) || !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, x.floor() as u64, 1u64);
    let mut frac = x - x.floor();
    for _ in 0..40 {
        if frac.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    if q1 == 0 {
        None
    } else {
        Some((p1, q1))
    }
}

/// Lattice structure of a ratio list: the common base, per-map integer
/// exponents, exponent multiplicities, and the vertical period of the pole
/// lattice.
#[derive(Debug, Clone)]
pub struct LatticeStructure {
    pub base: f64,
    pub exponents: Vec<u64>,
    /// (exponent, count), sorted by exponent.
    pub multiplicities: Vec<(u64, u64)>,
    /// 2π / log(1/base).
    pub period: f64,
}

/// A pole of ζ.
#[derive(Debug, Clone, Copy)]
pub struct PoleEntry {
    pub omega: Complex64,
    /// res(ζ; ω) = 1/(Σ r_j^ω log(1/r_j)) for simple poles; None for
    /// higher order, which the closed-form residue paths refuse.
    pub zeta_residue: Option<Complex64>,
    pub order: u32,
}

/// The similarity dimension, lattice data, and the poles found inside a
/// finite window and strip.
#[derive(Debug, Clone)]
pub struct DimensionSet {
    dimension: f64,
    lattice: Option<LatticeStructure>,
    poles: Vec<PoleEntry>,
    window: f64,
    strip: (f64, f64),
    notes: Vec<String>,
}

impl DimensionSet {
    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    pub fn lattice(&self) -> Option<&LatticeStructure> {
        self.lattice.as_ref()
    }

    /// Poles sorted by (Im, Re).
    pub fn poles(&self) -> &[PoleEntry] {
        &self.poles
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn strip(&self) -> (f64, f64) {
        self.strip
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Conjugate closure and per-pole residual checks.
    pub fn check_invariants(&self, zeta: &ScalingZeta) -> Result<(), String> {
        for p in &self.poles {
            let denom = zeta.denominator(p.omega).norm();
            if denom > 1e-9 {
                return Err(format!(
                    "pole {} has |denominator| {denom:e}",
                    p.omega
                ));
            }
            if p.omega.im.abs() > 1e-12 {
                let mate = self
                    .poles
                    .iter()
                    .find(|q| (q.omega - p.omega.conj()).norm() < 1e-9);
                if mate.is_none() {
                    return Err(format!("pole {} lacks a conjugate mate", p.omega));
                }
            }
        }
        Ok(())
    }

    /// CSV export: re_omega, im_omega, re_residue, im_residue, order.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "re_omega,im_omega,re_residue,im_residue,order")?;
        for p in &self.poles {
            let (rr, ri) = match p.zeta_residue {
                Some(r) => (r.re, r.im),
                None => (f64::NAN, f64::NAN),
            };
            writeln!(
                out,
                "{},{},{},{},{}",
                crate::io::fmt_f64(p.omega.re),
                crate::io::fmt_f64(p.omega.im),
                crate::io::fmt_f64(rr),
                crate::io::fmt_f64(ri),
                p.order
            )?;
        }
        Ok(())
    }
}
