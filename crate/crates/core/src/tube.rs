//! The geometric ζ-function of a tiling and its residue tube formula.
//!
//! For a generator profile (d, κ, h, g, λ) and scaling ζ-function ζ(s),
//!
//!   ζ_T(s, ε) = ζ(s) · ε^{d−s} · ( Σ_{i<d} h^{s−i} κ_i/(s−i)
//!                                  + g^{s−d} κ_d/(s−d) + Λ(s) ),
//!   Λ(s) = ∫_h^g u^{s−d−1} λ(u) du   (entire),
//!
//! and the inner tube volume is the sum of residues of ζ_T over the complex
//! dimensions together with the integer points 0..d−1, valid for ε < h.
//! The point s = d is never part of the residue set.

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::GeneratorProfile;
use crate::quad::CachedNodes;
use crate::spectrum::{DimensionSet, PoleEntry, ScalingZeta, SpectrumError};

#[derive(Debug, Clone, Error)]
pub enum TubeError {
    #[error("quadrature spec needs at least 4 panels, got {0}")]
    TooFewPanels(u32),
    #[error("quadrature spec needs at least 2 nodes per panel, got {0}")]
    TooFewNodes(u32),
    #[error("similarity dimension {dim} outside (d-1, d) for d = {d}")]
    DimensionOutOfRange { dim: f64, d: u32 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("evaluation too close to the singular point s = {0}")]
    NearSingularPoint(f64),
    #[error("Re s = {re} outside the Mellin strip ({lo}, {hi})")]
    OutsideStrip { re: f64, lo: f64, hi: f64 },
    #[error(
        "quadrature did not stabilize under panel doubling: |Δ| = {delta:e} at s = {at}"
    )]
    QuadratureUnstable { delta: f64, at: Complex64 },
    #[error("integer index {index} out of 0..{d}")]
    BadIntegerIndex { index: u32, d: u32 },
    #[error("integer point {index} coincides with a ζ-pole (|denominator| = {denominator:e}); use the contour fallback")]
    IntegerPoleCoincidence { index: u32, denominator: f64 },
    #[error("pole at {omega} has order {order}; the closed-form residue needs a simple pole, use the contour fallback")]
    PoleNotSimple { omega: Complex64, order: u32 },
    #[error("pole at {omega} lies within {tol:e} of an integer point; use the contour fallback")]
    PoleNearInteger { omega: Complex64, tol: f64 },
    #[error("contour rule needs at least 64 nodes, got {0}")]
    TooFewContourNodes(usize),
    #[error("contour radius {0} must be positive and finite")]
    BadContourRadius(f64),
    #[error("ε = {eps} violates the tube formula hypothesis ε < h = {h} (strict)")]
    EpsAboveH { eps: f64, h: f64 },
    #[error("truncation {n} needs window ≥ {needed}, dimension set has {window}")]
    InsufficientWindow { n: u64, needed: f64, window: f64 },
    #[error("ε = {0} must be positive and finite")]
    BadEpsilon(f64),
}

/// Tolerance at which an integer point counting as a ζ-pole (or a pole
/// sitting on an integer) is treated as a coincidence.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// Panel-doubling stability gate for Λ and the Mellin quadrature.
pub const QUADRATURE_STABILITY_TOL: f64 = 1e-8;

/// Composite quadrature layout for Λ: `panels` panels of `nodes_per_panel`
/// Gauss-Legendre points (plus the doubled rule for the stability check).
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub panels: u32,
    pub nodes_per_panel: u32,
}

impl QuadratureSpec {
    pub fn new(panels: u32, nodes_per_panel: u32) -> Result<Self, TubeError> {
        if panels < 4 {
            return Err(TubeError::TooFewPanels(panels));
        }
        if nodes_per_panel < 2 {
            return Err(TubeError::TooFewNodes(nodes_per_panel));
        }
        Ok(QuadratureSpec {
            panels,
            nodes_per_panel,
        })
    }

    /// Enough panels that the integrand's phase T·log(g/h) advances at most
    /// about two radians per panel at the largest pole height T.
    pub fn for_window(profile: &GeneratorProfile, window: f64) -> Self {
        let phase = window.abs() * (profile.inradius() / profile.regime_bound()).ln();
        let panels = ((phase / 2.0).ceil() as u32).max(16);
        QuadratureSpec {
            panels,
            nodes_per_panel: 8,
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panels: 64,
            nodes_per_panel: 8,
        }
    }
}

/// ζ(s), a generator profile, and cached Λ quadrature nodes.
///
/// Immutable once built; the node caches are shared by every evaluation.
#[derive(Debug, Clone)]
pub struct GeometricZeta {
    zeta: ScalingZeta,
    profile: GeneratorProfile,
    quad: QuadratureSpec,
    /// Base and doubled rule over [h, g]; empty when h = g.
    lambda_nodes: Option<(CachedNodes, CachedNodes)>,
}

impl GeometricZeta {
    pub fn new(
        zeta: ScalingZeta,
        profile: GeneratorProfile,
        quad: QuadratureSpec,
    ) -> Result<Self, TubeError> {
        QuadratureSpec::new(quad.panels, quad.nodes_per_panel)?;
        let dim = zeta.similarity_dimension();
        let d = profile.dimension();
        if !(dim > d as f64 - 1.0 && dim < d as f64) {
            return Err(TubeError::DimensionOutOfRange { dim, d });
        }
        let lambda_nodes = (profile.regime_bound() < profile.inradius()).then(|| {
            let breaks = profile.lambda_breakpoints();
            let base = CachedNodes::build(
                &breaks,
                quad.panels as usize,
                quad.nodes_per_panel as usize,
                |u| profile.lambda_at(u),
            );
            let fine = CachedNodes::build(
                &breaks,
                2 * quad.panels as usize,
                quad.nodes_per_panel as usize,
                |u| profile.lambda_at(u),
            );
            (base, fine)
        });
        Ok(GeometricZeta {
            zeta,
            profile,
            quad,
            lambda_nodes,
        })
    }

    /// Construction with a quadrature layout sized for pole heights up to
    /// `window`.
    pub fn for_window(
        zeta: ScalingZeta,
        profile: GeneratorProfile,
        window: f64,
    ) -> Result<Self, TubeError> {
        let quad = QuadratureSpec::for_window(&profile, window);
        GeometricZeta::new(zeta, profile, quad)
    }

    pub fn zeta(&self) -> &ScalingZeta {
        &self.zeta
    }

    pub fn profile(&self) -> &GeneratorProfile {
        &self.profile
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.quad
    }

    /// Λ(s) = ∫_h^g u^{s−d−1} λ(u) du, entire in s. Evaluated on the cached
    /// composite rule and its doubled refinement; instability beyond the
    /// gate is an error, and the refined value is returned.
    pub fn lambda_transform(&self, s: Complex64) -> Result<Complex64, TubeError> {
        let Some((base, fine)) = &self.lambda_nodes else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        let z = s - (self.profile.dimension() as f64 + 1.0);
        let coarse = base.integrate_power(z);
        let refined = fine.integrate_power(z);
        let delta = (refined - coarse).norm();
        if delta > QUADRATURE_STABILITY_TOL * refined.norm().max(1.0) {
            return Err(TubeError::QuadratureUnstable { delta, at: s });
        }
        Ok(refined)
    }

    /// The profile factor Σ_{i<d} h^{s−i} κ_i/(s−i) + g^{s−d} κ_d/(s−d)
    /// + Λ(s), meromorphic with simple poles at the integers 0..=d.
    pub fn profile_factor(&self, s: Complex64) -> Result<Complex64, TubeError> {
        let d = self.profile.dimension() as usize;
        let kappa = self.profile.kappa();
        let h = self.profile.regime_bound();
        let g = self.profile.inradius();
        let mut acc = self.lambda_transform(s)?;
        for (i, &ki) in kappa.iter().enumerate().take(d) {
            let si = s - i as f64;
            acc += ((s - i as f64) * h.ln()).exp() * ki / si;
        }
        let sd = s - d as f64;
        acc += ((s - d as f64) * g.ln()).exp() * kappa[d] / sd;
        Ok(acc)
    }

    /// ζ_T(s, ε) away from its singular set.
    pub fn eval(&self, s: Complex64, eps: f64) -> Result<Complex64, TubeError> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(TubeError::BadEpsilon(eps));
        }
        let d = self.profile.dimension();
        for i in 0..=d {
            if (s - i as f64).norm() <= 1e-12 {
                return Err(TubeError::NearSingularPoint(i as f64));
            }
        }
        let zeta = self.zeta.eval(s)?;
        let factor = self.profile_factor(s)?;
        let power = ((d as f64 - s) * eps.ln()).exp();
        Ok(zeta * power * factor)
    }

    /// Closed-form Mellin transform of x ↦ V(x, ε) on the strip
    /// −d < Re s < 1−d:
    ///
    ///   −ε^{s+d} ( κ_d/(g^{s+d}(s+d)) + Σ_{j<d} κ_j/(h^{s+j}(s+j)) − Λ(−s) ).
    pub fn mellin_closed(&self, s: Complex64, eps: f64) -> Result<Complex64, TubeError> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(TubeError::BadEpsilon(eps));
        }
        let d = self.profile.dimension() as f64;
        if !(s.re > -d && s.re < 1.0 - d) {
            return Err(TubeError::OutsideStrip {
                re: s.re,
                lo: -d,
                hi: 1.0 - d,
            });
        }
        let kappa = self.profile.kappa();
        let h = self.profile.regime_bound();
        let g = self.profile.inradius();
        let du = self.profile.dimension() as usize;
        let sd = s + d;
        let mut inner = kappa[du] / (((sd) * g.ln()).exp() * sd);
        for (j, &kj) in kappa.iter().enumerate().take(du) {
            let sj = s + j as f64;
            inner += kj / ((sj * h.ln()).exp() * sj);
        }
        inner -= self.lambda_transform(-s)?;
        Ok(-(sd * eps.ln()).exp() * inner)
    }

    /// The same Mellin transform by direct integration: exact power-law
    /// antiderivatives outside the transition band and composite quadrature
    /// of x^{s+d−1} λ(ε/x) across it. Serves as the independent oracle for
    /// `mellin_closed`.
    pub fn mellin_quadrature(&self, s: Complex64, eps: f64) -> Result<Complex64, TubeError> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(TubeError::BadEpsilon(eps));
        }
        let d = self.profile.dimension() as f64;
        if !(s.re > -d && s.re < 1.0 - d) {
            return Err(TubeError::OutsideStrip {
                re: s.re,
                lo: -d,
                hi: 1.0 - d,
            });
        }
        let kappa = self.profile.kappa();
        let h = self.profile.regime_bound();
        let g = self.profile.inradius();
        let du = self.profile.dimension() as usize;

        // Saturated piece: ∫_0^{ε/g} x^{s-1}·(−x^d κ_d) dx.
        let sd = s + d;
        let x_lo = eps / g;
        let mut total = -kappa[du] * (sd * x_lo.ln()).exp() / sd;

        // Polynomial piece: ∫_{ε/h}^∞ x^{s-1} Σ_j κ_j x^j ε^{d-j} dx; each
        // power converges because Re(s+j) < 0 on the strip.
        let x_hi = eps / h;
        for (j, &kj) in kappa.iter().enumerate().take(du) {
            let sj = s + j as f64;
            total -= kj * eps.powi((du - j) as i32) * (sj * x_hi.ln()).exp() / sj;
        }

        // Transition band: ∫_{ε/g}^{ε/h} x^{s+d-1} λ(ε/x) dx by composite
        // quadrature with its own node layout (independent of Λ's cache).
        if x_hi > x_lo {
            let mut breaks: Vec<f64> = self
                .profile
                .lambda_breakpoints()
                .iter()
                .rev()
                .map(|&u| eps / u)
                .collect();
            breaks[0] = x_lo;
            let last = breaks.len() - 1;
            breaks[last] = x_hi;
            let band = |trial_panels: usize| {
                let nodes = CachedNodes::build(
                    &breaks,
                    trial_panels,
                    self.quad.nodes_per_panel as usize,
                    |x| self.profile.lambda_at(eps / x),
                );
                nodes.integrate_power(s + (d - 1.0))
            };
            let coarse = band(self.quad.panels as usize);
            let refined = band(2 * self.quad.panels as usize);
            let delta = (refined - coarse).norm();
            if delta > QUADRATURE_STABILITY_TOL * refined.norm().max(1.0) {
                return Err(TubeError::QuadratureUnstable { delta, at: s });
            }
            total += refined;
        }
        Ok(total)
    }

    /// Residue of ζ_T at an integer i in 0..d−1: ζ(i)·κ_i·ε^{d−i}. The only
    /// singular factor there is h^{s−i}/(s−i).
    pub fn residue_integer(&self, i: u32, eps: f64) -> Result<f64, TubeError> {
        let d = self.profile.dimension();
        if i >= d {
            return Err(TubeError::BadIntegerIndex { index: i, d });
        }
        let h = self.profile.regime_bound();
        if !(eps > 0.0) || !(eps < h) {
            return Err(TubeError::EpsAboveH { eps, h });
        }
        let s = Complex64::new(i as f64, 0.0);
        let denom = self.zeta.denominator(s).norm();
        if denom <= COINCIDENCE_TOL {
            return Err(TubeError::IntegerPoleCoincidence {
                index: i,
                denominator: denom,
            });
        }
        let zeta_i = self.zeta.eval(s)?.re;
        Ok(zeta_i * self.profile.kappa()[i as usize] * eps.powi((d - i) as i32))
    }

    /// Residue of ζ_T at a simple complex-dimension pole ω:
    /// res(ζ; ω) · ε^{d−ω} · profile_factor(ω).
    pub fn residue_complex(&self, pole: &PoleEntry, eps: f64) -> Result<Complex64, TubeError> {
        let h = self.profile.regime_bound();
        if !(eps > 0.0) || !(eps < h) {
            return Err(TubeError::EpsAboveH { eps, h });
        }
        if pole.order != 1 {
            return Err(TubeError::PoleNotSimple {
                omega: pole.omega,
                order: pole.order,
            });
        }
        let d = self.profile.dimension() as f64;
        for i in 0..=(self.profile.dimension()) {
            if (pole.omega - i as f64).norm() <= COINCIDENCE_TOL {
                return Err(TubeError::PoleNearInteger {
                    omega: pole.omega,
                    tol: COINCIDENCE_TOL,
                });
            }
        }
        let zres = pole
            .zeta_residue
            .unwrap_or_else(|| self.zeta.denominator_derivative(pole.omega).inv());
        let factor = self.profile_factor(pole.omega)?;
        let power = ((d - pole.omega) * eps.ln()).exp();
        Ok(zres * power * factor)
    }

    /// Residue of ζ_T at any isolated singularity by a trapezoid circle
    /// integral (1/2πi)∮ ζ_T ds on |s−ω| = radius. Node doubling must
    /// stabilize to 1e−9. Works for any pole order and for coincidences;
    /// the caller keeps the circle clear of other singularities.
    pub fn residue_contour(
        &self,
        omega: Complex64,
        eps: f64,
        radius: f64,
        nodes: usize,
    ) -> Result<Complex64, TubeError> {
        if nodes < 64 {
            return Err(TubeError::TooFewContourNodes(nodes));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(TubeError::BadContourRadius(radius));
        }
        let rule = |n: usize| -> Result<Complex64, TubeError> {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let offset = Complex64::from_polar(radius, theta);
                acc += self.eval(omega + offset, eps)? * offset;
            }
            Ok(acc / n as f64)
        };
        let coarse = rule(nodes)?;
        let refined = rule(2 * nodes)?;
        let delta = (refined - coarse).norm();
        if delta > 1e-9 * refined.norm().max(1.0) {
            return Err(TubeError::QuadratureUnstable {
                delta,
                at: omega,
            });
        }
        Ok(refined)
    }

    /// The truncated residue tube formula at one ε. See
    /// [`tube_formula_sweep`] for the batch form the sweeps use.
    pub fn tube_formula(
        &self,
        dims: &DimensionSet,
        eps: f64,
        truncation: u64,
    ) -> Result<TubeEvaluation, TubeError> {
        let mut out = tube_formula_sweep(self, dims, &[eps], truncation);
        out.pop().unwrap()
    }
}

/// One evaluation of the truncated residue series.
#[derive(Debug, Clone, Copy)]
pub struct TubeEvaluation {
    pub eps: f64,
    pub truncation: u64,
    /// Σ residues at the integer points 0..d−1.
    pub integer_part: f64,
    /// Real part of the symmetric sum over complex-dimension poles.
    pub complex_part: f64,
    /// integer_part + complex_part.
    pub total: f64,
    /// Magnitude of the imaginary component discarded when taking the real
    /// total; conjugate pairing keeps it at rounding level.
    pub imag_leak: f64,
}

/// Selection of poles for a symmetric truncation: all real poles plus
/// conjugate pairs ordered by height. Lattice sets truncate per ladder
/// index |n| ≤ N (height N·p + p/2 covers every ladder's offset); other
/// sets take the N lowest conjugate pairs.
fn select_poles<'a>(
    dims: &'a DimensionSet,
    truncation: u64,
) -> Result<(Vec<&'a PoleEntry>, Vec<&'a PoleEntry>), TubeError> {
    let mut real = Vec::new();
    let mut upper: Vec<&PoleEntry> = Vec::new();
    for p in dims.poles() {
        if p.omega.im.abs() <= 1e-12 {
            real.push(p);
        } else if p.omega.im > 0.0 {
            upper.push(p);
        }
    }
    upper.sort_by(|a, b| a.omega.im.partial_cmp(&b.omega.im).unwrap());
    match dims.lattice() {
        Some(lat) => {
            let needed = truncation as f64 * lat.period;
            if dims.window() < needed * (1.0 - 1e-12) {
                return Err(TubeError::InsufficientWindow {
                    n: truncation,
                    needed,
                    window: dims.window(),
                });
            }
            let cut = needed + 0.5 * lat.period;
            upper.retain(|p| p.omega.im <= cut);
        }
        None => {
            upper.truncate(truncation as usize);
        }
    }
    Ok((real, upper))
}

/// Evaluate the truncated residue series on a grid of ε values, reusing the
/// per-pole profile factors (which do not depend on ε) across the grid.
///
/// Per ε the sum is: residues at the integers 0..d−1, plus the real poles,
/// plus conjugate pairs combined as 2·Re(residue at the upper pole) — the
/// symmetric partial sum that keeps the series real. s = d is excluded.
pub fn tube_formula_sweep(
    gz: &GeometricZeta,
    dims: &DimensionSet,
    eps_grid: &[f64],
    truncation: u64,
) -> Vec<Result<TubeEvaluation, TubeError>> {
    let (real_poles, upper_poles) = match select_poles(dims, truncation) {
        Ok(sel) => sel,
        Err(e) => return eps_grid.iter().map(|_| Err(e.clone())).collect(),
    };

    // ε-independent data per pole: residue of ζ and the profile factor.
    let mut pole_data: Vec<Result<(Complex64, Complex64, Complex64), TubeError>> = Vec::new();
    for p in real_poles.iter().chain(upper_poles.iter()) {
        let entry = (|| {
            if p.order != 1 {
                return Err(TubeError::PoleNotSimple {
                    omega: p.omega,
                    order: p.order,
                });
            }
            for i in 0..=(gz.profile.dimension()) {
                if (p.omega - i as f64).norm() <= COINCIDENCE_TOL {
                    return Err(TubeError::PoleNearInteger {
                        omega: p.omega,
                        tol: COINCIDENCE_TOL,
                    });
                }
            }
            let zres = p
                .zeta_residue
                .unwrap_or_else(|| gz.zeta.denominator_derivative(p.omega).inv());
            let factor = gz.profile_factor(p.omega)?;
            Ok((p.omega, zres, factor))
        })();
        pole_data.push(entry);
    }
    let n_real = real_poles.len();
    let d = gz.profile.dimension();

    eps_grid
        .iter()
        .map(|&eps| {
            let h = gz.profile.regime_bound();
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(TubeError::BadEpsilon(eps));
            }
            if eps >= h {
                return Err(TubeError::EpsAboveH { eps, h });
            }
            let mut integer_part = 0.0;
            for i in 0..d {
                integer_part += gz.residue_integer(i, eps)?;
            }
            let ln_eps = eps.ln();
            let mut complex_sum = Complex64::new(0.0, 0.0);
            for (idx, entry) in pole_data.iter().enumerate() {
                let (omega, zres, factor) = match entry {
                    Ok(t) => *t,
                    Err(e) => return Err(e.clone()),
                };
                let power = ((d as f64 - omega) * ln_eps).exp();
                let residue = zres * power * factor;
                if idx < n_real {
                    complex_sum += residue;
                } else {
                    // Conjugate pair: residue(ω̄) = conj(residue(ω)).
                    complex_sum += 2.0 * residue.re;
                }
            }
            let total = integer_part + complex_sum.re;
            Ok(TubeEvaluation {
                eps,
                truncation,
                integer_part,
                complex_part: complex_sum.re,
                total,
                imag_leak: complex_sum.im.abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::unit_square_profile;
    use crate::geometry::{hexagram_builtin, GeneratorProfile, LambdaSpec, LambdaTable};
    use approx::assert_relative_eq;

    fn hexagram_gz() -> GeometricZeta {
        let zeta = ScalingZeta::new(vec![1.0 / 6.0; 24]).unwrap();
        let (_, profile) = hexagram_builtin();
        GeometricZeta::new(zeta, profile, QuadratureSpec::default()).unwrap()
    }

    fn square_gz() -> GeometricZeta {
        let zeta = ScalingZeta::new(vec![0.5; 3]).unwrap();
        GeometricZeta::new(zeta, unit_square_profile(), QuadratureSpec::default()).unwrap()
    }

    fn table_profile(
        d: u32,
        kappa: Vec<f64>,
        h: f64,
        g: f64,
        f: impl Fn(f64) -> f64,
    ) -> GeneratorProfile {
        let n = 400;
        let knots: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let u = h + (g - h) * k as f64 / n as f64;
                (u, f(u))
            })
            .collect();
        GeneratorProfile::new(
            d,
            kappa,
            h,
            g,
            Some(LambdaSpec::Table(LambdaTable::new(knots).unwrap())),
        )
        .unwrap()
    }

    #[test]
    fn lambda_transform_constant() {
        // λ ≡ 1 on [1, e] with d = 1: Λ(d) = ∫ u^{-1} du = log(g/h) = 1.
        let zeta = ScalingZeta::new(vec![0.4, 0.4]).unwrap();
        let prof = table_profile(1, vec![1.0, -1.0], 1.0, std::f64::consts::E, |_| 1.0);
        let gz = GeometricZeta::new(zeta, prof, QuadratureSpec::default()).unwrap();
        let got = gz.lambda_transform(Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(got.re, 1.0, epsilon = 1e-9);
        assert!(got.im.abs() < 1e-12);
    }

    #[test]
    fn lambda_transform_power_law() {
        // λ(u) = u on [1, 2] with d = 1: Λ(s) = (g^s − h^s)/s.
        let zeta = ScalingZeta::new(vec![0.4, 0.4]).unwrap();
        let prof = table_profile(1, vec![1.0, -2.0], 1.0, 2.0, |u| u);
        let gz = GeometricZeta::new(zeta, prof, QuadratureSpec::default()).unwrap();
        for &s in &[
            Complex64::new(1.7, 0.0),
            Complex64::new(-0.4, 2.0),
            Complex64::new(0.5, -3.0),
        ] {
            let got = gz.lambda_transform(s).unwrap();
            let expect = ((s * 2f64.ln()).exp() - 1.0) / s;
            assert!((got - expect).norm() < 2e-6, "s = {s}: {got} vs {expect}");
        }
    }

    #[test]
    fn lambda_transform_hexagram_stability() {
        let gz = hexagram_gz();
        let d = gz.zeta().similarity_dimension();
        let v = gz.lambda_transform(Complex64::new(d, 0.0)).unwrap();
        assert!(v.re.is_finite() && v.im.abs() < 1e-14);
        // A second evaluation is identical (cached nodes, pure function).
        let v2 = gz.lambda_transform(Complex64::new(d, 0.0)).unwrap();
        assert_eq!(v, v2);
    }

    #[test]
    fn lambda_transform_vanishes_without_band() {
        let gz = square_gz();
        let v = gz.lambda_transform(Complex64::new(1.3, 4.0)).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn geometric_zeta_term_by_term() {
        // Independent summation order at a regular point.
        let gz = hexagram_gz();
        let s = Complex64::new(3.0, 0.0);
        let eps = 0.25;
        let got = gz.eval(s, eps).unwrap();
        let h = 3f64.sqrt().recip();
        let kappa = gz.profile().kappa();
        let mut terms = vec![
            gz.lambda_transform(s).unwrap(),
            ((s - 2.0) * 1f64.ln()).exp() * kappa[2] / (s - 2.0),
            ((s - 1.0) * h.ln()).exp() * kappa[1] / (s - 1.0),
            (s * h.ln()).exp() * kappa[0] / s,
        ];
        terms.reverse();
        let inner: Complex64 = terms.iter().sum();
        let zeta = gz.zeta().eval(s).unwrap();
        let expect = zeta * ((2.0 - s) * eps.ln()).exp() * inner;
        assert!((got - expect).norm() <= 1e-12 * expect.norm());
    }

    #[test]
    fn geometric_zeta_conjugation() {
        let gz = hexagram_gz();
        for &s in &[Complex64::new(2.5, 3.0), Complex64::new(-1.2, 7.5)] {
            let a = gz.eval(s, 0.3).unwrap();
            let b = gz.eval(s.conj(), 0.3).unwrap();
            assert!((a.conj() - b).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn geometric_zeta_rejects_singular_points() {
        let gz = hexagram_gz();
        assert!(matches!(
            gz.eval(Complex64::new(1.0, 0.0), 0.3),
            Err(TubeError::NearSingularPoint(_))
        ));
        let d = gz.zeta().similarity_dimension();
        assert!(matches!(
            gz.eval(Complex64::new(d, 0.0), 0.3),
            Err(TubeError::Spectrum(SpectrumError::PoleProximity { .. }))
        ));
    }

    #[test]
    fn mellin_square_closed_form_value() {
        // Hand-expanded value at s = −1.5, ε = 0.2 for the unit square.
        let gz = square_gz();
        let s = Complex64::new(-1.5, 0.0);
        let eps = 0.2;
        let got = gz.mellin_closed(s, eps).unwrap();
        let h = 0.5f64;
        let expect = -eps.powf(0.5)
            * (-1.0 / (h.powf(0.5) * 0.5) + -4.0 / (h.powf(-1.5) * -1.5)
                + 4.0 / (h.powf(-0.5) * -0.5));
        assert_relative_eq!(got.re, expect, epsilon = 1e-12);
        assert!(got.im.abs() < 1e-14);
    }

    #[test]
    fn mellin_closed_matches_quadrature() {
        let square = square_gz();
        let hexagram = hexagram_gz();
        for (gz, tol) in [(&square, 1e-10), (&hexagram, 1e-6)] {
            for &(re, im, eps) in &[
                (-1.5, 0.0, 0.2),
                (-1.5, 2.0, 0.3),
                (-1.9, -1.0, 0.7),
                (-1.1, 4.0, 0.05),
            ] {
                let s = Complex64::new(re, im);
                let a = gz.mellin_closed(s, eps).unwrap();
                let b = gz.mellin_quadrature(s, eps).unwrap();
                assert!(
                    (a - b).norm() <= tol * a.norm().max(1e-12),
                    "s = {s}, eps = {eps}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn mellin_pure_saturation_reduction() {
        // κ_j = 0 for j < d kills the polynomial piece: the transform
        // reduces to the saturated branch −κ_d ε^{s+d}/(g^{s+d}(s+d)) plus
        // the band term ε^{s+d}Λ(−s). A profile continuity needs λ to
        // bridge 0 up to the volume across [h, g].
        let zeta = ScalingZeta::new(vec![0.4, 0.4]).unwrap();
        let prof = table_profile(1, vec![0.0, -1.0], 0.5, 1.0, |u| 2.0 * u - 1.0);
        let gz = GeometricZeta::new(zeta, prof, QuadratureSpec::default()).unwrap();
        let s = Complex64::new(-0.5, 1.0);
        let eps = 0.4;
        let got = gz.mellin_quadrature(s, eps).unwrap();
        let sd = s + 1.0;
        let saturated = (sd * eps.ln()).exp() / sd;
        let band = (sd * eps.ln()).exp() * gz.lambda_transform(-s).unwrap();
        assert!((got - (saturated + band)).norm() < 1e-9);
        let closed = gz.mellin_closed(s, eps).unwrap();
        assert!((closed - (saturated + band)).norm() < 1e-13);
    }

    #[test]
    fn mellin_strip_enforced() {
        let gz = square_gz();
        assert!(matches!(
            gz.mellin_closed(Complex64::new(-0.5, 0.0), 0.2),
            Err(TubeError::OutsideStrip { .. })
        ));
        assert!(matches!(
            gz.mellin_quadrature(Complex64::new(-2.5, 0.0), 0.2),
            Err(TubeError::OutsideStrip { .. })
        ));
    }

    #[test]
    fn residue_integer_example_values() {
        let gz = hexagram_gz();
        let s3 = 3f64.sqrt();
        for &eps in &[0.1, 0.3, 0.5] {
            let r1 = gz.residue_integer(1, eps).unwrap();
            assert_relative_eq!(r1, -4.0 * eps, max_relative = 1e-12);
            let r0 = gz.residue_integer(0, eps).unwrap();
            assert_relative_eq!(
                r0,
                (6.0 * s3 - std::f64::consts::PI) / 23.0 * eps * eps,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn residue_integer_zero_when_kappa_zero() {
        let zeta = ScalingZeta::new(vec![0.45; 3]).unwrap();
        // κ₀ = 0 profile: V = 2ε up to h, λ band brings saturation.
        let prof = table_profile(2, vec![0.0, 2.0, -1.0], 0.4, 0.6, |u| {
            // Smooth monotone bridge from 0.8 at h to 1.0 at g.
            let t = (u - 0.4) / 0.2;
            0.8 + 0.2 * t * t * (3.0 - 2.0 * t)
        });
        let gz = GeometricZeta::new(zeta, prof, QuadratureSpec::default()).unwrap();
        assert_eq!(gz.residue_integer(0, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn residue_complex_matches_contour() {
        let gz = hexagram_gz();
        let dims = gz
            .zeta()
            .complex_dimensions(20.0, (-4.0, 2.0))
            .unwrap();
        let eps = 0.3;
        for pole in dims.poles() {
            let closed = gz.residue_complex(pole, eps).unwrap();
            let contour = gz.residue_contour(pole.omega, eps, 0.1, 128).unwrap();
            assert!(
                (closed - contour).norm() <= 1e-8,
                "pole {}: {closed} vs {contour}",
                pole.omega
            );
        }
    }

    #[test]
    fn contour_around_regular_point_vanishes() {
        let gz = hexagram_gz();
        let v = gz
            .residue_contour(Complex64::new(3.5, 0.5), 0.3, 0.2, 128)
            .unwrap();
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn contour_at_integer_matches_closed_residue() {
        let gz = hexagram_gz();
        let eps = 0.2;
        let v = gz
            .residue_contour(Complex64::new(1.0, 0.0), eps, 0.1, 128)
            .unwrap();
        assert!((v - Complex64::new(-4.0 * eps, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn contour_node_floor() {
        let gz = hexagram_gz();
        assert!(matches!(
            gz.residue_contour(Complex64::new(1.0, 0.0), 0.2, 0.1, 32),
            Err(TubeError::TooFewContourNodes(32))
        ));
    }

    #[test]
    fn homogeneity_slice_without_band() {
        // With h = g and Λ ≡ 0 the profile factor is the single sum
        // Σ_{i=0}^{d} g^{s−i} κ_i/(s−i).
        let gz = square_gz();
        let g = 0.5f64;
        for &s in &[Complex64::new(2.3, 1.7), Complex64::new(-0.7, -2.2)] {
            let inner = gz.profile_factor(s).unwrap();
            let kappa = gz.profile().kappa();
            let mut expect = Complex64::new(0.0, 0.0);
            for (i, &ki) in kappa.iter().enumerate() {
                expect += ((s - i as f64) * g.ln()).exp() * ki / (s - i as f64);
            }
            assert!((inner - expect).norm() <= 1e-13 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn tube_formula_rejects_eps_at_h() {
        let gz = hexagram_gz();
        let dims = gz.zeta().complex_dimensions(20.0, (-4.0, 2.0)).unwrap();
        let h = gz.profile().regime_bound();
        assert!(matches!(
            gz.tube_formula(&dims, h, 3),
            Err(TubeError::EpsAboveH { .. })
        ));
        assert!(gz.tube_formula(&dims, h - 1e-6, 3).is_ok());
    }

    #[test]
    fn tube_formula_window_coverage() {
        let gz = hexagram_gz();
        let dims = gz.zeta().complex_dimensions(20.0, (-4.0, 2.0)).unwrap();
        // 20 < 10 · p ≈ 35: insufficient window for N = 10.
        assert!(matches!(
            gz.tube_formula(&dims, 0.3, 10),
            Err(TubeError::InsufficientWindow { .. })
        ));
    }

    #[test]
    fn tube_formula_truncation_zero_is_integer_plus_base_pole() {
        let gz = hexagram_gz();
        let dims = gz.zeta().complex_dimensions(20.0, (-4.0, 2.0)).unwrap();
        let eps = 0.3;
        let ev = gz.tube_formula(&dims, eps, 0).unwrap();
        let s3 = 3f64.sqrt();
        let expect_int = -4.0 * eps + (6.0 * s3 - std::f64::consts::PI) / 23.0 * eps * eps;
        assert_relative_eq!(ev.integer_part, expect_int, max_relative = 1e-12);
        // The complex part at N = 0 is exactly the real residue at the
        // similarity dimension.
        let base = dims
            .poles()
            .iter()
            .find(|p| p.omega.im.abs() < 1e-12)
            .unwrap();
        let direct = gz.residue_complex(base, eps).unwrap();
        assert_relative_eq!(ev.complex_part, direct.re, max_relative = 1e-12);
        assert!(ev.imag_leak <= 1e-9 * ev.total.abs().max(1.0));
        assert_eq!(ev.total, ev.integer_part + ev.complex_part);
    }
}

