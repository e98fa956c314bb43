//! Generator volume profiles: the polynomial regime below `h`, the λ
//! transition band on `[h, g]`, and saturation at the generator volume above
//! the inradius `g`.

use super::GeometryError;

/// Transition-band volume function λ on `[h, g]`.
#[derive(Debug, Clone)]
pub enum LambdaSpec {
    /// Closed form for the unit-edge hexagram generator.
    Hexagram,
    /// Sampled table with piecewise-linear interpolation. Tables need at
    /// least 256 knots for the documented interpolation error to hold.
    Table(LambdaTable),
}

#[derive(Debug, Clone)]
pub struct LambdaTable {
    knots: Vec<(f64, f64)>,
}

pub const MIN_TABLE_KNOTS: usize = 256;

impl LambdaTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        if knots.len() < MIN_TABLE_KNOTS {
            return Err(GeometryError::TableTooSparse {
                got: knots.len(),
                need: MIN_TABLE_KNOTS,
            });
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(GeometryError::TableNotIncreasing(w[0].0));
            }
        }
        for &(u, v) in &knots {
            if !u.is_finite() || !v.is_finite() {
                return Err(GeometryError::NonFiniteTableEntry);
            }
        }
        Ok(LambdaTable { knots })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots.last().unwrap().0)
    }

    pub fn knot_positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots.iter().map(|k| k.0)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let (lo, hi) = self.domain();
        if u <= lo {
            return self.knots[0].1;
        }
        if u >= hi {
            return self.knots.last().unwrap().1;
        }
        let idx = self
            .knots
            .partition_point(|k| k.0 <= u)
            .min(self.knots.len() - 1);
        let (u0, v0) = self.knots[idx - 1];
        let (u1, v1) = self.knots[idx];
        let t = (u - u0) / (u1 - u0);
        v0 + t * (v1 - v0)
    }
}

/// Closed-form transition band of the unit-edge hexagram, valid on
/// [1/√3, 1].
pub fn hexagram_lambda(u: f64) -> f64 {
    let s3 = 3f64.sqrt();
    let root = (16.0 * u * u - 4.0).max(0.0).sqrt();
    (6.0 * s3 + 3.0 * root) / 4.0 + 6.0 * u * u * ((2.0 * s3 - root) / (8.0 * u)).asin()
}

/// The data (d, κ₀..κ_d, h, g, λ) describing a generator's inner
/// neighborhood volume
///
///   V(ε) = Σ_{i<d} κ_i ε^{d−i}   for 0 < ε < h,
///   V(ε) = λ(ε)                  for h ≤ ε ≤ g,
///   V(ε) = −κ_d                  for ε > g,
///
/// with −κ_d the generator volume. Construction enforces continuity of the
/// three regimes and monotonicity of the assembled profile.
#[derive(Debug, Clone)]
pub struct GeneratorProfile {
    d: u32,
    kappa: Vec<f64>,
    h: f64,
    g: f64,
    lambda: Option<LambdaSpec>,
}

/// Relative tolerance for the regime-continuity checks at h and g.
pub const REGIME_CONTINUITY_TOL: f64 = 1e-9;

impl GeneratorProfile {
    pub fn new(
        d: u32,
        kappa: Vec<f64>,
        h: f64,
        g: f64,
        lambda: Option<LambdaSpec>,
    ) -> Result<Self, GeometryError> {
        if d == 0 {
            return Err(GeometryError::BadDimension(d));
        }
        if kappa.len() != d as usize + 1 {
            return Err(GeometryError::KappaLength {
                got: kappa.len(),
                need: d as usize + 1,
            });
        }
        if kappa.iter().any(|k| !k.is_finite()) {
            return Err(GeometryError::NonFiniteKappa);
        }
        let vol = -kappa[d as usize];
        if !(vol > 0.0) {
            return Err(GeometryError::NonNegativeKappaD(kappa[d as usize]));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(GeometryError::BadRegimeBound(h));
        }
        if !(g >= h) || !g.is_finite() {
            return Err(GeometryError::InradiusBelowH { h, g });
        }
        let profile = GeneratorProfile {
            d,
            kappa,
            h,
            g,
            lambda,
        };
        match (&profile.lambda, profile.h == profile.g) {
            (None, false) => return Err(GeometryError::MissingLambda { h, g }),
            (Some(LambdaSpec::Table(t)), _) => {
                let (lo, hi) = t.domain();
                let scale = profile.g.max(1.0);
                if (lo - profile.h).abs() > 1e-12 * scale || (hi - profile.g).abs() > 1e-12 * scale
                {
                    return Err(GeometryError::TableDomainMismatch {
                        table: (lo, hi),
                        profile: (profile.h, profile.g),
                    });
                }
            }
            _ => {}
        }

        // Regime continuity at h and saturation at g.
        let lam_h = profile.lambda_at(profile.h);
        let poly_h = profile.polynomial_volume(profile.h);
        if (poly_h - lam_h).abs() > REGIME_CONTINUITY_TOL * lam_h.abs().max(1.0) {
            return Err(GeometryError::RegimeDiscontinuity {
                at: profile.h,
                polynomial: poly_h,
                lambda: lam_h,
            });
        }
        let lam_g = profile.lambda_at(profile.g);
        if (lam_g - vol).abs() > REGIME_CONTINUITY_TOL * vol.abs() {
            return Err(GeometryError::SaturationMismatch {
                lambda_g: lam_g,
                volume: vol,
            });
        }

        // Monotonicity of the assembled profile over a fixed grid.
        let mut prev = 0.0;
        for k in 1..=1000 {
            let eps = profile.g * k as f64 / 1000.0;
            let v = profile.volume(eps);
            if v < prev - 1e-12 * vol.abs().max(1.0) {
                return Err(GeometryError::NotMonotone { at: eps });
            }
            prev = v;
        }

        Ok(profile)
    }

    pub fn dimension(&self) -> u32 {
        self.d
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn regime_bound(&self) -> f64 {
        self.h
    }

    pub fn inradius(&self) -> f64 {
        self.g
    }

    /// The generator volume, −κ_d.
    pub fn generator_volume(&self) -> f64 {
        -self.kappa[self.d as usize]
    }

    pub fn lambda_spec(&self) -> Option<&LambdaSpec> {
        self.lambda.as_ref()
    }

    /// λ(u) for u in [h, g]; callers outside the band get the clamped value.
    pub fn lambda_at(&self, u: f64) -> f64 {
        match &self.lambda {
            None => self.generator_volume(),
            Some(LambdaSpec::Hexagram) => hexagram_lambda(u.clamp(self.h, self.g)),
            Some(LambdaSpec::Table(t)) => t.eval(u),
        }
    }

    /// Interior breakpoints of λ (where it may lose smoothness), used to
    /// split quadrature panels. Endpoints h and g are included.
    pub fn lambda_breakpoints(&self) -> Vec<f64> {
        match &self.lambda {
            Some(LambdaSpec::Table(t)) => t.knot_positions().collect(),
            _ => vec![self.h, self.g],
        }
    }

    /// Σ_{i<d} κ_i ε^{d−i}, the polynomial regime (also evaluable outside
    /// its regime for continuity checks).
    pub fn polynomial_volume(&self, eps: f64) -> f64 {
        let d = self.d as usize;
        let mut acc = 0.0;
        for i in 0..d {
            acc += self.kappa[i] * eps.powi((d - i) as i32);
        }
        acc
    }

    /// The inner neighborhood volume V(ε). Total on ε > 0; non-positive ε
    /// yields 0 (the empty neighborhood).
    pub fn volume(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            return 0.0;
        }
        if eps < self.h {
            self.polynomial_volume(eps)
        } else if eps <= self.g {
            self.lambda_at(eps)
        } else {
            self.generator_volume()
        }
    }

    /// V(x, ε) = x^d · V(ε/x): the inner neighborhood volume of the
    /// generator scaled by x. Implemented literally as the scaling identity
    /// so it holds bit-for-bit.
    pub fn scaled_volume(&self, x: f64, eps: f64) -> f64 {
        debug_assert!(x > 0.0);
        x.powi(self.d as i32) * self.volume(eps / x)
    }
}

/// Convenience accessors used across the crate and the CLI.
pub fn profile_volume(profile: &GeneratorProfile, eps: f64) -> f64 {
    profile.volume(eps)
}

pub fn scaled_profile_volume(profile: &GeneratorProfile, x: f64, eps: f64) -> f64 {
    profile.scaled_volume(x, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::unit_square_profile;
    use crate::geometry::hexagram_builtin;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn hexagram_profile_continuity_values() {
        let (_, prof) = hexagram_builtin();
        let s3 = 3f64.sqrt();
        let h = s3.recip();
        // Both regime branches at h evaluate to 2√3 + π/3.
        let expect = 2.0 * s3 + PI / 3.0;
        assert_relative_eq!(prof.polynomial_volume(h), expect, epsilon = 1e-12);
        assert_relative_eq!(prof.lambda_at(h), expect, epsilon = 1e-12);
        assert_relative_eq!(prof.volume(h), expect, epsilon = 1e-12);
        // λ at the inradius equals the hexagram area 3√3.
        assert_relative_eq!(prof.lambda_at(1.0), 3.0 * s3, epsilon = 1e-12);
        // Saturation.
        assert_relative_eq!(prof.volume(2.0), 3.0 * s3, epsilon = 1e-15);
    }

    #[test]
    fn square_profile_values() {
        let prof = unit_square_profile();
        assert_relative_eq!(prof.volume(0.1), 0.36, epsilon = 1e-15);
        // x = 1/2, ε = 0.3 saturates at x²·1.
        assert_relative_eq!(prof.scaled_volume(0.5, 0.3), 0.25, epsilon = 1e-15);
        assert_relative_eq!(prof.scaled_volume(1.0, 0.1), 0.36, epsilon = 1e-15);
    }

    #[test]
    fn scaling_identity_is_exact() {
        let (_, prof) = hexagram_builtin();
        for &x in &[0.1, 0.37, 1.0, 2.5, 17.0] {
            for &eps in &[0.05, 0.3, 0.6, 0.95, 1.4] {
                let lhs = prof.scaled_volume(x, eps);
                let rhs = x.powi(2) * prof.volume(eps / x);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn scaled_volume_regimes() {
        let prof = unit_square_profile();
        // Saturated: x below ε/g.
        assert_eq!(prof.scaled_volume(0.25, 0.3), 0.0625);
        // Polynomial: x above ε/h; matches Σ κ_j x^j ε^{d-j}.
        let (x, eps) = (2.0, 0.1);
        let expect = -4.0 * eps * eps + 4.0 * x * eps;
        assert_relative_eq!(prof.scaled_volume(x, eps), expect, epsilon = 1e-14);
    }

    #[test]
    fn rejects_discontinuous_profiles() {
        // Wrong κ's: the polynomial at h misses the collapsed λ value.
        let err = GeneratorProfile::new(2, vec![-4.0, 4.0, -2.0], 0.5, 0.5, None);
        assert!(matches!(
            err,
            Err(GeometryError::RegimeDiscontinuity { .. })
        ));
        // λ missing although h < g.
        let err = GeneratorProfile::new(2, vec![-4.0, 4.0, -1.0], 0.4, 0.5, None);
        assert!(matches!(err, Err(GeometryError::MissingLambda { .. })));
        // κ_d must be negative.
        let err = GeneratorProfile::new(2, vec![-4.0, 4.0, 1.0], 0.5, 0.5, None);
        assert!(matches!(err, Err(GeometryError::NonNegativeKappaD(_))));
        // Table meets the polynomial at h but stops short of the volume.
        let n = 300;
        let knots: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let u = 0.4 + 0.2 * k as f64 / n as f64;
                (u, 0.96 - 0.06 * k as f64 / n as f64)
            })
            .collect();
        let err = GeneratorProfile::new(
            2,
            vec![-4.0, 4.0, -1.0],
            0.4,
            0.6,
            Some(LambdaSpec::Table(LambdaTable::new(knots).unwrap())),
        );
        assert!(matches!(err, Err(GeometryError::SaturationMismatch { .. })));
    }

    #[test]
    fn table_profile_round_trip() {
        // Tabulate the hexagram λ and check the interpolant tracks it.
        let (_, exact) = hexagram_builtin();
        let h = 3f64.sqrt().recip();
        let n = 512;
        let knots: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let u = h + (1.0 - h) * k as f64 / n as f64;
                (u, hexagram_lambda(u))
            })
            .collect();
        let table = LambdaTable::new(knots).unwrap();
        let prof = GeneratorProfile::new(
            2,
            exact.kappa().to_vec(),
            h,
            1.0,
            Some(LambdaSpec::Table(table)),
        )
        .unwrap();
        for k in 0..50 {
            let u = h + (1.0 - h) * (k as f64 + 0.37) / 50.0;
            assert_relative_eq!(prof.lambda_at(u), hexagram_lambda(u), epsilon = 1e-5);
        }
    }

    #[test]
    fn sparse_table_rejected() {
        let knots: Vec<(f64, f64)> = (0..100).map(|k| (k as f64, k as f64)).collect();
        assert!(matches!(
            LambdaTable::new(knots),
            Err(GeometryError::TableTooSparse { .. })
        ));
    }

    #[test]
    fn monotonicity_grid_rejects_decreasing_profile() {
        // A λ table that dips below the saturation value on the way.
        let h = 0.5;
        let g = 1.0;
        let n = 300;
        let knots: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let u = h + (g - h) * k as f64 / n as f64;
                // Starts at the polynomial value 0.75, dips, then recovers to 1.
                let v = if k < 150 { 0.75 - 0.2 * k as f64 / 150.0 } else { 0.55 + 0.45 * (k - 150) as f64 / 150.0 };
                (u, v)
            })
            .collect();
        let err = GeneratorProfile::new(
            2,
            vec![-1.0, 2.0, -1.0],
            h,
            g,
            Some(LambdaSpec::Table(LambdaTable::new(knots).unwrap())),
        );
        assert!(matches!(err, Err(GeometryError::NotMonotone { .. })));
    }
}
