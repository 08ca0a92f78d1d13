//! Folded-concave penalties `p_λ(t)` on `t ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_A: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Scad,
    Mcp,
    L1,
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            "l1" | "lasso" => Ok(PenaltyKind::L1),
            other => Err(Error::invalid(format!("unknown penalty '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    /// Concavity parameter; ignored for ℓ₁.
    pub a: f64,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, lambda: f64, a: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("penalty lambda must be finite and nonnegative"));
        }
        match kind {
            PenaltyKind::Scad if !(a > 2.0) => {
                return Err(Error::invalid("SCAD requires a > 2"));
            }
            PenaltyKind::Mcp if !(a > 1.0) => {
                return Err(Error::invalid("MCP requires a > 1"));
            }
            _ => {}
        }
        Ok(Self { kind, lambda, a })
    }

    pub fn scad(lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::Scad,
            lambda,
            a: DEFAULT_SCAD_A,
        }
    }

    pub fn mcp(lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::Mcp,
            lambda,
            a: DEFAULT_MCP_A,
        }
    }

    pub fn l1(lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::L1,
            lambda,
            a: f64::INFINITY,
        }
    }

    /// Same penalty family at a different `λ`.
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    /// `a₁`: lower bound of `p′/λ` on `(0, a₂λ]`.
    pub fn a1(&self) -> f64 {
        match self.kind {
            PenaltyKind::Scad | PenaltyKind::L1 => 1.0,
            PenaltyKind::Mcp => 1.0 - 1.0 / self.a,
        }
    }

    pub fn a2(&self) -> f64 {
        1.0
    }

    pub fn a0(&self) -> f64 {
        self.a2().min(1.0)
    }

    /// Threshold `aλ` beyond which the derivative vanishes (infinite for ℓ₁).
    pub fn flat_threshold(&self) -> f64 {
        match self.kind {
            PenaltyKind::L1 => f64::INFINITY,
            _ => self.a * self.lambda,
        }
    }

    /// `p′_λ(t)`, with `p′_λ(0) := p′_λ(0⁺)`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.derivative_unchecked(t))
    }

    pub(crate) fn derivative_unchecked(&self, t: f64) -> f64 {
        let lam = self.lambda;
        match self.kind {
            PenaltyKind::Scad => {
                if t <= lam {
                    lam
                } else {
                    (self.a * lam - t).max(0.0) / (self.a - 1.0)
                }
            }
            PenaltyKind::Mcp => (lam - t / self.a).max(0.0),
            PenaltyKind::L1 => lam,
        }
    }

    /// `p_λ(t) = ∫₀ᵗ p′_λ(u) du`.
    pub fn value(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let lam = self.lambda;
        let a = self.a;
        Ok(match self.kind {
            PenaltyKind::Scad => {
                if t <= lam {
                    lam * t
                } else if t <= a * lam {
                    (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0))
                } else {
                    lam * lam * (a + 1.0) / 2.0
                }
            }
            PenaltyKind::Mcp => {
                if t <= a * lam {
                    lam * t - t * t / (2.0 * a)
                } else {
                    a * lam * lam / 2.0
                }
            }
            PenaltyKind::L1 => lam * t,
        })
    }

    /// Audit the four folded-concave axioms on a sorted grid of `t ≥ 0`.
    pub fn verify_axioms(&self, grid: &[f64]) -> Result<AxiomReport> {
        if grid.is_empty() {
            return Err(Error::invalid("axiom grid is empty"));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("axiom grid must be sorted"));
        }
        check_t(grid[0])?;
        let lam = self.lambda;
        let slack = 1e-12 * lam.max(1.0);
        let a1 = self.a1();

        let mut values = Vec::with_capacity(grid.len());
        let mut derivs = Vec::with_capacity(grid.len());
        for &t in grid {
            values.push(self.value(t)?);
            derivs.push(self.derivative_unchecked(t));
        }

        let zero_ok = self.value(0.0)? == 0.0;
        let increasing = values.windows(2).all(|w| w[1] >= w[0] - slack);
        let concave = derivs.windows(2).all(|w| w[1] <= w[0] + slack);
        let axiom_i = zero_ok && increasing && concave;

        let axiom_ii = self.derivative_unchecked(0.0) >= a1 * lam - slack;

        let axiom_iii = grid
            .iter()
            .zip(&derivs)
            .filter(|(&t, _)| t > 0.0 && t <= self.a2() * lam)
            .all(|(_, &d)| d >= a1 * lam - slack);

        let flat = self.flat_threshold();
        let axiom_iv = flat.is_finite()
            && self.a > self.a2()
            && grid
                .iter()
                .zip(&derivs)
                .filter(|(&t, _)| t >= flat)
                .all(|(_, &d)| d == 0.0);

        Ok(AxiomReport {
            axiom_i,
            axiom_ii,
            axiom_iii,
            axiom_iv,
            a1,
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(format!("penalty argument must be nonnegative, got {t}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// increasing and concave with `p(0) = 0`
    pub axiom_i: bool,
    /// `p′(0⁺) ≥ a₁λ`
    pub axiom_ii: bool,
    /// `p′(t) ≥ a₁λ` on `(0, a₂λ]`
    pub axiom_iii: bool,
    /// `p′(t) = 0` on `[aλ, ∞)`
    pub axiom_iv: bool,
    pub a1: f64,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.axiom_i && self.axiom_ii && self.axiom_iii && self.axiom_iv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_grid() -> Vec<f64> {
        (0..10_000).map(|i| 10.0 * i as f64 / 9_999.0).collect()
    }

    /// Composite Simpson quadrature of the derivative.
    fn quad(spec: &PenaltySpec, t: f64) -> f64 {
        let n = 20_000;
        let h = t / n as f64;
        let mut s = spec.derivative_unchecked(0.0) + spec.derivative_unchecked(t);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * spec.derivative_unchecked(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn derivative_examples() {
        let scad = PenaltySpec::new(PenaltyKind::Scad, 1.0, 3.7).unwrap();
        assert_eq!(scad.derivative(0.5).unwrap(), 1.0);
        assert!((scad.derivative(2.0).unwrap() - 1.7 / 2.7).abs() < 1e-15);
        assert!((scad.derivative(2.0).unwrap() - 0.629630).abs() < 1e-6);
        assert_eq!(scad.derivative(4.0).unwrap(), 0.0);
        let mcp = PenaltySpec::new(PenaltyKind::Mcp, 1.0, 3.0).unwrap();
        assert!((mcp.derivative(0.5).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!(scad.derivative(-0.1).is_err());
    }

    #[test]
    fn value_examples() {
        for spec in [PenaltySpec::scad(1.0), PenaltySpec::mcp(0.7), PenaltySpec::l1(0.3)] {
            assert_eq!(spec.value(0.0).unwrap(), 0.0);
        }
        assert!((PenaltySpec::l1(0.3).value(2.0).unwrap() - 0.6).abs() < 1e-15);
        assert!(PenaltySpec::l1(0.3).value(-1.0).is_err());
    }

    #[test]
    fn value_matches_quadrature_of_derivative() {
        let scad = PenaltySpec::scad(1.0);
        let mcp = PenaltySpec::mcp(1.0);
        // interior points avoid the kinks so Simpson is exact to rounding
        for &t in &[0.3, 0.9, 1.0, 1.7, 2.5, 3.7, 5.0, 9.0] {
            assert!((scad.value(t).unwrap() - quad(&scad, t)).abs() < 1e-8, "scad t={t}");
            assert!((mcp.value(t).unwrap() - quad(&mcp, t)).abs() < 1e-8, "mcp t={t}");
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(PenaltySpec::new(PenaltyKind::Scad, 1.0, 2.0).is_err());
        assert!(PenaltySpec::new(PenaltyKind::Mcp, 1.0, 1.0).is_err());
        assert!(PenaltySpec::new(PenaltyKind::L1, -1.0, 0.0).is_err());
        assert!(PenaltySpec::new(PenaltyKind::L1, 1.0, 0.0).is_ok());
    }

    #[test]
    fn axioms_scad_mcp_l1() {
        let grid = dense_grid();
        let r = PenaltySpec::new(PenaltyKind::Scad, 1.0, 3.7)
            .unwrap()
            .verify_axioms(&grid)
            .unwrap();
        assert!(r.all_pass(), "{r:?}");
        let r = PenaltySpec::new(PenaltyKind::Mcp, 1.0, 3.0)
            .unwrap()
            .verify_axioms(&grid)
            .unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert!((r.a1 - 2.0 / 3.0).abs() < 1e-15);
        let r = PenaltySpec::l1(1.0).verify_axioms(&grid).unwrap();
        assert!(r.axiom_i && r.axiom_ii && r.axiom_iii && !r.axiom_iv);
        assert!(PenaltySpec::l1(1.0).verify_axioms(&[]).is_err());
        assert!(PenaltySpec::l1(1.0).verify_axioms(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn derived_constants() {
        let m = PenaltySpec::mcp(1.0);
        assert_eq!(m.a2(), 1.0);
        assert_eq!(m.a0(), 1.0);
        assert!((m.a1() - 2.0 / 3.0).abs() < 1e-15);
        let s = PenaltySpec::scad(1.0);
        assert_eq!((s.a0(), s.a1(), s.a2()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn continuity_at_breakpoints() {
        let eps = 1e-13;
        let s = PenaltySpec::scad(0.8);
        for b in [0.8, 0.8 * 3.7] {
            let lo = s.value(b - eps).unwrap();
            let hi = s.value(b + eps).unwrap();
            assert!((lo - hi).abs() < 1e-12, "scad value jump at {b}");
        }
        let m = PenaltySpec::mcp(0.8);
        let b = 0.8 * 3.0;
        assert!((m.value(b - eps).unwrap() - m.value(b + eps).unwrap()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn derivative_bounded_and_nonincreasing(
            lam in 0.01f64..5.0,
            a in 2.05f64..8.0,
            t1 in 0.0f64..50.0,
            t2 in 0.0f64..50.0,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            for spec in [
                PenaltySpec::new(PenaltyKind::Scad, lam, a).unwrap(),
                PenaltySpec::new(PenaltyKind::Mcp, lam, a).unwrap(),
            ] {
                let dl = spec.derivative(lo).unwrap();
                let dh = spec.derivative(hi).unwrap();
                prop_assert!(dh <= dl + 1e-15);
                prop_assert!((0.0..=lam).contains(&dl));
                prop_assert!((0.0..=lam).contains(&dh));
            }
            let l1 = PenaltySpec::l1(lam);
            prop_assert_eq!(l1.derivative(lo).unwrap(), l1.derivative(hi).unwrap());
        }
    }
}
