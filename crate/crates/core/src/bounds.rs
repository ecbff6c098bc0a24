//! Exact combinatorial index bounds and the inequality verification report.
//!
//! Everything here is pure arithmetic on topological data: the obstruction
//! count `υ(g, m)`, the boundary Riemann–Roch bookkeeping for the ∂̄
//! operator, the Ambrozio–Carlotto–Sharp/Sargent lower bound, the
//! Fraser–Li/concave-boundary area estimates, and the harness that checks
//! every inequality against spectra computed elsewhere.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("Fredholm hints are only defined for rank-1 bundles, got rank {0}")]
    Rank(u32),
    #[error("parameter outside the required sign regime: {0}")]
    Sign(String),
    #[error("inconsistent verification inputs: {0}")]
    InputMismatch(String),
}

/// Euler characteristic of a compact oriented surface of genus `g` with `m`
/// boundary components.
pub fn euler_characteristic(g: u32, m: u32) -> i64 {
    2 - 2 * g as i64 - m as i64
}

/// Maximal defect `υ(g, m)` between area and energy indices: `0` when
/// `χ > 0`, `1` when `χ = 0`, and `6g - 6 + 3m` when `χ < 0`.
pub fn upsilon(g: u32, m: u32) -> u64 {
    assert!(m >= 1, "a free-boundary surface has at least one boundary loop");
    let chi = euler_characteristic(g, m);
    if chi > 0 {
        0
    } else if chi == 0 {
        1
    } else {
        (6 * g as i64 - 6 + 3 * m as i64) as u64
    }
}

/// Fredholm bookkeeping of the boundary Riemann–Roch theorem for a rank
/// `n_rank` complex bundle with Maslov index `mu` over a surface of Euler
/// characteristic `chi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiemannRoch {
    pub n_rank: u32,
    pub chi: i64,
    pub mu: i64,
    /// Fredholm index `n·χ + μ` of the ∂̄ boundary value problem.
    pub index: i64,
    /// `μ < 0` forces injectivity (rank 1 only; `None` otherwise).
    pub injective_hint: Option<bool>,
    /// `μ + 2χ > 0` forces surjectivity (rank 1 only; `None` otherwise).
    pub surjective_hint: Option<bool>,
    /// Maslov index `2χ` of the doubled antiholomorphic bundle.
    pub maslov_antiholomorphic: i64,
    /// `2h⁰(Λ^{0,1}) - 2h⁰(T^{0,1}⊗Λ^{1,0}) = 3χ` in the antiholomorphic
    /// setup.
    pub h0_difference: i64,
    /// Upper bound for the obstruction count `2h⁰(T^{0,1}⊗Λ^{1,0})` in the
    /// setup `μ = 2χ`: zero for `χ > 0` (surjectivity), one for `χ = 0`
    /// (Clifford cap), `-3χ` for `χ < 0`.  `None` outside that setup.
    pub obstruction_cap: Option<i64>,
}

/// Evaluates the Riemann–Roch index formula and its consequences.
pub fn riemann_roch(n_rank: u32, chi: i64, mu: i64) -> RiemannRoch {
    let rank_one = n_rank == 1;
    let obstruction_cap = if mu == 2 * chi {
        Some(if chi > 0 {
            0
        } else if chi == 0 {
            1
        } else {
            -3 * chi
        })
    } else {
        None
    };
    RiemannRoch {
        n_rank,
        chi,
        mu,
        index: n_rank as i64 * chi + mu,
        injective_hint: rank_one.then_some(mu < 0),
        surjective_hint: rank_one.then_some(mu + 2 * chi > 0),
        maslov_antiholomorphic: 2 * chi,
        h0_difference: 3 * chi,
        obstruction_cap,
    }
}

/// The injectivity/surjectivity criteria, defined for rank-1 bundles only.
pub fn fredholm_hints(n_rank: u32, chi: i64, mu: i64) -> Result<(bool, bool), BoundsError> {
    if n_rank != 1 {
        return Err(BoundsError::Rank(n_rank));
    }
    Ok((mu < 0, mu + 2 * chi > 0))
}

/// An exact rational number in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let sign = if den < 0 { -1 } else { 1 };
        Self {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// Ambrozio–Carlotto–Sharp/Sargent lower bound `(2g + m - 1)/3` for the
/// area index in convex domains of Euclidean 3-space.
pub fn acs_lower_bound(g: u32, m: u32) -> Rational {
    assert!(m >= 1, "a free-boundary surface has at least one boundary loop");
    Rational::new(2 * g as i64 + m as i64 - 1, 3)
}

/// Sign regime for the geometric area estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AreaBoundRegime {
    /// Nonnegative Ricci curvature with boundary convexity constant
    /// `alpha > 0` (Fraser–Li area cap).
    Convex { alpha: f64 },
    /// Ricci lower bound `kappa` and concave-boundary constant
    /// `alpha >= 0`: `κ|Σ| + α|∂Σ| ≤ -2πχ`.
    Concave { kappa: f64, alpha: f64 },
}

/// One evaluated inequality with both sides and its margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityLine {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    /// Advisory lines involve non-constructive constants supplied by the
    /// caller; they are reported but do not gate `all_pass`.
    pub advisory: bool,
}

impl InequalityLine {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: lhs <= rhs,
            advisory: false,
        }
    }

    fn advisory(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            advisory: true,
            ..Self::le(name, lhs, rhs)
        }
    }
}

/// Result of the geometric area estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaBoundReport {
    pub regime: AreaBoundRegime,
    /// Whether the hypotheses admit any surface of this topology at all
    /// (the concave estimate requires `χ ≤ 0`).
    pub applicable: bool,
    pub line: InequalityLine,
}

/// Evaluates the Fraser–Li cap `c1·min{(4π/α)(g+m), (16π/α)⌊(g+3)/2⌋}` or
/// the concave-boundary estimate against measured area and boundary length.
pub fn geometric_area_bounds(
    g: u32,
    m: u32,
    regime: AreaBoundRegime,
    area: f64,
    boundary_length: f64,
    c1: f64,
) -> Result<AreaBoundReport, BoundsError> {
    let chi = euler_characteristic(g, m);
    match regime {
        AreaBoundRegime::Convex { alpha } => {
            if alpha <= 0.0 {
                return Err(BoundsError::Sign(format!(
                    "convex regime needs alpha > 0, got {alpha}"
                )));
            }
            let pi = std::f64::consts::PI;
            let cap = c1
                * ((4.0 * pi / alpha) * (g + m) as f64)
                    .min((16.0 * pi / alpha) * ((g + 3) / 2) as f64);
            Ok(AreaBoundReport {
                regime,
                applicable: true,
                line: InequalityLine::le("area below Fraser-Li cap", area, cap),
            })
        }
        AreaBoundRegime::Concave { kappa, alpha } => {
            if alpha < 0.0 {
                return Err(BoundsError::Sign(format!(
                    "concave regime needs alpha >= 0, got {alpha}"
                )));
            }
            let rhs = -2.0 * std::f64::consts::PI * chi as f64;
            let lhs = kappa * area + alpha * boundary_length;
            let mut line =
                InequalityLine::le("curvature-weighted area below -2 pi chi", lhs, rhs);
            let applicable = chi <= 0;
            if !applicable {
                // No free-boundary minimal surface of positive Euler
                // characteristic exists under these hypotheses; report the
                // arithmetic but do not count it as a verified inequality.
                line.pass = false;
            }
            Ok(AreaBoundReport {
                regime,
                applicable,
                line,
            })
        }
    }
}

/// Classified spectral counts and geometric data for one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityInputs {
    pub surface_id: String,
    pub genus: u32,
    pub boundary_count: u32,
    pub ind_area: usize,
    pub nul_area: usize,
    pub ind_energy: usize,
    pub nul_energy: usize,
    pub nul_energy_tangential: usize,
    /// Number of eigenvalues of the Robin bundle form at most `rho`.
    pub beta: usize,
    pub area: f64,
    pub boundary_length: f64,
    /// Closed-form eigenvalue-count bound, when evaluated.
    pub closed_form_bound: Option<f64>,
}

/// Full verification record for one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub surface_id: String,
    pub genus: u32,
    pub boundary_count: u32,
    pub euler_characteristic: i64,
    pub ind_area: usize,
    pub nul_area: usize,
    pub ind_energy: usize,
    pub nul_energy: usize,
    pub nul_energy_tangential: usize,
    pub beta: usize,
    pub upsilon: u64,
    pub acs_lower: Rational,
    pub area: f64,
    pub boundary_length: f64,
    pub c_empirical: f64,
    /// Topological cap `min{4π(g+m), 16π⌊(g+3)/2⌋}` of the composite bound.
    pub topological_cap: f64,
    /// Smallest constant that would make the composite bound hold with
    /// equality-or-better for this surface (diagnostic).
    pub c_tight: f64,
    pub inequalities: Vec<InequalityLine>,
    pub all_pass: bool,
}

/// Checks every inequality of the index-comparison theory on one set of
/// classified counts.
pub fn verify_inequalities(
    inputs: &InequalityInputs,
    c_empirical: f64,
) -> Result<BoundReport, BoundsError> {
    if inputs.boundary_count == 0 {
        return Err(BoundsError::InputMismatch(
            "free-boundary data needs at least one boundary loop".into(),
        ));
    }
    if !(inputs.area > 0.0) || !(inputs.boundary_length > 0.0) {
        return Err(BoundsError::InputMismatch(format!(
            "area {} and boundary length {} must be positive",
            inputs.area, inputs.boundary_length
        )));
    }
    let (g, m) = (inputs.genus, inputs.boundary_count);
    let chi = euler_characteristic(g, m);
    let ups = upsilon(g, m);
    let acs = acs_lower_bound(g, m);
    let pi = std::f64::consts::PI;
    let cap = (4.0 * pi * (g + m) as f64).min(16.0 * pi * ((g + 3) / 2) as f64);

    let mut lines = vec![
        InequalityLine::le(
            "energy index below area index",
            inputs.ind_energy as f64,
            inputs.ind_area as f64,
        ),
        InequalityLine::le(
            "area index below energy index plus upsilon",
            inputs.ind_area as f64,
            inputs.ind_energy as f64 + ups as f64,
        ),
        InequalityLine::le(
            "nullity gap within upsilon",
            (inputs.nul_area as i64
                - (inputs.nul_energy as i64 - inputs.nul_energy_tangential as i64))
                .abs() as f64,
            ups as f64,
        ),
        InequalityLine::le(
            "topological lower bound below area index",
            acs.as_f64(),
            inputs.ind_area as f64,
        ),
        InequalityLine::le(
            "energy index plus nullity below beta",
            (inputs.ind_energy + inputs.nul_energy) as f64,
            inputs.beta as f64,
        ),
        InequalityLine::le(
            "area index below composite topological bound",
            inputs.ind_area as f64,
            c_empirical * cap + ups as f64,
        ),
    ];
    if let Some(bound) = inputs.closed_form_bound {
        // The closed-form bound depends on the Sobolev/volume constants,
        // which the theory does not construct; with caller-supplied values
        // this line is diagnostic only.
        lines.push(InequalityLine::advisory(
            "energy index plus nullity below closed-form bound",
            (inputs.ind_energy + inputs.nul_energy) as f64,
            bound,
        ));
    }
    let all_pass = lines.iter().all(|l| l.pass || l.advisory);
    let c_tight = ((inputs.ind_area as f64 - ups as f64) / cap).max(0.0);

    Ok(BoundReport {
        surface_id: inputs.surface_id.clone(),
        genus: g,
        boundary_count: m,
        euler_characteristic: chi,
        ind_area: inputs.ind_area,
        nul_area: inputs.nul_area,
        ind_energy: inputs.ind_energy,
        nul_energy: inputs.nul_energy,
        nul_energy_tangential: inputs.nul_energy_tangential,
        beta: inputs.beta,
        upsilon: ups,
        acs_lower: acs,
        area: inputs.area,
        boundary_length: inputs.boundary_length,
        c_empirical,
        topological_cap: cap,
        c_tight,
        inequalities: lines,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Re-derives upsilon from the case split with independently computed
    /// Euler characteristic.
    fn upsilon_oracle(g: i64, m: i64) -> i64 {
        let chi = 2 - 2 * g - m;
        match chi.signum() {
            1 => 0,
            0 => 1,
            _ => -3 * chi,
        }
    }

    #[test]
    fn combinatorial_table_two_hundred_cases() {
        let mut cases = 0;
        for g in 0..10u32 {
            for m in 1..=20u32 {
                cases += 1;
                let chi = 2 - 2 * g as i64 - m as i64;
                assert_eq!(euler_characteristic(g, m), chi);
                assert_eq!(upsilon(g, m) as i64, upsilon_oracle(g as i64, m as i64));
                let acs = acs_lower_bound(g, m);
                // Exact rational equality with (2g + m - 1)/3.
                assert_eq!(acs.num * 3, (2 * g as i64 + m as i64 - 1) * acs.den);
                assert!(acs.den == 1 || acs.den == 3);
                let rr = riemann_roch(1, chi, 2 * chi);
                assert_eq!(rr.index, 3 * chi);
                assert_eq!(rr.maslov_antiholomorphic, 2 * chi);
                assert_eq!(rr.h0_difference, 3 * chi);
                if chi < 0 {
                    assert_eq!(-3 * chi, 6 * g as i64 - 6 + 3 * m as i64);
                    assert_eq!(rr.obstruction_cap, Some(6 * g as i64 - 6 + 3 * m as i64));
                }
                // The obstruction cap in the antiholomorphic setup is
                // exactly upsilon.
                assert_eq!(rr.obstruction_cap, Some(upsilon(g, m) as i64));
            }
        }
        assert_eq!(cases, 200);
    }

    #[test]
    fn upsilon_reference_values() {
        assert_eq!(upsilon(0, 1), 0);
        assert_eq!(upsilon(0, 2), 1);
        assert_eq!(upsilon(1, 2), 6);
    }

    #[test]
    fn riemann_roch_disk_setup() {
        let rr = riemann_roch(1, 1, 2);
        assert_eq!(rr.index, 3);
        assert_eq!(rr.surjective_hint, Some(true));
        assert_eq!(rr.h0_difference, 3);
        assert_eq!(rr.obstruction_cap, Some(0));
        // Annulus: index zero, Clifford-capped obstruction.
        let ann = riemann_roch(1, 0, 0);
        assert_eq!(ann.index, 0);
        assert_eq!(ann.obstruction_cap, Some(1));
        // Genus two, one boundary loop.
        let rr = riemann_roch(1, -3, -6);
        assert_eq!(rr.h0_difference, -9);
        assert_eq!(rr.injective_hint, Some(true));
    }

    #[test]
    fn fredholm_hints_rank_gate() {
        assert_eq!(fredholm_hints(1, 1, 2).unwrap(), (false, true));
        assert_eq!(fredholm_hints(1, 1, -1).unwrap(), (true, true));
        assert!(matches!(fredholm_hints(2, 1, 2), Err(BoundsError::Rank(2))));
        let rr = riemann_roch(2, 1, 2);
        assert_eq!(rr.injective_hint, None);
        assert_eq!(rr.surjective_hint, None);
    }

    #[test]
    fn acs_reference_values() {
        assert_eq!(acs_lower_bound(0, 1), Rational { num: 0, den: 1 });
        assert_eq!(acs_lower_bound(0, 2), Rational { num: 1, den: 3 });
        assert_eq!(acs_lower_bound(2, 3), Rational { num: 2, den: 1 });
    }

    #[test]
    fn fraser_li_caps() {
        let pi = std::f64::consts::PI;
        let disk = geometric_area_bounds(
            0,
            1,
            AreaBoundRegime::Convex { alpha: 1.0 },
            pi,
            2.0 * pi,
            1.0,
        )
        .unwrap();
        assert!((disk.line.rhs - 4.0 * pi).abs() < 1e-12);
        assert!(disk.line.pass && disk.applicable);

        let annulus = geometric_area_bounds(
            0,
            2,
            AreaBoundRegime::Convex { alpha: 1.0 },
            1.5,
            4.0,
            1.0,
        )
        .unwrap();
        assert!((annulus.line.rhs - 8.0 * pi).abs() < 1e-12);

        assert!(matches!(
            geometric_area_bounds(0, 1, AreaBoundRegime::Convex { alpha: 0.0 }, 1.0, 1.0, 1.0),
            Err(BoundsError::Sign(_))
        ));
    }

    #[test]
    fn concave_estimate_regimes() {
        let pi = std::f64::consts::PI;
        // Disk: chi = 1 makes the right-hand side negative, so the
        // hypotheses exclude the topology altogether.
        let disk = geometric_area_bounds(
            0,
            1,
            AreaBoundRegime::Concave {
                kappa: 1.0,
                alpha: 0.5,
            },
            pi,
            2.0 * pi,
            1.0,
        )
        .unwrap();
        assert!(!disk.applicable);
        assert!(!disk.line.pass);
        // Genus 1 with one boundary loop: chi = -1, a passing example.
        let torus = geometric_area_bounds(
            1,
            1,
            AreaBoundRegime::Concave {
                kappa: 0.5,
                alpha: 0.25,
            },
            2.0,
            4.0,
            1.0,
        )
        .unwrap();
        assert!(torus.applicable);
        assert!(torus.line.pass, "lhs {} rhs {}", torus.line.lhs, torus.line.rhs);
        assert!(matches!(
            geometric_area_bounds(
                1,
                1,
                AreaBoundRegime::Concave {
                    kappa: 1.0,
                    alpha: -0.1
                },
                1.0,
                1.0,
                1.0
            ),
            Err(BoundsError::Sign(_))
        ));
    }

    fn catenoid_inputs() -> InequalityInputs {
        InequalityInputs {
            surface_id: "critical_catenoid".into(),
            genus: 0,
            boundary_count: 2,
            ind_area: 4,
            nul_area: 2,
            ind_energy: 3,
            nul_energy: 4,
            nul_energy_tangential: 1,
            beta: 9,
            area: 1.49,
            boundary_length: 4.28,
            closed_form_bound: Some(40.0),
        }
    }

    #[test]
    fn verification_passes_on_catenoid_counts() {
        let rep = verify_inequalities(&catenoid_inputs(), 1.0).unwrap();
        assert!(rep.all_pass, "{:#?}", rep.inequalities);
        assert_eq!(rep.upsilon, 1);
        assert_eq!(rep.euler_characteristic, 0);
        // Index sandwich forces ind_E into {3, 4} given ind_A = 4.
        assert!(rep.inequalities[0].pass && rep.inequalities[1].pass);
        assert!(rep.c_tight > 0.0 && rep.c_tight <= 1.0);
    }

    #[test]
    fn verification_flags_violations() {
        let mut inputs = catenoid_inputs();
        inputs.ind_energy = 6;
        let rep = verify_inequalities(&inputs, 1.0).unwrap();
        assert!(!rep.all_pass);
        let line = &rep.inequalities[0];
        assert!(!line.pass && line.margin < 0.0);
        // Margins are recorded for failing lines too.
        assert_eq!(line.lhs, 6.0);
        assert_eq!(line.rhs, 4.0);
    }

    #[test]
    fn verification_rejects_bad_inputs() {
        let mut inputs = catenoid_inputs();
        inputs.area = 0.0;
        assert!(matches!(
            verify_inequalities(&inputs, 1.0),
            Err(BoundsError::InputMismatch(_))
        ));
        let mut inputs = catenoid_inputs();
        inputs.boundary_count = 0;
        assert!(matches!(
            verify_inequalities(&inputs, 1.0),
            Err(BoundsError::InputMismatch(_))
        ));
    }

    #[test]
    fn report_serialization_is_deterministic() {
        let a = serde_json::to_string(&verify_inequalities(&catenoid_inputs(), 1.0).unwrap())
            .unwrap();
        let b = serde_json::to_string(&verify_inequalities(&catenoid_inputs(), 1.0).unwrap())
            .unwrap();
        assert_eq!(a, b);
    }
}
