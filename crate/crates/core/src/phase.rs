//! Which kinds of reconstruction are possible for given parameters.

use alloc::vec::Vec;
use core::fmt;

use num_rational::BigRational;
use num_traits::One;

use crate::poset::{ModelKind, ModelSpec};
use crate::scalar::rat_int;

/// Estimator families, from weakest to strongest restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReconstructionKind {
    Reconstruction,
    Convex,
    Local,
    LocalConvex,
    SingleVertex,
}

impl ReconstructionKind {
    pub const ALL: [ReconstructionKind; 5] = [
        ReconstructionKind::Reconstruction,
        ReconstructionKind::Convex,
        ReconstructionKind::Local,
        ReconstructionKind::LocalConvex,
        ReconstructionKind::SingleVertex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReconstructionKind::Reconstruction => "reconstruction",
            ReconstructionKind::Convex => "convex",
            ReconstructionKind::Local => "local",
            ReconstructionKind::LocalConvex => "local-convex",
            ReconstructionKind::SingleVertex => "single-vertex",
        }
    }

    /// Families whose estimators are all admissible in `self`:
    /// single-vertex => local convex => local, convex => reconstruction.
    pub fn implied_by(self) -> &'static [ReconstructionKind] {
        use ReconstructionKind::*;
        match self {
            Reconstruction => &[Convex, Local, LocalConvex, SingleVertex],
            Convex => &[LocalConvex, SingleVertex],
            Local => &[LocalConvex, SingleVertex],
            LocalConvex => &[SingleVertex],
            SingleVertex => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Claim {
    Possible,
    Impossible,
    Open,
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Claim::Possible => "possible",
            Claim::Impossible => "impossible",
            Claim::Open => "open",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: ReconstructionKind,
    pub claim: Claim,
    /// Short tag naming the argument behind the claim.
    pub basis: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseVerdict {
    pub model: ModelSpec,
    pub verdicts: Vec<Verdict>,
}

impl PhaseVerdict {
    pub fn get(&self, kind: ReconstructionKind) -> &Verdict {
        self.verdicts.iter().find(|v| v.kind == kind).expect("every kind is classified")
    }

    /// No stronger family is possible while a weaker one is impossible.
    pub fn is_consistent(&self) -> bool {
        self.verdicts.iter().all(|weak| {
            weak.kind.implied_by().iter().all(|&strong| {
                let s = self.get(strong).claim;
                !(s == Claim::Possible && weak.claim == Claim::Impossible)
            })
        })
    }

    /// One-line label for tables.
    pub fn summary(&self) -> &'static str {
        use ReconstructionKind::*;
        match self.model.kind() {
            ModelKind::FiniteOrthant => {
                if self.get(Convex).claim == Claim::Possible {
                    "convex-reconstruction-possible"
                } else {
                    "reconstruction-impossible"
                }
            }
            ModelKind::HalfSpace => {
                if self.get(SingleVertex).claim == Claim::Possible {
                    "single-vertex-possible"
                } else if self.model.is_critical() {
                    "critical-impossible-local"
                } else {
                    "impossible-local"
                }
            }
        }
    }

    /// Basis tag of the verdict that `summary` reports.
    pub fn citation(&self) -> &'static str {
        use ReconstructionKind::*;
        match (self.model.kind(), self.summary()) {
            (ModelKind::FiniteOrthant, "convex-reconstruction-possible") => self.get(Convex).basis,
            (ModelKind::FiniteOrthant, _) => self.get(Reconstruction).basis,
            (ModelKind::HalfSpace, _) => self.get(SingleVertex).basis,
        }
    }
}

/// Classifies the parameters into possible / impossible / open for each
/// family of estimators.
pub fn phase_verdict(m: &ModelSpec) -> PhaseVerdict {
    use ReconstructionKind::*;
    let mut verdicts = Vec::with_capacity(5);
    let mut push = |kind, claim, basis| verdicts.push(Verdict { kind, claim, basis });
    match m.kind() {
        ModelKind::FiniteOrthant => {
            let one = BigRational::one();
            let supercritical = m.alphas().iter().enumerate().any(|(i, a)| a * rat_int(i as i64 + 1) > one);
            if supercritical {
                push(Reconstruction, Claim::Possible, "finite-supercritical-index");
                push(Convex, Claim::Possible, "finite-supercritical-index");
                let (claim, basis) = if m.alpha(1) > &one {
                    (Claim::Possible, "finite-axis-vertex")
                } else {
                    (Claim::Open, "finite-local-open")
                };
                push(Local, claim, basis);
                push(LocalConvex, claim, basis);
                push(SingleVertex, claim, basis);
            } else {
                for kind in ReconstructionKind::ALL {
                    push(kind, Claim::Impossible, "finite-box-impossible");
                }
            }
        }
        ModelKind::HalfSpace => {
            let beta = m.top_alpha() * rat_int(m.dim() as i64);
            let one = BigRational::one();
            if m.d() == 0 {
                let claim = if beta > one { Claim::Possible } else { Claim::Impossible };
                let basis = if beta > one { "chain-supercritical" } else { "chain-variance-diverges" };
                for kind in ReconstructionKind::ALL {
                    push(kind, claim, basis);
                }
            } else {
                push(Reconstruction, Claim::Possible, "halfspace-independent-copies");
                push(Convex, Claim::Possible, "halfspace-independent-copies");
                let (claim, basis) = if beta > one {
                    (Claim::Possible, "halfspace-supercritical")
                } else if beta < one {
                    (Claim::Impossible, "halfspace-subcritical-decay")
                } else if m.d() >= 3 {
                    (Claim::Possible, "halfspace-critical-d>=3")
                } else {
                    (Claim::Impossible, "halfspace-critical-d<=2")
                };
                push(Local, claim, basis);
                push(LocalConvex, claim, basis);
                push(SingleVertex, claim, basis);
            }
        }
    }
    PhaseVerdict { model: m.clone(), verdicts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use alloc::vec;

    #[test]
    fn table_cells() {
        let box_model = ModelSpec::finite(vec![rat(1, 1), rat(1, 2), rat(1, 4)]).unwrap();
        let v = phase_verdict(&box_model);
        assert_eq!(v.get(ReconstructionKind::Reconstruction).claim, Claim::Impossible);
        assert_eq!(v.summary(), "reconstruction-impossible");

        let sup = ModelSpec::finite(vec![rat(1, 1), rat(1, 2), rat(2, 5)]).unwrap();
        let v = phase_verdict(&sup);
        assert_eq!(v.get(ReconstructionKind::Convex).claim, Claim::Possible);
        assert_eq!(v.get(ReconstructionKind::Local).claim, Claim::Open);

        let hs3 = ModelSpec::half_space(3, rat(1, 4)).unwrap();
        assert_eq!(phase_verdict(&hs3).get(ReconstructionKind::SingleVertex).claim, Claim::Possible);
        let hs1 = ModelSpec::half_space(1, rat(1, 2)).unwrap();
        let v = phase_verdict(&hs1);
        assert_eq!(v.get(ReconstructionKind::Local).claim, Claim::Impossible);
        assert_eq!(v.get(ReconstructionKind::Convex).claim, Claim::Possible);
        assert_eq!(v.summary(), "critical-impossible-local");
        assert_eq!(v.citation(), "halfspace-critical-d<=2");
        assert_eq!(phase_verdict(&ModelSpec::half_space(1, rat(3, 10)).unwrap()).summary(), "impossible-local");
        assert_eq!(phase_verdict(&ModelSpec::half_space(1, rat(7, 10)).unwrap()).summary(), "single-vertex-possible");
        for m in [box_model, sup, hs3, hs1] {
            assert!(phase_verdict(&m).is_consistent());
        }
    }
}
