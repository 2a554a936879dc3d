//! Particle-system state spaces: ordered configurations in a Weyl chamber of
//! type A (no wall), C (wall excluded) or D (wall absorbed into reflection).

use crate::error::{Error, Result};

/// Which interacting particle system a configuration belongs to.
///
/// Type A is the plain non-colliding system on the line; types C and D add a
/// wall at the origin, excluded (C) or attained (D). For the max-equality
/// pairing, n top particles correspond to m = n/2 (C, n even) or
/// m = (n+1)/2 (D, n odd) wall particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    TypeA { n: usize },
    TypeC { m: usize },
    TypeD { m: usize },
}

impl ProcessKind {
    /// Number of particles the configuration must carry.
    pub fn particle_count(&self) -> usize {
        match *self {
            ProcessKind::TypeA { n } => n,
            ProcessKind::TypeC { m } | ProcessKind::TypeD { m } => m,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProcessKind::TypeA { .. } => "A",
            ProcessKind::TypeC { .. } => "C",
            ProcessKind::TypeD { .. } => "D",
        }
    }

    /// Wall system whose top particle matches the running maximum of n free
    /// particles: C with m = n/2 for even n, D with m = (n+1)/2 for odd n.
    pub fn wall_partner_of(n: usize) -> ProcessKind {
        if n % 2 == 0 {
            ProcessKind::TypeC { m: n / 2 }
        } else {
            ProcessKind::TypeD { m: n.div_ceil(2) }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.particle_count() == 0 {
            return Err(Error::InvalidParameter(
                "particle count must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// A strictly ordered point of the chamber attached to a process kind.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedConfig {
    kind: ProcessKind,
    positions: Vec<f64>,
}

impl OrderedConfig {
    pub fn new(kind: ProcessKind, positions: Vec<f64>) -> Result<Self> {
        kind.validate()?;
        if positions.len() != kind.particle_count() {
            return Err(Error::ShapeMismatch {
                expected: kind.particle_count(),
                got: positions.len(),
            });
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(kind.label()));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(kind.label()));
        }
        match kind {
            ProcessKind::TypeA { .. } => {}
            ProcessKind::TypeC { .. } => {
                if positions[0] <= 0.0 {
                    return Err(Error::InvalidConfig("C"));
                }
            }
            ProcessKind::TypeD { .. } => {
                if positions[0] < 0.0 {
                    return Err(Error::InvalidConfig("D"));
                }
            }
        }
        Ok(OrderedConfig { kind, positions })
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Position of the top (rightmost) particle.
    pub fn top(&self) -> f64 {
        *self.positions.last().expect("nonempty by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_partner_pairing() {
        assert_eq!(ProcessKind::wall_partner_of(2), ProcessKind::TypeC { m: 1 });
        assert_eq!(ProcessKind::wall_partner_of(3), ProcessKind::TypeD { m: 2 });
        assert_eq!(ProcessKind::wall_partner_of(1), ProcessKind::TypeD { m: 1 });
        assert_eq!(ProcessKind::wall_partner_of(6), ProcessKind::TypeC { m: 3 });
    }

    #[test]
    fn type_c_excludes_wall() {
        assert!(OrderedConfig::new(ProcessKind::TypeC { m: 1 }, vec![0.0]).is_err());
        assert!(OrderedConfig::new(ProcessKind::TypeC { m: 2 }, vec![0.5, 1.5]).is_ok());
    }

    #[test]
    fn type_d_attains_wall() {
        assert!(OrderedConfig::new(ProcessKind::TypeD { m: 2 }, vec![0.0, 0.7]).is_ok());
        assert!(OrderedConfig::new(ProcessKind::TypeD { m: 2 }, vec![-0.1, 0.7]).is_err());
    }

    #[test]
    fn ordering_is_strict() {
        assert!(OrderedConfig::new(ProcessKind::TypeA { n: 2 }, vec![1.0, 1.0]).is_err());
        assert!(OrderedConfig::new(ProcessKind::TypeA { n: 2 }, vec![-3.0, 1.0]).is_ok());
    }

    #[test]
    fn dimension_must_match_kind() {
        assert!(matches!(
            OrderedConfig::new(ProcessKind::TypeC { m: 2 }, vec![1.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
