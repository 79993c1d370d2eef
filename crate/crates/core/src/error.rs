use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point outside the valid domain: {0}")]
    Domain(String),

    /// |∇u| fell below the floor; the point is (numerically) a critical point of u.
    #[error("degenerate gradient |grad u| = {norm:e} below floor {floor:e}")]
    DegenerateGradient { norm: f64, floor: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("step size underflow at s = {s} (h = {h:e})")]
    Stiffness { s: f64, h: f64 },

    /// v_s^2 - 1 dropped below the cone threshold: the solution left the negative cone.
    #[error("solution left the negative cone at s = {s} (v_s^2 - 1 = {gap:e})")]
    ConeViolation { s: f64, gap: f64 },

    #[error("no root of u = {t} on the bracket")]
    NoRoot { t: f64 },

    #[error(
        "level u = {t} has {crossings} crossings along a ray (not star-shaped about the center)"
    )]
    MultiRoot { t: f64, crossings: usize },

    /// The component about the origin leaves a cone outside: the level has
    /// further components that are not star-shaped about their cones.
    #[error("level u = {t} about the origin does not enclose the cone at {position:?}")]
    SplitLevel { t: f64, position: [f64; 4] },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// True for the errors that mark a level as a topology-transition gap.
    pub fn is_level_gap(&self) -> bool {
        matches!(
            self,
            Error::NoRoot { .. }
                | Error::MultiRoot { .. }
                | Error::DegenerateGradient { .. }
                | Error::SplitLevel { .. }
        )
    }
}
