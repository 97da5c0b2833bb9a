use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions before meeting tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    QuadratureDivergence { estimate: f64, error: f64 },

    /// A root finder or minimiser failed; `detail` carries its last state.
    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("root not bracketed: f({a:e}) = {fa:e}, f({b:e}) = {fb:e}")]
    NotBracketed { a: f64, fa: f64, b: f64, fb: f64 },

    #[error("level cutoff too small: occupancy {occupancy:e} at the cutoff shell")]
    CutoffTooSmall { occupancy: f64 },

    #[error("trap is not axially symmetric (transverse ratio {ratio})")]
    NotAxiallySymmetric { ratio: f64 },

    /// Field evaluation too close to a current filament.
    #[error("field point {distance:e} m from a wire axis (guard {guard:e} m)")]
    SingularField { distance: f64, guard: f64 },

    #[error("stationary point is a saddle of |B| (Hessian eigenvalues {eigenvalues:?})")]
    Saddle { eigenvalues: [f64; 3] },

    #[error("not a trap: potential Hessian eigenvalues {eigenvalues:?}")]
    NotATrap { eigenvalues: [f64; 3] },

    #[error("state is not magnetically trappable (m_F g_F = {moment})")]
    NotTrappable { moment: f64 },

    #[error("no escape ray has a finite barrier")]
    UnboundedDepth,

    #[error("rotating-wave approximation invalid: B_RF = {b_rf:e} T >= B0 = {b0:e} T")]
    RwaViolation { b_rf: f64, b0: f64 },

    #[error("RF knife below the trap bottom by {deficit:e} J")]
    KnifeBelowBottom { deficit: f64 },

    #[error("dressed branch is ambiguous at zero detuning")]
    AmbiguousBranch,

    #[error("ambiguous well topology: {minima} minima, {maxima} maxima")]
    AmbiguousTopology { minima: usize, maxima: usize },

    #[error("scan spacing {spacing:e} m is coarser than {limit:e} m")]
    ScanTooCoarse { spacing: f64, limit: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True when a numerical method failed, false when the input was rejected.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Domain(_)
                | Error::Invalid(_)
                | Error::NotTrappable { .. }
                | Error::RwaViolation { .. }
                | Error::KnifeBelowBottom { .. }
                | Error::NotAxiallySymmetric { .. }
        )
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
