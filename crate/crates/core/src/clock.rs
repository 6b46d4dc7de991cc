/// Monotonic time source used to stamp solver traces.
///
/// The core crate has no access to a system clock; callers running under
/// `std` pass an implementation backed by `std::time::Instant`.
pub trait Clock {
    /// Seconds elapsed since an arbitrary fixed origin.
    fn now_seconds(&self) -> f64;
}

/// A clock that never advances. Traces recorded with it carry zero elapsed
/// time, which keeps outputs byte-reproducible.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_seconds(&self) -> f64 {
        0.0
    }
}
