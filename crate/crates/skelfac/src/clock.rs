//! Wall-clock shim. On wasm32 there is no monotonic clock in std, so elapsed
//! times report as zero there; timings are diagnostics, not results.

#[cfg(not(target_arch = "wasm32"))]
#[derive(Clone, Copy)]
pub struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    pub fn start() -> Stopwatch {
        Stopwatch(std::time::Instant::now())
    }
    pub fn elapsed_s(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(target_arch = "wasm32")]
#[derive(Clone, Copy)]
pub struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    pub fn start() -> Stopwatch {
        Stopwatch
    }
    pub fn elapsed_s(&self) -> f64 {
        0.0
    }
}
