//! Compensated summation (Neumaier variant). Callers that reduce in
//! parallel merge per-chunk accumulators in a fixed order, so results do not
//! depend on the rayon thread count.

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub(crate) fn new() -> Self {
        Compensated::default()
    }

    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn merge(&mut self, other: Compensated) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
