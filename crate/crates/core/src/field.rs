//! Sampled field values and their layout.

/// Which half of a complex draw a realization came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pair {
    /// Real part.
    A,
    /// Imaginary part.
    B,
}

/// Dimensions of a stored field. Spatial fields have `n_time == 1` and
/// `spacetime == false`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldShape {
    pub n_time: usize,
    pub n_lon: usize,
    pub n_colat: usize,
    pub spacetime: bool,
}

impl FieldShape {
    pub fn spatial(n_lon: usize, n_colat: usize) -> Self {
        Self {
            n_time: 1,
            n_lon,
            n_colat,
            spacetime: false,
        }
    }

    pub fn spacetime(n_time: usize, n_lon: usize, n_colat: usize) -> Self {
        Self {
            n_time,
            n_lon,
            n_colat,
            spacetime: true,
        }
    }

    pub fn len(&self) -> usize {
        self.n_time * self.n_lon * self.n_colat
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index: colatitude fastest, then ring, then time.
    #[inline]
    pub fn index(&self, time: usize, ring: usize, colat: usize) -> usize {
        (time * self.n_lon + ring) * self.n_colat + colat
    }
}

/// One sampled field together with the draw that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization<T> {
    pub values: Vec<T>,
    pub shape: FieldShape,
    pub seed: u64,
    /// Index of the complex draw (random stream) within the run.
    pub replicate: u64,
    pub pair: Pair,
}

impl<T: Copy> FieldRealization<T> {
    #[inline]
    pub fn get(&self, time: usize, ring: usize, colat: usize) -> T {
        self.values[self.shape.index(time, ring, colat)]
    }

    /// The `N·M` values at one time step.
    pub fn time_slice(&self, time: usize) -> &[T] {
        let n = self.shape.n_lon * self.shape.n_colat;
        &self.values[time * n..(time + 1) * n]
    }
}
