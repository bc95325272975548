//! Block-axis DFTs shared by the spatial and space-time samplers.
//!
//! A block row is stored as `n_time · n_lon` blocks of size `M × M`, block
//! `b = q·n_lon + k` holding lag `(q, k)`. The purely spatial case is
//! `n_time = 1`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::NormalStream;
use crate::scalar::Real;

/// Relative imaginary residue above which a transformed block row is rejected.
pub(crate) const REALNESS_LIMIT: f64 = 1e-8;

struct Dft2<T: Real> {
    along_lon: Arc<dyn Fft<T>>,
    along_time: Arc<dyn Fft<T>>,
    n_time: usize,
    n_lon: usize,
}

impl<T: Real> Dft2<T> {
    fn forward(n_time: usize, n_lon: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            along_lon: planner.plan_fft_forward(n_lon),
            along_time: planner.plan_fft_forward(n_time),
            n_time,
            n_lon,
        }
    }

    fn scratch_len(&self) -> usize {
        self.along_lon
            .get_inplace_scratch_len()
            .max(self.along_time.get_inplace_scratch_len())
    }

    /// In-place unnormalized forward 2-D DFT of a row-major `n_time × n_lon` buffer.
    fn apply(
        &self,
        buf: &mut [Complex<T>],
        transposed: &mut [Complex<T>],
        scratch: &mut [Complex<T>],
    ) {
        let (nt, nl) = (self.n_time, self.n_lon);
        self.along_lon.process_with_scratch(buf, scratch);
        if nt == 1 {
            return;
        }
        for q in 0..nt {
            for k in 0..nl {
                transposed[k * nt + q] = buf[q * nl + k];
            }
        }
        self.along_time.process_with_scratch(transposed, scratch);
        for q in 0..nt {
            for k in 0..nl {
                buf[q * nl + k] = transposed[k * nt + q];
            }
        }
    }
}

/// Entrywise 2-D DFT over the block axes. Returns the real parts and the
/// largest imaginary magnitude relative to the largest input magnitude.
pub(crate) fn transform_block_row<T: Real>(
    blocks: &[DMatrix<T>],
    n_time: usize,
    n_lon: usize,
) -> Result<(Vec<DMatrix<T>>, f64)> {
    let nb = n_time * n_lon;
    assert_eq!(blocks.len(), nb);
    let m = blocks[0].nrows();
    let dft = Dft2::<T>::forward(n_time, n_lon);
    let scale = blocks
        .iter()
        .flat_map(|b| b.iter())
        .fold(0.0f64, |acc, v| acc.max(v.as_f64().abs()));

    let entries: Vec<(usize, usize)> = (0..m).flat_map(|j| (j..m).map(move |l| (j, l))).collect();
    let transformed: Vec<(Vec<T>, f64)> = entries
        .par_iter()
        .map_init(
            || {
                (
                    vec![Complex::<T>::new(T::zero(), T::zero()); nb],
                    vec![Complex::<T>::new(T::zero(), T::zero()); nb],
                    vec![Complex::<T>::new(T::zero(), T::zero()); dft.scratch_len()],
                )
            },
            |(buf, tr, scratch), &(j, l)| {
                for (slot, b) in buf.iter_mut().zip(blocks) {
                    *slot = Complex::new(b[(j, l)], T::zero());
                }
                dft.apply(buf, tr, scratch);
                let imag = buf.iter().fold(0.0f64, |a, c| a.max(c.im.as_f64().abs()));
                (buf.iter().map(|c| c.re).collect(), imag)
            },
        )
        .collect();

    let mut out = vec![DMatrix::<T>::zeros(m, m); nb];
    let mut max_imag = 0.0f64;
    for (&(j, l), (re, imag)) in entries.iter().zip(transformed) {
        max_imag = max_imag.max(imag);
        for (blk, v) in out.iter_mut().zip(re) {
            blk[(j, l)] = v;
            blk[(l, j)] = v;
        }
    }
    let residue = if scale > 0.0 { max_imag / scale } else { 0.0 };
    if residue > REALNESS_LIMIT {
        return Err(Error::RealnessViolation {
            residue,
            limit: REALNESS_LIMIT,
        });
    }
    Ok((out, residue))
}

/// One complex draw pushed through the factor: returns (real, imaginary)
/// fields restricted to the first `keep_time` time blocks, ordered
/// time, ring, colatitude (colatitude fastest).
///
/// Variates are consumed block by block (`b = q·n_lon + k`), colatitude
/// within block, real part before imaginary part.
pub(crate) fn synthesize<T: Real>(
    roots: &[DMatrix<T>],
    n_time: usize,
    n_lon: usize,
    keep_time: usize,
    stream: &mut NormalStream,
) -> (Vec<T>, Vec<T>) {
    let nb = n_time * n_lon;
    let m = roots[0].nrows();
    let mut z_re = vec![DVec::<T>::zeros(m); nb];
    let mut z_im = vec![DVec::<T>::zeros(m); nb];
    for b in 0..nb {
        for j in 0..m {
            z_re[b][j] = T::lit(stream.next_normal());
            z_im[b][j] = T::lit(stream.next_normal());
        }
    }
    let w: Vec<(DVec<T>, DVec<T>)> = roots
        .par_iter()
        .zip(z_re.par_iter().zip(z_im.par_iter()))
        .map(|(r, (zr, zi))| (r * zr, r * zi))
        .collect();

    let dft = Dft2::<T>::forward(n_time, n_lon);
    let norm = T::one() / T::from_usize_lossy(nb).sqrt();
    let per_colat: Vec<Vec<Complex<T>>> = (0..m)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![Complex::<T>::new(T::zero(), T::zero()); nb],
                    vec![Complex::<T>::new(T::zero(), T::zero()); dft.scratch_len()],
                )
            },
            |(tr, scratch), j| {
                let mut buf: Vec<Complex<T>> = w
                    .iter()
                    .map(|(re, im)| Complex::new(re[j], im[j]))
                    .collect();
                dft.apply(&mut buf, tr, scratch);
                buf.truncate(keep_time * n_lon);
                buf
            },
        )
        .collect();

    let len = keep_time * n_lon * m;
    let mut re = vec![T::zero(); len];
    let mut im = vec![T::zero(); len];
    for (j, col) in per_colat.iter().enumerate() {
        for (b, c) in col.iter().enumerate() {
            re[b * m + j] = c.re * norm;
            im[b * m + j] = c.im * norm;
        }
    }
    (re, im)
}

type DVec<T> = nalgebra::DVector<T>;

/// Dense complex factor `S = (QN)^{-1/2} (F_Q ⊗ F_N ⊗ I_M) R` for small problems.
pub(crate) fn materialize<T: Real>(
    roots: &[DMatrix<T>],
    n_time: usize,
    n_lon: usize,
) -> DMatrix<Complex<T>> {
    let nb = n_time * n_lon;
    let m = roots[0].nrows();
    let dim = nb * m;
    let norm = T::one() / T::from_usize_lossy(nb).sqrt();
    let phase = |a: usize, b: usize, n: usize| -> Complex<T> {
        let ang = -T::two_pi() * T::from_usize_lossy((a * b) % n) / T::from_usize_lossy(n);
        Complex::new(ang.cos(), ang.sin())
    };
    let mut s = DMatrix::from_element(dim, dim, Complex::<T>::new(T::zero(), T::zero()));
    for t in 0..n_time {
        for a in 0..n_lon {
            for q in 0..n_time {
                for k in 0..n_lon {
                    let w = phase(t, q, n_time) * phase(a, k, n_lon) * norm;
                    let r = &roots[q * n_lon + k];
                    let row0 = (t * n_lon + a) * m;
                    let col0 = (q * n_lon + k) * m;
                    for j in 0..m {
                        for l in 0..m {
                            s[(row0 + j, col0 + l)] = w * r[(j, l)];
                        }
                    }
                }
            }
        }
    }
    s
}
