// Radix-2 complex FFT along each axis of a row-major hypercube.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug)]
pub(crate) struct FftPlan {
    len: usize,
    log2: u32,
    // e^{-2πik/len}, k < len/2
    twiddles: Vec<Complex64>,
}

impl FftPlan {
    pub(crate) fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let twiddles = (0..len / 2)
            .map(|k| {
                let phase = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        Self {
            len,
            log2: len.trailing_zeros(),
            twiddles,
        }
    }

    /// Unnormalized in-place transform of one contiguous line.
    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.len;
        if n <= 1 {
            return;
        }
        let shift = usize::BITS - self.log2;
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
            if j > i {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }

    /// Unitary transform over all `dims` axes of a `len^dims` row-major array.
    pub(crate) fn transform_nd(&self, data: &mut [Complex64], dims: usize, inverse: bool) {
        let n = self.len;
        let total = data.len();
        debug_assert_eq!(total, n.pow(dims as u32));
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..dims {
            // stride of this axis in row-major order
            let stride = n.pow((dims - 1 - axis) as u32);
            for base in 0..total {
                // visit each line once: its first element has index 0 on `axis`
                if (base / stride) % n != 0 {
                    continue;
                }
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                self.transform(&mut line, inverse);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
        let scale = 1.0 / (total as f64).sqrt();
        for c in data.iter_mut() {
            *c *= scale;
        }
    }
}
