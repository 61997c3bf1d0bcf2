//! Bessel functions of the first kind, integer order, by Miller's downward
//! recurrence. The whole array `J_0(z) .. J_kmax(z)` comes out of one pass,
//! which is exactly the shape the Chebyshev coefficients need.

/// Compute `J_k(z)` for `k = 0..=k_max`, `z >= 0`.
pub fn bessel_j_array(z: f64, k_max: usize) -> Vec<f64> {
    assert!(z >= 0.0 && z.is_finite(), "bessel_j_array needs finite z >= 0");
    if z < 1e-300 {
        let mut out = vec![0.0; k_max + 1];
        out[0] = 1.0;
        return out;
    }
    // start well above both the requested order and the turning point k ~ z
    let start = k_max.max(z.ceil() as usize) + 52;
    let mut out = vec![0.0f64; k_max + 1];
    let mut jp = 0.0f64; // J_{k+1} (unnormalized)
    let mut j = 1e-300f64; // J_k
    let mut norm = 0.0f64; // J_0 + 2 * sum of even orders
    for k in (0..=start).rev() {
        let jm = (2.0 * (k as f64 + 1.0) / z) * j - jp;
        jp = j;
        j = jm;
        // j now holds the unnormalized J_k
        if k <= k_max {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}
