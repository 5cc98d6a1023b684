//! Butterworth band-pass design and causal second-order-section filtering.
//!
//! The design path is the classical one: analog Butterworth low-pass
//! prototype, low-pass-to-band-pass transform, then bilinear transform with
//! prewarped band edges. The result is a cascade of biquads, each with
//! numerator g·(1 − z⁻²) and unit gain at the band's digital center
//! frequency, applied causally (forward only — no zero-phase double pass).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One second-order section in direct form II transposed.
#[derive(Debug, Clone)]
pub struct Biquad<T> {
    /// Numerator coefficients b0, b1, b2.
    pub b: [T; 3],
    /// Denominator coefficients a1, a2 (a0 = 1).
    pub a: [T; 2],
}

impl<T: Scalar> Biquad<T> {
    /// Filters one sample, updating the two delay states.
    #[inline]
    fn step(&self, x: T, s: &mut [T; 2]) -> T {
        let y = self.b[0] * x + s[0];
        s[0] = self.b[1] * x - self.a[0] * y + s[1];
        s[1] = self.b[2] * x - self.a[1] * y;
        y
    }
}

/// A cascade of second-order sections realizing one IIR filter.
#[derive(Debug, Clone)]
pub struct SosFilter<T> {
    sections: Vec<Biquad<T>>,
}

/// Complex arithmetic on (re, im) pairs — only what the pole algebra needs.
#[derive(Debug, Clone, Copy)]
struct C {
    re: f64,
    im: f64,
}

impl C {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: C) -> C {
        C::new(self.re - o.re, self.im - o.im)
    }

    fn mul(self, o: C) -> C {
        C::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    fn scale(self, k: f64) -> C {
        C::new(self.re * k, self.im * k)
    }

    fn div(self, o: C) -> C {
        let d = o.re * o.re + o.im * o.im;
        C::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }

    fn sqrt(self) -> C {
        let r = (self.re * self.re + self.im * self.im).sqrt();
        let theta = self.im.atan2(self.re) / 2.0;
        C::new(r.sqrt() * theta.cos(), r.sqrt() * theta.sin())
    }

    fn abs(self) -> f64 {
        (self.re * self.re + self.im * self.im).sqrt()
    }
}

/// Bilinear transform of an analog pole: z = (fs2 + s) / (fs2 - s).
fn bilinear(s: C, fs2: f64) -> C {
    C::new(fs2 + s.re, s.im).div(C::new(fs2 - s.re, -s.im))
}

impl<T: Scalar> SosFilter<T> {
    /// Designs an odd- or even-order Butterworth band-pass filter.
    ///
    /// `order` is the prototype (half-band) order; the band-pass cascade has
    /// `order` biquad sections. Band edges are prewarped so the −3 dB points
    /// land exactly on `low_hz` and `high_hz` after the bilinear transform.
    pub fn butterworth_bandpass(
        order: usize,
        low_hz: f64,
        high_hz: f64,
        sample_rate: f64,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("filter order must be at least 1".into()));
        }
        if !(0.0 < low_hz && low_hz < high_hz && high_hz < sample_rate / 2.0) {
            return Err(Error::Config(format!(
                "band edges must satisfy 0 < {low_hz} < {high_hz} < {}",
                sample_rate / 2.0
            )));
        }

        let fs2 = 2.0 * sample_rate;
        // Prewarped analog band edges and derived center/bandwidth.
        let w_lo = fs2 * (core::f64::consts::PI * low_hz / sample_rate).tan();
        let w_hi = fs2 * (core::f64::consts::PI * high_hz / sample_rate).tan();
        let w0sq = w_lo * w_hi;
        let bw = w_hi - w_lo;

        // Butterworth low-pass prototype poles on the unit circle's left
        // half; keep one of each conjugate pair (Im >= 0).
        let n = order as f64;
        let mut proto: Vec<C> = Vec::new();
        for k in 0..order {
            let theta = core::f64::consts::PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            let p = C::new(theta.cos(), theta.sin());
            if p.im > 1e-12 || (p.im.abs() <= 1e-12 && !proto.iter().any(|q| q.im.abs() <= 1e-12))
            {
                proto.push(C::new(p.re, p.im.max(0.0)));
            }
        }

        // Low-pass to band-pass: each prototype pole p yields the two roots
        // of s^2 - (bw p) s + w0^2 = 0. The real prototype pole's two roots
        // (a real pair for wide bands, a conjugate pair for narrow ones)
        // share a single section. A complex prototype pole's two roots each
        // head their own section, paired with the conjugates that arise from
        // the skipped conjugate prototype pole.
        let mut denominators: Vec<(f64, f64)> = Vec::new();
        for p in proto {
            let half = p.scale(bw / 2.0);
            let disc = half.mul(half).sub(C::new(w0sq, 0.0)).sqrt();
            let s_a = half.add(disc);
            let s_b = half.sub(disc);
            if p.im.abs() <= 1e-12 {
                let z_a = bilinear(s_a, fs2);
                let z_b = bilinear(s_b, fs2);
                let sum = z_a.add(z_b);
                let prod = z_a.mul(z_b);
                denominators.push((-sum.re, prod.re));
            } else {
                for s in [s_a, s_b] {
                    let zp = bilinear(s, fs2);
                    denominators.push((-2.0 * zp.re, zp.re * zp.re + zp.im * zp.im));
                }
            }
        }

        // Digital center frequency (image of the analog center through the
        // bilinear map) where each section is normalized to unit gain.
        let omega_c = 2.0 * (w0sq.sqrt() / fs2).atan();
        let z0 = C::new(omega_c.cos(), omega_c.sin());

        let mut sections = Vec::with_capacity(denominators.len());
        for (a1, a2) in denominators {
            // Unnormalized section H(z) = (1 - z^-2) / (1 + a1 z^-1 + a2 z^-2);
            // evaluate at z0 and scale to unit gain there.
            let z0_inv = C::new(z0.re, -z0.im);
            let z0_inv2 = z0_inv.mul(z0_inv);
            let num = C::new(1.0, 0.0).sub(z0_inv2);
            let den = C::new(1.0, 0.0)
                .add(z0_inv.scale(a1))
                .add(z0_inv2.scale(a2));
            let gain = 1.0 / num.div(den).abs();
            sections.push(Biquad {
                b: [
                    T::from_f64_lossy(gain),
                    T::zero(),
                    T::from_f64_lossy(-gain),
                ],
                a: [T::from_f64_lossy(a1), T::from_f64_lossy(a2)],
            });
        }

        Ok(Self { sections })
    }

    /// Number of cascaded biquad sections.
    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    /// Causally filters a channel, returning a new buffer.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = x.to_vec();
        self.apply_in_place(&mut y);
        y
    }

    /// Causally filters a channel in place.
    pub fn apply_in_place(&self, x: &mut [T]) {
        for section in &self.sections {
            let mut state = [T::zero(), T::zero()];
            for v in x.iter_mut() {
                *v = section.step(*v, &mut state);
            }
        }
    }

    /// Magnitude response |H| at the given frequency (Hz).
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let omega = 2.0 * core::f64::consts::PI * freq_hz / sample_rate;
        let z_inv = C::new(omega.cos(), -omega.sin());
        let z_inv2 = z_inv.mul(z_inv);
        let mut h = C::new(1.0, 0.0);
        for s in &self.sections {
            let b: Vec<f64> = s.b.iter().map(|v| v.to_f64_lossy()).collect();
            let a: Vec<f64> = s.a.iter().map(|v| v.to_f64_lossy()).collect();
            let num = C::new(b[0], 0.0)
                .add(z_inv.scale(b[1]))
                .add(z_inv2.scale(b[2]));
            let den = C::new(1.0, 0.0)
                .add(z_inv.scale(a[0]))
                .add(z_inv2.scale(a[1]));
            h = h.mul(num.div(den));
        }
        h.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> SosFilter<f64> {
        SosFilter::butterworth_bandpass(3, 300.0, 3000.0, 10_000.0).unwrap()
    }

    #[test]
    fn three_sections_for_third_order() {
        assert_eq!(design().section_count(), 3);
    }

    #[test]
    fn band_edges_sit_at_minus_3_db() {
        let f = design();
        let half = 1.0 / 2.0f64.sqrt();
        assert!((f.magnitude_at(300.0, 10_000.0) - half).abs() < 1e-9);
        assert!((f.magnitude_at(3000.0, 10_000.0) - half).abs() < 1e-9);
    }

    #[test]
    fn passband_center_near_unity() {
        let f = design();
        assert!(f.magnitude_at(1000.0, 10_000.0) > 0.999);
    }

    #[test]
    fn dc_fully_rejected() {
        let f = design();
        assert!(f.magnitude_at(0.0, 10_000.0) < 1e-12);
        let constant = vec![100.0f64; 2000];
        let y = f.apply(&constant);
        // Transient decays; the tail must be essentially zero.
        let tail_max = y[1500..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(tail_max < 1e-3, "tail {tail_max}");
    }

    #[test]
    fn sinusoid_in_band_preserved_within_3_db() {
        let f = design();
        let fs = 10_000.0;
        let x: Vec<f64> = (0..4000)
            .map(|i| (2.0 * core::f64::consts::PI * 1000.0 * i as f64 / fs).sin())
            .collect();
        let y = f.apply(&x);
        let amp = y[2000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(amp > 1.0 / 2.0f64.sqrt() && amp < 1.1, "amp {amp}");
    }

    #[test]
    fn linearity_of_filtering() {
        let f = design();
        let x1: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0).collect();
        let x2: Vec<f64> = (0..500).map(|i| ((i * 61) % 89) as f64 / 44.0 - 1.0).collect();
        let combo: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let y_combo = f.apply(&combo);
        let y1 = f.apply(&x1);
        let y2 = f.apply(&x2);
        for i in 0..500 {
            let expect = 2.0 * y1[i] - 3.0 * y2[i];
            assert!((y_combo[i] - expect).abs() < 1e-9 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn invalid_band_edges_rejected() {
        assert!(SosFilter::<f64>::butterworth_bandpass(3, 3000.0, 300.0, 10_000.0).is_err());
        assert!(SosFilter::<f64>::butterworth_bandpass(3, 300.0, 6000.0, 10_000.0).is_err());
        assert!(SosFilter::<f64>::butterworth_bandpass(0, 300.0, 3000.0, 10_000.0).is_err());
    }
}
