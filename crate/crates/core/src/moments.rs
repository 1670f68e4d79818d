//! Centered second moments of a paired sample.

use crate::scalar::Real;
use crate::scenario::Triple;

/// Means and centered cross-product sums of `(x, y, y_next)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments<T> {
    pub n: usize,
    pub mean_x: T,
    pub mean_y: T,
    pub mean_yn: T,
    pub sxx: T,
    pub syy: T,
    pub snn: T,
    pub sxy: T,
    pub sxn: T,
    pub syn: T,
    /// Column is constant (exactly), so its variance is zero.
    pub constant_x: bool,
    pub constant_y: bool,
    pub constant_yn: bool,
}

impl<T: Real> SampleMoments<T> {
    /// Two passes: means, then centered sums.
    pub fn from_triples(triples: &[Triple<T>]) -> Self {
        let n = triples.len();
        let zero = T::zero();
        if n == 0 {
            return SampleMoments {
                n,
                mean_x: zero,
                mean_y: zero,
                mean_yn: zero,
                sxx: zero,
                syy: zero,
                snn: zero,
                sxy: zero,
                sxn: zero,
                syn: zero,
                constant_x: true,
                constant_y: true,
                constant_yn: true,
            };
        }
        let (mut sx, mut sy, mut sn) = (zero, zero, zero);
        let first = triples[0];
        let (mut cx, mut cy, mut cn) = (true, true, true);
        for t in triples {
            sx = sx + t.x;
            sy = sy + t.y;
            sn = sn + t.y_next;
            cx &= t.x == first.x;
            cy &= t.y == first.y;
            cn &= t.y_next == first.y_next;
        }
        let nf = T::from_usize_lossy(n);
        let (mx, my, mn) = (sx / nf, sy / nf, sn / nf);
        let (mut sxx, mut syy, mut snn, mut sxy, mut sxn, mut syn) = (zero, zero, zero, zero, zero, zero);
        for t in triples {
            let dx = t.x - mx;
            let dy = t.y - my;
            let dn = t.y_next - mn;
            sxx = sxx + dx * dx;
            syy = syy + dy * dy;
            snn = snn + dn * dn;
            sxy = sxy + dx * dy;
            sxn = sxn + dx * dn;
            syn = syn + dy * dn;
        }
        SampleMoments {
            n,
            mean_x: mx,
            mean_y: my,
            mean_yn: mn,
            sxx: if cx { zero } else { sxx },
            syy: if cy { zero } else { syy },
            snn: if cn { zero } else { snn },
            sxy,
            sxn,
            syn,
            constant_x: cx,
            constant_y: cy,
            constant_yn: cn,
        }
    }

    /// Pearson correlation of two centered columns, clamped into [-1, 1].
    pub fn pearson(sab: T, saa: T, sbb: T) -> T {
        let r = sab / (saa * sbb).sqrt();
        r.max(-T::one()).min(T::one())
    }

    /// ρ(x_t, y_{t+τ}): the lagged correlation.
    pub fn rho_lagged(&self) -> T {
        Self::pearson(self.sxn, self.sxx, self.snn)
    }

    /// ρ(x_t, y_t): contemporaneous correlation.
    pub fn rho_contemporaneous(&self) -> T {
        Self::pearson(self.sxy, self.sxx, self.syy)
    }

    /// ρ(y_t, y_{t+τ}): lagger autocorrelation.
    pub fn rho_auto(&self) -> T {
        Self::pearson(self.syn, self.syy, self.snn)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_has_exact_zero_variance() {
        let t: Vec<Triple<f64>> = (0..7).map(|k| Triple { x: 0.1, y: k as f64, y_next: 2.0 * k as f64 }).collect();
        let m = SampleMoments::from_triples(&t);
        assert!(m.constant_x && !m.constant_y);
        assert_eq!(m.sxx, 0.0);
        assert!((m.rho_auto() - 1.0).abs() < 1e-15);
    }
}
