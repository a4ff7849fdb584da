//! Shamir (t, n) secret sharing over Z_q.
//!
//! Plain sharing only: polynomial sampling, evaluation and interpolation.
//! Verifiability lives in [`crate::pvss`] and [`crate::dkg`]; this module is
//! also the interpolation oracle used by their tests.

use rand::{CryptoRng, RngCore};

use crate::group::{lagrange_coefficient, GroupError, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SssError {
    #[error("threshold must be at least 1")]
    ThresholdTooSmall,
    #[error("share index 0 would reveal the secret")]
    ZeroIndex,
    #[error("shares carry duplicate indices")]
    DuplicateIndex,
    #[error("no shares supplied")]
    Empty,
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Secret-sharing polynomial `s(x) = a_0 + a_1 x + ... + a_{t-1} x^{t-1}`.
///
/// `a_0` is the shared secret; the degree bound is `t - 1`.
#[derive(Clone)]
pub struct Polynomial {
    coefficients: Vec<Scalar>,
}

/// One evaluation `(i, s(i))`, `i >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Share {
    pub index: u32,
    pub value: Scalar,
}

impl Polynomial {
    /// Samples a degree-(t-1) polynomial with `a_0 = secret` (or a fresh
    /// uniform secret when `None`).
    pub fn sample<R: RngCore + CryptoRng>(
        t: usize,
        secret: Option<Scalar>,
        rng: &mut R,
    ) -> Result<Self, SssError> {
        if t < 1 {
            return Err(SssError::ThresholdTooSmall);
        }
        let mut coefficients = Vec::with_capacity(t);
        coefficients.push(secret.unwrap_or_else(|| Scalar::random(rng)));
        for _ in 1..t {
            coefficients.push(Scalar::random(rng));
        }
        Ok(Polynomial { coefficients })
    }

    pub fn threshold(&self) -> usize {
        self.coefficients.len()
    }

    pub fn secret(&self) -> Scalar {
        self.coefficients[0]
    }

    pub fn coefficients(&self) -> &[Scalar] {
        &self.coefficients
    }

    /// Horner evaluation at `index`; index 0 is refused because s(0) is the
    /// secret itself.
    pub fn eval(&self, index: u32) -> Result<Share, SssError> {
        if index == 0 {
            return Err(SssError::ZeroIndex);
        }
        Ok(Share {
            index,
            value: eval_at(&self.coefficients, Scalar::from_u64(u64::from(index))),
        })
    }
}

pub(crate) fn eval_at(coefficients: &[Scalar], x: Scalar) -> Scalar {
    let mut acc = Scalar::ZERO;
    for c in coefficients.iter().rev() {
        acc = acc * x + *c;
    }
    acc
}

/// Lagrange interpolation of `s(0)` from the given shares.
///
/// Does not know the dealer's threshold; callers are responsible for passing
/// at least `t` consistent shares.
pub fn interpolate_at_zero(shares: &[Share]) -> Result<Scalar, SssError> {
    if shares.is_empty() {
        return Err(SssError::Empty);
    }
    let indices: Vec<u32> = shares.iter().map(|s| s.index).collect();
    let mut seen = std::collections::BTreeSet::new();
    for &i in &indices {
        if !seen.insert(i) {
            return Err(SssError::DuplicateIndex);
        }
    }
    let mut acc = Scalar::ZERO;
    for share in shares {
        acc += lagrange_coefficient(&indices, share.index)? * share.value;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn rng() -> StdRng {
        StdRng::seed_from_u64(7)
    }

    #[test]
    fn constant_polynomial_shares_are_the_secret() {
        let mut r = rng();
        let poly = Polynomial::sample(1, Some(Scalar::from_u64(7)), &mut r).unwrap();
        assert_eq!(poly.coefficients().len(), 1);
        for i in [1u32, 5, 9] {
            assert_eq!(poly.eval(i).unwrap().value, Scalar::from_u64(7));
        }
    }

    #[test]
    fn sampling_shape_and_fresh_blinding() {
        let mut r = rng();
        let secret = Scalar::from_u64(42);
        let a = Polynomial::sample(3, Some(secret), &mut r).unwrap();
        let b = Polynomial::sample(3, Some(secret), &mut r).unwrap();
        assert_eq!(a.threshold(), 3);
        assert_eq!(a.secret(), secret);
        assert_eq!(b.secret(), secret);
        assert_ne!(a.coefficients()[1..], b.coefficients()[1..]);
        assert!(Polynomial::sample(0, None, &mut r).is_err());
    }

    #[test]
    fn eval_hand_values() {
        let mk = |coeffs: &[u64]| Polynomial {
            coefficients: coeffs.iter().map(|&c| Scalar::from_u64(c)).collect(),
        };
        // 1 + 1*x at x = 2 -> 3
        assert_eq!(mk(&[1, 1]).eval(2).unwrap().value, Scalar::from_u64(3));
        // 0 + x + x^2 at x = 2 -> 6
        assert_eq!(mk(&[0, 1, 1]).eval(2).unwrap().value, Scalar::from_u64(6));
        // constant 5 anywhere -> 5
        assert_eq!(mk(&[5]).eval(9).unwrap().value, Scalar::from_u64(5));
        assert_eq!(mk(&[5]).eval(0), Err(SssError::ZeroIndex));
    }

    #[test]
    fn interpolate_hand_values() {
        // Constant polynomial.
        let shares = [
            Share { index: 1, value: Scalar::from_u64(5) },
            Share { index: 2, value: Scalar::from_u64(5) },
        ];
        assert_eq!(interpolate_at_zero(&shares).unwrap(), Scalar::from_u64(5));

        // Line 3 + 4x sampled at x = 1 and x = 3: values 7 and 15 -> s(0) = 3.
        let shares = [
            Share { index: 1, value: Scalar::from_u64(7) },
            Share { index: 3, value: Scalar::from_u64(15) },
        ];
        assert_eq!(interpolate_at_zero(&shares).unwrap(), Scalar::from_u64(3));

        let dup = [
            Share { index: 2, value: Scalar::from_u64(1) },
            Share { index: 2, value: Scalar::from_u64(2) },
        ];
        assert_eq!(interpolate_at_zero(&dup), Err(SssError::DuplicateIndex));
        assert_eq!(interpolate_at_zero(&[]), Err(SssError::Empty));
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        if k > n {
            return out;
        }
        loop {
            out.push(idx.clone());
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if idx[i] != i + n - k {
                    break;
                }
                if i == 0 {
                    return out;
                }
            }
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    #[test]
    fn every_t_subset_recovers_the_secret() {
        let mut r = rng();
        for n in 1..=8u32 {
            let t = (n / 2 + 1) as usize;
            let poly = Polynomial::sample(t, None, &mut r).unwrap();
            let shares: Vec<Share> = (1..=n).map(|i| poly.eval(i).unwrap()).collect();
            for subset in subsets(n as usize, t) {
                let picked: Vec<Share> = subset.iter().map(|&i| shares[i]).collect();
                assert_eq!(interpolate_at_zero(&picked).unwrap(), poly.secret());
            }
        }
    }

    #[test]
    fn undersized_subsets_miss_the_secret() {
        let mut r = rng();
        let t = 4;
        let poly = Polynomial::sample(t, None, &mut r).unwrap();
        let shares: Vec<Share> = (1..=8u32).map(|i| poly.eval(i).unwrap()).collect();
        for _ in 0..100 {
            // Random (t-1)-subset of the 8 shares.
            let mut picked = Vec::new();
            let mut pool: Vec<Share> = shares.clone();
            for _ in 0..t - 1 {
                let k = (rand::Rng::gen_range(&mut r, 0..pool.len() as u32)) as usize;
                picked.push(pool.swap_remove(k));
            }
            assert_ne!(interpolate_at_zero(&picked).unwrap(), poly.secret());
        }
    }
}
