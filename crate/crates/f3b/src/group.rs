//! Prime-order group abstraction used by every protocol in this crate.
//!
//! The group is ristretto255: prime order `q`, hard DDH, and canonical
//! 32-byte encodings for both scalars and elements. Two fixed generators are
//! exposed: the standard basepoint `g` and a second generator `gbar` obtained
//! by hashing a fixed domain tag to the group, so its discrete log relative
//! to `g` is unknown to everyone. Per-chain generators are derived from a
//! chain label with [`derive_generator`].

use core::fmt;
use core::iter::Sum;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::LazyLock;

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar as DalekScalar;
use curve25519_dalek::traits::{Identity, VartimeMultiscalarMul};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

/// Byte length of the canonical scalar and element encodings.
pub const ENCODED_LEN: usize = 32;

const DOMAIN_HASH_TO_GROUP: &[u8] = b"f3b/v1/hash-to-group";
const DOMAIN_LABEL_GENERATOR: &[u8] = b"f3b/v1/label-generator";
const DOMAIN_GBAR: &[u8] = b"f3b/v1/gbar";

/// Errors from group-level operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("encoding is not a canonical scalar")]
    NonCanonicalScalar,
    #[error("encoding is not a valid group element")]
    InvalidElement,
    #[error("label must be non-empty")]
    EmptyLabel,
    #[error("index {0} is not a member of the interpolation set")]
    IndexNotInSet(u32),
    #[error("interpolation set contains duplicate or zero indices")]
    BadIndexSet,
}

/// Field element mod the group order `q`.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct Scalar(pub(crate) DalekScalar);

impl Scalar {
    pub const ZERO: Scalar = Scalar(DalekScalar::ZERO);
    pub const ONE: Scalar = Scalar(DalekScalar::ONE);

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Scalar(DalekScalar::random(rng))
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(DalekScalar::from(v))
    }

    /// Canonical 32-byte little-endian encoding.
    pub fn to_bytes(&self) -> [u8; ENCODED_LEN] {
        self.0.to_bytes()
    }

    /// Decodes a canonical little-endian scalar, rejecting wrong lengths and
    /// values >= q.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GroupError> {
        let arr: [u8; ENCODED_LEN] =
            bytes.try_into().map_err(|_| GroupError::NonCanonicalScalar)?;
        let s: Option<DalekScalar> = DalekScalar::from_canonical_bytes(arr).into();
        s.map(Scalar).ok_or(GroupError::NonCanonicalScalar)
    }

    /// `[1, x, x^2, ..., x^{count-1}]`.
    pub fn powers(&self, count: usize) -> Vec<Scalar> {
        let mut out = Vec::with_capacity(count);
        let mut p = Scalar::ONE;
        for _ in 0..count {
            out.push(p);
            p = p * *self;
        }
        out
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn invert(&self) -> Option<Self> {
        if self.0 == DalekScalar::ZERO {
            None
        } else {
            Some(Scalar(self.0.invert()))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0 == DalekScalar::ZERO
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", hex_str(&self.to_bytes()))
    }
}

/// Element of the prime-order group.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct GroupElement(pub(crate) RistrettoPoint);

static GBAR: LazyLock<GroupElement> = LazyLock::new(|| hash_to_group(DOMAIN_GBAR, &[]));

impl GroupElement {
    /// The fixed generator `g`.
    pub fn generator() -> Self {
        GroupElement(RISTRETTO_BASEPOINT_POINT)
    }

    /// The second fixed generator `gbar`, with unknown discrete log w.r.t. `g`.
    pub fn gbar() -> Self {
        *GBAR
    }

    pub fn identity() -> Self {
        GroupElement(RistrettoPoint::identity())
    }

    pub fn is_identity(&self) -> bool {
        self.0 == RistrettoPoint::identity()
    }

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        GroupElement(RistrettoPoint::random(rng))
    }

    /// `g^s` for the fixed generator.
    pub fn mul_base(s: &Scalar) -> Self {
        GroupElement(RISTRETTO_BASEPOINT_POINT * s.0)
    }

    /// Canonical 32-byte compressed encoding.
    pub fn to_bytes(&self) -> [u8; ENCODED_LEN] {
        self.0.compress().to_bytes()
    }

    /// Decodes a compressed element. Rejects wrong lengths, non-canonical
    /// encodings, and anything outside the prime-order group.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GroupError> {
        CompressedRistretto::from_slice(bytes)
            .ok()
            .and_then(|c| c.decompress())
            .map(GroupElement)
            .ok_or(GroupError::InvalidElement)
    }

    /// Variable-time multiscalar multiplication `sum_i s_i * P_i`.
    ///
    /// Verification and combination paths only; never used with secret data
    /// beyond what the caller already treats as public.
    pub fn msm(scalars: &[Scalar], points: &[GroupElement]) -> Self {
        debug_assert_eq!(scalars.len(), points.len());
        GroupElement(RistrettoPoint::vartime_multiscalar_mul(
            scalars.iter().map(|s| s.0),
            points.iter().map(|p| p.0),
        ))
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({})", hex_str(&self.to_bytes()))
    }
}

fn hex_str(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        use fmt::Write;
        let _ = write!(s, "{b:02x}");
    }
    s
}

// Scalar arithmetic.

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}
impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.0 += rhs.0;
    }
}
impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}
impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        self.0 -= rhs.0;
    }
}
impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}
impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}
impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, |acc, s| acc + s)
    }
}

// Group operation (written additively) and exponentiation (scalar mul).

impl Add for GroupElement {
    type Output = GroupElement;
    fn add(self, rhs: GroupElement) -> GroupElement {
        GroupElement(self.0 + rhs.0)
    }
}
impl AddAssign for GroupElement {
    fn add_assign(&mut self, rhs: GroupElement) {
        self.0 += rhs.0;
    }
}
impl Sub for GroupElement {
    type Output = GroupElement;
    fn sub(self, rhs: GroupElement) -> GroupElement {
        GroupElement(self.0 - rhs.0)
    }
}
impl Neg for GroupElement {
    type Output = GroupElement;
    fn neg(self) -> GroupElement {
        GroupElement(-self.0)
    }
}
impl Mul<Scalar> for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: Scalar) -> GroupElement {
        GroupElement(self.0 * rhs.0)
    }
}
impl Sum for GroupElement {
    fn sum<I: Iterator<Item = GroupElement>>(iter: I) -> GroupElement {
        iter.fold(GroupElement::identity(), |acc, p| acc + p)
    }
}

/// Byte string identifying the target chain; bound into every ciphertext and
/// deal to stop cross-chain replay.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Label(Vec<u8>);

impl Label {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, GroupError> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(GroupError::EmptyLabel);
        }
        Ok(Label(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Incremental, length-framed transcript hash with codomain Z_q.
///
/// Every input is framed with a type byte and an 8-byte length so that
/// distinct input sequences never collide under concatenation.
pub struct ScalarHash {
    hasher: Sha512,
}

const FRAME_POINT: u8 = 0x01;
const FRAME_BYTES: u8 = 0x02;
const FRAME_U64: u8 = 0x03;

impl ScalarHash {
    pub fn new(domain_tag: &[u8]) -> Self {
        let mut hasher = Sha512::new();
        hasher.update((domain_tag.len() as u64).to_le_bytes());
        hasher.update(domain_tag);
        ScalarHash { hasher }
    }

    pub fn point(mut self, p: &GroupElement) -> Self {
        self.hasher.update([FRAME_POINT]);
        self.hasher.update(p.to_bytes());
        self
    }

    pub fn bytes(mut self, b: &[u8]) -> Self {
        self.hasher.update([FRAME_BYTES]);
        self.hasher.update((b.len() as u64).to_le_bytes());
        self.hasher.update(b);
        self
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.hasher.update([FRAME_U64]);
        self.hasher.update(v.to_le_bytes());
        self
    }

    /// Reduces the 64-byte digest mod q; output is uniform in Z_q.
    pub fn finalize(self) -> Scalar {
        let wide: [u8; 64] = self.hasher.finalize().into();
        Scalar(DalekScalar::from_bytes_mod_order_wide(&wide))
    }
}

/// Deterministic hash of `data` to a uniform-looking group element.
pub fn hash_to_group(domain_tag: &[u8], data: &[u8]) -> GroupElement {
    let mut hasher = Sha512::new();
    hasher.update((DOMAIN_HASH_TO_GROUP.len() as u64).to_le_bytes());
    hasher.update(DOMAIN_HASH_TO_GROUP);
    hasher.update((domain_tag.len() as u64).to_le_bytes());
    hasher.update(domain_tag);
    hasher.update((data.len() as u64).to_le_bytes());
    hasher.update(data);
    let wide: [u8; 64] = hasher.finalize().into();
    GroupElement(RistrettoPoint::from_uniform_bytes(&wide))
}

/// Derives the per-chain generator `h` from a chain label.
///
/// The output is an element of unknown discrete log relative to `g`, stable
/// across processes.
pub fn derive_generator(label: &Label) -> GroupElement {
    hash_to_group(DOMAIN_LABEL_GENERATOR, label.as_bytes())
}

/// Lagrange coefficient for index `i` within `index_set`, evaluated at x = 0:
/// `lambda_i = prod_{j != i} j * (j - i)^-1 mod q`.
pub fn lagrange_coefficient(index_set: &[u32], i: u32) -> Result<Scalar, GroupError> {
    check_index_set(index_set)?;
    if !index_set.contains(&i) {
        return Err(GroupError::IndexNotInSet(i));
    }
    let xi = Scalar::from_u64(u64::from(i));
    let mut num = Scalar::ONE;
    let mut den = Scalar::ONE;
    for &j in index_set {
        if j == i {
            continue;
        }
        let xj = Scalar::from_u64(u64::from(j));
        num = num * xj;
        den = den * (xj - xi);
    }
    // den is a product of non-zero factors (indices are distinct).
    Ok(num * den.invert().expect("non-zero denominator"))
}

/// All Lagrange coefficients for `index_set` at x = 0, in set order.
pub fn lagrange_coefficients(index_set: &[u32]) -> Result<Vec<Scalar>, GroupError> {
    index_set
        .iter()
        .map(|&i| lagrange_coefficient(index_set, i))
        .collect()
}

/// Evaluates a committed polynomial in the exponent:
/// given `commitments[j] = base^{a_j}`, returns `base^{p(index)}` where
/// `p(x) = sum_j a_j x^j`.
pub fn eval_committed_polynomial(commitments: &[GroupElement], index: u32) -> GroupElement {
    let powers = Scalar::from_u64(u64::from(index)).powers(commitments.len());
    GroupElement::msm(&powers, commitments)
}

fn check_index_set(index_set: &[u32]) -> Result<(), GroupError> {
    if index_set.is_empty() || index_set.contains(&0) {
        return Err(GroupError::BadIndexSet);
    }
    let mut seen = std::collections::BTreeSet::new();
    for &j in index_set {
        if !seen.insert(j) {
            return Err(GroupError::BadIndexSet);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn rng() -> StdRng {
        StdRng::seed_from_u64(0x5eed)
    }

    #[test]
    fn scalar_encoding_roundtrip() {
        let mut r = rng();
        for _ in 0..32 {
            let s = Scalar::random(&mut r);
            let back = Scalar::from_bytes(&s.to_bytes()).unwrap();
            assert_eq!(s, back);
        }
    }

    #[test]
    fn scalar_rejects_non_canonical() {
        // q - 1 is canonical, q and above are not; all-0xff is far above q.
        let bytes = [0xffu8; 32];
        assert_eq!(
            Scalar::from_bytes(&bytes),
            Err(GroupError::NonCanonicalScalar)
        );
    }

    #[test]
    fn element_encoding_roundtrip_and_reject() {
        let mut r = rng();
        for _ in 0..32 {
            let p = GroupElement::random(&mut r);
            let back = GroupElement::from_bytes(&p.to_bytes()).unwrap();
            assert_eq!(p, back);
        }
        // Flipping the top bit of a valid encoding is not canonical ristretto.
        let mut bad = GroupElement::generator().to_bytes();
        bad[31] |= 0x80;
        assert_eq!(
            GroupElement::from_bytes(&bad),
            Err(GroupError::InvalidElement)
        );
    }

    #[test]
    fn distributivity_over_scalar_addition() {
        let mut r = rng();
        for _ in 0..16 {
            let a = Scalar::random(&mut r);
            let b = Scalar::random(&mut r);
            let p = GroupElement::random(&mut r);
            assert_eq!(p * (a + b), p * a + p * b);
        }
    }

    #[test]
    fn derive_generator_is_deterministic_and_label_sensitive() {
        let la = Label::new(b"chain-A".to_vec()).unwrap();
        let lb = Label::new(b"chain-B".to_vec()).unwrap();
        assert_eq!(derive_generator(&la), derive_generator(&la));
        assert_ne!(derive_generator(&la), derive_generator(&lb));
        assert_ne!(derive_generator(&la), GroupElement::generator());
        assert!(!derive_generator(&la).is_identity());
    }

    #[test]
    fn derive_generator_golden_vector() {
        // Pinned so that any change to the hash-to-group construction is loud.
        let label = Label::new(b"chain-A".to_vec()).unwrap();
        let got = hex::encode(derive_generator(&label).to_bytes());
        assert_eq!(
            got,
            "fe4ad8e185b591e460543d0ec8d81e881ec44cebaefdbd225fbec0ccb5fd2503"
        );
    }

    #[test]
    fn gbar_differs_from_g() {
        assert_ne!(GroupElement::gbar(), GroupElement::generator());
        assert!(!GroupElement::gbar().is_identity());
    }

    #[test]
    fn empty_label_rejected() {
        assert_eq!(Label::new(Vec::new()), Err(GroupError::EmptyLabel));
    }

    #[test]
    fn scalar_hash_determinism_and_sensitivity() {
        let mut r = rng();
        let p = GroupElement::random(&mut r);
        let q = GroupElement::random(&mut r);

        let h1 = ScalarHash::new(b"tag").point(&p).point(&q).finalize();
        let h2 = ScalarHash::new(b"tag").point(&p).point(&q).finalize();
        assert_eq!(h1, h2);

        let swapped = ScalarHash::new(b"tag").point(&q).point(&p).finalize();
        assert_ne!(h1, swapped);

        let other_tag = ScalarHash::new(b"tag2").point(&p).point(&q).finalize();
        assert_ne!(h1, other_tag);
    }

    #[test]
    fn scalar_hash_framing_prevents_concatenation_ambiguity() {
        let a = ScalarHash::new(b"t").bytes(b"ab").bytes(b"c").finalize();
        let b = ScalarHash::new(b"t").bytes(b"a").bytes(b"bc").finalize();
        assert_ne!(a, b);
    }

    #[test]
    fn lagrange_single_share() {
        assert_eq!(lagrange_coefficient(&[1], 1).unwrap(), Scalar::ONE);
    }

    #[test]
    fn lagrange_two_points_hand_values() {
        // Line through x = 1, 2 evaluated at 0: lambda_1 = 2, lambda_2 = -1.
        let s = [1u32, 2];
        assert_eq!(lagrange_coefficient(&s, 1).unwrap(), Scalar::from_u64(2));
        assert_eq!(lagrange_coefficient(&s, 2).unwrap(), -Scalar::ONE);
    }

    #[test]
    fn lagrange_rejects_outside_index() {
        assert_eq!(
            lagrange_coefficient(&[1, 2], 3),
            Err(GroupError::IndexNotInSet(3))
        );
        assert_eq!(lagrange_coefficient(&[1, 1], 1), Err(GroupError::BadIndexSet));
        assert_eq!(lagrange_coefficient(&[0, 1], 1), Err(GroupError::BadIndexSet));
    }

    #[test]
    fn lagrange_interpolates_random_polynomials() {
        // Independent oracle: evaluate a random polynomial directly, then
        // check that sum lambda_i * s(i) recovers s(0) for assorted sets.
        let mut r = rng();
        for t in 1..=5usize {
            let coeffs: Vec<Scalar> = (0..t).map(|_| Scalar::random(&mut r)).collect();
            let eval = |x: u64| {
                let mut acc = Scalar::ZERO;
                for c in coeffs.iter().rev() {
                    acc = acc * Scalar::from_u64(x) + *c;
                }
                acc
            };
            let set: Vec<u32> = (1..=t as u32).map(|i| i * 3 + 1).collect();
            let mut acc = Scalar::ZERO;
            for &i in &set {
                acc += lagrange_coefficient(&set, i).unwrap() * eval(u64::from(i));
            }
            assert_eq!(acc, coeffs[0]);
        }
    }
}
