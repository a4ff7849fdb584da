//! Threshold-encryption toolkit for front-running protection.
//!
//! A sender encrypts a transaction under a symmetric key and places that key
//! in the custody of an n-trustee committee; the committee releases it only
//! once the transaction's position on chain is final, so nobody can act on
//! the contents while ordering is still malleable. Two interchangeable
//! protocols protect the key:
//!
//! * [`tdh2`] — threshold encryption against a long-lived committee key
//!   (constant-size ciphertexts; committee runs [`dkg`] once per epoch);
//! * [`pvss`] — per-transaction publicly verifiable secret sharing
//!   (no committee setup; ciphertext grows with the roster).
//!
//! [`group`] supplies the prime-order group, [`sss`] the polynomial secret
//! sharing both protocols build on, and [`aead`] the symmetric layer that
//! carries the actual transaction bytes.

pub mod aead;
pub mod dkg;
pub mod group;
pub mod pvss;
pub mod sss;
pub mod tdh2;
