//! ±1 vectors and the small helpers shared by every module.

use std::fmt;
use std::ops::{Deref, Neg};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Sign with the tie-break `sgn(0) = +1`.
#[inline]
pub fn sgn(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

#[inline]
pub(crate) fn sgn_i64(x: i64) -> i8 {
    if x >= 0 {
        1
    } else {
        -1
    }
}

/// A finite sequence over {+1, -1}.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidInput(format!("spin value {bad} is not ±1")));
        }
        Ok(SpinVector(values))
    }

    pub(crate) fn from_raw(values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|&v| v == 1 || v == -1));
        SpinVector(values)
    }

    pub fn all_plus(len: usize) -> Self {
        SpinVector(vec![1; len])
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    /// Leading slice of length `k`.
    pub fn prefix(&self, k: usize) -> Result<SpinVector> {
        if k > self.len() {
            return Err(Error::OutOfRange(format!("prefix length {k} exceeds vector length {}", self.len())));
        }
        Ok(SpinVector(self.0[..k].to_vec()))
    }

    /// Negates the first `k` entries.
    pub fn flip_prefix(&self, k: usize) -> Result<SpinVector> {
        if k > self.len() {
            return Err(Error::OutOfRange(format!("flip count {k} exceeds vector length {}", self.len())));
        }
        let mut out = self.0.clone();
        out[..k].iter_mut().for_each(|v| *v = -*v);
        Ok(SpinVector(out))
    }

    pub fn concat(&self, other: &[i8]) -> SpinVector {
        let mut out = self.0.clone();
        out.extend_from_slice(other);
        SpinVector::from_raw(out)
    }
}

impl Deref for SpinVector {
    type Target = [i8];
    fn deref(&self) -> &[i8] {
        &self.0
    }
}

impl Neg for &SpinVector {
    type Output = SpinVector;
    fn neg(self) -> SpinVector {
        SpinVector(self.0.iter().map(|v| -v).collect())
    }
}

impl Neg for SpinVector {
    type Output = SpinVector;
    fn neg(self) -> SpinVector {
        -&self
    }
}

impl fmt::Display for SpinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for SpinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpinVector({self})")
    }
}

impl FromStr for SpinVector {
    type Err = Error;

    /// Parses a string over `+`/`-`.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::InvalidInput(format!("unexpected spin character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()
            .map(SpinVector)
    }
}

impl TryFrom<String> for SpinVector {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SpinVector> for String {
    fn from(v: SpinVector) -> String {
        v.to_string()
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming(a: &[i8], b: &[i8]) -> Result<usize> {
    check_len(a.len(), b.len())?;
    Ok(hamming_unchecked(a, b))
}

#[inline]
pub(crate) fn hamming_unchecked(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(s: &str) -> SpinVector {
        s.parse().unwrap()
    }

    #[test]
    fn sgn_tie_break() {
        assert_eq!(sgn(3.2), 1);
        assert_eq!(sgn(-3.0), -1);
        assert_eq!(sgn(0.0), 1);
        assert_eq!(sgn_i64(0), 1);
        assert_eq!(sgn_i64(-1), -1);
    }

    #[test]
    fn hamming_examples() {
        let a = sv("+-+--++");
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&a, &-&a).unwrap(), 7);
        assert_eq!(hamming(&sv("++-"), &sv("-++")).unwrap(), 2);
        assert!(matches!(hamming(&sv("++"), &sv("+")), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn prefix_and_flip_prefix() {
        let v = sv("+-+");
        assert_eq!(v.prefix(0).unwrap().len(), 0);
        assert_eq!(v.prefix(3).unwrap(), v);
        assert_eq!(v.prefix(2).unwrap(), sv("+-"));
        assert!(v.prefix(4).is_err());

        assert_eq!(v.flip_prefix(0).unwrap(), v);
        assert_eq!(v.flip_prefix(3).unwrap(), -&v);
        assert_eq!(v.flip_prefix(2).unwrap(), sv("-++"));
        assert!(matches!(v.flip_prefix(4), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn rejects_non_spin_values() {
        assert!(SpinVector::new(vec![1, 0, -1]).is_err());
        assert!("+x".parse::<SpinVector>().is_err());
    }
}
