//! Token spaces: alphabets, lengths, and the bijective integer↔token codec.
//!
//! A [`TokenSpace`] is the set of all syntactically valid tokens for a given
//! alphabet and length, optionally with a fixed leading character (e.g. the
//! 7-character spaces whose first character is pinned to `1`, leaving an
//! effective 6 characters of search). Cardinality arithmetic is exact big
//! integers throughout; approximate figures are produced by rounding the
//! exact value, never by computing in floating point first.
//!
//! Encoding is fixed-width, big-endian positional: index 0 is the all-lowest
//! token, alphabet position 0 pads, and index order equals lexicographic
//! token order under the alphabet order.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

/// The conventional short-URL alphabet, in this fixed order.
pub const BASE62_ALPHABET: &str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("alphabet needs at least two distinct characters, got {0}")]
    AlphabetTooSmall(usize),
    #[error("alphabet contains duplicate character {0:?}")]
    DuplicateChar(char),
    #[error("alphabet character {0:?} is not printable ASCII")]
    NonAsciiChar(char),
    #[error("token length must be at least 1")]
    ZeroLength,
    #[error("a prefixed space needs length >= 2 so at least one position stays free")]
    PrefixConsumesSpace,
    #[error("index {index} out of range for a space of {cardinality} tokens")]
    IndexOutOfRange { index: BigUint, cardinality: BigUint },
    #[error("family members must have distinct token lengths (duplicate length {0})")]
    DuplicateLength(usize),
    #[error("a family needs at least one member space")]
    EmptyFamily,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenParseError {
    #[error("expected a token of length {expected}, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("invalid character {ch:?} at position {pos}")]
    InvalidChar { pos: usize, ch: char },
    #[error("expected fixed prefix {expected:?} at position 0, found {got:?}")]
    PrefixMismatch { expected: char, got: char },
    #[error("token length {0} does not match any space in the family")]
    NoMatchingSpace(usize),
}

/// An alphabet plus token length, with an optional fixed leading character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpace {
    alphabet: String,
    // Position of each ASCII byte in the alphabet; 0xFF = not a member.
    positions: [u8; 128],
    length: usize,
    prefix: Option<char>,
}

impl TokenSpace {
    pub fn new(alphabet: &str, length: usize) -> Result<Self, SpaceError> {
        Self::build(alphabet, length, None)
    }

    /// A space whose first character is fixed, reducing the effective
    /// length by one.
    pub fn with_prefix(alphabet: &str, length: usize, prefix: char) -> Result<Self, SpaceError> {
        Self::build(alphabet, length, Some(prefix))
    }

    /// Tokens of `length` over [`BASE62_ALPHABET`].
    pub fn base62(length: usize) -> Self {
        Self::new(BASE62_ALPHABET, length).expect("base62 alphabet is valid")
    }

    /// Base62 tokens of `length` with a fixed leading character.
    pub fn base62_prefixed(length: usize, prefix: char) -> Self {
        Self::with_prefix(BASE62_ALPHABET, length, prefix).expect("base62 alphabet is valid")
    }

    fn build(alphabet: &str, length: usize, prefix: Option<char>) -> Result<Self, SpaceError> {
        if length == 0 {
            return Err(SpaceError::ZeroLength);
        }
        if prefix.is_some() && length < 2 {
            return Err(SpaceError::PrefixConsumesSpace);
        }
        let mut positions = [0xFFu8; 128];
        let mut count = 0usize;
        for c in alphabet.chars() {
            if !c.is_ascii_graphic() {
                return Err(SpaceError::NonAsciiChar(c));
            }
            let slot = &mut positions[c as usize];
            if *slot != 0xFF {
                return Err(SpaceError::DuplicateChar(c));
            }
            *slot = count as u8;
            count += 1;
        }
        if count < 2 {
            return Err(SpaceError::AlphabetTooSmall(count));
        }
        if let Some(p) = prefix {
            if !p.is_ascii_graphic() {
                return Err(SpaceError::NonAsciiChar(p));
            }
        }
        Ok(Self {
            alphabet: alphabet.to_string(),
            positions,
            length,
            prefix,
        })
    }

    pub fn alphabet(&self) -> &str {
        &self.alphabet
    }

    pub fn base(&self) -> usize {
        self.alphabet.len()
    }

    /// Full token length, including the fixed prefix when present.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn prefix(&self) -> Option<char> {
        self.prefix
    }

    /// Number of freely chosen positions.
    pub fn effective_length(&self) -> usize {
        self.length - usize::from(self.prefix.is_some())
    }

    /// Exact number of tokens: `base ^ effective_length`.
    pub fn cardinality(&self) -> BigUint {
        BigUint::from(self.base()).pow(self.effective_length() as u32)
    }

    /// Cardinality when it fits the permutation-friendly u128 range.
    pub fn cardinality_u128(&self) -> Option<u128> {
        self.cardinality().to_u128()
    }

    /// Paper-style approximate display of the cardinality, two significant
    /// figures rounded up (a search space is never understated): `5.7e10`.
    pub fn cardinality_display(&self) -> String {
        crate::numeric::sci2_ceil(&self.cardinality())
    }

    /// log2 of the cardinality — the "bits of search" a scanner faces.
    pub fn bits_of_search(&self) -> f64 {
        log2_biguint(&self.cardinality())
    }

    /// Fixed-width big-endian encoding of `index`.
    pub fn encode(&self, index: &BigUint) -> Result<String, SpaceError> {
        if let (Some(i), Some(_)) = (index.to_u128(), self.cardinality_u128()) {
            return self.encode_u128(i);
        }
        let cardinality = self.cardinality();
        if *index >= cardinality {
            return Err(SpaceError::IndexOutOfRange {
                index: index.clone(),
                cardinality,
            });
        }
        let bytes = self.alphabet.as_bytes();
        let base = BigUint::from(self.base());
        let mut out = vec![bytes[0]; self.effective_length()];
        let mut rem = index.clone();
        for slot in out.iter_mut().rev() {
            if rem.is_zero() {
                break;
            }
            let (q, r) = rem.div_rem(&base);
            *slot = bytes[r.to_usize().expect("digit < base")];
            rem = q;
        }
        Ok(self.finish_token(out))
    }

    /// u128 fast path for hot loops (sampling, exhaustive scans).
    pub fn encode_u128(&self, index: u128) -> Result<String, SpaceError> {
        match self.cardinality_u128() {
            Some(cardinality) if index < cardinality => {}
            _ => {
                let cardinality = self.cardinality();
                if BigUint::from(index) < cardinality {
                    // Space larger than u128: fall through to big encoding.
                    return self.encode(&BigUint::from(index));
                }
                return Err(SpaceError::IndexOutOfRange {
                    index: BigUint::from(index),
                    cardinality,
                });
            }
        }
        let bytes = self.alphabet.as_bytes();
        let base = self.base() as u128;
        let mut out = vec![bytes[0]; self.effective_length()];
        let mut rem = index;
        for slot in out.iter_mut().rev() {
            if rem == 0 {
                break;
            }
            *slot = bytes[(rem % base) as usize];
            rem /= base;
        }
        Ok(self.finish_token(out))
    }

    fn finish_token(&self, digits: Vec<u8>) -> String {
        let mut token = String::with_capacity(self.length);
        if let Some(p) = self.prefix {
            token.push(p);
        }
        token.push_str(std::str::from_utf8(&digits).expect("alphabet is ASCII"));
        token
    }

    /// Exact inverse of [`encode`](Self::encode). Errors identify the
    /// offending position.
    pub fn decode(&self, token: &str) -> Result<BigUint, TokenParseError> {
        let chars: Vec<char> = token.chars().collect();
        if chars.len() != self.length {
            return Err(TokenParseError::WrongLength {
                expected: self.length,
                got: chars.len(),
            });
        }
        let mut chars = chars.into_iter();
        if let Some(expected) = self.prefix {
            let got = chars.next().expect("length >= 1");
            if got != expected {
                return Err(TokenParseError::PrefixMismatch { expected, got });
            }
        }
        let base = BigUint::from(self.base());
        let mut acc = BigUint::zero();
        let offset = usize::from(self.prefix.is_some());
        for (i, ch) in chars.enumerate() {
            let pos = if ch.is_ascii() {
                self.positions[ch as usize]
            } else {
                0xFF
            };
            if pos == 0xFF {
                return Err(TokenParseError::InvalidChar {
                    pos: i + offset,
                    ch,
                });
            }
            acc = acc * &base + BigUint::from(pos);
        }
        Ok(acc)
    }

    /// Whether `token` is syntactically valid for this space.
    pub fn contains(&self, token: &str) -> bool {
        self.decode(token).is_ok()
    }
}

fn log2_biguint(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 53 {
        return n.to_f64().expect("fits f64").log2();
    }
    let shift = bits - 53;
    let top = (n >> shift).to_f64().expect("53 bits fit f64");
    top.log2() + shift as f64
}

/// Several token spaces served side by side by one shortener — e.g. lengths
/// 4 through 7 all resolving at the same host. Members are kept sorted by
/// length and must have distinct lengths; a global index runs across members
/// in length order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceFamily {
    members: Vec<TokenSpace>,
}

impl SpaceFamily {
    pub fn new(mut members: Vec<TokenSpace>) -> Result<Self, SpaceError> {
        if members.is_empty() {
            return Err(SpaceError::EmptyFamily);
        }
        members.sort_by_key(|s| s.length());
        for pair in members.windows(2) {
            if pair[0].length() == pair[1].length() {
                return Err(SpaceError::DuplicateLength(pair[0].length()));
            }
        }
        Ok(Self { members })
    }

    pub fn single(space: TokenSpace) -> Self {
        Self {
            members: vec![space],
        }
    }

    /// The classic bit.ly-style family: base62 lengths 4, 5, 6, plus
    /// 7-character tokens pinned to a leading `1`, so the overall space is
    /// 62^4 + 62^5 + 2·62^6 tokens.
    pub fn bitly_family() -> Self {
        Self::new(vec![
            TokenSpace::base62(4),
            TokenSpace::base62(5),
            TokenSpace::base62(6),
            TokenSpace::base62_prefixed(7, '1'),
        ])
        .expect("lengths are distinct")
    }

    pub fn members(&self) -> &[TokenSpace] {
        &self.members
    }

    /// Exact sum of member cardinalities.
    pub fn cardinality(&self) -> BigUint {
        self.members.iter().map(|s| s.cardinality()).sum()
    }

    pub fn cardinality_u128(&self) -> Option<u128> {
        self.cardinality().to_u128()
    }

    pub fn cardinality_display(&self) -> String {
        crate::numeric::sci2_ceil(&self.cardinality())
    }

    pub fn bits_of_search(&self) -> f64 {
        log2_biguint(&self.cardinality())
    }

    /// The member space whose length matches `token`, if the token is valid
    /// for it.
    pub fn space_for(&self, token: &str) -> Option<&TokenSpace> {
        let len = token.chars().count();
        self.members
            .iter()
            .find(|s| s.length() == len)
            .filter(|s| s.contains(token))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.space_for(token).is_some()
    }

    /// Encode a family-global index: member ranges are concatenated in
    /// length order.
    pub fn encode_global(&self, index: &BigUint) -> Result<String, SpaceError> {
        let mut rem = index.clone();
        for space in &self.members {
            let c = space.cardinality();
            if rem < c {
                return space.encode(&rem);
            }
            rem -= c;
        }
        Err(SpaceError::IndexOutOfRange {
            index: index.clone(),
            cardinality: self.cardinality(),
        })
    }

    pub fn encode_global_u128(&self, index: u128) -> Result<String, SpaceError> {
        let mut rem = index;
        for space in &self.members {
            match space.cardinality_u128() {
                Some(c) if rem < c => return space.encode_u128(rem),
                Some(c) => rem -= c,
                None => return space.encode(&BigUint::from(rem)),
            }
        }
        Err(SpaceError::IndexOutOfRange {
            index: BigUint::from(index),
            cardinality: self.cardinality(),
        })
    }

    /// Inverse of [`encode_global`](Self::encode_global).
    pub fn decode_global(&self, token: &str) -> Result<BigUint, TokenParseError> {
        let len = token.chars().count();
        let mut offset = BigUint::zero();
        for space in &self.members {
            if space.length() == len {
                return Ok(offset + space.decode(token)?);
            }
            offset += space.cardinality();
        }
        Err(TokenParseError::NoMatchingSpace(len))
    }
}
