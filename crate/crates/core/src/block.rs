use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use arrayvec::ArrayString;

/// An IPv4 /24 block, stored as its 24-bit prefix (`a.b.c`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block(u32);

impl Block {
    pub const MAX_PREFIX: u32 = (1 << 24) - 1;

    pub fn new(prefix: u32) -> Option<Self> {
        (prefix <= Self::MAX_PREFIX).then_some(Block(prefix))
    }

    pub fn from_octets(a: u8, b: u8, c: u8) -> Self {
        Block(u32::from(a) << 16 | u32::from(b) << 8 | u32::from(c))
    }

    pub fn prefix(self) -> u32 {
        self.0
    }

    /// Address of `offset` inside the block.
    pub fn address(self, offset: u8) -> Ipv4Addr {
        Ipv4Addr::from(self.0 << 8 | u32::from(offset))
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [_, a, b, c] = self.0.to_be_bytes();
        write!(f, "{a}.{b}.{c}.0/24")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected a.b.c.0/24, got {0:?}")]
pub struct BlockParseError(String);

impl FromStr for Block {
    type Err = BlockParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || BlockParseError(s.to_owned());
        let (addr, len) = s.split_once('/').ok_or_else(err)?;
        if len != "24" {
            return Err(err());
        }
        let addr: Ipv4Addr = addr.parse().map_err(|_| err())?;
        let bits = u32::from(addr);
        if bits & 0xff != 0 {
            return Err(err());
        }
        Ok(Block(bits >> 8))
    }
}

/// Short ASCII tag naming a vantage point, e.g. `w` or `e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObserverId(ArrayString<16>);

impl ObserverId {
    pub fn new(tag: &str) -> Option<Self> {
        if tag.is_empty() || !tag.bytes().all(|b| b.is_ascii_graphic()) {
            return None;
        }
        ArrayString::from(tag).ok().map(ObserverId)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObserverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Set of address offsets within one block.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OffsetSet([u64; 4]);

impl OffsetSet {
    pub const fn empty() -> Self {
        OffsetSet([0; 4])
    }

    pub const fn full() -> Self {
        OffsetSet([u64::MAX; 4])
    }

    pub fn insert(&mut self, offset: u8) -> bool {
        let (w, b) = (usize::from(offset >> 6), offset & 63);
        let fresh = self.0[w] & (1 << b) == 0;
        self.0[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, offset: u8) {
        self.0[usize::from(offset >> 6)] &= !(1 << (offset & 63));
    }

    pub fn contains(&self, offset: u8) -> bool {
        self.0[usize::from(offset >> 6)] & (1 << (offset & 63)) != 0
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn intersection(&self, other: &OffsetSet) -> OffsetSet {
        OffsetSet(std::array::from_fn(|i| self.0[i] & other.0[i]))
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(move |&o| self.contains(o))
    }
}

impl FromIterator<u8> for OffsetSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut set = OffsetSet::empty();
        for o in iter {
            set.insert(o);
        }
        set
    }
}

impl fmt::Debug for OffsetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
