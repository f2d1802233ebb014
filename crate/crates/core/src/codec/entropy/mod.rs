//! Adaptive binary arithmetic coding of binarized syntax elements.

mod context;
mod range;
pub(crate) mod raw;
pub(crate) mod syntax;

pub use context::BinContext;
pub(crate) use context::{Contexts, CLASSES};
pub(crate) use range::{BinSink, BinSource, RangeDecoder, RangeEncoder, RateCounter};

use crate::error::{Error, Result};

/// One binarized decision or syntax element of a generic symbol stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    /// A context-coded flag; `ctx` selects one of 256 adaptive contexts.
    Flag { ctx: u8, bit: bool },
    /// An equiprobable bit such as a sign.
    Bypass(bool),
    /// Quad-tree split flag for block-size class `class` (0 → 4×4 … 4 → 64×64).
    Split { class: u8, split: bool },
    /// Intra mode index 0..8.
    Mode { class: u8, mode: u8 },
    /// Signed coefficient level: significance, greater-than flags, Exp-Golomb
    /// remainder and a bypass sign.
    Level { class: u8, value: i32 },
}

impl Symbol {
    fn kind(&self) -> usize {
        match self {
            Symbol::Flag { .. } => 0,
            Symbol::Bypass(_) => 1,
            Symbol::Split { .. } => 2,
            Symbol::Mode { .. } => 3,
            Symbol::Level { .. } => 4,
        }
    }

    fn class(&self) -> Option<u8> {
        match *self {
            Symbol::Split { class, .. } | Symbol::Mode { class, .. } | Symbol::Level { class, .. } => Some(class),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(c) = self.class() {
            if c as usize >= CLASSES {
                return Err(Error::invalid(format!("block class {c} outside 0..{CLASSES}")));
            }
        }
        match *self {
            Symbol::Mode { mode, .. } if mode >= 8 => Err(Error::invalid(format!("mode {mode} outside 0..8"))),
            Symbol::Level { value: i32::MIN, .. } => Err(Error::invalid("level magnitude exceeds i32 range")),
            _ => Ok(()),
        }
    }
}

const KINDS: usize = 5;

struct StreamContexts {
    block: Contexts,
    kind: [[BinContext; 8]; KINDS + 1],
    same_ctx: BinContext,
    same_class: [BinContext; KINDS],
    flags: Box<[BinContext; 256]>,
    nonzero: [BinContext; CLASSES],
}

impl StreamContexts {
    fn new() -> Self {
        let c = BinContext::new();
        StreamContexts {
            block: Contexts::default(),
            kind: [[c; 8]; KINDS + 1],
            same_ctx: c,
            same_class: [c; KINDS],
            flags: Box::new([c; 256]),
            nonzero: [c; CLASSES],
        }
    }
}

#[derive(Default)]
struct History {
    kind: usize,
    flag_ctx: Option<u8>,
    class: [Option<u8>; KINDS],
}

impl History {
    fn new() -> Self {
        History { kind: KINDS, ..Default::default() }
    }
}

/// Encodes a symbol stream: a little-endian u32 count followed by the
/// arithmetic-coded payload.
pub fn entropy_encode(symbols: &[Symbol]) -> Result<Vec<u8>> {
    let count = u32::try_from(symbols.len()).map_err(|_| Error::invalid("more than 2^32 symbols"))?;
    let mut enc = RangeEncoder::default();
    let mut ctx = StreamContexts::new();
    let mut h = History::new();
    for sym in symbols {
        sym.validate()?;
        let kind = sym.kind();
        let mut node = 1;
        for i in (0..3).rev() {
            let bit = (kind >> i) & 1 == 1;
            enc.bin(&mut ctx.kind[h.kind][node], bit);
            node = 2 * node + bit as usize;
        }
        h.kind = kind;
        if let Some(class) = sym.class() {
            let same = h.class[kind] == Some(class);
            enc.bin(&mut ctx.same_class[kind], same);
            if !same {
                enc.bypass(class as u32, 3);
                h.class[kind] = Some(class);
            }
        }
        match *sym {
            Symbol::Flag { ctx: c, bit } => {
                let same = h.flag_ctx == Some(c);
                enc.bin(&mut ctx.same_ctx, same);
                if !same {
                    enc.bypass(c as u32, 8);
                    h.flag_ctx = Some(c);
                }
                enc.bin(&mut ctx.flags[c as usize], bit);
            }
            Symbol::Bypass(bit) => enc.bypass(bit as u32, 1),
            Symbol::Split { class, split } => syntax::write_split(&mut enc, &mut ctx.block, class as usize, split),
            Symbol::Mode { class, mode } => syntax::write_mode(&mut enc, &mut ctx.block, class as usize, mode),
            Symbol::Level { class, value } => {
                enc.bin(&mut ctx.nonzero[class as usize], value != 0);
                if value != 0 {
                    syntax::write_single_level(&mut enc, &mut ctx.block, class as usize, value);
                }
            }
        }
    }
    let mut out = count.to_le_bytes().to_vec();
    out.extend(enc.finish());
    Ok(out)
}

/// Inverse of [`entropy_encode`].
pub fn entropy_decode(bytes: &[u8]) -> Result<Vec<Symbol>> {
    if bytes.len() < 4 {
        return Err(Error::Truncated);
    }
    let count = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    let mut dec = RangeDecoder::new(&bytes[4..])?;
    let mut ctx = StreamContexts::new();
    let mut h = History::new();
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let mut node = 1;
        for _ in 0..3 {
            let bit = dec.bin(&mut ctx.kind[h.kind][node])?;
            node = 2 * node + bit as usize;
        }
        let kind = node - 8;
        if kind >= KINDS {
            return Err(Error::corrupt(format!("symbol kind {kind}")));
        }
        h.kind = kind;
        let class = if kind >= 2 {
            if !dec.bin(&mut ctx.same_class[kind])? {
                let c = dec.bypass(3)? as u8;
                if c as usize >= CLASSES {
                    return Err(Error::corrupt(format!("block class {c}")));
                }
                h.class[kind] = Some(c);
            }
            h.class[kind].ok_or_else(|| Error::corrupt("class repeat without a previous class"))?
        } else {
            0
        };
        let sym = match kind {
            0 => {
                if !dec.bin(&mut ctx.same_ctx)? {
                    h.flag_ctx = Some(dec.bypass(8)? as u8);
                }
                let c = h.flag_ctx.ok_or_else(|| Error::corrupt("flag context repeat without a previous flag"))?;
                Symbol::Flag { ctx: c, bit: dec.bin(&mut ctx.flags[c as usize])? }
            }
            1 => Symbol::Bypass(dec.bypass(1)? == 1),
            2 => Symbol::Split { class, split: syntax::read_split(&mut dec, &mut ctx.block, class as usize)? },
            3 => Symbol::Mode { class, mode: syntax::read_mode(&mut dec, &mut ctx.block, class as usize)? },
            _ => {
                let value = if dec.bin(&mut ctx.nonzero[class as usize])? {
                    syntax::read_single_level(&mut dec, &mut ctx.block, class as usize)?
                } else {
                    0
                };
                Symbol::Level { class, value }
            }
        };
        out.push(sym);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_stream_roundtrip() {
        let syms = vec![
            Symbol::Flag { ctx: 3, bit: true },
            Symbol::Flag { ctx: 3, bit: false },
            Symbol::Flag { ctx: 200, bit: true },
            Symbol::Bypass(true),
            Symbol::Split { class: 4, split: true },
            Symbol::Split { class: 3, split: false },
            Symbol::Mode { class: 1, mode: 7 },
            Symbol::Level { class: 0, value: 0 },
            Symbol::Level { class: 0, value: -1 },
            Symbol::Level { class: 2, value: i32::MAX },
        ];
        let bytes = entropy_encode(&syms).unwrap();
        assert_eq!(entropy_decode(&bytes).unwrap(), syms);
    }

    #[test]
    fn empty_stream() {
        let bytes = entropy_encode(&[]).unwrap();
        assert!(entropy_decode(&bytes).unwrap().is_empty());
    }

    #[test]
    fn invalid_symbols_rejected() {
        assert!(entropy_encode(&[Symbol::Mode { class: 0, mode: 8 }]).is_err());
        assert!(entropy_encode(&[Symbol::Split { class: 5, split: true }]).is_err());
        assert!(entropy_encode(&[Symbol::Level { class: 0, value: i32::MIN }]).is_err());
    }

    #[test]
    fn truncated_input() {
        let syms: Vec<Symbol> = (0..500).map(|i| Symbol::Level { class: 1, value: i * 37 - 900 }).collect();
        let bytes = entropy_encode(&syms).unwrap();
        assert!(matches!(entropy_decode(&bytes[..bytes.len() / 2]), Err(Error::Truncated)));
        assert!(matches!(entropy_decode(&bytes[..2]), Err(Error::Truncated)));
    }
}
