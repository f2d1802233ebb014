//! Binary range coder with carry propagation (LZMA style).

use super::context::{BinContext, PROB_BITS};
use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;

/// Destination for binary decisions: a real coder or a rate estimator.
pub(crate) trait BinSink {
    fn bin(&mut self, ctx: &mut BinContext, bit: bool);
    /// Equiprobable bits, most significant first.
    fn bypass(&mut self, value: u32, nbits: u32);
}

pub(crate) trait BinSource {
    fn bin(&mut self, ctx: &mut BinContext) -> Result<bool>;
    fn bypass(&mut self, nbits: u32) -> Result<u32>;
}

#[derive(Debug, Clone)]
pub(crate) struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        RangeEncoder { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::new() }
    }
}

impl RangeEncoder {
    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn normalize(&mut self) {
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    pub(crate) fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

impl BinSink for RangeEncoder {
    fn bin(&mut self, ctx: &mut BinContext, bit: bool) {
        let bound = (self.range >> PROB_BITS) * ctx.p0();
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        ctx.update(bit);
        self.normalize();
    }

    fn bypass(&mut self, value: u32, nbits: u32) {
        for i in (0..nbits).rev() {
            self.range >>= 1;
            if (value >> i) & 1 == 1 {
                self.low += self.range as u64;
            }
            self.normalize();
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub(crate) fn new(data: &'a [u8]) -> Result<Self> {
        let mut d = RangeDecoder { data, pos: 0, range: u32::MAX, code: 0 };
        for _ in 0..5 {
            d.code = (d.code << 8) | d.next_byte()? as u32;
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.data.get(self.pos).ok_or(Error::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    fn normalize(&mut self) -> Result<()> {
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(())
    }

    /// Bytes consumed so far.
    #[cfg(test)]
    pub(crate) fn position(&self) -> usize {
        self.pos
    }
}

impl BinSource for RangeDecoder<'_> {
    fn bin(&mut self, ctx: &mut BinContext) -> Result<bool> {
        let bound = (self.range >> PROB_BITS) * ctx.p0();
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        ctx.update(bit);
        self.normalize()?;
        Ok(bit)
    }

    fn bypass(&mut self, nbits: u32) -> Result<u32> {
        let mut v = 0;
        for _ in 0..nbits {
            self.range >>= 1;
            let bit = if self.code >= self.range {
                self.code -= self.range;
                1
            } else {
                0
            };
            v = (v << 1) | bit;
            self.normalize()?;
        }
        Ok(v)
    }
}

/// Accumulates the estimated cost in bits while adapting contexts exactly as
/// the encoder would.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RateCounter {
    pub bits: f64,
}

impl BinSink for RateCounter {
    #[inline]
    fn bin(&mut self, ctx: &mut BinContext, bit: bool) {
        self.bits += ctx.cost(bit) as f64;
        ctx.update(bit);
    }

    #[inline]
    fn bypass(&mut self, _value: u32, nbits: u32) {
        self.bits += nbits as f64;
    }
}
