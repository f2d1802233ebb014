//! Binarization of block-level syntax elements onto the binary coder.

use std::sync::OnceLock;

use super::context::{BinContext, Contexts, ACT, BANDS, KINDS, LAST_CTX, REM_CTX, RICE, SIG_ACT};
use super::range::{BinSink, BinSource};
use crate::error::{Error, Result};

/// Coding order and context band for each block class.
pub(crate) struct Scan {
    /// Raster index of the k-th coded position.
    pub order: Vec<u16>,
    pub band: Vec<u8>,
}

fn band(freq: usize, n: usize) -> u8 {
    if freq == 0 {
        0
    } else if freq <= 2 {
        1
    } else if freq < n / 2 {
        2
    } else {
        3
    }
}

/// Scan for block class `class` and transform kind `kind` (see
/// [`TransformKind`](crate::codec::dct::TransformKind)): raster order for
/// identity, diagonal for the 2D DCT, and frequency-major for the 1D kinds.
pub(crate) fn scan(class: usize, kind: usize) -> &'static Scan {
    static SCANS: OnceLock<Vec<Vec<Scan>>> = OnceLock::new();
    let all = SCANS.get_or_init(|| {
        (0..super::context::CLASSES)
            .map(|c| {
                let n = 4usize << c;
                let cells: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).collect();
                (0..KINDS)
                    .map(|kind| {
                        let mut pos = cells.clone();
                        // (sort key, band frequency) per kind
                        let key = |&(u, v): &(usize, usize)| match kind {
                            0 => ((u, v), 0),
                            1 => ((u + v, v), u + v),
                            2 => ((v, u), v),
                            _ => ((u, v), u),
                        };
                        pos.sort_by_key(|p| key(p).0);
                        Scan {
                            order: pos.iter().map(|&(u, v)| (u * n + v) as u16).collect(),
                            band: pos.iter().map(|p| band(key(p).1, n)).collect(),
                        }
                    })
                    .collect()
            })
            .collect()
    });
    &all[class][kind]
}

fn bit_len(v: u32) -> u32 {
    32 - v.leading_zeros()
}

pub(crate) fn write_split<S: BinSink>(s: &mut S, ctx: &mut Contexts, class: usize, split: bool) {
    s.bin(&mut ctx.split[class], split);
}

pub(crate) fn read_split<S: BinSource>(s: &mut S, ctx: &mut Contexts, class: usize) -> Result<bool> {
    s.bin(&mut ctx.split[class])
}

/// Transform kind: 2D DCT, else identity, else row or column DCT.
pub(crate) fn write_transform<S: BinSink>(s: &mut S, ctx: &mut Contexts, class: usize, kind: usize) {
    let c = &mut ctx.transform[class];
    s.bin(&mut c[0], kind != 1);
    if kind != 1 {
        s.bin(&mut c[1], kind != 0);
        if kind != 0 {
            s.bin(&mut c[2], kind == 3);
        }
    }
}

pub(crate) fn read_transform<S: BinSource>(s: &mut S, ctx: &mut Contexts, class: usize) -> Result<usize> {
    let c = &mut ctx.transform[class];
    if !s.bin(&mut c[0])? {
        return Ok(1);
    }
    if !s.bin(&mut c[1])? {
        return Ok(0);
    }
    Ok(if s.bin(&mut c[2])? { 3 } else { 2 })
}

/// Mode index 0..8 as a 3-level binary tree.
pub(crate) fn write_mode<S: BinSink>(s: &mut S, ctx: &mut Contexts, class: usize, mode: u8) {
    let mut node = 1;
    for i in (0..3).rev() {
        let bit = (mode >> i) & 1 == 1;
        s.bin(&mut ctx.mode[class][node], bit);
        node = 2 * node + bit as usize;
    }
}

pub(crate) fn read_mode<S: BinSource>(s: &mut S, ctx: &mut Contexts, class: usize) -> Result<u8> {
    let mut node = 1;
    for _ in 0..3 {
        let bit = s.bin(&mut ctx.mode[class][node])?;
        node = 2 * node + bit as usize;
    }
    Ok((node - 8) as u8)
}

/// Exp-Golomb order 0 with adaptive prefix bins and bypass suffix.
fn write_eg0<S: BinSink>(s: &mut S, ctx: &mut [BinContext; REM_CTX], u: u32) {
    let v = u as u64 + 1;
    let k = 63 - v.leading_zeros();
    for j in 0..k {
        s.bin(&mut ctx[(j as usize).min(REM_CTX - 1)], true);
    }
    s.bin(&mut ctx[(k as usize).min(REM_CTX - 1)], false);
    if k > 0 {
        s.bypass((v & ((1u64 << k) - 1)) as u32, k);
    }
}

fn read_eg0<S: BinSource>(s: &mut S, ctx: &mut [BinContext; REM_CTX]) -> Result<u32> {
    let mut k = 0u32;
    while s.bin(&mut ctx[(k as usize).min(REM_CTX - 1)])? {
        k += 1;
        if k > 31 {
            return Err(Error::corrupt("Exp-Golomb prefix too long"));
        }
    }
    let suffix = if k > 0 { s.bypass(k)? as u64 } else { 0 };
    let v = (1u64 << k) + suffix - 1;
    u32::try_from(v).map_err(|_| Error::corrupt("Exp-Golomb value overflow"))
}

/// Sum of two previously coded magnitudes, saturated. The second neighbour is
/// one scan step back (`back = 2`) or one line back (`back = n`).
#[inline]
fn activity(levels: &[i32], i: usize, back: usize) -> u32 {
    let a = if i >= 1 { levels[i - 1].unsigned_abs() } else { 0 };
    let b = if i >= back { levels[i - back].unsigned_abs() } else { 0 };
    a.saturating_add(b)
}

/// Template offset for [`activity`]: frequency-major scans of the 1D kinds
/// look at the previous frequency of the same line.
#[inline]
fn template_back(class: usize, kind: usize) -> usize {
    if kind >= 2 {
        4 << class
    } else {
        2
    }
}

#[inline]
fn act_bucket(a: u32) -> usize {
    match a {
        0 => 0,
        1..=2 => 1,
        3..=5 => 2,
        6..=11 => 3,
        12..=23 => 4,
        _ => 5,
    }
}

/// Rice parameter for the remainder `|v| − 3`.
#[inline]
fn rice(a: u32) -> usize {
    match a {
        0..=11 => 0,
        12..=23 => 1,
        24..=47 => 2,
        48..=95 => 3,
        96..=191 => 4,
        _ => 5,
    }
}

/// Writes one nonzero magnitude and its sign (sig flag excluded).
#[inline]
fn write_level<S: BinSink>(s: &mut S, ctx: &mut Contexts, class: usize, t: usize, dc: bool, a: u32, value: i32) {
    let mag = value.unsigned_abs();
    let ab = act_bucket(a);
    s.bin(&mut ctx.gt1[class][t][dc as usize][ab], mag > 1);
    if mag > 1 {
        s.bin(&mut ctx.gt2[class][t][ab], mag > 2);
        if mag > 2 {
            let k = rice(a);
            let u = mag - 3;
            write_eg0(s, &mut ctx.rem[t][k], u >> k);
            if k > 0 {
                s.bypass(u & ((1 << k) - 1), k as u32);
            }
        }
    }
    s.bypass((value < 0) as u32, 1);
}

#[inline]
fn read_level<S: BinSource>(s: &mut S, ctx: &mut Contexts, class: usize, t: usize, dc: bool, a: u32) -> Result<i32> {
    let ab = act_bucket(a);
    let mut mag: u32 = 1;
    if s.bin(&mut ctx.gt1[class][t][dc as usize][ab])? {
        mag = 2;
        if s.bin(&mut ctx.gt2[class][t][ab])? {
            let k = rice(a);
            let q = read_eg0(s, &mut ctx.rem[t][k])? as u64;
            let low = if k > 0 { s.bypass(k as u32)? as u64 } else { 0 };
            mag = ((q << k) | low)
                .checked_add(3)
                .filter(|&m| m <= i32::MAX as u64)
                .ok_or_else(|| Error::corrupt("level magnitude overflow"))? as u32;
        }
    }
    let neg = s.bypass(1)? == 1;
    Ok(if neg { -(mag as i32) } else { mag as i32 })
}

/// Residual levels of one block, given in coding-scan order.
pub(crate) fn write_residual<S: BinSink>(
    s: &mut S,
    ctx: &mut Contexts,
    class: usize,
    kind: usize,
    levels: &[i32],
) {
    let t = kind;
    let last = levels.iter().rposition(|&v| v != 0);
    s.bin(&mut ctx.cbf[class][t], last.is_some());
    let Some(last) = last else { return };
    write_last(s, ctx, class, t, last as u32);
    let bands = &scan(class, kind).band;
    let back = template_back(class, kind);
    for i in 0..=last {
        let a = activity(levels, i, back);
        let v = levels[i];
        let band = bands[i] as usize;
        if i < last {
            s.bin(&mut ctx.sig[class][t][band][(a as usize).min(SIG_ACT - 1)], v != 0);
            if v == 0 {
                continue;
            }
        }
        write_level(s, ctx, class, t, band == 0, a, v);
    }
}

pub(crate) fn read_residual<S: BinSource>(
    s: &mut S,
    ctx: &mut Contexts,
    class: usize,
    kind: usize,
    levels: &mut [i32],
) -> Result<()> {
    let t = kind;
    levels.fill(0);
    if !s.bin(&mut ctx.cbf[class][t])? {
        return Ok(());
    }
    let last = read_last(s, ctx, class, t)? as usize;
    if last >= levels.len() {
        return Err(Error::corrupt(format!("last position {last} outside block of {}", levels.len())));
    }
    let bands = &scan(class, kind).band;
    let back = template_back(class, kind);
    for i in 0..=last {
        let a = activity(levels, i, back);
        let band = bands[i] as usize;
        if i < last && !s.bin(&mut ctx.sig[class][t][band][(a as usize).min(SIG_ACT - 1)])? {
            continue;
        }
        levels[i] = read_level(s, ctx, class, t, band == 0, a)?;
    }
    Ok(())
}

/// A standalone nonzero level outside any block (generic symbol streams).
pub(crate) fn write_single_level<S: BinSink>(s: &mut S, ctx: &mut Contexts, class: usize, value: i32) {
    write_level(s, ctx, class, 1, false, 0, value);
}

pub(crate) fn read_single_level<S: BinSource>(s: &mut S, ctx: &mut Contexts, class: usize) -> Result<i32> {
    read_level(s, ctx, class, 1, false, 0)
}

fn max_last_group(class: usize) -> u32 {
    // values of last+1 range over 1..=n², n² = 16·4^class
    5 + 2 * class as u32
}

fn write_last<S: BinSink>(s: &mut S, ctx: &mut Contexts, class: usize, t: usize, last: u32) {
    let v = last + 1;
    let g = bit_len(v);
    let max_g = max_last_group(class);
    for i in 0..g - 1 {
        s.bin(&mut ctx.last[class][t][(i as usize).min(LAST_CTX - 1)], true);
    }
    if g < max_g {
        s.bin(&mut ctx.last[class][t][((g - 1) as usize).min(LAST_CTX - 1)], false);
    }
    let sc = &mut ctx.last_suffix[class][t][(g - 1) as usize];
    for b in (0..g - 1).rev() {
        s.bin(sc, (v >> b) & 1 == 1);
    }
}

fn read_last<S: BinSource>(s: &mut S, ctx: &mut Contexts, class: usize, t: usize) -> Result<u32> {
    let max_g = max_last_group(class);
    let mut g = 1;
    while g < max_g && s.bin(&mut ctx.last[class][t][((g - 1) as usize).min(LAST_CTX - 1)])? {
        g += 1;
    }
    let sc = &mut ctx.last_suffix[class][t][(g - 1) as usize];
    let mut v = 1u32;
    for _ in 0..g - 1 {
        v = (v << 1) | s.bin(sc)? as u32;
    }
    Ok(v - 1)
}

const _: () = assert!(BANDS == 4 && ACT == 6 && RICE == 6);
