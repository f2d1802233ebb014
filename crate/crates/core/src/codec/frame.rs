//! Intra-only frame encoder and decoder.

use super::config::{CodecConfig, Frame, MAX_FRAME_SIDE};
use super::dct::{forward_kind, inverse_kind, size_class, TransformKind};
use super::entropy::raw::{read_residual_raw, write_residual_raw, BitReader, BitWriter};
use super::entropy::syntax::{self, scan};
use super::entropy::{Contexts, RangeDecoder, RangeEncoder, RateCounter};
use super::predict::{predict_into, Neighbors, PredMode, BORDER_FILL};
use super::quant::{quantize_one, step_unchecked};
use crate::error::{Error, Result};

pub const SEGMENT_HEADER_BYTES: usize = 8;
const UNIT: usize = 4;
/// Modes kept after the SAD pre-selection for full rate-distortion checks.
const MODE_CANDIDATES: usize = 3;

/// Picture under reconstruction, padded to the block grid.
struct Canvas {
    w: usize,
    h: usize,
    recon: Vec<u8>,
    done: Vec<bool>,
    units_w: usize,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        let units_w = w / UNIT;
        Canvas { w, h, recon: vec![0; w * h], done: vec![false; units_w * (h / UNIT)], units_w }
    }

    fn is_done(&self, x: usize, y: usize) -> bool {
        self.done[(y / UNIT) * self.units_w + x / UNIT]
    }

    fn commit(&mut self, x: usize, y: usize, n: usize, block: &[u8]) {
        for r in 0..n {
            self.recon[(y + r) * self.w + x..(y + r) * self.w + x + n].copy_from_slice(&block[r * n..(r + 1) * n]);
        }
        for uy in y / UNIT..(y + n) / UNIT {
            self.done[uy * self.units_w + x / UNIT..uy * self.units_w + (x + n) / UNIT].fill(true);
        }
    }

    fn neighbors(&self, x: usize, y: usize, n: usize, nb: &mut Neighbors) {
        if nb.size != n {
            *nb = Neighbors::empty(n);
        }
        let top = (0..2 * n)
            .take_while(|&i| y > 0 && x + i < self.w && (i < n || self.is_done(x + i, y - 1)))
            .map(|i| self.recon[(y - 1) * self.w + x + i] as i32);
        let left = (0..2 * n)
            .take_while(|&j| x > 0 && y + j < self.h && (j < n || self.is_done(x - 1, y + j)))
            .map(|j| self.recon[(y + j) * self.w + x - 1] as i32);
        let corner = (x > 0 && y > 0).then(|| self.recon[(y - 1) * self.w + x - 1] as i32);
        nb.fill(top, left, corner);
    }
}

/// Residual reconstruction shared by encoder and decoder.
struct Reconstructor {
    step: f64,
    coef: Vec<f64>,
    tmp: Vec<f64>,
    spatial: Vec<f64>,
}

impl Reconstructor {
    fn new(qp: u8) -> Self {
        Reconstructor { step: step_unchecked(qp), coef: Vec::new(), tmp: Vec::new(), spatial: Vec::new() }
    }

    /// `levels` are in the coding scan of `kind`.
    fn run(&mut self, pred: &[i32], levels: &[i32], n: usize, kind: TransformKind, out: &mut Vec<u8>) {
        out.clear();
        let clamp = |v: i64| v.clamp(0, 255) as u8;
        let Some(last) = levels.iter().rposition(|&v| v != 0) else {
            out.extend(pred.iter().map(|&p| clamp(p as i64)));
            return;
        };
        if kind == TransformKind::Identity {
            out.extend(pred.iter().zip(levels).map(|(&p, &l)| clamp(p as i64 + (l as f64 * self.step).round() as i64)));
            return;
        }
        let order = &scan(size_class(n).unwrap(), kind.index()).order;
        self.coef.clear();
        self.coef.resize(n * n, 0.0);
        for k in 0..=last {
            self.coef[order[k] as usize] = levels[k] as f64 * self.step;
        }
        inverse_kind(kind, &self.coef, n, &mut self.tmp, &mut self.spatial);
        out.extend(pred.iter().zip(&self.spatial).map(|(&p, &r)| clamp(p as i64 + r.round() as i64)));
    }
}

#[derive(Debug, Clone)]
struct Leaf {
    mode: u8,
    kind: TransformKind,
    levels: Vec<i32>,
}

#[derive(Debug, Clone)]
enum Node {
    Outside,
    Leaf(Box<Leaf>),
    /// `explicit` is false for nodes crossing the frame edge, whose split is implied.
    Split { explicit: bool, children: Box<[Node; 4]> },
}

struct Candidate {
    leaf: Leaf,
    recon: Vec<u8>,
    cost: f64,
    ctx: Contexts,
}

struct Encoder<'a> {
    cfg: &'a CodecConfig,
    src: Vec<u8>,
    canvas: Canvas,
    lambda: f64,
    inv_step: f64,
    rec: Reconstructor,
    nb: Neighbors,
    preds: Vec<Vec<i32>>,
    orig: Vec<i32>,
    resid: Vec<f64>,
    coef: Vec<f64>,
    tmp: Vec<f64>,
}

fn pad_frame(f: &Frame, w: usize, h: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &f.samples[y.min(f.height - 1) * f.width..][..f.width];
        out.extend_from_slice(row);
        out.extend(std::iter::repeat(row[f.width - 1]).take(w - f.width));
    }
    out
}

fn round_up(v: usize, m: usize) -> usize {
    v.div_ceil(m) * m
}

impl<'a> Encoder<'a> {
    fn new(frame: &Frame, cfg: &'a CodecConfig) -> Self {
        let w = round_up(frame.width, cfg.min_block);
        let h = round_up(frame.height, cfg.min_block);
        Encoder {
            cfg,
            src: pad_frame(frame, w, h),
            canvas: Canvas::new(w, h),
            lambda: cfg.lambda(),
            inv_step: 1.0 / step_unchecked(cfg.qp),
            rec: Reconstructor::new(cfg.qp),
            nb: Neighbors::empty(4),
            preds: vec![Vec::new(); PredMode::ALL.len()],
            orig: Vec::new(),
            resid: Vec::new(),
            coef: Vec::new(),
            tmp: Vec::new(),
        }
    }

    fn rd_node(&mut self, x: usize, y: usize, n: usize, ctx: &Contexts) -> (f64, Node, Contexts) {
        let (w, h) = (self.canvas.w, self.canvas.h);
        if x >= w || y >= h {
            return (0.0, Node::Outside, ctx.clone());
        }
        if x + n > w || y + n > h {
            let mut cost = 0.0;
            let mut c = ctx.clone();
            let half = n / 2;
            let children = [(0, 0), (half, 0), (0, half), (half, half)].map(|(dx, dy)| {
                let (cc, node, next) = self.rd_node(x + dx, y + dy, half, &c);
                cost += cc;
                c = next;
                node
            });
            return (cost, Node::Split { explicit: false, children: Box::new(children) }, c);
        }
        let class = size_class(n).unwrap();
        let can_split = n > self.cfg.min_block;
        let mut leaf_ctx = ctx.clone();
        let mut flag = RateCounter::default();
        if can_split {
            syntax::write_split(&mut flag, &mut leaf_ctx, class, false);
        }
        let mut leaf = self.eval_leaf(x, y, n, &leaf_ctx);
        leaf.cost += self.lambda * flag.bits;
        let zero = leaf.leaf.levels.iter().all(|&v| v == 0);
        if !can_split || zero {
            self.canvas.commit(x, y, n, &leaf.recon);
            return (leaf.cost, Node::Leaf(Box::new(leaf.leaf)), leaf.ctx);
        }
        let mut split_ctx = ctx.clone();
        let mut flag = RateCounter::default();
        syntax::write_split(&mut flag, &mut split_ctx, class, true);
        let mut cost = self.lambda * flag.bits;
        let half = n / 2;
        let mut children: Vec<Node> = Vec::with_capacity(4);
        for (dx, dy) in [(0, 0), (half, 0), (0, half), (half, half)] {
            let (cc, node, next) = self.rd_node(x + dx, y + dy, half, &split_ctx);
            cost += cc;
            split_ctx = next;
            children.push(node);
            if cost >= leaf.cost {
                break;
            }
        }
        if cost < leaf.cost {
            let children: [Node; 4] = children.try_into().expect("four children");
            (cost, Node::Split { explicit: true, children: Box::new(children) }, split_ctx)
        } else {
            self.canvas.commit(x, y, n, &leaf.recon);
            (leaf.cost, Node::Leaf(Box::new(leaf.leaf)), leaf.ctx)
        }
    }

    fn eval_leaf(&mut self, x: usize, y: usize, n: usize, ctx: &Contexts) -> Candidate {
        let class = size_class(n).unwrap();
        let nn = n * n;
        self.orig.clear();
        for r in 0..n {
            self.orig.extend(self.src[(y + r) * self.canvas.w + x..][..n].iter().map(|&v| v as i32));
        }
        let mut modes: Vec<(u64, u8)> = Vec::with_capacity(PredMode::ALL.len());
        if self.cfg.enable_prediction {
            self.canvas.neighbors(x, y, n, &mut self.nb);
            for (i, mode) in PredMode::ALL.into_iter().enumerate() {
                let p = &mut self.preds[i];
                p.resize(nn, 0);
                predict_into(&self.nb, mode, p);
                let sad: u64 = self.orig.iter().zip(p.iter()).map(|(&a, &b)| (a - b).unsigned_abs() as u64).sum();
                modes.push((sad, i as u8));
            }
            modes.sort_unstable();
            modes.truncate(MODE_CANDIDATES);
        } else {
            self.preds[0].clear();
            self.preds[0].resize(nn, BORDER_FILL);
            modes.push((0, 0));
        }
        let kinds: &[TransformKind] =
            if self.cfg.enable_transform { &TransformKind::ALL } else { &[TransformKind::Identity] };
        let mut best: Option<Candidate> = None;
        let mut levels = Vec::with_capacity(nn);
        let mut recon = Vec::with_capacity(nn);
        for &(_, mode) in &modes {
            let pred = std::mem::take(&mut self.preds[mode as usize]);
            self.resid.clear();
            self.resid.extend(self.orig.iter().zip(&pred).map(|(&o, &p)| (o - p) as f64));
            for &kind in kinds {
                forward_kind(kind, &self.resid, n, &mut self.tmp, &mut self.coef);
                let order = &scan(class, kind.index()).order;
                levels.clear();
                levels.extend(order.iter().map(|&i| quantize_one(self.coef[i as usize], self.inv_step)));
                self.rec.run(&pred, &levels, n, kind, &mut recon);
                let sse: i64 = self
                    .orig
                    .iter()
                    .zip(&recon)
                    .map(|(&o, &r)| {
                        let d = (o - r as i32) as i64;
                        d * d
                    })
                    .sum();
                let mut c = ctx.clone();
                let mut rate = RateCounter::default();
                if self.cfg.enable_prediction {
                    syntax::write_mode(&mut rate, &mut c, class, mode);
                }
                if self.cfg.enable_transform {
                    syntax::write_transform(&mut rate, &mut c, class, kind.index());
                }
                syntax::write_residual(&mut rate, &mut c, class, kind.index(), &levels);
                let cost = sse as f64 + self.lambda * rate.bits;
                if best.as_ref().map_or(true, |b| cost < b.cost) {
                    best = Some(Candidate {
                        leaf: Leaf { mode, kind, levels: levels.clone() },
                        recon: recon.clone(),
                        cost,
                        ctx: c,
                    });
                }
            }
            self.preds[mode as usize] = pred;
        }
        best.expect("at least one candidate")
    }
}

enum Writer {
    Arith { enc: RangeEncoder, ctx: Box<Contexts> },
    Raw(BitWriter),
}

impl Writer {
    fn split(&mut self, class: usize, split: bool) {
        match self {
            Writer::Arith { enc, ctx } => syntax::write_split(enc, ctx, class, split),
            Writer::Raw(w) => w.put(split as u32, 1),
        }
    }

    fn leaf(&mut self, cfg: &CodecConfig, class: usize, leaf: &Leaf) {
        let kind = leaf.kind.index();
        match self {
            Writer::Arith { enc, ctx } => {
                if cfg.enable_prediction {
                    syntax::write_mode(enc, ctx, class, leaf.mode);
                }
                if cfg.enable_transform {
                    syntax::write_transform(enc, ctx, class, kind);
                }
                syntax::write_residual(enc, ctx, class, kind, &leaf.levels);
            }
            Writer::Raw(w) => {
                if cfg.enable_prediction {
                    w.put(leaf.mode as u32, 3);
                }
                if cfg.enable_transform {
                    w.put(kind as u32, 2);
                }
                write_residual_raw(w, &leaf.levels);
            }
        }
    }

    fn emit(&mut self, cfg: &CodecConfig, node: &Node, n: usize) {
        match node {
            Node::Outside => {}
            Node::Split { explicit, children } => {
                if *explicit {
                    self.split(size_class(n).unwrap(), true);
                }
                for c in children.iter() {
                    self.emit(cfg, c, n / 2);
                }
            }
            Node::Leaf(leaf) => {
                let class = size_class(n).unwrap();
                if n > cfg.min_block {
                    self.split(class, false);
                }
                self.leaf(cfg, class, leaf);
            }
        }
    }

    fn finish(self) -> Vec<u8> {
        match self {
            Writer::Arith { enc, .. } => enc.finish(),
            Writer::Raw(w) => w.finish(),
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || width > MAX_FRAME_SIDE || height > MAX_FRAME_SIDE {
        return Err(Error::invalid(format!("frame {width}×{height} outside 1..={MAX_FRAME_SIDE} per side")));
    }
    Ok(())
}

/// Encodes one frame into a self-contained segment.
pub fn encode_frame(frame: &Frame, cfg: &CodecConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    check_dims(frame.width, frame.height)?;
    if frame.samples.len() != frame.width * frame.height {
        return Err(Error::LengthMismatch { expected: frame.width * frame.height, found: frame.samples.len() });
    }
    let mut enc = Encoder::new(frame, cfg);
    let mut writer = if cfg.enable_entropy {
        Writer::Arith { enc: RangeEncoder::default(), ctx: Box::default() }
    } else {
        Writer::Raw(BitWriter::default())
    };
    let mut ctx = Contexts::default();
    let ctu = cfg.ctu_size;
    for y in (0..enc.canvas.h).step_by(ctu) {
        for x in (0..enc.canvas.w).step_by(ctu) {
            let (_, node, next) = enc.rd_node(x, y, ctu, &ctx);
            ctx = next;
            writer.emit(cfg, &node, ctu);
        }
    }
    let mut out = Vec::with_capacity(SEGMENT_HEADER_BYTES + 64);
    out.extend_from_slice(&((frame.width - 1) as u16).to_le_bytes());
    out.extend_from_slice(&((frame.height - 1) as u16).to_le_bytes());
    out.extend_from_slice(&[cfg.ctu_size as u8, cfg.min_block as u8, cfg.qp, cfg.toggle_bits()]);
    out.extend(writer.finish());
    Ok(out)
}

enum Reader<'a> {
    Arith { dec: RangeDecoder<'a>, ctx: Box<Contexts> },
    Raw(BitReader<'a>),
}

impl Reader<'_> {
    fn split(&mut self, class: usize) -> Result<bool> {
        match self {
            Reader::Arith { dec, ctx } => syntax::read_split(dec, ctx, class),
            Reader::Raw(r) => Ok(r.get(1)? == 1),
        }
    }

    fn leaf(&mut self, cfg: &CodecConfig, class: usize, levels: &mut [i32]) -> Result<(u8, TransformKind)> {
        let mut mode = 0;
        let mut kind = 0;
        match self {
            Reader::Arith { dec, ctx } => {
                if cfg.enable_prediction {
                    mode = syntax::read_mode(dec, ctx, class)?;
                }
                if cfg.enable_transform {
                    kind = syntax::read_transform(dec, ctx, class)?;
                }
                syntax::read_residual(dec, ctx, class, kind, levels)?;
            }
            Reader::Raw(r) => {
                if cfg.enable_prediction {
                    mode = r.get(3)? as u8;
                }
                if cfg.enable_transform {
                    kind = r.get(2)? as usize;
                }
                read_residual_raw(r, levels)?;
            }
        }
        Ok((mode, TransformKind::from_index(kind).expect("two-bit kind")))
    }
}

struct Decoder<'a> {
    cfg: CodecConfig,
    canvas: Canvas,
    reader: Reader<'a>,
    rec: Reconstructor,
    nb: Neighbors,
    pred: Vec<i32>,
    levels: Vec<i32>,
    recon: Vec<u8>,
}

impl Decoder<'_> {
    fn node(&mut self, x: usize, y: usize, n: usize) -> Result<()> {
        let (w, h) = (self.canvas.w, self.canvas.h);
        if x >= w || y >= h {
            return Ok(());
        }
        let half = n / 2;
        let inside = x + n <= w && y + n <= h;
        let class = size_class(n).unwrap();
        if !inside || (n > self.cfg.min_block && self.reader.split(class)?) {
            for (dx, dy) in [(0, 0), (half, 0), (0, half), (half, half)] {
                self.node(x + dx, y + dy, half)?;
            }
            return Ok(());
        }
        self.levels.resize(n * n, 0);
        let (mode, kind) = self.reader.leaf(&self.cfg, class, &mut self.levels)?;
        self.pred.resize(n * n, 0);
        if self.cfg.enable_prediction {
            self.canvas.neighbors(x, y, n, &mut self.nb);
            predict_into(&self.nb, PredMode::from_index(mode)?, &mut self.pred);
        } else {
            self.pred.fill(BORDER_FILL);
        }
        self.rec.run(&self.pred, &self.levels, n, kind, &mut self.recon);
        self.canvas.commit(x, y, n, &self.recon);
        Ok(())
    }
}

/// Decodes a segment produced by [`encode_frame`].
pub fn decode_frame(segment: &[u8]) -> Result<Frame> {
    let (cfg, width, height) = segment_info(segment)?;
    let payload = &segment[SEGMENT_HEADER_BYTES..];
    let reader = if cfg.enable_entropy {
        Reader::Arith { dec: RangeDecoder::new(payload)?, ctx: Box::default() }
    } else {
        Reader::Raw(BitReader::new(payload))
    };
    let pw = round_up(width, cfg.min_block);
    let ph = round_up(height, cfg.min_block);
    let mut d = Decoder {
        cfg,
        canvas: Canvas::new(pw, ph),
        reader,
        rec: Reconstructor::new(cfg.qp),
        nb: Neighbors::empty(4),
        pred: Vec::new(),
        levels: Vec::new(),
        recon: Vec::new(),
    };
    for y in (0..ph).step_by(cfg.ctu_size) {
        for x in (0..pw).step_by(cfg.ctu_size) {
            d.node(x, y, cfg.ctu_size)?;
        }
    }
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        samples.extend_from_slice(&d.canvas.recon[y * pw..y * pw + width]);
    }
    Frame::new(width, height, samples)
}

/// Reads the segment header: codec parameters (lambda unset) and frame size.
pub fn segment_info(segment: &[u8]) -> Result<(CodecConfig, usize, usize)> {
    if segment.len() < SEGMENT_HEADER_BYTES {
        return Err(Error::Truncated);
    }
    let width = u16::from_le_bytes([segment[0], segment[1]]) as usize + 1;
    let height = u16::from_le_bytes([segment[2], segment[3]]) as usize + 1;
    let mut cfg = CodecConfig {
        ctu_size: segment[4] as usize,
        min_block: segment[5] as usize,
        qp: segment[6],
        ..CodecConfig::default()
    };
    cfg.set_toggles(segment[7])?;
    cfg.validate().map_err(|e| Error::corrupt(format!("segment header: {e}")))?;
    Ok((cfg, width, height))
}
