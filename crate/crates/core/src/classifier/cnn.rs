//! Two-block convolutional network with batch normalisation.
//!
//! Activations are kept channel-major as `[channels, batch * height * width]`
//! so each convolution is a single GEMM over an im2col buffer.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed;

pub const INPUT_HEIGHT: usize = 16;
pub const INPUT_WIDTH: usize = 20;
const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.9;

const CHECKPOINT_MAGIC: &[u8; 8] = b"RFFCNN\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnSpec {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub n_classes: usize,
    pub batch_norm: bool,
    pub relu: bool,
}

impl CnnSpec {
    /// The reference architecture on one or more 16x20 input planes.
    pub fn new(in_channels: usize, n_classes: usize) -> Self {
        CnnSpec {
            in_channels,
            height: INPUT_HEIGHT,
            width: INPUT_WIDTH,
            conv1_filters: 32,
            conv2_filters: 64,
            n_classes,
            batch_norm: true,
            relu: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.conv1_filters == 0 || self.conv2_filters == 0 {
            return Err(invalid("layer sizes must be positive"));
        }
        if self.n_classes < 2 {
            return Err(invalid("need at least two classes"));
        }
        if self.height % 4 != 0 || self.width % 4 != 0 || self.height == 0 || self.width == 0 {
            return Err(invalid("input height and width must be positive multiples of 4"));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.height * self.width
    }

    pub fn flat_len(&self) -> usize {
        self.conv2_filters * (self.height / 4) * (self.width / 4)
    }

    /// Names and shapes of the trainable tensors, in checkpoint order.
    pub fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let mut v = vec![("conv1.weight", vec![self.conv1_filters, self.in_channels * 9])];
        if self.batch_norm {
            v.push(("bn1.gamma", vec![self.conv1_filters]));
            v.push(("bn1.beta", vec![self.conv1_filters]));
        } else {
            v.push(("conv1.bias", vec![self.conv1_filters]));
        }
        v.push(("conv2.weight", vec![self.conv2_filters, self.conv1_filters * 9]));
        if self.batch_norm {
            v.push(("bn2.gamma", vec![self.conv2_filters]));
            v.push(("bn2.beta", vec![self.conv2_filters]));
        } else {
            v.push(("conv2.bias", vec![self.conv2_filters]));
        }
        v.push(("dense.weight", vec![self.n_classes, self.flat_len()]));
        v.push(("dense.bias", vec![self.n_classes]));
        v
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }
}

/// A named parameter tensor stored flat in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: &'static str, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            name,
            shape,
            data: vec![0.0; n],
        }
    }

    fn view2(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.shape[0], self.shape[1]), &self.data).expect("2-d tensor")
    }
}

/// Trainable parameters in the order given by [`CnnSpec::param_shapes`].
#[derive(Debug, Clone, PartialEq)]
pub struct Params(pub Vec<Tensor>);

impl Params {
    pub fn zeros_like(spec: &CnnSpec) -> Self {
        Params(spec.param_shapes().into_iter().map(|(n, s)| Tensor::zeros(n, s)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|t| t.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index `i` into tensor and offset.
    pub fn locate(&self, mut i: usize) -> Option<(usize, usize)> {
        for (ti, t) in self.0.iter().enumerate() {
            if i < t.data.len() {
                return Some((ti, i));
            }
            i -= t.data.len();
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BnRunning {
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl BnRunning {
    fn new(c: usize) -> Self {
        BnRunning {
            mean: vec![0.0; c],
            var: vec![1.0; c],
        }
    }
}

/// Batch-norm behaviour during a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Normalise with batch statistics and update the running averages.
    Train,
    /// Normalise with the running averages.
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    pub spec: CnnSpec,
    pub params: Params,
    bn1: BnRunning,
    bn2: BnRunning,
}

/// Per-channel batch mean and unbiased variance.
type BatchStats = (Vec<f64>, Vec<f64>);

/// Intermediate values kept for the backward pass.
struct Cache {
    batch: usize,
    cols1: Array2<f64>,
    block1: BlockCache,
    cols2: Array2<f64>,
    block2: BlockCache,
    flat: Array2<f64>,
    probs: Array2<f64>,
}

struct BlockCache {
    /// Normalised pre-activation (batch norm) or raw pre-activation.
    xhat: Array2<f64>,
    inv_std: Vec<f64>,
    /// Post-activation, pre-pool.
    act: Array2<f64>,
    argmax: Vec<u32>,
}

impl Cnn {
    /// Fan-in scaled uniform initialisation: weights in `±sqrt(6 / fan_in)`,
    /// biases and batch-norm shifts zero, batch-norm scales one.
    pub fn new(spec: &CnnSpec, init_seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = seed::rng(init_seed);
        let mut params = Params::zeros_like(spec);
        for t in params.0.iter_mut() {
            if t.name.ends_with("weight") {
                let fan_in = t.shape[1] as f64;
                let bound = (6.0 / fan_in).sqrt();
                for v in t.data.iter_mut() {
                    *v = rng.gen_range(-bound..bound);
                }
            } else if t.name.ends_with("gamma") {
                t.data.fill(1.0);
            }
        }
        Ok(Cnn {
            spec: spec.clone(),
            params,
            bn1: BnRunning::new(spec.conv1_filters),
            bn2: BnRunning::new(spec.conv2_filters),
        })
    }

    fn param(&self, name: &str) -> &Tensor {
        self.params.0.iter().find(|t| t.name == name).expect("parameter exists")
    }

    /// Class logits for a batch of flattened `C x H x W` inputs, one per row.
    pub fn logits(&mut self, x: ArrayView2<'_, f64>, mode: Mode) -> Result<Array2<f64>> {
        let (logits, _) = self.forward_cached(x, mode)?;
        Ok(logits)
    }

    /// Logits in eval mode.
    pub fn infer(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (logits, _, _) = self.forward(x, Mode::Eval)?;
        Ok(logits)
    }

    /// Forward pass; in train mode the running batch-norm averages are
    /// updated from this batch.
    fn forward_cached(&mut self, x: ArrayView2<'_, f64>, mode: Mode) -> Result<(Array2<f64>, Cache)> {
        let (logits, cache, stats) = self.forward(x, mode)?;
        for (running, st) in [&mut self.bn1, &mut self.bn2].into_iter().zip(stats) {
            if let Some((mean, var)) = st {
                for ch in 0..mean.len() {
                    running.mean[ch] = BN_MOMENTUM * running.mean[ch] + (1.0 - BN_MOMENTUM) * mean[ch];
                    running.var[ch] = BN_MOMENTUM * running.var[ch] + (1.0 - BN_MOMENTUM) * var[ch];
                }
            }
        }
        Ok((logits, cache))
    }

    #[allow(clippy::type_complexity)]
    fn forward(&self, x: ArrayView2<'_, f64>, mode: Mode) -> Result<(Array2<f64>, Cache, [Option<BatchStats>; 2])> {
        let s = self.spec.clone();
        if x.ncols() != s.input_len() {
            return Err(Error::LengthMismatch {
                expected: s.input_len(),
                actual: x.ncols(),
            });
        }
        let b = x.nrows();
        if b == 0 {
            return Err(invalid("empty batch"));
        }
        let (h, w) = (s.height, s.width);
        // [B, C*H*W] -> [C, B*H*W]
        let hw = h * w;
        let mut a0 = Array2::<f64>::zeros((s.in_channels, b * hw));
        for bi in 0..b {
            for c in 0..s.in_channels {
                let src = x.row(bi);
                let mut dst = a0.row_mut(c);
                for p in 0..hw {
                    dst[bi * hw + p] = src[c * hw + p];
                }
            }
        }

        let cols1 = im2col(a0.view(), b, h, w);
        let mut z1 = Array2::<f64>::zeros((s.conv1_filters, b * hw));
        general_mat_mul(1.0, &self.param("conv1.weight").view2(), &cols1, 0.0, &mut z1);
        let (block1, st1) = self.block_forward(0, z1, b, h, w, mode);
        let p1 = pool_output(&block1, s.conv1_filters, b, h, w);

        let (h2, w2) = (h / 2, w / 2);
        let cols2 = im2col(p1.view(), b, h2, w2);
        let mut z2 = Array2::<f64>::zeros((s.conv2_filters, b * h2 * w2));
        general_mat_mul(1.0, &self.param("conv2.weight").view2(), &cols2, 0.0, &mut z2);
        let (block2, st2) = self.block_forward(1, z2, b, h2, w2, mode);
        let p2 = pool_output(&block2, s.conv2_filters, b, h2, w2);

        // [C2, B*h3*w3] -> [B, C2*h3*w3], channel-major within a sample.
        let hw3 = (h2 / 2) * (w2 / 2);
        let mut flat = Array2::<f64>::zeros((b, s.flat_len()));
        for c in 0..s.conv2_filters {
            let row = p2.row(c);
            for bi in 0..b {
                for p in 0..hw3 {
                    flat[[bi, c * hw3 + p]] = row[bi * hw3 + p];
                }
            }
        }
        let mut logits = Array2::<f64>::zeros((b, s.n_classes));
        general_mat_mul(1.0, &flat, &self.param("dense.weight").view2().t(), 0.0, &mut logits);
        let bias = &self.param("dense.bias").data;
        for mut row in logits.rows_mut() {
            for (v, bb) in row.iter_mut().zip(bias) {
                *v += bb;
            }
        }
        let probs = softmax_rows(logits.view());
        Ok((
            logits,
            Cache {
                batch: b,
                cols1,
                block1,
                cols2,
                block2,
                flat,
                probs,
            },
            [st1, st2],
        ))
    }

    /// Batch norm (or bias) and activation of one conv block, then pooling
    /// bookkeeping.
    fn block_forward(
        &self,
        idx: usize,
        mut z: Array2<f64>,
        b: usize,
        h: usize,
        w: usize,
        mode: Mode,
    ) -> (BlockCache, Option<BatchStats>) {
        let c = z.nrows();
        let n = z.ncols() as f64;
        let mut inv_std = vec![1.0; c];
        if self.spec.batch_norm {
            let (gname, bname) = if idx == 0 { ("bn1.gamma", "bn1.beta") } else { ("bn2.gamma", "bn2.beta") };
            let gamma = self.param(gname).data.clone();
            let beta = self.param(bname).data.clone();
            let running = if idx == 0 { &self.bn1 } else { &self.bn2 };
            let mut stats = (vec![0.0; c], vec![0.0; c]);
            for ch in 0..c {
                let mut row = z.row_mut(ch);
                let (mean, var) = match mode {
                    Mode::Train => {
                        let mean = row.sum() / n;
                        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                        stats.0[ch] = mean;
                        stats.1[ch] = if n > 1.0 { var * n / (n - 1.0) } else { var };
                        (mean, var)
                    }
                    Mode::Eval => (running.mean[ch], running.var[ch]),
                };
                let is = 1.0 / (var + BN_EPS).sqrt();
                inv_std[ch] = is;
                row.mapv_inplace(|v| (v - mean) * is);
            }
            let xhat = z.clone();
            for ch in 0..c {
                let (g, bt) = (gamma[ch], beta[ch]);
                z.row_mut(ch).mapv_inplace(|v| g * v + bt);
            }
            let stats = (mode == Mode::Train).then_some(stats);
            (self.finish_block(xhat, inv_std, z, b, h, w), stats)
        } else {
            let bname = if idx == 0 { "conv1.bias" } else { "conv2.bias" };
            let bias = self.param(bname).data.clone();
            for ch in 0..c {
                let bb = bias[ch];
                z.row_mut(ch).mapv_inplace(|v| v + bb);
            }
            let xhat = z.clone();
            (self.finish_block(xhat, inv_std, z, b, h, w), None)
        }
    }

    fn finish_block(&self, xhat: Array2<f64>, inv_std: Vec<f64>, mut z: Array2<f64>, b: usize, h: usize, w: usize) -> BlockCache {
        if self.spec.relu {
            z.mapv_inplace(|v| v.max(0.0));
        }
        let argmax = pool_argmax(z.view(), b, h, w);
        BlockCache {
            xhat,
            inv_std,
            act: z,
            argmax,
        }
    }

    /// Mean cross-entropy of a batch and its parameter gradients, with
    /// batch norm in training mode.
    pub fn loss_and_grad(&mut self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Params)> {
        let (_, cache) = self.forward_cached(x, Mode::Train)?;
        let loss = cross_entropy(cache.probs.view(), labels)?;
        let grads = self.backward(&cache, labels);
        Ok((loss, grads))
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&mut self, x: ArrayView2<'_, f64>, labels: &[usize], mode: Mode) -> Result<f64> {
        let (_, cache) = self.forward_cached(x, mode)?;
        cross_entropy(cache.probs.view(), labels)
    }

    fn backward(&self, cache: &Cache, labels: &[usize]) -> Params {
        let s = &self.spec;
        let b = cache.batch;
        let mut grads = Params::zeros_like(s);
        let (h, w) = (s.height, s.width);
        let (h2, w2) = (h / 2, w / 2);
        let hw3 = (h2 / 2) * (w2 / 2);

        let mut dlogits = cache.probs.clone();
        for (bi, &y) in labels.iter().enumerate() {
            dlogits[[bi, y]] -= 1.0;
        }
        dlogits.mapv_inplace(|v| v / b as f64);

        let gi = |name: &str| s.param_shapes().iter().position(|(n, _)| *n == name).expect("parameter exists");

        {
            let t = &mut grads.0[gi("dense.weight")];
            let shape = (t.shape[0], t.shape[1]);
            let mut dw = ArrayViewMut2::from_shape(shape, &mut t.data).expect("2-d");
            general_mat_mul(1.0, &dlogits.t(), &cache.flat, 0.0, &mut dw);
        }
        {
            let db = &mut grads.0[gi("dense.bias")].data;
            for row in dlogits.rows() {
                for (d, v) in db.iter_mut().zip(row) {
                    *d += v;
                }
            }
        }
        let mut dflat = Array2::<f64>::zeros((b, s.flat_len()));
        general_mat_mul(1.0, &dlogits, &self.param("dense.weight").view2(), 0.0, &mut dflat);
        let mut dp2 = Array2::<f64>::zeros((s.conv2_filters, b * hw3));
        for c in 0..s.conv2_filters {
            for bi in 0..b {
                for p in 0..hw3 {
                    dp2[[c, bi * hw3 + p]] = dflat[[bi, c * hw3 + p]];
                }
            }
        }

        let dz2 = self.block_backward(1, &cache.block2, dp2, b, h2, w2, &mut grads);
        {
            let t = &mut grads.0[gi("conv2.weight")];
            let shape = (t.shape[0], t.shape[1]);
            let mut dw = ArrayViewMut2::from_shape(shape, &mut t.data).expect("2-d");
            general_mat_mul(1.0, &dz2, &cache.cols2.t(), 0.0, &mut dw);
        }
        let mut dcols2 = Array2::<f64>::zeros(cache.cols2.raw_dim());
        general_mat_mul(1.0, &self.param("conv2.weight").view2().t(), &dz2, 0.0, &mut dcols2);
        let dp1 = col2im(dcols2.view(), s.conv1_filters, b, h2, w2);

        let dz1 = self.block_backward(0, &cache.block1, dp1, b, h, w, &mut grads);
        {
            let t = &mut grads.0[gi("conv1.weight")];
            let shape = (t.shape[0], t.shape[1]);
            let mut dw = ArrayViewMut2::from_shape(shape, &mut t.data).expect("2-d");
            general_mat_mul(1.0, &dz1, &cache.cols1.t(), 0.0, &mut dw);
        }
        grads
    }

    /// Gradient with respect to the conv output `z`, given the gradient of
    /// the pooled block output.
    #[allow(clippy::too_many_arguments)]
    fn block_backward(
        &self,
        idx: usize,
        bc: &BlockCache,
        dpooled: Array2<f64>,
        b: usize,
        h: usize,
        w: usize,
        grads: &mut Params,
    ) -> Array2<f64> {
        let c = bc.act.nrows();
        let mut dact = Array2::<f64>::zeros((c, b * h * w));
        for ch in 0..c {
            let src = dpooled.row(ch);
            let base = ch * src.len();
            let mut dst = dact.row_mut(ch);
            for (j, g) in src.iter().enumerate() {
                dst[bc.argmax[base + j] as usize] += g;
            }
        }
        if self.spec.relu {
            ndarray::Zip::from(&mut dact).and(&bc.act).for_each(|d, a| {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            });
        }
        let shapes = self.spec.param_shapes();
        let gi = |name: &str| shapes.iter().position(|(n, _)| *n == name).expect("parameter exists");
        if self.spec.batch_norm {
            let (gname, bname) = if idx == 0 { ("bn1.gamma", "bn1.beta") } else { ("bn2.gamma", "bn2.beta") };
            let gamma = &self.param(gname).data;
            let n = dact.ncols() as f64;
            let (gidx, bidx) = (gi(gname), gi(bname));
            for ch in 0..c {
                let xh = bc.xhat.row(ch);
                let mut d = dact.row_mut(ch);
                let dbeta: f64 = d.sum();
                let dgamma: f64 = d.iter().zip(xh.iter()).map(|(a, b)| a * b).sum();
                grads.0[gidx].data[ch] = dgamma;
                grads.0[bidx].data[ch] = dbeta;
                // dxhat = d * gamma; dz = inv_std / n * (n dxhat - sum dxhat - xhat sum(dxhat xhat))
                let g = gamma[ch];
                let k = bc.inv_std[ch] * g / n;
                for (dv, x) in d.iter_mut().zip(xh.iter()) {
                    *dv = k * (n * *dv - dbeta - x * dgamma);
                }
            }
        } else {
            let bname = if idx == 0 { "conv1.bias" } else { "conv2.bias" };
            let bidx = gi(bname);
            for ch in 0..c {
                grads.0[bidx].data[ch] = dact.row(ch).sum();
            }
        }
        dact
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }

    /// Checkpoint layout: magic, version (u32), spec JSON length (u32) and
    /// JSON, then every tensor in order as little-endian f64 followed by the
    /// batch-norm running statistics.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let header = serde_json::to_vec(&self.spec)?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        for t in &self.params.0 {
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for r in [&self.bn1, &self.bn2] {
            for v in r.mean.iter().chain(&r.var) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a CNN checkpoint".into()));
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let len = read_u32(r)? as usize;
        let mut header = vec![0u8; len];
        r.read_exact(&mut header)?;
        let spec: CnnSpec = serde_json::from_slice(&header)?;
        let mut model = Cnn::new(&spec, 0)?;
        for t in model.params.0.iter_mut() {
            for v in t.data.iter_mut() {
                *v = read_f64(r)?;
            }
        }
        for run in [&mut model.bn1, &mut model.bn2] {
            for v in run.mean.iter_mut() {
                *v = read_f64(r)?;
            }
            for v in run.var.iter_mut() {
                *v = read_f64(r)?;
            }
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes in checkpoint", rest.len())));
        }
        Ok(model)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// `[C, B*H*W]` to `[C*9, B*H*W]` for a 3x3 kernel with zero padding 1.
fn im2col(a: ArrayView2<'_, f64>, b: usize, h: usize, w: usize) -> Array2<f64> {
    let c = a.nrows();
    let hw = h * w;
    let mut cols = Array2::<f64>::zeros((c * 9, b * hw));
    for ch in 0..c {
        let src = a.row(ch);
        let src = src.as_slice().expect("contiguous rows");
        for dy in 0..3 {
            for dx in 0..3 {
                let mut dst = cols.row_mut(ch * 9 + dy * 3 + dx);
                let dst = dst.as_slice_mut().expect("contiguous rows");
                for bi in 0..b {
                    for y in 0..h {
                        let sy = y as isize + dy as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let srow = bi * hw + sy as usize * w;
                        let drow = bi * hw + y * w;
                        for x in 0..w {
                            let sx = x as isize + dx as isize - 1;
                            if sx >= 0 && sx < w as isize {
                                dst[drow + x] = src[srow + sx as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`].
fn col2im(cols: ArrayView2<'_, f64>, c: usize, b: usize, h: usize, w: usize) -> Array2<f64> {
    let hw = h * w;
    let mut out = Array2::<f64>::zeros((c, b * hw));
    for ch in 0..c {
        let mut dst = out.row_mut(ch);
        let dst = dst.as_slice_mut().expect("contiguous rows");
        for dy in 0..3 {
            for dx in 0..3 {
                let src = cols.row(ch * 9 + dy * 3 + dx);
                for bi in 0..b {
                    for y in 0..h {
                        let sy = y as isize + dy as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let srow = bi * hw + sy as usize * w;
                        let drow = bi * hw + y * w;
                        for x in 0..w {
                            let sx = x as isize + dx as isize - 1;
                            if sx >= 0 && sx < w as isize {
                                dst[srow + sx as usize] += src[drow + x];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Index of the maximum of every 2x2 window, flattened over channels.
fn pool_argmax(a: ArrayView2<'_, f64>, b: usize, h: usize, w: usize) -> Vec<u32> {
    let (ho, wo) = (h / 2, w / 2);
    let mut idx = Vec::with_capacity(a.nrows() * b * ho * wo);
    for ch in 0..a.nrows() {
        let row = a.row(ch);
        for bi in 0..b {
            for y in 0..ho {
                for x in 0..wo {
                    let base = bi * h * w + 2 * y * w + 2 * x;
                    let mut best = base;
                    for cand in [base + 1, base + w, base + w + 1] {
                        if row[cand] > row[best] {
                            best = cand;
                        }
                    }
                    idx.push(best as u32);
                }
            }
        }
    }
    idx
}

fn pool_output(bc: &BlockCache, c: usize, b: usize, h: usize, w: usize) -> Array2<f64> {
    let n = b * (h / 2) * (w / 2);
    let mut out = Array2::<f64>::zeros((c, n));
    for ch in 0..c {
        let src = bc.act.row(ch);
        let mut dst = out.row_mut(ch);
        for j in 0..n {
            dst[j] = src[bc.argmax[ch * n + j] as usize];
        }
    }
    out
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut p = logits.to_owned();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    p
}

/// ln p with underflow clamped; NaN passes through so divergence is seen.
pub(crate) fn clamped_ln(p: f64) -> f64 {
    if p.is_nan() {
        p
    } else {
        p.max(1e-300).ln()
    }
}

fn cross_entropy(probs: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    if labels.len() != probs.nrows() {
        return Err(Error::LengthMismatch {
            expected: probs.nrows(),
            actual: labels.len(),
        });
    }
    let mut acc = 0.0;
    for (row, &y) in probs.rows().into_iter().zip(labels) {
        if y >= probs.ncols() {
            return Err(invalid(format!("label {y} out of range")));
        }
        acc -= clamped_ln(row[y]);
    }
    Ok(acc / labels.len() as f64)
}
