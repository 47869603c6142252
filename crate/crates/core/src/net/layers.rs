//! Layer primitives with hand-written backward passes.

use super::tensor::Tensor3;

/// 2-D convolution over HWC tensors. Weights are laid out
/// `[ky][kx][cin][cout]`; padding is zero and may differ per side.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub kh: usize,
    pub kw: usize,
    pub cin: usize,
    pub cout: usize,
    pub stride: [usize; 2],
    /// `[[top, bottom], [left, right]]`
    pub pad: [[usize; 2]; 2],
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv2d {
    pub fn zeros(
        kernel: [usize; 2],
        cin: usize,
        cout: usize,
        stride: [usize; 2],
        pad: [[usize; 2]; 2],
    ) -> Self {
        Self {
            kh: kernel[0],
            kw: kernel[1],
            cin,
            cout,
            stride,
            pad,
            weight: vec![0.0; kernel[0] * kernel[1] * cin * cout],
            bias: vec![0.0; cout],
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        let axis = |n: usize, k: usize, s: usize, p: [usize; 2]| (n + p[0] + p[1] - k) / s + 1;
        (
            axis(h, self.kh, self.stride[0], self.pad[0]),
            axis(w, self.kw, self.stride[1], self.pad[1]),
        )
    }

    /// Input row/column feeding output `o` through tap `k`, if inside.
    fn source(o: usize, k: usize, stride: usize, pad_before: usize, len: usize) -> Option<usize> {
        (o * stride + k).checked_sub(pad_before).filter(|&i| i < len)
    }

    pub fn forward(&self, x: &Tensor3) -> Tensor3 {
        let (h, w, cin) = x.dims();
        debug_assert_eq!(cin, self.cin);
        let (oh, ow) = self.output_hw(h, w);
        let cout = self.cout;
        let mut y = Tensor3::zeros(oh, ow, cout);
        for oy in 0..oh {
            for ox in 0..ow {
                let out = y.pixel_mut(oy, ox);
                out.copy_from_slice(&self.bias);
                for ky in 0..self.kh {
                    let Some(iy) = Self::source(oy, ky, self.stride[0], self.pad[0][0], h) else {
                        continue;
                    };
                    for kx in 0..self.kw {
                        let Some(ix) = Self::source(ox, kx, self.stride[1], self.pad[1][0], w)
                        else {
                            continue;
                        };
                        let xin = x.pixel(iy, ix);
                        let base = (ky * self.kw + kx) * cin * cout;
                        let taps = &self.weight[base..base + cin * cout];
                        for (v, row) in xin.iter().zip(taps.chunks_exact(cout)) {
                            if *v == 0.0 {
                                continue;
                            }
                            for (o, wt) in out.iter_mut().zip(row) {
                                *o += v * wt;
                            }
                        }
                    }
                }
            }
        }
        y
    }

    /// Accumulates weight and bias gradients into `grad` and returns the
    /// gradient with respect to `x` when `input_grad` is set.
    pub fn backward(
        &self,
        x: &Tensor3,
        gy: &Tensor3,
        grad: &mut Conv2d,
        input_grad: bool,
    ) -> Option<Tensor3> {
        let (h, w, cin) = x.dims();
        let (oh, ow, cout) = gy.dims();
        let mut gx = input_grad.then(|| Tensor3::zeros(h, w, cin));
        for oy in 0..oh {
            for ox in 0..ow {
                let g = gy.pixel(oy, ox);
                if g.iter().all(|v| *v == 0.0) {
                    continue;
                }
                for (b, gv) in grad.bias.iter_mut().zip(g) {
                    *b += gv;
                }
                for ky in 0..self.kh {
                    let Some(iy) = Self::source(oy, ky, self.stride[0], self.pad[0][0], h) else {
                        continue;
                    };
                    for kx in 0..self.kw {
                        let Some(ix) = Self::source(ox, kx, self.stride[1], self.pad[1][0], w)
                        else {
                            continue;
                        };
                        let base = (ky * self.kw + kx) * cin * cout;
                        let taps = &self.weight[base..base + cin * cout];
                        let gtaps = &mut grad.weight[base..base + cin * cout];
                        let xin = x.pixel(iy, ix);
                        for (v, grow) in xin.iter().zip(gtaps.chunks_exact_mut(cout)) {
                            if *v == 0.0 {
                                continue;
                            }
                            for (gw, gv) in grow.iter_mut().zip(g) {
                                *gw += v * gv;
                            }
                        }
                        if let Some(gx) = gx.as_mut() {
                            let gin = gx.pixel_mut(iy, ix);
                            for (gi, row) in gin.iter_mut().zip(taps.chunks_exact(cout)) {
                                *gi += row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
                            }
                        }
                    }
                }
            }
        }
        gx
    }
}

/// Fully connected map over a flattened input, weights `[input][output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Applies the layer to every sample, reading each weight row once for
    /// the whole batch.
    pub fn forward_batch(&self, xs: &[&[f64]]) -> Vec<Vec<f64>> {
        let mut ys: Vec<Vec<f64>> = xs.iter().map(|_| self.bias.clone()).collect();
        for (i, row) in self.weight.chunks_exact(self.outputs).enumerate() {
            for (x, y) in xs.iter().zip(ys.iter_mut()) {
                let v = x[i];
                if v == 0.0 {
                    continue;
                }
                for (o, wt) in y.iter_mut().zip(row) {
                    *o += v * wt;
                }
            }
        }
        ys
    }

    pub fn backward_batch(&self, xs: &[&[f64]], gys: &[&[f64]], grad: &mut Dense) -> Vec<Vec<f64>> {
        for gy in gys {
            for (b, g) in grad.bias.iter_mut().zip(gy.iter()) {
                *b += g;
            }
        }
        let mut gxs: Vec<Vec<f64>> = xs.iter().map(|_| vec![0.0; self.inputs]).collect();
        let rows = self
            .weight
            .chunks_exact(self.outputs)
            .zip(grad.weight.chunks_exact_mut(self.outputs));
        for (i, (row, grow)) in rows.enumerate() {
            for ((x, gy), gx) in xs.iter().zip(gys).zip(gxs.iter_mut()) {
                let v = x[i];
                if v != 0.0 {
                    for (gw, g) in grow.iter_mut().zip(gy.iter()) {
                        *gw += v * g;
                    }
                }
                gx[i] = row.iter().zip(gy.iter()).map(|(a, b)| a * b).sum();
            }
        }
        gxs
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn relu_in_place(t: &mut Tensor3) {
    for v in t.data_mut() {
        *v = v.max(0.0);
    }
}

/// Zeroes gradient entries where the rectified output was not positive.
pub fn relu_backward(output: &Tensor3, grad: &mut Tensor3) {
    for (g, y) in grad.data_mut().iter_mut().zip(output.data()) {
        if *y <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Squeeze-and-excitation gating without biases:
/// `gates = sigmoid(W₂ · relu(W₁ · mean_hw(x)))`, `y = x · gates`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeBlock {
    pub channels: usize,
    pub hidden: usize,
    /// `[channel][hidden]`
    pub w1: Vec<f64>,
    /// `[hidden][channel]`
    pub w2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeCache {
    pub squeeze: Vec<f64>,
    pub hidden: Vec<f64>,
    pub gates: Vec<f64>,
}

impl SeBlock {
    pub fn zeros(channels: usize, hidden: usize) -> Self {
        Self {
            channels,
            hidden,
            w1: vec![0.0; channels * hidden],
            w2: vec![0.0; hidden * channels],
        }
    }

    pub fn gates(&self, x: &Tensor3) -> SeCache {
        let (h, w, c) = x.dims();
        let mut squeeze = vec![0.0; c];
        for px in x.data().chunks_exact(c) {
            for (s, v) in squeeze.iter_mut().zip(px) {
                *s += v;
            }
        }
        for s in squeeze.iter_mut() {
            *s /= (h * w) as f64;
        }
        let mut hidden = vec![0.0; self.hidden];
        for (s, row) in squeeze.iter().zip(self.w1.chunks_exact(self.hidden)) {
            for (z, wt) in hidden.iter_mut().zip(row) {
                *z += s * wt;
            }
        }
        for z in hidden.iter_mut() {
            *z = z.max(0.0);
        }
        let mut gates = vec![0.0; c];
        for (z, row) in hidden.iter().zip(self.w2.chunks_exact(c)) {
            for (g, wt) in gates.iter_mut().zip(row) {
                *g += z * wt;
            }
        }
        for g in gates.iter_mut() {
            *g = sigmoid(*g);
        }
        SeCache {
            squeeze,
            hidden,
            gates,
        }
    }

    pub fn forward(&self, x: &Tensor3) -> (Tensor3, SeCache) {
        let cache = self.gates(x);
        let mut y = x.clone();
        let c = self.channels;
        for px in y.data_mut().chunks_exact_mut(c) {
            for (v, g) in px.iter_mut().zip(&cache.gates) {
                *v *= g;
            }
        }
        (y, cache)
    }

    pub fn backward(&self, x: &Tensor3, cache: &SeCache, gy: &Tensor3, grad: &mut SeBlock) -> Tensor3 {
        let (h, w, c) = x.dims();
        let mut gx = gy.clone();
        let mut dgate = vec![0.0; c];
        for ((gpx, xpx), gxpx) in gy
            .data()
            .chunks_exact(c)
            .zip(x.data().chunks_exact(c))
            .zip(gx.data_mut().chunks_exact_mut(c))
        {
            for ch in 0..c {
                dgate[ch] += gpx[ch] * xpx[ch];
                gxpx[ch] = gpx[ch] * cache.gates[ch];
            }
        }
        let dz2: Vec<f64> = dgate
            .iter()
            .zip(&cache.gates)
            .map(|(d, g)| d * g * (1.0 - g))
            .collect();
        let mut dhidden = vec![0.0; self.hidden];
        for (j, (row, grow)) in self
            .w2
            .chunks_exact(c)
            .zip(grad.w2.chunks_exact_mut(c))
            .enumerate()
        {
            for ch in 0..c {
                grow[ch] += cache.hidden[j] * dz2[ch];
            }
            if cache.hidden[j] > 0.0 {
                dhidden[j] = row.iter().zip(&dz2).map(|(a, b)| a * b).sum();
            }
        }
        let scale = 1.0 / (h * w) as f64;
        let mut dsqueeze = vec![0.0; c];
        for (ch, (row, grow)) in self
            .w1
            .chunks_exact(self.hidden)
            .zip(grad.w1.chunks_exact_mut(self.hidden))
            .enumerate()
        {
            for j in 0..self.hidden {
                grow[j] += cache.squeeze[ch] * dhidden[j];
            }
            dsqueeze[ch] = row.iter().zip(&dhidden).map(|(a, b)| a * b).sum::<f64>() * scale;
        }
        for px in gx.data_mut().chunks_exact_mut(c) {
            for (v, d) in px.iter_mut().zip(&dsqueeze) {
                *v += d;
            }
        }
        gx
    }
}

/// Source index of nearest-neighbour resizing from `input` to `output`
/// samples along one axis.
pub fn nearest_source(dst: usize, input: usize, output: usize) -> usize {
    dst * input / output
}

pub fn resize_nearest(x: &Tensor3, oh: usize, ow: usize) -> Tensor3 {
    let (h, w, c) = x.dims();
    let mut y = Tensor3::zeros(oh, ow, c);
    for oy in 0..oh {
        let sy = nearest_source(oy, h, oh);
        for ox in 0..ow {
            let sx = nearest_source(ox, w, ow);
            y.pixel_mut(oy, ox).copy_from_slice(x.pixel(sy, sx));
        }
    }
    y
}

/// Adjoint of [`resize_nearest`]: every output gradient flows to its source.
pub fn resize_nearest_backward(gy: &Tensor3, h: usize, w: usize) -> Tensor3 {
    let (oh, ow, c) = gy.dims();
    let mut gx = Tensor3::zeros(h, w, c);
    for oy in 0..oh {
        let sy = nearest_source(oy, h, oh);
        for ox in 0..ow {
            let sx = nearest_source(ox, w, ow);
            let g = gy.pixel(oy, ox).to_vec();
            for (a, b) in gx.pixel_mut(sy, sx).iter_mut().zip(&g) {
                *a += b;
            }
        }
    }
    gx
}
