//! The pose network: strided-convolution encoder with SE gating and a dense
//! projection, followed by a resize-convolution decoder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    relu_backward, relu_in_place, resize_nearest, resize_nearest_backward, sigmoid, Conv2d,
    Dense, SeBlock, SeCache,
};
use super::loss::{bce_from_probs, bce_logit_grad};
use super::tensor::Tensor3;
use crate::error::{Error, Result};
use crate::features::{NetInput, INPUT_CHANNELS, MAP_FRAMES};
use crate::figure::{PoseFigure, FIGURE_COLS, FIGURE_ROWS};
use crate::csi::SUBCARRIERS;

pub const INPUT_HW: (usize, usize) = (SUBCARRIERS, MAP_FRAMES);
pub const ENCODER_HW: [(usize, usize); 6] = [(15, 10), (15, 10), (8, 5), (8, 5), (4, 3), (4, 3)];
pub const ENCODER_KERNELS: [usize; 6] = [3, 1, 3, 1, 3, 1];
pub const ENCODER_STRIDES: [usize; 6] = [2, 1, 2, 1, 2, 1];
pub const FC_HW: (usize, usize) = (8, 10);
pub const DECODER_HW: [(usize, usize); 7] = [
    (15, 20),
    (15, 20),
    (30, 40),
    (30, 40),
    (60, 80),
    (60, 80),
    (FIGURE_ROWS, FIGURE_COLS),
];
pub const DECODER_KERNELS: [usize; 7] = [1, 1, 3, 3, 3, 3, 3];
pub const SE_REDUCTION: usize = 16;

/// Channel widths. Spatial sizes are fixed by the input and output shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub encoder_channels: [usize; 6],
    pub se_hidden: usize,
    pub fc_channels: usize,
    /// The last entry is the single output channel.
    pub decoder_channels: [usize; 7],
}

impl Architecture {
    /// Full-size network.
    pub fn standard() -> Self {
        Self {
            encoder_channels: [8, 8, 32, 32, 128, 128],
            se_hidden: 128 / SE_REDUCTION,
            fc_channels: 128,
            decoder_channels: [64, 64, 32, 32, 8, 8, 1],
        }
    }

    /// Narrow variant with the same layer structure, for gradient checks and
    /// fast tests.
    pub fn reduced() -> Self {
        Self {
            encoder_channels: [2, 2, 3, 3, 4, 4],
            se_hidden: 2,
            fc_channels: 3,
            decoder_channels: [3, 3, 2, 2, 2, 2, 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .encoder_channels
            .iter()
            .chain(&self.decoder_channels)
            .chain([&self.se_hidden, &self.fc_channels]);
        if all.into_iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument(format!("zero width in {self:?}")));
        }
        if self.decoder_channels[6] != 1 {
            return Err(Error::InvalidArgument("the output layer has one channel".into()));
        }
        Ok(())
    }

    pub fn fc_inputs(&self) -> usize {
        ENCODER_HW[5].0 * ENCODER_HW[5].1 * self.encoder_channels[5]
    }

    pub fn fc_outputs(&self) -> usize {
        FC_HW.0 * FC_HW.1 * self.fc_channels
    }
}

/// Smallest total zero padding making a `k`-tap, stride-`s` convolution map
/// `input` samples to `output`, split with the extra sample at the end.
pub fn padding_for(input: usize, output: usize, k: usize, s: usize) -> Result<[usize; 2]> {
    (0..=k + s)
        .find(|&p| input + p >= k && (input + p - k) / s + 1 == output)
        .map(|p| [p / 2, p - p / 2])
        .ok_or_else(|| Error::Shape {
            layer: "padding".into(),
            expected: format!("{output}"),
            got: format!("no padding maps {input} to {output} with k={k}, s={s}"),
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub arch: Architecture,
    pub encoder: Vec<Conv2d>,
    pub se: SeBlock,
    pub fc: Dense,
    pub decoder: Vec<Conv2d>,
}

/// Intermediate values of one sample's forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Activations {
    /// Rectified output of each encoder convolution.
    pub encoder: Vec<Tensor3>,
    pub se_cache: SeCache,
    pub se_out: Tensor3,
    /// Rectified dense output, reshaped to 8×10×C.
    pub fc_out: Tensor3,
    /// Input to each decoder convolution, after resizing.
    pub decoder_inputs: Vec<Tensor3>,
    /// Activated output of each decoder convolution; the last holds the
    /// sigmoid probabilities.
    pub decoder: Vec<Tensor3>,
}

impl Activations {
    pub fn probabilities(&self) -> &[f64] {
        self.decoder[6].data()
    }
}

impl NetworkParams {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let mut encoder = Vec::with_capacity(6);
        let (mut hw, mut cin) = (INPUT_HW, INPUT_CHANNELS);
        for i in 0..6 {
            let (k, s, out) = (ENCODER_KERNELS[i], ENCODER_STRIDES[i], ENCODER_HW[i]);
            let pad = [padding_for(hw.0, out.0, k, s)?, padding_for(hw.1, out.1, k, s)?];
            let cout = arch.encoder_channels[i];
            encoder.push(Conv2d::zeros([k, k], cin, cout, [s, s], pad));
            hw = out;
            cin = cout;
        }
        let se = SeBlock::zeros(cin, arch.se_hidden);
        let fc = Dense::zeros(arch.fc_inputs(), arch.fc_outputs());
        let mut decoder = Vec::with_capacity(7);
        let mut cin = arch.fc_channels;
        for (i, &k) in DECODER_KERNELS.iter().enumerate() {
            let p = k / 2;
            let cout = arch.decoder_channels[i];
            decoder.push(Conv2d::zeros([k, k], cin, cout, [1, 1], [[p, p], [p, p]]));
            cin = cout;
        }
        Ok(Self {
            arch,
            encoder,
            se,
            fc,
            decoder,
        })
    }

    /// Uniform fan-in scaled (He) weights and zero biases from `seed`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |w: &mut [f64], fan_in: usize| {
            let limit = (6.0 / fan_in as f64).sqrt();
            for v in w {
                *v = rng.random_range(-limit..limit);
            }
        };
        for conv in p.encoder.iter_mut().chain(p.decoder.iter_mut()) {
            fill(&mut conv.weight, conv.kh * conv.kw * conv.cin);
        }
        fill(&mut p.se.w1, p.se.channels);
        fill(&mut p.se.w2, p.se.hidden);
        fill(&mut p.fc.weight, p.fc.inputs);
        Ok(p)
    }

    /// Every parameter tensor with its name and shape, in checkpoint order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let conv = |prefix: &str, i: usize, c: &'_ Conv2d| {
            [
                (format!("{prefix}{}.weight", i + 1), vec![c.kh, c.kw, c.cin, c.cout]),
                (format!("{prefix}{}.bias", i + 1), vec![c.cout]),
            ]
        };
        let mut out: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        for (i, c) in self.encoder.iter().enumerate() {
            let [(wn, ws), (bn, bs)] = conv("encoder", i, c);
            out.push((wn, ws, &c.weight));
            out.push((bn, bs, &c.bias));
        }
        out.push(("se.w1".into(), vec![self.se.channels, self.se.hidden], &self.se.w1));
        out.push(("se.w2".into(), vec![self.se.hidden, self.se.channels], &self.se.w2));
        out.push(("fc.weight".into(), vec![self.fc.inputs, self.fc.outputs], &self.fc.weight));
        out.push(("fc.bias".into(), vec![self.fc.outputs], &self.fc.bias));
        for (i, c) in self.decoder.iter().enumerate() {
            let [(wn, ws), (bn, bs)] = conv("decoder", i, c);
            out.push((wn, ws, &c.weight));
            out.push((bn, bs, &c.bias));
        }
        out
    }

    /// Mutable views in the same order as [`NetworkParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for c in self.encoder.iter_mut() {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        out.push(&mut self.se.w1);
        out.push(&mut self.se.w2);
        out.push(&mut self.fc.weight);
        out.push(&mut self.fc.bias);
        for c in self.decoder.iter_mut() {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, _, d)| d.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn encode_convs(&self, input: &Tensor3) -> Result<(Vec<Tensor3>, SeCache, Tensor3)> {
        input.expect_dims("encoder input", (INPUT_HW.0, INPUT_HW.1, INPUT_CHANNELS))?;
        let mut acts: Vec<Tensor3> = Vec::with_capacity(6);
        for (i, conv) in self.encoder.iter().enumerate() {
            let x = acts.last().unwrap_or(input);
            let mut y = conv.forward(x);
            let (h, w) = ENCODER_HW[i];
            y.expect_dims(&format!("encoder layer{}", i + 1), (h, w, conv.cout))?;
            relu_in_place(&mut y);
            acts.push(y);
        }
        let (se_out, cache) = self.se.forward(&acts[5]);
        Ok((acts, cache, se_out))
    }

    fn fc_forward(&self, se_outs: &[&Tensor3]) -> Result<Vec<Tensor3>> {
        let xs: Vec<&[f64]> = se_outs.iter().map(|t| t.data()).collect();
        self.fc
            .forward_batch(&xs)
            .into_iter()
            .map(|mut y| {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
                Tensor3::from_vec(FC_HW.0, FC_HW.1, self.arch.fc_channels, y)
            })
            .collect()
    }

    fn decode(&self, features: &Tensor3) -> Result<(Vec<Tensor3>, Vec<Tensor3>)> {
        features.expect_dims("decoder input", (FC_HW.0, FC_HW.1, self.arch.fc_channels))?;
        let mut inputs = Vec::with_capacity(7);
        let mut outputs: Vec<Tensor3> = Vec::with_capacity(7);
        for (i, conv) in self.decoder.iter().enumerate() {
            let x = outputs.last().unwrap_or(features);
            let (h, w) = DECODER_HW[i];
            let x = if (x.height(), x.width()) == (h, w) {
                x.clone()
            } else {
                resize_nearest(x, h, w)
            };
            let mut y = conv.forward(&x);
            y.expect_dims(&format!("decoder layer{}", i + 1), (h, w, conv.cout))?;
            if i + 1 < self.decoder.len() {
                relu_in_place(&mut y);
            } else {
                y.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v));
            }
            inputs.push(x);
            outputs.push(y);
        }
        Ok((inputs, outputs))
    }

    /// Encoder up to the reshaped dense output (8×10×C).
    pub fn encoder_forward(&self, input: &NetInput) -> Result<Tensor3> {
        let (_, _, se_out) = self.encode_convs(input.tensor())?;
        Ok(self.fc_forward(&[&se_out])?.remove(0))
    }

    pub fn decoder_forward(&self, features: &Tensor3) -> Result<PoseFigure> {
        let (_, mut outputs) = self.decode(features)?;
        PoseFigure::from_pixels(outputs.pop().expect("seven layers").into_vec())
    }

    pub fn predict(&self, input: &NetInput) -> Result<PoseFigure> {
        self.decoder_forward(&self.encoder_forward(input)?)
    }

    pub fn forward_batch(&self, inputs: &[&Tensor3]) -> Result<Vec<Activations>> {
        let mut encoded = Vec::with_capacity(inputs.len());
        for x in inputs {
            encoded.push(self.encode_convs(x)?);
        }
        let se_outs: Vec<&Tensor3> = encoded.iter().map(|(_, _, s)| s).collect();
        let fc_outs = self.fc_forward(&se_outs)?;
        encoded
            .into_iter()
            .zip(fc_outs)
            .map(|((encoder, se_cache, se_out), fc_out)| {
                let (decoder_inputs, decoder) = self.decode(&fc_out)?;
                Ok(Activations {
                    encoder,
                    se_cache,
                    se_out,
                    fc_out,
                    decoder_inputs,
                    decoder,
                })
            })
            .collect()
    }

    /// Backpropagates output-logit gradients through the batch, accumulating
    /// parameter gradients into `grads`.
    pub fn backward_batch(
        &self,
        inputs: &[&Tensor3],
        acts: &[Activations],
        logit_grads: Vec<Tensor3>,
        grads: &mut NetworkParams,
    ) {
        let mut fc_grads = Vec::with_capacity(acts.len());
        for (act, mut g) in acts.iter().zip(logit_grads) {
            for i in (0..self.decoder.len()).rev() {
                if i + 1 < self.decoder.len() {
                    relu_backward(&act.decoder[i], &mut g);
                }
                let x = &act.decoder_inputs[i];
                let gx = self.decoder[i]
                    .backward(x, &g, &mut grads.decoder[i], true)
                    .expect("requested");
                let source = if i == 0 { &act.fc_out } else { &act.decoder[i - 1] };
                g = if (source.height(), source.width()) == (x.height(), x.width()) {
                    gx
                } else {
                    resize_nearest_backward(&gx, source.height(), source.width())
                };
            }
            relu_backward(&act.fc_out, &mut g);
            fc_grads.push(g);
        }

        let xs: Vec<&[f64]> = acts.iter().map(|a| a.se_out.data()).collect();
        let gys: Vec<&[f64]> = fc_grads.iter().map(|g| g.data()).collect();
        let se_grads = self.fc.backward_batch(&xs, &gys, &mut grads.fc);

        for ((act, input), gse) in acts.iter().zip(inputs).zip(se_grads) {
            let (h, w, c) = act.se_out.dims();
            let gse = Tensor3::from_vec(h, w, c, gse).expect("dense input shape");
            let mut g = self.se.backward(&act.encoder[5], &act.se_cache, &gse, &mut grads.se);
            for i in (0..self.encoder.len()).rev() {
                relu_backward(&act.encoder[i], &mut g);
                let x = if i == 0 { *input } else { &act.encoder[i - 1] };
                match self.encoder[i].backward(x, &g, &mut grads.encoder[i], i > 0) {
                    Some(gx) => g = gx,
                    None => break,
                }
            }
        }
    }

    /// Mean BCE over the batch and its gradient with respect to every
    /// parameter.
    pub fn loss_and_gradients(
        &self,
        inputs: &[&NetInput],
        targets: &[&PoseFigure],
    ) -> Result<(f64, NetworkParams)> {
        let mut grads = NetworkParams::zeros(self.arch)?;
        let losses = self.accumulate_gradients(inputs, targets, &mut grads)?;
        Ok((losses.iter().sum::<f64>() / losses.len() as f64, grads))
    }

    /// Adds the gradient of the batch-mean loss to `grads` and returns each
    /// sample's loss.
    pub fn accumulate_gradients(
        &self,
        inputs: &[&NetInput],
        targets: &[&PoseFigure],
        grads: &mut NetworkParams,
    ) -> Result<Vec<f64>> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "batch of {} inputs and {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let tensors: Vec<&Tensor3> = inputs.iter().map(|i| i.tensor()).collect();
        let acts = self.forward_batch(&tensors)?;
        let scale = 1.0 / inputs.len() as f64;
        let mut losses = Vec::with_capacity(acts.len());
        let mut logit_grads = Vec::with_capacity(acts.len());
        for (act, target) in acts.iter().zip(targets) {
            let p = act.probabilities();
            losses.push(bce_from_probs(p, target.pixels()));
            let mut g = bce_logit_grad(p, target.pixels());
            g.iter_mut().for_each(|v| *v *= scale);
            logit_grads.push(Tensor3::from_vec(FIGURE_ROWS, FIGURE_COLS, 1, g)?);
        }
        self.backward_batch(&tensors, &acts, logit_grads, grads);
        Ok(losses)
    }
}
