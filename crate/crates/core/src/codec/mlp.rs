use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::quantize::{quantize_with_gradient, sigmoid, Quantized};
use super::Codec;
use crate::bits::BitVector;
use crate::error::{domain, parse_err, Result};

pub const CODEC_MAGIC: &str = "mlpcodec v1";

/// Hidden-layer nonlinearity. Output layers always use the logistic sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Fully connected layer, `y = W x + b` with `W` stored row-major
/// (`outputs × inputs`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights, zero bias.
    fn random(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weights
            .chunks_exact(self.inputs.max(1))
            .take(self.outputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi))
            .collect()
    }

    /// Accumulates parameter gradients into `grad` and returns `∂/∂x`.
    fn backward(&self, x: &[f64], grad_out: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut grad_in = vec![0.0; self.inputs];
        for (o, &g) in grad_out.iter().enumerate() {
            grad.bias[o] += g;
            let row = o * self.inputs;
            for i in 0..self.inputs {
                grad.weights[row + i] += g * x[i];
                grad_in[i] += g * self.weights[row + i];
            }
        }
        grad_in
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Layer inputs and pre-activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct StackTrace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl StackTrace {
    /// Pre-activation of the last layer.
    pub fn output_pre(&self) -> &[f64] {
        self.pre.last().expect("non-empty stack")
    }
}

fn forward_stack(layers: &[Dense], x: &[f64], act: Activation) -> StackTrace {
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut cur = x.to_vec();
    for (i, layer) in layers.iter().enumerate() {
        let z = layer.forward(&cur);
        inputs.push(cur);
        cur = if i + 1 < layers.len() {
            z.iter().map(|&v| act.apply(v)).collect()
        } else {
            Vec::new()
        };
        pre.push(z);
    }
    StackTrace { inputs, pre }
}

fn backward_stack(
    layers: &[Dense],
    act: Activation,
    trace: &StackTrace,
    grad_output_pre: &[f64],
    grads: &mut [Dense],
) -> Vec<f64> {
    let mut g = grad_output_pre.to_vec();
    for i in (0..layers.len()).rev() {
        let grad_in = layers[i].backward(&trace.inputs[i], &g, &mut grads[i]);
        g = if i > 0 {
            grad_in
                .iter()
                .zip(&trace.pre[i - 1])
                .map(|(gi, &z)| gi * act.derivative(z))
                .collect()
        } else {
            grad_in
        };
    }
    g
}

/// Encoder forward pass: layer trace plus the quantized middle layer.
#[derive(Debug, Clone)]
pub struct EncoderTrace {
    pub stack: StackTrace,
    pub quantized: Quantized,
}

/// Decoder forward pass: layer trace plus the sigmoid outputs.
#[derive(Debug, Clone)]
pub struct DecoderTrace {
    pub stack: StackTrace,
    pub probs: Vec<f64>,
}

/// Multilayer encoder/decoder with a binary middle layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpCodec {
    d_in: usize,
    d_mem: usize,
    activation: Activation,
    encoder: Vec<Dense>,
    decoder: Vec<Dense>,
}

/// Parameter gradients laid out like the codec.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
}

impl MlpGrads {
    pub fn flat(&self) -> Vec<f64> {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .flat_map(|l| l.params().copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .all(|l| l.params().all(|v| v.is_finite()))
    }
}

fn layer_sizes(first: usize, hidden: &[usize], last: usize) -> Vec<usize> {
    std::iter::once(first)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(last))
        .collect()
}

impl MlpCodec {
    /// Randomly initialized codec `d_in → encoder_hidden… → d_mem →
    /// decoder_hidden… → d_in`.
    pub fn new(
        d_in: usize,
        d_mem: usize,
        encoder_hidden: &[usize],
        decoder_hidden: &[usize],
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let enc = layer_sizes(d_in, encoder_hidden, d_mem);
        let dec = layer_sizes(d_mem, decoder_hidden, d_in);
        if enc.contains(&0) || dec.contains(&0) {
            return domain("layer sizes must be positive");
        }
        Ok(Self {
            d_in,
            d_mem,
            activation,
            encoder: enc
                .windows(2)
                .map(|w| Dense::random(w[0], w[1], rng))
                .collect(),
            decoder: dec
                .windows(2)
                .map(|w| Dense::random(w[0], w[1], rng))
                .collect(),
        })
    }

    /// Codec with every weight and bias set to zero.
    pub fn zeros(
        d_in: usize,
        d_mem: usize,
        encoder_hidden: &[usize],
        decoder_hidden: &[usize],
        activation: Activation,
    ) -> Result<Self> {
        let enc = layer_sizes(d_in, encoder_hidden, d_mem);
        let dec = layer_sizes(d_mem, decoder_hidden, d_in);
        if enc.contains(&0) || dec.contains(&0) {
            return domain("layer sizes must be positive");
        }
        Ok(Self {
            d_in,
            d_mem,
            activation,
            encoder: enc.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            decoder: dec.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn encoder_layers(&self) -> &[Dense] {
        &self.encoder
    }

    pub fn decoder_layers(&self) -> &[Dense] {
        &self.decoder
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            encoder: self
                .encoder
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
            decoder: self
                .decoder
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .flat_map(|l| l.params().copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return domain(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                values.len()
            ));
        }
        for (p, v) in self
            .encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .flat_map(|l| l.params_mut())
            .zip(values)
        {
            *p = *v;
        }
        Ok(())
    }

    /// `θ ← θ − lr · ∇θ`.
    pub fn apply_gradient(&mut self, grads: &MlpGrads, learning_rate: f64) {
        let layers = self.encoder.iter_mut().chain(self.decoder.iter_mut());
        let glayers = grads.encoder.iter().chain(&grads.decoder);
        for (l, g) in layers.zip(glayers) {
            for (p, d) in l.params_mut().zip(g.params()) {
                *p -= learning_rate * d;
            }
        }
    }

    pub fn encode_trace(&self, e: &BitVector) -> Result<EncoderTrace> {
        e.ensure_dim(self.d_in, "encode")?;
        let stack = forward_stack(&self.encoder, &e.to_f64(), self.activation);
        let quantized = quantize_with_gradient(stack.output_pre())?;
        Ok(EncoderTrace { stack, quantized })
    }

    pub fn decode_trace(&self, m: &BitVector) -> Result<DecoderTrace> {
        m.ensure_dim(self.d_mem, "decode")?;
        let stack = forward_stack(&self.decoder, &m.to_f64(), self.activation);
        let probs = stack.output_pre().iter().map(|&z| sigmoid(z)).collect();
        Ok(DecoderTrace { stack, probs })
    }

    /// Backpropagates a gradient on the encoder output pre-activations.
    pub fn backward_encoder(&self, trace: &EncoderTrace, grad_pre: &[f64], grads: &mut MlpGrads) {
        backward_stack(
            &self.encoder,
            self.activation,
            &trace.stack,
            grad_pre,
            &mut grads.encoder,
        );
    }

    /// Backpropagates a gradient on the decoder output pre-activations and
    /// returns the gradient with respect to the memory bits.
    pub fn backward_decoder(
        &self,
        trace: &DecoderTrace,
        grad_pre: &[f64],
        grads: &mut MlpGrads,
    ) -> Vec<f64> {
        backward_stack(
            &self.decoder,
            self.activation,
            &trace.stack,
            grad_pre,
            &mut grads.decoder,
        )
    }

    /// Writes the versioned text checkpoint.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        let sizes = |layers: &[Dense]| {
            std::iter::once(layers[0].inputs)
                .chain(layers.iter().map(|l| l.outputs))
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::new();
        writeln!(out, "{CODEC_MAGIC}").unwrap();
        writeln!(
            out,
            "d_in={} d_mem={} activation={}",
            self.d_in,
            self.d_mem,
            self.activation.name()
        )
        .unwrap();
        writeln!(out, "encoder {}", sizes(&self.encoder)).unwrap();
        writeln!(out, "decoder {}", sizes(&self.decoder)).unwrap();
        for (part, layers) in [("encoder", &self.encoder), ("decoder", &self.decoder)] {
            for (i, l) in layers.iter().enumerate() {
                writeln!(out, "layer {part} {i} in={} out={}", l.inputs, l.outputs).unwrap();
                for row in l.weights.chunks_exact(l.inputs) {
                    writeln!(out, "w {}", join_floats(row)).unwrap();
                }
                writeln!(out, "b {}", join_floats(&l.bias)).unwrap();
            }
        }
        sink.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load<R: Read>(source: R) -> Result<Self> {
        let mut lines = Vec::new();
        for line in BufReader::new(source).lines() {
            lines.push(line?);
        }
        let mut cursor = LineCursor {
            lines: &lines,
            pos: 0,
        };

        if cursor.next()?.1 != CODEC_MAGIC {
            return Err(parse_err(1, "bad header"));
        }
        let (ln, dims) = cursor.next()?;
        let mut d_in = None;
        let mut d_mem = None;
        let mut activation = None;
        for field in dims.split_whitespace() {
            match field.split_once('=') {
                Some(("d_in", v)) => d_in = v.parse().ok(),
                Some(("d_mem", v)) => d_mem = v.parse().ok(),
                Some(("activation", v)) => activation = Activation::parse(v),
                _ => return Err(parse_err(ln, format!("unknown field {field:?}"))),
            }
        }
        let (d_in, d_mem, activation): (usize, usize, Activation) = match (d_in, d_mem, activation)
        {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(parse_err(ln, "expected d_in, d_mem and activation")),
        };
        let enc_sizes = cursor.sizes("encoder")?;
        let dec_sizes = cursor.sizes("decoder")?;
        if enc_sizes.first() != Some(&d_in)
            || enc_sizes.last() != Some(&d_mem)
            || dec_sizes.first() != Some(&d_mem)
            || dec_sizes.last() != Some(&d_in)
        {
            return Err(parse_err(
                cursor.pos,
                "layer sizes disagree with d_in/d_mem",
            ));
        }
        let mut read_layers = |part: &str, sizes: &[usize]| -> Result<Vec<Dense>> {
            let mut layers = Vec::new();
            for (i, w) in sizes.windows(2).enumerate() {
                let (ln, head) = cursor.next()?;
                let expected = format!("layer {part} {i} in={} out={}", w[0], w[1]);
                if head != expected {
                    return Err(parse_err(ln, format!("expected {expected:?}")));
                }
                let mut layer = Dense::zeros(w[0], w[1]);
                for r in 0..w[1] {
                    let row = cursor.floats("w", w[0])?;
                    layer.weights[r * w[0]..(r + 1) * w[0]].copy_from_slice(&row);
                }
                layer.bias = cursor.floats("b", w[1])?;
                layers.push(layer);
            }
            Ok(layers)
        };
        let encoder = read_layers("encoder", &enc_sizes)?;
        let decoder = read_layers("decoder", &dec_sizes)?;
        if cursor.pos != lines.len() {
            return Err(parse_err(cursor.pos + 1, "trailing content"));
        }
        Ok(Self {
            d_in,
            d_mem,
            activation,
            encoder,
            decoder,
        })
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

struct LineCursor<'a> {
    lines: &'a [String],
    pos: usize,
}

impl<'a> LineCursor<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| parse_err(self.pos + 1, "unexpected end of file"))?;
        self.pos += 1;
        Ok((self.pos, line.as_str()))
    }

    fn sizes(&mut self, part: &str) -> Result<Vec<usize>> {
        let (ln, line) = self.next()?;
        let list = line
            .strip_prefix(part)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| parse_err(ln, format!("expected `{part} <sizes>`")))?;
        let sizes = list
            .split(',')
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err(ln, "bad layer size"))?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(parse_err(ln, "need at least two positive layer sizes"));
        }
        Ok(sizes)
    }

    fn floats(&mut self, tag: &str, count: usize) -> Result<Vec<f64>> {
        let (ln, line) = self.next()?;
        let mut parts = line.split(' ');
        if parts.next() != Some(tag) {
            return Err(parse_err(ln, format!("expected `{tag}` row")));
        }
        let values = parts
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| parse_err(ln, "bad number"))?;
        if values.len() != count {
            return Err(parse_err(
                ln,
                format!("expected {count} values, got {}", values.len()),
            ));
        }
        Ok(values)
    }
}

impl Codec for MlpCodec {
    fn d_in(&self) -> usize {
        self.d_in
    }

    fn d_mem(&self) -> usize {
        self.d_mem
    }

    fn encode(&self, e: &BitVector) -> Result<BitVector> {
        Ok(self.encode_trace(e)?.quantized.bits)
    }

    fn decode_probs(&self, m: &BitVector) -> Result<Vec<f64>> {
        Ok(self.decode_trace(m)?.probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use rand::SeedableRng;

    fn codec(seed: u64) -> MlpCodec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MlpCodec::new(4, 3, &[5], &[6], Activation::Tanh, &mut rng).unwrap()
    }

    #[test]
    fn zero_weights_give_half_and_ones() {
        let c = MlpCodec::zeros(3, 2, &[4], &[], Activation::Tanh).unwrap();
        let e: BitVector = "101".parse().unwrap();
        assert_eq!(c.encode(&e).unwrap().to_string(), "11");
        assert_eq!(
            c.decode_probs(&"01".parse().unwrap()).unwrap(),
            vec![0.5; 3]
        );
    }

    #[test]
    fn encode_is_deterministic() {
        let a = codec(7);
        let b = codec(7);
        assert_eq!(a, b);
        for i in 0..16 {
            let e = BitVector::from_index(i, 4);
            let m = a.encode(&e).unwrap();
            assert_eq!(m, a.encode(&e).unwrap());
            assert_eq!(m, b.encode(&e).unwrap());
            let p = a.decode_probs(&m).unwrap();
            assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
        }
        assert_ne!(codec(7), codec(8));
    }

    #[test]
    fn dimension_mismatch() {
        let c = codec(0);
        assert!(c.encode(&BitVector::zeros(3)).is_err());
        assert!(c.decode_probs(&BitVector::zeros(4)).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let c = codec(3);
        let mut buf = Vec::new();
        c.save(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "mlpcodec v1\nd_in=4 d_mem=3 activation=tanh\nencoder 4,5,3\ndecoder 3,6,4\n"
        ));
        let back = MlpCodec::load(&buf[..]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.params_flat(), c.params_flat());
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let c = codec(3);
        let mut buf = Vec::new();
        c.save(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            MlpCodec::load(truncated.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let corrupted = text.replacen("w ", "w nan ", 1);
        assert!(matches!(
            MlpCodec::load(corrupted.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn flat_params_round_trip() {
        let mut c = codec(1);
        let mut p = c.params_flat();
        assert_eq!(p.len(), c.num_params());
        p[0] += 1.0;
        c.set_params_flat(&p).unwrap();
        assert_eq!(c.params_flat(), p);
        assert!(c.set_params_flat(&p[1..]).is_err());
    }
}
