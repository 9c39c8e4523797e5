//! Brute-force reference: enumerates every tensor an op touches with its
//! full (head-split) shape and sums shape products, and replays a whole
//! network's tensor lifetimes to find the activation peak.
//!
//! Shares nothing with the library except the model/shape input types.

#![allow(dead_code)]

use llm_roofline::{InferenceShape, ModelConfig, QuantSpec};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Class {
    Weight,
    Act,
    Kv,
}

#[derive(Clone, Debug)]
pub struct Tensor {
    pub shape: Vec<u64>,
    pub class: Class,
}

impl Tensor {
    fn new(class: Class, shape: &[u64]) -> Self {
        Self {
            shape: shape.to_vec(),
            class,
        }
    }

    pub fn elems(&self) -> u64 {
        self.shape.iter().product()
    }

    pub fn bytes(&self, q: &QuantSpec) -> f64 {
        let bits = match self.class {
            Class::Weight => q.w_bits,
            Class::Act => q.a_bits,
            Class::Kv => q.kv_bits,
        };
        self.elems() as f64 * f64::from(bits) / 8.0
    }
}

#[derive(Clone, Debug)]
pub struct OracleOp {
    pub name: &'static str,
    pub ops: f64,
    pub reads: Vec<Tensor>,
    pub writes: Vec<Tensor>,
    pub per_layer: u64,
}

impl OracleOp {
    pub fn bytes(&self, q: &QuantSpec) -> f64 {
        self.reads.iter().chain(&self.writes).map(|t| t.bytes(q)).sum()
    }
}

/// `[b, t, k] x [k, n] -> [b, t, n]`
fn linear(name: &'static str, b: u64, t: u64, k: u64, n: u64, out: Class) -> OracleOp {
    let y = Tensor::new(out, &[b, t, n]);
    OracleOp {
        name,
        ops: 2.0 * (y.elems() * k) as f64,
        reads: vec![Tensor::new(Class::Act, &[b, t, k]), Tensor::new(Class::Weight, &[k, n])],
        writes: vec![y],
        per_layer: 1,
    }
}

fn elementwise(name: &'static str, per_elem: f64, shape: &[u64], per_layer: u64) -> OracleOp {
    let x = Tensor::new(Class::Act, shape);
    OracleOp {
        name,
        ops: per_elem * x.elems() as f64,
        reads: vec![x.clone()],
        writes: vec![x],
        per_layer,
    }
}

pub struct Step {
    pub tokens: u64,
    pub span: u64,
}

pub fn prefill(shape: &InferenceShape) -> Step {
    Step {
        tokens: shape.prompt_len,
        span: shape.prompt_len,
    }
}

pub fn decode(context: u64) -> Step {
    Step {
        tokens: 1,
        span: context + 1,
    }
}

/// Per-layer ops in dataflow order followed by the global ones.
pub fn oracle_ops(m: &ModelConfig, shape: &InferenceShape, step: &Step, fused: bool) -> Vec<OracleOp> {
    let (b, t, s) = (shape.batch_size, step.tokens, step.span);
    let d = m.hidden_size;
    let (h, hkv) = (m.num_heads, m.num_kv_heads);
    let hd = d / h;
    let mut ops = Vec::new();

    ops.push(OracleOp {
        name: "embedding",
        ops: 0.0,
        reads: vec![Tensor::new(Class::Weight, &[b, t, d])],
        writes: vec![Tensor::new(Class::Act, &[b, t, d])],
        per_layer: 0,
    });
    ops.push(elementwise("norm", 7.0, &[b, t, d], 2));
    ops.push(linear("q_proj", b, t, d, d, Class::Act));
    ops.push(linear("k_proj", b, t, d, hkv * hd, Class::Kv));
    ops.push(linear("v_proj", b, t, d, hkv * hd, Class::Kv));

    let q = Tensor::new(Class::Act, &[b, h, t, hd]);
    let keys = Tensor::new(Class::Kv, &[b, hkv, s, hd]);
    let values = Tensor::new(Class::Kv, &[b, hkv, s, hd]);
    let scores = Tensor::new(Class::Act, &[b, h, t, s]);
    let out = Tensor::new(Class::Act, &[b, h, t, hd]);
    let qk = OracleOp {
        name: "qk_matmul",
        ops: 2.0 * (scores.elems() * hd) as f64,
        reads: vec![q.clone(), keys.clone()],
        writes: vec![scores.clone()],
        per_layer: 1,
    };
    let softmax = elementwise("softmax", 5.0, &[b, h, t, s], 1);
    let sv = OracleOp {
        name: "sv_matmul",
        ops: 2.0 * (out.elems() * s) as f64,
        reads: vec![scores, values.clone()],
        writes: vec![out.clone()],
        per_layer: 1,
    };
    if fused {
        ops.push(OracleOp {
            name: "fused_attention",
            ops: qk.ops + softmax.ops + sv.ops,
            reads: vec![q, keys, values],
            writes: vec![out],
            per_layer: 1,
        });
    } else {
        ops.extend([qk, softmax, sv]);
    }
    ops.push(linear("o_proj", b, t, d, d, Class::Act));
    ops.push(elementwise("add", 1.0, &[b, t, d], 2));
    ops.push(linear("gate_proj", b, t, d, m.intermediate_size, Class::Act));
    ops.push(linear("up_proj", b, t, d, m.intermediate_size, Class::Act));
    ops.push(linear("down_proj", b, t, m.intermediate_size, d, Class::Act));
    if m.include_lm_head {
        let mut head = linear("lm_head", b, 1, d, m.vocab_size, Class::Act);
        head.per_layer = 0;
        ops.push(head);
    }
    ops
}

/// Sum over every weight tensor in the network.
pub fn oracle_params(m: &ModelConfig) -> u64 {
    let d = m.hidden_size;
    let kv = m.num_kv_heads * (d / m.num_heads);
    let di = m.intermediate_size;
    let layer: Vec<[u64; 2]> = vec![
        [d, d],
        [d, kv],
        [d, kv],
        [d, d],
        [d, di],
        [d, di],
        [di, d],
        [1, d],
        [1, d],
    ];
    let mut total: u64 = 0;
    for _ in 0..m.num_layers {
        total += layer.iter().map(|s| s[0] * s[1]).sum::<u64>();
    }
    total += d; // final norm
    total += m.vocab_size * d;
    if m.include_lm_head {
        total += d * m.vocab_size;
    }
    total
}

/// Named tensor with its producer and consumers, as op indices in execution order.
struct Lifetime {
    bytes: f64,
    produced: usize,
    last_use: usize,
}

/// Replays the full network (every layer) and returns the maximum of live
/// activation bytes, measured after each op's outputs are allocated and
/// before its dead inputs are freed.
pub fn oracle_activation_peak(m: &ModelConfig, shape: &InferenceShape, step: &Step, q: &QuantSpec, fused: bool) -> f64 {
    let (b, t, s) = (shape.batch_size, step.tokens, step.span);
    let d = m.hidden_size;
    let h = m.num_heads;
    let act = |elems: u64| elems as f64 * f64::from(q.a_bits) / 8.0;

    // Build a tensor table: (name, bytes, producer op, consumer ops).
    let mut tensors: Vec<(String, f64, usize, Vec<usize>)> = Vec::new();
    let mut op_index = 0usize;
    let mut next = || {
        let i = op_index;
        op_index += 1;
        i
    };
    let emb = next();
    let mut x_name = "x0".to_string();
    tensors.push((x_name.clone(), act(b * t * d), emb, vec![]));

    let consume = |tensors: &mut Vec<(String, f64, usize, Vec<usize>)>, name: &str, op: usize| {
        let t = tensors.iter_mut().find(|t| t.0 == name).expect("tensor exists");
        t.3.push(op);
    };

    for layer in 0..m.num_layers {
        let p = |n: &str| format!("l{layer}.{n}");
        let norm1 = next();
        consume(&mut tensors, &x_name, norm1);
        tensors.push((p("h1"), act(b * t * d), norm1, vec![]));
        let qp = next();
        consume(&mut tensors, &p("h1"), qp);
        tensors.push((p("q"), act(b * t * d), qp, vec![]));
        let kp = next();
        consume(&mut tensors, &p("h1"), kp);
        let vp = next();
        consume(&mut tensors, &p("h1"), vp);
        if fused {
            let fa = next();
            consume(&mut tensors, &p("q"), fa);
            tensors.push((p("attn"), act(b * t * d), fa, vec![]));
        } else {
            let qk = next();
            consume(&mut tensors, &p("q"), qk);
            tensors.push((p("scores"), act(b * h * t * s), qk, vec![]));
            let sm = next();
            consume(&mut tensors, &p("scores"), sm);
            tensors.push((p("probs"), act(b * h * t * s), sm, vec![]));
            let sv = next();
            consume(&mut tensors, &p("probs"), sv);
            tensors.push((p("attn"), act(b * t * d), sv, vec![]));
        }
        let op = next();
        consume(&mut tensors, &p("attn"), op);
        tensors.push((p("o"), act(b * t * d), op, vec![]));
        let add1 = next();
        consume(&mut tensors, &p("o"), add1);
        consume(&mut tensors, &x_name, add1);
        tensors.push((p("x2"), act(b * t * d), add1, vec![]));
        let norm2 = next();
        consume(&mut tensors, &p("x2"), norm2);
        tensors.push((p("h2"), act(b * t * d), norm2, vec![]));
        let gate = next();
        consume(&mut tensors, &p("h2"), gate);
        tensors.push((p("g"), act(b * t * m.intermediate_size), gate, vec![]));
        let up = next();
        consume(&mut tensors, &p("h2"), up);
        tensors.push((p("u"), act(b * t * m.intermediate_size), up, vec![]));
        let down = next();
        consume(&mut tensors, &p("g"), down);
        consume(&mut tensors, &p("u"), down);
        tensors.push((p("m"), act(b * t * d), down, vec![]));
        let add2 = next();
        consume(&mut tensors, &p("m"), add2);
        consume(&mut tensors, &p("x2"), add2);
        x_name = p("out");
        tensors.push((x_name.clone(), act(b * t * d), add2, vec![]));
    }
    let n_ops;
    if m.include_lm_head {
        let head = next();
        consume(&mut tensors, &x_name, head);
        tensors.push(("logits".into(), act(b * m.vocab_size), head, vec![head]));
        n_ops = head + 1;
    } else {
        n_ops = op_index;
        // final hidden state is the step's output, consumed at the end
        let last = n_ops;
        consume(&mut tensors, &x_name, last.saturating_sub(1));
    }

    let lifetimes: Vec<Lifetime> = tensors
        .iter()
        .map(|(_, bytes, produced, consumers)| Lifetime {
            bytes: *bytes,
            produced: *produced,
            last_use: consumers.iter().copied().max().unwrap_or(*produced),
        })
        .collect();

    let mut peak: f64 = 0.0;
    for i in 0..n_ops {
        let live: f64 = lifetimes
            .iter()
            .filter(|l| l.produced <= i && l.last_use >= i)
            .map(|l| l.bytes)
            .sum();
        peak = peak.max(live);
    }
    peak
}

/// Weights + KV cache (every K and V tensor of every active layer) +
/// activation peak over the stages that run.
pub fn oracle_memory_total(m: &ModelConfig, shape: &InferenceShape, q: &QuantSpec, fused: bool, context: u64) -> f64 {
    let weights = oracle_params(m) as f64 * f64::from(q.w_bits) / 8.0;
    let hd = m.hidden_size / m.num_heads;
    let mut kv = 0.0;
    for _ in 0..m.num_layers {
        for _ in 0..2 {
            kv += Tensor::new(Class::Kv, &[shape.batch_size, m.num_kv_heads, context, hd]).bytes(q);
        }
    }
    let mut act: f64 = 0.0;
    if shape.prompt_len > 0 {
        act = act.max(oracle_activation_peak(m, shape, &prefill(shape), q, fused));
    }
    if shape.gen_len > 0 {
        let step = Step {
            tokens: 1,
            span: context.max(1),
        };
        act = act.max(oracle_activation_peak(m, shape, &step, q, fused));
    }
    weights + kv + act
}
