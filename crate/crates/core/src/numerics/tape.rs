//! Reverse-mode differentiation over a dynamically recorded tape.
//!
//! Every value on the tape is a row-major matrix. Operations append a node
//! holding their output and enough context for the vector-Jacobian product;
//! [`Tape::backward`] walks the nodes in reverse creation order, which is a
//! valid topological order because nodes can only refer to earlier nodes.
//!
//! The ReLU derivative at exactly zero is taken to be zero.

use super::linalg::{matmul, matmul_nt, matmul_tn};
use super::{Gradients, ParamId, ParamSet, Tensor};
use crate::math;
use alloc::vec;
use alloc::vec::Vec;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Gather {
        table: Var,
        ids: Vec<usize>,
    },
    ConcatCols(Vec<Var>),
    SliceCols {
        x: Var,
        start: usize,
    },
    StackRows(Vec<Var>),
    SliceRows {
        x: Var,
        start: usize,
    },
    MeanRows(Var),
    Sum(Var),
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        probs: Vec<f64>,
    },
    Dropout {
        x: Var,
        mask: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    needs_grad: bool,
    op: Op,
}

/// Operation recorder. Borrows the parameter set it reads weights from.
pub struct Tape<'p> {
    params: Option<&'p ParamSet>,
    nodes: Vec<Node>,
}

/// Per-node gradient buffers during a backward pass. Parameter nodes write
/// straight into the caller's [`Gradients`] when one is supplied, so no
/// parameter-sized temporaries are allocated per tape.
struct Accumulator<'s> {
    grads: Vec<Option<Vec<f64>>>,
    sink: Option<&'s mut Gradients>,
}

impl Accumulator<'_> {
    fn slot(&mut self, tape: &Tape<'_>, v: Var) -> &mut [f64] {
        let node = &tape.nodes[v.0];
        if let (Op::Param(id), Some(sink)) = (&node.op, self.sink.as_deref_mut()) {
            return &mut sink.buffers[id.0];
        }
        let n = node.rows * node.cols;
        self.grads[v.0].get_or_insert_with(|| vec![0.0; n])
    }

    fn add(&mut self, tape: &Tape<'_>, v: Var, it: impl Iterator<Item = f64>) {
        if !tape.ng(v) {
            return;
        }
        let slot = self.slot(tape, v);
        slot.iter_mut().zip(it).for_each(|(s, d)| *s += d);
    }
}

/// Gradients of every node reached from the loss.
pub struct Backward {
    grads: Vec<Option<Vec<f64>>>,
}

impl Backward {
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Tape {
            params: None,
            nodes: Vec::new(),
        }
    }

    pub fn with_params(params: &'p ParamSet) -> Self {
        Tape {
            params: Some(params),
            nodes: Vec::with_capacity(1024),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => self
                .params
                .expect("param node without params")
                .value(id)
                .data(),
            _ => &node.value,
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn rows(&self, v: Var) -> usize {
        self.nodes[v.0].rows
    }

    pub fn cols(&self, v: Var) -> usize {
        self.nodes[v.0].cols
    }

    pub fn row(&self, v: Var, r: usize) -> &[f64] {
        let c = self.cols(v);
        &self.value(v)[r * c..(r + 1) * c]
    }

    /// Copy a node's value out as a `rows × cols` tensor.
    pub fn tensor(&self, v: Var) -> Tensor {
        let (r, c) = self.shape(v);
        Tensor::from_parts(vec![r, c], self.value(v).to_vec())
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, needs_grad: bool, op: Op) -> Var {
        debug_assert!(matches!(op, Op::Param(_)) || rows * cols == value.len());
        self.nodes.push(Node {
            rows,
            cols,
            value,
            needs_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Differentiable input (gradients are reported by [`Backward::wrt`]).
    pub fn input(&mut self, t: &Tensor) -> Var {
        self.push(t.rows(), t.cols(), t.data().to_vec(), true, Op::Leaf)
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Var {
        self.push(rows, cols, data, false, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let t = self.params.expect("tape has no parameter set").value(id);
        let (r, c) = (t.rows(), t.cols());
        self.push(r, c, Vec::new(), true, Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        assert_eq!(k, k2, "matmul inner dimensions {m}x{k} · {k2}x{n}");
        let mut out = vec![0.0; m * n];
        matmul(self.value(a), self.value(b), &mut out, m, k, n, false);
        let ng = self.ng(a) || self.ng(b);
        self.push(m, n, out, ng, Op::MatMul(a, b))
    }

    /// `a · bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (n, k2) = self.shape(b);
        assert_eq!(k, k2, "matmul_nt inner dimensions {m}x{k} · ({n}x{k2})ᵀ");
        let mut out = vec![0.0; m * n];
        matmul_nt(self.value(a), self.value(b), &mut out, m, k, n, false);
        let ng = self.ng(a) || self.ng(b);
        self.push(m, n, out, ng, Op::MatMulNT(a, b))
    }

    fn zip(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "elementwise shape mismatch");
        let out: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let (r, c) = self.shape(a);
        let ng = self.ng(a) || self.ng(b);
        self.push(r, c, out, ng, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Add a `1 × cols` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let (r, c) = self.shape(a);
        assert_eq!(self.shape(bias), (1, c), "bias must be 1x{c}");
        let b = self.value(bias);
        let mut out = self.value(a).to_vec();
        for row in out.chunks_mut(c) {
            row.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        let ng = self.ng(a) || self.ng(bias);
        self.push(r, c, out, ng, Op::AddRow(a, bias))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let out: Vec<f64> = self.value(a).iter().map(|&x| f(x)).collect();
        let (r, c) = self.shape(a);
        let ng = self.ng(a);
        self.push(r, c, out, ng, op)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.map(a, |x| x * s, Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        self.map(a, |x| x + s, Op::AddScalar(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, math::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, math::sigmoid, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    /// Row-wise softmax. With `causal`, entry `(i, j)` is forced to exactly
    /// zero whenever `j > i + (cols - rows)`, i.e. a query may only see keys up
    /// to its own position.
    pub fn softmax_rows(&mut self, a: Var, causal: bool) -> Var {
        let (r, c) = self.shape(a);
        let shift = c.saturating_sub(r);
        let mut out = self.value(a).to_vec();
        for (i, row) in out.chunks_mut(c).enumerate() {
            let visible = if causal { (i + shift + 1).min(c) } else { c };
            softmax_in_place(&mut row[..visible]);
            row[visible..].fill(0.0);
        }
        let ng = self.ng(a);
        self.push(r, c, out, ng, Op::Softmax(a))
    }

    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Var {
        let (r, c) = self.shape(x);
        assert_eq!(self.shape(gain), (1, c));
        assert_eq!(self.shape(bias), (1, c));
        let xv = self.value(x);
        let g = self.value(gain);
        let b = self.value(bias);
        let mut xhat = vec![0.0; r * c];
        let mut inv_std = vec![0.0; r];
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &xv[i * c..(i + 1) * c];
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let is = 1.0 / math::sqrt(var + LAYER_NORM_EPS);
            inv_std[i] = is;
            for j in 0..c {
                let h = (row[j] - mean) * is;
                xhat[i * c + j] = h;
                out[i * c + j] = g[j] * h + b[j];
            }
        }
        let ng = self.ng(x) || self.ng(gain) || self.ng(bias);
        self.push(
            r,
            c,
            out,
            ng,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
        )
    }

    /// Select rows `ids` of `table`.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Var {
        let (tr, c) = self.shape(table);
        let t = self.value(table);
        let mut out = Vec::with_capacity(ids.len() * c);
        for &id in ids {
            assert!(id < tr, "row {id} out of range for {tr} rows");
            out.extend_from_slice(&t[id * c..(id + 1) * c]);
        }
        let ng = self.ng(table);
        self.push(
            ids.len(),
            c,
            out,
            ng,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
        )
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let r = self.rows(parts[0]);
        let c: usize = parts.iter().map(|&p| self.cols(p)).sum();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for &p in parts {
                assert_eq!(self.rows(p), r, "concat_cols row mismatch");
                out.extend_from_slice(self.row(p, i));
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(r, c, out, ng, Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let (r, c) = self.shape(x);
        assert!(start + len <= c);
        let v = self.value(x);
        let mut out = Vec::with_capacity(r * len);
        for i in 0..r {
            out.extend_from_slice(&v[i * c + start..i * c + start + len]);
        }
        let ng = self.ng(x);
        self.push(r, len, out, ng, Op::SliceCols { x, start })
    }

    pub fn stack_rows(&mut self, parts: &[Var]) -> Var {
        let c = self.cols(parts[0]);
        let mut out = Vec::new();
        let mut r = 0;
        for &p in parts {
            assert_eq!(self.cols(p), c, "stack_rows column mismatch");
            out.extend_from_slice(self.value(p));
            r += self.rows(p);
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(r, c, out, ng, Op::StackRows(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Var {
        let (r, c) = self.shape(x);
        assert!(start + len <= r);
        let out = self.value(x)[start * c..(start + len) * c].to_vec();
        let ng = self.ng(x);
        self.push(len, c, out, ng, Op::SliceRows { x, start })
    }

    pub fn mean_rows(&mut self, x: Var) -> Var {
        let (r, c) = self.shape(x);
        let mut out = vec![0.0; c];
        for row in self.value(x).chunks(c) {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
        }
        out.iter_mut().for_each(|o| *o /= r as f64);
        let ng = self.ng(x);
        self.push(1, c, out, ng, Op::MeanRows(x))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().sum();
        let ng = self.ng(x);
        self.push(1, 1, vec![s], ng, Op::Sum(x))
    }

    /// Summed cross-entropy of each row of `logits` against `targets[row]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Var {
        let (r, c) = self.shape(logits);
        assert_eq!(r, targets.len(), "one target per logit row");
        let mut probs = self.value(logits).to_vec();
        let mut loss = 0.0;
        for (row, &t) in probs.chunks_mut(c).zip(targets) {
            assert!(t < c, "target {t} out of range for {c} classes");
            softmax_in_place(row);
            loss -= math::ln(row[t].max(f64::MIN_POSITIVE));
        }
        let ng = self.ng(logits);
        self.push(
            1,
            1,
            vec![loss],
            ng,
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        )
    }

    /// Multiply by a fixed mask (already scaled by the keep probability).
    pub fn dropout(&mut self, x: Var, mask: Vec<f64>) -> Var {
        let (r, c) = self.shape(x);
        assert_eq!(mask.len(), r * c);
        let out = self
            .value(x)
            .iter()
            .zip(&mask)
            .map(|(a, m)| a * m)
            .collect();
        let ng = self.ng(x);
        self.push(r, c, out, ng, Op::Dropout { x, mask })
    }

    /// Propagate `seed · ∂loss` back through the tape. Parameter gradients are
    /// added into `sink` when one is given.
    pub fn backward(&self, loss: Var, seed: f64, sink: Option<&mut Gradients>) -> Backward {
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        let n0 = &self.nodes[loss.0];
        grads[loss.0] = Some(vec![seed; n0.rows * n0.cols]);
        let mut acc = Accumulator { grads, sink };

        for idx in (0..=loss.0).rev() {
            let Some(g) = acc.grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut acc);
            acc.grads[idx] = Some(g);
        }
        Backward { grads: acc.grads }
    }

    fn propagate(&self, node: &Node, g: &[f64], acc: &mut Accumulator<'_>) {
        let (r, c) = (node.rows, node.cols);
        match &node.op {
            Op::Leaf => {}
            // With a sink, parameter gradients were written there directly.
            Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let k = self.cols(*a);
                if self.ng(*a) {
                    let ga = acc.slot(self, *a);
                    matmul_nt(g, self.value(*b), ga, r, c, k, true);
                }
                if self.ng(*b) {
                    let av = self.value(*a);
                    let gb = acc.slot(self, *b);
                    matmul_tn(av, g, gb, k, r, c, true);
                }
            }
            Op::MatMulNT(a, b) => {
                let k = self.cols(*a);
                if self.ng(*a) {
                    let ga = acc.slot(self, *a);
                    matmul(g, self.value(*b), ga, r, c, k, true);
                }
                if self.ng(*b) {
                    let av = self.value(*a);
                    let gb = acc.slot(self, *b);
                    matmul_tn(g, av, gb, c, r, k, true);
                }
            }
            Op::Add(a, b) => {
                acc.add(self, *a, g.iter().copied());
                acc.add(self, *b, g.iter().copied());
            }
            Op::Sub(a, b) => {
                acc.add(self, *a, g.iter().copied());
                acc.add(self, *b, g.iter().map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                acc.add(self, *a, g.iter().zip(bv).map(|(x, y)| x * y));
                acc.add(self, *b, g.iter().zip(av).map(|(x, y)| x * y));
            }
            Op::AddRow(a, bias) => {
                acc.add(self, *a, g.iter().copied());
                if self.ng(*bias) {
                    let gb = acc.slot(self, *bias);
                    for row in g.chunks(c) {
                        gb.iter_mut().zip(row).for_each(|(s, v)| *s += v);
                    }
                }
            }
            Op::Scale(a, s) => acc.add(self, *a, g.iter().map(|v| v * s)),
            Op::AddScalar(a) => acc.add(self, *a, g.iter().copied()),
            Op::Tanh(a) => acc.add(
                self,
                *a,
                g.iter().zip(&node.value).map(|(d, y)| d * (1.0 - y * y)),
            ),
            Op::Sigmoid(a) => acc.add(
                self,
                *a,
                g.iter().zip(&node.value).map(|(d, y)| d * y * (1.0 - y)),
            ),
            Op::Relu(a) => acc.add(
                self,
                *a,
                g.iter()
                    .zip(&node.value)
                    .map(|(d, y)| if *y > 0.0 { *d } else { 0.0 }),
            ),
            Op::Softmax(a) => {
                if self.ng(*a) {
                    let y = &node.value;
                    let ga = acc.slot(self, *a);
                    for i in 0..r {
                        let yr = &y[i * c..(i + 1) * c];
                        let gr = &g[i * c..(i + 1) * c];
                        let dot: f64 = yr.iter().zip(gr).map(|(p, q)| p * q).sum();
                        for j in 0..c {
                            ga[i * c + j] += yr[j] * (gr[j] - dot);
                        }
                    }
                }
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                if self.ng(*gain) {
                    let gg = acc.slot(self, *gain);
                    for i in 0..r {
                        for j in 0..c {
                            gg[j] += g[i * c + j] * xhat[i * c + j];
                        }
                    }
                }
                if self.ng(*bias) {
                    let gb = acc.slot(self, *bias);
                    for row in g.chunks(c) {
                        gb.iter_mut().zip(row).for_each(|(s, v)| *s += v);
                    }
                }
                if self.ng(*x) {
                    let gain_v = self.value(*gain).to_vec();
                    let gx = acc.slot(self, *x);
                    let mut dxhat = vec![0.0; c];
                    for i in 0..r {
                        let mut mean_d = 0.0;
                        let mut mean_dx = 0.0;
                        for j in 0..c {
                            let d = g[i * c + j] * gain_v[j];
                            dxhat[j] = d;
                            mean_d += d;
                            mean_dx += d * xhat[i * c + j];
                        }
                        mean_d /= c as f64;
                        mean_dx /= c as f64;
                        for j in 0..c {
                            gx[i * c + j] +=
                                inv_std[i] * (dxhat[j] - mean_d - xhat[i * c + j] * mean_dx);
                        }
                    }
                }
            }
            Op::Gather { table, ids } => {
                if self.ng(*table) {
                    let gt = acc.slot(self, *table);
                    for (row, &id) in g.chunks(c).zip(ids) {
                        gt[id * c..(id + 1) * c]
                            .iter_mut()
                            .zip(row)
                            .for_each(|(s, v)| *s += v);
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let pc = self.cols(p);
                    if self.ng(p) {
                        let gp = acc.slot(self, p);
                        for i in 0..r {
                            gp[i * pc..(i + 1) * pc]
                                .iter_mut()
                                .zip(&g[i * c + offset..i * c + offset + pc])
                                .for_each(|(s, v)| *s += v);
                        }
                    }
                    offset += pc;
                }
            }
            Op::SliceCols { x, start } => {
                if self.ng(*x) {
                    let xc = self.cols(*x);
                    let gx = acc.slot(self, *x);
                    for i in 0..r {
                        gx[i * xc + start..i * xc + start + c]
                            .iter_mut()
                            .zip(&g[i * c..(i + 1) * c])
                            .for_each(|(s, v)| *s += v);
                    }
                }
            }
            Op::StackRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.rows(p) * c;
                    if self.ng(p) {
                        let gp = acc.slot(self, p);
                        gp.iter_mut()
                            .zip(&g[offset..offset + n])
                            .for_each(|(s, v)| *s += v);
                    }
                    offset += n;
                }
            }
            Op::SliceRows { x, start } => {
                if self.ng(*x) {
                    let gx = acc.slot(self, *x);
                    gx[start * c..(start + r) * c]
                        .iter_mut()
                        .zip(g)
                        .for_each(|(s, v)| *s += v);
                }
            }
            Op::MeanRows(x) => {
                if self.ng(*x) {
                    let xr = self.rows(*x) as f64;
                    let gx = acc.slot(self, *x);
                    for row in gx.chunks_mut(c) {
                        row.iter_mut().zip(g).for_each(|(s, v)| *s += v / xr);
                    }
                }
            }
            Op::Sum(x) => {
                let s = g[0];
                let n = self.value(*x).len();
                acc.add(self, *x, core::iter::repeat_n(s, n));
            }
            Op::CrossEntropy {
                logits,
                targets,
                probs,
            } => {
                if self.ng(*logits) {
                    let s = g[0];
                    let lc = self.cols(*logits);
                    let gl = acc.slot(self, *logits);
                    for (i, &t) in targets.iter().enumerate() {
                        for j in 0..lc {
                            let onehot = if j == t { 1.0 } else { 0.0 };
                            gl[i * lc + j] += s * (probs[i * lc + j] - onehot);
                        }
                    }
                }
            }
            Op::Dropout { x, mask } => acc.add(self, *x, g.iter().zip(mask).map(|(d, m)| d * m)),
        }
    }
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = math::exp(*v - max);
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}
