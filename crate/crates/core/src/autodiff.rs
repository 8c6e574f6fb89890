//! Define-by-run reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation as a [`TapeValue`] in creation order, so
//! ids are a topological order and [`Tape::backward`] is a single reverse
//! sweep. Values are row-major `rows × cols` matrices of `f64`.
//!
//! Leaves are created either as parameters (gradients tracked) or constants.
//! Nodes whose inputs are all constants never receive gradients, which keeps
//! the input layer of the network from paying for an unused `Wᵀ·g` product.

use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub enum Op {
    Leaf,
    /// `W·X + b·1ᵀ`.
    Affine { w: Var, x: Var, b: Var },
    Relu(Var),
    Sigmoid(Var),
    /// Per-row constant scaling.
    ScaleRows(Var, Vec<f64>),
    Scale(Var, f64),
    Add(Var, Var),
    Sum(Var),
    Mse(Var, Var),
    Column(Var, usize),
    /// Node whose VJP is `Jᵀ·g`, with `J` row-major `p × k`.
    External { input: Var, jacobian: Vec<f64> },
}

impl Op {
    pub fn parents(&self) -> Vec<Var> {
        match *self {
            Op::Leaf => vec![],
            Op::Affine { w, x, b } => vec![w, x, b],
            Op::Relu(x) | Op::Sigmoid(x) | Op::Scale(x, _) | Op::Sum(x) | Op::Column(x, _) => {
                vec![x]
            }
            Op::ScaleRows(x, _) => vec![x],
            Op::Add(a, b) | Op::Mse(a, b) => vec![a, b],
            Op::External { input, .. } => vec![input],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Affine { .. } => "affine",
            Op::Relu(_) => "relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::ScaleRows(..) => "scale_rows",
            Op::Scale(..) => "scale",
            Op::Add(..) => "add",
            Op::Sum(_) => "sum",
            Op::Mse(..) => "mse",
            Op::Column(..) => "column",
            Op::External { .. } => "external",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TapeValue {
    pub id: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    grad: Option<Vec<f64>>,
    pub op: Op,
    requires_grad: bool,
}

impl TapeValue {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn parents(&self) -> Vec<Var> {
        self.op.parents()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<TapeValue>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, v: Var) -> &TapeValue {
        &self.nodes[v.0]
    }

    pub fn nodes(&self) -> &[TapeValue] {
        &self.nodes
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].data
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].shape()
    }

    /// Scalar value of a `1 × 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].data[0]
    }

    /// Gradient of the last `backward` root with respect to `v`, or `None` if
    /// `v` was not reached (or does not track gradients).
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    /// Gradient as an owned vector, zeros when unreached.
    pub fn grad_or_zeros(&self, v: Var) -> Vec<f64> {
        let n = &self.nodes[v.0];
        n.grad.clone().unwrap_or_else(|| vec![0.0; n.data.len()])
    }

    fn push(&mut self, rows: usize, cols: usize, data: Vec<f64>, op: Op) -> Var {
        debug_assert_eq!(rows * cols, data.len());
        let requires_grad = op.parents().iter().any(|p| self.nodes[p.0].requires_grad);
        let id = self.nodes.len();
        self.nodes.push(TapeValue {
            id,
            rows,
            cols,
            data,
            grad: None,
            op,
            requires_grad,
        });
        Var(id)
    }

    fn leaf(&mut self, rows: usize, cols: usize, data: Vec<f64>, track: bool) -> Result<Var> {
        if rows * cols != data.len() {
            return Err(Error::dim(
                "leaf",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        let v = self.push(rows, cols, data, Op::Leaf);
        self.nodes[v.0].requires_grad = track;
        Ok(v)
    }

    /// Trainable leaf.
    pub fn param(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<Var> {
        self.leaf(rows, cols, data, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<Var> {
        self.leaf(rows, cols, data, false)
    }

    /// `W·X + b`, with `X` of shape `n × B` and the bias broadcast over the
    /// `B` columns.
    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Result<Var> {
        let (m, n) = self.shape(w);
        let (xn, batch) = self.shape(x);
        let (bm, bc) = self.shape(b);
        if xn != n || bm != m || bc != 1 {
            return Err(Error::dim(
                "affine",
                format!("W {m}x{n}, x {xn}x{batch}, b {bm}x{bc}"),
            ));
        }
        let mut out = vec![0.0; m * batch];
        {
            let wd = &self.nodes[w.0].data;
            let xd = &self.nodes[x.0].data;
            gemm(m, n, batch, wd, (n, 1), xd, (batch, 1), &mut out, 0.0);
            let bd = &self.nodes[b.0].data;
            for (row, bias) in out.chunks_exact_mut(batch.max(1)).zip(bd) {
                for y in row {
                    *y += bias;
                }
            }
        }
        Ok(self.push(m, batch, out, Op::Affine { w, x, b }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let n = &self.nodes[x.0];
        let data = n.data.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let (r, c) = n.shape();
        self.push(r, c, data, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let n = &self.nodes[x.0];
        let data = n.data.iter().map(|&v| sigmoid(v)).collect();
        let (r, c) = n.shape();
        self.push(r, c, data, Op::Sigmoid(x))
    }

    /// Multiply row `r` by `factors[r]`.
    pub fn scale_rows(&mut self, x: Var, factors: &[f64]) -> Result<Var> {
        let (r, c) = self.shape(x);
        if factors.len() != r {
            return Err(Error::dim(
                "scale_rows",
                format!("{} factors for {r} rows", factors.len()),
            ));
        }
        let data = self.nodes[x.0]
            .data
            .chunks_exact(c)
            .zip(factors)
            .flat_map(|(row, f)| row.iter().map(move |v| f * v))
            .collect();
        Ok(self.push(r, c, data, Op::ScaleRows(x, factors.to_vec())))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let n = &self.nodes[x.0];
        let data = n.data.iter().map(|v| factor * v).collect();
        let (r, c) = n.shape();
        self.push(r, c, data, Op::Scale(x, factor))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::dim("add", format!("{sa:?} vs {sb:?}")));
        }
        let data = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push(sa.0, sa.1, data, Op::Add(a, b)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.nodes[x.0].data.iter().sum();
        self.push(1, 1, vec![s], Op::Sum(x))
    }

    /// Mean over all entries of `(a - b)²`.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::dim("mse", format!("{sa:?} vs {sb:?}")));
        }
        let ad = &self.nodes[a.0].data;
        let bd = &self.nodes[b.0].data;
        let n = ad.len().max(1) as f64;
        let s: f64 = ad.iter().zip(bd).map(|(x, y)| (x - y) * (x - y)).sum();
        Ok(self.push(1, 1, vec![s / n], Op::Mse(a, b)))
    }

    /// Column `j` of `x` as a `rows × 1` node.
    pub fn column(&mut self, x: Var, j: usize) -> Result<Var> {
        let (r, c) = self.shape(x);
        if j >= c {
            return Err(Error::dim("column", format!("column {j} of a {r}x{c} matrix")));
        }
        let data = (0..r).map(|i| self.nodes[x.0].data[i * c + j]).collect();
        Ok(self.push(r, 1, data, Op::Column(x, j)))
    }

    /// Splice an externally differentiated map `input ↦ output` into the
    /// tape. `jacobian` is row-major `p × k` where `input` is `k × 1` and
    /// `output` has `p` entries.
    pub fn inject_external_vjp(
        &mut self,
        input: Var,
        output: Vec<f64>,
        jacobian: Vec<f64>,
    ) -> Result<Var> {
        let (k, c) = self.shape(input);
        let p = output.len();
        if c != 1 || jacobian.len() != p * k {
            return Err(Error::dim(
                "inject_external_vjp",
                format!("input {k}x{c}, output {p}, jacobian {} entries", jacobian.len()),
            ));
        }
        if let Some(pos) = jacobian.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite jacobian entry at ({}, {})",
                pos / k,
                pos % k
            )));
        }
        if output.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite external output".into()));
        }
        Ok(self.push(p, 1, output, Op::External { input, jacobian }))
    }

    /// Clear all gradients.
    pub fn reset(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    /// Reverse sweep from a scalar root. Previous gradients are discarded, so
    /// repeated calls give identical results.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if root.0 >= self.nodes.len() {
            return Err(Error::Contract(format!("unknown node {}", root.0)));
        }
        if self.shape(root) != (1, 1) {
            return Err(Error::Contract(format!(
                "backward root must be 1x1, got {:?}",
                self.shape(root)
            )));
        }
        self.reset();
        if !self.nodes[root.0].requires_grad {
            return Ok(());
        }
        self.nodes[root.0].grad = Some(vec![1.0]);
        for id in (0..=root.0).rev() {
            let Some(g) = self.nodes[id].grad.take() else {
                continue;
            };
            self.propagate(id, &g);
            self.nodes[id].grad = Some(g);
        }
        Ok(())
    }

    fn tracks(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn accumulate(&mut self, v: Var, f: impl FnOnce(&mut [f64], &[TapeValue])) {
        if !self.tracks(v) {
            return;
        }
        let mut g = self.nodes[v.0]
            .grad
            .take()
            .unwrap_or_else(|| vec![0.0; self.nodes[v.0].data.len()]);
        f(&mut g, &self.nodes);
        self.nodes[v.0].grad = Some(g);
    }

    fn propagate(&mut self, id: usize, g: &[f64]) {
        let op = self.nodes[id].op.clone();
        match op {
            Op::Leaf => {}
            Op::Affine { w, x, b } => {
                let (m, n) = self.shape(w);
                let batch = self.nodes[x.0].cols;
                // dW += G·Xᵀ
                self.accumulate(w, |gw, nodes| {
                    gemm(m, batch, n, g, (batch, 1), &nodes[x.0].data, (1, batch), gw, 1.0);
                });
                // dX += Wᵀ·G
                self.accumulate(x, |gx, nodes| {
                    gemm(n, m, batch, &nodes[w.0].data, (1, n), g, (batch, 1), gx, 1.0);
                });
                self.accumulate(b, |gb, _| {
                    for (acc, row) in gb.iter_mut().zip(g.chunks_exact(batch.max(1))) {
                        *acc += row.iter().sum::<f64>();
                    }
                });
            }
            Op::Relu(x) => self.accumulate(x, |gx, nodes| {
                for ((acc, &xv), &gv) in gx.iter_mut().zip(&nodes[x.0].data).zip(g) {
                    if xv > 0.0 {
                        *acc += gv;
                    }
                }
            }),
            Op::Sigmoid(x) => {
                let out = std::mem::take(&mut self.nodes[id].data);
                self.accumulate(x, |gx, _| {
                    for ((acc, &s), &gv) in gx.iter_mut().zip(&out).zip(g) {
                        *acc += gv * s * (1.0 - s);
                    }
                });
                self.nodes[id].data = out;
            }
            Op::ScaleRows(x, factors) => {
                let cols = self.nodes[x.0].cols;
                self.accumulate(x, |gx, _| {
                    for ((acc_row, g_row), f) in gx
                        .chunks_exact_mut(cols)
                        .zip(g.chunks_exact(cols))
                        .zip(&factors)
                    {
                        for (acc, gv) in acc_row.iter_mut().zip(g_row) {
                            *acc += f * gv;
                        }
                    }
                });
            }
            Op::Scale(x, factor) => self.accumulate(x, |gx, _| {
                for (acc, gv) in gx.iter_mut().zip(g) {
                    *acc += factor * gv;
                }
            }),
            Op::Add(a, b) => {
                for v in [a, b] {
                    self.accumulate(v, |gv, _| {
                        for (acc, x) in gv.iter_mut().zip(g) {
                            *acc += x;
                        }
                    });
                }
            }
            Op::Sum(x) => self.accumulate(x, |gx, _| {
                for acc in gx.iter_mut() {
                    *acc += g[0];
                }
            }),
            Op::Mse(a, b) => {
                let n = self.nodes[a.0].data.len().max(1) as f64;
                let coef = 2.0 * g[0] / n;
                self.accumulate(a, |ga, nodes| {
                    for ((acc, x), y) in ga.iter_mut().zip(&nodes[a.0].data).zip(&nodes[b.0].data) {
                        *acc += coef * (x - y);
                    }
                });
                self.accumulate(b, |gb, nodes| {
                    for ((acc, x), y) in gb.iter_mut().zip(&nodes[a.0].data).zip(&nodes[b.0].data) {
                        *acc -= coef * (x - y);
                    }
                });
            }
            Op::Column(x, j) => {
                let cols = self.nodes[x.0].cols;
                self.accumulate(x, |gx, _| {
                    for (i, gv) in g.iter().enumerate() {
                        gx[i * cols + j] += gv;
                    }
                });
            }
            Op::External { input, jacobian } => {
                let k = self.nodes[input.0].rows;
                self.accumulate(input, |gi, _| {
                    for (row, gv) in jacobian.chunks_exact(k).zip(g) {
                        for (acc, jv) in gi.iter_mut().zip(row) {
                            *acc += jv * gv;
                        }
                    }
                });
            }
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    }
}

/// `C = A·B + beta·C` on row-major slices; strides are `(row, col)`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_stride: (usize, usize),
    b: &[f64],
    b_stride: (usize, usize),
    c: &mut [f64],
    beta: f64,
) {
    debug_assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the caller passes slices holding full `m×k`, `k×n` and `m×n`
    // matrices under the given strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_stride.0 as isize,
            a_stride.1 as isize,
            b.as_ptr(),
            b_stride.0 as isize,
            b_stride.1 as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
