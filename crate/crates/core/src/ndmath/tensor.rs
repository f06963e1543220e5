use crate::error::{Error, Result};

/// Row-major dense tensor of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::shape("Tensor::new", &shape, &[data.len()]));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::shape("Tensor::from_rows", &[cols], &[row.len()]));
            }
            data.extend_from_slice(row);
        }
        Self::matrix(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of rows of a matrix; a vector counts as one row.
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[0],
            _ => 1,
        }
    }

    pub fn cols(&self) -> usize {
        self.shape.last().copied().unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }
}

/// Logistic function, evaluated on the branch that cannot overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unary {
    Sigmoid,
    Tanh,
    Relu,
}

impl Unary {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Unary::Sigmoid => sigmoid(x),
            Unary::Tanh => x.tanh(),
            Unary::Relu => x.max(0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binary {
    Mul,
    Add,
    Sub,
}

pub fn unary(op: Unary, t: &Tensor) -> Tensor {
    Tensor {
        shape: t.shape.clone(),
        data: t.data.iter().map(|&x| op.apply(x)).collect(),
    }
}

pub fn binary(op: Binary, a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape != b.shape {
        return Err(Error::shape("elementwise", &a.shape, &b.shape));
    }
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| match op {
            Binary::Mul => x * y,
            Binary::Add => x + y,
            Binary::Sub => x - y,
        })
        .collect();
    Ok(Tensor {
        shape: a.shape.clone(),
        data,
    })
}

pub fn matvec(m: &Tensor, v: &Tensor) -> Result<Tensor> {
    if m.shape.len() != 2 || v.shape.len() != 1 || m.shape[1] != v.shape[0] {
        return Err(Error::shape("matvec", &m.shape, &v.shape));
    }
    let mut out = vec![0.0; m.shape[0]];
    gemv_acc(&m.data, m.shape[1], &v.data, &mut out);
    Ok(Tensor::from_vec(out))
}

/// `out += W x` for a row-major `W` with `cols` columns.
#[inline]
pub(crate) fn gemv_acc(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(w.len(), out.len() * cols);
    let mut blocks = w.chunks_exact(4 * cols);
    let mut outs = out.chunks_exact_mut(4);
    for (block, o) in (&mut blocks).zip(&mut outs) {
        let d = dot4(block, cols, x);
        for l in 0..4 {
            o[l] += d[l];
        }
    }
    for (o, row) in outs
        .into_remainder()
        .iter_mut()
        .zip(blocks.remainder().chunks_exact(cols))
    {
        *o += dot(row, x);
    }
}

/// `out += Wᵀ g`.
#[inline]
pub(crate) fn gemv_t_acc(w: &[f64], cols: usize, g: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), cols);
    debug_assert_eq!(w.len(), g.len() * cols);
    for (&gi, row) in g.iter().zip(w.chunks_exact(cols)) {
        if gi != 0.0 {
            axpy(gi, row, out);
        }
    }
}

/// `dw += g xᵀ`.
#[inline]
pub(crate) fn outer_acc(dw: &mut [f64], g: &[f64], x: &[f64]) {
    debug_assert_eq!(dw.len(), g.len() * x.len());
    for (&gi, row) in g.iter().zip(dw.chunks_exact_mut(x.len())) {
        if gi != 0.0 {
            axpy(gi, x, row);
        }
    }
}

/// `out (k×rows) += X (k×cols) · Wᵀ`, four weight rows at a time so each
/// block is read once for the whole sequence.
pub(crate) fn gemm_nt_acc(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    let rows = w.len() / cols;
    debug_assert_eq!(out.len(), x.len() / cols * rows);
    let full = rows / 4 * 4;
    for i in (0..full).step_by(4) {
        let block = &w[i * cols..(i + 4) * cols];
        for (t, xt) in x.chunks_exact(cols).enumerate() {
            let d = dot4(block, cols, xt);
            for l in 0..4 {
                out[t * rows + i + l] += d[l];
            }
        }
    }
    for i in full..rows {
        let wr = &w[i * cols..(i + 1) * cols];
        for (t, xt) in x.chunks_exact(cols).enumerate() {
            out[t * rows + i] += dot(wr, xt);
        }
    }
}

/// `dw (rows×cols) += Dᵀ X` with `D` of shape `k×rows` and `X` of `k×cols`.
pub(crate) fn gemm_tn_acc(dw: &mut [f64], cols: usize, d: &[f64], x: &[f64]) {
    let rows = dw.len() / cols;
    let k = x.len() / cols;
    debug_assert_eq!(d.len(), k * rows);
    for (i, dwr) in dw.chunks_exact_mut(cols).enumerate() {
        let g = |t: usize| d[t * rows + i];
        let row = |t: usize| &x[t * cols..(t + 1) * cols];
        let full = k / 4 * 4;
        for t in (0..full).step_by(4) {
            axpy4(
                [g(t), g(t + 1), g(t + 2), g(t + 3)],
                [row(t), row(t + 1), row(t + 2), row(t + 3)],
                dwr,
            );
        }
        for t in full..k {
            axpy(g(t), row(t), dwr);
        }
    }
}

/// `dx (k×cols) += D (k×rows) · W (rows×cols)`.
pub(crate) fn gemm_nn_acc(w: &[f64], cols: usize, d: &[f64], dx: &mut [f64]) {
    let rows = w.len() / cols;
    debug_assert_eq!(d.len() / rows, dx.len() / cols);
    let full = rows / 4 * 4;
    let wr = |i: usize| &w[i * cols..(i + 1) * cols];
    for (t, dxt) in dx.chunks_exact_mut(cols).enumerate() {
        let g = &d[t * rows..(t + 1) * rows];
        for i in (0..full).step_by(4) {
            axpy4(
                [g[i], g[i + 1], g[i + 2], g[i + 3]],
                [wr(i), wr(i + 1), wr(i + 2), wr(i + 3)],
                dxt,
            );
        }
        for i in full..rows {
            axpy(g[i], wr(i), dxt);
        }
    }
}

/// Dot products of four consecutive rows of `block` with `x`.
#[inline]
fn dot4(block: &[f64], cols: usize, x: &[f64]) -> [f64; 4] {
    let (r0, rest) = block.split_at(cols);
    let (r1, rest) = rest.split_at(cols);
    let (r2, r3) = rest.split_at(cols);
    let mut acc = [[0.0; 2]; 4];
    let n = cols / 2 * 2;
    for j in (0..n).step_by(2) {
        let (x0, x1) = (x[j], x[j + 1]);
        acc[0][0] += r0[j] * x0;
        acc[0][1] += r0[j + 1] * x1;
        acc[1][0] += r1[j] * x0;
        acc[1][1] += r1[j + 1] * x1;
        acc[2][0] += r2[j] * x0;
        acc[2][1] += r2[j + 1] * x1;
        acc[3][0] += r3[j] * x0;
        acc[3][1] += r3[j + 1] * x1;
    }
    let mut out = acc.map(|a| a[0] + a[1]);
    for j in n..cols {
        out[0] += r0[j] * x[j];
        out[1] += r1[j] * x[j];
        out[2] += r2[j] * x[j];
        out[3] += r3[j] * x[j];
    }
    out
}

/// `y += a0 x0 + a1 x1 + a2 x2 + a3 x3`.
#[inline]
fn axpy4(a: [f64; 4], x: [&[f64]; 4], y: &mut [f64]) {
    let n = y.len();
    let (x0, x1, x2, x3) = (&x[0][..n], &x[1][..n], &x[2][..n], &x[3][..n]);
    for j in 0..n {
        y[j] += (a[0] * x0[j] + a[1] * x1[j]) + (a[2] * x2[j] + a[3] * x3[j]);
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize without reassociating.
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
