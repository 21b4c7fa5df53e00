use super::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

enum Op {
    Leaf,
    /// a: m*k, b: n*k -> m*n. Computes a . b^T (linear-layer orientation).
    MatMulNT(NodeId, NodeId),
    /// w: m*k, x: k -> m.
    MatVec(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// mat: n*d plus a broadcast row of width d.
    AddRow(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    /// Single row of a matrix as a vector.
    Row(NodeId, usize),
    /// Contiguous column range of a matrix.
    Cols(NodeId, usize, usize),
    /// n vectors of width d stacked into n*d.
    StackRows(Vec<NodeId>),
    /// a: n*p, b: n*q -> n*(p+q).
    ConcatCols(NodeId, NodeId),
    /// x: d repeated into n*d.
    RepeatRow(NodeId, usize),
    Scale(NodeId, f64),
    Sum(NodeId),
    Mean(NodeId),
    /// Sum of squared errors over rows where mask is true, all columns.
    MaskedSseSum {
        pred: NodeId,
        target: Tensor,
        mask: Vec<bool>,
    },
    /// Sum over all cells of binary cross-entropy with logits.
    BceLogitsSum { logits: NodeId, labels: Tensor },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Record of primitive ops built eagerly during a forward pass.
///
/// Node ids are append-ordered, so a single reverse sweep visits each op
/// exactly once in reverse topological order.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Per-node gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }

    /// Gradient of a node, or zeros of the given shape if the node never
    /// received one (it did not influence the loss).
    pub fn get_or_zeros(&self, id: NodeId, shape: &[usize]) -> Tensor {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape),
        }
    }
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (acc_i, x_i) in acc.iter_mut().zip(x) {
        *acc_i += a * x_i;
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Register an input or parameter tensor.
    pub fn leaf(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf)
    }

    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = (ta.rows(), ta.cols());
        let (n, kb) = (tb.rows(), tb.cols());
        assert_eq!(
            k, kb,
            "matmul_nt: inner dims differ, {:?} vs {:?}",
            ta.shape(),
            tb.shape()
        );
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let ra = ta.row(i);
            let orow = &mut out[i * n..(i + 1) * n];
            for (j, o) in orow.iter_mut().enumerate() {
                let rb = tb.row(j);
                let mut acc = 0.0;
                for t in 0..k {
                    acc += ra[t] * rb[t];
                }
                *o = acc;
            }
        }
        self.push(Tensor::matrix(m, n, out), Op::MatMulNT(a, b))
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> NodeId {
        let (tw, tx) = (self.value(w), self.value(x));
        assert_eq!(
            tw.cols(),
            tx.len(),
            "matvec: {:?} vs {:?}",
            tw.shape(),
            tx.shape()
        );
        let xd = tx.data();
        let out = (0..tw.rows())
            .map(|i| {
                let r = tw.row(i);
                let mut acc = 0.0;
                for t in 0..xd.len() {
                    acc += r[t] * xd[t];
                }
                acc
            })
            .collect();
        self.push(Tensor::vector(out), Op::MatVec(w, x))
    }

    fn zip_elementwise(&mut self, a: NodeId, b: NodeId, name: &str, f: impl Fn(f64, f64) -> f64, op: Op) -> NodeId {
        let (ta, tb) = (self.value(a), self.value(b));
        assert!(
            ta.same_shape(tb),
            "{name}: shapes differ, {:?} vs {:?}",
            ta.shape(),
            tb.shape()
        );
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let shape = ta.shape().to_vec();
        self.push(Tensor::from_shape_vec(shape, data), op)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip_elementwise(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip_elementwise(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip_elementwise(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn add_row(&mut self, mat: NodeId, row: NodeId) -> NodeId {
        let (tm, tr) = (self.value(mat), self.value(row));
        let (n, d) = (tm.rows(), tm.cols());
        assert_eq!(
            tr.len(),
            d,
            "add_row: {:?} vs row {:?}",
            tm.shape(),
            tr.shape()
        );
        let rd = tr.data();
        let mut out = tm.data().to_vec();
        for i in 0..n {
            for j in 0..d {
                out[i * d + j] += rd[j];
            }
        }
        self.push(Tensor::matrix(n, d, out), Op::AddRow(mat, row))
    }

    fn map_elementwise(&mut self, a: NodeId, f: impl Fn(f64) -> f64, op: Op) -> NodeId {
        let ta = self.value(a);
        let data: Vec<f64> = ta.data().iter().map(|&x| f(x)).collect();
        let shape = ta.shape().to_vec();
        self.push(Tensor::from_shape_vec(shape, data), op)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.map_elementwise(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.map_elementwise(a, f64::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.map_elementwise(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn row(&mut self, mat: NodeId, i: usize) -> NodeId {
        let tm = self.value(mat);
        assert!(
            i < tm.rows(),
            "row: index {} out of {} rows",
            i,
            tm.rows()
        );
        let v = Tensor::vector(tm.row(i).to_vec());
        self.push(v, Op::Row(mat, i))
    }

    pub fn cols(&mut self, mat: NodeId, start: usize, len: usize) -> NodeId {
        let tm = self.value(mat);
        let (n, d) = (tm.rows(), tm.cols());
        assert!(
            start + len <= d,
            "cols: range {}..{} out of {} columns",
            start,
            start + len,
            d
        );
        let mut data = Vec::with_capacity(n * len);
        for i in 0..n {
            data.extend_from_slice(&tm.row(i)[start..start + len]);
        }
        self.push(Tensor::matrix(n, len, data), Op::Cols(mat, start, len))
    }

    pub fn stack_rows(&mut self, rows: Vec<NodeId>) -> NodeId {
        assert!(!rows.is_empty(), "stack_rows: no rows");
        let d = self.value(rows[0]).len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for &r in &rows {
            let tr = self.value(r);
            assert_eq!(
                tr.len(),
                d,
                "stack_rows: row width {} != {}",
                tr.len(),
                d
            );
            data.extend_from_slice(tr.data());
        }
        self.push(Tensor::matrix(rows.len(), d, data), Op::StackRows(rows))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (self.value(a), self.value(b));
        let n = ta.rows();
        assert_eq!(
            n,
            tb.rows(),
            "concat_cols: row counts differ, {:?} vs {:?}",
            ta.shape(),
            tb.shape()
        );
        let (p, q) = (ta.cols(), tb.cols());
        let mut data = Vec::with_capacity(n * (p + q));
        for i in 0..n {
            data.extend_from_slice(ta.row(i));
            data.extend_from_slice(tb.row(i));
        }
        self.push(Tensor::matrix(n, p + q, data), Op::ConcatCols(a, b))
    }

    pub fn repeat_row(&mut self, x: NodeId, n: usize) -> NodeId {
        let tx = self.value(x);
        let d = tx.len();
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            data.extend_from_slice(tx.data());
        }
        self.push(Tensor::matrix(n, d, data), Op::RepeatRow(x, n))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        self.map_elementwise(a, |x| c * x, Op::Scale(a, c))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let ta = self.value(a);
        assert!(!ta.is_empty(), "mean: empty tensor");
        let s: f64 = ta.data().iter().sum();
        let n = ta.len() as f64;
        self.push(Tensor::scalar(s / n), Op::Mean(a))
    }

    /// Sum over masked rows (all columns) of squared prediction error.
    pub fn masked_sse_sum(&mut self, pred: NodeId, target: Tensor, mask: Vec<bool>) -> NodeId {
        let tp = self.value(pred);
        assert!(
            tp.same_shape(&target),
            "masked_sse_sum: pred {:?} vs target {:?}",
            tp.shape(),
            target.shape()
        );
        assert_eq!(
            mask.len(),
            tp.rows(),
            "masked_sse_sum: mask length {} != {} rows",
            mask.len(),
            tp.rows()
        );
        let c = tp.cols();
        let mut s = 0.0;
        for (i, &keep) in mask.iter().enumerate() {
            if keep {
                let (pr, tr) = (tp.row(i), target.row(i));
                for j in 0..c {
                    let d = pr[j] - tr[j];
                    s += d * d;
                }
            }
        }
        self.push(Tensor::scalar(s), Op::MaskedSseSum { pred, target, mask })
    }

    /// Sum over all cells of BCE-with-logits against binary labels.
    pub fn bce_logits_sum(&mut self, logits: NodeId, labels: Tensor) -> NodeId {
        let tl = self.value(logits);
        assert!(
            tl.same_shape(&labels),
            "bce_logits_sum: logits {:?} vs labels {:?}",
            tl.shape(),
            labels.shape()
        );
        let s: f64 = tl
            .data()
            .iter()
            .zip(labels.data())
            .map(|(&l, &y)| softplus(l) - l * y)
            .sum();
        self.push(Tensor::scalar(s), Op::BceLogitsSum { logits, labels })
    }

    /// Sign pattern of every ReLU input on this tape, in construction order.
    /// Two evaluations of the same graph structure are finite-difference
    /// comparable only if their patterns match (no kink was crossed).
    pub fn relu_signature(&self) -> Vec<bool> {
        let mut sig = Vec::new();
        for node in &self.nodes {
            if let Op::Relu(a) = node.op {
                sig.extend(self.nodes[a.0].value.data().iter().map(|&x| x > 0.0));
            }
        }
        sig
    }

    /// Reverse sweep from a scalar loss node. Fan-out accumulates by
    /// summation.
    pub fn backward(&self, loss: NodeId) -> Gradients {
        let lt = self.value(loss);
        assert!(
            lt.is_scalar(),
            "backward: loss must be scalar, got shape {:?}",
            lt.shape()
        );
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..self.nodes.len()).rev() {
            let g = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                // Two-input ops accumulate into fresh delta tensors so that
                // aliased inputs (both operands the same node) still sum.
                Op::MatMulNT(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k) = (ta.rows(), ta.cols());
                    let n = tb.rows();
                    let mut da = Tensor::zeros(ta.shape());
                    let mut db = Tensor::zeros(tb.shape());
                    for i in 0..m {
                        let grow = g.row(i);
                        let arow = ta.row(i);
                        let darow = &mut da.data_mut()[i * k..(i + 1) * k];
                        for j in 0..n {
                            let gij = grow[j];
                            if gij != 0.0 {
                                axpy(darow, gij, tb.row(j));
                                axpy(&mut db.data_mut()[j * k..(j + 1) * k], gij, arow);
                            }
                        }
                    }
                    self.accumulate(&mut grads, *a, da);
                    self.accumulate(&mut grads, *b, db);
                }
                Op::MatVec(w, x) => {
                    let (tw, tx) = (self.value(*w), self.value(*x));
                    let (m, k) = (tw.rows(), tw.cols());
                    let mut dw = Tensor::zeros(tw.shape());
                    let mut dx = Tensor::zeros(tx.shape());
                    let gd = g.data();
                    for i in 0..m {
                        let gi = gd[i];
                        if gi != 0.0 {
                            axpy(&mut dw.data_mut()[i * k..(i + 1) * k], gi, tx.data());
                            axpy(dx.data_mut(), gi, tw.row(i));
                        }
                    }
                    self.accumulate(&mut grads, *w, dw);
                    self.accumulate(&mut grads, *x, dx);
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut grads, *a, g.clone());
                    self.accumulate(&mut grads, *b, g.clone());
                }
                Op::Sub(a, b) => {
                    self.accumulate(&mut grads, *a, g.clone());
                    let mut neg = g.clone();
                    for v in neg.data_mut() {
                        *v = -*v;
                    }
                    self.accumulate(&mut grads, *b, neg);
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let mut da = Tensor::zeros(ta.shape());
                    let mut db = Tensor::zeros(tb.shape());
                    for i in 0..g.len() {
                        da.data_mut()[i] = g.data()[i] * tb.data()[i];
                        db.data_mut()[i] = g.data()[i] * ta.data()[i];
                    }
                    self.accumulate(&mut grads, *a, da);
                    self.accumulate(&mut grads, *b, db);
                }
                Op::AddRow(mat, row) => {
                    let n = g.rows();
                    let mut drow = self.grad_slot(&mut grads, *row);
                    for i in 0..n {
                        axpy(drow.data_mut(), 1.0, g.row(i));
                    }
                    self.store(&mut grads, *row, drow);
                    self.accumulate(&mut grads, *mat, g.clone());
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let mut da = self.grad_slot(&mut grads, *a);
                    for i in 0..g.len() {
                        let yi = y.data()[i];
                        da.data_mut()[i] += g.data()[i] * yi * (1.0 - yi);
                    }
                    self.store(&mut grads, *a, da);
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let mut da = self.grad_slot(&mut grads, *a);
                    for i in 0..g.len() {
                        let yi = y.data()[i];
                        da.data_mut()[i] += g.data()[i] * (1.0 - yi * yi);
                    }
                    self.store(&mut grads, *a, da);
                }
                Op::Relu(a) => {
                    // Subgradient at exactly zero is zero.
                    let tx = self.value(*a);
                    let mut da = self.grad_slot(&mut grads, *a);
                    for i in 0..g.len() {
                        if tx.data()[i] > 0.0 {
                            da.data_mut()[i] += g.data()[i];
                        }
                    }
                    self.store(&mut grads, *a, da);
                }
                Op::Row(mat, i) => {
                    let tm = self.value(*mat);
                    let d = tm.cols();
                    let mut dm = self.grad_slot(&mut grads, *mat);
                    axpy(&mut dm.data_mut()[i * d..(i + 1) * d], 1.0, g.data());
                    self.store(&mut grads, *mat, dm);
                }
                Op::Cols(mat, start, len) => {
                    let tm = self.value(*mat);
                    let d = tm.cols();
                    let mut dm = self.grad_slot(&mut grads, *mat);
                    for i in 0..tm.rows() {
                        axpy(
                            &mut dm.data_mut()[i * d + start..i * d + start + len],
                            1.0,
                            g.row(i),
                        );
                    }
                    self.store(&mut grads, *mat, dm);
                }
                Op::StackRows(rows) => {
                    for (i, &r) in rows.iter().enumerate() {
                        self.accumulate(&mut grads, r, Tensor::vector(g.row(i).to_vec()));
                    }
                }
                Op::ConcatCols(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (n, p, q) = (ta.rows(), ta.cols(), tb.cols());
                    let mut da = Tensor::zeros(ta.shape());
                    let mut db = Tensor::zeros(tb.shape());
                    for i in 0..n {
                        let grow = g.row(i);
                        da.data_mut()[i * p..(i + 1) * p].copy_from_slice(&grow[..p]);
                        db.data_mut()[i * q..(i + 1) * q].copy_from_slice(&grow[p..p + q]);
                    }
                    self.accumulate(&mut grads, *a, da);
                    self.accumulate(&mut grads, *b, db);
                }
                Op::RepeatRow(x, n) => {
                    let mut dx = self.grad_slot(&mut grads, *x);
                    for i in 0..*n {
                        axpy(dx.data_mut(), 1.0, g.row(i));
                    }
                    self.store(&mut grads, *x, dx);
                }
                Op::Scale(a, c) => {
                    let mut da = g.clone();
                    for v in da.data_mut() {
                        *v *= c;
                    }
                    self.accumulate(&mut grads, *a, da);
                }
                Op::Sum(a) => {
                    let g0 = g.item();
                    let mut da = self.grad_slot(&mut grads, *a);
                    for v in da.data_mut() {
                        *v += g0;
                    }
                    self.store(&mut grads, *a, da);
                }
                Op::Mean(a) => {
                    let ta = self.value(*a);
                    let g0 = g.item() / ta.len() as f64;
                    let mut da = self.grad_slot(&mut grads, *a);
                    for v in da.data_mut() {
                        *v += g0;
                    }
                    self.store(&mut grads, *a, da);
                }
                Op::MaskedSseSum { pred, target, mask } => {
                    let g0 = g.item();
                    let tp = self.value(*pred);
                    let c = tp.cols();
                    let mut dp = self.grad_slot(&mut grads, *pred);
                    for (i, &keep) in mask.iter().enumerate() {
                        if keep {
                            let (pr, tr) = (tp.row(i), target.row(i));
                            let drow = &mut dp.data_mut()[i * c..(i + 1) * c];
                            for j in 0..c {
                                drow[j] += g0 * 2.0 * (pr[j] - tr[j]);
                            }
                        }
                    }
                    self.store(&mut grads, *pred, dp);
                }
                Op::BceLogitsSum { logits, labels } => {
                    let g0 = g.item();
                    let tl = self.value(*logits);
                    let mut dl = self.grad_slot(&mut grads, *logits);
                    for i in 0..tl.len() {
                        dl.data_mut()[i] += g0 * (sigmoid(tl.data()[i]) - labels.data()[i]);
                    }
                    self.store(&mut grads, *logits, dl);
                }
            }
            grads[idx] = Some(g);
        }
        Gradients { grads }
    }

    fn grad_slot(&self, grads: &mut [Option<Tensor>], id: NodeId) -> Tensor {
        grads[id.0]
            .take()
            .unwrap_or_else(|| Tensor::zeros(self.value(id).shape()))
    }

    fn store(&self, grads: &mut [Option<Tensor>], id: NodeId, t: Tensor) {
        grads[id.0] = Some(t);
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        match &mut grads[id.0] {
            Some(acc) => {
                for (a, d) in acc.data_mut().iter_mut().zip(delta.data()) {
                    *a += d;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_shapes() {
        let mut t = Tape::new();
        let a = t.leaf(Tensor::matrix(2, 3, vec![1., 2., 3., 4., 5., 6.]));
        let b = t.leaf(Tensor::matrix(1, 3, vec![1., 0., -1.]));
        let c = t.matmul_nt(a, b);
        assert_eq!(t.value(c).shape(), &[2, 1]);
        assert_eq!(t.value(c).data(), &[-2.0, -2.0]);
    }

    #[test]
    fn relu_and_sigmoid_values() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![-1.0, 0.0, 2.0]));
        let r = t.relu(x);
        assert_eq!(t.value(r).data(), &[0.0, 0.0, 2.0]);
        let z = t.leaf(Tensor::vector(vec![0.0]));
        let s = t.sigmoid(z);
        assert_eq!(t.value(s).data(), &[0.5]);
    }

    #[test]
    fn sum_gradient_is_ones() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![1., 2., 3., 4., 5.]));
        let s = t.sum(x);
        let g = t.backward(s);
        assert_eq!(g.get(x).unwrap().data(), &[1.0; 5]);
    }

    #[test]
    fn square_gradient() {
        // loss = x . x at x = 3 -> d/dx = 6
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![3.0]));
        let y = t.mul(x, x);
        let s = t.sum(y);
        let g = t.backward(s);
        assert_eq!(g.get(x).unwrap().data(), &[6.0]);
    }

    #[test]
    fn slice_gradient_is_indicator() {
        let mut t = Tape::new();
        let m = t.leaf(Tensor::matrix(3, 2, vec![1., 2., 3., 4., 5., 6.]));
        let r = t.row(m, 1);
        let s = t.sum(r);
        let g = t.backward(s);
        assert_eq!(g.get(m).unwrap().data(), &[0., 0., 1., 1., 0., 0.]);
    }

    #[test]
    fn cols_slice_gradient_is_indicator() {
        let mut t = Tape::new();
        let m = t.leaf(Tensor::matrix(2, 3, vec![1., 2., 3., 4., 5., 6.]));
        let c = t.cols(m, 1, 2);
        assert_eq!(t.value(c).data(), &[2., 3., 5., 6.]);
        let s = t.sum(c);
        let g = t.backward(s);
        assert_eq!(g.get(m).unwrap().data(), &[0., 1., 1., 0., 1., 1.]);
    }

    #[test]
    fn concat_gradient_splits() {
        let mut t = Tape::new();
        let a = t.leaf(Tensor::matrix(2, 1, vec![1., 2.]));
        let b = t.leaf(Tensor::matrix(2, 2, vec![3., 4., 5., 6.]));
        let c = t.concat_cols(a, b);
        let s = t.sum(c);
        let g = t.backward(s);
        assert_eq!(g.get(a).unwrap().data(), &[1., 1.]);
        assert_eq!(g.get(b).unwrap().data(), &[1., 1., 1., 1.]);
    }

    #[test]
    fn bce_at_zero_logit_is_ln2() {
        let mut t = Tape::new();
        let l = t.leaf(Tensor::matrix(1, 1, vec![0.0]));
        let loss = t.bce_logits_sum(l, Tensor::matrix(1, 1, vec![1.0]));
        assert!((t.value(loss).item() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "backward: loss must be scalar")]
    fn backward_rejects_nonscalar() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![1.0, 2.0]));
        let y = t.relu(x);
        t.backward(y);
    }

    #[test]
    #[should_panic(expected = "matmul_nt: inner dims differ")]
    fn matmul_rejects_mismatch() {
        let mut t = Tape::new();
        let a = t.leaf(Tensor::matrix(2, 3, vec![0.0; 6]));
        let b = t.leaf(Tensor::matrix(2, 4, vec![0.0; 8]));
        t.matmul_nt(a, b);
    }

    #[test]
    fn fanout_accumulates() {
        // loss = sum(x + x) -> grad 2 per element
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![1.0, -2.0]));
        let y = t.add(x, x);
        let s = t.sum(y);
        let g = t.backward(s);
        assert_eq!(g.get(x).unwrap().data(), &[2.0, 2.0]);
    }
}
