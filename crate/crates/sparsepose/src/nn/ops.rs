//! Standard differentiable ops. Every op validates shapes up front and
//! registers an exact reverse-mode gradient.

use crate::nn::graph::{Graph, Var};
use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::{real, Real};

/// Accumulating kernels; `out` must be pre-initialized (usually zeros).
#[inline]
pub(crate) fn mm<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (l, &ail) in arow.iter().enumerate() {
            let brow = &b[l * n..(l + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o += ail * bv;
            }
        }
    }
}

/// out (m,n) += a (m,k) * b^T where b is (n,k).
#[inline]
pub(crate) fn mm_nt<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (j, o) in orow.iter_mut().enumerate() {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for (&av, &bv) in arow.iter().zip(brow.iter()) {
                acc += av * bv;
            }
            *o += acc;
        }
    }
}

/// out (k,n) += a^T * b where a is (m,k), b is (m,n).
#[inline]
pub(crate) fn mm_tn<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for l in 0..m {
        let arow = &a[l * k..(l + 1) * k];
        let brow = &b[l * n..(l + 1) * n];
        for (i, &ali) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o += ali * bv;
            }
        }
    }
}

fn same_shape<T: Real>(op: &'static str, g: &Graph<T>, a: Var, b: Var) -> Result<(), NnError> {
    if g.shape(a) != g.shape(b) {
        return Err(NnError::shapes(op, g.shape(a), g.shape(b)));
    }
    Ok(())
}

impl<T: Real> Graph<T> {
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        same_shape("add", self, a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data().iter())
            .map(|(&x, &y)| x + y)
            .collect();
        let out = Tensor::with_shape_unchecked(self.shape(a).to_vec(), data);
        let needs = self.needs_grad(a) || self.needs_grad(b);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, _vals, sink| {
                sink.accumulate(a, g.clone());
                sink.accumulate(b, g.clone());
            })),
        )
        .into_ok()
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        same_shape("sub", self, a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data().iter())
            .map(|(&x, &y)| x - y)
            .collect();
        let out = Tensor::with_shape_unchecked(self.shape(a).to_vec(), data);
        let needs = self.needs_grad(a) || self.needs_grad(b);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, _vals, sink| {
                sink.accumulate(a, g.clone());
                if sink.needs(b) {
                    let neg = Tensor::with_shape_unchecked(
                        g.shape().to_vec(),
                        g.data().iter().map(|&x| -x).collect(),
                    );
                    sink.accumulate(b, neg);
                }
            })),
        )
        .into_ok()
    }

    pub fn neg(&mut self, a: Var) -> Result<Var, NnError> {
        self.scale(a, real(-1.0))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var, NnError> {
        let data = self.value(a).data().iter().map(|&x| x * c).collect();
        let out = Tensor::with_shape_unchecked(self.shape(a).to_vec(), data);
        let needs = self.needs_grad(a);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, _vals, sink| {
                let scaled = Tensor::with_shape_unchecked(
                    g.shape().to_vec(),
                    g.data().iter().map(|&x| x * c).collect(),
                );
                sink.accumulate(a, scaled);
            })),
        )
        .into_ok()
    }

    /// Elementwise product of same-shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        same_shape("mul", self, a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data().iter())
            .map(|(&x, &y)| x * y)
            .collect();
        let out = Tensor::with_shape_unchecked(self.shape(a).to_vec(), data);
        let needs = self.needs_grad(a) || self.needs_grad(b);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, vals, sink| {
                if sink.needs(a) {
                    let bval = vals.get(b);
                    let da = Tensor::with_shape_unchecked(
                        g.shape().to_vec(),
                        g.data()
                            .iter()
                            .zip(bval.data().iter())
                            .map(|(&gv, &bv)| gv * bv)
                            .collect(),
                    );
                    sink.accumulate(a, da);
                }
                if sink.needs(b) {
                    let aval = vals.get(a);
                    let db = Tensor::with_shape_unchecked(
                        g.shape().to_vec(),
                        g.data()
                            .iter()
                            .zip(aval.data().iter())
                            .map(|(&gv, &av)| gv * av)
                            .collect(),
                    );
                    sink.accumulate(b, db);
                }
            })),
        )
        .into_ok()
    }

    /// Adds `b` to `a`, broadcasting `b` over the leading dims of `a`
    /// (b.shape must be a suffix of a.shape). Covers bias adds and
    /// positional-encoding adds.
    pub fn add_broadcast(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let ashape = self.shape(a).to_vec();
        let bshape = self.shape(b).to_vec();
        if bshape.len() > ashape.len() || ashape[ashape.len() - bshape.len()..] != bshape[..] {
            return Err(NnError::shapes("add_broadcast", &ashape, &bshape));
        }
        let blen = self.value(b).elems();
        let data = self
            .value(a)
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + self.value(b).data()[i % blen])
            .collect();
        let out = Tensor::with_shape_unchecked(ashape, data);
        let needs = self.needs_grad(a) || self.needs_grad(b);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, _vals, sink| {
                sink.accumulate(a, g.clone());
                if sink.needs(b) {
                    let mut db = vec![T::zero(); blen];
                    for (i, &gv) in g.data().iter().enumerate() {
                        db[i % blen] += gv;
                    }
                    sink.accumulate(b, Tensor::with_shape_unchecked(bshape.clone(), db));
                }
            })),
        )
        .into_ok()
    }

    /// Repeats `a` so its shape becomes `target` (a.shape must be a suffix
    /// of target).
    pub fn broadcast_to(&mut self, a: Var, target: Vec<usize>) -> Result<Var, NnError> {
        let ashape = self.shape(a).to_vec();
        if ashape.len() > target.len() || target[target.len() - ashape.len()..] != ashape[..] {
            return Err(NnError::shapes("broadcast_to", &ashape, &target));
        }
        let alen = self.value(a).elems();
        let total: usize = target.iter().product();
        let mut data = Vec::with_capacity(total);
        for i in 0..total {
            data.push(self.value(a).data()[i % alen]);
        }
        let out = Tensor::with_shape_unchecked(target, data);
        let needs = self.needs_grad(a);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, _vals, sink| {
                let mut da = vec![T::zero(); alen];
                for (i, &gv) in g.data().iter().enumerate() {
                    da[i % alen] += gv;
                }
                sink.accumulate(a, Tensor::with_shape_unchecked(ashape.clone(), da));
            })),
        )
        .into_ok()
    }

    /// `a` is (..., m, k), `b` is a shared (k, n) weight.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let ashape = self.shape(a).to_vec();
        let bshape = self.shape(b).to_vec();
        if ashape.len() < 2 || bshape.len() != 2 || ashape[ashape.len() - 1] != bshape[0] {
            return Err(NnError::shapes("matmul", &ashape, &bshape));
        }
        let k = bshape[0];
        let n = bshape[1];
        let m = ashape[ashape.len() - 2];
        let lead: usize = ashape[..ashape.len() - 2].iter().product();
        let mut out = vec![T::zero(); lead * m * n];
        for l in 0..lead {
            mm(
                &self.value(a).data()[l * m * k..(l + 1) * m * k],
                self.value(b).data(),
                m,
                k,
                n,
                &mut out[l * m * n..(l + 1) * m * n],
            );
        }
        let mut oshape = ashape[..ashape.len() - 1].to_vec();
        oshape.push(n);
        let needs = self.needs_grad(a) || self.needs_grad(b);
        self.push(
            Tensor::with_shape_unchecked(oshape, out),
            needs,
            Some(Box::new(move |g, vals, sink| {
                if sink.needs(a) {
                    let bval = vals.get(b);
                    let mut da = vec![T::zero(); lead * m * k];
                    for l in 0..lead {
                        mm_nt(
                            &g.data()[l * m * n..(l + 1) * m * n],
                            bval.data(),
                            m,
                            n,
                            k,
                            &mut da[l * m * k..(l + 1) * m * k],
                        );
                    }
                    sink.accumulate(a, Tensor::with_shape_unchecked(ashape.clone(), da));
                }
                if sink.needs(b) {
                    let aval = vals.get(a);
                    let mut db = vec![T::zero(); k * n];
                    for l in 0..lead {
                        mm_tn(
                            &aval.data()[l * m * k..(l + 1) * m * k],
                            &g.data()[l * m * n..(l + 1) * m * n],
                            m,
                            k,
                            n,
                            &mut db,
                        );
                    }
                    sink.accumulate(b, Tensor::with_shape_unchecked(bshape.clone(), db));
                }
            })),
        )
        .into_ok()
    }

    /// Batched matmul: (B, m, k) x (B, k, n) -> (B, m, n).
    pub fn bmm(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let ashape = self.shape(a).to_vec();
        let bshape = self.shape(b).to_vec();
        if ashape.len() != 3 || bshape.len() != 3 || ashape[0] != bshape[0] || ashape[2] != bshape[1]
        {
            return Err(NnError::shapes("bmm", &ashape, &bshape));
        }
        let (bt, m, k, n) = (ashape[0], ashape[1], ashape[2], bshape[2]);
        let mut out = vec![T::zero(); bt * m * n];
        for l in 0..bt {
            mm(
                &self.value(a).data()[l * m * k..(l + 1) * m * k],
                &self.value(b).data()[l * k * n..(l + 1) * k * n],
                m,
                k,
                n,
                &mut out[l * m * n..(l + 1) * m * n],
            );
        }
        let needs = self.needs_grad(a) || self.needs_grad(b);
        self.push(
            Tensor::with_shape_unchecked(vec![bt, m, n], out),
            needs,
            Some(Box::new(move |g, vals, sink| {
                if sink.needs(a) {
                    let bval = vals.get(b);
                    let mut da = vec![T::zero(); bt * m * k];
                    for l in 0..bt {
                        mm_nt(
                            &g.data()[l * m * n..(l + 1) * m * n],
                            &bval.data()[l * k * n..(l + 1) * k * n],
                            m,
                            n,
                            k,
                            &mut da[l * m * k..(l + 1) * m * k],
                        );
                    }
                    sink.accumulate(a, Tensor::with_shape_unchecked(ashape.clone(), da));
                }
                if sink.needs(b) {
                    let aval = vals.get(a);
                    let mut db = vec![T::zero(); bt * k * n];
                    for l in 0..bt {
                        mm_tn(
                            &aval.data()[l * m * k..(l + 1) * m * k],
                            &g.data()[l * m * n..(l + 1) * m * n],
                            m,
                            k,
                            n,
                            &mut db[l * k * n..(l + 1) * k * n],
                        );
                    }
                    sink.accumulate(b, Tensor::with_shape_unchecked(bshape.clone(), db));
                }
            })),
        )
        .into_ok()
    }

    /// Batched matmul with transposed rhs: (B, m, k) x (B, n, k) -> (B, m, n).
    pub fn bmm_nt(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let ashape = self.shape(a).to_vec();
        let bshape = self.shape(b).to_vec();
        if ashape.len() != 3 || bshape.len() != 3 || ashape[0] != bshape[0] || ashape[2] != bshape[2]
        {
            return Err(NnError::shapes("bmm_nt", &ashape, &bshape));
        }
        let (bt, m, k, n) = (ashape[0], ashape[1], ashape[2], bshape[1]);
        let mut out = vec![T::zero(); bt * m * n];
        for l in 0..bt {
            mm_nt(
                &self.value(a).data()[l * m * k..(l + 1) * m * k],
                &self.value(b).data()[l * n * k..(l + 1) * n * k],
                m,
                k,
                n,
                &mut out[l * m * n..(l + 1) * m * n],
            );
        }
        let needs = self.needs_grad(a) || self.needs_grad(b);
        self.push(
            Tensor::with_shape_unchecked(vec![bt, m, n], out),
            needs,
            Some(Box::new(move |g, vals, sink| {
                if sink.needs(a) {
                    // dA = G * B : (m,n)(n,k)
                    let bval = vals.get(b);
                    let mut da = vec![T::zero(); bt * m * k];
                    for l in 0..bt {
                        mm(
                            &g.data()[l * m * n..(l + 1) * m * n],
                            &bval.data()[l * n * k..(l + 1) * n * k],
                            m,
                            n,
                            k,
                            &mut da[l * m * k..(l + 1) * m * k],
                        );
                    }
                    sink.accumulate(a, Tensor::with_shape_unchecked(ashape.clone(), da));
                }
                if sink.needs(b) {
                    // dB = G^T * A : (n,m)(m,k)
                    let aval = vals.get(a);
                    let mut db = vec![T::zero(); bt * n * k];
                    for l in 0..bt {
                        mm_tn(
                            &g.data()[l * m * n..(l + 1) * m * n],
                            &aval.data()[l * m * k..(l + 1) * m * k],
                            m,
                            n,
                            k,
                            &mut db[l * n * k..(l + 1) * n * k],
                        );
                    }
                    sink.accumulate(b, Tensor::with_shape_unchecked(bshape.clone(), db));
                }
            })),
        )
        .into_ok()
    }

    /// x (..., in) * w (in, out) + bias (out).
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, NnError> {
        let y = self.matmul(x, w)?;
        self.add_broadcast(y, b)
    }

    pub fn gelu(&mut self, a: Var) -> Result<Var, NnError> {
        let c: T = real(0.7978845608028654); // sqrt(2/pi)
        let kk: T = real(0.044715);
        let half: T = real(0.5);
        let one: T = real(1.0);
        let three: T = real(3.0);
        let data = self
            .value(a)
            .data()
            .iter()
            .map(|&x| {
                let t = (c * (x + kk * x * x * x)).tanh();
                half * x * (one + t)
            })
            .collect();
        let out = Tensor::with_shape_unchecked(self.shape(a).to_vec(), data);
        let needs = self.needs_grad(a);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, vals, sink| {
                let xval = vals.get(a);
                let da = Tensor::with_shape_unchecked(
                    g.shape().to_vec(),
                    g.data()
                        .iter()
                        .zip(xval.data().iter())
                        .map(|(&gv, &x)| {
                            let t = (c * (x + kk * x * x * x)).tanh();
                            let d = half * (one + t)
                                + half * x * (one - t * t) * c * (one + three * kk * x * x);
                            gv * d
                        })
                        .collect(),
                );
                sink.accumulate(a, da);
            })),
        )
        .into_ok()
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, NnError> {
        let data = self.value(a).data().iter().map(|&x| x.max(T::zero())).collect();
        let out = Tensor::with_shape_unchecked(self.shape(a).to_vec(), data);
        let needs = self.needs_grad(a);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, vals, sink| {
                let xval = vals.get(a);
                let da = Tensor::with_shape_unchecked(
                    g.shape().to_vec(),
                    g.data()
                        .iter()
                        .zip(xval.data().iter())
                        .map(|(&gv, &x)| if x > T::zero() { gv } else { T::zero() })
                        .collect(),
                );
                sink.accumulate(a, da);
            })),
        )
        .into_ok()
    }

    pub fn abs(&mut self, a: Var) -> Result<Var, NnError> {
        let data = self.value(a).data().iter().map(|&x| x.abs()).collect();
        let out = Tensor::with_shape_unchecked(self.shape(a).to_vec(), data);
        let needs = self.needs_grad(a);
        self.push(
            out,
            needs,
            Some(Box::new(move |g, vals, sink| {
                let xval = vals.get(a);
                let da = Tensor::with_shape_unchecked(
                    g.shape().to_vec(),
                    g.data()
                        .iter()
                        .zip(xval.data().iter())
                        .map(|(&gv, &x)| {
                            if x > T::zero() {
                                gv
                            } else if x < T::zero() {
                                -gv
                            } else {
                                T::zero()
                            }
                        })
                        .collect(),
                );
                sink.accumulate(a, da);
            })),
        )
        .into_ok()
    }

    /// Softmax along the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var, NnError> {
        let shape = self.shape(a).to_vec();
        if shape.is_empty() {
            return Err(NnError::shapes("softmax", &shape, &[0]));
        }
        let d = *shape.last().unwrap();
        let rows = self.value(a).elems() / d;
        let mut data = vec![T::zero(); rows * d];
        for r in 0..rows {
            let row = &self.value(a).data()[r * d..(r + 1) * d];
            let max = row.iter().fold(T::neg_infinity(), |acc, &x| acc.max(x));
            let mut sum = T::zero();
            for (o, &x) in data[r * d..(r + 1) * d].iter_mut().zip(row.iter()) {
                *o = (x - max).exp();
                sum += *o;
            }
            for o in &mut data[r * d..(r + 1) * d] {
                *o = *o / sum;
            }
        }
        let self_id = self.next_id();
        let needs = self.needs_grad(a);
        self.push(
            Tensor::with_shape_unchecked(shape, data),
            needs,
            Some(Box::new(move |g, vals, sink| {
                let y = vals.get(self_id);
                let mut da = vec![T::zero(); g.elems()];
                for r in 0..rows {
                    let yrow = &y.data()[r * d..(r + 1) * d];
                    let grow = &g.data()[r * d..(r + 1) * d];
                    let mut dot = T::zero();
                    for (&gv, &yv) in grow.iter().zip(yrow.iter()) {
                        dot += gv * yv;
                    }
                    for ((o, &gv), &yv) in da[r * d..(r + 1) * d]
                        .iter_mut()
                        .zip(grow.iter())
                        .zip(yrow.iter())
                    {
                        *o = yv * (gv - dot);
                    }
                }
                sink.accumulate(a, Tensor::with_shape_unchecked(g.shape().to_vec(), da));
            })),
        )
        .into_ok()
    }

    /// Group normalization over the last axis: each row is split into
    /// `groups` equal channel groups, normalized to zero mean / unit
    /// variance, then scaled and shifted per channel. `groups = 1` is
    /// layer normalization.
    pub fn group_norm(&mut self, x: Var, groups: usize, gamma: Var, beta: Var) -> Result<Var, NnError> {
        let shape = self.shape(x).to_vec();
        let d = *shape.last().ok_or_else(|| NnError::shapes("group_norm", &shape, &[0]))?;
        if groups == 0 || d % groups != 0 {
            return Err(NnError::Graph(format!(
                "group_norm: {groups} groups do not divide {d} channels"
            )));
        }
        if self.shape(gamma) != [d] || self.shape(beta) != [d] {
            return Err(NnError::shapes("group_norm", &[d], self.shape(gamma)));
        }
        let eps: T = real(1e-5);
        let gs = d / groups;
        let rows = self.value(x).elems() / d;
        let mut data = vec![T::zero(); rows * d];
        let mut mus = vec![T::zero(); rows * groups];
        let mut invs = vec![T::zero(); rows * groups];
        let inv_gs = T::one() / real(gs as f64);
        for r in 0..rows {
            for gidx in 0..groups {
                let seg = &self.value(x).data()[r * d + gidx * gs..r * d + (gidx + 1) * gs];
                let mut mu = T::zero();
                for &v in seg {
                    mu += v;
                }
                mu = mu * inv_gs;
                let mut var = T::zero();
                for &v in seg {
                    let c = v - mu;
                    var += c * c;
                }
                var = var * inv_gs;
                let inv = T::one() / (var + eps).sqrt();
                mus[r * groups + gidx] = mu;
                invs[r * groups + gidx] = inv;
                let gslice = &self.value(gamma).data()[gidx * gs..(gidx + 1) * gs];
                let bslice = &self.value(beta).data()[gidx * gs..(gidx + 1) * gs];
                for i in 0..gs {
                    let xhat = (seg[i] - mu) * inv;
                    data[r * d + gidx * gs + i] = gslice[i] * xhat + bslice[i];
                }
            }
        }
        let needs = self.needs_grad(x) || self.needs_grad(gamma) || self.needs_grad(beta);
        self.push(
            Tensor::with_shape_unchecked(shape.clone(), data),
            needs,
            Some(Box::new(move |g, vals, sink| {
                let xval = vals.get(x);
                let gammaval = vals.get(gamma);
                let mut dx = vec![T::zero(); rows * d];
                let mut dgamma = vec![T::zero(); d];
                let mut dbeta = vec![T::zero(); d];
                let mut xhat = vec![T::zero(); gs];
                let mut dxhat = vec![T::zero(); gs];
                for r in 0..rows {
                    for gidx in 0..groups {
                        let base = r * d + gidx * gs;
                        let mu = mus[r * groups + gidx];
                        let inv = invs[r * groups + gidx];
                        let seg = &xval.data()[base..base + gs];
                        let grow = &g.data()[base..base + gs];
                        let gam = &gammaval.data()[gidx * gs..(gidx + 1) * gs];
                        let mut m1 = T::zero();
                        let mut m2 = T::zero();
                        for i in 0..gs {
                            xhat[i] = (seg[i] - mu) * inv;
                            dxhat[i] = grow[i] * gam[i];
                            m1 += dxhat[i];
                            m2 += dxhat[i] * xhat[i];
                            dgamma[gidx * gs + i] += grow[i] * xhat[i];
                            dbeta[gidx * gs + i] += grow[i];
                        }
                        m1 = m1 * inv_gs;
                        m2 = m2 * inv_gs;
                        for i in 0..gs {
                            dx[base + i] = inv * (dxhat[i] - m1 - xhat[i] * m2);
                        }
                    }
                }
                if sink.needs(x) {
                    sink.accumulate(x, Tensor::with_shape_unchecked(g.shape().to_vec(), dx));
                }
                if sink.needs(gamma) {
                    sink.accumulate(gamma, Tensor::with_shape_unchecked(vec![d], dgamma));
                }
                if sink.needs(beta) {
                    sink.accumulate(beta, Tensor::with_shape_unchecked(vec![d], dbeta));
                }
            })),
        )
        .into_ok()
    }

    /// Layer normalization over the last axis.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var, NnError> {
        self.group_norm(x, 1, gamma, beta)
    }

    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var, NnError> {
        if xs.is_empty() {
            return Err(NnError::Graph("concat of zero tensors".into()));
        }
        let base = self.shape(xs[0]).to_vec();
        if axis >= base.len() {
            return Err(NnError::Graph(format!(
                "concat axis {axis} out of range for shape {base:?}"
            )));
        }
        let mut axis_total = 0;
        for &v in xs {
            let s = self.shape(v);
            if s.len() != base.len()
                || s.iter()
                    .zip(base.iter())
                    .enumerate()
                    .any(|(i, (a, b))| i != axis && a != b)
            {
                return Err(NnError::shapes("concat", &base, s));
            }
            axis_total += s[axis];
        }
        let mut oshape = base.clone();
        oshape[axis] = axis_total;
        let lead: usize = base[..axis].iter().product();
        let trail: usize = base[axis + 1..].iter().product();
        let blocks: Vec<usize> = xs.iter().map(|&v| self.shape(v)[axis] * trail).collect();
        let out_row = axis_total * trail;
        let mut data = vec![T::zero(); lead * out_row];
        for l in 0..lead {
            let mut offset = 0;
            for (&v, &blk) in xs.iter().zip(blocks.iter()) {
                let src = &self.value(v).data()[l * blk..(l + 1) * blk];
                data[l * out_row + offset..l * out_row + offset + blk].copy_from_slice(src);
                offset += blk;
            }
        }
        let needs = xs.iter().any(|&v| self.needs_grad(v));
        let xs_owned = xs.to_vec();
        self.push(
            Tensor::with_shape_unchecked(oshape, data),
            needs,
            Some(Box::new(move |g, vals, sink| {
                for (i, &v) in xs_owned.iter().enumerate() {
                    if !sink.needs(v) {
                        continue;
                    }
                    let blk = blocks[i];
                    let offset: usize = blocks[..i].iter().sum();
                    let mut dv = vec![T::zero(); lead * blk];
                    for l in 0..lead {
                        dv[l * blk..(l + 1) * blk].copy_from_slice(
                            &g.data()[l * out_row + offset..l * out_row + offset + blk],
                        );
                    }
                    sink.accumulate(
                        v,
                        Tensor::with_shape_unchecked(vals.get(v).shape().to_vec(), dv),
                    );
                }
            })),
        )
        .into_ok()
    }

    pub fn slice(&mut self, a: Var, axis: usize, start: usize, end: usize) -> Result<Var, NnError> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() || start >= end || end > shape[axis] {
            return Err(NnError::Graph(format!(
                "slice [{start}, {end}) on axis {axis} invalid for shape {shape:?}"
            )));
        }
        let lead: usize = shape[..axis].iter().product();
        let mid = shape[axis];
        let trail: usize = shape[axis + 1..].iter().product();
        let span = end - start;
        let mut oshape = shape.clone();
        oshape[axis] = span;
        let mut data = vec![T::zero(); lead * span * trail];
        for l in 0..lead {
            let src = &self.value(a).data()
                [l * mid * trail + start * trail..l * mid * trail + end * trail];
            data[l * span * trail..(l + 1) * span * trail].copy_from_slice(src);
        }
        let needs = self.needs_grad(a);
        self.push(
            Tensor::with_shape_unchecked(oshape, data),
            needs,
            Some(Box::new(move |g, _vals, sink| {
                let mut da = vec![T::zero(); lead * mid * trail];
                for l in 0..lead {
                    da[l * mid * trail + start * trail..l * mid * trail + end * trail]
                        .copy_from_slice(&g.data()[l * span * trail..(l + 1) * span * trail]);
                }
                sink.accumulate(a, Tensor::with_shape_unchecked(shape.clone(), da));
            })),
        )
        .into_ok()
    }

    pub fn reshape(&mut self, a: Var, new_shape: Vec<usize>) -> Result<Var, NnError> {
        let n: usize = new_shape.iter().product();
        if n != self.value(a).elems() {
            return Err(NnError::shapes("reshape", self.shape(a), &new_shape));
        }
        let data = self.value(a).data().to_vec();
        let old_shape = self.shape(a).to_vec();
        let needs = self.needs_grad(a);
        self.push(
            Tensor::with_shape_unchecked(new_shape, data),
            needs,
            Some(Box::new(move |g, _vals, sink| {
                sink.accumulate(
                    a,
                    Tensor::with_shape_unchecked(old_shape.clone(), g.data().to_vec()),
                );
            })),
        )
        .into_ok()
    }

    pub fn permute(&mut self, a: Var, perm: &[usize]) -> Result<Var, NnError> {
        let shape = self.shape(a).to_vec();
        if perm.len() != shape.len() {
            return Err(NnError::shapes("permute", &shape, perm));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(NnError::Graph(format!("invalid permutation {perm:?}")));
            }
            seen[p] = true;
        }
        let (out, oshape) = permute_data(self.value(a).data(), &shape, perm);
        let mut inverse = vec![0usize; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let needs = self.needs_grad(a);
        self.push(
            Tensor::with_shape_unchecked(oshape.clone(), out),
            needs,
            Some(Box::new(move |g, _vals, sink| {
                let (da, dshape) = permute_data(g.data(), &oshape, &inverse);
                sink.accumulate(a, Tensor::with_shape_unchecked(dshape, da));
            })),
        )
        .into_ok()
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var, NnError> {
        let total: T = self.value(a).data().iter().copied().sum();
        let n = self.value(a).elems();
        let shape = self.shape(a).to_vec();
        let needs = self.needs_grad(a);
        self.push(
            Tensor::scalar(total),
            needs,
            Some(Box::new(move |g, _vals, sink| {
                let gv = g.scalar_value();
                sink.accumulate(a, Tensor::with_shape_unchecked(shape.clone(), vec![gv; n]));
            })),
        )
        .into_ok()
    }

    pub fn mean_all(&mut self, a: Var) -> Result<Var, NnError> {
        let n = self.value(a).elems();
        let s = self.sum_all(a)?;
        self.scale(s, T::one() / real(n as f64))
    }

    /// Mean absolute value over every element; the workhorse L1 reduction.
    pub fn mean_abs(&mut self, a: Var) -> Result<Var, NnError> {
        let v = self.abs(a)?;
        self.mean_all(v)
    }

    /// Scaled dot-product attention over tokens, multi-head, no dropout:
    /// x is (B, n, d), the projections are shared (d, d) weights, and the
    /// per-head scale is 1/sqrt(d/heads). Without positional encodings the
    /// result is permutation-equivariant in the token axis.
    pub fn multi_head_attention(
        &mut self,
        x: Var,
        wq: Var,
        wk: Var,
        wv: Var,
        wo: Var,
        heads: usize,
    ) -> Result<Var, NnError> {
        let shape = self.shape(x).to_vec();
        if shape.len() != 3 {
            return Err(NnError::shapes("multi_head_attention", &shape, &[0, 0, 0]));
        }
        let (b, n, d) = (shape[0], shape[1], shape[2]);
        if heads == 0 || d % heads != 0 {
            return Err(NnError::shapes("multi_head_attention", &shape, &[heads]));
        }
        let dh = d / heads;
        let q = self.matmul(x, wq)?;
        let k = self.matmul(x, wk)?;
        let v = self.matmul(x, wv)?;
        let split = |g: &mut Self, t: Var| -> Result<Var, NnError> {
            let r = g.reshape(t, vec![b, n, heads, dh])?;
            let p = g.permute(r, &[0, 2, 1, 3])?;
            g.reshape(p, vec![b * heads, n, dh])
        };
        let qh = split(self, q)?;
        let kh = split(self, k)?;
        let vh = split(self, v)?;
        let scores = self.bmm_nt(qh, kh)?;
        let scaled = self.scale(scores, real(1.0 / (dh as f64).sqrt()))?;
        let attn = self.softmax(scaled)?;
        let ctx = self.bmm(attn, vh)?;
        let r = self.reshape(ctx, vec![b, heads, n, dh])?;
        let p = self.permute(r, &[0, 2, 1, 3])?;
        let merged = self.reshape(p, vec![b, n, d])?;
        self.matmul(merged, wo)
    }

    /// Weighted sum of scalar nodes.
    pub fn weighted_sum(&mut self, terms: &[(Var, T)]) -> Result<Var, NnError> {
        let mut total = T::zero();
        for &(v, w) in terms {
            if self.value(v).elems() != 1 {
                return Err(NnError::Graph(format!(
                    "weighted_sum requires scalars, got shape {:?}",
                    self.shape(v)
                )));
            }
            total += self.value(v).scalar_value() * w;
        }
        let needs = terms.iter().any(|&(v, _)| self.needs_grad(v));
        let terms_owned = terms.to_vec();
        self.push(
            Tensor::scalar(total),
            needs,
            Some(Box::new(move |g, _vals, sink| {
                let gv = g.scalar_value();
                for &(v, w) in &terms_owned {
                    sink.accumulate(v, Tensor::scalar(gv * w));
                }
            })),
        )
        .into_ok()
    }
}

fn permute_data<T: Real>(data: &[T], shape: &[usize], perm: &[usize]) -> (Vec<T>, Vec<usize>) {
    let rank = shape.len();
    let oshape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    // Strides of the input, then reorder so out index i advances by
    // in_stride[perm[i]].
    let mut in_strides = vec![1usize; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let total = data.len();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; rank];
    let mut src = 0usize;
    for _ in 0..total {
        out.push(data[src]);
        // Increment the multi-index, updating the source offset.
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            src += strides[ax];
            if idx[ax] < oshape[ax] {
                break;
            }
            src -= strides[ax] * oshape[ax];
            idx[ax] = 0;
        }
    }
    (out, oshape)
}

/// Tiny helper so op bodies can end with `.into_ok()` after push.
trait IntoOk: Sized {
    fn into_ok<E>(self) -> Result<Self, E>;
}

impl IntoOk for Var {
    fn into_ok<E>(self) -> Result<Self, E> {
        Ok(self)
    }
}
