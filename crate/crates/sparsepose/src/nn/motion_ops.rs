//! Fused differentiable ops for the kinematic path: batched 6D -> rotation
//! matrices, forward kinematics (positions and global rotations), reference-
//! joint subtraction, per-frame translation, and token replacement.
//!
//! These carry hand-derived backward passes; each is verified against
//! central finite differences in the unit tests.

use crate::nn::graph::{Graph, Var};
use crate::nn::ops::{mm, mm_nt, mm_tn};
use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::Real;
use crate::rotation::{gram_schmidt, gram_schmidt_vjp};
use crate::skeleton::SkeletonTemplate;

/// Kinematic tree captured by the FK ops.
#[derive(Clone)]
pub(crate) struct FkTree<T> {
    parents: Vec<i32>,
    offsets: Vec<[T; 3]>,
}

impl<T: Real> FkTree<T> {
    fn from_template(template: &SkeletonTemplate) -> Self {
        FkTree {
            parents: template.parents.clone(),
            offsets: template
                .offsets
                .iter()
                .map(|o| [T::from_f64(o[0]), T::from_f64(o[1]), T::from_f64(o[2])])
                .collect(),
        }
    }

    fn joints(&self) -> usize {
        self.parents.len()
    }
}

/// Global rotation chain for one frame: `rots` is J x 9 row-major local
/// matrices, `out` receives J x 9 global matrices.
fn fk_rotations_frame<T: Real>(tree: &FkTree<T>, rots: &[T], out: &mut [T]) {
    let j_count = tree.joints();
    out[0..9].copy_from_slice(&rots[0..9]);
    for j in 1..j_count {
        let p = tree.parents[j] as usize;
        let (head, tail) = out.split_at_mut(j * 9);
        mm(
            &head[p * 9..p * 9 + 9],
            &rots[j * 9..j * 9 + 9],
            3,
            3,
            3,
            &mut tail[0..9],
        );
    }
}

impl<T: Real> Graph<T> {
    /// Batched Gram-Schmidt: (..., 6) -> (..., 3, 3) row-major.
    pub fn sixd_to_matrices(&mut self, a: Var) -> Result<Var, NnError> {
        let shape = self.shape(a).to_vec();
        if shape.last() != Some(&6) {
            return Err(NnError::shapes("sixd_to_matrices", &shape, &[6]));
        }
        let count = self.value(a).elems() / 6;
        let mut data = vec![T::zero(); count * 9];
        for i in 0..count {
            let v: &[T; 6] = self.value(a).data()[i * 6..(i + 1) * 6].try_into().unwrap();
            let m = gram_schmidt(v).map_err(|e| NnError::Degenerate(e.to_string()))?;
            data[i * 9..(i + 1) * 9].copy_from_slice(&m);
        }
        let mut oshape = shape[..shape.len() - 1].to_vec();
        oshape.extend([3, 3]);
        let needs = self.needs_grad(a);
        self.push(
            Tensor::with_shape_unchecked(oshape, data),
            needs,
            Some(Box::new(move |g, vals, sink| {
                let xval = vals.get(a);
                let mut da = vec![T::zero(); count * 6];
                for i in 0..count {
                    let v: &[T; 6] = xval.data()[i * 6..(i + 1) * 6].try_into().unwrap();
                    let gm: &[T; 9] = g.data()[i * 9..(i + 1) * 9].try_into().unwrap();
                    let gv = gram_schmidt_vjp(v, gm);
                    da[i * 6..(i + 1) * 6].copy_from_slice(&gv);
                }
                sink.accumulate(a, Tensor::with_shape_unchecked(xval.shape().to_vec(), da));
            })),
        );
        Ok(Var(self.len() - 1))
    }

    /// Global joint rotations from local ones: input (t, J, 3, 3),
    /// output (t, J, 3, 3) with `G[j] = G[parent[j]] * L[j]`.
    pub fn fk_rotations(&mut self, rots: Var, template: &SkeletonTemplate) -> Result<Var, NnError> {
        let tree = FkTree::from_template(template);
        let shape = self.shape(rots).to_vec();
        let j_count = tree.joints();
        if shape.len() != 4 || shape[1] != j_count || shape[2] != 3 || shape[3] != 3 {
            return Err(NnError::shapes("fk_rotations", &shape, &[0, j_count, 3, 3]));
        }
        let t = shape[0];
        let stride = j_count * 9;
        let mut data = vec![T::zero(); t * stride];
        for f in 0..t {
            fk_rotations_frame(
                &tree,
                &self.value(rots).data()[f * stride..(f + 1) * stride],
                &mut data[f * stride..(f + 1) * stride],
            );
        }
        let self_id = self.next_id();
        let needs = self.needs_grad(rots);
        self.push(
            Tensor::with_shape_unchecked(shape.clone(), data),
            needs,
            Some(Box::new(move |g, vals, sink| {
                let local = vals.get(rots);
                let global = vals.get(self_id);
                let mut da = vec![T::zero(); t * stride];
                let mut acc = vec![T::zero(); stride];
                for f in 0..t {
                    let gl = &global.data()[f * stride..(f + 1) * stride];
                    let lo = &local.data()[f * stride..(f + 1) * stride];
                    acc.copy_from_slice(&g.data()[f * stride..(f + 1) * stride]);
                    for j in (1..tree.parents.len()).rev() {
                        let p = tree.parents[j] as usize;
                        // dL[j] = G[p]^T * acc[j]
                        let (acc_head, acc_tail) = acc.split_at_mut(j * 9);
                        mm_tn(
                            &gl[p * 9..p * 9 + 9],
                            &acc_tail[0..9],
                            3,
                            3,
                            3,
                            &mut da[f * stride + j * 9..f * stride + j * 9 + 9],
                        );
                        // acc[p] += acc[j] * L[j]^T
                        mm_nt(
                            &acc_tail[0..9],
                            &lo[j * 9..j * 9 + 9],
                            3,
                            3,
                            3,
                            &mut acc_head[p * 9..p * 9 + 9],
                        );
                    }
                    da[f * stride..f * stride + 9]
                        .iter_mut()
                        .zip(acc[0..9].iter())
                        .for_each(|(d, &a)| *d += a);
                }
                sink.accumulate(rots, Tensor::with_shape_unchecked(shape.clone(), da));
            })),
        );
        Ok(Var(self.len() - 1))
    }

    /// Joint positions from local rotations and optional root translation:
    /// input (t, J, 3, 3) and (t, 3), output (t, J, 3) with
    /// `p[j] = p[parent[j]] + G[parent[j]] * offset[j]` and `p[0] = root`.
    pub fn fk_positions(
        &mut self,
        rots: Var,
        root: Option<Var>,
        template: &SkeletonTemplate,
    ) -> Result<Var, NnError> {
        let tree = FkTree::from_template(template);
        let shape = self.shape(rots).to_vec();
        let j_count = tree.joints();
        if shape.len() != 4 || shape[1] != j_count || shape[2] != 3 || shape[3] != 3 {
            return Err(NnError::shapes("fk_positions", &shape, &[0, j_count, 3, 3]));
        }
        let t = shape[0];
        if let Some(r) = root {
            if self.shape(r) != [t, 3] {
                return Err(NnError::shapes("fk_positions", self.shape(r), &[t, 3]));
            }
        }
        let rstride = j_count * 9;
        let pstride = j_count * 3;
        // Forward needs the global rotations; keep them for the backward pass.
        let mut globals = vec![T::zero(); t * rstride];
        let mut positions = vec![T::zero(); t * pstride];
        for f in 0..t {
            fk_rotations_frame(
                &tree,
                &self.value(rots).data()[f * rstride..(f + 1) * rstride],
                &mut globals[f * rstride..(f + 1) * rstride],
            );
            if let Some(r) = root {
                positions[f * pstride..f * pstride + 3]
                    .copy_from_slice(&self.value(r).data()[f * 3..(f + 1) * 3]);
            }
            for j in 1..j_count {
                let p = tree.parents[j] as usize;
                let gp = &globals[f * rstride + p * 9..f * rstride + p * 9 + 9];
                let off = &tree.offsets[j];
                let mut rotated = [T::zero(); 3];
                for r_i in 0..3 {
                    rotated[r_i] =
                        gp[r_i * 3] * off[0] + gp[r_i * 3 + 1] * off[1] + gp[r_i * 3 + 2] * off[2];
                }
                for c in 0..3 {
                    positions[f * pstride + j * 3 + c] =
                        positions[f * pstride + p * 3 + c] + rotated[c];
                }
            }
        }
        let needs =
            self.needs_grad(rots) || root.map(|r| self.needs_grad(r)).unwrap_or(false);
        self.push(
            Tensor::with_shape_unchecked(vec![t, j_count, 3], positions),
            needs,
            Some(Box::new(move |g, vals, sink| {
                let local = vals.get(rots);
                let mut da = vec![T::zero(); t * rstride];
                let mut droot = vec![T::zero(); t * 3];
                let mut acc_p = vec![T::zero(); pstride];
                let mut acc_r = vec![T::zero(); rstride];
                for f in 0..t {
                    let lo = &local.data()[f * rstride..(f + 1) * rstride];
                    let gl = &globals[f * rstride..(f + 1) * rstride];
                    acc_p.copy_from_slice(&g.data()[f * pstride..(f + 1) * pstride]);
                    acc_r.iter_mut().for_each(|v| *v = T::zero());
                    // Positions: accumulate into parents; each child's
                    // position adjoint contributes an outer product to the
                    // parent's global-rotation adjoint.
                    for j in (1..j_count).rev() {
                        let p = tree.parents[j] as usize;
                        let off = &tree.offsets[j];
                        let gacc = [acc_p[j * 3], acc_p[j * 3 + 1], acc_p[j * 3 + 2]];
                        for c in 0..3 {
                            acc_p[p * 3 + c] += gacc[c];
                        }
                        for r_i in 0..3 {
                            for c in 0..3 {
                                acc_r[p * 9 + r_i * 3 + c] += gacc[r_i] * off[c];
                            }
                        }
                    }
                    // Rotation chain, reverse topological order.
                    for j in (1..j_count).rev() {
                        let p = tree.parents[j] as usize;
                        let (acc_head, acc_tail) = acc_r.split_at_mut(j * 9);
                        mm_tn(
                            &gl[p * 9..p * 9 + 9],
                            &acc_tail[0..9],
                            3,
                            3,
                            3,
                            &mut da[f * rstride + j * 9..f * rstride + j * 9 + 9],
                        );
                        mm_nt(
                            &acc_tail[0..9],
                            &lo[j * 9..j * 9 + 9],
                            3,
                            3,
                            3,
                            &mut acc_head[p * 9..p * 9 + 9],
                        );
                    }
                    da[f * rstride..f * rstride + 9]
                        .iter_mut()
                        .zip(acc_r[0..9].iter())
                        .for_each(|(d, &a)| *d += a);
                    droot[f * 3..(f + 1) * 3].copy_from_slice(&acc_p[0..3]);
                }
                if sink.needs(rots) {
                    sink.accumulate(rots, Tensor::with_shape_unchecked(shape.clone(), da));
                }
                if let Some(r) = root {
                    if sink.needs(r) {
                        sink.accumulate(r, Tensor::with_shape_unchecked(vec![t, 3], droot));
                    }
                }
            })),
        );
        Ok(Var(self.len() - 1))
    }

    /// Subtracts the row at `index` along axis 1 from every row:
    /// out[f, j, :] = a[f, j, :] - a[f, index, :]. Used for head-relative
    /// coordinates; the reference row becomes exactly zero.
    pub fn sub_ref_index(&mut self, a: Var, index: usize) -> Result<Var, NnError> {
        let shape = self.shape(a).to_vec();
        if shape.len() != 3 || index >= shape[1] {
            return Err(NnError::shapes("sub_ref_index", &shape, &[0, index + 1, 0]));
        }
        let (t, j_count, c) = (shape[0], shape[1], shape[2]);
        let mut data = self.value(a).data().to_vec();
        for f in 0..t {
            let base = f * j_count * c;
            let refrow: Vec<T> = data[base + index * c..base + (index + 1) * c].to_vec();
            for j in 0..j_count {
                for k in 0..c {
                    data[base + j * c + k] = data[base + j * c + k] - refrow[k];
                }
            }
        }
        let needs = self.needs_grad(a);
        self.push(
            Tensor::with_shape_unchecked(shape.clone(), data),
            needs,
            Some(Box::new(move |g, _vals, sink| {
                let mut da = g.data().to_vec();
                for f in 0..t {
                    let base = f * j_count * c;
                    let mut sums = vec![T::zero(); c];
                    for j in 0..j_count {
                        for k in 0..c {
                            sums[k] += g.data()[base + j * c + k];
                        }
                    }
                    for k in 0..c {
                        da[base + index * c + k] = da[base + index * c + k] - sums[k];
                    }
                }
                sink.accumulate(a, Tensor::with_shape_unchecked(shape.clone(), da));
            })),
        );
        Ok(Var(self.len() - 1))
    }

    /// Adds a per-frame vector to every row: a (t, J, C) + b (t, C).
    pub fn add_per_frame(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let ashape = self.shape(a).to_vec();
        let bshape = self.shape(b).to_vec();
        if ashape.len() != 3 || bshape.len() != 2 || ashape[0] != bshape[0] || ashape[2] != bshape[1]
        {
            return Err(NnError::shapes("add_per_frame", &ashape, &bshape));
        }
        let (t, j_count, c) = (ashape[0], ashape[1], ashape[2]);
        let mut data = self.value(a).data().to_vec();
        for f in 0..t {
            for j in 0..j_count {
                for k in 0..c {
                    data[(f * j_count + j) * c + k] =
                        data[(f * j_count + j) * c + k] + self.value(b).data()[f * c + k];
                }
            }
        }
        let needs = self.needs_grad(a) || self.needs_grad(b);
        self.push(
            Tensor::with_shape_unchecked(ashape.clone(), data),
            needs,
            Some(Box::new(move |g, _vals, sink| {
                sink.accumulate(a, g.clone());
                if sink.needs(b) {
                    let mut db = vec![T::zero(); t * c];
                    for f in 0..t {
                        for j in 0..j_count {
                            for k in 0..c {
                                db[f * c + k] += g.data()[(f * j_count + j) * c + k];
                            }
                        }
                    }
                    sink.accumulate(b, Tensor::with_shape_unchecked(bshape.clone(), db));
                }
            })),
        );
        Ok(Var(self.len() - 1))
    }

    /// Replaces rows along axis 1: out[f, indices[i], ...] = values[f, i, ...].
    /// Gradients flow into `values` at the replaced rows and into `x`
    /// everywhere else.
    pub fn replace_rows(&mut self, x: Var, indices: &[usize], values: Var) -> Result<Var, NnError> {
        let xshape = self.shape(x).to_vec();
        let vshape = self.shape(values).to_vec();
        if xshape.len() < 2 || vshape.len() != xshape.len() {
            return Err(NnError::shapes("replace_rows", &xshape, &vshape));
        }
        let trail: usize = xshape[2..].iter().product();
        let vtrail: usize = vshape[2..].iter().product();
        if vshape[0] != xshape[0]
            || vshape[1] != indices.len()
            || vtrail != trail
            || indices.iter().any(|&i| i >= xshape[1])
        {
            return Err(NnError::shapes("replace_rows", &xshape, &vshape));
        }
        let (t, rows) = (xshape[0], xshape[1]);
        let k = indices.len();
        let mut data = self.value(x).data().to_vec();
        for f in 0..t {
            for (i, &idx) in indices.iter().enumerate() {
                let dst = (f * rows + idx) * trail;
                let src = (f * k + i) * trail;
                data[dst..dst + trail]
                    .copy_from_slice(&self.value(values).data()[src..src + trail]);
            }
        }
        let needs = self.needs_grad(x) || self.needs_grad(values);
        let indices_owned = indices.to_vec();
        self.push(
            Tensor::with_shape_unchecked(xshape.clone(), data),
            needs,
            Some(Box::new(move |g, _vals, sink| {
                if sink.needs(x) {
                    let mut dx = g.data().to_vec();
                    for f in 0..t {
                        for &idx in &indices_owned {
                            let dst = (f * rows + idx) * trail;
                            dx[dst..dst + trail].iter_mut().for_each(|v| *v = T::zero());
                        }
                    }
                    sink.accumulate(x, Tensor::with_shape_unchecked(xshape.clone(), dx));
                }
                if sink.needs(values) {
                    let mut dv = vec![T::zero(); t * k * trail];
                    for f in 0..t {
                        for (i, &idx) in indices_owned.iter().enumerate() {
                            let src = (f * rows + idx) * trail;
                            let dst = (f * k + i) * trail;
                            dv[dst..dst + trail].copy_from_slice(&g.data()[src..src + trail]);
                        }
                    }
                    sink.accumulate(values, Tensor::with_shape_unchecked(vshape.clone(), dv));
                }
            })),
        );
        Ok(Var(self.len() - 1))
    }
}
