//! Single-head scaled dot-product attention across views, composed from tape
//! primitives so gradients come for free.
//!
//! For each sample (row), the query attends over one key/value pair per view:
//! `score_j = (q W_Q) . (k_j W_K) / sqrt(d)`, weights are a softmax over the
//! per-view scores, and the output is `(sum_j w_j (v_j W_V)) W_O`. There is
//! no residual connection; the output is the projected mixture alone.

use super::{NodeId, Tape};
use crate::error::{Result, TmurError};

/// The four learned square projections of one attention head, already placed
/// on the tape as parameter nodes.
#[derive(Clone, Copy, Debug)]
pub struct AttentionProjections {
    pub query: NodeId,
    pub key: NodeId,
    pub value: NodeId,
    pub output: NodeId,
}

/// Batched cross-view attention. `query`, every `keys[j]`, and every
/// `values[j]` are `B x d`; row `b` of the output attends over the `j`
/// key/value rows belonging to sample `b`.
pub fn cross_attention(
    tape: &mut Tape,
    query: NodeId,
    keys: &[NodeId],
    values: &[NodeId],
    proj: &AttentionProjections,
) -> Result<NodeId> {
    if keys.is_empty() || keys.len() != values.len() {
        return Err(TmurError::shape(format!(
            "cross_attention: {} keys vs {} values",
            keys.len(),
            values.len()
        )));
    }
    let (rows, d) = tape.value(query).shape();
    for &n in keys.iter().chain(values.iter()) {
        if tape.value(n).shape() != (rows, d) {
            return Err(TmurError::shape(format!(
                "cross_attention: expected {rows}x{d} inputs, got {:?}",
                tape.value(n).shape()
            )));
        }
    }
    for n in [proj.query, proj.key, proj.value, proj.output] {
        if tape.value(n).shape() != (d, d) {
            return Err(TmurError::shape(format!(
                "cross_attention: projections must be {d}x{d}, got {:?}",
                tape.value(n).shape()
            )));
        }
    }

    let q = tape.matmul(query, proj.query)?;
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    let mut score_cols = Vec::with_capacity(keys.len());
    for &k in keys {
        let kp = tape.matmul(k, proj.key)?;
        let dot = tape.row_dot(q, kp)?;
        score_cols.push(tape.scale(dot, inv_sqrt_d));
    }
    let scores = tape.concat_cols(&score_cols)?;
    let weights = tape.softmax_rows(scores, 1.0)?;

    let mut mixed: Option<NodeId> = None;
    for (j, &v) in values.iter().enumerate() {
        let vp = tape.matmul(v, proj.value)?;
        let w_j = tape.extract_col(weights, j)?;
        let term = tape.mul_col_vec(vp, w_j)?;
        mixed = Some(match mixed {
            Some(acc) => tape.add(acc, term)?,
            None => term,
        });
    }
    tape.matmul(mixed.expect("at least one value"), proj.output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::DenseArray;
    use crate::autodiff::{ParamId, ParamStore};
    use crate::gradcheck;
    use rand::Rng;

    fn identity(d: usize) -> DenseArray {
        let mut m = DenseArray::zeros(d, d);
        for i in 0..d {
            m.set(i, i, 1.0);
        }
        m
    }

    fn identity_projections(tape: &mut Tape, d: usize) -> AttentionProjections {
        AttentionProjections {
            query: tape.leaf(identity(d)),
            key: tape.leaf(identity(d)),
            value: tape.leaf(identity(d)),
            output: tape.leaf(identity(d)),
        }
    }

    #[test]
    fn single_view_identity_returns_the_value() {
        let mut tape = Tape::new();
        let q = tape.leaf(DenseArray::from_rows(&[vec![0.3, -1.2, 2.0]]).unwrap());
        let v = tape.leaf(DenseArray::from_rows(&[vec![5.0, -6.0, 7.5]]).unwrap());
        let proj = identity_projections(&mut tape, 3);
        let out = cross_attention(&mut tape, q, &[q], &[v], &proj).unwrap();
        for (a, b) in tape.value(out).data().iter().zip([5.0f64, -6.0, 7.5]) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn identical_keys_average_the_values() {
        let mut tape = Tape::new();
        let q = tape.leaf(DenseArray::from_rows(&[vec![1.0, 2.0]]).unwrap());
        let k = tape.leaf(DenseArray::from_rows(&[vec![0.5, -0.5]]).unwrap());
        let v1 = tape.leaf(DenseArray::from_rows(&[vec![3.0, 0.0]]).unwrap());
        let v2 = tape.leaf(DenseArray::from_rows(&[vec![0.0, 6.0]]).unwrap());
        let v3 = tape.leaf(DenseArray::from_rows(&[vec![3.0, 3.0]]).unwrap());
        let proj = identity_projections(&mut tape, 2);
        let out = cross_attention(&mut tape, q, &[k, k, k], &[v1, v2, v3], &proj).unwrap();
        assert!((tape.value(out).get(0, 0) - 2.0).abs() < 1e-12);
        assert!((tape.value(out).get(0, 1) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let mut tape = Tape::new();
        let q = tape.leaf(DenseArray::zeros(1, 3));
        let k = tape.leaf(DenseArray::zeros(1, 3));
        let v = tape.leaf(DenseArray::zeros(1, 2));
        let proj = identity_projections(&mut tape, 3);
        assert!(cross_attention(&mut tape, q, &[k], &[v], &proj).is_err());
        assert!(cross_attention(&mut tape, q, &[k, k], &[k], &proj).is_err());
    }

    #[test]
    fn attention_gradients_match_finite_differences() {
        let d = 4;
        let views = 3;
        let batch = 2;
        let mut store = ParamStore::new();
        let mut rng = crate::seeding::stream(2024, "attention-gradcheck");
        let mut rand_param = |store: &mut ParamStore, name: &str, r: usize, c: usize| -> ParamId {
            let mut m = DenseArray::zeros(r, c);
            for v in m.data_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            store.register(name, m).unwrap()
        };
        let wq = rand_param(&mut store, "wq", d, d);
        let wk = rand_param(&mut store, "wk", d, d);
        let wv = rand_param(&mut store, "wv", d, d);
        let wo = rand_param(&mut store, "wo", d, d);
        let mut inputs = Vec::new();
        for j in 0..views {
            inputs.push(rand_param(&mut store, &format!("h{j}"), batch, d));
        }
        let all: Vec<ParamId> = [wq, wk, wv, wo].into_iter().chain(inputs.clone()).collect();

        let build = move |s: &ParamStore, tape: &mut Tape| -> crate::error::Result<NodeId> {
            let hs: Vec<NodeId> = inputs.iter().map(|&id| tape.param(s, id)).collect();
            let proj = AttentionProjections {
                query: tape.param(s, wq),
                key: tape.param(s, wk),
                value: tape.param(s, wv),
                output: tape.param(s, wo),
            };
            let out = cross_attention(tape, hs[0], &hs, &hs, &proj)?;
            Ok(tape.mean_all(out))
        };
        let eval = |s: &ParamStore| {
            let mut tape = Tape::new();
            let root = build(s, &mut tape)?;
            Ok(tape.value(root).scalar_value())
        };
        let eval_grad = |s: &mut ParamStore| {
            let mut tape = Tape::new();
            let root = build(s, &mut tape)?;
            let v = tape.value(root).scalar_value();
            tape.backward_scalar(root, s)?;
            Ok(v)
        };
        let report =
            gradcheck::check_params(&mut store, &all, 1e-5, 1e-4, 1e-7, eval, eval_grad).unwrap();
        assert!(report.max_rel_err < 1e-4, "rel err {}", report.max_rel_err);
    }
}
