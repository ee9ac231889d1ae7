//! The four-term training objective.
//!
//! * fused evidence loss: mean over the batch of
//!   `psi(S) - psi(alpha_y)` for the fused Dirichlet parameters,
//! * auxiliary expert loss: the same digamma loss averaged over every
//!   expert head (private and collaborative),
//! * load-balance penalty: `max(||pibar||^2 - rho/E, 0)` on the batch-mean
//!   routing weights `pibar` over `E` experts,
//! * diversity penalty: mean squared pairwise cosine similarity of the
//!   normalized private expert features.
//!
//! The total is `fused + lambda * view + beta * balance + gamma * diversity`.

use crate::array::DenseArray;
use crate::autodiff::{NodeId, Tape};
use crate::error::{Result, TmurError};

/// Scalar weights of the objective. `rho` is the slack of the load-balance
/// hinge and must exceed 1 (a value of 1 would penalize even perfectly
/// uniform routing).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
}

impl LossWeights {
    pub fn new(lambda: f64, beta: f64, gamma: f64, rho: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("beta", beta), ("gamma", gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(TmurError::config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !rho.is_finite() || rho <= 1.0 {
            return Err(TmurError::config(format!("rho must exceed 1, got {rho}")));
        }
        Ok(LossWeights {
            lambda,
            beta,
            gamma,
            rho,
        })
    }

    /// Only the fused term active.
    pub fn fused_only() -> Self {
        LossWeights {
            lambda: 0.0,
            beta: 0.0,
            gamma: 0.0,
            rho: 1.5,
        }
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda: 0.3,
            beta: 0.05,
            gamma: 0.05,
            rho: 1.5,
        }
    }
}

/// Tape nodes of each objective term; every node is `1 x 1`.
#[derive(Clone, Copy, Debug)]
pub struct LossTerms {
    pub fused: NodeId,
    pub view: NodeId,
    pub balance: NodeId,
    pub diversity: NodeId,
    pub total: NodeId,
}

/// Scalar values of the objective terms after a forward pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub fused: f64,
    pub view: f64,
    pub balance: f64,
    pub diversity: f64,
    pub total: f64,
}

impl LossTerms {
    pub fn breakdown(&self, tape: &Tape) -> LossBreakdown {
        LossBreakdown {
            fused: tape.value(self.fused).scalar_value(),
            view: tape.value(self.view).scalar_value(),
            balance: tape.value(self.balance).scalar_value(),
            diversity: tape.value(self.diversity).scalar_value(),
            total: tape.value(self.total).scalar_value(),
        }
    }
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.fused.is_finite()
            && self.view.is_finite()
            && self.balance.is_finite()
            && self.diversity.is_finite()
            && self.total.is_finite()
    }
}

/// One-hot encode labels into a `B x K` matrix.
pub fn one_hot(labels: &[usize], num_classes: usize) -> Result<DenseArray> {
    if labels.is_empty() {
        return Err(TmurError::domain("one_hot needs at least one label"));
    }
    let mut out = DenseArray::zeros(labels.len(), num_classes);
    for (r, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(TmurError::domain(format!(
                "label {y} out of range for K={num_classes}"
            )));
        }
        out.set(r, y, 1.0);
    }
    Ok(out)
}

/// Evidential cross-entropy `mean_b [ psi(S_b) - psi(alpha_{b, y_b}) ]` for a
/// `B x K` matrix of Dirichlet parameters.
pub fn digamma_loss(tape: &mut Tape, alpha: NodeId, labels: &[usize]) -> Result<NodeId> {
    let (rows, cols) = tape.value(alpha).shape();
    if labels.len() != rows {
        return Err(TmurError::shape(format!(
            "digamma_loss: {} labels for {rows} rows",
            labels.len()
        )));
    }
    if cols < 2 {
        return Err(TmurError::domain("digamma_loss needs K >= 2"));
    }
    let targets = tape.leaf(one_hot(labels, cols)?);
    let strength = tape.row_sum(alpha);
    let psi_strength = tape.digamma(strength)?;
    let psi_alpha = tape.digamma(alpha)?;
    let picked = tape.mul(targets, psi_alpha)?;
    let psi_label = tape.row_sum(picked);
    let per_sample = tape.sub(psi_strength, psi_label)?;
    Ok(tape.mean_all(per_sample))
}

/// Mean digamma loss over all expert heads.
pub fn auxiliary_expert_loss(
    tape: &mut Tape,
    alphas: &[NodeId],
    labels: &[usize],
) -> Result<NodeId> {
    if alphas.is_empty() {
        return Err(TmurError::shape("auxiliary loss needs at least one expert"));
    }
    let mut acc: Option<NodeId> = None;
    for &alpha in alphas {
        let term = digamma_loss(tape, alpha, labels)?;
        acc = Some(match acc {
            Some(a) => tape.add(a, term)?,
            None => term,
        });
    }
    Ok(tape.scale(acc.expect("nonempty"), 1.0 / alphas.len() as f64))
}

/// Hinge on the concentration of batch-mean routing:
/// `max(||pibar||^2 - rho / E, 0)` where `pibar = mean_b pi_b`.
///
/// In the inactive region the subgradient is zero, so balanced routing is
/// left untouched by this term.
pub fn load_balance_loss(tape: &mut Tape, pi: NodeId, rho: f64) -> Result<NodeId> {
    if !rho.is_finite() || rho <= 1.0 {
        return Err(TmurError::config(format!("rho must exceed 1, got {rho}")));
    }
    let (rows, experts) = tape.value(pi).shape();
    if rows == 0 || experts == 0 {
        return Err(TmurError::shape("load_balance_loss on an empty batch"));
    }
    let pibar = tape.col_mean(pi);
    let conc = tape.row_dot(pibar, pibar)?;
    let slack = tape.shift(conc, -rho / experts as f64);
    Ok(tape.relu(slack))
}

/// Mean squared cosine similarity over all pairs of normalized private
/// features; zero when fewer than two experts are given.
pub fn diversity_loss(tape: &mut Tape, normalized: &[NodeId]) -> Result<NodeId> {
    if normalized.len() < 2 {
        return Ok(tape.leaf(DenseArray::scalar(0.0)));
    }
    let shape = tape.value(normalized[0]).shape();
    for &z in normalized {
        if tape.value(z).shape() != shape {
            return Err(TmurError::shape(
                "diversity_loss: mismatched feature shapes".to_string(),
            ));
        }
    }
    let mut acc: Option<NodeId> = None;
    let mut pairs = 0usize;
    for i in 0..normalized.len() {
        for j in (i + 1)..normalized.len() {
            let dot = tape.row_dot(normalized[i], normalized[j])?;
            let sq = tape.mul(dot, dot)?;
            let mean = tape.mean_all(sq);
            acc = Some(match acc {
                Some(a) => tape.add(a, mean)?,
                None => mean,
            });
            pairs += 1;
        }
    }
    Ok(tape.scale(acc.expect("at least one pair"), 1.0 / pairs as f64))
}

/// Assemble the full objective from forward-pass nodes.
///
/// `expert_evidence` must list every head (private then collaborative) and
/// `normalized_private` only the private features entering the diversity
/// term. Evidence nodes hold raw evidence; Dirichlet parameters are formed
/// here as `alpha = e + 1`.
pub fn total_loss(
    tape: &mut Tape,
    fused_evidence: NodeId,
    expert_evidence: &[NodeId],
    normalized_private: &[NodeId],
    routing_weights: NodeId,
    labels: &[usize],
    weights: &LossWeights,
) -> Result<LossTerms> {
    let fused_alpha = tape.shift(fused_evidence, 1.0);
    let fused = digamma_loss(tape, fused_alpha, labels)?;

    let mut expert_alphas = Vec::with_capacity(expert_evidence.len());
    for &e in expert_evidence {
        expert_alphas.push(tape.shift(e, 1.0));
    }
    let view = auxiliary_expert_loss(tape, &expert_alphas, labels)?;
    let balance = load_balance_loss(tape, routing_weights, weights.rho)?;
    let diversity = diversity_loss(tape, normalized_private)?;

    let scaled_view = tape.scale(view, weights.lambda);
    let scaled_balance = tape.scale(balance, weights.beta);
    let scaled_diversity = tape.scale(diversity, weights.gamma);
    let a = tape.add(fused, scaled_view)?;
    let b = tape.add(a, scaled_balance)?;
    let total = tape.add(b, scaled_diversity)?;

    Ok(LossTerms {
        fused,
        view,
        balance,
        diversity,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_of(tape: &Tape, id: NodeId) -> f64 {
        tape.value(id).scalar_value()
    }

    #[test]
    fn digamma_loss_reference_values() {
        // alpha = (2, 1), y = 0: psi(3) - psi(2) = 1/2.
        let mut tape = Tape::new();
        let a = tape.leaf(DenseArray::from_rows(&[vec![2.0, 1.0]]).unwrap());
        let l = digamma_loss(&mut tape, a, &[0]).unwrap();
        assert!((scalar_of(&tape, l) - 0.5).abs() < 1e-12);

        // Zero evidence, K = 2: psi(2) - psi(1) = 1.
        let mut tape = Tape::new();
        let a = tape.leaf(DenseArray::from_rows(&[vec![1.0, 1.0]]).unwrap());
        let l = digamma_loss(&mut tape, a, &[0]).unwrap();
        assert!((scalar_of(&tape, l) - 1.0).abs() < 1e-12);

        // Batch average of the two cases above.
        let mut tape = Tape::new();
        let a = tape.leaf(DenseArray::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap());
        let l = digamma_loss(&mut tape, a, &[0, 0]).unwrap();
        assert!((scalar_of(&tape, l) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn digamma_loss_vanishes_with_overwhelming_evidence() {
        let mut tape = Tape::new();
        let a = tape.leaf(DenseArray::from_rows(&[vec![1e6, 1.0]]).unwrap());
        let l = digamma_loss(&mut tape, a, &[0]).unwrap();
        let v = scalar_of(&tape, l);
        assert!(v > 0.0 && v < 1e-5, "got {v}");
    }

    #[test]
    fn digamma_loss_rejects_bad_labels() {
        let mut tape = Tape::new();
        let a = tape.leaf(DenseArray::from_rows(&[vec![2.0, 1.0]]).unwrap());
        assert!(digamma_loss(&mut tape, a, &[2]).is_err());
        let b = tape.leaf(DenseArray::from_rows(&[vec![2.0, 1.0]]).unwrap());
        assert!(digamma_loss(&mut tape, b, &[0, 1]).is_err());
    }

    #[test]
    fn auxiliary_loss_averages_over_experts() {
        let mut tape = Tape::new();
        let e1 = tape.leaf(DenseArray::from_rows(&[vec![1.0, 1.0]]).unwrap());
        let e2 = tape.leaf(DenseArray::from_rows(&[vec![2.0, 1.0]]).unwrap());
        let l = auxiliary_expert_loss(&mut tape, &[e1, e2], &[0]).unwrap();
        assert!((scalar_of(&tape, l) - 0.75).abs() < 1e-12);

        // A single expert reduces to the plain digamma loss.
        let mut tape = Tape::new();
        let e = tape.leaf(DenseArray::from_rows(&[vec![2.0, 1.0]]).unwrap());
        let l = auxiliary_expert_loss(&mut tape, &[e], &[0]).unwrap();
        assert!((scalar_of(&tape, l) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn load_balance_uniform_is_zero_and_onehot_is_hinged() {
        // Uniform routing over 4 experts: ||pibar||^2 = 1/4 < 1.5/4.
        let mut tape = Tape::new();
        let pi = tape.leaf(DenseArray::filled(8, 4, 0.25));
        let l = load_balance_loss(&mut tape, pi, 1.5).unwrap();
        assert_eq!(scalar_of(&tape, l), 0.0);

        // Every row routed to expert 0: ||pibar||^2 = 1, loss = 1 - 0.375.
        let mut tape = Tape::new();
        let mut onehot = DenseArray::zeros(8, 4);
        for r in 0..8 {
            onehot.set(r, 0, 1.0);
        }
        let pi = tape.leaf(onehot);
        let l = load_balance_loss(&mut tape, pi, 1.5).unwrap();
        assert!((scalar_of(&tape, l) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn load_balance_rejects_rho_at_or_below_one() {
        let mut tape = Tape::new();
        let pi = tape.leaf(DenseArray::filled(2, 3, 1.0 / 3.0));
        assert!(load_balance_loss(&mut tape, pi, 1.0).is_err());
        assert!(load_balance_loss(&mut tape, pi, 0.5).is_err());
        assert!(LossWeights::new(0.3, 0.05, 0.05, 1.0).is_err());
    }

    #[test]
    fn inactive_hinge_has_zero_gradient() {
        let mut store = crate::autodiff::ParamStore::new();
        let logits = store
            .register("logits", DenseArray::from_rows(&[vec![0.1, -0.1, 0.05]]).unwrap())
            .unwrap();
        let mut tape = Tape::new();
        let ln = tape.param(&store, logits);
        let pi = tape.softmax_rows(ln, 1.0).unwrap();
        let l = load_balance_loss(&mut tape, pi, 1.5).unwrap();
        assert_eq!(scalar_of(&tape, l), 0.0);
        tape.backward_scalar(l, &mut store).unwrap();
        assert!(store.get(logits).grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn diversity_reference_values() {
        // Orthogonal unit rows.
        let mut tape = Tape::new();
        let z1 = tape.leaf(DenseArray::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
        let z2 = tape.leaf(DenseArray::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        let l = diversity_loss(&mut tape, &[z1, z2]).unwrap();
        assert_eq!(scalar_of(&tape, l), 0.0);

        // Identical rows score 1, and so do negated rows.
        let mut tape = Tape::new();
        let z = tape.leaf(DenseArray::from_rows(&[vec![1.0, 0.0]]).unwrap());
        let zn = tape.leaf(DenseArray::from_rows(&[vec![-1.0, 0.0]]).unwrap());
        let same = diversity_loss(&mut tape, &[z, z]).unwrap();
        let opposite = diversity_loss(&mut tape, &[z, zn]).unwrap();
        assert!((scalar_of(&tape, same) - 1.0).abs() < 1e-12);
        assert!((scalar_of(&tape, opposite) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diversity_three_views_with_half_cosines() {
        // Three unit vectors with pairwise cosine 1/2: mean pair term 0.25.
        let s3 = 3.0f64.sqrt();
        let rows = [
            vec![1.0, 0.0, 0.0],
            vec![0.5, s3 / 2.0, 0.0],
            vec![0.5, s3 / 6.0, (2.0f64 / 3.0).sqrt()],
        ];
        let mut tape = Tape::new();
        let zs: Vec<NodeId> = rows
            .iter()
            .map(|r| tape.leaf(DenseArray::from_rows(std::slice::from_ref(r)).unwrap()))
            .collect();
        let l = diversity_loss(&mut tape, &zs).unwrap();
        assert!((scalar_of(&tape, l) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn diversity_below_two_views_is_zero() {
        let mut tape = Tape::new();
        let z = tape.leaf(DenseArray::from_rows(&[vec![1.0, 0.0]]).unwrap());
        let l = diversity_loss(&mut tape, &[z]).unwrap();
        assert_eq!(scalar_of(&tape, l), 0.0);
        let l = diversity_loss(&mut tape, &[]).unwrap();
        assert_eq!(scalar_of(&tape, l), 0.0);
    }

    #[test]
    fn zero_weights_leave_only_the_fused_term() {
        let mut tape = Tape::new();
        let fused = tape.leaf(DenseArray::from_rows(&[vec![2.0, 0.5], vec![0.1, 3.0]]).unwrap());
        let e1 = tape.leaf(DenseArray::from_rows(&[vec![1.0, 0.2], vec![0.3, 2.0]]).unwrap());
        let e2 = tape.leaf(DenseArray::from_rows(&[vec![0.4, 0.4], vec![1.0, 1.0]]).unwrap());
        let z1 = tape.leaf(DenseArray::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
        let z2 = tape.leaf(DenseArray::from_rows(&[vec![0.6, 0.8], vec![0.8, 0.6]]).unwrap());
        let pi = tape.leaf(DenseArray::from_rows(&[vec![0.9, 0.05, 0.05], vec![0.8, 0.1, 0.1]]).unwrap());
        let w = LossWeights::new(0.0, 0.0, 0.0, 1.5).unwrap();
        let terms = total_loss(&mut tape, fused, &[e1, e2], &[z1, z2], pi, &[0, 1], &w).unwrap();
        let b = terms.breakdown(&tape);
        assert_eq!(b.total.to_bits(), b.fused.to_bits());
    }

    #[test]
    fn breakdown_identity_holds() {
        let mut tape = Tape::new();
        let fused = tape.leaf(DenseArray::from_rows(&[vec![2.0, 0.5], vec![0.1, 3.0]]).unwrap());
        let e1 = tape.leaf(DenseArray::from_rows(&[vec![1.0, 0.2], vec![0.3, 2.0]]).unwrap());
        let e2 = tape.leaf(DenseArray::from_rows(&[vec![0.4, 0.4], vec![1.0, 1.0]]).unwrap());
        let z1 = tape.leaf(DenseArray::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
        let z2 = tape.leaf(DenseArray::from_rows(&[vec![0.6, 0.8], vec![0.8, 0.6]]).unwrap());
        let pi = tape.leaf(DenseArray::from_rows(&[vec![0.9, 0.05, 0.05], vec![0.8, 0.1, 0.1]]).unwrap());
        let w = LossWeights::default();
        let terms = total_loss(&mut tape, fused, &[e1, e2], &[z1, z2], pi, &[0, 1], &w).unwrap();
        let b = terms.breakdown(&tape);
        let recomputed = b.fused + w.lambda * b.view + w.beta * b.balance + w.gamma * b.diversity;
        assert!((b.total - recomputed).abs() < 1e-12);
        assert!(b.fused >= 0.0 && b.view >= 0.0 && b.balance >= 0.0 && b.diversity >= 0.0);
    }
}
