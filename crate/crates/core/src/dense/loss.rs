use super::{
    AdapterParams, EmbeddingTable, Matrix, RerankConfig, RerankError, TrainingPair,
    MIN_PROJECTED_NORM,
};
use crate::embedding::EmbeddingVector;
use crate::scalar::{dot, Scalar};

/// Loss terms for one pair. `total = hinge - lambda * gold_probability`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<T> {
    pub hinge: T,
    pub gold_probability: T,
    pub total: T,
}

struct Forward<'a, T> {
    x: &'a [T],
    docs: Vec<&'a [T]>,
    u: Vec<T>,
    nu: T,
    vs: Vec<Vec<T>>,
    nvs: Vec<T>,
    /// Scores: index 0 is gold, then positives, then negatives.
    fs: Vec<T>,
}

fn forward<'a, T: Scalar>(
    params: &AdapterParams<T>,
    pair: &TrainingPair,
    table: &'a EmbeddingTable<T>,
) -> Result<Forward<'a, T>, RerankError> {
    let dim = params.dim();
    let check = |e: &'a EmbeddingVector<T>| -> Result<&'a [T], RerankError> {
        if e.dim() != dim {
            return Err(RerankError::DimensionMismatch {
                expected: dim,
                got: e.dim(),
            });
        }
        Ok(e.values())
    };
    let x = check(table.claim(&pair.claim.claim_id)?)?;
    let mut docs = Vec::with_capacity(1 + pair.positives.len() + pair.negatives.len());
    for id in std::iter::once(&pair.gold_doc_id)
        .chain(&pair.positives)
        .chain(&pair.negatives)
    {
        docs.push(check(table.doc(id)?)?);
    }
    let floor = T::of(MIN_PROJECTED_NORM);
    let u = params.w.matvec(x);
    let nu = dot(&u, &u).sqrt();
    if nu < floor {
        return Err(RerankError::DegenerateProjection);
    }
    let mut vs = Vec::with_capacity(docs.len());
    let mut nvs = Vec::with_capacity(docs.len());
    let mut fs = Vec::with_capacity(docs.len());
    for d in &docs {
        let v = params.w.matvec(d);
        let nv = dot(&v, &v).sqrt();
        if nv < floor {
            return Err(RerankError::DegenerateProjection);
        }
        fs.push(dot(&u, &v) / (nu * nv));
        vs.push(v);
        nvs.push(nv);
    }
    Ok(Forward {
        x,
        docs,
        u,
        nu,
        vs,
        nvs,
        fs,
    })
}

/// Index (into positives) of the best positive; first wins on ties.
fn best_positive<T: Scalar>(fs: &[T], l: usize) -> usize {
    let mut best = 0;
    for i in 1..l {
        if fs[1 + i] > fs[1 + best] {
            best = i;
        }
    }
    best
}

/// `max(0, max_i f(x, d_i^p) + tau - f(x, d))`.
fn hinge_from_scores<T: Scalar>(fs: &[T], l: usize, tau: T) -> (T, usize) {
    let best = best_positive(fs, l);
    let arg = (fs[1 + best] + tau) - fs[0];
    (if arg > T::zero() { arg } else { T::zero() }, best)
}

/// Softmax over all sampled scores; returns probabilities in score order.
fn softmax<T: Scalar>(fs: &[T], temp: T) -> Vec<T> {
    let z: Vec<T> = fs.iter().map(|&f| f / temp).collect();
    let zmax = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - zmax).exp()).collect();
    let total: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

fn validate_pair(pair: &TrainingPair) -> Result<usize, RerankError> {
    let l = pair.positives.len();
    if l == 0 || pair.negatives.len() != l {
        return Err(RerankError::InvalidConfig(format!(
            "pair for {} has {} positives and {} negatives",
            pair.claim.claim_id,
            l,
            pair.negatives.len()
        )));
    }
    Ok(l)
}

/// The margin term alone.
pub fn hinge_term<T: Scalar>(
    params: &AdapterParams<T>,
    pair: &TrainingPair,
    table: &EmbeddingTable<T>,
    tau: T,
) -> Result<T, RerankError> {
    let l = validate_pair(pair)?;
    let fw = forward(params, pair, table)?;
    Ok(hinge_from_scores(&fw.fs, l, tau).0)
}

/// Loss value and its exact gradient with respect to `W`.
///
/// At the hinge kink the subgradient is taken as zero.
#[allow(clippy::needless_range_loop)]
pub fn loss_and_grad<T: Scalar>(
    params: &AdapterParams<T>,
    pair: &TrainingPair,
    table: &EmbeddingTable<T>,
    cfg: &RerankConfig,
) -> Result<(LossBreakdown<T>, Matrix<T>), RerankError> {
    let l = validate_pair(pair)?;
    let fw = forward(params, pair, table)?;
    let tau = T::of(cfg.tau);
    let lambda = T::of(cfg.lambda);
    let temp = T::of(cfg.temp);

    let (hinge, best) = hinge_from_scores(&fw.fs, l, tau);
    let p = softmax(&fw.fs, temp);
    let total = hinge - lambda * p[0];

    // dL/df_j
    let mut g = vec![T::zero(); fw.fs.len()];
    if hinge > T::zero() {
        g[0] = g[0] - T::one();
        g[1 + best] = g[1 + best] + T::one();
    }
    let c = lambda * p[0] / temp;
    g[0] = g[0] - c * (T::one() - p[0]);
    for j in 1..g.len() {
        g[j] = g[j] + c * p[j];
    }

    // f_j = u·v_j / (|u||v_j|), u = W x, v_j = W d_j
    let n = params.dim();
    let mut du = vec![T::zero(); n];
    let mut grad = Matrix::zeros(n);
    let nu2 = fw.nu * fw.nu;
    for j in 0..fw.fs.len() {
        if g[j] == T::zero() {
            continue;
        }
        let (v, nv, f) = (&fw.vs[j], fw.nvs[j], fw.fs[j]);
        let inv = T::one() / (fw.nu * nv);
        let nv2 = nv * nv;
        for k in 0..n {
            du[k] = du[k] + g[j] * (v[k] * inv - f * fw.u[k] / nu2);
        }
        let dv: Vec<T> = (0..n)
            .map(|k| g[j] * (fw.u[k] * inv - f * v[k] / nv2))
            .collect();
        grad.add_outer(&dv, fw.docs[j]);
    }
    grad.add_outer(&du, fw.x);

    Ok((
        LossBreakdown {
            hinge,
            gold_probability: p[0],
            total,
        },
        grad,
    ))
}
