//! Relation-graph machinery: the closed-form set update for fixed
//! coefficients, the signed graph Laplacian, and enumeration of every graph
//! for the global-search oracle.

use ndarray::{Array2, ArrayView2};

use crate::error::{MinPenError, Result};
use crate::model::{classify, pair_terms, CoefMatrix, Label, RelationGraph};
use crate::scalar::Scalar;

/// Default cap on the number of free ordered pairs enumerated (3^12 graphs).
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// Restricts the admissible graphs by pinning chosen `d_lm` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMask {
    r: usize,
    fixed: Vec<Option<i8>>,
}

impl GraphMask {
    /// No entries pinned.
    pub fn free(r: usize) -> Self {
        Self {
            r,
            fixed: vec![None; r * r],
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn fix(&mut self, l: usize, m: usize, d: i8) -> Result<()> {
        if l == m || l >= self.r || m >= self.r || !(-1..=1).contains(&d) {
            return Err(MinPenError::InvalidInput(format!(
                "cannot pin relation ({l}, {m}) to {d}"
            )));
        }
        self.fixed[l * self.r + m] = Some(d);
        Ok(())
    }

    pub fn get(&self, l: usize, m: usize) -> Option<i8> {
        self.fixed[l * self.r + m]
    }

    fn free_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.r)
            .flat_map(|l| (0..self.r).map(move |m| (l, m)))
            .filter(|&(l, m)| l != m && self.get(l, m).is_none())
            .collect()
    }
}

/// Graph minimizing `Σ_{l≠m} ‖β_l − d_lm β_m‖²` for fixed coefficients; each
/// ordered pair independently takes the label of [`crate::min_penalty`].
pub fn update_sets<F: Scalar>(coef: &CoefMatrix<F>) -> RelationGraph {
    update_sets_view(coef.coefficients.view(), None)
}

/// [`update_sets`] on a raw coefficient view, honoring pinned entries.
pub fn update_sets_view<F: Scalar>(b: ArrayView2<F>, mask: Option<&GraphMask>) -> RelationGraph {
    let r = b.ncols();
    let mut g = RelationGraph::unrelated(r);
    let norms: Vec<F> = b.columns().into_iter().map(|c| c.dot(&c)).collect();
    for l in 0..r {
        for m in 0..r {
            if l == m {
                continue;
            }
            if let Some(d) = mask.and_then(|mk| mk.get(l, m)) {
                g.set(l, m, d);
                continue;
            }
            let (diff, sum, _) = pair_terms(b.column(l), b.column(m));
            let (_, label) = classify(diff, sum, norms[l]);
            g.set(l, m, label.sign());
        }
    }
    g
}

/// Number of ordered pairs whose label differs between two graphs.
pub fn graph_distance(a: &RelationGraph, b: &RelationGraph) -> usize {
    a.triples()
        .zip(b.triples())
        .filter(|((_, _, x), (_, _, y))| x != y)
        .count()
}

/// Sparse form of the fusion operator `A`: one `(l, m, d_lm)` triple per
/// ordered pair, each standing for a `p`-row block `β_l − d_lm β_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AMatrix {
    r: usize,
    triples: Vec<(usize, usize, i8)>,
}

impl AMatrix {
    pub fn from_graph(graph: &RelationGraph) -> Self {
        Self {
            r: graph.r(),
            triples: graph.triples().collect(),
        }
    }

    pub fn triples(&self) -> &[(usize, usize, i8)] {
        &self.triples
    }

    /// `‖A vec(B)‖²`.
    pub fn norm_sq<F: Scalar>(&self, b: ArrayView2<F>) -> F {
        let mut total = F::zero();
        for &(l, m, d) in &self.triples {
            let d = F::from_i8(d).unwrap();
            for (&u, &v) in b.column(l).iter().zip(b.column(m).iter()) {
                total += (u - d * v) * (u - d * v);
            }
        }
        total
    }

    /// Dense `r(r−1)p x rp` matrix acting on the column-stacked coefficients.
    pub fn dense<F: Scalar>(&self, p: usize) -> Array2<F> {
        let mut a = Array2::<F>::zeros((self.triples.len() * p, self.r * p));
        for (t, &(l, m, d)) in self.triples.iter().enumerate() {
            for j in 0..p {
                let row = t * p + j;
                a[[row, l * p + j]] = F::one();
                a[[row, m * p + j]] -= F::from_i8(d).unwrap();
            }
        }
        a
    }
}

/// The `r x r` signed Laplacian `M` with `Σ_{l≠m} ‖β_l − d_lm β_m‖² = Σ_j b_jᵀ M b_j`
/// where `b_j` is row `j` of `B`.
pub fn response_laplacian<F: Scalar>(graph: &RelationGraph) -> Array2<F> {
    let r = graph.r();
    let mut m = Array2::<F>::zeros((r, r));
    for (l, k, d) in graph.triples() {
        let df = F::from_i8(d).unwrap();
        m[[l, l]] += F::one();
        m[[k, k]] += df * df;
        m[[l, k]] -= df;
        m[[k, l]] -= df;
    }
    m
}

/// `AᵀA` in the column-stacked coefficient order (`rp x rp`, equal to `M ⊗ I_p`).
pub fn laplacian<F: Scalar>(graph: &RelationGraph, p: usize) -> Array2<F> {
    let m = response_laplacian::<F>(graph);
    let r = graph.r();
    let mut out = Array2::<F>::zeros((r * p, r * p));
    for a in 0..r {
        for b in 0..r {
            let v = m[[a, b]];
            if v != F::zero() {
                for j in 0..p {
                    out[[a * p + j, b * p + j]] = v;
                }
            }
        }
    }
    out
}

/// Iterator over every admissible relation graph, in a fixed order.
#[derive(Debug, Clone)]
pub struct GraphEnumeration {
    base: RelationGraph,
    free: Vec<(usize, usize)>,
    next: u64,
    total: u64,
}

impl Iterator for GraphEnumeration {
    type Item = RelationGraph;

    fn next(&mut self) -> Option<RelationGraph> {
        if self.next >= self.total {
            return None;
        }
        let mut code = self.next;
        self.next += 1;
        let mut g = self.base.clone();
        for &(l, m) in &self.free {
            let digit = (code % 3) as i8;
            code /= 3;
            g.set(l, m, digit - 1);
        }
        Some(g)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for GraphEnumeration {}

/// Enumerates all `3^(free pairs)` graphs (`3^{r(r−1)}` without a mask).
/// Refuses when the number of free pairs exceeds `cap`.
pub fn enumerate_graphs(r: usize, cap: usize, mask: Option<&GraphMask>) -> Result<GraphEnumeration> {
    if r < 1 {
        return Err(MinPenError::InvalidInput("need at least one response".into()));
    }
    let mut base = RelationGraph::unrelated(r);
    let free = match mask {
        Some(mk) => {
            if mk.r() != r {
                return Err(MinPenError::DimensionMismatch(format!(
                    "mask is for r={}, requested r={r}",
                    mk.r()
                )));
            }
            for l in 0..r {
                for m in 0..r {
                    if let Some(d) = (l != m).then(|| mk.get(l, m)).flatten() {
                        base.set(l, m, d);
                    }
                }
            }
            mk.free_pairs()
        }
        None => GraphMask::free(r).free_pairs(),
    };
    if free.len() > cap {
        return Err(MinPenError::EnumerationCap {
            pairs: free.len(),
            cap,
        });
    }
    let total = 3u64.pow(free.len() as u32);
    Ok(GraphEnumeration {
        base,
        free,
        next: 0,
        total,
    })
}

/// Label of the pair `(l, m)` for the columns of `b`.
pub fn pair_label<F: Scalar>(b: ArrayView2<F>, l: usize, m: usize) -> Label {
    let (d, s, n) = pair_terms(b.column(l), b.column(m));
    classify(d, s, n).1
}
