//! Normalized sequence spaces `L_u^N`: `R^N` with
//! `‖x‖ = (N^{-1} Σ |x_i|^u)^{1/u}` (max for `u = ∞`).

use serde::{Deserialize, Serialize};

use crate::{check_norm_index, Error, Result};

/// Fill ratio above which [`SeqVec::compact`] chooses the dense layout.
pub const DENSE_FILL: f64 = 0.25;

/// An element of `L_u^N`, stored densely or as sorted `(index, value)` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum SeqVec {
    Dense {
        values: Vec<f64>,
    },
    Sparse {
        len: usize,
        entries: Vec<(usize, f64)>,
    },
}

impl PartialEq for SeqVec {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.to_dense() == other.to_dense()
    }
}

impl SeqVec {
    pub fn dense(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "L_u^N needs N >= 1");
        SeqVec::Dense { values }
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len >= 1, "L_u^N needs N >= 1");
        SeqVec::Sparse {
            len,
            entries: Vec::new(),
        }
    }

    /// Sparse vector from arbitrary-order entries; later duplicates win and
    /// explicit zeros are dropped.
    pub fn sparse(len: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        if len == 0 {
            return Err(Error::Parameter("L_u^N needs N >= 1".into()));
        }
        if let Some(&(i, _)) = entries.iter().find(|e| e.0 >= len) {
            return Err(Error::Parameter(format!(
                "index {i} out of range for N = {len}"
            )));
        }
        entries.reverse();
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        entries.retain(|e| e.1 != 0.0);
        Ok(SeqVec::Sparse { len, entries })
    }

    pub fn len(&self) -> usize {
        match self {
            SeqVec::Dense { values } => values.len(),
            SeqVec::Sparse { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            SeqVec::Dense { values } => values[i],
            SeqVec::Sparse { entries, .. } => match entries.binary_search_by_key(&i, |e| e.0) {
                Ok(p) => entries[p].1,
                Err(_) => 0.0,
            },
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            SeqVec::Dense { values } => values.iter().filter(|v| **v != 0.0).count(),
            SeqVec::Sparse { entries, .. } => entries.len(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            SeqVec::Dense { values } => values.clone(),
            SeqVec::Sparse { len, entries } => {
                let mut v = vec![0.0; *len];
                for &(i, x) in entries {
                    v[i] = x;
                }
                v
            }
        }
    }

    /// Nonzero entries in index order.
    pub fn nonzeros(&self) -> Vec<(usize, f64)> {
        match self {
            SeqVec::Dense { values } => values
                .iter()
                .copied()
                .enumerate()
                .filter(|e| e.1 != 0.0)
                .collect(),
            SeqVec::Sparse { entries, .. } => entries.clone(),
        }
    }

    /// Re-chooses the layout by fill ratio.
    pub fn compact(self) -> Self {
        let n = self.len();
        let nnz = self.nnz();
        if nnz as f64 > DENSE_FILL * n as f64 {
            SeqVec::Dense {
                values: self.to_dense(),
            }
        } else {
            SeqVec::Sparse {
                len: n,
                entries: self.nonzeros(),
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            SeqVec::Dense { values } => SeqVec::Dense {
                values: values.iter().map(|v| v * c).collect(),
            },
            SeqVec::Sparse { len, entries } => {
                SeqVec::sparse(*len, entries.iter().map(|&(i, v)| (i, v * c)).collect())
                    .expect("indices valid")
            }
        }
    }

    /// `self − other`.
    pub fn sub(&self, other: &SeqVec) -> Result<SeqVec> {
        check_len(self, other)?;
        let out = match (self, other) {
            (SeqVec::Sparse { len, entries: a }, SeqVec::Sparse { entries: b, .. }) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                        out.push(a[i]);
                        i += 1;
                    } else if i == a.len() || b[j].0 < a[i].0 {
                        out.push((b[j].0, -b[j].1));
                        j += 1;
                    } else {
                        out.push((a[i].0, a[i].1 - b[j].1));
                        i += 1;
                        j += 1;
                    }
                }
                out.retain(|e| e.1 != 0.0);
                SeqVec::Sparse {
                    len: *len,
                    entries: out,
                }
            }
            _ => {
                let mut v = self.to_dense();
                for (i, x) in other.nonzeros() {
                    v[i] -= x;
                }
                SeqVec::Dense { values: v }
            }
        };
        Ok(out)
    }
}

fn check_len(a: &SeqVec, b: &SeqVec) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Parameter(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `‖x‖_{L_u^N}`.
pub fn lpn_norm(x: &SeqVec, u: f64) -> Result<f64> {
    check_norm_index(u)?;
    let nz = x.nonzeros();
    if u.is_infinite() {
        return Ok(nz.iter().fold(0.0, |m, e| m.max(e.1.abs())));
    }
    let s: f64 = nz.iter().map(|e| e.1.abs().powf(u)).sum();
    Ok((s / x.len() as f64).powf(1.0 / u))
}

/// `‖x − x̂‖_{L_q^N}`.
pub fn embed_error(x: &SeqVec, xhat: &SeqVec, q: f64) -> Result<f64> {
    lpn_norm(&x.sub(xhat)?, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn examples() {
        let ones = SeqVec::dense(vec![1.0; 7]);
        for u in [1.0, 2.0, 3.0, INF] {
            assert!((lpn_norm(&ones, u).unwrap() - 1.0).abs() < 1e-15);
        }
        let x = SeqVec::dense(vec![2.0, 0.0, 0.0, 0.0]);
        assert_eq!(lpn_norm(&x, 1.0).unwrap(), 0.5);
        assert_eq!(lpn_norm(&x, INF).unwrap(), 2.0);
        assert_eq!(embed_error(&x, &x, 2.0).unwrap(), 0.0);
        let e = SeqVec::dense(vec![1.0, 0.0]);
        assert_eq!(embed_error(&e, &SeqVec::zeros(2), INF).unwrap(), 1.0);
        let e = SeqVec::dense(vec![1.0, 1.0]);
        assert_eq!(embed_error(&e, &SeqVec::zeros(2), 1.0).unwrap(), 1.0);
        assert!(embed_error(&e, &SeqVec::zeros(3), 1.0).is_err());
    }

    #[test]
    fn layouts_agree() {
        let s = SeqVec::sparse(10, vec![(3, 1.5), (7, -2.0), (3, 4.0)]).unwrap();
        assert_eq!(s.get(3), 4.0);
        let d = s.clone().compact();
        assert!(matches!(d, SeqVec::Sparse { .. }));
        assert_eq!(SeqVec::dense(s.to_dense()), s);
        assert!(SeqVec::sparse(4, vec![(4, 1.0)]).is_err());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 1..40)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn holder_monotone(v in vec_strategy()) {
            let x = SeqVec::dense(v);
            let us = [1.0, 1.5, 2.0, 3.0, 7.0, INF];
            for w in us.windows(2) {
                prop_assert!(lpn_norm(&x, w[0]).unwrap() <= lpn_norm(&x, w[1]).unwrap() * (1.0 + 1e-12) + 1e-300);
            }
        }
    }

    proptest! {
        #[test]
        fn norm_axioms(a in vec_strategy(), c in -5.0f64..5.0, seed in 0u64..1000) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| ((i as u64 + seed) % 7) as f64 - v).collect();
            let (x, y) = (SeqVec::dense(a), SeqVec::dense(b));
            for u in [1.0, 2.0, 3.0, INF] {
                let sum = x.sub(&y.scaled(-1.0)).unwrap();
                prop_assert!(lpn_norm(&sum, u).unwrap() <= lpn_norm(&x, u).unwrap() + lpn_norm(&y, u).unwrap() + 1e-12);
                let h = lpn_norm(&x.scaled(c), u).unwrap();
                prop_assert!((h - c.abs() * lpn_norm(&x, u).unwrap()).abs() <= 1e-12 * (1.0 + h));
            }
        }
    }
}
