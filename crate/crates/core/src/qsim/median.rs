use crate::seqspace::{embed_error, SeqVec};
use crate::{Error, Result};

/// Index of the candidate whose (lower) median `L_q^N` distance to the
/// other candidates is smallest; ties go to the lowest index.
pub fn median_index(candidates: &[SeqVec], q: f64) -> Result<usize> {
    let nu = candidates.len();
    if nu == 0 {
        return Err(Error::Parameter("median of an empty candidate list".into()));
    }
    if nu == 1 {
        return Ok(0);
    }
    let mut dist = vec![0.0; nu * nu];
    for a in 0..nu {
        for b in a + 1..nu {
            let e = embed_error(&candidates[a], &candidates[b], q)?;
            dist[a * nu + b] = e;
            dist[b * nu + a] = e;
        }
    }
    let mut best = (f64::INFINITY, 0usize);
    for a in 0..nu {
        let mut row: Vec<f64> = (0..nu)
            .filter(|&b| b != a)
            .map(|b| dist[a * nu + b])
            .collect();
        row.sort_by(f64::total_cmp);
        let med = row[(row.len() - 1) / 2];
        if med < best.0 {
            best = (med, a);
        }
    }
    Ok(best.1)
}

/// Vector median of the candidates (see [`median_index`]).
pub fn median_combine(candidates: &[SeqVec], q: f64) -> Result<SeqVec> {
    Ok(candidates[median_index(candidates, q)?].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> SeqVec {
        SeqVec::dense(vec![v])
    }

    #[test]
    fn examples() {
        let c: Vec<SeqVec> = [0.9, 1.0, 1.05, 5.0].iter().map(|&v| scalar(v)).collect();
        assert_eq!(median_combine(&c, 2.0).unwrap(), scalar(1.0));
        let same = vec![scalar(3.0); 4];
        assert_eq!(median_combine(&same, 1.0).unwrap(), scalar(3.0));
        assert!(median_combine(&[], 1.0).is_err());
    }
}
