use super::QueryError;
use crate::Scalar;

/// Ward-linkage agglomerative clustering into `k` groups.
///
/// Clusters are kept in order of their smallest member index; each step
/// merges the pair with the smallest increase in within-cluster variance,
/// `|A||B| / (|A|+|B|) · ‖c_A − c_B‖²`, taking the lexicographically first
/// pair on ties. Labels are numbered by first appearance in `features`.
pub fn ward_clustering<F: Scalar, V: AsRef<[F]>>(features: &[V], k: usize) -> Result<Vec<usize>, QueryError> {
    let n = features.len();
    if k == 0 || k > n {
        return Err(QueryError::BadK { k, n });
    }
    // cost[i * n + j] for slots i < j, Lance-Williams updated
    let mut cost = vec![F::zero(); n * n];
    let half = F::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = features[i]
                .as_ref()
                .iter()
                .zip(features[j].as_ref())
                .fold(F::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
            cost[i * n + j] = half * d2;
        }
    }
    let mut size = vec![1usize; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();

    while active.len() > k {
        let (mut best_a, mut best_b) = (0, 1);
        let mut best = cost[active[0] * n + active[1]];
        for a in 0..active.len() {
            let i = active[a];
            for (b, &j) in active.iter().enumerate().skip(a + 1) {
                let c = cost[i * n + j];
                if c < best {
                    best = c;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        let (i, j) = (active[best_a], active[best_b]);
        let (ni, nj) = (size[i], size[j]);
        let fi = F::from_usize(ni).expect("size fits");
        let fj = F::from_usize(nj).expect("size fits");
        for &m in &active {
            if m == i || m == j {
                continue;
            }
            let fm = F::from_usize(size[m]).expect("size fits");
            let c_im = cost[i.min(m) * n + i.max(m)];
            let c_jm = cost[j.min(m) * n + j.max(m)];
            let merged = ((fi + fm) * c_im + (fj + fm) * c_jm - fm * best) / (fi + fj + fm);
            cost[i.min(m) * n + i.max(m)] = merged;
        }
        size[i] = ni + nj;
        parent[j] = i;
        active.remove(best_b);
    }

    let root = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    Ok((0..n)
        .map(|p| {
            let r = root(p);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_equal_n_gives_singletons() {
        let pts = vec![vec![0.0, 1.0], vec![5.0, 5.0], vec![2.0, 2.0]];
        assert_eq!(ward_clustering(&pts, 3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn separated_line_splits_in_two() {
        let pts: Vec<Vec<f64>> = [0.0, 0.1, 10.0, 10.1].iter().map(|&x| vec![x]).collect();
        assert_eq!(ward_clustering(&pts, 2).unwrap(), vec![0, 0, 1, 1]);
        let pts: Vec<Vec<f64>> = [10.0, 0.0, 10.1, 0.1].iter().map(|&x| vec![x]).collect();
        assert_eq!(ward_clustering(&pts, 2).unwrap(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn one_cluster_and_bad_k() {
        let pts = vec![vec![1.0f32], vec![2.0], vec![3.0]];
        assert_eq!(ward_clustering(&pts, 1).unwrap(), vec![0, 0, 0]);
        assert_eq!(ward_clustering(&pts, 0), Err(QueryError::BadK { k: 0, n: 3 }));
        assert_eq!(ward_clustering(&pts, 4), Err(QueryError::BadK { k: 4, n: 3 }));
    }

    #[test]
    fn duplicates_tie_break_to_first_pair() {
        // all identical: merges always take the first two active clusters
        let pts = vec![vec![1.0, 1.0]; 5];
        assert_eq!(ward_clustering(&pts, 3).unwrap(), vec![0, 0, 0, 1, 2]);
    }
}
