use super::PreferenceError;
use crate::Scalar;

/// Vectors with a squared norm below this are treated as zero.
const ZERO_NORM_SQ: f64 = 1e-24;

/// Cosine of the angle between `a` and `b`, or `0` if either is (near) zero.
pub fn cosine_similarity<F: Scalar>(a: &[F], b: &[F]) -> F {
    let (mut ab, mut aa, mut bb) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    let tiny = F::lit(ZERO_NORM_SQ);
    if aa < tiny || bb < tiny {
        return F::zero();
    }
    // sqrt(aa * bb) keeps cos(a, a) == 1 exactly
    let denom = (aa * bb).sqrt();
    let denom = if denom.is_finite() { denom } else { aa.sqrt() * bb.sqrt() };
    (ab / denom).max(-F::one()).min(F::one())
}

/// Best cosine between the selected item and any query item.
pub fn query_alignment<F: Scalar, V: AsRef<[F]>>(query_features: &[V], selected: &[F]) -> Result<F, PreferenceError> {
    query_features
        .iter()
        .map(|q| cosine_similarity(q.as_ref(), selected))
        .reduce(F::max)
        .ok_or(PreferenceError::EmptyQuery)
}

/// Mean of [`query_alignment`] over every query shown.
pub fn session_alignment<F: Scalar, V: AsRef<[F]>>(queries: &[Vec<V>], selected: &[F]) -> Result<F, PreferenceError> {
    if queries.is_empty() {
        return Err(PreferenceError::EmptyInput);
    }
    let mut total = F::zero();
    for q in queries {
        total += query_alignment(q, selected)?;
    }
    Ok(total / F::from_usize(queries.len()).expect("query count fits in scalar"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        let a = [1.0, 2.0, -3.0];
        assert_eq!(cosine_similarity(&a, &a), 1.0);
        let neg = [-1.0, -2.0, 3.0];
        assert_eq!(cosine_similarity(&a, &neg), -1.0);
        let mut e0 = [0.0f64; 32];
        e0[0] = 1.0;
        let mut e01 = [0.0f64; 32];
        e01[0] = 1.0;
        e01[1] = 1.0;
        assert!((cosine_similarity(&e0, &e01) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[0.0; 3], &a), 0.0);
        assert_eq!(cosine_similarity(&[1e-13, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn query_alignment_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = [vec![0.0, 1.0], vec![h, h], vec![-1.0, 0.0]];
        let sel = [1.0, 0.0];
        assert!((query_alignment(&q, &sel).unwrap() - h).abs() < 1e-15);

        let q = [vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]];
        assert_eq!(query_alignment(&q, &[3.0, 0.0, 0.0]).unwrap(), 0.0);

        let sel = vec![0.3, -1.2, 2.0];
        let q = [vec![1.0, 1.0, 1.0], sel.clone()];
        assert_eq!(query_alignment(&q, &sel).unwrap(), 1.0);

        let empty: [Vec<f64>; 0] = [];
        assert_eq!(query_alignment(&empty, &sel), Err(PreferenceError::EmptyQuery));
    }

    #[test]
    fn session_alignment_is_mean() {
        let sel = [1.0, 0.0];
        let hit = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let miss = vec![vec![0.0, 1.0], vec![0.0, -1.0]];
        assert_eq!(session_alignment(std::slice::from_ref(&hit), &sel).unwrap(), 1.0);
        assert_eq!(session_alignment(&[hit, miss], &sel).unwrap(), 0.5);
        let none: [Vec<Vec<f64>>; 0] = [];
        assert_eq!(session_alignment(&none, &sel), Err(PreferenceError::EmptyInput));
    }

    fn vec32() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0..5.0f64, 32)
    }

    proptest! {
        #[test]
        fn alignment_bounded_and_scale_invariant(
            q in prop::collection::vec(vec32(), 1..6),
            sel in vec32(),
            c in prop::sample::select(vec![1e-3, 0.5, 1.0, 7.0, 1e3]),
        ) {
            let a = query_alignment(&q, &sel).unwrap();
            prop_assert!((-1.0..=1.0).contains(&a));
            let qs: Vec<Vec<f64>> = q.iter().map(|v| v.iter().map(|x| x * c).collect()).collect();
            let ss: Vec<f64> = sel.iter().map(|x| x * c).collect();
            prop_assert!((query_alignment(&qs, &ss).unwrap() - a).abs() <= 1e-9);
        }

        #[test]
        fn session_alignment_one_when_selected_always_shown(
            q in prop::collection::vec(prop::collection::vec(vec32(), 1..4), 1..5),
            sel in vec32(),
        ) {
            prop_assume!(sel.iter().any(|x| x.abs() > 1e-3));
            let with_sel: Vec<Vec<Vec<f64>>> = q.into_iter().map(|mut v| { v.push(sel.clone()); v }).collect();
            prop_assert_eq!(session_alignment(&with_sel, &sel).unwrap(), 1.0);
        }
    }
}
