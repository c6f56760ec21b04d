//! The admissibility conditions transcribed independently of the library.

/// Admissibility written out directly from the conditions, in exact
/// rational arithmetic on the grid points.
pub fn reference_admissible(d: i64, alpha: (i64, i64), gamma: (i64, i64), p: Option<f64>, q: Option<f64>) -> bool {
    let (an, ad) = alpha;
    let (gn, gd) = gamma;
    // γ vs d/4  ⇔  4 gn vs d gd
    let q_ok = match (4 * gn).cmp(&(d * gd)) {
        std::cmp::Ordering::Greater => q.is_none(),
        std::cmp::Ordering::Equal => matches!(q, Some(q) if q > 2.0),
        std::cmp::Ordering::Less => {
            let want = 2.0 * (d * gd) as f64 / (d * gd - 4 * gn) as f64;
            matches!(q, Some(q) if (q - want).abs() <= 1e-9 * want)
        }
    };
    // γ vs 1 - 1/α  ⇔  gn·an vs gd·(an - ad)
    let p_ok = if gn * an > gd * (an - ad) {
        // p < 1/(1 - α(1-γ)) = ad·gd / (ad·gd - an·(gd - gn))
        let den = ad * gd - an * (gd - gn);
        matches!(p, Some(p) if p >= 1.0 && p * (den as f64) < (ad * gd) as f64)
    } else {
        p.is_none()
    };
    q_ok && p_ok
}
