use super::{calabi_eq1, liouville_conjugated_hamiltonian, CalabiOptions, CalabiResult};
use crate::error::{Error, Result};
use crate::geom::LiouvilleFlow;
use crate::hamflow::{c0_distance, iterated_hamiltonian, HamiltonianField, SymplecticMapRep};

/// Number of iterates `n⁴` used at level `n`: the homothety by `1/n` scales
/// the Calabi invariant of a planar map by `n^{-4}`, which `n⁴` iterates
/// compensate.
pub fn iterate_count(n: u64) -> Result<u64> {
    n.checked_pow(4)
        .ok_or_else(|| Error::InvalidArgument(format!("iterate count overflows for n = {n}")))
}

fn homothety_time(n: u64) -> f64 {
    2.0 * (n as f64).ln()
}

/// `h_n^{-1} ∘ φ^{n⁴} ∘ h_n` with `h_n(x) = n·x`, supported in `supp φ / n`.
pub fn counterexample_sequence(phi: &SymplecticMapRep, n: u64, budget: u64) -> Result<SymplecticMapRep> {
    if n == 0 {
        return Err(Error::InvalidArgument("counterexample level must be at least 1".into()));
    }
    if n == 1 {
        return Ok(phi.clone());
    }
    let support = phi
        .support()
        .ok_or_else(|| Error::Support("counterexample needs a compactly supported map".into()))?;
    let flow = LiouvilleFlow::standard(phi.dim());
    let t = homothety_time(n);
    let origin = vec![0.0; phi.dim()];
    let iterate = phi.power(iterate_count(n)?, budget)?;
    Ok(SymplecticMapRep::chain(vec![
        SymplecticMapRep::liouville(flow.clone(), t),
        iterate,
        SymplecticMapRep::liouville(flow, -t),
    ])?
    .with_support(Some(support.scaled_about(&origin, 1.0 / n as f64)))
    .with_label(format!("phi_{n}")))
}

/// Generator of [`counterexample_sequence`] for `φ` the time-one map of `h`:
/// `n⁴` laps of `h` conjugated by the homothety, i.e. `n²·H(t, n·x)` for
/// planar autonomous `h`.
pub fn counterexample_generator(h: &HamiltonianField, n: u64) -> Result<HamiltonianField> {
    if n == 0 {
        return Err(Error::InvalidArgument("counterexample level must be at least 1".into()));
    }
    let laps = iterated_hamiltonian(h, iterate_count(n)?);
    liouville_conjugated_hamiltonian(&laps, -homothety_time(n), &LiouvilleFlow::standard(h.dim()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleRow {
    pub n: u64,
    pub iterates: u64,
    pub calabi: CalabiResult,
    /// Sampled sup distance of `φ_n` to the identity.
    pub c0_distance: f64,
}

/// Calabi value and `C⁰` size of `φ_n` for each level in `levels`; `phi`
/// must be the time-one map of `h`.
pub fn counterexample_study(
    h: &HamiltonianField,
    phi: &SymplecticMapRep,
    levels: &[u64],
    opts: &CalabiOptions,
    samples: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<CounterexampleRow>> {
    let region = phi
        .support()
        .ok_or_else(|| Error::Support("counterexample needs a compactly supported map".into()))?
        .clone();
    let identity = SymplecticMapRep::identity(phi.dim());
    levels
        .iter()
        .map(|&n| {
            let map = counterexample_sequence(phi, n, budget)?;
            let calabi = calabi_eq1(&counterexample_generator(h, n)?, opts)?;
            Ok(CounterexampleRow {
                n,
                iterates: iterate_count(n)?,
                calabi,
                c0_distance: c0_distance(&map, &identity, &region, samples, seed)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Expression;
    use crate::geom::{cartesian_to_polar, polar_to_cartesian, SupportBox};
    use crate::hamflow::{flow_match_residual, DEFAULT_ITERATE_BUDGET};

    /// `H₀ = (1 − r²)³` and its time-one map, the rotation by `6(1 − r²)²`.
    fn fixture(scale: f64) -> (HamiltonianField, SymplecticMapRep) {
        let e = Expression::parse(&format!("{scale}*max(0, 1-q1^2-p1^2)^3")).unwrap();
        let support = SupportBox::centered(2, 1.0);
        let h = HamiltonianField::from_expression(&e, 1, support.clone()).unwrap();
        let angle = move |r: f64| 6.0 * scale * (1.0 - r * r).max(0.0).powi(2);
        let rotate = move |sign: f64| {
            move |x: &[f64]| -> Result<Vec<f64>> {
                let (r, th) = cartesian_to_polar(x);
                Ok(polar_to_cartesian(r, th + sign * angle(r)).to_vec())
            }
        };
        let phi = SymplecticMapRep::closed_form(2, Some(support), "rot", rotate(1.0), rotate(-1.0));
        (h, phi)
    }

    #[test]
    fn closed_form_fixture_is_the_flow() {
        let (h, phi) = fixture(1.0);
        let r = flow_match_residual(&h, &phi, &SupportBox::centered(2, 1.0), 128, 5, 400).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn level_one_is_the_map() {
        let (_, phi) = fixture(1.0);
        let same = counterexample_sequence(&phi, 1, 10).unwrap();
        assert_eq!(same.apply(&[0.3, 0.2]).unwrap(), phi.apply(&[0.3, 0.2]).unwrap());
    }

    #[test]
    fn generator_matches_map_at_level_two() {
        let (h, phi) = fixture(1.0 / 16.0);
        let map = counterexample_sequence(&phi, 2, DEFAULT_ITERATE_BUDGET).unwrap();
        let g = counterexample_generator(&h, 2).unwrap();
        let r = flow_match_residual(&g, &map, &SupportBox::centered(2, 0.5), 128, 5, 800).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn calabi_constant_and_distance_decreasing() {
        let (h, phi) = fixture(1.0);
        let opts = CalabiOptions::default().with_cells(128);
        let rows = counterexample_study(&h, &phi, &[1, 2, 3], &opts, 4096, 7, DEFAULT_ITERATE_BUDGET).unwrap();
        let base = rows[0].calabi.value;
        for w in rows.windows(2) {
            assert!(w[1].c0_distance < w[0].c0_distance, "{rows:?}");
        }
        for r in &rows {
            assert!((r.calabi.value - base).abs() / base < 2e-2, "{rows:?}");
        }
    }

    #[test]
    fn iterate_budget_is_enforced() {
        let (_, phi) = fixture(1.0);
        assert!(matches!(counterexample_sequence(&phi, 4, 100), Err(Error::IterateBudget { .. })));
    }
}
