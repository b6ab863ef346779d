//! Minimum weighted-ℓp shift reaching a half-space inside a box.
//!
//! For a linear SCM the counterfactual score moves by `e·δ`, so recourse
//! inside a fixed support is
//! `min ‖δ / s‖_p  s.t.  e·δ ≥ gap,  lo ≤ δ ≤ hi`.
//! Substituting `y_i = |δ_i| / s_i` (sign taken from `e_i`) turns this into
//! `min ‖y‖_p  s.t.  Σ c_i y_i ≥ gap,  0 ≤ y_i ≤ u_i` with `c_i = |e_i| s_i`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Coord {
    /// Score change per unit of `δ`.
    pub effect: f64,
    pub scale: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Coord {
    fn gain(&self) -> f64 {
        self.effect.abs() * self.scale
    }

    /// Largest normalised move in the helpful direction.
    fn room(&self) -> f64 {
        let limit = if self.effect > 0.0 { self.hi } else { -self.lo };
        limit.max(0.0) / self.scale
    }

    fn delta_at(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        let d = y * self.scale;
        let d = if self.effect > 0.0 { d } else { -d };
        d.clamp(self.lo, self.hi)
    }
}

/// Largest score gain reachable inside the box.
pub(crate) fn max_gain(coords: &[Coord]) -> f64 {
    coords.iter().filter(|c| c.effect != 0.0).map(|c| c.gain() * c.room()).sum()
}

/// Returns the optimal `δ` (one entry per coordinate), or `None` when the
/// box cannot reach the half-space.
pub(crate) fn min_norm_on_halfspace(coords: &[Coord], gap: f64, p: f64) -> Option<Vec<f64>> {
    let n = coords.len();
    if gap <= 0.0 {
        return Some(vec![0.0; n]);
    }
    if max_gain(coords) < gap {
        return None;
    }
    let y = if p == 1.0 { fill_greedy(coords, gap) } else { water_fill(coords, gap, p) };
    Some(coords.iter().zip(y).map(|(c, y)| c.delta_at(y)).collect())
}

/// ℓ1: spend on the coordinate with the largest gain per unit cost first.
/// This is the vertex of the feasible polytope the linear program picks.
fn fill_greedy(coords: &[Coord], gap: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..coords.len()).filter(|&i| coords[i].effect != 0.0).collect();
    idx.sort_by(|&a, &b| coords[b].gain().total_cmp(&coords[a].gain()).then(a.cmp(&b)));
    let mut y = vec![0.0; coords.len()];
    let mut remaining = gap;
    for i in idx {
        if remaining <= 0.0 {
            break;
        }
        let c = &coords[i];
        let take = (remaining / c.gain()).min(c.room());
        y[i] = take;
        remaining -= take * c.gain();
    }
    y
}

/// ℓp, p > 1: stationarity gives `y_i = min(u_i, t·c_i^{1/(p-1)})`. Solve
/// for `t` with an active set: coordinates that overshoot their bound are
/// pinned and the rest of the gap is redistributed. For p = 2 without
/// pinning this is the weighted projection `δ = gap · e s² / Σ e² s²`.
fn water_fill(coords: &[Coord], gap: f64, p: f64) -> Vec<f64> {
    let n = coords.len();
    let q = 1.0 / (p - 1.0);
    let cmax = coords.iter().map(Coord::gain).fold(0.0, f64::max);
    let dir: Vec<f64> = coords
        .iter()
        .map(|c| if c.effect == 0.0 { 0.0 } else if p == 2.0 { c.gain() / cmax } else { (c.gain() / cmax).powf(q) })
        .collect();
    let mut pinned = vec![false; n];
    let mut y = vec![0.0; n];
    loop {
        let pinned_gain: f64 =
            (0..n).filter(|&i| pinned[i]).map(|i| coords[i].gain() * coords[i].room()).sum();
        let denom: f64 = (0..n).filter(|&i| !pinned[i]).map(|i| coords[i].gain() * dir[i]).sum();
        let remaining = gap - pinned_gain;
        if denom <= 0.0 || remaining <= 0.0 {
            for i in 0..n {
                y[i] = if pinned[i] { coords[i].room() } else { 0.0 };
            }
            return y;
        }
        let t = remaining / denom;
        let mut changed = false;
        for i in 0..n {
            if pinned[i] {
                y[i] = coords[i].room();
            } else {
                y[i] = t * dir[i];
                if y[i] > coords[i].room() {
                    pinned[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coord(effect: f64, scale: f64, bound: f64) -> Coord {
        Coord { effect, scale, lo: -bound, hi: bound }
    }

    #[test]
    fn single_coordinate_hits_gap_exactly() {
        let d = min_norm_on_halfspace(&[coord(1.0, 1.0, 10.0)], 2.5, 2.0).unwrap();
        assert_eq!(d, vec![2.5]);
        let d = min_norm_on_halfspace(&[coord(-2.0, 1.0, 10.0)], 3.0, 1.0).unwrap();
        assert_eq!(d, vec![-1.5]);
    }

    #[test]
    fn l2_projection_closed_form() {
        let c = [coord(3.0, 1.0, 100.0), coord(4.0, 1.0, 100.0)];
        let d = min_norm_on_halfspace(&c, 25.0, 2.0).unwrap();
        assert!((d[0] - 3.0).abs() < 1e-12 && (d[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_pin_and_redistribute() {
        let c = [coord(1.0, 1.0, 1.0), coord(1.0, 1.0, 100.0)];
        let d = min_norm_on_halfspace(&c, 4.0, 2.0).unwrap();
        assert_eq!(d[0], 1.0);
        assert!((d[1] - 3.0).abs() < 1e-12);
        let d = min_norm_on_halfspace(&[coord(2.0, 1.0, 1.0), coord(1.0, 1.0, 5.0)], 4.0, 1.0).unwrap();
        assert_eq!(d, vec![1.0, 2.0]);
    }

    #[test]
    fn unreachable_and_trivial() {
        assert!(min_norm_on_halfspace(&[coord(1.0, 1.0, 1.0)], 2.0, 2.0).is_none());
        assert!(min_norm_on_halfspace(&[coord(0.0, 1.0, 1.0)], 0.5, 1.0).is_none());
        assert_eq!(min_norm_on_halfspace(&[coord(1.0, 1.0, 1.0)], -1.0, 1.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn general_p_matches_stationarity() {
        let c = [coord(1.0, 1.0, 100.0), coord(2.0, 1.0, 100.0)];
        let p = 3.0;
        let d = min_norm_on_halfspace(&c, 5.0, p).unwrap();
        assert!((d[0] + 2.0 * d[1] - 5.0).abs() < 1e-12);
        // y_i ∝ c_i^{1/(p-1)}
        assert!((d[1] / d[0] - 2f64.sqrt()).abs() < 1e-12);
    }
}
